"""An interactive theorem prover built on a logic with generic (nabla)
quantification, nominal constants, and an embedded second-order
hereditary Harrop specification logic."""

__version__ = "0.1.0"
