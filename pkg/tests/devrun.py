"""Dev helper: run a script against a fresh session, print state on failure.

Usage: python3 tests/devrun.py <<'SCRIPT'
...commands...
SCRIPT
(or import run() from other dev scripts)
"""

import sys

sys.path.insert(0, "src")

from twolog import parser as P
from twolog.session import Session, SessionError, show_sequent


def run(script: str, base_dir: str = "src/twolog/corpus", echo: bool = False,
        session: Session | None = None) -> Session:
    s = session or Session(base_dir=base_dir)
    try:
        cmds = list(P.Parser(script).commands_with_source())
    except Exception as e:
        print("PARSE ERROR:", e)
        raise SystemExit(1)
    for cmd, src in cmds:
        try:
            msgs = s.execute(cmd, src)
            if echo:
                print(">>", " ".join(src.split()))
                for m in msgs:
                    print("   ", m)
        except SessionError as e:
            print("FAILED at:", " ".join(src.split()))
            print("ERROR:", e)
            if s.state is not None:
                print(f"--- focused goal (of {len(s.state.goals)}), theorem {s.state.name} ---")
                print(s.show_focus())
            raise SystemExit(1)
    if s.state is not None:
        print(f"=== in proof {s.state.name}: {len(s.state.goals)} subgoal(s) ===")
        for i, g in enumerate(s.state.goals):
            print(f"--- subgoal {i + 1} ---")
            print(show_sequent(g))
    return s


if __name__ == "__main__":
    run(sys.stdin.read(), echo="-v" in sys.argv)
