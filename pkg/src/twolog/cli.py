"""Command line driver: batch replay, interactive REPL, protocol server.

Exit codes: 0 success, 1 proof failure, 2 parse error.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from . import parser as P
from .parser import ParseError
from .session import Session, SessionError


def build_argparser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="twolog",
        description="Interactive theorem prover with a two-level logic architecture",
    )
    ap.add_argument("files", nargs="*", help="specification (.lp) or script (.thm) files")
    ap.add_argument("--batch", action="store_true", help="non-interactive replay; exit nonzero on failure")
    ap.add_argument("--search-depth", type=int, default=5, metavar="N", help="default search depth")
    ap.add_argument("--verify-meta", action="store_true", help="re-check trusted-rule instances where decidable")
    ap.add_argument("--serve", type=int, metavar="PORT", help="run the protocol server on PORT")
    ap.add_argument("--host", default="127.0.0.1", help="bind address for --serve")
    return ap


def run_batch(template: Session, files: list[str]) -> int:
    """Replay each script in a fresh session; exit nonzero on failure."""
    for path in files:
        session = Session(
            search_depth=template.search_depth, verify_meta=template.verify_meta
        )
        try:
            session.load(path)
        except SessionError as e:
            print(f"{path}:{e.line}: {e}", file=sys.stderr)
            return 2 if e.kind == "parse" else 1
        except ParseError as e:
            print(f"{path}:{e.line}: {e}", file=sys.stderr)
            return 2
        except OSError as e:
            print(f"{path}: {e}", file=sys.stderr)
            return 2
        if session.state is not None:
            print(f"{path}: error: unfinished proof of {session.state.name}", file=sys.stderr)
            return 1
        print(f"{path}: ok ({sum(1 for n in session.lemmas if not n.startswith('sl_'))} theorems)")
        print(session.trust_report(), end="")
    return 0


def repl(session: Session) -> int:
    print("twolog interactive session; commands end with '.'  (Quit. to exit)")
    buffer = ""
    while True:
        try:
            prompt = "twolog< " if not buffer else "      < "
            line = input(prompt)
        except EOFError:
            print()
            return 0
        except KeyboardInterrupt:
            print("\n(interrupted; buffer cleared)")
            buffer = ""
            continue
        buffer += line + "\n"
        if "." not in line:
            continue
        text, buffer = buffer, ""
        try:
            for cmd, src in P.Parser(text).commands_with_source():
                for msg in session.execute(cmd, src):
                    print(msg)
                if session.state is not None:
                    print(session.show_focus())
        except EOFError:
            return 0
        except (SessionError, ParseError) as e:
            print(f"error: {e}")


def main(argv: Optional[list[str]] = None) -> int:
    args = build_argparser().parse_args(argv)
    session = Session(search_depth=args.search_depth, verify_meta=args.verify_meta)
    if args.serve is not None:
        from .server import serve
        for path in args.files:
            session.load(path)
        serve(args.host, args.serve, session)
        return 0
    if args.batch:
        return run_batch(session, args.files)
    for path in args.files:
        try:
            for msg in session.load(path):
                print(msg)
        except SessionError as e:
            print(f"{path}:{e.line}: {e}", file=sys.stderr)
            return 2 if e.kind == "parse" else 1
        except ParseError as e:
            print(f"{path}:{e.line}: {e}", file=sys.stderr)
            return 2
    return repl(session)


if __name__ == "__main__":
    raise SystemExit(main())
