"""The command-line surface, driven in process.

Documents are JSON with exact "p/q" rationals; every subcommand returns a
machine-readable object and a meaningful exit code (0 ok, 1 violation or
refused precondition, 2 unsupported question, 3 schema error).
"""

import tempfile
from pathlib import Path

from quanta import jsonio
from quanta.cli import run_command
from quanta.gen import build_art, request_grant_chain

workdir = Path(tempfile.mkdtemp(prefix="quanta-demo-"))
art_path = workdir / "art2.json"
chain_path = workdir / "rg.json"
art_path.write_text(jsonio.dumps(build_art(2)))
chain_path.write_text(jsonio.dumps(request_grant_chain()))

for argv in [
    ["validate", "--nwa", str(art_path)],
    ["analyze", "--nwa", str(art_path), "--chain", str(chain_path),
     "--question", "expected"],
    ["analyze", "--nwa", str(art_path), "--chain", str(chain_path),
     "--question", "almost-sure", "--lambda", "2/1"],
    ["simulate", "--nwa", str(art_path), "--chain", str(chain_path),
     "--horizon", "2000", "--samples", "2000", "--seed", "1"],
    ["generate", "uniform", "--alphabet", "a,b"],
]:
    print(f"\n$ quanta {' '.join(argv)}")
    code = run_command(argv)
    print(f"(exit {code})")
