"""Regenerates the golden examples with the replay oracle and diffs them
against the committed fixture. Exit 77 (skip) when mmh3 is unavailable."""

import subprocess
import sys
import tempfile
from pathlib import Path

try:
    import mmh3  # noqa: F401
except ImportError:
    print("mmh3 not installed; skipping")
    sys.exit(77)

fixtures = Path(sys.argv[1])
oracle = Path(__file__).with_name("replay_instances.py")
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "golden.jsonl"
    subprocess.run(
        [sys.executable, str(oracle), str(fixtures / "replay_docs.jsonl"),
         str(fixtures / "replay_vocab" / "vocab.txt"), str(fixtures / "replay_vocab" / "merges.txt"), str(out)],
        check=True)
    if out.read_bytes() != (fixtures / "golden_examples.jsonl").read_bytes():
        print("replay oracle output differs from golden_examples.jsonl")
        sys.exit(1)
print("golden examples reproduced")
