"""Run every config under configs/ and print one verdict line per run."""
import argparse
import sys
import time
from pathlib import Path

from dlab.cli import run_config
from dlab.errors import DlabError

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--configs", default=str(ROOT / "configs"))
    ap.add_argument("--out", default="dlab-out")
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args()
    worst = 0
    for path in sorted(Path(args.configs).glob("*.json")):
        t0 = time.perf_counter()
        try:
            status, rep = run_config(path, Path(args.out) / path.stem, args.threads)
            line = rep.verdict
        except DlabError as exc:
            status, line = 2, f"ERROR {exc}"
        worst = max(worst, status)
        print(f"{path.stem:28s} {line:13s} {time.perf_counter() - t0:7.1f}s", flush=True)
    return worst


if __name__ == "__main__":
    sys.exit(main())
