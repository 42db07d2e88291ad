"""Regenerate every preset table into an output directory, one markdown and one csv file each.

    python3 scripts/reproduce_tables.py --out results --reps 100000
"""

import argparse
import io
import sys
import time
from pathlib import Path

from tailsum.cli import PRESETS, run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--reps", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--only", nargs="*", default=sorted(PRESETS), help="subset of presets")
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)

    for name in args.only:
        base = ["table", name, "--reps", str(args.reps), "--seed", str(args.seed)]
        if args.workers is not None:
            base += ["--workers", str(args.workers)]
        t0 = time.perf_counter()
        for fmt, ext in (("csv", "csv"), ("markdown", "md")):
            buf = io.StringIO()
            code = run(base + ["--format", fmt, "-q"], out=buf)
            if code:
                print(f"{name}: exit status {code}", file=sys.stderr)
                return code
            (args.out / f"{name}.{ext}").write_text(buf.getvalue())
        print(f"{name}: {time.perf_counter() - t0:.1f}s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
