"""Desk-scale benchmark: generate, train, compare, then print the table.

    python scripts/run_desk.py [--config configs/desk.json] [--out runs/desk]
"""
import argparse
import csv
import io
import sys
import time
from pathlib import Path

from vibro.cli import main as vibro_main

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--config", default=str(ROOT / "configs" / "desk.json"))
    p.add_argument("--out", default="runs/desk")
    args = p.parse_args()

    start = time.perf_counter()
    code = vibro_main(["run", "--config", args.config, "--out", args.out])
    if code:
        return code
    minutes = (time.perf_counter() - start) / 60

    rows = list(csv.DictReader(io.StringIO((Path(args.out) / "report.csv").read_text())))
    print(f"\n{'sigma':>6} {'method':<18} {'PSNR':>8} {'SNR':>8} {'WMAPE':>8}")
    for r in rows:
        print(f"{r['sigma_eps']:>6} {r['method']:<18} {r['psnr_mean']:>8.8} {r['snr_mean']:>8.8} {r['wmape_mean']:>8.8}")
    print(f"\nwall time {minutes:.1f} min")
    return 0


if __name__ == "__main__":
    sys.exit(main())
