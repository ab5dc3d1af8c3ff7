"""Finite-difference check of every parameter block of a small hybrid model."""
import argparse

from vibro.neural.gradcheck import grad_check, grad_check_dense, small_config


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--length", type=int, default=12)
    p.add_argument("--hidden", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    report = grad_check(small_config(series_length=args.length, hidden=args.hidden), seed=args.seed)
    for name, err in sorted(report.block_errors.items()):
        print(f"{name:<28} {err:.3e}")
    print(f"{'max (full model)':<28} {report.max_rel_error:.3e}")
    print(f"{'max (dense head only)':<28} {grad_check_dense(seed=args.seed).max_rel_error:.3e}")


if __name__ == "__main__":
    main()
