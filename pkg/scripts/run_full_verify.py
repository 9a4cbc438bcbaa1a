#!/usr/bin/env python3
"""Run the standing verification battery and print the report.

Usage: python scripts/run_full_verify.py [--nu NU] [--alpha ALPHA] [--seed S]
"""
import argparse
import sys

from gnlse.grid import PhysicalConstants
from gnlse.verify import full_battery


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nu", type=float, default=0.05,
                    help="diffusion coefficient of the nonlinearity family")
    ap.add_argument("--alpha", type=float, default=0.1,
                    help="quantum-potential coefficient")
    ap.add_argument("--seed", type=int, default=12345)
    args = ap.parse_args()
    report = full_battery(PhysicalConstants(), nu=args.nu, alpha=args.alpha,
                          seed=args.seed)
    print(report.render(), end="")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
