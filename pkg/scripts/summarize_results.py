#!/usr/bin/env python3
"""
Results Summary

Prints one or more results.csv files as Mean/Bias/Var tables with failure
counts, e.g. scripts/summarize_results.py results/*/results.csv
"""

import sys
import os
import argparse

import pandas as pd


def summarize(path: str) -> str:
    df = pd.read_csv(path)
    if df.empty:
        return f"📄 {path}: no rows"
    lines = [f"📄 {path}"]
    for estimator, rows in df.groupby("estimator", sort=False):
        failures = int(rows["failures"].iloc[0])
        replications = int(rows["replications"].iloc[0])
        lines.append(f"  {estimator.upper()}  failures {failures}/{replications}")
        lines.append(f"    {'component':>10} {'true':>10} {'mean':>10} {'bias':>10} {'var':>10}")
        for _, row in rows.iterrows():
            lines.append(f"    {row['component']:>10} {row['true_value']:>10.4f} {row['mean']:>10.4f} "
                         f"{row['bias']:>10.4f} {row['var']:>10.4f}")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Summarize experiment result CSVs")
    parser.add_argument("paths", nargs="+")
    args = parser.parse_args(argv)

    status = 0
    for path in args.paths:
        if not os.path.isfile(path):
            print(f"❌ Not found: {path}")
            status = 1
            continue
        print(summarize(path))
        print()
    return status


if __name__ == "__main__":
    sys.exit(main())
