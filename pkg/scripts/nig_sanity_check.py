#!/usr/bin/env python3
"""
NIG Driver Sanity Check

Draws unit-time NIG increments with the default parameters and compares the
empirical mean and variance with the implied (0, 1.0001).
"""

import sys
import os
import argparse

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.simulation.levy_drivers import NigParams, nig_increments
from src.simulation.rng_streams import make_stream

TOLERANCE = 0.01


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Check NIG increment moments")
    parser.add_argument("--draws", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=20240501)
    args = parser.parse_args(argv)

    params = NigParams.reference()
    draws = nig_increments(params, args.draws, make_stream(args.seed))
    mean, var = float(np.mean(draws)), float(np.var(draws))

    print("🌊 NIG SANITY CHECK")
    print("=" * 50)
    print(f"Parameters: alpha={params.alpha}, beta={params.beta}, delta={params.delta}, mu={params.mu}")
    print(f"Implied:    mean={params.mean:.5f}  variance={params.variance:.5f}")
    print(f"Empirical:  mean={mean:.5f}  variance={var:.5f}  ({args.draws} draws)")

    ok = abs(mean - params.mean) <= TOLERANCE and abs(var - params.variance) <= TOLERANCE
    print("✅ Within tolerance" if ok else f"❌ Outside ±{TOLERANCE}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
