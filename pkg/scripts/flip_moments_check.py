"""Compare the closed-form flip moments of one HLM transition with simulation."""

import argparse

import numpy as np

from rhdetect.hlm import family_defaults, hlm_step_presence, make_weights
from rhdetect.scoring import flip_moments, normality_check


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="power_law", choices=["power_law", "bump_power_law"])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--target-edges", type=float)
    ap.add_argument("--target-max-degree", type=float)
    ap.add_argument("--alpha", type=float, default=0.5)
    ap.add_argument("--transitions", type=int, default=50_000)
    ap.add_argument("--batch", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    return ap.parse_args(argv)


def main(argv=None):
    args = parse_args(argv)
    params = family_defaults(args.family, args.n)
    if args.target_edges:
        params["target_edges"] = args.target_edges
    if args.target_max_degree:
        params["target_max_degree"] = args.target_max_degree
    w = make_weights(args.family, seed=0, **params)
    p = w.pair_probabilities
    mu, sigma = flip_moments(w, args.alpha)
    rng = np.random.default_rng(args.seed)
    flips = []
    for start in range(0, args.transitions, args.batch):
        g = rng.random((min(args.batch, args.transitions - start), p.size)) < p
        flips.append(np.count_nonzero(hlm_step_presence(g, args.alpha, p, rng) != g, axis=1))
    flips = np.concatenate(flips)
    print(f"closed form   mu={mu:.3f} sigma={sigma:.3f}")
    print(f"simulated     mu={flips.mean():.3f} sigma={flips.std(ddof=1):.3f} ({flips.size} transitions)")
    print(f"KS vs normal  {normality_check(flips, mu, sigma):.4f}")


if __name__ == "__main__":
    main()
