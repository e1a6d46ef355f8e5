"""Sampled checks of the interpolation, commutator and Lame regularity bounds.

For each inequality the script prints the largest lhs/rhs ratio seen over
the random band-limited samples; a bounded ratio is the empirical constant.

    python scripts/inequality_lab.py [--samples 100] [--seed 0] [--n 64]
"""
import argparse
import math
from fractions import Fraction

from degsw.inequalities import (COMMUTATOR_CHOICES, InequalityError, commutator_verify, gn_theta,
                                gn_verify, lame_regularity_verify)

GN_TRIPLES = [(2, 3, 2), (2, 4, 2), (2, 6, 2), (2, 6, 3), (4, math.inf, 2), (Fraction(4, 3), 3, 2), (3, 8, 2)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=64)
    args = ap.parse_args()
    kw = dict(n=args.n)

    print("Gagliardo-Nirenberg  |h|_q <= C |grad h|_p^theta |h|_r^(1-theta)")
    for p, q, r in GN_TRIPLES:
        try:
            th = gn_theta(p, q, r)
        except InequalityError as exc:
            print(f"  p={p} q={q:g} r={r:g}: inadmissible ({exc})")
            continue
        rep = gn_verify(args.samples, p, q, r, args.seed, **kw)
        print(f"  p={str(p):5s} q={q:<5g} r={r:<3g} theta={str(th):5s} max ratio {rep.max_ratio:.4f}")

    print("commutator bounds (s, choice, form)")
    for s in (1, 2):
        for choice in COMMUTATOR_CHOICES:
            for form in ("top-b", "top-a"):
                rep = commutator_verify(s, choice, args.samples, args.seed, form=form, **kw)
                print(f"  s={s} {choice:8s} {form}  max ratio {rep.max_ratio:.4f}")

    print("Lame regularity  |u|_(k+2,q) <= C |F|_(k,q)")
    for k in (0, 1):
        for q in (2.0, 6.0):
            rep = lame_regularity_verify(k, q, args.samples, args.seed, **kw)
            print(f"  k={k} q={q:g}  max ratio {rep.max_ratio:.4f}")


if __name__ == "__main__":
    main()
