"""Print how the jump-series truncation behaves as the expected jump count grows.

For each ``lam T`` the controller's stopping diagonal, tail bounds and the
gap to a brute-force sum over ``i + j <= 60`` are reported, for both inner
pricers.
"""
import argparse

from sparkspread.models import MertonParams
from sparkspread.pricing_series import TruncationPolicy, jump_series_price
from sparkspread.validation import brute_force_series


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--lam-t", type=float, nargs="+", default=[0.25, 0.5, 1.0, 2.0, 4.0])
    p.add_argument("--stop-tol", type=float, default=1e-10)
    args = p.parse_args(argv)

    policy = TruncationPolicy(stop_tol=args.stop_tol, max_diagonal=60, weight_tail_tol=1e-8)
    print(f"{'lamT':>6} {'inner':>10} {'last d':>6} {'terms':>6} {'tail mass':>10} {'tail price':>10} {'|V - brute|':>11}")
    for lam in args.lam_t:
        pe = MertonParams(100.0, 0.05, 0.0, 0.3, lam=lam, m=0.1, s=0.15)
        pg = MertonParams(90.0, 0.05, 0.0, 0.2, lam=lam, m=-0.1, s=0.2)
        for inner in ("kirk", "quadrature"):
            v, rep = jump_series_price(pe, pg, 0.3, 5.0, 1.0, 0.05, inner=inner, policy=policy)
            gap = abs(v - brute_force_series(pe, pg, 0.3, 5.0, 1.0, 0.05, inner, 60))
            print(f"{lam:6.2f} {inner:>10} {rep.diagonals - 1:6d} {rep.terms_evaluated:6d} "
                  f"{rep.tail_mass_bound:10.2e} {rep.tail_price_bound:10.2e} {gap:11.2e}")


if __name__ == "__main__":
    main()
