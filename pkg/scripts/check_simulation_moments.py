"""Check the terminal variance of exported electricity paths against the OU law.

Usage::

    python scripts/check_simulation_moments.py PATHS.csv --alpha A --sigma S [--level L] [--geometric]

The last column of the CSV is compared with the exact OU variance at the
export horizon (for a constant seasonal level and no spikes).  With
``--geometric`` the log of ``S / level`` is tested instead.  Exits 0 when the
sample variance lies within 4 standard errors of the target.
"""
import argparse
import math
import sys

import numpy as np

from sparkspread.models import ou_moments
from sparkspread.simulate import read_csv_paths


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("csv")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument("--geometric", action="store_true")
    p.add_argument("--x0", type=float, default=0.0)
    args = p.parse_args(argv)

    times, values = read_csv_paths(args.csv)
    last = values[:, -1]
    x = np.log(last / args.level) if args.geometric else last - args.level
    _, target = ou_moments(args.alpha, args.sigma, args.x0, times[-1] - times[0])
    var = x.var(ddof=1)
    se = math.sqrt(max(np.mean((x - x.mean()) ** 4) - var**2, 0.0) / x.size)
    z = abs(var - target) / se if se > 0 else (0.0 if var == target else math.inf)
    ok = z <= 4.0
    print(f"n={x.size} variance={var:.6g} target={target:.6g} se={se:.3g} |z|={z:.2f} {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
