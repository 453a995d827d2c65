"""Mollify a kinked datum across scales and read off the certificates.

g = |x| has a single kink at the origin.  Smoothing at scale eps wipes
the kink over an eps-neighborhood, so the sup distance to the original
behaves like eps while the interior Hessian blows up like 1/eps.  The
normalized certificates

    n1 = sup |g - g_eps| / eps^kappa
    n2 = (sup |dt g_eps| + sup |D2 g_eps|) / eps^(kappa - 2)

should therefore settle to scale-free constants for kappa = 1, which
the table below shows across three octaves of eps.
"""

import numpy as np

from isaacslab.core import Box, GridFunction, SpaceTimeGrid
from isaacslab.mollify import MollifierSpec, smooth


def main():
    grid = SpaceTimeGrid(
        box=Box(lo=[-1.0], hi=[1.0]), h=1.0 / 128, t0=0.0, t1=0.0625, dt=1.0 / 1024
    )
    g = GridFunction.from_callable(grid, lambda t, X: np.abs(X[..., 0]))

    print("datum |x| on [-1, 1], h=1/128, dt=1/1024, kappa=1:")
    print("  %8s   %10s   %10s   %12s" % ("eps", "n1", "n2", "third order"))
    for eps in (0.25, 0.125, 0.0625):
        res = smooth(g, MollifierSpec(eps=eps, kappa=1.0))
        print(
            "  %8.4f   %10.6f   %10.6f   %12.6f"
            % (eps, res.n1, res.n2, res.third_order)
        )
        # time-independent data must stay time independent
        assert res.sup_dt <= 1e-12
    print("n1 and n2 stay within a small band: the kink is self-similar,")
    print("so every scale sees the same profile up to lattice effects.")


if __name__ == "__main__":
    main()
