"""Walk through the sup-inf affine representation on small hand cases.

Every uniformly elliptic operator trapped between the base envelope and
the widened-band majorant can be written as a sup over probe matrices of
an inf over affine functions.  This script builds the pieces one at a
time for a 1x1 "identity" operator where everything can be checked by
hand, then reconstructs a max-of-linear operator from its pairs alone.
"""

import numpy as np

from isaacslab.representation import (
    AffinePair,
    Envelope,
    base_sup,
    majorant,
    margin,
    mixing_weight,
    repr_pair,
    sample_base_slopes,
    supinf_eval,
)


def hand_case():
    env = Envelope(delta=0.5, d=1)
    ident = lambda a: np.asarray(a, float)[..., 0, 0]

    print("envelope: delta=0.5, d=1, widened band [%.2f, %.2f]" % (env.band_lo, env.band_hi))
    for a in (1.0, -1.0):
        probe = np.array([[a]])
        print(
            "  alpha=%+.0f  majorant=%+.4f  base_sup=%+.4f  margin=%.4f"
            % (a, majorant(env, probe), base_sup(env, probe), margin(env, probe))
        )

    beta = AffinePair(offset=0.0, slope=[[0.5]])
    probe = np.array([[1.0]])
    w = mixing_weight(env, ident, probe, beta)
    pair = repr_pair(env, ident, probe, beta)
    print("\nbeta=(0, 0.5) at alpha=+1:")
    print("  weight      = %.15f   (expected 6/7 = %.15f)" % (float(w), 6.0 / 7.0))
    print("  pair slope  = %.15f" % float(pair.slope[0, 0]))
    print("  pair offset = %.15f" % float(pair.offset))
    print("  pair value at the probe = %.15f  (recovers H(+1) = 1)" % float(pair.value(probe)))

    beta2 = AffinePair(offset=0.0, slope=[[2.0]])
    net = np.array([[[0.5]], [[2.0]], [[-3.0]]])
    got = supinf_eval(env, ident, np.array([[-1.0]]), net, [beta2])
    print("\nsup-inf over a 3-matrix net with the single beta=(0, 2):")
    print("  value at u=-1 = %.15f  (H(-1) = -1, exact)" % got)


def max_linear_reconstruction():
    # a finite max of base-class linear maps is recovered exactly once
    # every slope appears among the betas
    rng = np.random.default_rng(2024)
    env = Envelope(delta=0.4, d=2)
    slopes = sample_base_slopes(env, rng, 4)

    def H(a):
        vals = np.einsum("kij,...ij->k...", slopes, np.asarray(a, float))
        return np.max(vals, axis=0)

    betas = [AffinePair(offset=0.0, slope=s) for s in slopes]
    net = sample_base_slopes(env, rng, 24)

    worst = 0.0
    for _ in range(200):
        g = rng.normal(size=(2, 2)) * 2.0
        u = (g + g.T) / 2.0
        got = supinf_eval(env, H, u, net, betas)
        worst = max(worst, abs(got - float(H(u[None])[0])))
    print("\nmax-of-4-linear operator in d=2, 200 random jets:")
    print("  worst reconstruction error = %.3e" % worst)


def main():
    hand_case()
    max_linear_reconstruction()


if __name__ == "__main__":
    main()
