"""Independent reference computations used by the tests.

Nothing here imports the code under test's algorithms: states are built as
explicit 4-vectors with numpy.kron, thresholds come from a multi-start
Nelder-Mead on the ratio S/J, and CH soundness from enumerating strategies.
"""

import itertools
import math

import numpy as np
from scipy.optimize import minimize

PSI = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)  # |K0 K0bar> - |K0bar K0>


def kron_probability(f1, f2, psi=PSI):
    bra = np.kron(np.asarray(f1, dtype=complex), np.asarray(f2, dtype=complex)).conj()
    return float(abs(bra @ psi) ** 2)


def threshold_by_ratio(theta, starts=200, seed=0):
    """min over settings of S/J, the efficiency at which eta^2 J = eta S."""
    c, s = math.cos(theta), math.sin(theta)

    def joint(a, b):
        v = np.array([math.cos(a) * math.cos(b), math.cos(a) * math.sin(b),
                      math.sin(a) * math.cos(b), math.sin(a) * math.sin(b)])
        return float((v @ np.array([c, 0, 0, s])) ** 2)

    def single(a):
        return joint(a, 0.0) + joint(a, math.pi / 2)

    def ratio(x):
        a1, a3, b2, b4 = x
        j = joint(a1, b2) - joint(a1, b4) + joint(a3, b2) + joint(a3, b4)
        sm = single(a3) + (joint(0.0, b2) + joint(math.pi / 2, b2))
        return sm / j if j > 1e-15 else 10.0

    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(starts):
        r = minimize(ratio, rng.uniform(-math.pi / 2, math.pi / 2, 4), method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 20000})
        best = min(best, r.fun)
    return best


def deterministic_ch_values():
    """lhs - rhs of the CH form for all 16 deterministic count assignments."""
    out = []
    for a1, a3, b2, b4 in itertools.product((0, 1), repeat=4):
        out.append(a1 * b2 - a1 * b4 + a3 * b2 + a3 * b4 - a3 - b2)
    return out
