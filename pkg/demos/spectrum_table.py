"""Linearized spectrum around the six canonical permanent rotations.

For each body and axis the script prints the algebraic classification next to
what the reduced eigenproblem sees: the size of the zero cluster, whether it
is semisimple, and the sign of the slowest real part.
"""

import math

import numpy as np

from gyrostat import spectral as S
from gyrostat.core import Cavity, build_system
from gyrostat.stability import classify

BOX = (1.4, 1.4, 1.4)
GRID = (12, 12, 12)
NU = 0.02
s = 1 / math.sqrt(2)

cases = [
    ((1, 2, 3), (0, 0, 1)),
    ((1, 2, 3), (1, 0, 0)),
    ((1, 2, 3), (0, 1, 0)),
    ((1, 1, 3), (s, s, 0)),
    ((1, 3, 3), (0, 1, 0)),
    ((2, 2, 2), (0.48, -0.6, 0.64)),
]

basis = S.cached_modes(Cavity(BOX, GRID), NU, 32)
print(f"Stokes basis: {basis.N} modes, mu_1 = {basis.mu[0]:.4f}")
print(f"{'inertia':>10} {'axis':>20} {'class':>18} {'zeros':>6} {'semisimple':>10} {'min Re':>10}  verdict")
for moments, axis in cases:
    v = classify(*moments, axis)
    rep = S.analyze(build_system(BOX, GRID, NU, moments, axis), basis)
    ax = np.array2string(np.asarray(axis, float), precision=2)
    print(
        f"{str(moments):>10} {ax:>20} {str(v):>18} {rep.zero_multiplicity:>6} "
        f"{str(rep.semisimple):>10} {rep.min_real:>10.4f}  {rep.verdict}"
    )
