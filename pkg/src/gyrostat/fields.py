"""Staggered (MAC) grid vector calculus inside the box cavity.

Velocity components live on the cell faces normal to them: ``u`` on x-faces
with shape ``(nx+1, ny, nz)``, ``v`` on y-faces ``(nx, ny+1, nz)`` and ``w``
on z-faces ``(nx, ny, nz+1)``.  Scalars (pressure, divergence) live at cell
centres.  No-slip walls are imposed as zero normal faces plus an odd ghost
reflection of the tangential components.

The stencil loops are compiled (numba) and run single threaded in a fixed
order, so norms and moments are bitwise reproducible.  :func:`fixed_sum` is
the matching reduction for plain arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft

from . import _kernels as K
from .core import Cavity
from .errors import SolverFailure

PROJECTION_TOL = 1e-10
CHUNK = 4096


@dataclass(frozen=True, eq=False)
class FaceField:
    """Face-normal velocity components on the MAC grid of ``cavity``."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    cavity: Cavity

    def __post_init__(self):
        nx, ny, nz = self.cavity.grid
        shapes = ((nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1))
        for name, arr, shape in zip("uvw", self.components, shapes):
            if arr.shape != shape:
                raise ValueError(f"component {name} has shape {arr.shape}, expected {shape}")

    @classmethod
    def zeros(cls, cavity: Cavity) -> "FaceField":
        nx, ny, nz = cavity.grid
        return cls(
            np.zeros((nx + 1, ny, nz)),
            np.zeros((nx, ny + 1, nz)),
            np.zeros((nx, ny, nz + 1)),
            cavity,
        )

    @property
    def components(self):
        return (self.u, self.v, self.w)

    def _new(self, comps) -> "FaceField":
        return FaceField(*comps, self.cavity)

    def __add__(self, other):
        return self._new([a + b for a, b in zip(self.components, other.components)])

    def __sub__(self, other):
        return self._new([a - b for a, b in zip(self.components, other.components)])

    def __mul__(self, s):
        return self._new([a * s for a in self.components])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def copy(self) -> "FaceField":
        return self._new([a.copy() for a in self.components])

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) for a in self.components)

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.components)

    def wall_normal_max(self) -> float:
        """Largest magnitude found on the wall faces (zero for an admissible field)."""
        u, v, w = self.components
        return max(
            float(np.max(np.abs(u[[0, -1]]))),
            float(np.max(np.abs(v[:, [0, -1]]))),
            float(np.max(np.abs(w[:, :, [0, -1]]))),
        )

    def with_walls(self) -> "FaceField":
        """Copy with the wall-normal faces set to zero (no penetration)."""
        u, v, w = (a.copy() for a in self.components)
        u[[0, -1]] = 0.0
        v[:, [0, -1]] = 0.0
        w[:, :, [0, -1]] = 0.0
        return FaceField(u, v, w, self.cavity)

    def ravel(self) -> np.ndarray:
        """Interior face values as one vector (wall faces are not unknowns)."""
        u, v, w = self.components
        return np.concatenate([u[1:-1].ravel(), v[:, 1:-1].ravel(), w[:, :, 1:-1].ravel()])

    @classmethod
    def from_vector(cls, x: np.ndarray, cavity: Cavity) -> "FaceField":
        f = cls.zeros(cavity)
        nx, ny, nz = cavity.grid
        n1 = (nx - 1) * ny * nz
        n2 = nx * (ny - 1) * nz
        f.u[1:-1] = x[:n1].reshape(nx - 1, ny, nz)
        f.v[:, 1:-1] = x[n1 : n1 + n2].reshape(nx, ny - 1, nz)
        f.w[:, :, 1:-1] = x[n1 + n2 :].reshape(nx, ny, nz - 1)
        return f


def n_unknowns(cavity: Cavity) -> int:
    nx, ny, nz = cavity.grid
    return (nx - 1) * ny * nz + nx * (ny - 1) * nz + nx * ny * (nz - 1)


# -- reductions ---------------------------------------------------------------


def fixed_sum(a: np.ndarray) -> float:
    """Sum with a fixed chunking and a fixed pairwise combination tree."""
    flat = np.ravel(a)
    n = flat.size
    if n == 0:
        return 0.0
    nchunks = -(-n // CHUNK)
    if nchunks * CHUNK != n:
        flat = np.concatenate([flat, np.zeros(nchunks * CHUNK - n)])
    partial = flat.reshape(nchunks, CHUNK).sum(axis=1)
    while partial.size > 1:
        if partial.size % 2:
            partial = np.append(partial, 0.0)
        partial = partial[0::2] + partial[1::2]
    return float(partial[0])


def inner(a: FaceField, b: FaceField) -> float:
    """Discrete L2 inner product (cell volume per face, half on wall faces)."""
    total = 0.0
    for ax, (p, q) in enumerate(zip(a.components, b.components)):
        perm = K.CYCLE[ax]
        total += K.component_dot(np.transpose(p, perm), np.transpose(q, perm))
    return total * a.cavity.cell_volume


def l2_norm(V: FaceField) -> float:
    return float(np.sqrt(max(inner(V, V), 0.0)))


def h1_seminorm(V: FaceField) -> float:
    """Discrete ``||grad v||_2`` built from the same differences as :func:`laplacian`.

    Wall links use the ghost value, i.e. a difference ``2 q / h`` over half a
    cell, so that ``h1_seminorm(V)**2 == -inner(laplacian(V), V)`` for
    admissible fields.
    """
    h = V.cavity.spacing
    total = 0.0
    for a, q in enumerate(V.components):
        perm = K.CYCLE[a]
        total += K.component_grad_sq(np.transpose(q, perm), *(h[c] for c in perm))
    return float(np.sqrt(total * V.cavity.cell_volume))


# -- differential operators ----------------------------------------------------


def divergence(V: FaceField) -> np.ndarray:
    hx, hy, hz = V.cavity.spacing
    u, v, w = V.components
    return (
        (u[1:] - u[:-1]) / hx
        + (v[:, 1:] - v[:, :-1]) / hy
        + (w[:, :, 1:] - w[:, :, :-1]) / hz
    )


def gradient(P: np.ndarray, cavity: Cavity) -> FaceField:
    hx, hy, hz = cavity.spacing
    G = FaceField.zeros(cavity)
    G.u[1:-1] = (P[1:] - P[:-1]) / hx
    G.v[:, 1:-1] = (P[:, 1:] - P[:, :-1]) / hy
    G.w[:, :, 1:-1] = (P[:, :, 1:] - P[:, :, :-1]) / hz
    return G


def laplacian(V: FaceField) -> FaceField:
    """Seven-point vector Laplacian with no-slip ghost reflection."""
    h = V.cavity.spacing
    out = FaceField.zeros(V.cavity)
    for a, q in enumerate(V.components):
        perm = K.CYCLE[a]
        K.component_laplacian(
            np.transpose(q, perm), *(h[c] for c in perm), np.transpose(out.components[a], perm)
        )
    return out


def advect(V: FaceField) -> FaceField:
    """Centred divergence-form ``(v . grad) v`` on the staggered grid.

    Momentum fluxes use two-point averages of the transporting and the
    transported components; for discretely solenoidal fields the form is
    energy neutral, ``inner(advect(V), V) == 0`` up to roundoff.
    """
    h = V.cavity.spacing
    out = FaceField.zeros(V.cavity)
    for a in range(3):
        perm = K.CYCLE[a]
        K.component_advect(
            *K.permuted(V.components, a), *(h[c] for c in perm), np.transpose(out.components[a], perm)
        )
    return out


def cross_with(omega, V: FaceField) -> FaceField:
    """``omega x v`` with the tangential components averaged onto each face.

    The averaging pairs are mutually adjoint, so ``inner(cross_with(w, V), V)``
    vanishes to roundoff.
    """
    w = [float(c) for c in omega]
    out = FaceField.zeros(V.cavity)
    for a in range(3):
        perm = K.CYCLE[a]
        _, qb, qc = K.permuted(V.components, a)
        K.component_cross(qb, qc, w[perm[1]], w[perm[2]], np.transpose(out.components[a], perm))
    return out


def momentum_rhs(V: FaceField, nu: float, omega, nonlinear: bool = True) -> FaceField:
    """``nu lap(v) - adv(v) - 2 omega x v`` in one pass (advection optional)."""
    h = V.cavity.spacing
    w = [2.0 * float(c) for c in omega]
    out = FaceField.zeros(V.cavity)
    for a in range(3):
        perm = K.CYCLE[a]
        K.component_rhs(
            *K.permuted(V.components, a),
            *(h[c] for c in perm),
            float(nu),
            w[perm[1]],
            w[perm[2]],
            bool(nonlinear),
            np.transpose(out.components[a], perm),
        )
    return out


# -- Helmholtz projection ------------------------------------------------------


def _second_difference_eigs(n: int, h: float, kind: str) -> np.ndarray:
    if kind == "neumann":  # DCT-II, cell centred
        k = np.arange(n)
        return (2.0 * np.cos(np.pi * k / n) - 2.0) / h**2
    if kind == "dirichlet_centered":  # DST-II, wall half a cell away
        k = np.arange(1, n + 1)
        return (2.0 * np.cos(np.pi * k / n) - 2.0) / h**2
    if kind == "dirichlet_nodal":  # DST-I on interior nodes
        k = np.arange(1, n)
        return (2.0 * np.cos(np.pi * k / n) - 2.0) / h**2
    raise ValueError(kind)


@lru_cache(maxsize=16)
def _poisson_denominator(cavity: Cavity) -> np.ndarray:
    ex, ey, ez = (
        _second_difference_eigs(n, h, "neumann") for n, h in zip(cavity.grid, cavity.spacing)
    )
    den = ex[:, None, None] + ey[None, :, None] + ez[None, None, :]
    den[0, 0, 0] = 1.0
    return den


def solve_neumann_poisson(rhs: np.ndarray, cavity: Cavity) -> np.ndarray:
    """Mean-zero solution of ``div grad phi = rhs`` (compatible ``rhs``)."""
    hat = scipy.fft.dctn(rhs, type=2, norm="ortho")
    hat /= _poisson_denominator(cavity)
    hat[0, 0, 0] = 0.0
    return scipy.fft.idctn(hat, type=2, norm="ortho")


def project(V: FaceField, tol: float = PROJECTION_TOL) -> tuple[FaceField, np.ndarray]:
    """Helmholtz projection onto discretely solenoidal fields.

    Wall-normal faces are treated as boundary data and set to zero first.
    Returns the solenoidal part and the mean-zero potential ``phi`` with
    ``V_sol = V - gradient(phi)``.
    """
    V = V.with_walls()
    phi = solve_neumann_poisson(divergence(V), V.cavity)
    out = V - gradient(phi, V.cavity)
    scale = max(V.max_abs(), np.finfo(float).tiny) / min(V.cavity.spacing)
    resid = float(np.max(np.abs(divergence(out))))
    if resid > tol * scale:
        raise SolverFailure(f"projection residual {resid:.3e} exceeds {tol:g} x {scale:.3e}")
    return out, phi


# -- sampling, quadrature, initial data ----------------------------------------


def face_coordinates(cavity: Cavity, axis: int):
    """Broadcastable coordinate arrays (x, y, z) of the faces normal to ``axis``."""
    coords = []
    for b in range(3):
        c = cavity.nodes(b) if b == axis else cavity.centers(b)
        shape = [1, 1, 1]
        shape[b] = c.size
        coords.append(c.reshape(shape))
    return coords


def sample(cavity: Cavity, fn) -> FaceField:
    """Sample ``fn(x, y, z) -> (fx, fy, fz)`` on the faces (walls included)."""
    comps = []
    for a in range(3):
        x, y, z = face_coordinates(cavity, a)
        val = fn(x, y, z)[a]
        comps.append(np.broadcast_to(val, np.broadcast_shapes(x.shape, y.shape, z.shape)).astype(float))
    return FaceField(*comps, cavity)


def rigid_field(cavity: Cavity, e) -> FaceField:
    """``e x x`` on the faces, with the wall-normal faces zeroed."""
    ex, ey, ez = (float(c) for c in e)
    f = sample(cavity, lambda x, y, z: (ey * z - ez * y, ez * x - ex * z, ex * y - ey * x))
    return f.with_walls()


def angular_moment(V: FaceField) -> np.ndarray:
    """Midpoint quadrature of ``int x cross v`` using cell-centre averages."""
    cav = V.cavity
    sums = K.angular_moment_sums(*V.components, cav.centers(0), cav.centers(1), cav.centers(2))
    return sums * cav.cell_volume


def _edge_coords(cavity: Cavity, axis: int):
    # edges along ``axis``: centred along axis, nodal across
    coords = []
    for b in range(3):
        c = cavity.centers(b) if b == axis else cavity.nodes(b)
        shape = [1, 1, 1]
        shape[b] = c.size
        coords.append(c.reshape(shape))
    return coords


def curl_edges(psi, cavity: Cavity) -> FaceField:
    """Discrete curl of an edge-centred vector potential (exactly solenoidal)."""
    hx, hy, hz = cavity.spacing
    px, py, pz = psi
    u = np.diff(pz, axis=1) / hy - np.diff(py, axis=2) / hz
    v = np.diff(px, axis=2) / hz - np.diff(pz, axis=0) / hx
    w = np.diff(py, axis=0) / hx - np.diff(px, axis=1) / hy
    return FaceField(u, v, w, cavity)


def synth_solenoidal_ic(
    cavity: Cavity, seed: int, target_h1_amplitude: float, n_modes: int = 6, max_wavenumber: int = 3
) -> FaceField:
    """Random smooth solenoidal field vanishing on the walls.

    Each potential component is a random combination of products
    ``prod_i sin^2(m_i pi (x_i/L_i + 1/2))``; the potential and its gradient
    vanish on the boundary, so the discrete curl is divergence free with zero
    wall values.  The result is rescaled to the requested ``h1_seminorm``.
    """
    if target_h1_amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    if target_h1_amplitude == 0:
        return FaceField.zeros(cavity)
    rng = np.random.default_rng(seed)
    psi = []
    for a in range(3):
        coords = _edge_coords(cavity, a)
        s = [c / L + 0.5 for c, L in zip(coords, cavity.dims)]
        comp = 0.0
        for _ in range(n_modes):
            m = rng.integers(1, max_wavenumber + 1, size=3)
            coef = rng.normal()
            comp = comp + coef * np.sin(m[0] * np.pi * s[0]) ** 2 * np.sin(
                m[1] * np.pi * s[1]
            ) ** 2 * np.sin(m[2] * np.pi * s[2]) ** 2
        psi.append(np.asarray(comp, dtype=float))
    V = curl_edges(psi, cavity).with_walls()
    V, _ = project(V)
    return V * (target_h1_amplitude / h1_seminorm(V))
