"""Reduced-basis eigenanalysis of the operator linearized about a permanent
rotation.

The liquid part of the state space is truncated to the ``N`` lowest discrete
Stokes modes; the three rigid directions complete the basis.  The pencil
``(A + B) x = lambda M x`` is assembled from the bilinear forms of the
inertia, viscous and gyroscopic operators and solved densely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fields as F
from .core import Cavity, SystemSetup
from .errors import ClusterAmbiguous, NoConvergence, SolverFailure, ValidationError
from .fields import FaceField

DEFAULT_MODES = 64
CLUSTER_FACTOR = 1e-6
RESIDUAL_TOL = 1e-6


# -- fast solvers on the interior face unknowns ----------------------------------


@lru_cache(maxsize=16)
def _laplace_symbols(cavity: Cavity):
    """Eigenvalues of ``-Delta_h`` for each velocity component in its sine basis."""
    out = []
    for a in range(3):
        eig = []
        for b, (n, h) in enumerate(zip(cavity.grid, cavity.spacing)):
            kind = "dirichlet_nodal" if a == b else "dirichlet_centered"
            eig.append(-F._second_difference_eigs(n, h, kind))
        out.append(eig[0][:, None, None] + eig[1][None, :, None] + eig[2][None, None, :])
    return out


def _sine(q, a, inverse=False):
    fn = scipy.fft.idst if inverse else scipy.fft.dst
    for b in range(3):
        q = fn(q, type=1 if a == b else 2, axis=b, norm="ortho")
    return q


def inverse_laplacian(V: FaceField) -> FaceField:
    """Solve ``-Delta_h X = V`` on interior faces (no-slip walls)."""
    sym = _laplace_symbols(V.cavity)
    out = FaceField.zeros(V.cavity)
    inner = (out.u[1:-1], out.v[:, 1:-1], out.w[:, :, 1:-1])
    src = (V.u[1:-1], V.v[:, 1:-1], V.w[:, :, 1:-1])
    for a in range(3):
        inner[a][...] = _sine(_sine(src[a], a) / sym[a], a, inverse=True)
    return out


class StokesSolver:
    """Steady Stokes solves ``-Delta v + grad p = f, div v = 0`` (unit viscosity).

    The pressure Schur complement ``-D L^{-1} G`` is well conditioned on a box,
    so plain conjugate gradients with fast sine-transform Laplacian solves
    converge in a few dozen iterations independently of the grid.
    """

    def __init__(self, cavity: Cavity, rtol: float = 1e-12, maxiter: int = 500):
        self.cavity = cavity
        self.rtol = rtol
        self.maxiter = maxiter
        n = int(np.prod(cavity.grid))
        self.schur = spla.LinearOperator((n, n), matvec=self._schur, dtype=float)
        self.iterations = 0

    def _schur(self, p):
        G = F.gradient(p.reshape(self.cavity.grid), self.cavity)
        return -F.divergence(inverse_laplacian(G)).ravel()

    def solve(self, f: FaceField) -> FaceField:
        f = f.with_walls()
        Lf = inverse_laplacian(f)
        rhs = -F.divergence(Lf).ravel()
        rhs -= rhs.mean()
        norm = np.linalg.norm(rhs)
        if norm == 0.0:
            return Lf
        count = [0]

        def cb(_):
            count[0] += 1

        p, info = spla.cg(self.schur, rhs, rtol=self.rtol, atol=0.0, maxiter=self.maxiter, callback=cb)
        self.iterations += count[0]
        if info != 0:
            raise SolverFailure(f"Stokes pressure iteration did not converge (info={info})")
        p = p.reshape(self.cavity.grid)
        return Lf - inverse_laplacian(F.gradient(p, self.cavity))


# -- Stokes modes ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ReducedBasis:
    """``N`` L2-orthonormal discrete Stokes modes plus the rigid directions."""

    cavity: Cavity
    nu: float
    modes: tuple  # FaceFields
    mu: np.ndarray  # Stokes eigenvalues of -nu P Delta, ascending

    @property
    def N(self) -> int:
        return len(self.modes)

    @property
    def dim(self) -> int:
        return self.N + 3

    def gram(self) -> np.ndarray:
        return np.array([[F.inner(a, b) for b in self.modes] for a in self.modes])

    def truncated(self, N: int) -> "ReducedBasis":
        return ReducedBasis(self.cavity, self.nu, self.modes[:N], self.mu[:N])


def stokes_operator(V: FaceField, nu: float) -> FaceField:
    """``-nu P Delta_h V``."""
    return F.project(F.laplacian(V) * (-nu))[0]


def stokes_modes(cavity: Cavity, nu: float, N: int = DEFAULT_MODES, max_modes: int = 256, tol: float = RESIDUAL_TOL, seed: int = 0) -> ReducedBasis:
    """Lowest ``N`` eigenpairs of the discrete Stokes operator.

    Inverse iteration accelerated by implicitly restarted Lanczos (ARPACK) on
    the Stokes solution operator; each application is one steady Stokes solve.
    """
    if not 1 <= N <= max_modes:
        raise ValidationError(f"N must lie in [1, {max_modes}], got {N}")
    n = F.n_unknowns(cavity)
    if N >= n // 2:
        raise ValidationError(f"N={N} too large for a grid with {n} face unknowns")
    solver = StokesSolver(cavity)
    vol = cavity.cell_volume

    def apply(x):
        return solver.solve(FaceField.from_vector(x, cavity)).ravel()

    op = spla.LinearOperator((n, n), matvec=apply, dtype=float)
    rng = np.random.default_rng(seed)
    v0 = F.project(FaceField.from_vector(rng.normal(size=n), cavity))[0].ravel()
    try:
        theta, vecs = spla.eigsh(op, k=N, which="LA", v0=v0, tol=1e-12, maxiter=50 * N)
    except spla.ArpackNoConvergence as exc:  # pragma: no cover - defensive
        raise NoConvergence(str(exc)) from exc
    order = np.argsort(-theta)
    theta, vecs = theta[order], vecs[:, order]
    mu = nu / theta
    modes = []
    for k in range(N):
        phi = FaceField.from_vector(vecs[:, k] / math.sqrt(vol), cavity)
        phi, _ = F.project(phi)
        phi = phi * (1.0 / F.l2_norm(phi))
        res = F.l2_norm(stokes_operator(phi, nu) - phi * mu[k])
        if res > tol * mu[k]:
            raise NoConvergence(f"mode {k}: residual {res:.3e} > {tol:g} * mu = {tol * mu[k]:.3e}")
        modes.append(phi)
    modes = _orthonormalize(modes)
    return ReducedBasis(cavity, float(nu), tuple(modes), np.asarray(mu))


def _orthonormalize(modes):
    """Modified Gram-Schmidt in the discrete inner product (repairs degenerate clusters)."""
    out = []
    for phi in modes:
        for _ in range(2):
            for q in out:
                phi = phi - q * F.inner(q, phi)
        out.append(phi * (1.0 / F.l2_norm(phi)))
    return out


# -- pencil -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Pencil:
    """Dense forms on the reduced basis; rows index test functions.

    Coordinates are ``(c_1..c_N, w_1, w_2, w_3)`` for ``u = (sum c_k phi_k, w)``.
    """

    Mform: np.ndarray
    Aform: np.ndarray
    Bform: np.ndarray
    N: int
    mu1: float

    @property
    def K(self) -> np.ndarray:
        return self.Aform + self.Bform


def assemble_pencil(basis: ReducedBasis, setup: SystemSetup, omega0=None) -> Pencil:
    """Evaluate the inertia, viscous and gyroscopic forms on ``basis``.

    * ``m(u, u') = <v, v'> + w.J(v') + w'.J(v) + w.I.w'``
    * ``a(u, u') = nu <grad v, grad v'> + w.w'``
    * ``b(u, u') = 2 <w0 x v, v'> + (w0 x I w + w x I w0 + w0 x J(v) - w).w'``

    where ``J(v) = int x x v`` and ``w0`` the reference rotation.
    """
    w0 = np.asarray(setup.omega0 if omega0 is None else omega0, dtype=float)
    N = basis.N
    I = setup.inertia.diag
    J = np.array([F.angular_moment(phi) for phi in basis.modes])  # (N, 3)
    n = N + 3
    M = np.zeros((n, n))
    M[:N, :N] = np.eye(N)
    M[:N, N:] = J
    M[N:, :N] = J.T
    M[N:, N:] = np.diag(I)
    A = np.zeros((n, n))
    A[:N, :N] = np.diag(basis.mu)
    A[N:, N:] = np.eye(3)
    B = np.zeros((n, n))
    if np.any(w0):
        cor = [F.cross_with(2.0 * w0, phi) for phi in basis.modes]
        B[:N, :N] = np.array([[F.inner(cor[j], basis.modes[k]) for j in range(N)] for k in range(N)])
        B[N:, :N] = np.cross(w0, J).T
    E = np.eye(3)
    B[N:, N:] = np.array(
        [np.cross(w0, I * E[j]) + np.cross(E[j], I * w0) - E[j] for j in range(3)]
    ).T
    return Pencil(M, A, B, N, float(basis.mu[0]))


# -- eigenreport ----------------------------------------------------------------------

ALL_POSITIVE = "AllPositive"
SOME_NEGATIVE = "SomeNegative"


@dataclass(frozen=True, eq=False)
class EigReport:
    eigenvalues: np.ndarray  # complex, sorted by real part
    zero_indices: np.ndarray
    zero_multiplicity: int
    semisimple: bool
    min_abs_real: float  # over nonzero eigenvalues
    min_real: float  # over nonzero eigenvalues
    verdict: str
    cluster_radius: float
    right_zero: np.ndarray = field(repr=False)  # (n, m)
    left_zero: np.ndarray = field(repr=False)  # (n, m), rows of Y^H M
    mass: np.ndarray = field(repr=False)
    m_expected: int | None = None

    @property
    def nonzero(self) -> np.ndarray:
        mask = np.ones(self.eigenvalues.size, dtype=bool)
        mask[self.zero_indices] = False
        return self.eigenvalues[mask]

    @property
    def spectral_gap(self) -> float:
        """Smallest real part among the non-zero eigenvalues."""
        return self.min_real

    def projector(self) -> np.ndarray:
        """Spectral projector onto the zero cluster along the rest of the spectrum."""
        V0 = self.right_zero
        Z0 = self.left_zero
        Q = V0 @ np.linalg.solve(Z0.conj().T @ V0, Z0.conj().T)
        return np.real_if_close(Q, tol=1e6).real


def eigenspectrum(pencil: Pencil, m_expected: int | None = None, cluster_factor: float = CLUSTER_FACTOR, rank_tol: float = 1e-8) -> EigReport:
    """Dense generalized eigensolve of ``(A + B) x = lambda M x``."""
    K = pencil.K
    M = pencil.Mform
    lam, Yl, Vr = scipy.linalg.eig(K, M, left=True, right=True)
    if not np.all(np.isfinite(lam)):
        raise SolverFailure("pencil has infinite eigenvalues; mass form is singular")
    order = np.lexsort((lam.imag, lam.real))
    lam, Yl, Vr = lam[order], Yl[:, order], Vr[:, order]
    radius = cluster_factor * pencil.mu1
    mag = np.abs(lam)
    straddle = (mag > radius / 10.0) & (mag < radius * 10.0)
    if np.any(straddle):
        raise ClusterAmbiguous(f"eigenvalues {lam[straddle]} within a factor 10 of the cluster radius {radius:.3g}")
    zero = np.flatnonzero(mag <= radius)
    m = zero.size
    V0 = Vr[:, zero]
    Z0 = (Yl[:, zero].conj().T @ M).conj().T
    semisimple = True
    if m:
        cols = V0 / np.linalg.norm(V0, axis=0)
        s = np.linalg.svd(cols, compute_uv=False)
        semisimple = bool(s[-1] > rank_tol * s[0])
    rest = np.delete(lam, zero)
    min_abs_real = float(np.min(np.abs(rest.real))) if rest.size else math.inf
    min_real = float(np.min(rest.real)) if rest.size else math.inf
    verdict = ALL_POSITIVE if min_real > 0 else SOME_NEGATIVE
    return EigReport(
        eigenvalues=lam,
        zero_indices=zero,
        zero_multiplicity=int(m),
        semisimple=semisimple,
        min_abs_real=min_abs_real,
        min_real=min_real,
        verdict=verdict,
        cluster_radius=radius,
        right_zero=V0,
        left_zero=Z0,
        mass=M,
        m_expected=m_expected,
    )


def spectral_projection(u, report: EigReport):
    """Split reduced coordinates ``u`` into zero-cluster part and remainder."""
    if report.zero_multiplicity == 0:
        raise ValidationError("report has no zero cluster to project on")
    Q = report.projector()
    u = np.asarray(u, dtype=float)
    u0 = Q @ u
    return u0, u - u0


def analyze(setup: SystemSetup, basis: ReducedBasis | None = None, N: int = DEFAULT_MODES) -> EigReport:
    """Convenience wrapper: modes (if needed), pencil and spectrum for ``setup``."""
    if basis is None:
        basis = cached_modes(setup.cavity, setup.nu, N)
    return eigenspectrum(assemble_pencil(basis, setup), m_expected=setup.m)


@lru_cache(maxsize=8)
def cached_modes(cavity: Cavity, nu: float, N: int = DEFAULT_MODES) -> ReducedBasis:
    """Memoized :func:`stokes_modes`; the basis depends only on the grid and ``nu``."""
    return stokes_modes(cavity, float(nu), int(N))


# -- complete discrete operator ------------------------------------------------------
#
# The reduced basis resolves the zero cluster and the sign pattern well, but the
# slowest decaying mode of a stable rotation carries wall boundary layers that
# smooth Stokes modes capture only slowly.  Its rate is therefore refined by
# shift-invert iterations on the full staggered-grid operator, seeded with the
# reduced-basis estimates.


def _kron3(a, b, c):
    return sp.kron(sp.kron(a, b), c, format="csr")


def _second_difference(n, h, nodal):
    m = n - 1 if nodal else n
    main = np.full(m, -2.0)
    if not nodal:
        main[[0, -1]] = -3.0
    off = np.ones(m - 1)
    return sp.diags([off, main, off], [-1, 0, 1]) / (h * h)


def _cell_difference(n, h):
    """Cells to interior nodes."""
    return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)) / h


def _cells_to_nodes(n):
    return sp.diags([np.full(n - 1, 0.5), np.full(n - 1, 0.5)], [0, 1], shape=(n - 1, n))


def _nodes_to_cells(n):
    return sp.diags([np.full(n - 1, 0.5), np.full(n - 1, 0.5)], [0, -1], shape=(n, n - 1))


def _face_shape(cavity, a):
    return tuple(n - 1 if b == a else n for b, n in enumerate(cavity.grid))


def grid_operators(cavity: Cavity):
    """Sparse Laplacian, cell-to-face gradient and averaging maps on interior faces.

    Returns ``(lap, grad, average)`` where ``average[(src, dst)]`` maps the
    interior ``src`` faces to the interior ``dst`` faces by four-point means.
    """
    grid, h = cavity.grid, cavity.spacing
    lap_blocks, grad_blocks = [], []
    for a in range(3):
        parts = []
        for b in range(3):
            mats = [sp.identity(m) for m in _face_shape(cavity, a)]
            mats[b] = _second_difference(grid[b], h[b], nodal=(a == b))
            parts.append(_kron3(*mats))
        lap_blocks.append(parts[0] + parts[1] + parts[2])
        mats = [sp.identity(n) for n in grid]
        mats[a] = _cell_difference(grid[a], h[a])
        grad_blocks.append(_kron3(*mats))
    average = {}
    for src in range(3):
        for dst in range(3):
            if src == dst:
                continue
            mats = [sp.identity(n) for n in grid]
            mats[dst] = _cells_to_nodes(grid[dst])
            mats[src] = _nodes_to_cells(grid[src])
            average[(src, dst)] = _kron3(*mats)
    return sp.block_diag(lap_blocks, format="csr"), sp.vstack(grad_blocks, format="csr"), average


def coriolis_matrix(cavity: Cavity, omega):
    """Sparse matrix of ``V -> cross_with(omega, V)`` on interior faces."""
    _, _, avg = grid_operators(cavity)
    w = [float(c) for c in omega]
    blocks = [[None] * 3 for _ in range(3)]
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        blocks[a][c] = w[b] * avg[(c, a)]
        blocks[a][b] = -w[c] * avg[(b, a)]
    shapes = [int(np.prod(_face_shape(cavity, a))) for a in range(3)]
    for a in range(3):
        if blocks[a][a] is None:
            blocks[a][a] = sp.csr_matrix((shapes[a], shapes[a]))
    return sp.bmat(blocks, format="csr")


@dataclass(frozen=True, eq=False)
class FullOperator:
    """Sparse pencil ``K x = lambda M x`` in unknowns (faces, pressure, rotation).

    One pressure cell is pinned to remove the constant null mode; the
    remaining pressure rows carry no mass, so they only contribute infinite
    eigenvalues, which shift-invert maps to zero.
    """

    K: sp.csr_matrix
    M: sp.csr_matrix
    n_faces: int
    n_pressure: int

    def shifted_solver(self, sigma: complex):
        """Return ``b -> (K - sigma M)^{-1} b``.

        The sparse liquid-pressure block is factored once; the three dense
        rotation rows and columns are eliminated through their 3x3 Schur
        complement, which keeps the factorization free of dense fill.
        """
        A = (self.K - sigma * self.M).astype(complex).tocsr()
        n = A.shape[0] - 3
        lu = spla.splu(A[:n, :n].tocsc())
        c = A[:n, n:].toarray()
        r = A[n:, :n]
        d = A[n:, n:].toarray()
        Sc = lu.solve(c)
        schur = d - r @ Sc

        def solve(b):
            y = lu.solve(np.ascontiguousarray(b[:n], dtype=complex))
            z = np.linalg.solve(schur, b[n:] - r @ y)
            return np.concatenate([y - Sc @ z, z])

        return solve

    def nearest(self, sigma: complex, k: int = 8, tol: float = 1e-10, seed: int = 0) -> np.ndarray:
        """The ``k`` finite eigenvalues closest to ``sigma``."""
        solve = self.shifted_solver(sigma)
        M = self.M.astype(complex)
        n = M.shape[0]
        op = spla.LinearOperator((n, n), matvec=lambda x: solve(M @ x), dtype=complex)
        rng = np.random.default_rng(seed)
        v0 = solve(M @ rng.normal(size=n).astype(complex))
        theta, vecs = spla.eigs(op, k=k, which="LM", v0=v0, tol=tol, maxiter=5000)
        keep = np.abs(theta) > 1e-8 * np.max(np.abs(theta))
        lam = sigma + 1.0 / theta[keep]
        X = vecs[:, keep]
        res = np.linalg.norm(self.K @ X - (self.M @ X) * lam, axis=0)
        scale = (spla.norm(self.K, np.inf) + np.abs(lam) * spla.norm(self.M, np.inf)) * np.linalg.norm(X, axis=0)
        if np.any(res > 1e-6 * scale):
            raise NoConvergence(f"shift-invert residuals up to {np.max(res / scale):.2e}")
        return lam


def full_operator(setup: SystemSetup) -> FullOperator:
    """Assemble the linearization about ``setup.omega0`` on the whole grid."""
    cav = setup.cavity
    nu = setup.nu
    I = setup.inertia.diag
    w0 = np.asarray(setup.omega0, dtype=float)
    lap, grad, _ = grid_operators(cav)
    nf = lap.shape[0]
    grad = grad[:, 1:]  # pin the first pressure cell
    npres = grad.shape[1]
    X = np.column_stack([F.rigid_field(cav, e).ravel() for e in np.eye(3)])
    J = cav.cell_volume * X.T  # angular moment of interior-face fields
    cross0 = np.array([[0.0, -w0[2], w0[1]], [w0[2], 0.0, -w0[0]], [-w0[1], w0[0], 0.0]])
    cross_I0 = np.cross(np.eye(3), I * w0)  # rows: e_j x I w0
    rigid = cross0 @ np.diag(I) + cross_I0.T
    K = sp.bmat(
        [
            [-nu * lap + coriolis_matrix(cav, 2.0 * w0), grad, None],
            [grad.T, None, None],
            [sp.csr_matrix(cross0 @ J), None, sp.csr_matrix(rigid)],
        ],
        format="csr",
    )
    M = sp.bmat(
        [
            [sp.identity(nf), None, sp.csr_matrix(X)],
            [None, sp.csr_matrix((npres, npres)), None],
            [sp.csr_matrix(J), None, sp.diags(I)],
        ],
        format="csr",
    )
    return FullOperator(K, M, nf, npres)


def refine_spectrum(setup: SystemSetup, report: EigReport, n_seeds: int = 4, k: int = 8) -> np.ndarray:
    """Nonzero eigenvalues of the full discrete operator near the slowest reduced ones.

    Each of the ``n_seeds`` reduced eigenvalues with the smallest real parts
    (one per conjugate pair) seeds a shift-invert solve; the union of the
    results, closed under conjugation and with the zero cluster removed, is
    returned sorted by real part.
    """
    op = full_operator(setup)
    nz = report.nonzero
    seeds = nz[nz.imag >= -1e-12 * np.abs(nz)]
    seeds = seeds[np.argsort(seeds.real)][:n_seeds]
    found = []
    for sigma in seeds:
        # nudge off the exact reduced value so the shifted matrix stays regular
        lam = op.nearest(complex(sigma) * (1 + 1e-3) + 1e-3j * report.cluster_radius, k=k)
        found.extend(lam)
    found = np.array(found)
    found = found[np.abs(found) > report.cluster_radius]
    found = np.concatenate([found, found.conj()])
    found = _unique(found, tol=1e-8 * max(1.0, float(np.max(np.abs(found)))))
    return found[np.argsort(found.real)]


def _unique(values, tol):
    out = []
    for z in values:
        if all(abs(z - y) > tol for y in out):
            out.append(z)
    return np.array(out)
