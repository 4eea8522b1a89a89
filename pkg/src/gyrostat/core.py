"""Physical setup: the liquid-filled box cavity, the inertia tensor of the
coupled body-liquid system and its eigenspace structure.

The cavity is an axis-aligned box centred on the system's centre of mass,
with the central axes of inertia along the coordinate axes.  The solid shell
never appears geometrically; it only enters through the total moments
``(A, B, C)``.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    NotPermanentAxis,
    OrderViolation,
    SolidInertiaNonpositive,
    UnknownEigenvalue,
    ValidationError,
)

DEFAULT_DEG_TOL = 1e-9
MAX_ASPECT = 4.0


@dataclass(frozen=True)
class Cavity:
    """Box ``[-Lx/2, Lx/2] x [-Ly/2, Ly/2] x [-Lz/2, Lz/2]`` split in cells."""

    dims: tuple[float, float, float]
    grid: tuple[int, int, int]

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dims)
        grid = tuple(int(n) for n in self.grid)
        if len(dims) != 3 or len(grid) != 3:
            raise ValidationError("cavity needs three lengths and three cell counts")
        if not all(math.isfinite(d) and d > 0 for d in dims):
            raise ValidationError(f"cavity lengths must be positive and finite, got {dims}")
        if any(n < 8 or n % 2 for n in grid):
            raise ValidationError(f"cell counts must be even and >= 8, got {grid}")
        h = [d / n for d, n in zip(dims, grid)]
        if max(h) / min(h) > MAX_ASPECT:
            raise ValidationError(f"cell aspect ratio {max(h) / min(h):.3g} exceeds {MAX_ASPECT}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "grid", grid)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(d / n for d, n in zip(self.dims, self.grid))

    @property
    def cell_volume(self) -> float:
        hx, hy, hz = self.spacing
        return hx * hy * hz

    @property
    def volume(self) -> float:
        lx, ly, lz = self.dims
        return lx * ly * lz

    @property
    def radius(self) -> float:
        """Largest distance from the centre to a point of the box."""
        return 0.5 * math.sqrt(sum(d * d for d in self.dims))

    def centers(self, axis: int) -> np.ndarray:
        n, h, L = self.grid[axis], self.spacing[axis], self.dims[axis]
        return -0.5 * L + (np.arange(n) + 0.5) * h

    def nodes(self, axis: int) -> np.ndarray:
        n, h, L = self.grid[axis], self.spacing[axis], self.dims[axis]
        return -0.5 * L + np.arange(n + 1) * h

    def refined(self, factor: int = 2) -> "Cavity":
        return Cavity(self.dims, tuple(n * factor for n in self.grid))


def liquid_inertia(cavity: Cavity) -> np.ndarray:
    """Diagonal inertia tensor of a unit-density liquid filling the box.

    Returns the three principal moments about the centre, e.g. ``If1 =
    V (Ly^2 + Lz^2) / 12``.
    """
    lx, ly, lz = cavity.dims
    v = cavity.volume
    return np.array([v * (ly**2 + lz**2), v * (lx**2 + lz**2), v * (lx**2 + ly**2)]) / 12.0


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b))


@dataclass(frozen=True)
class InertiaModel:
    """Total central moments ``A <= B <= C`` of the coupled system.

    ``groups`` lists the distinct eigenvalues together with the coordinate
    axes spanning their eigenspaces, e.g. ``((1.0, (0, 1)), (3.0, (2,)))``
    for ``diag(1, 1, 3)``.
    """

    moments: tuple[float, float, float]
    liquid_moments: tuple[float, float, float] = (0.0, 0.0, 0.0)
    deg_tol: float = DEFAULT_DEG_TOL
    groups: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = tuple(float(x) for x in self.moments)
        lq = tuple(float(x) for x in self.liquid_moments)
        if len(m) != 3 or not all(math.isfinite(x) and x > 0 for x in m):
            raise ValidationError(f"moments must be three positive numbers, got {self.moments}")
        if not (m[0] <= m[1] <= m[2]):
            raise OrderViolation(f"moments must satisfy A <= B <= C, got {m}")
        for name, total, liq in zip("ABC", m, lq):
            if total - liq <= 0:
                raise SolidInertiaNonpositive(
                    f"{name} = {total:g} does not exceed the liquid moment {liq:g}"
                )
        object.__setattr__(self, "moments", m)
        object.__setattr__(self, "liquid_moments", lq)
        object.__setattr__(self, "deg_tol", float(self.deg_tol))
        object.__setattr__(self, "groups", _group_moments(m, self.deg_tol))

    @property
    def diag(self) -> np.ndarray:
        return np.array(self.moments)

    @property
    def tensor(self) -> np.ndarray:
        return np.diag(self.moments)

    def group_of(self, lam: float):
        for value, axes in self.groups:
            if _close(value, lam, self.deg_tol):
                return value, axes
        raise UnknownEigenvalue(f"{lam!r} is not a central moment of {self.moments}")

    def permanent_group(self, omega: Sequence[float]):
        """Return ``(lambda, axes)`` of the eigenspace containing ``omega``."""
        w = np.asarray(omega, dtype=float)
        norm = np.linalg.norm(w)
        if norm == 0:
            raise NotPermanentAxis("the zero vector spans no rotation axis")
        for value, axes in self.groups:
            off = [i for i in range(3) if i not in axes]
            if np.all(np.abs(w[off]) <= self.deg_tol * norm):
                return value, axes
        raise NotPermanentAxis(f"{tuple(float(x) for x in w)} is not a permanent rotation axis of diag{self.moments}")


def _group_moments(m, tol):
    groups = [[m[0], [0]]]
    for i in (1, 2):
        if _close(m[i], groups[-1][0], tol):
            groups[-1][1].append(i)
        else:
            groups.append([m[i], [i]])
    return tuple((float(np.mean([m[i] for i in axes])), tuple(axes)) for _, axes in groups)


def eigenspace_of(lam: float, inertia: InertiaModel) -> tuple[np.ndarray, int]:
    """Orthonormal basis (as columns) of the eigenspace S(lam) and its dimension."""
    _, axes = inertia.group_of(lam)
    basis = np.eye(3)[:, list(axes)]
    return basis, len(axes)


@dataclass(frozen=True)
class SystemSetup:
    cavity: Cavity
    inertia: InertiaModel
    nu: float
    omega0: tuple[float, float, float]
    lam: float | None = field(default=None, compare=False)
    basis: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def m(self) -> int:
        return self.basis.shape[1]

    @property
    def moments(self) -> np.ndarray:
        return self.inertia.diag

    def fingerprint(self) -> str:
        cav = self.cavity
        blob = struct.pack(
            "<3I3dd3d3d",
            *cav.grid,
            *cav.dims,
            self.nu,
            *self.inertia.moments,
            *self.omega0,
        )
        return hashlib.sha256(blob).hexdigest()


def build_system(
    dims,
    grid,
    nu: float,
    moments,
    omega0=(0.0, 0.0, 1.0),
    deg_tol: float = DEFAULT_DEG_TOL,
    allow_zero_omega: bool = False,
) -> SystemSetup:
    """Validate raw values and assemble a :class:`SystemSetup`.

    ``omega0`` is the reference permanent rotation; it must be an eigenvector
    of ``diag(A, B, C)``.  A zero ``omega0`` is only accepted with
    ``allow_zero_omega`` (spectral sanity checks), in which case every
    direction is stationary and S is all of R^3.
    """
    cavity = Cavity(tuple(dims), tuple(grid))
    nu = float(nu)
    if not (math.isfinite(nu) and nu > 0):
        raise ValidationError(f"viscosity must be positive, got {nu}")
    inertia = InertiaModel(tuple(moments), tuple(liquid_inertia(cavity)), deg_tol)
    w = tuple(float(x) for x in omega0)
    if len(w) != 3 or not all(math.isfinite(x) for x in w):
        raise ValidationError(f"omega0 must be three finite numbers, got {omega0}")
    if not any(w):
        if not allow_zero_omega:
            raise NotPermanentAxis("omega0 = 0 is only allowed in spectral sanity mode")
        return SystemSetup(cavity, inertia, nu, w, None, np.eye(3))
    lam, _ = inertia.permanent_group(w)
    basis, _ = eigenspace_of(lam, inertia)
    return SystemSetup(cavity, inertia, nu, w, lam, basis)
