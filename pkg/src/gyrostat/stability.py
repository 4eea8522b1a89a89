"""Closed-form stability decisions for permanent rotations and exponential
rate fitting of simulated time series."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_DEG_TOL, InertiaModel
from .errors import ValidationError, WindowEmpty

STABLE = "Stable"
UNSTABLE = "Unstable"
STABLE_CASES = ("i", "ii", "iii")


@dataclass(frozen=True)
class StabilityVerdict:
    case_id: str
    verdict: str
    lam: float
    m: int

    @property
    def stable(self) -> bool:
        return self.verdict == STABLE

    def __str__(self):
        return f"case {self.case_id}: {self.verdict}"


def _unit(e) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if e.shape != (3,) or not np.all(np.isfinite(e)):
        raise ValidationError(f"axis must be three finite numbers, got {e!r}")
    n = np.linalg.norm(e)
    if n == 0:
        raise ValidationError("axis must be non-zero")
    return e / n


def classify(A: float, B: float, C: float, e, deg_tol: float = DEFAULT_DEG_TOL) -> StabilityVerdict:
    """Stability of the permanent rotation about ``e`` for moments ``A <= B <= C``.

    Degeneracy is detected in the order triple, pair, distinct.  Rotations
    about the axis of the largest moment (or any axis when all moments agree)
    are stable; the other permanent axes are unstable.

    Raises
    ------
    NotPermanentAxis
        ``e`` is not an eigenvector of ``diag(A, B, C)``.
    """
    inertia = InertiaModel((A, B, C), deg_tol=deg_tol)
    lam, axes = inertia.permanent_group(_unit(e))
    groups = inertia.groups
    if len(groups) == 1:
        case = "i"
    elif len(groups) == 2:
        if groups[0][1] == (0, 1):  # A = B < C
            case = "vi" if axes == (0, 1) else "ii"
        else:  # A < B = C
            case = "iii" if axes == (1, 2) else "iv"
    else:
        case = {(0,): "iv", (1,): "v", (2,): "ii"}[axes]
    verdict = STABLE if case in STABLE_CASES else UNSTABLE
    return StabilityVerdict(case, verdict, float(lam), len(axes))


def steady_coupling_matrix(inertia, omega0) -> np.ndarray:
    """Matrix of ``w -> omega0 x I w + w x I omega0``."""
    I = np.asarray(getattr(inertia, "diag", inertia), dtype=float)
    w0 = np.asarray(omega0, dtype=float)
    E = np.eye(3)
    return np.column_stack([np.cross(w0, I * E[j]) + np.cross(E[j], I * w0) for j in range(3)])


def steady_coupling_nullspace(inertia, omega0, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of :func:`steady_coupling_matrix`."""
    I = np.asarray(getattr(inertia, "diag", inertia), dtype=float)
    w0 = np.asarray(omega0, dtype=float)
    if not np.any(w0):
        raise ValidationError("omega0 must be non-zero")
    K = steady_coupling_matrix(I, w0)
    _, s, vt = np.linalg.svd(K)
    scale = np.linalg.norm(w0) * np.max(I)
    rank = int(np.sum(s > rtol * scale))
    return vt[rank:].T


def principal_angles(U: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Principal angles (radians) between the column spans of ``U`` and ``V``."""
    qu, _ = np.linalg.qr(U)
    qv, _ = np.linalg.qr(V)
    s = np.linalg.svd(qu.T @ qv, compute_uv=False)
    return np.arccos(np.clip(s, -1.0, 1.0))


class Attainability(str, enum.Enum):
    MAX_AXIS = "GuaranteedMaxAxis"
    DEGENERATE_SUBSPACE = "GuaranteedDegenerateSubspace"
    NONE = "NoGuarantee"

    def __str__(self):
        return self.value


def attainability(E0: float, omega0, A: float, B: float, C: float, deg_tol: float = DEFAULT_DEG_TOL) -> Attainability:
    """Which permanent-rotation axis the motion is guaranteed to settle on.

    ``E0`` is the relative kinetic energy of the liquid at the start and
    ``omega0`` the rotation ``I^{-1} M(0)`` fixed by the total angular
    momentum.  A vanishing momentum and the fully symmetric body give no
    guarantee.
    """
    E0 = float(E0)
    if not (math.isfinite(E0) and E0 >= 0):
        raise ValidationError(f"E0 must be a non-negative number, got {E0}")
    inertia = InertiaModel((A, B, C), deg_tol=deg_tol)
    w = np.asarray(omega0, dtype=float)
    if w.shape != (3,) or not np.all(np.isfinite(w)):
        raise ValidationError(f"omega0 must be three finite numbers, got {omega0!r}")
    if not np.any(w):
        return Attainability.NONE
    A, B, C = inertia.moments
    w1, w2, w3 = w**2
    pattern = tuple(axes for _, axes in inertia.groups)
    if pattern == ((0, 1, 2),):
        return Attainability.NONE
    if pattern == ((0, 1), (2,)):
        ok = E0 <= (C - A) * C / (2 * A) * w3
        return Attainability.MAX_AXIS if ok else Attainability.NONE
    if pattern == ((0,), (1, 2)):
        ok = E0 <= B * (B - A) / (2 * A) * (w2 + w3)
        return Attainability.DEGENERATE_SUBSPACE if ok else Attainability.NONE
    first = E0 + A / (2 * B) * (B - A) * w1 <= C / (2 * B) * (C - B) * w3
    second = E0 <= B / (2 * A) * (B - A) * w2 + C / (2 * A) * (C - A) * w3
    return Attainability.MAX_AXIS if first and second else Attainability.NONE


# -- exponential fits -----------------------------------------------------------------


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line through ``log y`` on the selected window.

    ``rate`` is the magnitude of the slope; ``slope`` keeps its sign.
    """

    rate: float
    r_squared: float
    window: tuple[float, float]
    quantity: str
    slope: float
    intercept: float
    n_samples: int

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "rate": self.rate,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "slope": self.slope,
            "n_samples": self.n_samples,
        }


def _line_fit(t, y, quantity) -> DecayFit:
    logy = np.log(y)
    slope, intercept = np.polyfit(t, logy, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((logy - pred) ** 2))
    ss_tot = float(np.sum((logy - logy.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(
        abs(float(slope)), min(max(r2, 0.0), 1.0), (float(t[0]), float(t[-1])),
        quantity, float(slope), float(intercept), int(t.size),
    )


def _as_series(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValidationError("t and y must be 1-d arrays of equal length")
    return t, y


def fit_decay(t, y, quantity: str = "y", window=(1e-8, 1e-3), min_samples: int = 3) -> DecayFit:
    """Exponential decay rate of ``y(t)`` after it has fallen into ``window``.

    The window is amplitude based: samples after the peak whose values lie in
    ``[window[0], window[1]] * max(y)``.
    """
    t, y = _as_series(t, y)
    finite = np.isfinite(y)
    if not finite.any():
        raise WindowEmpty(f"{quantity}: no finite samples")
    peak = int(np.nanargmax(np.where(finite, y, -np.inf)))
    ymax = y[peak]
    if not ymax > 0:
        raise WindowEmpty(f"{quantity}: series is not positive")
    lo, hi = window[0] * ymax, window[1] * ymax
    sel = np.zeros_like(finite)
    sel[peak:] = True
    sel &= finite & (y >= lo) & (y <= hi)
    if sel.sum() < min_samples:
        raise WindowEmpty(f"{quantity} never enters [{window[0]:g}, {window[1]:g}] x max")
    return _line_fit(t[sel], y[sel], quantity)


def fit_growth(t, y, quantity: str = "y", window=(10.0, 0.1), min_samples: int = 3) -> DecayFit:
    """Exponential growth rate of ``y(t)`` before saturation.

    The window starts once ``y`` exceeds ``window[0]`` times its minimum
    before the peak and ends when it reaches ``window[1]`` times the peak.
    """
    t, y = _as_series(t, y)
    finite = np.isfinite(y)
    yy = np.where(finite, y, -np.inf)
    peak = int(np.argmax(yy))
    if peak == 0:
        raise WindowEmpty(f"{quantity} never grows")
    base = int(np.argmin(np.where(finite[: peak + 1], y[: peak + 1], np.inf)))
    lo, hi = window[0] * y[base], window[1] * y[peak]
    sel = np.zeros_like(finite)
    sel[base : peak + 1] = True
    sel &= finite & (y >= lo) & (y <= hi)
    if sel.sum() < min_samples:
        raise WindowEmpty(f"{quantity}: growth window [{lo:.3g}, {hi:.3g}] holds too few samples")
    return _line_fit(t[sel], y[sel], quantity)


def growth_factor(y) -> float:
    """Largest value reached relative to the starting value."""
    y = np.asarray(y, dtype=float)
    return float(np.nanmax(y) / y[0])
