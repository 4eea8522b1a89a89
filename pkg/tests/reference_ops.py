"""Slice-based numpy versions of the staggered-grid operators.

They share no code with the compiled kernels used by the package and serve
as an independent reference in the tests.
"""

import numpy as np

from gyrostat.fields import FaceField, fixed_sum


def _face_weights_sq_sum(q: np.ndarray, axis: int) -> float:
    """Sum of squares with half weight on the two wall planes along ``axis``."""
    inner = [slice(None)] * 3
    inner[axis] = slice(1, -1)
    ends = [slice(None)] * 3
    ends[axis] = [0, -1]
    return fixed_sum(q[tuple(inner)] ** 2) + 0.5 * fixed_sum(q[tuple(ends)] ** 2)


def inner(a: FaceField, b: FaceField) -> float:
    """Discrete L2 inner product (cell volume per face, half on wall faces)."""
    total = 0.0
    for axis, (p, q) in enumerate(zip(a.components, b.components)):
        inner_sl = [slice(None)] * 3
        inner_sl[axis] = slice(1, -1)
        ends = [slice(None)] * 3
        ends[axis] = [0, -1]
        total += fixed_sum(p[tuple(inner_sl)] * q[tuple(inner_sl)])
        total += 0.5 * fixed_sum(p[tuple(ends)] * q[tuple(ends)])
    return total * a.cavity.cell_volume


def l2_norm(V: FaceField) -> float:
    s = sum(_face_weights_sq_sum(q, ax) for ax, q in enumerate(V.components))
    return float(np.sqrt(s * V.cavity.cell_volume))


def h1_seminorm(V: FaceField) -> float:
    """Discrete ``||grad v||_2`` built from the same differences as :func:`laplacian`.

    Wall links use the ghost value, i.e. a difference ``2 q / h`` over half a
    cell, so that ``h1_seminorm(V)**2 == -inner(laplacian(V), V)`` for
    admissible fields.
    """
    h = V.cavity.spacing
    total = 0.0
    for a, q in enumerate(V.components):
        for b in range(3):
            d = np.diff(q, axis=b) / h[b]
            if b == a:
                total += fixed_sum(d**2)
                continue
            # half weight for the wall planes of component a (normal direction)
            sl_in = [slice(None)] * 3
            sl_in[a] = slice(1, -1)
            sl_end = [slice(None)] * 3
            sl_end[a] = [0, -1]
            total += fixed_sum(d[tuple(sl_in)] ** 2) + 0.5 * fixed_sum(d[tuple(sl_end)] ** 2)
            first = [slice(None)] * 3
            first[b] = [0, -1]
            wall = q[tuple(first)]
            total += 2.0 * (
                fixed_sum(wall[tuple(sl_in)] ** 2) + 0.5 * fixed_sum(wall[tuple(sl_end)] ** 2)
            ) / h[b] ** 2
    return float(np.sqrt(total * V.cavity.cell_volume))


def _ghost_pad(q: np.ndarray, axis: int) -> np.ndarray:
    first = np.take(q, [0], axis=axis)
    last = np.take(q, [-1], axis=axis)
    return np.concatenate([-first, q, -last], axis=axis)


def laplacian(V: FaceField) -> FaceField:
    """Seven-point vector Laplacian with no-slip ghost reflection."""
    h = V.cavity.spacing
    out = []
    for a, q in enumerate(V.components):
        r = np.zeros_like(q)
        sl = [slice(None)] * 3
        sl[a] = slice(1, -1)
        sl = tuple(sl)
        acc = np.diff(q, n=2, axis=a) / h[a] ** 2
        for b in range(3):
            if b == a:
                continue
            p = _ghost_pad(q[sl], b)
            acc = acc + np.diff(p, n=2, axis=b) / h[b] ** 2
        r[sl] = acc
        out.append(r)
    return FaceField(*out, V.cavity)


def _avg(q: np.ndarray, axis: int) -> np.ndarray:
    n = q.shape[axis]
    lo = np.take(q, range(0, n - 1), axis=axis)
    hi = np.take(q, range(1, n), axis=axis)
    return 0.5 * (lo + hi)


def _pad_zero(q: np.ndarray, axis: int) -> np.ndarray:
    pad = [(0, 0)] * 3
    pad[axis] = (1, 1)
    return np.pad(q, pad)


def advect(V: FaceField) -> FaceField:
    """Centred divergence-form ``(v . grad) v`` on the staggered grid.

    Momentum fluxes use two-point averages of the transporting and the
    transported components; for discretely solenoidal fields the form is
    energy neutral, ``inner(advect(V), V) == 0`` up to roundoff.
    """
    h = V.cavity.spacing
    comps = V.components
    out = []
    for a, q in enumerate(comps):
        r = np.zeros_like(q)
        sl = [slice(None)] * 3
        sl[a] = slice(1, -1)
        sl = tuple(sl)
        qc = _avg(q, a)
        acc = np.diff(qc * qc, axis=a) / h[a]
        qi = q[sl]
        for b in range(3):
            if b == a:
                continue
            carrier = _avg(comps[b], a)
            transported = _pad_zero(_avg(qi, b), b)
            acc = acc + np.diff(carrier * transported, axis=b) / h[b]
        r[sl] = acc
        out.append(r)
    return FaceField(*out, V.cavity)


def _to_faces(q: np.ndarray, src: int, dst: int) -> np.ndarray:
    """Four-point average of a ``src``-staggered component onto interior
    ``dst`` faces."""
    return _avg(_avg(q, dst), src)


def cross_with(omega, V: FaceField) -> FaceField:
    """``omega x v`` with the tangential components averaged onto each face.

    The averaging pairs are mutually adjoint, so ``inner(cross_with(w, V), V)``
    vanishes to roundoff.
    """
    ox, oy, oz = (float(c) for c in omega)
    u, v, w = V.components
    out = FaceField.zeros(V.cavity)
    out.u[1:-1] = oy * _to_faces(w, 2, 0) - oz * _to_faces(v, 1, 0)
    out.v[:, 1:-1] = oz * _to_faces(u, 0, 1) - ox * _to_faces(w, 2, 1)
    out.w[:, :, 1:-1] = ox * _to_faces(v, 1, 2) - oy * _to_faces(u, 0, 2)
    return out


def angular_moment(V: FaceField) -> np.ndarray:
    """Midpoint quadrature of ``int x cross v`` using cell-centre averages."""
    cav = V.cavity
    u, v, w = V.components
    uc, vc, wc = _avg(u, 0), _avg(v, 1), _avg(w, 2)
    x = cav.centers(0)[:, None, None]
    y = cav.centers(1)[None, :, None]
    z = cav.centers(2)[None, None, :]
    vol = cav.cell_volume
    return np.array(
        [
            fixed_sum(y * wc - z * vc),
            fixed_sum(z * uc - x * wc),
            fixed_sum(x * vc - y * uc),
        ]
    ) * vol
