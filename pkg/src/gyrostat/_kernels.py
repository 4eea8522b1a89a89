"""Compiled loops for the staggered-grid operators.

Each kernel works on one velocity component at a time in a frame where that
component is normal to axis 0.  Callers pass the three components as axis
permuted views ``(q_a, q_b, q_c)`` with ``(a, b, c)`` a cyclic order, which
keeps the sign pattern of the cross product unchanged.
"""

import numpy as np
from numba import njit

_opts = dict(cache=True, nogil=True)


@njit(**_opts)
def component_rhs(qa, qb, qc, ha, hb, hc, nu, wb, wc, nonlinear, out):
    """``nu lap(q_a) - adv(q_a) - (2 w x v)_a`` on the interior faces of ``q_a``.

    ``wb``, ``wc`` are already doubled rotation components.
    """
    na = qa.shape[0] - 1
    nb = qa.shape[1]
    nc = qa.shape[2]
    ia2 = 1.0 / (ha * ha)
    ib2 = 1.0 / (hb * hb)
    ic2 = 1.0 / (hc * hc)
    for i in range(1, na):
        for j in range(nb):
            for k in range(nc):
                q0 = qa[i, j, k]
                lap = (qa[i + 1, j, k] - 2.0 * q0 + qa[i - 1, j, k]) * ia2
                qm = qa[i, j - 1, k] if j > 0 else -q0
                qp = qa[i, j + 1, k] if j < nb - 1 else -q0
                lap += (qp - 2.0 * q0 + qm) * ib2
                qm = qa[i, j, k - 1] if k > 0 else -q0
                qp = qa[i, j, k + 1] if k < nc - 1 else -q0
                lap += (qp - 2.0 * q0 + qm) * ic2
                # Coriolis with four-point averages of the tangential components
                vc = 0.25 * (qc[i - 1, j, k] + qc[i, j, k] + qc[i - 1, j, k + 1] + qc[i, j, k + 1])
                vb = 0.25 * (qb[i - 1, j, k] + qb[i, j, k] + qb[i - 1, j + 1, k] + qb[i, j + 1, k])
                r = nu * lap - (wb * vc - wc * vb)
                if nonlinear:
                    hi = 0.5 * (qa[i, j, k] + qa[i + 1, j, k])
                    lo = 0.5 * (qa[i - 1, j, k] + qa[i, j, k])
                    adv = (hi * hi - lo * lo) / ha
                    # flux through the b-faces of the momentum cell
                    fp = 0.0
                    fm = 0.0
                    if j < nb - 1:
                        fp = 0.5 * (qb[i - 1, j + 1, k] + qb[i, j + 1, k]) * 0.5 * (q0 + qa[i, j + 1, k])
                    if j > 0:
                        fm = 0.5 * (qb[i - 1, j, k] + qb[i, j, k]) * 0.5 * (qa[i, j - 1, k] + q0)
                    adv += (fp - fm) / hb
                    fp = 0.0
                    fm = 0.0
                    if k < nc - 1:
                        fp = 0.5 * (qc[i - 1, j, k + 1] + qc[i, j, k + 1]) * 0.5 * (q0 + qa[i, j, k + 1])
                    if k > 0:
                        fm = 0.5 * (qc[i - 1, j, k] + qc[i, j, k]) * 0.5 * (qa[i, j, k - 1] + q0)
                    adv += (fp - fm) / hc
                    r -= adv
                out[i, j, k] = r


@njit(**_opts)
def component_laplacian(qa, ha, hb, hc, out):
    na = qa.shape[0] - 1
    nb = qa.shape[1]
    nc = qa.shape[2]
    for i in range(1, na):
        for j in range(nb):
            for k in range(nc):
                q0 = qa[i, j, k]
                lap = (qa[i + 1, j, k] - 2.0 * q0 + qa[i - 1, j, k]) / (ha * ha)
                qm = qa[i, j - 1, k] if j > 0 else -q0
                qp = qa[i, j + 1, k] if j < nb - 1 else -q0
                lap += (qp - 2.0 * q0 + qm) / (hb * hb)
                qm = qa[i, j, k - 1] if k > 0 else -q0
                qp = qa[i, j, k + 1] if k < nc - 1 else -q0
                lap += (qp - 2.0 * q0 + qm) / (hc * hc)
                out[i, j, k] = lap


@njit(**_opts)
def component_advect(qa, qb, qc, ha, hb, hc, out):
    na = qa.shape[0] - 1
    nb = qa.shape[1]
    nc = qa.shape[2]
    for i in range(1, na):
        for j in range(nb):
            for k in range(nc):
                q0 = qa[i, j, k]
                hi = 0.5 * (q0 + qa[i + 1, j, k])
                lo = 0.5 * (qa[i - 1, j, k] + q0)
                adv = (hi * hi - lo * lo) / ha
                fp = 0.0
                fm = 0.0
                if j < nb - 1:
                    fp = 0.5 * (qb[i - 1, j + 1, k] + qb[i, j + 1, k]) * 0.5 * (q0 + qa[i, j + 1, k])
                if j > 0:
                    fm = 0.5 * (qb[i - 1, j, k] + qb[i, j, k]) * 0.5 * (qa[i, j - 1, k] + q0)
                adv += (fp - fm) / hb
                fp = 0.0
                fm = 0.0
                if k < nc - 1:
                    fp = 0.5 * (qc[i - 1, j, k + 1] + qc[i, j, k + 1]) * 0.5 * (q0 + qa[i, j, k + 1])
                if k > 0:
                    fm = 0.5 * (qc[i - 1, j, k] + qc[i, j, k]) * 0.5 * (qa[i, j, k - 1] + q0)
                adv += (fp - fm) / hc
                out[i, j, k] = adv


@njit(**_opts)
def component_cross(qb, qc, wb, wc, out):
    """``(w x v)_a`` on the interior faces of component ``a``."""
    na = out.shape[0] - 1
    nb = out.shape[1]
    nc = out.shape[2]
    for i in range(1, na):
        for j in range(nb):
            for k in range(nc):
                vc = 0.25 * (qc[i - 1, j, k] + qc[i, j, k] + qc[i - 1, j, k + 1] + qc[i, j, k + 1])
                vb = 0.25 * (qb[i - 1, j, k] + qb[i, j, k] + qb[i - 1, j + 1, k] + qb[i, j + 1, k])
                out[i, j, k] = wb * vc - wc * vb


@njit(**_opts)
def component_grad_sq(qa, ha, hb, hc):
    """Sum of squared link differences of one component (see ``h1_seminorm``)."""
    na = qa.shape[0] - 1
    nb = qa.shape[1]
    nc = qa.shape[2]
    total = 0.0
    for i in range(na):
        for j in range(nb):
            for k in range(nc):
                d = (qa[i + 1, j, k] - qa[i, j, k]) / ha
                total += d * d
    for i in range(na + 1):
        wgt = 0.5 if i == 0 or i == na else 1.0
        part = 0.0
        for j in range(nb):
            for k in range(nc):
                q0 = qa[i, j, k]
                if j < nb - 1:
                    d = (qa[i, j + 1, k] - q0) / hb
                    part += d * d
                else:
                    part += 2.0 * (q0 / hb) * (q0 / hb)
                if j == 0:
                    part += 2.0 * (q0 / hb) * (q0 / hb)
                if k < nc - 1:
                    d = (qa[i, j, k + 1] - q0) / hc
                    part += d * d
                else:
                    part += 2.0 * (q0 / hc) * (q0 / hc)
                if k == 0:
                    part += 2.0 * (q0 / hc) * (q0 / hc)
        total += wgt * part
    return total


@njit(**_opts)
def component_dot(pa, qa):
    """Face-weighted sum of ``p q`` (half weight on the two wall planes)."""
    na = pa.shape[0] - 1
    total = 0.0
    for i in range(na + 1):
        wgt = 0.5 if i == 0 or i == na else 1.0
        part = 0.0
        for j in range(pa.shape[1]):
            for k in range(pa.shape[2]):
                part += pa[i, j, k] * qa[i, j, k]
        total += wgt * part
    return total


@njit(**_opts)
def angular_moment_sums(u, v, w, x, y, z):
    """Midpoint sums of ``x cross v`` with cell-centred component averages."""
    nx, ny, nz = x.size, y.size, z.size
    jx = 0.0
    jy = 0.0
    jz = 0.0
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                uc = 0.5 * (u[i, j, k] + u[i + 1, j, k])
                vc = 0.5 * (v[i, j, k] + v[i, j + 1, k])
                wc = 0.5 * (w[i, j, k] + w[i, j, k + 1])
                jx += y[j] * wc - z[k] * vc
                jy += z[k] * uc - x[i] * wc
                jz += x[i] * vc - y[j] * uc
    return np.array([jx, jy, jz])


CYCLE = ((0, 1, 2), (1, 2, 0), (2, 0, 1))


def permuted(components, a):
    """Components ``(q_a, q_b, q_c)`` viewed in the frame where axis ``a`` is first."""
    perm = CYCLE[a]
    return tuple(np.transpose(components[c], perm) for c in perm)
