"""Time integration of the coupled body-liquid system.

One step advances the total angular momentum by an exact rotation, updates
the liquid with a two-stage (Heun) explicit scheme followed by projection,
and recovers the angular velocity algebraically from ``M = I w + int x x v``.
The Euler force ``dw/dt x x`` enters the liquid update through its exact
time integral, ``-P((w_new - w_old) x x)``, so the recovery is an implicit
3x3 solve rather than a lagged guess.

In ``linearized`` mode the state holds the perturbation about the reference
permanent rotation ``omega0``: advection is dropped, the Coriolis term uses
``omega0`` and the body equation is ``dM/dt = -omega0 x M - lam omega x omega0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from . import fields as F
from .core import SystemSetup
from .errors import CflViolation, NonFinite, ValidationError
from .fields import FaceField

NONLINEAR = "nonlinear"
LINEARIZED = "linearized"

DIFFUSIVE_SAFETY = 0.2
ADVECTIVE_SAFETY = 0.5


@dataclass(frozen=True, eq=False)
class State:
    v: FaceField
    omega: np.ndarray
    omega_prev: np.ndarray
    M: np.ndarray
    t: float = 0.0
    step: int = 0
    mode: str = NONLINEAR

    def is_finite(self) -> bool:
        return (
            self.v.is_finite()
            and np.isfinite(self.omega).all()
            and np.isfinite(self.omega_prev).all()
            and np.isfinite(self.M).all()
        )


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    omega: np.ndarray
    M_norm: float
    a: np.ndarray
    omega_inf: np.ndarray
    omega_par: np.ndarray
    omega_perp: np.ndarray
    omega_star: np.ndarray
    E: float
    script_E: float
    G: float
    V: float
    l2v: float
    h1v: float
    E1: float = float("nan")
    energy_residual: float = 0.0


# -- rigid-body pieces --------------------------------------------------------


def rotation_matrix(omega, dt: float) -> np.ndarray:
    """Exact propagator of ``dM/dt = -omega x M`` over ``dt`` (constant omega)."""
    w = np.asarray(omega, dtype=float)
    speed = float(np.linalg.norm(w))
    if speed == 0.0:
        return np.eye(3)
    k = w / speed
    theta = -speed * dt
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + math.sin(theta) * K + (1.0 - math.cos(theta)) * (K @ K)


def rotate_M(M, omega, dt: float) -> np.ndarray:
    """Rotate ``M`` about ``omega`` by the angle ``-|omega| dt`` (Rodrigues)."""
    M = np.asarray(M, dtype=float)
    w = np.asarray(omega, dtype=float)
    speed = float(np.linalg.norm(w))
    if speed == 0.0:
        return M.copy()
    k = w / speed
    theta = -speed * dt
    c, s = math.cos(theta), math.sin(theta)
    return M * c + np.cross(k, M) * s + k * (k @ M) * (1.0 - c)


def recover_omega(M, V: FaceField, inertia) -> np.ndarray:
    """``omega = I^{-1} (M - int x x v)`` for the diagonal total inertia."""
    moments = inertia.diag if hasattr(inertia, "diag") else np.asarray(inertia, dtype=float)
    return (np.asarray(M, dtype=float) - F.angular_moment(V)) / moments


# -- integrator ----------------------------------------------------------------


@dataclass
class StepInfo:
    """Per-step bookkeeping returned by :meth:`Integrator.advance`."""

    dissipation: float  # nu * int ||grad v||^2 over the step (trapezoid)
    residual: float  # change of the conserved/Lyapunov quantity plus dissipation


class Integrator:
    """Precomputed operators for stepping one :class:`SystemSetup`.

    ``coupling_sweeps=None`` solves the angular-velocity coupling exactly.
    An integer instead starts from the lagged rate ``(w^n - w^{n-1})/dt`` and
    applies that many fixed-point sweeps.
    """

    def __init__(self, setup: SystemSetup, mode: str = NONLINEAR, coupling_sweeps: int | None = None):
        if mode not in (NONLINEAR, LINEARIZED):
            raise ValidationError(f"unknown mode {mode!r}")
        if mode == LINEARIZED and setup.lam is None:
            raise ValidationError("linearized mode needs a non-zero permanent rotation omega0")
        self.setup = setup
        self.mode = mode
        self.sweeps = coupling_sweeps
        cav = setup.cavity
        self.moments = setup.inertia.diag
        self.omega0 = np.asarray(setup.omega0, dtype=float)
        # projected rigid fields P(e_i x x) and their angular moments
        self.rigid = [F.project(F.rigid_field(cav, e))[0] for e in np.eye(3)]
        self.K = np.array([F.angular_moment(r) for r in self.rigid]).T
        self.K = 0.5 * (self.K + self.K.T)
        self.coupling = np.diag(self.moments) - self.K
        h = min(cav.spacing)
        self.dt_diffusive = DIFFUSIVE_SAFETY * h * h / (6.0 * setup.nu)
        self.h = h

    # -- helpers

    def rigid_combination(self, d_omega) -> FaceField:
        r = self.rigid
        return r[0] * d_omega[0] + r[1] * d_omega[1] + r[2] * d_omega[2]

    def dt_max(self, state: State) -> float:
        if state.mode == LINEARIZED:
            # the linear equations transport nothing with the perturbation itself
            speed = float(np.linalg.norm(self.omega0)) * self.setup.cavity.radius
        else:
            speed = state.v.max_abs() + float(np.linalg.norm(state.omega)) * self.setup.cavity.radius
        adv = ADVECTIVE_SAFETY * self.h / speed if speed > 0 else math.inf
        return min(self.dt_diffusive, adv)

    def rhs(self, v: FaceField, omega) -> FaceField:
        """Liquid forcing without pressure and Euler terms."""
        if self.mode == NONLINEAR:
            return F.momentum_rhs(v, self.setup.nu, omega)
        return F.momentum_rhs(v, self.setup.nu, self.omega0, nonlinear=False)

    def body_update(self, M, omega_mid, dt: float) -> np.ndarray:
        if self.mode == NONLINEAR:
            return rotate_M(M, omega_mid, dt)
        lam = self.setup.lam
        half = rotation_matrix(self.omega0, 0.5 * dt)
        forcing = -lam * np.cross(omega_mid, self.omega0)
        return rotate_M(M, self.omega0, dt) + dt * (half @ forcing)

    def couple(self, p: FaceField, M_new, omega_old, omega_prev, dt: float):
        """Return ``(v_new, omega_new)`` with ``I omega_new + J(v_new) = M_new``."""
        if self.sweeps is None:
            rhs = M_new - F.angular_moment(p) - self.K @ omega_old
            omega = np.linalg.solve(self.coupling, rhs)
            v = p - self.rigid_combination(omega - omega_old)
        else:
            rate = omega_old - omega_prev
            v = p - self.rigid_combination(rate)
            omega = recover_omega(M_new, v, self.moments)
            for _ in range(self.sweeps):
                v = p - self.rigid_combination(omega - omega_old)
                omega = recover_omega(M_new, v, self.moments)
        return v, recover_omega(M_new, v, self.moments)

    # -- stepping

    def advance(self, state: State, dt: float, check_cfl: bool = True) -> tuple[State, StepInfo]:
        if state.mode != self.mode:
            raise ValidationError(f"state mode {state.mode} does not match integrator {self.mode}")
        if check_cfl:
            limit = self.dt_max(state)
            if dt > limit * (1.0 + 1e-12):
                raise CflViolation(f"dt={dt:.4g} exceeds the stability bound {limit:.4g}")
        v0, w0, M0 = state.v, state.omega, state.M
        f0 = self.rhs(v0, w0)
        # stage 1: forward Euler predictor
        p1, _ = F.project(v0 + f0 * dt)
        M1 = self.body_update(M0, w0, dt)
        v1, w1 = self.couple(p1, M1, w0, state.omega_prev, dt)
        # stage 2: trapezoidal corrector
        f1 = self.rhs(v1, w1)
        p2, _ = F.project(v0 + (f0 + f1) * (0.5 * dt))
        M2 = self.body_update(M0, 0.5 * (w0 + w1), dt)
        v2, w2 = self.couple(p2, M2, w0, state.omega_prev, dt)
        new = State(v2, w2, np.array(w0, dtype=float), M2, state.t + dt, state.step + 1, state.mode)
        if not new.is_finite():
            raise NonFinite(f"non-finite state at step {new.step}, t={new.t:.6g}")
        g0 = F.h1_seminorm(v0) ** 2
        g1 = F.h1_seminorm(v2) ** 2
        nu = self.setup.nu
        if self.mode == NONLINEAR:
            dissipation = 0.5 * nu * dt * (g0 + g1)
            residual = script_energy(new, self.setup) - script_energy(state, self.setup) + dissipation
        else:
            dissipation = nu * dt * (g0 + g1)
            residual = (
                lyapunov_V(new, self.setup) - lyapunov_V(state, self.setup) + dissipation
            )
        return new, StepInfo(dissipation, residual)

    def step(self, state: State, dt: float) -> State:
        return self.advance(state, dt)[0]


@lru_cache(maxsize=8)
def integrator_for(setup: SystemSetup, mode: str = NONLINEAR, coupling_sweeps: int | None = None) -> Integrator:
    return Integrator(setup, mode, coupling_sweeps)


def step(s: State, setup: SystemSetup, dt: float) -> State:
    """Advance ``s`` by one coupled step of length ``dt``."""
    return integrator_for(setup, s.mode).step(s, dt)


def initial_state(setup: SystemSetup, v: FaceField | None = None, omega=None, mode: str = NONLINEAR) -> State:
    """Build a consistent state from a liquid field and angular velocity.

    ``omega`` defaults to ``omega0`` in nonlinear mode and to zero in
    linearized mode; ``M`` is computed from the definition.
    """
    v = FaceField.zeros(setup.cavity) if v is None else v
    if omega is None:
        omega = setup.omega0 if mode == NONLINEAR else np.zeros(3)
    omega = np.asarray(omega, dtype=float).copy()
    M = setup.inertia.diag * omega + F.angular_moment(v)
    return State(v, omega, omega.copy(), M, 0.0, 0, mode)


# -- diagnostics ----------------------------------------------------------------


def _split(vec, basis):
    par = basis @ (basis.T @ vec)
    return par, vec - par


def perturbation_omega(s: State, setup: SystemSetup) -> np.ndarray:
    if s.mode == LINEARIZED:
        return np.asarray(s.omega, dtype=float)
    return np.asarray(s.omega, dtype=float) - np.asarray(setup.omega0, dtype=float)


def script_energy(s: State, setup: SystemSetup) -> float:
    """Total kinetic energy ``(|v|^2 + w.Iw - 2 a.Iw)/2`` (with ``a.Iw = -w.J``)."""
    I = setup.inertia.diag
    J = F.angular_moment(s.v)
    w = s.omega
    return 0.5 * (F.l2_norm(s.v) ** 2 + float(w @ (I * w)) + 2.0 * float(w @ J))


def relative_energy(V: FaceField, setup: SystemSetup) -> float:
    """``E = (|v|^2 - a.I.a)/2`` with ``a = -I^{-1} int x x v``."""
    I = setup.inertia.diag
    J = F.angular_moment(V)
    return 0.5 * (F.l2_norm(V) ** 2 - float(J @ (J / I)))


def g_functional(omega_star, setup: SystemSetup) -> float:
    """``w*.I.w* - |I w*|^2 / lam`` for the reference eigenvalue ``lam``."""
    if setup.lam is None:
        return float("nan")
    I = setup.inertia.diag
    Iw = I * np.asarray(omega_star, dtype=float)
    return float(omega_star @ Iw - Iw @ Iw / setup.lam)


def lyapunov_V(s: State, setup: SystemSetup) -> float:
    row = diagnostics(s, setup)
    return row.V


def diagnostics(s: State, setup: SystemSetup, prev: State | None = None, energy_residual: float = 0.0) -> DiagnosticsRow:
    """Evaluate the energy functionals of one state.

    ``prev`` (the preceding sample) enables the backward-difference estimate
    of ``E1 = (|v_t|^2 - da/dt . I . da/dt)/2``.
    """
    I = setup.inertia.diag
    J = F.angular_moment(s.v)
    a = -J / I
    l2 = F.l2_norm(s.v)
    h1 = F.h1_seminorm(s.v)
    w = np.asarray(s.omega, dtype=float)
    pert = perturbation_omega(s, setup)
    w_par, w_perp = _split(pert, setup.basis)
    a_par, a_perp = _split(a, setup.basis)
    w_star = w_perp - a_perp
    E = 0.5 * (l2 * l2 - float(a @ (I * a)))
    sE = 0.5 * (l2 * l2 + float(w @ (I * w)) - 2.0 * float(a @ (I * w)))
    G = g_functional(w_star, setup) if setup.lam is not None else float("nan")
    E1 = float("nan")
    if prev is not None and s.t > prev.t:
        dt = s.t - prev.t
        vt = (s.v - prev.v) * (1.0 / dt)
        a_prev = -F.angular_moment(prev.v) / I
        adot = (a - a_prev) / dt
        E1 = 0.5 * (F.l2_norm(vt) ** 2 - float(adot @ (I * adot)))
    return DiagnosticsRow(
        t=s.t,
        omega=w.copy(),
        M_norm=float(np.linalg.norm(s.M)),
        a=a,
        omega_inf=w - a,
        omega_par=w_par,
        omega_perp=w_perp,
        omega_star=w_star,
        E=E,
        script_E=sE,
        G=G,
        V=2.0 * E + G,
        l2v=l2,
        h1v=h1,
        E1=E1,
        energy_residual=energy_residual,
    )


def estimate_c0(setup: SystemSetup, samples: int = 200, seed: int = 0) -> float:
    """Lower constant of ``c0 |v|^2 <= 2E <= |v|^2`` from random solenoidal fields.

    ``c0 = 1 - max a.I.a / |v|^2``.  The exact supremum is the top eigenvalue
    of ``I^{-1/2} K I^{-1/2}`` with ``K`` the Gram matrix of the projected
    rigid fields; random fields only bound it from below.
    """
    I = setup.inertia.diag
    worst = 0.0
    for k in range(samples):
        V = F.synth_solenoidal_ic(setup.cavity, seed + k, 1.0)
        J = F.angular_moment(V)
        worst = max(worst, float(J @ (J / I)) / F.l2_norm(V) ** 2)
    return 1.0 - worst


# -- driver ----------------------------------------------------------------------


@dataclass
class TimeSeries:
    rows: list = field(default_factory=list)
    status: str = "running"
    final_state: State | None = None
    checkpoints: list = field(default_factory=list)
    residual_peak: float = 0.0  # max |cumulative residual| over every step, not just samples

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    @property
    def t(self) -> np.ndarray:
        return self.column("t")


@dataclass
class RunConfig:
    t_end: float
    dt: float | None = None  # None: use the stability bound at t = 0
    sample_every: int = 1  # steps between diagnostics rows
    checkpoint_every: int = 0  # steps between checkpoints, 0 = never
    dt_fraction: float = 1.0  # fraction of the stability bound when dt is None
    stop: Callable | None = None  # stop(row) -> True ends the run early


def run(state: State, setup: SystemSetup, config: RunConfig, checkpoint_sink: Callable | None = None, coupling_sweeps: int | None = None) -> TimeSeries:
    """Integrate until ``t_end`` (or a non-finite state) and collect samples.

    The ``energy_residual`` column is cumulative: the change of the total
    energy (nonlinear) or of ``V = 2E + G`` (linearized) since the start of
    the run plus the dissipation accumulated meanwhile.
    """
    integ = integrator_for(setup, state.mode, coupling_sweeps)
    dt = config.dt
    if dt is None:
        dt = config.dt_fraction * integ.dt_max(state)
    series = TimeSeries()
    series.rows.append(diagnostics(state, setup))
    prev_sample = state
    cumulative = 0.0
    n_steps = int(math.ceil((config.t_end - state.t) / dt - 1e-9))
    current = state
    for k in range(n_steps):
        try:
            current, info = integ.advance(current, dt)
        except NonFinite:
            series.status = "diverged"
            series.final_state = current
            return series
        cumulative += info.residual
        series.residual_peak = max(series.residual_peak, abs(cumulative))
        if (k + 1) % config.sample_every == 0 or k + 1 == n_steps:
            row = diagnostics(current, setup, prev=prev_sample, energy_residual=cumulative)
            series.rows.append(row)
            prev_sample = current
            if config.stop is not None and config.stop(row):
                series.status = "stopped"
                series.final_state = current
                return series
        if config.checkpoint_every and (k + 1) % config.checkpoint_every == 0:
            series.checkpoints.append(current.step)
            if checkpoint_sink is not None:
                checkpoint_sink(current, setup)
    series.status = "completed"
    series.final_state = current
    return series


def with_time(s: State, t: float) -> State:
    return replace(s, t=t)
