"""Scenario files: a small sectioned ``key = value`` format.

Example::

    [cavity]
    dims = 1.4, 1.4, 1.4
    grid = 16, 16, 16

    [inertia]
    A = 1
    B = 2
    C = 3

    [sim]
    nu = 0.02
    omega0 = 0, 0, 1
    t_end = 40

    [ic]
    seed = 3
    v_h1 = 0.01
    omega = permanent+delta
    delta = 0.01

Blank lines and ``#`` comments are ignored.  Every key has a default except
the cavity, inertia, ``nu`` and ``omega0`` entries.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .. import dynamics as D
from .. import fields as F
from ..core import DEFAULT_DEG_TOL, SystemSetup, build_system
from ..errors import ParseError, ValidationError

SECTIONS = ("cavity", "inertia", "sim", "ic", "output")
FORMATS = ("csv", "plot", "checkpoint", "summary")
OMEGA_PERMANENT = "permanent"
OMEGA_DELTA = "permanent+delta"


@dataclass(frozen=True)
class Scenario:
    dims: tuple[float, float, float]
    grid: tuple[int, int, int]
    A: float
    B: float
    C: float
    nu: float
    omega0: tuple[float, float, float]
    deg_tol: float = DEFAULT_DEG_TOL
    mode: str = D.NONLINEAR
    t_end: float = 10.0
    dt: float | None = None  # None: stability bound at t = 0
    dt_fraction: float = 1.0
    sample_every: int = 10
    checkpoint_every: int = 0
    coupling_sweeps: int | None = None  # None: exact coupling solve
    seed: int = 0
    v_h1: float = 0.0
    omega: str | tuple[float, float, float] = OMEGA_PERMANENT
    delta: float = 0.0
    directory: str = "out"
    name: str = "run"
    formats: tuple[str, ...] = ("csv", "plot", "summary")

    def __post_init__(self):
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValidationError(f"t_end must be positive, got {self.t_end}")
        if self.sample_every <= 0:
            raise ValidationError(f"sample_every must be positive, got {self.sample_every}")
        if self.checkpoint_every < 0:
            raise ValidationError("checkpoint_every must be non-negative")
        if self.dt is not None and not (math.isfinite(self.dt) and self.dt > 0):
            raise ValidationError(f"dt must be positive, got {self.dt}")
        if not 0 < self.dt_fraction <= 1:
            raise ValidationError(f"dt_fraction must lie in (0, 1], got {self.dt_fraction}")
        if self.mode not in (D.NONLINEAR, D.LINEARIZED):
            raise ValidationError(f"mode must be nonlinear or linearized, got {self.mode!r}")
        if self.v_h1 < 0 or self.delta < 0:
            raise ValidationError("v_h1 and delta must be non-negative")
        if isinstance(self.omega, str) and self.omega not in (OMEGA_PERMANENT, OMEGA_DELTA):
            raise ValidationError(f"omega must be a vector, {OMEGA_PERMANENT!r} or {OMEGA_DELTA!r}")
        bad = [f for f in self.formats if f not in FORMATS]
        if bad:
            raise ValidationError(f"unknown output formats {bad}; choose from {FORMATS}")
        self.setup()  # delegate the physical checks

    # -- derived objects

    def setup(self) -> SystemSetup:
        return build_system(
            self.dims, self.grid, self.nu, (self.A, self.B, self.C), self.omega0, self.deg_tol
        )

    def initial_state(self, setup: SystemSetup | None = None) -> D.State:
        """Seeded liquid field plus the requested angular velocity.

        In linearized mode the angular velocity is the perturbation about
        ``omega0``; ``permanent`` then means zero.
        """
        setup = setup or self.setup()
        rng = np.random.default_rng(self.seed)
        v = F.synth_solenoidal_ic(setup.cavity, self.seed, self.v_h1)
        w0 = np.asarray(self.omega0, dtype=float)
        base = w0 if self.mode == D.NONLINEAR else np.zeros(3)
        if isinstance(self.omega, tuple):
            omega = np.asarray(self.omega, dtype=float)
        elif self.omega == OMEGA_PERMANENT:
            omega = base
        else:
            kick = rng.normal(size=3)
            omega = base + self.delta * np.linalg.norm(w0) * kick / np.linalg.norm(kick)
        return D.initial_state(setup, v, omega, self.mode)

    def run_config(self, stop=None) -> D.RunConfig:
        return D.RunConfig(
            t_end=self.t_end,
            dt=self.dt,
            sample_every=self.sample_every,
            checkpoint_every=self.checkpoint_every,
            dt_fraction=self.dt_fraction,
            stop=stop,
        )

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


# -- text format ------------------------------------------------------------------

_FLOAT3 = "float3"
_INT3 = "int3"

# key -> (section, kind)
_SCHEMA = {
    "dims": ("cavity", _FLOAT3),
    "grid": ("cavity", _INT3),
    "A": ("inertia", float),
    "B": ("inertia", float),
    "C": ("inertia", float),
    "deg_tol": ("inertia", float),
    "nu": ("sim", float),
    "omega0": ("sim", _FLOAT3),
    "mode": ("sim", str),
    "t_end": ("sim", float),
    "dt": ("sim", "auto_float"),
    "dt_fraction": ("sim", float),
    "sample_every": ("sim", int),
    "checkpoint_every": ("sim", int),
    "coupling_sweeps": ("sim", "exact_int"),
    "seed": ("ic", int),
    "v_h1": ("ic", float),
    "omega": ("ic", "omega"),
    "delta": ("ic", float),
    "directory": ("output", str),
    "name": ("output", str),
    "formats": ("output", "list"),
}
_REQUIRED = ("dims", "grid", "A", "B", "C", "nu", "omega0")


def _convert(kind, text):
    if kind is float:
        return float(text)
    if kind is int:
        return int(text)
    if kind is str:
        return text
    if kind == _FLOAT3 or kind == _INT3:
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("expected three comma-separated values")
        conv = float if kind == _FLOAT3 else int
        return tuple(conv(p) for p in parts)
    if kind == "auto_float":
        return None if text == "auto" else float(text)
    if kind == "exact_int":
        return None if text == "exact" else int(text)
    if kind == "omega":
        if text in (OMEGA_PERMANENT, OMEGA_DELTA):
            return text
        return _convert(_FLOAT3, text)
    if kind == "list":
        return tuple(p.strip() for p in text.split(",") if p.strip())
    raise AssertionError(kind)


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text; unknown sections or keys are errors."""
    section = None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ParseError("unterminated section header", lineno, col)
            section = stripped[1:-1].strip()
            if section not in SECTIONS:
                raise ParseError(f"unknown section [{section}]", lineno, col + 1)
            continue
        if "=" not in stripped:
            raise ParseError("expected 'key = value'", lineno, col)
        if section is None:
            raise ParseError("key outside of any section", lineno, col)
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA or _SCHEMA[key][0] != section:
            raise ParseError(f"unknown key {key!r} in [{section}]", lineno, col)
        if key in values:
            raise ParseError(f"duplicate key {key!r}", lineno, col)
        vcol = line.index("=") + 2 + (len(line.split("=", 1)[1]) - len(line.split("=", 1)[1].lstrip()))
        try:
            values[key] = _convert(_SCHEMA[key][1], value)
        except ValueError as exc:
            raise ParseError(f"bad value for {key!r}: {exc}", lineno, vcol) from None
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ParseError(f"missing required keys: {', '.join(missing)}")
    return Scenario(**values)


def _fmt(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(sc: Scenario) -> str:
    """Canonical text with every key written out."""
    out = []
    for section in SECTIONS:
        out.append(f"[{section}]")
        for key, (sec, kind) in _SCHEMA.items():
            if sec != section:
                continue
            value = getattr(sc, key)
            if kind == "exact_int" and value is None:
                text = "exact"
            else:
                text = _fmt(value)
            out.append(f"{key} = {text}")
        out.append("")
    return "\n".join(out)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
