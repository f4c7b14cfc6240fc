"""One 1+1-dimensional problem evolved along either coordinate.

Direction 0 treats ``x0`` as the evolution parameter and functions of ``x1``
as the state; direction 1 swaps the roles.  Transport ``u_0 = c u_1`` is
well posed both ways.  Heat ``u_0 = nu u_11`` read along ``x1`` becomes the
first-order system for ``(u, u_1)`` whose spectrum escapes to the right
half-plane under refinement, which :func:`illposedness_indicator` detects.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import GridMismatch, IllPosedDirection, Overflow, UnsupportedDirection
from .evolution import GeneratorFamily, build_family, periodic_second_difference
from .operator_core import eigenvalues

KINDS = ("transport", "heat")
PROFILES = ("gaussian", "fourier_mode")
DEFAULT_BLOWUP = 1e8


@dataclass(frozen=True)
class ProblemSpec:
    """Periodic problem on ``[-T, T) x [-L, L)`` sampled at ``n0 x n1`` points."""

    kind: str = "transport"
    c: float = 1.0
    nu: float = 0.1
    T: float = 1.0
    L: float = 1.0
    n0: int = 128
    n1: int = 128
    profile: str = "gaussian"
    width: float = 0.25
    center: float = 0.0
    mode: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if self.profile not in PROFILES:
            raise ValueError(f"profile must be one of {PROFILES}")
        if self.n0 < 8 or self.n1 < 8:
            raise ValueError("n0 and n1 must be at least 8")
        if not (self.T > 0 and self.L > 0):
            raise ValueError("T and L must be positive")
        if self.kind == "heat" and not self.nu > 0:
            raise ValueError("nu must be positive")
        if self.kind == "transport":
            # periodicity in x0 needs the characteristic shift over 2T to be whole periods
            ratio = self.c * self.T / self.L
            if self.c == 0 or abs(ratio - round(ratio)) > 1e-12:
                raise ValueError("transport needs c*T/L to be a nonzero integer")
        if self.profile == "gaussian" and not self.width > 0:
            raise ValueError("width must be positive")

    @property
    def x0(self) -> np.ndarray:
        return -self.T + (2.0 * self.T / self.n0) * np.arange(self.n0)

    @property
    def x1(self) -> np.ndarray:
        return -self.L + (2.0 * self.L / self.n1) * np.arange(self.n1)

    @property
    def dt(self) -> float:
        return 2.0 * self.T / self.n0

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n1

    def profile_values(self, x) -> np.ndarray:
        """Initial profile ``g`` extended ``2L``-periodically."""
        x = np.asarray(x, dtype=float)
        P = 2.0 * self.L
        if self.profile == "fourier_mode":
            return np.sin(math.pi * self.mode * x / self.L).astype(np.complex128)
        g = np.zeros_like(x)
        for p in range(-4, 5):
            g += np.exp(-((x - self.center + p * P) ** 2) / (2.0 * self.width**2))
        return g.astype(np.complex128)


@dataclass(frozen=True)
class SpaceTimeField:
    """``values[i, j] = u(x0[i], x1[j])``."""

    values: np.ndarray
    x0: np.ndarray
    x1: np.ndarray
    provenance: str = "exact"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (len(self.x0), len(self.x1)):
            raise GridMismatch(f"values {v.shape} vs grids ({len(self.x0)}, {len(self.x1)})")
        if not np.all(np.isfinite(v)):
            raise ValueError("field has non-finite entries")
        object.__setattr__(self, "values", v)

    def transpose(self) -> "SpaceTimeField":
        return SpaceTimeField(self.values.T.copy(), self.x1, self.x0, self.provenance)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("x0,x1,re,im\n")
            for i, a in enumerate(self.x0):
                for j, b in enumerate(self.x1):
                    z = self.values[i, j]
                    fh.write(f"{a:.17g},{b:.17g},{z.real:.17g},{z.imag:.17g}\n")

    @classmethod
    def from_csv(cls, path, provenance="exact") -> "SpaceTimeField":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        x0 = np.unique([float(r["x0"]) for r in rows])
        x1 = np.unique([float(r["x1"]) for r in rows])
        vals = np.array([float(r["re"]) + 1j * float(r["im"]) for r in rows])
        return cls(vals.reshape(len(x0), len(x1)), x0, x1, provenance)


@dataclass(frozen=True)
class DirectionReport:
    kind: str
    direction: int
    spectral_abscissa: float
    abscissa_trend: tuple
    wellposed: bool
    growth_bound: float


@dataclass(frozen=True)
class ResliceReport:
    """Continuity moduli of the two slicings of a field.

    ``modulus_x0`` is the largest ``||row_{i+1} - row_i|| / dx0`` (rows are
    functions of ``x1``); ``modulus_x1`` the same for columns.  The
    discreteness ratio of a slicing is its modulus over the other one.
    """

    modulus_x0: float
    modulus_x1: float
    steps_x0: np.ndarray
    steps_x1: np.ndarray

    @property
    def discreteness_x0(self) -> float:
        return _ratio(self.modulus_x0, self.modulus_x1)

    @property
    def discreteness_x1(self) -> float:
        return _ratio(self.modulus_x1, self.modulus_x0)


def _ratio(a, b):
    if b > 0:
        return a / b
    return math.inf if a > 0 else 1.0


def periodic_first_difference(n: int, length: float) -> np.ndarray:
    """Central difference ``(u_{i+1} - u_{i-1}) / 2dx`` on a periodic grid."""
    dx = length / n
    D = np.eye(n, k=1) - np.eye(n, k=-1)
    D[0, -1] = -1.0
    D[-1, 0] = 1.0
    return D.astype(np.complex128) / (2.0 * dx)


def discretize(spec: ProblemSpec, direction: int) -> GeneratorFamily:
    """Generator family for evolution along ``x0`` (0) or ``x1`` (1).

    The domain covers the grid points of the evolution axis, so
    ``build_family(gen, n - 1)`` lands exactly on them.
    """
    if direction == 0:
        span = (spec.n0 - 1) * spec.dt
        domain = (-spec.T, -spec.T + span)
        if spec.kind == "transport":
            K = spec.c * periodic_first_difference(spec.n1, 2 * spec.L)
        else:
            K = spec.nu * periodic_second_difference(spec.n1, 2 * spec.L)
    elif direction == 1:
        span = (spec.n1 - 1) * spec.dx
        domain = (-spec.L, -spec.L + span)
        Dt = periodic_first_difference(spec.n0, 2 * spec.T)
        if spec.kind == "transport":
            K = Dt / spec.c
        else:
            n = spec.n0
            K = np.zeros((2 * n, 2 * n), dtype=np.complex128)
            K[:n, n:] = np.eye(n)
            K[n:, :n] = Dt / spec.nu
    else:
        raise UnsupportedDirection(f"direction must be 0 or 1, got {direction}")
    return GeneratorFamily(K.shape[0], domain, lambda x: K, True, f"{spec.kind}_dir{direction}")


def exact_field(spec: ProblemSpec) -> SpaceTimeField:
    """Reference solution: characteristics for transport, Fourier modes for heat."""
    X0, X1 = np.meshgrid(spec.x0, spec.x1, indexing="ij")
    if spec.kind == "transport":
        vals = spec.profile_values(X1 + spec.c * X0)
    else:
        g = spec.profile_values(spec.x1)
        k = 2.0 * np.pi * np.fft.fftfreq(spec.n1, d=spec.dx)
        ghat = np.fft.fft(g)
        decay = np.exp(-spec.nu * np.outer(spec.x0 + spec.T, k**2))
        vals = np.fft.ifft(ghat[None, :] * decay, axis=1)
    return SpaceTimeField(vals, spec.x0, spec.x1, "exact")


def _evolve(grid, state0, axis_values, blowup, direction):
    states = [state0]
    ref = max(float(np.max(np.abs(state0))), np.finfo(float).tiny)
    state = state0
    for j, step in enumerate(grid.one_step):
        state = step @ state
        peak = float(np.max(np.abs(state))) if np.all(np.isfinite(state)) else math.inf
        if peak > blowup * ref:
            raise Overflow(
                f"direction {direction} blew up at x{direction} = {axis_values[j + 1]:.6g} "
                f"(index {j + 1}, amplification {peak / ref:.3g})",
                coordinate=(direction, j + 1, float(axis_values[j + 1])),
            )
        states.append(state)
    return np.array(states)


def solve_direction(spec: ProblemSpec, direction: int, override: bool = False,
                    report: DirectionReport | None = None, scheme: str = "midpoint_exp",
                    blowup: float = DEFAULT_BLOWUP) -> SpaceTimeField:
    """Evolve the initial slice across the whole rectangle along ``direction``.

    Direction 1 starts from the trace on ``x1 = -L``: the exact one for
    transport, the direction-0 solution (value and central-difference
    derivative) for heat.  Ill-posed directions raise ``IllPosedDirection``
    unless ``override``; a forced run that grows past ``blowup`` times its
    initial size raises ``Overflow`` with the coordinate.
    """
    if not override:
        report = report or illposedness_indicator(spec, direction)
        if not report.wellposed:
            raise IllPosedDirection(
                f"{spec.kind} along x{direction}: spectral abscissa grows "
                f"{report.abscissa_trend}", report)
    gen = discretize(spec, direction)
    try:
        if direction == 0:
            grid = build_family(gen, spec.n0 - 1, scheme)
            row0 = exact_field(spec).values[0] if spec.kind == "transport" else spec.profile_values(spec.x1)
            vals = _evolve(grid, row0, spec.x0, blowup, 0)
            return SpaceTimeField(vals, spec.x0, spec.x1, "evolved_in_x0")
        grid = build_family(gen, spec.n1 - 1, scheme)
        if spec.kind == "transport":
            col0 = exact_field(spec).values[:, 0]
            vals = _evolve(grid, col0, spec.x1, blowup, 1)
        else:
            base = solve_direction(spec, 0, override=True, scheme=scheme).values
            du = (base[:, 1] - base[:, -1]) / (2.0 * spec.dx)
            vals = _evolve(grid, np.concatenate([base[:, 0], du]), spec.x1, blowup, 1)
            vals = vals[:, : spec.n0]
    except Overflow as exc:
        if exc.coordinate is None:
            exc.coordinate = (direction, 1, float((spec.x1 if direction else spec.x0)[1]))
        raise
    return SpaceTimeField(vals.T, spec.x0, spec.x1, "evolved_in_x1")


def _weights(field: SpaceTimeField) -> float:
    # periodic trapezoid: uniform weights dx0 * dx1
    return float(field.x0[1] - field.x0[0]) * float(field.x1[1] - field.x1[0])


def _check_grids(f0: SpaceTimeField, f1: SpaceTimeField):
    if (f0.values.shape != f1.values.shape or not np.array_equal(f0.x0, f1.x0)
            or not np.array_equal(f0.x1, f1.x1)):
        raise GridMismatch("fields live on different grids")


def l2_norm(field: SpaceTimeField) -> float:
    return math.sqrt(_weights(field) * float(np.sum(np.abs(field.values) ** 2)))


def compare_directions(f0: SpaceTimeField, f1: SpaceTimeField) -> float:
    """Relative L2 difference ``||f0 - f1|| / ||f0||`` over the rectangle."""
    _check_grids(f0, f1)
    w = _weights(f0)
    diff = math.sqrt(w * float(np.sum(np.abs(f0.values - f1.values) ** 2)))
    return diff / l2_norm(f0)


def slice_errors(field: SpaceTimeField, reference: SpaceTimeField) -> np.ndarray:
    """Relative L2(x1) error of each x0-slice."""
    _check_grids(field, reference)
    num = np.linalg.norm(field.values - reference.values, axis=1)
    den = np.linalg.norm(reference.values, axis=1)
    return num / np.where(den > 0, den, 1.0)


def _abscissa(spec: ProblemSpec, direction: int) -> float:
    K = discretize(spec, direction)(0.0)
    return eigenvalues(K).abscissa


def illposedness_indicator(spec: ProblemSpec, direction: int, sizes=None) -> DirectionReport:
    """Spectral abscissa of the direction's generator under state-grid refinement.

    The state grid is ``x1`` for direction 0 and ``x0`` for direction 1; it
    is refined through ``n, 2n, 4n``.  The direction counts as well posed
    when the abscissa rises by at most ``0.1 |a(n)| + 1`` over the trend.
    """
    if direction not in (0, 1):
        raise UnsupportedDirection(f"direction must be 0 or 1, got {direction}")
    key = "n1" if direction == 0 else "n0"
    base = getattr(spec, key)
    sizes = tuple(sizes) if sizes is not None else (base, 2 * base, 4 * base)
    trend = tuple((n, _abscissa(replace(spec, **{key: n}), direction)) for n in sizes)
    a_first, a_last = trend[0][1], trend[-1][1]
    wellposed = (a_last - a_first) <= 0.1 * abs(a_first) + 1.0
    span = 2.0 * (spec.T if direction == 0 else spec.L)
    try:
        growth = math.exp(max(a_first, 0.0) * span)
    except OverflowError:
        growth = math.inf
    return DirectionReport(spec.kind, direction, a_first, trend, bool(wellposed), growth)


def _slice_steps(values: np.ndarray, step_along: float, step_across: float) -> np.ndarray:
    """``||s_{i+1} - s_i||_L2 / step_along`` for consecutive rows of ``values``."""
    v = np.ascontiguousarray(values)
    d = v[1:] - v[:-1]
    return np.sqrt(step_across * np.sum(np.abs(d) ** 2, axis=1)) / step_along


def reslice_discrete_trajectory(field: SpaceTimeField) -> ResliceReport:
    """Read the field as a path in x0 (rows) and as a path in x1 (columns)."""
    d0 = float(field.x0[1] - field.x0[0])
    d1 = float(field.x1[1] - field.x1[0])
    steps0 = _slice_steps(field.values, d0, d1)
    steps1 = _slice_steps(field.values.T, d1, d0)
    return ResliceReport(float(steps0.max()), float(steps1.max()), steps0, steps1)


def noisy_field(n0: int = 128, n1: int = 128, T: float = 1.0, L: float = 1.0,
                seed: int = 0) -> SpaceTimeField:
    """Field smooth (Gaussian) in x1 and white noise in x0."""
    spec = ProblemSpec(T=T, L=L, n0=n0, n1=n1)
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal(n0)
    vals = np.outer(xi, np.exp(-spec.x1**2))
    return SpaceTimeField(vals, spec.x0, spec.x1, "exact")


def gaussian_field(n0: int = 128, n1: int = 128, T: float = 1.0, L: float = 1.0) -> SpaceTimeField:
    spec = ProblemSpec(T=T, L=L, n0=n0, n1=n1)
    vals = np.outer(np.exp(-spec.x0**2), np.exp(-spec.x1**2))
    return SpaceTimeField(vals, spec.x0, spec.x1, "exact")
