"""Evolution families built from generator families, and the logarithmic
representation of their generators.

A family ``U(t, s)`` lives on a uniform grid ``x_0 < ... < x_M`` as a list of
one-step propagators; longer propagators are ordered products, so the
semigroup laws ``U(t, r) U(r, s) = U(t, s)`` and ``U(s, s) = I`` hold by
construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Callable

import numpy as np

from .contour import (
    KappaCertificate,
    check_certificate,
    choose_kappa,
    common_certificate,
    shifted_log,
    shifted_log_derivative,
)
from .errors import (
    BackwardNotAvailable,
    CertificateFailed,
    OutOfDomain,
    RepresentationNotInvertible,
    SingularMatrix,
)
from .operator_core import (
    LUFactorization,
    as_matrix,
    commutator_residual,
    identity,
    matrix_exp,
    norm2,
)

SCHEMES = ("midpoint_exp", "cf4")
RECOVERY_COND_LIMIT = 1e12

_SQRT3 = math.sqrt(3.0)
_CF4_NODES = (0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0)
_CF4_A1 = (3.0 - 2.0 * _SQRT3) / 12.0
_CF4_A2 = (3.0 + 2.0 * _SQRT3) / 12.0


@dataclass(frozen=True)
class GeneratorFamily:
    """Parameter-dependent generator ``x -> K(x)`` on ``domain = (lo, hi)``."""

    dim: int
    domain: tuple
    eval: Callable[[float], np.ndarray]
    commuting_flag: bool = False
    name: str = "custom"

    def __post_init__(self):
        lo, hi = (float(v) for v in self.domain)
        if not hi > lo:
            raise ValueError(f"empty domain {self.domain}")
        if self.dim < 1:
            raise ValueError("dim must be positive")
        object.__setattr__(self, "domain", (lo, hi))

    def __call__(self, x: float) -> np.ndarray:
        K = as_matrix(self.eval(x), "K(x)")
        if K.shape[0] != self.dim:
            raise ValueError(f"K({x}) has dim {K.shape[0]}, expected {self.dim}")
        return K


@dataclass(frozen=True)
class PropagatorGrid:
    generator: GeneratorFamily
    steps: int
    one_step: tuple
    scheme: str = "midpoint_exp"

    @property
    def h(self) -> float:
        lo, hi = self.generator.domain
        return (hi - lo) / self.steps

    @property
    def dim(self) -> int:
        return self.generator.dim

    def x(self, j: int) -> float:
        return self.generator.domain[0] + j * self.h

    @property
    def nodes(self) -> np.ndarray:
        return self.generator.domain[0] + self.h * np.arange(self.steps + 1)


def _step_midpoint(gen, x, h):
    return matrix_exp(h * gen(x + 0.5 * h))


def _step_cf4(gen, x, h):
    A1 = gen(x + _CF4_NODES[0] * h)
    A2 = gen(x + _CF4_NODES[1] * h)
    first = matrix_exp(h * (_CF4_A2 * A1 + _CF4_A1 * A2))
    second = matrix_exp(h * (_CF4_A1 * A1 + _CF4_A2 * A2))
    return second @ first


def build_family(gen: GeneratorFamily, M: int, scheme: str = "midpoint_exp") -> PropagatorGrid:
    """Discretise ``dU/dx = K(x) U`` on ``M`` uniform steps.

    ``midpoint_exp`` uses ``exp(h K(x_j + h/2))`` (order 2); ``cf4`` is the
    fourth-order commutator-free scheme with two exponentials per step at
    the Gauss nodes.
    """
    if M < 2:
        raise ValueError("need at least 2 steps")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {SCHEMES}")
    lo, hi = gen.domain
    h = (hi - lo) / M
    stepper = _step_midpoint if scheme == "midpoint_exp" else _step_cf4
    steps = []
    previous_K = None
    for j in range(M):
        x = lo + j * h
        if scheme == "midpoint_exp":
            K = gen(x + 0.5 * h)
            # autonomous families: reuse the step instead of re-exponentiating
            if previous_K is not None and np.array_equal(K, previous_K):
                steps.append(steps[-1])
                continue
            previous_K = K
            steps.append(matrix_exp(h * K))
        else:
            steps.append(stepper(gen, x, h))
    return PropagatorGrid(gen, M, tuple(steps), scheme)


def _check_index(grid: PropagatorGrid, *idx):
    for i in idx:
        if not 0 <= i <= grid.steps:
            raise OutOfDomain(f"grid index {i} outside 0..{grid.steps}")


def propagator(grid: PropagatorGrid, j: int, k: int) -> np.ndarray:
    """``U(x_j, x_k)``; backward (``j < k``) only when every step inverts."""
    _check_index(grid, j, k)
    n = grid.dim
    U = identity(n)
    if j >= k:
        for step in grid.one_step[k:j]:
            U = step @ U
        return U
    for step in grid.one_step[j:k]:
        try:
            U = U @ LUFactorization(step).solve(identity(n))
        except SingularMatrix as exc:
            raise BackwardNotAvailable(f"one-step propagator is singular: {exc}") from exc
    return U


def pre_generator_fd(grid: PropagatorGrid, j: int, h_fd: float) -> np.ndarray:
    """One-sided quotient ``(U(x_j + h_fd, x_j) - I) / h_fd``."""
    m = int(round(h_fd / grid.h))
    if m < 1 or abs(m * grid.h - h_fd) > 1e-9 * grid.h:
        raise ValueError(f"h_fd={h_fd} is not a positive multiple of the grid step {grid.h}")
    if not 0 <= j <= grid.steps - m:
        raise OutOfDomain(f"x_{j} + h_fd leaves the grid")
    return (propagator(grid, j + m, j) - identity(grid.dim)) / h_fd


@dataclass
class RepresentationReport:
    """Diagnostics of ``K = (I - kappa (U + kappa I)^{-1})^{-1} d/dx Log(U + kappa I)``.

    Residuals are relative to ``||K||``.  ``recovery_residual`` and
    ``eq5_agreement`` are ``None`` when the corresponding inverse does not
    exist; the ``*_status`` fields then name the reason.
    """

    forward_residual: float
    factor_condition: float
    commutator: float
    recovery_residual: float | None = None
    eq5_agreement: float | None = None
    derivative_agreement: float | None = None
    kappa: complex = 0j
    recovery_status: str = "ok"
    eq5_status: str = "ok"

    def rows(self):
        """``(name, value)`` pairs in a fixed order; absent values are ``''``."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "kappa":
                out.append(("kappa_re", v.real))
                out.append(("kappa_im", v.imag))
            else:
                out.append((f.name, "" if v is None else v))
        return out


def _rel(num: float, K_norm: float) -> float:
    return num / K_norm if K_norm > 0 else num


def log_representation_matrices(U, K, cert: KappaCertificate | None = None,
                                D_fd=None) -> RepresentationReport:
    """Check the generator representation for one pair ``(U, K)``.

    ``D = d Log(U + kappa I)`` is taken along ``K U`` by contour quadrature.
    ``D_fd`` is an optional independent estimate of the same derivative.

    Raises ``RepresentationNotInvertible`` (report attached) when the factor
    ``I - kappa (U + kappa I)^{-1}`` is singular, which happens whenever
    ``U`` has a kernel.
    """
    U = as_matrix(U, "U")
    K = as_matrix(K, "K")
    if cert is None:
        cert = choose_kappa(U)
    n = U.shape[0]
    I = identity(n)
    kappa = cert.kappa
    D = shifted_log_derivative(U, K @ U, cert)
    shifted_inv = LUFactorization(U + kappa * I).solve(I)
    F = I - kappa * shifted_inv
    K_norm = norm2(K)

    report = RepresentationReport(
        forward_residual=_rel(norm2(D - F @ K), K_norm),
        factor_condition=float(np.linalg.cond(F)),
        commutator=commutator_residual(U, K),
        kappa=kappa,
    )
    if D_fd is not None:
        report.derivative_agreement = _rel(norm2(D - D_fd), K_norm)

    try:
        eq5 = (I + kappa * LUFactorization(U).solve(I)) @ D
    except SingularMatrix:
        eq5 = None
        report.eq5_status = BackwardNotAvailable.__name__

    try:
        F_lu = LUFactorization(F)
    except SingularMatrix:
        report.recovery_status = RepresentationNotInvertible.__name__
        raise RepresentationNotInvertible(
            "I - kappa (U + kappa I)^-1 is singular; U annihilates a vector", report
        ) from None
    K_hat = F_lu.solve(D)
    if report.factor_condition < RECOVERY_COND_LIMIT:
        report.recovery_residual = _rel(norm2(K_hat - K), K_norm)
    else:
        report.recovery_status = "ill_conditioned"
    if eq5 is not None:
        report.eq5_agreement = _rel(norm2(eq5 - K_hat), K_norm)
    return report


def _log_stencil(grid, j, k, m):
    return [j - 2 * m, j - m, j, j + m, j + 2 * m]


def fd_log_derivative(grid: PropagatorGrid, j: int, k: int, cert: KappaCertificate,
                      h_fd: float | None = None) -> np.ndarray:
    """Richardson-extrapolated central difference of ``Log(U(x, x_k) + kappa I)``
    at ``x = x_j``; default ``h_fd`` is two grid steps."""
    h_fd = 2 * grid.h if h_fd is None else h_fd
    m = int(round(h_fd / grid.h))
    if m < 1 or abs(m * grid.h - h_fd) > 1e-9 * grid.h:
        raise ValueError(f"h_fd={h_fd} is not a positive multiple of the grid step {grid.h}")
    idx = _log_stencil(grid, j, k, m)
    if idx[0] < k or idx[-1] > grid.steps:
        raise OutOfDomain(f"central stencil around x_{j} leaves [x_{k}, x_{grid.steps}]")
    a = {i: shifted_log(propagator(grid, i, k), cert) for i in idx if i != j}
    d1 = (a[j + m] - a[j - m]) / (2 * h_fd)
    d2 = (a[j + 2 * m] - a[j - 2 * m]) / (4 * h_fd)
    return (4.0 * d1 - d2) / 3.0


def log_representation(grid: PropagatorGrid, j: int, k: int,
                       cert: KappaCertificate | None = None,
                       h_fd: float | None = None) -> RepresentationReport:
    """Representation report for ``U = U(x_j, x_k)`` and ``K = K(x_j)``.

    When the central finite-difference stencil fits in ``[x_k, x_M]`` the
    derivative is also estimated that way and compared.  Without ``cert`` a
    common certificate for the whole stencil is chosen.
    """
    _check_index(grid, j, k)
    U = propagator(grid, j, k)
    K = grid.generator(grid.x(j))
    h_fd = 2 * grid.h if h_fd is None else h_fd
    m = int(round(h_fd / grid.h))
    idx = _log_stencil(grid, j, k, m)
    stencil_fits = idx[0] >= k and idx[-1] <= grid.steps
    if cert is None:
        mats = [propagator(grid, i, k) for i in idx] if stencil_fits else [U]
        cert = common_certificate(mats)
    D_fd = fd_log_derivative(grid, j, k, cert, h_fd) if stencil_fits else None
    return log_representation_matrices(U, K, cert, D_fd)


def representation_eq5(grid: PropagatorGrid, j: int, k: int,
                       cert: KappaCertificate | None = None) -> np.ndarray:
    """``(I + kappa U(x_k, x_j)) d/dx Log(U(x_j, x_k) + kappa I)``.

    Needs the backward propagator, so it raises ``BackwardNotAvailable`` for
    families whose steps are numerically singular.
    """
    U = propagator(grid, j, k)
    K = grid.generator(grid.x(j))
    if cert is None:
        cert = choose_kappa(U)
    backward = propagator(grid, k, j)
    D = shifted_log_derivative(U, K @ U, cert)
    return (identity(grid.dim) + cert.kappa * backward) @ D


def representation_eq5_matrices(U, K, cert: KappaCertificate | None = None) -> np.ndarray:
    U = as_matrix(U, "U")
    K = as_matrix(K, "K")
    if cert is None:
        cert = choose_kappa(U)
    try:
        U_inv = LUFactorization(U).solve(identity(U.shape[0]))
    except SingularMatrix as exc:
        raise BackwardNotAvailable(f"U is singular: {exc}") from exc
    D = shifted_log_derivative(U, K @ U, cert)
    return (identity(U.shape[0]) + cert.kappa * U_inv) @ D


def regularized_trajectory(grid: PropagatorGrid, k: int, cert: KappaCertificate | None,
                           u0) -> list:
    """``(x_j, (exp(Log(U(x_j, x_k) + kappa I)) - kappa I) u0)`` for ``j >= k``.

    One certificate serves the whole sweep; the first grid index it fails to
    cover is reported through ``CertificateFailed.index``.
    """
    _check_index(grid, k)
    u0 = np.asarray(u0, dtype=np.complex128)
    if u0.shape != (grid.dim,):
        raise ValueError(f"u0 must have shape ({grid.dim},)")
    Us = []
    U = identity(grid.dim)
    for j in range(k, grid.steps + 1):
        if j > k:
            U = grid.one_step[j - 1] @ U
        Us.append(U)
    if cert is None:
        try:
            cert = common_certificate(Us)
        except CertificateFailed as exc:
            exc.index = None if exc.index is None else k + exc.index
            raise
    for offset, U in enumerate(Us):
        try:
            check_certificate(U, cert)
        except CertificateFailed as exc:
            raise CertificateFailed(f"x_{k + offset}: {exc}", index=k + offset) from exc
    I = identity(grid.dim)
    out = []
    for offset, U in enumerate(Us):
        a = shifted_log(U, cert)
        out.append((grid.x(k + offset), (matrix_exp(a) - cert.kappa * I) @ u0))
    return out


# -- presets ----------------------------------------------------------------

def random_generator(n: int, seed: int = 0, scale: float = 1.0) -> np.ndarray:
    """Diagonalizable ``A = V diag(mu) V^{-1}`` with well-conditioned ``V``."""
    rng = np.random.default_rng(seed)
    mu = (rng.uniform(-1.0, 0.3, n) + 1j * rng.uniform(-1.0, 1.0, n)) * scale
    V = identity(n) + 0.3 * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)
    return V @ np.diag(mu) @ np.linalg.inv(V)


SCALINGS = {
    "cos": lambda x: 1.0 + 0.5 * math.cos(x),
    "sin": lambda x: 1.0 + 0.5 * math.sin(x),
    "linear": lambda x: 1.0 + 0.25 * x,
}


def constant_family(A, domain=(0.0, 1.0)) -> GeneratorFamily:
    A = as_matrix(A)
    return GeneratorFamily(A.shape[0], tuple(domain), lambda x: A, True, "constant")


def scaled_family(A, f="cos", domain=(0.0, 1.0)) -> GeneratorFamily:
    """``K(x) = f(x) A``; every member commutes with every other."""
    A = as_matrix(A)
    fn = SCALINGS[f] if isinstance(f, str) else f
    return GeneratorFamily(A.shape[0], tuple(domain), lambda x: fn(x) * A, True, "scaled")


def periodic_second_difference(n: int, length: float) -> np.ndarray:
    """3-point periodic Laplacian on ``n`` points over a period ``length``."""
    dx = length / n
    D2 = -2.0 * np.eye(n) + np.eye(n, k=1) + np.eye(n, k=-1)
    D2[0, -1] = D2[-1, 0] = 1.0
    return D2.astype(np.complex128) / dx**2


def stiff_heat_family(n: int = 16, nu: float = 1.0, domain=(0.0, 16.0)) -> GeneratorFamily:
    """``K = nu * D2`` on ``[-pi, pi)``; long steps make ``U`` numerically singular."""
    K = nu * periodic_second_difference(n, 2.0 * np.pi)
    return GeneratorFamily(n, tuple(domain), lambda x: K, True, "stiff_heat")
