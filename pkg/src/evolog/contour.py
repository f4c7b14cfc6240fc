"""Holomorphic functional calculus on circular contours.

``f(A)`` is evaluated from the Cauchy integral over a circle enclosing the
spectrum of ``A``, discretised with the N-point trapezoidal rule.  Each node
costs one resolvent solve.  The shifted logarithm ``Log(U + kappa I)`` and
its derivative along a direction ``dU`` are the two integrals used by the
generator representation in :mod:`evolog.evolution`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CertificateFailed, NoConvergence
from .operator_core import (
    LUFactorization,
    as_matrix,
    eigenvalues,
    identity,
    operator_norm_estimate,
)

DEFAULT_NODES = 64
MAX_NODES = 1024
LOG_TOL = 1e-10

# CI mutation hook: the self-test flips this to -1.0 to prove it notices
QUADRATURE_SIGN = 1.0


@dataclass(frozen=True)
class Contour:
    """Circle ``center + radius * exp(i theta)`` sampled at ``nodes`` points."""

    center: complex
    radius: float
    nodes: int = DEFAULT_NODES

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"contour radius must be positive, got {self.radius}")
        if not np.isfinite(complex(self.center)):
            raise ValueError("contour center must be finite")
        if self.nodes < 8 or self.nodes % 2:
            raise ValueError(f"contour needs an even number of nodes >= 8, got {self.nodes}")
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "nodes", int(self.nodes))

    @property
    def leftmost(self) -> float:
        return self.center.real - self.radius

    @property
    def avoids_branch_cut(self) -> bool:
        return self.leftmost > 0.0

    def with_nodes(self, nodes: int) -> "Contour":
        return Contour(self.center, self.radius, nodes)

    def points(self, nodes: int | None = None):
        """Nodes ``lambda_j`` and weights ``lambda'_j (2 pi / N) / (2 pi i)``."""
        N = self.nodes if nodes is None else nodes
        theta = 2.0 * np.pi * np.arange(N) / N
        e = np.exp(1j * theta)
        lam = self.center + self.radius * e
        dlam = 1j * self.radius * e
        weights = dlam * (2.0 * np.pi / N) / (2.0j * np.pi)
        return lam, QUADRATURE_SIGN * weights

    def margin(self, points) -> float:
        """``radius - max|p - center|``; positive iff all points are inside."""
        points = np.asarray(points)
        return float(self.radius - np.max(np.abs(points - self.center)))


@dataclass(frozen=True)
class KappaCertificate:
    kappa: complex
    norm_bound: float
    contour: Contour
    spectral_margin: float

    def to_doc(self) -> dict:
        c = self.contour
        return {
            "kappa": [self.kappa.real, self.kappa.imag],
            "norm_bound": self.norm_bound,
            "center": [c.center.real, c.center.imag],
            "radius": c.radius,
            "nodes": c.nodes,
            "spectral_margin": self.spectral_margin,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "KappaCertificate":
        contour = Contour(complex(*doc["center"]), doc["radius"], doc["nodes"])
        return cls(complex(*doc["kappa"]), float(doc["norm_bound"]), contour,
                   float(doc["spectral_margin"]))

    def dumps(self) -> str:
        return json.dumps(self.to_doc())


def _certify(U, kappa: complex, radius: float, norm_bound: float, nodes: int) -> KappaCertificate:
    kappa = complex(kappa)
    if kappa == 0:
        raise CertificateFailed("kappa must be nonzero")
    contour = Contour(kappa, radius, nodes)
    if not contour.avoids_branch_cut:
        raise CertificateFailed(
            f"contour reaches Re = {contour.leftmost:.3g} <= 0, crossing the Log branch cut"
        )
    shifted = eigenvalues(U).eigenvalues + kappa
    margin = contour.margin(shifted)
    if margin <= 0:
        raise CertificateFailed(f"spectrum of U + kappa I leaves the contour (margin {margin:.3g})")
    return KappaCertificate(kappa, float(norm_bound), contour, margin)


def choose_kappa(U, nodes: int = DEFAULT_NODES) -> KappaCertificate:
    """Pick ``kappa = 2R + 1`` and the circle of radius ``R + 0.5`` around it,
    with ``R`` the estimated norm of ``U``.

    The circle contains every eigenvalue of ``U + kappa I`` and keeps the
    origin and the negative real axis outside.
    """
    U = as_matrix(U, "U")
    R = operator_norm_estimate(U)
    return _certify(U, 2.0 * R + 1.0, R + 0.5, R, nodes)


def certify_kappa(U, kappa, nodes: int = DEFAULT_NODES) -> KappaCertificate:
    """Certificate for a caller-supplied shift.

    The circle is centred at ``kappa`` with radius ``R + 0.5`` when that
    stays right of the origin; otherwise the radius is placed halfway
    between the spectral radius of ``U`` and ``Re(kappa)``.
    """
    U = as_matrix(U, "U")
    kappa = complex(kappa)
    R = operator_norm_estimate(U)
    radius = R + 0.5
    if radius >= kappa.real:
        rho = eigenvalues(U).radius
        if rho >= kappa.real:
            raise CertificateFailed(
                f"no circle around kappa={kappa} separates the spectrum (radius {rho:.3g}) "
                "from the branch cut"
            )
        radius = 0.5 * (rho + kappa.real)
    return _certify(U, kappa, radius, R, nodes)


def common_certificate(matrices, nodes: int = DEFAULT_NODES) -> KappaCertificate:
    """One shift and contour valid for every matrix of a sweep.

    Raises ``CertificateFailed`` carrying the index of the first matrix the
    common contour does not cover.
    """
    matrices = [as_matrix(U, "U") for U in matrices]
    R = max(operator_norm_estimate(U) for U in matrices)
    cert = None
    for idx, U in enumerate(matrices):
        try:
            c = _certify(U, 2.0 * R + 1.0, R + 0.5, R, nodes)
        except CertificateFailed as exc:
            raise CertificateFailed(str(exc), index=idx) from exc
        if cert is None or c.spectral_margin < cert.spectral_margin:
            cert = c
    return cert


def check_certificate(U, cert: KappaCertificate) -> float:
    """Re-verify ``cert`` against ``U``; returns the spectral margin."""
    shifted = eigenvalues(U).eigenvalues + cert.kappa
    margin = cert.contour.margin(shifted)
    if margin <= 0:
        raise CertificateFailed(
            f"stale certificate: eigenvalue of U + kappa I outside contour (margin {margin:.3g})"
        )
    return margin


def _resolvent_terms(A, lam, weights, f_vals, middle=None):
    """Sum ``w_j f(l_j) R_j`` (or ``w_j f(l_j) R_j M R_j``) in index order."""
    n = A.shape[0]
    I = identity(n)
    total = np.zeros((n, n), dtype=np.complex128)
    for l, w, fl in zip(lam, weights, f_vals):
        lu = LUFactorization(l * I - A)
        if middle is None:
            term = lu.solve(I)
        else:
            term = lu.solve_right(lu.solve(middle))
        total += (w * fl) * term
    return total


def holomorphic_calculus(f, A, contour: Contour, nodes: int | None = None) -> np.ndarray:
    """``(1 / 2 pi i) * sum_j f(l_j) (l_j I - A)^{-1} l'_j (2 pi / N)``.

    ``f`` maps a complex scalar (or numpy array of them) to complex values
    and must be holomorphic on a neighbourhood of the disc.
    """
    A = as_matrix(A)
    lam, w = contour.points(nodes)
    f_vals = np.asarray([f(l) for l in lam], dtype=np.complex128)
    return _resolvent_terms(A, lam, w, f_vals)


def _adaptive(A, contour: Contour, f, middle, tol, max_nodes):
    N = contour.nodes
    lam, w = contour.points(N)
    current = _resolvent_terms(A, lam, w, f(lam), middle)
    while True:
        if 2 * N > max_nodes:
            raise NoConvergence(f"quadrature did not reach {tol:g} with {N} nodes")
        # the 2N-point rule reuses the N even nodes: T(2N) = T(N)/2 + odd/2
        lam2, w2 = contour.points(2 * N)
        odd = _resolvent_terms(A, lam2[1::2], w2[1::2], f(lam2[1::2]), middle)
        refined = 0.5 * current + odd
        change = np.linalg.norm(refined - current)
        scale = max(np.linalg.norm(current), 1.0)
        N *= 2
        current = refined
        if change <= tol * scale:
            return current, N


def shifted_log(U, cert: KappaCertificate, tol: float = LOG_TOL,
                max_nodes: int = MAX_NODES, return_nodes: bool = False):
    """Principal ``Log(U + kappa I)`` with node doubling until two successive
    rules agree to ``tol``."""
    U = as_matrix(U, "U")
    check_certificate(U, cert)
    B = U + cert.kappa * identity(U.shape[0])
    a, N = _adaptive(B, cert.contour, np.log, None, tol, max_nodes)
    return (a, N) if return_nodes else a


def shifted_log_fixed(U, cert: KappaCertificate, nodes: int | None = None) -> np.ndarray:
    """``Log(U + kappa I)`` by a single N-point rule (no adaptivity)."""
    U = as_matrix(U, "U")
    check_certificate(U, cert)
    B = U + cert.kappa * identity(U.shape[0])
    return holomorphic_calculus(np.log, B, cert.contour, nodes)


def shifted_log_derivative(U, dU, cert: KappaCertificate, adaptive: bool = True,
                           tol: float = LOG_TOL, max_nodes: int = MAX_NODES) -> np.ndarray:
    """Derivative of ``Log(U + kappa I)`` when ``U`` moves along ``dU``.

    ``(1 / 2 pi i) * sum_j Log(l_j) R_j dU R_j l'_j (2 pi / N)`` with
    ``R_j = (l_j I - U - kappa I)^{-1}``.
    """
    U = as_matrix(U, "U")
    dU = np.asarray(dU, dtype=np.complex128)
    if dU.shape != U.shape:
        raise ValueError("dU must have the same shape as U")
    check_certificate(U, cert)
    B = U + cert.kappa * identity(U.shape[0])
    if not adaptive:
        lam, w = cert.contour.points()
        return _resolvent_terms(B, lam, w, np.log(lam), dU)
    D, _ = _adaptive(B, cert.contour, np.log, dU, tol, max_nodes)
    return D
