"""Acceptance and invariant checks bound into one gate.

Every check is a function ``check(seed) -> (passed, detail)``.  Sizes are
fixed (``n <= 32``, grids ``<= 256``) so the whole table runs in well under
two minutes; the seed only changes which random matrices are drawn.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import contour as contour_mod
from .contour import (
    choose_kappa,
    holomorphic_calculus,
    shifted_log,
    shifted_log_derivative,
    shifted_log_fixed,
)
from .errors import BackwardNotAvailable, RepresentationNotInvertible
from .evolution import (
    build_family,
    constant_family,
    fd_log_derivative,
    log_representation,
    log_representation_matrices,
    pre_generator_fd,
    propagator,
    random_generator,
    regularized_trajectory,
    representation_eq5,
    scaled_family,
    stiff_heat_family,
)
from .operator_core import (
    commutator_residual,
    eigenvalues,
    identity,
    lu_solve,
    matrix_exp,
    norm2,
    operator_norm_estimate,
)
from .swap import (
    ProblemSpec,
    compare_directions,
    exact_field,
    gaussian_field,
    illposedness_indicator,
    noisy_field,
    reslice_discrete_trajectory,
    solve_direction,
)


@dataclass
class CheckResult:
    key: str
    title: str
    passed: bool
    detail: str
    seconds: float


def random_matrix(rng, n, scale=1.0):
    return scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2 * n)


def _rel(a, b):
    return norm2(a - b) / norm2(b)


# -- acceptance criteria ----------------------------------------------------

def ac_functional_calculus(seed):
    rng = np.random.default_rng(seed)
    worst = [0.0, 0.0, 0.0]
    t0 = time.perf_counter()
    for n in (2, 8, 32):
        U = random_matrix(rng, n)
        cert = choose_kappa(U)
        A = U + cert.kappa * identity(n)
        c = cert.contour.with_nodes(64)
        worst[0] = max(worst[0], norm2(holomorphic_calculus(lambda z: 1.0 + 0 * z, A, c) - identity(n)))
        worst[1] = max(worst[1], _rel(holomorphic_calculus(lambda z: z, A, c), A))
        worst[2] = max(worst[2], _rel(holomorphic_calculus(np.exp, A, c), matrix_exp(A)))
    elapsed = time.perf_counter() - t0
    ok = worst[0] <= 1e-10 and worst[1] <= 1e-10 and worst[2] <= 1e-8 and elapsed < 5
    return ok, f"f=1 {worst[0]:.2e}, f=id {worst[1]:.2e}, f=exp {worst[2]:.2e}, {elapsed:.2f}s"


def _round_trip_cases(rng):
    sizes = (2, 4, 8, 16, 32)
    for i in range(50):
        n = sizes[i % 5]
        U = random_matrix(rng, n, scale=rng.uniform(0.5, 3.0))
        if i < 10:
            # rank deficient by construction: zero out trailing columns
            r = max(1, n // 2)
            U[:, r:] = 0.0
        yield U


def ac_round_trip(seed):
    rng = np.random.default_rng(seed)
    worst, singular = 0.0, 0
    t0 = time.perf_counter()
    for U in _round_trip_cases(rng):
        if np.linalg.matrix_rank(U) < U.shape[0]:
            singular += 1
        cert = choose_kappa(U)
        B = U + cert.kappa * identity(U.shape[0])
        worst = max(worst, _rel(matrix_exp(shifted_log(U, cert)), B))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and singular >= 10 and elapsed < 20
    return ok, f"max rel err {worst:.2e} over 50 ({singular} singular), {elapsed:.2f}s"


def _commuting_grids(seed):
    A = random_generator(8, seed)
    yield "constant", build_family(constant_family(A), 16), 8
    yield "scaled", build_family(scaled_family(A, "cos"), 32), 16
    yield "scaled-cf4", build_family(scaled_family(A, "cos"), 32, "cf4"), 16


def ac_generator_identity(seed):
    t0 = time.perf_counter()
    parts, ok = [], True
    for name, grid, j in _commuting_grids(seed):
        rep = log_representation(grid, j, 0)
        h_fd = 2 * grid.h
        good = (rep.forward_residual <= 1e-6 and rep.eq5_agreement is not None
                and rep.eq5_agreement <= 1e-8
                and rep.derivative_agreement <= max(1e-6, 10 * h_fd**2))
        ok &= good
        parts.append(f"{name}: fwd {rep.forward_residual:.1e} eq5 {rep.eq5_agreement:.1e}")
    elapsed = time.perf_counter() - t0
    return ok and elapsed < 30, "; ".join(parts) + f", {elapsed:.2f}s"


def ac_beyond_invertibility(seed):
    t0 = time.perf_counter()
    grid = build_family(stiff_heat_family(), 8)
    U = propagator(grid, 4, 0)
    smin = float(np.linalg.svd(U, compute_uv=False).min())
    cert = choose_kappa(U)
    try:
        representation_eq5(grid, 4, 0, cert)
        eq5_raised = False
    except BackwardNotAvailable:
        eq5_raised = True
    kappa, nU = cert.kappa.real, cert.norm_bound
    cond = float(np.linalg.cond(U + kappa * identity(U.shape[0])))
    bound = 2 * (kappa + nU) / (kappa - nU)
    try:
        forward = log_representation(grid, 4, 0).forward_residual
    except RepresentationNotInvertible as exc:
        forward = exc.report.forward_residual
    N = np.array([[0.0, 0.0], [1.0, 0.0]])
    K = random_matrix(np.random.default_rng(seed), 2)
    try:
        log_representation_matrices(N, K)
        singular_raised, singular_fwd = False, math.nan
    except RepresentationNotInvertible as exc:
        singular_raised, singular_fwd = True, exc.report.forward_residual
    elapsed = time.perf_counter() - t0
    ok = (smin < 1e-12 and eq5_raised and cond <= bound and forward <= 1e-6
          and singular_raised and math.isfinite(singular_fwd) and elapsed < 10)
    return ok, (f"smin {smin:.1e}, eq5 raised {eq5_raised}, cond {cond:.3g} <= {bound:.3g}, "
                f"fwd {forward:.1e}, singular raised {singular_raised}, {elapsed:.2f}s")


def ac_pre_generator(seed):
    A = random_generator(8, seed)
    grid = build_family(constant_family(A), 64)
    errs = [norm2(pre_generator_fd(grid, 0, m * grid.h) - A) for m in (8, 4, 2)]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    return min(orders) >= 0.9, f"errors {', '.join(f'{e:.2e}' for e in errs)}; orders {orders[0]:.3f}, {orders[1]:.3f}"


def ac_direction_swap(seed):
    t0 = time.perf_counter()
    errs = {0: [], 1: []}
    sizes = (32, 64, 128, 256)
    mutual_128 = None
    for n in sizes:
        spec = ProblemSpec(n0=n, n1=n)
        ex = exact_field(spec)
        f0 = solve_direction(spec, 0)
        f1 = solve_direction(spec, 1)
        errs[0].append(compare_directions(ex, f0))
        errs[1].append(compare_directions(ex, f1))
        if n == 128:
            mutual_128 = compare_directions(f0, f1)
    i128 = sizes.index(128)
    orders = [math.log2(e[i] / e[i + 1]) for e in errs.values() for i in range(3)]
    elapsed = time.perf_counter() - t0
    ok = (errs[0][i128] <= 1e-2 and errs[1][i128] <= 1e-2 and mutual_128 <= 1e-2
          and min(orders) >= 1.8 and elapsed < 60)
    return ok, (f"128x128 err x0 {errs[0][i128]:.2e}, x1 {errs[1][i128]:.2e}, mutual {mutual_128:.2e}; "
                f"min order {min(orders):.3f}, {elapsed:.2f}s")


def ac_existence(seed):
    spec = ProblemSpec(kind="heat", profile="fourier_mode", n0=64, n1=64)
    r1 = illposedness_indicator(spec, 1)
    r0 = illposedness_indicator(spec, 0)
    ab = [a for _, a in r1.abscissa_trend]
    increasing = all(b > a for a, b in zip(ab, ab[1:]))
    ok = (not r1.wellposed) and increasing and r0.wellposed
    return ok, f"x1 abscissa {', '.join(f'{a:.3g}' for a in ab)} wellposed={r1.wellposed}; x0 wellposed={r0.wellposed}"


def ac_discrete_trajectory(seed):
    rep = reslice_discrete_trajectory(noisy_field(128, 128, seed=seed))
    return rep.discreteness_x0 >= 10, (f"modulus x0 {rep.modulus_x0:.3g}, x1 {rep.modulus_x1:.3g}, "
                                       f"ratio {rep.discreteness_x0:.3g}")


def quadrature_errors(U, cert, nodes=(8, 16, 32, 64, 128)):
    errs = []
    for N in nodes:
        ref = shifted_log_fixed(U, cert, 4 * N)
        errs.append(norm2(shifted_log_fixed(U, cert, N) - ref) / norm2(ref))
    return errs


def ac_quadrature(seed):
    rng = np.random.default_rng(seed)
    U = random_matrix(rng, 8)
    errs = quadrature_errors(U, choose_kappa(U))
    floor = 1e-12
    ok = all(e2 <= 0.5 * e1 or e2 <= floor for e1, e2 in zip(errs, errs[1:]) if e1 > floor)
    return ok, "errors " + ", ".join(f"{e:.1e}" for e in errs)


# -- module invariants --------------------------------------------------------

def inv_lu_residual(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (16, 64, 128):
        Q1, _ = np.linalg.qr(random_matrix(rng, n))
        Q2, _ = np.linalg.qr(random_matrix(rng, n))
        A = Q1 @ np.diag(np.logspace(0, -6, n)) @ Q2
        B = random_matrix(rng, n)
        X = lu_solve(A, B)
        worst = max(worst, norm2(A @ X - B) / norm2(B))
    return worst <= 1e-10, f"max residual {worst:.2e} (cond 1e6, n <= 128)"


def _greedy_match(a, b):
    b = list(b)
    worst = 0.0
    for z in a:
        i = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(i)))
    return worst


def inv_similarity(seed):
    rng = np.random.default_rng(seed)
    A = random_matrix(rng, 16)
    P = identity(16) + 0.3 * random_matrix(rng, 16)
    B = np.linalg.solve(P, A @ P)
    d = _greedy_match(eigenvalues(A).eigenvalues, eigenvalues(B).eigenvalues)
    return d <= 1e-6, f"max eigenvalue shift {d:.2e}"


def inv_exp_additivity(seed):
    rng = np.random.default_rng(seed)
    A = random_matrix(rng, 8)
    B = 0.5 * A @ A - 0.2 * A + 0.1 * identity(8)
    r = commutator_residual(A, B)
    err = norm2(matrix_exp(A + B) - matrix_exp(A) @ matrix_exp(B))
    return r <= 1e-14 and err <= 1e-8, f"commutator {r:.1e}, defect {err:.2e}"


def inv_norm_radius(seed):
    rng = np.random.default_rng(seed)
    gap = min(operator_norm_estimate(M) - eigenvalues(M).radius + 1e-6
              for M in (random_matrix(rng, n) for n in (2, 8, 32)))
    return gap >= 0, f"min (norm - radius + 1e-6) {gap:.2e}"


def inv_cauchy_polynomial(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (4, 16):
        U = random_matrix(rng, n)
        cert = choose_kappa(U)
        A = U + cert.kappa * identity(n)
        coef = rng.standard_normal(4)
        p = lambda z: coef[0] + coef[1] * z + coef[2] * z**2 + coef[3] * z**3
        direct = coef[0] * identity(n) + coef[1] * A + coef[2] * A @ A + coef[3] * A @ A @ A
        worst = max(worst, _rel(holomorphic_calculus(p, A, cert.contour), direct))
    return worst <= 1e-9, f"max rel err {worst:.2e}"


def inv_shift_covariance(seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(-1, 1, 6) + 1j * rng.uniform(-1, 1, 6)
    U = np.diag(d)
    cert = choose_kappa(U)
    err = float(np.max(np.abs(shifted_log(U, cert) - np.diag(np.log(d + cert.kappa)))))
    return err <= 1e-12, f"max entry err {err:.2e}"


def inv_derivative_linearity(seed):
    rng = np.random.default_rng(seed)
    U = random_matrix(rng, 6)
    d1, d2 = random_matrix(rng, 6), random_matrix(rng, 6)
    al, be = 0.7 - 0.2j, -1.3
    cert = choose_kappa(U)
    D = lambda dU: shifted_log_derivative(U, dU, cert, adaptive=False)
    lhs, rhs = D(al * d1 + be * d2), al * D(d1) + be * D(d2)
    err = norm2(lhs - rhs) / norm2(rhs)
    return err <= 1e-12, f"rel defect {err:.2e}"


def inv_derivative_fd(seed):
    A = random_generator(6, seed)
    grid = build_family(constant_family(A, (0.0, 1.0)), 40)
    j = 20
    U = propagator(grid, j, 0)
    idx = [j - 4, j - 2, j, j + 2, j + 4]
    cert = contour_mod.common_certificate([propagator(grid, i, 0) for i in idx])
    D = shifted_log_derivative(U, A @ U, cert)
    D_fd = fd_log_derivative(grid, j, 0, cert)
    h_fd = 2 * grid.h
    err = norm2(D - D_fd)
    return err <= max(1e-6, 10 * h_fd**2), f"contour vs FD {err:.2e} (h_fd {h_fd:.3g})"


def inv_semigroup(seed):
    rng = np.random.default_rng(seed)
    A = random_generator(6, seed)
    grid = build_family(scaled_family(A, "sin", (0.0, 2.0)), 24)
    worst = 0.0
    for _ in range(20):
        k, r, j = sorted(rng.integers(0, 25, 3))
        whole = propagator(grid, j, k)
        worst = max(worst, norm2(propagator(grid, j, r) @ propagator(grid, r, k) - whole) / norm2(whole))
    identity_ok = all(np.array_equal(propagator(grid, i, i), identity(6)) for i in range(25))
    return worst <= 1e-12 and identity_ok, f"max composition defect {worst:.2e}, U(s,s)=I {identity_ok}"


def inv_shifted_inverse(seed):
    rng = np.random.default_rng(seed)
    stiff = propagator(build_family(stiff_heat_family(), 8), 4, 0)
    worst = 0.0
    for U in (stiff, random_matrix(rng, 8), random_matrix(rng, 8, 3.0)):
        cert = choose_kappa(U)
        k, nU = cert.kappa.real, cert.norm_bound
        cond = float(np.linalg.cond(U + k * identity(U.shape[0])))
        worst = max(worst, cond / ((k + nU) / (k - nU)))
    return worst <= 2.0, f"max cond / bound {worst:.3f}"


def inv_trajectory(seed):
    A = random_generator(6, seed, scale=0.5)
    grid = build_family(constant_family(A, (0.0, 1.0)), 8)
    u0 = random_matrix(np.random.default_rng(seed), 6)[:, 0]
    out = regularized_trajectory(grid, 0, None, u0)
    worst = max(np.linalg.norm(v - propagator(grid, j, 0) @ u0) for j, (_, v) in enumerate(out))
    worst /= np.linalg.norm(u0)
    return worst <= 1e-8, f"max deviation from U u0 {worst:.2e}"


def inv_conservation(seed):
    f0 = solve_direction(ProblemSpec(n0=64, n1=64), 0)
    norms = np.linalg.norm(f0.values, axis=1)
    drift = float(np.max(np.abs(norms - norms[0])) / norms[0])
    return drift <= 1e-6, f"max slice-norm drift {drift:.2e}"


def inv_reslice_duality(seed):
    f = noisy_field(32, 48, seed=seed)
    a, b = reslice_discrete_trajectory(f), reslice_discrete_trajectory(f.transpose())
    ok = a.modulus_x0 == b.modulus_x1 and a.modulus_x1 == b.modulus_x0
    g = reslice_discrete_trajectory(gaussian_field(64, 64))
    bound = math.sqrt(2) * math.exp(-0.5) * 1.01
    spec = ProblemSpec(n0=64, n1=64)
    gx = math.sqrt(spec.dx * float(np.sum(np.exp(-2 * spec.x1**2))))
    smooth_ok = g.modulus_x0 <= bound * gx and g.modulus_x1 <= bound * gx
    return ok and smooth_ok, f"swap exact {ok}; smooth moduli {g.modulus_x0:.4f}, {g.modulus_x1:.4f} <= {bound * gx:.4f}"


def inv_illposed_monotone(seed):
    r = illposedness_indicator(ProblemSpec(kind="heat", profile="fourier_mode", n0=32, n1=32), 1)
    ab = [a for _, a in r.abscissa_trend]
    return all(b >= a for a, b in zip(ab, ab[1:])), "abscissa " + ", ".join(f"{a:.3g}" for a in ab)


CHECKS: list[tuple[str, str, Callable]] = [
    ("AC1", "functional calculus reproduction", ac_functional_calculus),
    ("AC2", "exp/log round trip incl. singular U", ac_round_trip),
    ("AC3", "generator identity on commuting presets", ac_generator_identity),
    ("AC4", "generalization beyond invertibility", ac_beyond_invertibility),
    ("AC5", "pre-generator quotient order", ac_pre_generator),
    ("AC6", "direction swap for transport", ac_direction_swap),
    ("AC7", "existence dichotomy for heat", ac_existence),
    ("AC8", "discrete trajectory reslicing", ac_discrete_trajectory),
    ("AC9", "quadrature convergence", ac_quadrature),
    ("INV-lu", "LU residual", inv_lu_residual),
    ("INV-eig", "similarity invariance of spectrum", inv_similarity),
    ("INV-exp", "exp additivity on commuting pairs", inv_exp_additivity),
    ("INV-norm", "norm estimate dominates radius", inv_norm_radius),
    ("INV-cauchy", "Cauchy reproduction of cubics", inv_cauchy_polynomial),
    ("INV-diag", "shift covariance on diagonals", inv_shift_covariance),
    ("INV-lin", "derivative linearity", inv_derivative_linearity),
    ("INV-fd", "contour vs finite-difference derivative", inv_derivative_fd),
    ("INV-semigroup", "semigroup axioms", inv_semigroup),
    ("INV-shift-inv", "conditioning of U + kappa I", inv_shifted_inverse),
    ("INV-traj", "regularized trajectory round trip", inv_trajectory),
    ("INV-conserve", "transport slice norm conservation", inv_conservation),
    ("INV-reslice", "reslice duality and smooth bound", inv_reslice_duality),
    ("INV-illposed", "ill-posedness monotonicity", inv_illposed_monotone),
]


def run_checks(seed: int = 0, keys=None, mutation: str | None = None) -> list[CheckResult]:
    """Run the registry (or the subset ``keys``) and return one result each.

    ``mutation="quadrature_sign"`` flips the sign of the quadrature weights
    for the duration of the run.
    """
    saved = contour_mod.QUADRATURE_SIGN
    if mutation == "quadrature_sign":
        contour_mod.QUADRATURE_SIGN = -1.0
    elif mutation is not None:
        raise ValueError(f"unknown mutation {mutation!r}")
    results = []
    try:
        for key, title, fn in CHECKS:
            if keys is not None and key not in keys:
                continue
            t0 = time.perf_counter()
            try:
                passed, detail = fn(seed)
            except Exception as exc:  # a crashing check is a failing check
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            results.append(CheckResult(key, title, bool(passed), detail, time.perf_counter() - t0))
    finally:
        contour_mod.QUADRATURE_SIGN = saved
    return results


def format_table(results) -> str:
    width = max(len(r.key) for r in results)
    lines = []
    for r in results:
        lines.append(f"{'PASS' if r.passed else 'FAIL'}  {r.key:<{width}}  {r.title}: {r.detail}")
    return "\n".join(lines)
