import math

import numpy as np
import pytest
import scipy.linalg

from evolog.contour import certify_kappa, choose_kappa, shifted_log
from evolog.errors import (
    BackwardNotAvailable,
    CertificateFailed,
    OutOfDomain,
    RepresentationNotInvertible,
)
from evolog.evolution import (
    GeneratorFamily,
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
    representation_eq5_matrices,
    scaled_family,
    stiff_heat_family,
)
from evolog.operator_core import norm2


def _order(errs, ratio=2.0):
    return [math.log(a / b, ratio) for a, b in zip(errs, errs[1:])]


def test_family_validation():
    with pytest.raises(ValueError):
        GeneratorFamily(2, (1.0, 0.0), lambda x: np.eye(2))
    fam = GeneratorFamily(2, (0.0, 1.0), lambda x: np.eye(3))
    with pytest.raises(ValueError):
        fam(0.5)
    with pytest.raises(ValueError):
        build_family(constant_family(np.eye(2)), 1)
    with pytest.raises(ValueError):
        build_family(constant_family(np.eye(2)), 4, scheme="euler")


def test_zero_generator_gives_identity_steps():
    grid = build_family(constant_family(np.zeros((3, 3))), 5)
    for step in grid.one_step:
        assert np.array_equal(step, np.eye(3))


def test_constant_family_matches_exponential():
    A = random_generator(6, seed=1)
    grid = build_family(constant_family(A), 16)
    ref = scipy.linalg.expm(A)
    assert norm2(propagator(grid, 16, 0) - ref) <= 1e-12 * norm2(ref)
    mid = scipy.linalg.expm(0.5 * A)
    assert norm2(propagator(grid, 8, 0) - mid) <= 1e-12 * norm2(mid)


@pytest.mark.parametrize("scheme, min_order", [("midpoint_exp", 1.9), ("cf4", 3.8)])
def test_scaled_family_convergence(scheme, min_order):
    A = random_generator(4, seed=2)
    lo, hi = 0.0, 2.0
    integral = (hi - lo) + 0.5 * (math.sin(hi) - math.sin(lo))
    ref = scipy.linalg.expm(integral * A)
    errs = []
    for M in (8, 16, 32):
        grid = build_family(scaled_family(A, "cos", (lo, hi)), M, scheme)
        errs.append(norm2(propagator(grid, M, 0) - ref) / norm2(ref))
    assert min(_order(errs)) >= min_order


def test_propagator_identity_and_semigroup():
    grid = build_family(scaled_family(random_generator(5, seed=3), "sin"), 12)
    assert np.array_equal(propagator(grid, 4, 4), np.eye(5))
    for j, r, k in [(10, 6, 2), (12, 3, 0), (7, 7, 1)]:
        lhs = propagator(grid, j, k)
        rhs = propagator(grid, j, r) @ propagator(grid, r, k)
        assert norm2(lhs - rhs) <= 1e-12 * norm2(lhs)


def test_backward_propagator_inverts_forward():
    grid = build_family(constant_family(random_generator(4, seed=4)), 8)
    assert norm2(propagator(grid, 2, 6) @ propagator(grid, 6, 2) - np.eye(4)) < 1e-12


def test_propagator_out_of_domain():
    grid = build_family(constant_family(np.eye(2)), 4)
    with pytest.raises(OutOfDomain):
        propagator(grid, 5, 0)


def test_backward_not_available_for_stiff_heat():
    grid = build_family(stiff_heat_family(), 8)
    assert np.linalg.svd(grid.one_step[0], compute_uv=False)[-1] < 1e-12
    with pytest.raises(BackwardNotAvailable):
        propagator(grid, 0, 4)


def test_pre_generator_zero():
    grid = build_family(constant_family(np.zeros((2, 2))), 10)
    assert norm2(pre_generator_fd(grid, 0, grid.h)) == 0.0


def test_pre_generator_scalar_closed_form():
    grid = build_family(constant_family(np.array([[1.0]]), (0.0, 1.0)), 100)
    q = pre_generator_fd(grid, 0, 0.01)
    assert abs(q[0, 0] - 1.00502) <= 1e-5
    assert q[0, 0] == pytest.approx(math.expm1(0.01) / 0.01, rel=1e-12)


def test_pre_generator_first_order():
    A = random_generator(8, seed=5)
    grid = build_family(constant_family(A), 64)
    h = grid.h
    errs = [norm2(pre_generator_fd(grid, 16, m * h) - A) for m in (8, 4, 2)]
    assert min(_order(errs)) >= 0.9


def test_pre_generator_rejects_bad_step():
    grid = build_family(constant_family(np.eye(2)), 10)
    with pytest.raises(ValueError):
        pre_generator_fd(grid, 0, 0.033)
    with pytest.raises(OutOfDomain):
        pre_generator_fd(grid, 9, 0.2)


def test_representation_scalar_closed_form():
    U = np.array([[1.0]])
    K = np.array([[1.0]])
    cert = certify_kappa(U, 2.0)
    rep = log_representation_matrices(U, K, cert)
    # D = 1/3, F = 1 - 2/3 = 1/3, so F^{-1} D = 1
    assert rep.forward_residual <= 1e-10
    assert rep.recovery_residual <= 1e-10
    assert rep.eq5_agreement <= 1e-10
    assert rep.factor_condition == pytest.approx(1.0)
    eq5 = representation_eq5_matrices(U, K, cert)
    assert abs(eq5[0, 0] - 1.0) <= 1e-10


def test_representation_constant_commuting():
    grid = build_family(constant_family(random_generator(8, seed=6)), 16)
    rep = log_representation(grid, 8, 0)
    assert rep.forward_residual <= 1e-6
    assert rep.recovery_residual <= 1e-6
    assert rep.eq5_agreement <= 1e-8
    assert rep.derivative_agreement <= 1e-6
    assert rep.commutator < 1e-12


def test_eq5_matches_recovery_on_scaled_family():
    grid = build_family(scaled_family(random_generator(6, seed=7), "cos"), 32)
    rep = log_representation(grid, 16, 0)
    K = grid.generator(grid.x(16))
    eq5 = representation_eq5(grid, 16, 0, choose_kappa(propagator(grid, 16, 0)))
    assert norm2(eq5 - K) <= 1e-6 * norm2(K)
    assert rep.eq5_agreement <= 1e-8


def test_singular_standalone_not_invertible():
    U = np.array([[0.0, 0.0], [1.0, 0.0]])
    K = np.array([[0.3, 1.0], [-0.2, 0.5]])
    with pytest.raises(RepresentationNotInvertible) as info:
        log_representation_matrices(U, K)
    rep = info.value.report
    assert math.isfinite(rep.forward_residual)
    assert rep.recovery_status == "RepresentationNotInvertible"
    assert rep.eq5_status == "BackwardNotAvailable"
    with pytest.raises(BackwardNotAvailable):
        representation_eq5_matrices(U, K)


def test_stiff_heat_forward_identity_survives():
    grid = build_family(stiff_heat_family(), 8)
    with pytest.raises(RepresentationNotInvertible) as info:
        log_representation(grid, 4, 0)
    assert info.value.report.forward_residual <= 1e-6
    with pytest.raises(BackwardNotAvailable):
        representation_eq5(grid, 4, 0)


def test_report_rows_order():
    rep = log_representation_matrices(np.eye(2), np.eye(2))
    names = [n for n, _ in rep.rows()]
    assert names[:3] == ["forward_residual", "factor_condition", "commutator"]
    assert "kappa_re" in names and "kappa_im" in names


def test_fd_log_derivative_stencil_bounds():
    grid = build_family(constant_family(random_generator(3, seed=8)), 8)
    cert = choose_kappa(propagator(grid, 8, 0))
    with pytest.raises(OutOfDomain):
        fd_log_derivative(grid, 1, 0, cert)


def test_regularized_trajectory():
    A = random_generator(5, seed=9)
    grid = build_family(constant_family(A), 10)
    u0 = np.arange(1, 6, dtype=complex)
    traj = regularized_trajectory(grid, 2, None, u0)
    assert len(traj) == 9
    x, u = traj[0]
    assert x == pytest.approx(grid.x(2))
    assert np.linalg.norm(u - u0) <= 1e-10 * np.linalg.norm(u0)
    for offset, (_, u) in enumerate(traj):
        ref = propagator(grid, 2 + offset, 2) @ u0
        assert np.linalg.norm(u - ref) <= 1e-8 * np.linalg.norm(u0)


def test_log_of_identity_diagonal():
    cert = choose_kappa(np.eye(3))
    a = shifted_log(np.eye(3), cert)
    assert norm2(a - math.log(1 + cert.kappa.real) * np.eye(3)) <= 1e-10


def test_regularized_trajectory_reports_failing_index():
    # U(x_j) = e^{0.5 j} I already leaves the disc |z - 3| < 1.5 at j = 1
    grid = build_family(constant_family(np.eye(2) * 5.0), 10)
    cert = choose_kappa(np.eye(2))
    with pytest.raises(CertificateFailed) as info:
        regularized_trajectory(grid, 0, cert, np.ones(2))
    assert info.value.index == 1
