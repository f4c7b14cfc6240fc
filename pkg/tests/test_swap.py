import math

import numpy as np
import pytest
from scipy.integrate import quad

from evolog.errors import GridMismatch, IllPosedDirection, Overflow, UnsupportedDirection
from evolog.swap import (
    ProblemSpec,
    SpaceTimeField,
    compare_directions,
    discretize,
    exact_field,
    gaussian_field,
    illposedness_indicator,
    l2_norm,
    noisy_field,
    reslice_discrete_trajectory,
    slice_errors,
    solve_direction,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        ProblemSpec(kind="wave")
    with pytest.raises(ValueError):
        ProblemSpec(n0=4)
    with pytest.raises(ValueError):
        ProblemSpec(c=0.5)  # c T / L not an integer
    with pytest.raises(ValueError):
        ProblemSpec(kind="heat", nu=0.0)


def test_unsupported_direction():
    with pytest.raises(UnsupportedDirection):
        discretize(ProblemSpec(n0=16, n1=16), 2)
    with pytest.raises(UnsupportedDirection):
        illposedness_indicator(ProblemSpec(n0=16, n1=16), -1)


@pytest.mark.parametrize("m", [1, 3, 7])
def test_transport_symbol(m):
    spec = ProblemSpec(c=2.0, n0=32, n1=32)
    K = discretize(spec, 0)(0.0)
    k = 2 * math.pi * m / (2 * spec.L)
    v = np.exp(1j * k * spec.x1)
    symbol = 1j * spec.c * math.sin(k * spec.dx) / spec.dx
    np.testing.assert_allclose(K @ v, symbol * v, atol=1e-10)
    # and within dispersion of the continuous value i c k
    assert abs(symbol - 1j * spec.c * k) <= spec.c * k**3 * spec.dx**2 / 6 + 1e-12


def test_heat_direction0_spectrum_nonpositive():
    spec = ProblemSpec(kind="heat", n0=16, n1=32)
    ev = np.linalg.eigvals(discretize(spec, 0)(0.0))
    assert np.all(np.abs(ev.imag) < 1e-9)
    assert np.all(ev.real <= 1e-9)


def test_heat_direction1_block_eigenvalues():
    spec = ProblemSpec(kind="heat", nu=0.1, n0=16, n1=16)
    ev = np.linalg.eigvals(discretize(spec, 1)(0.0))
    ks = 2 * math.pi * np.fft.fftfreq(spec.n0, d=spec.dt)
    omega = np.sin(ks * spec.dt) / spec.dt
    root = np.sqrt(1j * omega / spec.nu)
    expected = np.concatenate([root, -root])
    for z in expected:
        # omega = 0 gives a 2x2 Jordan block, whose computed eigenvalues split by ~sqrt(eps)
        tol = 1e-6 if abs(z) < 1e-6 else 1e-8 * abs(z)
        assert np.min(np.abs(ev - z)) < tol
    assert ev.real.max() > 1.0


def test_exact_transport_follows_characteristics():
    spec = ProblemSpec(n0=16, n1=16)
    f = exact_field(spec)
    X0, X1 = np.meshgrid(spec.x0, spec.x1, indexing="ij")
    np.testing.assert_allclose(f.values, spec.profile_values(X1 + spec.c * X0))


def test_exact_heat_fourier_mode_decays():
    spec = ProblemSpec(kind="heat", profile="fourier_mode", mode=2, n0=16, n1=32)
    f = exact_field(spec)
    rate = spec.nu * (2 * math.pi / spec.L) ** 2
    ref = np.exp(-rate * (spec.x0 + spec.T))[:, None] * np.sin(2 * math.pi * spec.x1 / spec.L)[None, :]
    np.testing.assert_allclose(f.values, ref, atol=1e-12)


@pytest.mark.parametrize("direction", [0, 1])
def test_transport_direction_convergence(direction):
    errs = []
    for n in (32, 64, 128):
        spec = ProblemSpec(n0=n, n1=n)
        errs.append(compare_directions(exact_field(spec), solve_direction(spec, direction)))
    assert errs[-1] <= 1e-2
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.8


def test_transport_directions_agree_and_halve():
    vals = []
    for n in (64, 128):
        spec = ProblemSpec(n0=n, n1=n)
        vals.append(compare_directions(solve_direction(spec, 0), solve_direction(spec, 1)))
    assert vals[1] <= 1e-2
    assert vals[1] <= 0.5 * vals[0]


def test_heat_direction0_matches_modes():
    spec = ProblemSpec(kind="heat", profile="fourier_mode", n0=32, n1=32)
    err = compare_directions(exact_field(spec), solve_direction(spec, 0))
    assert err < 1e-2


def test_heat_direction1_refused_then_overflow():
    spec = ProblemSpec(kind="heat", profile="fourier_mode", n0=64, n1=64)
    with pytest.raises(IllPosedDirection) as info:
        solve_direction(spec, 1)
    assert info.value.report.wellposed is False
    with pytest.raises(Overflow) as info:
        solve_direction(spec, 1, override=True)
    direction, index, coord = info.value.coordinate
    assert direction == 1 and index >= 1
    assert spec.x1[0] < coord <= spec.x1[-1]


def test_illposedness_reports():
    tr = ProblemSpec(n0=32, n1=32)
    for d in (0, 1):
        r = illposedness_indicator(tr, d)
        assert r.wellposed
        assert all(abs(a) < 1e-9 for _, a in r.abscissa_trend)
    heat = ProblemSpec(kind="heat", n0=32, n1=32)
    r0 = illposedness_indicator(heat, 0)
    assert r0.wellposed and all(a <= 1e-9 for _, a in r0.abscissa_trend)
    r1 = illposedness_indicator(heat, 1)
    ab = [a for _, a in r1.abscissa_trend]
    assert not r1.wellposed
    assert ab[0] < ab[1] < ab[2]
    # growth follows the largest block eigenvalue, about sqrt(omega_max / (2 nu))
    for n, a in r1.abscissa_trend:
        dt = 2 * heat.T / n
        omega_max = 1.0 / dt
        assert a == pytest.approx(math.sqrt(omega_max / (2 * heat.nu)), rel=0.05)


def test_compare_directions_basics(rng):
    f = gaussian_field(16, 16)
    assert compare_directions(f, f) == 0.0
    noise = rng.standard_normal(f.values.shape)
    g = SpaceTimeField(noise, f.x0, f.x1)
    g = SpaceTimeField(noise / l2_norm(g), f.x0, f.x1)
    eps = 1e-3
    h = SpaceTimeField(f.values + eps * g.values, f.x0, f.x1)
    assert compare_directions(f, h) == pytest.approx(eps / l2_norm(f), abs=1e-12)
    other = gaussian_field(16, 32)
    with pytest.raises(GridMismatch):
        compare_directions(f, other)


def test_slice_errors_zero_for_identical():
    f = gaussian_field(8, 8)
    assert np.all(slice_errors(f, f) == 0)


def test_field_csv_round_trip(tmp_path):
    f = exact_field(ProblemSpec(n0=8, n1=16))
    p = tmp_path / "f.csv"
    f.to_csv(p)
    g = SpaceTimeField.from_csv(p)
    assert np.array_equal(g.values, f.values)
    assert np.array_equal(g.x0, f.x0) and np.array_equal(g.x1, f.x1)
    assert p.read_text().splitlines()[0] == "x0,x1,re,im"


def test_field_rejects_bad_shapes():
    with pytest.raises(GridMismatch):
        SpaceTimeField(np.zeros((3, 4)), np.arange(4.0), np.arange(4.0))


def test_reslice_constant_field():
    f = SpaceTimeField(np.full((8, 8), 2.5), np.arange(8.0), np.arange(8.0))
    r = reslice_discrete_trajectory(f)
    assert r.modulus_x0 == 0.0 and r.modulus_x1 == 0.0


def test_reslice_smooth_bound():
    f = gaussian_field(128, 128)
    r = reslice_discrete_trajectory(f)
    lip = math.sqrt(2 / math.e)
    width = math.sqrt(quad(lambda x: math.exp(-2 * x * x), -1, 1)[0])
    assert r.modulus_x0 <= lip * width * 1.05
    assert r.modulus_x1 <= lip * width * 1.05


def test_reslice_noisy_field_ratio():
    r = reslice_discrete_trajectory(noisy_field(128, 128, seed=3))
    assert r.modulus_x0 >= 10 * r.modulus_x1
    assert r.discreteness_x0 >= 10


def test_reslice_transpose_duality(rng):
    f = noisy_field(16, 24, seed=1)
    r = reslice_discrete_trajectory(f)
    rt = reslice_discrete_trajectory(f.transpose())
    assert r.modulus_x0 == rt.modulus_x1 and r.modulus_x1 == rt.modulus_x0
