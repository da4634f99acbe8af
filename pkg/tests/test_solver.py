"""Single-tube solves, mode-wise division, residuals, field serialization."""

from __future__ import annotations

import cmath
import math
import random

import mpmath
import numpy as np
import pytest

from torus_hypo.errors import (
    CompatibilityError,
    GridMismatch,
    ProfileError,
    SolvabilityError,
    ZeroDivisorError,
)
from torus_hypo.gevrey import estimate_decay
from torus_hypo.solver import (
    FourierField,
    LaplaceKernel,
    decay_report,
    residual,
    solve_by_division,
    solve_single_tube,
)
from torus_hypo.system import SystemSpec


def spec_from(n, tubes, s="2") -> SystemSpec:
    return SystemSpec.from_json({"n": n, "s": s, "tubes": tubes})


HALF_DAMPED = {"const": "-1/2", "cos": ["-1/2"]}  # b(t) = -(1+cos t)/2


def manufactured_pair(spec: SystemSpec, modes: dict, grid: int = 128):
    """Exact u from modes, f = L_1 u evaluated in closed form on the grid."""
    u = FourierField.from_modes(1, grid, modes)
    tube = spec.tubes[0]
    a0 = float(tube.a.mpf(30)) if hasattr(tube.a, "mpf") else float(tube.a.mean())
    t = u.t_grid()
    b_vals = tube.b(t)
    f = FourierField(n=1, grid_size=grid)
    for xi in u.xi_values:
        du = np.zeros(grid, dtype=complex)
        for (eta, mxi), c in modes.items():
            if mxi == xi:
                du += c * 1j * eta * np.exp(1j * eta * t)
        u_vals = u.values(xi)
        f.set_values(xi, du + 1j * xi * (a0 + 1j * b_vals) * u_vals)
    return u, f


# ---------------------------------------------------------------------------
# FourierField data model
# ---------------------------------------------------------------------------


def test_field_from_modes_exact_synthesis():
    f = FourierField.from_modes(1, 64, {(2, 3): 1.5 + 0.5j})
    t = f.t_grid()
    assert np.abs(f.values(3) - (1.5 + 0.5j) * np.exp(2j * t)).max() < 1e-14
    assert f.mode_coefficient(2, 3) == pytest.approx(1.5 + 0.5j)
    assert f.mode_coefficient(1, 3) == pytest.approx(0.0, abs=1e-15)


def test_field_json_round_trip():
    # Storage is spectral, so the round trip is exact up to FFT rounding.
    f = FourierField.from_modes(1, 32, {(1, 2): 1 - 1j, (0, 5): 0.25})
    back = FourierField.from_json_obj(f.to_json_obj())
    assert back.n == f.n and back.grid_size == f.grid_size
    assert back.xi_values == f.xi_values
    for xi in f.xi_values:
        assert np.abs(back.values(xi) - f.values(xi)).max() < 1e-13


def test_field_json_round_trip_is_stable():
    # A second pass through the format must be byte-identical: the spectral
    # coefficients themselves round-trip exactly through repr floats.
    import json

    f = FourierField.from_modes(1, 32, {(1, 2): 1 - 1j, (0, 5): 0.25})
    once = FourierField.from_json_obj(f.to_json_obj())
    twice = FourierField.from_json_obj(once.to_json_obj())
    assert json.dumps(once.to_json_obj()) == json.dumps(twice.to_json_obj())
    for xi in once.xi_values:
        assert np.array_equal(once.values(xi), twice.values(xi))


def test_field_binary_round_trip(tmp_path):
    f = FourierField.from_modes(2, 16, {((1, -2), 3): 0.5j, ((0, 0), -1): 2.0})
    back = FourierField.from_bytes(f.to_bytes())
    assert back.n == 2 and back.grid_size == 16
    for xi in f.xi_values:
        assert np.abs(back.values(xi) - f.values(xi)).max() < 1e-13
    path = tmp_path / "field.tff"
    f.save_binary(path)
    again = FourierField.load_binary(path)
    assert again.xi_values == f.xi_values
    # Stable from the first round trip on: bytes(load(bytes(f))) == bytes once
    # the grid values have been snapped to the stored spectral coefficients.
    assert again.to_bytes() == back.to_bytes()


def test_field_spectral_derivatives():
    f = FourierField.from_modes(1, 64, {(3, 2): 1.0})
    t = f.t_grid()
    dt = f.t_derivative(0)
    assert np.abs(dt.values(2) - 3j * np.exp(3j * t)).max() < 1e-12
    dx = f.x_derivative()
    assert np.abs(dx.values(2) - 2j * np.exp(3j * t)).max() < 1e-12


def test_field_layout_guards():
    a = FourierField.from_modes(1, 32, {(0, 1): 1.0})
    b = FourierField.from_modes(1, 64, {(0, 1): 1.0})
    with pytest.raises(GridMismatch):
        a.require_same_frequencies(b)
    c = FourierField.from_modes(1, 32, {(0, 2): 1.0})
    with pytest.raises(GridMismatch):
        a.require_same_frequencies(c)


# ---------------------------------------------------------------------------
# Laplace kernel closed forms
# ---------------------------------------------------------------------------


def test_kernel_closed_form_for_sine():
    spec = spec_from(1, [{"a": "1/3", "b": {"sin": ["-1"]}}])
    K = LaplaceKernel.from_tube(spec, 1)
    for t in (0.2, 1.7, 4.4):
        for tau in (0.1, 2.0, 5.9):
            # int_{t-tau}^{t} (-sin) = cos t - cos(t - tau)
            want = tau / 3 + 1j * (math.cos(t) - math.cos(t - tau))
            assert complex(K.H(t, tau)) == pytest.approx(want, abs=1e-12)
            # int_t^{t+tau} (-sin) = cos(t + tau) - cos t
            want_m = tau / 3 + 1j * (math.cos(t + tau) - math.cos(t))
            assert complex(K.H_tilde(t, tau)) == pytest.approx(want_m, abs=1e-12)


def test_kernel_im_H_nonpositive_for_nonpositive_b():
    spec = spec_from(1, [{"a": "0", "b": HALF_DAMPED}])
    K = LaplaceKernel.from_tube(spec, 1)
    ts = np.linspace(0, 2 * math.pi, 41)
    taus = np.linspace(0, 2 * math.pi, 41)
    worst = max(K.im_H(t, tau) for t in ts for tau in taus)
    assert worst <= 1e-12
    assert K.im_H_max() <= 1e-12


def test_kernel_prefactor_bound_over_frequencies():
    spec = spec_from(1, [{"a": "2/7", "b": HALF_DAMPED}])
    K = LaplaceKernel.from_tube(spec, 1)
    bound = K.prefactor_bound()
    want = 1.0 / (1.0 - math.exp(2 * math.pi * K.b0))
    assert bound == pytest.approx(want, rel=1e-12)
    xi = np.arange(1, 100001)
    c0 = K.a0 + 1j * K.b0
    mags = np.abs(1.0 / (1.0 - np.exp(-1j * 2 * math.pi * xi * c0)))
    assert mags.max() <= bound * (1 + 1e-12)
    for x in (1, 3, 17, 100000):
        assert abs(K.prefactor(x)) <= bound * (1 + 1e-12)


# ---------------------------------------------------------------------------
# Single-tube solves
# ---------------------------------------------------------------------------


def test_solve_constant_coefficients_identity():
    spec = spec_from(1, [{"a": "0", "b": "-1"}])
    f = FourierField.from_modes(1, 64, {(0, 1): 1.0})  # e^{ix}
    u = solve_single_tube(1, spec, f)
    assert np.abs(u.values(1) - 1.0).max() < 1e-12  # u = e^{ix}


def test_solve_constant_coefficients_manufactured():
    spec = spec_from(1, [{"a": "1", "b": "-1"}])
    f = FourierField.from_modes(1, 64, {(1, 1): 1 + 2j})
    u = solve_single_tube(1, spec, f)
    t = u.t_grid()
    assert np.abs(u.values(1) - np.exp(1j * t)).max() < 1e-12


def test_solve_manufactured_trig_tube():
    spec = spec_from(1, [{"a": "0", "b": HALF_DAMPED}])
    u_true, f = manufactured_pair(spec, {(2, 3): 1.0})
    u = solve_single_tube(1, spec, f)
    assert np.abs(u.values(3) - u_true.values(3)).max() <= 1e-8
    assert residual(spec, u, [f])[0] <= 1e-8


def test_solve_mirror_profile_and_negative_frequencies():
    spec = spec_from(1, [{"a": "1/3", "b": {"const": "1/2", "cos": ["1/2"]}}])
    u_true, f = manufactured_pair(spec, {(1, -2): 0.7 - 0.2j, (-3, 4): 1.1j})
    u = solve_single_tube(1, spec, f)
    for xi in (-2, 4):
        assert np.abs(u.values(xi) - u_true.values(xi)).max() <= 1e-8, xi
    assert max(residual(spec, u, [f])) <= 1e-8


def test_solve_zero_frequency_antidifferentiation():
    spec = spec_from(1, [{"a": "0", "b": HALF_DAMPED}])
    f = FourierField.from_modes(1, 64, {(1, 0): 1.0})  # zero t-mean
    u = solve_single_tube(1, spec, f)
    t = u.t_grid()
    want = np.exp(1j * t) / 1j  # primitive with zero mean
    assert np.abs(u.values(0) - want).max() < 1e-12


def test_solve_zero_frequency_mean_obstruction():
    spec = spec_from(1, [{"a": "0", "b": HALF_DAMPED}])
    f = FourierField.from_modes(1, 64, {(0, 0): 1.0})
    with pytest.raises(SolvabilityError):
        solve_single_tube(1, spec, f)


def test_solve_rejects_sign_changing_profile():
    spec = spec_from(1, [{"a": "0", "b": {"sin": ["1"]}}])
    f = FourierField.from_modes(1, 64, {(0, 1): 1.0})
    with pytest.raises(ProfileError):
        solve_single_tube(1, spec, f)


def test_solve_linearity():
    spec = spec_from(1, [{"a": "0", "b": HALF_DAMPED}])
    _, f = manufactured_pair(spec, {(2, 3): 1.0})
    _, g = manufactured_pair(spec, {(-1, 3): 0.5 + 0.25j})
    al, be = 0.7 - 0.1j, -1.3 + 2j
    combo = FourierField(n=1, grid_size=128)
    combo.set_values(3, al * f.values(3) + be * g.values(3))
    lhs = solve_single_tube(1, spec, combo).values(3)
    rhs = al * solve_single_tube(1, spec, f).values(3) + be * solve_single_tube(1, spec, g).values(3)
    scale = max(1.0, np.abs(rhs).max())
    assert np.abs(lhs - rhs).max() <= 1e-12 * scale


def test_solve_matches_direct_quadrature_of_integral_formula():
    # Dual route: the mode-space solve must agree with high-precision
    # quadrature of  u(t,xi) = prefactor(xi) * int_0^{2pi} e^{-i xi H(t,tau)}
    # f(t-tau, xi) dtau  at sample points.
    spec = spec_from(1, [{"a": "1/2", "b": HALF_DAMPED}])
    K = LaplaceKernel.from_tube(spec, 1)
    xi = 3

    def f_hat(t: float) -> complex:
        b = -(1 + math.cos(t)) / 2
        return (2j + xi * 1j * (0.5 + 1j * b)) * cmath.exp(2j * t)

    f = FourierField(n=1, grid_size=128)
    tg = f.t_grid()
    f.set_values(xi, np.array([f_hat(float(t)) for t in tg]))
    u = solve_single_tube(1, spec, f)
    pref = complex(K.prefactor(xi))
    for idx in (0, 17, 63, 100):
        t0 = float(tg[idx])
        quad = mpmath.quad(
            lambda tau: cmath.exp(-1j * xi * complex(K.H(t0, float(tau)))) * f_hat(t0 - float(tau)),
            [0, 2 * math.pi],
        )
        assert abs(u.values(xi)[idx] - pref * complex(quad)) <= 1e-10


def test_solve_round_trip_stress():
    rng = random.Random(99)
    spec = spec_from(1, [{"a": "1/3", "b": HALF_DAMPED}])
    modes = {}
    for _ in range(6):
        xi = rng.choice([x for x in range(-16, 17) if x])
        eta = rng.randint(-8, 8)
        modes[(eta, xi)] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    u_true, f = manufactured_pair(spec, modes)
    u = solve_single_tube(1, spec, f)
    for xi in u_true.xi_values:
        assert np.abs(u.values(xi) - u_true.values(xi)).max() <= 1e-7


# ---------------------------------------------------------------------------
# Division solver
# ---------------------------------------------------------------------------


def test_division_closed_form():
    spec = spec_from(1, [{"a": {"cf": "constant:2"}, "b": "0"}])
    f = FourierField.from_modes(1, 64, {(1, -2): 1.0})
    u = solve_by_division(spec, [f])
    # -i / ((-2)(sqrt2 - 1) + 1) = -i (3 + 2 sqrt 2)
    want = -1j * (3 + 2 * math.sqrt(2))
    assert u.mode_coefficient(1, -2) == pytest.approx(want, abs=1e-12)


def test_division_zero_input_zero_output():
    spec = spec_from(1, [{"a": {"cf": "constant:2"}, "b": "0"}])
    u = solve_by_division(spec, [FourierField(n=1, grid_size=64)])
    assert u.xi_values == [] and u.max_abs() == 0.0


def test_division_rational_resonance():
    spec = spec_from(1, [{"a": "1/2", "b": "0"}])
    f = FourierField.from_modes(1, 64, {(-1, 2): 1.0})
    with pytest.raises(ZeroDivisorError):
        solve_by_division(spec, [f])


def test_division_compatibility_guard():
    spec = spec_from(2, [
        {"a": {"cf": "constant:2"}, "b": "0"},
        {"a": {"cf": "constant:6"}, "b": "0"},
    ])
    f1 = FourierField.from_modes(2, 32, {((1, 0), 2): 1.0})
    f2 = FourierField.from_modes(2, 32, {((1, 0), 2): 1.0})  # inconsistent pair
    with pytest.raises(CompatibilityError):
        solve_by_division(spec, [f1, f2])


def test_division_consistent_two_tube_system():
    # Manufacture f_j = L_j u for u with a single (eta, xi) mode; the division
    # solver must reproduce u.
    spec = spec_from(2, [
        {"a": {"cf": "constant:2"}, "b": "0"},
        {"a": {"cf": "constant:6"}, "b": "0"},
    ])
    alpha = math.sqrt(2) - 1
    beta = math.sqrt(10) - 3
    eta, xi = (1, -2), 3
    c = 0.8 - 0.3j
    f1 = FourierField.from_modes(2, 32, {(eta, xi): 1j * (eta[0] + xi * alpha) * c})
    f2 = FourierField.from_modes(2, 32, {(eta, xi): 1j * (eta[1] + xi * beta) * c})
    u = solve_by_division(spec, [f1, f2])
    assert u.mode_coefficient(eta, xi) == pytest.approx(c, rel=1e-9)
    assert u.meta["zero_mode_normalized"]


def test_division_decay_preservation():
    # Gevrey-decaying data stays Gevrey after division by the small divisors
    # of the factorial continued fraction (numeric shadow of the a-priori
    # estimate): fitted rate of u at least half the rate of f, minus slack.
    spec = spec_from(1, [{"a": {"cf": "factorial_pow10"}, "b": "0"}], s="2")
    alpha = float(spec.tubes[0].a.mpf(60))
    modes = {}
    for xi in range(16, 1025):
        eta = -round(alpha * xi)  # most resonant integer pairing
        modes[(eta, xi)] = math.exp(-2.0 * xi**0.5)
    f = FourierField.from_modes(1, 256, modes)
    u = solve_by_division(spec, [f])
    eps_f = estimate_decay({xi: math.exp(-2.0 * xi**0.5) for xi in range(16, 1025)}, 2.0).epsilon
    w_u = decay_report(u, 2.0, xi_min=16, xi_max=1024)
    assert w_u.epsilon >= eps_f / 2 - 0.05


# ---------------------------------------------------------------------------
# Residual diagnostics
# ---------------------------------------------------------------------------


def test_residual_zero_pair():
    spec = spec_from(1, [{"a": "0", "b": "-1"}])
    z = FourierField(n=1, grid_size=32)
    assert residual(spec, z, [z]) == [0.0]


def test_residual_scales_linearly_with_mode_perturbation():
    spec = spec_from(1, [{"a": "1/3", "b": "-1"}])
    eta, xi = 2, 5
    c0 = 1 / 3 - 1j
    for delta in (1e-3, 1e-6):
        u = FourierField.from_modes(1, 64, {(eta, xi): delta})
        zero = FourierField.from_modes(1, 64, {(0, xi): 0.0})
        got = residual(spec, u, [zero])[0]
        want = abs(1j * (eta + xi * c0)) * delta
        assert got == pytest.approx(want, rel=1e-9)


def test_decay_report_delegates_to_fit():
    modes = {(0, xi): math.exp(-1.5 * xi**0.5) for xi in range(8, 200)}
    f = FourierField.from_modes(1, 32, modes)
    w = decay_report(f, 2.0)
    assert w.epsilon == pytest.approx(1.5, abs=1e-6)
