"""Gauge transform: primitives, conjugation defect, derivative growth."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from torus_hypo import normalform as NF
from torus_hypo.gevrey import TrigPoly
from torus_hypo.solver import FourierField
from torus_hypo.system import SystemSpec


def spec_from(n, tubes, s="2") -> SystemSpec:
    return SystemSpec.from_json({"n": n, "s": s, "tubes": tubes})


def random_field(n: int, grid: int, degree: int, xi_values, seed: int) -> FourierField:
    rng = random.Random(seed)
    modes = {}
    for xi in xi_values:
        for _ in range(4):
            if n == 1:
                eta = rng.randint(-degree, degree)
            else:
                eta = tuple(rng.randint(-degree, degree) for _ in range(n))
            modes[(eta, xi)] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return FourierField.from_modes(n, grid, modes)


# ---------------------------------------------------------------------------
# Normal-form construction
# ---------------------------------------------------------------------------


def test_build_normal_form_cosine():
    spec = spec_from(1, [{"a": {"cos": ["1"]}, "b": {"const": "-1"}}])
    nf = NF.build_normal_form(spec)
    # primitive of cos is sin; average is 0
    assert nf.A[0].to_json() == {"const": "0", "cos": ["0"], "sin": ["1"]}
    assert nf.normalized.tubes[0].a.fraction == 0


def test_build_normal_form_constant_is_trivial():
    spec = spec_from(1, [{"a": "1/2", "b": {"const": "-1"}}])
    nf = NF.build_normal_form(spec)
    assert nf.is_trivial()
    assert nf.A[0].is_zero


def test_build_normal_form_shifted_cosine():
    spec = spec_from(1, [{"a": {"const": "1/2", "cos": ["0", "1"]}, "b": {"const": "-1"}}])
    nf = NF.build_normal_form(spec)
    assert nf.A[0].to_json() == {"const": "0", "cos": ["0", "0"], "sin": ["0", "1/2"]}
    assert nf.normalized.tubes[0].a.fraction == pytest.approx(0.5)


def test_build_normal_form_idempotent():
    spec = spec_from(2, [
        {"a": {"const": "1/3", "cos": ["1", "1/2"]}, "b": {"sin": ["1"]}},
        {"a": {"sin": ["2"]}, "b": "0"},
    ])
    nf = NF.build_normal_form(spec)
    again = NF.build_normal_form(nf.normalized)
    assert again.is_trivial()
    assert all(p.is_zero for p in again.A)


def test_normal_form_primitive_identity():
    # A_j' = a_j - a_{j0} pointwise for each variable.
    spec = spec_from(2, [
        {"a": {"const": "1/3", "cos": ["1", "1/2"], "sin": ["0", "2"]}, "b": {"sin": ["1"]}},
        {"a": {"sin": ["2"]}, "b": "0"},
    ])
    nf = NF.build_normal_form(spec)
    ts = np.linspace(0, 2 * math.pi, 97)
    for j, tube in enumerate(spec.tubes):
        a = tube.a
        mean = float(a.mean())
        dA = nf.A[j].derivative()
        for t in ts:
            assert dA(t) == pytest.approx(a(t) - mean, abs=1e-12)
        assert abs(nf.A[j](0.0) - nf.A[j](2 * math.pi)) < 1e-12  # periodic


def test_normal_form_json_round_trip():
    spec = spec_from(1, [{"a": {"cos": ["1"]}, "b": {"const": "-1"}}])
    nf = NF.build_normal_form(spec)
    obj = nf.to_json()
    assert isinstance(obj["A"], list) and len(obj["A"]) == 1
    back = SystemSpec.from_json(obj["normalized"])
    assert back.to_json() == nf.normalized.to_json()


# ---------------------------------------------------------------------------
# Gauge application
# ---------------------------------------------------------------------------


def test_apply_gauge_identity_for_zero_A():
    f = random_field(1, 64, 8, [1, 2, 5], seed=3)
    g = NF.apply_gauge(f, [TrigPoly.zero()], "forward")
    for xi in f.xi_values:
        assert np.allclose(g.values(xi), f.values(xi), atol=0, rtol=0)


def test_apply_gauge_round_trip():
    A = [TrigPoly.from_json({"sin": ["1"], "cos": ["0", "1/3"]})]
    f = random_field(1, 128, 8, [1, 3, 9, 16], seed=11)
    back = NF.apply_gauge(NF.apply_gauge(f, A, "forward"), A, "inverse")
    for xi in f.xi_values:
        num = np.abs(back.values(xi) - f.values(xi)).max()
        assert num <= 1e-13 * max(1.0, np.abs(f.values(xi)).max())


def test_apply_gauge_pointwise_formula():
    A = [TrigPoly.from_json({"sin": ["1"]})]
    f = FourierField.from_modes(1, 64, {(0, 1): 1.0})
    g = NF.apply_gauge(f, A, "forward")
    t = f.t_grid()
    assert np.abs(g.values(1) - np.exp(1j * np.sin(t))).max() == 0.0


def test_apply_gauge_preserves_magnitudes():
    A = [TrigPoly.from_json({"sin": ["1"], "cos": ["1/2"]})]
    f = random_field(1, 128, 8, [1, 2, 7, 33], seed=5)
    g = NF.apply_gauge(f, A, "forward")
    for xi in f.xi_values:
        diff = np.abs(np.abs(g.values(xi)) - np.abs(f.values(xi))).max()
        assert diff <= 1e-14 * max(1.0, np.abs(f.values(xi)).max())


def test_gauge_factor_unit_modulus():
    A = TrigPoly.from_json({"sin": ["1"]})
    t = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    for xi in (1, 17, 1024):
        vals = np.exp(1j * xi * A(t))
        assert np.abs(np.abs(vals) - 1.0).max() <= 1e-14


# ---------------------------------------------------------------------------
# Conjugation defect
# ---------------------------------------------------------------------------


def test_conjugation_residual_constant_coefficients():
    spec = spec_from(1, [{"a": "1/2", "b": {"const": "-1"}}])
    f = random_field(1, 64, 8, [1, 2], seed=1)
    assert NF.conjugation_residual(spec, f) == 0.0


def test_conjugation_residual_cosine_tube():
    spec = spec_from(1, [{"a": {"cos": ["1"]}, "b": {"const": "-1"}}])
    f = FourierField.from_modes(1, 128, {(1, 1): 1.0})
    assert NF.conjugation_residual(spec, f) <= 1e-10


def test_conjugation_residual_random_fields():
    spec = spec_from(1, [{"a": {"cos": ["1"]}, "b": {"const": "-1", "cos": ["-1"]}}])
    for seed in range(5):
        f = random_field(1, 128, 8, [1, 2, 3, 5, 8], seed=seed)
        assert NF.conjugation_residual(spec, f) <= 1e-10, seed


def test_conjugation_residual_two_variables():
    spec = spec_from(2, [
        {"a": {"cos": ["1"]}, "b": {"const": "-1"}},
        {"a": {"const": "1/3", "sin": ["0", "1"]}, "b": {"sin": ["1"]}},
    ])
    f = random_field(2, 64, 4, [1, 3], seed=9)
    assert NF.conjugation_residual(spec, f) <= 1e-10


# ---------------------------------------------------------------------------
# Derivative growth of the gauge factor
# ---------------------------------------------------------------------------


def test_gauge_derivative_growth_is_alpha_geometric():
    A = TrigPoly.from_json({"sin": ["1"]})
    out = NF.gauge_derivative_growth(A, 2.0, 1.0, alpha_max=8, xi_values=[16, 64, 256, 1024])
    assert out["finite"]
    assert out["fitted_C"] > 0
    assert math.isfinite(out["fitted_C"])
    assert out["orders"] == list(range(9))
    # alpha-geometric growth: the data stays within a constant of pref * C^alpha
    C, pref = out["fitted_C"], out["prefactor"]
    for alpha, bound in zip(out["orders"], out["bounds"]):
        assert bound <= 20.0 * pref * C**alpha, alpha
    # fitted model explains the data
    assert out["fit_r2"] >= 0.9
