"""Combinatorial identities, trig-polynomial data model, decay fitting, cutoffs."""

from __future__ import annotations

import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torus_hypo.errors import GeometryError, InsufficientData, OrderError, OutOfRange
from torus_hypo.gevrey import (
    TrigPoly,
    check_lemma_product_bound,
    enumerate_delta,
    estimate_decay,
    exp_composition_derivatives,
    make_cutoff,
    shoulder,
    sum_over_delta,
)

# Integer partition counts p(1)..p(12).
PARTITION_COUNTS = [1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]


# ---------------------------------------------------------------------------
# Weighted-composition set Delta(m)
# ---------------------------------------------------------------------------


def test_enumerate_delta_m1():
    assert enumerate_delta(1).tuples == ((1,),)


def test_enumerate_delta_m3():
    got = set(enumerate_delta(3).tuples)
    assert got == {(3, 0, 0), (1, 1, 0), (0, 0, 1)}


def test_enumerate_delta_counts_match_partition_numbers():
    for m, expected in enumerate(PARTITION_COUNTS, start=1):
        ds = enumerate_delta(m)
        assert len(ds.tuples) == expected
        assert len(set(ds.tuples)) == expected  # duplicate-free


def test_enumerate_delta_weighted_sum_invariant():
    for m in range(1, 13):
        for tup in enumerate_delta(m).tuples:
            assert len(tup) == m
            assert sum((l + 1) * k for l, k in enumerate(tup)) == m
            assert all(k >= 0 for k in tup)


def test_enumerate_delta_out_of_range():
    with pytest.raises(OutOfRange):
        enumerate_delta(0)
    with pytest.raises(OutOfRange):
        enumerate_delta(31)


# ---------------------------------------------------------------------------
# Factorial product bound (exhaustive oracle)
# ---------------------------------------------------------------------------


def test_product_bound_equality_case():
    # m=2, tuple (0,1): k=1, LHS = (1!)^2 * (2!)^1 = 2, RHS = 1! * (2!)^1 = 2.
    assert check_lemma_product_bound((0, 1), 2)


def test_product_bound_trivial_m1():
    for s in (Fraction(3, 2), 2, 3):
        assert check_lemma_product_bound((1,), s)


@pytest.mark.parametrize("s", [Fraction(3, 2), Fraction(2), Fraction(3)])
def test_product_bound_exhaustive_small(s):
    for m in range(1, 9):
        for tup in enumerate_delta(m).tuples:
            assert check_lemma_product_bound(tup, s), (m, tup, s)


def test_product_bound_brute_force_cross_check():
    # Independent route: evaluate both sides as exact integers for s = 2.
    for m in range(1, 8):
        for tup in enumerate_delta(m).tuples:
            k = sum(tup)
            lhs = math.factorial(k) ** 2
            for l, mult in enumerate(tup, start=1):
                lhs *= math.factorial(l) ** mult
            rhs = math.factorial(k) * math.factorial(m)
            assert check_lemma_product_bound(tup, 2) == (lhs <= rhs)


# ---------------------------------------------------------------------------
# Weighted multinomial sum over Delta(m)
# ---------------------------------------------------------------------------


def test_sum_over_delta_m1_identity():
    for r in (Fraction(2), Fraction(-3, 4), Fraction(10, 7)):
        assert sum_over_delta(1, r) == r


def test_sum_over_delta_m2_unit():
    assert sum_over_delta(2, Fraction(1)) == 2


def test_sum_over_delta_m5_closed_form():
    r = Fraction(3, 7)
    assert sum_over_delta(5, r) == r * (1 + r) ** 4


def test_sum_over_delta_matches_closed_form_random():
    rng = random.Random(20260815)
    for _ in range(50):
        m = rng.randint(1, 20)
        r = Fraction(rng.randint(-40, 40), rng.randint(1, 30))
        assert sum_over_delta(m, r) == r * (1 + r) ** (m - 1)


def test_sum_over_delta_out_of_range():
    with pytest.raises(OutOfRange):
        sum_over_delta(21, Fraction(1))


# ---------------------------------------------------------------------------
# Bell-recurrence derivatives of exp(g)
# ---------------------------------------------------------------------------


def test_exp_composition_first_orders():
    a, b = 0.7 + 0.2j, -1.1 + 0.05j
    assert exp_composition_derivatives([a], 1) == pytest.approx(a)
    assert exp_composition_derivatives([a, b], 2) == pytest.approx(a * a + b)


def test_exp_composition_pure_phase():
    # g(t) = i t: only g' = i survives; d^4/dt^4 e^{it} = e^{it}.
    got = exp_composition_derivatives([1j, 0, 0, 0], 4)
    assert got == pytest.approx(1.0)


def test_exp_composition_against_high_precision_derivatives():
    # Dual route: mpmath numerical differentiation of t -> exp(g(t)) for a
    # degree-3 trig polynomial g, orders up to 6.
    g = TrigPoly.from_json({"const": "1/5", "cos": ["1/2", "0", "1/3"], "sin": ["0", "1/4", "0"]})
    t0 = 0.613
    with mpmath.workdps(50):

        def g_mp(t):
            return (
                mpmath.mpf(1) / 5
                + mpmath.cos(t) / 2
                + mpmath.cos(3 * t) / 3
                + mpmath.sin(2 * t) / 4
            )

        derivs = [complex(mpmath.diff(g_mp, t0, k)) for k in range(1, 7)]
        for m in range(1, 7):
            want = complex(
                mpmath.diff(lambda t: mpmath.exp(g_mp(t)), t0, m)
                / mpmath.exp(g_mp(t0))
            )
            got = exp_composition_derivatives(derivs[:m], m)
            assert abs(got - want) <= 1e-6 * max(1.0, abs(want)), m
    assert g(t0) == pytest.approx(1 / 5 + math.cos(t0) / 2 + math.cos(3 * t0) / 3 + math.sin(2 * t0) / 4)


def test_exp_composition_out_of_range():
    with pytest.raises(OutOfRange):
        exp_composition_derivatives([1.0] * 31, 31)


# ---------------------------------------------------------------------------
# TrigPoly data model
# ---------------------------------------------------------------------------


def test_trig_poly_evaluation_and_mean():
    p = TrigPoly.from_json({"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]})
    t = 0.7
    assert p(t) == pytest.approx(0.5 + math.cos(2 * t) / 3 + math.sin(t))
    assert p.mean() == Fraction(1, 2)
    assert TrigPoly.from_json("0").is_zero
    assert TrigPoly.from_json({"sin": ["1"]}).mean() == 0


def test_trig_poly_json_round_trip():
    obj = {"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]}
    assert TrigPoly.from_json(obj).to_json() == obj
    assert TrigPoly.from_json("1/2").to_json() == {"const": "1/2", "cos": [], "sin": []}


def test_trig_poly_real_spectrum_symmetry():
    p = TrigPoly.from_json({"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]})
    c = p.exp_coeffs()
    deg = p.degree
    for eta in range(-deg, deg + 1):
        assert c[deg + eta] == pytest.approx(np.conj(c[deg - eta]))


def test_trig_poly_spectral_derivative_vs_finite_differences():
    # Degree-32 polynomial; 5-point central stencil at step 3e-4.
    rng = random.Random(7)
    cos = [str(Fraction(rng.randint(-3, 3), rng.randint(1, 5))) for _ in range(32)]
    sin = [str(Fraction(rng.randint(-3, 3), rng.randint(1, 5))) for _ in range(32)]
    p = TrigPoly.from_json({"const": "0", "cos": cos, "sin": sin})
    dp = p.derivative()
    h = 3e-4
    for t in (0.1, 1.3, 2.9, 5.0):
        fd = (-p(t + 2 * h) + 8 * p(t + h) - 8 * p(t - h) + p(t - 2 * h)) / (12 * h)
        assert abs(dp(t) - fd) <= 1e-7 * max(1.0, abs(dp(t)))


def test_trig_poly_translate_reflect_conventions():
    p = TrigPoly.from_json({"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]})
    t, tau = 0.7, 0.31
    assert p.translate(tau)(t) == pytest.approx(p(t - tau))
    assert p.reflect()(t) == pytest.approx(p(-t))


def test_trig_poly_antiderivatives():
    p = TrigPoly.from_json({"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]})
    B = p.antiderivative_periodic()
    assert B.mean() == 0
    t = 1.9
    assert B.derivative()(t) == pytest.approx(p(t) - float(p.mean()))
    P = p.primitive_from_zero()
    assert P(0.0) == pytest.approx(0.0)
    assert P.derivative()(t) == pytest.approx(p(t) - float(p.mean()))


def test_trig_poly_bounds_dominate_samples():
    p = TrigPoly.from_json({"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]})
    ts = np.linspace(0, 2 * math.pi, 512, endpoint=False)
    vals = p(ts)
    dvals = p.derivative()(ts)
    assert p.sup_bound() >= np.max(np.abs(vals)) - 1e-12
    assert p.lipschitz_bound() >= np.max(np.abs(dvals)) - 1e-12


@settings(max_examples=40, deadline=None)
@given(
    tau=st.floats(min_value=-6.0, max_value=6.0, allow_nan=False),
    t=st.floats(min_value=0.0, max_value=6.28, allow_nan=False),
)
def test_trig_poly_periodicity_property(tau, t):
    p = TrigPoly.from_json({"const": "1/3", "cos": ["1/2"], "sin": ["0", "1/5"]})
    assert p(t + 2 * math.pi) == pytest.approx(p(t), abs=1e-9)
    assert p.translate(tau)(t) == pytest.approx(p(t - tau), abs=1e-9)


# ---------------------------------------------------------------------------
# Stretched-exponential decay fitting
# ---------------------------------------------------------------------------


def test_estimate_decay_exact_model():
    coeffs = {xi: math.exp(-2.0 * xi**0.5) for xi in range(16, 600)}
    w = estimate_decay(coeffs, 2.0)
    assert abs(w.epsilon - 2.0) <= 1e-6
    assert w.fit_r2 > 1 - 1e-9


def test_estimate_decay_algebraic_decay_is_not_gevrey():
    coeffs = {xi: xi**-0.5 for xi in range(64, 4097)}
    w = estimate_decay(coeffs, 2.0, xi_min=64, xi_max=4096)
    assert w.epsilon <= 1e-3


def test_estimate_decay_insufficient_data():
    with pytest.raises(InsufficientData):
        estimate_decay({7: 1.0}, 2.0)


def test_estimate_decay_witness_invariants():
    coeffs = {xi: 3.0 * math.exp(-1.5 * xi**0.5) for xi in range(16, 300)}
    w = estimate_decay(coeffs, 2.0)
    assert w.epsilon > 0 and w.C > 0 and w.h > 0
    assert w.fit_r2 <= 1.0
    assert not w.h_fitted  # no derivative data supplied


# ---------------------------------------------------------------------------
# Gevrey cutoffs
# ---------------------------------------------------------------------------


def test_shoulder_ramp():
    assert shoulder(-1.0, 2.0) == 0.0
    assert shoulder(0.0, 2.0) == 0.0
    assert shoulder(1.0, 2.0) == 1.0
    assert shoulder(2.0, 2.0) == 1.0
    xs = np.linspace(0.01, 0.99, 51)
    ys = [shoulder(x, 2.0) for x in xs]
    assert all(0.0 <= y <= 1.0 for y in ys)
    assert all(b >= a - 1e-15 for a, b in zip(ys, ys[1:]))  # monotone ramp


def test_make_cutoff_contract():
    phi = make_cutoff(2.0, (math.pi - 1, math.pi + 1), (math.pi - 0.5, math.pi + 0.5), verify=False)
    assert phi(math.pi) == pytest.approx(1.0)
    assert phi(math.pi - 0.25) == pytest.approx(1.0)
    assert phi(math.pi - 1) == pytest.approx(0.0)
    assert phi(math.pi + 1.2) == 0.0
    assert phi(0.05) == 0.0
    ts = np.linspace(0, 2 * math.pi, 1024)
    vals = np.array([phi(t) for t in ts])
    assert np.all(vals >= 0.0) and np.all(vals <= 1.0)
    # monotone shoulders
    left = np.array([phi(t) for t in np.linspace(math.pi - 1, math.pi - 0.5, 64)])
    assert np.all(np.diff(left) >= -1e-12)
    right = np.array([phi(t) for t in np.linspace(math.pi + 0.5, math.pi + 1, 64)])
    assert np.all(np.diff(right) <= 1e-12)


def test_make_cutoff_rejects_bad_geometry():
    with pytest.raises(GeometryError):
        make_cutoff(2.0, (1.0, 2.0), (0.5, 1.5), verify=False)  # plateau not inside
    with pytest.raises(GeometryError):
        make_cutoff(2.0, (-0.5, 2.0), (0.5, 1.0), verify=False)  # support leaves (0, 2pi)


def test_make_cutoff_rejects_analytic_order():
    with pytest.raises(OrderError):
        make_cutoff(1.0, (2.0, 4.0), (2.5, 3.5), verify=False)


def test_make_cutoff_fourier_magnitudes_decay():
    phi = make_cutoff(2.0, (math.pi - 1, math.pi + 1), (math.pi - 0.5, math.pi + 0.5), verify=False)
    mags = phi.fourier_magnitudes(2048)
    # crude sanity: high tail far below low-frequency mass
    low = max(mags[xi] for xi in range(1, 8))
    high = max(mags[xi] for xi in range(256, 512))
    assert high < 1e-6 * low
