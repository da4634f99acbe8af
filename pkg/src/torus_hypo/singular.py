"""Constructive obstructions: solution families with prescribed slow decay.

Each builder returns a :class:`SingularSolution`: partial Fourier data
supported on a frequency ladder, together with a machine-checkable
certificate of the defining lower bounds.  Two single-tube mechanisms exist:

* rational average with one-signed-free ``b`` of zero mean
  (:func:`build_prop51`): the coefficients ``e^{qk(B(t) − B(t_0))}`` ride the
  homogeneous solution, have unit modulus at the peak ``t_0`` for every rung,
  and solve the homogeneous equation exactly;

* irrational average with sign-changing ``b`` (:func:`build_prop52`): a
  Laplace-type integral whose peak value decays only like ``ξ^{−1/2}`` while
  the corresponding right-hand side decays like ``e^{−B_0 ξ}`` — the
  smooth-data/non-smooth-solution dichotomy.

Products over tubes (:func:`build_product`) and the two lifts to systems with
identically-real tubes (:func:`build_rational_J`, :func:`build_expliouville_J`)
assemble the single-tube families into full obstructions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .diophantine import LiouvilleWitness, RealConstant, verify_witness_rows
from .errors import (
    GridMismatch,
    IntegralityError,
    LadderMismatch,
    MalformedInput,
    MeanNotZero,
    OrderError,
    ProfileError,
    WitnessMismatch,
)
from .gevrey import GevreyCutoff, TrigPoly, estimate_decay, make_cutoff
from .solver import FourierField, apply_tube_operator
from .system import CHANGES_SIGN, SystemSpec, Tube, analyze, sign_analysis

__all__ = [
    "LaplaceProfile",
    "SingularSolution",
    "build_prop51",
    "locate_laplace_profile",
    "build_prop52",
    "build_product",
    "build_rational_J",
    "build_expliouville_J",
    "fit_lower_bound_power",
]

TWO_PI = 2.0 * math.pi

#: Ladder rungs up to this frequency also get dense t-grid coefficient
#: blocks in build_prop52 (certificate tables always cover the full range).
DEFAULT_FIELD_XI_CAP = 64


def _integer_phase(m: int, grid: int) -> np.ndarray:
    """Samples of e^{i m t} on the uniform grid, angle-reduced exactly.

    The reduction m·k mod grid happens in integer arithmetic, so the sample
    arguments stay in [0, 2π) and the result is accurate to one rounding of
    exp even for huge |m|.
    """
    m_red = int(m) % grid
    idx = (m_red * np.arange(grid)) % grid
    return np.exp(2j * math.pi * idx / grid)


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LaplaceProfile:
    """Peak data of the kernel exponent ``(t, r) ↦ ∫_{t−r}^{t} b``.

    ``B0`` is the maximum (or the minimum of ``∫_t^{t+r} b`` in the mirrored
    ``b_0 > 0`` case, where it is negative), attained at ``(t0, r0)``;
    ``psi_curvature`` is the second r-derivative of the exponent at the peak,
    ``ψ''(r0) = −b'(t0 − r0)`` (sign flipped in the mirror case).
    """

    B0: float
    t0: float
    r0: float
    psi_curvature: float
    mirror: bool = False

    def proof_constant(self) -> float:
        """The conservative peak constant √(π/A) with A = |ψ''|/2."""
        A = abs(self.psi_curvature) / 2.0
        if A == 0:
            return math.inf
        return math.sqrt(math.pi / A)

    def to_json(self) -> dict:
        return {
            "B0": self.B0,
            "t0": self.t0,
            "r0": self.r0,
            "psi_curvature": self.psi_curvature,
            "mirror": self.mirror,
        }


@dataclass
class SingularSolution:
    """Ladder-supported partial Fourier data plus its certificate block."""

    construction: str  # Prop51 | Prop52 | Product | RationalJ | ExpLiouvilleJ
    coefficients: FourierField
    ladder: list
    certificates: dict
    rhs: dict = field(default_factory=dict)  # tube index -> FourierField

    def __post_init__(self):
        self.ladder = [int(x) for x in self.ladder]
        stored = set(self.coefficients.xi_values)
        if not stored.issubset(set(self.ladder)):
            raise LadderMismatch("coefficient blocks exist off the declared ladder")

    def lower_bound(self, xi: int) -> float:
        for row in self.certificates.get("lower_bound_table", ()):
            if int(row[0]) == int(xi):
                return float(row[1])
        raise LadderMismatch(f"no certified lower bound at xi={xi}")

    def certificate_block(self) -> dict:
        block = {
            "construction": self.construction,
            "ladder": self.ladder,
        }
        block.update(self.certificates)
        return block

    def to_json_obj(self) -> dict:
        return {
            "field": self.coefficients.to_json_obj(),
            "certificate": self.certificate_block(),
            "rhs": {str(j): f.to_json_obj() for j, f in self.rhs.items()},
        }


# ---------------------------------------------------------------------------
# Rational-average single tube
# ---------------------------------------------------------------------------


def _as_fraction(a0) -> Fraction:
    if isinstance(a0, RealConstant):
        if not a0.is_rational:
            raise MalformedInput("this construction requires a rational average")
        return a0.approx_fraction()
    if isinstance(a0, (Fraction, int)):
        return Fraction(a0)
    if isinstance(a0, str):
        return Fraction(a0)
    raise MalformedInput(f"cannot interpret {a0!r} as an exact rational")


def _argmax_trigpoly(p: TrigPoly, n_grid: int = 8192) -> float:
    """Deterministic peak of a trig polynomial: first grid argmax, then
    Newton on the derivative."""
    t = TWO_PI * np.arange(n_grid) / n_grid
    vals = np.asarray(p(t), dtype=float)
    best = float(t[int(np.argmax(vals))])
    dp = p.derivative()
    ddp = dp.derivative()
    x = best
    for _ in range(60):
        g = float(dp(x))
        h = float(ddp(x))
        if h == 0:
            break
        step = g / h
        x -= step
        if abs(step) < 1e-14:
            break
    if float(p(x)) >= float(p(best)):
        best = x % TWO_PI
    return best


def build_prop51(
    a0,
    b: TrigPoly,
    k_max: int,
    *,
    grid_size: int = 256,
    ladder: Sequence[int] | None = None,
) -> SingularSolution:
    """Homogeneous ladder solutions for a rational average p/q.

    With ``B`` the periodic primitive of the zero-mean ``b`` and ``t_0`` its
    peak, the rung at ξ = qk is ``û(t, qk) = e^{−iqk a_0 t} e^{qk(B(t)−B(t_0))}``.
    Every rung kills the tube operator exactly, ``|û(t_0, qk)| = 1`` for all
    k (the certified lower bound), and ``|û(t, qk)| ≤ 1`` everywhere.

    ``ladder`` optionally selects the multipliers k explicitly (sparse
    ladders for the resampling constructions); default is 1..k_max.
    """
    if not isinstance(b, TrigPoly):
        raise MalformedInput("b must be a TrigPoly")
    mean = b.mean()
    if not (mean == 0 if b.is_exact else abs(float(mean)) < 1e-14):
        raise MeanNotZero(f"b must have zero mean, got {mean}")
    frac = _as_fraction(a0)
    q = frac.denominator
    ks = [int(k) for k in (ladder if ladder is not None else range(1, k_max + 1))]
    if not ks or any(k < 1 for k in ks):
        raise MalformedInput("ladder multipliers must be positive")

    B = b.primitive_from_zero()
    t0 = _argmax_trigpoly(B)
    B_peak = float(B(t0))

    out = FourierField(n=1, grid_size=grid_size)
    t = out.t_grid()
    B_vals = np.asarray(B(t), dtype=float)
    table = []
    for k in ks:
        xi = q * k
        m = int(frac.numerator * k)  # qk * a0, an integer
        out.data[xi] = _integer_phase(-m, grid_size) * np.exp(xi * (B_vals - B_peak))
        table.append([xi, 1.0])

    cert = {
        "lower_bound_table": table,
        "decay_fits": {},
        "a0": str(frac),
        "q": q,
        "t0": t0,
        "B_peak": B_peak,
        "peak_is_exact_unit": True,
        "m": 0,
    }
    return SingularSolution(
        construction="Prop51",
        coefficients=out,
        ladder=[q * k for k in ks],
        certificates=cert,
    )


# ---------------------------------------------------------------------------
# Laplace profile location
# ---------------------------------------------------------------------------


def _locate_forward(b: TrigPoly) -> LaplaceProfile:
    """Maximize G(t, r) = ∫_{t−r}^{t} b over [0, 2π]²."""
    b0 = float(b.mean())
    Bper = b.primitive_from_zero()
    n = 1024
    t = TWO_PI * np.arange(n) / n
    r = TWO_PI * np.arange(n) / n
    Bt = np.asarray(Bper(t), dtype=float)
    G = b0 * r[None, :] + Bt[:, None] - np.asarray(
        Bper(t[:, None] - r[None, :]), dtype=float
    )
    flat = int(np.argmax(G))  # first maximizer in lexicographic (t, r) order
    i, j = divmod(flat, n)
    t_cur, r_cur = float(t[i]), float(r[j])

    db = b.derivative()

    def grad_hess(tc, rc):
        bt = float(b(tc))
        bw = float(b(tc - rc))
        dbt = float(db(tc))
        dbw = float(db(tc - rc))
        g = np.array([bt - bw, bw])
        H = np.array([[dbt - dbw, dbw], [dbw, -dbw]])
        return g, H

    for _ in range(80):
        g, H = grad_hess(t_cur, r_cur)
        det = float(np.linalg.det(H))
        if abs(det) < 1e-14:
            break
        step = np.linalg.solve(H, g)
        if not np.all(np.isfinite(step)):
            break
        t_cur -= float(step[0])
        r_cur -= float(step[1])
        if float(np.hypot(*step)) < 1e-14:
            break

    g, _ = grad_hess(t_cur, r_cur)
    if float(np.hypot(*g)) > 1e-9:
        raise ProfileError(
            "kernel-exponent peak refinement did not converge to a critical point"
        )
    t_cur %= TWO_PI
    r_cur %= TWO_PI
    B0 = b0 * r_cur + float(Bper(t_cur)) - float(Bper(t_cur - r_cur))
    if not 1e-9 < r_cur < TWO_PI - 1e-9 or B0 <= 1e-12:
        raise ProfileError(
            f"no interior positive maximum found (B0={B0:.3e}, r0={r_cur:.3e})"
        )
    curvature = -float(db(t_cur - r_cur))
    return LaplaceProfile(
        B0=B0, t0=t_cur, r0=r_cur, psi_curvature=curvature, mirror=False
    )


def locate_laplace_profile(b: TrigPoly, a0, mirror: bool = False) -> LaplaceProfile:
    """Peak of the kernel exponent for a certified sign-changing ``b``.

    Grid search on a 1024² lattice (deterministic lexicographic tie-break)
    followed by Newton refinement of the critical-point system
    ``b(t) = b(t−r) = 0`` to ~1e−12.  With ``mirror=True`` the quantity
    minimized is ``∫_t^{t+r} b`` (the ``b_0 > 0`` branch): computed by
    reflecting ``b(t) ↦ −b(−t)``, reusing the forward path, and mapping the
    peak back (``B0`` and the curvature change sign, ``t0 ↦ −t0``).

    ``a0`` does not enter the landscape; it is accepted for interface
    symmetry with the builders.
    """
    del a0
    if sign_analysis(b) != CHANGES_SIGN:
        raise ProfileError("profile location requires a certified sign-changing b")
    if not mirror:
        return _locate_forward(b)
    reflected = b.reflect().scale(-1)  # c(t) = -b(-t)
    p = _locate_forward(reflected)
    return LaplaceProfile(
        B0=-p.B0,
        t0=(-p.t0) % TWO_PI,
        r0=p.r0,
        psi_curvature=-p.psi_curvature,
        mirror=True,
    )


# ---------------------------------------------------------------------------
# Irrational-average single tube (Laplace construction)
# ---------------------------------------------------------------------------


def _periodic_cutoff_eval(cutoff: GevreyCutoff, x: np.ndarray) -> np.ndarray:
    return np.asarray(cutoff(np.mod(x, TWO_PI)), dtype=float)


def _power_fit(table: dict, lo: int, hi: int) -> dict:
    """ln|v| ≈ ln C + p ln ξ over [lo, hi]; returns {power, C, fit_r2, n}."""
    xs = [xi for xi, v in table.items() if lo <= xi <= hi and v > 0]
    xs.sort()
    if len(xs) < 4:
        raise MalformedInput("power fit needs at least 4 usable rows")
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray([table[k] for k in xs], dtype=float))
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    pred = design @ coef
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot
    return {
        "power": float(coef[1]),
        "C": math.exp(float(coef[0])),
        "fit_r2": r2,
        "n_points": len(xs),
    }


def fit_lower_bound_power(
    solution: SingularSolution, lo: int | None = None, hi: int | None = None
) -> dict:
    """Power-law fit of a solution's certified lower-bound table.

    Defaults: fit over [max(16, 4·min rung), max rung].  A product of m
    Laplace-type tubes should fit power ≈ −m/2.
    """
    table = {int(xi): float(v) for xi, v in solution.certificates["lower_bound_table"]}
    rungs = sorted(table)
    if not rungs:
        raise MalformedInput("solution carries no certified lower bounds")
    if lo is None:
        lo = max(16, 4 * rungs[0])
    if hi is None:
        hi = rungs[-1]
    return _power_fit(table, int(lo), int(hi))


def _build_prop52_forward(
    a0_value: float,
    b: TrigPoly,
    s: float,
    xi_max: int,
    field_xi_cap: int,
    grid_size: int,
) -> tuple:
    """Core construction for the b0 ≤ 0 branch; returns (field, rhs, cert)."""
    profile = locate_laplace_profile(b, a0_value, mirror=False)
    b0 = float(b.mean())
    Bper = b.primitive_from_zero()

    # Cutoff centered at the peak foot t0 - r0.  If the foot sits too close
    # to the seam 0 ~ 2π the whole picture is translated (grid-aligned) so
    # the bump lives well inside the fundamental interval.
    center = (profile.t0 - profile.r0) % TWO_PI
    h = TWO_PI / grid_size
    sigma = round(((math.pi - center) % TWO_PI) / h) * h  # t' = t + sigma
    center_sh = (center + sigma) % TWO_PI
    t0_sh = (profile.t0 + sigma) % TWO_PI
    delta = min(0.5, min(center_sh, TWO_PI - center_sh) / 2.0)
    if delta <= 0:
        raise ProfileError("cutoff support degenerate after translation")
    cutoff = make_cutoff(
        s,
        (center_sh - delta, center_sh + delta),
        (center_sh - delta / 2.0, center_sh + delta / 2.0),
    )

    b_sh = b.translate(sigma)  # b'(t') = b(t' - sigma)
    Bper_sh = b_sh.primitive_from_zero()
    B_off = float(Bper_sh(t0_sh))  # additive constant; differences matter only

    def im_H_sh(t_arr, r_arr):
        # Im H(t', r) = b0 r + Bper'(t') - Bper'(t' - r)
        return (
            b0 * r_arr
            + np.asarray(Bper_sh(t_arr), dtype=float)
            - np.asarray(Bper_sh(t_arr - r_arr), dtype=float)
        )

    def u_row(t_points: np.ndarray, xi: int) -> np.ndarray:
        """û'(t', ξ) on given t' points by trapezoid over r.

        This is the exact periodic solution operator applied to f̂: where the
        bump argument t' − r wraps below 0 the data picks up the holonomy
        phase e^{−i2πξa₀} (the cutoff vanishes near the seam, so the phase
        switch multiplies zero and the integrand stays smooth and periodic).
        """
        n_r = max(1024, 4 * xi)
        r = TWO_PI * np.arange(n_r) / n_r
        w = t_points[:, None] - r[None, :]
        expo = im_H_sh(t_points[:, None], r[None, :]) - profile.B0
        bump = _periodic_cutoff_eval(cutoff, w)
        holonomy = np.where(w < 0, np.exp(-2j * math.pi * xi * a0_value), 1.0)
        integral = np.exp(np.minimum(expo * xi, 0.0)) * bump * holonomy
        vals = integral.sum(axis=1) * (TWO_PI / n_r)
        phase = np.exp(-1j * xi * a0_value * (t_points - t0_sh))
        return phase * vals

    # Certificate tables over the full frequency range (peak value is the
    # integral at t' = t0'; the phase there is 1).
    u_table = {}
    f_table = {}
    t0_arr = np.array([t0_sh])
    for xi in range(1, xi_max + 1):
        u_table[xi] = float(np.abs(u_row(t0_arr, xi))[0])
        c0 = complex(a0_value, b0)
        pref = abs(1.0 - np.exp(-2j * math.pi * xi * c0))
        ln_f = -profile.B0 * xi
        f_table[xi] = float(pref * math.exp(max(ln_f, -745.0)) if ln_f > -745.0 else 0.0)

    # Dense coefficient blocks (and the matching right-hand side) on the
    # low rungs, in the original frame: u(t) = u'(t + sigma).
    shift_steps = int(round(sigma / h)) % grid_size
    field_out = FourierField(n=1, grid_size=grid_size)
    rhs_out = FourierField(n=1, grid_size=grid_size)
    t_grid = field_out.t_grid()
    t_sh_grid = t_grid  # uniform grid is translation-invariant; roll below
    for xi in range(1, min(xi_max, field_xi_cap) + 1):
        u_sh = u_row(t_sh_grid, xi)
        c0 = complex(a0_value, b0)
        pref = 1.0 - np.exp(-2j * math.pi * xi * c0)
        f_sh = (
            pref
            * math.exp(max(-profile.B0 * xi, -745.0))
            * np.exp(-1j * xi * a0_value * (t_sh_grid - t0_sh))
            * _periodic_cutoff_eval(cutoff, t_sh_grid)
        )
        # u(t_k) = u'(t_k + sigma): sample u' at shifted grid = roll by steps
        field_out.data[xi] = np.roll(u_sh, -shift_steps)
        rhs_out.data[xi] = np.roll(f_sh, -shift_steps)

    cert = {
        "lower_bound_table": [[xi, u_table[xi]] for xi in sorted(u_table)],
        "profile": profile.to_json(),
        "t0": profile.t0,
        "translation": sigma,
        "delta": delta,
        "cutoff_witness": cutoff.witness.to_json() if cutoff.witness else None,
        "f_table": [[xi, f_table[xi]] for xi in sorted(f_table)],
        "m": 1,
        "B_offset": B_off,
    }
    return field_out, rhs_out, cert, u_table, f_table, profile


def build_prop52(
    a0,
    b: TrigPoly,
    s: float,
    xi_max: int,
    *,
    grid_size: int = 128,
    field_xi_cap: int = DEFAULT_FIELD_XI_CAP,
    fit_window: tuple = (64, None),
) -> SingularSolution:
    """Laplace-peak solutions: Gevrey right-hand side, non-Gevrey solution.

    Requires an irrational-leaning average (the construction never divides,
    so only ``ξ c_0 ∉ ℤ`` matters for the prefactor) and a certified
    sign-changing ``b``.  The rung at frequency ξ is

        û(t, ξ) = e^{−iξ a_0 (t − t_0)} ∫_0^{2π} e^{ξ(Im H(t,r) − B_0)} φ(t−r) dr

    with φ a Gevrey-s cutoff at the peak foot; the matching right-hand side
    is ``f̂(t, ξ) = (1 − e^{−i2πξc_0}) e^{−B_0 ξ} e^{−iξa_0(t−t_0)} φ(t)``.
    Certificates store |û(t_0, ξ)| for ξ ≤ xi_max (the ``C·ξ^{−1/2}`` table),
    the closed-form |f̂| table, the fitted peak power / stretched-exponential
    rates, and the proof-side constant √(π/A) for comparison.

    The solution rows are produced by the exact periodic solution operator
    (holonomy-phased wrap of the bump), so the stored pair satisfies the tube
    equation to quadrature/roundoff accuracy; all certified quantities are
    direct evaluations of the formulas.
    """
    s = float(s)
    if s <= 1:
        raise OrderError(f"Gevrey order must exceed 1, got s={s}")
    if xi_max < 8:
        raise MalformedInput("xi_max must be at least 8")
    if isinstance(a0, RealConstant):
        a0_value = float(a0)
        a0_json = a0.to_json()
    else:
        a0_value = float(a0)
        a0_json = a0_value
    b0 = float(b.mean())
    mirror = b0 > 0

    if not mirror:
        field_out, rhs_out, cert, u_table, f_table, profile = _build_prop52_forward(
            a0_value, b, s, xi_max, field_xi_cap, grid_size
        )
    else:
        # b0 > 0: build for c(t) = -b(-t) (same a0) and map back by
        # u(t) = conj(v(-t)), f(t) = -conj(g(-t)); magnitudes are unchanged.
        reflected = b.reflect().scale(-1)
        field_c, rhs_c, cert, u_table, f_table, profile_c = _build_prop52_forward(
            a0_value, reflected, s, xi_max, field_xi_cap, grid_size
        )
        idx = (-np.arange(grid_size)) % grid_size
        field_out = FourierField(n=1, grid_size=grid_size)
        rhs_out = FourierField(n=1, grid_size=grid_size)
        for xi in field_c.xi_values:
            field_out.data[xi] = np.conj(field_c.values(xi)[idx])
            rhs_out.data[xi] = -np.conj(rhs_c.values(xi)[idx])
        profile = LaplaceProfile(
            B0=-profile_c.B0,
            t0=(-profile_c.t0) % TWO_PI,
            r0=profile_c.r0,
            psi_curvature=-profile_c.psi_curvature,
            mirror=True,
        )
        cert["profile"] = profile.to_json()
        cert["t0"] = profile.t0
        cert["mirror_mapped"] = True

    lo = int(fit_window[0])
    hi = int(fit_window[1]) if fit_window[1] is not None else xi_max
    peak_fit = _power_fit(u_table, lo, hi)
    u_decay = estimate_decay(u_table, s, xi_min=lo, xi_max=hi)
    f_decay = estimate_decay(f_table, s, xi_min=lo, xi_max=hi)
    cert["decay_fits"] = {
        "peak_power": peak_fit,
        "u_at_t0": u_decay.to_json(),
        "f": f_decay.to_json(),
        "proof_constant": profile.proof_constant(),
        "fit_window": [lo, hi],
        "order": s,
    }
    cert["a0"] = a0_json

    sol = SingularSolution(
        construction="Prop52",
        coefficients=field_out,
        ladder=list(range(1, xi_max + 1)),
        certificates=cert,
    )
    sol.rhs = {1: rhs_out}
    return sol


# ---------------------------------------------------------------------------
# Products over tubes
# ---------------------------------------------------------------------------


def build_product(
    spec: SystemSpec,
    per_tube: Sequence[SingularSolution],
    q: int,
    k_max: int,
    *,
    ladder: Sequence[int] | None = None,
    dense_rungs: Sequence[int] | None = None,
    field_grid: int | None = None,
) -> SingularSolution:
    """Tensor the per-tube ladders: û(t, qk) = ∏_j û_j(t_j, qk).

    The certified lower bound per rung is the product of the stored per-tube
    bounds, exactly as stored, for the whole ladder qk (k = 1..k_max, or the
    explicit ``ladder`` of multipliers).  The n-dimensional coefficient
    blocks are materialized only on ``dense_rungs`` (default: every rung);
    the bound table is grid-free and covers the full ladder either way.
    Every per-tube solution must carry a coefficient block at each dense
    rung; missing rungs raise :class:`LadderMismatch`.  ``m`` counts the
    Laplace-type factors (fitted decay ``(C/√ξ)^m``).

    ``field_grid`` materializes the blocks on a coarser grid (a divisor of
    the per-tube grid): grid data are pointwise samples, so striding them is
    exact and keeps n-dimensional blocks small.
    """
    n = spec.n
    if len(per_tube) != n:
        raise LadderMismatch(f"need one tube solution per variable ({n}), got {len(per_tube)}")
    q = int(q)
    if q < 1:
        raise MalformedInput("q must be a positive integer")
    ks = [int(k) for k in (ladder if ladder is not None else range(1, k_max + 1))]
    rungs = [q * k for k in ks]
    dense = rungs if dense_rungs is None else sorted(
        {int(xi) for xi in dense_rungs} & set(rungs)
    )
    grid = per_tube[0].coefficients.grid_size
    out_grid = grid if field_grid is None else int(field_grid)
    if out_grid < 1 or grid % out_grid:
        raise GridMismatch(
            f"field grid {out_grid} must divide the per-tube grid {grid}"
        )
    stride = grid // out_grid
    for j, sol in enumerate(per_tube, start=1):
        if sol.coefficients.n != 1:
            raise LadderMismatch(f"tube solution {j} is not single-variable")
        if sol.coefficients.grid_size != grid:
            raise GridMismatch("per-tube solutions use different grid sizes")
        for xi in dense:
            if not sol.coefficients.has_xi(xi):
                raise LadderMismatch(f"tube solution {j} has no rung at xi={xi}")

    out = FourierField(n=n, grid_size=out_grid)
    for xi in dense:
        block = per_tube[0].coefficients.values(xi)[::stride]
        for sol in per_tube[1:]:
            block = np.multiply.outer(block, sol.coefficients.values(xi)[::stride])
        out.data[xi] = block

    m = sum(1 for sol in per_tube if sol.construction == "Prop52")
    table = []
    for xi in rungs:
        prod = 1.0
        for sol in per_tube:
            prod *= sol.lower_bound(xi)
        table.append([xi, prod])

    cert = {
        "lower_bound_table": table,
        "decay_fits": {"per_tube": [sol.certificates.get("decay_fits", {}) for sol in per_tube]},
        "m": m,
        "q": q,
        "t0": [sol.certificates.get("t0") for sol in per_tube],
        "per_tube_constructions": [sol.construction for sol in per_tube],
        "dense_rungs": len(dense),
    }
    return SingularSolution(
        construction="Product",
        coefficients=out,
        ladder=rungs,
        certificates=cert,
    )


# ---------------------------------------------------------------------------
# Lifts to systems with identically-real tubes
# ---------------------------------------------------------------------------


def _j_partition(spec: SystemSpec):
    analysis = analyze(spec)
    J = list(analysis.J)
    if not J:
        raise MalformedInput("system has no identically-real tubes")
    rest = [j for j in range(1, spec.n + 1) if j not in J]
    return analysis, J, rest


def _embed_factors(n: int, grid: int, axis_vectors: dict, block, block_axes: list):
    """Product of 1-D factors on given axes with an optional joint block."""
    if block is None:
        out = np.ones((grid,) * n, dtype=complex)
    else:
        expanded = block
        for ax in range(n):
            if ax not in block_axes:
                expanded = np.expand_dims(expanded, ax)
        out = np.broadcast_to(expanded, (grid,) * n).astype(complex)
    for ax, vec in axis_vectors.items():
        shape = [1] * n
        shape[ax] = grid
        out = out * vec.reshape(shape)
    return out


def build_rational_J(
    spec: SystemSpec,
    v: SingularSolution | None,
    q: int,
    *,
    k_max: int | None = None,
    dense_rungs: Sequence[int] | None = None,
    grid_size: int | None = None,
) -> SingularSolution:
    """Lift a product solution across rational-average real tubes.

    For each rung ξ = qk the real tubes contribute pure phases
    ``e^{−iqk a_{j0} t_j}`` (integral frequencies because q·a_{j0} ∈ ℤ —
    :class:`IntegralityError` otherwise), so ``L_j u = 0`` exactly for j in
    the real set; the other tubes keep v's certificates.  When every tube is
    real (ℓ = n), ``v`` may be None and the rungs are pure phase products
    with certified bound 1.

    Coefficient blocks are materialized where v has them (all-real case: on
    ``dense_rungs``, default everywhere); the bound table covers the full
    ladder.  A materialized phase must stay below the grid Nyquist limit so
    the stored samples determine the mode — :class:`GridMismatch` otherwise.
    """
    analysis, J, rest = _j_partition(spec)
    q = int(q)
    if q < 1:
        raise MalformedInput("q must be a positive integer")
    n = spec.n

    fracs = {}
    for j in J:
        a = analysis.a0[j - 1]
        if not a.is_rational:
            raise IntegralityError(f"tube {j} average is not rational")
        frac = a.approx_fraction()
        if (q * frac).denominator != 1:
            raise IntegralityError(
                f"q={q} does not clear the denominator of tube {j} average {frac}"
            )
        fracs[j] = frac

    if rest:
        if v is None:
            raise MalformedInput("v is required when some tubes are not identically real")
        if v.coefficients.n != len(rest):
            raise LadderMismatch(
                f"v covers {v.coefficients.n} variables but {len(rest)} tubes are not real"
            )
        grid = v.coefficients.grid_size
        rungs = [q * k for k in range(1, k_max + 1)] if k_max is not None else list(v.ladder)
        if any(xi % q for xi in rungs):
            raise LadderMismatch("v's ladder is not supported on multiples of q")
        dense = [xi for xi in rungs if v.coefficients.has_xi(xi)]
    else:
        if k_max is None:
            raise MalformedInput("k_max is required when all tubes are real")
        grid = grid_size if grid_size is not None else 128
        rungs = [q * k for k in range(1, k_max + 1)]
        dense = rungs if dense_rungs is None else sorted(
            {int(xi) for xi in dense_rungs} & set(rungs)
        )

    out = FourierField(n=n, grid_size=grid)
    for xi in dense:
        phases = {}
        for j in J:
            mjk = int(xi * fracs[j])  # integral by the q-check
            if 2 * abs(mjk) >= grid:
                raise GridMismatch(
                    f"tube {j} phase frequency {mjk} at rung xi={xi} reaches the "
                    f"grid Nyquist limit {grid // 2}; raise the grid size or "
                    f"lower the dense-rung cap"
                )
            phases[j - 1] = _integer_phase(-mjk, grid)
        block = v.coefficients.values(xi) if rest else None
        out.data[xi] = _embed_factors(n, grid, phases, block, [j - 1 for j in rest])

    # Spectral residual of the real tubes (zero in exact arithmetic).
    resid_table = []
    for j in J:
        lj = apply_tube_operator(spec, j, out)
        resid_table.append([j, lj.max_abs()])

    if rest:
        table = [[xi, v.lower_bound(xi)] for xi in rungs]
        decay = dict(v.certificates.get("decay_fits", {}))
        m = v.certificates.get("m", 0)
        t0 = v.certificates.get("t0")
    else:
        table = [[xi, 1.0] for xi in rungs]
        decay = {}
        m = 0
        t0 = None

    cert = {
        "lower_bound_table": table,
        "decay_fits": decay,
        "m": m,
        "q": q,
        "J": J,
        "a_J0": {str(j): str(fracs[j]) for j in J},
        "residual_real_tubes": resid_table,
        "t0": t0,
    }
    return SingularSolution(
        construction="RationalJ",
        coefficients=out,
        ladder=rungs,
        certificates=cert,
    )


def _ln_abs_fraction(x: Fraction) -> float:
    """ln|x| for an arbitrary-size Fraction (never overflows)."""
    if x == 0:
        return -math.inf
    num, den = abs(x.numerator), x.denominator

    def ln_int(n: int) -> float:
        bl = n.bit_length()
        if bl <= 900:
            return math.log(n)
        shift = bl - 53
        return math.log(n >> shift) + shift * math.log(2.0)

    return ln_int(num) - ln_int(den)


def build_expliouville_J(
    spec: SystemSpec,
    witness: LiouvilleWitness,
    v: SingularSolution | None,
    q: int,
    *,
    grid_size: int | None = None,
) -> SingularSolution:
    """Lift across irrational real tubes along a fast-approximation ladder.

    ``witness`` must be the q-rescaled simultaneous-approximation witness for
    the real-tube averages: rows (p_k, ξ_k) with ξ_k ∈ q·ℕ strictly
    increasing and ``max_j |p_k^{(j)} + ξ_k a_{j0}| ≤ scale·e^{−δ ξ_k^{1/s}}``.
    Rungs are resampled to ξ_k with ``û = v̂(t'', ξ_k) e^{i p_k·t'}``; the
    real tubes' right-hand sides ``f̂_j = i(p_k^{(j)} + a_{j0} ξ_k) û`` then
    decay at the witness rate — the certificate verifies the row bounds in
    exact arithmetic and stores the per-row divisors.  When every tube is
    real (ℓ = n), ``v`` is None and the rungs are pure phase products with
    certified bound 1.

    Witness frequencies may exceed the grid Nyquist limit: the stored grid
    samples are pointwise-exact values of the phases, but spectral reads of
    such a block (FFT, grid derivatives) need a grid larger than twice the
    largest phase frequency.  The certificate rows are grid-free.
    """
    analysis, J, rest = _j_partition(spec)
    q = int(q)
    ell = len(J)
    order = spec.order
    if not order.is_gevrey:
        raise OrderError("the exponential-witness lift needs a Gevrey order s > 1")
    s = float(order.s)

    if not witness.pairs:
        raise WitnessMismatch("empty witness")
    if witness.length != ell:
        raise WitnessMismatch(
            f"witness covers {witness.length} components but {ell} tubes are real"
        )
    if witness.bound_scale % q or any(s_k % q for _, s_k in witness.pairs):
        raise WitnessMismatch("witness is not rescaled by the ladder factor q")

    components = [analysis.a0[j - 1] for j in J]
    checks = verify_witness_rows(witness, components, s)
    if not all(checks):
        bad = [k for k, ok in enumerate(checks) if not ok]
        raise WitnessMismatch(f"witness rows {bad} fail verification")

    rungs = [s_k for _, s_k in witness.pairs]
    if rest:
        if v is None:
            raise WitnessMismatch("v is required when some tubes are not identically real")
        for xi in rungs:
            if not v.coefficients.has_xi(xi):
                raise WitnessMismatch(f"v has no rung at witness frequency xi={xi}")
        if v.coefficients.n != len(rest):
            raise WitnessMismatch(
                f"v covers {v.coefficients.n} variables but {len(rest)} tubes are not real"
            )
    elif v is not None:
        raise WitnessMismatch("every tube is identically real; v must be None")

    n = spec.n
    if v is not None:
        grid = v.coefficients.grid_size
    else:
        grid = grid_size if grid_size is not None else 128
    out = FourierField(n=n, grid_size=grid)
    rhs = {j: FourierField(n=n, grid_size=grid) for j in J}

    a_fracs = [c.approx_fraction(60) for c in components]
    row_checks = []
    f_tables = {j: [] for j in J}
    for (p_vec, xi) in witness.pairs:
        phases = {J[i] - 1: _integer_phase(p_vec[i], grid) for i in range(ell)}
        block = v.coefficients.values(xi) if rest else None
        u_block = _embed_factors(n, grid, phases, block, [j - 1 for j in rest])
        out.data[xi] = u_block

        ln_bound = math.log(witness.bound_scale) - witness.delta * xi ** (1.0 / s)
        v_max = float(np.abs(block).max()) if rest else 1.0
        for i, j in enumerate(J):
            divisor = Fraction(p_vec[i]) + a_fracs[i] * xi
            d_float = float(divisor)
            rhs[j].data[xi] = 1j * d_float * u_block
            ln_d = _ln_abs_fraction(divisor)
            row_checks.append(
                {
                    "xi": xi,
                    "tube": j,
                    "ln_divisor": ln_d,
                    "ln_bound": ln_bound,
                    "within_bound": bool(ln_d <= ln_bound + 1e-12),
                }
            )
            f_tables[j].append([xi, abs(d_float) * v_max])

    decay = {
        "witness_delta": witness.delta,
        "witness_scale": witness.bound_scale,
        "order": s,
        "f_tables": {str(j): rows for j, rows in f_tables.items()},
    }
    # Certified stretched-exponential rate of the real-tube data: the row
    # bounds give |f̂_j| ≤ scale·max|v̂|·e^{−δ ξ^{1/s}} exactly.
    eps_cert = witness.delta
    decay["epsilon_certified"] = eps_cert
    if len(rungs) >= 8:
        flat = {xi: val for xi, val in f_tables[J[0]]}
        try:
            decay["f_fit"] = estimate_decay(flat, s, xi_min=1).to_json()
        except Exception:  # pragma: no cover - tiny ladders simply skip the fit
            pass

    if v is not None:
        table = [[xi, v.lower_bound(xi)] for xi in rungs]
        m_cert = v.certificates.get("m", 0)
        t0_cert = v.certificates.get("t0")
    else:
        table = [[xi, 1.0] for xi in rungs]
        m_cert = 0
        t0_cert = None
    cert = {
        "lower_bound_table": table,
        "decay_fits": decay,
        "m": m_cert,
        "q": q,
        "J": J,
        "witness": witness.to_json(),
        "row_checks": row_checks,
        "t0": t0_cert,
    }
    sol = SingularSolution(
        construction="ExpLiouvilleJ",
        coefficients=out,
        ladder=rungs,
        certificates=cert,
    )
    sol.rhs = rhs
    return sol
