"""Periodic-function data model and Gevrey-regularity toolbox.

This module provides the pieces of the package that are about *regularity*
rather than about any particular equation:

* :class:`TrigPoly` — finite real trigonometric polynomials with exact
  rational or float coefficients.  These carry the tube coefficients and all
  closed-form antiderivatives used elsewhere.
* the weighted-composition combinatorics: the index sets Delta(m) of
  multiplicity vectors (k_1, ..., k_m) with k_1 + 2k_2 + ... + m*k_m = m,
  the exact product/sum identities over them, and the complete-Bell-polynomial
  recurrence for derivatives of exp(g).
* stretched-exponential decay diagnostics: fit ln|c_xi| against
  ln C - eps*|xi|^{1/s} and report the fitted rate as a
  :class:`GevreyWitness`.
* compactly supported order-s cutoff functions (s > 1) built from the
  mollifier psi(x) = exp(-x^{-1/(s-1)}).

Everything here is a pure function of its inputs and safe to call from
multiple threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import GeometryError, InsufficientData, OrderError, OutOfRange

Coeff = Union[Fraction, int, float]

#: magnitudes below this are treated as underflow noise, not signal
UNDERFLOW_FLOOR = 1e-300

#: default lower end of the decay-fitting window (preasymptotic cutoff)
DEFAULT_FIT_XI_MIN = 16


def _as_coeff(x) -> Coeff:
    """Normalize a scalar coefficient: strings and ints become Fractions."""
    if isinstance(x, (Fraction, float)):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"unsupported coefficient type: {type(x)!r}")


def _is_exact(x: Coeff) -> bool:
    return isinstance(x, (Fraction, int))


# ---------------------------------------------------------------------------
# TrigPoly
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrigPoly:
    """Real trigonometric polynomial  const + sum_k cos[k]*cos((k+1)t) + sin[k]*sin((k+1)t).

    Coefficients may be exact (:class:`fractions.Fraction`) or floats; exact
    inputs stay exact through differentiation, antidifferentiation and
    arithmetic.  The JSON form uses string coefficients for exact values::

        {"const": "1/2", "cos": ["0", "1/3"], "sin": ["1"]}

    means 1/2 + (1/3)cos(2t) + sin(t): array index k corresponds to frequency
    k+1.
    """

    const: Coeff = 0
    cos: tuple = ()
    sin: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "cos", tuple(_as_coeff(c) for c in self.cos))
        object.__setattr__(self, "sin", tuple(_as_coeff(c) for c in self.sin))
        object.__setattr__(self, "const", _as_coeff(self.const))

    # -- basic structure ----------------------------------------------------

    @property
    def degree(self) -> int:
        """Largest frequency with a (possibly zero) stored coefficient."""
        return max(len(self.cos), len(self.sin))

    @property
    def is_exact(self) -> bool:
        return (
            _is_exact(self.const)
            and all(_is_exact(c) for c in self.cos)
            and all(_is_exact(c) for c in self.sin)
        )

    @property
    def is_zero(self) -> bool:
        return self.const == 0 and all(c == 0 for c in self.cos) and all(
            c == 0 for c in self.sin
        )

    def coefficient(self, kind: str, k: int) -> Coeff:
        arr = self.cos if kind == "cos" else self.sin
        if 1 <= k <= len(arr):
            return arr[k - 1]
        return Fraction(0)

    def mean(self) -> Coeff:
        """The average over one period (the constant Fourier coefficient)."""
        return self.const

    # -- arithmetic -----------------------------------------------------------

    def _padded(self, n: int):
        cos = self.cos + (Fraction(0),) * (n - len(self.cos))
        sin = self.sin + (Fraction(0),) * (n - len(self.sin))
        return cos, sin

    def __add__(self, other: "TrigPoly") -> "TrigPoly":
        if not isinstance(other, TrigPoly):
            return NotImplemented
        n = max(self.degree, other.degree)
        c1, s1 = self._padded(n)
        c2, s2 = other._padded(n)
        return TrigPoly(
            self.const + other.const,
            tuple(a + b for a, b in zip(c1, c2)),
            tuple(a + b for a, b in zip(s1, s2)),
        )

    def __sub__(self, other: "TrigPoly") -> "TrigPoly":
        return self + (-other)

    def __neg__(self) -> "TrigPoly":
        return TrigPoly(-self.const, tuple(-c for c in self.cos), tuple(-c for c in self.sin))

    def scale(self, factor: Coeff) -> "TrigPoly":
        factor = _as_coeff(factor)
        return TrigPoly(
            self.const * factor,
            tuple(c * factor for c in self.cos),
            tuple(c * factor for c in self.sin),
        )

    def reflect(self) -> "TrigPoly":
        """t -> -t: cosines invariant, sines flip."""
        return TrigPoly(self.const, self.cos, tuple(-c for c in self.sin))

    def translate(self, tau: float) -> "TrigPoly":
        """Return the float-coefficient polynomial t -> self(t - tau)."""
        cos = []
        sin = []
        for k in range(1, self.degree + 1):
            ck = float(self.coefficient("cos", k))
            sk = float(self.coefficient("sin", k))
            # cos(k(t-tau)) = cos kt cos ktau + sin kt sin ktau
            # sin(k(t-tau)) = sin kt cos ktau - cos kt sin ktau
            ckt, skt = math.cos(k * tau), math.sin(k * tau)
            cos.append(ck * ckt - sk * skt)
            sin.append(ck * skt + sk * ckt)
        return TrigPoly(float(self.const), tuple(cos), tuple(sin))

    # -- calculus -------------------------------------------------------------

    def derivative(self) -> "TrigPoly":
        cos = []
        sin = []
        for k in range(1, self.degree + 1):
            ck = self.coefficient("cos", k)
            sk = self.coefficient("sin", k)
            cos.append(k * sk)
            sin.append(-k * ck)
        return TrigPoly(0, tuple(cos), tuple(sin))

    def antiderivative_periodic(self) -> "TrigPoly":
        """Pure periodic antiderivative of the oscillating part (no constant).

        Maps cos(kt) -> sin(kt)/k and sin(kt) -> -cos(kt)/k and drops the
        constant term; the full antiderivative is ``mean()*t`` plus this.
        """
        cos = []
        sin = []
        for k in range(1, self.degree + 1):
            ck = self.coefficient("cos", k)
            sk = self.coefficient("sin", k)
            cos.append(_div(-sk, k))
            sin.append(_div(ck, k))
        return TrigPoly(0, tuple(cos), tuple(sin))

    def primitive_from_zero(self) -> "TrigPoly":
        """The periodic function t -> integral_0^t (self - mean).

        Requires no assumption on the mean (it is removed); the result P
        satisfies P(0) = 0 and P' = self - mean.
        """
        p = self.antiderivative_periodic()
        # value at 0: sin terms vanish, cos terms contribute their coefficient
        at_zero = sum(p.cos, Fraction(0) if self.is_exact else 0.0)
        return TrigPoly(-at_zero, p.cos, p.sin)

    def lipschitz_bound(self) -> float:
        """Global bound on |self'|: sum_k k(|cos_k| + |sin_k|)."""
        return float(
            sum(
                k * (abs(self.coefficient("cos", k)) + abs(self.coefficient("sin", k)))
                for k in range(1, self.degree + 1)
            )
        )

    def sup_bound(self) -> float:
        """Crude upper bound on sup|self|: |const| + sum of coefficient moduli."""
        return float(
            abs(self.const)
            + sum(abs(c) for c in self.cos)
            + sum(abs(c) for c in self.sin)
        )

    # -- evaluation -----------------------------------------------------------

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.full_like(t, float(self.const), dtype=float)
        for k in range(1, self.degree + 1):
            ck = float(self.coefficient("cos", k))
            sk = float(self.coefficient("sin", k))
            if ck:
                out = out + ck * np.cos(k * t)
            if sk:
                out = out + sk * np.sin(k * t)
        return out

    def exp_coeffs(self) -> np.ndarray:
        """Complex exponential coefficients, index i <-> frequency i - degree."""
        d = self.degree
        out = np.zeros(2 * d + 1, dtype=complex)
        out[d] = float(self.const)
        for k in range(1, d + 1):
            ck = float(self.coefficient("cos", k))
            sk = float(self.coefficient("sin", k))
            out[d + k] = 0.5 * (ck - 1j * sk)
            out[d - k] = 0.5 * (ck + 1j * sk)
        return out

    # -- serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        def enc(x: Coeff):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, int):
                return str(x)
            return float(x)

        return {
            "const": enc(self.const),
            "cos": [enc(c) for c in self.cos],
            "sin": [enc(c) for c in self.sin],
        }

    @classmethod
    def from_json(cls, obj) -> "TrigPoly":
        if obj is None:
            return cls()
        if isinstance(obj, dict) and obj.get("zero"):
            return cls()
        if isinstance(obj, (int, float, str)):
            return cls(const=_parse_coeff(obj))
        if not isinstance(obj, dict):
            raise TypeError(f"cannot parse TrigPoly from {obj!r}")
        return cls(
            const=_parse_coeff(obj.get("const", 0)),
            cos=tuple(_parse_coeff(c) for c in obj.get("cos", ())),
            sin=tuple(_parse_coeff(c) for c in obj.get("sin", ())),
        )

    @classmethod
    def zero(cls) -> "TrigPoly":
        return cls()


def _parse_coeff(x) -> Coeff:
    """JSON coefficient convention: strings are exact, numbers are floats."""
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, bool):
        raise TypeError("boolean is not a coefficient")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    raise TypeError(f"unsupported coefficient {x!r}")


def _div(x: Coeff, k: int) -> Coeff:
    if isinstance(x, Fraction):
        return x / k
    if isinstance(x, int):
        return Fraction(x, k)
    return x / k


# ---------------------------------------------------------------------------
# Delta(m) combinatorics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeltaSet:
    """All multiplicity vectors (k_1, ..., k_m) with sum_l l*k_l = m."""

    m: int
    tuples: tuple

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)


def enumerate_delta(m: int) -> DeltaSet:
    """Exhaustively enumerate Delta(m); the count equals the partition number p(m)."""
    if not 1 <= m <= 30:
        raise OutOfRange(f"m={m} outside supported range [1, 30]")

    tuples: list = []

    def rec(remaining: int, largest: int, counts: dict):
        if remaining == 0:
            vec = [0] * m
            for part, mult in counts.items():
                vec[part - 1] = mult
            tuples.append(tuple(vec))
            return
        for part in range(min(largest, remaining), 0, -1):
            counts[part] = counts.get(part, 0) + 1
            rec(remaining - part, part, counts)
            counts[part] -= 1
            if counts[part] == 0:
                del counts[part]

    rec(m, m, {})
    tuples.sort(reverse=True)
    return DeltaSet(m, tuple(tuples))


def check_lemma_product_bound(tup: Sequence[int], s) -> bool:
    """Check (k!)^s * prod_l (l!)^{(s-1)k_l} <= k! * m!^{s-1} for one tuple.

    ``s`` may be an exact rational (checked in exact integer arithmetic) or a
    float (checked in log space with a tiny safety margin).  ``k`` is the sum
    of the multiplicities and ``m`` the weighted sum.
    """
    tup = tuple(int(x) for x in tup)
    m = sum((i + 1) * k for i, k in enumerate(tup))
    k = sum(tup)
    if isinstance(s, (int, Fraction)) or isinstance(s, str):
        s = Fraction(s)
        p, q = s.numerator, s.denominator
        if p <= q:
            raise OrderError("the product bound is stated for s > 1")
        kf = math.factorial(k)
        lhs = kf**p
        for ell, mult in enumerate(tup, start=1):
            if mult:
                lhs *= math.factorial(ell) ** ((p - q) * mult)
        rhs = kf**q * math.factorial(m) ** (p - q)
        return lhs <= rhs
    s = float(s)
    if s <= 1:
        raise OrderError("the product bound is stated for s > 1")
    lhs = s * math.lgamma(k + 1) + (s - 1) * sum(
        mult * math.lgamma(ell + 1) for ell, mult in enumerate(tup, start=1)
    )
    rhs = math.lgamma(k + 1) + (s - 1) * math.lgamma(m + 1)
    return lhs <= rhs + 1e-9


def sum_over_delta(m: int, R) -> Fraction:
    """Exact evaluation of sum over Delta(m) of k!/(k_1!...k_m!) R^k.

    Equals R(1+R)^{m-1} identically; both sides are exact rationals.
    """
    if not 1 <= m <= 20:
        raise OutOfRange(f"m={m} outside supported range [1, 20]")
    R = Fraction(R)
    total = Fraction(0)
    for tup in enumerate_delta(m):
        k = sum(tup)
        coef = math.factorial(k)
        for mult in tup:
            coef //= math.factorial(mult)
        total += coef * R**k
    return total


def exp_composition_derivatives(g_derivs: Sequence, m: int):
    """m-th derivative of exp(g) divided by exp(g), from g', g'', ..., g^(m).

    Evaluates the complete Bell polynomial B_m(g', ..., g^(m)) by the
    convolution recurrence  B_{j+1} = sum_i C(j, i) B_{j-i} g^{(i+1)},
    which is numerically stable at high orders.  Entries may be scalars or
    numpy arrays (broadcast elementwise).
    """
    if not 1 <= m <= 30:
        raise OutOfRange(f"m={m} outside supported range [1, 30]")
    if len(g_derivs) < m:
        raise OutOfRange(f"need {m} derivatives of g, got {len(g_derivs)}")
    first = np.asarray(g_derivs[0])
    bell = [np.ones(first.shape, dtype=complex) if first.shape else (1.0 + 0.0j)]
    for j in range(m):
        acc = None
        for i in range(j + 1):
            term = math.comb(j, i) * bell[j - i] * np.asarray(g_derivs[i], dtype=complex)
            acc = term if acc is None else acc + term
        bell.append(acc)
    out = bell[m]
    if np.ndim(out) == 0:
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# Decay diagnostics
# ---------------------------------------------------------------------------


@dataclass
class GevreyWitness:
    """Fitted stretched-exponential decay model  |c_xi| ~ C |xi|^power e^{-epsilon |xi|^{1/s}}.

    ``power`` is a nuisance parameter absorbing algebraic prefactors (Laplace
    corrections, root singularities); the headline rate is ``epsilon``.  ``h``
    is a derivative-side base constant that can only be estimated from
    derivative samples; when none are supplied it is set to 1 and
    ``h_fitted`` stays False.
    """

    s: float
    epsilon: float
    C: float
    h: float = 1.0
    fit_r2: float = 0.0
    power: float = 0.0
    h_fitted: bool = False
    n_points: int = 0

    def __post_init__(self):
        if self.C <= 0 or self.h <= 0:
            raise ValueError("C and h must be positive")
        if self.fit_r2 > 1 + 1e-12:
            raise ValueError("fit_r2 must be <= 1")

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "epsilon": self.epsilon,
            "C": self.C,
            "h": self.h,
            "h_fitted": self.h_fitted,
            "fit_r2": self.fit_r2,
            "power": self.power,
            "n_points": self.n_points,
        }


def _coeff_items(coeffs) -> Iterable:
    if isinstance(coeffs, Mapping):
        return coeffs.items()
    return coeffs


def estimate_decay(
    coeffs,
    s: float,
    xi_min: int = DEFAULT_FIT_XI_MIN,
    xi_max: int | None = None,
    *,
    envelope: bool = False,
) -> GevreyWitness:
    """Least-squares fit of ln|c_xi| ~ ln C + power*ln|xi| - epsilon*|xi|^{1/s}.

    ``coeffs`` maps frequency -> magnitude (dict or iterable of pairs).  Zero,
    non-finite and underflowed magnitudes (< 1e-300) are excluded, as are
    frequencies outside [xi_min, xi_max].  At least 8 usable points are
    required.  The ln|xi| column absorbs algebraic decay so that pure
    power-law data fits with epsilon ~ 0 while exact stretched-exponential
    data recovers its rate exactly.

    With ``envelope=True`` the fit reads the *upper* envelope: points falling
    far below the current fit are iteratively discarded.  This suits
    magnitudes with interference near-zeros (transforms of compactly
    supported bumps) where the dips carry no envelope information.  It is
    wrong for data whose outliers point upward — small-divisor resonance
    spikes — so it stays opt-in; the default is the plain fit.
    """
    s = float(s)
    if s < 1:
        raise OrderError(f"order s={s} must be >= 1")
    xs = []
    ys = []
    for xi, mag in _coeff_items(coeffs):
        axi = abs(int(xi))
        mag = float(mag)
        if axi < max(1, xi_min):
            continue
        if xi_max is not None and axi > xi_max:
            continue
        if not math.isfinite(mag) or mag < UNDERFLOW_FLOOR:
            continue
        xs.append(axi)
        ys.append(math.log(mag))
    if len(xs) < 8:
        raise InsufficientData(
            f"decay fit needs >= 8 usable coefficients, got {len(xs)}"
        )
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    design = np.column_stack([np.ones_like(x), np.log(x), x ** (1.0 / s)])

    keep = np.ones(len(x), dtype=bool)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    if envelope:
        # Iterative one-sided trim toward the upper envelope.  Clean
        # monotone data is never trimmed (all residuals stay small).
        for _ in range(4):
            resid = y - design @ coef
            new_keep = resid > -0.6
            if new_keep.sum() < max(8, int(0.4 * len(x))):
                break
            if bool(np.all(new_keep == keep)):
                break
            keep = new_keep
            coef, *_ = np.linalg.lstsq(design[keep], y[keep], rcond=None)
    pred = design[keep] @ coef
    ss_res = float(np.sum((y[keep] - pred) ** 2))
    ss_tot = float(np.sum((y[keep] - np.mean(y[keep])) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    eps_hat = -float(coef[2])
    return GevreyWitness(
        s=s,
        epsilon=max(eps_hat, UNDERFLOW_FLOOR),
        C=math.exp(min(float(coef[0]), 700.0)),
        h=1.0,
        fit_r2=r2,
        power=float(coef[1]),
        h_fitted=False,
        n_points=int(keep.sum()),
    )


def log_magnitude_table(values: Mapping[int, float]) -> dict:
    """Convenience: keep only positive finite magnitudes, as ln-values."""
    out = {}
    for xi, mag in values.items():
        mag = float(mag)
        if mag > 0 and math.isfinite(mag):
            out[int(xi)] = math.log(mag)
    return out


# ---------------------------------------------------------------------------
# Gevrey cutoffs
# ---------------------------------------------------------------------------


def _mollifier_exponent(s: float) -> float:
    return 1.0 / (s - 1.0)


def shoulder(x, s: float):
    """Monotone order-s shoulder: 0 for x<=0, 1 for x>=1, psi/(psi+psi(1-.)) between."""
    x = np.asarray(x, dtype=float)
    p = _mollifier_exponent(s)
    out = np.zeros_like(x)
    out[x >= 1.0] = 1.0
    mid = (x > 0.0) & (x < 1.0)
    if np.any(mid):
        xm = x[mid]
        with np.errstate(over="ignore", under="ignore", divide="ignore"):
            a = np.exp(-xm ** (-p))
            b = np.exp(-((1.0 - xm) ** (-p)))
        out[mid] = a / (a + b)
    return out


def _bit_reverse_permute(a: list) -> None:
    n = len(a)
    j = 0
    for i in range(1, n):
        bit = n >> 1
        while j & bit:
            j ^= bit
            bit >>= 1
        j |= bit
        if i < j:
            a[i], a[j] = a[j], a[i]


def _fft_pow2_inplace(a: list, roots: list) -> None:
    """Iterative radix-2 FFT over arbitrary-precision complex entries.

    ``roots[k]`` must hold e^{-2*pi*i*k/n} for k < n/2.  Used only where
    float64 FFT noise (~1e-16 relative) would swamp genuinely tiny
    coefficients.
    """
    n = len(a)
    _bit_reverse_permute(a)
    size = 2
    while size <= n:
        half = size // 2
        step = n // size
        for start in range(0, n, size):
            for k in range(half):
                w = roots[k * step]
                u = a[start + k]
                v = a[start + k + half] * w
                a[start + k] = u + v
                a[start + k + half] = u - v
        size *= 2


@dataclass
class GevreyCutoff:
    """Compactly supported order-s cutoff on (0, 2*pi).

    Identically 1 on ``plateau`` = [l', r'], identically 0 outside
    ``support`` = [l, r], monotone on each shoulder, and 0 <= phi <= 1
    everywhere.  ``witness`` records the numeric decay verification of its
    Fourier coefficients at order s.
    """

    s: float
    support: tuple
    plateau: tuple
    evaluator: Callable = field(repr=False)
    witness: GevreyWitness | None = None

    def __call__(self, t):
        return self.evaluator(np.asarray(t, dtype=float))

    def value_mp(self, t, mp):
        """Evaluate at one point in mpmath arithmetic (t an mpf)."""
        l, r = self.support
        l2, r2 = self.plateau
        p = _mollifier_exponent(self.s)

        def sh(x):
            if x <= 0:
                return mp.mpf(0)
            if x >= 1:
                return mp.mpf(1)
            a = mp.e ** (-(x ** (-p)))
            b = mp.e ** (-((1 - x) ** (-p)))
            return a / (a + b)

        return sh((t - l) / (l2 - l)) * sh((r - t) / (r - r2))

    def fourier_magnitudes(self, n_grid: int = 16384) -> dict:
        """|Fourier coefficient| at each positive frequency below n_grid/2.

        Float64 path: trustworthy only down to the FFT roundoff floor
        (~1e-16 in absolute terms); see :meth:`fourier_magnitudes_hiprec`
        for smaller magnitudes.
        """
        ts = 2.0 * np.pi * np.arange(n_grid) / n_grid
        vals = self(ts)
        spec = np.fft.rfft(vals) / n_grid
        return {k: float(abs(spec[k])) for k in range(1, n_grid // 2)}

    def fourier_magnitudes_hiprec(self, n_grid: int = 8192, dps: int = 40) -> dict:
        """|Fourier coefficient| via an FFT in ``dps``-digit arithmetic.

        Resolves magnitudes down to roughly 10**(-dps) in absolute terms,
        far below the float64 roundoff floor; needed to fit decay windows
        whose tail coefficients are genuinely below 1e-16.
        """
        from mpmath import mp, workdps

        if n_grid & (n_grid - 1):
            raise OutOfRange(f"n_grid={n_grid} must be a power of two")
        with workdps(dps):
            two_pi = 2 * mp.pi
            vals = [
                mp.mpc(self.value_mp(two_pi * k / n_grid, mp))
                for k in range(n_grid)
            ]
            roots = [mp.expjpi(mp.mpf(-2 * k) / n_grid) for k in range(n_grid // 2)]
            _fft_pow2_inplace(vals, roots)
            return {
                k: float(abs(vals[k]) / n_grid) for k in range(1, n_grid // 2)
            }


def make_cutoff(
    s: float,
    support: tuple,
    plateau: tuple,
    verify: bool = True,
    fit_window: tuple = (32, 2048),
) -> GevreyCutoff:
    """Build the order-s cutoff for plateau strictly inside support inside (0, 2pi).

    The construction composes two shoulders of the mollifier
    psi(x) = exp(-x^{-1/(s-1)}):  phi(t) = h((t-l)/(l'-l)) * h((r-t)/(r-r')).
    With ``verify`` the Fourier coefficients are computed in extended
    precision (the true tail lies below the float64 FFT noise floor), fitted
    at order s over ``fit_window``, and the witness stored on the returned
    object.
    """
    if s <= 1:
        raise OrderError(f"order-s cutoffs require s > 1, got s={s}")
    l, r = (float(support[0]), float(support[1]))
    l2, r2 = (float(plateau[0]), float(plateau[1]))
    if not (0.0 < l < l2 < r2 < r < 2.0 * np.pi):
        raise GeometryError(
            f"need 0 < {l} < {l2} < {r2} < {r} < 2*pi with plateau inside support"
        )

    def evaluator(t, _l=l, _r=r, _l2=l2, _r2=r2, _s=float(s)):
        t = np.asarray(t, dtype=float)
        left = shoulder((t - _l) / (_l2 - _l), _s)
        right = shoulder((_r - t) / (_r - _r2), _s)
        return left * right

    cut = GevreyCutoff(s=float(s), support=(l, r), plateau=(l2, r2), evaluator=evaluator)
    if verify:
        mags = cut.fourier_magnitudes_hiprec()
        cut.witness = estimate_decay(
            mags, s, xi_min=fit_window[0], xi_max=fit_window[1], envelope=True
        )
    return cut
