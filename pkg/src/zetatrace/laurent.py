"""Meromorphic factor products in the regulator and truncated Laurent expansions at z = 0.

A regulator-dependent coefficient ``K(z)`` is kept as a product of primitive
factors (Gamma of an affine argument, a half-turn exponential ``e^{i pi (a z + b)}``,
an integer power of an affine polynomial, and rational powers of positive
parameter monomials).  Each factor has a closed Taylor/Laurent expansion at
``z = 0``; products expand by truncated convolution.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import mpmath

from .errors import (
    DivergentLimit,
    UnsupportedFactor,
    UnsupportedStructure,
    ZeroOverZeroUnresolved,
)
from .params import ExpKey, ParamPoly, _fraction, log_param

DEFAULT_ORDER = 4
MAX_ORDER = 16


class FactorKind(str, Enum):
    GAMMA = "gamma"
    EXP_IPI = "exp_ipi"
    AFFINE = "affine"
    CONST_POW = "const_pow"


def half_turn(beta: Fraction) -> complex:
    """e^{i pi beta}, exact for integer and half-integer beta."""
    r = beta % 2
    if r == 0:
        return 1.0 + 0j
    if r == 1:
        return -1.0 + 0j
    if r == Fraction(1, 2):
        return 1j
    if r == Fraction(3, 2):
        return -1j
    return cmath.exp(1j * math.pi * float(beta))


@lru_cache(maxsize=None)
def polygamma_value(k: int, x: Fraction) -> float:
    """psi^(k)(x) for rational non-pole x, evaluated once and cached."""
    return float(mpmath.psi(k, mpmath.mpf(x.numerator) / x.denominator))


@lru_cache(maxsize=None)
def gamma_value(beta: Fraction) -> ParamPoly:
    """Gamma(beta) as a ParamPoly; integer/half-integer arguments stay exact in pi^(1/2)."""
    if beta.denominator == 1:
        if beta <= 0:
            raise UnsupportedFactor(f"Gamma pole at {beta}")
        return ParamPoly.number(float(math.factorial(beta.numerator - 1)))
    if beta.denominator == 2:
        # Gamma(1/2 + k) = rational * sqrt(pi)
        k = int(beta - Fraction(1, 2))
        rat = Fraction(1)
        if k >= 0:
            for j in range(k):
                rat *= Fraction(1, 2) + j
        else:
            for j in range(1, -k + 1):
                rat /= Fraction(1, 2) - j
        return ParamPoly.monomial(float(rat), {"pi": Fraction(1, 2)})
    return ParamPoly.number(float(mpmath.gamma(mpmath.mpf(beta.numerator) / beta.denominator)))


@dataclass(frozen=True)
class PrimitiveFactor:
    """One primitive meromorphic building block in a single regulator."""

    kind: FactorKind
    alpha: Fraction
    beta: Fraction
    power: int = 1
    base: tuple[float, ExpKey] | None = None  # positive monomial: (coeff, exponent key)
    regulator: str = "z"

    # -- constructors -------------------------------------------------------

    @staticmethod
    def gamma(alpha, beta, regulator="z") -> "PrimitiveFactor":
        return PrimitiveFactor(FactorKind.GAMMA, _fraction(alpha), _fraction(beta), regulator=regulator)

    @staticmethod
    def exp_ipi(alpha, beta, regulator="z") -> "PrimitiveFactor":
        return PrimitiveFactor(FactorKind.EXP_IPI, _fraction(alpha), _fraction(beta), regulator=regulator)

    @staticmethod
    def affine(alpha, beta, power=1, regulator="z") -> "PrimitiveFactor":
        return PrimitiveFactor(
            FactorKind.AFFINE, _fraction(alpha), _fraction(beta), power=power, regulator=regulator
        )

    @staticmethod
    def const_pow(base: ParamPoly, alpha, beta, regulator="z") -> "PrimitiveFactor":
        mono = base.single_monomial()
        if mono is None or not base.is_positive_monomial():
            raise UnsupportedStructure("const_pow base must be a positive monomial")
        coeff, key = mono
        return PrimitiveFactor(
            FactorKind.CONST_POW,
            _fraction(alpha),
            _fraction(beta),
            base=(coeff.real, key),
            regulator=regulator,
        )

    # -- properties ---------------------------------------------------------

    def base_poly(self) -> ParamPoly:
        coeff, key = self.base
        return ParamPoly({key: coeff})

    def pole_order(self) -> int:
        """Order of the pole at z = 0 (negative for a zero)."""
        if self.kind is FactorKind.GAMMA:
            if self.beta.denominator == 1 and self.beta <= 0:
                if self.alpha == 0:
                    raise UnsupportedFactor("Gamma pole with no regulator dependence")
                return 1
            return 0
        if self.kind is FactorKind.AFFINE and self.beta == 0:
            return -self.power
        return 0

    def numeric(self, z: complex, gamma_fn: Callable[[complex], complex] | None = None,
                bindings=None) -> complex:
        """Direct numeric value at a given z (for oracle comparisons)."""
        arg = complex(self.alpha) * z + complex(self.beta)
        if self.kind is FactorKind.GAMMA:
            g = gamma_fn or (lambda w: complex(mpmath.gamma(w)))
            return g(arg)
        if self.kind is FactorKind.EXP_IPI:
            return cmath.exp(1j * math.pi * arg)
        if self.kind is FactorKind.AFFINE:
            return arg ** self.power
        b = self.base_poly().eval(bindings or {})
        return b ** arg

    def render(self) -> str:
        z = self.regulator
        a, b = self.alpha, self.beta
        arg = _affine_str(a, b, z)
        if self.kind is FactorKind.GAMMA:
            return f"Gamma({arg})"
        if self.kind is FactorKind.EXP_IPI:
            return f"e^(i*pi*({arg}))"
        if self.kind is FactorKind.AFFINE:
            return f"({arg})^{self.power}" if self.power != 1 else f"({arg})"
        return f"({self.base_poly().render(mul='*')})^({arg})"


def _affine_str(a: Fraction, b: Fraction, z: str) -> str:
    parts = []
    if a != 0:
        if a == 1:
            parts.append(z)
        elif a == -1:
            parts.append(f"-{z}")
        else:
            parts.append(f"{a}*{z}")
    if b != 0 or not parts:
        s = str(b)
        parts.append(f"+{s}" if b >= 0 and parts else s)
    return "".join(parts)


@dataclass(frozen=True)
class MeroFactorProduct:
    """Prefactor times a product of primitive factors."""

    prefactor: ParamPoly
    factors: tuple[PrimitiveFactor, ...] = ()

    @staticmethod
    def from_number(c) -> "MeroFactorProduct":
        return MeroFactorProduct(ParamPoly.number(c))

    def scaled(self, poly: ParamPoly) -> "MeroFactorProduct":
        return MeroFactorProduct(self.prefactor * poly, self.factors)

    def times(self, other: "MeroFactorProduct") -> "MeroFactorProduct":
        return MeroFactorProduct(self.prefactor * other.prefactor, self.factors + other.factors)

    def pole_order(self) -> int:
        return sum(f.pole_order() for f in self.factors)

    def numeric(self, z: complex, gamma_fn=None, bindings=None) -> complex:
        v = self.prefactor.eval(bindings or {})
        for f in self.factors:
            v *= f.numeric(z, gamma_fn, bindings)
        return v

    def render(self) -> str:
        parts = [self.prefactor.render(mul="*")]
        parts += [f.render() for f in self.factors]
        return " * ".join(parts)


# ---------------------------------------------------------------------------
# Laurent series with ring-element coefficients
# ---------------------------------------------------------------------------


class LaurentSeries:
    """Truncated Laurent series sum(coeffs[j] * z^(lead + j)).

    Coefficients are any ring elements supporting ``+``, ``*`` (by another
    coefficient or a scalar via ``scale``) and ``is_zero``.  The engine uses
    ``ParamPoly`` coefficients here and term-sum coefficients in the limit
    machinery.
    """

    __slots__ = ("lead", "coeffs")

    def __init__(self, lead: int, coeffs: Sequence):
        self.lead = lead
        self.coeffs = list(coeffs)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def normalized(self) -> "LaurentSeries":
        lead, coeffs = self.lead, list(self.coeffs)
        while coeffs and coeffs[0].is_zero():
            coeffs.pop(0)
            lead += 1
        return LaurentSeries(lead, coeffs)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def coeff_at(self, power: int):
        idx = power - self.lead
        if 0 <= idx < len(self.coeffs):
            return self.coeffs[idx]
        return None

    def add(self, other: "LaurentSeries", zero) -> "LaurentSeries":
        lead = min(self.lead, other.lead)
        top = min(self.lead + len(self.coeffs), other.lead + len(other.coeffs))
        n = top - lead
        out = [zero for _ in range(max(n, 0))]
        for i in range(len(out)):
            p = lead + i
            a = self.coeff_at(p)
            b = other.coeff_at(p)
            if a is not None:
                out[i] = out[i] + a
            if b is not None:
                out[i] = out[i] + b
        return LaurentSeries(lead, out)

    def mul(self, other: "LaurentSeries", zero) -> "LaurentSeries":
        n = min(len(self.coeffs), len(other.coeffs))
        out = [zero for _ in range(n)]
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                if i + j < n:
                    out[i + j] = out[i + j] + a * b
        return LaurentSeries(self.lead + other.lead, out)

    def scale(self, poly) -> "LaurentSeries":
        return LaurentSeries(self.lead, [c * poly for c in self.coeffs])

    def shift(self, k: int) -> "LaurentSeries":
        return LaurentSeries(self.lead + k, self.coeffs)

    def render(self, regulator: str = "z") -> str:
        parts = []
        for j, c in enumerate(self.coeffs):
            p = self.lead + j
            if c.is_zero():
                continue
            cs = c.render() if hasattr(c, "render") else str(c)
            if p == 0:
                parts.append(f"({cs})")
            else:
                parts.append(f"({cs}) {regulator}^{p}")
        return " + ".join(parts) if parts else "0"


def _numeric_series(lead: int, coeffs: Sequence[complex]) -> LaurentSeries:
    return LaurentSeries(lead, [ParamPoly.number(c) for c in coeffs])


def _exp_numeric(linear: Sequence[complex], order: int) -> list[complex]:
    """Taylor coefficients of exp(sum_k linear[k] z^(k+1)) to z^order."""
    poly = [0j] * (order + 1)
    for k, c in enumerate(linear):
        if k + 1 <= order:
            poly[k + 1] = c
    acc = [0j] * (order + 1)
    acc[0] = 1.0
    term = [0j] * (order + 1)
    term[0] = 1.0
    for n in range(1, order + 1):
        nxt = [0j] * (order + 1)
        for i in range(order + 1):
            if term[i] == 0:
                continue
            for j in range(1, order + 1 - i):
                nxt[i + j] += term[i] * poly[j]
        term = [v / n for v in nxt]
        for i in range(order + 1):
            acc[i] += term[i]
        if all(v == 0 for v in term):
            break
    return acc


def _reciprocal_numeric(coeffs: Sequence[complex], order: int) -> list[complex]:
    """Reciprocal Taylor coefficients of a series with nonzero constant term."""
    a0 = coeffs[0]
    if a0 == 0:
        raise UnsupportedStructure("reciprocal of a series with zero lead")
    out = [0j] * (order + 1)
    out[0] = 1.0 / a0
    for n in range(1, order + 1):
        s = 0j
        for k in range(1, n + 1):
            ak = coeffs[k] if k < len(coeffs) else 0j
            s += ak * out[n - k]
        out[n] = -s / a0
    return out


def expand_factor(f: PrimitiveFactor, order: int = DEFAULT_ORDER) -> LaurentSeries:
    """Laurent series of a primitive factor at z = 0, ``order`` terms past the lead."""
    if order < 2:
        raise ValueError("order must be >= 2")
    a = f.alpha

    if f.kind is FactorKind.EXP_IPI:
        const = half_turn(f.beta)
        coeffs = _exp_numeric([1j * math.pi * float(a)], order)
        return _numeric_series(0, [const * c for c in coeffs])

    if f.kind is FactorKind.AFFINE:
        b = f.beta
        n = f.power
        if b == 0:
            if a == 0:
                raise UnsupportedFactor("affine factor is identically zero")
            return _numeric_series(n, [float(a) ** n] + [0j] * order)
        if n >= 0:
            coeffs = [0j] * (order + 1)
            for k in range(min(n, order) + 1):
                coeffs[k] = float(math.comb(n, k)) * float(b) ** (n - k) * float(a) ** k
            return _numeric_series(0, coeffs)
        # negative power, regular point: generalized binomial
        ratio = float(a) / float(b)
        coeffs = [0j] * (order + 1)
        c = float(b) ** n
        coeffs[0] = c
        binom = 1.0
        for k in range(1, order + 1):
            binom *= (n - k + 1) / k
            coeffs[k] = c * binom * ratio ** k
        return _numeric_series(0, coeffs)

    if f.kind is FactorKind.GAMMA:
        b = f.beta
        if b.denominator == 1 and b <= 0:
            if a == 0:
                raise UnsupportedFactor(f"Gamma({b}) has no regulator to expand against")
            # Gamma(a z + b) = Gamma(a z + 1) / prod_{k=0..n} (a z - k),  n = -b
            n = -int(b)
            series = expand_factor(PrimitiveFactor.gamma(a, 1, f.regulator), order + 1)
            num = [c.as_number() for c in series.coeffs]
            for k in range(1, n + 1):
                rec = _reciprocal_numeric(
                    [float(-k)] + [float(a)] + [0j] * order, order + 1
                )
                num = _convolve(num, rec, order + 2)
            # divide by (a z): shift lead down by one
            num = [c / float(a) for c in num]
            return _numeric_series(-1, num[: order + 1])
        g0 = gamma_value(b)
        linear = [
            polygamma_value(k - 1, b) * float(a) ** k / math.factorial(k)
            for k in range(1, order + 1)
        ]
        coeffs = _exp_numeric(linear, order)
        return LaurentSeries(0, [g0.scale(c) for c in coeffs])

    # CONST_POW: base^(a z + b) = base^b * exp(a z * ln(base))
    base = f.base_poly()
    const = base.mono_pow(f.beta)
    if a == 0:
        return LaurentSeries(0, [const] + [ParamPoly.zero()] * order)
    lg = log_param(base)
    coeffs = [const]
    power = ParamPoly.one()
    for k in range(1, order + 1):
        power = power * lg
        coeffs.append(const * power.scale(float(a) ** k / math.factorial(k)))
    return LaurentSeries(0, coeffs)


def _convolve(xs: Sequence[complex], ys: Sequence[complex], n: int) -> list[complex]:
    out = [0j] * n
    for i, x in enumerate(xs):
        if x == 0:
            continue
        for j, y in enumerate(ys):
            if i + j < n:
                out[i + j] += x * y
    return out


def expand_product(p: MeroFactorProduct, order: int = DEFAULT_ORDER) -> LaurentSeries:
    """Truncated Laurent expansion of a factor product times its prefactor."""
    series = LaurentSeries(0, [ParamPoly.one()] + [ParamPoly.zero()] * order)
    for f in p.factors:
        series = series.mul(expand_factor(f, order), ParamPoly.zero())
    return series.scale(p.prefactor)


def series_reciprocal(s: LaurentSeries, order: int) -> LaurentSeries:
    s = s.normalized()
    if s.is_zero():
        raise UnsupportedStructure("reciprocal of the zero series")
    lead_inv = s.coeffs[0].inverse()
    out = [ParamPoly.zero()] * (order + 1)
    out[0] = lead_inv
    for n in range(1, order + 1):
        acc = ParamPoly.zero()
        for k in range(1, n + 1):
            if k < len(s.coeffs):
                acc = acc + s.coeffs[k] * out[n - k]
        out[n] = -(lead_inv * acc)
    return LaurentSeries(-s.lead, out)


def series_quotient(n: LaurentSeries, d: LaurentSeries, order: int) -> LaurentSeries:
    return n.mul(series_reciprocal(d, order), ParamPoly.zero())


def series_ratio(n: LaurentSeries, d: LaurentSeries) -> ParamPoly:
    """The z -> 0 limit of n/d.

    Returns the ratio of leading coefficients when the lead orders match,
    zero when the numerator vanishes faster, raises ``DivergentLimit`` when
    the denominator vanishes faster and ``ZeroOverZeroUnresolved`` when both
    are identically zero to the truncation order.
    """
    n = n.normalized()
    d = d.normalized()
    if d.is_zero():
        if n.is_zero():
            raise ZeroOverZeroUnresolved("both series vanish to truncation order")
        raise DivergentLimit("denominator is identically zero to truncation order")
    if n.is_zero():
        return ParamPoly.zero()
    if n.lead > d.lead:
        return ParamPoly.zero()
    if n.lead < d.lead:
        raise DivergentLimit(f"quotient diverges like z^{n.lead - d.lead}")
    return n.coeffs[0] * d.coeffs[0].inverse()
