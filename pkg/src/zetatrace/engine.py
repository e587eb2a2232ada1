"""End-to-end pipeline: gauge, reduce, regularize, take limits.

``expectation`` builds numerator and denominator trace integrals with the
same gauge, reduces every gauged axis through the closed-form tables, and
eliminates the regulators sequentially before the thermal limit.  The module
also houses the trace-at-zero formula for non-critical homogeneous
amplitudes and the effective-potential analysis for constant background
fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import (
    CriticalDegree,
    DegenerateCase,
    DivergentLimit,
    LogOfNonmonomial,
    UncoveredAxis,
    UnsolvablePotential,
    UnsupportedStructure,
    ZeroQuadraticCoefficient,
)
from .laurent import DEFAULT_ORDER, MeroFactorProduct
from .params import Param, ParamPoly, _fraction
from .symbols import (
    Axis,
    AxisPoly,
    IntegrandPiece,
    InvolutionEvolution,
    MatrixSymbol,
    PhaseDecomposition,
    compose_observable,
    decompose_phase,
    involution_exp,
)
from .tables import AffineExp, BranchPolicy, PAPER, angular_moment, gauss_radial, osc_linear
from .terms import (
    Divergent,
    TAsymptote,
    ZetaTerm,
    ZetaTermSum,
    ratio_limit,
    thermal_limit,
    value_at_zero,
)


@dataclass(frozen=True)
class GaugeGroup:
    """Axes gauged jointly under one regulator.

    ``separable`` groups insert |u|^(z/k) per axis and reduce axis by axis;
    ``radial`` groups insert the rotation-invariant gauge ||xi||^z and reduce
    through one radial variable plus sphere moments.
    """

    name: str
    axes: tuple[str, ...]
    regulator: str
    reduction: str = "separable"

    def radius_symbol(self) -> str:
        if len(self.axes) == 1:
            return self.axes[0]
        return f"|{self.name}|"


@dataclass
class ModelSpec:
    """Declarative model: axes, gauge grouping, Hamiltonian symbol, observables."""

    name: str
    description: str
    params: tuple[Param, ...]
    axes: tuple[Axis, ...]
    groups: tuple[GaugeGroup, ...]
    hamiltonian: AxisPoly | MatrixSymbol
    observables: dict[str, AxisPoly | MatrixSymbol]
    expected: dict[str, ParamPoly] = field(default_factory=dict)
    hbar: str | None = None
    prefactor: ParamPoly = field(default_factory=ParamPoly.one)
    tokens: tuple[str, ...] = ()
    t_symbol: str = "T"
    kind: str = "expectation"  # expectation | potential
    field_param: str | None = None
    derived: dict[str, tuple[str, ParamPoly]] = field(default_factory=dict)
    #: derived[name] = (source observable, multiplier): value = multiplier * <source>

    def regulators(self) -> tuple[str, ...]:
        seen = []
        for g in self.groups:
            if g.regulator not in seen:
                seen.append(g.regulator)
        return tuple(seen)

    def group_of(self, symbol: str) -> GaugeGroup | None:
        for g in self.groups:
            if symbol in g.axes or symbol == g.radius_symbol():
                return g
        return None

    def default_bindings(self) -> dict[str, float]:
        return {p.name: p.default for p in self.params if p.default is not None}


@dataclass
class GaugePlan:
    """Gauge exponent inserted per reduced symbol: |u|^(share * z)."""

    shares: dict[str, tuple[str, Fraction]]  # symbol -> (regulator, share)

    def render(self) -> str:
        parts = [f"|{sym}|^({share}*{reg})" for sym, (reg, share) in sorted(self.shares.items())]
        return " ".join(parts)


def apply_gauge(model: ModelSpec) -> GaugePlan:
    """Insert the gauge family: product gauge on separable groups, ||.||^z on radial ones."""
    grouped = {a for g in model.groups for a in g.axes}
    for ax in model.axes:
        if ax.name not in grouped:
            raise UncoveredAxis(f"axis {ax.name} belongs to no gauge group")
    shares: dict[str, tuple[str, Fraction]] = {}
    for g in model.groups:
        if g.reduction == "separable" or len(g.axes) == 1:
            share = Fraction(1, len(g.axes))
            for a in g.axes:
                shares[a] = (g.regulator, share)
        else:
            shares[g.radius_symbol()] = (g.regulator, Fraction(1))
    return GaugePlan(shares)


# ---------------------------------------------------------------------------
# Phase handling
# ---------------------------------------------------------------------------


@dataclass
class ReducedPhase:
    """Evolution phase split per reduced symbol, already scaled by T/hbar."""

    g2: dict[str, ParamPoly]
    g1: dict[str, ParamPoly]
    const: ParamPoly  # e^(i * const * T)
    osc_coeff: ParamPoly | None = None  # |c| for the involution pieces
    osc_symbol: str | None = None


def _build_phase(model: ModelSpec) -> tuple[ReducedPhase, InvolutionEvolution | None]:
    hbar_inv = (
        ParamPoly.var(model.hbar, -1) if model.hbar else ParamPoly.one()
    )
    if isinstance(model.hamiltonian, MatrixSymbol):
        evo = involution_exp(model.hamiltonian)
        b = model.hamiltonian.scalar.constant_part().plain()
        if model.hamiltonian.scalar.symbols():
            raise UnsupportedStructure("matrix scalar part must be axis-free")
        c = model.hamiltonian.coeff
        syms = c.symbols()
        if len(syms) != 1:
            raise UnsupportedStructure("involution coefficient must be one radial symbol")
        (sym,) = syms
        coeff = c.coefficient_of(sym, 1).constant_part().plain()
        if coeff.is_zero() or not (c - AxisPoly.symbol(sym, 1, coeff)).is_zero():
            raise UnsupportedStructure("involution coefficient must be linear in the radius")
        phase = ReducedPhase(
            g2={},
            g1={},
            const=-(b * hbar_inv),
            osc_coeff=coeff * hbar_inv,
            osc_symbol=sym,
        )
        return phase, evo
    symbols = sorted(
        {a.name for a in model.axes} | {g.radius_symbol() for g in model.groups}
    )
    decomp = decompose_phase(model.hamiltonian, symbols)
    if decomp.h0_tail:
        raise UnsupportedStructure("inverse-power phase tails are not reduced symbolically")
    phase = ReducedPhase(
        g2={k: v * hbar_inv for k, v in decomp.h2.items()},
        g1={k: v * hbar_inv for k, v in decomp.h1.items()},
        const=-(decomp.h0_const * hbar_inv),
    )
    return phase, None


def complete_square(
    phase: PhaseDecomposition, amp: AxisPoly, axis: str
) -> tuple[PhaseDecomposition, AxisPoly, ParamPoly, ParamPoly]:
    """Shift one axis to kill its linear phase.

    Returns (new phase, substituted amplitude, phase constant h1^2/(4 h2)
    gained by e^(+i * const * T), shift h1/(2 h2)).  The gauge later applies
    to the shifted variable.
    """
    h2 = phase.h2.get(axis, ParamPoly.zero())
    h1 = phase.h1.get(axis, ParamPoly.zero())
    if h2.is_zero():
        raise ZeroQuadraticCoefficient(f"axis {axis} has h2 = 0")
    if h1.is_zero():
        return phase, amp, ParamPoly.zero(), ParamPoly.zero()
    shift = h1 * h2.inverse().scale(0.5)
    const = h1 * h1 * h2.inverse().scale(0.25)
    new_amp = amp.substitute(
        axis, AxisPoly.symbol(axis) - AxisPoly.constant(shift)
    )
    new_phase = PhaseDecomposition(
        h2=dict(phase.h2),
        h1={k: (ParamPoly.zero() if k == axis else v) for k, v in phase.h1.items()},
        h0_const=phase.h0_const,
        h0_tail=dict(phase.h0_tail),
    )
    return new_phase, new_amp, const, shift


# ---------------------------------------------------------------------------
# Reduction to ZetaTermSums
# ---------------------------------------------------------------------------


def _sign_split(poly: ParamPoly) -> tuple[int, ParamPoly]:
    mono = poly.single_monomial()
    if mono is None:
        raise UnsupportedStructure(f"phase coefficient is not a monomial: {poly.render()}")
    coeff, key = mono
    if abs(coeff.imag) > 1e-12 * abs(coeff):
        raise UnsupportedStructure("phase coefficient must be real")
    sign = 1 if coeff.real > 0 else -1
    return sign, ParamPoly({key: abs(coeff.real)})


def _reduce_axis_1d(
    q: AffineExp,
    degree: int,
    g2: ParamPoly,
    g1: ParamPoly,
    policy: BranchPolicy,
) -> list[tuple[complex, ZetaTerm]]:
    """One full-line axis integral int_R u^degree |u|^(share z) e^(-iT(g2 u^2 + g1 u)) du."""
    has2 = not g2.is_zero()
    has1 = not g1.is_zero()
    if has2 and has1:
        raise UnsupportedStructure("complete the square before reducing this axis")
    if has2:
        if degree % 2:
            return []
        sgn, rate = _sign_split(g2)
        if sgn < 0:
            raise UnsupportedStructure("quadratic phase coefficient must be positive")
        return [(1.0, gauss_radial(q.shifted(degree), policy, rate))]
    if has1:
        sgn, rate = _sign_split(g1)
        out = []
        for direction in (1, -1):
            # u = direction * r: e^(-iT g1 u) = e^(-i sgn direction |g1| T r)
            osc = osc_linear(q.shifted(degree), -sgn * direction, policy, rate)
            out.append((complex(direction**degree), osc))
        return out
    raise DegenerateCase("axis carries no phase; its gauge integral has no extension")


def _reduce_radial(
    q: AffineExp,
    dim: int,
    moment: ParamPoly,
    g2: ParamPoly,
    g1: ParamPoly,
    policy: BranchPolicy,
) -> list[tuple[ParamPoly, ZetaTerm]]:
    """Radial reduction over an N-dimensional group with sphere moment attached."""
    has2 = not g2.is_zero()
    has1 = not g1.is_zero()
    if has2 and has1:
        raise UnsupportedStructure("complete the square before reducing this group")
    if has2:
        sgn, rate = _sign_split(g2)
        if sgn < 0:
            raise UnsupportedStructure("quadratic phase coefficient must be positive")
        return [(moment.scale(0.5), gauss_radial(q, policy, rate))]
    if has1:
        sgn, rate = _sign_split(g1)
        return [(moment, osc_linear(q, -sgn, policy, rate))]
    raise DegenerateCase("radial group carries no phase")


def reduce_pieces(
    pieces: Sequence[IntegrandPiece],
    model: ModelSpec,
    phase: ReducedPhase,
    plan: GaugePlan,
    policy: BranchPolicy,
) -> ZetaTermSum:
    """Reduce integrand pieces to the canonical term sum, one term per branch."""
    regulators = model.regulators()
    out: list[ZetaTerm] = []
    for piece in pieces:
        for mono_key, tpoly in piece.amp.monomials():
            degrees = dict(mono_key)
            for t_power, poly in tpoly.parts.items():
                base = ZetaTerm(
                    MeroFactorProduct(poly * model.prefactor),
                    t_const=t_power,
                    phase=phase.const,
                    tokens=tuple(sorted(model.tokens)),
                )
                branches = [base]
                consumed: set[str] = set()
                for group in model.groups:
                    branches, used = _reduce_group(
                        branches, group, degrees, piece, phase, plan, policy
                    )
                    consumed |= used
                leftovers = set(degrees) - consumed
                if leftovers:
                    raise UnsupportedStructure(
                        f"amplitude symbols outside any gauge group: {sorted(leftovers)}"
                    )
                out.extend(b for b in branches if not b.coeff.prefactor.is_zero())
    return ZetaTermSum(out, regulators, model.t_symbol)


def _reduce_group(
    branches: list[ZetaTerm],
    group: GaugeGroup,
    degrees: Mapping[str, int],
    piece: IntegrandPiece,
    phase: ReducedPhase,
    plan: GaugePlan,
    policy: BranchPolicy,
) -> tuple[list[ZetaTerm], set[str]]:
    used: set[str] = set()
    dim = len(group.axes)
    radial = group.reduction == "radial" and dim > 1
    rsym = group.radius_symbol()

    if radial:
        used.add(rsym)
        hat_powers = []
        for a in group.axes:
            hname = f"{a}^"
            hat_powers.append(degrees.get(hname, 0))
            if hname in degrees:
                used.add(hname)
        d_r = degrees.get(rsym, 0)
        moment = angular_moment(tuple(hat_powers), dim)
        if moment.is_zero():
            return [], used
        reg, _ = plan.shares[rsym]
        q = AffineExp.of(reg, 1, d_r + dim - 1)
        g2 = phase.g2.get(rsym, ParamPoly.zero())
        g1 = phase.g1.get(rsym, ParamPoly.zero())
        if piece.osc_sign and phase.osc_symbol == rsym:
            g1 = g1 - phase.osc_coeff.scale(piece.osc_sign)
        frags = _reduce_radial(q, dim, moment, g2, g1, policy)
        return (
            [b.times(f.scaled(mult if isinstance(mult, ParamPoly) else ParamPoly.number(mult)))
             for b in branches for mult, f in frags],
            used,
        )

    # separable: reduce axis by axis on the full line
    for a in group.axes:
        used.add(a)
        d = degrees.get(a, 0)
        reg, share = plan.shares[a]
        q = AffineExp.of(reg, share, 0)
        g2 = phase.g2.get(a, ParamPoly.zero())
        g1 = phase.g1.get(a, ParamPoly.zero())
        if piece.osc_sign and phase.osc_symbol == a:
            g1 = g1 - phase.osc_coeff.scale(piece.osc_sign)
        frags = _reduce_axis_1d(q, d, g2, g1, policy)
        branches = [
            b.times(f.scaled(ParamPoly.number(mult))) for b in branches for mult, f in frags
        ]
    return branches, used


# ---------------------------------------------------------------------------
# Expectation values
# ---------------------------------------------------------------------------


@dataclass
class ExpectationResult:
    model: str
    observable: str
    value: ParamPoly | Divergent
    finite_t: TAsymptote | None
    branch: str
    series_order: int
    trace: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not isinstance(self.value, Divergent)


def build_trace_sums(
    model: ModelSpec,
    observable: AxisPoly | MatrixSymbol,
    policy: BranchPolicy,
) -> tuple[ZetaTermSum, ZetaTermSum, list[str]]:
    """Numerator and denominator term sums under the same gauge."""
    plan = apply_gauge(model)
    phase, evo = _build_phase(model)
    trace = [f"gauge: {plan.render()}"]
    num_pieces = compose_observable(evo, observable)
    den_pieces = compose_observable(evo, AxisPoly.number(1))
    num = reduce_pieces(num_pieces, model, phase, plan, policy)
    den = reduce_pieces(den_pieces, model, phase, plan, policy)
    if num.regulators != den.regulators or num.t_symbol != den.t_symbol:
        raise UnsupportedStructure("numerator and denominator gauges diverged")
    trace.append(f"reduce: numerator {len(num.terms)} terms, denominator {len(den.terms)} terms")
    trace.append(f"numerator = {num.render()}")
    trace.append(f"denominator = {den.render()}")
    return num, den, trace


def expectation(
    model: ModelSpec,
    observable_name: str,
    policy: BranchPolicy = PAPER,
    series_order: int = DEFAULT_ORDER,
) -> ExpectationResult:
    obs = model.observables[observable_name]
    num, den, trace = build_trace_sums(model, obs, policy)
    try:
        finite_t = ratio_limit(num, den, series_order, trace=trace)
    except DivergentLimit as exc:
        return ExpectationResult(
            model.name, observable_name, Divergent(str(exc)), None,
            policy.mode, series_order, trace + [f"limit: divergent ({exc})"],
        )
    trace.append(f"regulator limits: finite-{model.t_symbol} value = {finite_t.render()}")
    value = thermal_limit(finite_t)
    value_text = value.render() if isinstance(value, ParamPoly) else repr(value)
    trace.append(f"thermal limit: {value_text}")
    result = ExpectationResult(
        model.name, observable_name, value, finite_t, policy.mode, series_order, trace
    )
    return result


# ---------------------------------------------------------------------------
# Trace at zero for non-critical homogeneous amplitudes
# ---------------------------------------------------------------------------


@dataclass
class KVAmplitudeSpec:
    """Amplitude data for the closed trace-at-zero formula.

    Homogeneous terms (degree, log order, angular part) are supported on
    ||xi|| >= 1.  An angular part is either a constant ParamPoly (multiplied
    by the sphere volume; zero diagonal phase) or a callable returning the
    already-integrated sphere value, which is how a nonzero diagonal phase
    enters.  The unit-ball and integrable remainders are numeric payloads.
    """

    dimension: int
    terms: tuple[tuple[Fraction, int, ParamPoly | Callable[[], complex]], ...] = ()
    vol_x: ParamPoly = field(default_factory=ParamPoly.one)
    ball_payload: Callable[[], complex] | None = None
    integrable_payload: Callable[[], complex] | None = None

    def __post_init__(self):
        for d, l, _ in self.terms:
            if l < 0:
                raise UnsupportedStructure("log order must be nonnegative")


def kv_trace_at_zero(spec: KVAmplitudeSpec) -> ParamPoly:
    """Sum of the three trace-at-zero contributions.

    The homogeneous part contributes
    (-1)^(l+1) l! * vol(X) * int_sphere(angular) / (N + d)^(l+1)
    per term; degrees d = -N are critical and rejected.
    """
    n = spec.dimension
    total = ParamPoly.zero()
    if spec.ball_payload is not None:
        total = total + ParamPoly.number(complex(spec.ball_payload()))
    if spec.integrable_payload is not None:
        total = total + ParamPoly.number(complex(spec.integrable_payload()))
    for d, l, angular in spec.terms:
        d = _fraction(d)
        if d == -n:
            raise CriticalDegree(f"degree {d} is critical in dimension {n}")
        if callable(angular):
            sphere = ParamPoly.number(complex(angular()))
        else:
            sphere = angular * angular_moment((), n)
        factor = ((-1) ** (l + 1)) * math.factorial(l) / float(n + d) ** (l + 1)
        total = total + (spec.vol_x * sphere).scale(factor)
    return total


# ---------------------------------------------------------------------------
# Effective potential for constant background fields
# ---------------------------------------------------------------------------


@dataclass
class PotentialResult:
    potential: ParamPoly  # V(field) after the volume limit
    critical_points: list[ParamPoly]
    minima: list[ParamPoly]
    masses: list[ParamPoly]
    residual: TAsymptote
    trace: list[str] = field(default_factory=list)


def effective_potential(
    model: ModelSpec,
    policy: BranchPolicy = PAPER,
    series_order: int = DEFAULT_ORDER,
) -> PotentialResult:
    """ln Z / (-i T X) for a constant field, then extrema and masses.

    The partition function must reduce to e^(-i T X P(field)) times a positive
    monomial times a numeric phase; the logarithm is then taken structurally
    and the non-polynomial remainder vanishes in the volume limit.
    """
    if model.kind != "potential" or model.field_param is None:
        raise UnsupportedStructure(f"model {model.name} is not a potential model")
    plan = apply_gauge(model)
    phase, evo = _build_phase(model)
    trace = [f"gauge: {plan.render()}"]
    z_sum = reduce_pieces(
        compose_observable(evo, AxisPoly.number(1)), model, phase, plan, policy
    )
    trace.append(f"partition sum = {z_sum.render()}")
    z0 = value_at_zero(z_sum, series_order)
    if len(z0.terms) != 1:
        raise LogOfNonmonomial("partition function is not a single structured term")
    t = z0.terms[0]
    pot = -t.phase  # ln e^(i phase T X) / (-i T X) = -phase
    mono = t.coeff.single_monomial()
    if mono is None:
        raise LogOfNonmonomial(f"residual factor is not a monomial: {t.coeff.render()}")
    residual = TAsymptote([t], model.t_symbol)
    trace.append(
        f"V = {pot.render()} + ln({t.coeff.render()} * {model.t_symbol}^{t.t_power}) "
        f"/ (-i*{model.t_symbol})"
    )

    phi = model.field_param
    d1 = pot.diff(phi)
    d2 = d1.diff(phi)
    crit = _solve_odd_cubic(d1, phi)
    minima, masses = [], []
    for point in crit:
        curv = d2.subs(phi, point)
        sign = _definite_sign(curv)
        if sign > 0:
            minima.append(point)
            mass = curv.mono_pow(Fraction(1, 2))
            if all(not mass.almost_equal(m) for m in masses):
                masses.append(mass)
    trace.append(
        "critical points: " + ", ".join(p.render() for p in crit)
        + f"; minima: {[p.render() for p in minima]}; masses: {[m.render() for m in masses]}"
    )
    return PotentialResult(pot, crit, minima, masses, residual, trace)


def _solve_odd_cubic(d1: ParamPoly, phi: str) -> list[ParamPoly]:
    """Roots of A*phi + B*phi^3 as parameter monomials (plus phi = 0)."""
    a = ParamPoly.zero()
    b = ParamPoly.zero()
    for key, coeff in d1.terms.items():
        exps = dict(key)
        e = exps.pop(phi, Fraction(0))
        rest = ParamPoly({tuple(sorted(exps.items())): coeff})
        if e == 1:
            a = a + rest
        elif e == 3:
            b = b + rest
        else:
            raise UnsolvablePotential(
                f"derivative term phi^{e} outside the phi*(a + b*phi^2) pattern"
            )
    roots = [ParamPoly.zero()]
    if b.is_zero():
        return roots
    ratio = -(a * b.inverse())
    if not ratio.is_positive_monomial():
        raise UnsolvablePotential(f"-A/B = {ratio.render()} is not a positive monomial")
    root = ratio.mono_pow(Fraction(1, 2))
    roots += [root, -root]
    return roots


def _definite_sign(poly: ParamPoly) -> int:
    """Sign of a single real monomial under declared parameter positivity."""
    mono = poly.single_monomial()
    if mono is None:
        raise UnsolvablePotential(f"curvature {poly.render()} has indefinite sign")
    coeff, _ = mono
    if abs(coeff.imag) > 1e-12 * abs(coeff):
        raise UnsolvablePotential("curvature is not real")
    return 1 if coeff.real > 0 else -1


def potential_numeric(
    model: ModelSpec, bindings: Mapping[str, float]
) -> tuple[list[float], list[float]]:
    """Numeric fallback: cubic roots of dV and second-difference curvatures."""
    if model.kind != "potential" or model.field_param is None:
        raise UnsupportedStructure("not a potential model")
    phase, _ = _build_phase(model)
    pot = -phase.const
    phi = model.field_param

    def v(x: float) -> float:
        return pot.eval({**bindings, phi: x}).real

    d1 = pot.diff(phi)
    max_deg = max(
        (int(dict(k).get(phi, 0)) for k in d1.terms), default=0
    )
    # numeric polynomial coefficients of d1 in phi, highest power first
    poly_coeffs = []
    for p in range(max_deg, -1, -1):
        c = ParamPoly.zero()
        for key, coeff in d1.terms.items():
            exps = dict(key)
            if exps.pop(phi, Fraction(0)) == p:
                c = c + ParamPoly({tuple(sorted(exps.items())): coeff})
        poly_coeffs.append(c.eval(bindings).real)
    roots = [r.real for r in np.roots(poly_coeffs) if abs(r.imag) < 1e-9]
    h = 1e-4
    minima, masses = [], []
    for r in sorted(roots):
        curv = (v(r + h) - 2 * v(r) + v(r - h)) / h**2
        if curv > 0:
            minima.append(r)
            masses.append(math.sqrt(curv))
    return minima, masses
