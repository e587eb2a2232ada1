from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from zetatrace import oracle
from zetatrace.errors import DivergentLimit, PoleAtZero
from zetatrace.laurent import MeroFactorProduct, PrimitiveFactor
from zetatrace.params import ParamPoly
from zetatrace.tables import PAPER, PRINCIPAL, AffineExp, osc_linear
from zetatrace.terms import (
    Divergent,
    TAsymptote,
    ZetaTerm,
    ZetaTermSum,
    ratio_limit,
    thermal_limit,
    value_at_zero,
)


def gamma_term(sign=1.0, t_lin=Fraction(0), t_const=Fraction(0)):
    """sign * Gamma(z) * T^(t_lin z + t_const)."""
    return ZetaTerm(
        MeroFactorProduct(ParamPoly.number(sign), (PrimitiveFactor.gamma(1, 0),)),
        t_lin=((("z"), t_lin),) if t_lin else (),
        t_const=t_const,
    )


def test_value_at_zero_cancelled_poles_leave_log():
    # Gamma(z) T^(-z) - Gamma(z): the 1/z poles cancel, the cross term is -ln T
    s = ZetaTermSum([gamma_term(1.0, Fraction(-1)), gamma_term(-1.0)])
    ta = value_at_zero(s)
    assert len(ta.terms) == 1
    t = ta.terms[0]
    assert t.t_power == 0 and t.log_power == 1
    assert t.coeff.as_number() == pytest.approx(-1.0)
    # numeric witness: Gamma(z)(T^-z - 1) at small z, T = 10, extrapolated in z
    T = 10.0
    f = lambda z: oracle.gamma(z) * (T**-z - 1)
    direct = 2 * f(5e-5) - f(1e-4)
    assert ta.eval({}, T) == pytest.approx(direct, rel=1e-6)


def test_value_at_zero_constant():
    s = ZetaTermSum([ZetaTerm.from_poly(ParamPoly.number(3.25))])
    ta = value_at_zero(s)
    assert ta.constant_part().as_number() == pytest.approx(3.25)


def test_value_at_zero_reports_uncancelled_pole():
    s = ZetaTermSum([gamma_term(1.0, Fraction(-1))])
    with pytest.raises(PoleAtZero) as err:
        value_at_zero(s)
    assert err.value.order == 1


def osc_sum(terms, regulators=("z",)):
    return ZetaTermSum(terms, regulators)


def q(b, a=1):
    return AffineExp.of("z", a, b)


def test_ratio_limit_fermion_reduction_chain():
    """The displayed 3+1-dimensional reduction: both sides vanish at z = 0 and the
    z^1 coefficients leave m - 3/T under the conventional Laplace phases."""
    m = ParamPoly.var("m")
    den_terms = [osc_linear(q(2), +1, PAPER), osc_linear(q(2), -1, PAPER)]
    num_terms = [t.scaled(m) for t in den_terms]
    # -i * (osc(z+3,+) - osc(z+3,-)) reproduces the displayed numerator
    num_terms.append(osc_linear(q(3), +1, PAPER).scaled(ParamPoly.number(-1j)))
    num_terms.append(osc_linear(q(3), -1, PAPER).scaled(ParamPoly.number(1j)))
    ta = ratio_limit(osc_sum(num_terms), osc_sum(den_terms))
    for t_value in (10.0, 100.0):
        got = ta.eval({"m": 1.3}, t_value)
        assert got == pytest.approx(1.3 - 3.0 / t_value, rel=1e-12)


def test_ratio_limit_identity():
    terms = [osc_linear(q(2), +1, PAPER), osc_linear(q(2), -1, PAPER)]
    ta = ratio_limit(osc_sum(list(terms)), osc_sum(list(terms)))
    assert thermal_limit(ta).as_number() == pytest.approx(1.0)


def test_ratio_limit_boson_chain_decays_like_one_over_t():
    """Gamma((z+3)/2)(2/T)^((z+3)/2)-type over Gamma((z+1)/2)(2/T)^((z+1)/2)-type."""
    half = ParamPoly.number(0.5)
    num = ZetaTerm(
        MeroFactorProduct(
            ParamPoly.one(),
            (
                PrimitiveFactor.gamma(Fraction(1, 2), Fraction(3, 2)),
                PrimitiveFactor.exp_ipi(Fraction(-1, 4), Fraction(-3, 4)),
                PrimitiveFactor.const_pow(half, Fraction(-1, 2), Fraction(-3, 2)),
            ),
        ),
        t_lin=(("z", Fraction(-1, 2)),),
        t_const=Fraction(-3, 2),
    )
    den = ZetaTerm(
        MeroFactorProduct(
            ParamPoly.one(),
            (
                PrimitiveFactor.gamma(Fraction(1, 2), Fraction(1, 2)),
                PrimitiveFactor.exp_ipi(Fraction(-1, 4), Fraction(-1, 4)),
                PrimitiveFactor.const_pow(half, Fraction(-1, 2), Fraction(-1, 2)),
            ),
        ),
        t_lin=(("z", Fraction(-1, 2)),),
        t_const=Fraction(-1, 2),
    )
    ta = ratio_limit(osc_sum([num]), osc_sum([den]))
    assert len(ta.terms) == 1
    assert ta.terms[0].t_power == -1
    assert isinstance(thermal_limit(ta), ParamPoly)
    assert thermal_limit(ta).is_zero()
    exponent = oracle.decay_exponent(lambda t: ta.eval({}, t), [10, 20, 40, 80])
    assert exponent == pytest.approx(-1.0, abs=0.01)


def test_ratio_limit_divergent_when_denominator_vanishes_faster():
    num = osc_sum([gamma_term(1.0)])  # Gamma(z): pole of order 1
    den = osc_sum([ZetaTerm.from_poly(ParamPoly.one())])
    with pytest.raises(DivergentLimit):
        ratio_limit(num, den)


def test_ratio_limit_zero_when_numerator_vanishes_faster():
    num = osc_sum([ZetaTerm.from_poly(ParamPoly.one())])
    den = osc_sum([gamma_term(1.0)])
    ta = ratio_limit(num, den)
    assert ta.is_zero()


def test_token_cancellation():
    tok = ("sector:A", "sector:A", "vol")
    n = ZetaTermSum([ZetaTerm.from_poly(ParamPoly.var("m"), tokens=tok)])
    d = ZetaTermSum([ZetaTerm.from_poly(ParamPoly.one(), tokens=tok)])
    ta = ratio_limit(n, d)
    assert thermal_limit(ta) == ParamPoly.var("m")


def test_phase_cancellation_between_numerator_and_denominator():
    phase = ParamPoly.var("m").scale(-1)
    n = ZetaTermSum([ZetaTerm.from_poly(ParamPoly.var("m"), phase=phase)])
    d = ZetaTermSum([ZetaTerm.from_poly(ParamPoly.one(), phase=phase)])
    assert thermal_limit(ratio_limit(n, d)) == ParamPoly.var("m")


def test_thermal_limit_cases():
    m = ParamPoly.var("m")
    # m - 3/T -> m
    ta = TAsymptote.constant(m) + TAsymptote(
        [type(TAsymptote.constant(m).terms[0])(ParamPoly.number(-3), Fraction(-1), 0, ParamPoly.zero())]
    )
    assert thermal_limit(ta) == m
    # e^2/pi + c/T -> e^2/pi
    val = ParamPoly.monomial(1, {"e": Fraction(2), "pi": Fraction(-1)})
    ta2 = TAsymptote.constant(val) + TAsymptote(
        [type(ta.terms[0])(ParamPoly.number(-1j), Fraction(-1), 0, ParamPoly.zero())]
    )
    assert thermal_limit(ta2) == val
    # ln T -> divergent
    ta3 = TAsymptote([type(ta.terms[0])(ParamPoly.one(), Fraction(0), 1, ParamPoly.zero())])
    assert isinstance(thermal_limit(ta3), Divergent)


def test_thermal_limit_rejects_surviving_oscillation():
    ta = TAsymptote(
        [type(TAsymptote.constant(ParamPoly.one()).terms[0])(
            ParamPoly.one(), Fraction(0), 0, ParamPoly.var("omega")
        )]
    )
    out = thermal_limit(ta)
    assert isinstance(out, Divergent)
    assert "oscillatory" in out.reason


def test_value_at_zero_linearity():
    s1 = ZetaTermSum([gamma_term(1.0, Fraction(-1)), gamma_term(-1.0)])
    s2 = ZetaTermSum([ZetaTerm.from_poly(ParamPoly.number(2.0))])
    joint = value_at_zero(ZetaTermSum(s1.terms + s2.terms))
    split = value_at_zero(s1) + value_at_zero(s2)
    for t_value in (3.0, 7.0):
        assert joint.eval({}, t_value) == pytest.approx(split.eval({}, t_value))


SUM_POOL = [
    lambda: osc_sum([osc_linear(q(0), +1, PAPER)]),
    lambda: osc_sum([osc_linear(q(1), +1, PAPER), osc_linear(q(1), -1, PAPER)]),
    lambda: osc_sum([osc_linear(q(2), +1, PRINCIPAL), osc_linear(q(2), -1, PRINCIPAL)]),
    lambda: osc_sum([gamma_term(2.0, Fraction(-1)), gamma_term(-2.0)]),
    lambda: osc_sum(
        [ZetaTerm.from_poly(ParamPoly.var("m"), t_const=Fraction(-2))]
    ),
]


@given(st.sampled_from(SUM_POOL))
def test_ratio_limit_of_sum_with_itself_is_one(make):
    s = make()
    ta = ratio_limit(s, s)
    assert thermal_limit(ta).as_number() == pytest.approx(1.0)


def test_ratio_limit_unresolved_zero_over_zero_escalates_then_fails():
    from zetatrace.errors import ZeroOverZeroUnresolved

    pair = [
        ZetaTerm.from_poly(ParamPoly.one()),
        ZetaTerm.from_poly(ParamPoly.number(-1.0)),
    ]
    with pytest.raises(ZeroOverZeroUnresolved):
        ratio_limit(osc_sum(list(pair)), osc_sum(list(pair)))


def test_multi_regulator_sequential_elimination():
    # f(z1) * g(z2) / (same structure): regular values per regulator
    t = ZetaTerm(
        MeroFactorProduct(
            ParamPoly.number(2.0),
            (
                PrimitiveFactor.gamma(1, 1, "z1"),
                PrimitiveFactor.affine(1, 3, regulator="z2"),
            ),
        ),
    )
    d = ZetaTerm(
        MeroFactorProduct(
            ParamPoly.one(),
            (PrimitiveFactor.affine(1, 3, regulator="z2"),),
        ),
    )
    ta = ratio_limit(
        ZetaTermSum([t], ("z1", "z2")), ZetaTermSum([d], ("z1", "z2"))
    )
    assert thermal_limit(ta).as_number() == pytest.approx(2.0)
