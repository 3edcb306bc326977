"""Normalization checked against direct evaluation in exact rationals.

sin and cos are replaced by rational surrogates with sin(0) = 0 and
cos(0) = 1, the only facts about them the normalizer uses.
"""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings

from modelgen import exprs, random_expr
from refcheck.expr import Add, Apply, Env, IntState, Mul, Rat, Shift, Time, Var, delay, evaluate, max_delay, show
from refcheck.normal import FnAtom, ShiftAtom, equal_normal, evaluate_normal, normalize, show_normal, to_expr

RATIONAL_OPS = {
    "sin": lambda q: q / (1 + q * q),
    "cos": lambda q: 1 / (1 + q * q),
    "neg": lambda q: -q,
    "abs": abs,
}

u, v = Var("u"), Var("v")


def R(p, q=1):
    return Rat(Fraction(p, q))


def exact_env(rng: random.Random) -> Env:
    samples: dict = {}

    def var(name, k):
        key = (name, k)
        if key not in samples:
            samples[key] = Fraction(rng.randint(-30, 30), rng.randint(1, 9))
        return samples[key]

    t0 = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return Env(var, lambda k: t0 + k, {"x": Fraction(rng.randint(-9, 9), 7)}, const=lambda q: q, ops=RATIONAL_OPS)


def agrees(e, rng, points=5):
    nf = normalize(e)
    for _ in range(points):
        env = exact_env(rng)
        for k in range(max_delay(e) + 2):
            if evaluate(e, env, k) != evaluate_normal(nf, env, k):
                return False
    return True


def test_constant_fold_and_collect():
    nf = normalize(Mul((R(2), Add((u, Mul((R(3), u)))))))
    assert nf.terms == (((u,), Fraction(8)),)
    assert show_normal(nf) == "8*u"


def test_distributivity():
    k = R(5, 2)
    factored = Mul((k, Add((u, v))))
    expanded = Add((Mul((k, u)), Mul((k, v))))
    assert equal_normal(normalize(factored), normalize(expanded))


def test_gain_fusion_matches_numeric_oracle():
    fused = Mul((R(3), Mul((R(2), u))))
    single = Mul((R(6), u))
    env = Env(lambda n, k: Fraction(k), lambda k: 0, const=lambda q: q)
    assert [evaluate(fused, env, k) for k in range(1, 6)] == [evaluate(single, env, k) for k in range(1, 6)]
    assert equal_normal(normalize(fused), normalize(single))


def test_commutativity_and_opaque_functions():
    assert equal_normal(normalize(Add((u, v))), normalize(Add((v, u))))
    assert not equal_normal(normalize(Apply("sin", u)), normalize(Apply("cos", u)))
    double = Apply("sin", Mul((R(2), u)))
    product = Mul((R(2), Apply("sin", u), Apply("cos", u)))
    assert not equal_normal(normalize(double), normalize(product))


def test_identities():
    assert normalize(Mul((u, R(1)))) == normalize(u)
    assert normalize(Add((u, R(0)))) == normalize(u)
    assert normalize(Mul((u, R(0)))).is_zero
    assert normalize(Add((u, Apply("neg", u)))).is_zero
    assert normalize(Apply("neg", u)) == normalize(Mul((R(-1), u)))
    assert normalize(Apply("sin", Add((u, Apply("neg", u))))).is_zero
    assert normalize(Apply("cos", R(0))).constant() == 1
    assert normalize(Apply("abs", R(-3, 2))).constant() == Fraction(3, 2)
    assert show_normal(normalize(R(0))) == "0"


def test_neg_never_survives():
    e = Apply("sin", Apply("neg", Add((u, Apply("neg", Apply("abs", Apply("neg", v)))))))
    for a in normalize(e).atoms():
        assert not (isinstance(a, FnAtom) and a.op == "neg")
    assert "neg" not in show_normal(normalize(e))


def test_shift_chains_merge():
    inner = Shift(u, 2, (R(1).value, R(2).value))
    outer = Shift(inner, 1, (Fraction(3),))
    flat = Shift(u, 3, (Fraction(3), Fraction(1), Fraction(2)))
    assert normalize(outer) == normalize(flat)
    assert delay(delay(u, Fraction(1)), Fraction(2)) == Shift(u, 2, (Fraction(2), Fraction(1)))
    (mono, coef), = normalize(outer).terms
    assert isinstance(mono[0], ShiftAtom) and mono[0].depth == 3


def test_delay_chain_shape():
    # u -> UnitDelay(a) -> UnitDelay(b) -> y
    a, b = Fraction(1, 2), Fraction(-1)
    y = delay(delay(u, a), b)
    assert y == Shift(u, 2, (b, a))
    assert show(y) == "shift(u, 2, [-1, 0.5])"
    env = Env(lambda n, k: Fraction(10 + k), lambda k: k, const=lambda q: q)
    assert [evaluate(y, env, k) for k in range(3)] == [b, a, 10]


def test_inits_are_part_of_the_normal_form():
    assert normalize(Shift(u, 1, (Fraction(0),))) != normalize(Shift(u, 1, (Fraction(1),)))
    assert normalize(Add((delay(u, Fraction(2)), delay(u, Fraction(2))))) == normalize(Mul((R(2), delay(u, Fraction(2)))))


def test_constant_shift_with_matching_inits_folds():
    assert normalize(Shift(R(3), 2, (Fraction(3), Fraction(3)))).constant() == 3
    assert normalize(Shift(R(3), 1, (Fraction(0),))).constant() is None


def test_monomial_order_is_canonical():
    e1 = Add((Mul((u, u, v)), Time(), R(4), Mul((R(-1), v))))
    e2 = Add((Mul((R(-1), v)), R(4), Mul((v, u, u)), Time()))
    assert show_normal(normalize(e1)) == show_normal(normalize(e2)) == "u^2*v - v + t + 4"


def test_to_expr_round_trip():
    e = Add((Mul((R(3), Apply("sin", Add((u, R(1)))))), Shift(IntState("x"), 1, (Fraction(2),)), R(-5)))
    nf = normalize(e)
    assert normalize(to_expr(nf)) == nf


@settings(max_examples=300, deadline=None)
@given(exprs(depth=6))
def test_normalize_preserves_value(e):
    assert agrees(e, random.Random(hash(show(e)) & 0xFFFF))


@settings(max_examples=300, deadline=None)
@given(exprs(depth=6))
def test_normalize_is_idempotent(e):
    nf = normalize(e)
    assert normalize(nf) == nf


@pytest.mark.parametrize("seed", range(5))
def test_shift_merge_property(seed):
    rng = random.Random(seed)
    for _ in range(40):
        e = random_expr(rng, 4)
        m, n = rng.randint(1, 3), rng.randint(1, 3)
        i1 = tuple(Fraction(rng.randint(-5, 5)) for _ in range(m))
        i2 = tuple(Fraction(rng.randint(-5, 5)) for _ in range(n))
        assert normalize(Shift(Shift(e, m, i1), n, i2)) == normalize(Shift(e, m + n, i2 + i1))
