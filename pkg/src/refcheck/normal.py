"""Canonical polynomial form of signal expressions.

A :class:`NormalForm` is a sum of monomials with exact rational
coefficients. Atoms are inputs, time, integrator states, and the opaque
``FnAtom`` (sin/cos/abs applied to a normal form) and ``ShiftAtom`` (a delay
chain over a normal form, with its initial values). The rewrite theory is
commutative-ring normalization only: two expressions that differ by a
trigonometric identity get different normal forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from refcheck.bdl import format_number
from refcheck.expr import Add, Apply, Env, Expr, IntState, Mul, Rat, Shift, Time, Var


@dataclass(frozen=True)
class FnAtom:
    op: str
    arg: NormalForm


@dataclass(frozen=True)
class ShiftAtom:
    arg: NormalForm
    depth: int
    inits: tuple[Fraction, ...]


Atom = Union[Var, Time, IntState, FnAtom, ShiftAtom]
Monomial = tuple  # sorted tuple of atoms; repeats encode powers


def atom_key(a: Atom) -> tuple:
    if isinstance(a, Var):
        return (0, a.name)
    if isinstance(a, Time):
        return (1,)
    if isinstance(a, IntState):
        return (2, a.id)
    if isinstance(a, FnAtom):
        return (3, a.op, a.arg.key)
    if isinstance(a, ShiftAtom):
        return (4, a.depth, a.inits, a.arg.key)
    raise TypeError(f"not an atom: {a!r}")


def monomial_key(m: Monomial) -> tuple:
    # higher degree first, so constants print last
    return (-len(m), tuple(atom_key(a) for a in m))


@dataclass(frozen=True)
class NormalForm:
    terms: tuple[tuple[Monomial, Fraction], ...]
    key: tuple = field(init=False, repr=False, compare=False)
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", tuple((monomial_key(m), c) for m, c in self.terms))
        object.__setattr__(self, "_hash", hash(self.terms))

    def __hash__(self) -> int:
        return self._hash

    @classmethod
    def from_poly(cls, poly: dict[Monomial, Fraction]) -> NormalForm:
        items = [(m, c) for m, c in poly.items() if c != 0]
        items.sort(key=lambda mc: monomial_key(mc[0]))
        return cls(tuple(items))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def constant(self) -> Fraction | None:
        """The value of a constant polynomial, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and self.terms[0][0] == ():
            return self.terms[0][1]
        return None

    def atoms(self):
        for m, _ in self.terms:
            yield from m

    def __str__(self) -> str:
        return show_normal(self)


ZERO = NormalForm(())


def _mul_monomials(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b, key=atom_key))


def _add_into(acc: dict, poly: dict, scale: Fraction = Fraction(1)) -> None:
    for m, c in poly.items():
        acc[m] = acc.get(m, Fraction(0)) + scale * c


def _mul_polys(p: dict, q: dict) -> dict:
    out: dict = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mul_monomials(m1, m2)
            out[m] = out.get(m, Fraction(0)) + c1 * c2
    return {m: c for m, c in out.items() if c != 0}


def _atom_poly(a: Atom) -> dict:
    return {(a,): Fraction(1)}


def _const_poly(c: Fraction) -> dict:
    return {(): Fraction(c)} if c != 0 else {}


def _poly(e: Expr) -> dict:
    if isinstance(e, (Var, Time, IntState)):
        return _atom_poly(e)
    if isinstance(e, Rat):
        return _const_poly(e.value)
    if isinstance(e, Add):
        acc: dict = {}
        for t in e.terms:
            _add_into(acc, _poly(t))
        return {m: c for m, c in acc.items() if c != 0}
    if isinstance(e, Mul):
        acc = {(): Fraction(1)}
        for f in e.factors:
            acc = _mul_polys(acc, _poly(f))
            if not acc:
                break
        return acc
    if isinstance(e, Apply):
        inner = _poly(e.arg)
        if e.op == "neg":
            return {m: -c for m, c in inner.items()}
        nf = NormalForm.from_poly(inner)
        c = nf.constant()
        if c is not None:
            if e.op == "abs":
                return _const_poly(abs(c))
            if c == 0:
                return _const_poly(Fraction(0) if e.op == "sin" else Fraction(1))
        return _atom_poly(FnAtom(e.op, nf))
    if isinstance(e, Shift):
        nf = NormalForm.from_poly(_poly(e.arg))
        inits = e.inits
        if len(nf.terms) == 1:
            (mono, coef), = nf.terms
            if coef == 1 and len(mono) == 1 and isinstance(mono[0], ShiftAtom):
                nf, inits = mono[0].arg, inits + mono[0].inits
        c = nf.constant()
        if c is not None:
            # a delayed constant c is its prefix followed by c forever, so trailing c's are redundant
            while inits and inits[-1] == c:
                inits = inits[:-1]
            if not inits:
                return _const_poly(c)
        return _atom_poly(ShiftAtom(nf, len(inits), inits))
    raise TypeError(f"not a signal expression: {e!r}")


def normalize(e: Expr | NormalForm) -> NormalForm:
    """Canonical form of ``e``: flattened, distributed, constants folded, monomials merged and sorted.

    A normal form passed back in is re-read as an expression, so
    ``normalize(normalize(e)) == normalize(e)`` is a meaningful check.
    """
    if isinstance(e, NormalForm):
        e = to_expr(e)
    return NormalForm.from_poly(_poly(e))


def _atom_expr(a: Atom) -> Expr:
    if isinstance(a, FnAtom):
        return Apply(a.op, to_expr(a.arg))
    if isinstance(a, ShiftAtom):
        return Shift(to_expr(a.arg), a.depth, a.inits)
    return a


def to_expr(nf: NormalForm) -> Expr:
    """The normal form as a plain sum-of-products expression."""
    terms = []
    for mono, coef in nf.terms:
        factors = ([Rat(coef)] if coef != 1 or not mono else []) + [_atom_expr(a) for a in mono]
        terms.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    if not terms:
        return Rat(Fraction(0))
    return terms[0] if len(terms) == 1 else Add(tuple(terms))


def equal_normal(a: NormalForm, b: NormalForm) -> bool:
    """Structural equality. Sound for the ring axioms; blind to function identities."""
    return a == b


def erase_inits(nf: NormalForm) -> NormalForm:
    """Copy of ``nf`` with every delay's initial values zeroed (for diagnosing init-only differences)."""

    def atom(a):
        if isinstance(a, FnAtom):
            return FnAtom(a.op, erase_inits(a.arg))
        if isinstance(a, ShiftAtom):
            return ShiftAtom(erase_inits(a.arg), a.depth, (Fraction(0),) * a.depth)
        return a

    poly: dict = {}
    for m, c in nf.terms:
        key = tuple(sorted((atom(a) for a in m), key=atom_key))
        poly[key] = poly.get(key, Fraction(0)) + c
    return NormalForm.from_poly(poly)


def evaluate_normal(nf: NormalForm, env: Env, k: int = 0):
    """Value of a normal form under the same leaf interpretation as :func:`refcheck.expr.evaluate`."""
    total = None
    for mono, coef in nf.terms:
        v = env.const(coef)
        for a in mono:
            v = v * _atom_value(a, env, k)
        total = v if total is None else total + v
    return env.const(Fraction(0)) if total is None else total


def _atom_value(a: Atom, env: Env, k: int):
    if isinstance(a, Var):
        return env.var(a.name, k)
    if isinstance(a, Time):
        return env.time(k)
    if isinstance(a, IntState):
        return env.state[a.id]
    if isinstance(a, FnAtom):
        return env.ops[a.op](evaluate_normal(a.arg, env, k))
    if k < a.depth:
        return env.const(a.inits[k])
    return evaluate_normal(a.arg, env, k - a.depth)


def _show_atom(a: Atom) -> str:
    if isinstance(a, Var):
        return a.name
    if isinstance(a, Time):
        return "t"
    if isinstance(a, IntState):
        return a.id
    if isinstance(a, FnAtom):
        return f"{a.op}({show_normal(a.arg)})"
    inits = ", ".join(format_number(i) for i in a.inits)
    return f"shift({show_normal(a.arg)}, {a.depth}, [{inits}])"


def _show_monomial(m: Monomial) -> str:
    parts = []
    i = 0
    while i < len(m):
        j = i
        while j < len(m) and m[j] == m[i]:
            j += 1
        s = _show_atom(m[i])
        parts.append(s if j - i == 1 else f"{s}^{j - i}")
        i = j
    return "*".join(parts)


def show_normal(nf: NormalForm) -> str:
    if not nf.terms:
        return "0"
    out = []
    for idx, (mono, coef) in enumerate(nf.terms):
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        if not mono:
            body = format_number(mag)
        elif mag == 1:
            body = _show_monomial(mono)
        else:
            body = f"{format_number(mag)}*{_show_monomial(mono)}"
        if idx == 0:
            out.append(body if sign == "+" else f"-{body}")
        else:
            out.append(f" {sign} {body}")
    return "".join(out)
