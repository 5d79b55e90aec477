"""Sparse and factored polynomials with exact big-integer exponents.

Two representations live here:

* :class:`SparsePoly` -- an expanded ``{degree: coefficient}`` map.
* :class:`PolyExpr` -- a factored expression tree (leaf, dilation, product,
  linear combination, rotation) that carries its degree, lowest exponent and
  a coefficient l1-norm bound without ever being expanded.  Degrees such as
  ``6**42 - 1`` are routine.

Points on the closed unit disc are handled in polar form: a float radius and
an *exact rational* angle ``t`` (the point is ``r * exp(2*pi*i*t)``).  Every
exponent is reduced modulo the angle's denominator in integer arithmetic
before anything touches floating point, so ``z**(6**42)`` at ``t = 1/7`` is
as accurate as ``z**3``.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Union

import numpy as np

Coeff = Union[Fraction, float, complex]

SUPPORT_LIMIT = 64
# int64 modular products stay exact while den**2 < 2**63
_INT64_DEN_LIMIT = 2**31


class PolyError(ValueError):
    pass


class GapViolation(PolyError):
    """A gap product whose l1-norm multiplicativity cannot be certified."""


class SupportOverlap(PolyError):
    """A linear combination whose supports are not certifiably disjoint."""


class BudgetExceeded(PolyError):
    def __init__(self, estimate: int, budget: int):
        super().__init__(f"expansion needs ~{estimate} terms, budget is {budget}")
        self.estimate = estimate
        self.budget = budget


def _coeff(c) -> Coeff:
    if isinstance(c, (bool, int)):
        return Fraction(c)
    if isinstance(c, (Fraction, float)):
        return c
    if isinstance(c, complex):
        return float(c.real) if c.imag == 0 else c
    if isinstance(c, np.generic):
        return _coeff(c.item())
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


def _mod(c: Coeff) -> Union[Fraction, float]:
    return abs(c)


def is_exact(c) -> bool:
    return isinstance(c, (int, Fraction))


@dataclass(frozen=True)
class L1Norm:
    """Coefficient l1-norm: the exact value, or only an upper bound."""

    value: Union[Fraction, float]
    exact: bool

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# unit roots with exact exponent reduction


def _quarter_fix(out, idx, den):
    # exact values at 0, 1/4, 1/2, 3/4 turns
    four = 4 * idx
    mask = (four % den) == 0
    if np.any(mask):
        q = np.asarray(four[mask] // den, dtype=np.int64) % 4
        out[mask] = _QUARTERS[q]
    return out


_QUARTERS = np.array([1, 1j, -1, -1j])


def unit_roots(idx: np.ndarray, den: int) -> np.ndarray:
    """``exp(2*pi*i*idx/den)`` for integer ``idx`` already reduced mod ``den``."""
    idx = np.asarray(idx)
    if idx.dtype == object:
        ang = np.array([float(Fraction(int(k), den)) for k in idx.ravel()], dtype=float)
        out = np.exp(2j * np.pi * ang).reshape(idx.shape)
    elif idx.size > 4096 and den > 4096:
        # split table: exp(a + b) = exp(a) exp(b), both tables exactly reduced
        block = 4096
        hi, lo = np.divmod(idx, block)
        t_hi = np.exp(2j * np.pi * (np.arange((den - 1) // block + 1) * block / den))
        t_lo = np.exp(2j * np.pi * (np.arange(block) / den))
        out = t_hi[hi] * t_lo[lo]
    else:
        out = np.exp(2j * np.pi * (idx / den))
    return _quarter_fix(out, idx, den)


def _mulmod(num: np.ndarray, m: int, den: int) -> np.ndarray:
    if num.dtype == object:
        return np.array([(int(k) * m) % den for k in num.ravel()], dtype=object).reshape(num.shape)
    return (num * (m % den)) % den


def _as_index(num, den: int) -> np.ndarray:
    num = np.asarray(num)
    if den > _INT64_DEN_LIMIT:
        return np.array([int(k) % den for k in num.ravel()], dtype=object).reshape(num.shape)
    return np.asarray(num, dtype=np.int64) % den


def _safe_pow(r, m: int):
    """``r**m`` for radii in [0, 1] and exponents of any size."""
    if r is None:
        return None
    if m == 0:
        return np.ones_like(r)
    with np.errstate(divide="ignore", under="ignore", over="ignore"):
        out = np.exp(float(min(m, 10**300)) * np.log(r))
    out = np.where(r == 1.0, 1.0, out)
    return np.where(r == 0.0, 0.0, out)


# ---------------------------------------------------------------------------
# SparsePoly


class SparsePoly:
    """Expanded polynomial: finite map from nonnegative degree to coefficient.

    Zero coefficients are never stored.  Integer coefficients are promoted to
    :class:`~fractions.Fraction` so rational inputs stay exact under ``+`` and
    ``*``.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[int, object] | Iterable[tuple[int, object]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[int, Coeff] = {}
        for d, c in items:
            d = int(d)
            if d < 0:
                raise PolyError(f"negative degree {d}")
            c = _coeff(c)
            acc[d] = acc[d] + c if d in acc else c
        self._terms = {d: acc[d] for d in sorted(acc) if acc[d] != 0}

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> SparsePoly:
        return cls({degree: coeff})

    @classmethod
    def constant(cls, c) -> SparsePoly:
        return cls({0: c})

    @property
    def terms(self) -> dict[int, Coeff]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(self._terms)

    def __getitem__(self, d: int) -> Coeff:
        return self._terms.get(int(d), Fraction(0))

    def __eq__(self, other):
        if isinstance(other, SparsePoly):
            return self._terms == other._terms
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self._terms.items()))

    def __repr__(self):
        if not self._terms:
            return "SparsePoly(0)"
        body = " + ".join(f"({c})*z^{d}" for d, c in self._terms.items())
        return f"SparsePoly({body})"

    @property
    def degree(self) -> int:
        return next(reversed(self._terms)) if self._terms else 0

    @property
    def support_min(self) -> int:
        return next(iter(self._terms)) if self._terms else 0

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def is_rational(self) -> bool:
        return all(isinstance(c, Fraction) for c in self._terms.values())

    def l1(self) -> Union[Fraction, float]:
        total = sum((_mod(c) for c in self._terms.values()), Fraction(0))
        return total

    def __add__(self, other):
        if not isinstance(other, SparsePoly):
            other = SparsePoly.constant(other)
        return SparsePoly(list(self._terms.items()) + list(other._terms.items()))

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly({d: -c for d, c in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, SparsePoly):
            other = SparsePoly.constant(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, SparsePoly):
            c = _coeff(other)
            return SparsePoly({d: c * v for d, v in self._terms.items()})
        out: dict[int, Coeff] = {}
        for d1, c1 in self._terms.items():
            for d2, c2 in other._terms.items():
                d = d1 + d2
                out[d] = out[d] + c1 * c2 if d in out else c1 * c2
        return SparsePoly(out)

    def __rmul__(self, other):
        return self * other

    def __pow__(self, n: int):
        if n < 0:
            raise PolyError("negative power")
        result, base = SparsePoly.constant(1), self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def dilate(self, m: int) -> SparsePoly:
        return SparsePoly({d * m: c for d, c in self._terms.items()})

    def __call__(self, z):
        """Plain evaluation at a number; exact for rational ``z`` and coefficients."""
        if isinstance(z, (int, Fraction)) and self.is_rational:
            return sum((c * Fraction(z) ** d for d, c in self._terms.items()), Fraction(0))
        return sum(complex(c) * complex(z) ** d for d, c in self._terms.items())

    def to_json(self) -> dict:
        return {"terms": [_term_json(d, c) for d, c in self._terms.items()]}

    @classmethod
    def from_json(cls, obj: dict) -> SparsePoly:
        return cls((int(t["deg"]), _term_coeff(t)) for t in obj["terms"])


def _term_json(d: int, c: Coeff) -> dict:
    z = complex(c)
    out = {"deg": str(d), "re": z.real, "im": z.imag}
    if isinstance(c, Fraction):
        out["exact"] = str(c)
    return out


def _term_coeff(t: dict) -> Coeff:
    if "exact" in t:
        return Fraction(t["exact"])
    im = float(t.get("im", 0.0))
    return complex(float(t["re"]), im) if im else float(t["re"])


# ---------------------------------------------------------------------------
# PolyExpr


class PolyExpr:
    """Immutable factored polynomial expression.

    Every node caches ``degree``, ``support_min``, ``l1`` (an
    :class:`L1Norm`), ``term_count`` (an upper estimate of the expanded
    size), ``support`` (explicit exponent set when small, else ``None``),
    ``stride`` (all exponents are multiples of it; 0 for a constant) and
    ``depth``.
    """

    __slots__ = ("degree", "support_min", "l1", "term_count", "support", "stride", "depth")
    kind = "expr"

    def evaluate(self, r, num, den):  # pragma: no cover - abstract
        raise NotImplementedError

    def children(self) -> tuple[PolyExpr, ...]:
        return ()

    def __repr__(self):
        return (f"{type(self).__name__}(degree={self.degree}, support_min={self.support_min}, "
                f"l1={self.l1.value}{'' if self.l1.exact else ' (upper)'})")

    # convenience
    def at_angle(self, t) -> complex:
        return eval_at_angle(self, t)

    def at_real(self, x) -> complex:
        return eval_at_real(self, x)


class Leaf(PolyExpr):
    __slots__ = ("poly", "_deg", "_coef")
    kind = "leaf"

    def __init__(self, poly: SparsePoly):
        self.poly = poly
        self.degree = poly.degree
        self.support_min = poly.support_min
        self.l1 = L1Norm(poly.l1(), True)
        self.term_count = len(poly)
        self.support = frozenset(poly) if len(poly) <= SUPPORT_LIMIT else None
        self.stride = reduce(math.gcd, poly, 0)
        self.depth = 1
        self._deg = list(poly)
        self._coef = [complex(c) for c in poly.terms.values()]

    def evaluate(self, r, num, den):
        out = np.zeros(np.shape(num), dtype=complex)
        for d, c in zip(self._deg, self._coef):
            v = c * unit_roots(_mulmod(num, d, den), den)
            if r is not None:
                v = v * _safe_pow(r, d)
            out += v
        return out


class Dilate(PolyExpr):
    """``z -> child(z**m)``."""

    __slots__ = ("child", "m")
    kind = "dilate"

    def __init__(self, child: PolyExpr, m: int):
        m = int(m)
        if m < 1:
            raise PolyError("dilation factor must be >= 1")
        self.child, self.m = child, m
        self.degree = m * child.degree
        self.support_min = m * child.support_min
        self.l1 = child.l1
        self.term_count = child.term_count
        self.support = None if child.support is None else frozenset(m * d for d in child.support)
        self.stride = m * child.stride
        self.depth = child.depth + 1

    def children(self):
        return (self.child,)

    def evaluate(self, r, num, den):
        return self.child.evaluate(_safe_pow(r, self.m), _mulmod(num, self.m, den), den)


def _sumset(a: frozenset, b: frozenset):
    if len(a) * len(b) > SUPPORT_LIMIT ** 2:
        return None, False
    s = frozenset(x + y for x in a for y in b)
    return s, len(s) == len(a) * len(b)


class Product(PolyExpr):
    """Product of factors; nested products are flattened.

    The l1-norm is certified exact when, folding left to right, every new
    factor has exponents that either cannot collide with the accumulated
    ones (its stride exceeds the accumulated degree) or the explicit sumset
    has no repeats.
    """

    __slots__ = ("factors",)
    kind = "product"

    def __init__(self, factors: Iterable[PolyExpr]):
        flat: list[PolyExpr] = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, Product) else (f,))
        if not flat:
            raise PolyError("empty product")
        self.factors = tuple(flat)
        first = flat[0]
        deg, smin, count = first.degree, first.support_min, first.term_count
        support, exact, value = first.support, first.l1.exact, first.l1.value
        stride = first.stride
        for f in flat[1:]:
            collision_free = (deg == 0 or f.degree == 0 or f.stride > deg
                              or stride > f.degree)
            if support is not None and f.support is not None:
                support, distinct = _sumset(support, f.support)
                collision_free = collision_free or distinct
                if support is not None and len(support) > SUPPORT_LIMIT:
                    support = None
            else:
                support = None
            exact = exact and f.l1.exact and collision_free
            value = value * f.l1.value
            deg += f.degree
            smin += f.support_min
            count *= f.term_count
            stride = math.gcd(stride, f.stride)
        self.degree, self.support_min, self.term_count = deg, smin, count
        self.support = support
        self.stride = stride
        self.l1 = L1Norm(value, exact)
        self.depth = 1 + max(f.depth for f in flat)

    def children(self):
        return self.factors

    def evaluate(self, r, num, den):
        out = self.factors[0].evaluate(r, num, den)
        for f in self.factors[1:]:
            out = out * f.evaluate(r, num, den)
        return out


def _intervals_disjoint(a: PolyExpr, b: PolyExpr) -> bool:
    if a.support is not None and b.support is not None:
        return a.support.isdisjoint(b.support)
    if a.degree < b.support_min or b.degree < a.support_min:
        return True
    if a.support is not None:
        return all(d < b.support_min or d > b.degree for d in a.support)
    if b.support is not None:
        return all(d < a.support_min or d > a.degree for d in b.support)
    return False


class LinComb(PolyExpr):
    """``sum(scalar_i * child_i)``; parts with zero scalar are dropped."""

    __slots__ = ("parts", "disjoint")
    kind = "lincomb"

    def __init__(self, parts: Iterable[tuple[object, PolyExpr]]):
        kept = [(_coeff(s), e) for s, e in parts]
        kept = [(s, e) for s, e in kept if s != 0]
        if not kept:
            kept = [(Fraction(0), Leaf(SparsePoly()))]
        self.parts = tuple(kept)
        exprs = [e for _, e in kept]
        self.degree = max(e.degree for e in exprs)
        self.support_min = min(e.support_min for e in exprs)
        self.term_count = sum(e.term_count for e in exprs)
        disjoint = all(_intervals_disjoint(x, y)
                       for i, x in enumerate(exprs) for y in exprs[i + 1:])
        self.disjoint = disjoint
        value = sum((_mod(s) * e.l1.value for s, e in kept), Fraction(0))
        self.l1 = L1Norm(value, disjoint and all(e.l1.exact for e in exprs))
        if all(e.support is not None for e in exprs):
            u = frozenset().union(*(e.support for e in exprs))
            self.support = u if len(u) <= SUPPORT_LIMIT else None
        else:
            self.support = None
        self.stride = reduce(math.gcd, (e.stride for e in exprs), 0)
        self.depth = 1 + max(e.depth for e in exprs)

    def children(self):
        return tuple(e for _, e in self.parts)

    def evaluate(self, r, num, den):
        out = np.zeros(np.shape(num), dtype=complex)
        for s, e in self.parts:
            out += complex(s) * e.evaluate(r, num, den)
        return out


class Rotate(PolyExpr):
    """``z -> child(omega * z)`` with ``omega = exp(2*pi*i*turn)``, ``turn`` rational."""

    __slots__ = ("child", "turn")
    kind = "rotate"

    def __init__(self, child: PolyExpr, turn: Fraction):
        self.child = child
        self.turn = Fraction(turn) % 1
        for name in ("degree", "support_min", "l1", "term_count", "support", "stride"):
            setattr(self, name, getattr(child, name))
        self.depth = child.depth + 1

    @property
    def omega(self) -> complex:
        return complex(unit_roots(np.array([self.turn.numerator], dtype=object),
                                  self.turn.denominator)[0])

    def children(self):
        return (self.child,)

    def evaluate(self, r, num, den):
        s = self.turn
        lcm = den * s.denominator // math.gcd(den, s.denominator)
        shift = s.numerator * (lcm // s.denominator)
        if num.dtype == object or lcm > _INT64_DEN_LIMIT:
            scaled = np.array([(int(k) * (lcm // den) + shift) % lcm for k in num.ravel()],
                              dtype=object).reshape(num.shape)
        else:
            scaled = (num * (lcm // den) + shift) % lcm
        return self.child.evaluate(r, scaled, lcm)


# ---------------------------------------------------------------------------
# constructors


def leaf(poly) -> Leaf:
    if isinstance(poly, Leaf):
        return poly
    if not isinstance(poly, SparsePoly):
        poly = SparsePoly(poly)
    return Leaf(poly)


def as_expr(p) -> PolyExpr:
    return p if isinstance(p, PolyExpr) else leaf(p)


def dilate(e, m: int) -> PolyExpr:
    e = as_expr(e)
    m = int(m)
    if m == 1:
        return e
    if isinstance(e, Dilate):
        return Dilate(e.child, e.m * m)
    return Dilate(e, m)


def gap_mul(e, f, m: int) -> PolyExpr:
    """``e(z) * f(z**m)`` with the l1-norm certified multiplicative.

    Raises :class:`GapViolation` when ``m <= deg e`` or either factor lacks an
    exact l1-norm.
    """
    e, f = as_expr(e), as_expr(f)
    m = int(m)
    if m <= e.degree:
        raise GapViolation(f"gap {m} does not exceed degree {e.degree}")
    if not (e.l1.exact and f.l1.exact):
        raise GapViolation("gap_mul needs factors with exact l1-norm")
    out = Product([e, dilate(f, m)])
    assert out.l1.exact
    return out


def lincomb_disjoint(parts: Iterable[tuple[object, PolyExpr]]) -> PolyExpr:
    """Linear combination whose l1-norm is the weighted sum of the parts'."""
    out = LinComb((s, as_expr(e)) for s, e in parts)
    if not out.disjoint:
        raise SupportOverlap("supports of the parts overlap or cannot be separated")
    return out


def rotate(e, omega) -> PolyExpr:
    """``z -> e(omega * z)``.

    ``omega`` is either a unimodular complex number or, for exactness, a
    rational ``turn`` given as a :class:`~fractions.Fraction`.
    """
    e = as_expr(e)
    if isinstance(omega, Fraction):
        turn = omega % 1
    else:
        omega = complex(omega)
        if abs(abs(omega) - 1) > 1e-12:
            raise PolyError(f"|omega| = {abs(omega)} is not 1")
        exact = {1: 0, 1j: Fraction(1, 4), -1: Fraction(1, 2), -1j: Fraction(3, 4)}
        turn = exact.get(omega)
        if turn is None:
            turn = Fraction(math.atan2(omega.imag, omega.real) / (2 * math.pi)) % 1
    if turn == 0:
        return e
    if isinstance(e, Rotate):
        return Rotate(e.child, e.turn + turn)
    return Rotate(e, turn)


def expand(e, term_budget: int = 100_000) -> SparsePoly:
    """Fully expanded form; raises :class:`BudgetExceeded` before allocating."""
    e = as_expr(e)
    if e.term_count > term_budget:
        raise BudgetExceeded(e.term_count, term_budget)
    return _expand(e)


def _expand(e: PolyExpr) -> SparsePoly:
    if isinstance(e, Leaf):
        return e.poly
    if isinstance(e, Dilate):
        return _expand(e.child).dilate(e.m)
    if isinstance(e, Product):
        return reduce(lambda acc, f: acc * _expand(f), e.factors[1:], _expand(e.factors[0]))
    if isinstance(e, LinComb):
        return reduce(lambda acc, p: acc + _expand(p[1]) * p[0], e.parts, SparsePoly())
    if isinstance(e, Rotate):
        inner = _expand(e.child)
        s = e.turn
        idx = np.array([(d * s.numerator) % s.denominator for d in inner], dtype=object)
        roots = unit_roots(idx, s.denominator)
        return SparsePoly({d: complex(c) * complex(w)
                           for (d, c), w in zip(inner.items(), roots)})
    raise TypeError(type(e).__name__)


# ---------------------------------------------------------------------------
# evaluation


def eval_polar(e, r, num, den: int) -> np.ndarray:
    """Evaluate at ``r * exp(2*pi*i*num/den)``; ``r=None`` means the unit circle."""
    e = as_expr(e)
    den = int(den)
    idx = _as_index(num, den)
    if r is not None:
        r = np.broadcast_to(np.asarray(r, dtype=float), idx.shape)
    return e.evaluate(r, idx, den)


def eval_on_circle(e, num, den: int) -> np.ndarray:
    """Values at the rational angles ``num/den`` (arrays allowed)."""
    return eval_polar(e, None, num, den)


def eval_at_angle(e, t) -> complex:
    """Value at ``exp(2*pi*i*t)`` for an exact rational ``t``."""
    t = Fraction(t) % 1
    num = np.array([t.numerator], dtype=object if t.denominator > _INT64_DEN_LIMIT else np.int64)
    return complex(eval_on_circle(e, num, t.denominator)[0])


def eval_reals(e, xs) -> np.ndarray:
    """Values at real points in [-1, 1]; huge powers underflow cleanly to 0."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if np.any(np.abs(xs) > 1):
        raise PolyError("real evaluation is restricted to [-1, 1]")
    num = (xs < 0).astype(np.int64)
    return eval_polar(e, np.abs(xs), num, 2)


def eval_at_real(e, x) -> complex:
    return complex(eval_reals(e, [x])[0])


def eval_point(e, z) -> complex:
    """Value at a point of the closed disc given as a complex number (angle rounded to a dyadic)."""
    z = complex(z)
    r = abs(z)
    if r > 1 + 1e-15:
        raise PolyError("point outside the closed unit disc")
    t = Fraction(cmath.phase(z) / (2 * math.pi)) % 1 if r else Fraction(0)
    num = np.array([t.numerator], dtype=object)
    return complex(eval_polar(e, np.array([min(r, 1.0)]), num, t.denominator)[0])


def l1_norm(e) -> L1Norm:
    return as_expr(e).l1


# ---------------------------------------------------------------------------
# JSON


def expr_to_json(e) -> dict:
    e = as_expr(e)
    if isinstance(e, Leaf):
        return {"kind": "leaf", **e.poly.to_json()}
    if isinstance(e, Dilate):
        return {"kind": "dilate", "m": str(e.m), "child": expr_to_json(e.child)}
    if isinstance(e, Product):
        return {"kind": "product", "children": [expr_to_json(f) for f in e.factors]}
    if isinstance(e, LinComb):
        return {"kind": "lincomb",
                "parts": [{"scalar": _term_json(0, s), "child": expr_to_json(c)}
                          for s, c in e.parts]}
    if isinstance(e, Rotate):
        return {"kind": "rotate", "turn": str(e.turn), "child": expr_to_json(e.child)}
    raise TypeError(type(e).__name__)


def expr_from_json(obj: dict) -> PolyExpr:
    kind = obj.get("kind", "leaf")
    if kind == "leaf":
        return Leaf(SparsePoly.from_json(obj))
    if kind == "dilate":
        return Dilate(expr_from_json(obj["child"]), int(obj["m"]))
    if kind == "product":
        return Product(expr_from_json(c) for c in obj["children"])
    if kind == "lincomb":
        return LinComb((_term_coeff(p["scalar"]), expr_from_json(p["child"])) for p in obj["parts"])
    if kind == "rotate":
        return Rotate(expr_from_json(obj["child"]), Fraction(obj["turn"]))
    raise PolyError(f"unknown node kind {kind!r}")


def dumps(e) -> str:
    return json.dumps(expr_to_json(e))


def loads(text: str) -> PolyExpr:
    return expr_from_json(json.loads(text))
