"""Sup-norm estimates on the unit circle and on [-1, 1].

Upper bounds come from Bernstein's inequality: a degree-``d`` polynomial
sampled at ``M`` equispaced angles satisfies

    sup |p| <= max_j |p(w_j)| / (1 - pi * d / M),     M > pi * d,

because every angle lies within ``pi / M`` of a sample and ``|p'|`` on the
circle is at most ``d * sup |p|``.  Lower bounds are always realized by a
witness point that can be re-evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .polyexpr import (
    PolyExpr,
    SparsePoly,
    as_expr,
    eval_at_angle,
    eval_at_real,
    eval_on_circle,
    eval_reals,
    leaf,
)

INV_PHI = (math.sqrt(5) - 1) / 2
CHUNK = 1 << 18
# refinement angles are quantized to this dyadic grid
ANGLE_BITS = 60


class TooFewSamples(ValueError):
    pass


@dataclass(frozen=True)
class Witness:
    """A point where ``|p|`` was evaluated: rational angle ``t`` or real ``x``."""

    value: float
    t: Optional[Fraction] = None
    x: Optional[float] = None

    def __post_init__(self):
        if (self.t is None) == (self.x is None):
            raise ValueError("a witness has exactly one of t or x")

    def recheck(self, p) -> float:
        if self.t is not None:
            return abs(eval_at_angle(p, self.t))
        return abs(eval_at_real(p, self.x))

    @property
    def point(self) -> complex:
        if self.t is not None:
            return complex(np.exp(2j * np.pi * float(self.t)))
        return complex(self.x)

    def to_json(self) -> dict:
        loc = {"t": str(self.t)} if self.t is not None else {"x": self.x}
        return {**loc, "value": self.value}

    @classmethod
    def from_json(cls, obj: dict) -> Witness:
        if "t" in obj:
            return cls(value=float(obj["value"]), t=Fraction(obj["t"]))
        return cls(value=float(obj["value"]), x=float(obj["x"]))


@dataclass(frozen=True)
class NormEnclosure:
    lower: float
    upper: float
    method: str
    samples: int
    witness: Witness = field(compare=False)

    def __post_init__(self):
        if not 0 <= self.lower <= self.upper:
            raise ValueError(f"bad enclosure [{self.lower}, {self.upper}]")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, v: float) -> bool:
        return self.lower <= v <= self.upper

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "method": self.method,
                "samples": self.samples, "witness": self.witness.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> NormEnclosure:
        return cls(float(obj["lower"]), float(obj["upper"]), obj["method"],
                   int(obj["samples"]), Witness.from_json(obj["witness"]))


def _is_real(p) -> bool:
    if isinstance(p, SparsePoly):
        return all(not isinstance(c, complex) for _, c in p.items())
    return False


def circle_max(e, M: int, half: bool = False) -> tuple[float, int]:
    """Max of ``|e|`` over the angles ``j/M``; returns (value, j) with the smallest maximizing j.

    With ``half=True`` only ``0 <= j <= M/2`` are visited, which is enough
    for real coefficients (``|p(conj z)| = |p(z)|``).
    """
    e = as_expr(e)
    stop = M // 2 + 1 if half else M
    best, best_j = -1.0, 0
    for lo in range(0, stop, CHUNK):
        j = np.arange(lo, min(stop, lo + CHUNK), dtype=np.int64)
        v = np.abs(eval_on_circle(e, j, M))
        k = int(np.argmax(v))
        if v[k] > best:
            best, best_j = float(v[k]), int(j[k])
    return best, best_j


def circle_sup_certified(p: SparsePoly, M: int) -> NormEnclosure:
    """Certified enclosure of ``sup_{|z|<=1} |p(z)|`` from ``M`` equispaced samples."""
    if not isinstance(p, SparsePoly):
        raise TypeError("circle_sup_certified needs an expanded SparsePoly")
    d = p.degree
    M = int(M)
    if M < 1 or M <= math.pi * d:
        raise TooFewSamples(f"M={M} must exceed pi*deg={math.pi * d:.3f}")
    lower, j = circle_max(leaf(p), M, half=_is_real(p))
    upper = lower if d == 0 else lower / (1 - math.pi * d / M)
    return NormEnclosure(lower, upper, "bernstein", M, Witness(lower, t=Fraction(j, M)))


def circle_sup_adaptive(p: SparsePoly, width: float, M0: Optional[int] = None,
                        max_samples: int = 5_000_000) -> NormEnclosure:
    """Certified enclosure of width <= ``width`` by ternary refinement of promising cells.

    A cell of half-width ``h`` (radians) around a sample ``w`` satisfies
    ``sup_cell |p| <= |p(w)| + d * S * h`` with ``S`` any upper bound for the
    circle sup, by the same Bernstein inequality as the uniform grid.
    Cells whose bound cannot beat ``lower + width`` are dropped.  Refinement
    stops early once ``max_samples`` evaluations are spent; the enclosure is
    then still valid, only wider than requested.
    """
    if not isinstance(p, SparsePoly):
        raise TypeError("circle_sup_adaptive needs an expanded SparsePoly")
    d = p.degree
    if d == 0:
        c = float(abs(p[0]))
        return NormEnclosure(c, c, "bernstein", 1, Witness(c, t=Fraction(0)))
    e = leaf(p)
    M = M0 or 4 * math.ceil(10 * math.pi * d / 4)
    if M <= math.pi * d:
        raise TooFewSamples(f"M0={M} must exceed pi*deg")
    cells = np.arange(M, dtype=np.int64)
    v = np.abs(eval_on_circle(e, cells, M))
    i = int(np.argmax(v))
    lower, wit = float(v[i]), Fraction(int(cells[i]), M)
    S = lower / (1 - math.pi * d / M)
    dropped = 0.0
    total = M
    while True:
        bound = v + d * S * (math.pi / M)
        upper = max(dropped, float(bound.max()), lower)
        S = min(S, upper)
        keep = bound > lower + width
        if not keep.any() or total + 3 * int(keep.sum()) > max_samples:
            break
        if (~keep).any():
            dropped = max(dropped, float(bound[~keep].max()))
        parents = cells[keep]
        if 3 * M > 2**31 and cells.dtype != object:
            parents = parents.astype(object)
        cells = np.concatenate([3 * parents - 1, 3 * parents, 3 * parents + 1]) % (3 * M)
        M *= 3
        v = np.abs(eval_on_circle(e, cells, M))
        total += len(cells)
        order = np.lexsort((cells.astype(float), -v))
        i = int(order[0])
        if v[i] > lower:
            lower, wit = float(v[i]), Fraction(int(cells[i]), M)
    return NormEnclosure(lower, max(upper, lower), "bernstein", total, Witness(lower, t=wit))


def _quantize(t: float) -> Fraction:
    return Fraction(round(t * (1 << ANGLE_BITS)) % (1 << ANGLE_BITS), 1 << ANGLE_BITS)


def _angles_abs(e: PolyExpr, ts: list[Fraction]) -> np.ndarray:
    den = 1 << ANGLE_BITS
    num = np.array([int(t * den) for t in ts], dtype=object)
    return np.abs(eval_on_circle(e, num, den))


def _golden_max(f, lo: np.ndarray, hi: np.ndarray, rounds: int):
    """Vectorized golden-section maximization of ``f`` on the brackets ``[lo, hi]``."""
    c = hi - INV_PHI * (hi - lo)
    d = lo + INV_PHI * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(rounds):
        left = fc >= fd
        hi = np.where(left, d, hi)
        lo = np.where(left, lo, c)
        kept = np.where(left, fc, fd)
        c, d = (np.where(left, hi - INV_PHI * (hi - lo), d),
                np.where(left, c, lo + INV_PHI * (hi - lo)))
        fp = f(np.where(left, c, d))
        fc, fd = np.where(left, fp, kept), np.where(left, kept, fp)
    return c, fc, d, fd


def _top_k(v: np.ndarray, k: int) -> np.ndarray:
    # descending value, ascending index on ties
    order = np.lexsort((np.arange(len(v)), -v))
    return order[:k]


def circle_sup_refined(e, grid: int = 10_000, rounds: int = 40, k: int = 8) -> Witness:
    """Best lower bound for the circle sup: grid search then golden-section refinement."""
    e = as_expr(e)
    j = np.arange(grid, dtype=np.int64)
    v = np.abs(eval_on_circle(e, j, grid))
    best = _top_k(v, k)
    cands = [(float(v[i]), Fraction(int(i), grid)) for i in best]
    if rounds > 0:
        centre = best / grid
        lo, hi = centre - 1.0 / grid, centre + 1.0 / grid

        def f(ts):
            return _angles_abs(e, [_quantize(t) for t in ts])

        c, fc, d, fd = _golden_max(f, lo, hi, rounds)
        for ti, fi in zip(np.concatenate([c, d]), np.concatenate([fc, fd])):
            cands.append((float(fi), _quantize(ti)))
    value, t = max(cands, key=lambda vt: (vt[0], -vt[1]))
    return Witness(value, t=t)


def circle_sup_enclosure_palpha(low: SparsePoly, tail, tail_l1_weight, tail_sup_bound: float,
                                M: int) -> NormEnclosure:
    """Enclosure of ``sup |low + weight * tail|`` on the disc.

    The upper bound is the certified sup of the low-degree part plus the
    caller's bound on the weighted tail; the lower bound is the largest
    sampled modulus of the full (factored) sum.
    """
    low_enc = circle_sup_certified(low, M)
    w = complex(tail_l1_weight)
    if w == 0 or tail is None:
        return NormEnclosure(low_enc.lower, low_enc.upper + tail_sup_bound, "bernstein", M,
                             low_enc.witness)
    tail = as_expr(tail)
    best, best_j = -1.0, 0
    low_e = leaf(low)
    for lo in range(0, M, CHUNK):
        j = np.arange(lo, min(M, lo + CHUNK), dtype=np.int64)
        vals = np.abs(eval_on_circle(low_e, j, M) + w * eval_on_circle(tail, j, M))
        i = int(np.argmax(vals))
        if vals[i] > best:
            best, best_j = float(vals[i]), int(j[i])
    upper = max(low_enc.upper + tail_sup_bound, best)
    return NormEnclosure(best, upper, "bernstein", M, Witness(best, t=Fraction(best_j, M)))


def structural_sup_bound(e, leaf_width: float = 1e-7) -> float:
    """Certified upper bound for the circle sup of a factored expression.

    Leaves get an adaptive Bernstein bound (capped by their l1-norm), products multiply,
    linear combinations use the triangle inequality; dilation and rotation do
    not change the sup.
    """
    from .polyexpr import Dilate, Leaf, LinComb, Product, Rotate

    cache: dict[int, float] = {}

    def bound(node) -> float:
        key = id(node)
        if key in cache:
            return cache[key]
        if isinstance(node, Leaf):
            p = node.poly
            if len(p) <= 1 or p.degree == 0:
                out = float(p.l1())
            else:
                out = min(_leaf_bound(p, leaf_width), float(p.l1()))
        elif isinstance(node, (Dilate, Rotate)):
            out = bound(node.child)
        elif isinstance(node, Product):
            out = math.prod(bound(f) for f in node.factors)
        elif isinstance(node, LinComb):
            out = sum(abs(complex(s)) * bound(c) for s, c in node.parts)
        else:
            raise TypeError(type(node).__name__)
        cache[key] = out
        return out

    return bound(as_expr(e))


_LEAF_BOUNDS: dict = {}


def _leaf_bound(p: SparsePoly, width: float) -> float:
    key = (p, width)
    if key not in _LEAF_BOUNDS:
        _LEAF_BOUNDS[key] = circle_sup_adaptive(p, width).upper
    return _LEAF_BOUNDS[key]


def structural_enclosure(e, grid: int = 4096, rounds: int = 40) -> NormEnclosure:
    """Refined witness below, :func:`structural_sup_bound` above."""
    e = as_expr(e)
    wit = circle_sup_refined(e, grid=grid, rounds=rounds)
    upper = max(wit.value, min(structural_sup_bound(e), float(e.l1.value)))
    return NormEnclosure(wit.value, upper, "bernstein", grid, wit)


def triangle_enclosure(e, grid: int = 4096) -> NormEnclosure:
    """Witness lower bound with the coefficient l1-norm as the upper bound."""
    e = as_expr(e)
    wit = circle_sup_refined(e, grid=grid, rounds=0, k=1)
    return NormEnclosure(wit.value, max(wit.value, float(e.l1.value)), "triangle", grid, wit)


def interval_sup(e, grid: int = 10_000, rounds: int = 40, k: int = 8) -> Witness:
    """Sampled and refined lower bound for ``sup_{[-1,1]} |e|``; both endpoints are sampled."""
    e = as_expr(e)
    xs = np.linspace(-1.0, 1.0, max(grid, 2))
    xs[0], xs[-1] = -1.0, 1.0
    v = np.abs(eval_reals(e, xs))
    best = _top_k(v, k)
    cands = [(float(v[i]), float(xs[i])) for i in best]
    if rounds > 0:
        h = 2.0 / (len(xs) - 1)
        lo = np.clip(xs[best] - h, -1.0, 1.0)
        hi = np.clip(xs[best] + h, -1.0, 1.0)
        c, fc, d, fd = _golden_max(lambda x: np.abs(eval_reals(e, x)), lo, hi, rounds)
        cands += [(float(a), float(b)) for a, b in zip(np.concatenate([fc, fd]),
                                                       np.concatenate([c, d]))]
    value, x = max(cands, key=lambda vx: (vx[0], -vx[1]))
    return Witness(value, x=x)


def b0() -> float:
    return (-5 + 4 * math.sqrt(2)) / 7


def extremum_depth(alpha: float, b: float) -> float:
    """``|f(x0)|`` for ``f(x) = (alpha+b)/2 x^4 - (alpha-b)/2 x^2`` at its interior extremum."""
    return (alpha - b) ** 2 / (8 * (alpha + b))


def palpha_interval_certificate(alpha, b, n: int, U: float, c_tilde: float) -> bool:
    """Sufficient condition for ``sup_{[-1,1]} |p_alpha| <= b``.

    On ``[0, x1]`` the quartic part stays below its extremum depth and the
    tail below ``U**(n+1)``; on ``[x1, 1]`` the bound
    ``b x^2 + c_tilde U**(n-1) (1-x^2)^2 <= b`` holds once
    ``c_tilde U**(n-1) <= b``.  Both bounds are even in ``x``.
    """
    alpha, b = float(alpha), float(b)
    if not b <= alpha <= 1:
        raise ValueError("alpha must lie in [b, 1]")
    if b <= b0() or n < 2 or not 0 < U < 1:
        return False
    near = extremum_depth(alpha, b) + U ** (n + 1) < b
    far = c_tilde * U ** (n - 1) <= b
    return near and far


def q1_over_gap(x: np.ndarray) -> np.ndarray:
    """``q1(x) / (1 - x^2)^2`` with the double roots at ``+-1`` cancelled.

    Uses ``q0(x) = x (x^2-1)(x^2-x+1)/4`` and ``x^12 - 1 = (x^2-1)(x^10+...+1)``.
    """
    x = np.asarray(x, dtype=float)
    x2 = x * x
    even = np.polyval([1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1], x)
    return x ** 7 * (x2 - x + 1) * (x ** 12 - x ** 6 + 1) * even / 16


def q0_interval_constant(grid: int = 100_001) -> float:
    """``sup_{[-1,1]} |q1(x)| / (1-x^2)^2`` by dense sampling (deterministic for fixed grid)."""
    xs = np.linspace(-1.0, 1.0, grid)
    return float(np.max(np.abs(q1_over_gap(xs))))

