"""Measures ``c*m + sum_j a_j R^{*j}`` on the circle.

``m`` is normalized Haar measure and ``R`` the classical Riesz product
``prod_k (1 + cos 3^k t)``.  Because ``R`` has independent powers, the
polynomial part behaves like the coefficient algebra of ``q(z) = sum a_j z^j``:

* total variation ``|c| + |q|_1``;
* Fourier-Stieltjes values ``c + q(1)`` at frequency 0 and ``q(v)`` with
  ``v in {0} U {2^-j}`` elsewhere;
* spectrum of the singular part ``q(closed disc)``, so the spectral radius is
  ``max(|c + q(1)|, sup_circle |q|)``.

Everything is exact over the rationals except the circle sup, which comes with
a certified enclosure.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from . import normcalc
from .polyexpr import BudgetExceeded, PolyExpr, SparsePoly, as_expr, eval_at_real, expand

Number = Union[Fraction, float, complex]

FLOOR_SLACK = 1e-9


class HypothesisNotMet(ValueError):
    pass


def _num(c) -> Number:
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, complex) and c.imag == 0:
        return float(c.real)
    return c


@dataclass(frozen=True)
class RieszMeasure:
    haar: Number = Fraction(0)
    poly: SparsePoly = field(default_factory=SparsePoly)

    def __post_init__(self):
        object.__setattr__(self, "haar", _num(self.haar))

    @property
    def mass_of_poly(self) -> Number:
        """``q(1)``: the total mass of the singular part."""
        return sum(self.poly.terms.values(), Fraction(0))

    @property
    def hermitian(self) -> bool:
        return not isinstance(self.haar, complex) and not any(
            isinstance(c, complex) for _, c in self.poly.items())

    def __mul__(self, other: RieszMeasure) -> RieszMeasure:
        return convolve(self, other)

    def __repr__(self):
        return f"RieszMeasure(haar={self.haar}, poly={self.poly!r})"


def monomial_measure(coeffs: dict, haar=0) -> RieszMeasure:
    return RieszMeasure(haar, SparsePoly(coeffs))


def convolve(mu: RieszMeasure, nu: RieszMeasure) -> RieszMeasure:
    """``m*m = m``, ``m*R^j = m`` and ``R^i * R^j = R^{i+j}``."""
    c1, c2 = mu.haar, nu.haar
    haar = c1 * c2 + c1 * nu.mass_of_poly + c2 * mu.mass_of_poly
    return RieszMeasure(haar, mu.poly * nu.poly)


def power(mu: RieszMeasure, n: int, term_budget: int = 1_000_000) -> RieszMeasure:
    """``mu^{*n}``: Haar part ``(c + q(1))^n - q(1)^n``, singular part ``q^n``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n * mu.poly.degree + 1 > term_budget:
        raise BudgetExceeded(n * mu.poly.degree + 1, term_budget)
    s = mu.mass_of_poly
    return RieszMeasure((mu.haar + s) ** n - s ** n, mu.poly ** n)


def tv_norm(mu: RieszMeasure) -> Number:
    return abs(mu.haar) + mu.poly.l1()


def singular_norm(mu: RieszMeasure) -> Number:
    return mu.poly.l1()


def all_powers_singular(mu: RieszMeasure) -> bool:
    return mu.haar == 0


def fs_values(mu: RieszMeasure, J: int) -> list[tuple[str, Number]]:
    """Moduli of the transform on frequency 0, on ``R-hat = 0`` and on ``R-hat = 2^-j``."""
    q = mu.poly
    out = [("k=0", abs(mu.haar + mu.mass_of_poly)), ("v=0", abs(q(Fraction(0))))]
    out += [(f"v=2^-{j}", abs(q(Fraction(1, 2 ** j)))) for j in range(1, J + 1)]
    return out


def fs_sup(mu: RieszMeasure, tol: float = 1e-12) -> Number:
    """``sup_k |mu-hat(k)|``.

    The values on ``{2^-j}`` are scanned until the tail bound
    ``|q(0)| + |q|_1 2^-J`` can no longer beat the running maximum (the answer is
    then exact), or until ``|q|_1 2^-J < tol``.
    """
    q = mu.poly
    l1 = float(q.l1())
    best = max(abs(mu.haar + mu.mass_of_poly), abs(q(Fraction(0))))
    q0 = float(abs(q(Fraction(0))))
    j_cap = max(1, math.ceil(math.log2(l1 / tol)) + 1) if l1 > 0 else 0
    for j in range(1, j_cap + 1):
        best = max(best, abs(q(Fraction(1, 2 ** j))))
        if q0 + l1 * 2.0 ** -j <= float(best):
            break
    return best


@dataclass(frozen=True)
class Radius:
    """Spectral radius enclosure; ``exact`` is set when both ends provably agree."""

    lower: float
    upper: float
    exact: Optional[Number] = None
    witness: Optional[normcalc.Witness] = None

    @property
    def width(self) -> float:
        return self.upper - self.lower


def circle_radius(q: SparsePoly, width: float = 1e-6) -> Radius:
    """``sup_circle |q|`` enclosed, capped above by ``|q|_1``."""
    if q.is_zero:
        return Radius(0.0, 0.0, Fraction(0))
    l1 = q.l1()
    if len(q) == 1:
        return Radius(float(l1), float(l1), l1)
    enc = normcalc.circle_sup_adaptive(q, width)
    upper = min(enc.upper, float(l1))
    if enc.lower >= float(l1):
        return Radius(float(l1), float(l1), l1, enc.witness)
    return Radius(enc.lower, upper, None, enc.witness)


def spectral_radius(mu: RieszMeasure, width: float = 1e-6) -> Radius:
    """``max(|c + q(1)|, sup_circle |q|)``."""
    h = abs(mu.haar + mu.mass_of_poly)
    circ = circle_radius(mu.poly, width)
    hf = float(h)
    if circ.exact is not None and (circ.exact >= h):
        return circ
    if hf >= circ.upper:
        return Radius(hf, hf, h)
    return Radius(max(hf, circ.lower), max(hf, circ.upper), None, circ.witness)


# ---------------------------------------------------------------------------
# spectral radius formula and the trichotomy


@dataclass
class FormulaCheck:
    rows: list[tuple[int, Fraction, float]]
    radius: Radius
    fs: Number
    floor_ok: bool
    monotone_ok: bool
    gap: float
    skipped: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.floor_ok and self.monotone_ok

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "root_norm", "floor_gap"])
        for n, _, root in self.rows:
            w.writerow([n, repr(root), repr(root - self.radius.lower)])
        return buf.getvalue()


def formula_check(mu: RieszMeasure, N: int, budget: int = 1_000_000,
                  width: float = 1e-6) -> FormulaCheck:
    """Tabulate ``||(mu^{*n})_s||^{1/n} = |q^n|_1^{1/n}`` for ``n <= N``.

    Verdicts: every entry sits above the spectral radius of the singular part
    (up to ``1e-9``); entries along ``n = 1, 2, 4, ...`` never increase
    (``|q^{2n}|_1 <= |q^n|_1^2``, compared exactly); and ``gap`` reports how far
    ``max(fs_sup, min entry)`` sits above the spectral radius.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    q = mu.poly
    circ = circle_radius(q, width)
    radius = spectral_radius(mu, width)
    rows, skipped, norms = [], [], {}
    qn = SparsePoly.constant(1)
    for n in range(1, N + 1):
        if n * q.degree + 1 > budget:
            skipped.append(n)
            continue
        qn = qn * q
        l1 = qn.l1()
        norms[n] = l1
        rows.append((n, l1, float(l1) ** (1.0 / n) if l1 else 0.0))
    floor_ok = all(root >= circ.lower - FLOOR_SLACK for _, _, root in rows)
    monotone_ok = True
    n = 1
    while 2 * n in norms:
        if norms[2 * n] > norms[n] ** 2:
            monotone_ok = False
        n *= 2
    fs = fs_sup(mu)
    best = max(float(fs), min((r for _, _, r in rows), default=0.0))
    return FormulaCheck(rows, radius, fs, floor_ok, monotone_ok, best - radius.lower, skipped)


@dataclass(frozen=True)
class Trichotomy:
    singular_powers: bool
    norm_exceeds_radius: bool

    @property
    def branches(self) -> tuple[int, ...]:
        return tuple(i for i, ok in ((1, self.singular_powers), (2, self.norm_exceeds_radius)) if ok)


def trichotomy_check(mu: RieszMeasure, width: float = 1e-6) -> Trichotomy:
    """Which of "all powers singular" / "norm > spectral radius" hold.

    Requires ``r(mu) > sup |mu-hat|``; at least one branch must then hold.
    """
    r = spectral_radius(mu, width)
    fs = float(fs_sup(mu))
    if not r.lower > fs + FLOOR_SLACK:
        raise HypothesisNotMet(f"r = {r.lower} does not exceed sup |mu-hat| = {fs}")
    tv = tv_norm(mu)
    if r.exact is not None:
        exceeds = tv > r.exact
    else:
        exceeds = float(tv) > r.upper + FLOOR_SLACK
    out = Trichotomy(all_powers_singular(mu), exceeds)
    if not out.branches:
        raise AssertionError(f"neither branch holds for {mu!r}")
    return out


# ---------------------------------------------------------------------------
# Riesz product partial sums


def riesz_partial(K: int, term_budget: int = 3 ** 14) -> dict[int, Fraction]:
    """Fourier coefficients of ``prod_{k=1..K} (1 + cos 3^k t)``.

    The support is ``{sum eps_k 3^k : eps_k in {-1, 0, 1}}`` and the coefficient
    there is ``2^-(number of nonzero eps_k)``.
    """
    if not 1 <= K <= 20:
        raise ValueError("K must lie in 1..20")
    if 3 ** K > term_budget:
        raise BudgetExceeded(3 ** K, term_budget)
    half = Fraction(1, 2)
    coeffs = {0: Fraction(1)}
    for k in range(1, K + 1):
        s = 3 ** k
        nxt: dict[int, Fraction] = {}
        for f, c in coeffs.items():
            for shift, w in ((0, Fraction(1)), (s, half), (-s, half)):
                nxt[f + shift] = nxt.get(f + shift, Fraction(0)) + c * w
        coeffs = nxt
    return {f: c for f, c in sorted(coeffs.items()) if c}


def riesz_coefficient(freq: int, K: int) -> Fraction:
    """Single coefficient of the ``K``-th partial product via balanced ternary digits."""
    if freq % 3:
        return Fraction(0)
    digits, f = [], freq // 3
    while f:
        r = f % 3
        if r == 2:
            r = -1
        digits.append(r)
        f = (f - r) // 3
    if len(digits) > K:
        return Fraction(0)
    return Fraction(1, 2 ** sum(1 for d in digits if d))


def riesz_value_set(K: int) -> set[Fraction]:
    return set(riesz_partial(K).values())


# ---------------------------------------------------------------------------
# norm / spectral radius / transform triples


@dataclass(frozen=True)
class TripleReport:
    tv: Number
    r_lower: float
    r_upper: float
    fs: Number
    singular_powers: bool
    r_exact: Optional[Number] = None

    def ordered(self, slack: float = FLOOR_SLACK) -> bool:
        return float(self.fs) <= self.r_upper + slack and self.r_lower <= float(self.tv) + slack

    def to_json(self) -> dict:
        return {"tv": _jnum(self.tv), "r": {"lower": self.r_lower, "upper": self.r_upper},
                "fs": _jnum(self.fs), "singular_powers": self.singular_powers}


def _jnum(x):
    if isinstance(x, Fraction):
        return float(x) if x.denominator != 1 else int(x)
    return float(abs(x)) if isinstance(x, complex) else x


def triple(mu: RieszMeasure, width: float = 1e-6) -> TripleReport:
    r = spectral_radius(mu, width)
    return TripleReport(tv_norm(mu), r.lower, r.upper, fs_sup(mu), all_powers_singular(mu), r.exact)


def measure_from_polynomial(p, disc: Optional[normcalc.NormEnclosure] = None,
                            tol: float = 1e-12, term_budget: int = 100_000) -> TripleReport:
    """Triple of ``mu = p(R)`` for a polynomial with real or complex coefficients.

    ``p`` may be a :class:`SparsePoly`, a factored :class:`PolyExpr` or a
    construction report (whose certified disc enclosure is reused).
    """
    if hasattr(p, "poly") and hasattr(p, "disc"):
        disc = p.disc if disc is None else disc
        p = p.poly
    if isinstance(p, SparsePoly):
        return triple(RieszMeasure(0, p))
    e = as_expr(p)
    try:
        return triple(RieszMeasure(0, expand(e, term_budget)))
    except BudgetExceeded:
        pass
    l1 = e.l1
    if disc is None:
        disc = normcalc.triangle_enclosure(e)
    l1f = float(l1.value)
    J = max(1, math.ceil(math.log2(max(l1f, 1e-300) / tol)) + 1)
    xs = [1.0, 0.0] + [2.0 ** -j for j in range(1, J + 1)]
    fs = max(abs(eval_at_real(e, x)) for x in xs)
    return TripleReport(l1.value, disc.lower, min(disc.upper, l1f), fs, True)


# presets


def _q0() -> SparsePoly:
    q = Fraction(1, 4)
    return SparsePoly({5: q, 4: -q, 2: q, 1: -q})


PRESETS = {
    "bullet1": lambda: RieszMeasure(Fraction(-1, 2), SparsePoly({1: Fraction(1, 2)})),
    "bullet2": lambda: RieszMeasure(0, SparsePoly({1: Fraction(1, 2), 2: Fraction(-1, 2)})),
    "bullet3": lambda: RieszMeasure(0, _q0()),
    "q0": lambda: RieszMeasure(0, _q0()),
    "unit": lambda: RieszMeasure(0, SparsePoly.constant(1)),
    "haar": lambda: RieszMeasure(1, SparsePoly()),
}


def preset(name: str) -> RieszMeasure:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def random_measure(seed: int, terms: int = 4, max_degree: int = 8) -> RieszMeasure:
    """Rational ``terms``-term polynomial measure with ``|q|_1 = 1`` exactly."""
    if not 1 <= terms <= max_degree + 1:
        raise ValueError("need 1 <= terms <= max_degree + 1")
    rng = np.random.default_rng(seed)
    degrees = sorted(int(d) for d in rng.choice(max_degree + 1, size=terms, replace=False))
    weights = [int(w) for w in rng.integers(1, 10, size=terms)]
    signs = [int(s) for s in rng.choice([-1, 1], size=terms)]
    total = sum(weights)
    return RieszMeasure(0, SparsePoly({d: Fraction(s * w, total)
                                       for d, s, w in zip(degrees, signs, weights)}))
