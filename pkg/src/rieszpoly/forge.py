"""Polynomials with prescribed l1-norm, disc sup-norm and interval sup-norm.

Given targets ``0 < b <= a <= 1`` the pipeline builds a polynomial ``p`` with
``|p|_1 = 1``, ``sup_disc |p| = a`` (to tolerance), ``sup_[-1,1] |p| <= b`` and
``p(1) = b``.

* Step 1 (``b0 < b < a``): the family
  ``p_alpha = (alpha+b)/2 z^4 - (alpha-b)/2 z^2 + (1-alpha) q_n`` where ``q_n``
  is a lacunary tower of ``q0 = (z^5 - z^4 + z^2 - z)/4``; ``alpha`` is found
  by bisection on the disc norm.
* Step 2 (small ``b``): the same family at the ``k``-th roots of the targets,
  raised to a gap power ``w = prod_l p_alpha(z^{m_l})``.
* Step 3 (``a = b``): ``z`` itself, or a rotation ``p(z_max z)`` of a
  polynomial built for ``(a, a/2)``.

Rational inputs stay rational: ``alpha`` is bisected in
:class:`~fractions.Fraction` so ``|p|_1 = 1`` and ``p(1) = b`` hold exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from . import normcalc
from .normcalc import NormEnclosure, Witness
from .polyexpr import (
    BudgetExceeded,
    L1Norm,
    PolyExpr,
    SparsePoly,
    dilate,
    eval_at_angle,
    eval_on_circle,
    expand,
    expr_to_json,
    gap_mul,
    leaf,
    lincomb_disjoint,
    rotate,
)

log = logging.getLogger(__name__)


class ForgeError(ValueError):
    pass


class InvalidTarget(ForgeError):
    pass


class InfeasibleTarget(ForgeError):
    pass


class BracketFailure(ForgeError):
    pass


class CertificationFailure(ForgeError):
    pass


@dataclass(frozen=True)
class TargetTriple:
    a: Fraction
    b: Fraction

    def __post_init__(self):
        if not 0 < self.b <= self.a <= 1:
            if self.b > self.a:
                raise InvalidTarget(f"b > a ({self.b} > {self.a})")
            raise InvalidTarget(f"targets must satisfy 0 < b <= a <= 1, got a={self.a}, b={self.b}")

    @classmethod
    def of(cls, a, b) -> TargetTriple:
        return cls(as_fraction(a), as_fraction(b))


@dataclass(frozen=True)
class BuildParams:
    tol: float = 0.02
    eta: float = 0.5
    k_margin: float = 1e-3
    grid: int = 4096          # disc samples per bisection step, multiple of 4
    rounds: int = 40          # golden-section rounds
    refine_k: int = 8
    interval_grid: int = 4001
    q0_samples: int = 100_000  # samples certifying sup |q0|
    c_grid: int = 100_001
    term_budget: int = 100_000
    max_bisect: int = 200
    witness_tol: float = 1e-11

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidTarget("tol must be positive")
        if not 0 < self.eta < 1:
            raise InvalidTarget("eta must lie in (0, 1)")
        if self.grid % 4:
            raise InvalidTarget("grid must be a multiple of 4 so that z = i is sampled")


@dataclass
class ConstructionReport:
    a: Fraction
    b: Fraction
    poly: PolyExpr
    step: int
    k: int
    n: Optional[int]
    epsilon: Optional[float]
    alpha0: Optional[Fraction]
    l1: L1Norm
    disc: NormEnclosure
    interval: Witness
    interval_bound: float
    interval_certified: bool
    value_at_one: complex
    bisect_steps: int = 0
    expanded: Optional[SparsePoly] = None
    config: dict = field(default_factory=dict)

    @property
    def degree(self) -> int:
        return self.poly.degree

    def to_json(self) -> dict:
        v = self.value_at_one
        return {
            "a": float(self.a), "b": float(self.b),
            "step": self.step, "k": self.k, "n": self.n,
            "epsilon": self.epsilon,
            "alpha0": None if self.alpha0 is None else str(self.alpha0),
            "alpha0_float": None if self.alpha0 is None else float(self.alpha0),
            "degree": str(self.poly.degree),
            "l1": {"value": str(self.l1.value), "exact": self.l1.exact},
            "disc": self.disc.to_json(),
            "interval": {"witness": self.interval.to_json(), "bound": self.interval_bound,
                         "certified": self.interval_certified},
            "value_at_one": {"re": v.real, "im": v.imag, "abs": abs(v)},
            "bisect_steps": self.bisect_steps,
            "config": self.config,
            "poly": expr_to_json(self.poly),
            "expanded": None if self.expanded is None else self.expanded.to_json(),
        }


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    # decimal literals such as 0.05 mean 1/20
    return Fraction(repr(float(x)))


# ---------------------------------------------------------------------------
# building blocks


def b0() -> float:
    return normcalc.b0()


def make_q0() -> SparsePoly:
    q = Fraction(1, 4)
    return SparsePoly({5: q, 4: -q, 2: q, 1: -q})


def make_qn(n: int) -> PolyExpr:
    """``q_{n+1}(z) = q_n(z) q0(z^{deg q_n + 1})``, never expanded."""
    if n < 0:
        raise ValueError("n must be >= 0")
    q0 = leaf(make_q0())
    q = q0
    for _ in range(n):
        q = gap_mul(q, q0, q.degree + 1)
    return q


def low_part(alpha, b) -> SparsePoly:
    alpha, b = as_fraction(alpha), as_fraction(b)
    return SparsePoly({4: (alpha + b) / 2, 2: -(alpha - b) / 2})


def make_p_alpha(alpha, b, n: int, qn: Optional[PolyExpr] = None) -> PolyExpr:
    """``(alpha+b)/2 z^4 - (alpha-b)/2 z^2 + (1-alpha) q_n`` with certified l1-norm 1."""
    alpha, b = as_fraction(alpha), as_fraction(b)
    if not b <= alpha <= 1:
        raise ValueError("alpha must lie in [b, 1]")
    if qn is None:
        qn = make_qn(n)
    return lincomb_disjoint([
        ((alpha + b) / 2, leaf(SparsePoly.monomial(4))),
        (-(alpha - b) / 2, leaf(SparsePoly.monomial(2))),
        (1 - alpha, qn),
    ])


def gap_multipliers(base_degree: int, k: int) -> list[int]:
    """Dilations ``m_l`` in ``w_{k-1}(z) = prod_l p(z^{m_l})``, ``m_{l+1} = 4 deg w_l + 1``."""
    ms, deg = [1], base_degree
    for _ in range(k - 1):
        m = 4 * deg + 1
        ms.append(m)
        deg += m * base_degree
    return ms


def make_w(p: PolyExpr, k: int, base_degree: Optional[int] = None) -> PolyExpr:
    """``w_{l+1}(z) = w_l(z) p(z^{4 deg w_l + 1})``, ``k`` factors in total.

    ``base_degree`` fixes the gaps from the generic degree of the family so
    every member (including ``alpha = 1``) shares the same dilations.
    """
    ms = gap_multipliers(p.degree if base_degree is None else base_degree, k)
    w = p
    for m in ms[1:]:
        w = gap_mul(w, p, m)
    return w


def _h(b: float) -> float:
    # depth of the quartic's interior dip at alpha = 1
    return (1 - b) ** 2 / (8 * (1 + b))


def choose_epsilon(a, b, params: BuildParams) -> float:
    """Tail budget: ``min(eta * min(a-b, b - h(b)), tol/4)``."""
    a, b = float(a), float(b)
    room = min(a - b, b - _h(b))
    if room <= 0:
        raise InfeasibleTarget(f"no room for epsilon: min(a-b, b-h(b)) = {room:.3g}")
    return min(params.eta * room, params.tol / 4)


def choose_n(epsilon: float, U: float, b, c_tilde: float) -> int:
    """Smallest ``n >= 2`` with ``U**(n+1) < epsilon`` and ``c_tilde * U**(n-1) <= b``."""
    if not 0 < U < 1:
        raise ValueError("U must lie in (0, 1)")
    b = float(b)
    n = max(2, math.ceil(math.log(epsilon) / math.log(U)) - 2)
    while not (U ** (n + 1) < epsilon and c_tilde * U ** (n - 1) <= b):
        n += 1
    while n > 2 and U ** n < epsilon and c_tilde * U ** (n - 2) <= b:
        n -= 1
    return n


def choose_k(b, margin: float) -> int:
    """Smallest ``k`` with ``b**(1/k) > b0 + margin``."""
    b = float(b)
    k = 1
    while b ** (1 / k) <= b0() + margin:
        k += 1
    return k


@lru_cache(maxsize=8)
def q0_sup_bound(samples: int) -> NormEnclosure:
    return normcalc.circle_sup_certified(make_q0(), samples)


@lru_cache(maxsize=8)
def interval_constant(grid: int) -> float:
    return normcalc.q0_interval_constant(grid)


# ---------------------------------------------------------------------------
# the alpha family on a fixed sample set


class AlphaFamily:
    """``w_alpha = prod_l p_alpha(z^{m_l})`` sampled on a fixed set of angles.

    The tail values ``q_n(z^{m_l})`` do not depend on ``alpha`` and are
    computed once; each ``alpha`` then costs a few vector operations.  The
    sample set is the grid ``j/M`` plus golden-section refinement points of
    the mid-range member, so the sampled maximum is a continuous function of
    ``alpha``.
    """

    def __init__(self, b: Fraction, n: int, k: int, U: float, params: BuildParams):
        self.b, self.n, self.k, self.U = b, n, k, U
        self.params = params
        self.qn = make_qn(n)
        self.ms = gap_multipliers(self.qn.degree, k)
        M = params.grid
        self.M = M
        j = np.arange(M, dtype=np.int64)
        self.angles: list[Fraction] = [Fraction(int(i), M) for i in j]
        z2, z4, tails = [], [], []
        for m in self.ms:
            z2.append(eval_on_circle(dilate(leaf(SparsePoly.monomial(2)), m), j, M))
            z4.append(eval_on_circle(dilate(leaf(SparsePoly.monomial(4)), m), j, M))
            tails.append(eval_on_circle(dilate(self.qn, m), j, M))
        self.z2, self.z4, self.tails = z2, z4, tails
        if params.rounds > 0:
            self._add_refined((b + 1) / 2)

    def _add_refined(self, alpha: Fraction):
        w = circle_refine_candidates(self.expr(alpha), self.params)
        den = 1 << normcalc.ANGLE_BITS
        num = np.array([int(t * den) for t in w], dtype=object)
        for l, m in enumerate(self.ms):
            self.z2[l] = np.concatenate([self.z2[l], eval_on_circle(
                dilate(leaf(SparsePoly.monomial(2)), m), num, den)])
            self.z4[l] = np.concatenate([self.z4[l], eval_on_circle(
                dilate(leaf(SparsePoly.monomial(4)), m), num, den)])
            self.tails[l] = np.concatenate([self.tails[l], eval_on_circle(
                dilate(self.qn, m), num, den)])
        self.angles.extend(w)

    def expr(self, alpha) -> PolyExpr:
        p = make_p_alpha(alpha, self.b, self.n, qn=self.qn)
        return p if self.k == 1 else make_w(p, self.k, base_degree=self.qn.degree)

    def values(self, alpha: Fraction) -> np.ndarray:
        hi = float((alpha + self.b) / 2)
        lo = float((alpha - self.b) / 2)
        wt = float(1 - alpha)
        out = np.ones(len(self.angles), dtype=complex)
        for z2, z4, tail in zip(self.z2, self.z4, self.tails):
            out = out * (hi * z4 - lo * z2 + wt * tail)
        return out

    def upper(self, alpha: Fraction) -> float:
        """Certified ``sup_disc |w_alpha|``: ``(sup|low| + (1-alpha) U^{n+1})^k``, capped by l1 = 1."""
        low = low_part(alpha, self.b)
        low_sup = min(float(low.l1()), self._bernstein_low(low))
        return min(1.0, (low_sup + float(1 - alpha) * self.U ** (self.n + 1)) ** self.k)

    def _bernstein_low(self, low: SparsePoly) -> float:
        if low.degree == 0:
            return float(abs(low[0]))
        return normcalc.circle_sup_certified(low, self.M).upper

    def enclosure(self, alpha: Fraction) -> NormEnclosure:
        v = np.abs(self.values(alpha))
        i = int(np.argmax(v))
        lower = float(v[i])
        upper = max(self.upper(alpha), lower)
        return NormEnclosure(lower, upper, "bernstein", len(v), Witness(lower, t=self.angles[i]))


def circle_refine_candidates(e: PolyExpr, params: BuildParams) -> list[Fraction]:
    """Golden-section refinement points around the best grid samples of ``|e|``."""
    wit = normcalc.circle_sup_refined(e, grid=params.grid, rounds=params.rounds,
                                      k=params.refine_k)
    return [wit.t] if wit.t.denominator != params.grid else []


def solve_alpha(a, b, n: int, params: BuildParams, *, k: int = 1,
                family: Optional[AlphaFamily] = None, U: Optional[float] = None,
                mode: str = "mid"):
    """Bisection on ``alpha in [b, 1]`` so that the disc norm of the family hits ``a``.

    ``mode="mid"`` stops once the enclosure contains ``a`` and both its ends
    are within ``tol/2`` of it.  ``mode="witness"`` drives the sampled
    maximum to ``a`` from below within ``params.witness_tol`` (used before a
    rotation makes that maximum the value at 1).

    Returns ``(alpha0, enclosure, steps, family)``.
    """
    a, b = as_fraction(a), as_fraction(b)
    if U is None:
        U = q0_sup_bound(params.q0_samples).upper
    if family is None:
        family = AlphaFamily(b, n, k, U, params)
    af = float(a)
    if a == 1:
        alpha = Fraction(1)
        return alpha, family.enclosure(alpha), 0, family
    enc_lo = family.enclosure(b)
    if enc_lo.lower >= af or (mode == "mid" and enc_lo.upper >= af):
        raise BracketFailure(f"F(b) enclosure {enc_lo.lower:.6g}..{enc_lo.upper:.6g} reaches a={af}")
    enc_hi = family.enclosure(Fraction(1))
    if enc_hi.upper < af:
        raise BracketFailure(f"F(1) upper {enc_hi.upper:.6g} below a={af}")
    lo, hi = b, Fraction(1)
    tol = params.tol
    for step in range(1, params.max_bisect + 1):
        mid = (lo + hi) / 2
        enc = family.enclosure(mid)
        if mode == "mid":
            if enc.lower <= af <= enc.upper and enc.upper - af <= tol / 2 and af - enc.lower <= tol / 2:
                return mid, enc, step, family
            below = enc.mid < af
        else:
            gap = af - enc.lower
            if 0 <= gap <= params.witness_tol:
                return mid, enc, step, family
            below = gap > 0
        if below:
            lo = mid
        else:
            hi = mid
    raise BracketFailure(f"bisection did not converge in {params.max_bisect} steps")


# ---------------------------------------------------------------------------
# steps


def _config(params: BuildParams, U: float, c_tilde: float, **extra) -> dict:
    cfg = asdict(params)
    cfg.update({"U": U, "c_tilde": c_tilde, "b0": b0(),
                "tolerance_budget": "epsilon <= tol/4, bisection to tol/2"})
    cfg.update(extra)
    return cfg


def _interval_witness(poly: PolyExpr, params: BuildParams) -> Witness:
    return normcalc.interval_sup(poly, grid=params.interval_grid, rounds=params.rounds,
                                 k=params.refine_k)


def _maybe_expand(poly: PolyExpr, params: BuildParams) -> Optional[SparsePoly]:
    try:
        return expand(poly, params.term_budget)
    except BudgetExceeded:
        return None


def _lacunary(a: Fraction, b: Fraction, k: int, params: BuildParams, mode: str = "mid"):
    """Shared Step 1 / Step 2 machinery at root level ``k``."""
    U = q0_sup_bound(params.q0_samples).upper
    c_tilde = interval_constant(params.c_grid)
    if k == 1:
        ak, bk = a, b
    else:
        ak = Fraction(float(a) ** (1 / k))
        bk = Fraction(float(b) ** (1 / k))
    root_params = params if k == 1 else _replace_tol(params, params.tol / k)
    eps = choose_epsilon(ak, bk, root_params)
    n = choose_n(eps, U, bk, c_tilde)
    log.info("k=%d n=%d eps=%.3g", k, n, eps)
    alpha0, enc, steps, family = solve_alpha(a, bk, n, params, k=k, U=U, mode=mode)
    poly = family.expr(alpha0)
    cert = normcalc.palpha_interval_certificate(alpha0, bk, n, U, c_tilde)
    return dict(poly=poly, n=n, eps=eps, alpha0=alpha0, enc=enc, steps=steps, U=U,
                c_tilde=c_tilde, cert=cert, bk=bk, family=family)


def _replace_tol(params: BuildParams, tol: float) -> BuildParams:
    d = asdict(params)
    d["tol"] = tol
    return BuildParams(**d)


def _report(a, b, step, k, parts: dict, params: BuildParams, poly=None, disc=None,
            interval_bound=None) -> ConstructionReport:
    poly = parts["poly"] if poly is None else poly
    disc = parts["enc"] if disc is None else disc
    wit = _interval_witness(poly, params)
    cert = parts["cert"]
    bound = float(b) if interval_bound is None else interval_bound
    return ConstructionReport(
        a=a, b=b, poly=poly, step=step, k=k, n=parts["n"], epsilon=parts["eps"],
        alpha0=parts["alpha0"], l1=poly.l1, disc=disc, interval=wit,
        interval_bound=bound if cert else disc.upper, interval_certified=cert,
        value_at_one=eval_at_angle(poly, 0), bisect_steps=parts["steps"],
        expanded=_maybe_expand(poly, params),
        config=_config(params, parts["U"], parts["c_tilde"], root_b=float(parts["bk"])),
    )


def step1(a, b, params: BuildParams = BuildParams()) -> ConstructionReport:
    t = TargetTriple.of(a, b)
    if not b0() < t.b < t.a:
        raise InfeasibleTarget("step 1 needs b0 < b < a")
    parts = _lacunary(t.a, t.b, 1, params)
    return _report(t.a, t.b, 1, 1, parts, params)


def step2(a, b, params: BuildParams = BuildParams()) -> ConstructionReport:
    t = TargetTriple.of(a, b)
    if not t.b < t.a:
        raise InfeasibleTarget("step 2 needs b < a")
    k = choose_k(t.b, params.k_margin)
    parts = _lacunary(t.a, t.b, k, params)
    return _report(t.a, t.b, 2, k, parts, params)


def step3(a, b, params: BuildParams = BuildParams()) -> ConstructionReport:
    t = TargetTriple.of(a, b)
    if t.a != t.b:
        raise InfeasibleTarget("step 3 needs a = b")
    if t.a == 1:
        z = leaf(SparsePoly.monomial(1))
        wit = Witness(1.0, t=Fraction(0))
        disc = NormEnclosure(1.0, 1.0, "triangle", 1, wit)
        return ConstructionReport(
            a=t.a, b=t.b, poly=z, step=3, k=1, n=None, epsilon=None, alpha0=None,
            l1=z.l1, disc=disc, interval=Witness(1.0, x=1.0), interval_bound=1.0,
            interval_certified=True, value_at_one=complex(1), expanded=z.poly,
            config=_config(params, q0_sup_bound(params.q0_samples).upper,
                           interval_constant(params.c_grid)))
    b_tilde = t.a / 2
    k = 1 if b_tilde > b0() + params.k_margin else choose_k(b_tilde, params.k_margin)
    parts = _lacunary(t.a, b_tilde, k, params, mode="witness")
    enc: NormEnclosure = parts["enc"]
    p_max = rotate(parts["poly"], enc.witness.t)
    disc = NormEnclosure(enc.lower, enc.upper, enc.method, enc.samples,
                         Witness(enc.lower, t=Fraction(0)))
    report = _report(t.a, t.b, 3, k, parts, params, poly=p_max, disc=disc)
    # on [-1, 1] the rotated polynomial is bounded by its disc norm
    report.interval_bound = disc.upper
    report.interval_certified = True
    report.config["z_max_turn"] = str(enc.witness.t)
    report.config["b_tilde"] = float(b_tilde)
    return report


def construct(a, b, params: BuildParams = BuildParams()) -> ConstructionReport:
    """Dispatch to the right step, then verify the result independently."""
    t = TargetTriple.of(a, b)
    if t.a == t.b:
        report = step3(t.a, t.b, params)
    elif t.b > b0() + params.k_margin:
        report = step1(t.a, t.b, params)
    else:
        report = step2(t.a, t.b, params)
    problems = verify_report(report, params.tol)
    if problems:
        raise CertificationFailure("; ".join(problems))
    return report


def verify_report(report: ConstructionReport, tol: float) -> list[str]:
    """Post-conditions of a construction; returns the list of violations."""
    a, b = float(report.a), float(report.b)
    problems = []
    if not (report.l1.exact and report.l1.value == 1):
        problems.append(f"l1 not certified 1: {report.l1}")
    d = report.disc
    if not d.lower <= a <= d.upper:
        problems.append(f"disc enclosure [{d.lower}, {d.upper}] misses a={a}")
    if d.width > 2 * tol:
        problems.append(f"disc enclosure width {d.width} > 2 tol")
    if report.interval.value > b + tol:
        problems.append(f"interval sample {report.interval.value} > b + tol")
    if not (report.interval_certified or report.interval.value <= b + tol):
        problems.append("interval sup not certified")
    if abs(abs(report.value_at_one) - b) > 1e-9:
        problems.append(f"|p(1)| = {abs(report.value_at_one)} differs from b={b}")
    return problems
