"""Certified polynomials and Riesz-product measures with prescribed norm, spectral radius and transform sup."""

from .forge import BuildParams, ConstructionReport, construct
from .normcalc import NormEnclosure, Witness, circle_sup_adaptive, circle_sup_certified
from .polyexpr import L1Norm, PolyExpr, SparsePoly, expand, gap_mul, lincomb_disjoint, rotate
from .rieszmodel import RieszMeasure, formula_check, spectral_radius, trichotomy_check, triple

__all__ = [
    "BuildParams", "ConstructionReport", "construct",
    "NormEnclosure", "Witness", "circle_sup_adaptive", "circle_sup_certified",
    "L1Norm", "PolyExpr", "SparsePoly", "expand", "gap_mul", "lincomb_disjoint", "rotate",
    "RieszMeasure", "formula_check", "spectral_radius", "trichotomy_check", "triple",
]
__version__ = "0.1.0"
