"""Berry-Esseen rate ingredients for the normalised triangle count.

The Kolmogorov bound holds only up to an unspecified universal constant, so
everything here is a *rate* evaluated with that constant set to 1. Nothing in
this module certifies a distance.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional


from .errors import DomainError, ResourceCapError
from .model import BlockDesign, diagnose_conditions
from .moments import VertexClasses, wedge_moment_matrices
from .vecnorm import VectorLike, as_vector, norm_pow

# max number of distinct propensity values for the B-tilde sums (K x K matrices)
BTILDE_MAX_CLASSES = 4000


def a_terms(mu: VectorLike) -> tuple[float, float, float, float, float]:
    """The five norm products A_1..A_5 of the bound numerator."""
    mu = as_vector(mu)
    s = {q: norm_pow(mu, q) for q in (1.5, 1.75, 2, 2.5, 3.5, 4, 5)}
    a1 = math.sqrt(s[1.5] * s[2.5])
    a2 = math.sqrt(s[1.5]) * s[2] ** 0.25 * math.sqrt(s[3.5]) * math.sqrt(s[4])
    a3 = s[2] ** 1.25 * s[5]
    a4 = s[2] ** 0.75 * s[2.5] * math.sqrt(s[5])
    a5 = s[1.75] * math.sqrt(s[3.5])
    return a1, a2, a3, a4, a5


def rate_denominator(mu: VectorLike) -> float:
    """||mu||_2^{5/2} (||mu||_3^6 + ||mu||_2^2)."""
    l2sq = norm_pow(mu, 2)
    return l2sq**1.25 * (norm_pow(mu, 3) ** 2 + l2sq)


def kolmogorov_rate(mu: VectorLike) -> float:
    """(A_1 + ... + A_5) / denominator: the Kolmogorov bound with C = 1.

    A rate up to an unknown constant, not a certified distance.
    """
    return math.fsum(a_terms(mu)) / rate_denominator(mu)


def eta(alpha: float) -> float:
    """Rate exponent for blockwise scaling mu_i = theta_r n^{-alpha/2}."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")
    if alpha <= 0.5:
        return 1.0 - alpha
    if alpha <= 2.0 / 3.0:
        return 0.75 - alpha / 2.0
    return (5.0 - 5.0 * alpha) / 4.0


def btilde_terms(mu, max_classes: int = BTILDE_MAX_CLASSES) -> dict:
    """Closed-form sums B~_5, B~_3 and B~_2 (with its pieces).

    Keys:
      b5      sum over ordered pairs of edges sharing a vertex of h_a h_b E[Delta_ab]
      b3      sum_a h_a E[V_a^4]
      b21     identical-edge part of B~_2
      b22     four-vertex part of B~_2 (path and star configurations)
      b22_path, b22_star   the two four-vertex configurations separately
      b2_tri  three-vertex (triangle) configuration of B~_2
      b2      b21 + b22 + b2_tri, the full sum
    """
    vc = mu if isinstance(mu, VertexClasses) else VertexClasses(mu)
    if vc.K > max_classes:
        raise ResourceCapError(
            f"{vc.K} distinct propensity values exceed the cap of {max_classes}"
        )
    p, h = vc.p, vc.h
    # X_ij = sum_{k != i,j} h_ik p_kj
    x = vc.third_vertex_sum(h, p)
    q = h * p
    # Z_ij = sum_{k != i,j} h_ik p_ik h_jk p_jk
    z = vc.third_vertex_sum(q, q)
    star_diag = vc.third_vertex_sum(h * h, p * p)

    b5 = vc.pair_sum(h * x)
    b21 = vc.pair_sum(h * h * x)
    b22_path = vc.pair_sum(h * (x * x.T - z))
    b22_star = vc.pair_sum(h * (x * x - star_diag))
    b2_tri = vc.pair_sum(h * z)
    m4 = wedge_moment_matrices(vc)[3]
    b3 = vc.pair_sum(h * m4) / 2.0
    b22 = b22_path + b22_star
    return {
        "b2": math.fsum([b21, b22, b2_tri]),
        "b21": b21,
        "b22": b22,
        "b22_path": b22_path,
        "b22_star": b22_star,
        "b2_tri": b2_tri,
        "b3": b3,
        "b5": b5,
    }


@dataclass
class BoundReport:
    a_terms: tuple
    rate_with_unit_constant: float
    denominator: float
    conditions: dict
    btilde: Optional[dict] = None
    eta: Optional[float] = None
    alpha: Optional[float] = None
    n: int = 0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "a_terms": list(self.a_terms),
            "rate_with_unit_constant": self.rate_with_unit_constant,
            "denominator": self.denominator,
            "conditions": self.conditions,
            "btilde": self.btilde,
            "alpha": self.alpha,
            "eta": self.eta,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def bound_report(mu: VectorLike, design: Optional[BlockDesign] = None,
                 with_btilde: bool = True, max_classes: int = BTILDE_MAX_CLASSES) -> BoundReport:
    mu = as_vector(mu)
    report = BoundReport(
        a_terms=a_terms(mu),
        rate_with_unit_constant=kolmogorov_rate(mu),
        denominator=rate_denominator(mu),
        conditions=diagnose_conditions(mu).to_dict(),
        n=mu.n,
        notes=["rate uses C = 1; it is not a certified Kolmogorov distance"],
    )
    if design is not None:
        report.alpha = design.alpha
        report.eta = eta(design.alpha)
    if with_btilde:
        vc = VertexClasses(mu)
        if vc.K <= max_classes:
            report.btilde = btilde_terms(vc, max_classes)
            if mu.n <= 5:
                # the two dependent-wedge sums only exist by enumeration
                from .malliavin import exhaustive_btilde

                ex = exhaustive_btilde(mu)
                report.btilde["b1"] = ex["b1"]
                report.btilde["b4"] = ex["b4"]
        else:
            report.notes.append(
                f"B-tilde sums skipped: {vc.K} distinct values exceed cap {max_classes}"
            )
    return report
