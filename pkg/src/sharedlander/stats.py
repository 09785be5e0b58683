"""Self-contained hypothesis tests for the evaluation reports.

One-way ANOVA, two-sample pooled-variance t-tests and Holm step-down
multiplicity control.  P-values come from an in-house regularized incomplete
beta function (Lentz-style continued fraction) so the package carries no
statistics dependency; the F and t tail probabilities both reduce to it:

    P(F_{d1,d2} > f) = I_{d2/(d2 + d1 f)}(d2/2, d1/2)
    P(|T_df| > |t|)  = I_{df/(df + t^2)}(df/2, 1/2)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .errors import DegenerateDataError, InsufficientDataError

__all__ = [
    "regularized_incomplete_beta",
    "GroupData",
    "AnovaResult",
    "TTestResult",
    "anova_oneway",
    "t_test_two_sample",
    "holm_bonferroni",
]

_CF_MAX_ITER = 500
_CF_EPS = 1e-16
_CF_TINY = 1e-300


def _beta_cf(a: float, b: float, x: float) -> float:
    # Continued fraction for I_x(a, b), evaluated with the modified Lentz
    # scheme; converges fast for x < (a + 1) / (a + b + 2).
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


@dataclass(frozen=True)
class GroupData:
    """One labelled sample: the observations collected under a single condition."""

    label: str
    values: tuple

    def __init__(self, label: str, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise InsufficientDataError(f"group {label!r} is empty")
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateDataError(f"group {label!r} contains non-finite values")
        object.__setattr__(self, "label", str(label))
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


Group = Union[GroupData, Sequence[float]]


def _check_groups(groups: Sequence[Group], min_groups: int) -> list[list[float]]:
    if len(groups) < min_groups:
        raise InsufficientDataError(f"need at least {min_groups} groups, got {len(groups)}")
    cleaned = []
    for i, g in enumerate(groups):
        if isinstance(g, GroupData):
            name, vals = g.label, list(g.values)
        else:
            name, vals = str(i), [float(v) for v in g]
        if len(vals) < 2:
            raise InsufficientDataError(f"group {name} has {len(vals)} values; need at least 2")
        if not all(math.isfinite(v) for v in vals):
            raise DegenerateDataError(f"group {name} contains non-finite values")
        cleaned.append(vals)
    return cleaned


@dataclass(frozen=True)
class AnovaResult:
    f_stat: float
    df_between: int
    df_within: int
    p_value: float

    def to_dict(self) -> dict:
        return {
            "f_stat": self.f_stat,
            "df_between": self.df_between,
            "df_within": self.df_within,
            "p_value": self.p_value,
        }


@dataclass(frozen=True)
class TTestResult:
    t_stat: float
    df: int
    p_value: float  # two-sided

    def to_dict(self) -> dict:
        return {"t_stat": self.t_stat, "df": self.df, "p_value": self.p_value}


def anova_oneway(groups: Sequence[Group]) -> AnovaResult:
    """Fixed-effects one-way ANOVA across two or more groups.

    Groups may be bare sequences or GroupData; labels only matter for error
    messages, the test itself is label-blind.
    """
    data = _check_groups(groups, min_groups=2)
    n_total = sum(len(g) for g in data)
    grand = sum(sum(g) for g in data) / n_total
    ss_between = sum(len(g) * (sum(g) / len(g) - grand) ** 2 for g in data)
    ss_within = sum(sum((v - sum(g) / len(g)) ** 2 for v in g) for g in data)
    df_between = len(data) - 1
    df_within = n_total - len(data)
    if ss_within == 0.0:
        raise DegenerateDataError("zero within-group variance; F statistic undefined")
    f = (ss_between / df_between) / (ss_within / df_within)
    p = regularized_incomplete_beta(
        df_within / 2.0, df_between / 2.0, df_within / (df_within + df_between * f)
    )
    return AnovaResult(f_stat=f, df_between=df_between, df_within=df_within, p_value=p)


def t_test_two_sample(a: Group, b: Group) -> TTestResult:
    """Two-sided two-sample t-test with pooled variance."""
    ga, gb = _check_groups([a, b], min_groups=2)
    na, nb = len(ga), len(gb)
    ma = sum(ga) / na
    mb = sum(gb) / nb
    var_a = sum((v - ma) ** 2 for v in ga) / (na - 1)
    var_b = sum((v - mb) ** 2 for v in gb) / (nb - 1)
    df = na + nb - 2
    pooled = ((na - 1) * var_a + (nb - 1) * var_b) / df
    if pooled == 0.0:
        raise DegenerateDataError("zero pooled variance; t statistic undefined")
    t = (ma - mb) / math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    p = regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(t_stat=t, df=df, p_value=p)


def holm_bonferroni(p_values: Sequence[float], alpha: float = 0.05) -> list[bool]:
    """Step-down rejection decisions, returned in the original order.

    Sorted ascending, p_(i) is rejected while p_(i) <= alpha / (m - i + 1);
    the first failure stops the procedure.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    for p in p_values:
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValueError(f"invalid p-value {p}")
    m = len(p_values)
    order = sorted(range(m), key=lambda i: p_values[i])
    decisions = [False] * m
    for rank, idx in enumerate(order):
        if p_values[idx] <= alpha / (m - rank):
            decisions[idx] = True
        else:
            break
    return decisions
