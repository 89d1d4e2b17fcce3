"""Pearson correlation, Welch's t-test and group summaries.

Student-t tail probabilities come from the regularized incomplete beta
function, evaluated with a modified-Lentz continued fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    BothConstantEqual,
    ConstantInput,
    LengthMismatch,
    TooFewPoints,
    ZeroVariance,
)

CF_TOL = 1e-12
CF_MAX_ITER = 10_000
_TINY = 1e-300

SEVERITY_CUT = 10


def _beta_cf(a: float, b: float, x: float) -> float:
    """Continued fraction for I_x(a, b), modified Lentz method."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOL:
            return h
    raise ArithmeticError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b) for a, b > 0."""
    if not (a > 0 and b > 0):
        raise ValueError("betainc requires a > 0 and b > 0")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"betainc requires 0 <= x <= 1, got {x}")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # the fraction converges fast only on this side of the mean
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def student_t_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isinf(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def student_t_cdf(t: float, df: float) -> float:
    if t == 0:
        return 0.5
    tail = 0.5 * student_t_two_sided(t, df)
    return 1.0 - tail if t > 0 else tail


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p_two_sided: float
    n: int


@dataclass(frozen=True)
class TTestResult:
    t: float
    p_two_sided: float
    df: float
    mean_a: float
    mean_b: float
    std_a: float
    std_b: float


def _mean(xs: Sequence[float]) -> float:
    return math.fsum(xs) / len(xs)


def pearson(x: Sequence[float], y: Sequence[float]) -> CorrelationResult:
    """Pearson's r with a two-sided p-value from the t distribution (n-2 df).

    Raises:
        LengthMismatch: ``x`` and ``y`` differ in length.
        TooFewPoints: fewer than 3 pairs.
        ConstantInput: either variable has zero variance.
    """
    if len(x) != len(y):
        raise LengthMismatch(f"{len(x)} x values vs {len(y)} y values")
    n = len(x)
    if n < 3:
        raise TooFewPoints(f"correlation needs at least 3 points, got {n}")
    mx, my = _mean(x), _mean(y)
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(v * v for v in dx)
    syy = math.fsum(v * v for v in dy)
    if sxx == 0 or syy == 0:
        raise ConstantInput("correlation is undefined for a constant input")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    if abs(r) == 1.0:
        return CorrelationResult(r, 0.0, n)
    df = n - 2
    # df / (df + t^2) simplifies to 1 - r^2
    p = betainc(df / 2.0, 0.5, (1.0 - r) * (1.0 + r))
    return CorrelationResult(r, p, n)


def _sample_var(xs: Sequence[float], m: float) -> float:
    return math.fsum((v - m) ** 2 for v in xs) / (len(xs) - 1)


def t_test_welch(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Two-sample t-test without assuming equal variances.

    Raises:
        TooFewPoints: a group has fewer than 2 values.
        BothConstantEqual: both groups are constant with the same value.
        ZeroVariance: both groups are constant with different values.
    """
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise TooFewPoints(f"each group needs at least 2 values, got {na} and {nb}")
    ma, mb = _mean(a), _mean(b)
    va, vb = _sample_var(a, ma), _sample_var(b, mb)
    if va == 0 and vb == 0:
        if ma == mb:
            raise BothConstantEqual("both groups are constant and equal")
        raise ZeroVariance("both groups are constant; t is infinite")
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    t = (ma - mb) / math.sqrt(se2)
    df = se2 * se2 / (sa * sa / (na - 1) + sb * sb / (nb - 1))
    p = betainc(df / 2.0, 0.5, df / (df + t * t))
    return TTestResult(t, p, df, ma, mb, math.sqrt(va), math.sqrt(vb))


def group_summary(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample (n-1) standard deviation."""
    if len(values) < 2:
        raise TooFewPoints(f"need at least 2 values, got {len(values)}")
    m = _mean(values)
    return m, math.sqrt(_sample_var(values, m))


def split_correlation(
    profiles: Sequence, cut: int = SEVERITY_CUT
) -> tuple[CorrelationResult | None, CorrelationResult | None]:
    """Correlate severity with dyadic ratio below and at/above ``cut``.

    A side whose data cannot support a correlation (too few participants,
    constant values) is returned as ``None``.
    """
    scored = [p for p in profiles if p.severity_score is not None]
    below = [p for p in scored if p.severity_score < cut]
    above = [p for p in scored if p.severity_score >= cut]
    return _maybe_pearson(below), _maybe_pearson(above)


def _maybe_pearson(profiles: Sequence) -> CorrelationResult | None:
    try:
        return pearson(
            [float(p.severity_score) for p in profiles], [p.dyadic_ratio for p in profiles]
        )
    except (TooFewPoints, ConstantInput):
        return None
