"""Accuracy metrics and loss-differential tests."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Metrics:
    r2: float
    rmse: float
    mae: float


def r2_score(y_true, y_pred, baseline_mean=None):
    """1 - SSE / sum((y - baseline)^2); NaN when the denominator is zero.

    baseline_mean defaults to the mean of y_true. Passing the true
    conditional mean as y_true gives the oracle R^2.
    """
    y = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    b = y.mean() if baseline_mean is None else float(baseline_mean)
    den = float(np.sum((y - b) ** 2))
    if den == 0.0:
        return float("nan")
    return 1.0 - float(np.sum((y - p) ** 2)) / den


def compute_metrics(y_true, y_pred, baseline_mean=None):
    y = np.asarray(y_true, dtype=float)
    p = np.asarray(y_pred, dtype=float)
    if y.shape != p.shape or y.size < 2:
        raise ValueError("need two equal-length vectors with at least 2 entries")
    e = y - p
    return Metrics(r2_score(y, p, baseline_mean), float(np.sqrt(np.mean(e * e))),
                   float(np.mean(np.abs(e))))


def oracle_r2(m_true, y_pred):
    return r2_score(m_true, y_pred)


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    kind: str
    mean_diff: float


def default_hac_lags(T):
    return int(math.floor(T ** (1.0 / 3.0)))


def bartlett_lrv(d, lags):
    """Newey-West long-run variance of d with Bartlett weights."""
    d = np.asarray(d, dtype=float)
    T = d.size
    u = d - d.mean()
    v = float(np.dot(u, u)) / T
    for j in range(1, lags + 1):
        v += 2.0 * (1.0 - j / (lags + 1.0)) * float(np.dot(u[j:], u[:-j])) / T
    return v


def loss_differential_test(e1, e2, kind="paired_t", hac_lags=None):
    """Compare squared-error losses d_t = e1_t^2 - e2_t^2.

    paired_t: mean(d) / (sd(d) / sqrt(T)), two-sided, t with T-1 df.
    diebold_mariano: mean(d) / sqrt(LRV / T), Bartlett kernel with
    hac_lags (default floor(T^(1/3))), two-sided normal p-value, no
    small-sample correction. A positive statistic means model 2 is more
    accurate.
    """
    e1 = np.asarray(e1, dtype=float)
    e2 = np.asarray(e2, dtype=float)
    if e1.shape != e2.shape or e1.ndim != 1:
        raise ValueError("error vectors must be 1-d and of equal length")
    T = e1.size
    if T < 5:
        raise ValueError("need at least 5 paired errors")
    d = e1 * e1 - e2 * e2
    dbar = float(d.mean())
    if np.all(d == 0.0):
        return TestResult(0.0, 1.0, kind, 0.0)
    if kind == "paired_t":
        sd = float(d.std(ddof=1))
        if sd == 0.0:
            return TestResult(math.copysign(math.inf, dbar), 0.0, kind, dbar)
        t = dbar / (sd / math.sqrt(T))
        p = 2.0 * float(stats.t.sf(abs(t), T - 1))
    elif kind == "diebold_mariano":
        lags = default_hac_lags(T) if hac_lags is None else int(hac_lags)
        if lags < 0:
            raise ValueError("hac_lags must be >= 0")
        v = bartlett_lrv(d, lags)
        if v <= 0.0:
            return TestResult(math.copysign(math.inf, dbar), 0.0, kind, dbar)
        t = dbar / math.sqrt(v / T)
        p = 2.0 * float(stats.norm.sf(abs(t)))
    else:
        raise ValueError(f"unknown test kind {kind!r}")
    return TestResult(float(t), min(1.0, max(0.0, p)), kind, dbar)


def stars(p):
    if p is None or not np.isfinite(p):
        return ""
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""
