"""Score functions, separation statistics, recovery thresholds and Gaussian tail bounds.

Scores are the log-likelihood surrogates the estimators optimize:

====  ==========================  ===================  ==========
kind  observation / space          formula              direction
====  ==========================  ===================  ==========
f     vector-T, fixed counts       <G(x), T>            maximize
d     vector-T, free               |G(x)|^2 - 2<G(x),T> minimize
g     partition-R, free            sum n_j^2 + 2<K,R>   maximize
h     partition-R, fixed counts    <K(x), R>            maximize
r     gue-U / V, roots of unity    Re <U, P(x)>         maximize
====  ==========================  ===================  ==========

Each separation statistic is minus the mean of the oriented score gap between a
wrong assignment and the truth; the gap is Gaussian with variance
``variance_coeff * sigma**2 * mean_gap``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtr

from . import matrices as mx
from .model import (
    FIXED,
    MIN_FRACTION,
    OMEGA,
    THETA,
    Assignment,
    ModelError,
    Palette,
    SampleSpace,
    contingency,
    contingency_array,
)

MAXIMIZE = "maximize"
MINIMIZE = "minimize"

ORIENTATION = {"f": MAXIMIZE, "d": MINIMIZE, "g": MAXIMIZE, "h": MAXIMIZE, "r": MAXIMIZE}
VARIANCE_COEFF = {"M": 2, "Q": 4, "L": 4, "U": 2, "J": 2}
SCORE_FOR = {"M": "f", "Q": "d", "L": "g", "U": "h", "J": "r"}


def inner(A: np.ndarray, B: np.ndarray):
    """<A, B> = sum A_ij * conj(B_ij)."""
    return np.vdot(B, A)


def score_kind(model: str, space_kind: str) -> str:
    if model == mx.VECTOR_T:
        return "f" if space_kind == FIXED else "d" if space_kind in (OMEGA, MIN_FRACTION) else None
    if model == mx.PARTITION_R:
        return "h" if space_kind == FIXED else "g" if space_kind in (OMEGA, MIN_FRACTION) else None
    if model in (mx.GUE_U, mx.GOE_V):
        return "r" if space_kind in (THETA, OMEGA) else None
    return None


def _require_kind(model: str, space: SampleSpace) -> str:
    kind = score_kind(model, space.kind)
    if kind is None:
        raise ModelError(f"no score pairs a {model} observation with a {space.kind} space")
    return kind


def score(x: Assignment, obs: mx.Observation, space: SampleSpace) -> tuple[float, str]:
    """Definitional score of ``x`` and the direction the estimator optimizes it."""
    kind = _require_kind(obs.model, space)
    if x.n != obs.n:
        raise ModelError("assignment and observation sizes differ")
    M = obs.matrix
    if kind in ("f", "d"):
        G = mx.build_G(x)
        f = float(inner(G, M).real)
        value = f if kind == "f" else float(inner(G, G).real) - 2 * f
    elif kind in ("g", "h"):
        h = float(inner(mx.build_K(x), M).real)
        value = h if kind == "h" else float(sum(s * s for s in x.group_sizes)) + 2 * h
    else:
        value = float(inner(M, mx.build_P(x)).real)
    return value, ORIENTATION[kind]


def score_batch(states: np.ndarray, obs: mx.Observation, kind: str, palette: Palette) -> np.ndarray:
    """Scores of every row of an (S, n) index array, using the linear/quadratic structure of each score."""
    M = obs.matrix
    states = np.asarray(states)
    n = states.shape[1]
    if kind in ("f", "d"):
        v = palette.numeric()[states]
        f = v @ (M.sum(axis=1) - M.sum(axis=0))
        if kind == "f":
            return f
        norm = 2 * n * (v * v).sum(axis=1) - 2 * v.sum(axis=1) ** 2
        return norm - 2 * f
    if kind in ("g", "h"):
        k = palette.k
        onehot = (states[:, :, None] == np.arange(k)).astype(float)
        same = np.einsum("sic,sic->s", onehot, np.einsum("ij,sjc->sic", M, onehot))
        h = M.sum() - same
        if kind == "h":
            return h
        sizes = onehot.sum(axis=1)
        return (sizes**2).sum(axis=1) + 2 * h
    if kind == "r":
        z = palette.numeric()[states]
        return np.einsum("si,si->s", z.conj(), z @ M.T).real
    raise ModelError(f"unknown score kind {kind!r}")


@dataclass(frozen=True)
class Separation:
    mean_gap: float
    variance_coeff: int
    kind: str


def _wsum(t: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_ij t[..., i, j] * weights[i, j] as one matrix-vector product."""
    return t.reshape(t.shape[:-2] + (-1,)) @ np.asarray(weights).ravel()


def _marginal_sums(t: np.ndarray, colors: np.ndarray):
    """(n, sum_i n_i(x) c_i, sum_j n_j(y) c_j) for each table."""
    ones = np.ones(len(colors), dtype=t.dtype)
    return (
        _wsum(t, np.outer(ones, ones)),
        _wsum(t, np.outer(colors, ones)),
        _wsum(t, np.outer(ones, colors)),
    )


def m_stat(t: np.ndarray, colors: np.ndarray) -> np.ndarray:
    t = np.asarray(t)
    n, _, _ = _marginal_sums(t, colors)
    sq = colors * colors
    row_sq = _wsum(t, np.outer(sq, np.ones(len(colors), dtype=t.dtype)))
    return 2 * n * row_sq - 2 * n * _wsum(t, np.outer(colors, colors))


def q_stat(t: np.ndarray, colors: np.ndarray) -> np.ndarray:
    t = np.asarray(t)
    n, mx_, my_ = _marginal_sums(t, colors)
    diff2 = (colors[:, None] - colors[None, :]) ** 2
    return 2 * n * _wsum(t, diff2) - 2 * (mx_ - my_) ** 2


def l_stat(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t)
    ones = np.ones(t.shape[-1], dtype=t.dtype)
    rows, cols = t @ ones, np.swapaxes(t, -1, -2) @ ones
    return rows**2 @ ones + cols**2 @ ones - 2 * _wsum(t * t, np.outer(ones, ones))


def u_stat(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t)
    ones = np.ones(t.shape[-1], dtype=t.dtype)
    cols = np.swapaxes(t, -1, -2) @ ones
    return cols**2 @ ones - _wsum(t * t, np.outer(ones, ones))


def pg_inner(t: np.ndarray, colors: np.ndarray) -> np.ndarray:
    """<G(x), G(y)> from the contingency table of (x, y)."""
    t = np.asarray(t)
    n, mx_, my_ = _marginal_sums(t, colors)
    return 2 * n * _wsum(t, np.outer(colors, colors)) - 2 * mx_ * my_


def j_residue_counts(t: np.ndarray) -> np.ndarray:
    """c[r] = sum of t[i,j] t[p,q] over (p + j - q - i) = r mod k."""
    t = np.asarray(t)
    k = t.shape[-1]
    i, j = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
    shift = (j - i) % k
    # mass on each diagonal offset j - i, then its circular autocorrelation
    s = np.stack([(t * (shift == e)).sum(axis=(-2, -1)) for e in range(k)], axis=-1)
    return np.stack([(s * np.roll(s, r, axis=-1)).sum(axis=-1) for r in range(k)], axis=-1)


def _one_minus_cos(k: int) -> np.ndarray:
    w = 1 - np.cos(2 * np.pi * np.arange(k) / k)
    w[0] = 0.0
    return w


def j_stat(t: np.ndarray) -> np.ndarray:
    """Quadruple-sum form over the contingency table (O(k^4) per table)."""
    t = np.asarray(t, dtype=float)
    k = t.shape[-1]
    r = np.arange(k)
    phase = (r[None, None, :, None] + r[None, :, None, None] - r[None, None, None, :] - r[:, None, None, None]) % k
    w = _one_minus_cos(k)[phase]
    return np.einsum("...ij,...pq,ijpq->...", t, t, w)


def j_pairwise(x: Assignment, y: Assignment) -> float:
    """O(n^2) pairwise form: 2 * sum_{i<j} [1 - Re(conj(x_i) x_j y_i conj(y_j))]."""
    a, b = x.array, y.array
    k = x.k
    res = (-a[:, None] + a[None, :] + b[:, None] - b[None, :]) % k
    return float(_one_minus_cos(k)[res].sum())


def separation(x: Assignment, y: Assignment, kind: str) -> Separation:
    tab = contingency(x, y)
    t = tab.t
    if kind in ("M", "Q") and x.palette.is_roots:
        raise ModelError(f"{kind} needs a real-valued palette")
    if kind in ("M", "U") and tab.row_marginals != tab.col_marginals:
        raise ModelError(f"{kind} needs x and y in the same fixed-counts space")
    colors = x.palette.numeric()
    if kind == "M":
        gap = m_stat(t, colors)
    elif kind == "Q":
        gap = q_stat(t, colors)
    elif kind == "L":
        gap = l_stat(t)
    elif kind == "U":
        gap = u_stat(t)
    elif kind == "J":
        if not x.palette.is_roots:
            raise ModelError("J needs the roots-of-unity palette")
        k, n = x.k, x.n
        gap = j_stat(t) if k**4 < n * n else j_pairwise(x, y)
    else:
        raise ModelError(f"unknown separation kind {kind!r}")
    return Separation(float(gap), VARIANCE_COEFF[kind], kind)


def variance_gap(x: Assignment, y: Assignment, kind: str, sigma: float) -> float:
    sep = separation(x, y, kind)
    return sep.variance_coeff * sigma**2 * sep.mean_gap


@dataclass(frozen=True)
class ThresholdReport:
    problem: str
    sigma_sq_critical: float
    formula_id: str
    n: int
    k: int
    params: dict = field(default_factory=dict)

    def band(self, delta: float) -> tuple[float, float]:
        """(sub, super) critical sigma^2 for a margin delta."""
        return (1 - delta) * self.sigma_sq_critical, (1 + delta) * self.sigma_sq_critical


PROBLEMS = {
    "thm1": "vector-T MLE, fixed counts or free space",
    "thm2": "partition-R MLE, modulo color permutation",
    "thm3": "gue-U MLE on balanced roots of unity, modulo global phase",
    "thm5-bound": "complex SDP under conjugated GOE noise",
}


def threshold(
    formula_id: str,
    n: int,
    k: int | None = None,
    colors: Sequence[float] | None = None,
    group_sizes: Sequence[int] | None = None,
) -> ThresholdReport:
    """sigma^2 boundary (delta = 0) for the given recovery threshold; log is natural."""
    if n < 2:
        raise ModelError("thresholds need n >= 2")
    if k is None:
        k = len(colors) if colors is not None else len(group_sizes) if group_sizes is not None else None
    if k is None or k < 2:
        raise ModelError("thresholds need k >= 2")
    log_n = math.log(n)
    params: dict = {}
    if formula_id == "thm1":
        if colors is None:
            raise ModelError("thm1 needs the color values")
        c = sorted(float(v) for v in colors)
        c0 = min((a - b) ** 2 for a, b in zip(c[1:], c[:-1]))
        params = {"colors": [float(v) for v in colors], "C0": c0}
        value = n * c0 / (4 * log_n)
    elif formula_id == "thm2":
        sizes = sorted(group_sizes) if group_sizes is not None else _balanced(n, k)
        if len(sizes) != k or sum(sizes) != n:
            raise ModelError("group sizes must split n into k groups")
        params = {"group_sizes": sorted(sizes, reverse=True)}
        value = (sizes[0] + sizes[1]) / (4 * log_n)
    elif formula_id == "thm3":
        value = n * (1 - math.cos(2 * math.pi / k)) / (2 * log_n)
    elif formula_id == "thm5-bound":
        value = n / (2 * log_n)
    else:
        raise ModelError(f"unknown threshold formula {formula_id!r}")
    return ThresholdReport(PROBLEMS[formula_id], value, formula_id, n, k, params)


def _balanced(n: int, k: int) -> list:
    q, r = divmod(n, k)
    return sorted([q + 1] * r + [q] * (k - r))


def write_threshold_csv(reports: Sequence[ThresholdReport], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["formula_id", "n", "k", "param_json", "sigma_sq_critical"])
    for rep in reports:
        w.writerow([rep.formula_id, rep.n, rep.k, json.dumps(rep.params, sort_keys=True), repr(rep.sigma_sq_critical)])


@dataclass(frozen=True)
class GaussianMaxBounds:
    upper_prob: float
    lower_prob: float
    level_hi: float
    level_lo: float
    indep_condition_holds: bool


def gaussian_max_bounds(N: int, eps: float) -> GaussianMaxBounds:
    """Bounds on the max of N unit-variance Gaussians around sqrt(2 log N).

    P(max > level_hi) <= upper_prob for any dependence; P(max < level_lo) <= lower_prob
    when the variables are independent and ``indep_condition_holds``.
    """
    if N < 2 or not 0 < eps < 1:
        raise ModelError("need N >= 2 and 0 < eps < 1")
    root = math.sqrt(2 * math.log(N))
    cond = N ** (eps - eps**2) * (1 - eps) * root / (math.sqrt(2 * math.pi) * (1 + 2 * (1 - eps) ** 2 * math.log(N)))
    return GaussianMaxBounds(
        upper_prob=N**-eps,
        lower_prob=math.exp(-(N**eps)),
        level_hi=(1 + eps) * root,
        level_lo=(1 - eps) * root,
        indep_condition_holds=cond > 1,
    )


def gaussian_tail_bounds(x: float) -> tuple[float, float]:
    """Mills-ratio sandwich for P(G > x), x > 0."""
    if x <= 0:
        raise ModelError("tail bounds need x > 0")
    dens = math.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    return x * dens / (1 + x * x), dens / x


def gaussian_tail(x: float) -> float:
    return float(ndtr(-x))
