"""Exhaustive small-instance checks of the contingency-table closed forms.

Each check compares a closed form evaluated on contingency tables with the same
quantity computed from the raw model matrices, for every pair of assignments in
an exhaustive space.  Integer palettes keep every intermediate an exact integer
(well below 2**53), so equality is tested exactly.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import SampleSpace, contingency_array, enumerate_array
from .statistics import j_residue_counts, j_stat, l_stat, m_stat, pg_inner, q_stat, u_stat

INTEGER_PALETTES = {2: (-1, 2), 3: (-2, 1, 5), 4: (-3, 0, 1, 4)}
RATIONAL_PALETTES = {
    2: (Fraction(-1, 2), Fraction(2, 3)),
    3: (Fraction(-1, 2), Fraction(1, 3), Fraction(2)),
}
BLOCK = 512


@dataclass(frozen=True)
class OracleResult:
    name: str
    n: int
    k: int
    pairs: int
    passed: bool
    max_abs_error: float


def _g_flat(states: np.ndarray, colors) -> np.ndarray:
    v = np.asarray(colors, dtype=float)[states]
    return (v[:, :, None] - v[:, None, :]).reshape(len(states), -1)


def _k_flat(states: np.ndarray) -> np.ndarray:
    return (states[:, :, None] != states[:, None, :]).reshape(len(states), -1).astype(float)


def _onehot(states: np.ndarray, k: int) -> np.ndarray:
    return (states[:, :, None] == np.arange(k)).astype(np.int64)


def _pairs(states: np.ndarray, k: int):
    """Yield (x-block slice, y-block slice, tables) with tables[a, b] = t(x_a, y_b)."""
    oh = _onehot(states, k).astype(float)
    S, n = states.shape
    left = oh.transpose(0, 2, 1).reshape(S * k, n)
    for lo in range(0, S, BLOCK):
        ys = slice(lo, min(S, lo + BLOCK))
        nb = ys.stop - ys.start
        right = oh[ys].transpose(1, 0, 2).reshape(n, nb * k)
        t = (left @ right).reshape(S, k, nb, k).transpose(0, 2, 1, 3)
        yield ys, np.ascontiguousarray(t)


def check_free(n: int, k: int, colors=None) -> list:
    """Q, L, the <G(x),G(y)> identity and |K(x)-K(y)|^2 = L over all of Omega."""
    colors = INTEGER_PALETTES[k] if colors is None else colors
    c = np.asarray(colors, dtype=float)
    states = enumerate_array(SampleSpace.omega(n, k))
    G = _g_flat(states, colors)
    K = _k_flat(states)
    gnorm = (G * G).sum(axis=1)
    knorm = (K * K).sum(axis=1)
    sizes2 = (_onehot(states, k).sum(axis=1) ** 2).sum(axis=1).astype(float)
    err = {"Q": 0.0, "pgxy": 0.0, "L=|K(x)-K(y)|^2": 0.0, "L=-E[g(x)-g(y)]": 0.0}
    for ys, t in _pairs(states, k):
        gram = G @ G[ys].T
        kgram = K @ K[ys].T
        q_def = gnorm[:, None] + gnorm[None, ys] - 2 * gram
        err["Q"] = max(err["Q"], float(np.abs(q_stat(t, c) - q_def).max()))
        err["pgxy"] = max(err["pgxy"], float(np.abs(pg_inner(t, c) - gram).max()))
        lk = knorm[:, None] + knorm[None, ys] - 2 * kgram
        lt = l_stat(t)
        err["L=|K(x)-K(y)|^2"] = max(err["L=|K(x)-K(y)|^2"], float(np.abs(lt - lk).max()))
        # -E[g(x) - g(y)] with R = K(y)
        eg = sizes2[None, ys] - sizes2[:, None] + 2 * knorm[None, ys] - 2 * kgram
        err["L=-E[g(x)-g(y)]"] = max(err["L=-E[g(x)-g(y)]"], float(np.abs(lt - eg).max()))
    S = len(states)
    return [OracleResult(name, n, k, S * S, e == 0.0, e) for name, e in err.items()]


def check_fixed(counts, colors=None) -> list:
    """M, U and U = L/2 over a fixed-counts space."""
    k = len(counts)
    n = sum(counts)
    colors = INTEGER_PALETTES[k] if colors is None else colors
    c = np.asarray(colors, dtype=float)
    states = enumerate_array(SampleSpace.fixed(counts))
    G = _g_flat(states, colors)
    K = _k_flat(states)
    gnorm = (G * G).sum(axis=1)
    knorm = (K * K).sum(axis=1)
    err = {"M": 0.0, "U": 0.0, "U=L/2": 0.0}
    for ys, t in _pairs(states, k):
        m_def = gnorm[None, ys] - G @ G[ys].T
        u_def = knorm[None, ys] - K @ K[ys].T
        ut = u_stat(t)
        err["M"] = max(err["M"], float(np.abs(m_stat(t, c) - m_def).max()))
        err["U"] = max(err["U"], float(np.abs(ut - u_def).max()))
        err["U=L/2"] = max(err["U=L/2"], float(np.abs(2 * ut - l_stat(t)).max()))
    S = len(states)
    return [OracleResult(name, n, k, S * S, e == 0.0, e) for name, e in err.items()]


def check_theta(n: int, k: int) -> list:
    """J from the contingency table vs the pairwise and matrix definitions."""
    states = enumerate_array(SampleSpace.theta(n, k))
    z = np.exp(2j * np.pi * states / k)
    P = (z[:, :, None] * z[:, None, :].conj()).reshape(len(states), -1)
    w = 1 - np.cos(2 * np.pi * np.arange(k) / k)
    w[0] = 0.0
    count_err = 0
    float_err = 0.0
    for ys, t in _pairs(states, k):
        a = states[:, None, :, None]
        b = states[None, ys, :, None]
        res = (-a + states[:, None, None, :] + b - states[None, ys][:, :, None, :]) % k
        pair_counts = np.stack([(res == r).sum(axis=(-2, -1)) for r in range(k)], axis=-1)
        count_err = max(count_err, int(np.abs(j_residue_counts(t) - pair_counts).max()))
        # J = Re<P(y), P(y) - P(x)>
        j_def = n * n - (P[ys].conj() @ P.T).T.real
        float_err = max(float_err, float(np.abs(j_stat(t) - j_def).max()))
        float_err = max(float_err, float(np.abs(pair_counts @ w - j_def).max()))
    S = len(states)
    tol = 1e-9 * n * n
    return [
        OracleResult("J residue counts", n, k, S * S, count_err == 0, float(count_err)),
        OracleResult("J", n, k, S * S, float_err <= tol, float_err),
    ]


def check_rational(n: int, k: int, samples: int = 200, seed: int = 0) -> list:
    """Exact Fraction arithmetic for M, Q and <G(x),G(y)> on random pairs with a rational palette."""
    colors = np.array(RATIONAL_PALETTES[k], dtype=object)
    rng = np.random.default_rng(seed)
    ok = {"M (rational)": True, "Q (rational)": True, "pgxy (rational)": True}
    for _ in range(samples):
        y = rng.integers(0, k, n)
        x = rng.permutation(y)
        free = rng.integers(0, k, n)
        for name, xa in (("M (rational)", x), ("Q (rational)", free), ("pgxy (rational)", free)):
            t = contingency_array(xa, y, k).astype(object)
            gx = colors[xa][:, None] - colors[xa][None, :]
            gy = colors[y][:, None] - colors[y][None, :]
            gram = (gx * gy).sum()
            if name.startswith("M"):
                ok[name] &= m_stat(t, colors) == (gy * gy).sum() - gram
            elif name.startswith("Q"):
                ok[name] &= q_stat(t, colors) == (gx * gx).sum() + (gy * gy).sum() - 2 * gram
            else:
                ok[name] &= pg_inner(t, colors) == gram
    return [OracleResult(name, n, k, samples, bool(v), 0.0 if v else float("nan")) for name, v in ok.items()]


def fixed_count_vectors(n: int, k: int):
    """All n_1 >= ... >= n_k >= 1 splitting n."""
    def rec(remaining, parts, cap):
        if parts == 1:
            if 1 <= remaining <= cap:
                yield (remaining,)
            return
        for first in range(min(cap, remaining - parts + 1), 0, -1):
            for rest in rec(remaining - first, parts - 1, first):
                yield (first,) + rest
    yield from rec(n, k, n)


def run_oracle_suite(max_n: int = 8, max_k: int = 3) -> list:
    results = []
    for k in range(2, max_k + 1):
        for n in range(2, max_n + 1):
            results += check_free(n, k)
            for counts in fixed_count_vectors(n, k):
                results += check_fixed(counts)
            if n % k == 0:
                results += check_theta(n, k)
        if k in RATIONAL_PALETTES:
            results += check_rational(max_n, k)
    return results


def main_report(max_n: int = 8, max_k: int = 3, out=None) -> bool:
    import sys

    out = out or sys.stdout
    start = time.perf_counter()
    results = run_oracle_suite(max_n, max_k)
    names = sorted({r.name for r in results})
    ok = True
    for name in names:
        rs = [r for r in results if r.name == name]
        passed = all(r.passed for r in rs)
        ok &= passed
        worst = max(r.max_abs_error for r in rs)
        pairs = sum(r.pairs for r in rs)
        print(f"{'PASS' if passed else 'FAIL'} {name}: {pairs} pairs, max |error| {worst:.3g}", file=out)
    print(f"oracle suite {'passed' if ok else 'FAILED'} in {time.perf_counter() - start:.1f}s", file=out)
    return ok
