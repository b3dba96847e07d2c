"""Exhaustive maximum-likelihood estimation over small sample spaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matrices as mx
from .model import (
    DEFAULT_CAP,
    PARTITION,
    PHASE,
    THETA,
    Assignment,
    ModelError,
    Palette,
    SampleSpace,
    canonical_array,
    enumerate_array,
    is_equivalent,
)
from .statistics import MINIMIZE, ORIENTATION, _require_kind, score_batch

EXACT = "exact"
TIE_RTOL = 1e-9
CHUNK = 1 << 16


@dataclass(frozen=True)
class MleResult:
    argbest: Assignment
    best_score: float
    tie_count: int
    space: SampleSpace
    states_visited: int
    orientation: str
    margin: float | None = None


def equivalence_for(kind: str) -> str:
    """Natural equivalence of the estimator using score ``kind``."""
    return {"f": EXACT, "d": EXACT, "g": PARTITION, "h": PARTITION, "r": PHASE}[kind]


def _colex_key(row: np.ndarray) -> tuple:
    return tuple(int(v) for v in row[::-1])


def mle(
    obs: mx.Observation,
    space: SampleSpace,
    palette: Palette,
    cap: int = DEFAULT_CAP,
    truth: Assignment | None = None,
) -> MleResult:
    """Optimize the score matching (obs.model, space) over every member of ``space``.

    When ``truth`` is given, ``margin`` is the oriented score of the truth's class
    minus the best oriented score outside it; it is positive iff the truth wins.
    """
    kind = _require_kind(obs.model, space)
    if space.n != obs.n or palette.k != space.k:
        raise ModelError("observation, space and palette sizes disagree")
    if kind == "r" and not palette.is_roots:
        raise ModelError("phase models need the roots-of-unity palette")
    if space.kind == THETA and not palette.is_roots:
        raise ModelError("theta spaces use the roots-of-unity palette")
    states = enumerate_array(space, cap)
    sign = -1.0 if ORIENTATION[kind] == MINIMIZE else 1.0
    # oriented so larger is always better
    scores = np.concatenate(
        [sign * score_batch(states[i : i + CHUNK], obs, kind, palette) for i in range(0, len(states), CHUNK)]
    )
    best = scores.max()
    tol = TIE_RTOL * max(1.0, abs(best))
    tied = np.flatnonzero(scores >= best - tol)
    mode = equivalence_for(kind)
    canon = states[tied] if mode == EXACT else canonical_array(states[tied], palette.k, mode)
    classes = {_colex_key(row) for row in canon}
    pick = min(range(len(tied)), key=lambda i: (_colex_key(canon[i]), i))
    # report the class by its canonical representative
    argbest = Assignment(tuple(canon[pick]), palette)
    margin = None
    if truth is not None:
        if mode == EXACT:
            same = np.all(states == truth.array, axis=1)
        else:
            ref = canonical_array(truth.array[None, :], palette.k, mode)[0]
            same = np.all(canonical_array(states, palette.k, mode) == ref, axis=1)
        others = scores[~same]
        if same.any() and others.size:
            margin = float(scores[same].max() - others.max())
    return MleResult(
        argbest=argbest,
        best_score=float(sign * best),
        tie_count=len(classes),
        space=space,
        states_visited=len(states),
        orientation=ORIENTATION[kind],
        margin=margin,
    )


def recovery_check(estimate: Assignment, truth: Assignment, mode: str = EXACT) -> bool:
    if estimate.n != truth.n:
        raise ModelError("estimate and truth sizes differ")
    if mode == EXACT:
        return estimate.colors == truth.colors
    return is_equivalent(estimate, truth, mode)
