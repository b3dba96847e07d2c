"""Seeded Monte Carlo trials and sigma sweeps around the predicted thresholds.

Config files are INI-style::

    [experiment]
    model = vector-T          ; vector-T | partition-R | gue-U | conjugated-goe-V
    estimator = mle           ; mle | sdp
    n = 12
    k = 2
    colors = 0, 1             ; real palettes only
    counts = 6, 6             ; fixed-counts space
    space = fixed             ; omega | fixed | min_fraction | theta
    fraction = 0.3            ; min_fraction space
    sigmas = 0, 0.5, 1        ; explicit sigma values, or
    sigma_sq_rel = 0.25, 4, 7 ; geometric grid of sigma^2 / threshold
    trials = 200
    seed = 1
    threads = 1
    output = results/run      ; writes run_trials.csv and run_summary.csv
    timing = false
    cap = 10000000

    [solver]
    max_iters = 5000
    rho = 0                   ; 0 means n
    alpha = 1.6
    tol_primal = 1e-7
    tol_constraint = 1e-9
    warm_start = spectral
    embedding = complex

``KPARTITE_OUTPUT`` and ``KPARTITE_THREADS`` override ``output`` and ``threads``.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import matrices as mx
from .mle import EXACT, equivalence_for, mle, recovery_check
from .model import (
    DEFAULT_CAP,
    FIXED,
    MIN_FRACTION,
    OMEGA,
    PHASE,
    THETA,
    Assignment,
    ModelError,
    Palette,
    SampleSpace,
)
from .sdp import SdpParams, dual_certificate, round_solution, solve_sdp
from .statistics import ThresholdReport, score_kind, threshold

log = logging.getLogger(__name__)

ENV_OUTPUT = "KPARTITE_OUTPUT"
ENV_THREADS = "KPARTITE_THREADS"

DEFAULT_SPACE = {mx.VECTOR_T: OMEGA, mx.PARTITION_R: OMEGA, mx.GUE_U: THETA, mx.GOE_V: THETA}
FORMULA = {mx.VECTOR_T: "thm1", mx.PARTITION_R: "thm2", mx.GUE_U: "thm3", mx.GOE_V: "thm5-bound"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: str = mx.VECTOR_T
    estimator: str = "mle"
    n: int = 8
    k: int = 2
    colors: tuple | None = None
    counts: tuple | None = None
    fraction: float | None = None
    space: str | None = None
    sigmas: tuple | None = None
    sigma_sq_rel: tuple | None = None
    trials: int = 1
    seed: int = 0
    threads: int = 1
    output: str | None = None
    timing: bool = False
    cap: int = DEFAULT_CAP
    solver: SdpParams = field(default_factory=SdpParams)

    def __post_init__(self):
        if self.model not in mx.MODELS:
            raise ModelError(f"unknown model {self.model!r}")
        if self.estimator not in ("mle", "sdp"):
            raise ModelError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "sdp" and self.model not in (mx.GOE_V, mx.GUE_U):
            raise ModelError("the SDP estimator needs a Hermitian (gue-U or conjugated-goe-V) observation")
        if self.trials < 1:
            raise ModelError("trials must be >= 1")
        if self.threads < 1:
            raise ModelError("threads must be >= 1")
        if self.sigmas is not None and any(s < 0 for s in self.sigmas):
            raise ModelError("sigma values must be nonnegative")
        if self.sigmas is None and self.sigma_sq_rel is None:
            raise ModelError("give either sigmas or sigma_sq_rel")
        if self.sigma_sq_rel is not None:
            lo, hi, steps = self.sigma_sq_rel
            if lo < 0 or hi < lo or int(steps) < 1:
                raise ModelError("sigma_sq_rel needs 0 <= lo <= hi and steps >= 1")
        if self.sigmas is not None and not self.sigmas:
            raise ModelError("sigma grid is empty")

    @property
    def palette(self) -> Palette:
        if self.model in (mx.GUE_U, mx.GOE_V):
            return Palette.roots(self.k)
        return Palette.real(self.colors if self.colors is not None else range(self.k))

    @property
    def sample_space(self) -> SampleSpace:
        kind = self.space or (FIXED if self.counts else DEFAULT_SPACE[self.model])
        if kind == FIXED:
            if not self.counts:
                raise ModelError("a fixed-counts space needs counts")
            return SampleSpace.fixed(self.counts)
        if kind == MIN_FRACTION:
            return SampleSpace.min_fraction(self.n, self.k, self.fraction if self.fraction is not None else 0.0)
        return SampleSpace(kind, self.n, self.k)

    def threshold(self) -> ThresholdReport:
        fid = FORMULA[self.model]
        pal = self.palette
        colors = pal.values if not pal.is_roots else None
        return threshold(fid, self.n, self.k, colors=colors, group_sizes=self.counts)

    def sigma_grid(self) -> list:
        if self.sigmas is not None:
            return sorted(float(s) for s in self.sigmas)
        lo, hi, steps = self.sigma_sq_rel
        crit = self.threshold().sigma_sq_critical
        steps = int(steps)
        if steps == 1 or lo == hi:
            mult = [float(lo)]
        elif lo == 0:
            mult = list(np.linspace(0.0, hi, steps))
        else:
            mult = list(np.geomspace(lo, hi, steps))
        return [math.sqrt(m * crit) for m in mult]

    def recovery_mode(self) -> str:
        if self.estimator == "sdp":
            return PHASE
        kind = score_kind(self.model, self.sample_space.kind)
        if kind is None:
            raise ModelError(f"no estimator pairs {self.model} with a {self.sample_space.kind} space")
        return equivalence_for(kind)


@dataclass(frozen=True)
class TrialRecord:
    sigma: float
    trial: int
    seed: int
    recovered: bool
    margin: float
    wall_ms: float | None = None
    certified: bool | None = None


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Per-trial seed; the same trial shares truth and noise draws across the sigma grid."""
    return int(np.random.SeedSequence([int(base_seed), int(trial_index)]).generate_state(1)[0])


def sample_truth(space: SampleSpace, palette: Palette, rng: np.random.Generator) -> Assignment:
    """Uniform draw from ``space``."""
    if space.kind in (FIXED, THETA):
        base = np.repeat(np.arange(space.k), space.counts)
        return Assignment(tuple(rng.permutation(base)), palette)
    for _ in range(100_000):
        colors = rng.integers(0, space.k, size=space.n)
        x = Assignment(tuple(colors), palette)
        if space.contains(x):
            return x
    raise ModelError("rejection sampling failed; the min-fraction space is too thin")


def run_trial(cfg: ExperimentConfig, trial_index: int, sigma: float | None = None) -> TrialRecord:
    if sigma is None:
        sigma = cfg.sigma_grid()[0]
    start = time.perf_counter()
    seed = trial_seed(cfg.seed, trial_index)
    space, palette = cfg.sample_space, cfg.palette
    y = sample_truth(space, palette, mx.stream(seed, 0, "truth"))
    obs = mx.observe(y, cfg.model, sigma, mx.stream(seed, 0, "noise"))
    certified = None
    if cfg.estimator == "mle":
        res = mle(obs, space, palette, cap=cfg.cap, truth=y)
        recovered = recovery_check(res.argbest, y, cfg.recovery_mode())
        margin = res.margin if res.margin is not None else 0.0
    else:
        sol = solve_sdp(obs.matrix, cfg.solver)
        est = round_solution(sol.X, cfg.k)
        recovered = recovery_check(est, y, PHASE)
        rep = dual_certificate(obs.matrix, y)
        certified = rep.certified
        margin = rep.lambda_second if rep.lambda_min >= -rep.tol_psd else rep.lambda_min
    wall = (time.perf_counter() - start) * 1e3 if cfg.timing else None
    return TrialRecord(float(sigma), trial_index, seed, bool(recovered), float(margin), wall, certified)


@dataclass(frozen=True)
class SummaryRow:
    sigma: float
    rate: float
    trials: int
    mean_margin: float


def sweep_records(cfg: ExperimentConfig) -> list:
    grid = cfg.sigma_grid()
    jobs = [(s, t) for s in grid for t in range(cfg.trials)]
    if cfg.threads == 1:
        return [run_trial(cfg, t, s) for s, t in jobs]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(lambda job: run_trial(cfg, job[1], job[0]), jobs))


def summarize(records: Iterable[TrialRecord]) -> list:
    by_sigma: dict = {}
    for rec in records:
        by_sigma.setdefault(rec.sigma, []).append(rec)
    rows = []
    for sigma in sorted(by_sigma):
        recs = sorted(by_sigma[sigma], key=lambda r: r.trial)
        hits = sum(r.recovered for r in recs)
        rows.append(SummaryRow(sigma, hits / len(recs), len(recs), math.fsum(r.margin for r in recs) / len(recs)))
    return rows


def sweep(cfg: ExperimentConfig) -> list:
    """Summary rows (sigma, rate, trials, mean_margin) ordered by sigma; writes CSVs if ``cfg.output``."""
    records = sweep_records(cfg)
    rows = summarize(records)
    if cfg.output:
        write_outputs(cfg.output, records, rows)
    return rows


def output_paths(prefix: str) -> tuple[Path, Path]:
    p = Path(prefix)
    return p.with_name(p.name + "_trials.csv"), p.with_name(p.name + "_summary.csv")


def write_outputs(prefix: str, records: Sequence[TrialRecord], rows: Sequence[SummaryRow]) -> None:
    trials_path, summary_path = output_paths(prefix)
    trials_path.parent.mkdir(parents=True, exist_ok=True)
    with open(trials_path, "w", newline="") as fh:
        write_trials_csv(records, fh)
    with open(summary_path, "w", newline="") as fh:
        write_summary_csv(rows, fh)


def write_trials_csv(records: Sequence[TrialRecord], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["sigma", "trial", "seed", "recovered", "margin", "wall_ms"])
    for r in sorted(records, key=lambda r: (r.sigma, r.trial)):
        wall = "" if r.wall_ms is None else "%.3f" % r.wall_ms
        w.writerow([repr(r.sigma), r.trial, r.seed, int(r.recovered), repr(r.margin), wall])


def write_summary_csv(rows: Sequence[SummaryRow], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["sigma", "rate", "trials", "mean_margin"])
    for r in rows:
        w.writerow([repr(r.sigma), repr(r.rate), r.trials, repr(r.mean_margin)])


def read_summary_csv(fh) -> list:
    return [
        SummaryRow(float(row["sigma"]), float(row["rate"]), int(row["trials"]), float(row["mean_margin"]))
        for row in csv.DictReader(fh)
    ]


def fit_crossing(rows: Sequence[SummaryRow]) -> float | None:
    """sigma^2 where a logistic fit in log(sigma^2) crosses a 50% recovery rate."""
    from scipy.optimize import curve_fit

    pts = [(r.sigma**2, r.rate) for r in rows if r.sigma > 0]
    if len(pts) < 3:
        return None
    s2 = np.array([p[0] for p in pts])
    rate = np.array([p[1] for p in pts])
    z = np.log(s2)

    def logistic(v, mid, slope):
        return 1.0 / (1.0 + np.exp(slope * (v - mid)))

    try:
        (mid, _), _ = curve_fit(logistic, z, rate, p0=(float(np.median(z)), 2.0), maxfev=10_000)
    except RuntimeError:
        log.warning("logistic fit did not converge")
        return None
    return float(np.exp(mid))


# ---------------------------------------------------------------- config I/O

def _floats(text: str) -> tuple:
    return tuple(float(v) for v in str(text).replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(float(v)) for v in str(text).replace(",", " ").split())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


EXPERIMENT_KEYS = {
    "model": str,
    "estimator": str,
    "n": int,
    "k": int,
    "colors": _floats,
    "counts": _ints,
    "fraction": float,
    "space": str,
    "sigmas": _floats,
    "sigma_sq_rel": _floats,
    "trials": int,
    "seed": int,
    "threads": int,
    "output": str,
    "timing": _bool,
    "cap": int,
}
SOLVER_KEYS = {
    "max_iters": int,
    "rho": float,
    "alpha": float,
    "tol_primal": float,
    "tol_constraint": float,
    "warm_start": str,
    "embedding": str,
}


def read_config_file(path: str | os.PathLike) -> dict:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    raw: dict = {}
    for section, keys in (("experiment", EXPERIMENT_KEYS), ("solver", SOLVER_KEYS)):
        if not parser.has_section(section):
            continue
        for key, value in parser.items(section):
            if key not in keys:
                raise ModelError(f"unknown key {key!r} in [{section}]")
            raw[key] = value
    return raw


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    if environ.get(ENV_OUTPUT):
        out["output"] = environ[ENV_OUTPUT]
    if environ.get(ENV_THREADS):
        out["threads"] = environ[ENV_THREADS]
    return out


def build_config(*layers: dict) -> ExperimentConfig:
    """Merge raw key/value layers (later wins) into a validated config."""
    merged: dict = {}
    for layer in layers:
        merged.update({k: v for k, v in layer.items() if v is not None})
    exp_kwargs, solver_kwargs = {}, {}
    for key, value in merged.items():
        if key in EXPERIMENT_KEYS:
            parse = EXPERIMENT_KEYS[key]
            exp_kwargs[key] = value if not isinstance(value, str) or parse is str else parse(value)
        elif key in SOLVER_KEYS:
            parse = SOLVER_KEYS[key]
            solver_kwargs[key] = value if not isinstance(value, str) or parse is str else parse(value)
        else:
            raise ModelError(f"unknown config key {key!r}")
    if exp_kwargs.get("sigma_sq_rel") is not None and len(exp_kwargs["sigma_sq_rel"]) != 3:
        raise ModelError("sigma_sq_rel takes lo, hi, steps")
    for key in ("colors", "counts", "sigmas", "sigma_sq_rel"):
        if key in exp_kwargs:
            exp_kwargs[key] = tuple(exp_kwargs[key])
    if solver_kwargs.get("rho") == 0:
        solver_kwargs["rho"] = None
    solver = replace(SdpParams(), **solver_kwargs)
    return ExperimentConfig(solver=solver, **exp_kwargs)


def config_to_dict(cfg: ExperimentConfig) -> dict:
    out = {f.name: getattr(cfg, f.name) for f in fields(cfg) if f.name != "solver"}
    out.update({f.name: getattr(cfg.solver, f.name) for f in fields(cfg.solver)})
    return out
