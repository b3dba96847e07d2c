"""Model matrices, Gaussian ensembles and observation synthesis."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .model import Assignment, ModelError

VECTOR_T = "vector-T"
PARTITION_R = "partition-R"
GUE_U = "gue-U"
GOE_V = "conjugated-goe-V"

MODELS = (VECTOR_T, PARTITION_R, GUE_U, GOE_V)


def stream(seed: int, trial: int = 0, role: str = "noise") -> np.random.Generator:
    """Independent generator keyed by (seed, trial, role); order of creation never matters."""
    key = zlib.crc32(role.encode())
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial), key])))


def build_G(x: Assignment) -> np.ndarray:
    if x.palette.is_roots:
        raise ModelError("G(x) needs a real-valued palette")
    v = x.values()
    return v[:, None] - v[None, :]


def build_K(x: Assignment) -> np.ndarray:
    a = x.array
    return (a[:, None] != a[None, :]).astype(float)


def build_P(x: Assignment) -> np.ndarray:
    if not x.palette.is_roots:
        raise ModelError("P(x) needs a roots-of-unity palette")
    # phase index arithmetic keeps the entries exact roots of unity
    k = x.k
    a = x.array
    return x.palette.numeric()[(a[:, None] - a[None, :]) % k]


def sample_iid_gaussian(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((n, n))


def sample_goe(n: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((n, n))
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def sample_gue(n: int, rng: np.random.Generator) -> np.ndarray:
    re = rng.standard_normal((n, n)) / np.sqrt(2.0)
    im = rng.standard_normal((n, n)) / np.sqrt(2.0)
    upper = np.triu(re + 1j * im, 1)
    diag = rng.standard_normal(n)
    return upper + upper.conj().T + np.diag(diag).astype(complex)


@dataclass(frozen=True)
class Observation:
    matrix: np.ndarray
    model: str
    sigma: float
    truth: Assignment | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ModelError(f"unknown model {self.model!r}")
        complex_model = self.model in (GUE_U, GOE_V)
        if complex_model != np.iscomplexobj(self.matrix):
            raise ModelError(f"{self.model} observation has the wrong matrix type")
        if self.sigma < 0:
            raise ModelError("sigma must be nonnegative")

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def observe(y: Assignment, model: str, sigma: float, rng: np.random.Generator) -> Observation:
    n = y.n
    if model == VECTOR_T:
        clean = build_G(y)
        noise = sample_iid_gaussian(n, rng)
    elif model == PARTITION_R:
        clean = build_K(y)
        noise = sample_iid_gaussian(n, rng)
    elif model == GUE_U:
        clean = build_P(y)
        noise = sample_gue(n, rng)
    elif model == GOE_V:
        clean = build_P(y)
        phases = y.values()
        noise = phases[:, None] * sample_goe(n, rng) * phases.conj()[None, :]
    else:
        raise ModelError(f"unknown model {model!r}")
    if sigma == 0:
        return Observation(clean, model, 0.0, y)
    return Observation(clean + sigma * noise, model, float(sigma), y)


def laplacian(M: np.ndarray) -> np.ndarray:
    """diag(M 1) - M."""
    M = np.asarray(M)
    return np.diag(M.sum(axis=1)) - M


def dump_matrix(M: np.ndarray, fh: TextIO) -> None:
    """Row-major text dump; Hermitian/complex input writes a real block then an imaginary block."""
    M = np.asarray(M)
    blocks = [M.real, M.imag] if np.iscomplexobj(M) else [M]
    fh.write(f"{M.shape[0]} {M.shape[1]} {'complex' if len(blocks) == 2 else 'real'}\n")
    for block in blocks:
        for row in block:
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def load_matrix(fh: TextIO) -> np.ndarray:
    rows, cols, kind = fh.readline().split()
    rows, cols = int(rows), int(cols)
    data = [[float(v) for v in fh.readline().split()] for _ in range(rows * (2 if kind == "complex" else 1))]
    arr = np.array(data).reshape(-1, rows, cols)
    return arr[0] + 1j * arr[1] if kind == "complex" else arr[0]
