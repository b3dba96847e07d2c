"""Complex SDP relaxation, rank-one rounding and the analytic dual certificate.

The relaxation is::

    maximize Re<V, X>  subject to  X_ii = 1,  X Hermitian PSD.

It is solved by over-relaxed ADMM that alternates a projection onto the affine
set (unit diagonal) with a projection onto the PSD cone (eigendecomposition,
negative eigenvalues clipped to zero).  The iterate can live either in the
complex n x n form or in the 2n x 2n real embedding; both follow the same
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import laplacian
from .model import Assignment, ModelError, Palette

HERMITIAN_TOL = 1e-12


def _check_hermitian(V: np.ndarray) -> np.ndarray:
    V = np.asarray(V)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ModelError("expected a square matrix")
    scale = max(1.0, float(np.abs(V).max(initial=0.0)))
    if np.abs(V - V.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ModelError("matrix is not Hermitian")
    return V


def real_embed(V: np.ndarray) -> np.ndarray:
    """2n x 2n real symmetric embedding [[Re V, -Im V], [Im V, Re V]].

    The layout is the one used for the iterate, so <embed(V), embed(X)> = 2 Re<V, X>.
    """
    V = _check_hermitian(V)
    V1, V2 = V.real, V.imag
    return np.block([[V1, -V2], [V2, V1]])


def extract_embedded(Vt: np.ndarray) -> np.ndarray:
    n = Vt.shape[0] // 2
    return Vt[:n, :n] + 1j * Vt[n:, :n]


def _project_ties(Xt: np.ndarray) -> np.ndarray:
    """Nearest matrix with unit diagonal and the embedding's block ties."""
    n = Xt.shape[0] // 2
    A = 0.5 * (Xt[:n, :n] + Xt[n:, n:])
    B = 0.5 * (Xt[n:, :n] - Xt[:n, n:])
    out = np.block([[A, -B], [B, A]])
    np.fill_diagonal(out, 1.0)
    return out


def _psd_project(M: np.ndarray) -> np.ndarray:
    M = 0.5 * (M + M.conj().T)
    w, Q = np.linalg.eigh(M)
    w = np.clip(w, 0.0, None)
    return (Q * w) @ Q.conj().T


@dataclass(frozen=True)
class SdpParams:
    max_iters: int = 5000
    rho: float | None = None  # None: n
    alpha: float = 1.6
    tol_primal: float = 1e-7
    tol_constraint: float = 1e-9
    warm_start: str = "spectral"  # or "identity"
    embedding: str = "complex"  # or "real"


@dataclass(frozen=True)
class SdpSolution:
    X: np.ndarray
    iterations: int
    primal_residual: float
    constraint_residual: float
    converged: bool

    def objective(self, V: np.ndarray) -> float:
        return float(np.vdot(self.X, V).real)


def _spectral_phases(V: np.ndarray) -> np.ndarray:
    w, Q = np.linalg.eigh(V)
    v = Q[:, -1]
    mag = np.abs(v)
    v = np.where(mag > 0, v / np.where(mag > 0, mag, 1.0), 1.0)
    return v * np.conj(v[0])


def certificate_matrix(V: np.ndarray, y: np.ndarray) -> np.ndarray:
    """S = 2 diag(y) Laplacian(diag(conj y) V diag(y)) diag(conj y) for unit-modulus y.

    S y = 0 for every V.  S is Hermitian exactly when the conjugated matrix has
    real row sums, as in the GOE model.
    """
    inner = y.conj()[:, None] * V * y[None, :]
    return 2 * (y[:, None] * laplacian(inner) * y.conj()[None, :])


def _dual_guess(V: np.ndarray, y: np.ndarray) -> np.ndarray:
    # Hermitian part of the certificate: a real dual diagonal, usable for any V
    S = certificate_matrix(V, y)
    return 0.5 * (S + S.conj().T)


def solve_sdp(V: np.ndarray, params: SdpParams | None = None) -> SdpSolution:
    params = params or SdpParams()
    V = _check_hermitian(V).astype(complex)
    n = V.shape[0]
    rho = float(params.rho) if params.rho else float(n)
    alpha = params.alpha
    if params.warm_start == "spectral":
        # rank-one guess plus the dual iterate its certificate implies; a certified
        # guess is an exact fixed point of the iteration
        v = _spectral_phases(V)
        Z = np.outer(v, v.conj())
        U = -_dual_guess(V, v) / (2 * rho)
    elif params.warm_start == "identity":
        Z = np.eye(n, dtype=complex)
        U = np.zeros((n, n), dtype=complex)
    else:
        raise ModelError(f"unknown warm start {params.warm_start!r}")

    if params.embedding == "real":
        Vs, Z, U = real_embed(V), real_embed(Z), real_embed(U)
        affine = _project_ties
    elif params.embedding == "complex":
        Vs = V

        def affine(M):
            M = M.copy()
            np.fill_diagonal(M, 1.0)
            return M
    else:
        raise ModelError(f"unknown embedding {params.embedding!r}")

    tol_p = params.tol_primal * n
    tol_c = params.tol_constraint * n
    r_p = r_c = np.inf
    it = 0
    for it in range(1, params.max_iters + 1):
        X = affine(Z - U + Vs / rho)
        Xh = alpha * X + (1 - alpha) * Z
        Z_new = _psd_project(Xh + U)
        U = U + Xh - Z_new
        r_c = float(np.linalg.norm(X - Z_new))
        r_p = float(rho * np.linalg.norm(Z_new - Z))
        Z = Z_new
        if r_p < tol_p and r_c < tol_c:
            break
    if params.embedding == "real":
        # halve the norms so residuals are comparable across embeddings
        r_p, r_c = r_p / np.sqrt(2), r_c / np.sqrt(2)
        Z = extract_embedded(Z)
    Z = 0.5 * (Z + Z.conj().T)
    return SdpSolution(Z, it, r_p, r_c, bool(r_p < tol_p and r_c < tol_c))


def round_solution(X: np.ndarray, k: int) -> Assignment:
    """Top eigenvector of X, normalized, anchored at vertex 0 and snapped to k-th roots."""
    if k < 2:
        raise ModelError("rounding needs k >= 2")
    v = _spectral_phases(np.asarray(X))
    idx = np.rint(np.angle(v) * k / (2 * np.pi)).astype(np.int64) % k
    return Assignment(tuple(idx), Palette.roots(k))


@dataclass(frozen=True)
class CertificateReport:
    S: np.ndarray
    lambda_min: float
    lambda_second: float
    null_vector_residual: float
    certified: bool
    tol_psd: float
    tol_gap: float
    tol_null: float
    hermitian_residual: float = 0.0


def dual_certificate(V: np.ndarray, y: Assignment) -> CertificateReport:
    V = _check_hermitian(V)
    if not y.palette.is_roots:
        raise ModelError("certificates need a roots-of-unity assignment")
    if V.shape[0] != y.n:
        raise ModelError("observation and assignment sizes differ")
    n = y.n
    yv = y.values()
    S = certificate_matrix(V, yv)
    herm = float(np.abs(S - S.conj().T).max())
    w = np.linalg.eigvalsh(0.5 * (S + S.conj().T))
    fro = float(np.linalg.norm(S))
    resid = float(np.linalg.norm(S @ yv))
    tol_psd = 1e-8 * fro
    tol_gap = 1e-6 * n
    tol_null = 1e-8 * fro * np.sqrt(n)
    lam_min, lam_2 = float(w[0]), float(w[1]) if n > 1 else float("inf")
    # a non-Hermitian S has no real dual diagonal behind it, so it certifies nothing
    certified = bool(herm <= tol_psd and lam_min >= -tol_psd and lam_2 > tol_gap and resid <= tol_null)
    return CertificateReport(S, lam_min, lam_2, resid, certified, tol_psd, tol_gap, tol_null, herm)


def spectral_norm(M: np.ndarray) -> float:
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ModelError("spectral norm needs a square matrix")
    return float(np.abs(np.linalg.eigvalsh(M)).max())


@dataclass(frozen=True)
class ConditionC1:
    lhs: float
    holds: bool
    majorant: float
    max_row_sum: float
    norm_ws: float


def certify_condition_c1(Ws: np.ndarray, sigma: float, n: int | None = None) -> ConditionC1:
    """sigma * |Laplacian(Ws)| < n, with the max-row-sum + |Ws| majorant of |Laplacian(Ws)|.

    Equality is treated as failing.
    """
    Ws = np.asarray(Ws)
    if not np.array_equal(Ws, Ws.T):
        raise ModelError("W_s must be symmetric")
    n = Ws.shape[0] if n is None else n
    norm_lap = spectral_norm(laplacian(Ws))
    row = float(np.abs(Ws.sum(axis=1)).max())
    nws = spectral_norm(Ws)
    lhs = sigma * norm_lap
    return ConditionC1(lhs, lhs < n, sigma * (row + nws), row, nws)
