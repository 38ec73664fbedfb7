"""Method-of-moments metrology on top of the dark-state covariance.

All variances are per repetition (the repetition count is factored out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dscm import correction_matrices, dark_covariance
from .errors import DomainError, SingularCovariance
from .model import EnsembleConfig, TaskVector

COND_LIMIT = 1e12


@dataclass(frozen=True)
class SqueezingReport:
    xi2: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    msc: float
    gmsc: float
    chi: float
    sn_variance: float
    sn_opt_variance: float

    def to_dict(self) -> dict:
        return {
            "xi2": self.xi2.tolist(),
            "eigvals": self.eigvals.tolist(),
            "eigvecs": self.eigvecs.tolist(),
            "msc": self.msc,
            "gmsc": self.gmsc,
            "chi": self.chi,
            "sn_variance": self.sn_variance,
            "sn_opt_variance": self.sn_opt_variance,
        }


@dataclass(frozen=True)
class ErrorPropagation:
    f2: np.ndarray
    frob: float


def _task(n) -> TaskVector:
    return n if isinstance(n, TaskVector) else TaskVector(n)


def shot_noise_fim(cfg: EnsembleConfig) -> np.ndarray:
    return np.diag(cfg.populations)


def moment_matrix(commutators, meas_cov) -> np.ndarray:
    """C^T Gamma^{-1} C for commutator matrix C and measurement covariance Gamma."""
    C = np.asarray(commutators, dtype=float)
    G = np.asarray(meas_cov, dtype=float)
    if G.shape[0] != G.shape[1] or C.shape[0] != G.shape[0]:
        raise DomainError("commutator and covariance shapes do not match")
    if not np.allclose(G, G.T, rtol=0, atol=1e-12 * max(1.0, np.abs(G).max())):
        raise DomainError("measurement covariance must be symmetric")
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularCovariance(f"measurement covariance condition number {cond:.3e}")
    out = C.T @ np.linalg.solve(G, C)
    return 0.5 * (out + out.T)


def squeezing_from_moments(cfg: EnsembleConfig, moments: np.ndarray) -> np.ndarray:
    """Xi^2 = F^{1/2} M^{-1} F^{1/2} with F the shot-noise Fisher matrix."""
    root = np.diag(np.sqrt(cfg.populations))
    out = root @ np.linalg.inv(moments) @ root
    return 0.5 * (out + out.T)


def dark_state_moments(cfg: EnsembleConfig) -> np.ndarray:
    """Moment matrix of the dark state for local S^X generators and S^Y readout.

    Commutators <[S^X_j, S^Y_k]> = delta_jk N_j / 2 and
    Cov(S^Y_j, S^Y_k) = sqrt(N_j N_k) / 4 * (Gamma_Y)_jk.
    """
    pops = cfg.populations
    comm = np.diag(pops / 2)
    cov = 0.25 * np.sqrt(np.outer(pops, pops)) * dark_covariance(cfg).gamma_y
    return moment_matrix(comm, cov)


def squeezing_matrix(cfg: EnsembleConfig) -> np.ndarray:
    _, gy = correction_matrices(cfg)
    return np.eye(cfg.M) - gy


def _rayleigh(mat: np.ndarray, v: np.ndarray) -> float:
    return float(v @ mat @ v / (v @ v))


def msc(cfg: EnsembleConfig, n) -> float:
    n = _task(n)
    if len(n) != cfg.M:
        raise DomainError("task vector length does not match M")
    m = n.n / np.sqrt(cfg.populations)
    return _rayleigh(squeezing_matrix(cfg), m)


def shot_noise_variances(cfg: EnsembleConfig, n) -> tuple[float, float]:
    """(n^T F^{-1} n, (sum|n_j|)^2 / N)."""
    n = _task(n)
    sn = math.fsum(n.n**2 / cfg.populations)
    opt = math.fsum(np.abs(n.n)) ** 2 / cfg.N
    return sn, opt


def gmsc(cfg: EnsembleConfig, n) -> tuple[float, float]:
    sn, opt = shot_noise_variances(cfg, n)
    chi = sn / opt
    return chi * msc(cfg, n), chi


def squeezing_report(cfg: EnsembleConfig, n) -> SqueezingReport:
    n = _task(n)
    xi2 = squeezing_matrix(cfg)
    vals, vecs = np.linalg.eigh(xi2)
    m = msc(cfg, n)
    sn, opt = shot_noise_variances(cfg, n)
    chi = sn / opt
    return SqueezingReport(
        xi2=xi2,
        eigvals=vals,
        eigvecs=vecs,
        msc=m,
        gmsc=chi * m,
        chi=chi,
        sn_variance=sn,
        sn_opt_variance=opt,
    )


def xi_cov_bound(cfg: EnsembleConfig) -> tuple[np.ndarray, float]:
    """((1 - Gx~)^{-1}, rank-one coefficient of Xi^2 minus that bound)."""
    res = dark_covariance(cfg)
    bound = np.linalg.inv(res.gamma_x)
    bound = 0.5 * (bound + bound.T)
    diff = res.gamma_y - bound
    if res.e2 is None:
        gap = float(np.linalg.norm(diff, 2))
    else:
        gap = float(res.e2 @ diff @ res.e2)
    return bound, gap


def error_propagation(eigvals) -> ErrorPropagation:
    """Second-order sensitivity of the Rayleigh quotient around its minimizer.

    For f(v) = sum lambda v^2 / sum v^2 at v = e1, f(e1 + d) - f(e1) =
    d^T F2 d + O(|d|^3) with F2 = diag(0, lambda_j - lambda_1).
    """
    lam = np.asarray(eigvals, dtype=float).reshape(-1)
    if lam.size == 0:
        raise DomainError("empty spectrum")
    if np.any(np.diff(lam) < 0):
        raise DomainError("eigenvalues must be sorted ascending")
    gaps = lam - lam[0]
    return ErrorPropagation(
        f2=np.diag(gaps), frob=float(np.sqrt(np.mean(gaps**2)))
    )
