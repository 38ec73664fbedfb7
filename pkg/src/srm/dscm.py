"""Closed-form dark-state covariance matrix.

The steady-state quadrature covariance is block diagonal,
(1 - Gx~) + (1 - Gy~), with rank-two corrections built from

    A_j = sqrt(M/C) c_j sqrt(eta_j),   B_j = A_j cos(c_j theta),   A.B = 1.

The nontrivial spectrum lives on span{e1, e2}, e1 = A/|A| and e2 the
Gram-Schmidt remainder of B; every orthogonal direction has eigenvalue 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bogoliubov import complete_orthogonal
from .errors import StabilityError
from .model import EnsembleConfig
from .potential import curvature


@dataclass(frozen=True)
class Eigenpair:
    value: float
    vector: np.ndarray


@dataclass(frozen=True)
class DarkStateAnalysis:
    A: np.ndarray
    B: np.ndarray
    phi: float
    e1: np.ndarray
    e2: np.ndarray | None
    gamma_x: np.ndarray
    gamma_y: np.ndarray
    lambda_min: float
    eig_x_plus: Eigenpair
    eig_x_minus: Eigenpair
    eig_y_plus: Eigenpair
    eig_y_minus: Eigenpair

    @property
    def covariance(self) -> np.ndarray:
        M = self.A.shape[0]
        z = np.zeros((M, M))
        return np.block([[self.gamma_x, z], [z, self.gamma_y]])

    def spectrum(self) -> np.ndarray:
        """All 2M covariance eigenvalues, ascending."""
        M = self.A.shape[0]
        vals = [1 - self.eig_x_plus.value, 1 - self.eig_y_plus.value]
        if M > 1:
            vals += [1 - self.eig_x_minus.value, 1 - self.eig_y_minus.value]
            vals += [1.0] * (2 * M - 4)
        return np.sort(np.array(vals))

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "phi": self.phi,
            "lambda_min": self.lambda_min,
            "spectrum": self.spectrum().tolist(),
        }


def vectors_ab(cfg: EnsembleConfig):
    C = curvature(cfg, cfg.theta)
    if C <= 0:
        raise StabilityError(f"curvature {C!r} is not positive")
    A = np.sqrt(cfg.M / C) * cfg.c * np.sqrt(cfg.eta)
    B = A * np.cos(cfg.c * cfg.theta)
    return A, B


def correction_matrices(cfg: EnsembleConfig):
    A, B = vectors_ab(cfg)
    cross = np.outer(A, B) + np.outer(B, A)
    gx = cross - (1 + B @ B) * np.outer(A, A)
    gy = cross - (1 + A @ A) * np.outer(B, B)
    return gx, gy


def _frame(A: np.ndarray, B: np.ndarray):
    """(e1, e2, phi); e2 is None when B is parallel to A."""
    na = np.linalg.norm(A)
    e1 = A / na
    along = B @ e1
    perp = B - along * e1
    perp = perp - (perp @ e1) * e1  # second pass keeps e2 orthogonal when B is nearly parallel
    npe = np.linalg.norm(perp)
    phi = float(np.arctan2(npe, along))
    if A.shape[0] == 1 or npe <= 1e-15 * np.linalg.norm(B):
        return e1, None, 0.0 if A.shape[0] == 1 else phi
    return e1, perp / npe, phi


def lambda_min_formula(norm_a_sq: float, phi: float) -> float:
    """Minimum covariance eigenvalue from |A|^2 and phi.

    Evaluated as 2a / (1 + a + sqrt((1 - a)^2 + 4a sin^2 phi)) with a = |A|^-2,
    which equals the textbook ratio but avoids cancellation both as
    cos 2phi -> -1 and as a -> 1, phi -> 0.
    """
    a = 1.0 / norm_a_sq
    one_minus_a = (norm_a_sq - 1.0) / norm_a_sq
    root = np.sqrt(one_minus_a * one_minus_a + 4 * a * np.sin(phi) ** 2)
    return float(2 * a / (1 + a + root))


def min_eigenvalue_closed(cfg: EnsembleConfig) -> float:
    A, B = vectors_ab(cfg)
    if cfg.M == 1:
        return float(min(1.0, B[0] * B[0]))
    _, _, phi = _frame(A, B)
    return lambda_min_formula(float(A @ A), phi)


def dark_covariance(cfg: EnsembleConfig) -> DarkStateAnalysis:
    A, B = vectors_ab(cfg)
    gx, gy = correction_matrices(cfg)
    M = cfg.M
    eye = np.eye(M)
    e1, e2, phi = _frame(A, B)
    na2, nb2 = float(A @ A), float(B @ B)
    c_sq = max(na2 * nb2 - 1.0, 0.0)
    b_x = 2 - (1 + nb2) * na2
    b_y = 2 - (1 + na2) * nb2

    if M == 1:
        lx, ly = b_x, b_y
        eig_x_p = Eigenpair(lx, e1.copy())
        eig_y_p = Eigenpair(ly, e1.copy())
        eig_x_m = Eigenpair(lx, e1.copy())
        eig_y_m = Eigenpair(ly, e1.copy())
        lam = min(1 - lx, 1 - ly)
    else:
        disc_x = np.sqrt(b_x * b_x + 4 * c_sq)
        disc_y = np.sqrt(b_y * b_y + 4 * c_sq)
        lxp, lxm = 0.5 * (b_x + disc_x), 0.5 * (b_x - disc_x)
        lyp, lym = 0.5 * (b_y + disc_y), 0.5 * (b_y - disc_y)
        if e2 is None:
            # parallel A and B: branch fixed at alpha_y = 0, alpha_x = pi
            alpha_x, alpha_y = np.pi, 0.0
            e2v = complete_orthogonal(e1)[1]
        else:
            s2, c2 = np.sin(2 * phi), np.cos(2 * phi)
            alpha_x = np.arctan2(s2, c2 - 1.0 / nb2)
            alpha_y = np.arctan2(s2, na2 - c2)
            e2v = e2
        vxp = np.cos(alpha_x / 2) * e1 + np.sin(alpha_x / 2) * e2v
        vxm = -np.sin(alpha_x / 2) * e1 + np.cos(alpha_x / 2) * e2v
        vyp = np.cos(alpha_y / 2) * e1 - np.sin(alpha_y / 2) * e2v
        vym = np.sin(alpha_y / 2) * e1 + np.cos(alpha_y / 2) * e2v
        eig_x_p, eig_x_m = Eigenpair(lxp, vxp), Eigenpair(lxm, vxm)
        eig_y_p, eig_y_m = Eigenpair(lyp, vyp), Eigenpair(lym, vym)
        lam = lambda_min_formula(na2, phi)

    return DarkStateAnalysis(
        A=A,
        B=B,
        phi=phi,
        e1=e1,
        e2=e2,
        gamma_x=eye - gx,
        gamma_y=eye - gy,
        lambda_min=float(lam),
        eig_x_plus=eig_x_p,
        eig_x_minus=eig_x_m,
        eig_y_plus=eig_y_p,
        eig_y_minus=eig_y_m,
    )


def quadrature_gap(cfg: EnsembleConfig):
    """(tan^2 phi, Frobenius residual of Gy - Gx^{-1} - tan^2 phi e2 e2^T)."""
    res = dark_covariance(cfg)
    gap = res.gamma_y - np.linalg.inv(res.gamma_x)
    if res.e2 is None:
        t2 = 0.0
        model = np.zeros_like(gap)
    else:
        t2 = float(np.tan(res.phi) ** 2)
        model = t2 * np.outer(res.e2, res.e2)
    return t2, float(np.linalg.norm(gap - model))
