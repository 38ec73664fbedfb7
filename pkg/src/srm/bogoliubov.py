"""Linearized collective-mode chain a -> b -> B -> C.

Quadratures are ordered Q = (X_1..X_M, Y_1..Y_M) with X = (a + a^+)/sqrt2 and
Y = (a - a^+)/(sqrt2 i).  Internally modes are permuted so the K modes with
cos(c_j theta) > 0 come first; public coefficient vectors are returned in the
original ensemble order.  Every identity is checked in coefficient space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularModeError, StabilityError
from .model import EnsembleConfig
from .potential import curvature

SINGULAR_COS = 1e-10
UNIT_TOL = 1e-10


@dataclass(frozen=True)
class ModeChain:
    r: np.ndarray
    K: int
    permutation: np.ndarray
    U: np.ndarray
    V: np.ndarray
    xi: float
    R: np.ndarray
    R_inv: np.ndarray

    @property
    def M(self) -> int:
        return self.r.shape[0]

    def squeeze_matrix(self) -> np.ndarray:
        """S(r) mapping a-quadratures to b-quadratures (permuted order)."""
        return single_mode_squeeze(self.r)

    def to_dict(self) -> dict:
        return {
            "r": self.r.tolist(),
            "K": int(self.K),
            "permutation": self.permutation.tolist(),
            "U": self.U.tolist(),
            "V": self.V.tolist(),
            "xi": float(self.xi),
            "R": self.R.tolist(),
            "R_inv": self.R_inv.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def symplectic_form(M: int) -> np.ndarray:
    eye = np.eye(M)
    zero = np.zeros((M, M))
    return np.block([[zero, eye], [-eye, zero]])


def squeeze_factors(cfg: EnsembleConfig):
    """Return (r, K, permutation) with r listed in permuted order.

    The permutation is stable: positive-cosine modes first, each group kept in
    its original relative order.
    """
    cos = np.cos(cfg.c * cfg.theta)
    bad = np.flatnonzero(np.abs(cos) < SINGULAR_COS)
    if bad.size:
        raise SingularModeError(
            f"|cos(c_j theta)| below {SINGULAR_COS} for modes {bad.tolist()}"
        )
    pos = np.flatnonzero(cos > 0)
    neg = np.flatnonzero(cos < 0)
    perm = np.concatenate([pos, neg]).astype(int)
    r = -0.5 * np.log(np.abs(cos[perm]))
    return r, int(pos.size), perm


def complete_orthogonal(first_row, method: str = "reflection") -> np.ndarray:
    """Orthogonal matrix whose first row is ``first_row``.

    "reflection" uses the Householder map sending e1 to the row (symmetric,
    so row and column coincide).  "qr" is a second, independent completion
    used to check that downstream results do not depend on the choice.
    """
    f = np.asarray(first_row, dtype=float).reshape(-1)
    n = f.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if abs(np.linalg.norm(f) - 1.0) > UNIT_TOL:
        raise DomainError("first row must be a unit vector")
    if method == "reflection":
        w = -f.copy()
        w[0] += 1.0
        wn = w @ w
        if wn < 1e-30:
            return np.eye(n)
        return np.eye(n) - 2.0 * np.outer(w, w) / wn
    if method == "qr":
        basis = np.column_stack([f, np.eye(n)[:, ::-1]])
        q, _ = np.linalg.qr(basis)
        q = q[:, :n]
        if q[:, 0] @ f < 0:
            q = -q
        q[:, 0] = f
        return q.T
    raise DomainError(f"unknown completion method {method!r}")


def mode_weights(cfg: EnsembleConfig):
    """alpha_j = sqrt(eta_j) c_j e^{-r_j} in permuted order, with (r, K, perm)."""
    r, K, perm = squeeze_factors(cfg)
    alpha = np.sqrt(cfg.eta[perm]) * cfg.c[perm] * np.exp(-r)
    return alpha, r, K, perm


def two_mode_xi(cfg: EnsembleConfig) -> float:
    C = curvature(cfg, cfg.theta)
    if C <= 0:
        raise StabilityError(f"curvature {C!r} is not positive")
    alpha, _, K, _ = mode_weights(cfg)
    sinh_sq = cfg.M / C * np.sum(alpha[K:] ** 2)
    return float(np.arcsinh(np.sqrt(sinh_sq)))


def single_mode_squeeze(r: np.ndarray) -> np.ndarray:
    M = r.shape[0]
    z = np.zeros((M, M))
    return np.block([[z, -np.diag(np.exp(r))], [np.diag(np.exp(-r)), z]])


def _blocks(K: int, M: int, xi: float):
    ch, sh = np.cosh(xi), np.sinh(xi)
    E = np.eye(K)
    G = np.eye(M - K)
    F = np.zeros((K, M - K))
    if K > 0 and M - K > 0:
        E[0, 0] = ch
        G[0, 0] = ch
        F[0, 0] = sh
    return E, F, G


def build_transforms(cfg: EnsembleConfig, completion: str = "reflection") -> ModeChain:
    C = curvature(cfg, cfg.theta)
    if C <= 0:
        raise StabilityError(f"curvature {C!r} is not positive")
    alpha, r, K, perm = mode_weights(cfg)
    M = cfg.M
    if K == 0:
        raise StabilityError("no positive-cosine mode; dark mode is not an annihilator")
    U = complete_orthogonal(alpha[:K] / np.linalg.norm(alpha[:K]), completion)
    if M > K:
        V = complete_orthogonal(alpha[K:] / np.linalg.norm(alpha[K:]), completion)
    else:
        V = np.zeros((0, 0))
    xi = two_mode_xi(cfg)
    E, F, G = _blocks(K, M, xi)
    Z = np.zeros((M, M))
    top = np.block([[E @ U, F @ V], [F.T @ U, G @ V]])
    bot = np.block([[E @ U, -F @ V], [-F.T @ U, G @ V]])
    R = np.block([[top, Z], [Z, bot]])
    top_i = np.block([[U.T @ E, -U.T @ F], [-V.T @ F.T, V.T @ G]])
    bot_i = np.block([[U.T @ E, U.T @ F], [V.T @ F.T, V.T @ G]])
    R_inv = np.block([[top_i, Z], [Z, bot_i]])
    return ModeChain(
        r=r, K=K, permutation=perm, U=U, V=V, xi=xi, R=R, R_inv=R_inv
    )


def _unpermute_quadratures(vec: np.ndarray, perm: np.ndarray) -> np.ndarray:
    M = perm.shape[0]
    out = np.empty_like(vec)
    out[perm] = vec[:M]
    out[M + perm] = vec[M:]
    return out


def dark_mode_direct(cfg: EnsembleConfig) -> np.ndarray:
    """Quadrature coefficients of D^-/sqrt(N) from the linearized lowering operators."""
    half = cfg.c * cfg.theta / 2
    w = np.sqrt(cfg.eta) * cfg.c
    p = 1j * w * np.cos(half) ** 2
    q = -1j * w * np.sin(half) ** 2
    return np.concatenate([(p + q) / np.sqrt(2), 1j * (p - q) / np.sqrt(2)])


def dark_mode_chain(cfg: EnsembleConfig, chain: ModeChain | None = None) -> np.ndarray:
    """Quadrature coefficients of sqrt(C/M) C_1 pulled back through R and S(r)."""
    chain = chain or build_transforms(cfg)
    M = cfg.M
    T = chain.R @ chain.squeeze_matrix()
    c1 = (T[0] + 1j * T[M]) / np.sqrt(2)
    C = curvature(cfg, cfg.theta)
    return np.sqrt(C / M) * _unpermute_quadratures(c1, chain.permutation)


def dark_mode_residual(cfg: EnsembleConfig, chain: ModeChain | None = None) -> float:
    diff = dark_mode_direct(cfg) - dark_mode_chain(cfg, chain)
    return float(np.linalg.norm(diff))


def propagated_covariance(cfg: EnsembleConfig, chain: ModeChain | None = None) -> np.ndarray:
    """Steady-state a-quadrature covariance by cooling C_1 in the collective frame.

    Starts from the vacuum in the a-frame, moves to the C-frame, replaces the
    C_1 rows and columns by vacuum values and maps back.  Original mode order.
    """
    chain = chain or build_transforms(cfg)
    M = cfg.M
    S = chain.squeeze_matrix()
    gamma_c = chain.R @ S @ S.T @ chain.R.T
    for idx in (0, M):
        gamma_c[idx, :] = 0.0
        gamma_c[:, idx] = 0.0
        gamma_c[idx, idx] = 1.0
    gamma_b = chain.R_inv @ gamma_c @ chain.R_inv.T
    S_inv = np.linalg.inv(S)
    gamma_a_perm = S_inv @ gamma_b @ S_inv.T
    full = np.concatenate([chain.permutation, M + chain.permutation])
    out = np.empty_like(gamma_a_perm)
    out[np.ix_(full, full)] = gamma_a_perm
    return 0.5 * (out + out.T)
