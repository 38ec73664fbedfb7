"""Finite-N collective-decay simulator in the product Dicke basis.

Each ensemble is a maximal-spin ladder of dimension N_j + 1 ordered by
descending S^z.  The master equation has a single jump operator

    D = i Omega / Gamma + sum_j c_j S_j^-,

with rate Gamma.  Three steady-state routes are provided:

* ``time-evolution``: integrate from the rotated product state until the
  per-window change (with a geometric tail estimate) falls below ``tol``;
* ``null-space``: kernel of the dense Liouvillian, projected with the left
  kernel onto the initial state (small systems only);
* ``projection``: uniform |c_j| only.  The gauge-fixed collective spin
  J~^- = sum_j sgn(c_j) S_j^- is conserved in total length, D acts as a shifted
  ladder on each J-sector, and the sector steady state is (D_J^+ D_J)^{-1}
  normalized (or the sector ground state when Omega = 0).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm, null_space, solve_triangular
from scipy.sparse.linalg import expm_multiply

from .errors import (
    DegenerateFrame,
    DimensionCap,
    DomainError,
    NonConvergence,
    NonIntegralPopulation,
    StabilityError,
)
from .model import EnsembleConfig
from .potential import curvature, equilibrium_drive

DEFAULT_DIM_CAP = 4096
NULL_SPACE_LIMIT = 10_000
DENSE_PROPAGATOR_LIMIT = 4096
INTEGRAL_TOL = 1e-9
METHODS = ("time-evolution", "null-space", "projection")


def dim_cap() -> int:
    raw = os.environ.get("SRM_DIM_CAP")
    if raw is None:
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise DomainError(f"SRM_DIM_CAP must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise DomainError("SRM_DIM_CAP must be positive")
    return cap


def ladder_operators(n: int):
    """(S^+, S^-, S^z) for spin n/2 as dense arrays, m descending."""
    j = n / 2
    m = j - np.arange(n + 1)
    splus = np.zeros((n + 1, n + 1))
    for i in range(1, n + 1):
        splus[i - 1, i] = math.sqrt(j * (j + 1) - m[i] * (m[i] + 1))
    return splus, splus.T.copy(), np.diag(m)


@dataclass
class DickeSpace:
    dims: tuple
    total_dim: int
    operators: list
    _sectors: dict = field(default_factory=dict, repr=False)

    @property
    def M(self) -> int:
        return len(self.dims)

    def op(self, j: int, name: str):
        return self.operators[j][name]

    def m_total(self) -> np.ndarray:
        return np.real(sum(self.op(j, "z").diagonal() for j in range(self.M)))


def _embed(a, k: int, dims) -> sp.csr_matrix:
    out = sp.identity(1, format="csr")
    for l, d in enumerate(dims):
        factor = sp.csr_matrix(a) if l == k else sp.identity(d, format="csr")
        out = sp.kron(out, factor, format="csr")
    return out


def particle_numbers(cfg: EnsembleConfig) -> np.ndarray:
    pops = cfg.populations
    rounded = np.rint(pops)
    if np.any(np.abs(pops - rounded) > INTEGRAL_TOL) or np.any(rounded < 1):
        raise NonIntegralPopulation(f"N * eta = {pops.tolist()} is not integral")
    return rounded.astype(int)


def build_space(cfg: EnsembleConfig) -> DickeSpace:
    ns = particle_numbers(cfg)
    dims = tuple(int(n + 1) for n in ns)
    total = int(np.prod(dims))
    cap = dim_cap()
    if total > cap:
        raise DimensionCap(f"Hilbert dimension {total} exceeds cap {cap}")
    ops = []
    for k, n in enumerate(ns):
        splus, sminus, sz = ladder_operators(int(n))
        p = _embed(splus, k, dims)
        m = _embed(sminus, k, dims)
        z = _embed(sz, k, dims)
        ops.append(
            {
                "+": p,
                "-": m,
                "z": z,
                "x": ((p + m) * 0.5).tocsr(),
                "y": ((p - m) * (-0.5j)).tocsr(),
            }
        )
    return DickeSpace(dims=dims, total_dim=total, operators=ops)


def jump_operator(space: DickeSpace, cfg: EnsembleConfig, omega: float) -> sp.csr_matrix:
    d = space.total_dim
    D = sp.identity(d, format="csr", dtype=complex) * (1j * omega / cfg.gamma)
    for j in range(space.M):
        D = D + cfg.c[j] * space.op(j, "-")
    return D.tocsr()


class Liouvillian:
    """Lindblad generator with a single jump operator, acting on d x d arrays."""

    def __init__(self, D: sp.csr_matrix, gamma: float):
        self.D = D.tocsr()
        self.Dh = self.D.conj().T.tocsr()
        self.K = (self.Dh @ self.D).tocsr()
        self.gamma = gamma
        self.dim = D.shape[0]

    def apply(self, rho: np.ndarray) -> np.ndarray:
        Drho = self.D @ rho
        jump = (self.D @ Drho.conj().T).conj().T
        Krho = self.K @ rho
        return self.gamma * (jump - 0.5 * (Krho + Krho.conj().T))

    def sparse(self) -> sp.csr_matrix:
        """Superoperator in row-major vectorization, sparse."""
        eye = sp.identity(self.dim, format="csr")
        out = (
            sp.kron(self.D, self.D.conj())
            - 0.5 * sp.kron(self.K, eye)
            - 0.5 * sp.kron(eye, self.K.T)
        )
        return (self.gamma * out).tocsr()

    def dense(self) -> np.ndarray:
        """Superoperator in row-major vectorization."""
        D = self.D.toarray()
        K = self.K.toarray()
        eye = np.eye(self.dim)
        return self.gamma * (
            np.kron(D, D.conj()) - 0.5 * np.kron(K, eye) - 0.5 * np.kron(eye, K.T)
        )


def build_liouvillian(space: DickeSpace, cfg: EnsembleConfig, omega: float) -> Liouvillian:
    return Liouvillian(jump_operator(space, cfg, omega), cfg.gamma)


def initial_state(space: DickeSpace, cfg: EnsembleConfig) -> np.ndarray:
    """Product of exp(-i c_j theta S_j^x) applied to each ensemble's lowest state."""
    psi = np.ones(1, dtype=complex)
    for j, d in enumerate(space.dims):
        splus, sminus, _ = ladder_operators(d - 1)
        sx = 0.5 * (splus + sminus)
        g = np.zeros(d, dtype=complex)
        g[-1] = 1.0
        psi = np.kron(psi, expm(-1j * cfg.c[j] * cfg.theta * sx) @ g)
    return psi


@dataclass(frozen=True)
class SteadyStateResult:
    rho: np.ndarray
    bloch: np.ndarray
    xi2_N: np.ndarray
    lambda_min_N: float
    residual: float
    method: str
    kernel_dim: int | None = None

    def to_dict(self) -> dict:
        return {
            "bloch": self.bloch.tolist(),
            "xi2_N": self.xi2_N.tolist(),
            "lambda_min_N": self.lambda_min_N,
            "residual": self.residual,
            "method": self.method,
            "kernel_dim": self.kernel_dim,
        }


def expectation(rho: np.ndarray, op) -> complex:
    if sp.issparse(op):
        return complex(op.multiply(rho.T).sum())
    return complex(np.sum(op * rho.T))


def trace_norm(mat: np.ndarray) -> float:
    herm = 0.5 * (mat + mat.conj().T)
    if np.allclose(herm, mat, atol=1e-14 * max(1.0, np.abs(mat).max())):
        return float(np.sum(np.abs(np.linalg.eigvalsh(herm))))
    return float(np.sum(np.linalg.svd(mat, compute_uv=False)))


def bloch_vectors(space: DickeSpace, rho: np.ndarray) -> np.ndarray:
    return np.array(
        [
            [expectation(rho, space.op(j, a)).real for a in ("x", "y", "z")]
            for j in range(space.M)
        ]
    )


def _frames(bloch, cfg, ns, frame):
    """Per-ensemble (measured axis, mean-spin length along the frame Z)."""
    xhat = np.array([1.0, 0.0, 0.0])
    out = []
    for j, vec in enumerate(bloch):
        length = np.linalg.norm(vec)
        if length < 1e-6 * ns[j]:
            raise DegenerateFrame(f"mean spin of ensemble {j} has length {length:.3e}")
        if frame == "mean-spin":
            z = vec / length
            norm_z = length
        elif frame == "nominal":
            a = cfg.c[j] * cfg.theta
            z = np.array([0.0, math.sin(a), -math.cos(a)])
            norm_z = abs(vec @ z)
            if norm_z < 1e-6 * ns[j]:
                raise DegenerateFrame(f"ensemble {j} has no mean spin along the nominal axis")
        else:
            raise DomainError(f"unknown frame {frame!r}")
        y = xhat - (xhat @ z) * z
        ny = np.linalg.norm(y)
        if ny < 1e-9:
            raise DegenerateFrame(f"mean spin of ensemble {j} lies along the measured axis")
        out.append((y / ny, norm_z))
    return out


def finite_squeezing_matrix(
    rho: np.ndarray,
    space: DickeSpace,
    cfg: EnsembleConfig,
    frame: str = "mean-spin",
    bloch: np.ndarray | None = None,
):
    """(xi2_N, lambda_min_N) from the steady-state second moments.

    The measured component of ensemble j is x^ with its projection on the
    frame Z removed; that is the axis untouched by the preparation rotation.
    """
    ns = particle_numbers(cfg)
    if bloch is None:
        bloch = bloch_vectors(space, rho)
    frames = _frames(bloch, cfg, ns, frame)
    sy_ops = []
    means = []
    for j, (axis, _) in enumerate(frames):
        op = (
            axis[0] * space.op(j, "x") + axis[1] * space.op(j, "y") + axis[2] * space.op(j, "z")
        ).tocsr()
        sy_ops.append(op)
        means.append(expectation(rho, op).real)
    M = space.M
    xi2 = np.zeros((M, M))
    for a in range(M):
        for b in range(a, M):
            second = expectation(rho, sy_ops[a] @ sy_ops[b]).real
            if a != b:
                second = 0.5 * (second + expectation(rho, sy_ops[b] @ sy_ops[a]).real)
            cov = second - means[a] * means[b]
            val = math.sqrt(ns[a] * ns[b]) * cov / (frames[a][1] * frames[b][1])
            xi2[a, b] = xi2[b, a] = val
    return xi2, float(np.linalg.eigvalsh(xi2)[0])


# ---- steady-state solvers ---------------------------------------------------


def _uniform_signs(cfg: EnsembleConfig):
    mags = np.abs(cfg.c)
    if not np.allclose(mags, mags[0], rtol=0, atol=1e-12):
        return None
    return np.sign(cfg.c).astype(int)


def _sectors(space: DickeSpace, signs) -> list:
    """[(J, mult, W)] with W columns |J, m, alpha> ordered m-major, m descending."""
    key = tuple(int(s) for s in signs)
    if key in space._sectors:
        return space._sectors[key]
    jplus = sum(s * space.op(j, "+") for j, s in enumerate(signs)).tocsc()
    jminus = jplus.conj().T.tocsr()
    mtot = space.m_total()
    jmax = float(np.max(mtot))
    sectors = []
    J = jmax
    while J >= -1e-9:
        cols = np.flatnonzero(np.abs(mtot - J) < 1e-9)
        rows = np.flatnonzero(np.abs(mtot - (J + 1)) < 1e-9)
        if rows.size:
            block = jplus[rows][:, cols].toarray()
            hw = null_space(block)
        else:
            hw = np.eye(cols.size)
        mult = hw.shape[1]
        if mult:
            nm = int(round(2 * J)) + 1
            W = np.zeros((space.total_dim, nm * mult), dtype=complex)
            cur = np.zeros((space.total_dim, mult), dtype=complex)
            cur[cols] = hw
            for k in range(nm):
                W[:, k * mult : (k + 1) * mult] = cur
                if k + 1 < nm:
                    m = J - k
                    cur = (jminus @ cur) / math.sqrt(J * (J + 1) - m * (m - 1))
            sectors.append((J, mult, W))
        J -= 1.0
    space._sectors[key] = sectors
    return sectors


def _ladder_steady_state(J: float, omega: float, gamma: float, scale: float) -> np.ndarray:
    """Steady state of i omega/gamma + scale * J^- on a single spin-J ladder."""
    nm = int(round(2 * J)) + 1
    m = J - np.arange(nm)
    sub = np.sqrt(J * (J + 1) - m[:-1] * (m[:-1] - 1))
    if omega == 0:
        sigma = np.zeros((nm, nm), dtype=complex)
        sigma[-1, -1] = 1.0
        return sigma
    DJ = np.diag(np.full(nm, 1j * omega / gamma)) + np.diag(scale * sub, -1)
    X = solve_triangular(DJ, np.eye(nm), lower=True)
    sigma = X @ X.conj().T
    if not np.all(np.isfinite(sigma)):
        raise NonConvergence("ladder steady state overflowed")
    return sigma / np.trace(sigma).real


def _projection(space, cfg, omega, psi0):
    signs = _uniform_signs(cfg)
    if signs is None:
        raise DomainError("projection method requires couplings of equal magnitude")
    scale = abs(cfg.c[0])
    rho = np.zeros((space.total_dim, space.total_dim), dtype=complex)
    for J, mult, W in _sectors(space, signs):
        nm = W.shape[1] // mult
        coeff = (W.conj().T @ psi0).reshape(nm, mult)
        tau = coeff.T @ coeff.conj()
        weight = np.trace(tau).real
        if weight < 1e-15:
            continue
        sigma = _ladder_steady_state(J, omega, cfg.gamma, scale)
        rho += W @ np.kron(sigma, tau) @ W.conj().T
    return rho


def _null_space(space, cfg, omega, psi0):
    d = space.total_dim
    if d * d > NULL_SPACE_LIMIT:
        raise DimensionCap(f"null-space solver limited to d^2 <= {NULL_SPACE_LIMIT}, got {d * d}")
    L = build_liouvillian(space, cfg, omega).dense()
    scale = max(1.0, np.abs(L).max())
    right = null_space(L, rcond=1e-10)
    left = null_space(L.conj().T, rcond=1e-10)
    if right.shape[1] != left.shape[1] or right.shape[1] == 0:
        raise NonConvergence("inconsistent Liouvillian kernel", residual=scale)
    rho0 = np.outer(psi0, psi0.conj()).reshape(-1)
    coef = np.linalg.solve(left.conj().T @ right, left.conj().T @ rho0)
    rho = (right @ coef).reshape(d, d)
    return rho, right.shape[1]


def _time_evolution(space, cfg, omega, psi0, tol, max_windows):
    """Propagate in windows starting at 1/(C N Gamma).

    Each window applies the exact propagator exp(L t) (dense for small
    spaces, Krylov-free truncated Taylor action otherwise).  The window
    doubles, up to 2^14 times the base, while successive changes shrink by
    less than half, so slow near-dark modes are reached in a bounded number
    of windows.  Convergence needs both the last change and its geometric
    tail below ``tol``.
    """
    C = curvature(cfg, cfg.theta)
    if C <= 0:
        raise StabilityError(f"curvature {C!r} is not positive")
    base = 1.0 / (C * cfg.N * cfg.gamma)
    window = base
    liou = build_liouvillian(space, cfg, omega)
    d = space.total_dim
    dense = d * d <= DENSE_PROPAGATOR_LIMIT
    gen = liou.dense() if dense else liou.sparse()
    propagators = {}

    def step(vec, dt):
        if not dense:
            return expm_multiply(gen * dt, vec)
        if dt not in propagators:
            propagators[dt] = expm(gen * dt)
        return propagators[dt] @ vec

    y = np.outer(psi0, psi0.conj()).reshape(-1)
    prev = None
    delta = np.inf
    for _ in range(max_windows):
        y_new = step(y, window)
        if not np.all(np.isfinite(y_new)):
            raise NonConvergence("propagation produced non-finite values")
        delta = trace_norm((y_new - y).reshape(d, d))
        y = y_new
        if delta < 1e-3 * tol:
            break
        if prev is not None and prev > 0:
            q = delta / prev
            tail = delta * q / (1 - q) if q < 1 else np.inf
            if delta < tol and tail < tol:
                break
            if q > 0.5 and window < base * 2**14:
                window *= 2
                prev = None
                continue
        prev = delta
    else:
        raise NonConvergence(
            f"no convergence after {max_windows} windows", residual=delta
        )
    return y.reshape(d, d)


def steady_state(
    space: DickeSpace,
    cfg: EnsembleConfig,
    omega: float | None = None,
    method: str = "time-evolution",
    tol: float = 1e-10,
    frame: str = "mean-spin",
    max_windows: int = 5_000,
) -> SteadyStateResult:
    """Steady state reached from the rotated product state.

    ``omega`` defaults to the equilibrium drive of ``cfg.theta``.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; choose from {METHODS}")
    if omega is None:
        omega = equilibrium_drive(cfg, cfg.theta)
    psi0 = initial_state(space, cfg)
    kernel_dim = None
    if method == "projection":
        rho = _projection(space, cfg, omega, psi0)
    elif method == "null-space":
        rho, kernel_dim = _null_space(space, cfg, omega, psi0)
    else:
        rho = _time_evolution(space, cfg, omega, psi0, tol, max_windows)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    liou = build_liouvillian(space, cfg, omega)
    residual = trace_norm(liou.apply(rho))
    bloch = bloch_vectors(space, rho)
    try:
        xi2, lam = finite_squeezing_matrix(rho, space, cfg, frame=frame, bloch=bloch)
    except DegenerateFrame:
        xi2 = np.full((space.M, space.M), np.nan)
        lam = float("nan")
    return SteadyStateResult(
        rho=rho,
        bloch=bloch,
        xi2_N=xi2,
        lambda_min_N=lam,
        residual=residual,
        method=method,
        kernel_dim=kernel_dim,
    )


# ---- finite-size sweep ------------------------------------------------------


def default_theta_grid(M: int, points: int = 40, c_lo: float = 0.02, c_hi: float = 0.98):
    """theta values whose uniform-coupling curvature spans [c_lo, c_hi]."""
    curv = np.linspace(c_hi, c_lo, points)
    return math.sqrt(M) * np.arccos(curv)


@dataclass(frozen=True)
class SweepPoint:
    N: int
    theta: float
    curvature: float
    lambda_min_N: float
    residual: float
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    points: list
    lambda_min: dict
    alpha: float
    Ns: tuple
    onset: dict


def onset_curvature(curv, lam, rel: float = 0.1) -> float:
    """Smallest curvature such that every grid point at or above it is within ``rel``."""
    order = np.argsort(curv)[::-1]
    best = np.nan
    for i in order:
        if not np.isfinite(lam[i]) or abs(lam[i] - curv[i]) / curv[i] > rel:
            break
        best = curv[i]
    return float(best)


def fit_exponent(Ns, values) -> float:
    Ns = np.asarray(Ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if Ns.size < 2:
        raise DomainError("at least two particle numbers are required to fit an exponent")
    slope, _ = np.polyfit(np.log(Ns), np.log(values), 1)
    return float(slope)


def scaling_sweep(
    Ns,
    theta_grid,
    cfg_template: EnsembleConfig,
    method: str = "projection",
    frame: str = "mean-spin",
    tol: float = 1e-8,
) -> SweepResult:
    Ns = tuple(int(n) for n in Ns)
    if len(Ns) < 2:
        raise DomainError("scaling sweep needs at least two particle numbers")
    points = []
    per_n = {}
    onset = {}
    for N in Ns:
        base = EnsembleConfig(
            M=cfg_template.M,
            N=N,
            eta=cfg_template.eta,
            c=cfg_template.c,
            theta=cfg_template.theta,
            gamma=cfg_template.gamma,
        )
        space = build_space(base)
        curv, lams = [], []
        for theta in theta_grid:
            cfg = base.with_theta(float(theta))
            C = curvature(cfg, cfg.theta)
            try:
                res = steady_state(space, cfg, method=method, tol=tol, frame=frame)
                pt = SweepPoint(N, float(theta), C, res.lambda_min_N, res.residual)
            except (NonConvergence, StabilityError, DegenerateFrame) as exc:
                pt = SweepPoint(N, float(theta), C, float("nan"), float("nan"), str(exc))
            points.append(pt)
            curv.append(C)
            lams.append(pt.lambda_min_N)
        lams = np.array(lams)
        per_n[N] = float(np.nanmin(lams)) if np.any(np.isfinite(lams)) else float("nan")
        onset[N] = onset_curvature(np.array(curv), lams)
    alpha = fit_exponent(Ns, [per_n[n] for n in Ns])
    return SweepResult(points=points, lambda_min=per_n, alpha=alpha, Ns=Ns, onset=onset)
