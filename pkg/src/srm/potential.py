"""Superradiance potential, drive calibration and mean-field angle dynamics.

The Bloch vector of ensemble j sits at angle c_j * theta in the y-z plane.
The angle obeys

    dtheta/dt = Omega - (N Gamma / 2) sum_j c_j eta_j sin(c_j theta)
              = -N Gamma dV/dtheta,

    V(theta) = -1/2 sum_j eta_j cos(c_j theta) - Omega theta / (N Gamma).

Inside the integrator time is measured in units of 1/(N Gamma).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, StepFailure
from .model import EnsembleConfig

ROOT_XTOL = 1e-12
DEFAULT_GRID = 2048


@dataclass(frozen=True)
class DarkStateSpec:
    theta_star: float
    omega: float
    curvature: float


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")


def potential_value(cfg: EnsembleConfig, theta, omega: float):
    theta = np.asarray(theta, dtype=float)
    cos_terms = np.cos(np.multiply.outer(theta, cfg.c))
    return -0.5 * cos_terms @ cfg.eta - omega * theta / (cfg.N * cfg.gamma)


def potential_gradient(cfg: EnsembleConfig, theta, omega: float):
    """dV/dtheta, evaluated analytically."""
    theta = np.asarray(theta, dtype=float)
    sin_terms = np.sin(np.multiply.outer(theta, cfg.c))
    return 0.5 * sin_terms @ (cfg.eta * cfg.c) - omega / (cfg.N * cfg.gamma)


def equilibrium_drive(cfg: EnsembleConfig, theta: float) -> float:
    """Rabi frequency that makes ``theta`` stationary: (Gamma/2) sum N_j c_j sin(c_j theta)."""
    s = np.sin(cfg.c * theta)
    return float(0.5 * cfg.gamma * np.sum(cfg.populations * cfg.c * s))


def curvature(cfg: EnsembleConfig, theta) -> float:
    """Signed curvature M sum_j eta_j c_j^2 cos(c_j theta)."""
    cos_terms = np.cos(np.multiply.outer(np.asarray(theta, dtype=float), cfg.c))
    out = cfg.M * (cos_terms @ (cfg.eta * cfg.c**2))
    return float(out) if np.ndim(out) == 0 else out


def theta_rate(cfg: EnsembleConfig, theta, omega: float):
    """Mean-field angular velocity dtheta/dt (physical time)."""
    theta = np.asarray(theta, dtype=float)
    sin_terms = np.sin(np.multiply.outer(theta, cfg.c))
    return omega - 0.5 * cfg.N * cfg.gamma * (sin_terms @ (cfg.c * cfg.eta))


def mean_field_evolve(
    cfg: EnsembleConfig,
    theta0: float,
    omega: float,
    t_end: float,
    tol: float = 1e-10,
) -> Trajectory:
    """Integrate the scalar angle equation from 0 to ``t_end`` (units 1/(N Gamma))."""
    if tol <= 0:
        raise DomainError("tol must be positive")
    if t_end <= 0:
        raise DomainError("t_end must be positive")
    scale = cfg.N * cfg.gamma

    def rhs(_, y):
        return [theta_rate(cfg, y[0], omega) / scale]

    sol = solve_ivp(
        rhs, (0.0, t_end), [theta0], method="RK45", rtol=tol, atol=tol * 1e-3
    )
    if sol.status != 0:
        raise StepFailure(f"mean-field integration failed: {sol.message}")
    return Trajectory(times=sol.t, values=sol.y[0])


def find_minima(
    cfg: EnsembleConfig,
    omega: float,
    theta_range: tuple[float, float],
    grid: int = DEFAULT_GRID,
) -> list[DarkStateSpec]:
    """Stable equilibria (dtheta/dt = 0, curvature > 0) inside ``theta_range``.

    Roots are bracketed by sign changes of dtheta/dt on a uniform grid and
    refined with Brent's method.  Neutral points (zero curvature) are excluded.
    """
    if grid < 2:
        raise DomainError("grid must have at least two points")
    lo, hi = map(float, theta_range)
    if not hi > lo:
        raise DomainError("theta_range must be an increasing interval")

    def f(t):
        return float(theta_rate(cfg, t, omega))

    xs = np.linspace(lo, hi, grid)
    fs = theta_rate(cfg, xs, omega)
    roots = []
    for i in range(grid):
        if fs[i] == 0:
            roots.append(xs[i])
        elif i + 1 < grid and fs[i + 1] != 0 and (fs[i] > 0) != (fs[i + 1] > 0):
            roots.append(brentq(f, xs[i], xs[i + 1], xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps))
    minima = []
    for t in roots:
        k = curvature(cfg, t)
        if k > 0:
            minima.append(DarkStateSpec(theta_star=float(t), omega=omega, curvature=k))
    return minima
