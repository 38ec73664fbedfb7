"""System configurations and task vectors.

An :class:`EnsembleConfig` holds the ensemble count ``M``, the total particle
number ``N``, population fractions ``eta``, relative couplings ``c``, the
collective rotation angle ``theta`` and the decay rate ``gamma``.  Every other
module consumes it.  Rates are expressed in units of ``gamma``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DomainError, NormalizationError

NORM_TOL = 1e-12

_CONFIG_FIELDS = ("M", "N", "eta", "c", "theta", "gamma")


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EnsembleConfig:
    M: int
    N: int
    eta: np.ndarray
    c: np.ndarray
    theta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "eta", _frozen_array(self.eta))
        object.__setattr__(self, "c", _frozen_array(self.c))
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "gamma", float(self.gamma))

    @property
    def populations(self) -> np.ndarray:
        """Particle numbers N_j = N * eta_j (real-valued)."""
        return self.N * self.eta

    def with_theta(self, theta: float) -> "EnsembleConfig":
        return replace(self, theta=theta)

    def to_dict(self) -> dict:
        return {
            "M": int(self.M),
            "N": int(self.N),
            "eta": [float(x) for x in self.eta],
            "c": [float(x) for x in self.c],
            "theta": self.theta,
            "gamma": self.gamma,
        }

    def digest(self) -> str:
        """Stable SHA-256 of the canonical JSON form."""
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleConfig":
        """Parse the JSON config schema; unknown or missing fields are rejected."""
        if not isinstance(data, dict):
            raise DomainError("config must be a JSON object")
        extra = sorted(set(data) - set(_CONFIG_FIELDS))
        if extra:
            raise DomainError(f"unknown config fields: {extra}")
        missing = [k for k in ("M", "N", "eta", "c") if k not in data]
        if missing:
            raise DomainError(f"missing config fields: {missing}")
        for key in ("M", "N"):
            if isinstance(data[key], bool) or not isinstance(data[key], int):
                raise DomainError(f"{key} must be an integer")
        cfg = cls(
            M=data["M"],
            N=data["N"],
            eta=data["eta"],
            c=data["c"],
            theta=data.get("theta", 0.0),
            gamma=data.get("gamma", 1.0),
        )
        return validate_config(cfg)


def validate_config(cfg: EnsembleConfig) -> EnsembleConfig:
    """Return ``cfg`` unchanged if every invariant holds, otherwise raise.

    Normalization drift is reported, never repaired.
    """
    if isinstance(cfg.M, bool) or int(cfg.M) != cfg.M or cfg.M < 1:
        raise DomainError(f"M must be a positive integer, got {cfg.M!r}")
    if isinstance(cfg.N, bool) or int(cfg.N) != cfg.N or cfg.N < 1:
        raise DomainError(f"N must be a positive integer, got {cfg.N!r}")
    if cfg.eta.shape != (cfg.M,) or cfg.c.shape != (cfg.M,):
        raise DomainError(
            f"eta and c must have length M={cfg.M}, "
            f"got {cfg.eta.shape[0]} and {cfg.c.shape[0]}"
        )
    if not (np.all(np.isfinite(cfg.eta)) and np.all(np.isfinite(cfg.c))):
        raise DomainError("eta and c must be finite")
    if not (math.isfinite(cfg.theta) and math.isfinite(cfg.gamma)):
        raise DomainError("theta and gamma must be finite")
    if np.any(cfg.eta <= 0):
        raise DomainError("population fractions must be strictly positive")
    if np.any(cfg.c == 0):
        raise DomainError("couplings must be non-zero")
    if cfg.gamma <= 0:
        raise DomainError("decay rate gamma must be positive")
    eta_sum = math.fsum(cfg.eta)
    if abs(eta_sum - 1.0) > NORM_TOL:
        raise NormalizationError(f"sum(eta) = {eta_sum!r}, expected 1")
    c_sq = math.fsum(cfg.c**2)
    if abs(c_sq - 1.0) > NORM_TOL:
        raise NormalizationError(f"sum(c**2) = {c_sq!r}, expected 1")
    return cfg


@dataclass(frozen=True)
class TaskVector:
    """Unit estimation direction n over the M phases."""

    n: np.ndarray = field()

    def __post_init__(self):
        arr = _frozen_array(self.n)
        if arr.size == 0 or not np.all(np.isfinite(arr)):
            raise DomainError("task vector must be a non-empty finite vector")
        norm = math.sqrt(math.fsum(arr**2))
        if abs(norm - 1.0) > NORM_TOL:
            raise DomainError(f"task vector must have unit norm, got {norm!r}")
        object.__setattr__(self, "n", arr)

    @classmethod
    def normalized(cls, raw: Sequence[float]) -> "TaskVector":
        arr = np.asarray(raw, dtype=float)
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise DomainError("cannot normalize the zero vector")
        return cls(arr / norm)

    def __len__(self):
        return self.n.shape[0]


def config_from_task(
    n: TaskVector, M: int, N: int, theta: float, gamma: float = 1.0
) -> EnsembleConfig:
    """Uniform-coupling configuration tailored to the task vector ``n``.

    eta_j = |n_j| / sum|n_k| and c_j = sgn(n_j) / sqrt(M).  This places the
    transformed task direction on the minimal eigenvector of the squeezing
    matrix and realizes the Lagrange-optimal particle split.
    """
    if not isinstance(n, TaskVector):
        n = TaskVector(n)
    if len(n) != M:
        raise DomainError(f"task vector has {len(n)} components, expected M={M}")
    if np.any(n.n == 0):
        raise DomainError("task vectors with zero components are not supported")
    a = np.abs(n.n)
    eta = a / math.fsum(a)
    c = np.sign(n.n) / math.sqrt(M)
    cfg = EnsembleConfig(M=M, N=N, eta=eta, c=c, theta=theta, gamma=gamma)
    return validate_config(cfg)
