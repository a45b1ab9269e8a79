"""Sequentially-learned directional sampling for local tree growth.

A local sampler draws unit step directions from a von Mises-Fisher prior
multiplied by failure-suppression likelihood factors: each previously failed
direction x' contributes a factor (1 - beta * k(x, x')), with k a periodic
squared-exponential kernel on the angle between directions. Successes reset
the failure memory and re-center the prior on the successful direction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cspace import ContractError, TWO_PI

DEFAULT_SIGMA = 1.0
DEFAULT_LENGTH_SCALE = 0.7
DEFAULT_BETA = 1.0
DEFAULT_SUCCESS_KAPPA = 2.0
DEFAULT_MAX_DRAW_ATTEMPTS = 1000


def _unit(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = np.linalg.norm(x)
    if abs(n - 1.0) > 1e-9:
        raise ContractError(f"{name} must be unit-norm, |{name}| = {n}")
    return x


def random_unit_vector(dim: int, rng) -> np.ndarray:
    """Uniform direction on the unit sphere."""
    while True:
        v = rng.standard_normal(dim)
        n = np.linalg.norm(v)
        if n > 1e-12:
            return v / n


@dataclass
class KernelParams:
    """Periodic squared-exponential kernel on direction angles.

    sigma: output scale, lam: length scale, period: angular period,
    beta: influence of each failure factor. beta * sigma^2 <= 1 keeps every
    likelihood factor inside [0, 1]; larger values are tolerated but factors
    are clamped at zero.
    """

    sigma: float = DEFAULT_SIGMA
    lam: float = DEFAULT_LENGTH_SCALE
    period: float = TWO_PI
    beta: float = DEFAULT_BETA

    def __post_init__(self):
        if self.sigma <= 0 or self.lam <= 0 or self.period <= 0:
            raise ContractError("sigma, lam, period must be positive")
        if self.beta <= 0:
            raise ContractError("beta must be positive")
        if self.beta * self.sigma**2 > 1.0 + 1e-12:
            warnings.warn(
                "beta * sigma^2 > 1: failure factors will be clamped at 0",
                stacklevel=2,
            )


def _angles_to(x: np.ndarray, others: np.ndarray) -> np.ndarray:
    dots = np.clip(others @ x, -1.0, 1.0)
    return np.arccos(dots)


def kernel_eval(x, x_prime, params: KernelParams) -> float:
    """Kernel value between two unit directions, in (0, sigma^2]."""
    x = _unit(x, "x")
    x_prime = _unit(x_prime, "x_prime")
    ang = float(_angles_to(x, x_prime.reshape(1, -1))[0])
    s = math.sin(math.pi * ang / params.period)
    return params.sigma**2 * math.exp(-2.0 * s * s / params.lam**2)


def _kernel_many(x: np.ndarray, others: np.ndarray, params: KernelParams) -> np.ndarray:
    s = np.sin(math.pi * _angles_to(x, others) / params.period)
    return params.sigma**2 * np.exp(-2.0 * s * s / params.lam**2)


@dataclass
class DirectionalPrior:
    """von Mises-Fisher prior: mean direction mu, concentration kappa.

    kappa = 0 is the uniform distribution on the sphere.
    """

    mu: np.ndarray
    kappa: float

    def __post_init__(self):
        self.mu = _unit(self.mu, "mu")
        if self.kappa < 0:
            raise ContractError("kappa must be >= 0")


def vmf_sample(prior: DirectionalPrior, rng) -> np.ndarray:
    """One draw from vMF(mu, kappa) by tangent-normal decomposition.

    The radial component uses the standard beta-envelope rejection scheme;
    kappa = 0 short-circuits to a uniform sphere draw.
    """
    mu = prior.mu
    d = mu.size
    kappa = prior.kappa
    if kappa == 0.0:
        return random_unit_vector(d, rng)

    m = d - 1
    b = m / (math.sqrt(4.0 * kappa**2 + m * m) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + m * math.log(1.0 - x0 * x0)
    while True:
        z = rng.beta(0.5 * m, 0.5 * m)
        w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.random()
        if kappa * w + m * math.log(1.0 - x0 * w) - c >= math.log(u):
            break

    # uniform tangent direction orthogonal to mu
    while True:
        v = rng.standard_normal(d)
        v -= (v @ mu) * mu
        n = np.linalg.norm(v)
        if n > 1e-12:
            v /= n
            break
    out = v * math.sqrt(max(0.0, 1.0 - w * w)) + w * mu
    return out / np.linalg.norm(out)


@dataclass
class ProposalState:
    """Directional prior plus the failure memory conditioning it."""

    prior: DirectionalPrior
    params: KernelParams = field(default_factory=KernelParams)
    failures: list = field(default_factory=list)
    attempt: int = 1
    success_kappa: float = DEFAULT_SUCCESS_KAPPA
    max_draw_attempts: int = DEFAULT_MAX_DRAW_ATTEMPTS

    def posterior_weight(self, x) -> float:
        """Product of failure factors at direction x, in [0, 1]."""
        x = _unit(x, "x")
        if not self.failures:
            return 1.0
        ks = _kernel_many(x, np.asarray(self.failures), self.params)
        factors = np.clip(1.0 - self.params.beta * ks, 0.0, 1.0)
        return float(np.prod(factors))

    def draw_direction(self, rng) -> tuple[np.ndarray, bool]:
        """Draw a direction with density prior * failure factors.

        Rejection from the prior is exact because every factor is <= 1. After
        ``max_draw_attempts`` rejections a uniform direction is returned with
        the fallback flag set.
        """
        for _ in range(self.max_draw_attempts):
            y = vmf_sample(self.prior, rng)
            if rng.random() < self.posterior_weight(y):
                return y, False
        return random_unit_vector(self.prior.mu.size, rng), True

    def record_failure(self, x_failed) -> None:
        """Append a failed direction; the prior is unchanged."""
        self.failures.append(_unit(x_failed, "x_failed"))
        self.attempt = len(self.failures) + 1

    def record_success(self, x_success) -> None:
        """Re-center the prior on the successful direction and forget failures."""
        self.prior.mu = _unit(x_success, "x_success")
        self.prior.kappa = self.success_kappa
        self.failures.clear()
        self.attempt = 1


@dataclass
class LocalSamplerState:
    """A local tree's stateful walker: where it sits and how it proposes."""

    location: np.ndarray
    proposal: ProposalState
    has_success_yet: bool = False

    @classmethod
    def fresh(cls, location, dim: int, params: KernelParams,
              success_kappa: float = DEFAULT_SUCCESS_KAPPA,
              max_draw_attempts: int = DEFAULT_MAX_DRAW_ATTEMPTS) -> "LocalSamplerState":
        """Newly born sampler: uniform prior (kappa = 0) until its first success."""
        mu = np.zeros(dim)
        mu[0] = 1.0
        state = ProposalState(
            DirectionalPrior(mu, 0.0),
            params=params,
            success_kappa=success_kappa,
            max_draw_attempts=max_draw_attempts,
        )
        return cls(np.asarray(location, dtype=float), state)

    def record_failure(self, x_failed) -> None:
        self.proposal.record_failure(x_failed)

    def record_success(self, x_success, q_new) -> None:
        self.proposal.record_success(x_success)
        self.location = np.asarray(q_new, dtype=float)
        self.has_success_yet = True
