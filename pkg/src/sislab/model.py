"""Stochastic SIS epidemic model: coefficients and regime thresholds.

The infected count I follows

    dI = I (beta N - mu - gamma - beta I) dt + sigma I (N - I) dW

on the open interval (0, N). The integrator works on the transformed state
X = log I, whose drift f and diffusion g are polynomials in e^x; everything
here is expressed through that pair plus the thresholds that decide whether a
parameter set sits in the extinction or the persistence regime.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ExtinctionCase",
    "ModelParams",
    "PreconditionError",
    "RegimeReport",
    "diffusion_original",
    "drift_original",
    "extinction_case",
    "f",
    "f_max_sigma",
    "g",
    "g_prime",
    "gg_prime",
    "log_coeffs",
    "persistence_alpha_bound",
    "persistence_lambda",
    "regime_report",
    "reproduction_numbers",
]


class PreconditionError(Exception):
    """A computation was asked for outside its parameter regime."""


@dataclass(frozen=True)
class ModelParams:
    """Model constants: population N, contact rate beta, noise intensity
    sigma, combined recovery/death rate mu + gamma, and initial infected I0."""

    N: float
    beta: float
    sigma: float
    mu_plus_gamma: float
    I0: float

    def __post_init__(self):
        if not self.N > 0:
            raise ValueError("N must be positive")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.mu_plus_gamma > 0:
            raise ValueError("mu_plus_gamma must be positive")
        if not 0.0 < self.I0 < self.N:
            raise ValueError("I0 must lie in (0, N)")


class ExtinctionCase(enum.Enum):
    """Which sigma condition of the extinction theorem holds, if any."""

    SMALL_SIGMA = "small"    # sigma^2 <= beta / N
    LARGE_SIGMA = "large"    # sigma^2 > max(beta / N, beta^2 / (2 (mu + gamma)))
    NEITHER = "neither"


def drift_original(I, p):
    """Drift of the untransformed equation, I (beta N - mu - gamma - beta I)."""
    return I * (p.beta * p.N - p.mu_plus_gamma - p.beta * I)


def diffusion_original(I, p):
    """Diffusion of the untransformed equation, sigma I (N - I)."""
    return p.sigma * I * (p.N - I)


def log_coeffs(x, p):
    """Drift, diffusion, and Milstein correction of the log-transformed state.

    Returns (f(x), g(x), (g g')(x)) sharing a single exponential evaluation,
    which is what makes the stepping kernels cheap. Inputs go through
    ``np.asarray`` so scalars and batches follow the identical code path.
    """
    x = np.asarray(x, dtype=np.float64)
    ex = np.exp(x)
    s2 = p.sigma * p.sigma
    c0 = p.beta * p.N - p.mu_plus_gamma - 0.5 * s2 * p.N * p.N
    fx = (-0.5 * s2 * ex + (s2 * p.N - p.beta)) * ex + c0
    gx = p.sigma * (p.N - ex)
    ggx = -s2 * ex * (p.N - ex)
    return fx, gx, ggx


def f(x, p):
    return log_coeffs(x, p)[0]


def g(x, p):
    return log_coeffs(x, p)[1]


def g_prime(x, p):
    return -p.sigma * np.exp(np.asarray(x, dtype=np.float64))


def gg_prime(x, p):
    return log_coeffs(x, p)[2]


def reproduction_numbers(p):
    """Deterministic and stochastic basic reproduction numbers (R0^D, R0^S)."""
    r0d = p.beta * p.N / p.mu_plus_gamma
    r0s = r0d - p.sigma**2 * p.N**2 / (2.0 * p.mu_plus_gamma)
    return r0d, r0s


def extinction_case(p):
    """Classify sigma against the two extinction conditions.

    The split is purely about sigma; whether extinction actually holds also
    needs R0^S < 1, which f_max_sigma enforces.
    """
    s2 = p.sigma**2
    if s2 <= p.beta / p.N:
        return ExtinctionCase.SMALL_SIGMA
    if s2 > max(p.beta / p.N, p.beta**2 / (2.0 * p.mu_plus_gamma)):
        return ExtinctionCase.LARGE_SIGMA
    return ExtinctionCase.NEITHER


def f_max_sigma(p):
    """Upper bound of f over (-inf, log N): the almost-sure decay rate of
    log I_t / t in the extinction regime."""
    _, r0s = reproduction_numbers(p)
    if r0s >= 1.0:
        raise PreconditionError(
            f"R0^S = {r0s:g} >= 1: extinction bound requires R0^S < 1")
    case = extinction_case(p)
    if case is ExtinctionCase.SMALL_SIGMA:
        return p.beta * p.N - p.mu_plus_gamma - 0.5 * p.sigma**2 * p.N**2
    if case is ExtinctionCase.LARGE_SIGMA:
        return p.beta**2 / (2.0 * p.sigma**2) - p.mu_plus_gamma
    raise PreconditionError(
        "no extinction case applies: sigma^2 lies strictly between beta/N "
        "and beta^2/(2(mu+gamma))")


def _persistence_residual(lam, p):
    return (p.beta * p.N - p.mu_plus_gamma - p.beta * lam
            - 0.5 * p.sigma**2 * (p.N - lam) ** 2)


def persistence_lambda(p, tol=1e-12, max_iter=200):
    """Root of beta N - mu - gamma - beta lam - sigma^2 (N - lam)^2 / 2 in (0, N).

    The residual is concave in lam, positive at 0 exactly when R0^S > 1, and
    equals -(mu + gamma) at N, so plain bisection is safe. Iterates until the
    residual is within tol.
    """
    _, r0s = reproduction_numbers(p)
    if r0s <= 1.0:
        raise PreconditionError(
            f"R0^S = {r0s:g} <= 1: persistence level requires R0^S > 1")
    lo, hi = 0.0, float(p.N)
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        val = _persistence_residual(mid, p)
        if abs(val) <= tol:
            break
        if val > 0.0:
            lo = mid
        else:
            hi = mid
    return mid


def persistence_alpha_bound(p, h, theta):
    """Largest admissible truncation coefficient alpha for the persistence
    theorem at step size h and exponent theta."""
    _, r0s = reproduction_numbers(p)
    if r0s <= 1.0:
        raise PreconditionError(
            f"R0^S = {r0s:g} <= 1: bound only defined in the persistence regime")
    s2 = p.sigma**2
    # R0^S > 1 forces beta^2 - 2 sigma^2 (mu+gamma) >= (beta - sigma^2 N)^2 >= 0
    rad = p.beta**2 - 2.0 * s2 * p.mu_plus_gamma
    denom = s2 * p.N - p.beta + math.sqrt(rad)
    return h**-theta * math.log(s2 * p.N / denom)


@dataclass(frozen=True)
class RegimeReport:
    """Summary of which long-run theorem (if either) covers a parameter set."""

    r0_deterministic: float
    r0_stochastic: float
    extinction_case: ExtinctionCase
    f_max_sigma: float | None
    persistence_lambda: float | None


def regime_report(p):
    r0d, r0s = reproduction_numbers(p)
    case = extinction_case(p)
    fmax = None
    lam = None
    if r0s < 1.0 and case is not ExtinctionCase.NEITHER:
        fmax = f_max_sigma(p)
    elif r0s > 1.0:
        lam = persistence_lambda(p)
    return RegimeReport(r0_deterministic=r0d, r0_stochastic=r0s,
                        extinction_case=case, f_max_sigma=fmax,
                        persistence_lambda=lam)
