"""High dimensional controls: Gaussian random walks and descent on quadratic bowls."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.stats import loguniform

from landscape_probe.probing.projection import ProjectionTrace, TraceBuilder
from landscape_probe.utils.random_help import random_generator

logger = logging.getLogger(__name__)

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True)
class WalkConfig:
    """Random walk of ``steps`` standard normal increments in ``d`` dimensions.

    The position after ``solution_step`` steps plays the role of the solution.
    """

    d: int
    steps: int = 1000
    solution_step: int = 900
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d has to be at least 1, but got {self.d}")
        if not 0 < self.solution_step < self.steps:
            raise ValueError(
                f"Need 0 < solution_step < steps, got {self.solution_step} and {self.steps}"
            )


def random_walk_trace(config: WalkConfig) -> ProjectionTrace:
    """Project a Gaussian random walk onto the line from its start to its solution step.

    The walk starts at the origin. The increments are drawn twice from the
    same seed, first to locate the solution and then to project every
    position, so memory does not grow with the number of steps.

    For ``d = 1`` the residual is identically 0.

    Parameters
    ----------
    config : WalkConfig
        dimension, length and seed

    Returns
    -------
    ProjectionTrace
        ``steps + 1`` points including the start, solution at ``solution_step``
    """
    rng = random_generator(config.seed)
    theta_f = np.zeros(config.d)
    for _ in range(config.solution_step):
        theta_f += rng.standard_normal(config.d)

    builder = TraceBuilder(np.zeros(config.d), theta_f)
    rng = random_generator(config.seed)
    position = np.zeros(config.d)
    builder.add(0.0, position)
    for step in range(1, config.steps + 1):
        position += rng.standard_normal(config.d)
        builder.add(float(step), position, is_solution=step == config.solution_step)
    logger.debug(f"Random walk in {config.d} dimensions")
    return builder.build()


SPECTRUM_KINDS = ("isotropic", "log-uniform", "linear")


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues of the diagonal quadratic ``J(theta) = 1/2 theta^T D theta``.

    Attributes
    ----------
    kind: str
        ``"isotropic"`` (all eigenvalues ``high``), ``"log-uniform"`` (sampled
        log-uniformly from ``[low, high]``) or ``"linear"`` (evenly spaced)
    low: float
        smallest eigenvalue, positive
    high: float
        largest eigenvalue
    """

    kind: str = "log-uniform"
    low: float = 1e-2
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in SPECTRUM_KINDS:
            raise ValueError(f"kind has to be one of {SPECTRUM_KINDS}, but got {self.kind}")
        if not 0 < self.low <= self.high:
            raise ValueError(f"Need 0 < low <= high, got {self.low} and {self.high}")

    def eigenvalues(self, d: int, seed: Union[int, np.random.Generator] = None) -> np.ndarray:
        if self.kind == "isotropic":
            return np.full(d, float(self.high))
        if self.kind == "linear":
            return np.linspace(self.low, self.high, d)
        if self.low == self.high:
            return np.full(d, float(self.low))
        return loguniform(self.low, self.high).rvs(size=d, random_state=random_generator(seed))


def quadratic_descent_trace(
    d: int = 10000,
    spectrum: Spectrum = Spectrum(),
    learning_rate: float = 0.1,
    momentum: float = 0.0,
    steps: int = 1000,
    seed: Union[int, np.random.Generator] = 0,
) -> ProjectionTrace:
    """Gradient descent with momentum on a random diagonal quadratic bowl.

    The start is standard normal, the true solution is the origin, which
    serves as ``theta_f`` of the projection. The run stops early once
    ``|theta|`` exceeds ``1e6`` times its start norm; that point is flagged
    as diverged.

    Parameters
    ----------
    d : int
        dimension
    spectrum : Spectrum
        eigenvalue distribution
    learning_rate : float
        step size
    momentum : float
        momentum coefficient in [0, 1)
    steps : int
        number of updates
    seed : Union[int, np.random.Generator]
        seed for eigenvalues and start

    Returns
    -------
    ProjectionTrace
        one point per step including the start, with objective and divergence flags

    Raises
    ------
    ValueError
        if a hyperparameter is out of range
    """
    if d < 1 or steps < 1:
        raise ValueError(f"Need d >= 1 and steps >= 1, got {d} and {steps}")
    if not learning_rate > 0:
        raise ValueError(f"learning_rate has to be positive, but got {learning_rate}")
    if not 0 <= momentum < 1:
        raise ValueError(f"momentum has to be in [0, 1), but got {momentum}")
    rng = random_generator(seed)
    eigenvalues = spectrum.eigenvalues(d, rng)
    theta = rng.standard_normal(d)
    limit = DIVERGENCE_FACTOR * np.linalg.norm(theta)
    builder = TraceBuilder(theta, np.zeros(d))
    velocity = np.zeros(d)
    builder.add(0.0, theta, diverged=False, objective=0.5 * np.dot(eigenvalues * theta, theta))
    for step in range(1, steps + 1):
        velocity = momentum * velocity - learning_rate * (eigenvalues * theta)
        theta = theta + velocity
        norm = np.linalg.norm(theta)
        diverged = not np.isfinite(norm) or norm > limit
        builder.add(
            float(step),
            theta,
            diverged=diverged,
            objective=0.5 * np.dot(eigenvalues * theta, theta),
        )
        if diverged:
            warnings.warn(
                f"Descent diverged at step {step} (learning_rate={learning_rate},"
                f" momentum={momentum})"
            )
            break
    return builder.build()
