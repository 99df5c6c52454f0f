"""Deterministic synthetic datasets and splitting."""
import logging
from typing import Sequence, Union

import numpy as np

from landscape_probe.datasets.base_dataset import SPLIT_TAGS, Dataset, Splits
from landscape_probe.utils.random_help import random_generator

logger = logging.getLogger(__name__)


def gen_two_gaussians(
    n: int, d: int, separation: float, seed: Union[int, np.random.Generator] = None
) -> Dataset:
    """Two isotropic unit-variance Gaussian classes.

    Class 0 is centered at ``-separation/2 * 1`` and class 1 at
    ``+separation/2 * 1``. Class 0 receives ``n // 2`` examples, class 1 the rest,
    and the examples are shuffled.

    Parameters
    ----------
    n : int
        number of examples, at least 2
    d : int
        input dimension, at least 1
    separation : float
        distance between the class centers along every axis
    seed : Union[int, np.random.Generator]
        seed or generator

    Returns
    -------
    Dataset
        labelled training split with two classes

    Raises
    ------
    ValueError
        if ``n < 2`` or ``d < 1``

    Examples
    --------
    >>> from landscape_probe.datasets import gen_two_gaussians
    >>> gen_two_gaussians(1000, 10, 6.0, seed=0)
    Dataset(split=train, # examples: 1000, # features: 10, n_classes=2)
    """
    if n < 2:
        raise ValueError(f"Need at least 2 examples, but got {n}")
    if d < 1:
        raise ValueError(f"Need at least 1 dimension, but got {d}")
    rng = random_generator(seed)
    labels = np.concatenate(
        [np.zeros(n // 2, dtype=np.int64), np.ones(n - n // 2, dtype=np.int64)]
    )
    labels = labels[rng.permutation(n)]
    signs = 2.0 * labels - 1.0
    inputs = rng.standard_normal((n, d)) + (signs * separation / 2.0)[:, None]
    return Dataset(inputs, labels, split="train", n_classes=2)


def gen_scalar_regression() -> Dataset:
    """The single example ``x = 1, y = 1`` of the scalar factored linear model."""
    return Dataset(np.ones((1, 1)), np.ones((1, 1)), split="train")


def _largest_remainder(n: int, fractions: Sequence[float]) -> np.ndarray:
    raw = np.asarray(fractions, dtype=np.float64) * n
    sizes = np.floor(raw).astype(np.int64)
    remainders = raw - sizes
    # stable sort keeps lower split index first on equal remainders
    order = np.argsort(-remainders, kind="stable")
    for idx in order[: n - int(sizes.sum())]:
        sizes[idx] += 1
    return sizes


def split(
    dataset: Dataset,
    fractions: Sequence[float] = (0.8, 0.1, 0.1),
    seed: Union[int, np.random.Generator] = None,
) -> Splits:
    """Randomly partition a dataset into train, validation and test split.

    Split sizes are rounded with the largest remainder method, so they always
    add up to ``len(dataset)``.

    Parameters
    ----------
    dataset : Dataset
        dataset to split
    fractions : Sequence[float]
        train, valid and test fraction, non-negative and summing to 1
    seed : Union[int, np.random.Generator]
        seed or generator for the permutation

    Returns
    -------
    Splits
        splits tagged accordingly, empty splits are None

    Raises
    ------
    ValueError
        if fractions are malformed or the training split would be empty
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError(f"Need 3 fractions (train, valid, test), got {fractions}")
    if any(f < 0 or not np.isfinite(f) for f in fractions):
        raise ValueError(f"Fractions have to be non-negative, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"Fractions have to sum to 1, got {sum(fractions)}")
    n = len(dataset)
    sizes = _largest_remainder(n, fractions)
    if sizes[0] == 0:
        raise ValueError(f"Training split of {n} examples with {fractions} is empty")
    permutation = random_generator(seed).permutation(n)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    parts = []
    for tag, start, stop in zip(SPLIT_TAGS, bounds[:-1], bounds[1:]):
        if stop > start:
            parts.append(dataset.take(permutation[start:stop], split=tag))
        else:
            parts.append(None)
    logger.debug(f"Split {n} examples into sizes {sizes.tolist()}")
    return Splits(*parts)
