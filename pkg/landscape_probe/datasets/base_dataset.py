"""Dataset types and base class for downloadable datasets."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np
from pystow.cache import CachedPickle

from landscape_probe.model import Batch

SPLIT_TAGS = ("train", "valid", "test")


@dataclass(frozen=True, eq=False)
class Dataset(Batch):
    """A non-empty split of examples.

    Attributes
    ----------
    inputs: np.ndarray
        matrix of shape (n, d)
    targets: np.ndarray
        integer labels of shape (n,) if ``n_classes`` is set,
        else real targets of shape (n, k)
    split: str
        one of "train", "valid", "test"
    n_classes: Optional[int]
        number of classes for labelled data
    """

    split: str = "train"
    n_classes: Optional[int] = None

    def __post_init__(self):
        super().__post_init__()
        if self.split not in SPLIT_TAGS:
            raise ValueError(f"split has to be one of {SPLIT_TAGS}, but got {self.split}")
        if len(self) < 1:
            raise ValueError("A dataset needs at least one example")
        if not np.all(np.isfinite(self.inputs)):
            raise ValueError("Dataset inputs contain non-finite values")
        if self.n_classes is not None:
            if self.targets.ndim != 1 or not np.issubdtype(self.targets.dtype, np.integer):
                raise ValueError("Labelled datasets need a 1-d integer label array")
            if self.targets.min() < 0 or self.targets.max() >= self.n_classes:
                raise ValueError(f"Labels have to be in [0, {self.n_classes})")
        elif not np.all(np.isfinite(self.targets)):
            raise ValueError("Dataset targets contain non-finite values")

    def take(self, indices: Sequence[int], split: str = None) -> Dataset:
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.inputs[indices],
            self.targets[indices],
            split=self.split if split is None else split,
            n_classes=self.n_classes,
        )

    def __eq__(self, other):
        if isinstance(other, Dataset):
            return (
                self.split == other.split
                and self.n_classes == other.n_classes
                and np.array_equal(self.inputs, other.inputs)
                and np.array_equal(self.targets, other.targets)
                and self.targets.dtype == other.targets.dtype
            )
        return False

    __hash__ = None  # type: ignore

    def __repr__(self):
        return (
            f"Dataset(split={self.split}, # examples: {len(self)}, # features:"
            f" {self.inputs.shape[1]}, n_classes={self.n_classes})"
        )


class Splits(NamedTuple):
    """Train, validation and test split; empty splits are None."""

    train: Dataset
    valid: Optional[Dataset] = None
    test: Optional[Dataset] = None

    @property
    def selection(self) -> Dataset:
        """Split used for early stopping, the training split if no validation exists."""
        return self.valid if self.valid is not None else self.train


class CachedDatasetSource:
    """Base class for datasets that are downloaded once and cached as pickle."""

    def __init__(
        self, name: str, cache_path: Union[str, Path, os.PathLike], force: bool
    ):
        """Initialize a cached dataset source.

        Parameters
        ----------
        name : str
            name of dataset
        cache_path : Union[str, Path, os.PathLike]
            path where pickle is/will be cached
        force : bool
            if true ignores the cache
        """
        self.name = name
        self.cache_path = cache_path
        self.force = force
        self.splits = self.load_splits()

    def load_splits(self) -> Splits:
        """Load the splits via self._load() or from cache."""
        return CachedPickle(path=self.cache_path, force=self.force)(self._load)()

    def _load(self) -> Splits:
        raise NotImplementedError("Datasets must implement the _load() method!")
