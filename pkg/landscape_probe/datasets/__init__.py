"""Synthetic datasets, splitting and downloadable datasets."""
from landscape_probe.datasets.base_dataset import SPLIT_TAGS, Dataset, Splits
from landscape_probe.datasets.mnist import MNISTDataset
from landscape_probe.datasets.synthetic import gen_scalar_regression, gen_two_gaussians, split

__all__ = [
    "SPLIT_TAGS",
    "Dataset",
    "MNISTDataset",
    "Splits",
    "gen_scalar_regression",
    "gen_two_gaussians",
    "split",
]
