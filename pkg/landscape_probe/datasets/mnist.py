"""MNIST dataset class."""
from landscape_probe import lp_stow
from landscape_probe.datasets.base_dataset import CachedDatasetSource, Splits
from landscape_probe.input_output.from_to_idx import load_idx


class MNISTDataset(CachedDatasetSource):
    """The MNIST handwritten digits, 28x28 gray-scale images of 10 classes.

    The official 60,000 training images are divided into the first 50,000
    for training and the last 10,000 for validation (used for early stopping),
    the 10,000 test images form the test split.
    Files are downloaded in gzipped IDX form and cached via pystow.
    """

    __DOWNLOAD_URL = "https://ossci-datasets.s3.amazonaws.com/mnist"
    __FILES = {
        "train": ("train-images-idx3-ubyte.gz", "train-labels-idx1-ubyte.gz"),
        "test": ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
    }

    def __init__(self, n_valid: int = 10000, force: bool = False):
        """Initialize the MNIST dataset.

        Parameters
        ----------
        n_valid : int
            number of training images held out for validation
        force : bool
            if true ignores cache
        """
        self.n_valid = n_valid
        super().__init__(
            name="mnist",
            cache_path=lp_stow.join("cache", name=f"mnist_valid{n_valid}.pkl"),
            force=force,
        )

    def __repr__(self):
        return (
            self.__class__.__name__
            + f"(n_valid={self.n_valid}, train={self.splits.train},"
            f" valid={self.splits.valid}, test={self.splits.test})"
        )

    def _fetch(self, split: str):
        paths = [
            lp_stow.ensure("raw", url=f"{self.__class__.__DOWNLOAD_URL}/{file_name}")
            for file_name in self.__class__.__FILES[split]
        ]
        return load_idx(*paths, split="test" if split == "test" else "train")

    def _load(self) -> Splits:
        """Download and parse the IDX files.

        Returns
        -------
        Splits
            train, valid and test split
        """
        full_train = self._fetch("train")
        n_train = len(full_train) - self.n_valid
        if n_train < 1:
            raise ValueError(f"n_valid={self.n_valid} leaves no training images")
        train = full_train.take(range(n_train))
        valid = (
            full_train.take(range(n_train, len(full_train)), split="valid")
            if self.n_valid > 0
            else None
        )
        return Splits(train, valid, self._fetch("test"))
