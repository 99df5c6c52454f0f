"""Read and write the IDX binary format used to distribute MNIST.

Layout (big endian)::

    [offset] [type]          [description]
    0000     32 bit integer  magic number (0x00000803 images, 0x00000801 labels)
    0004     32 bit integer  number of items
    ....     32 bit integer  one size per further dimension
    ....     unsigned byte   payload, row-major
"""
import gzip
import os
from typing import Tuple, Union

import numpy as np

from landscape_probe.datasets.base_dataset import Dataset
from landscape_probe.errors import IDXConsistencyError, IDXFormatError, IDXLengthError

IMAGES_MAGIC = 2051
LABELS_MAGIC = 2049

PathLike = Union[str, os.PathLike]


def _read_bytes(path: PathLike) -> bytes:
    if str(path).endswith(".gz"):
        with gzip.open(path, "rb") as in_file:
            return in_file.read()
    with open(path, "rb") as in_file:
        return in_file.read()


def _parse_idx(path: PathLike, magic: int) -> np.ndarray:
    raw = _read_bytes(path)
    if len(raw) < 4:
        raise IDXLengthError(f"{path}: file has {len(raw)} bytes, too short for a header")
    found = int(np.frombuffer(raw[:4], dtype=">u4")[0])
    if found != magic:
        raise IDXFormatError(f"{path}: wrong magic number {found}, expected {magic}")
    n_dims = magic & 0xFF
    header_len = 4 + 4 * n_dims
    if len(raw) < header_len:
        raise IDXLengthError(f"{path}: header declares {n_dims} dimensions but is truncated")
    shape = tuple(int(s) for s in np.frombuffer(raw[4:header_len], dtype=">u4"))
    expected = int(np.prod(shape))
    payload = len(raw) - header_len
    if payload < expected:
        raise IDXLengthError(
            f"{path}: header declares {shape} ({expected} bytes), payload has {payload}"
        )
    return np.frombuffer(raw[header_len : header_len + expected], dtype=np.uint8).reshape(shape)


def load_idx(images_path: PathLike, labels_path: PathLike, split: str = "train") -> Dataset:
    """Load an image/label IDX pair as dataset.

    Files ending in ``.gz`` are decompressed transparently.

    Parameters
    ----------
    images_path : PathLike
        path of the images file (magic 2051)
    labels_path : PathLike
        path of the labels file (magic 2049)
    split : str
        split tag of the returned dataset

    Returns
    -------
    Dataset
        flattened images scaled to [0, 1] with integer labels

    Raises
    ------
    IDXFormatError
        if a file has the wrong magic number
    IDXLengthError
        if a file is shorter than its header declares
    IDXConsistencyError
        if the files declare different item counts
    """
    images = _parse_idx(images_path, IMAGES_MAGIC)
    labels = _parse_idx(labels_path, LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise IDXConsistencyError(
            f"{images_path} holds {images.shape[0]} images but {labels_path} holds"
            f" {labels.shape[0]} labels"
        )
    inputs = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    targets = labels.astype(np.int64)
    n_classes = int(targets.max()) + 1 if targets.size else 1
    return Dataset(inputs, targets, split=split, n_classes=max(n_classes, 10))


def _write_idx(path: PathLike, magic: int, data: np.ndarray):
    header = np.array([magic, *data.shape], dtype=">u4").tobytes()
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "wb") as out_file:
        out_file.write(header)
        out_file.write(np.ascontiguousarray(data, dtype=np.uint8).tobytes())


def write_idx(
    dataset: Dataset,
    images_path: PathLike,
    labels_path: PathLike,
    image_shape: Tuple[int, int] = None,
):
    """Write a labelled dataset as IDX image/label pair.

    Inputs are quantized to bytes with ``round(x * 255)`` after clipping to [0, 1].

    Parameters
    ----------
    dataset : Dataset
        labelled dataset with labels below 256
    images_path : PathLike
        destination of images
    labels_path : PathLike
        destination of labels
    image_shape : Tuple[int, int]
        (rows, cols) of one image, default is ``(1, d)``

    Raises
    ------
    ValueError
        if the dataset is not labelled or shapes do not fit
    """
    if dataset.n_classes is None:
        raise ValueError("Only labelled datasets can be written as IDX")
    n, d = dataset.inputs.shape
    rows, cols = image_shape if image_shape is not None else (1, d)
    if rows * cols != d:
        raise ValueError(f"image_shape {image_shape} does not hold {d} features")
    pixels = np.rint(np.clip(dataset.inputs, 0.0, 1.0) * 255.0).astype(np.uint8)
    _write_idx(images_path, IMAGES_MAGIC, pixels.reshape(n, rows, cols))
    _write_idx(labels_path, LABELS_MAGIC, dataset.targets.astype(np.uint8))
