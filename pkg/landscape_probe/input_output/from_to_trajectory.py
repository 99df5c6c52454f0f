"""Binary trajectory files.

A trajectory file consists of

1. the magic string ``b"LPTRAJ1\\n"``
2. one line of JSON (sorted keys) with spec, config, epochs and counts
3. the payload: little-endian float64 values of ``theta_i``, every snapshot and
   the per-epoch objective and error series, in this order
4. an 8 byte little-endian unsigned integer holding the payload length in bytes

Values are stored as raw 64 bit patterns, so loading a saved record gives a
bit-identical record.
"""
import json
import logging
import os
from typing import Any, Dict, Union

import numpy as np

from landscape_probe.errors import (
    DigestMismatchError,
    TrajectoryFormatError,
    TrajectoryVersionError,
    TruncatedFileError,
)
from landscape_probe.model import NetworkSpec, ParamVector
from landscape_probe.training.sgd import TrainConfig, TrajectoryRecord

logger = logging.getLogger(__name__)

MAGIC = b"LPTRAJ1\n"
FORMAT_VERSION = 1
_MAGIC_PREFIX = b"LPTRAJ"
_FOOTER = np.dtype("<u8")
_VALUE = np.dtype("<f8")
_SERIES = ("train_objective", "valid_objective", "train_error", "valid_error")

PathLike = Union[str, os.PathLike]


def _header(record: TrajectoryRecord) -> Dict[str, Any]:
    return {
        "version": FORMAT_VERSION,
        "layers": record.spec.layers_text(),
        "loss": record.spec.loss,
        "spec_digest": record.spec_digest,
        "config": None if record.config is None else record.config.to_dict(),
        "epochs": [int(e) for e in record.epochs],
        "solution_index": record.solution_index,
        "n_params": len(record.theta_i),
        "series": {
            name: (None if getattr(record, name) is None else len(getattr(record, name)))
            for name in _SERIES
        },
        "metadata": record.metadata,
    }


def to_bytes(record: TrajectoryRecord) -> bytes:
    """Serialize a record into the trajectory file format."""
    header = json.dumps(_header(record), sort_keys=True, separators=(",", ":"))
    parts = [record.theta_i.values, *(snap.values for snap in record.snapshots)]
    parts.extend(getattr(record, name) for name in _SERIES if getattr(record, name) is not None)
    payload = np.concatenate(parts).astype(_VALUE).tobytes()
    footer = np.array([len(payload)], dtype=_FOOTER).tobytes()
    return MAGIC + header.encode("utf-8") + b"\n" + payload + footer


def save_trajectory(record: TrajectoryRecord, path: PathLike):
    """Write a trajectory file.

    Parameters
    ----------
    record : TrajectoryRecord
        record to write
    path : PathLike
        destination, overwritten if it exists
    """
    with open(path, "wb") as out_file:
        out_file.write(to_bytes(record))
    logger.debug(f"Wrote trajectory with {len(record)} snapshots to {path}")


def from_bytes(
    raw: bytes, expected_digest: str = None, source: str = "<bytes>"
) -> TrajectoryRecord:
    """Parse the trajectory file format, see :func:`load_trajectory`."""
    if len(raw) == 0:
        raise TrajectoryFormatError(f"{source}: file is empty")
    if not raw.startswith(MAGIC):
        if raw.startswith(_MAGIC_PREFIX):
            version = raw[len(_MAGIC_PREFIX) : raw.find(b"\n")].decode("ascii", "replace")
            raise TrajectoryVersionError(
                f"{source}: unsupported trajectory format version {version!r}"
            )
        raise TrajectoryFormatError(f"{source}: not a trajectory file (wrong magic string)")
    header_end = raw.find(b"\n", len(MAGIC))
    if header_end < 0:
        raise TruncatedFileError(f"{source}: header is incomplete")
    try:
        header = json.loads(raw[len(MAGIC) : header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise TrajectoryFormatError(f"{source}: malformed header ({err})")
    if header.get("version") != FORMAT_VERSION:
        raise TrajectoryVersionError(
            f"{source}: unsupported trajectory format version {header.get('version')!r}"
        )
    try:
        spec = NetworkSpec.parse(header["layers"], header["loss"])
        n_params = int(header["n_params"])
        epochs = header["epochs"]
        series = header["series"]
    except KeyError as err:
        raise TrajectoryFormatError(f"{source}: header misses field {err}")
    if spec.digest() != header.get("spec_digest"):
        raise DigestMismatchError(f"{source}: stored digest does not match the stored spec")
    if expected_digest is not None and spec.digest() != expected_digest:
        raise DigestMismatchError(
            f"{source}: spec digest {spec.digest()} differs from expected {expected_digest}"
        )
    if n_params != spec.n_params:
        raise TrajectoryFormatError(
            f"{source}: header declares {n_params} parameters, spec has {spec.n_params}"
        )

    n_values = n_params * (1 + len(epochs)) + sum(n for n in series.values() if n is not None)
    payload_len = n_values * _VALUE.itemsize
    body = raw[header_end + 1 :]
    if len(body) < payload_len + _FOOTER.itemsize:
        raise TruncatedFileError(
            f"{source}: expected {payload_len} payload bytes plus footer, found {len(body)}"
        )
    footer_bytes = body[payload_len : payload_len + _FOOTER.itemsize]
    footer = int(np.frombuffer(footer_bytes, dtype=_FOOTER)[0])
    if footer != payload_len or len(body) != payload_len + _FOOTER.itemsize:
        raise TruncatedFileError(
            f"{source}: footer announces {footer} payload bytes, header {payload_len}"
        )
    values = np.frombuffer(body[:payload_len], dtype=_VALUE).astype(np.float64)

    manifest = spec.manifest()
    theta_i = ParamVector(values[:n_params], manifest)
    snapshots = tuple(
        ParamVector(values[(k + 1) * n_params : (k + 2) * n_params], manifest)
        for k in range(len(epochs))
    )
    offset = n_params * (1 + len(epochs))
    arrays = {}
    for name in _SERIES:
        count = series.get(name)
        if count is None:
            arrays[name] = None
        else:
            arrays[name] = values[offset : offset + count]
            offset += count
    config = header.get("config")
    return TrajectoryRecord(
        spec=spec,
        theta_i=theta_i,
        epochs=np.array(epochs, dtype=np.int64),
        snapshots=snapshots,
        solution_index=int(header["solution_index"]),
        config=None if config is None else TrainConfig(**config),
        metadata=header.get("metadata", {}),
        **arrays,
    )


def load_trajectory(path: PathLike, expected_digest: str = None) -> TrajectoryRecord:
    """Read a trajectory file.

    Parameters
    ----------
    path : PathLike
        trajectory file
    expected_digest : str
        if given, the spec digest the file has to carry

    Returns
    -------
    TrajectoryRecord
        the stored record, bit-identical to the saved one

    Raises
    ------
    TrajectoryFormatError
        if the file is empty, has a wrong magic string or a malformed header
    TrajectoryVersionError
        if the file was written by another format version
    DigestMismatchError
        if the spec digest is inconsistent or differs from ``expected_digest``
    TruncatedFileError
        if the payload is shorter than announced
    """
    with open(path, "rb") as in_file:
        raw = in_file.read()
    return from_bytes(raw, expected_digest=expected_digest, source=str(path))
