"""Flat parameter vectors with a layer manifest."""
from __future__ import annotations

from typing import Dict, Iterable, NamedTuple, Tuple, Union

import numpy as np

from landscape_probe.errors import StructureError


class Segment(NamedTuple):
    """A named block of a flat parameter vector."""

    name: str
    offset: int
    rows: int
    cols: int

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def stop(self) -> int:
        return self.offset + self.size


Manifest = Tuple[Segment, ...]


def check_manifest(manifest: Iterable[Segment]) -> Manifest:
    """Validate that segments are contiguous and non-overlapping.

    Parameters
    ----------
    manifest : Iterable[Segment]
        segments in storage order

    Returns
    -------
    Manifest
        the manifest as tuple

    Raises
    ------
    StructureError
        if offsets have gaps/overlaps or names repeat
    """
    manifest = tuple(Segment(*seg) for seg in manifest)
    expected = 0
    seen = set()
    for seg in manifest:
        if seg.name in seen:
            raise StructureError(f"Segment name {seg.name} occurs twice")
        seen.add(seg.name)
        if seg.offset != expected:
            raise StructureError(
                f"Segment {seg.name} starts at {seg.offset}, expected {expected}"
            )
        if seg.rows < 0 or seg.cols < 0:
            raise StructureError(f"Segment {seg.name} has negative shape")
        expected = seg.stop
    return manifest


def manifest_size(manifest: Manifest) -> int:
    return manifest[-1].stop if manifest else 0


class ParamVector:
    """Immutable flat vector of float64 values with a shape manifest.

    Arithmetic is only defined between vectors with identical manifests.

    Attributes
    ----------
    values: np.ndarray
        read-only float64 array
    manifest: Tuple[Segment, ...]
        segments mapping slices of ``values`` to layer blocks

    Examples
    --------
    >>> from landscape_probe.model import ParamVector, Segment
    >>> theta = ParamVector([0.0, 2.0], [Segment("w", 0, 1, 2)])
    >>> (0.5 * theta).values
    array([0., 1.])
    """

    __slots__ = ("values", "manifest")

    def __init__(self, values: Union[np.ndarray, Iterable[float]], manifest: Iterable[Segment]):
        manifest = check_manifest(manifest)
        arr = np.array(values, dtype=np.float64).reshape(-1)
        if arr.shape[0] != manifest_size(manifest):
            raise StructureError(
                f"Manifest describes {manifest_size(manifest)} values, but got"
                f" {arr.shape[0]}"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "manifest", manifest)

    def __setattr__(self, key, value):
        raise AttributeError("ParamVector is immutable")

    def __reduce__(self):
        return (ParamVector, (np.array(self.values), self.manifest))

    @classmethod
    def zeros(cls, manifest: Iterable[Segment]) -> ParamVector:
        manifest = check_manifest(manifest)
        return cls(np.zeros(manifest_size(manifest)), manifest)

    @classmethod
    def from_segments(
        cls, manifest: Iterable[Segment], blocks: Dict[str, np.ndarray]
    ) -> ParamVector:
        """Assemble a vector from per-segment arrays.

        Parameters
        ----------
        manifest : Iterable[Segment]
            target manifest
        blocks : Dict[str, np.ndarray]
            arrays keyed by segment name, reshaped to ``(rows, cols)``

        Returns
        -------
        ParamVector
            assembled vector

        Raises
        ------
        StructureError
            if a block is missing or has the wrong size
        """
        manifest = check_manifest(manifest)
        values = np.empty(manifest_size(manifest))
        for seg in manifest:
            if seg.name not in blocks:
                raise StructureError(f"Missing block for segment {seg.name}")
            block = np.asarray(blocks[seg.name], dtype=np.float64)
            if block.size != seg.size:
                raise StructureError(
                    f"Block {seg.name} has {block.size} values, expected {seg.size}"
                )
            values[seg.offset : seg.stop] = block.reshape(-1)
        return cls(values, manifest)

    def with_values(self, values: np.ndarray) -> ParamVector:
        """Return a vector with the same manifest and new values."""
        return ParamVector(values, self.manifest)

    def segment(self, name: str) -> np.ndarray:
        """Return the read-only ``(rows, cols)`` view of a segment.

        Raises
        ------
        KeyError
            if no segment has this name
        """
        for seg in self.manifest:
            if seg.name == name:
                return self.values[seg.offset : seg.stop].reshape(seg.rows, seg.cols)
        raise KeyError(name)

    def blocks(self) -> Dict[str, np.ndarray]:
        return {seg.name: self.segment(seg.name) for seg in self.manifest}

    def _check_other(self, other: ParamVector):
        if not isinstance(other, ParamVector):
            raise TypeError(f"Expected ParamVector, got {type(other)}")
        if other.manifest != self.manifest:
            raise StructureError("ParamVectors have different manifests")

    def __add__(self, other: ParamVector) -> ParamVector:
        self._check_other(other)
        return ParamVector(self.values + other.values, self.manifest)

    def __sub__(self, other: ParamVector) -> ParamVector:
        self._check_other(other)
        return ParamVector(self.values - other.values, self.manifest)

    def __mul__(self, scalar: float) -> ParamVector:
        if isinstance(scalar, ParamVector):
            return NotImplemented
        return ParamVector(float(scalar) * self.values, self.manifest)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> ParamVector:
        return ParamVector(self.values / float(scalar), self.manifest)

    def __neg__(self) -> ParamVector:
        return ParamVector(-self.values, self.manifest)

    def dot(self, other: ParamVector) -> float:
        self._check_other(other)
        return float(np.dot(self.values, other.values))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __len__(self):
        return self.values.shape[0]

    def __eq__(self, other):
        if isinstance(other, ParamVector):
            return self.manifest == other.manifest and np.array_equal(
                self.values, other.values
            )
        return False

    __hash__ = None  # type: ignore

    def __repr__(self):
        names = ",".join(seg.name for seg in self.manifest)
        return f"ParamVector(# values: {len(self)}, segments: [{names}])"
