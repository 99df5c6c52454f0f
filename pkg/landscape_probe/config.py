"""Experiment configuration files.

Configurations are INI style text, ``[section]`` headers followed by
``key = value`` lines; ``#`` and ``;`` start comments. Relative paths are
resolved against the directory of the configuration file. See the user guide
for every key.
"""
from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple, TypeVar, Union

from landscape_probe.datasets.base_dataset import Splits
from landscape_probe.datasets.synthetic import gen_scalar_regression, gen_two_gaussians, split
from landscape_probe.errors import ConfigError, StructureError
from landscape_probe.model import SOFTMAX_CROSS_ENTROPY, NetworkSpec
from landscape_probe.training.sgd import TrainConfig

T = TypeVar("T")

DATA_SOURCES = ("two-gaussians", "scalar", "idx", "mnist")
SECTIONS = ("model", "data", "train", "probe", "surface", "output")
_NONE = ("", "none")
_FIXED_MNIST = ("fractions", "split_seed")


@dataclass(frozen=True)
class DataConfig:
    """How to obtain the data splits."""

    source: str
    n: int = 1000
    dim: int = 10
    separation: float = 6.0
    seed: int = 0
    images: Optional[str] = None
    labels: Optional[str] = None
    fractions: Tuple[float, float, float] = (0.8, 0.1, 0.1)
    split_seed: int = 0

    def to_metadata(self) -> Dict[str, str]:
        """Flat ``data.<key>`` strings, stored in trajectory files."""
        meta = {
            "data.source": self.source,
            "data.n": str(self.n),
            "data.dim": str(self.dim),
            "data.separation": repr(self.separation),
            "data.seed": str(self.seed),
            "data.fractions": " ".join(repr(f) for f in self.fractions),
            "data.split_seed": str(self.split_seed),
        }
        if self.source == "mnist":
            for key in _FIXED_MNIST:
                del meta[f"data.{key}"]
        if self.images is not None:
            meta["data.images"] = self.images
        if self.labels is not None:
            meta["data.labels"] = self.labels
        return meta

    @classmethod
    def from_metadata(cls, metadata: Dict[str, str]) -> DataConfig:
        """Inverse of :meth:`to_metadata`.

        Raises
        ------
        ConfigError
            if the metadata does not describe a data source
        """
        section = {
            key[len("data.") :]: value for key, value in metadata.items() if key.startswith("data.")
        }
        if "source" not in section:
            raise ConfigError("data.source", "trajectory carries no data description")
        return _data_config(section, base=None)

    def load(self) -> Splits:
        """Build the splits.

        Returns
        -------
        Splits
            the scalar data set is a single training split, every other
            source is split by ``fractions`` with ``split_seed``
        """
        if self.source == "scalar":
            return Splits(gen_scalar_regression())
        if self.source == "mnist":
            from landscape_probe.datasets.mnist import MNISTDataset

            return MNISTDataset().splits
        if self.source == "idx":
            from landscape_probe.input_output.from_to_idx import load_idx

            dataset = load_idx(self.images, self.labels)
        else:
            dataset = gen_two_gaussians(self.n, self.dim, self.separation, seed=self.seed)
        return split(dataset, self.fractions, seed=self.split_seed)


@dataclass(frozen=True)
class ProbeConfig:
    grid: str = "coarse-50"
    mode: str = "init-final"
    norm_scale: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class SurfaceConfig:
    kind: str = "trajectory"
    alpha_points: int = 64
    beta_points: int = 64
    extent: Optional[float] = None
    resolution: int = 21
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully parsed experiment configuration.

    Attributes
    ----------
    spec: NetworkSpec
        model architecture
    init_scale: float
        half width of the initial weight distribution
    init_seed: int
        seed of the initial weights
    data: DataConfig
        data source
    train: TrainConfig
        training hyperparameters
    probe: ProbeConfig
        interpolation settings
    surface: SurfaceConfig
        surface settings
    output_dir: Path
        directory for results
    text: Dict[str, Dict[str, str]]
        raw key-value pairs per section
    """

    spec: NetworkSpec
    init_scale: float
    init_seed: int
    data: DataConfig
    train: TrainConfig
    probe: ProbeConfig = ProbeConfig()
    surface: SurfaceConfig = SurfaceConfig()
    output_dir: Path = Path("results")
    text: Dict[str, Dict[str, str]] = field(default_factory=dict)


def _get(
    section: Dict[str, str],
    name: str,
    key: str,
    convert: Callable[[str], T],
    default: Union[T, None] = None,
    required: bool = False,
) -> T:
    if key not in section:
        if required:
            raise ConfigError(f"{name}.{key}", "is required")
        return default  # type: ignore
    raw = section[key].strip()
    try:
        return convert(raw)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"{name}.{key}", f"cannot interpret {raw!r} ({err})")


def _optional(convert: Callable[[str], T]) -> Callable[[str], Optional[T]]:
    def wrapped(raw: str) -> Optional[T]:
        return None if raw.lower() in _NONE else convert(raw)

    return wrapped


def _fractions(raw: str) -> Tuple[float, float, float]:
    values = tuple(float(v) for v in raw.replace(",", " ").split())
    if len(values) != 3:
        raise ValueError("need three numbers")
    return values  # type: ignore


def _existing_path(key: str, raw: Optional[str], base: Optional[Path]) -> Optional[str]:
    if raw is None:
        return None
    path = Path(os.path.expanduser(raw))
    if base is not None and not path.is_absolute():
        path = base / path
    if not path.exists():
        raise ConfigError(key, f"file {path} does not exist")
    return str(path.resolve())


def _data_config(section: Dict[str, str], base: Optional[Path]) -> DataConfig:
    source = _get(section, "data", "source", str, required=True)
    if source not in DATA_SOURCES:
        raise ConfigError("data.source", f"has to be one of {DATA_SOURCES}, got {source!r}")
    has_files = "images" in section or "labels" in section
    if source == "idx":
        if "images" not in section or "labels" not in section:
            raise ConfigError("data.images", "source idx needs both images and labels")
    elif has_files:
        raise ConfigError(
            "data.source", f"exactly one data source allowed, got {source} and IDX files"
        )
    if source == "mnist":
        for key in _FIXED_MNIST:
            if key in section:
                raise ConfigError(f"data.{key}", "mnist comes with fixed splits")
    try:
        return DataConfig(
            source=source,
            n=_get(section, "data", "n", int, 1000),
            dim=_get(section, "data", "dim", int, 10),
            separation=_get(section, "data", "separation", float, 6.0),
            seed=_get(section, "data", "seed", int, 0),
            images=_existing_path("data.images", section.get("images"), base),
            labels=_existing_path("data.labels", section.get("labels"), base),
            fractions=_get(section, "data", "fractions", _fractions, (0.8, 0.1, 0.1)),
            split_seed=_get(section, "data", "split_seed", int, 0),
        )
    except ValueError as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError("data", str(err))


def parse_config(text: str, base: Union[str, Path, None] = None) -> ExperimentConfig:
    """Parse configuration text.

    Parameters
    ----------
    text : str
        configuration content
    base : Union[str, Path, None]
        directory relative paths are resolved against

    Returns
    -------
    ExperimentConfig
        validated configuration

    Raises
    ------
    ConfigError
        naming the offending ``section.key``
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        raise ConfigError("config", f"malformed file ({err.message})")
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(name, f"unknown section, expected one of {SECTIONS}")
    sections = {name: dict(parser[name]) for name in SECTIONS if parser.has_section(name)}
    base = Path(base) if base is not None else None
    model = sections.get("model", {})
    train = sections.get("train", {})
    probe = sections.get("probe", {})
    surface = sections.get("surface", {})
    output = sections.get("output", {})

    try:
        spec = NetworkSpec.parse(
            _get(model, "model", "layers", str, required=True),
            _get(model, "model", "loss", str, SOFTMAX_CROSS_ENTROPY),
        )
    except StructureError as err:
        raise ConfigError("model.layers", str(err))
    if "data" not in sections:
        raise ConfigError("data.source", "is required")
    try:
        train_config = TrainConfig(
            learning_rate=_get(train, "train", "learning_rate", float, required=True),
            momentum=_get(train, "train", "momentum", float, 0.0),
            batch_size=_get(train, "train", "batch_size", int, 32),
            max_epochs=_get(train, "train", "max_epochs", int, 100),
            patience=_get(train, "train", "patience", _optional(int), 10),
            snapshot_every=_get(train, "train", "snapshot_every", int, 1),
            seed=_get(train, "train", "seed", int, 0),
        )
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError("train", str(err))
    init_scale = _get(model, "model", "init_scale", float, 0.05)
    if not init_scale > 0:
        raise ConfigError("model.init_scale", f"has to be positive, got {init_scale}")
    output_dir = Path(_get(output, "output", "directory", str, "results"))
    if base is not None and not output_dir.is_absolute():
        output_dir = base / output_dir
    return ExperimentConfig(
        spec=spec,
        init_scale=init_scale,
        init_seed=_get(model, "model", "init_seed", int, 0),
        data=_data_config(sections["data"], base),
        train=train_config,
        probe=ProbeConfig(
            grid=_get(probe, "probe", "grid", str, "coarse-50"),
            mode=_get(probe, "probe", "mode", str, "init-final"),
            norm_scale=_get(probe, "probe", "norm_scale", float, 1.0),
            seed=_get(probe, "probe", "seed", int, 0),
        ),
        surface=SurfaceConfig(
            kind=_get(surface, "surface", "kind", str, "trajectory"),
            alpha_points=_get(surface, "surface", "alpha_points", int, 64),
            beta_points=_get(surface, "surface", "beta_points", int, 64),
            extent=_get(surface, "surface", "extent", _optional(float), None),
            resolution=_get(surface, "surface", "resolution", int, 21),
            seed=_get(surface, "surface", "seed", int, 0),
        ),
        output_dir=output_dir,
        text=sections,
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read and validate a configuration file.

    Raises
    ------
    ConfigError
        if the file is missing or invalid
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config", f"file {path} does not exist")
    return parse_config(path.read_text(), base=path.parent)
