"""Minibatch SGD with momentum that records a parameter trajectory."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm.auto import tqdm

from landscape_probe.datasets.base_dataset import Dataset, Splits
from landscape_probe.errors import DivergedError, EvaluationError, StructureError
from landscape_probe.evaluation.curve_metrics import misclassification_rate
from landscape_probe.model import (
    SOFTMAX_CROSS_ENTROPY,
    Affine,
    NetworkSpec,
    ParamVector,
    loss_and_grad,
    loss_total,
)
from landscape_probe.model.network import check_params
from landscape_probe.utils.random_help import epoch_generator, random_generator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of :func:`sgd_train`.

    Attributes
    ----------
    learning_rate: float
        step size, positive
    momentum: float
        momentum coefficient in [0, 1)
    batch_size: int
        examples per minibatch, the last batch of an epoch may be smaller
    max_epochs: int
        number of passes over the training split
    patience: Optional[int]
        stop after this many epochs without improvement of the selection
        objective, None trains for ``max_epochs``
    snapshot_every: int
        record a snapshot every this many epochs (the final epoch is always recorded)
    seed: int
        seed of the minibatch order
    """

    learning_rate: float
    momentum: float = 0.0
    batch_size: int = 32
    max_epochs: int = 100
    patience: Optional[int] = 10
    snapshot_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate has to be positive, but got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum has to be in [0, 1), but got {self.momentum}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size has to be at least 1, but got {self.batch_size}")
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs has to be at least 1, but got {self.max_epochs}")
        if self.patience is not None and self.patience < 1:
            raise ValueError(f"patience has to be at least 1, but got {self.patience}")
        if self.snapshot_every < 1:
            raise ValueError(
                f"snapshot_every has to be at least 1, but got {self.snapshot_every}"
            )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Parameter snapshots of one training run.

    Attributes
    ----------
    spec: NetworkSpec
        trained architecture
    theta_i: ParamVector
        initial parameters, identical to ``snapshots[0]``
    epochs: np.ndarray
        strictly increasing epoch of every snapshot, starting with 0
    snapshots: Tuple[ParamVector, ...]
        parameters after each recorded epoch
    solution_index: int
        position of the early-stopping solution in ``snapshots``
    train_objective: np.ndarray
        mean training objective after every epoch (index 0 is the initialization)
    valid_objective: Optional[np.ndarray]
        mean validation objective per epoch, None without validation split
    train_error: Optional[np.ndarray]
        training error rate per epoch, None for regression
    valid_error: Optional[np.ndarray]
        validation error rate per epoch
    config: Optional[TrainConfig]
        hyperparameters, None for trajectories not produced by :func:`sgd_train`
    metadata: Dict[str, str]
        free-form information, e.g. how to rebuild the dataset
    """

    spec: NetworkSpec
    theta_i: ParamVector
    epochs: np.ndarray
    snapshots: Tuple[ParamVector, ...]
    solution_index: int
    train_objective: np.ndarray
    valid_objective: Optional[np.ndarray] = None
    train_error: Optional[np.ndarray] = None
    valid_error: Optional[np.ndarray] = None
    config: Optional[TrainConfig] = None
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        epochs = np.array(self.epochs, dtype=np.int64).reshape(-1)
        snapshots = tuple(self.snapshots)
        if len(snapshots) == 0 or len(snapshots) != epochs.shape[0]:
            raise StructureError(
                f"Got {len(snapshots)} snapshots for {epochs.shape[0]} epochs"
            )
        if epochs[0] != 0 or np.any(np.diff(epochs) <= 0):
            raise ValueError("Snapshot epochs have to start at 0 and strictly increase")
        if not 0 <= self.solution_index < len(snapshots):
            raise ValueError(f"solution_index {self.solution_index} out of range")
        for snap in (self.theta_i, *snapshots):
            check_params(self.spec, snap)
        if snapshots[0] != self.theta_i:
            raise ValueError("The first snapshot has to equal theta_i")
        object.__setattr__(self, "epochs", _read_only(epochs))
        object.__setattr__(self, "snapshots", snapshots)
        for name in ("train_objective", "valid_objective", "train_error", "valid_error"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _read_only(np.array(value, dtype=np.float64)))

    @property
    def spec_digest(self) -> str:
        return self.spec.digest()

    @property
    def theta_f(self) -> ParamVector:
        """The early-stopping solution."""
        return self.snapshots[self.solution_index]

    @property
    def solution_epoch(self) -> int:
        return int(self.epochs[self.solution_index])

    @property
    def solution_train_objective(self) -> float:
        return float(self.train_objective[self.solution_epoch])

    def __len__(self):
        return len(self.snapshots)

    def __eq__(self, other):
        if not isinstance(other, TrajectoryRecord):
            return False
        return (
            self.spec == other.spec
            and self.theta_i == other.theta_i
            and np.array_equal(self.epochs, other.epochs)
            and self.snapshots == other.snapshots
            and self.solution_index == other.solution_index
            and all(
                _optional_equal(getattr(self, name), getattr(other, name))
                for name in (
                    "train_objective",
                    "valid_objective",
                    "train_error",
                    "valid_error",
                )
            )
            and self.config == other.config
            and self.metadata == other.metadata
        )

    __hash__ = None  # type: ignore

    def __repr__(self):
        return (
            f"TrajectoryRecord(spec={self.spec.describe()}, # snapshots: {len(self)},"
            f" solution_epoch={self.solution_epoch})"
        )


def _read_only(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _optional_equal(a: Optional[np.ndarray], b: Optional[np.ndarray]) -> bool:
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


def init_params(
    spec: NetworkSpec, scale: float = 0.05, seed: Union[int, np.random.Generator] = None
) -> ParamVector:
    """Small random initial parameters.

    Weights are drawn uniformly from ``(-scale, scale)`` segment by segment in
    manifest order, biases are 0.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    scale : float
        half width of the weight distribution
    seed : Union[int, np.random.Generator]
        seed or generator

    Returns
    -------
    ParamVector
        initial parameters

    Raises
    ------
    ValueError
        if ``scale <= 0``
    """
    if not scale > 0:
        raise ValueError(f"scale has to be positive, but got {scale}")
    rng = random_generator(seed)
    blocks = {}
    for idx, layer in enumerate(spec.layers):
        if isinstance(layer, Affine):
            blocks[f"layer{idx}.W"] = rng.uniform(-scale, scale, size=(layer.n_in, layer.n_out))
            if layer.bias:
                blocks[f"layer{idx}.b"] = np.zeros((1, layer.n_out))
    return ParamVector.from_segments(spec.manifest(), blocks)


class _EpochLog:
    def __init__(self, spec: NetworkSpec, splits: Splits):
        self.spec = spec
        self.splits = splits
        self.classify = spec.loss == SOFTMAX_CROSS_ENTROPY
        self.train_objective: List[float] = []
        self.valid_objective: List[float] = []
        self.train_error: List[float] = []
        self.valid_error: List[float] = []

    def record(self, params: ParamVector) -> float:
        """Evaluate and store objectives, return the selection objective."""
        train_obj = loss_total(self.spec, params, self.splits.train).mean
        self.train_objective.append(train_obj)
        if self.classify:
            self.train_error.append(misclassification_rate(self.spec, params, self.splits.train))
        if self.splits.valid is None:
            return train_obj
        valid_obj = loss_total(self.spec, params, self.splits.valid).mean
        self.valid_objective.append(valid_obj)
        if self.classify:
            self.valid_error.append(misclassification_rate(self.spec, params, self.splits.valid))
        return valid_obj

    def arrays(self) -> Dict[str, Optional[np.ndarray]]:
        has_valid = self.splits.valid is not None
        return {
            "train_objective": np.array(self.train_objective),
            "valid_objective": np.array(self.valid_objective) if has_valid else None,
            "train_error": np.array(self.train_error) if self.classify else None,
            "valid_error": (
                np.array(self.valid_error) if self.classify and has_valid else None
            ),
        }


def _sgd_epoch(
    spec: NetworkSpec,
    params: ParamVector,
    velocity: np.ndarray,
    train: Dataset,
    config: TrainConfig,
    epoch: int,
) -> Tuple[ParamVector, np.ndarray]:
    order = epoch_generator(config.seed, epoch).permutation(len(train))
    for start in range(0, len(train), config.batch_size):
        batch = train.take(order[start : start + config.batch_size])
        losses, gradient = loss_and_grad(spec, params, batch)
        if not np.all(np.isfinite(losses)):
            raise DivergedError(
                f"Non-finite minibatch loss in epoch {epoch}", last_finite=params, epoch=epoch
            )
        mean_grad = gradient.values / len(batch)
        velocity = config.momentum * velocity - config.learning_rate * mean_grad
        updated = params.values + velocity
        if not np.all(np.isfinite(updated)):
            raise DivergedError(
                f"Parameters became non-finite in epoch {epoch}", last_finite=params, epoch=epoch
            )
        params = params.with_values(updated)
    return params, velocity


def sgd_train(
    spec: NetworkSpec,
    theta_i: ParamVector,
    splits: Union[Splits, Dataset],
    config: TrainConfig,
    metadata: Dict[str, str] = None,
    progress: bool = False,
) -> TrajectoryRecord:
    """Train with minibatch SGD and momentum and record the trajectory.

    Every step applies ``v <- momentum * v - learning_rate * g`` and
    ``theta <- theta + v`` where ``g`` is the mean gradient over the minibatch.
    Minibatches follow a fresh permutation per epoch drawn from a generator
    keyed by ``(config.seed, epoch)``.

    Training stops after ``config.max_epochs`` or when the selection objective
    (validation, or training if there is no validation split) did not improve
    for ``config.patience`` epochs. The solution is the recorded snapshot with
    the lowest selection objective (earliest on ties); snapshots continue past it.

    Parameters
    ----------
    spec : NetworkSpec
        architecture
    theta_i : ParamVector
        initial parameters
    splits : Union[Splits, Dataset]
        data splits, a single dataset is used as training split
    config : TrainConfig
        hyperparameters
    metadata : Dict[str, str]
        stored verbatim in the record
    progress : bool
        show a progress bar over epochs

    Returns
    -------
    TrajectoryRecord
        recorded trajectory

    Raises
    ------
    StructureError
        if ``theta_i`` does not fit ``spec``
    DivergedError
        if a loss or parameter becomes non-finite, carries the last finite parameters

    Examples
    --------
    >>> from landscape_probe.datasets import gen_scalar_regression
    >>> from landscape_probe.model import build_deep_linear_chain, ParamVector
    >>> from landscape_probe.training import TrainConfig, sgd_train
    >>> spec = build_deep_linear_chain([1, 1, 1])
    >>> theta = ParamVector([0.1, 0.1], spec.manifest())
    >>> config = TrainConfig(learning_rate=0.05, batch_size=1, max_epochs=500, patience=None)
    >>> record = sgd_train(spec, theta, gen_scalar_regression(), config)
    >>> len(record)
    501
    """
    check_params(spec, theta_i)
    if isinstance(splits, Dataset):
        splits = Splits(splits)
    log = _EpochLog(spec, splits)
    try:
        best = log.record(theta_i)
    except EvaluationError as err:
        raise DivergedError(f"Initial objective is not finite: {err}", theta_i, 0)
    best_epoch = 0
    epochs = [0]
    snapshots = [theta_i]
    selection = [best]
    params = theta_i
    velocity = np.zeros(len(theta_i))
    for epoch in tqdm(range(1, config.max_epochs + 1), desc="Training", disable=not progress):
        params, velocity = _sgd_epoch(spec, params, velocity, splits.train, config, epoch)
        try:
            objective = log.record(params)
        except EvaluationError as err:
            raise DivergedError(f"Objective not finite after epoch {epoch}: {err}", params, epoch)
        logger.debug(f"Epoch {epoch}: selection objective {objective:.6g}")
        if objective < best:
            best, best_epoch = objective, epoch
        stop = config.patience is not None and epoch - best_epoch >= config.patience
        if epoch % config.snapshot_every == 0 or epoch == config.max_epochs or stop:
            epochs.append(epoch)
            snapshots.append(params)
            selection.append(objective)
        if stop:
            logger.info(f"Stopping after epoch {epoch}, best epoch was {best_epoch}")
            break
    return TrajectoryRecord(
        spec=spec,
        theta_i=theta_i,
        epochs=np.array(epochs),
        snapshots=tuple(snapshots),
        solution_index=int(np.argmin(selection)),
        config=config,
        metadata=dict(metadata or {}),
        **log.arrays(),
    )
