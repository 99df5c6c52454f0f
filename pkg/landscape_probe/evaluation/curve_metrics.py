"""Shape statistics of objective curves and classification error rates."""
import logging
from typing import Any, List, NamedTuple, Sequence, Union

import numpy as np
from scipy.signal import find_peaks

from landscape_probe.model import SOFTMAX_CROSS_ENTROPY, Batch, NetworkSpec, ParamVector, forward

logger = logging.getLogger(__name__)


class BumpReport(NamedTuple):
    """Deviations of a curve from a monotone, convex-looking descent.

    Attributes
    ----------
    n_violations: int
        number of consecutive grid steps on which the curve goes up by more than tolerance
    violation_mass: float
        sum of all upward steps larger than tolerance
    max_violation: float
        largest single upward step
    barrier_positions: List[int]
        grid indices of interior maxima above both endpoints
    barrier_heights: List[float]
        curve values at those maxima
    n_local_minima: int
        interior local minima deeper than tolerance
    minima_positions: List[int]
        grid indices of those minima
    tolerance: float
        tolerance used
    """

    n_violations: int
    violation_mass: float
    max_violation: float
    barrier_positions: List[int]
    barrier_heights: List[float]
    n_local_minima: int
    minima_positions: List[int]
    tolerance: float


def bump_report(curve: Union[Sequence[float], Any], tolerance: float = None) -> BumpReport:
    """Summarize upward bumps, barriers and interior minima of a curve.

    Parameters
    ----------
    curve : Union[Sequence[float], InterpolationCurve]
        objective values in grid order, or a curve whose training objective is used
    tolerance : float
        minimal size of a relevant deviation, defaults to ``1e-6 * (max - min)``

    Returns
    -------
    BumpReport
        summary of the curve shape

    Raises
    ------
    ValueError
        if the curve is empty

    Examples
    --------
    >>> from landscape_probe.evaluation import bump_report
    >>> report = bump_report([0.0, 1.0, 0.0])
    >>> report.barrier_heights
    [1.0]
    """
    values = np.asarray(getattr(curve, "j_train", curve), dtype=np.float64)
    if values.ndim != 1 or values.shape[0] == 0:
        raise ValueError("Cannot report on an empty curve")
    if tolerance is None:
        tolerance = 1e-6 * float(values.max() - values.min())
    steps = np.diff(values)
    upward = steps[steps > tolerance]
    # plateaus count as one peak, find_peaks reports their middle
    peaks, _ = find_peaks(values)
    ceiling = max(values[0], values[-1]) + tolerance
    barriers = [int(p) for p in peaks if values[p] > ceiling]
    if tolerance > 0:
        minima, _ = find_peaks(-values, prominence=tolerance)
        minima = [int(m) for m in minima if _depth(values, m) > tolerance]
    else:
        minima = [int(m) for m in find_peaks(-values)[0]]
    report = BumpReport(
        n_violations=int(upward.shape[0]),
        violation_mass=float(upward.sum()),
        max_violation=float(upward.max()) if upward.size else 0.0,
        barrier_positions=barriers,
        barrier_heights=[float(values[b]) for b in barriers],
        n_local_minima=len(minima),
        minima_positions=minima,
        tolerance=float(tolerance),
    )
    logger.debug(f"Bump report: {report}")
    return report


def _depth(values: np.ndarray, idx: int) -> float:
    """Smaller of the rises to the highest point on either side."""
    return float(min(values[: idx + 1].max(), values[idx:].max()) - values[idx])


def misclassification_rate(spec: NetworkSpec, params: ParamVector, dataset: Batch) -> float:
    """Fraction of examples whose arg-max output differs from the label.

    Parameters
    ----------
    spec : NetworkSpec
        a softmax-cross-entropy network
    params : ParamVector
        parameters
    dataset : Batch
        labelled examples

    Returns
    -------
    float
        error rate in [0, 1]

    Raises
    ------
    ValueError
        if the network does not use the softmax-cross-entropy loss
    """
    if spec.loss != SOFTMAX_CROSS_ENTROPY:
        raise ValueError(f"Error rates need {SOFTMAX_CROSS_ENTROPY}, got {spec.loss}")
    outputs = forward(spec, params, dataset).outputs
    labels = np.asarray(dataset.targets)
    if labels.ndim > 1:
        labels = np.argmax(labels, axis=1)
    return float(np.mean(np.argmax(outputs, axis=1) != labels))
