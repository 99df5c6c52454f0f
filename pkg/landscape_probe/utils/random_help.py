"""Help with random generators and parallel evaluation."""
import os
from typing import Callable, Iterable, List, Optional, TypeVar, Union

import numpy as np
from joblib import Parallel, delayed
from tqdm.auto import tqdm

T = TypeVar("T")
R = TypeVar("R")


def random_generator(seed: Union[int, np.random.Generator] = None) -> np.random.Generator:
    """Create or return random generator.

    Parameters
    ----------
    seed : Union[int, np.random.Generator]
        Either a random generator or a seed or None.

    Returns
    -------
    np.random.Generator
        If None was provided return a randomly seeded
        generator. If a seed was provided return
        a generator with this seed. If a generator
        was provided return it.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def epoch_generator(seed: int, epoch: int) -> np.random.Generator:
    """Return a counter-based generator keyed by ``(seed, epoch)``.

    The stream for an epoch does not depend on how many numbers
    earlier epochs consumed.

    Parameters
    ----------
    seed : int
        run seed
    epoch : int
        epoch number

    Returns
    -------
    np.random.Generator
        Philox based generator
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, epoch])))


def resolve_threads(threads: Optional[int] = None) -> int:
    """Resolve the number of worker threads.

    Parameters
    ----------
    threads : Optional[int]
        explicit value, if None the env var ``LP_THREADS`` is used,
        if that is unset all cores are used

    Returns
    -------
    int
        joblib ``n_jobs`` value (``-1`` means all cores)

    Raises
    ------
    ValueError
        if ``LP_THREADS`` is not an integer
    """
    if threads is not None:
        return threads
    env = os.environ.get("LP_THREADS")
    if env is None or env.strip() == "":
        return -1
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"LP_THREADS has to be an integer, but got {env!r}")


def ordered_map(
    func: Callable[[T], R],
    items: Iterable[T],
    n_jobs: int = 1,
    progress: bool = False,
    desc: str = None,
) -> List[R]:
    """Apply ``func`` to every item, possibly on several threads.

    Results are returned in the order of ``items`` regardless of ``n_jobs``.

    Parameters
    ----------
    func : Callable
        pure function
    items : Iterable
        inputs
    n_jobs : int
        joblib thread count
    progress : bool
        show a tqdm progress bar
    desc : str
        progress bar description

    Returns
    -------
    List
        ``[func(item) for item in items]``
    """
    items = list(items)
    iterator = tqdm(items, desc=desc, disable=not progress)
    if n_jobs == 1:
        return [func(item) for item in iterator]
    return Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(func)(item) for item in iterator
    )
