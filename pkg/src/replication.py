"""
Replication plumbing for Monte Carlo loops.

Every replication r draws from its own counter-based stream derived from
(seed, r), so results do not depend on how replications are scheduled.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, TypeVar
import logging

import numpy as np
from tqdm import tqdm

logger = logging.getLogger(__name__)

T = TypeVar("T")


def replication_seed(seed: int, r: int) -> np.random.SeedSequence:
    """
    Seed sequence for replication r.

    Args:
        seed: Experiment seed (non-negative)
        r: Replication index

    Returns:
        SeedSequence with entropy [seed, r]
    """
    return np.random.SeedSequence([int(seed), int(r)])


def child_seed(seed: int, r: int, stream: int) -> int:
    """
    Integer seed for auxiliary randomness inside replication r.

    Args:
        seed: Experiment seed
        r: Replication index
        stream: Stream label (e.g. 1 for EM restarts, 2 for split shuffles)

    Returns:
        32-bit integer seed
    """
    return int(np.random.SeedSequence([int(seed), int(r), int(stream)]).generate_state(1)[0])


def run_replications(
    fn: Callable[[int], T],
    reps: int,
    workers: int = 1,
    progress: bool = False,
    desc: str = "replications",
) -> List[T]:
    """
    Evaluate fn(r) for r = 0..reps-1 and return the results in replication order.

    Args:
        fn: Picklable callable (top-level function or functools.partial of one)
        reps: Number of replications
        workers: Worker processes; 1 runs in-process
        progress: Show a tqdm progress bar
        desc: Progress bar label

    Returns:
        List of results, index r holding fn(r)
    """
    indices = range(reps)

    if workers <= 1:
        iterator = tqdm(indices, desc=desc, disable=not progress)
        return [fn(r) for r in iterator]

    chunksize = max(1, reps // (workers * 8))
    logger.info(f"Running {reps} {desc} on {workers} workers (chunksize={chunksize})")
    with ProcessPoolExecutor(max_workers=workers) as executor:
        results = executor.map(fn, indices, chunksize=chunksize)
        return list(tqdm(results, total=reps, desc=desc, disable=not progress))
