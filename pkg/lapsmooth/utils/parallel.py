"""
Ordered parallel map over replicates.
"""

from typing import Callable, List, Optional, Sequence, TypeVar, Union

from joblib import Parallel, cpu_count, delayed

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[Union[int, str]]) -> int:
    """Turn a thread setting ("auto", None or an integer) into a worker count."""
    if threads is None or threads == "auto":
        return max(1, cpu_count())
    count = int(threads)
    if count < 1:
        raise ValueError(f"threads must be >= 1 or 'auto', got {threads}")
    return count


def ordered_map(
    func: Callable[[T], R],
    items: Sequence[T],
    threads: Optional[Union[int, str]] = 1,
) -> List[R]:
    """
    Apply func to every item, returning results in item order.

    Runs on joblib's threading backend; items must not mutate shared state.
    """
    workers = resolve_threads(threads)
    if workers == 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=workers, prefer="threads")(delayed(func)(item) for item in items)
