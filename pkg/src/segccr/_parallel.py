"""Order-preserving parallel map capped by ``SEGCCR_THREADS``."""

import os

from joblib import Parallel, delayed

ENV_VAR = "SEGCCR_THREADS"


def resolve_workers(n_jobs=None) -> int:
    """Worker count: explicit ``n_jobs``, else the env var, else 1; the env var caps both."""
    cap = os.environ.get(ENV_VAR)
    cap = int(cap) if cap else None
    if n_jobs is None:
        n_jobs = cap or 1
    n_jobs = max(1, int(n_jobs))
    if cap is not None:
        n_jobs = min(n_jobs, max(1, cap))
    return n_jobs


def pmap(func, items, n_jobs=None):
    """``[func(x) for x in items]``, possibly across processes; result order is fixed."""
    items = list(items)
    workers = resolve_workers(n_jobs)
    if workers == 1 or len(items) < 2:
        return [func(x) for x in items]
    return Parallel(n_jobs=workers, backend="loky")(delayed(func)(x) for x in items)
