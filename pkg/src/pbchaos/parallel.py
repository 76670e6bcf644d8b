"""Order-preserving parallel map over independent work items.

Every work item is a pure function of its arguments, so the merged
result is identical at any worker count; only wall time changes.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_jobs() -> int:
    return os.cpu_count() or 1


def _call(payload):
    fn, args = payload
    return fn(*args)


def run_indexed(fn, args_list, jobs: int = 1):
    """Apply fn(*args) to each argument tuple, results in input order."""
    if jobs <= 1 or len(args_list) <= 1:
        return [fn(*args) for args in args_list]
    with ProcessPoolExecutor(max_workers=min(jobs, len(args_list))) as pool:
        return list(pool.map(_call, [(fn, a) for a in args_list]))
