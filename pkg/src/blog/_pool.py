"""Worker-count policy for optional thread fan-out.

The BLOG_THREADS environment variable caps the pool size; without it the
cap is the CPU count, at most 8.  Work is always split and merged in task
order, so results do not depend on the pool size.
"""

import os

ENV_VAR = "BLOG_THREADS"


def worker_count(n_tasks):
    if n_tasks <= 1:
        return 1
    raw = os.environ.get(ENV_VAR, "").strip()
    if raw:
        try:
            limit = int(raw)
        except ValueError:
            limit = 1
        return max(1, min(limit, n_tasks))
    return max(1, min(os.cpu_count() or 1, n_tasks, 8))
