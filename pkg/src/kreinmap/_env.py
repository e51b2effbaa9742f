"""Thread-cap plumbing. Import this before numpy is first loaded.

KREINMAP_THREADS, when set, is forwarded to the usual BLAS thread-count
variables so that linear algebra parallelism is capped. Nothing in this
package spawns threads of its own, so results do not depend on the value.
"""

import os

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def cap_threads() -> None:
    cap = os.environ.get("KREINMAP_THREADS")
    if not cap:
        return
    for var in _BLAS_VARS:
        os.environ[var] = cap


cap_threads()
