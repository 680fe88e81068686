"""Generative tensor-network classification.

Per-class matrix-product-state models trained as generative Born machines,
classified by fidelity, plus the lazy class-sum and discriminative
label-index baselines, dataset tooling, and clustering/entropy analyses.
The heavy lifting lives in the compiled ``_gtnc`` extension; this package
re-exports it unchanged.
"""

try:
    from ._gtnc import *  # noqa: F401,F403  (installed package layout)
    from ._gtnc import __version__  # noqa: F401
except ImportError:  # in-tree builds put _gtnc next to the package on sys.path
    from _gtnc import *  # noqa: F401,F403
    from _gtnc import __version__  # noqa: F401
