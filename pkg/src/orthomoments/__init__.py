"""orthomoments: centered moments of linear eigenvalue statistics over the
orthogonal group — closed-form predictions and Haar-measure Monte Carlo.

Submodules
----------
splinefourier : exact piecewise-polynomial test-function algebra
partitions    : set partitions, pair partitions, mu* weights, sieve transforms
quadrature    : adaptive interval/box quadrature and vertical-line contours
predictions   : the closed-form moment formulas (C, C0, C2, C_even, C_odd, ...)
haarsim       : Haar samplers for SO(2N), O^-(2N+2), USp(2N) and Monte Carlo
cli           : predict / simulate / compare / sweep / validate-sampler
"""

import os as _os

# Keep BLAS single-threaded: the workloads here are many small matrices, where
# threaded BLAS only adds overhead and (worse) run-to-run nondeterminism.
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_var, "1")

__version__ = "0.1.0"
