"""Backend selection for the shell kernels.

Prefers the compiled extension when it was built; otherwise the NumPy
implementation.  Both expose the same six functions and are exercised
against each other in the test suite.  Set SCHOTTKYVIR_NO_EXT=1 to force
the NumPy backend.
"""

import os

if os.environ.get("SCHOTTKYVIR_NO_EXT"):
    from . import _kernels_py as _impl

    BACKEND = "numpy"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "numpy"

mobius_apply = _impl.mobius_apply
omega_partials = _impl.omega_partials
omega_n_partials = _impl.omega_n_partials
proj_conn_partials = _impl.proj_conn_partials
cauchy_pair_partials = _impl.cauchy_pair_partials
psi_partials = _impl.psi_partials
