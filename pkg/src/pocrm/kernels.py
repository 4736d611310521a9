"""Kernel selection: numba-jitted hot path with a pure numpy fallback.

Set the environment variable ``POCRM_NUMBA=0`` to force the pure path
(useful for debugging and for the benchmark in benchmarks/).  The module
exposes two complete kernel namespaces:

- ``impl``: the active one (jitted when numba is available and enabled);
- ``pure``: always the plain-Python implementation.

Both are loaded from pocrm._kernels_impl; the jitted copy is a second,
independent module object so that kernel-to-kernel calls stay inside one
path.  Randomness is bit-identical across the two paths: numba's
``np.random`` reproduces numpy's MT19937 stream.
"""

from __future__ import annotations

import importlib.util
import os

_JIT_NAMES = [
    "derive_seed",
    "loglik_counts",
    "score_counts",
    "mle_counts",
    "weighted_loglik",
    "weighted_score",
    "weighted_mle",
    "recommend_combo",
    "model_allocation",
    "run_trial_capture",
    "simulate_trials",
    "eq2_sample",
    "pav_inplace",
    "isotonic_2d_inplace",
    "benchmark_trials",
]


def _load_impl_module():
    spec = importlib.util.find_spec("pocrm._kernels_impl")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    return mod


pure = _load_impl_module()

_env = os.environ.get("POCRM_NUMBA", "1").strip().lower()
_requested = _env not in ("0", "false", "no", "off")

NUMBA_ENABLED = False
if _requested:
    try:
        from numba import njit

        impl = _load_impl_module()
        for _name in _JIT_NAMES:
            setattr(impl, _name, njit(cache=True)(getattr(impl, _name)))
        NUMBA_ENABLED = True
    except ImportError:
        impl = pure
else:
    impl = pure


def using_numba() -> bool:
    return NUMBA_ENABLED


TIE_RULE_RANDOM = pure.TIE_RULE_RANDOM
TIE_RULE_LOWEST = pure.TIE_RULE_LOWEST
