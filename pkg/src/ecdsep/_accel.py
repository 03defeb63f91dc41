"""Backend selection for the compiled ECDSep loop.

The Cython extension is imported once at package import. Setting
``ECDSEP_PURE_PYTHON=1`` in the environment, or a failed import, leaves
``kernels`` as ``None`` and every run goes through the pure-Python step.
"""

from __future__ import annotations

import logging
import os
import warnings

import numpy as np

logger = logging.getLogger(__name__)

kernels = None
if os.environ.get("ECDSEP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ecdsep import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on the build
        logger.debug("compiled kernels unavailable, using the pure-Python loop")

BACKEND = "cython" if kernels is not None else "python"

_ST_RUNNING, _ST_CONVERGED, _ST_CROSSED, _ST_NONFINITE, _ST_NEED_Z = range(5)

# standard-normal rows drawn per refill of the chaos buffer
Z_BLOCK = 4096


def available() -> bool:
    return kernels is not None


def run_ecd(kernel_spec, state, hp, rng, max_steps: int, record_every: int, keep_theta: bool):
    """Drive ``_kernels.ecd_advance`` from ``state`` for up to ``max_steps``.

    Returns the final state, the record array and optional snapshots.
    """
    # Deferred to avoid a cycle: optimizer imports this module.
    from ecdsep.core import NumericalError
    from ecdsep.optimizer import CONVERGED, CROSSED_F0, RUNNING, EcdState

    kind, params = kernel_spec
    params = np.ascontiguousarray(params, dtype=np.float64)
    theta = state.theta.copy()
    pi = state.pi.copy()
    n = theta.size
    f, grad = kernels.objective(kind, params, theta)
    scal = np.array([state.energy, state.delta_f0, f])
    hp_arr = np.array(
        [hp.dt, hp.eta, hp.nu, hp.f0, float(hp.s), hp.wd, float(hp.conserve_energy),
         hp.eps1, hp.eps2, float(hp.self_tune_f0), hp.f0_shift_factor]
    )
    n_rec = max_steps // record_every
    rec = np.zeros((n_rec, 5))
    snaps = np.zeros((n_rec if keep_theta else 0, n))
    if hp.nu > 0:
        z = rng.standard_normal((min(Z_BLOCK, max_steps + 2), n))
    else:
        z = np.zeros((0, n))
    z_row = 0
    step = state.step
    stop = state.step + max_steps
    rec_pos = 0
    skips_total = 0
    while True:
        step, z_row, rec_pos, status, skips = kernels.ecd_advance(
            kind, params, theta, pi, grad, scal, hp_arr, z, z_row, step, stop, record_every, rec, rec_pos, snaps
        )
        skips_total += skips
        if status != _ST_NEED_Z:
            break
        rows = min(Z_BLOCK, stop - step + 2)
        z = np.concatenate([z[z_row:], rng.standard_normal((rows, n))])
        z_row = 0
    if skips_total:
        warnings.warn(
            f"projection skipped {skips_total} time(s): positive target with zero momentum", RuntimeWarning
        )
    if status == _ST_NONFINITE:
        raise NumericalError("non-finite value in compiled loop", step)
    final = EcdState(
        theta=theta,
        pi=pi,
        energy=state.energy,
        delta_f0=float(scal[1]),
        step=step,
        terminated=status in (_ST_CONVERGED, _ST_CROSSED),
        status={_ST_CONVERGED: CONVERGED, _ST_CROSSED: CROSSED_F0}.get(status, RUNNING),
    )
    return final, rec[:rec_pos], (snaps[:rec_pos] if keep_theta else None)
