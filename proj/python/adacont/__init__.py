"""Stepper-preconditioned Newton-Krylov continuation of steady states."""

import json as _json

from ._core import (
    ConfigError,
    DdcProblem,
    PreconditionerSpec,
    Problem,
    SnapshotError,
    SolverFailure,
    ToyProblem,
    WaleffeProblem,
    assembled_rhs,
    bicgstab,
    convergence_metric,
    jacobian_action,
    read_snapshot,
    residual_action,
    trace_branch,
    verify,
    write_snapshot,
)
from ._core import run as _run
from ._core import sweep as _sweep


def run(config):
    """Run a continuation; `config` is a dict in the CLI's JSON layout."""
    return _run(_json.dumps(config))


def sweep(config, delta_t=None):
    return _sweep(_json.dumps(config), delta_t)


__all__ = [
    "ConfigError", "DdcProblem", "PreconditionerSpec", "Problem", "SnapshotError", "SolverFailure",
    "ToyProblem", "WaleffeProblem", "assembled_rhs", "bicgstab", "convergence_metric", "jacobian_action",
    "read_snapshot", "residual_action", "run", "sweep", "trace_branch", "verify", "write_snapshot",
]
