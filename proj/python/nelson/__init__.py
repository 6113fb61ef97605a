"""Numerical lab for the Nelson model."""

import json

from ._nelson import (
    ConstantsReport,
    ConvergenceError,
    DegenerateGridError,
    Estimate,
    FormBoundReport,
    HydrogenRef,
    MatrixCoefficients,
    ModelParams,
    QuadResult,
    ValidationError,
    binding_integral_closed,
    coupling_constants,
    form_factor_sq,
    hydrogen_ground,
    inverse_power_moment,
    lemma_suite,
    matrix_coefficients,
    run_cli,
    vev_grid,
    vev_mc,
)

__all__ = [
    "ConstantsReport",
    "ConvergenceError",
    "DegenerateGridError",
    "Estimate",
    "FormBoundReport",
    "HydrogenRef",
    "MatrixCoefficients",
    "ModelParams",
    "QuadResult",
    "ValidationError",
    "binding_integral_closed",
    "coupling_constants",
    "form_factor_sq",
    "hydrogen_ground",
    "inverse_power_moment",
    "lemma_suite",
    "matrix_coefficients",
    "run",
    "run_cli",
    "vev_grid",
    "vev_mc",
]


def run(*args):
    """Run a CLI command and return the parsed artifact.

    JSON artifacts come back as dicts, sweep tables as CSV text.
    Raises RuntimeError with the diagnostics on a non-zero exit code.
    """
    code, out, err = run_cli([str(a) for a in args])
    if code != 0:
        raise RuntimeError(f"nelson {args[0] if args else ''} exited with {code}: {err.strip()}")
    if args and args[0] == "sweep":
        return out
    return json.loads(out)
