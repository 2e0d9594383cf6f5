"""Exact, tolerance-free mixed-integer linear programming.

Typical use::

    from exactmip import read_file, solve, emit_certificate, verify_certificate

    inst = read_file("model.lp")
    result = solve(inst)
    cert = emit_certificate(result)
    assert verify_certificate(cert)
"""

from .arith import ExtRational, parse_rational, render
from .bnb import SolveParams, SolveResult, SolveStatus, solve
from .certificate import emit_certificate, verify_certificate
from .cuts import certify_split_cut, generate_gmi
from .iis import additive_method, deletion_filter
from .io import read_file, read_instance, write_instance
from .lp import LocalBounds, solve_lp
from .model import Instance, LinearConstraint, Sense, Variable, build_instance, check_feasible

__all__ = [
    "ExtRational", "parse_rational", "render", "SolveParams", "SolveResult", "SolveStatus",
    "solve", "emit_certificate", "verify_certificate", "certify_split_cut", "generate_gmi",
    "additive_method", "deletion_filter", "read_file", "read_instance", "write_instance",
    "LocalBounds", "solve_lp", "Instance", "LinearConstraint", "Sense", "Variable",
    "build_instance", "check_feasible",
]

__version__ = "0.1.0"
