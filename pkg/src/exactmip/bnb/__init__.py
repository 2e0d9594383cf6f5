"""Exact branch-and-bound."""

from .branching import PseudocostStore, select_branch_var, update_pseudocosts
from .dualproof import derive_dual_proof
from .propagation import propagate_node
from .repair import repair_solution
from .search import SolveParams, SolveResult, SolveStatus, solve

__all__ = ["PseudocostStore", "select_branch_var", "update_pseudocosts", "derive_dual_proof",
           "propagate_node", "repair_solution", "SolveParams", "SolveResult", "SolveStatus",
           "solve"]
