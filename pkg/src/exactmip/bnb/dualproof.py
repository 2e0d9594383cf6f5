"""Dual proof constraints learned from infeasible node LPs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from ..lp import LocalBounds, LPResult, LPStatus
from ..model import Instance, LinearConstraint, Sense

__all__ = ["DualProof", "derive_dual_proof", "max_activity"]


@dataclass(frozen=True)
class DualProof:
    """``constraint`` equals ``sum_i multipliers[i] * row_i`` in ``>=`` form,
    where each row is read with its own sense (multipliers of ``<=`` rows
    are nonpositive)."""

    multipliers: tuple[Fraction, ...]
    constraint: LinearConstraint


def max_activity(coefs, local: LocalBounds):
    """Maximum of ``coefs . x`` over the box, or None when unbounded above."""
    total = Fraction(0)
    for j, a in coefs.items():
        b = local.upper[j] if a > 0 else local.lower[j]
        if not b.is_finite:
            return None
        total += a * b.value
    return total


def derive_dual_proof(instance: Instance, local: LocalBounds, farkas: LPResult | Sequence,
                      name: str = "proof") -> DualProof:
    """Aggregate the rows of ``instance`` with Farkas multipliers.

    The result is globally valid; over ``local`` its maximum activity falls
    short of its right-hand side.  All-zero multipliers (infeasibility caused
    by the bounds alone) give no proof and raise ValueError.
    """
    if isinstance(farkas, LPResult):
        if farkas.status is not LPStatus.INFEASIBLE or farkas.farkas is None:
            raise ValueError("dual proofs need an infeasible LP with Farkas multipliers")
        lam = farkas.farkas
    else:
        lam = tuple(Fraction(v) for v in farkas)
    if len(lam) != instance.m:
        raise ValueError("one multiplier per row expected")
    if not any(lam):
        raise ValueError("all multipliers are zero: empty dual proof")
    coefs: dict[int, Fraction] = {}
    rhs = Fraction(0)
    for con, li in zip(instance.constraints, lam):
        if not li:
            continue
        if (con.sense is Sense.GE and li < 0) or (con.sense is Sense.LE and li > 0):
            raise ValueError(f"multiplier of row {con.name} has the wrong sign")
        rhs += li * con.rhs
        for j, a in con.coefficients.items():
            coefs[j] = coefs.get(j, Fraction(0)) + li * a
    proof = LinearConstraint(name, coefs, Sense.GE, rhs)
    top = max_activity(proof.coefficients, local)
    if top is None or top >= rhs:
        raise ValueError("multipliers do not prove infeasibility of the node")
    return DualProof(tuple(lam), proof)
