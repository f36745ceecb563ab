"""Result record for one pairwise correlation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TauResult:
    """Integer pair counts plus the derived tau values for one (u, v) pair.

    The integer counts are authoritative; tau_a and tau_b are derived from
    them.  ``numerator`` is the concordant-minus-discordant pair count,
    ``n0`` the total number of element pairs n(n-1)/2, ``n1``/``n2`` the
    tied-pair counts within each vector, ``n3`` the jointly-tied pair count.
    ``defined_b`` is False exactly when tau_b has a zero denominator
    (a constant vector).  Kernels that only produce tau_a leave the tie
    counts at zero and tau_b as NaN.
    """

    numerator: int
    n_d: int
    n1: int
    n2: int
    n3: int
    n0: int
    tau_a: float
    tau_b: float
    defined_b: bool


def result_from_counts(n: int, n_d: int, n1: int, n2: int, n3: int) -> TauResult:
    """Assemble a full TauResult from the counts of a tie-aware kernel.

    numerator = n0 - n1 - n2 + n3 - 2*n_d, which equals n_c - n_d for any
    tie pattern.
    """
    n0 = n * (n - 1) // 2
    numerator = n0 - n1 - n2 + n3 - 2 * n_d
    tau_a = numerator / n0
    defined_b = n1 < n0 and n2 < n0
    if defined_b:
        tau_b = numerator / math.sqrt(float(n0 - n1) * float(n0 - n2))
    else:
        tau_b = math.nan
    return TauResult(
        numerator=int(numerator),
        n_d=int(n_d),
        n1=int(n1),
        n2=int(n2),
        n3=int(n3),
        n0=int(n0),
        tau_a=tau_a,
        tau_b=tau_b,
        defined_b=defined_b,
    )


def derive_taus(numerator, n1, n2, n: int, tau_b_valid: bool = True):
    """Vectorized tau derivation from integer count arrays.

    Returns (tau_a, tau_b) float64 arrays; tau_b is NaN wherever its
    denominator vanishes (a constant vector), or everywhere when
    tau_b_valid is False (records of a tau-a-only kernel).  Readers of the
    binary format use this same arithmetic, so recomputed values match the
    writer's bit for bit.
    """
    n0 = n * (n - 1) // 2
    num = np.asarray(numerator, dtype=np.int64)
    t1 = np.asarray(n1, dtype=np.uint64).astype(np.float64)
    t2 = np.asarray(n2, dtype=np.uint64).astype(np.float64)
    tau_a = num / n0
    if tau_b_valid:
        denom = np.sqrt((n0 - t1) * (n0 - t2))
        with np.errstate(divide="ignore", invalid="ignore"):
            tau_b = np.where(denom > 0, num / denom, np.nan)
    else:
        tau_b = np.full(num.shape, np.nan)
    return tau_a, tau_b


def result_tau_a_only(n: int, numerator: int) -> TauResult:
    """Assemble the partial TauResult of the quadratic kernel.

    Tie counts are not computed by that kernel; they stay zero and tau_b is
    reported as NaN.  ``defined_b`` only reflects that tau_a is applicable.
    """
    n0 = n * (n - 1) // 2
    return TauResult(
        numerator=int(numerator),
        n_d=0,
        n1=0,
        n2=0,
        n3=0,
        n0=int(n0),
        tau_a=numerator / n0,
        tau_b=math.nan,
        defined_b=True,
    )
