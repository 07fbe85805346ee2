"""Exact-conservation arithmetic for two-coordinate Gibbs moves.

Both samplers in this package redistribute a conserved pair total s between
two coordinates as

    new_i = lam * alpha + beta,    new_j = (1 - lam) * alpha + beta,

with alpha + 2*beta = s (simplex moves: alpha = s, beta = 0). Evaluating both
formulas independently lets the float pair sum drift by an ulp per move. We
instead evaluate whichever share is the larger one (lam >= 1/2 picks the i
side) and obtain the other by subtraction from s. The computed share lies in
[s/2, s], so by Sterbenz's lemma the subtraction is exact and the pair sum is
bit-identical to s after every move. Rounding is monotone, so the computed
share also stays within [0, s] and the update remains monotone in lam.
"""

from __future__ import annotations

import numpy as np

__all__ = ["split_pair"]


def split_pair(total, alpha, beta, lam):
    """Split ``total`` into (lam*alpha + beta, (1-lam)*alpha + beta).

    Vectorized over numpy arrays (scalars come back as 0-d arrays). The two
    returned shares sum to ``total`` exactly, entrywise.
    """
    total = np.asarray(total, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    lam = np.asarray(lam, dtype=float)
    hi = lam >= 0.5
    share = np.where(hi, lam, 1.0 - lam) * alpha + beta
    rest = total - share
    a = np.where(hi, share, rest)
    b = np.where(hi, rest, share)
    return a, b
