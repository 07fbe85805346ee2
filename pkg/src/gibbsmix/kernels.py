"""Transition kernels on a finite group and their spectral summaries.

Three kernels are built from a group and a symmetric generator set R (|R| = m,
|G| = n):

* base walk: from z, each z*s (s in R) receives 2/(nm); hold 1 - 2/n.
  Uniform stationary measure. Its spectral gap is the quantity gamma_hat that
  every horizon recipe in this package is phrased in.
* edge walk: from z, each z*s receives 1/(nm); hold 1 - 1/n. Used by the
  spectral lower-bound experiments (it is the one-step conditional expectation
  of the simplex chain).
* comparison kernel: the kernel driving the one-step recursion of the
  cross-correlation statistics of two proportionally coupled simplex chains
  (see simplex.s_vector). Stationary measure (2, 1, ..., 1)/(n+1), reversible.

The comparison kernel rows are assembled from the exact one-step recursion
with three cases (identity row; generator rows, with a separate branch for
involution generators; non-generator rows) and then inversion-symmetrized:
each off-diagonal coefficient is split half onto w and half onto w^{-1}.
Cross-correlation vectors are inversion-symmetric, so the action is unchanged,
and only the symmetrized representative satisfies detailed balance as a
matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ComparisonViolated, NonStochasticRow, NotReversible
from .groups import GeneratorSet, GroupTable

__all__ = [
    "TransitionKernel",
    "SpectralSummary",
    "ComparisonReport",
    "base_walk_kernel",
    "edge_walk_kernel",
    "comparison_kernel",
    "spectral_summary",
    "dirichlet_form",
    "dirichlet_form_matrix",
    "verify_comparison",
    "kernel_to_csv",
    "cycle_gap",
    "complete_set_gap",
]

_ROW_TOL = 1e-12


@dataclass(eq=False)
class TransitionKernel:
    """Row-stochastic matrix p with stationary measure pi."""

    n: int
    p: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.pi = np.asarray(self.pi, dtype=float)
        bad = np.abs(self.p.sum(axis=1) - 1.0)
        worst = int(bad.argmax())
        if bad[worst] > _ROW_TOL:
            raise NonStochasticRow(f"row {worst} sums to 1{bad[worst]:+.3e}")
        if self.p.min() < 0.0:
            raise NonStochasticRow("negative transition probability")


@dataclass
class SpectralSummary:
    eigenvalues: np.ndarray   # descending
    gap: float                # 1 - lambda_2


@dataclass
class ComparisonReport:
    min_dirichlet_ratio: float
    max_measure_ratio: float      # max over states of pi/pi_hat and pi_hat/pi
    gap: float                    # comparison kernel
    gap_hat: float                # base walk
    trials: int
    ok: bool


def base_walk_kernel(group: GroupTable, gens: GeneratorSet) -> TransitionKernel:
    n, m = group.n, gens.m
    p = np.zeros((n, n))
    rows = np.arange(n)
    for r in gens.elements:
        np.add.at(p, (rows, group.mul[rows, r]), 2.0 / (n * m))
    p[rows, rows] += 1.0 - p.sum(axis=1)
    return TransitionKernel(n=n, p=p, pi=np.full(n, 1.0 / n))


def edge_walk_kernel(group: GroupTable, gens: GeneratorSet) -> TransitionKernel:
    n, m = group.n, gens.m
    p = np.zeros((n, n))
    rows = np.arange(n)
    for r in gens.elements:
        np.add.at(p, (rows, group.mul[rows, r]), 1.0 / (n * m))
    p[rows, rows] += 1.0 - p.sum(axis=1)
    return TransitionKernel(n=n, p=p, pi=np.full(n, 1.0 / n))


def comparison_kernel(group: GroupTable, gens: GeneratorSet) -> TransitionKernel:
    """Kernel of the rescaled cross-correlation recursion, reversible wrt
    (2, 1, ..., 1)/(n+1)."""
    n, m = group.n, gens.m
    mul, inv, e = group.mul, group.inv, group.identity
    gset = set(gens.elements)
    p = np.zeros((n, n))

    def put(row: int, w: int, c: float) -> None:
        # split between w and w^{-1}; the identity is self-inverse
        wi = int(inv[w])
        if w == wi:
            p[row, w] += c
        else:
            p[row, w] += 0.5 * c
            p[row, wi] += 0.5 * c

    four = 1.0 / (2 * m * n)
    for h in range(n):
        if h == e:
            p[h, h] += 1.0 - 2.0 / (3 * n)
            for r in gens.elements:
                put(h, r, 2.0 / (3 * m * n))
            continue
        if h in gset:
            p[h, h] += 1.0 - 2.0 / n + 2.0 / (3 * m * n)
            put(h, e, 4.0 / (3 * m * n))
            if int(inv[h]) != h:
                put(h, int(mul[h, h]), 2.0 / (m * n))
                skip = (h, int(inv[h]))
            else:
                skip = (h,)
            for r in gens.elements:
                if r in skip:
                    continue
                ri = int(inv[r])
                hi = int(inv[h])
                for w in (mul[r, h], mul[r, hi], mul[ri, h], mul[ri, hi]):
                    put(h, int(w), four)
        else:
            p[h, h] += 1.0 - 2.0 / n
            hi = int(inv[h])
            for r in gens.elements:
                ri = int(inv[r])
                for w in (mul[r, h], mul[r, hi], mul[ri, h], mul[ri, hi]):
                    put(h, int(w), four)

    pi = np.full(n, 1.0 / (n + 1))
    pi[e] = 2.0 / (n + 1)
    return TransitionKernel(n=n, p=p, pi=pi)


def spectral_summary(kernel: TransitionKernel, reversibility_tol: float = 1e-12) -> SpectralSummary:
    """Eigenvalues via the symmetrization D^{1/2} P D^{-1/2}; requires
    detailed balance within tolerance."""
    flux = kernel.pi[:, None] * kernel.p
    resid = np.abs(flux - flux.T).max()
    if resid > reversibility_tol:
        raise NotReversible(f"detailed balance residual {resid:.3e}")
    d = np.sqrt(kernel.pi)
    sym = (d[:, None] * kernel.p) / d[None, :]
    vals = np.linalg.eigvalsh(0.5 * (sym + sym.T))
    vals = vals[::-1]
    return SpectralSummary(eigenvalues=vals, gap=float(1.0 - vals[1]))


def dirichlet_form_matrix(kernel: TransitionKernel) -> np.ndarray:
    """Matrix A with phi^T A phi = (1/2) sum pi_g p_gh (phi_g - phi_h)^2."""
    w = kernel.pi[:, None] * kernel.p
    sym = 0.5 * (w + w.T)
    d = 0.5 * (w.sum(axis=1) + w.sum(axis=0))
    return np.diag(d) - sym


def dirichlet_form(kernel: TransitionKernel, phi: np.ndarray) -> float:
    phi = np.asarray(phi, dtype=float)
    return float(phi @ dirichlet_form_matrix(kernel) @ phi)


def verify_comparison(
    group: GroupTable,
    gens: GeneratorSet,
    trials: int = 1000,
    seed: int = 0,
    strict: bool = False,
) -> ComparisonReport:
    """Check the Dirichlet-form and spectral-gap comparison between the
    comparison kernel and the base walk on random test functions.

    Inequalities checked: E(phi) >= (1/4) E_hat(phi) on every sampled phi,
    both measure ratios <= 2, and gap >= gap_hat / 8. With strict=True a
    violation raises ComparisonViolated naming the failed inequality.
    """
    comp = comparison_kernel(group, gens)
    base = base_walk_kernel(group, gens)
    a = dirichlet_form_matrix(comp)
    a_hat = dirichlet_form_matrix(base)
    rng = np.random.default_rng(seed)
    phis = rng.standard_normal((trials, group.n))
    num = np.einsum("bi,ij,bj->b", phis, a, phis)
    den = np.einsum("bi,ij,bj->b", phis, a_hat, phis)
    ratios = num / den
    min_ratio = float(ratios.min())
    max_measure = float(max((comp.pi / base.pi).max(), (base.pi / comp.pi).max()))
    gap = spectral_summary(comp).gap
    gap_hat = spectral_summary(base).gap
    ok = (
        min_ratio >= 0.25 - 1e-10
        and max_measure <= 2.0 + 1e-12
        and gap >= gap_hat / 8.0 - 1e-10
    )
    report = ComparisonReport(
        min_dirichlet_ratio=min_ratio,
        max_measure_ratio=max_measure,
        gap=gap,
        gap_hat=gap_hat,
        trials=trials,
        ok=ok,
    )
    if strict and not ok:
        if min_ratio < 0.25 - 1e-10:
            raise ComparisonViolated(f"dirichlet ratio {min_ratio:.6f} < 1/4")
        if max_measure > 2.0 + 1e-12:
            raise ComparisonViolated(f"measure ratio {max_measure:.6f} > 2")
        raise ComparisonViolated(f"gap {gap:.6e} < gap_hat/8 = {gap_hat / 8:.6e}")
    return report


def kernel_to_csv(kernel: TransitionKernel, path: str) -> None:
    """Row-major CSV with 17 significant digits."""
    np.savetxt(path, kernel.p, delimiter=",", fmt="%.17g")


def cycle_gap(n: int) -> float:
    """Base-walk gap on the n-cycle with generators {+1, -1}."""
    return (2.0 / n) * (1.0 - math.cos(2.0 * math.pi / n))


def complete_set_gap(n: int) -> float:
    """Base-walk gap on Z_n with the full non-identity generator set."""
    return 2.0 / (n - 1)
