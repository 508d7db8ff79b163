"""Seeded search for the closest state (in trace distance) that breaks a predicate.

The search walks segments ``rho(t) = (1 - t) sigma + t omega`` from the
start state toward candidate states ``omega`` and bisects for the first
``t`` where the predicate turns true.  The distance found along a segment
is ``t * tau(sigma, omega)``.  Candidates come from supplied seed states,
the computational basis and random states.  The best ones are then
refined by random local moves of a Cholesky-style factor ``G`` with
``omega = G G^dagger / Tr(G G^dagger)``.  The result is an upper bound on
the true minimum.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np

from rtlab import numerics as nx
from rtlab.errors import ValidationError
from rtlab.states import DensityMatrix


@dataclass(frozen=True)
class SearchBudget:
    restarts: int = 48
    refine_iters: int = 150
    refine_starts: int = 3
    bisection_steps: int = 55
    seed: int = 0

    def __post_init__(self):
        if min(self.restarts, self.refine_iters, self.refine_starts) < 0 or self.bisection_steps < 1:
            raise ValidationError("search budget entries must be nonnegative, bisection_steps positive")


@dataclass(frozen=True)
class RadiusResult:
    radius: float
    witness: DensityMatrix | None
    lower_bound: float
    method: str = "numeric-search"
    distance: str = "trace"

    @property
    def found(self) -> bool:
        return self.witness is not None


def _state_from_factor(g: np.ndarray) -> np.ndarray:
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return rho / np.trace(rho).real


def _segment(sigma: np.ndarray, omega: np.ndarray, broken: Callable, steps: int):
    """Distance and witness of the first breaking point on the segment, if any."""
    end = DensityMatrix(omega)
    if not broken(end):
        return np.inf, None
    lo, hi = 0.0, 1.0
    witness = end
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        rho = DensityMatrix((1 - mid) * sigma + mid * omega)
        if broken(rho):
            hi, witness = mid, rho
        else:
            lo = mid
    return nx.trace_distance(sigma, witness.matrix), witness


def minimal_breaking_distance(sigma: DensityMatrix, broken: Callable[[DensityMatrix], bool],
                              budget: SearchBudget, lower_bound: float = 0.0,
                              seed_states: Sequence[np.ndarray] = ()) -> RadiusResult:
    """Upper bound on ``min tau(sigma, rho)`` over states with ``broken(rho)``.

    Returns radius ``inf`` and no witness when no candidate breaks.
    """
    if broken(sigma):
        return RadiusResult(0.0, sigma, min(lower_bound, 0.0))
    dim = sigma.dim
    rng = np.random.default_rng(budget.seed)
    base = sigma.matrix
    factors = []
    for s in seed_states:
        w, v = np.linalg.eigh(np.asarray(s, dtype=complex))
        factors.append(v * np.sqrt(np.clip(w, 0.0, None)))
    factors += [np.eye(dim, dtype=complex)[:, [k]] @ np.ones((1, dim)) / np.sqrt(dim) for k in range(dim)]
    for k in range(budget.restarts):
        rank = dim if k % 2 else 1
        g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
        factors.append(np.hstack([g, np.zeros((dim, dim - rank))]))
    if not factors:
        raise ValidationError("search budget admits no candidate directions")

    scored = []
    for g in factors:
        g = np.asarray(g, dtype=complex)
        if g.shape[1] < dim:
            g = np.hstack([g, np.zeros((dim, dim - g.shape[1]))])
        if np.linalg.norm(g) == 0:
            continue
        dist, wit = _segment(base, _state_from_factor(g), broken, budget.bisection_steps)
        scored.append((dist, len(scored), g, wit))
    scored.sort(key=lambda x: (x[0], x[1]))
    best_dist, _, _, best_wit = scored[0]

    for dist, _, g, wit in scored[:budget.refine_starts]:
        if not np.isfinite(dist):
            break
        step = 0.3
        for _ in range(budget.refine_iters):
            scale = np.linalg.norm(g)
            trial = g + step * scale * (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)) / dim
            d2, w2 = _segment(base, _state_from_factor(trial), broken, budget.bisection_steps)
            if d2 < dist:
                g, dist, wit = trial, d2, w2
                step = min(step * 1.5, 1.0)
            else:
                step *= 0.85
        if dist < best_dist:
            best_dist, best_wit = dist, wit
    if not np.isfinite(best_dist):
        return RadiusResult(np.inf, None, lower_bound)
    return RadiusResult(float(best_dist), best_wit, lower_bound)
