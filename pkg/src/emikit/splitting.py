"""Lie-Trotter splitting over an abstract two-operator decomposition.

One step first advances the membrane/gap relaxation (the cell-model block,
solved exactly by an integrating factor with the forcing frozen at the substep
midpoint) and then takes one implicit step of the diffusion block supplied by
a solver backend.  Both substeps use the full step size, so the composition is
first-order accurate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .core import NumericError

__all__ = ["TimeGrid", "SplitProblem", "IntegrationError",
           "relaxation_update", "lie_trotter_step", "integrate"]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with n_f steps from t0 to t_end."""

    t0: float
    t_end: float
    n_f: int

    def __post_init__(self):
        if not self.t0 < self.t_end:
            raise ValueError(f"need t0 < t_end, got [{self.t0}, {self.t_end}]")
        if self.n_f < 1:
            raise ValueError(f"need at least one step, got {self.n_f}")

    @property
    def dt(self) -> float:
        return (self.t_end - self.t0) / self.n_f

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_f + 1)


StepFn = Callable[[Any, float, float], Any]


@dataclass(frozen=True)
class SplitProblem:
    """Two-operator decomposition: state' = relaxation + diffusion.

    ``relax(state, t, dt)`` advances only the transmembrane unknowns by the
    cell-model block; ``diffuse(state, t, dt)`` performs one implicit step of
    the spatial/capacitive block.  Their sum must be the full right-hand side
    of the semi-discrete system.
    """

    relax: StepFn
    diffuse: StepFn
    state0: Any
    grid: TimeGrid


class IntegrationError(NumericError):
    """A substep failed; carries the partial trajectory and failing index."""

    def __init__(self, step_index: int, partial: Sequence, cause: Exception):
        super().__init__(f"time step {step_index} failed: {cause}")
        self.step_index = step_index
        self.partial = list(partial)
        self.cause = cause


def relaxation_update(values, c, r_inv, rest, g, dt):
    """Exact solution over dt of  c y' = -r_inv (y - rest) + g  (g constant).

    Vectorized over membranes/gap sites; ``r_inv`` may be zero (no ionic
    leak), in which case the update degenerates to y + (g/c) dt.
    """
    values = np.asarray(values, dtype=float)
    c = np.asarray(c, dtype=float)
    r_inv = np.asarray(r_inv, dtype=float)
    kappa = r_inv / c
    slope = (rest * r_inv + np.asarray(g, dtype=float)) / c   # y' = slope - kappa y
    x = kappa * dt
    small = x < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(small, dt * (1.0 - 0.5 * x), -np.expm1(-x) / np.where(small, 1.0, kappa))
    out = values + (slope - kappa * values) * phi
    return out if out.ndim else float(out)


def lie_trotter_step(problem: SplitProblem, state, t: float, dt: float):
    """Advance one step: relaxation block first, then the implicit diffusion."""
    state = problem.relax(state, t, dt)
    return problem.diffuse(state, t, dt)


def integrate(problem: SplitProblem) -> list:
    """All states on the time grid, starting with the initial state.

    On a substep failure raises IntegrationError carrying the states computed
    so far and the failing step index.
    """
    grid = problem.grid
    states = [problem.state0]
    t = grid.t0
    for step in range(grid.n_f):
        try:
            states.append(lie_trotter_step(problem, states[-1], t, grid.dt))
        except Exception as exc:  # noqa: BLE001 - re-raised with context
            raise IntegrationError(step, states, exc) from exc
        t = grid.t0 + (step + 1) * grid.dt
    return states
