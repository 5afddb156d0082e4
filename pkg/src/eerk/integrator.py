"""Generic EERK stage loop with optional stage-energy-law monitoring.

One step of an s-stage method applied to the stabilized problem
``u' = -L u + g(u)`` reads, entirely in the sine eigenbasis,

    U^{i+1} = U^1 + sum_{j<=i} a_{i+1,j}(-tau*mu) [tau*g(U^j) - tau*mu*U^1]

for ``i = 1..s``, where ``mu`` is the eigenvalue map of the stiff operator
and each coefficient ``a_{i+1,j}`` is evaluated once per eigenvalue and
cached for the whole run.

When monitoring is on, each step also records the slack ("margin") of the
stage energy inequality

    E[U^{j+1}] - E[U^1]  <=  -(1/tau) * sum_{k<=j} <dU^{k+1},
                                sum_{l<=k} d_{kl}(-tau*mu) dU^{l+1}>

in the problem's metric (H^{-1} for Cahn-Hilliard, L^2 otherwise), where
``dU^{i+1} = U^{i+1} - U^i`` and ``d_{kl}`` is the differentiation matrix
evaluated per eigenvalue.  Nonnegative margins certify that the inequality
held for that step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from eerk.dissipation import differentiation_matrix
from eerk.phi import evaluate
from eerk.spatial import Problem
from eerk.tableaux import Tableau

__all__ = [
    "DivergenceError",
    "StepRecord",
    "RunReport",
    "step",
    "stage_energy_margin",
    "integrate",
]


class DivergenceError(ArithmeticError):
    """A stage produced non-finite values."""

    def __init__(self, step_index: int):
        super().__init__(f"non-finite state at step {step_index}")
        self.step_index = step_index


@dataclass
class StepRecord:
    """Stages, stage increments, energies and margins of one step."""

    index: int
    stages: list  # U^{n,1} .. U^{n,s+1}
    deltas: list  # U^{n,i+1} - U^{n,i} for i = 1..s
    energies: np.ndarray  # E[U^{n,j}] for j = 1..s+1
    margins: Optional[np.ndarray] = None  # slack of the stage law, j = 1..s


class _StepWorkspace:
    """Spectral coefficient cache for a fixed (problem, tableau, tau)."""

    def __init__(self, problem: Problem, tableau: Tableau, tau: float, monitor: bool):
        if tau <= 0:
            raise ValueError(f"step size must be positive, got {tau}")
        self.problem = problem
        self.tableau = tableau
        self.tau = float(tau)
        op = problem.op
        self.mu = problem.spectral_shift(op.eigenvalues)
        self.z = -self.tau * self.mu
        s = tableau.stages
        self.coeff = [[np.asarray(evaluate(tableau.rows[i][j], self.z), dtype=float)
                       for j in range(i + 1)]
                      for i in range(s)]
        self.dmats = None
        if monitor:
            # (m, s, s) -> (s, s, m): d_{kl} per eigenvalue
            self.dmats = np.moveaxis(differentiation_matrix(tableau, self.z), 0, -1)
        self.metric_weight = op.h / op.eigenvalues if problem.metric == "hminus1" else op.h

    def run_step(self, u_prev: np.ndarray, index: int) -> StepRecord:
        # overflow in a blowing-up nonlinearity is handled via the
        # divergence check, not floating-point warnings
        with np.errstate(over="ignore", invalid="ignore"):
            return self._run_step(u_prev, index)

    def _run_step(self, u_prev: np.ndarray, index: int) -> StepRecord:
        problem, op, tau = self.problem, self.problem.op, self.tau
        s = self.tableau.stages
        u1_hat = op.forward(u_prev)
        stages = [u_prev]
        w_hats = []
        stage_hats = [u1_hat]
        for i in range(s):
            g_i = problem.g_stabilized(stages[i])
            w_hats.append(tau * op.forward(g_i) - tau * self.mu * u1_hat)
            acc = u1_hat.copy()
            for j in range(i + 1):
                acc += self.coeff[i][j] * w_hats[j]
            u_next = op.inverse(acc)
            if not np.all(np.isfinite(u_next)):
                raise DivergenceError(index)
            stages.append(u_next)
            stage_hats.append(acc)
        deltas = [stages[i + 1] - stages[i] for i in range(s)]
        energies = np.array([problem.energy(u) for u in stages])
        margins = None
        if self.dmats is not None:
            delta_hats = [stage_hats[i + 1] - stage_hats[i] for i in range(s)]
            margins = _margins_from_spectral(self.dmats, delta_hats, energies,
                                             self.metric_weight, tau)
        return StepRecord(index, stages, deltas, energies, margins)


def _margins_from_spectral(dmats, delta_hats, energies, weight, tau):
    s = len(delta_hats)
    margins = np.empty(s)
    quad = 0.0
    for k in range(s):
        v = np.zeros_like(delta_hats[0])
        for l in range(k + 1):
            v += dmats[k, l] * delta_hats[l]
        quad += float(np.sum(weight * delta_hats[k] * v))
        margins[k] = -quad / tau - (energies[k + 1] - energies[0])
    return margins


def step(problem: Problem, tableau: Tableau, u_prev, tau: float,
         monitor: bool = False) -> StepRecord:
    """Advance one step from ``u_prev``; see the module docstring.

    Builds the coefficient cache on the fly; for multi-step runs use
    :func:`integrate`, which caches across steps.
    """
    ws = _StepWorkspace(problem, tableau, tau, monitor)
    return ws.run_step(np.asarray(u_prev, dtype=float), 0)


def stage_energy_margin(problem: Problem, tableau: Tableau, record: StepRecord,
                        tau: float) -> np.ndarray:
    """Margins of the stage energy inequality for a completed step.

    Recomputes the quadratic form from the record's stage increments,
    independently of the cached path inside :func:`integrate`.
    """
    op = problem.op
    dmats = np.moveaxis(differentiation_matrix(tableau, -tau * problem.spectral_shift(op.eigenvalues)), 0, -1)
    delta_hats = [op.forward(d) for d in record.deltas]
    weight = op.h / op.eigenvalues if problem.metric == "hminus1" else op.h
    return _margins_from_spectral(dmats, delta_hats, record.energies, weight, tau)


@dataclass
class RunReport:
    """Per-run series: energies, sup-norms, margins and the final state."""

    method: str
    tau: float
    times: np.ndarray
    energies: np.ndarray
    sup_norms: np.ndarray
    final_state: np.ndarray
    margins: Optional[np.ndarray]  # (n_steps, s) when monitored
    diverged: bool
    diverged_step: Optional[int]
    wall_time: float

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1


def _step_count(t_final: float, tau: float) -> int:
    ratio = t_final / tau
    n = round(ratio)
    if n < 1 or abs(ratio - n) > 8 * np.spacing(max(1.0, ratio)):
        raise ValueError(f"final time {t_final} is not an integer multiple of tau {tau}")
    return int(n)


def integrate(problem: Problem, tableau: Tableau, u0, tau: float, t_final: float,
              monitor: bool = False, snapshot_steps=None, snapshots=None) -> RunReport:
    """Run ``t_final / tau`` steps from ``u0``.

    ``snapshot_steps``/``snapshots``: optional set and dict; after step ``n``
    in the set, a copy of the state is stored under key ``n`` (used by the
    convergence driver to sample a reference run).  On divergence the report
    is truncated at the last finite step and flagged.
    """
    n_steps = _step_count(t_final, tau)
    if snapshot_steps is not None and snapshots is None:
        raise ValueError("snapshot_steps given without a snapshots dict")
    u = np.asarray(u0, dtype=float).copy()
    ws = _StepWorkspace(problem, tableau, tau, monitor)
    energies = [problem.energy(u)]
    sup_norms = [float(np.max(np.abs(u)))]
    margins = [] if monitor else None
    diverged, diverged_step = False, None
    start = time.perf_counter()
    done = 0
    for n in range(1, n_steps + 1):
        try:
            rec = ws.run_step(u, n)
        except DivergenceError as err:
            diverged, diverged_step = True, err.step_index
            break
        u = rec.stages[-1]
        done = n
        energies.append(rec.energies[-1])
        sup_norms.append(float(np.max(np.abs(u))))
        if monitor:
            margins.append(rec.margins)
        if snapshot_steps is not None and n in snapshot_steps:
            snapshots[n] = u.copy()
    wall = time.perf_counter() - start
    times = tau * np.arange(done + 1)
    return RunReport(
        method=tableau.label,
        tau=tau,
        times=times,
        energies=np.asarray(energies),
        sup_norms=np.asarray(sup_norms),
        final_state=u,
        margins=np.asarray(margins) if monitor and margins else None,
        diverged=diverged,
        diverged_step=diverged_step,
        wall_time=wall,
    )
