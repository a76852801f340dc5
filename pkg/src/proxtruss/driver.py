"""Path-dependent incremental analysis driver.

A loading program names unit load patterns and lists per-step multipliers;
each step's external load is the multiplier-weighted pattern sum.  Steps
are solved sequentially: the increment solver is warm-started from the
previous step's solution (momentum reset, since stale momentum from a
different problem has no justification), the state is advanced, and the
requested displacement/stress/strain channels are recorded.

The Hessian of the smooth energy does not depend on the path state, so
the step size is resolved once at the first step and reused.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import IncrementProblem
from .hardening import HardeningLaw, StateSnapshot, initial_state, update_state
from .model import TrussModel
from .solvers import (
    IncrementSolution,
    SolverConfig,
    apgm_piecewise_solve,
    apgm_solve,
    pgm_solve,
    resolve_step_size,
)


class IncrementFailure(RuntimeError):
    """A load step failed to converge; carries the partial history."""

    def __init__(self, step_index: int, history: "AnalysisHistory"):
        super().__init__(f"load step {step_index} did not converge")
        self.step_index = step_index
        self.history = history


@dataclass(frozen=True)
class LoadingProgram:
    """Named unit load patterns plus an ordered list of multiplier maps.

    ``patterns`` maps names to dense load vectors (N, length d).
    ``steps[i]`` maps pattern names to dimensionless multipliers for step
    i+1.  ``overrides[i]``, when present, replaces solver settings
    (e.g. epsilon, max_iter) for that step.
    """

    patterns: dict
    steps: list
    overrides: list | None = None

    def __post_init__(self):
        if not self.steps:
            raise ValueError("a loading program needs at least one step")
        for step in self.steps:
            for name in step:
                if name not in self.patterns:
                    raise ValueError(f"step references unknown pattern {name!r}")
        if self.overrides is not None and len(self.overrides) != len(self.steps):
            raise ValueError("overrides list must match the number of steps")

    def load_vector(self, step_index: int) -> np.ndarray:
        """External load for step ``step_index`` (0-based)."""
        some = next(iter(self.patterns.values()))
        f = np.zeros_like(np.asarray(some, dtype=float))
        for name, mult in self.steps[step_index].items():
            f = f + float(mult) * np.asarray(self.patterns[name], dtype=float)
        return f


def program_from_dict(doc: dict, model: TrussModel) -> LoadingProgram:
    """Build a program from its JSON document.

    Patterns are sparse pairs [[dof, value_N], ...]; steps are objects
    mapping pattern names to multipliers.
    """
    d = model.n_free_dofs
    try:
        raw_patterns = doc["patterns"]
        raw_steps = doc["steps"]
    except KeyError as exc:
        raise ValueError(f"program document is missing key {exc}") from exc
    patterns = {}
    for name, pairs in raw_patterns.items():
        vec = np.zeros(d)
        for dof, value in pairs:
            dof = int(dof)
            if not 0 <= dof < d:
                raise ValueError(f"pattern {name!r} references DOF {dof} out of range")
            vec[dof] += float(value)
        patterns[name] = vec
    steps = [{str(k): float(mult) for k, mult in step.items()} for step in raw_steps]
    return LoadingProgram(patterns=patterns, steps=steps)


def load_program(path, model: TrussModel) -> LoadingProgram:
    with open(path, "r", encoding="utf-8") as fh:
        return program_from_dict(json.load(fh), model)


@dataclass(frozen=True)
class StepRecord:
    multipliers: dict
    displacements: np.ndarray
    stresses: np.ndarray
    strains: np.ndarray
    iterations: int
    time_s: float
    objective: float


@dataclass
class AnalysisHistory:
    """Per-step records for selected DOFs and members.

    Column layout of :meth:`to_csv` (constant per file): step index, one
    multiplier column per pattern name (sorted), cumulative displacement
    per selected DOF, stress (Pa) and strain per selected member,
    iteration count, wall time, objective value.
    """

    pattern_names: list
    dof_ids: list
    member_ids: list
    records: list = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return len(self.records)

    def header(self) -> list:
        cols = ["step"]
        cols += [f"load:{name}" for name in self.pattern_names]
        cols += [f"u:{dof}" for dof in self.dof_ids]
        cols += [f"stress:{mid}" for mid in self.member_ids]
        cols += [f"strain:{mid}" for mid in self.member_ids]
        cols += ["iterations", "time_s", "objective"]
        return cols

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.header())
            for idx, rec in enumerate(self.records, start=1):
                row = [idx]
                row += [repr(float(rec.multipliers.get(name, 0.0))) for name in self.pattern_names]
                row += [repr(float(x)) for x in rec.displacements]
                row += [repr(float(x)) for x in rec.stresses]
                row += [repr(float(x)) for x in rec.strains]
                row += [rec.iterations, repr(float(rec.time_s)), repr(float(rec.objective))]
                writer.writerow(row)


def solve_increment(
    problem: IncrementProblem,
    config: SolverConfig,
    initial_point=None,
    alpha: float | None = None,
) -> IncrementSolution:
    """Solve one increment, dispatching on the hardening law.

    ``initial_point`` warm-starts the iteration: the iterate and the
    momentum points both start there (defaults to zero vectors).
    """
    if problem.is_piecewise:
        if not config.accelerate:
            raise ValueError("the piecewise solver has no unaccelerated variant")
        return apgm_piecewise_solve(problem, config, initial_point, alpha)
    if config.accelerate:
        return apgm_solve(problem, config, initial_point, alpha)
    return pgm_solve(problem, config, initial_point, alpha)


def run_program(
    model: TrussModel,
    law: HardeningLaw,
    R0,
    program: LoadingProgram,
    config: SolverConfig,
    members=(),
    dofs=(),
) -> AnalysisHistory:
    """Run a multi-step analysis with warm starts.

    Returns the history of the selected channels.  Raises
    :class:`IncrementFailure` (carrying the partial history and the
    1-based failing step index) if any step hits the iteration cap.
    """
    member_ids = [int(i) for i in members]
    dof_ids = [int(i) for i in dofs]
    for mid in member_ids:
        if not 0 <= mid < model.n_members:
            raise ValueError(f"member index {mid} out of range")
    for dof in dof_ids:
        if not 0 <= dof < model.n_free_dofs:
            raise ValueError(f"DOF index {dof} out of range")

    pattern_names = sorted(program.patterns)
    history = AnalysisHistory(
        pattern_names=pattern_names, dof_ids=dof_ids, member_ids=member_ids
    )

    state = initial_state(model, R0)
    areas_m2 = model.areas_mm2[member_ids] * 1e-6 if member_ids else np.empty(0)
    lengths = model.lengths[member_ids] if member_ids else np.empty(0)

    alpha = None
    warm = None
    for idx in range(len(program.steps)):
        f = program.load_vector(idx)
        problem = IncrementProblem(model=model, state=state, law=law, f=f)
        if alpha is None:
            alpha = resolve_step_size(problem, config)

        step_config = config
        if program.overrides is not None and program.overrides[idx]:
            step_config = replace(config, **program.overrides[idx])

        started = time.perf_counter()
        solution = solve_increment(problem, step_config, initial_point=warm, alpha=alpha)
        elapsed = time.perf_counter() - started
        if not solution.converged:
            raise IncrementFailure(idx + 1, history)

        state = update_state(state, solution, law)
        history.records.append(
            StepRecord(
                multipliers=dict(program.steps[idx]),
                displacements=state.u[dof_ids].copy() if dof_ids else np.empty(0),
                stresses=state.q[member_ids] / areas_m2 if member_ids else np.empty(0),
                strains=state.c_total[member_ids] / lengths if member_ids else np.empty(0),
                iterations=solution.iterations,
                time_s=elapsed,
                objective=solution.objective,
            )
        )
        warm = (solution.v, solution.p, solution.s)
    return history
