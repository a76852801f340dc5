"""Command-line interface.

Subcommands:

* ``generate``      write a barrel-vault benchmark model as JSON
* ``random-model``  write a small random test truss (seeded)
* ``solve``         solve one load increment, write a solution CSV
* ``run``           run a multi-step loading program, write a history CSV
* ``verify``        recheck a solution CSV against its model
* ``export-socp``   write the conic-program form of an increment

The solution CSV is a self-contained three-column table
(field, index, value) carrying the load, the frozen step state, the law
parameters and the computed solution, so ``verify`` needs only the model
file next to it.  Exit codes: 0 success, 1 bad input, 2 non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import __version__
from .driver import IncrementFailure, load_program, run_program, solve_increment
from .energy import IncrementProblem
from .hardening import (
    LinearIsotropic,
    Mixed,
    PiecewiseLinear,
    initial_state,
    state_from_dict,
    state_to_dict,
)
from .model import barrel_vault, load_model, random_model, save_model
from .socp import export_socp
from .solvers import SolverConfig
from .verify import kkt_residual, prox_fixed_point_residual

_LAW_CODES = {"linear": 0, "mixed": 1, "piecewise": 2}
_LAW_NAMES = {code: name for name, code in _LAW_CODES.items()}

VERIFY_THRESHOLD = 1e-6


def _add_law_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--law", choices=sorted(_LAW_CODES), default="linear",
        help="hardening law (default: linear)",
    )
    parser.add_argument(
        "--h-ratio", type=float, default=0.1,
        help="hardening modulus as a fraction of each member stiffness",
    )
    parser.add_argument(
        "--theta", type=float, default=0.5,
        help="isotropic share for the mixed law",
    )
    parser.add_argument(
        "--h2-ratio", type=float, default=0.5,
        help="second modulus as a fraction of the first (piecewise law)",
    )
    parser.add_argument(
        "--rs-ratio", type=float, default=1.3,
        help="kink radius as a multiple of the initial radius (piecewise law)",
    )
    parser.add_argument(
        "--r0", type=float, default=1.0e5,
        help="initial yield radius in N (default 100 kN)",
    )


def _law_from_args(args, model):
    h = args.h_ratio * model.k
    if args.law == "linear":
        return LinearIsotropic(h=h)
    if args.law == "mixed":
        return Mixed(theta=args.theta, h=h)
    return PiecewiseLinear(h1=h, h2=args.h2_ratio * h, R_s=args.rs_ratio * args.r0)


def _add_solver_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--step-mode", choices=["exact", "gershgorin"], default="exact",
        help="step size source: exact Lipschitz constant or Gershgorin bound",
    )
    parser.add_argument("--eps", type=float, default=1e-8,
                        help="termination tolerance in m (default 1e-8)")
    parser.add_argument("--max-iter", type=int, default=1_000_000)


def _load_vector_from_file(path, n_dofs: int) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    pairs = doc["f"] if isinstance(doc, dict) else doc
    f = np.zeros(n_dofs)
    for dof, value in pairs:
        dof = int(dof)
        if not 0 <= dof < n_dofs:
            raise ValueError(f"load references DOF {dof} out of range")
        f[dof] += float(value)
    return f


def _write_solution_csv(path, problem, solution, law_name: str, epsilon: float) -> None:
    rows = [("law", 0, float(_LAW_CODES[law_name]))]
    if law_name == "mixed":
        rows.append(("theta", 0, float(problem.law.theta)))
    rows += [
        ("alpha", 0, solution.alpha),
        ("epsilon", 0, epsilon),
        ("iterations", 0, float(solution.iterations)),
        ("converged", 0, 1.0 if solution.converged else 0.0),
        ("objective", 0, solution.objective),
    ]
    for dof, value in enumerate(problem.f):
        if value != 0.0:
            rows.append(("f", dof, value))
    for dof, value in enumerate(solution.v):
        rows.append(("v", dof, value))
    m = problem.model.n_members
    per_member = [
        ("p", solution.p),
        ("gamma", solution.gamma),
        ("q_prev", problem.q_t),
        ("R_prev", problem.state.R),
        ("R0", problem.state.R0),
        ("h", problem.h_p),
    ]
    if law_name == "mixed":
        per_member.append(("beta_prev", problem.state.beta))
    if law_name == "piecewise":
        per_member.append(("s", solution.s))
        per_member.append(("h2", np.broadcast_to(np.asarray(problem.law.h2), (m,))))
        per_member.append(("rs", np.broadcast_to(np.asarray(problem.law.R_s), (m,))))
    for name, arr in per_member:
        for i, value in enumerate(arr):
            rows.append((name, i, float(value)))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["field", "index", "value"])
        for field, index, value in rows:
            writer.writerow([field, index, repr(float(value))])


def _read_solution_csv(path) -> dict:
    fields: dict = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["field", "index", "value"]:
            raise ValueError("solution file has an unexpected header")
        for row in reader:
            name, index, value = row[0], int(row[1]), float(row[2])
            fields.setdefault(name, {})[index] = value
    return fields


def _dense(entries: dict, size: int) -> np.ndarray:
    arr = np.zeros(size)
    for idx, value in entries.items():
        if not 0 <= idx < size:
            raise ValueError(f"solution index {idx} out of range")
        arr[idx] = value
    return arr


def _problem_from_solution(model, fields):
    from .hardening import StateSnapshot

    m = model.n_members
    d = model.n_free_dofs
    law_code = int(fields["law"][0])
    law_name = _LAW_NAMES[law_code]
    h = _dense(fields["h"], m)
    R0 = _dense(fields["R0"], m)
    if law_name == "linear":
        law = LinearIsotropic(h=h)
    elif law_name == "mixed":
        law = Mixed(theta=fields["theta"][0], h=h)
    else:
        law = PiecewiseLinear(h1=h, h2=_dense(fields["h2"], m), R_s=_dense(fields["rs"], m))

    zeros = np.zeros(m)
    state = StateSnapshot(
        q=_dense(fields["q_prev"], m),
        R=_dense(fields["R_prev"], m),
        beta=_dense(fields.get("beta_prev", {}), m),
        c_total=zeros.copy(),
        c_plastic=zeros.copy(),
        gamma_acc=zeros.copy(),
        u=np.zeros(d),
        step_index=0,
        R0=R0,
    )
    f = _dense(fields.get("f", {}), d)
    problem = IncrementProblem(model=model, state=state, law=law, f=f)

    class _Candidate:
        v = _dense(fields["v"], d)
        p = _dense(fields["p"], m)
        s = _dense(fields["s"], m) if "s" in fields else None
        gamma = _dense(fields["gamma"], m)

    return problem, _Candidate(), fields["alpha"][0]


def cmd_generate(args) -> int:
    model = barrel_vault(args.nx, args.ny, area_mm2=args.area, young_pa=args.young)
    save_model(model, args.out)
    print(f"wrote {args.out}: {model.n_members} members, "
          f"{model.n_free_dofs} free DOFs, {model.n_nodes} nodes")
    return 0


def cmd_random_model(args) -> int:
    model = random_model(args.seed)
    save_model(model, args.out)
    print(f"wrote {args.out}: {model.n_members} members, {model.n_free_dofs} free DOFs")
    return 0


def _build_state(args, model):
    if args.state:
        with open(args.state, "r", encoding="utf-8") as fh:
            return state_from_dict(json.load(fh))
    return initial_state(model, args.r0)


def cmd_solve(args) -> int:
    model = load_model(args.model)
    state = _build_state(args, model)
    law = _law_from_args(args, model)
    f = _load_vector_from_file(args.load, model.n_free_dofs)
    problem = IncrementProblem(model=model, state=state, law=law, f=f)
    config = SolverConfig(step_mode=args.step_mode, epsilon=args.eps,
                          max_iter=args.max_iter)
    solution = solve_increment(problem, config)
    _write_solution_csv(args.out, problem, solution, args.law, args.eps)
    report = solution.residuals
    print(f"{solution.terminated} after {solution.iterations} iterations, "
          f"objective {solution.objective:.9e}, "
          f"scaled residual {report.max_scaled:.3e}")
    if args.state_out:
        from .hardening import update_state

        new_state = update_state(state, solution, law)
        with open(args.state_out, "w", encoding="utf-8") as fh:
            json.dump(state_to_dict(new_state), fh)
            fh.write("\n")
    return 0 if solution.converged else 2


def cmd_run(args) -> int:
    model = load_model(args.model)
    law = _law_from_args(args, model)
    program = load_program(args.program, model)
    config = SolverConfig(step_mode=args.step_mode, epsilon=args.eps,
                          max_iter=args.max_iter)
    members = [int(x) for x in args.members.split(",") if x] if args.members else []
    dofs = [int(x) for x in args.dofs.split(",") if x] if args.dofs else []
    try:
        history = run_program(model, law, args.r0, program, config,
                              members=members, dofs=dofs)
    except IncrementFailure as exc:
        exc.history.to_csv(args.history)
        print(f"aborted: {exc}", file=sys.stderr)
        return 2
    history.to_csv(args.history)
    total_iters = sum(rec.iterations for rec in history.records)
    total_time = sum(rec.time_s for rec in history.records)
    print(f"{history.n_steps} steps, {total_iters} iterations, "
          f"{total_time:.3f} s solve time -> {args.history}")
    return 0


def cmd_verify(args) -> int:
    model = load_model(args.model)
    fields = _read_solution_csv(args.solution)
    problem, candidate, alpha = _problem_from_solution(model, fields)
    report = kkt_residual(problem, candidate)
    prox_res = prox_fixed_point_residual(problem, candidate, alpha)
    print(f"equilibrium      {report.equilibrium_inf:.6e} N")
    print(f"yield violation  {report.yield_violation_inf:.6e} N")
    print(f"complementarity  {report.complementarity_inf:.6e} N*m")
    print(f"flow consistency {report.flow_consistency_inf:.6e} m")
    print(f"prox fixed point {prox_res:.6e}")
    print(f"max scaled       {report.max_scaled:.6e}")
    if report.max_scaled > VERIFY_THRESHOLD:
        print("FAIL: scaled residual above threshold", file=sys.stderr)
        return 1
    print("OK")
    return 0


def cmd_export_socp(args) -> int:
    model = load_model(args.model)
    state = _build_state(args, model)
    law = LinearIsotropic(h=args.h_ratio * model.k)
    f = _load_vector_from_file(args.load, model.n_free_dofs)
    problem = IncrementProblem(model=model, state=state, law=law, f=f)
    export = export_socp(problem)
    export.save(args.out)
    print(f"wrote {args.out}: {export.n_variables} variables, "
          f"{len(export.eq_rows)} equalities, {len(export.cones)} cones")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="proxtruss",
        description="Elastoplastic truss increment analysis via proximal gradient methods",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a barrel-vault benchmark model")
    gen.add_argument("--nx", type=int, required=True)
    gen.add_argument("--ny", type=int, required=True)
    gen.add_argument("--area", type=float, default=500.0, help="section area in mm^2")
    gen.add_argument("--young", type=float, default=200.0e9, help="Young modulus in Pa")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    rnd = sub.add_parser("random-model", help="write a small random test truss")
    rnd.add_argument("--seed", type=int, required=True)
    rnd.add_argument("--out", required=True)
    rnd.set_defaults(func=cmd_random_model)

    slv = sub.add_parser("solve", help="solve one load increment")
    slv.add_argument("--model", required=True)
    slv.add_argument("--state", help="state JSON from a previous step (optional)")
    slv.add_argument("--load", required=True, help="load JSON {\"f\": [[dof, N], ...]}")
    slv.add_argument("--out", required=True, help="solution CSV path")
    slv.add_argument("--state-out", help="write the post-step state JSON here")
    _add_law_arguments(slv)
    _add_solver_arguments(slv)
    slv.set_defaults(func=cmd_solve)

    run = sub.add_parser("run", help="run a multi-step loading program")
    run.add_argument("--model", required=True)
    run.add_argument("--program", required=True, help="program JSON")
    run.add_argument("--history", required=True, help="history CSV path")
    run.add_argument("--members", default="", help="member indices to record, e.g. 0,3")
    run.add_argument("--dofs", default="", help="DOF indices to record, e.g. 1,2")
    _add_law_arguments(run)
    _add_solver_arguments(run)
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="recheck a solution CSV")
    ver.add_argument("--model", required=True)
    ver.add_argument("--solution", required=True)
    ver.set_defaults(func=cmd_verify)

    exp = sub.add_parser("export-socp", help="export the conic form of an increment")
    exp.add_argument("--model", required=True)
    exp.add_argument("--state", help="state JSON (optional)")
    exp.add_argument("--load", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--h-ratio", type=float, default=0.1)
    exp.add_argument("--r0", type=float, default=1.0e5)
    exp.set_defaults(func=cmd_export_socp)

    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors; map to the input-error code
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
