"""Experiment runner: each subcommand reproduces one experiment family.

All randomness flows from explicit --seed flags, so repeated invocations
with the same flags produce byte-identical output files.  Outputs are CSV
or JSON data for external plotting; no figures are rendered here.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import cloudsim, fileio, qoncord, qsim, vqa
from .optimizer import SpsaConfig, TrajectoryStatus
from .qoncord import ConvergenceConfig


def _add_spsa_flags(p: argparse.ArgumentParser):
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--spsa-a", type=float, default=0.2)
    p.add_argument("--spsa-c", type=float, default=0.1)
    p.add_argument("--strict-window", type=int, default=10)
    p.add_argument("--relaxed-window", type=int, default=5)
    p.add_argument("--tol-expectation", type=float, default=0.001)
    p.add_argument("--tol-entropy", type=float, default=0.01)
    p.add_argument("--threshold", type=float, default=0.1)
    p.add_argument("--checkpoint-fraction", type=float, default=0.4)


def _spsa_config(args, seed: int) -> SpsaConfig:
    return SpsaConfig(
        a=args.spsa_a, c=args.spsa_c, max_iters=args.max_iters, seed=seed
    )


def _conv_config(args) -> ConvergenceConfig:
    return ConvergenceConfig(
        strict_window=args.strict_window,
        relaxed_window=args.relaxed_window,
        tol_expectation=args.tol_expectation,
        tol_entropy=args.tol_entropy,
    )


def _restart_payload(record: qoncord.RestartRecord, ground_truth: float) -> dict:
    return {
        "restart_id": record.restart_id,
        "approximation_ratio": record.final_expectation / ground_truth,
        "final_expectation": record.final_expectation,
        "status": record.status.value,
        "iterations": len(record.trajectory.records),
        "executions_per_device": record.executions_per_device,
    }


def _multirestart_payload(result: qoncord.MultiRestartResult, ground_truth: float) -> dict:
    return {
        "restarts": [_restart_payload(r, ground_truth) for r in result.per_restart],
        "best_expectation": result.best_expectation,
        "best_approximation_ratio": result.best_expectation / ground_truth,
        "executions_per_device": result.executions_per_device,
        "total_executions": result.total_executions(),
    }


def cmd_queue_sim(args) -> int:
    scenario = fileio.load_scenario(args.scenario)
    policies = args.policies.split(",")
    fractions = [float(f) for f in args.runtime_fractions.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    rows = []
    for policy in policies:
        for fraction in fractions:
            for seed in seeds:
                jobs = cloudsim.generate_workload(
                    int(scenario.get("n_jobs", 1000)),
                    fraction,
                    seed,
                    horizon=float(scenario.get("horizon", 5000.0)),
                    session_executions=tuple(
                        scenario.get("session_executions", (2, 8))
                    ),
                    delay_range=tuple(scenario.get("delay_range", (0.0, 2.0))),
                )
                fleet = fileio.scenario_fleet(scenario, seed)
                metrics = cloudsim.run_sim(jobs, fleet, policy, seed)
                rows.append(
                    [
                        policy,
                        f"{fraction:g}",
                        seed,
                        f"{metrics.throughput:.6f}",
                        f"{metrics.mean_relative_fidelity:.6f}",
                        f"{metrics.completion_time:.6f}",
                    ]
                )
    fileio.write_csv_atomic(
        args.out,
        ["policy", "runtime_fraction", "seed", "throughput",
         "mean_relative_fidelity", "completion_time"],
        rows,
    )
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _qaoa_problem(args) -> vqa.MaxCutProblem:
    if args.graph:
        return fileio.load_graph(args.graph)
    return vqa.erdos_renyi(args.nodes, args.edge_prob, args.graph_seed)


def cmd_multirestart(args) -> int:
    problem = _qaoa_problem(args)
    fleet = fileio.load_fleet(args.fleet)
    task = qoncord.qaoa_task(problem, args.layers)
    ground = vqa.brute_force_maxcut(problem)
    conv = _conv_config(args)
    runs = {
        "qoncord": _multirestart_payload(
            qoncord.run_multirestart(
                task, fleet, args.restarts, _spsa_config(args, args.seed),
                conv, args.seed,
                threshold=args.threshold,
                checkpoint_fraction=args.checkpoint_fraction,
            ),
            ground,
        )
    }
    for device in fleet:
        runs[f"{device.id}_only"] = _multirestart_payload(
            qoncord.run_multirestart(
                task, [device], args.restarts, _spsa_config(args, args.seed),
                conv, args.seed, threshold=args.threshold,
            ),
            ground,
        )
    payload = {
        "experiment": "multirestart",
        "problem": {"nodes": problem.n, "edges": list(problem.edges),
                    "layers": args.layers},
        "ground_truth": ground,
        "seed": args.seed,
        "runs": runs,
    }
    fileio.write_json_atomic(args.out, payload)
    print(f"wrote {args.out}")
    return 0


def cmd_single_restart(args) -> int:
    problem = _qaoa_problem(args)
    fleet = fileio.load_fleet(args.fleet)
    task = qoncord.qaoa_task(problem, args.layers)
    ground = vqa.brute_force_maxcut(problem)
    conv = _conv_config(args)
    runs = {
        "qoncord": _restart_payload(
            qoncord.run_single_restart(
                task, fleet, _spsa_config(args, args.seed), conv, args.seed,
                threshold=args.threshold,
                checkpoint_fraction=args.checkpoint_fraction,
            ),
            ground,
        )
    }
    for device in fleet:
        result = qoncord.run_multirestart(
            task, [device], 1, _spsa_config(args, args.seed), conv, args.seed,
            threshold=args.threshold,
        )
        runs[f"{device.id}_only"] = _restart_payload(result.per_restart[0], ground)
    payload = {
        "experiment": "single-restart",
        "problem": {"nodes": problem.n, "edges": list(problem.edges),
                    "layers": args.layers},
        "ground_truth": ground,
        "seed": args.seed,
        "runs": runs,
    }
    fileio.write_json_atomic(args.out, payload)
    print(f"wrote {args.out}")
    return 0


def cmd_vqe(args) -> int:
    path = args.hamiltonian or fileio.bundled_path("hamiltonian_4q.txt")
    hamiltonian = fileio.load_hamiltonian(path)
    fleet = fileio.load_fleet(args.fleet)
    task = qoncord.vqe_task(hamiltonian, args.reps)
    ground = vqa.brute_force_eigenmin(hamiltonian)
    conv = _conv_config(args)
    runs = {
        "qoncord": _multirestart_payload(
            qoncord.run_multirestart(
                task, fleet, args.restarts, _spsa_config(args, args.seed),
                conv, args.seed,
                threshold=args.threshold,
                checkpoint_fraction=args.checkpoint_fraction,
            ),
            ground,
        )
    }
    for device in fleet:
        runs[f"{device.id}_only"] = _multirestart_payload(
            qoncord.run_multirestart(
                task, [device], args.restarts, _spsa_config(args, args.seed),
                conv, args.seed, threshold=args.threshold,
            ),
            ground,
        )
    payload = {
        "experiment": "vqe",
        "hamiltonian": str(path),
        "reps": args.reps,
        "ground_truth": ground,
        "seed": args.seed,
        "runs": runs,
    }
    fileio.write_json_atomic(args.out, payload)
    print(f"wrote {args.out}")
    return 0


def cmd_p_correct(args) -> int:
    problem = _qaoa_problem(args)
    fleet = fileio.load_fleet(args.fleet)
    rows = []
    for layers in range(1, args.max_layers + 1):
        circuit = vqa.build_qaoa(problem, np.zeros(2 * layers), layers)
        stats = qsim.circuit_stats(circuit)
        for device in fleet:
            p = qoncord.estimate_p_correct(stats, device)
            rows.append([device.id, layers, f"{p:.6f}"])
    header = ["device", "layers", "p_correct"]
    widths = [10, 8, 12]
    print("".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("".join(str(c).ljust(w) for c, w in zip(row, widths)))
    if args.out:
        fileio.write_csv_atomic(args.out, header, rows)
        print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vqsched",
        description="Multi-device variational-quantum scheduling experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("queue-sim", help="cloud queue policy comparison")
    p.add_argument("--scenario", required=True)
    p.add_argument("--policies", default=",".join(cloudsim.POLICIES))
    p.add_argument(
        "--runtime-fractions", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
    )
    p.add_argument("--seeds", default="0")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_queue_sim)

    def add_qaoa_flags(p):
        p.add_argument("--nodes", type=int, default=7)
        p.add_argument("--edge-prob", type=float, default=0.9)
        p.add_argument("--graph-seed", type=int, default=1)
        p.add_argument("--graph", help="graph file; overrides --nodes/--edge-prob")

    p = sub.add_parser("multirestart", help="multi-restart QAOA across tiers")
    add_qaoa_flags(p)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--fleet", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_spsa_flags(p)
    p.set_defaults(func=cmd_multirestart)

    p = sub.add_parser("single-restart", help="one restart, no pruning")
    add_qaoa_flags(p)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--fleet", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_spsa_flags(p)
    p.set_defaults(func=cmd_single_restart)

    p = sub.add_parser("vqe", help="multi-restart VQE on a Pauli Hamiltonian")
    p.add_argument("--hamiltonian", help="defaults to the bundled 4-qubit sample")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--fleet", required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_spsa_flags(p)
    # the default a=0.2 step is too small for the bundled Hamiltonian's scale
    p.set_defaults(func=cmd_vqe, spsa_a=1.5)

    p = sub.add_parser("p-correct", help="fidelity estimates per device/layer")
    add_qaoa_flags(p)
    p.add_argument("--max-layers", type=int, default=3)
    p.add_argument("--fleet", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_p_correct)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
