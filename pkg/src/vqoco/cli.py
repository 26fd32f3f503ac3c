"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 convergence error, 4 Slater violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ALGORITHMS, COMMANDS, AlgorithmConfig, RunConfig, override, parse_config
from .errors import ConfigError, ConvergenceError, InvalidArgumentError, SlaterViolationError, VQOCOError
from .harness import AlgorithmSpec, compare, gradient_bound, make_experiment, run_experiment
from .problem import LinearConstraints, ProblemInstance, SimpleSet, derive_constants, with_slater
from .report import emit_outputs, write_manifest
from .tuner import Constants, TunerProblem, oracle_gap, tune

log = logging.getLogger("vqoco")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_SLATER, EXIT_OTHER = 0, 2, 3, 4, 1


def algorithm_spec(cfg: AlgorithmConfig) -> AlgorithmSpec:
    opts = ()
    if cfg.kind == "primal-dual":
        opts = (("primal_scale", cfg.primal_scale), ("dual_scale", cfg.dual_scale),
                ("reg_scale", cfg.reg_scale))
    elif cfg.kind == "ogd-proj" and cfg.step is not None:
        opts = (("step", cfg.step),)
    return AlgorithmSpec(cfg.kind, cfg.theta_exp, cfg.label, opts)


def build_instance(cfg: RunConfig):
    """The inline instance of the config with constants completed, or None."""
    ic = cfg.instance
    if ic is None:
        return None
    if ic.lower is not None:
        S = SimpleSet.box(ic.lower, ic.upper)
    else:
        S = SimpleSet.ball(ic.center, ic.radius)
    inst = ProblemInstance(
        S, LinearConstraints(ic.A, ic.b), D=ic.D, beta=ic.beta, G=ic.G, R=ic.R,
        epsilon=ic.epsilon,
        slater_point=None if ic.slater_point is None else np.array(ic.slater_point),
    )
    inst = with_slater(derive_constants(inst))
    if inst.D is None:
        inst = inst.replace(D=gradient_bound(cfg.T, inst.n))
    return inst


def _check_out(path: Path) -> None:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"out: cannot create {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"out: directory {path} is not writable")


def cmd_run(cfg: RunConfig, doubling: bool = False) -> list:
    out = Path(cfg.out)
    spec = AlgorithmSpec("vq-doubling") if doubling else algorithm_spec(cfg.algorithm)
    inst = build_instance(cfg)
    files = []
    for seed in cfg.seeds:
        exp = make_experiment(seed, cfg.T, cfg.n, cfg.m, inst)
        result = run_experiment(spec, exp)
        target = out if len(cfg.seeds) == 1 else out / f"seed_{seed}"
        files += emit_outputs(result, target, cfg.plots, stem="doubling" if doubling else "run")
        log.info("seed %s: regret %.6g, max violation %.6g", seed,
                 result.cumulative_regret[-1], result.cumulative_violation[-1].max())
    return files


def cmd_compare(cfg: RunConfig) -> list:
    specs = [algorithm_spec(a) for a in cfg.compared()]
    table = compare(specs, list(cfg.seeds), cfg.T, cfg.n, cfg.m, build_instance(cfg))
    for cell in table.cells:
        if cell.error:
            log.warning("%s seed %s failed: %s", cell.algorithm, cell.seed, cell.error)
        else:
            log.info("%-28s seed %-4s regret %12.4f  max violation %12.4f", cell.algorithm,
                     cell.seed, cell.final_regret, cell.final_max_violation)
    stem = "replicate" if cfg.command == "replicate-paper" else "compare"
    return emit_outputs(table, cfg.out, cfg.plots, stem=stem)


def cmd_tune(cfg: RunConfig) -> list:
    tc = cfg.tuner
    given = {k: getattr(tc, k) for k in ("D", "G", "R", "beta", "epsilon")}
    if any(v is None for v in given.values()):
        inst = build_instance(cfg) or make_experiment(cfg.seeds[0], cfg.T, cfg.n, cfg.m).instance
        given = {k: v if v is not None else getattr(inst, k) for k, v in given.items()}
    problem = TunerProblem(tc.mode, Constants(**given), cfg.T, tc.z0)
    res = tune(problem)
    gap = oracle_gap(problem, res)
    payload = {
        "mode": tc.mode, "T": cfg.T, "z0": tc.z0, "constants": given,
        "gamma": res.gamma, "eta": res.eta, "alpha": res.alpha, "objective": res.objective,
        "regret_bound": res.regret_bound, "regret_bound_proof_constant": res.regret_bound_proof,
        "violation_bound": res.violation_bound, "oracle_gap": gap,
    }
    print(f"gamma={res.gamma:.10g} eta={res.eta:.10g} alpha={res.alpha:.10g} "
          f"objective={res.objective:.10g}")
    print(f"regret_bound={res.regret_bound:.10g} (proof constant {res.regret_bound_proof:.10g}) "
          f"violation_bound={res.violation_bound:.10g} oracle_gap={gap:.6f}")
    return [write_manifest(payload, Path(cfg.out) / "tune.json")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vqoco", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="defaults to the config's command, else 'run'")
    p.add_argument("--config", type=Path, help="YAML/JSON run configuration")
    p.add_argument("--seed", type=int, action="append", help="repeatable; replaces config seeds")
    p.add_argument("--T", type=int, dest="T")
    p.add_argument("--out", type=str)
    p.add_argument("--algorithm", choices=ALGORITHMS)
    p.add_argument("--theta-exp", type=float, help="primal-dual baseline exponent in (0, 1)")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args) -> RunConfig:
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        cfg = parse_config(text)
    else:
        cfg = RunConfig()
    algorithm = cfg.algorithm
    if args.algorithm is not None or args.theta_exp is not None:
        algorithm = dataclasses.replace(
            algorithm,
            kind=args.algorithm or algorithm.kind,
            theta_exp=algorithm.theta_exp if args.theta_exp is None else args.theta_exp,
        )
        if not 0.0 < algorithm.theta_exp < 1.0:
            raise ConfigError("--theta-exp must lie in (0, 1)")
    return override(
        cfg,
        command=args.command,
        seeds=None if args.seed is None else tuple(args.seed),
        T=args.T,
        out=args.out,
        algorithm=algorithm,
        plots=False if args.no_plots else None,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        _check_out(Path(cfg.out))
        if cfg.command == "run":
            files = cmd_run(cfg)
        elif cfg.command == "doubling":
            files = cmd_run(cfg, doubling=True)
        elif cfg.command == "tune":
            files = cmd_tune(cfg)
        else:
            files = cmd_compare(cfg)
    except (ConfigError, InvalidArgumentError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except SlaterViolationError as exc:
        print(f"slater violation: {exc}", file=sys.stderr)
        return EXIT_SLATER
    except VQOCOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    for f in files:
        print(f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
