"""Batch runner: ``rkbslab <subcommand> --config <path> [--out <dir>]``.

Exit codes: 0 success, 1 a verification suite failed, 2 bad config,
3 a target was not representable or a solver did not certify its answer.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from .activation import matrix_to_csv, spectrum
from .config import ConfigError, ExperimentConfig, load_config
from .errors import NotRepresentable, RKBSLabError, SolverFailure
from .learn import TrainConfig, kkt_surplus, lambda_max, train_tv
from .report import digest, write_json
from .rkbs import integral_norm, pnorm_rkbs_norm, sum_rkbs_norm
from .spaces import ProbabilityWeights
from .suites import run_suite

SUBCOMMANDS = ("assemble", "norm", "train", "verify", "spectrum")
EXIT_OK, EXIT_SUITE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

log = logging.getLogger("rkbslab")


def _stamp(cfg: ExperimentConfig, body: dict) -> dict:
    out = dict(body)
    out["config_digest"] = digest(cfg.raw)
    out["seed"] = cfg.seed
    return out


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_assemble(cfg: ExperimentConfig, out: str) -> int:
    path = os.path.join(out, "matrix.csv")
    _write_text(path, matrix_to_csv(cfg.matrix()))
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_spectrum(cfg: ExperimentConfig, out: str) -> int:
    s = spectrum(cfg.matrix())
    lines = ["index,singular_value"] + [f"{i},{format(float(v), '.17g')}" for i, v in enumerate(s)]
    path = os.path.join(out, "spectrum.csv")
    _write_text(path, "\n".join(lines) + "\n")
    log.info("wrote %s", path)
    return EXIT_OK


def cmd_norm(cfg: ExperimentConfig, out: str) -> int:
    A, f, opts = cfg.matrix(), cfg.labels, cfg.opts
    pi = ProbabilityWeights.uniform(cfg.m)
    blocks = [A[:, b] for b in cfg.partition.blocks]
    weights = list(cfg.partition.weights)
    body = {
        "integral": integral_norm(A, f, opts),
        "pnorm_p1": pnorm_rkbs_norm(A, f, pi, 1, opts),
        "pnorm_p2": pnorm_rkbs_norm(A, f, pi, 2, opts),
        "sum_joint": {
            "p1": sum_rkbs_norm(blocks, f, 1, "joint", opts),
            "p2": sum_rkbs_norm(blocks, f, 2, "joint", opts, weights),
        },
        "sum_nested": {
            "p1": sum_rkbs_norm(blocks, f, 1, "nested", opts),
            "p2": sum_rkbs_norm(blocks, f, 2, "nested", opts, weights),
        },
        "partition": cfg.partition.to_json(),
        "n": cfg.n,
        "m": cfg.m,
    }
    path = os.path.join(out, "norms.json")
    write_json(path, _stamp(cfg, body))
    log.info("wrote %s", path)
    return EXIT_OK


def _lambda_grid(cfg: ExperimentConfig, A) -> list:
    top = lambda_max(A, cfg.labels, cfg.loss)
    grid = list(cfg.lambdas) + [c * top for c in cfg.lambda_factors]
    if not grid:
        raise ConfigError("no lambda values configured")
    if any(not lam > 0 for lam in grid):
        raise ConfigError("lambda_factors give a nonpositive lambda (the labels vanish)")
    return grid


def cmd_train(cfg: ExperimentConfig, out: str) -> int:
    A = cfg.matrix()
    top = lambda_max(A, cfg.labels, cfg.loss)
    grid = cfg.grid if cfg.family.kind != "tabulated" else None
    for i, lam in enumerate(_lambda_grid(cfg, A)):
        tc = TrainConfig(lam, cfg.opts, cfg.strategy)
        _, sol, rep = train_tv(A, cfg.labels, cfg.loss, tc, grid)
        body = {
            "atoms": sol.to_json(),
            "objective": sol.objective,
            "lambda": lam,
            "lambda_max": top,
            "loss": cfg.loss,
            "strategy": cfg.strategy,
            "kkt_surplus": kkt_surplus(rep.dual, lam),
            "status": rep.status,
            "iterations": rep.iterations,
            "teacher": cfg.teacher,
        }
        path = os.path.join(out, f"train_{i:03d}.json")
        write_json(path, _stamp(cfg, body))
        log.info("wrote %s (lambda=%.6g, %d atoms, %s)", path, lam, sol.size, rep.status)
    return EXIT_OK


def cmd_verify(cfg: ExperimentConfig, out: str) -> int:
    summary = {}
    for name in cfg.suites:
        reports = run_suite(name, cfg.suite_sizes.get(name), cfg.seed, cfg.tolerances, cfg.opts,
                            cfg.workers)
        for rep in reports:
            path = os.path.join(out, f"report_{rep.suite}.json")
            write_json(path, _stamp(cfg, rep.to_json()))
            summary[rep.suite] = {"pass": rep.passed, "max_rel_err": rep.max_rel_err,
                                  "instances": len(rep.instances)}
            log.info("%s: pass=%s max_rel_err=%.3g", rep.suite, rep.passed, rep.max_rel_err)
    ok = all(v["pass"] for v in summary.values())
    write_json(os.path.join(out, "summary.json"), _stamp(cfg, {"suites": summary, "pass": ok}))
    return EXIT_OK if ok else EXIT_SUITE


COMMANDS = {"assemble": cmd_assemble, "norm": cmd_norm, "train": cmd_train,
            "verify": cmd_verify, "spectrum": cmd_spectrum}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rkbslab", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="experiment config (JSON)")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.subcommand](cfg, args.out)
    except ConfigError as exc:
        print(f"rkbslab: bad config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NotRepresentable, SolverFailure) as exc:
        print(f"rkbslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except RKBSLabError as exc:
        # remaining library errors come from invalid combinations in the config
        print(f"rkbslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
