"""Command-line interface: config ingestion, dispatch, reproducible outputs.

Every run writes result.json and summary.csv into the output directory; the
JSON embeds the resolved config and library version and is byte-identical for
identical configs and seeds. Exit codes: 0 success, 2 validation error,
3 budget exhaustion, 4 theorem-hypothesis violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .condition import certify, certify_escalating
from .config import (COMMANDS, RunConfig, load_config, parse_certify_plan,
                     parse_number, parse_return_rule, parse_target)
from .dimension import solve_affinity, solve_recurrence, solve_shrinking
from .errors import (EXIT_BUDGET, EXIT_HYPOTHESIS, EXIT_OK, EXIT_VALIDATION,
                     AffdimError, BudgetExceededError, ConfigError,
                     HypothesisViolationError, ScheduleError)
from .multilinear import (IrreducibilityVerdict, find_proximal_word,
                          irreducibility_semidecision, is_fully_proximal)
from .pressure import (DEFAULT_SUM_BUDGET, alpha_estimate, pressure2_estimate,
                       pressure_bracket)
from .svf import gamma_bounds
from .verify import (RecurrenceMode, ShrinkingTargetMode, box_count,
                     build_measure_tree, energy_partial_sum, export_points_csv,
                     sample_attractor, scatter_svg)


def _jsonable(obj):
    """Make results JSON-serializable with deterministic float handling."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    return obj


def _write_outputs(out_dir, record, summary_rows):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(record), fh, sort_keys=True, indent=2)
        fh.write("\n")
    if summary_rows:
        fields = list(summary_rows[0].keys())
        with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields)
            writer.writeheader()
            for row in summary_rows:
                writer.writerow({k: _jsonable(v) for k, v in row.items()})


def _grid(block, field, default):
    value = block.get(field, default)
    if isinstance(value, list):
        return [parse_number(v, field) for v in value]
    return [parse_number(value, field)]


def run(command: str, cfg: RunConfig, out_dir: str, workers: int = 1,
        budget: int | None = None, depth_escalate: bool = False) -> int:
    """Execute one command; writes artifacts and returns the exit status."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    budget = budget or cfg.budget or DEFAULT_SUM_BUDGET
    ifs = cfg.ifs
    record = {
        "schema_version": cfg.schema_version,
        "library_version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config": cfg.raw,
    }
    rows = []

    if command == "pressure":
        block = cfg.block("pressure")
        depth = int(block.get("depth", _default_depth(ifs, budget)))
        plan = parse_certify_plan(block.get("certify"))
        square = bool(block.get("square", False))
        brackets = []
        for t in _grid(block, "t", 1.0):
            cert = plan.certificate_for(ifs, t) if plan and t > 0 else None
            if square:
                br = pressure2_estimate(ifs, t, depth, cert, budget, workers)
            else:
                br = pressure_bracket(ifs, t, depth, cert, budget=budget,
                                      workers=workers)
            brackets.append(br)
            rows.append(br.to_json_dict())
        record["results"] = {"brackets": [b.to_json_dict() for b in brackets]}

    elif command == "alpha":
        block = cfg.block("alpha")
        spec = parse_target(block.get("target"))
        k_burn = int(block.get("k_burn", 32))
        k_max = int(block.get("k_max", 256))
        estimates = []
        for t in _grid(block, "t", 1.0):
            est = alpha_estimate(ifs, spec, t, k_burn, k_max)
            estimates.append(est.to_json_dict())
            row = est.to_json_dict()
            if est.trend < -1e-6:
                row["warning"] = "terms still decreasing at k_max"
            rows.append(row)
        record["results"] = {"alpha": estimates}

    elif command in ("dim-affinity", "dim-shrinking", "dim-recurrence"):
        block = cfg.block(command.replace("-", "_"))
        tol = parse_number(block.get("tol", 1e-3), "tol")
        max_depth = int(block.get("max_depth", 12))
        if depth_escalate:
            max_depth = _default_depth(ifs, budget)
        plan = parse_certify_plan(block.get("certify"))
        kwargs = dict(tol=tol, max_depth=max_depth, certify_plan=plan,
                      budget=budget, workers=workers)
        if command == "dim-affinity":
            result = solve_affinity(ifs, **kwargs)
        elif command == "dim-shrinking":
            spec = parse_target(block.get("target"))
            if "k_burn" in block:
                kwargs["k_burn"] = int(block["k_burn"])
            if "k_max" in block:
                kwargs["k_max"] = int(block["k_max"])
            result = solve_shrinking(ifs, spec, **kwargs)
        else:
            rule = parse_return_rule(block.get("psi"))
            result = solve_recurrence(ifs, rule, **kwargs)
        record["results"] = result.to_json_dict()
        rows.append(result.csv_row())

    elif command == "certify-condition":
        block = cfg.block("certify_condition")
        s = parse_number(block.get("s", 1.0), "s")
        exhaustive_len = int(block.get("exhaustive_len", 3))
        random_pairs = int(block.get("random_pairs", 32))
        if "K" in block:
            cert = certify(ifs, s, int(block["K"]), exhaustive_len,
                           random_pairs, cfg.seed, budget)
        else:
            cert = certify_escalating(
                ifs, s, int(block.get("k_max", 4)),
                parse_number(block.get("floor", 1e-6), "floor"),
                exhaustive_len, random_pairs, cfg.seed, budget)
        record["results"] = {"certificate": cert.to_json_dict(ifs.N)}
        rows.append(cert.to_json_dict(ifs.N))

    elif command == "check-matrices":
        block = cfg.block("check_matrices")
        tol = parse_number(block.get("tol", 1e-6), "tol")
        max_len = int(block.get("max_len", 4))
        gb = gamma_bounds(ifs)
        per_matrix = [is_fully_proximal(ifs.matrices[i], tol) is not None
                      for i in range(ifs.N)]
        witness = find_proximal_word(ifs, max_len, tol, budget)
        verdicts = {}
        for k in range(1, ifs.d):
            verdict = irreducibility_semidecision(
                ifs, k, trials=int(block.get("trials", 8)),
                orbit_len=int(block.get("orbit_len", 4)), rng_seed=cfg.seed)
            verdicts[str(k)] = verdict.value
        supported = witness is not None and all(
            v == IrreducibilityVerdict.IRREDUCIBLE_CERTIFIED.value
            for v in verdicts.values())
        record["results"] = {
            "gamma_min": gb.gamma_min,
            "gamma_max": gb.gamma_max,
            "norm_below_half": ifs.contractive_half,
            "generators_fully_proximal": per_matrix,
            "proximal_witness": witness.to_json_dict() if witness else None,
            "irreducibility": verdicts,
            "strong_irreducibility": (
                "assumed, supported by proximal witness + irreducibility "
                "certificates" if supported else "unsupported: see verdicts"),
        }
        rows.append({"gamma_max": gb.gamma_max,
                     "proximal": witness is not None,
                     "all_degrees_irreducible": supported})

    elif command in ("build-measure", "energy"):
        block = cfg.block("build_measure")
        s = parse_number(block.get("s", 0.5), "s")
        p = int(block.get("p", 2))
        depth = int(block.get("depth", 2))
        plan = parse_certify_plan(block.get("certify")) or \
            parse_certify_plan({"K": 1})
        cert = plan.certificate_for(ifs, s)
        if str(block.get("mode", "shrinking")) == "recurrence":
            mode = RecurrenceMode(parse_return_rule(block.get("psi")))
        else:
            mode = ShrinkingTargetMode(parse_target(block.get("target")))
        tree = build_measure_tree(
            ifs, s, p, depth, mode, cert,
            target_levels=[int(x) for x in block.get("target_levels", [])],
            p0=int(block["p0"]) if "p0" in block else None,
            budget=budget)
        tree_info = {
            "levels": [len(level.words) for level in tree.levels],
            "schedule": tree.schedule,
            "clipped_schedule": tree.clipped,
            "growth_sum_ok": tree.growth_sum_ok,
            "growth_sparse_ok": tree.growth_sparse_ok,
            "certificate": cert.to_json_dict(ifs.N),
            "min_realized_log_ratio": tree.min_realized_log_ratio,
            "words": tree.to_json_records(),
        }
        if command == "build-measure":
            record["results"] = {"measure_tree": tree_info}
            rows.append({"levels": len(tree.levels),
                         "words_deepest": len(tree.levels[-1].words),
                         "clipped": tree.clipped})
        else:
            energy_block = cfg.block("energy")
            t = parse_number(energy_block.get("t", s / 2), "energy.t")
            report = energy_partial_sum(tree, t)
            tree_info.pop("words")
            record["results"] = {"energy": report.to_json_dict(),
                                 "measure_tree": tree_info}
            rows.append({"s": s, "t": t, "diverging": report.diverging,
                         "levels": len(tree.levels)})

    elif command in ("sample", "boxcount"):
        block = cfg.block("sample")
        n_points = int(block.get("n_points", 10_000))
        word_len = int(block.get("word_len", 25))
        translations = block.get("translations")
        if translations is not None:
            translations = [[parse_number(x, "sample.translations") for x in row]
                            for row in translations]
        points = sample_attractor(ifs, n_points, word_len, cfg.seed, translations)
        os.makedirs(out_dir, exist_ok=True)
        export_points_csv(points, os.path.join(out_dir, "points.csv"))
        if ifs.d == 2:
            scatter_svg(points, os.path.join(out_dir, "scatter.svg"))
        record["results"] = {"n_points": n_points, "word_len": word_len,
                             "points_file": "points.csv"}
        rows.append({"n_points": n_points, "word_len": word_len})
        if command == "boxcount":
            bc_block = cfg.block("boxcount")
            eps = [parse_number(e, "boxcount.epsilons")
                   for e in bc_block.get("epsilons", [1 / 3**k for k in range(2, 6)])]
            result = box_count(points, eps)
            record["results"]["boxcount"] = result.to_json_dict()
            rows[-1] = {"n_points": n_points, "slope": result.slope,
                        "degenerate": result.degenerate}

    _write_outputs(out_dir, record, rows)
    return EXIT_OK


def _default_depth(ifs, budget) -> int:
    # deepest n with N^n within the word budget
    return max(1, int(math.floor(math.log(budget) / math.log(ifs.N))))


def _error_payload(exc: Exception, code: int) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc),
                      "exit_code": code,
                      "field": getattr(exc, "field", None)}}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="affdim",
        description="Dimension computations for self-affine systems")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default="affdim-out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="RNG seed override")
    parser.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--budget", type=int, default=None,
                        help="word enumeration budget override")
    parser.add_argument("--depth-escalate", action="store_true",
                        help="deepen sums until tolerance or budget")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.raw["seed"] = args.seed
        return run(args.command, cfg, args.out, workers=max(1, args.workers),
                   budget=args.budget, depth_escalate=args.depth_escalate)
    except ConfigError as exc:
        payload = _error_payload(exc, EXIT_VALIDATION)
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return EXIT_VALIDATION
    except (BudgetExceededError, ScheduleError) as exc:
        print(json.dumps(_error_payload(exc, EXIT_BUDGET), sort_keys=True),
              file=sys.stderr)
        return EXIT_BUDGET
    except HypothesisViolationError as exc:
        print(json.dumps(_error_payload(exc, EXIT_HYPOTHESIS), sort_keys=True),
              file=sys.stderr)
        return EXIT_HYPOTHESIS
    except AffdimError as exc:
        print(json.dumps(_error_payload(exc, EXIT_VALIDATION), sort_keys=True),
              file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
