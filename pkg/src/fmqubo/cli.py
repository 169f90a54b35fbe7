"""Command-line driver.

Commands:

* ``solve-qubo``     minimize a QUBO text file by annealing (or exactly)
* ``run-scenario``   sweep the slack-regression grid and write results CSV
* ``run-optimize``   run one black-box optimization loop and write its trace
* ``gen-synthetic``  write a reusable synthetic black-box spec

Exit codes: 0 success, 1 usage/config error, 2 input data error,
3 runtime failure.  Every CSV starts with a config-hash comment line;
figures are rendered next to each CSV unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .anneal import AnnealConfig, brute_force, solve
from .binopt import parse_qubo_text
from .data import (
    Scenario1Dataset,
    Scenario2Dataset,
    SyntheticBlackBox,
    SyntheticDataset,
    TableBlackBox,
    combination_encoding,
    drug_pool_encoding,
    group_combinations,
    load_records,
    make_synthetic_blackbox,
    response_matrix,
)
from .engine import (
    SurrogateConfig,
    fmqubo_optimize,
    fmqubos_optimize,
    grid_test,
    hofmqubo_optimize,
)
from .errors import FmQuboError, ParseError, ValidationError
from .metrics import summarize
from .runconfig import (
    build_anneal_config,
    build_train_config,
    config_hash,
    load_config_file,
    merge_overrides,
    parse_int_list,
    parse_number_list,
    scenario_train_defaults,
)
from .seeding import derive_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

GRID_COLUMNS = (
    "scenario", "n_1", "m", "seed", "pearson", "spearman", "train_loss",
    "iterations", "n_nonzero_slack", "converged",
)
TRACE_COLUMNS = (
    "iteration", "y_model", "y_true", "train_loss", "n_train",
    "n_nonzero_slack", "x", "s",
)


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _fmt(value) -> str:
    if value is None:
        return "nan"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path, columns, rows, hash_hex: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# config-hash: {hash_hex}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def _bitstring(bits) -> str:
    return "".join(str(int(b)) for b in bits)


def _num(run: dict, key: str, kind, default):
    raw = run.get(key)
    if raw is None:
        return default
    try:
        return kind(raw)
    except ValueError:
        raise ValidationError(f"bad value for run.{key}: {raw!r}")


def _flag(run: dict, key: str, default: bool) -> bool:
    raw = run.get(key)
    if raw is None:
        return default
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"bad value for run.{key}: {raw!r}")


# ---------------------------------------------------------------------------
# flag plumbing
# ---------------------------------------------------------------------------

def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="INI config file ([run], [train], [anneal])")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--no-figures", action="store_true",
                   help="skip figure rendering")
    p.add_argument("--i-max", type=int, help="max loop iterations")
    p.add_argument("--epsilon", type=float, help="convergence tolerance")
    p.add_argument("--no-warm-start", action="store_true",
                   help="retrain from scratch every iteration")
    p.add_argument("--skip-duplicates", action="store_true",
                   help="perturb already-sampled solver outputs")
    g = p.add_argument_group("training")
    g.add_argument("--rank", type=int, help="latent rank")
    g.add_argument("--rank3", type=int, help="third-order latent rank")
    g.add_argument("--lr", type=float, dest="learning_rate", help="SGD step size")
    g.add_argument("--epochs", type=int)
    g.add_argument("--batch-size", type=int)
    g.add_argument("--beta1", type=float, help="L1 weight on linear terms")
    g.add_argument("--beta2", type=float, help="squared penalty on latents")
    g.add_argument("--init-scale", type=float)
    g.add_argument("--tolerance", type=float)
    g.add_argument("--patience", type=int)
    a = p.add_argument_group("annealing")
    a.add_argument("--reads", type=int, dest="num_reads", help="annealing reads")
    a.add_argument("--sweeps", type=int, dest="num_sweeps", help="sweeps per read")
    a.add_argument("--t-initial", type=float)
    a.add_argument("--t-final", type=float)
    a.add_argument("--schedule", choices=("geometric", "linear"))


def _overrides_from_args(args, run_keys: dict) -> dict:
    train = {
        "rank": args.rank, "rank3": args.rank3,
        "learning_rate": args.learning_rate, "epochs": args.epochs,
        "batch_size": args.batch_size, "beta1": args.beta1,
        "beta2": args.beta2, "init_scale": args.init_scale,
        "tolerance": args.tolerance, "patience": args.patience,
    }
    anneal = {
        "num_reads": args.num_reads, "num_sweeps": args.num_sweeps,
        "t_initial": args.t_initial, "t_final": args.t_final,
        "schedule": args.schedule,
    }
    run = dict(run_keys)
    run["i_max"] = args.i_max
    run["epsilon"] = args.epsilon
    run["out"] = args.out
    if args.no_warm_start:
        run["warm_start"] = "false"
    if args.skip_duplicates:
        run["skip_duplicates"] = "true"
    if args.no_figures:
        run["figures"] = "false"
    return {"run": run, "train": train, "anneal": anneal}


def _resolve(args, run_keys: dict) -> dict:
    file_cfg = load_config_file(args.config) if args.config else {}
    return merge_overrides(file_cfg, _overrides_from_args(args, run_keys))


def _surrogate_config(resolved: dict) -> SurrogateConfig:
    run = resolved["run"]
    return SurrogateConfig(
        m_slack=_num(run, "m_slack", int, 0),
        i_max=_num(run, "i_max", int, 20),
        epsilon=_num(run, "epsilon", float, 1e-3),
        train=build_train_config(resolved["train"]),
        anneal=build_anneal_config(resolved["anneal"]),
        seed=0,
        warm_start=_flag(run, "warm_start", True),
        skip_duplicates=_flag(run, "skip_duplicates", False),
    )


def _hashable(resolved: dict) -> dict:
    """Resolved config minus cosmetic keys, for provenance hashing."""
    out = {s: dict(kv) for s, kv in resolved.items()}
    out.get("run", {}).pop("out", None)
    out.get("run", {}).pop("figures", None)
    return out


# ---------------------------------------------------------------------------
# solve-qubo
# ---------------------------------------------------------------------------

def cmd_solve_qubo(args) -> int:
    try:
        groups = tuple(tuple(parse_int_list(g)) for g in (args.group or ()))
        cfg = AnnealConfig(
            num_reads=args.num_reads if args.num_reads else 5000,
            num_sweeps=args.num_sweeps if args.num_sweeps else 1000,
            t_initial=args.t_initial,
            t_final=args.t_final,
            schedule=args.schedule or "geometric",
            seed=args.seed,
            one_hot_groups=groups,
        )
    except ValidationError as exc:
        return _fail(EXIT_USAGE, str(exc))

    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            text = fh.read()
        model = parse_qubo_text(text)
    except OSError as exc:
        return _fail(EXIT_DATA, f"cannot read model: {exc}")
    except ParseError as exc:
        return _fail(EXIT_DATA, f"bad model file: {exc}")

    try:
        if args.exact:
            x, energy = brute_force(model, groups)
        else:
            result = solve(model, cfg)
            x, energy = result.best_x, result.best_energy
    except FmQuboError as exc:
        return _fail(EXIT_RUNTIME, str(exc))

    feasible = all(int(np.sum(x[list(g)])) == 1 for g in groups)
    print(f"energy: {energy!r}")
    print(f"assignment: {_bitstring(x)}")
    print(f"feasible: {'true' if feasible else 'false'}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen-synthetic
# ---------------------------------------------------------------------------

def cmd_gen_synthetic(args) -> int:
    try:
        orders = parse_int_list(args.orders)
        box = make_synthetic_blackbox(
            args.groups, args.group_size, orders, args.noise_sd, args.seed
        )
    except ValidationError as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        box.save(args.out)
    except OSError as exc:
        return _fail(EXIT_RUNTIME, f"cannot write {args.out}: {exc}")
    print(
        f"wrote {args.out}: {box.n_groups} groups x {box.group_size}, "
        f"orders {list(box.planted_orders)}, noise_sd {box.noise_sd}, "
        f"{len(box.hidden.terms)} hidden terms"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# run-scenario
# ---------------------------------------------------------------------------

_KNOB_LABEL = {"1": "n_extra", "2": "missing_ratio", "synth": "n_train"}
_KNOB_DEFAULT = {"1": "0", "2": "0.2", "synth": "20"}


def _scenario_cases(run: dict, n_test: int):
    """Load input data into (case_name, dataset) pairs, sorted by name."""
    scenario = run["scenario"]
    if scenario == "synth":
        box = SyntheticBlackBox.load(run["box"])
        return [("synth", SyntheticDataset(box, n_test))]
    if scenario == "1":
        records = load_records(run["data"], n_levels=8)
        cases = []
        for key, recs in group_combinations(records).items():
            ds = Scenario1Dataset(response_matrix(recs, 8), combination_encoding(8))
            cases.append(("|".join(key), ds))
        return cases
    records = load_records(run["data"], n_levels=4, min_response=-100.0)
    spec = drug_pool_encoding(records, n_levels=4)
    by_line: dict[str, list] = {}
    for r in records:
        by_line.setdefault(r.cell_line, []).append(r)
    return [
        (line, Scenario2Dataset(tuple(by_line[line]), spec))
        for line in sorted(by_line)
    ]


def cmd_run_scenario(args) -> int:
    try:
        resolved = _resolve(
            args,
            {
                "scenario": args.scenario, "data": args.data, "box": args.box,
                "n_values": args.n_values, "m_values": args.m_values,
                "seeds": args.seeds, "n_test": args.n_test,
            },
        )
        run = resolved["run"]
        scenario = run.setdefault("scenario", "synth")
        if scenario not in _KNOB_LABEL:
            raise ValidationError(f"unknown scenario {scenario!r} (use 1, 2, or synth)")
        for key, value in scenario_train_defaults(scenario).items():
            resolved["train"].setdefault(key, value)
        raw_n = run.setdefault("n_values", _KNOB_DEFAULT[scenario])
        if scenario == "2":
            n_values = parse_number_list(raw_n)
        else:
            n_values = parse_int_list(raw_n)
        m_values = parse_int_list(run.setdefault("m_values", "0"))
        seeds = parse_int_list(run.setdefault("seeds", "0"))
        n_test = _num(run, "n_test", int, 100)
        out_path = run.get("out") or "results.csv"
        base_cfg = _surrogate_config(resolved)
        if scenario == "synth" and not run.get("box"):
            raise ValidationError("synthetic scenario needs --box SPEC.json")
        if scenario in ("1", "2") and not run.get("data"):
            raise ValidationError(f"scenario {scenario} needs --data RECORDS.csv")
    except (ValidationError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))

    try:
        cases = _scenario_cases(run, n_test)
    except (FmQuboError, OSError) as exc:
        return _fail(EXIT_DATA, str(exc))

    try:
        rows = []
        for case_name, dataset in cases:
            for master in seeds:
                case_seed = derive_seed(master, "case", case_name)
                grid = grid_test(
                    dataset, None, None, replace(base_cfg, seed=case_seed),
                    n_values=n_values, m_values=m_values,
                )
                for cell in grid.cells:
                    rows.append(
                        {
                            "scenario": scenario,
                            "n_1": cell.n1,
                            "m": cell.m,
                            "seed": case_seed,
                            "pearson": cell.pearson,
                            "spearman": cell.spearman,
                            "train_loss": cell.eta,
                            "iterations": cell.iterations,
                            "n_nonzero_slack": cell.n_nonzero_slack,
                            "converged": cell.converged,
                        }
                    )

        hash_hex = config_hash(_hashable(resolved))
        _write_csv(out_path, GRID_COLUMNS, rows, hash_hex)
        print(f"wrote {len(rows)} rows to {out_path} (config-hash {hash_hex})")
        _print_cell_summaries(rows)
        if _flag(run, "figures", True):
            from .plots import render_grid_figures

            for path in render_grid_figures(rows, out_path, _KNOB_LABEL[scenario]):
                print(f"wrote {path}")
    except (FmQuboError, OSError) as exc:
        return _fail(EXIT_RUNTIME, str(exc))
    return EXIT_OK


def _print_cell_summaries(rows) -> None:
    cells = sorted({(r["n_1"], r["m"]) for r in rows})
    for n1, m in cells:
        sub = [r for r in rows if r["n_1"] == n1 and r["m"] == m]
        pairs = [
            (
                np.nan if r["pearson"] is None else r["pearson"],
                np.nan if r["spearman"] is None else r["spearman"],
            )
            for r in sub
        ]
        # a case is unusable when its metrics are degenerate, not when the
        # loop stopped at i_max; the CSV keeps the per-row converged flag
        flags = [True] * len(sub)
        try:
            s = summarize(pairs, flags)
        except ValidationError:
            print(f"n_1={n1} m={m}: no usable cases out of {len(sub)}")
            continue
        print(
            f"n_1={n1} m={m}: pearson {s.pearson_mean:.4f}+/-{s.pearson_std:.4f} "
            f"spearman {s.spearman_mean:.4f}+/-{s.spearman_std:.4f} "
            f"({s.n_cases} cases, {s.n_failed} failed)"
        )


# ---------------------------------------------------------------------------
# run-optimize
# ---------------------------------------------------------------------------

def _optimize_blackbox(run: dict):
    if run.get("box"):
        return SyntheticBlackBox.load(run["box"])
    combo = run.get("combo")
    if combo:
        parts = [p.strip() for p in combo.split(",")]
        records = load_records(run["data"], n_levels=8)
        keep = [
            r for r in records
            if (r.drug_a, r.drug_b, r.cell_line) == tuple(parts)
        ]
        if not keep:
            raise ValidationError(f"no records for combination {combo!r}")
        return TableBlackBox(keep, combination_encoding(8))
    records = load_records(run["data"], n_levels=4, min_response=-100.0)
    return TableBlackBox(records, drug_pool_encoding(records, n_levels=4))


def cmd_run_optimize(args) -> int:
    try:
        resolved = _resolve(
            args,
            {
                "algorithm": args.algorithm, "data": args.data, "box": args.box,
                "combo": args.combo, "n_init": args.n_init,
                "m_slack": args.m, "seeds": args.seed,
            },
        )
        run = resolved["run"]
        algorithm = run.setdefault("algorithm", "fmqubo")
        if algorithm not in ("fmqubo", "hofmqubo", "fmqubos"):
            raise ValidationError(f"unknown algorithm {algorithm!r}")
        n_init = _num(run, "n_init", int, 20)
        seed = _num(run, "seeds", int, 0)
        out_path = run.get("out") or "trace.csv"
        base_cfg = _surrogate_config(resolved)
        if algorithm != "fmqubos" and base_cfg.m_slack != 0:
            raise ValidationError(f"{algorithm} does not take slack variables")
        if not run.get("box") and not run.get("data"):
            raise ValidationError("run-optimize needs --box SPEC.json or --data CSV")
        combo = run.get("combo")
        if combo and len(combo.split(",")) != 3:
            raise ValidationError("--combo expects DRUG_A,DRUG_B,CELL_LINE")
        if combo and not run.get("data"):
            raise ValidationError("--combo needs --data RECORDS.csv")
    except (ValidationError, OSError) as exc:
        return _fail(EXIT_USAGE, str(exc))

    try:
        box = _optimize_blackbox(run)
    except (FmQuboError, OSError) as exc:
        return _fail(EXIT_DATA, str(exc))

    try:
        cfg = replace(base_cfg, seed=seed)
        if algorithm == "fmqubos":
            result = fmqubos_optimize(box, n_init, cfg)
        elif algorithm == "hofmqubo":
            result = hofmqubo_optimize(box, n_init, cfg)
        else:
            result = fmqubo_optimize(box, n_init, cfg)

        rows = [
            {
                "iteration": rec.iteration,
                "y_model": rec.y_model,
                "y_true": rec.y_true,
                "train_loss": rec.train_loss,
                "n_train": rec.n_train,
                "n_nonzero_slack": int(rec.s.sum()),
                "x": _bitstring(rec.x),
                "s": _bitstring(rec.s),
            }
            for rec in result.trace
        ]
        hash_hex = config_hash(_hashable(resolved))
        _write_csv(out_path, TRACE_COLUMNS, rows, hash_hex)
        print(f"wrote {len(rows)} iterations to {out_path} (config-hash {hash_hex})")
        print(
            f"converged: {'true' if result.converged else 'false'}  "
            f"best x: {_bitstring(result.x)}  "
            f"y_model: {result.y_model!r}  y_true: {result.y_true!r}"
        )
        if _flag(run, "figures", True):
            from .plots import render_trace_figure

            for path in render_trace_figure(rows, out_path):
                print(f"wrote {path}")
    except (FmQuboError, OSError) as exc:
        return _fail(EXIT_RUNTIME, str(exc))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fmqubo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("solve-qubo", help="minimize a QUBO text file")
    p.add_argument("model", help="QUBO in text form (lines: i j coeff / i coeff / c0 coeff)")
    p.add_argument("--group", action="append",
                   help="one-hot index group, e.g. 0,1,2 (repeatable)")
    p.add_argument("--exact", action="store_true", help="exhaustive search")
    p.add_argument("--reads", type=int, dest="num_reads")
    p.add_argument("--sweeps", type=int, dest="num_sweeps")
    p.add_argument("--t-initial", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--schedule", choices=("geometric", "linear"))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_solve_qubo)

    p = sub.add_parser("run-scenario", help="grid-sweep slack regression")
    p.add_argument("--scenario", choices=("1", "2", "synth"))
    p.add_argument("--data", help="records CSV (scenarios 1 and 2)")
    p.add_argument("--box", help="synthetic box spec JSON (scenario synth)")
    p.add_argument("--n-values", help="split knob values, e.g. 0,10,20 or 0:30")
    p.add_argument("--m-values", help="slack counts, e.g. 0,8,16")
    p.add_argument("--seeds", help="master seeds, e.g. 0:9")
    p.add_argument("--n-test", help="synthetic test-set size")
    _add_common_flags(p)
    p.set_defaults(func=cmd_run_scenario)

    p = sub.add_parser("run-optimize", help="run one optimization loop")
    p.add_argument("--algorithm", choices=("fmqubo", "hofmqubo", "fmqubos"))
    p.add_argument("--box", help="synthetic box spec JSON")
    p.add_argument("--data", help="records CSV for a table black box")
    p.add_argument("--combo", help="DRUG_A,DRUG_B,CELL_LINE filter for --data")
    p.add_argument("--n-init", type=int, help="initial sample count")
    p.add_argument("--m", type=int, help="slack variables (fmqubos only)")
    p.add_argument("--seed", type=int, help="master seed")
    _add_common_flags(p)
    p.set_defaults(func=cmd_run_optimize)

    p = sub.add_parser("gen-synthetic", help="write a synthetic black-box spec")
    p.add_argument("--groups", type=int, required=True, help="one-hot group count")
    p.add_argument("--group-size", type=int, required=True)
    p.add_argument("--orders", default="1,2,3", help="planted orders, e.g. 1,2,3")
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="spec JSON path")
    p.set_defaults(func=cmd_gen_synthetic)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
