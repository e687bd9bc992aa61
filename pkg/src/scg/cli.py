"""Batch command-line front door: fuzz, label, calibrate, evaluate, simulate.

Every artifact is a file and every command is a pure function of its inputs
and seeds, so any stage can be rerun or swapped with externally produced
files. Exit codes: 0 success, 2 input error, 3 infeasible calibration,
4 failed certification.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from . import calibrate as cal
from . import entailment as ent
from . import evaluate as ev
from . import fuzzgen, sim
from .dataset import load_problems
from .executor import ExecLimits, SubprocessExecutor
from .records import read_jsonl, write_jsonl
from .scoring import SCORING_FUNCTIONS, load_generations

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_CERTIFICATION = 4


@dataclass
class PipelineConfig:
    alpha: float = 0.35
    epsilon_e: float = 0.05
    eps_s: float = 0.3
    delta_s: float = 0.1
    n_max: int = 150
    epsilon_e_test: float = 0.01
    eval_n_max: int = 600
    scoring: str = "norm"
    workers: int = 1
    timeout_ms: float = 2000.0
    seed: int = 20250810


def _add_common(parser: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    parser.add_argument("--alpha", type=float, default=d.alpha)
    parser.add_argument("--eps-e", type=float, default=d.epsilon_e)
    parser.add_argument("--eps-s", type=float, default=d.eps_s)
    parser.add_argument("--delta-s", type=float, default=d.delta_s)
    parser.add_argument("--n-max", type=int, default=d.n_max)
    parser.add_argument("--eps-e-test", type=float, default=d.epsilon_e_test)
    parser.add_argument("--scoring", choices=sorted(SCORING_FUNCTIONS),
                        default=d.scoring)
    parser.add_argument("--workers", type=int, default=d.workers)
    parser.add_argument("--timeout-ms", type=float, default=d.timeout_ms)
    parser.add_argument("--seed", type=int, default=d.seed)
    parser.add_argument("--reuse-workers", action="store_true",
                        help="keep one worker alive per language instead of "
                             "spawning one per execution")


def _executor(args) -> SubprocessExecutor:
    return SubprocessExecutor(
        limits=ExecLimits(wall_timeout_ms=args.timeout_ms),
        reuse_workers=args.reuse_workers and args.workers == 1)


def _score_fn(args):
    return SCORING_FUNCTIONS[args.scoring]


# --- commands ---------------------------------------------------------------

def cmd_fuzz(args) -> int:
    problems = load_problems(args.dataset)
    rows = []
    errors = []
    with _executor(args) as executor:
        for problem in problems:
            try:
                bank = fuzzgen.build_test_bank(problem, args.count,
                                               args.seed, executor)
            except fuzzgen.PartialBankError as exc:
                errors.append(f"{problem.problem_id}: {exc}")
                continue
            rows.extend(fuzzgen.bank_to_rows(bank))
    write_jsonl(args.out, rows)
    if errors:
        print("fuzzing incomplete:\n  " + "\n  ".join(errors),
              file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_label(args) -> int:
    problems = {p.problem_id: p for p in load_problems(args.dataset)}
    banks = fuzzgen.banks_from_rows(read_jsonl(args.banks))
    generations = load_generations(args.generations)
    if args.for_eval:
        # evaluation-time ground truth: stricter budget, deeper test runs
        cfg = ent.EntailmentConfig(args.alpha, args.eps_e_test,
                                   args.eval_n_max)
    else:
        cfg = ent.EntailmentConfig(args.alpha, args.eps_e, args.n_max)

    wanted = {g.problem_id for g in generations}
    missing = sorted((wanted - set(problems)) | (wanted - set(banks)))
    if missing:
        print("no problem/bank for: " + ", ".join(missing), file=sys.stderr)
        return EXIT_INPUT

    def label_one(gen, executor):
        problem = problems[gen.problem_id]
        label = ent.label_candidate(banks[gen.problem_id].tests, gen.code,
                                    problem.entry, cfg, executor,
                                    problem.judge)
        return ent.label_to_row(gen.problem_id, gen.candidate_id, label)

    if args.workers > 1:
        # Labels for distinct pairs are independent; each task gets its own
        # fresh-spawn executor so no worker state is shared across threads.
        def task(gen):
            with SubprocessExecutor(
                    limits=ExecLimits(wall_timeout_ms=args.timeout_ms)) as ex:
                return label_one(gen, ex)

        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(task, generations))
    else:
        with _executor(args) as executor:
            rows = [label_one(g, executor) for g in generations]
    write_jsonl(args.out, rows)
    return EXIT_OK


def _load_labels(path) -> dict[tuple[str, str], ent.EntailmentLabel]:
    labels = {}
    for row in read_jsonl(path):
        pid, cid, label = ent.label_from_row(row)
        labels[(pid, cid)] = label
    return labels


def _join_records(generations, labels, score_fn):
    records = []
    missing = []
    for gen in generations:
        key = (gen.problem_id, gen.candidate_id)
        if key not in labels:
            missing.append(f"{key[0]}/{key[1]}")
            continue
        records.append(cal.CalibrationRecord(
            gen.problem_id, gen.candidate_id, score_fn(gen), labels[key]))
    if missing:
        raise ValueError("generations without labels: " + ", ".join(missing))
    return records


def cmd_calibrate(args) -> int:
    generations = load_generations(args.generations)
    labels = _load_labels(args.labels)
    records = _join_records(generations, labels, _score_fn(args))
    model = cal.learn_scg(records, args.eps_s, args.delta_s, args.eps_e,
                          args.scoring)
    write_jsonl(args.out, [cal.model_to_row(model)])
    print(f"tau={model.tau} u_hat={model.u_hat:.6f} feasible={model.feasible}")
    return EXIT_OK if model.feasible else EXIT_INFEASIBLE


def _build_bundle(args, score_fn) -> list[ev.BundleEntry]:
    generations = load_generations(args.generations)
    calib = _load_labels(args.calib_labels)
    evals = _load_labels(args.eval_labels)
    entries = []
    for gen in generations:
        key = (gen.problem_id, gen.candidate_id)
        if key not in calib or key not in evals:
            raise ValueError(f"missing labels for {key[0]}/{key[1]}")
        entries.append(ev.BundleEntry(gen.problem_id, gen.candidate_id,
                                      score_fn(gen), calib[key], evals[key]))
    return entries


def _baseline_learner(args):
    if args.baseline == "h":
        return lambda records: ev.baseline_scg_h(
            records, args.eps_s, args.delta_s, args.eps_e)
    if args.baseline == "manual":
        return lambda records: ev.baseline_scg_manual(
            records, args.top_fraction)
    return None  # em and small swap labels, not the learner


def _swap_baseline_labels(args, bundle):
    """em / small recompute the calibration-side labels of the bundle."""
    score_fn = _score_fn(args)
    generations = load_generations(args.generations)
    ecfg = ent.EntailmentConfig(args.alpha, args.eps_e, args.n_max)
    problems = {p.problem_id: p for p in load_problems(args.dataset)}
    by_key = {}
    if args.baseline == "em":
        for gen in generations:
            matched = ent.exact_match_label(problems[gen.problem_id].reference,
                                            gen.code)
            by_key[(gen.problem_id, gen.candidate_id)] = \
                ent.synthetic_exact_match_entailment(matched, ecfg)
    else:  # small
        banks = fuzzgen.banks_from_rows(read_jsonl(args.banks))
        with _executor(args) as executor:
            for gen in generations:
                problem = problems[gen.problem_id]
                by_key[(gen.problem_id, gen.candidate_id)] = \
                    ev.label_with_capped_bank(
                        banks[gen.problem_id], gen.code, problem.entry,
                        ecfg, executor, problem.judge, args.bank_cap)
    return [ev.BundleEntry(e.problem_id, e.candidate_id, e.score,
                           by_key[(e.problem_id, e.candidate_id)],
                           e.eval_label)
            for e in bundle]


def cmd_evaluate(args) -> int:
    score_fn = _score_fn(args)
    if args.splits:
        if not args.calib_labels:
            raise ValueError("--splits requires --calib-labels")
        if args.baseline in ("em", "small") and not args.dataset:
            raise ValueError(f"--baseline {args.baseline} requires --dataset")
        if args.baseline == "small" and not args.banks:
            raise ValueError("--baseline small requires --banks")
        bundle = _build_bundle(args, score_fn)
        if args.baseline in ("em", "small"):
            bundle = _swap_baseline_labels(args, bundle)
        reports, summary = ev.run_random_splits(
            bundle, args.splits, args.ratio, args.eps_s, args.delta_s,
            args.eps_e, args.seed, args.scoring,
            learner=_baseline_learner(args))
        write_jsonl(args.out + ".jsonl", [ev.report_to_row(r)
                                          for r in reports])
        ev.write_reports_csv(reports, args.out + ".csv")
        summary_obj = {
            "trials": summary.trials,
            "violation_rate": summary.violation_rate,
            "undefined_fdr_trials": summary.undefined_fdr_trials,
            "fdr_quantiles": summary.fdr_quantiles,
            "efficiency_quantiles": summary.efficiency_quantiles,
            "mean_fdr": summary.mean_fdr,
            "mean_efficiency": summary.mean_efficiency,
        }
        with open(args.out + ".summary.json", "w", encoding="utf-8") as fh:
            json.dump(summary_obj, fh, sort_keys=True, indent=2)
            fh.write("\n")
        print(f"trials={summary.trials} "
              f"violation_rate={summary.violation_rate:.4f} "
              f"undefined_fdr={summary.undefined_fdr_trials} "
              f"eff_whiskers={summary.efficiency_quantiles}")
        return EXIT_OK

    if not args.model:
        raise ValueError("single-shot evaluation requires --model")
    model = cal.model_from_row(read_jsonl(args.model)[0])
    generations = load_generations(args.generations)
    evals = _load_labels(args.eval_labels)
    labels, selections, passed = [], [], []
    for gen in generations:
        label = evals[(gen.problem_id, gen.candidate_id)]
        labels.append(label)
        selections.append(cal.select(model, score_fn(gen)))
        passed.append(label.k_hat == label.n_y)
    fdr = ev.empirical_fdr_ce(labels, selections)
    p1 = ev.pass_at_1(passed, selections)
    report = ev.EvalReport(
        fdr_ce=fdr, efficiency=ev.empirical_efficiency(selections),
        one_minus_pass1=None if p1 is None else 1.0 - p1,
        selected=sum(selections),
        selected_false=sum(1 for l, s in zip(labels, selections)
                           if s and not l.entailed),
        total=len(labels), tau=model.tau, u_hat=model.u_hat,
        feasible=model.feasible)
    write_jsonl(args.out + ".jsonl", [ev.report_to_row(report)])
    fdr_text = "undefined" if fdr is None else f"{fdr:.4f}"
    print(f"fdr_ce={fdr_text} efficiency={report.efficiency:.4f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = sim.load_world_config(args.world)
    inequality_results = []
    for q in (0.25, 0.5, 0.75):
        tau = sim.tau_at_quantile(cfg, q)
        res = sim.check_fdr_inequality(cfg, args.inequality_trials, tau)
        inequality_results.append({"quantile": q, "tau": tau, "lhs": res.lhs,
                              "rhs": res.rhs, "selected": res.selected,
                              "holds": res.holds,
                              "degenerate": res.degenerate})
        print(f"fdr-inequality q={q}: lhs={res.lhs:.4f} rhs={res.rhs:.4f} "
              f"holds={res.holds}")
    ctrl = sim.check_controllability(cfg, args.draws)
    print(f"controllability: violation_rate={ctrl.violation_rate:.4f} "
          f"threshold={ctrl.threshold:.4f} passes={ctrl.passes} "
          f"feasible_rate={ctrl.feasible_rate:.3f} "
          f"mean_efficiency={ctrl.mean_efficiency:.3f}")
    # per-draw results ride in the standard evaluation report formats
    write_jsonl(args.out + ".draws.jsonl",
                [ev.report_to_row(r) for r in ctrl.draw_reports])
    ev.write_reports_csv(ctrl.draw_reports, args.out + ".draws.csv")
    report = {
        "world": args.world,
        "fdr_inequality": inequality_results,
        "controllability": {
            "violation_rate": ctrl.violation_rate,
            "threshold": ctrl.threshold,
            "passes": ctrl.passes,
            "draws": ctrl.draws,
            "feasible_rate": ctrl.feasible_rate,
            "mean_efficiency": ctrl.mean_efficiency,
            "mean_true_fdr": ctrl.mean_true_fdr,
        },
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    certified = ctrl.passes and all(r["holds"] for r in inequality_results)
    return EXIT_OK if certified else EXIT_CERTIFICATION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scg",
        description="selective code generation pipeline over record files")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuzz", help="generate unit-test banks")
    p.add_argument("--dataset", required=True)
    p.add_argument("--count", type=int, default=600)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("label", help="label candidates against banks")
    p.add_argument("--dataset", required=True)
    p.add_argument("--banks", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--for-eval", action="store_true",
                   help="use the evaluation-time budget (--eps-e-test) and "
                        "test cap (--eval-n-max) instead of the working ones")
    p.add_argument("--eval-n-max", type=int, default=PipelineConfig().eval_n_max)
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("calibrate", help="learn the selection threshold")
    p.add_argument("--labels", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="measure metrics or run split trials")
    p.add_argument("--model")
    p.add_argument("--generations", required=True)
    p.add_argument("--eval-labels", required=True)
    p.add_argument("--calib-labels")
    p.add_argument("--splits", type=int, default=0)
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--baseline", choices=("em", "manual", "small", "h"))
    p.add_argument("--top-fraction", type=float, default=0.5)
    p.add_argument("--bank-cap", type=int, default=21)
    p.add_argument("--dataset")
    p.add_argument("--banks")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="certify the guarantee on a world")
    p.add_argument("--world", required=True)
    p.add_argument("--draws", type=int, default=500)
    p.add_argument("--inequality-trials", type=int, default=2000)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError,
            ent.LabelingError, cal.CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
