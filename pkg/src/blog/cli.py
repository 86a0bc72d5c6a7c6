"""Command line front end.

Subcommands: simulate, screen, fit-group, study-uni, study-multi, gbf.
Exit code 0 on success, 1 when input data or flags are invalid, 2 when a
numerical procedure fails.  BLOG_THREADS caps worker threads.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .bayesfactor import gbf_screen, screen_to_csv, screen_to_json, univariate_screen
from .bglss import GibbsConfig, run_gibbs, save_beta_draws
from .deltadesign import build_multivariate_design
from .errors import BlogError, NumericalError, ValidationError
from .evalharness import run_multivariate_study, run_univariate_study, study_to_json
from .gprior import G_RULE_FIXED, G_RULE_SQRT_N, G_RULE_SURE, GPriorSpec
from .longdata import ColumnConfig, load_long_csv
from .simgen import export, preset, simulate


def _add_data_flags(parser):
    parser.add_argument("--data", required=True, help="long-format CSV file")
    parser.add_argument("--subject", default="subject", help="subject column name")
    parser.add_argument("--time", default="time", help="time column name")
    parser.add_argument("--response", default="response", help="response column name")
    parser.add_argument("--delimiter", default=",", help="CSV delimiter")


def _load(args):
    config = ColumnConfig(
        subject=args.subject, time=args.time, response=args.response, delimiter=args.delimiter
    )
    return load_long_csv(args.data, config)


def _parse_g(raw):
    value = raw.strip().lower()
    if value == G_RULE_SQRT_N:
        return GPriorSpec(g_rule=G_RULE_SQRT_N)
    if value == G_RULE_SURE:
        return GPriorSpec(g_rule=G_RULE_SURE)
    if value.startswith(G_RULE_FIXED + ":"):
        try:
            g = float(value.split(":", 1)[1])
        except ValueError:
            raise ValidationError("--g fixed:VALUE needs a number, got %r" % raw) from None
        return GPriorSpec(g_rule=G_RULE_FIXED, g_value=g)
    raise ValidationError("--g must be sqrtn, sure or fixed:VALUE, got %r" % raw)


def _write_screen(result, out):
    if out.endswith(".json"):
        screen_to_json(result, out)
    elif out.endswith(".csv"):
        screen_to_csv(result, out)
    else:
        raise ValidationError("--out must end in .csv or .json, got %r" % out)


def _cmd_simulate(args):
    scen = preset(args.preset, seed=args.seed, dmu_mode=args.dmu_mode)
    dataset, truth = simulate(scen)
    paths = export(dataset, truth, args.out, scenario=scen)
    for path in paths:
        print(path)
    return 0


def _cmd_screen(args):
    dataset = _load(args)
    spec = _parse_g(args.g)
    result = univariate_screen(dataset, spec)
    _write_screen(result, args.out)
    print("%d features ranked, %d skipped -> %s" % (len(result.reports), len(result.skipped), args.out))
    return 0


def _cmd_gbf(args):
    dataset = _load(args)
    result = gbf_screen(dataset)
    if args.out.endswith(".json"):
        payload = {
            "reports": [
                {"rank": r.rank, "feature": r.feature_name, "log_gbf": r.log_gbf}
                for r in result.reports
            ],
            "skipped": [{"feature": n, "reason": reason} for n, reason in result.skipped],
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    elif args.out.endswith(".csv"):
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["rank", "feature", "log_gbf"])
            for r in result.reports:
                writer.writerow([r.rank, r.feature_name, repr(r.log_gbf)])
    else:
        raise ValidationError("--out must end in .csv or .json, got %r" % args.out)
    print("%d features ranked, %d skipped -> %s" % (len(result.reports), len(result.skipped), args.out))
    return 0


def _gibbs_config(args):
    return GibbsConfig(
        n_iter=args.iters,
        burn_in=args.burnin,
        seed=args.seed,
        pi0_update=bool(args.pi0_update),
        lambda_per_group=bool(args.lambda_per_group),
        mcem_rounds=args.mcem_rounds,
        mcem_inner_iters=args.mcem_inner,
        standardize=not args.no_standardize,
    )


def _cmd_fit_group(args):
    dataset = _load(args)
    design = build_multivariate_design(dataset)
    config = _gibbs_config(args)
    summary = run_gibbs(design, config, keep_draws=bool(args.dump_draws))
    if args.dump_draws:
        save_beta_draws(summary.draws.beta, args.dump_draws)
    rows = []
    for g, name in enumerate(dataset.feature_names):
        rows.append(
            {
                "group": g,
                "feature": name,
                "selected": bool(summary.selected[g]),
                "inclusion_prop": float(summary.inclusion_prop[g]),
                "medians": [float(v) for v in summary.group_medians[g]],
            }
        )
    if args.out.endswith(".json"):
        payload = {
            "groups": rows,
            "sigma2_mean": summary.sigma2_mean,
            "sigma2_interval": list(summary.sigma2_interval),
            "pi0_mean": summary.pi0_mean,
            "lambda_trace": [[float(v) for v in row] for row in summary.lambda_trace],
            "n_kept": summary.n_kept,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    elif args.out.endswith(".csv"):
        m = summary.group_medians.shape[1]
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["group", "feature", "selected", "inclusion_prop"]
                + ["median_%d" % (j + 1) for j in range(m)]
            )
            for row in rows:
                writer.writerow(
                    [
                        row["group"],
                        row["feature"],
                        "true" if row["selected"] else "false",
                        repr(row["inclusion_prop"]),
                    ]
                    + [repr(v) for v in row["medians"]]
                )
    else:
        raise ValidationError("--out must end in .csv or .json, got %r" % args.out)
    n_sel = sum(1 for row in rows if row["selected"])
    print("%d of %d groups selected -> %s" % (n_sel, len(rows), args.out))
    return 0


def _cmd_study_uni(args):
    spec = _parse_g(args.g)
    result = run_univariate_study(args.preset, spec, replicates=args.reps, seed=args.seed)
    study_to_json(result, args.out)
    print(
        "%s: %d replicates, mean FPR %.4f, mean TPR %.4f -> %s"
        % (result.label, result.replicates, result.mean_fpr, result.mean_tpr, args.out)
    )
    return 0


def _cmd_study_multi(args):
    config = GibbsConfig(
        n_iter=args.iters,
        burn_in=args.burnin,
        pi0_update=bool(args.pi0_update),
        lambda_per_group=bool(args.lambda_per_group),
        mcem_rounds=args.mcem_rounds,
        mcem_inner_iters=args.mcem_inner,
    )
    result = run_multivariate_study(args.preset, config, replicates=args.reps, seed=args.seed)
    study_to_json(result, args.out)
    print(
        "%s: %d replicates, mean FPR %.4f, mean TPR %.4f -> %s"
        % (result.label, result.replicates, result.mean_fpr, result.mean_tpr, args.out)
    )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blog",
        description="Variable selection for short longitudinal panels via differenced designs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write one synthetic panel and its truth")
    p.add_argument("--preset", required=True, help="s30, s100 or s350")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dmu-mode", default="uniform", choices=["uniform", "ramp"])
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("screen", help="per-feature Bayes factor screen")
    _add_data_flags(p)
    p.add_argument("--g", required=True, help="sqrtn, sure or fixed:VALUE")
    p.add_argument("--out", required=True, help="output file (.csv or .json)")
    p.set_defaults(func=_cmd_screen)

    p = sub.add_parser("gbf", help="per-feature singular-value evidence screen")
    _add_data_flags(p)
    p.add_argument("--out", required=True, help="output file (.csv or .json)")
    p.set_defaults(func=_cmd_gbf)

    p = sub.add_parser("fit-group", help="joint group spike-and-slab fit")
    _add_data_flags(p)
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--burnin", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mcem-rounds", type=int, default=5)
    p.add_argument("--mcem-inner", type=int, default=1000)
    p.add_argument("--pi0-update", action="store_true",
                   help="redraw the spike weight from its Beta conditional each sweep")
    p.add_argument("--lambda-per-group", action="store_true",
                   help="run the penalty-scale EM update per group instead of pooled")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--dump-draws", default=None, help="also dump kept coefficient draws (binary)")
    p.add_argument("--out", required=True, help="output file (.csv or .json)")
    p.set_defaults(func=_cmd_fit_group)

    p = sub.add_parser("study-uni", help="replicated screen error-rate study")
    p.add_argument("--preset", required=True, help="s30, s100 or s350")
    p.add_argument("--g", required=True, help="sqrtn, sure or fixed:VALUE")
    p.add_argument("--reps", type=int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=_cmd_study_uni)

    p = sub.add_parser("study-multi", help="replicated joint-sampler error-rate study")
    p.add_argument("--preset", required=True, help="s30, s100 or s350")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--burnin", type=int, default=5000)
    p.add_argument("--mcem-rounds", type=int, default=5)
    p.add_argument("--mcem-inner", type=int, default=1000)
    p.add_argument("--pi0-update", action="store_true",
                   help="redraw the spike weight from its Beta conditional each sweep")
    p.add_argument("--lambda-per-group", action="store_true",
                   help="run the penalty-scale EM update per group instead of pooled")
    p.add_argument("--out", required=True, help="output JSON file")
    p.set_defaults(func=_cmd_study_multi)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except (NumericalError, BlogError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
