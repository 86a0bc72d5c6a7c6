"""Benchmark the group sampler's compiled kernel against the plain fallback.

Runs the same chain twice in child processes, once as usual and once with
BLOG_NO_NUMBA=1, then checks that the kept coefficient draws are bit for
bit identical and reports the timings.  The compiled child does a small
warm-up chain first so compilation time is not counted.

Usage:
    python3 benchmarks/bench_gibbs.py [--preset s30] [--iters 2000] ...
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path


def build_parser():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--preset", default="s30", help="panel preset: s30, s100 or s350")
    parser.add_argument("--seed", type=int, default=0, help="panel and chain seed")
    parser.add_argument("--iters", type=int, default=2000)
    parser.add_argument("--burnin", type=int, default=1000)
    parser.add_argument("--mcem-rounds", type=int, default=1)
    parser.add_argument("--mcem-inner", type=int, default=500)
    parser.add_argument("--child", default=None, help=argparse.SUPPRESS)
    return parser


def run_child(args):
    from blog.bglss import GibbsConfig, run_gibbs, save_beta_draws, USING_NUMBA
    from blog.deltadesign import build_multivariate_design
    from blog.simgen import preset, simulate

    out = Path(args.child)
    dataset, _ = simulate(preset(args.preset, seed=args.seed))
    design = build_multivariate_design(dataset)
    config = GibbsConfig(
        n_iter=args.iters,
        burn_in=args.burnin,
        mcem_rounds=args.mcem_rounds,
        mcem_inner_iters=args.mcem_inner,
        seed=args.seed,
    )
    if USING_NUMBA:
        # trigger compilation outside the timed section
        warm = GibbsConfig(n_iter=20, burn_in=10, mcem_rounds=0, seed=args.seed)
        run_gibbs(design, warm)
    start = time.perf_counter()
    summary = run_gibbs(design, config, keep_draws=True)
    elapsed = time.perf_counter() - start
    save_beta_draws(summary.draws.beta, out.with_suffix(".bin"))
    payload = {
        "using_numba": bool(USING_NUMBA),
        "elapsed": elapsed,
        "n_selected": int(summary.selected.sum()),
        "n_coefficients": int(summary.draws.beta.shape[1]),
        "n_kept": int(summary.n_kept),
    }
    out.write_text(json.dumps(payload))
    return 0


def run_mode(argv, label, no_numba, out):
    env = os.environ.copy()
    if no_numba:
        env["BLOG_NO_NUMBA"] = "1"
    else:
        env.pop("BLOG_NO_NUMBA", None)
    cmd = [sys.executable, os.path.abspath(__file__), *argv, "--child", str(out)]
    proc = subprocess.run(cmd, env=env)
    if proc.returncode != 0:
        raise SystemExit("%s child failed with code %d" % (label, proc.returncode))
    return json.loads(Path(out).read_text())


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    args = build_parser().parse_args(argv)
    if args.child:
        return run_child(args)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        compiled = run_mode(argv, "compiled", False, tmp / "compiled.json")
        fallback = run_mode(argv, "fallback", True, tmp / "fallback.json")
        same = (tmp / "compiled.bin").read_bytes() == (tmp / "fallback.bin").read_bytes()

    if compiled["using_numba"] == fallback["using_numba"]:
        print("note: both children ran the same kernel; is numba installed?")
    print(
        "workload: preset %s, %d coefficients, %d iterations (%d kept), %d EM rounds"
        % (args.preset, compiled["n_coefficients"], args.iters, compiled["n_kept"], args.mcem_rounds)
    )
    print("compiled kernel:  %8.3fs (numba: %s)" % (compiled["elapsed"], compiled["using_numba"]))
    print("plain fallback:   %8.3fs (numba: %s)" % (fallback["elapsed"], fallback["using_numba"]))
    if compiled["elapsed"] > 0:
        print("speedup:          %8.1fx" % (fallback["elapsed"] / compiled["elapsed"]))
    print("kept draws bit-identical across kernels: %s" % same)
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
