"""Replicated false/true positive rate studies over synthetic panels.

A study draws many panels from one scenario with derived per-replicate
seeds, applies a selector (the per-feature evidence screen or the joint
group sampler) and averages the error rates.  Everything is deterministic
for a fixed study seed, and replicates may run on worker threads without
changing any result.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._pool import worker_count
from .bayesfactor import TWO_LOG_DECISIVE, univariate_screen
from .bglss import GibbsConfig, run_gibbs
from .deltadesign import build_multivariate_design
from .errors import BlogError, NumericalError, ValidationError
from .gprior import GPriorSpec
from .simgen import SimScenario, preset, simulate

__all__ = [
    "DEFAULT_THRESHOLDS",
    "SelectionOutcome",
    "StudyResult",
    "selection_rates",
    "selection_outcome",
    "bf_threshold_sweep",
    "run_univariate_study",
    "run_multivariate_study",
    "study_to_json",
]

DEFAULT_THRESHOLDS = (0.0, 2.0, 6.0, 10.0, TWO_LOG_DECISIVE)

MAX_FAILURE_FRACTION = 0.05


def selection_rates(selected, target_indices, n_features):
    """False and true positive rate of one selection against the truth.

    Rates over the noise and target populations respectively; an empty
    population contributes a rate of 0.
    """
    chosen = set(int(j) for j in selected)
    targets = set(int(j) for j in target_indices)
    if not chosen <= set(range(n_features)):
        raise ValidationError("selected indices out of range")
    n_noise = n_features - len(targets)
    false_pos = len(chosen - targets)
    true_pos = len(chosen & targets)
    fpr = false_pos / n_noise if n_noise > 0 else 0.0
    tpr = true_pos / len(targets) if targets else 0.0
    return fpr, tpr


@dataclass(frozen=True)
class SelectionOutcome:
    """One replicate's selection and its error rates."""

    replicate: int
    selected: tuple
    target_indices: tuple
    n_features: int
    fpr: float
    tpr: float


def selection_outcome(replicate, selected, truth, n_features=None):
    n_features = int(n_features) if n_features is not None else truth.n_features
    fpr, tpr = selection_rates(selected, truth.target_indices, n_features)
    return SelectionOutcome(
        replicate=int(replicate),
        selected=tuple(sorted(int(j) for j in selected)),
        target_indices=tuple(truth.target_indices),
        n_features=n_features,
        fpr=fpr,
        tpr=tpr,
    )


def bf_threshold_sweep(screen_result, truth, thresholds=DEFAULT_THRESHOLDS, n_features=None):
    """Error rates of the evidence screen across selection cutoffs.

    At each cutoff the screen selects features whose twice-log evidence
    strictly exceeds it.  Returns one ``(cutoff, fpr, tpr)`` triple per
    cutoff; both rates are non-increasing in the cutoff.
    """
    n_features = int(n_features) if n_features is not None else truth.n_features
    curve = []
    for thr in thresholds:
        chosen = [r.feature_index for r in screen_result.reports if r.two_log_bf > thr]
        fpr, tpr = selection_rates(chosen, truth.target_indices, n_features)
        curve.append((float(thr), fpr, tpr))
    return tuple(curve)


@dataclass(frozen=True)
class StudyResult:
    """Aggregated outcomes of a replicated selection study."""

    kind: str
    label: str
    replicates: int
    seed: int
    outcomes: tuple
    mean_fpr: float
    mean_tpr: float
    threshold_curve: tuple
    failures: tuple

    def target_selection_frequency(self):
        """Per-target fraction of replicates that selected the target."""
        if not self.outcomes:
            return {}
        targets = self.outcomes[0].target_indices
        counts = {j: 0 for j in targets}
        for out in self.outcomes:
            chosen = set(out.selected)
            for j in targets:
                if j in chosen:
                    counts[j] += 1
        return {j: counts[j] / len(self.outcomes) for j in targets}


def _as_scenario(scenario_or_name):
    if isinstance(scenario_or_name, SimScenario):
        return scenario_or_name, "custom"
    return preset(scenario_or_name), str(scenario_or_name).lower()


def _rep_seed(base, stream, rep):
    state = np.random.SeedSequence([int(base), int(stream), int(rep)]).generate_state(1, np.uint64)
    return int(state[0])


def _finish(kind, label, replicates, seed, results, thresholds):
    outcomes = []
    curves = []
    failures = []
    for rep, payload in enumerate(results):
        if payload[0] == "fail":
            failures.append((rep, payload[1]))
        else:
            outcomes.append(payload[1])
            if payload[2] is not None:
                curves.append(payload[2])
    if len(failures) > MAX_FAILURE_FRACTION * replicates:
        raise NumericalError(
            "%d of %d replicates failed; first failure: %s"
            % (len(failures), replicates, failures[0][1])
        )
    mean_fpr = float(np.mean([o.fpr for o in outcomes])) if outcomes else 0.0
    mean_tpr = float(np.mean([o.tpr for o in outcomes])) if outcomes else 0.0
    curve = ()
    if curves:
        stacked = np.asarray(curves)
        curve = tuple(
            (float(thr), float(stacked[:, i, 1].mean()), float(stacked[:, i, 2].mean()))
            for i, thr in enumerate(thresholds)
        )
    return StudyResult(
        kind=kind,
        label=label,
        replicates=replicates,
        seed=int(seed),
        outcomes=tuple(outcomes),
        mean_fpr=mean_fpr,
        mean_tpr=mean_tpr,
        threshold_curve=curve,
        failures=tuple(failures),
    )


def _map_replicates(fn, n_reps):
    workers = worker_count(n_reps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, range(n_reps)))
    return [fn(rep) for rep in range(n_reps)]


def run_univariate_study(scenario, spec=None, replicates=25, seed=0, thresholds=DEFAULT_THRESHOLDS):
    """Replicated per-feature evidence screen.

    ``scenario`` is a preset name or a :class:`SimScenario`; its seed
    field is ignored in favor of derived per-replicate seeds.  Selection
    counts a feature when its Bayes factor is decisive.  Also aggregates
    the full threshold sweep.  Replicates that raise are recorded; a
    study fails when more than 5 percent of them do.
    """
    base, label = _as_scenario(scenario)
    spec = spec or GPriorSpec()
    replicates = int(replicates)
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")

    def one(rep):
        try:
            ds, truth = simulate(replace(base, seed=_rep_seed(seed, 0, rep)))
            res = univariate_screen(ds, spec)
            chosen = [r.feature_index for r in res.reports if r.decisive]
            outcome = selection_outcome(rep, chosen, truth, ds.n_features)
            curve = bf_threshold_sweep(res, truth, thresholds, ds.n_features)
            return ("ok", outcome, curve)
        except BlogError as exc:
            return ("fail", "%s: %s" % (type(exc).__name__, exc))

    results = _map_replicates(one, replicates)
    return _finish("univariate", "%s/%s" % (label, spec.g_rule), replicates, seed, results, thresholds)


def run_multivariate_study(scenario, config=None, replicates=20, seed=0):
    """Replicated joint selection with the group spike-and-slab sampler.

    One multivariate design per replicate; selection is by posterior
    median.  The sampler seed is derived per replicate independently of
    the panel seed.
    """
    base, label = _as_scenario(scenario)
    config = config or GibbsConfig()
    replicates = int(replicates)
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")

    def one(rep):
        try:
            ds, truth = simulate(replace(base, seed=_rep_seed(seed, 0, rep)))
            design = build_multivariate_design(ds)
            summary = run_gibbs(design, replace(config, seed=_rep_seed(seed, 1, rep)))
            chosen = np.nonzero(summary.selected)[0]
            outcome = selection_outcome(rep, chosen, truth, ds.n_features)
            return ("ok", outcome, None)
        except BlogError as exc:
            return ("fail", "%s: %s" % (type(exc).__name__, exc))

    results = _map_replicates(one, replicates)
    return _finish("multivariate", label, replicates, seed, results, ())


def study_to_json(result, path):
    """Write a study result as JSON with stable key order."""
    payload = {
        "kind": result.kind,
        "label": result.label,
        "replicates": result.replicates,
        "seed": result.seed,
        "mean_fpr": result.mean_fpr,
        "mean_tpr": result.mean_tpr,
        "threshold_curve": [list(entry) for entry in result.threshold_curve],
        "replicate_outcomes": [
            {
                "replicate": o.replicate,
                "selected": list(o.selected),
                "fpr": o.fpr,
                "tpr": o.tpr,
            }
            for o in result.outcomes
        ],
        "failures": [list(f) for f in result.failures],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path
