"""Synthetic short panels with a known set of influential features.

Each feature follows a subject-level random walk started at a random
baseline; target features additionally jump upward between the first two
time points.  The response accumulates the effects of all current and
earlier target changes plus noise, which is exactly the structure the
lagged-change designs are built to recover.  Three stock sizes are
provided; everything is deterministic given the scenario seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .longdata import LongitudinalDataset, write_long_csv

__all__ = [
    "PRESETS",
    "SimScenario",
    "SimTruth",
    "preset",
    "simulate",
    "export",
]

# preset name -> (n_targets, n_noise)
PRESETS = {
    "s30": (10, 20),
    "s100": (20, 80),
    "s350": (50, 300),
}

DMU_UNIFORM = "uniform"
DMU_RAMP = "ramp"


@dataclass(frozen=True)
class SimScenario:
    """Panel dimensions and distributional knobs for one synthetic study.

    The first ``n_targets`` features influence the response with common
    coefficient ``beta_target``; the remaining ``n_noise`` do not.
    Feature baselines are uniform on [level_low, level_high], their
    innovation standard deviations uniform on [sd_low, sd_high], and
    target jumps either uniform on [jump_low, jump_high] ("uniform" mode)
    or evenly spaced over that range ("ramp" mode).
    """

    n_targets: int
    n_noise: int
    n_subjects: int = 15
    n_times: int = 4
    beta_target: float = 1.0 / 3.0
    level_low: float = 10.0
    level_high: float = 20.0
    sd_low: float = 1.0
    sd_high: float = 2.0
    jump_low: float = 5.0
    jump_high: float = 10.0
    response_baseline: float = 15.0
    response_sd: float = 5.0
    dmu_mode: str = DMU_UNIFORM
    seed: int = 0

    def __post_init__(self):
        if int(self.n_targets) < 0 or int(self.n_noise) < 0:
            raise ValidationError("feature counts must be >= 0")
        if int(self.n_targets) + int(self.n_noise) < 1:
            raise ValidationError("need at least one feature")
        if int(self.n_subjects) < 1:
            raise ValidationError("need at least one subject")
        if int(self.n_times) < 2:
            raise ValidationError("need at least two time points")
        if self.dmu_mode not in (DMU_UNIFORM, DMU_RAMP):
            raise ValidationError("dmu_mode must be %r or %r" % (DMU_UNIFORM, DMU_RAMP))
        for low, high, what in (
            (self.level_low, self.level_high, "level"),
            (self.sd_low, self.sd_high, "sd"),
            (self.jump_low, self.jump_high, "jump"),
        ):
            if not (low <= high):
                raise ValidationError("%s bounds are out of order" % what)
        if self.sd_low <= 0.0 or self.response_sd <= 0.0:
            raise ValidationError("standard deviations must be > 0")

    @property
    def n_features(self):
        return int(self.n_targets) + int(self.n_noise)


@dataclass(frozen=True)
class SimTruth:
    """Which features drive the response, and with what coefficient."""

    target_indices: tuple
    beta: np.ndarray

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64).copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "target_indices", tuple(int(i) for i in self.target_indices))

    @property
    def n_features(self):
        return self.beta.size

    @property
    def noise_indices(self):
        targets = set(self.target_indices)
        return tuple(j for j in range(self.n_features) if j not in targets)


def preset(name, seed=0, dmu_mode=DMU_UNIFORM):
    """Stock scenario by name: "s30", "s100" or "s350"."""
    key = str(name).lower()
    if key not in PRESETS:
        raise ValidationError("unknown preset %r; expected one of %s" % (name, sorted(PRESETS)))
    n_targets, n_noise = PRESETS[key]
    return SimScenario(n_targets=n_targets, n_noise=n_noise, seed=int(seed), dmu_mode=dmu_mode)


def simulate(scenario):
    """Draw one panel plus its ground truth.

    Draw order is part of the reproducibility contract: feature baselines,
    innovation scales, target jumps, then feature paths time point by
    time point, then the response path.
    """
    nt = int(scenario.n_targets)
    p = scenario.n_features
    n = int(scenario.n_subjects)
    t = int(scenario.n_times)
    rng = np.random.default_rng([int(scenario.seed)])

    mu = rng.uniform(scenario.level_low, scenario.level_high, p)
    sd = rng.uniform(scenario.sd_low, scenario.sd_high, p)
    jumps = np.zeros(p)
    if nt > 0:
        if scenario.dmu_mode == DMU_UNIFORM:
            jumps[:nt] = rng.uniform(scenario.jump_low, scenario.jump_high, nt)
        else:
            jumps[:nt] = np.linspace(scenario.jump_low, scenario.jump_high, nt)

    x = np.empty((n, t, p))
    x[:, 0, :] = mu + sd * rng.standard_normal((n, p))
    x[:, 1, :] = x[:, 0, :] + jumps + sd * rng.standard_normal((n, p))
    for step in range(2, t):
        x[:, step, :] = x[:, step - 1, :] + sd * rng.standard_normal((n, p))

    beta = np.zeros(p)
    beta[:nt] = scenario.beta_target
    # response change at step k carries all changes up to k, which
    # telescopes to the cumulative change since baseline
    cum_effect = np.cumsum(np.diff(x, axis=1) @ beta, axis=1)
    y = np.empty((n, t))
    y[:, 0] = scenario.response_baseline + scenario.response_sd * rng.standard_normal(n)
    for step in range(1, t):
        y[:, step] = y[:, step - 1] + cum_effect[:, step - 1] + scenario.response_sd * rng.standard_normal(n)

    dataset = LongitudinalDataset(
        responses=y,
        features=x,
        subject_ids=tuple("s%03d" % (i + 1) for i in range(n)),
        times=tuple(float(k + 1) for k in range(t)),
        feature_names=tuple("f%04d" % (j + 1) for j in range(p)),
    )
    truth = SimTruth(target_indices=tuple(range(nt)), beta=beta)
    return dataset, truth


def export(dataset, truth, out_dir, scenario=None):
    """Write a simulated panel and its truth to a directory.

    Produces ``panel.csv`` (long format), ``truth.csv`` (feature,
    is_target, beta) and, when the scenario is given, ``scenario.json``.
    Returns the paths written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    panel_path = out / "panel.csv"
    write_long_csv(dataset, panel_path)
    truth_path = out / "truth.csv"
    targets = set(truth.target_indices)
    with open(truth_path, "w", encoding="utf-8") as fh:
        fh.write("feature,is_target,beta\n")
        for j, name in enumerate(dataset.feature_names):
            fh.write("%s,%s,%s\n" % (name, "true" if j in targets else "false", repr(float(truth.beta[j]))))
    paths = [panel_path, truth_path]
    if scenario is not None:
        scen_path = out / "scenario.json"
        payload = {
            "n_targets": scenario.n_targets,
            "n_noise": scenario.n_noise,
            "n_subjects": scenario.n_subjects,
            "n_times": scenario.n_times,
            "beta_target": scenario.beta_target,
            "dmu_mode": scenario.dmu_mode,
            "seed": scenario.seed,
        }
        with open(scen_path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        paths.append(scen_path)
    return tuple(paths)


def scenario_for_replicate(base, base_seed, rep):
    """Same scenario with a per-replicate seed derived from a study seed."""
    derived = np.random.SeedSequence([int(base_seed), 0, int(rep)]).generate_state(1, np.uint64)
    return replace(base, seed=int(derived[0]))
