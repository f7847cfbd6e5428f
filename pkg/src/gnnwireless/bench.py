"""Experiment runner: desk-scale versions of the D2D, cell-free and hybrid studies.

Every subcommand writes one CSV with columns

    experiment, arch, size, setting, n_train, seed, metric, value, wall_time_s

where ``size`` is K (D2D, cell-free users) or Nrf (hybrid), ``setting``
labels the scenario variant (empty when there is none) and only
``wall_time_s`` varies between identical runs.  Rows are sorted before
writing.

    python -m gnnwireless.bench sample_complexity --seed 0 --out sc.csv
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channels import child_seed
from .gnn import unrolled_numpy
from .objectives import EnergyModel, HybridSolution, energy_efficiency, spectral_efficiency
from .solvers import hybrid_altmin
from .training import (
    TrainConfig,
    baseline_values,
    evaluate,
    make_dataset,
    model_for,
    predict,
    train,
)

log = logging.getLogger("gnnwireless.bench")

COLUMNS = ["experiment", "arch", "size", "setting", "n_train", "seed", "metric", "value", "wall_time_s"]
ARCH_FAMILY = {"pcgnn": "d2d", "ecgnn": "d2d", "refgnn": "d2d", "hetgnn": "cellfree",
               "cfpcgnn": "cellfree", "unrolled": "hybrid", "mlp": None, "max_power": "cellfree",
               "altmin": "hybrid"}

D2D_GEOMETRY = {"area_m": 250.0, "dmin_m": 10.0, "dmax_m": 50.0, "tx_height_m": 1.5,
                "rx_height_m": 1.5, "carrier_ghz": 2.4, "K": 10}

DEFAULTS = {
    "sample_complexity": {"K": 10, "n_train": [20, 40, 200, 2000], "n_test": 500, "epochs": 100,
                          "models": ["pcgnn", "mlp"]},
    "scalability": {"K": [10, 20, 30, 50], "train_K": 10, "n_train": 2000, "n_test": 200,
                    "epochs": 20, "models": ["pcgnn", "ecgnn", "mlp"]},
    "snr_robustness": {"train_dbm": [10.0, 30.0], "test_dbm": [0, 10, 20, 30, 40], "n_train": 2000,
                       "n_test": 300, "epochs": 20, "feature_map": "log_ratio", "models": ["pcgnn"]},
    "dist_shift": {"shifts": ["user_distribution", "antenna_height", "los_nlos"], "n_train": 2000,
                   "n_test": 300, "epochs": 20, "feature_map": "log_ratio", "models": ["pcgnn"]},
    "cellfree_table": {"M": 30, "K": [6, 8, 10], "train_K": 6, "n_train": 2000, "n_test": 500, "beta": 2000.0,
                       "epochs": 40, "models": ["max_power", "cfpcgnn", "hetgnn", "mlp"]},
    "hybrid_ee": {"Nt": 144, "Nr": 36, "Ns": 2, "Nrf": [2, 4, 6, 8, 9, 12], "n_train": 200,
                  "n_test": 100, "epochs": 3, "models": ["unrolled", "altmin"]},
    "timing": {"Nt": 144, "Nr": 36, "Ns": 2, "Nrf": [2, 4, 8], "runs": 30,
               "instances": 10, "models": ["unrolled", "altmin"]},
}
TRAIN_KEYS = {"batch_size", "lr", "optimizer", "beta"}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    models: list | None = None
    seeds: list = field(default_factory=lambda: [0])
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in RUNNERS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; valid tags: {sorted(RUNNERS)}")
        base = DEFAULTS[self.experiment]
        unknown = set(self.params) - set(base) - TRAIN_KEYS - {"hidden", "n_val", "feature_map"}
        if unknown:
            raise ConfigError(f"unknown parameters for {self.experiment}: {sorted(unknown)}")
        self.params = {**base, **self.params}
        self.models = list(self.models or self.params.pop("models"))
        self.params.pop("models", None)
        family = {"sample_complexity": "d2d", "scalability": "d2d", "snr_robustness": "d2d",
                  "dist_shift": "d2d", "cellfree_table": "cellfree", "hybrid_ee": "hybrid",
                  "timing": "hybrid"}[self.experiment]
        for m in self.models:
            if m not in ARCH_FAMILY:
                raise ConfigError(f"unknown model {m!r}; valid: {sorted(ARCH_FAMILY)}")
            if ARCH_FAMILY[m] not in (None, family):
                raise ConfigError(f"model {m!r} does not solve {family} problems")
        if not self.seeds or any(int(s) < 0 or int(s) >= 1 << 64 for s in self.seeds):
            raise ConfigError("seeds must be a nonempty list of unsigned 64-bit integers")
        self.seeds = [int(s) for s in self.seeds]

    @classmethod
    def from_json(cls, obj) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigError("config must be a JSON object")
        extra = set(obj) - {"experiment", "params", "models", "seeds", "out"}
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        if "experiment" not in obj:
            raise ConfigError("config lacks 'experiment'")
        return cls(**obj)

    def to_json(self) -> dict:
        return {"experiment": self.experiment, "params": self.params, "models": self.models,
                "seeds": self.seeds, "out": self.out}


def _row(exp, arch, size, setting, n_train, seed, metric, value, wall):
    return {"experiment": exp, "arch": arch, "size": size, "setting": setting, "n_train": n_train,
            "seed": seed, "metric": metric, "value": float(value), "wall_time_s": float(wall)}


def _train_cfg(p, seed):
    kw = {k: p[k] for k in TRAIN_KEYS if k in p}
    return TrainConfig(epochs=p["epochs"], seed=seed, **kw)


def _fit(arch, trn, p, seed, val=None):
    t0 = time.perf_counter()
    kw = {"feature_map": p["feature_map"]} if "feature_map" in p else {}
    model = model_for(arch, trn, seed=seed, hidden=p.get("hidden", 64), **kw)
    model, _ = train(model, trn, _train_cfg(p, seed), val)
    return model, time.perf_counter() - t0


# -- D2D ---------------------------------------------------------------------------

def run_sample_complexity(p, models, seed):
    K = p["K"]
    test = make_dataset("gaussian_ic", p["n_test"], "test", seed, K=K)
    val = make_dataset("gaussian_ic", p.get("n_val", 100), "val", seed, K=K)
    rows = []
    for n in p["n_train"]:
        trn = make_dataset("gaussian_ic", n, "train", seed, K=K)
        for arch in models:
            model, wall = _fit(arch, trn, p, child_seed(seed, n), val)
            rows.append(_row("sample_complexity", arch, K, "", n, seed, "normalized_sum_rate",
                             evaluate(model, test), wall))
    return rows


def run_scalability(p, models, seed):
    rows = []
    Ks = list(p["K"])
    tests = {K: make_dataset("gaussian_ic", p["n_test"], "test", seed, K=K) for K in Ks}
    fitted = {}

    def trained(arch, K):
        if (arch, K) not in fitted:
            trn = make_dataset("gaussian_ic", p["n_train"], "train", seed, K=K)
            val = make_dataset("gaussian_ic", p.get("n_val", 100), "val", seed, K=K)
            fitted[arch, K] = _fit(arch, trn, p, seed, val)
        return fitted[arch, K]

    for arch in models:
        for K in Ks:
            # train_K null trains every model at its native size
            train_K = K if arch == "mlp" or p["train_K"] is None else p["train_K"]
            model, wall = trained(arch, train_K)
            rows.append(_row("scalability", arch, K, f"train_K={train_K}", p["n_train"], seed,
                             "normalized_sum_rate", evaluate(model, tests[K]), wall))
    return rows


def _geo(**over):
    return {**D2D_GEOMETRY, **over}


def run_snr_robustness(p, models, seed):
    rows = []
    lo, hi = p["train_dbm"]
    trn = make_dataset("d2d_geometric", p["n_train"], "train", seed, **_geo(tx_power_dbm=(lo, hi)))
    val = make_dataset("d2d_geometric", p.get("n_val", 100), "val", seed, **_geo(tx_power_dbm=(lo, hi)))
    for arch in models:
        model, wall = _fit(arch, trn, p, seed, val)
        for dbm in p["test_dbm"]:
            test = make_dataset("d2d_geometric", p["n_test"], "test", seed, **_geo(tx_power_dbm=dbm))
            rows.append(_row("snr_robustness", arch, 10, f"test_dbm={dbm}", p["n_train"], seed,
                             "normalized_sum_rate", evaluate(model, test), wall))
            full_trn = make_dataset("d2d_geometric", p["n_train"], "train", seed, start=1 << 20,
                                    **_geo(tx_power_dbm=dbm))
            full_val = make_dataset("d2d_geometric", p.get("n_val", 100), "val", seed, start=1 << 20,
                                    **_geo(tx_power_dbm=dbm))
            full, wall_f = _fit(arch, full_trn, p, seed, full_val)
            rows.append(_row("snr_robustness", f"{arch}_full", 10, f"test_dbm={dbm}", p["n_train"],
                             seed, "normalized_sum_rate", evaluate(full, test), wall_f))
    return rows


SHIFTS = {
    "user_distribution": (_geo(dmin_m=30.0, dmax_m=30.0), _geo()),
    "antenna_height": (_geo(), _geo(tx_height_m=(30.0, 50.0), rx_height_m=(1.0, 3.0))),
    "los_nlos": (_geo(), _geo(nlos_prob=0.5)),
}


def run_dist_shift(p, models, seed):
    rows = []
    for name in p["shifts"]:
        if name not in SHIFTS:
            raise ConfigError(f"unknown shift {name!r}; valid: {sorted(SHIFTS)}")
        src, dst = SHIFTS[name]
        test = make_dataset("d2d_geometric", p["n_test"], "test", seed, **dst)
        for arch in models:
            for label, geo in ((arch, src), (f"{arch}_full", dst)):
                trn = make_dataset("d2d_geometric", p["n_train"], "train", seed, **geo)
                val = make_dataset("d2d_geometric", p.get("n_val", 100), "val", seed, **geo)
                model, wall = _fit(arch, trn, p, seed, val)
                rows.append(_row("dist_shift", label, 10, name, p["n_train"], seed,
                                 "normalized_sum_rate", evaluate(model, test), wall))
    return rows


# -- cell-free ------------------------------------------------------------------------

def run_cellfree_table(p, models, seed):
    rows = []
    M = p["M"]
    tests = {K: make_dataset("cellfree", p["n_test"], "test", seed, M=M, K=K, tau=10, area_m=500.0)
             for K in p["K"]}
    fitted = {}
    for arch in models:
        for K in p["K"]:
            test = tests[K]
            if arch == "max_power":
                t0 = time.perf_counter()
                v = evaluate(lambda ds: np.ones((len(ds), K)), test)
                rows.append(_row("cellfree_table", arch, K, "", 0, seed, "normalized_min_rate", v,
                                 time.perf_counter() - t0))
                continue
            settings = [K] if arch == "mlp" else sorted({K, p["train_K"]})
            for train_K in settings:
                if (arch, train_K) not in fitted:
                    kw = dict(M=M, K=train_K, tau=10, area_m=500.0)
                    trn = make_dataset("cellfree", p["n_train"], "train", seed, **kw)
                    val = make_dataset("cellfree", p.get("n_val", 100), "val", seed, **kw)
                    fitted[arch, train_K] = _fit(arch, trn, p, seed, val)
                model, wall = fitted[arch, train_K]
                rows.append(_row("cellfree_table", arch, K, f"train_K={train_K}", p["n_train"], seed,
                                 "normalized_min_rate", evaluate(model, test), wall))
    return rows


# -- hybrid precoding ---------------------------------------------------------------

def _mmwave(p, Nrf):
    return dict(Nt=p["Nt"], Nr=p["Nr"], Ns=p["Ns"], Nrf=Nrf)


def run_hybrid_ee(p, models, seed):
    rows = []
    em = EnergyModel()
    for Nrf in p["Nrf"]:
        test = make_dataset("mmwave", p["n_test"], "test", seed, **_mmwave(p, Nrf))
        for arch in models:
            t0 = time.perf_counter()
            if arch == "altmin":
                sols = [hybrid_altmin(x).solution for x in test.instances]
                wall = time.perf_counter() - t0
            else:
                trn = make_dataset("mmwave", p["n_train"], "train", seed, **_mmwave(p, Nrf))
                model, wall = _fit(arch, trn, p, seed)
                Xrf, Xbb = predict(model, test)
                sols = [HybridSolution(r, b) for r, b in zip(Xrf, Xbb)]
            res = np.array([np.sum(np.abs(x.Fopt - s.precoder()) ** 2)
                            for x, s in zip(test.instances, sols)])
            se = np.mean([spectral_efficiency(x, s) for x, s in zip(test.instances, sols)])
            for metric, val in (("residual", res.mean()),
                                ("normalized_residual", res.mean() / baseline_values(test).mean()),
                                ("spectral_efficiency", se),
                                ("energy_efficiency", energy_efficiency(se, Nrf, p["Nt"], em))):
                rows.append(_row("hybrid_ee", arch, Nrf, "", p["n_train"] if arch != "altmin" else 0,
                                 seed, metric, val, wall))
    return rows


def time_per_instance(fn, runs=30, warmup=3):
    """Median wall time of ``fn()`` over ``runs`` calls after ``warmup`` calls."""
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def run_timing(p, models, seed):
    """Per-instance median times (batch size 1), averaged over ``instances`` test instances."""
    from .gnn import build_model
    rows = []
    runs = max(int(p["runs"]), 30)
    n = max(int(p.get("instances", 1)), 1)
    for Nrf in p["Nrf"]:
        test = make_dataset("mmwave", n, "test", seed, **_mmwave(p, Nrf))
        for arch in models:
            if arch == "altmin":
                fn = lambda x: hybrid_altmin(x)
            elif arch == "unrolled":
                model = build_model("unrolled", seed=seed, Nrf=Nrf)
                fn = lambda x: unrolled_numpy(model, x.Fopt)
            else:
                raise ConfigError(f"timing supports unrolled and altmin, not {arch!r}")
            t = float(np.mean([time_per_instance(lambda: fn(x), runs) for x in test.instances]))
            rows.append(_row("timing", arch, Nrf, "batch_size=1", 0, seed, "time_per_instance_s", t, t))
    return rows


RUNNERS = {
    "sample_complexity": run_sample_complexity,
    "scalability": run_scalability,
    "snr_robustness": run_snr_robustness,
    "dist_shift": run_dist_shift,
    "cellfree_table": run_cellfree_table,
    "hybrid_ee": run_hybrid_ee,
    "timing": run_timing,
}


def sort_rows(rows):
    key = lambda r: (r["experiment"], r["arch"], r["size"], r["setting"], r["n_train"], r["seed"], r["metric"])
    return sorted(rows, key=key)


def _run_seed(args):
    cfg, seed = args
    return RUNNERS[cfg.experiment](cfg.params, cfg.models, seed)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list:
    """Run every seed of ``cfg`` and return the sorted rows; writes ``cfg.out`` if set."""
    if not isinstance(cfg, ExperimentConfig):
        cfg = ExperimentConfig.from_json(cfg)
    tasks = [(cfg, s) for s in cfg.seeds]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_run_seed, tasks))
    else:
        parts = [_run_seed(t) for t in tasks]
    rows = sort_rows([r for part in parts for r in part])
    if cfg.out:
        write_csv(rows, cfg.out)
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({**r, "value": repr(r["value"]), "wall_time_s": f"{r['wall_time_s']:.6f}"})


def read_csv(path) -> list:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def build_parser():
    ap = argparse.ArgumentParser(prog="gnnwireless-bench", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="experiment", required=True)
    for tag in RUNNERS:
        sp = sub.add_parser(tag, help=f"run the {tag} experiment")
        sp.add_argument("--config", help="JSON ExperimentConfig file")
        sp.add_argument("--seed", type=int, help="single master seed (overrides the config seeds)")
        sp.add_argument("--out", help="CSV path (default <experiment>.csv)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes across seeds")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        obj = {"experiment": args.experiment}
        if args.config:
            with open(args.config) as f:
                obj = json.load(f)
            if obj.setdefault("experiment", args.experiment) != args.experiment:
                raise ConfigError(f"config is for {obj['experiment']!r}, not {args.experiment!r}")
        if args.seed is not None:
            obj["seeds"] = [args.seed]
        if args.out:
            obj["out"] = args.out
        obj.setdefault("out", f"{args.experiment}.csv")
        if args.jobs < 1:
            raise ConfigError("--jobs must be at least 1")
        cfg = ExperimentConfig.from_json(obj)
    except (ConfigError, OSError, json.JSONDecodeError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    rows = run_experiment(cfg, args.jobs)
    log.info("wrote %d rows to %s", len(rows), cfg.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
