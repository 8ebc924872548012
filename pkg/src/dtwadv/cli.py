"""Command-line front end.

Subcommands: train, attack, advtrain, eval, bench, mds, paths.  Every
experiment writes all of its artifacts under ``--out`` and nothing anywhere
else.  Exit codes: 0 success, 1 runtime failure, 2 configuration error (bad
flags, unreadable config, missing files).

Options may come from a ``--config`` JSON file; explicit flags win over file
values, file values win over built-in defaults.  Keys match the long flag
names (dashes or underscores both accepted).

Data sources are spec strings:

* ``synth:COUNT,N,T``  -- built-in two-class generator (seeded by --seed)
* ``csv:PATH,N,T``     -- dataset CSV (label, then N*T values per row)

Seed derivations, so split/attack reproducibility survives process
boundaries: synthetic data uses ``seed``, the split shuffle ``seed + 500``,
training ``seed``, and the k-th attacked example draws its alignment path
from ``seed + 1000 + k``.  Running ``attack`` or ``eval`` with the same
--data/--seed/--split flags as ``train`` therefore reproduces the exact
split the checkpoint was trained on.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from .analysis import distance_matrix, mds_silhouette, runtime_bench
from .attack import (
    AttackConfig,
    attack_dataset,
    calibrate_delta,
    fgs_attack,
    pgd_attack,
)
from .dtw import dist_p, dtw
from .nn import (
    Classifier,
    PRESETS,
    TrainConfig,
    build_preset,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .paths import (
    AdmissibleBand,
    AlignmentPath,
    diagonal_path,
    path_sim,
    random_admissible_path,
    validate,
)
from .robustness import AttackRanges, RobustnessReport, adversarial_train
from .signal import LabeledDataset, load_csv, split, synth_two_class, write_csv, znormalize

__all__ = ["main", "ConfigError"]


class ConfigError(Exception):
    """User-facing configuration problem; maps to exit code 2."""


_REQUIRED = object()


# ---------------------------------------------------------------- plumbing

def _merged(args, defaults: dict) -> dict:
    """Resolve options: explicit flag > config-file entry > default."""
    file_cfg = {}
    cfg_path = getattr(args, "config", None)
    if cfg_path:
        try:
            with open(cfg_path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {cfg_path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {cfg_path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config file {cfg_path} must hold a JSON object")
        for key, value in doc.items():
            norm = key.replace("-", "_")
            if norm not in defaults:
                raise ConfigError(
                    f"unknown config key {key!r}; valid keys: "
                    + ", ".join(sorted(k.replace("_", "-") for k in defaults))
                )
            file_cfg[norm] = value
    out = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None:
            value = file_cfg.get(key, default)
        if value is _REQUIRED:
            raise ConfigError(f"--{key.replace('_', '-')} is required")
        out[key] = value
    return out


def _parse_data_spec(spec: str):
    if ":" not in spec:
        raise ConfigError(f"data spec {spec!r} must look like synth:COUNT,N,T or csv:PATH,N,T")
    kind, rest = spec.split(":", 1)
    parts = rest.rsplit(",", 2)
    if kind not in ("synth", "csv") or len(parts) != 3:
        raise ConfigError(f"data spec {spec!r} must look like synth:COUNT,N,T or csv:PATH,N,T")
    head, n_s, t_s = parts
    try:
        n, T = int(n_s), int(t_s)
    except ValueError:
        raise ConfigError(f"data spec {spec!r}: N and T must be integers") from None
    if kind == "synth":
        try:
            count = int(head)
        except ValueError:
            raise ConfigError(f"data spec {spec!r}: COUNT must be an integer") from None
        return kind, count, n, T
    return kind, head, n, T


def _parse_ratios(text: str):
    try:
        ratios = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"bad split ratios {text!r}") from None
    if len(ratios) != 3:
        raise ConfigError(f"need three split ratios, got {text!r}")
    return ratios


def _load_dataset(cfg: dict) -> LabeledDataset:
    """Build + optionally normalize + split a dataset from resolved options."""
    kind, head, n, T = _parse_data_spec(cfg["data"])
    if kind == "synth":
        ds = synth_two_class(head, n, T, int(cfg["seed"]))
    else:
        if not os.path.exists(head):
            raise ConfigError(f"data file not found: {head}")
        ds = load_csv(head, n, T)
    if cfg.get("normalize"):
        ds = LabeledDataset(np.stack([znormalize(x) for x in ds.X]), ds.y, ds.tags)
    return split(ds, _parse_ratios(cfg["split"]), int(cfg["seed"]) + 500)


def _accuracy(model: Classifier, sub: LabeledDataset) -> tuple:
    hits = int((model.predict_batch(sub.X) == sub.y).sum())
    return hits, sub.n_examples


def _out_dir(cfg: dict) -> str:
    out = cfg["out"]
    os.makedirs(out, exist_ok=True)
    return out


def _echo_config(out: str, command: str, cfg: dict) -> None:
    doc = {"command": command, **cfg}
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------- train

_TRAIN_KEYS = {
    "data": _REQUIRED,
    "arch": "cnn",
    "epochs": 50,
    "batch_size": 16,
    "lr": 0.05,
    "momentum": 0.0,
    "seed": 0,
    "normalize": False,
    "split": "0.6,0.2,0.2",
    "out": _REQUIRED,
}


def _train_model(cfg: dict, ds: LabeledDataset):
    if cfg["arch"] not in PRESETS:
        raise ConfigError(f"unknown arch {cfg['arch']!r}; presets: {', '.join(sorted(PRESETS))}")
    spec = build_preset(cfg["arch"], ds.n_channels, ds.length, ds.n_classes)
    tcfg = TrainConfig(
        epochs=int(cfg["epochs"]),
        batch_size=int(cfg["batch_size"]),
        lr=float(cfg["lr"]),
        momentum=float(cfg["momentum"]),
        seed=int(cfg["seed"]),
    )
    model, history = train(Classifier(spec, tcfg.seed), ds, tcfg)
    return spec, tcfg, model, history


def cmd_train(args) -> int:
    cfg = _merged(args, _TRAIN_KEYS)
    try:
        ds = _load_dataset(cfg)
        _, _, model, history = _train_model(cfg, ds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(cfg)
    save_checkpoint(model, os.path.join(out, "checkpoint.bin"))
    with open(os.path.join(out, "train_metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write("epoch,loss,accuracy\n")
        for st in history:
            fh.write(f"{st.epoch},{st.loss:.17g},{st.accuracy:.17g}\n")
    _echo_config(out, "train", cfg)
    hits, total = _accuracy(model, ds.subset("test"))
    last = history[-1]
    print(f"train: {ds.subset('train').n_examples} examples, "
          f"epoch {last.epoch}: loss {last.loss:.4f} acc {last.accuracy:.3f}")
    print(f"test accuracy: {hits}/{total} = {hits / total:.3f}")
    print(f"wrote {os.path.join(out, 'checkpoint.bin')} "
          f"({model.spec.param_count} parameters)")
    return 0


# ---------------------------------------------------------------- attack

_ATTACK_KEYS = {
    "checkpoint": _REQUIRED,
    "data": _REQUIRED,
    "attack": "dtw-ar",
    "targets": "per-class",
    "split_tag": "test",
    "rho": -5.0,
    "alpha1": 0.5,
    "alpha2": 0.5,
    "eta": 0.01,
    "max_iters": 5000,
    "delta": None,       # None = calibrate from the train split
    "band_r": 0.5,
    "gamma": 1.0,
    "snapshot_every": 0,
    "eps": 0.1,
    "steps": 10,
    "step_size": None,
    "jobs": 1,
    "traces": False,
    "seed": 0,
    "normalize": False,
    "split": "0.6,0.2,0.2",
    "out": _REQUIRED,
}

_ATTACKS = ("dtw-ar", "cw-sdtw", "fgs", "pgd")


def _resolve_targets(spec: str, y: np.ndarray, K: int):
    """-> (source indices, target labels), one row per attack to run."""
    m = y.shape[0]
    if spec == "per-class":
        return np.arange(m), (y + 1) % K
    if spec == "all":
        src, tgt = [], []
        for i in range(m):
            for c in range(K):
                if c != y[i]:
                    src.append(i)
                    tgt.append(c)
        return np.asarray(src), np.asarray(tgt)
    try:
        explicit = [int(v) for v in str(spec).split(",")]
    except ValueError:
        raise ConfigError(f"bad targets {spec!r}: use per-class, all, or a label list") from None
    if len(explicit) == 1:
        explicit = explicit * m
    if len(explicit) != m:
        raise ConfigError(f"targets list has {len(explicit)} entries for {m} examples")
    tgt = np.asarray(explicit)
    if ((tgt < 0) | (tgt >= K)).any():
        raise ConfigError(f"targets must lie in [0, {K})")
    return np.arange(m), tgt


_RESULT_HEADER = ("index,source,y_true,y_target,fooled,within_delta,blind_spot,"
                  "chosen_iteration,final_dtw,final_sql2,path_seed,path")


def _write_trace(path, res) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,label_loss,dtw_loss,dist_p,dist_diag\n")
        for it, row in enumerate(res.trace):
            fh.write(f"{it}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def cmd_attack(args) -> int:
    cfg = _merged(args, _ATTACK_KEYS)
    kind = cfg["attack"]
    if kind not in _ATTACKS:
        raise ConfigError(f"unknown attack {kind!r}; choose from {', '.join(_ATTACKS)}")
    if not os.path.exists(cfg["checkpoint"]):
        raise ConfigError(f"checkpoint not found: {cfg['checkpoint']}")
    model = load_checkpoint(cfg["checkpoint"])
    ds = _load_dataset(cfg)
    sub = ds.subset(cfg["split_tag"])
    if sub.n_examples == 0:
        raise ConfigError(f"split {cfg['split_tag']!r} is empty")
    out = _out_dir(cfg)
    seed = int(cfg["seed"])
    report = RobustnessReport()
    hits, total = _accuracy(model, sub)
    report.add_rate("clean_accuracy", "none", "target", hits, total)

    if kind in ("dtw-ar", "cw-sdtw"):
        delta = cfg["delta"]
        delta = calibrate_delta(ds) if delta is None else float(delta)
        src, tgt = _resolve_targets(cfg["targets"], sub.y, ds.n_classes)
        acfg = AttackConfig(
            rho=float(cfg["rho"]),
            alpha1=float(cfg["alpha1"]),
            alpha2=float(cfg["alpha2"]),
            eta=float(cfg["eta"]),
            max_iters=int(cfg["max_iters"]),
            delta=delta,
            band=AdmissibleBand(float(cfg["band_r"])),
            snapshot_every=int(cfg["snapshot_every"]),
            gamma=float(cfg["gamma"]),
        )
        results = attack_dataset(
            model, sub.X[src], tgt, acfg, base_seed=seed, kind=kind, jobs=int(cfg["jobs"])
        )
        rows, adv_x, adv_y = [], [], []
        n_blind = 0
        for k, res in enumerate(results):
            blind = res.fooled and res.within_delta and res.final_sql2 > delta
            n_blind += blind
            ptxt = res.path.to_text() if res.path is not None else ""
            rows.append(
                f"{k},{src[k]},{sub.y[src[k]]},{res.y_target},{int(res.fooled)},"
                f"{int(res.within_delta)},{int(blind)},{res.chosen_iteration},"
                f"{res.final_dtw:.17g},{res.final_sql2:.17g},{seed + 1000 + k},{ptxt}"
            )
            adv_x.append(res.x_adv)
            adv_y.append(int(sub.y[src[k]]))
            if cfg["traces"]:
                tdir = os.path.join(out, "traces")
                os.makedirs(tdir, exist_ok=True)
                _write_trace(os.path.join(tdir, f"trace_{k:04d}.csv"), res)
        n = len(results)
        n_fooled = sum(r.fooled for r in results)
        n_within = sum(r.within_delta for r in results)
        report.add_rate("alpha_eff", kind, "target", n_fooled, n)
        report.add_rate("within_delta", kind, "target", n_within, n)
        report.add_rate("blind_spot_rate", kind, "target", n_blind, n)
        report.add_value("delta", kind, "target", delta)
        report.add_value("mean_final_dtw",
                         kind, "target", float(np.mean([r.final_dtw for r in results])), n)
        report.add_value("mean_chosen_iteration",
                         kind, "target", float(np.mean([r.chosen_iteration for r in results])), n)
        print(f"{kind}: fooled {n_fooled}/{n}, within delta {n_within}/{n}, "
              f"blind spots {n_blind} (delta={delta:.4g})")
    else:
        src = np.arange(sub.n_examples)
        eps = float(cfg["eps"])
        rows, adv_x, adv_y = [], [], []
        n_fooled = 0
        for k in src:
            x, y = sub.X[k], int(sub.y[k])
            if kind == "fgs":
                xa = fgs_attack(model, x, y, eps)
            else:
                step = cfg["step_size"]
                xa = pgd_attack(model, x, y, eps, steps=int(cfg["steps"]),
                                step_size=None if step is None else float(step))
            fooled = model.predict(xa) != y
            n_fooled += fooled
            fdtw = dtw(x, xa).value
            fsql2 = dist_p(x, xa, diagonal_path(x.shape[1]))
            rows.append(f"{k},{k},{y},,{int(fooled)},,,,"
                        f"{fdtw:.17g},{fsql2:.17g},,")
            adv_x.append(xa)
            adv_y.append(y)
        n = len(src)
        report.add_rate("fool_rate", kind, "target", int(n_fooled), n)
        report.add_rate("robust_accuracy", kind, "target", n - int(n_fooled), n)
        report.add_value("eps", kind, "target", eps)
        print(f"{kind}: fooled {n_fooled}/{n} at eps={eps}")

    with open(os.path.join(out, "results.csv"), "w", encoding="utf-8") as fh:
        fh.write(_RESULT_HEADER + "\n")
        fh.write("\n".join(rows) + "\n")
    adv = LabeledDataset(np.stack(adv_x), np.asarray(adv_y))
    write_csv(adv, os.path.join(out, "adv_examples.csv"))
    report.write_csv(os.path.join(out, "summary.csv"))
    _echo_config(out, "attack", cfg)
    print(f"wrote results.csv, adv_examples.csv, summary.csv under {out}")
    return 0


# ---------------------------------------------------------------- advtrain

_ADVTRAIN_KEYS = dict(
    _TRAIN_KEYS,
    rounds=2,
    fraction=0.5,
    alpha1_range="0.1,1.0",
    alpha2_range="0.0,1.0",
    atk_max_iters=500,
    eta=0.01,
    rho=-5.0,
    band_r=0.5,
    eval_eps=0.3,
    eval_attacks=20,
)


def _parse_range(text: str, flag: str):
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(f"bad {flag} {text!r}: expected LO,HI") from None
    return lo, hi


def cmd_advtrain(args) -> int:
    cfg = _merged(args, _ADVTRAIN_KEYS)
    try:
        ds = _load_dataset(cfg)
        spec, tcfg, clean, _ = _train_model(cfg, ds)
        base = AttackConfig(
            rho=float(cfg["rho"]),
            eta=float(cfg["eta"]),
            max_iters=int(cfg["atk_max_iters"]),
            band=AdmissibleBand(float(cfg["band_r"])),
            snapshot_every=0,
        )
        ranges = AttackRanges(
            alpha1=_parse_range(cfg["alpha1_range"], "--alpha1-range"),
            alpha2=_parse_range(cfg["alpha2_range"], "--alpha2-range"),
            base=base,
            rounds=int(cfg["rounds"]),
            fraction=float(cfg["fraction"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    robust = adversarial_train(spec, ds, ranges, tcfg)

    out = _out_dir(cfg)
    save_checkpoint(clean, os.path.join(out, "checkpoint_clean.bin"))
    save_checkpoint(robust, os.path.join(out, "checkpoint_robust.bin"))
    report = RobustnessReport()
    test = ds.subset("test")
    models = {"clean": clean, "robust": robust}
    for name, model in models.items():
        hits, total = _accuracy(model, test)
        report.add_rate("clean_accuracy", "none", name, hits, total)
        print(f"{name}: clean test accuracy {hits}/{total} = {hits / total:.3f}")

    eps = float(cfg["eval_eps"])
    for akind, fn in (("fgs", lambda m, x, y: fgs_attack(m, x, y, eps)),
                      ("pgd", lambda m, x, y: pgd_attack(m, x, y, eps))):
        for name, model in models.items():
            hits = sum(
                model.predict(fn(model, test.X[i], int(test.y[i]))) == test.y[i]
                for i in range(test.n_examples)
            )
            report.add_rate("robust_accuracy", akind, name, int(hits), test.n_examples)
            print(f"{name}: {akind} robust accuracy {hits}/{test.n_examples} at eps={eps}")

    # Held-out alignment attacks are generated against the *clean* model,
    # then replayed against both, so the robust gain is measured on inputs
    # the robust model never influenced.
    n_eval = min(int(cfg["eval_attacks"]), test.n_examples)
    if n_eval > 0:
        Xe = test.X[:n_eval]
        te = (test.y[:n_eval] + 1) % ds.n_classes
        results = attack_dataset(clean, Xe, te, base, base_seed=int(cfg["seed"]) + 5000)
        for name, model in models.items():
            hit_t = sum(model.predict(r.x_adv) == r.y_target for r in results)
            report.add_rate("alpha_eff", "dtw-ar", name, int(hit_t), n_eval)
            hit_r = sum(model.predict(r.x_adv) == test.y[i] for i, r in enumerate(results))
            report.add_rate("robust_accuracy", "dtw-ar", name, int(hit_r), n_eval)
            print(f"{name}: dtw-ar fooled {hit_t}/{n_eval}, recovered {hit_r}/{n_eval}")

    report.write_csv(os.path.join(out, "report.csv"))
    _echo_config(out, "advtrain", cfg)
    print(f"wrote checkpoint_clean.bin, checkpoint_robust.bin, report.csv under {out}")
    return 0


# ---------------------------------------------------------------- eval

_EVAL_KEYS = {
    "checkpoint": _REQUIRED,
    "data": _REQUIRED,
    "split_tag": "test",
    "adv_examples": None,
    "adv_results": None,
    "seed": 0,
    "normalize": False,
    "split": "0.6,0.2,0.2",
    "out": _REQUIRED,
}


def cmd_eval(args) -> int:
    cfg = _merged(args, _EVAL_KEYS)
    if not os.path.exists(cfg["checkpoint"]):
        raise ConfigError(f"checkpoint not found: {cfg['checkpoint']}")
    model = load_checkpoint(cfg["checkpoint"])
    ds = _load_dataset(cfg)
    sub = ds.subset(cfg["split_tag"])
    if sub.n_examples == 0:
        raise ConfigError(f"split {cfg['split_tag']!r} is empty")
    report = RobustnessReport()
    hits, total = _accuracy(model, sub)
    report.add_rate("clean_accuracy", "none", "target", hits, total)
    print(f"clean accuracy on {cfg['split_tag']}: {hits}/{total} = {hits / total:.3f}")

    if cfg["adv_examples"]:
        path = cfg["adv_examples"]
        if not os.path.exists(path):
            raise ConfigError(f"adversarial examples file not found: {path}")
        adv = load_csv(path, model.spec.n_channels, model.spec.length)
        preds = model.predict_batch(adv.X)
        hits = int((preds == adv.y).sum())
        report.add_rate("robust_accuracy", "replay", "target", hits, adv.n_examples)
        print(f"robust accuracy on replayed examples: {hits}/{adv.n_examples} "
              f"= {hits / adv.n_examples:.3f}")
        if cfg["adv_results"]:
            rpath = cfg["adv_results"]
            if not os.path.exists(rpath):
                raise ConfigError(f"attack results file not found: {rpath}")
            targets = _read_targets_column(rpath)
            if targets is None:
                print("results file has no targets (untargeted attack); skipping alpha_eff")
            else:
                if len(targets) != adv.n_examples:
                    raise ConfigError(
                        f"{rpath} has {len(targets)} rows but {path} has {adv.n_examples}"
                    )
                hit_t = int((preds == np.asarray(targets)).sum())
                report.add_rate("alpha_eff", "replay", "target", hit_t, adv.n_examples)
                print(f"alpha_eff on replayed examples: {hit_t}/{adv.n_examples} "
                      f"= {hit_t / adv.n_examples:.3f}")

    out = _out_dir(cfg)
    report.write_csv(os.path.join(out, "eval.csv"))
    _echo_config(out, "eval", cfg)
    print(f"wrote eval.csv under {out}")
    return 0


def _read_targets_column(path):
    import csv as _csv

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = _csv.DictReader(fh)
        if reader.fieldnames is None or "y_target" not in reader.fieldnames:
            raise ConfigError(f"{path} has no y_target column")
        values = [row["y_target"] for row in reader]
    if any(v == "" for v in values):
        return None
    return [int(v) for v in values]


# ---------------------------------------------------------------- bench

_BENCH_KEYS = {
    "sizes": "64,128,256,512",
    "channels": 3,
    "reps": 10,
    "seed": 0,
    "plot_data": False,
    "out": _REQUIRED,
}


def cmd_bench(args) -> int:
    cfg = _merged(args, _BENCH_KEYS)
    try:
        sizes = [int(v) for v in str(cfg["sizes"]).split(",")]
    except ValueError:
        raise ConfigError(f"bad sizes {cfg['sizes']!r}") from None
    try:
        records = runtime_bench(sizes, n=int(cfg["channels"]),
                                reps=int(cfg["reps"]), seed=int(cfg["seed"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = _out_dir(cfg)
    with open(os.path.join(out, "bench.csv"), "w", encoding="utf-8") as fh:
        fh.write("method,T,n,mean_s,std_s,reps\n")
        for r in records:
            fh.write(f"{r.method},{r.T},{r.n},{r.mean_s:.17g},{r.std_s:.17g},{r.reps}\n")
    for r in records:
        print(f"{r.method:>10s}  T={r.T:<5d} {r.mean_s * 1e3:9.3f} ms "
              f"(+/- {r.std_s * 1e3:.3f}, {r.reps} reps)")
    if cfg["plot_data"]:
        methods = ["exact-dtw", "soft-dtw", "dist_P"]
        by = {(r.method, r.T): r.mean_s for r in records}
        with open(os.path.join(out, "bench.dat"), "w", encoding="utf-8") as fh:
            fh.write("# T " + " ".join(methods) + "  (mean seconds)\n")
            for T in sizes:
                fh.write(f"{T} " + " ".join(f"{by[(m, T)]:.9g}" for m in methods) + "\n")
    _echo_config(out, "bench", cfg)
    return 0


# ---------------------------------------------------------------- mds

_MDS_KEYS = {
    "data": _REQUIRED,
    "measure": "both",
    "dims": 2,
    "seed": 0,
    "normalize": False,
    "out": _REQUIRED,
}


def cmd_mds(args) -> int:
    cfg = _merged(args, _MDS_KEYS)
    if cfg["measure"] not in ("dtw", "l2", "both"):
        raise ConfigError(f"measure must be dtw, l2, or both, got {cfg['measure']!r}")
    measures = ("dtw", "l2") if cfg["measure"] == "both" else (cfg["measure"],)
    kind, head, n, T = _parse_data_spec(cfg["data"])
    if kind == "synth":
        ds = synth_two_class(head, n, T, int(cfg["seed"]))
    else:
        if not os.path.exists(head):
            raise ConfigError(f"data file not found: {head}")
        ds = load_csv(head, n, T)
    if cfg.get("normalize"):
        ds = LabeledDataset(np.stack([znormalize(x) for x in ds.X]), ds.y, ds.tags)
    out = _out_dir(cfg)
    scores = {}
    for measure in measures:
        D = distance_matrix(ds, measure)
        try:
            res, sil = mds_silhouette(D, ds.y, dims=int(cfg["dims"]))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        scores[measure] = sil
        fname = os.path.join(out, f"mds_{measure}.csv")
        with open(fname, "w", encoding="utf-8") as fh:
            fh.write(",".join(f"c{d}" for d in range(int(cfg["dims"]))) + ",label\n")
            for row, label in zip(res.coords, ds.y):
                fh.write(",".join(f"{v:.17g}" for v in row) + f",{label}\n")
        print(f"{measure}: silhouette {sil:.4f} "
              f"({res.n_clamped} clamped eigenvalue(s)) -> {fname}")
    if len(scores) == 2:
        better = max(scores, key=scores.get)
        print(f"better class separation: {better} "
              f"(dtw {scores['dtw']:.4f} vs l2 {scores['l2']:.4f})")
    _echo_config(out, "mds", cfg)
    return 0


# ---------------------------------------------------------------- paths

def cmd_paths_random(args) -> int:
    band = AdmissibleBand(args.band_r)
    for k in range(args.count):
        p = random_admissible_path(args.T, band, args.seed + k)
        print(p.to_text())
    return 0


def cmd_paths_validate(args) -> int:
    try:
        p = AlignmentPath.from_text(args.path, size=args.T)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    problem = validate(p)
    if problem is None:
        print("valid")
        return 0
    print(f"invalid: {problem}")
    return 1


def cmd_paths_sim(args) -> int:
    try:
        a = AlignmentPath.from_text(args.path_a, size=args.T)
        b = AlignmentPath.from_text(args.path_b, size=args.T)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"{path_sim(a, b):.17g}")
    return 0


# ---------------------------------------------------------------- parser

def _add_config(p):
    p.add_argument("--config", help="JSON file with option defaults")


def _add_data_flags(p):
    p.add_argument("--data", help="synth:COUNT,N,T or csv:PATH,N,T")
    p.add_argument("--seed", type=int)
    p.add_argument("--normalize", action="store_true", default=None,
                   help="z-normalize every channel before use")
    p.add_argument("--split", help="train,val,test ratios (default 0.6,0.2,0.2)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dtwadv",
        description="Alignment-aware adversarial attacks on time-series classifiers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a classifier, write a checkpoint")
    _add_config(p)
    _add_data_flags(p)
    p.add_argument("--arch", help=f"architecture preset ({', '.join(sorted(PRESETS))})")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack a trained checkpoint")
    _add_config(p)
    _add_data_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--attack", help="dtw-ar, cw-sdtw, fgs, or pgd")
    p.add_argument("--targets", help="per-class, all, or a comma-separated label list")
    p.add_argument("--split-tag", help="which split to attack (default test)")
    p.add_argument("--rho", type=float)
    p.add_argument("--alpha1", type=float)
    p.add_argument("--alpha2", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--delta", type=float, help="DTW acceptance bound (default: calibrated)")
    p.add_argument("--band-r", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--snapshot-every", type=int)
    p.add_argument("--eps", type=float, help="linf budget for fgs/pgd")
    p.add_argument("--steps", type=int, help="pgd step count")
    p.add_argument("--step-size", type=float)
    p.add_argument("--jobs", type=int, help="parallel attack workers")
    p.add_argument("--traces", action="store_true", default=None,
                   help="write per-example loss traces")
    p.add_argument("--out")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("advtrain", help="adversarial training + paired evaluation")
    _add_config(p)
    _add_data_flags(p)
    p.add_argument("--arch")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--rounds", type=int)
    p.add_argument("--fraction", type=float)
    p.add_argument("--alpha1-range")
    p.add_argument("--alpha2-range")
    p.add_argument("--atk-max-iters", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--band-r", type=float)
    p.add_argument("--eval-eps", type=float)
    p.add_argument("--eval-attacks", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_advtrain)

    p = sub.add_parser("eval", help="evaluate a checkpoint (clean and replayed adversarial)")
    _add_config(p)
    _add_data_flags(p)
    p.add_argument("--checkpoint")
    p.add_argument("--split-tag")
    p.add_argument("--adv-examples", help="adversarial dataset CSV to replay")
    p.add_argument("--adv-results", help="matching results.csv for alpha_eff")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="distance-kernel runtime benchmarks")
    _add_config(p)
    p.add_argument("--sizes", help="comma-separated series lengths")
    p.add_argument("--channels", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--plot-data", action="store_true", default=None,
                   help="also write gnuplot-style bench.dat")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("mds", help="2-d embeddings of pairwise distances")
    _add_config(p)
    p.add_argument("--data")
    p.add_argument("--measure", help="dtw, l2, or both")
    p.add_argument("--dims", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--normalize", action="store_true", default=None)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mds)

    p = sub.add_parser("paths", help="alignment-path utilities")
    psub = p.add_subparsers(dest="paths_command", required=True)
    q = psub.add_parser("random", help="draw admissible paths")
    q.add_argument("--T", type=int, required=True)
    q.add_argument("--band-r", type=float, default=0.5)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--count", type=int, default=1)
    q.set_defaults(func=cmd_paths_random)
    q = psub.add_parser("validate", help="check a path against the step/boundary rules")
    q.add_argument("--T", type=int, required=True)
    q.add_argument("--path", required=True, help='e.g. "(1,1)-(2,1)-(2,2)"')
    q.set_defaults(func=cmd_paths_validate)
    q = psub.add_parser("sim", help="similarity of two paths")
    q.add_argument("--T", type=int, required=True)
    q.add_argument("--path-a", required=True)
    q.add_argument("--path-b", required=True)
    q.set_defaults(func=cmd_paths_sim)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure, distinct from bad configuration
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
