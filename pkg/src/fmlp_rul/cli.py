"""Config-driven experiment runner: train, evaluate, predict, inspect.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric or
training error. Output files are written atomically (temp file + rename)
into a fixed layout under the output directory: artifact.json, trace.csv,
report.csv, report.json, inspect/.
"""

import argparse
import dataclasses
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import evaluate as ev
from . import fmlp
from .cmapss import SUBSET_IDS, load_subset, parse_trajectory_file
from .errors import (
    ArtifactError,
    ConfigError,
    FmlpRulError,
    IntegrityError,
    NumericError,
    ParseError,
    TrainingError,
)
from .fpca import fit_basis
from .preprocess import (
    ConditionFitConfig,
    fit_preprocessing,
    last_window,
    slide_windows,
    test_instances,
    training_instances,
    transform_trajectory,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


@dataclass
class ExperimentConfig:
    """Flat experiment configuration; see README for the JSON schema."""

    data_root: str | None = None
    subset: str | None = None
    seed: int = 7
    out_dir: str = "out"
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int = 64
    init_scale: float = 0.5
    patience: int = 25
    val_fraction: float = 0.1
    fve_cutoff: float = 0.8
    component_cap: int = 2
    t_cap: int = 130
    condition_hidden: int = 8
    condition_epochs: int = 500
    condition_learning_rate: float = 0.05

    def train_config(self) -> fmlp.TrainConfig:
        return fmlp.TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            init_scale=self.init_scale,
            patience=self.patience,
            val_fraction=self.val_fraction,
        )

    def condition_config(self) -> ConditionFitConfig:
        return ConditionFitConfig(
            hidden_units=self.condition_hidden,
            epochs=self.condition_epochs,
            learning_rate=self.condition_learning_rate,
            seed=self.seed,
        )


_CONFIG_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def validate_config(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat JSON document, rejecting
    unknown keys and wrong value types before any work starts."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = sorted(set(doc) - set(_CONFIG_TYPES))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    cfg = ExperimentConfig()
    for key, value in doc.items():
        default = getattr(cfg, key)
        if key in ("data_root", "subset", "out_dir"):
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"config key {key!r} must be a string")
        elif isinstance(default, int) and not isinstance(default, bool):
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(f"config key {key!r} must be an integer")
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"config key {key!r} must be a number")
            value = float(value)
        setattr(cfg, key, value)
    if cfg.subset is not None and cfg.subset not in SUBSET_IDS:
        raise ConfigError(f"subset must be one of {SUBSET_IDS}, got {cfg.subset!r}")
    return cfg


def load_config(path: str | None, overrides: dict) -> ExperimentConfig:
    doc = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return validate_config(doc)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _require(cfg: ExperimentConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(cfg, k) is None]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")


def cmd_train(cfg: ExperimentConfig) -> int:
    _require(cfg, "data_root", "subset")
    subset = load_subset(cfg.data_root, cfg.subset)
    condition_model, scaler = fit_preprocessing(subset.train, cfg.condition_config())
    instances = training_instances(subset, condition_model, scaler, cfg.t_cap)
    basis = fit_basis(
        instances,
        sensor_ids=scaler.sensor_ids,
        fve_cutoff=cfg.fve_cutoff,
        component_cap=cfg.component_cap,
    )
    result = fmlp.train(
        instances, basis, cfg.train_config(), label_scale=float(cfg.t_cap)
    )
    model = result.model
    model.condition_model = condition_model
    model.scaler = scaler
    model.subset_id = cfg.subset
    model.window_length = subset.window_length

    out = Path(cfg.out_dir)
    doc = fmlp.model_to_doc(model)
    atomic_write(out / "artifact.json", json.dumps(doc, indent=1))
    rows = ["epoch,train_mse,val_mse"]
    for row in result.trace:
        val = "" if row.val_mse is None else repr(row.val_mse)
        rows.append(f"{row.epoch},{row.train_mse!r},{val}")
    atomic_write(out / "trace.csv", "\n".join(rows) + "\n")
    print(f"trained {cfg.subset}: {len(instances)} instances, "
          f"{len(result.trace)} epochs, artifact at {out / 'artifact.json'}")
    return EXIT_OK


def _load_model(path: str | None) -> fmlp.FmlpModel:
    if path is None:
        raise ConfigError("--model is required")
    try:
        with open(path, encoding="utf-8") as fh:
            return fmlp.load_model(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"missing model artifact: {path}") from None


def cmd_evaluate(cfg: ExperimentConfig, model_path: str | None) -> int:
    model = _load_model(model_path)
    subset_id = cfg.subset or model.subset_id
    if subset_id is None:
        raise ConfigError("subset is neither configured nor recorded in the artifact")
    _require(cfg, "data_root")
    subset = load_subset(cfg.data_root, subset_id)
    if model.condition_model is None or model.scaler is None:
        raise ArtifactError("artifact lacks preprocessing state; cannot evaluate")

    instances = test_instances(subset, model.condition_model, model.scaler)
    predictions = model.predict_many(instances)
    report = ev.build_report(
        predictions,
        subset.test_rul,
        unit_ids=[t.unit_id for t in subset.test],
        subset_id=subset_id,
        t_cap=int(model.label_scale),
    )
    out = Path(cfg.out_dir)
    atomic_write(out / "report.csv", ev.report_to_csv(report))
    atomic_write(out / "report.json", json.dumps(ev.report_to_doc(report), indent=1))
    print(ev.format_comparison_table(report))
    return EXIT_OK


def cmd_predict(model_path: str | None, trajectory_file: str) -> int:
    model = _load_model(model_path)
    if model.condition_model is None or model.scaler is None:
        raise ArtifactError("artifact lacks preprocessing state; cannot predict")
    if model.window_length is None:
        raise ArtifactError("artifact does not record its window length")
    with open(trajectory_file, encoding="utf-8") as fh:
        trajectories = parse_trajectory_file(fh)
    print("unit_id,estimated_rul")
    for traj in trajectories:
        processed = transform_trajectory(traj, model.condition_model, model.scaler)
        instance = last_window(processed, model.window_length, model.scaler.retained)
        print(f"{traj.unit_id},{model.predict(instance)!r}")
    return EXIT_OK


def cmd_inspect(cfg: ExperimentConfig, model_path: str | None, unit: int | None) -> int:
    model = _load_model(model_path)
    out = Path(cfg.out_dir) / "inspect"

    for r, sensor in enumerate(model.basis.sensors):
        fve = sensor.fve
        header = ["grid", "mean", "eigenvalue", "fve"] + [
            f"phi_{p + 1}" for p in range(sensor.num_components)
        ]
        rows = [",".join(header)]
        for j in range(len(model.basis.grid)):
            cells = [
                repr(float(model.basis.grid[j])),
                repr(float(sensor.mean[j])),
                repr(float(sensor.eigenvalues[j])),
                repr(float(fve[j])),
            ]
            cells += [
                repr(float(sensor.components[p, j]))
                for p in range(sensor.num_components)
            ]
            rows.append(",".join(cells))
        atomic_write(out / f"sensor_{sensor.sensor_id:02d}.csv", "\n".join(rows) + "\n")

    wrote_features = False
    if cfg.data_root is not None:
        subset_id = cfg.subset or model.subset_id
        if subset_id is None:
            raise ConfigError("subset is neither configured nor recorded in the artifact")
        if model.condition_model is None or model.scaler is None:
            raise ArtifactError("artifact lacks preprocessing state; cannot inspect features")
        subset = load_subset(cfg.data_root, subset_id)
        by_unit = {t.unit_id: t for t in subset.train}
        if unit is None:
            unit = subset.train[0].unit_id
        if unit not in by_unit:
            raise IntegrityError(f"unit {unit} not found in {subset_id} training set")
        processed = transform_trajectory(
            by_unit[unit], model.condition_model, model.scaler
        )
        windows = slide_windows(
            processed, subset.window_length, cfg.t_cap, model.scaler.retained
        )
        k = model.n_functional
        rows = [
            "window,start_cycle,label," + ",".join(f"z_{i + 1}" for i in range(k)) + ",H"
        ]
        for c, inst in enumerate(windows, start=1):
            z = model.functional_layer(inst)
            h = float(z @ model.a)
            cells = [str(c), str(inst.engine_ref[1]), repr(float(inst.label))]
            cells += [repr(float(v)) for v in z]
            cells.append(repr(h))
            rows.append(",".join(cells))
        atomic_write(out / f"features_unit{unit}.csv", "\n".join(rows) + "\n")
        wrote_features = True

    n = len(model.basis.sensors)
    print(
        f"wrote {n} sensor basis CSVs"
        + (f" and features_unit{unit}.csv" if wrote_features else "")
        + f" to {out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fmlp-rul",
        description="Functional-MLP remaining-useful-life estimation on "
        "C-MAPSS-format data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="path to a flat JSON config file")
        p.add_argument("--data-root", dest="data_root", help="directory with data files")
        p.add_argument("--subset", choices=SUBSET_IDS, help="subset id, e.g. FD001")
        p.add_argument("--seed", type=int, help="64-bit experiment seed")
        p.add_argument("--out", dest="out_dir", help="output directory")

    p_train = sub.add_parser("train", help="fit preprocessing, basis, and network")
    add_common(p_train)

    p_eval = sub.add_parser("evaluate", help="score a trained model on test data")
    add_common(p_eval)
    p_eval.add_argument("--model", help="path to artifact.json")

    p_pred = sub.add_parser("predict", help="print per-engine RUL estimates as CSV")
    p_pred.add_argument("--model", help="path to artifact.json")
    p_pred.add_argument("trajectory_file", help="C-MAPSS-format trajectory file")

    p_ins = sub.add_parser("inspect", help="emit plot-ready basis/feature CSVs")
    add_common(p_ins)
    p_ins.add_argument("--model", help="path to artifact.json")
    p_ins.add_argument("--unit", type=int, help="training unit for feature trajectories")

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse handles --help (0) and usage errors (2)
        return int(exc.code or 0)

    try:
        overrides = {
            "data_root": getattr(args, "data_root", None),
            "subset": getattr(args, "subset", None),
            "seed": getattr(args, "seed", None),
            "out_dir": getattr(args, "out_dir", None),
        }
        if args.command == "predict":
            return cmd_predict(args.model, args.trajectory_file)
        cfg = load_config(getattr(args, "config", None), overrides)
        if args.command == "train":
            return cmd_train(cfg)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.model)
        if args.command == "inspect":
            return cmd_inspect(cfg, args.model, args.unit)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, IntegrityError, ArtifactError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FmlpRulError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
