"""Functional multilayer perceptron for RUL estimation.

The first layer holds K functional neurons. Neuron k integrates each
sensor curve against a weight function built on that sensor's
eigenfunctions (coefficients beta), adds a bias, and applies the logistic
function. The layer's real output is the a-weighted sum H of the neuron
activations; H then feeds a small numerical network (one logistic hidden
layer, then a linear unit). Targets are RUL labels divided by
``label_scale`` so the regression lives in [0, 1].

Because the weight functions are linear in beta, the functional layer can
be evaluated either by building each weight curve and integrating it
against the instance, or by precomputing the instance's projection scores
onto the eigenfunctions; both orders of summation agree to rounding.
Training uses the precomputed-score form.
"""

import dataclasses
import json
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from .errors import ArtifactError, NumericError, TrainingError
from .fpca import EigenBasis, SensorBasis, project
from .numerics import logistic as _logistic
from .numerics import seeded_rng
from .preprocess import (
    DEFAULT_RUL_CAP,
    ConditionFitConfig,
    ConditionModel,
    FunctionalInstance,
    MinMaxScaler,
)

ARTIFACT_SCHEMA = "fmlp-artifact/1"

ACT_LOGISTIC = "logistic"
ACT_LINEAR = "linear"

DEFAULT_FUNCTIONAL_NEURONS = 4
DEFAULT_HIDDEN_WIDTH = 2


@dataclass
class NumericalLayer:
    weights: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in (ACT_LOGISTIC, ACT_LINEAR):
            raise ValueError(f"unknown activation {self.activation!r}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = x @ self.weights.T + self.bias
        return _logistic(out) if self.activation == ACT_LOGISTIC else out


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 300
    batch_size: int = 64
    seed: int = 0
    init_scale: float = 0.5
    patience: int = 25
    val_fraction: float = 0.1

    def __post_init__(self):
        if self.learning_rate <= 0 or self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("learning rate, epochs, and batch size must be positive")
        if self.init_scale <= 0 or self.patience <= 0:
            raise ValueError("init scale and patience must be positive")
        if not 0.0 <= self.val_fraction <= 0.5:
            raise ValueError("validation fraction must be in [0, 0.5]")


@dataclass
class FmlpModel:
    """Trained parameters plus everything needed to preprocess new data."""

    a: np.ndarray  # (K,) functional-neuron output weights
    b: np.ndarray  # (K,) functional-neuron biases
    beta: np.ndarray  # (K, D) weight-function coefficients, sensor-major
    layers: list[NumericalLayer]
    basis: EigenBasis
    label_scale: float = float(DEFAULT_RUL_CAP)
    condition_model: ConditionModel | None = None
    scaler: MinMaxScaler | None = None
    subset_id: str | None = None
    window_length: int | None = None
    train_config: TrainConfig | None = None
    seed: int | None = None

    def __post_init__(self):
        k = len(self.a)
        if self.b.shape != (k,) or self.beta.shape != (k, self.basis.total_components):
            raise ValueError("parameter shapes do not match K and the basis")
        last = self.layers[-1]
        if last.activation != ACT_LINEAR or last.weights.shape[0] != 1:
            raise ValueError("final numerical layer must be linear with width 1")
        for block in (self.a, self.b, self.beta):
            if not np.all(np.isfinite(block)):
                raise ValueError("model parameters must be finite")

    @property
    def n_functional(self) -> int:
        return len(self.a)

    def beta_block(self, k: int, r: int) -> np.ndarray:
        """Coefficient vector beta_{k,r} for sensor position r."""
        return self.beta[k, self.basis.component_slices()[r]]

    def weight_curve(self, k: int, r: int) -> np.ndarray:
        """Weight function of neuron k for sensor position r on the grid."""
        return self.beta_block(k, r) @ self.basis.sensors[r].components

    def functional_layer(self, instance: FunctionalInstance) -> np.ndarray:
        """Logistic activations of the K functional neurons for one instance."""
        scores = project(self.basis, [instance])[0]
        return _logistic(self.beta @ scores + self.b)

    def forward(self, instance: FunctionalInstance) -> float:
        """Network output in scaled label units (unclamped)."""
        return float(self._forward_scores(project(self.basis, [instance]))[0])

    def predict(self, instance: FunctionalInstance) -> float:
        """RUL estimate in cycles, clamped at zero."""
        return max(0.0, self.forward(instance) * self.label_scale)

    def predict_many(self, instances: list[FunctionalInstance]) -> np.ndarray:
        """Clamped RUL estimates in cycles for a batch of instances."""
        raw = self._forward_scores(project(self.basis, instances))
        return np.maximum(0.0, raw * self.label_scale)

    def _forward_scores(self, scores: np.ndarray) -> np.ndarray:
        z = _logistic(scores @ self.beta.T + self.b)
        x = (z @ self.a)[:, None]
        for layer in self.layers:
            x = layer.apply(x)
        return x[:, 0]

    def copy(self) -> "FmlpModel":
        return dataclasses.replace(
            self,
            a=self.a.copy(),
            b=self.b.copy(),
            beta=self.beta.copy(),
            layers=[
                NumericalLayer(l.weights.copy(), l.bias.copy(), l.activation)
                for l in self.layers
            ],
        )


@dataclass
class FmlpGradients:
    """Loss gradient arranged exactly like the model parameters."""

    a: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    layers: list[tuple[np.ndarray, np.ndarray]]  # (d_weights, d_bias) per layer


def _scaled_targets(model: FmlpModel, instances: list[FunctionalInstance]) -> np.ndarray:
    labels = []
    for inst in instances:
        if inst.label is None:
            raise ValueError(f"instance {inst.engine_ref} has no label")
        labels.append(inst.label)
    return np.asarray(labels, dtype=np.float64) / model.label_scale


def loss(model: FmlpModel, instances: list[FunctionalInstance]) -> float:
    """Mean squared error over a labeled batch, in scaled label units."""
    scores = project(model.basis, instances)
    targets = _scaled_targets(model, instances)
    return _loss_scores(model, scores, targets)


@np.errstate(over="ignore", invalid="ignore")  # divergence is checked by callers
def _loss_scores(model: FmlpModel, scores: np.ndarray, targets: np.ndarray) -> float:
    residual = model._forward_scores(scores) - targets
    return float(np.mean(residual**2))


def gradients(model: FmlpModel, instances: list[FunctionalInstance]) -> FmlpGradients:
    """Analytic gradient of the batch MSE with respect to every parameter."""
    scores = project(model.basis, instances)
    targets = _scaled_targets(model, instances)
    return _gradients_scores(model, scores, targets)


@np.errstate(over="ignore", invalid="ignore")  # non-finite values checked below
def _gradients_scores(
    model: FmlpModel, scores: np.ndarray, targets: np.ndarray
) -> FmlpGradients:
    n = scores.shape[0]
    z = _logistic(scores @ model.beta.T + model.b)  # (N, K)
    h = (z @ model.a)[:, None]  # (N, 1)

    activations = [h]
    x = h
    for layer in model.layers:
        x = layer.apply(x)
        activations.append(x)
    yhat = x[:, 0]

    grad = ((2.0 / n) * (yhat - targets))[:, None]  # dJ/d(final output)
    layer_grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        layer = model.layers[i]
        out = activations[i + 1]
        if layer.activation == ACT_LOGISTIC:
            grad = grad * out * (1.0 - out)
        layer_grads[i] = (grad.T @ activations[i], grad.sum(axis=0))
        grad = grad @ layer.weights  # (N, in)

    dh = grad[:, 0]  # dJ/dH
    d_a = z.T @ dh
    dz = np.outer(dh, model.a)
    dpre = dz * z * (1.0 - z)
    d_beta = dpre.T @ scores
    d_b = dpre.sum(axis=0)

    result = FmlpGradients(a=d_a, b=d_b, beta=d_beta, layers=layer_grads)
    _check_finite(result)
    return result


def _check_finite(grads: FmlpGradients) -> None:
    blocks = {"a": grads.a, "b": grads.b, "beta": grads.beta}
    for i, (dw, db) in enumerate(grads.layers):
        blocks[f"layers[{i}].weights"] = dw
        blocks[f"layers[{i}].bias"] = db
    for name, block in blocks.items():
        if not np.all(np.isfinite(block)):
            raise NumericError(f"non-finite gradient in parameter block {name}")


def apply_gradient_step(model: FmlpModel, grads: FmlpGradients, lr: float) -> None:
    """One in-place gradient-descent step."""
    model.a -= lr * grads.a
    model.b -= lr * grads.b
    model.beta -= lr * grads.beta
    for layer, (dw, db) in zip(model.layers, grads.layers):
        layer.weights -= lr * dw
        layer.bias -= lr * db


def init_model(
    basis: EigenBasis,
    rng: np.random.Generator,
    n_functional: int = DEFAULT_FUNCTIONAL_NEURONS,
    hidden_width: int = DEFAULT_HIDDEN_WIDTH,
    init_scale: float = 0.5,
    label_scale: float = float(DEFAULT_RUL_CAP),
) -> FmlpModel:
    """Seeded uniform(-init_scale, init_scale) weights, zero biases."""
    d = basis.total_components
    scale = init_scale
    a = rng.uniform(-scale, scale, size=n_functional)
    beta = rng.uniform(-scale, scale, size=(n_functional, d))
    hidden = NumericalLayer(
        weights=rng.uniform(-scale, scale, size=(hidden_width, 1)),
        bias=np.zeros(hidden_width),
        activation=ACT_LOGISTIC,
    )
    out = NumericalLayer(
        weights=rng.uniform(-scale, scale, size=(1, hidden_width)),
        bias=np.zeros(1),
        activation=ACT_LINEAR,
    )
    return FmlpModel(
        a=a,
        b=np.zeros(n_functional),
        beta=beta,
        layers=[hidden, out],
        basis=basis,
        label_scale=label_scale,
    )


@dataclass
class TraceRow:
    epoch: int
    train_mse: float
    val_mse: float | None


@dataclass
class TrainResult:
    model: FmlpModel
    trace: list[TraceRow]


def train(
    instances: list[FunctionalInstance],
    basis: EigenBasis,
    cfg: TrainConfig | None = None,
    n_functional: int = DEFAULT_FUNCTIONAL_NEURONS,
    hidden_width: int = DEFAULT_HIDDEN_WIDTH,
    label_scale: float = float(DEFAULT_RUL_CAP),
) -> TrainResult:
    """Mini-batch gradient descent on the MSE of scaled RUL labels.

    Projection scores are computed once and reused every epoch. When the
    validation fraction is positive, the returned model is the snapshot
    with the best validation MSE and training stops after ``patience``
    epochs without improvement. Raises TrainingError if the loss stops
    being finite.
    """
    if not instances:
        raise ValueError("no training instances")
    cfg = cfg or TrainConfig()
    rng = seeded_rng(cfg.seed)
    model = init_model(
        basis, rng, n_functional, hidden_width, cfg.init_scale, label_scale
    )
    model.train_config = cfg
    model.seed = cfg.seed

    scores = project(basis, instances)
    targets = _scaled_targets(model, instances)
    n = len(instances)

    perm = rng.permutation(n)
    n_val = int(round(cfg.val_fraction * n))
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    if train_idx.size == 0:
        raise ValueError("validation split leaves no training data")

    best_model = None
    best_val = np.inf
    stale = 0
    trace: list[TraceRow] = []
    for epoch in range(1, cfg.epochs + 1):
        order = train_idx[rng.permutation(train_idx.size)]
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            try:
                grads = _gradients_scores(model, scores[idx], targets[idx])
            except NumericError as exc:
                raise TrainingError(f"training diverged at epoch {epoch}: {exc}") from exc
            apply_gradient_step(model, grads, cfg.learning_rate)

        train_mse = _loss_scores(model, scores[train_idx], targets[train_idx])
        if not np.isfinite(train_mse):
            raise TrainingError(f"training loss diverged at epoch {epoch}")
        val_mse = None
        if n_val:
            val_mse = _loss_scores(model, scores[val_idx], targets[val_idx])
            if not np.isfinite(val_mse):
                raise TrainingError(f"validation loss diverged at epoch {epoch}")
        trace.append(TraceRow(epoch=epoch, train_mse=train_mse, val_mse=val_mse))

        if n_val:
            if val_mse < best_val:
                best_val = val_mse
                best_model = model.copy()
                stale = 0
            else:
                stale += 1
                if stale > cfg.patience:
                    break

    final = best_model if best_model is not None else model
    final.train_config = cfg
    final.seed = cfg.seed
    return TrainResult(model=final, trace=trace)


# ---------------------------------------------------------------------------
# Artifact serialization ("fmlp-artifact/1"): a single JSON document holding
# the network, the eigenbasis, and the preprocessing artifacts.


def _array(x) -> list:
    return np.asarray(x, dtype=np.float64).tolist()


def _condition_model_doc(model: ConditionModel | None):
    if model is None:
        return None
    return {
        "setting_min": _array(model.setting_min),
        "setting_max": _array(model.setting_max),
        "target_mean": _array(model.target_mean),
        "target_scale": _array(model.target_scale),
        "w1": _array(model.w1),
        "b1": _array(model.b1),
        "w2": _array(model.w2),
        "b2": _array(model.b2),
        "config": dataclasses.asdict(model.config),
    }


def _condition_model_from_doc(doc) -> ConditionModel | None:
    if doc is None:
        return None
    return ConditionModel(
        setting_min=np.array(doc["setting_min"]),
        setting_max=np.array(doc["setting_max"]),
        target_mean=np.array(doc["target_mean"]),
        target_scale=np.array(doc["target_scale"]),
        w1=np.array(doc["w1"]),
        b1=np.array(doc["b1"]),
        w2=np.array(doc["w2"]),
        b2=np.array(doc["b2"]),
        config=ConditionFitConfig(**doc["config"]),
    )


def model_to_doc(model: FmlpModel) -> dict:
    """The model as a JSON-ready document."""
    return {
        "schema": ARTIFACT_SCHEMA,
        "subset_id": model.subset_id,
        "window_length": model.window_length,
        "seed": model.seed,
        "label_scale": model.label_scale,
        "train_config": (
            dataclasses.asdict(model.train_config) if model.train_config else None
        ),
        "condition_model": _condition_model_doc(model.condition_model),
        "scaler": (
            {
                "minimum": _array(model.scaler.minimum),
                "maximum": _array(model.scaler.maximum),
            }
            if model.scaler is not None
            else None
        ),
        "basis": {
            "grid": _array(model.basis.grid),
            "fve_cutoff": model.basis.fve_cutoff,
            "component_cap": model.basis.component_cap,
            "sensors": [
                {
                    "sensor_id": s.sensor_id,
                    "mean": _array(s.mean),
                    "eigenvalues": _array(s.eigenvalues),
                    "components": _array(s.components),
                    "num_components": s.num_components,
                }
                for s in model.basis.sensors
            ],
        },
        "functional_layer": {
            "a": _array(model.a),
            "b": _array(model.b),
            "beta": _array(model.beta),
        },
        "numerical_layers": [
            {
                "weights": _array(l.weights),
                "bias": _array(l.bias),
                "activation": l.activation,
            }
            for l in model.layers
        ],
    }


def model_from_doc(doc: dict) -> FmlpModel:
    """Rebuild a model from its artifact document."""
    try:
        if doc.get("schema") != ARTIFACT_SCHEMA:
            raise ArtifactError(
                f"unsupported artifact schema {doc.get('schema')!r},"
                f" expected {ARTIFACT_SCHEMA!r}"
            )
        basis_doc = doc["basis"]
        basis = EigenBasis(
            grid=np.array(basis_doc["grid"]),
            sensors=[
                SensorBasis(
                    sensor_id=int(s["sensor_id"]),
                    mean=np.array(s["mean"]),
                    eigenvalues=np.array(s["eigenvalues"]),
                    components=np.array(s["components"]),
                    num_components=int(s["num_components"]),
                )
                for s in basis_doc["sensors"]
            ],
            fve_cutoff=float(basis_doc["fve_cutoff"]),
            component_cap=int(basis_doc["component_cap"]),
        )
        scaler_doc = doc["scaler"]
        scaler = (
            MinMaxScaler(
                minimum=np.array(scaler_doc["minimum"]),
                maximum=np.array(scaler_doc["maximum"]),
            )
            if scaler_doc is not None
            else None
        )
        func = doc["functional_layer"]
        cfg_doc = doc["train_config"]
        return FmlpModel(
            a=np.array(func["a"]),
            b=np.array(func["b"]),
            beta=np.array(func["beta"]),
            layers=[
                NumericalLayer(
                    weights=np.array(l["weights"]),
                    bias=np.array(l["bias"]),
                    activation=l["activation"],
                )
                for l in doc["numerical_layers"]
            ],
            basis=basis,
            label_scale=float(doc["label_scale"]),
            condition_model=_condition_model_from_doc(doc["condition_model"]),
            scaler=scaler,
            subset_id=doc["subset_id"],
            window_length=doc["window_length"],
            train_config=TrainConfig(**cfg_doc) if cfg_doc else None,
            seed=doc["seed"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ArtifactError(f"malformed model artifact: {exc}") from exc


def save_model(model: FmlpModel, stream: TextIO) -> None:
    """Write the model artifact as JSON (floats round-trip exactly)."""
    json.dump(model_to_doc(model), stream, indent=1)


def load_model(stream: TextIO) -> FmlpModel:
    """Read a model artifact; raises ArtifactError on damage or mismatch."""
    try:
        doc = json.load(stream)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"artifact is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ArtifactError("artifact root must be a JSON object")
    return model_from_doc(doc)
