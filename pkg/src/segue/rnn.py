"""Stacked LSTM next-feature prediction: initialization, inference, BPTT training.

The model consumes a window of segment feature vectors and predicts the vector
of the segment that should follow. Gates follow the standard LSTM-with-forget-
gate formulation; the output projection is squashed with a sigmoid so
predictions stay inside the (0, 1) probability range of the feature space.

Windows shorter than the context length are left-padded and carry a boolean
mask; masked steps are skipped entirely, so padding can never influence the
prediction. Loss is the mean squared error between prediction and target,
averaged over feature dimensions and batch items, and gradients are computed
by backpropagation through time over the unmasked steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import TrainingPair
from .model import GATES, LstmLayerParams, SequenceModel


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message if epoch is None else f"epoch {epoch}: {message}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters. Defaults are desk scale; the full-scale
    reference configuration uses hidden size 512 and context length 50."""

    context_length: int = 8
    epochs: int = 200
    learning_rate: float = 1e-3
    optimizer: str = "adam"  # "adam" or "sgd"
    batch_size: int = 16
    seed: int = 0
    clip_norm: float = 5.0

    def __post_init__(self) -> None:
        if self.context_length < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("context_length, epochs, and batch_size must be positive")
        if self.learning_rate < 0 or self.clip_norm <= 0:
            raise ValueError("learning_rate must be >= 0 and clip_norm > 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer '{self.optimizer}'")


@dataclass
class LossReport:
    """Per-epoch mean squared error over the training pairs."""

    epoch_losses: list[float]

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


@dataclass
class LstmState:
    """Hidden and cell activations, one pair of (H,) vectors per layer."""

    hidden: list[np.ndarray]
    cell: list[np.ndarray]


def sigmoid(x: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(x, dtype=np.float64)
    positive = x >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-x[positive]))
    expx = np.exp(x[~positive])
    out[~positive] = expx / (1.0 + expx)
    return out


def init_model(
    num_layers: int = 2, hidden_size: int = 512, dimension: int = 50, seed: int = 0
) -> SequenceModel:
    """Create a model with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights.

    Biases start at zero except the forget gates, which start at one so early
    training does not wipe the cell state. Deterministic for a given seed:
    weight matrices are drawn in canonical parameter order.
    """
    if num_layers < 1 or hidden_size < 1 or dimension < 1:
        raise ValueError("num_layers, hidden_size, and dimension must be positive")
    rng = np.random.default_rng(seed)

    def draw(rows: int, cols: int) -> np.ndarray:
        bound = 1.0 / np.sqrt(cols)
        return rng.uniform(-bound, bound, size=(rows, cols))

    layers = []
    for index in range(num_layers):
        in_dim = dimension if index == 0 else hidden_size
        w_x, w_h, bias = {}, {}, {}
        for gate in GATES:
            w_x[gate] = draw(hidden_size, in_dim)
            w_h[gate] = draw(hidden_size, hidden_size)
            bias[gate] = np.ones(hidden_size) if gate == "forget" else np.zeros(hidden_size)
        layers.append(LstmLayerParams(w_x=w_x, w_h=w_h, bias=bias))
    w_out = draw(dimension, hidden_size)
    b_out = np.zeros(dimension)
    return SequenceModel(layers=layers, w_out=w_out, b_out=b_out)


def zero_state(model: SequenceModel) -> LstmState:
    return LstmState(
        hidden=[np.zeros(model.hidden_size) for _ in model.layers],
        cell=[np.zeros(model.hidden_size) for _ in model.layers],
    )


def lstm_step(
    x: np.ndarray, state: LstmState, model: SequenceModel
) -> tuple[np.ndarray, LstmState]:
    """Advance every layer by one time step; returns (top-layer hidden, new state)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.dimension,):
        raise ValueError(f"input shape {x.shape} != ({model.dimension},)")
    new_state, _ = _step(x, state, model)
    return new_state.hidden[-1], new_state


def _step(
    x: np.ndarray, state: LstmState, model: SequenceModel
) -> tuple[LstmState, list[dict[str, np.ndarray]]]:
    """One step over all layers, returning the new state and per-layer caches."""
    caches: list[dict[str, np.ndarray]] = []
    hidden = list(state.hidden)
    cell = list(state.cell)
    layer_input = x
    for index, layer in enumerate(model.layers):
        h_prev, c_prev = hidden[index], cell[index]
        pre = {
            gate: layer.w_x[gate] @ layer_input + layer.w_h[gate] @ h_prev + layer.bias[gate]
            for gate in GATES
        }
        i = sigmoid(pre["input"])
        f = sigmoid(pre["forget"])
        o = sigmoid(pre["output"])
        g = np.tanh(pre["candidate"])
        c = f * c_prev + i * g
        h = o * np.tanh(c)
        caches.append(
            {"x": layer_input, "h_prev": h_prev, "c_prev": c_prev,
             "i": i, "f": f, "o": o, "g": g, "c": c}
        )
        hidden[index], cell[index] = h, c
        layer_input = h
    return LstmState(hidden=hidden, cell=cell), caches


def _run_window(
    model: SequenceModel, window: np.ndarray, mask: np.ndarray
) -> tuple[np.ndarray, np.ndarray, list[list[dict[str, np.ndarray]]]]:
    """Run the unmasked steps of one window from the zero state.

    Returns (prediction, final top hidden, per-step caches)."""
    state = zero_state(model)
    caches = []
    for t in range(window.shape[0]):
        if not mask[t]:
            continue
        state, step_cache = _step(window[t], state, model)
        caches.append(step_cache)
    h_top = state.hidden[-1]
    prediction = sigmoid(model.w_out @ h_top + model.b_out)
    return prediction, h_top, caches


def forward(
    model: SequenceModel, window: np.ndarray, mask: np.ndarray | None = None
) -> np.ndarray:
    """Predict the next feature vector from a window of segment vectors.

    ``window`` is (N, D); ``mask`` is (N,) booleans marking real (unmasked)
    steps, defaulting to all real. Masked steps are skipped, so the prediction
    of a fully masked window comes from the zero state. Every output element
    lies strictly in (0, 1).
    """
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 2 or window.shape[1] != model.dimension:
        raise ValueError(f"window shape {window.shape} incompatible with dimension {model.dimension}")
    if mask is None:
        mask = np.ones(window.shape[0], dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (window.shape[0],):
            raise ValueError(f"mask length {mask.shape} != window length {window.shape[0]}")
    prediction, _, _ = _run_window(model, window, mask)
    return prediction


def loss_and_gradients(
    model: SequenceModel, batch: list[TrainingPair]
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean squared error over a batch plus gradients for every parameter.

    Loss is mean over batch items of ||prediction - target||^2 / D. Gradients
    are accumulated by backpropagation through time over each item's unmasked
    steps. Raises ``TrainingDivergedError`` if anything goes non-finite.
    """
    if not batch:
        raise ValueError("batch is empty")
    grads = {name: np.zeros_like(array) for name, array in model.parameter_items()}
    batch_size = len(batch)
    dim = model.dimension
    total = 0.0
    for window, mask, target in batch:
        window = np.asarray(window, dtype=np.float64)
        mask = np.asarray(mask, dtype=bool)
        target = np.asarray(target, dtype=np.float64)
        prediction, h_top, caches = _run_window(model, window, mask)
        residual = prediction - target
        total += float(residual @ residual) / dim
        # d loss / d prediction for the batch mean of per-item mean squared error
        dpred = 2.0 * residual / (dim * batch_size)
        dz_out = dpred * prediction * (1.0 - prediction)
        grads["out.w"] += np.outer(dz_out, h_top)
        grads["out.b"] += dz_out
        _backprop_through_time(model, caches, model.w_out.T @ dz_out, grads)
    loss = total / batch_size
    if not np.isfinite(loss) or any(not np.isfinite(g).all() for g in grads.values()):
        raise TrainingDivergedError("non-finite loss or gradient")
    return loss, grads


def _backprop_through_time(
    model: SequenceModel,
    caches: list[list[dict[str, np.ndarray]]],
    dh_top_final: np.ndarray,
    grads: dict[str, np.ndarray],
) -> None:
    """Accumulate parameter gradients for one window, walking steps in reverse."""
    num_layers = model.num_layers
    hidden = model.hidden_size
    dh_carry = [np.zeros(hidden) for _ in range(num_layers)]
    dc_carry = [np.zeros(hidden) for _ in range(num_layers)]
    dh_carry[-1] = dh_top_final.copy()
    for step_cache in reversed(caches):
        dx_from_above: np.ndarray | None = None
        for index in range(num_layers - 1, -1, -1):
            cache = step_cache[index]
            dh = dh_carry[index]
            if dx_from_above is not None:
                dh = dh + dx_from_above
            tanh_c = np.tanh(cache["c"])
            d_o = dh * tanh_c
            dc = dc_carry[index] + dh * cache["o"] * (1.0 - tanh_c**2)
            d_f = dc * cache["c_prev"]
            d_i = dc * cache["g"]
            d_g = dc * cache["i"]
            dc_carry[index] = dc * cache["f"]
            dz = {
                "input": d_i * cache["i"] * (1.0 - cache["i"]),
                "forget": d_f * cache["f"] * (1.0 - cache["f"]),
                "output": d_o * cache["o"] * (1.0 - cache["o"]),
                "candidate": d_g * (1.0 - cache["g"] ** 2),
            }
            layer = model.layers[index]
            dx = np.zeros_like(cache["x"])
            dh_prev = np.zeros(hidden)
            for gate in GATES:
                grads[f"layer{index}.{gate}.w_x"] += np.outer(dz[gate], cache["x"])
                grads[f"layer{index}.{gate}.w_h"] += np.outer(dz[gate], cache["h_prev"])
                grads[f"layer{index}.{gate}.bias"] += dz[gate]
                dx += layer.w_x[gate].T @ dz[gate]
                dh_prev += layer.w_h[gate].T @ dz[gate]
            dh_carry[index] = dh_prev
            dx_from_above = dx


def train(
    model: SequenceModel, sequences: list[TrainingPair], config: TrainConfig
) -> tuple[SequenceModel, LossReport]:
    """Train a copy of the model on (window, mask, target) pairs.

    Minibatch order is shuffled per epoch from the config seed; gradients are
    clipped to ``clip_norm`` (global norm) before each update. Returns the
    trained model, with its context length and training snapshot filled in,
    plus the per-epoch loss history. Raises ``TrainingDivergedError`` (with
    the epoch index) if the loss goes non-finite.
    """
    if not sequences:
        raise ValueError("no training sequences")
    for pair in sequences:
        if pair.window.shape != (config.context_length, model.dimension):
            raise ValueError(
                f"window shape {pair.window.shape} does not match context length "
                f"{config.context_length} and dimension {model.dimension}"
            )
    trained = model.copy()
    params = dict(trained.parameter_items())
    opt = _Adam(params, config.learning_rate) if config.optimizer == "adam" else _Sgd(config.learning_rate)
    rng = np.random.default_rng(config.seed)
    count = len(sequences)
    epoch_losses: list[float] = []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(count)
        weighted = 0.0
        for lo in range(0, count, config.batch_size):
            chunk = order[lo : lo + config.batch_size]
            batch = [sequences[i] for i in chunk]
            try:
                loss, grads = loss_and_gradients(trained, batch)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(str(exc), epoch=epoch) from None
            _clip_gradients(grads, config.clip_norm)
            opt.update(params, grads)
            weighted += loss * len(chunk)
        epoch_loss = weighted / count
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError("non-finite epoch loss", epoch=epoch)
        epoch_losses.append(epoch_loss)
    trained.context_length = config.context_length
    trained.train_meta = {
        "loss": "mean_squared_error",
        "optimizer": config.optimizer,
        "learning_rate": config.learning_rate,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "seed": config.seed,
        "clip_norm": config.clip_norm,
    }
    return trained, LossReport(epoch_losses=epoch_losses)


def _clip_gradients(grads: dict[str, np.ndarray], clip_norm: float) -> None:
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if norm > clip_norm:
        scale = clip_norm / norm
        for g in grads.values():
            g *= scale


class _Sgd:
    def __init__(self, learning_rate: float):
        self.learning_rate = learning_rate

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, array in params.items():
            array -= self.learning_rate * grads[name]


class _Adam:
    """Per-parameter first/second-moment adaptive updates."""

    def __init__(self, params: dict[str, np.ndarray], learning_rate: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step = 0
        self.m = {name: np.zeros_like(a) for name, a in params.items()}
        self.v = {name: np.zeros_like(a) for name, a in params.items()}

    def update(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.step += 1
        correct1 = 1.0 - self.beta1**self.step
        correct2 = 1.0 - self.beta2**self.step
        for name, array in params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1.0 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1.0 - self.beta2) * g * g
            m_hat = self.m[name] / correct1
            v_hat = self.v[name] / correct2
            array -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


def predict_next(model: SequenceModel, recent_segments: np.ndarray) -> np.ndarray:
    """Predict the feature vector that should follow the given segment history.

    Uses the model's trained context length: histories longer than it keep
    only the most recent segments, shorter ones are left-padded and masked.
    """
    recent = np.asarray(recent_segments, dtype=np.float64)
    if recent.ndim != 2 or recent.shape[0] < 1:
        raise ValueError("recent_segments must contain at least one segment vector")
    if recent.shape[1] != model.dimension:
        raise ValueError(f"segment dimension {recent.shape[1]} != model dimension {model.dimension}")
    if model.context_length is None:
        raise ValueError("model has no context length; train it or set context_length")
    n = model.context_length
    recent = recent[-n:]
    window = np.zeros((n, model.dimension))
    mask = np.zeros(n, dtype=bool)
    window[n - recent.shape[0] :] = recent
    mask[n - recent.shape[0] :] = True
    return forward(model, window, mask)
