"""Maximum-likelihood training of the RBM on encoded EPR trials.

The log-likelihood gradient for a weight is

    d log p(v) / d w_ij = <v_i h_j>_data - <v_i h_j>_model

and analogously for the biases with <v_i> and <h_j>. The data expectation is
cheap (one sigmoid per hidden unit per vector); the model expectation is
estimated with persistent contrastive divergence, or computed exactly by
enumeration when the machine is small enough, which doubles as the oracle
for validating the stochastic estimate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from importlib import resources

import numpy as np
from scipy.special import expit

from . import bell
from .epr import EprDataset, encode_dataset
from .exact import bit_patterns, enumerate_distribution
from .rbm import RbmModel, hidden_activation_probs

ENCODING_DOC = {
    "v1": "alpha",
    "v2": "beta",
    "v3": "x_alpha(+1↔1)",
    "v4": "x_beta(+1↔1)",
}


@dataclass(frozen=True)
class TrainerConfig:
    """Hyperparameters of the training run.

    seed is mandatory and is split into three child streams (weight
    initialization, epoch shuffling, chain sampling), so a run is pinned
    bit for bit by the one number.

    The defaults were tuned so that training on a default 100,000-trial
    dataset reproduces that dataset's correlations within a few percent for
    nearly every seed; see the README for the measured pass rates.
    """

    seed: int
    learning_rate: float = 0.05
    learning_rate_decay: float = 0.995
    batch_size: int = 100
    n_persistent_chains: int = 100
    gibbs_steps_per_update: int = 5
    n_epochs: int = 200
    weight_init_scale: float = 0.01

    def __post_init__(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not np.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValueError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not 0 < self.learning_rate_decay <= 1:
            raise ValueError(
                f"learning_rate_decay must be in (0, 1], got {self.learning_rate_decay}"
            )
        for name in ("batch_size", "n_persistent_chains", "gibbs_steps_per_update"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.n_epochs, int) or self.n_epochs < 0:
            raise ValueError(f"n_epochs must be >= 0, got {self.n_epochs!r}")
        if not np.isfinite(self.weight_init_scale) or self.weight_init_scale < 0:
            raise ValueError(
                f"weight_init_scale must be >= 0, got {self.weight_init_scale}"
            )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "TrainerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown trainer config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class EpochRecord:
    """Diagnostics after one epoch: exact data log-likelihood and CHSH S."""

    epoch: int
    avg_log_likelihood: float
    s: float


@dataclass(frozen=True)
class TrainingTrace:
    """Per-epoch diagnostic records, epoch numbers strictly increasing from 1."""

    records: tuple[EpochRecord, ...]

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for pos, rec in enumerate(self.records):
            if rec.epoch != pos + 1:
                raise ValueError(
                    f"epoch numbers must run 1..n, got {rec.epoch} at position {pos}"
                )
            if not (np.isfinite(rec.avg_log_likelihood) and np.isfinite(rec.s)):
                raise ValueError(f"non-finite trace entry at epoch {rec.epoch}")

    def __len__(self) -> int:
        return len(self.records)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("epoch,avg_log_likelihood,s\n")
            for rec in self.records:
                fh.write(f"{rec.epoch},{rec.avg_log_likelihood!r},{rec.s!r}\n")


class TrainingDivergedError(RuntimeError):
    """Raised when parameters or diagnostics go non-finite during training.

    Carries the epoch at which divergence was detected and the trace of the
    epochs that completed cleanly.
    """

    def __init__(self, epoch: int, trace: TrainingTrace):
        self.epoch = epoch
        self.trace = trace
        super().__init__(f"training diverged at epoch {epoch}")


def _check_batch(model: RbmModel, batch) -> np.ndarray:
    arr = np.asarray(batch, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != model.n_visible:
        raise ValueError(
            f"batch must have shape (B, {model.n_visible}), got {arr.shape}"
        )
    if arr.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    return arr


def data_expectation(
    model: RbmModel, batch
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Data-side moments of a batch of visible vectors.

    Each vector fixes the visible units, and the hidden units are summed out
    analytically: the (i, j) entry is the batch mean of v_i * P(h_j = 1 | v).

    Returns:
        (vh, v_mean, h_mean): (m, n) matrix <v_i h_j>, (m,) vector <v_i>,
        (n,) vector <h_j>, all averaged over the batch.
    """
    arr = _check_batch(model, batch)
    ph = hidden_activation_probs(model, arr)
    vh = arr.T @ ph / arr.shape[0]
    return vh, arr.mean(axis=0), ph.mean(axis=0)


def model_expectation_exact(
    model: RbmModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Model-side moments <v_i h_j>, <v_i>, <h_j> from the exact joint table."""
    dist = enumerate_distribution(model)
    v_pat = bit_patterns(model.n_visible)
    h_pat = bit_patterns(model.n_hidden)
    vh = v_pat.T @ dist.joint @ h_pat
    v_mean = v_pat.T @ dist.visible_marginal()
    h_mean = h_pat.T @ dist.hidden_marginal()
    return vh, v_mean, h_mean


def init_chains(
    n_chains: int, n_visible: int, rng: np.random.Generator
) -> np.ndarray:
    """Fresh persistent-chain visible states: independent fair bits."""
    if n_chains < 1:
        raise ValueError(f"n_chains must be at least 1, got {n_chains}")
    return (rng.random((n_chains, n_visible)) < 0.5).astype(np.float64)


def model_expectation_pcd(
    model: RbmModel,
    chains: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Stochastic model moments from persistent chains.

    Advances every chain by k block-Gibbs sweeps, then forms the same
    analytically-averaged moments as data_expectation at the final visible
    states. The advanced chains are returned and must be fed back in on the
    next call; they are never reset between parameter updates.

    Returns:
        (vh, v_mean, h_mean, chains) with the updated chain states.
    """
    arr = _check_batch(model, chains)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    w, c, d = model.weights, model.visible_bias, model.hidden_bias
    new_chains = _advance(w, c, d, arr, k, rng)
    vh, v_mean, h_mean = _moments(w, d, new_chains)
    return vh, v_mean, h_mean, new_chains


def _advance(w, c, d, chains, k, rng) -> np.ndarray:
    """k block-Gibbs sweeps on raw parameter arrays (training hot path)."""
    for _ in range(k):
        ph = expit(chains @ w + d)
        h = (rng.random(ph.shape) < ph).astype(np.float64)
        pv = expit(h @ w.T + c)
        chains = (rng.random(pv.shape) < pv).astype(np.float64)
    return chains


def _moments(w, d, visible) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ph = expit(visible @ w + d)
    return (
        visible.T @ ph / visible.shape[0],
        visible.mean(axis=0),
        ph.mean(axis=0),
    )


def average_log_likelihood(model: RbmModel, data) -> float:
    """Mean over data rows of log P(v) under the exact distribution."""
    arr = _check_batch(model, data)
    dist = enumerate_distribution(model)
    log_pv = np.log(dist.visible_marginal())
    powers = 2 ** np.arange(model.n_visible - 1, -1, -1)
    idx = (arr @ powers).astype(np.int64)
    counts = np.bincount(idx, minlength=2**model.n_visible)
    return float(counts @ log_pv / arr.shape[0])


def exact_gradient(
    model: RbmModel, data
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact ascent direction of the average log-likelihood.

    Returns:
        (grad_w, grad_c, grad_d): data moments minus exact model moments for
        the weights, visible biases, and hidden biases.
    """
    arr = _check_batch(model, data)
    vh_d, v_d, h_d = data_expectation(model, arr)
    vh_m, v_m, h_m = model_expectation_exact(model)
    return vh_d - vh_m, v_d - v_m, h_d - h_m


def _epoch_diagnostics(model: RbmModel, data, epoch: int) -> EpochRecord | None:
    """Exact trace entry for one epoch, or None if the model has blown up.

    Parameters can stay finite while being large enough that the 2^(m+n)
    enumeration overflows, so the overflow and log-of-zero warnings are
    silenced here and any non-finite or degenerate result is reported as None
    for the caller to turn into a divergence error.
    """
    n_rows = data.shape[0]
    powers = 2 ** np.arange(model.n_visible - 1, -1, -1)
    counts = np.bincount((data @ powers).astype(np.int64), minlength=2**model.n_visible)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        dist = enumerate_distribution(model)
        log_pv = np.log(dist.visible_marginal())
        avg_ll = float(counts @ log_pv / n_rows)
        try:
            s = bell.correlations_from_distribution(dist).s
        except ValueError:
            return None
    if not (np.isfinite(avg_ll) and np.isfinite(s)):
        return None
    return EpochRecord(epoch=epoch, avg_log_likelihood=avg_ll, s=s)


def train(
    dataset: EprDataset,
    config: TrainerConfig,
    *,
    n_hidden: int = 4,
    model_term: str = "pcd",
    initial_model: RbmModel | None = None,
) -> tuple[RbmModel, TrainingTrace]:
    """Fit an RBM to the encoded trials by stochastic gradient ascent.

    Weights start from a zero-mean normal draw scaled by weight_init_scale
    and biases start at zero (or from initial_model if given). Each epoch
    shuffles the encoded data and applies one update per minibatch:

        W  += eps * (<v h>_data - <v h>_model)
        c  += eps * (<v>_data   - <v>_model)
        d  += eps * (<h>_data   - <h>_model)

    with eps decayed per epoch. The model term comes from persistent
    contrastive divergence by default; model_term="exact" substitutes the
    enumeration oracle (slow, test use). After every epoch the exact average
    log-likelihood and CHSH S are recorded.

    Raises:
        TrainingDivergedError: if any parameter goes non-finite, or the
            parameters grow so large that the exact diagnostics degenerate;
            the exception carries the trace of the completed epochs.
    """
    if len(dataset) == 0:
        raise ValueError("dataset must be non-empty")
    if model_term not in ("pcd", "exact"):
        raise ValueError(f"model_term must be 'pcd' or 'exact', got {model_term!r}")
    data = encode_dataset(dataset)
    n_rows, m = data.shape

    init_ss, shuffle_ss, chain_ss = np.random.SeedSequence(config.seed).spawn(3)
    init_rng = np.random.default_rng(init_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    chain_rng = np.random.default_rng(chain_ss)

    if initial_model is not None:
        if initial_model.n_visible != m:
            raise ValueError(
                f"initial_model has {initial_model.n_visible} visible units, "
                f"data has {m}"
            )
        n_hidden = initial_model.n_hidden
        w = initial_model.weights.copy()
        c = initial_model.visible_bias.copy()
        d = initial_model.hidden_bias.copy()
    else:
        if n_hidden < 1:
            raise ValueError(f"n_hidden must be at least 1, got {n_hidden}")
        w = init_rng.standard_normal((m, n_hidden)) * config.weight_init_scale
        c = np.zeros(m)
        d = np.zeros(n_hidden)

    chains = init_chains(config.n_persistent_chains, m, chain_rng)
    n_chains = config.n_persistent_chains
    k = config.gibbs_steps_per_update

    records = []
    for epoch in range(1, config.n_epochs + 1):
        lr = config.learning_rate * config.learning_rate_decay ** (epoch - 1)
        shuffled = data[shuffle_rng.permutation(n_rows)]
        # overflow en route to divergence is caught by the guards below, so
        # the transient warnings carry no extra information
        with np.errstate(over="ignore", invalid="ignore"):
            for start in range(0, n_rows, config.batch_size):
                batch = shuffled[start : start + config.batch_size]
                ph = expit(batch @ w + d)
                vh_d = batch.T @ ph / batch.shape[0]
                v_d = batch.mean(axis=0)
                h_d = ph.mean(axis=0)
                if model_term == "pcd":
                    chains = _advance(w, c, d, chains, k, chain_rng)
                    vh_m, v_m, h_m = _moments(w, d, chains)
                else:
                    # the exact term rebuilds a model mid-epoch, whose
                    # constructor rejects non-finite parameters; convert that
                    # state into the typed divergence error instead
                    if not (
                        np.all(np.isfinite(w))
                        and np.all(np.isfinite(c))
                        and np.all(np.isfinite(d))
                    ):
                        raise TrainingDivergedError(epoch, TrainingTrace(tuple(records)))
                    vh_m, v_m, h_m = model_expectation_exact(
                        RbmModel(visible_bias=c, hidden_bias=d, weights=w)
                    )
                w = w + lr * (vh_d - vh_m)
                c = c + lr * (v_d - v_m)
                d = d + lr * (h_d - h_m)
        if not (
            np.all(np.isfinite(w)) and np.all(np.isfinite(c)) and np.all(np.isfinite(d))
        ):
            raise TrainingDivergedError(epoch, TrainingTrace(tuple(records)))
        record = _epoch_diagnostics(
            RbmModel(visible_bias=c, hidden_bias=d, weights=w), data, epoch
        )
        if record is None:
            # parameters are finite but so extreme that the enumeration
            # overflows; that is divergence in all but name
            raise TrainingDivergedError(epoch, TrainingTrace(tuple(records)))
        records.append(record)

    final = RbmModel(visible_bias=c, hidden_bias=d, weights=w)
    return final, TrainingTrace(tuple(records))


def save_model(
    path,
    model: RbmModel,
    *,
    trainer_config: TrainerConfig | None = None,
    dataset_seed: int | None = None,
) -> None:
    """Write a model file: JSON with shapes, parameters, and provenance.

    weights are stored row-major with one row per visible unit. trainer and
    dataset_seed are null for models that were not produced by train (for
    example hand-entered parameter sets).
    """
    payload = {
        "m": model.n_visible,
        "n": model.n_hidden,
        "visible_bias": model.visible_bias.tolist(),
        "hidden_bias": model.hidden_bias.tolist(),
        "weights": model.weights.tolist(),
        "encoding": ENCODING_DOC,
        "trainer": trainer_config.to_dict() if trainer_config else None,
        "dataset_seed": dataset_seed,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_model(path) -> tuple[RbmModel, dict]:
    """Read a model file; returns the model and the full metadata dict."""
    with open(path) as fh:
        payload = json.load(fh)
    model = RbmModel(
        visible_bias=payload["visible_bias"],
        hidden_bias=payload["hidden_bias"],
        weights=payload["weights"],
    )
    if model.n_visible != payload["m"] or model.n_hidden != payload["n"]:
        raise ValueError(
            f"model file shape fields (m={payload['m']}, n={payload['n']}) do not "
            f"match arrays ({model.n_visible}, {model.n_hidden})"
        )
    return model, payload


def load_reference_model() -> RbmModel:
    """The bundled pre-trained 4x4 machine that reproduces the singlet
    correlations; used by regression tests and as a demo model."""
    ref = resources.files("eprbm").joinpath("fixtures/reference_model.json")
    with resources.as_file(ref) as path:
        model, _ = load_model(path)
    return model
