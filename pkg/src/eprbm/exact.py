"""Exact inference for small RBMs by full enumeration of all 2^(m+n) states.

This is the oracle everything else is checked against: partition function,
joint and marginal distributions, conditional outcome tables, and the two
hidden-variable diagnostics (locality factorization and measurement
independence).

Bit order convention: configurations are enumerated with unit 1 as the most
significant bit, so index k of a layer corresponds to the binary expansion of
k read left to right. For the visible layer that makes the enumeration order
lexicographic in (v1, v2, ..., vm).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .rbm import RbmModel

# 2^24 joint states is about 128 MB of float64, a sensible desk-scale ceiling.
MAX_EXACT_UNITS = 24

# Setting pairs (v1, v2) in the order used by every per-pair report.
SETTING_PAIRS = ((0, 0), (0, 1), (1, 0), (1, 1))


def bit_patterns(k: int) -> np.ndarray:
    """All 2^k binary vectors of length k as a (2^k, k) float array.

    Row i is the binary expansion of i with the first column as the most
    significant bit, so rows are in lexicographic order.
    """
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    idx = np.arange(2**k)[:, None]
    shifts = np.arange(k - 1, -1, -1)
    return ((idx >> shifts) & 1).astype(np.float64)


@dataclass(frozen=True)
class HiddenState:
    """One joint on/off assignment of the hidden units, the hidden variable."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not all(b in (0, 1) for b in self.bits):
            raise ValueError(f"hidden state bits must be 0 or 1, got {self.bits}")

    @classmethod
    def from_index(cls, index: int, n: int) -> "HiddenState":
        if not 0 <= index < 2**n:
            raise ValueError(f"index {index} out of range for {n} bits")
        return cls(tuple((index >> (n - 1 - j)) & 1 for j in range(n)))

    @property
    def index(self) -> int:
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    def label(self) -> str:
        return "".join(str(b) for b in self.bits)


@dataclass(frozen=True)
class ExactDistribution:
    """Exact Boltzmann distribution of a model over all joint configurations.

    Attributes:
        model: the machine the distribution belongs to.
        log_partition: log Z computed by log-sum-exp over all states.
        joint: (2^m, 2^n) table, entry [i, j] = P(v = bits(i), h = bits(j)).
    """

    model: RbmModel
    log_partition: float
    joint: np.ndarray

    def __post_init__(self):
        j = np.asarray(self.joint, dtype=np.float64)
        j.setflags(write=False)
        object.__setattr__(self, "joint", j)

    def visible_marginal(self) -> np.ndarray:
        """P(v) over the 2^m visible patterns, lexicographic order."""
        return self.joint.sum(axis=1)

    def hidden_marginal(self) -> np.ndarray:
        """P(h) over the 2^n hidden patterns, lexicographic order."""
        return self.joint.sum(axis=0)


def enumerate_distribution(model: RbmModel) -> ExactDistribution:
    """Compute the exact Boltzmann distribution by enumerating every state.

    The negative energies are assembled as a (2^m, 2^n) matrix and the
    partition function is taken with a max-shifted log-sum-exp, so models
    whose energies span hundreds of units stay finite.

    Raises:
        ValueError: if m + n exceeds MAX_EXACT_UNITS, too large for exact
            inference.
    """
    m, n = model.n_visible, model.n_hidden
    if m + n > MAX_EXACT_UNITS:
        raise ValueError(
            f"model with {m} + {n} units is too large for exact inference "
            f"(limit {MAX_EXACT_UNITS} total units)"
        )
    v_pat = bit_patterns(m)
    h_pat = bit_patterns(n)
    neg_energy = (
        (v_pat @ model.visible_bias)[:, None]
        + (h_pat @ model.hidden_bias)[None, :]
        + v_pat @ model.weights @ h_pat.T
    )
    shift = neg_energy.max()
    log_partition = float(shift + np.log(np.exp(neg_energy - shift).sum()))
    joint = np.exp(neg_energy - log_partition)
    return ExactDistribution(model=model, log_partition=log_partition, joint=joint)


def _require_epr_layout(dist: ExactDistribution) -> None:
    if dist.model.n_visible != 4:
        raise ValueError(
            "EPR layout requires exactly 4 visible units "
            f"(settings v1, v2 and outcomes v3, v4), got {dist.model.n_visible}"
        )


def _visible_index(v1: int, v2: int, v3: int, v4: int) -> int:
    return (v1 << 3) | (v2 << 2) | (v3 << 1) | v4


def conditional_outcomes(
    dist: ExactDistribution, settings: tuple[int, int]
) -> np.ndarray:
    """P(v3, v4 | v1, v2) as a 2x2 table, hidden units marginalized out.

    Entry [x3, x4] is the probability of outcome bits (v3, v4) = (x3, x4)
    given the setting bits. The four cells sum to 1.
    """
    _require_epr_layout(dist)
    s1, s2 = settings
    if s1 not in (0, 1) or s2 not in (0, 1):
        raise ValueError(f"settings must be binary, got {settings!r}")
    pv = dist.visible_marginal()
    table = np.empty((2, 2))
    for x3 in (0, 1):
        for x4 in (0, 1):
            table[x3, x4] = pv[_visible_index(s1, s2, x3, x4)]
    total = table.sum()
    if total <= 0:
        raise ValueError(f"settings {settings} have zero probability")
    return table / total


def locality_check(dist: ExactDistribution) -> float:
    """Maximum factorization residual of the joint outcome law over λ.

    For every hidden state λ, setting pair (v1, v2), and outcome pair
    (v3, v4), computes

        |P(v3, v4 | v1, v2, λ) − P(v3 | v1, λ) · P(v4 | v2, λ)|

    and returns the maximum. The bipartite topology makes the two outcome
    units conditionally independent given λ, so the residual is zero up to
    floating-point error for any parameter values.
    """
    _require_epr_layout(dist)
    n_h = 2 ** dist.model.n_hidden
    # joint reshaped to axes (v1, v2, v3, v4, lambda)
    j = dist.joint.reshape(2, 2, 2, 2, n_h)
    # P(v3, v4 | v1, v2, lambda)
    cond_joint = j / j.sum(axis=(2, 3), keepdims=True)
    # P(v3 | v1, lambda): marginalize the remote setting v2 and outcome v4,
    # then normalize over v3. Likewise P(v4 | v2, lambda). Using only the
    # local setting makes this the full factorizability condition, remote
    # setting independence included.
    num3 = j.sum(axis=(1, 3))  # axes (v1, v3, lambda)
    p3 = num3 / num3.sum(axis=1, keepdims=True)
    num4 = j.sum(axis=(0, 2))  # axes (v2, v4, lambda)
    p4 = num4 / num4.sum(axis=1, keepdims=True)
    product = p3[:, None, :, None, :] * p4[None, :, None, :, :]
    return float(np.abs(cond_joint - product).max())


@dataclass(frozen=True)
class MeasurementIndependenceReport:
    """Hidden-state distributions conditioned on each setting pair.

    Attributes:
        setting_pairs: the four (v1, v2) pairs, in SETTING_PAIRS order.
        conditional: (4, 2^n) array, row p = P(λ | settings pair p).
        pooled: (2^n,) array, the uniform average of the four rows. The
            settings are uniform in the data-generating process, so this is
            the natural unconditioned P(λ).
        tv_distances: (4,) total-variation distances TV(row, pooled).
        max_tv: maximum of tv_distances; 0 means measurement independence
            holds exactly, large values mean λ carries setting information.
    """

    setting_pairs: tuple[tuple[int, int], ...]
    conditional: np.ndarray
    pooled: np.ndarray
    tv_distances: np.ndarray
    max_tv: float


def measurement_independence_check(
    dist: ExactDistribution,
) -> MeasurementIndependenceReport:
    """Compare P(λ | α, β) across setting pairs against the pooled P(λ).

    Measurement independence asks that the hidden variable not depend on the
    detector settings: P(λ | α, β) = P(λ). This computes the four conditional
    distributions exactly and their total-variation distances to the pooled
    average.
    """
    _require_epr_layout(dist)
    n_h = 2 ** dist.model.n_hidden
    j = dist.joint.reshape(2, 2, 2, 2, n_h)
    conditional = np.empty((4, n_h))
    for p, (s1, s2) in enumerate(SETTING_PAIRS):
        block = j[s1, s2].sum(axis=(0, 1))
        conditional[p] = block / block.sum()
    pooled = conditional.mean(axis=0)
    tv = 0.5 * np.abs(conditional - pooled).sum(axis=1)
    return MeasurementIndependenceReport(
        setting_pairs=SETTING_PAIRS,
        conditional=conditional,
        pooled=pooled,
        tv_distances=tv,
        max_tv=float(tv.max()),
    )


def dump_joint_csv(dist: ExactDistribution, path) -> None:
    """Write the joint table as CSV: v1..vm,h1..hn,probability.

    Rows are lexicographic over the concatenated (visible, hidden) bits,
    matching the enumeration order of the joint table.
    """
    m, n = dist.model.n_visible, dist.model.n_hidden
    v_pat = bit_patterns(m).astype(int)
    h_pat = bit_patterns(n).astype(int)
    header = [f"v{i+1}" for i in range(m)] + [f"h{j+1}" for j in range(n)] + [
        "probability"
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for vi in range(2**m):
            for hi in range(2**n):
                row = (
                    [str(b) for b in v_pat[vi]]
                    + [str(b) for b in h_pat[hi]]
                    + [repr(float(dist.joint[vi, hi]))]
                )
                writer.writerow(row)
