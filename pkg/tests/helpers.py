"""Independent oracles and small utilities shared by the test modules.

Everything here is deliberately written the slow, obvious way (nested loops,
explicit density matrices) so it cannot share bugs with the vectorized
implementations under test.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy import stats

from eprbm.rbm import Configuration, RbmModel, energy


def brute_force_joint(model: RbmModel) -> tuple[np.ndarray, float]:
    """Joint table and log Z by looping over every configuration."""
    m, n = model.n_visible, model.n_hidden
    weights = np.empty((2**m, 2**n))
    for vi, v in enumerate(itertools.product((0, 1), repeat=m)):
        for hi, h in enumerate(itertools.product((0, 1), repeat=n)):
            weights[vi, hi] = math.exp(-energy(model, Configuration(v, h)))
    z = weights.sum()
    return weights / z, math.log(z)


def brute_force_moments(
    model: RbmModel,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """<v_i h_j>, <v_i>, <h_j> by direct summation over the joint."""
    m, n = model.n_visible, model.n_hidden
    joint, _ = brute_force_joint(model)
    vh = np.zeros((m, n))
    v_mean = np.zeros(m)
    h_mean = np.zeros(n)
    for vi, v in enumerate(itertools.product((0, 1), repeat=m)):
        for hi, h in enumerate(itertools.product((0, 1), repeat=n)):
            p = joint[vi, hi]
            for i in range(m):
                v_mean[i] += p * v[i]
                for j in range(n):
                    vh[i, j] += p * v[i] * h[j]
            for j in range(n):
                h_mean[j] += p * h[j]
    return vh, v_mean, h_mean


_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
# (|+-> - |-+>) / sqrt(2) in the basis |++>, |+->, |-+>, |-->
_SINGLET = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2.0)


def singlet_prob_oracle(
    theta_a: float, theta_b: float, x_a: int, x_b: int
) -> float:
    """Joint outcome probability from the singlet state vector itself.

    Measures spin along angle theta in the x-z plane at each station:
    sigma(theta) = cos(theta) sigma_z + sin(theta) sigma_x, with projector
    (I + x * sigma(theta)) / 2 for outcome x.
    """

    def projector(theta: float, x: int) -> np.ndarray:
        sigma = math.cos(theta) * _SIGMA_Z + math.sin(theta) * _SIGMA_X
        return (np.eye(2) + x * sigma) / 2.0

    op = np.kron(projector(theta_a, x_a), projector(theta_b, x_b))
    return float(_SINGLET @ op @ _SINGLET)


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def chisquare_bucketed(
    counts: np.ndarray, probs: np.ndarray, min_expected: float = 5.0
) -> float:
    """Chi-square goodness-of-fit p-value, merging low-expectation states.

    States whose expected count falls below min_expected are pooled into a
    single bucket so the chi-square approximation stays valid.
    """
    counts = np.asarray(counts, dtype=np.float64)
    expected = np.asarray(probs, dtype=np.float64) * counts.sum()
    keep = expected >= min_expected
    obs = list(counts[keep])
    exp = list(expected[keep])
    if not np.all(keep):
        obs.append(counts[~keep].sum())
        exp.append(expected[~keep].sum())
    obs = np.asarray(obs)
    exp = np.asarray(exp)
    # chisquare requires matching totals; renormalize away rounding drift
    exp *= obs.sum() / exp.sum()
    return float(stats.chisquare(obs, exp).pvalue)


def random_model(
    rng: np.random.Generator, m: int = 4, n: int = 4, scale: float = 2.0
) -> RbmModel:
    return RbmModel(
        visible_bias=rng.normal(0.0, scale, m),
        hidden_bias=rng.normal(0.0, scale, n),
        weights=rng.normal(0.0, scale, (m, n)),
    )


def flip_outcome_bits(model: RbmModel) -> RbmModel:
    """Reparameterize so that visible units 3 and 4 have flipped meaning.

    Substituting v_i -> 1 - v_i for i in {3, 4} in the energy yields a model
    whose distribution equals the original with those bits complemented:
    the unit's bias and weight row change sign, and each hidden bias absorbs
    the old weight row.
    """
    c = model.visible_bias.copy()
    w = model.weights.copy()
    d = model.hidden_bias.copy()
    for i in (2, 3):
        d += w[i]
        c[i] = -c[i]
        w[i] = -w[i]
    return RbmModel(visible_bias=c, hidden_bias=d, weights=w)
