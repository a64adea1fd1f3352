"""Rare-event cumulative losses, their Poissonization, and random sums.

An observation contributes loss 0 with probability 1 - p_i and a draw from
V_i otherwise, so the law of its loss is the mixture (1 - p_i) E + p_i V_i.
The underlying observation space never needs to be built: every quantity
below depends on the observations only through these mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dist import (DiscreteDistribution, compound_poisson, convolve, identity,
                   mixture, point_mass, poisson_truncation, powers_along,
                   weighted_mixture)
from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class RareEventModel:
    """n observations with rare-event probabilities p_i and loss laws V_i."""

    probs: tuple
    losses: tuple

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        losses = tuple(self.losses)
        if not probs or len(probs) != len(losses):
            raise InvalidInputError("need one loss law per probability, n >= 1")
        if any(not 0 <= p <= 1 for p in probs):
            raise InvalidInputError("rare-event probabilities must lie in [0, 1]")
        dims = {V.dim for V in losses}
        if len(dims) != 1:
            raise InvalidInputError("loss laws disagree on dimension")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "losses", losses)

    @classmethod
    def homogeneous(cls, n: int, p: float, V: DiscreteDistribution) -> "RareEventModel":
        return cls((p,) * n, (V,) * n)

    @property
    def n(self) -> int:
        return len(self.probs)

    @property
    def p(self) -> float:
        return max(self.probs)

    @property
    def dim(self) -> int:
        return self.losses[0].dim

    def summand_laws(self):
        return [mixture(p, V) for p, V in zip(self.probs, self.losses)]

    def expected_loss(self) -> np.ndarray:
        return sum(p * V.mean() for p, V in zip(self.probs, self.losses))


def bernoulli_loss(n: int, p: float) -> RareEventModel:
    """Each of n observations loses one unit with probability p."""
    return RareEventModel.homogeneous(n, p, point_mass(1.0))


def _distinct(model: RareEventModel):
    """Group identical (p_i, V_i) entries so repeated work is done once."""
    groups: dict = {}
    for p, V in zip(model.probs, model.losses):
        key = (p, id(V))
        if key in groups:
            groups[key][2] += 1
        else:
            groups[key] = [p, V, 1]
    return list(groups.values())


def _product(laws_with_counts, dim, quantum) -> DiscreteDistribution:
    out = identity(dim, quantum=quantum)
    for law, count in laws_with_counts:
        for _ in range(count):
            out = convolve(out, law)
    return out


def exact_G(model: RareEventModel) -> DiscreteDistribution:
    """Law of S = sum_i f(Y_i): the convolution of the n mixtures."""
    q = model.losses[0].quantum
    return _product([(mixture(p, V), c) for p, V, c in _distinct(model)], model.dim, q)


def exact_D(model: RareEventModel, tol: float = 1e-12) -> DiscreteDistribution:
    """Law of the Poissonized total T: product of e(G_i), each truncated at tol/n."""
    q = model.losses[0].quantum
    each = tol / model.n
    laws = [(compound_poisson(1.0, mixture(p, V), each), c)
            for p, V, c in _distinct(model)]
    return _product(laws, model.dim, q)


@dataclass(frozen=True, eq=False)
class EmpiricalSample:
    """N simulated vectors (rows of ``values``); ``counts`` holds per-index
    Poisson multiplicities when requested from :func:`simulate_T`."""

    values: np.ndarray
    counts: Optional[np.ndarray] = None

    @property
    def N(self) -> int:
        return len(self.values)

    def mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def to_distribution(self, quantum: float = 1e-9) -> DiscreteDistribution:
        return DiscreteDistribution(self.values, np.full(self.N, 1.0 / self.N),
                                    quantum=quantum, normalize=True)


def _draw(rng, V: DiscreteDistribution, size: int) -> np.ndarray:
    if V.size == 1:
        return np.repeat(V.points, size, axis=0)
    return V.points[rng.choice(V.size, size=size, p=V.masses)]


def simulate_S(model: RareEventModel, N: int, seed: int = 0) -> EmpiricalSample:
    """N independent draws of the cumulative loss S."""
    if N < 1:
        raise InvalidInputError("N must be positive")
    rng = np.random.default_rng(seed)
    out = np.zeros((N, model.dim))
    for p, V in zip(model.probs, model.losses):
        hits = rng.random(N) < p
        k = int(hits.sum())
        if k:
            out[hits] += _draw(rng, V, k)
    return EmpiricalSample(out)


def simulate_T(model: RareEventModel, N: int, seed: int = 0, *,
               return_counts: bool = False) -> EmpiricalSample:
    """N independent draws of T, the loss summed over a Poisson point process.

    The process with intensity sum_i L(Y_i) is the superposition of
    independent processes, one per index, each with Poisson(1) many points
    drawn from L(Y_i); a point contributes f(Y_i), i.e. a draw from
    (1 - p_i) E + p_i V_i.  Without ``return_counts``, c identical entries
    are merged into one process with Poisson(c) many points.
    """
    if N < 1:
        raise InvalidInputError("N must be positive")
    rng = np.random.default_rng(seed)
    out = np.zeros((N, model.dim))
    counts = np.empty((N, model.n), dtype=np.int64) if return_counts else None
    if return_counts:
        entries = [(p, V, 1) for p, V in zip(model.probs, model.losses)]
    else:
        entries = _distinct(model)
    for i, (p, V, c) in enumerate(entries):
        K = rng.poisson(float(c), N)
        if counts is not None:
            counts[:, i] = K
        losses = rng.binomial(K, p)
        total = int(losses.sum())
        if total:
            draws = _draw(rng, V, total)
            owner = np.repeat(np.arange(N), losses)
            for j in range(model.dim):
                out[:, j] += np.bincount(owner, weights=draws[:, j], minlength=N)
    return EmpiricalSample(out, counts)


def dkw_bound(N: int, confidence: float = 0.999) -> float:
    """Dvoretzky-Kiefer-Wolfowitz radius: P(sup|F_N - F| > eps) <= 1 - confidence."""
    return float(np.sqrt(np.log(2.0 / (1.0 - confidence)) / (2.0 * N)))


@dataclass(frozen=True, eq=False)
class IntegerPmf:
    """Probability masses on {0, 1, ..., K_max}; ``tail`` is mass cut off beyond."""

    masses: np.ndarray
    tail: float = field(default=0.0)

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        if len(m) == 0 or np.any(m < 0) or not np.all(np.isfinite(m)):
            raise InvalidInputError("integer pmf masses must be finite and non-negative")
        if abs(m.sum() - 1.0) > 1e-12:
            raise InvalidInputError(f"integer pmf sums to {m.sum()!r}, not 1")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @classmethod
    def point(cls, k: int) -> "IntegerPmf":
        m = np.zeros(k + 1)
        m[k] = 1.0
        return cls(m)

    @classmethod
    def from_dict(cls, masses: dict) -> "IntegerPmf":
        if any(int(k) != k or k < 0 for k in masses):
            raise InvalidInputError("integer pmf support must be non-negative integers")
        m = np.zeros(int(max(masses)) + 1)
        for k, v in masses.items():
            m[int(k)] += v
        return cls(m)

    @classmethod
    def poisson(cls, alpha: float, tol: float) -> "IntegerPmf":
        w, tail = poisson_truncation(alpha, tol)
        return cls(w / w.sum(), tail)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.masses > 0)

    @property
    def k_max(self) -> int:
        return len(self.masses) - 1

    def mix(self, other: "IntegerPmf", theta: float) -> "IntegerPmf":
        """theta * self + (1 - theta) * other."""
        n = max(len(self.masses), len(other.masses))
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.masses)] = self.masses
        b[: len(other.masses)] = other.masses
        return IntegerPmf(theta * a + (1 - theta) * b)


def random_sum(U: IntegerPmf, F: DiscreteDistribution,
               tol: float = 0.0) -> DiscreteDistribution:
    """Law of xi_1 + ... + xi_mu for mu ~ U independent of i.i.d. xi_j ~ F.

    Atoms of U with the largest k are dropped while their total mass stays
    within ``tol``; the dropped mass plus U's own tail is recorded in
    ``error_bound``.
    """
    m = U.masses
    support = U.support
    dropped = 0.0
    while len(support) > 1 and dropped + m[support[-1]] <= tol:
        dropped += m[support[-1]]
        support = support[:-1]
    weights = [m[k] for k in support]
    comps = [Fk for _, Fk in powers_along(F, support)]
    out = weighted_mixture(weights, comps)
    return DiscreteDistribution._from_keyed(out.keys, out.points, out.masses.copy(),
                                            out.quantum, out.error_bound + dropped + U.tail)

