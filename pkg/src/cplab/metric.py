"""Kolmogorov and polyhedral distances between discrete laws.

For fixed directions t_1..t_m the map (b_1..b_m) -> G{P} - H{P} is piecewise
constant and right-continuous in each b_j, jumping only at projections of
atoms.  Enumerating those values (plus +inf) is therefore exact.  The search
over directions is not: :func:`rho_m_search` returns certified lower bounds,
each carrying a witness polyhedron that reproduces the value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dist import DiscreteDistribution, _check_same_dim
from .errors import InvalidInputError, ResourceLimitError
from .polyhedra import DirectionSet, Polyhedron, measure, project_values

DEFAULT_EXACT_CAP = 20_000_000
DEFAULT_RESTARTS = 32
KOLMOGOROV_MAX_DIM = 3

EXACT = "exact-fixed-directions"
ASCENT = "ascent-fixed-directions"
SEARCHED = "searched"


@dataclass(frozen=True, eq=False)
class DistanceCertificate:
    """A value |G{P} - H{P}| together with the polyhedron P that attains it."""

    value: float
    witness: Polyhedron
    mode: str

    @property
    def is_exact(self) -> bool:
        return self.mode == EXACT


def _certify(G, H, witness: Polyhedron, mode: str) -> DistanceCertificate:
    value = abs(measure(G, witness) - measure(H, witness))
    return DistanceCertificate(min(1.0, value), witness, mode)


def _signed_atoms(G, H, dirs):
    X = np.concatenate([G.points, H.points])
    w = np.concatenate([G.masses, -H.masses])
    V = project_values(X, dirs)
    cands = [np.unique(V[:, j]) for j in range(V.shape[1])]
    idx = np.stack([np.searchsorted(c, V[:, j]) for j, c in enumerate(cands)], axis=1)
    return w, cands, idx


def _thresholds(cands, index):
    return np.array([c[i] if i < len(c) else np.inf for c, i in zip(cands, index)])


def exact_grid_size(G, H, T: DirectionSet) -> float:
    _, cands, _ = _signed_atoms(G, H, T.directions)
    return math.prod(len(c) + 1 for c in cands)


def _exact(G, H, dirs, cap):
    w, cands, idx = _signed_atoms(G, H, dirs)
    shape = tuple(len(c) + 1 for c in cands)
    if math.prod(shape) > cap:
        raise ResourceLimitError(
            f"exact mode needs {math.prod(shape)} threshold combinations (cap {cap}); "
            "use ascent mode")
    M = np.zeros(shape)
    np.add.at(M, tuple(idx.T), w)
    for ax in range(M.ndim):
        np.cumsum(M, axis=ax, out=M)
    best = np.unravel_index(int(np.argmax(np.abs(M))), shape)
    return Polyhedron(dirs, _thresholds(cands, best))


def _ascent(G, H, dirs, restarts, rng, init=None):
    w, cands, idx = _signed_atoms(G, H, dirs)
    m = len(cands)
    lengths = np.array([len(c) + 1 for c in cands])
    best_val, best_idx = -1.0, None
    starts = [rng.integers(0, lengths) for _ in range(restarts)]
    if init is not None:
        starts[0] = np.asarray(init)
    for cur in starts:
        cur = np.array(cur, dtype=np.int64)
        inside = idx <= cur
        val = abs(w[np.all(inside, axis=1)].sum())
        improved = True
        while improved:
            improved = False
            for j in range(m):
                others = np.all(np.delete(inside, j, axis=1), axis=1) if m > 1 \
                    else np.ones(len(w), bool)
                cs = np.cumsum(np.bincount(idx[others, j], weights=w[others],
                                           minlength=lengths[j]))
                i = int(np.argmax(np.abs(cs)))
                if abs(cs[i]) > val + 1e-15:
                    val = abs(cs[i])
                    cur[j] = i
                    inside[:, j] = idx[:, j] <= i
                    improved = True
        if val > best_val:
            best_val, best_idx = val, cur.copy()
    return Polyhedron(dirs, _thresholds(cands, best_idx))


def rho_fixed_directions(G: DiscreteDistribution, H: DiscreteDistribution,
                         T: DirectionSet, mode: str = "exact", *,
                         cap: int = DEFAULT_EXACT_CAP,
                         restarts: int = DEFAULT_RESTARTS,
                         seed: int = 0) -> DistanceCertificate:
    """sup over P in P(t_1..t_m) of |G{P} - H{P}|.

    ``mode="exact"`` enumerates every threshold combination (at most ``cap``
    of them); ``mode="ascent"`` runs cyclic coordinate ascent over thresholds
    from ``restarts`` seeded starts and gives a lower bound.
    """
    _check_same_dim(G, H)
    if T.dim != G.dim:
        raise InvalidInputError(f"directions live in R^{T.dim}, laws in R^{G.dim}")
    if mode == "exact":
        return _certify(G, H, _exact(G, H, T.directions, cap), EXACT)
    if mode == "ascent":
        rng = np.random.default_rng(seed)
        return _certify(G, H, _ascent(G, H, T.directions, restarts, rng), ASCENT)
    raise InvalidInputError(f"unknown mode {mode!r}")


def kolmogorov_rho(G: DiscreteDistribution, H: DiscreteDistribution, *,
                   max_dim: int = KOLMOGOROV_MAX_DIM,
                   cap: int = DEFAULT_EXACT_CAP) -> DistanceCertificate:
    """sup_x |G(x) - H(x)| over multivariate distribution functions (exact)."""
    _check_same_dim(G, H)
    if G.dim > max_dim:
        raise ResourceLimitError(f"exact Kolmogorov distance capped at dim {max_dim}")
    return rho_fixed_directions(G, H, DirectionSet.axes(G.dim), "exact", cap=cap)


def _random_units(rng, k, d):
    v = rng.normal(size=(k, d))
    norms = np.linalg.norm(v, axis=1)
    v[norms == 0, 0] = norms[norms == 0] = 1.0
    return v / norms[:, None]


def _evaluate(G, H, dirs, cap, restarts, seed):
    T = DirectionSet(dirs)
    try:
        return rho_fixed_directions(G, H, T, "exact", cap=cap)
    except ResourceLimitError:
        return rho_fixed_directions(G, H, T, "ascent", restarts=restarts, seed=seed)


def _search_one(G, H, j, restarts, scale, levels, tries, climbers, cap, seed,
                seeds, threads):
    d = G.dim
    rng = np.random.default_rng([seed, j])
    pool = []
    axes = np.eye(d)[: min(j, d)]
    if j > d:
        axes = np.concatenate([axes, _random_units(rng, j - d, d)])
    pool.append(axes)
    for _ in range(restarts):
        pool.append(_random_units(rng, j, d))
    sub_seeds = rng.integers(0, 2**63, size=len(pool))

    def run(args):
        dirs, s = args
        return _evaluate(G, H, dirs, cap, 4, int(s))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            certs = list(ex.map(run, zip(pool, sub_seeds)))
    else:
        certs = [run(a) for a in zip(pool, sub_seeds)]

    order = sorted(range(len(certs)), key=lambda i: -certs[i].value)
    results = list(certs) + list(seeds)
    for i in order[:climbers]:
        cur = certs[i]
        for level in range(levels):
            sigma = scale * 0.5**level
            for _ in range(tries):
                dirs = cur.witness.directions + sigma * rng.normal(size=(j, d))
                norms = np.linalg.norm(dirs, axis=1)
                if np.any(norms == 0):
                    continue
                dirs = dirs / norms[:, None]
                cand = _evaluate(G, H, dirs, cap, 4, int(rng.integers(0, 2**63)))
                if cand.value > cur.value:
                    cur = cand
        results.append(cur)
    best = max(results, key=lambda c: c.value)
    return DistanceCertificate(best.value, best.witness, SEARCHED)


def rho_m_search(G: DiscreteDistribution, H: DiscreteDistribution, m: int, *,
                 restarts: int = DEFAULT_RESTARTS, scale: float = 0.5,
                 levels: int = 6, tries: int = 8, climbers: int = 4,
                 seed: int = 0, cap: int = 2_000_000, threads: int = 1,
                 seed_certificates=()) -> DistanceCertificate:
    """Certified lower bound on rho_m(G, H) = sup over P in P_m |G{P} - H{P}|.

    Direction sets are drawn uniformly on the sphere, the axis set is always
    in the pool, and the best few are refined by Gaussian perturbation with
    geometrically shrinking scale.  The search for m halfspaces is seeded with
    the result for m - 1 (padded with b = +inf), so the certified value never
    decreases in m for a fixed seed.  Deterministic given ``seed``.
    """
    _check_same_dim(G, H)
    if m < 1:
        raise InvalidInputError("m must be positive")
    d = G.dim
    extra = []
    if d <= KOLMOGOROV_MAX_DIM:
        try:
            extra.append(kolmogorov_rho(G, H, cap=cap))
        except ResourceLimitError:
            pass
    extra.extend(seed_certificates)
    best = None
    for j in range(1, m + 1):
        seeds = [DistanceCertificate(c.value, c.witness.padded(j), SEARCHED)
                 for c in extra if c.witness.m <= j]
        if best is not None:
            seeds.append(DistanceCertificate(best.value, best.witness.padded(j), SEARCHED))
        best = _search_one(G, H, j, restarts, scale, levels, tries, climbers, cap,
                           seed, seeds, threads)
    return best
