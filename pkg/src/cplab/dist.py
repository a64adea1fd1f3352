"""Exact arithmetic on finite-support probability distributions in R^d.

A :class:`DiscreteDistribution` is an immutable list of atoms.  Support points
are deduplicated by an integer key obtained by rounding every coordinate to a
fixed quantum (``1e-9`` by default), so that floating-point drift in sums of
coordinates never splits one atom into two.  Convolution adds keys exactly, so
the keyed support of ``F * G`` does not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import InvalidInputError, ResourceLimitError

DEFAULT_QUANTUM = 1e-9
DEFAULT_MAX_PAIRS = 50_000_000
DEFAULT_MAX_ATOMS = 5_000_000
MASS_TOL = 1e-12

_KEY_LIMIT = 2.0**62
_CHUNK_PAIRS = 2_000_000


def _as_points(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 0:
        pts = pts.reshape(1, 1)
    elif pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] == 0:
        raise InvalidInputError("points must have positive dimension")
    return pts


def _keys_for(points: np.ndarray, quantum: float) -> np.ndarray:
    scaled = points / quantum
    if not np.all(np.abs(scaled) < _KEY_LIMIT):
        raise InvalidInputError("coordinates too large for the configured quantum")
    return np.rint(scaled).astype(np.int64)


def _group(keys: np.ndarray):
    """Sort keys lexicographically; return (unique keys, first index, inverse)."""
    if keys.shape[1] == 1:
        uk, first, inv = np.unique(keys[:, 0], return_index=True, return_inverse=True)
        return uk[:, None], first, inv.reshape(-1)
    uk, first, inv = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    return uk, first, inv.reshape(-1)


def _reduce(keys, points, masses):
    uk, first, inv = _group(keys)
    summed = np.bincount(inv, weights=masses, minlength=len(uk))
    return uk, points[first], summed


class DiscreteDistribution:
    """Finite-support probability measure on R^d.

    ``points`` is an ``(N, d)`` array (or a length-``N`` sequence for d = 1),
    ``masses`` the matching probabilities.  Zero masses are dropped and
    duplicate points merged.  With ``normalize=True`` the masses are rescaled
    to total one; otherwise they must already sum to one within 1e-12.

    ``error_bound`` carries an upper bound on the total-variation distance to
    the exact law the value stands for (truncation, pruning).
    """

    __slots__ = ("_points", "_masses", "_keys", "quantum", "error_bound")

    def __init__(self, points, masses, *, quantum: float = DEFAULT_QUANTUM,
                 normalize: bool = False, error_bound: float = 0.0):
        pts = _as_points(points)
        m = np.asarray(masses, dtype=float).reshape(-1)
        if len(m) != len(pts):
            raise InvalidInputError("points and masses differ in length")
        if len(m) == 0:
            raise InvalidInputError("a distribution needs at least one atom")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("non-finite coordinate")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise InvalidInputError("masses must be finite and non-negative")
        if not quantum > 0:
            raise InvalidInputError("quantum must be positive")
        keep = m > 0
        pts, m = pts[keep], m[keep]
        if len(m) == 0:
            raise InvalidInputError("all masses are zero")
        total = m.sum()
        if normalize:
            m = m / total
        elif abs(total - 1.0) > MASS_TOL:
            raise InvalidInputError(f"masses sum to {total!r}, not 1")
        keys, pts, m = _reduce(_keys_for(pts, quantum), pts, m)
        self._set(pts, m, keys, quantum, float(error_bound))

    def _set(self, pts, m, keys, quantum, error_bound):
        pts.setflags(write=False)
        m.setflags(write=False)
        keys.setflags(write=False)
        self._points, self._masses, self._keys = pts, m, keys
        self.quantum = quantum
        self.error_bound = error_bound

    @classmethod
    def _from_keyed(cls, keys, points, masses, quantum, error_bound=0.0,
                    normalize=True) -> "DiscreteDistribution":
        keep = masses > 0
        keys, points, masses = keys[keep], points[keep], masses[keep]
        keys, points, masses = _reduce(keys, points, masses)
        keep = masses > 0
        keys, points, masses = keys[keep], points[keep], masses[keep]
        if normalize:
            masses = masses / masses.sum()
        obj = cls.__new__(cls)
        obj._set(np.ascontiguousarray(points), masses, np.ascontiguousarray(keys),
                 quantum, float(error_bound))
        return obj

    @property
    def points(self) -> np.ndarray:
        return self._points

    @property
    def masses(self) -> np.ndarray:
        return self._masses

    @property
    def keys(self) -> np.ndarray:
        return self._keys

    @property
    def dim(self) -> int:
        return self._points.shape[1]

    @property
    def size(self) -> int:
        return len(self._masses)

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        if self.size <= 6:
            body = ", ".join(
                f"{tuple(float(c) for c in p) if self.dim > 1 else float(p[0])}: {m:.6g}"
                for p, m in zip(self._points, self._masses))
            return f"DiscreteDistribution(dim={self.dim}, {{{body}}})"
        return f"DiscreteDistribution(dim={self.dim}, atoms={self.size})"

    def mean(self) -> np.ndarray:
        return self._masses @ self._points

    def mass_at(self, x) -> float:
        key = _keys_for(_as_points(np.atleast_1d(np.asarray(x, float))).reshape(1, -1),
                        self.quantum)[0]
        hit = np.all(self._keys == key, axis=1)
        return float(self._masses[hit].sum())

    def as_dict(self) -> dict:
        """Map point tuples to masses (mainly for tests and debugging)."""
        return {tuple(float(c) for c in p): float(m)
                for p, m in zip(self._points, self._masses)}

    def pushforward(self, func_points: np.ndarray) -> "DiscreteDistribution":
        """Law of the image atoms ``func_points`` (one row per atom), same masses."""
        pts = _as_points(func_points)
        if len(pts) != self.size:
            raise InvalidInputError("one image point per atom is required")
        return DiscreteDistribution._from_keyed(
            _keys_for(pts, self.quantum), pts, self._masses.copy(), self.quantum,
            self.error_bound, normalize=False)


def _check_same_dim(F: DiscreteDistribution, G: DiscreteDistribution) -> None:
    if F.dim != G.dim:
        raise InvalidInputError(f"dimension mismatch: {F.dim} vs {G.dim}")
    if F.quantum != G.quantum:
        raise InvalidInputError("distributions use different quanta")


def point_mass(x, *, quantum: float = DEFAULT_QUANTUM) -> DiscreteDistribution:
    """The distribution concentrated at ``x``; ``point_mass(0)`` is the identity E."""
    pt = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, -1)
    return DiscreteDistribution(pt, [1.0], quantum=quantum)


def identity(dim: int, *, quantum: float = DEFAULT_QUANTUM) -> DiscreteDistribution:
    if dim < 1:
        raise InvalidInputError("dimension must be positive")
    return point_mass(np.zeros(dim), quantum=quantum)


def convolve(F: DiscreteDistribution, G: DiscreteDistribution, *,
             max_pairs: int = DEFAULT_MAX_PAIRS) -> DiscreteDistribution:
    """Law of X + Y for independent X ~ F, Y ~ G."""
    _check_same_dim(F, G)
    pairs = F.size * G.size
    if pairs > max_pairs:
        raise ResourceLimitError(
            f"convolve: {F.size} x {G.size} atoms exceeds the cap of {max_pairs} pairs")
    if F.size < G.size:
        F, G = G, F
    step = max(1, _CHUNK_PAIRS // G.size)
    parts = []
    for start in range(0, F.size, step):
        sl = slice(start, start + step)
        k = (F.keys[sl, None, :] + G.keys[None, :, :]).reshape(-1, F.dim)
        p = (F.points[sl, None, :] + G.points[None, :, :]).reshape(-1, F.dim)
        m = (F.masses[sl, None] * G.masses[None, :]).reshape(-1)
        parts.append(_reduce(k, p, m))
    if len(parts) == 1:
        k, p, m = parts[0]
    else:
        k = np.concatenate([q[0] for q in parts])
        p = np.concatenate([q[1] for q in parts])
        m = np.concatenate([q[2] for q in parts])
    return DiscreteDistribution._from_keyed(
        k, p, m, F.quantum, F.error_bound + G.error_bound)


def prune(F: DiscreteDistribution, eps: float):
    """Drop the lightest atoms while their total stays within ``eps``.

    Returns ``(pruned, removed_mass)``; the total-variation distance between
    ``F`` and ``pruned`` is at most ``removed_mass``.
    """
    if not 0 <= eps < 1:
        raise InvalidInputError("prune eps must lie in [0, 1)")
    if eps == 0 or F.size == 1:
        return F, 0.0
    order = np.argsort(F.masses, kind="stable")
    csum = np.cumsum(F.masses[order])
    n_drop = int(np.searchsorted(csum, eps, side="right"))
    n_drop = min(n_drop, F.size - 1)
    if n_drop == 0:
        return F, 0.0
    removed = float(csum[n_drop - 1])
    keep = np.sort(order[n_drop:])
    out = DiscreteDistribution._from_keyed(
        F.keys[keep], F.points[keep], F.masses[keep], F.quantum,
        F.error_bound + removed)
    return out, removed


def power(F: DiscreteDistribution, n: int, prune_eps: float = 0.0, *,
          max_pairs: int = DEFAULT_MAX_PAIRS) -> DiscreteDistribution:
    """n-fold convolution power by binary exponentiation; ``power(F, 0)`` is E.

    With ``prune_eps > 0`` every intermediate is pruned; the pruned mass is
    accumulated into ``error_bound``.
    """
    if n < 0 or int(n) != n:
        raise InvalidInputError("power exponent must be a non-negative integer")
    n = int(n)
    if n == 0:
        return identity(F.dim, quantum=F.quantum)
    result = None
    base = F
    while True:
        if n & 1:
            result = base if result is None else convolve(result, base, max_pairs=max_pairs)
            if prune_eps:
                result, _ = prune(result, prune_eps)
        n >>= 1
        if not n:
            return result
        base = convolve(base, base, max_pairs=max_pairs)
        if prune_eps:
            base, _ = prune(base, prune_eps)


def powers_along(F: DiscreteDistribution, ns: Iterable[int], *,
                 max_pairs: int = DEFAULT_MAX_PAIRS) -> Iterator[tuple]:
    """Yield ``(n, F^n)`` for sorted ``ns`` by repeated convolution with F.

    Cheaper than independent :func:`power` calls when F has few atoms and the
    whole grid is wanted.
    """
    targets = sorted(set(int(n) for n in ns))
    if targets and targets[0] < 0:
        raise InvalidInputError("negative power")
    cur = identity(F.dim, quantum=F.quantum)
    k = 0
    for n in targets:
        while k < n:
            cur = convolve(cur, F, max_pairs=max_pairs)
            k += 1
        yield n, cur


def poisson_truncation(alpha: float, tol: float, *, max_terms: int = 10_000_000):
    """Poisson(alpha) weights up to the smallest K with cumulative mass >= 1 - tol.

    Returns ``(weights, tail)`` where ``tail = 1 - sum(weights)``.  Direct
    summation in log space; no asymptotic shortcuts.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise InvalidInputError("alpha must be a positive finite number")
    if not tol > 0:
        raise InvalidInputError("tol must be positive")
    log_a = math.log(alpha)
    weights = []
    cum = 0.0
    k = 0
    hard_stop = alpha + 60.0 * math.sqrt(alpha) + 200.0
    while True:
        w = math.exp(-alpha + k * log_a - math.lgamma(k + 1))
        weights.append(w)
        cum += w
        if cum >= 1.0 - tol:
            break
        k += 1
        if k > hard_stop or k > max_terms:
            raise InvalidInputError(
                f"tol={tol!r} is below the attainable floating-point resolution")
    return np.array(weights), max(0.0, 1.0 - cum)


def compound_poisson(alpha: float, H: DiscreteDistribution, tol: float, *,
                     max_atoms: int = DEFAULT_MAX_ATOMS,
                     max_pairs: int = DEFAULT_MAX_PAIRS) -> DiscreteDistribution:
    """Truncated compound Poisson law e(alpha H) = sum_k e^-alpha alpha^k/k! H^k.

    The series stops at the first K whose Poisson(alpha) cumulative mass
    reaches 1 - tol; the result is renormalized and ``error_bound`` records the
    dropped tail (plus ``alpha`` times any error already carried by H).
    """
    weights, tail = poisson_truncation(alpha, tol)
    d, q = H.dim, H.quantum
    cur = identity(d, quantum=q)
    acc_k, acc_p, acc_m = [], [], []
    pending = 0
    for k, w in enumerate(weights):
        if k:
            cur = convolve(cur, H, max_pairs=max_pairs)
            if cur.size > max_atoms:
                raise ResourceLimitError(
                    f"compound_poisson: support of H^{k} exceeds {max_atoms} atoms")
        if w == 0.0:
            continue
        acc_k.append(cur.keys)
        acc_p.append(cur.points)
        acc_m.append(w * cur.masses)
        pending += cur.size
        if pending > 4 * max(cur.size, 1024) and len(acc_k) > 1:
            rk, rp, rm = _reduce(np.concatenate(acc_k), np.concatenate(acc_p),
                                 np.concatenate(acc_m))
            acc_k, acc_p, acc_m = [rk], [rp], [rm]
            pending = len(rk)
    return DiscreteDistribution._from_keyed(
        np.concatenate(acc_k), np.concatenate(acc_p), np.concatenate(acc_m), q,
        tail + alpha * H.error_bound)


def mixture(p: float, V: DiscreteDistribution) -> DiscreteDistribution:
    """(1 - p) E + p V: zero with probability 1 - p, otherwise a draw from V."""
    if not 0 <= p <= 1:
        raise InvalidInputError("mixture weight must lie in [0, 1]")
    origin = np.zeros((1, V.dim))
    pts = np.concatenate([origin, V.points])
    keys = np.concatenate([np.zeros((1, V.dim), dtype=np.int64), V.keys])
    m = np.concatenate([[1.0 - p], p * V.masses])
    return DiscreteDistribution._from_keyed(keys, pts, m, V.quantum,
                                            p * V.error_bound)


def weighted_mixture(weights: Sequence[float],
                     components: Sequence[DiscreteDistribution]) -> DiscreteDistribution:
    """sum_k w_k F_k for probability weights w_k (need not be normalized)."""
    if len(weights) != len(components) or not components:
        raise InvalidInputError("one weight per component is required")
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or not w.sum() > 0:
        raise InvalidInputError("weights must be non-negative with positive total")
    first = components[0]
    for c in components[1:]:
        _check_same_dim(first, c)
    w = w / w.sum()
    keys = np.concatenate([c.keys for c in components])
    pts = np.concatenate([c.points for c in components])
    m = np.concatenate([wk * c.masses for wk, c in zip(w, components)])
    err = float(sum(wk * c.error_bound for wk, c in zip(w, components)))
    return DiscreteDistribution._from_keyed(keys, pts, m, first.quantum, err)


def char_fn(F: DiscreteDistribution, t):
    """Characteristic function sum_x F{x} exp(i <x, t>).

    ``t`` may be a single point (returns a complex scalar) or an ``(K, d)``
    array (returns K values).
    """
    ts = np.asarray(t, dtype=float)
    single = ts.ndim <= 1
    ts = np.atleast_2d(ts.reshape(1, -1) if single else ts)
    if ts.shape[1] != F.dim:
        raise InvalidInputError(f"t has dimension {ts.shape[1]}, F has {F.dim}")
    out = np.empty(len(ts), dtype=complex)
    step = max(1, _CHUNK_PAIRS // F.size)
    for start in range(0, len(ts), step):
        phase = ts[start:start + step] @ F.points.T
        out[start:start + step] = np.exp(1j * phase) @ F.masses
    return complex(out[0]) if single else out


def _real_char_fn(F: DiscreteDistribution, ts: np.ndarray) -> np.ndarray:
    out = np.empty(len(ts))
    step = max(1, _CHUNK_PAIRS // F.size)
    for start in range(0, len(ts), step):
        out[start:start + step] = np.cos(ts[start:start + step] @ F.points.T) @ F.masses
    return out


def is_symmetric(F: DiscreteDistribution, tol: float = 1e-12) -> bool:
    """True if the support is closed under negation with matching masses."""
    neg = -F.keys
    uk, _, inv = _group(np.concatenate([F.keys, neg]))
    if len(uk) != F.size:
        return False
    a = np.zeros(len(uk))
    b = np.zeros(len(uk))
    a[inv[:F.size]] = F.masses
    b[inv[F.size:]] = F.masses
    return bool(np.all(np.abs(a - b) <= tol))


def _float_gcd(values: np.ndarray, rtol: float = 1e-9) -> Optional[float]:
    vals = np.unique(np.abs(values[values != 0]))
    if len(vals) == 0:
        return None
    scale = vals[-1]
    g = vals[0]
    for v in vals[1:]:
        a, b = v, g
        while b > rtol * scale:
            r = math.fmod(a, b)
            if r < rtol * scale or b - r < rtol * scale:
                r = 0.0
            a, b = b, r
        g = a
    if g < 1e-6 * scale:
        return None
    ratio = vals / g
    if np.all(np.abs(ratio - np.rint(ratio)) <= 1e-6):
        return float(g)
    return None


def lattice_period(F: DiscreteDistribution) -> Optional[np.ndarray]:
    """Per-axis spacing h of a lattice h Z^d through the origin containing supp F.

    Returns None when some axis is not (numerically) lattice-valued.  Axes on
    which F is identically zero get spacing 1.
    """
    hs = []
    for j in range(F.dim):
        col = F.points[:, j]
        if np.all(col == 0):
            hs.append(1.0)
            continue
        h = _float_gcd(col)
        if h is None:
            return None
        hs.append(h)
    return np.array(hs)


@dataclass(frozen=True)
class CharClassReport:
    """Outcome of :func:`class_check`; alpha fields are None for non-symmetric F."""

    is_symmetric: bool
    alpha_lower_bound: Optional[float]
    grid_points_checked: int
    min_charfn_value: Optional[float]
    lattice: bool = False

    @property
    def in_plus_class(self) -> bool:
        return self.alpha_lower_bound is not None and self.alpha_lower_bound >= 1.0 - 1e-12


def _grid_axes(F: DiscreteDistribution, resolution, t_max):
    d = F.dim
    if resolution is None:
        resolution = 4096 if d == 1 else max(9, int((2**22) ** (1.0 / d)))
    h = lattice_period(F)
    if t_max is not None:
        half = np.full(d, float(t_max))
    elif h is not None:
        half = np.pi / h
    else:
        half = np.full(d, 64.0)
    return [np.linspace(-half[j], half[j], int(resolution)) for j in range(d)], h is not None


def class_check(F: DiscreteDistribution, resolution: Optional[int] = None,
                t_max: Optional[float] = None) -> CharClassReport:
    """Certify alpha with F-hat(t) >= -1 + alpha on a finite grid of t.

    For lattice-valued F the grid spans one period [-pi/h, pi/h] per axis
    (exact up to grid resolution); otherwise ``|t|_inf <= t_max`` (default 64)
    is a heuristic range.  ``resolution`` is points per axis.
    """
    if not is_symmetric(F):
        return CharClassReport(False, None, 0, None)
    axes, lattice = _grid_axes(F, resolution, t_max)
    if F.dim == 1:
        vals = _real_char_fn(F, axes[0][:, None])
        lowest, count = float(vals.min()), len(vals)
    else:
        lowest = math.inf
        count = 0
        rest = np.stack(np.meshgrid(*axes[1:], indexing="ij"), -1).reshape(-1, F.dim - 1)
        for t0 in axes[0]:
            ts = np.concatenate([np.full((len(rest), 1), t0), rest], axis=1)
            lowest = min(lowest, float(_real_char_fn(F, ts).min()))
            count += len(ts)
    alpha = min(2.0, max(0.0, 1.0 + lowest))
    return CharClassReport(True, alpha, count, lowest, lattice)


def _aligned(F: DiscreteDistribution, G: DiscreteDistribution):
    _check_same_dim(F, G)
    uk, _, inv = _group(np.concatenate([F.keys, G.keys]))
    a = np.zeros(len(uk))
    b = np.zeros(len(uk))
    np.add.at(a, inv[:F.size], F.masses)
    np.add.at(b, inv[F.size:], G.masses)
    return a, b


def total_variation(F: DiscreteDistribution, G: DiscreteDistribution) -> float:
    """sup over Borel sets |F(A) - G(A)| = half the L1 distance of the pmfs."""
    a, b = _aligned(F, G)
    return 0.5 * float(np.abs(a - b).sum())


def max_atom_difference(F: DiscreteDistribution, G: DiscreteDistribution) -> float:
    a, b = _aligned(F, G)
    return float(np.abs(a - b).max())


# Named test families.

def rademacher(**kw) -> DiscreteDistribution:
    return DiscreteDistribution([-1.0, 1.0], [0.5, 0.5], **kw)


def lazy_rademacher(**kw) -> DiscreteDistribution:
    return DiscreteDistribution([-1.0, 0.0, 1.0], [0.25, 0.5, 0.25], **kw)


def product2d(**kw) -> DiscreteDistribution:
    pts = [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
    return DiscreteDistribution(pts, [0.25] * 4, **kw)


def lazy_cross2d(**kw) -> DiscreteDistribution:
    """Half mass at 0, the rest split over the four unit axis vectors."""
    pts = [(0.0, 0.0), (-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]
    return DiscreteDistribution(pts, [0.5, 0.125, 0.125, 0.125, 0.125], **kw)


FAMILIES = {
    "rademacher": rademacher,
    "lazy-rademacher": lazy_rademacher,
    "product2d": product2d,
    "lazy-cross2d": lazy_cross2d,
}


def family(name: str) -> DiscreteDistribution:
    try:
        return FAMILIES[name]()
    except KeyError:
        raise InvalidInputError(
            f"unknown family {name!r}; choose from {sorted(FAMILIES)}") from None
