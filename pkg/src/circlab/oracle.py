"""Exact computations for nearest-neighbour walks on a ring.

A ``RingChain`` jumps from site i to i+1 at rate ``p[i]`` and to i-1 at rate
``q[i]``. Lifting to the integers, a cycle is formed whenever the walk moves
``n`` sites away from the site where the previous cycle was formed. The walk
is back at its starting site (mod n) after every cycle, so the lifted
displacement since the last cycle, an offset in ``-(n-1) .. n-1``, together
with the cycle counts is a finite Markov chain. Transient laws are computed
by uniformization on that augmented chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse
from scipy.stats import poisson

from . import _kernels as K
from . import rng as streams
from .cycles import CycleEventLog

TAIL = 1e-12
MAX_DOUBLINGS = 6


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RingChain:
    n_sites: int
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if self.n_sites < 3:
            raise ValueError("a ring needs at least 3 sites")
        if p.shape != (self.n_sites,) or q.shape != (self.n_sites,):
            raise ValueError("rate vectors must have length n_sites")
        if not (np.all(p > 0) and np.all(q > 0) and np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValueError("all rates must be finite and strictly positive")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def affinity(self):
        """Discrete affinity ``log prod(p_i / q_i)``."""
        return float(np.sum(np.log(self.p) - np.log(self.q)))

    def to_dict(self):
        return {"n_sites": self.n_sites, "p": self.p.tolist(), "q": self.q.tolist()}

    @classmethod
    def from_dict(cls, spec):
        missing = {"n_sites", "p", "q"} - set(spec)
        if missing:
            raise ValueError(f"chain spec lacks {sorted(missing)}")
        return cls(int(spec["n_sites"]), spec["p"], spec["q"])

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_diffusion(cls, model, n_sites):
        """Finite-difference chain with mesh ``h = 1/n``.

        Rates ``a/(2h^2) +- b/(2h)`` match the generator ``(a/2) f'' + b f'``.
        """
        h = 1.0 / n_sites
        x = np.arange(n_sites) * h
        a, b = model.a(x), model.b(x)
        p = a / (2 * h * h) + b / (2 * h)
        q = a / (2 * h * h) - b / (2 * h)
        if np.any(q <= 0) or np.any(p <= 0):
            raise ValueError(f"mesh too coarse for positive rates; increase n_sites above {n_sites}")
        return cls(n_sites, p, q)


def random_chain(rng, n_sites=3, spread=1.0):
    """Chain with log-uniform rates, for property checks."""
    return RingChain(n_sites, np.exp(rng.uniform(-spread, spread, n_sites)), np.exp(rng.uniform(-spread, spread, n_sites)))


# -- lifted interval ---------------------------------------------------------


def _offset_sites(chain, start):
    n = chain.n_sites
    return (start + np.arange(-(n - 1), n)) % n


def splitting_probability_exact(chain, start=0):
    """Probability of reaching ``start + n`` before ``start - n``."""
    n = chain.n_sites
    sites = _offset_sites(chain, start)
    p, q = chain.p[sites], chain.q[sites]
    m = 2 * n - 1
    # (p+q) h_j - p h_{j+1} - q h_{j-1} = 0 with h_n = 1, h_{-n} = 0
    ab = np.zeros((3, m))
    ab[0, 1:] = -p[:-1]
    ab[1, :] = p + q
    ab[2, :-1] = -q[1:]
    rhs = np.zeros(m)
    rhs[-1] = p[-1]
    h = linalg.solve_banded((1, 1), ab, rhs)
    if not np.all(np.isfinite(h)):
        raise OracleError("singular absorbing system")
    return float(h[n - 1])


def _poisson_weights(rate_t, tail):
    kmax = int(poisson.isf(tail, rate_t)) + 1 if rate_t > 0 else 0
    return kmax


def conditional_first_passage_law(chain, start, time_grid, tail=TAIL):
    """Conditional CDFs of the first cycle time given its direction.

    Returns a dict with ``forward``/``backward`` conditional CDFs on
    ``time_grid``, the joint CDFs ``P(T <= u, +-)`` and the splitting
    probability. Uniformization is truncated at Poisson tail mass ``tail``.
    """
    time_grid = np.asarray(time_grid, dtype=float)
    if np.any(time_grid < 0) or np.any(np.diff(time_grid) <= 0):
        raise ValueError("time grid must be non-negative and increasing")
    n = chain.n_sites
    sites = _offset_sites(chain, start)
    p, q = chain.p[sites], chain.q[sites]
    lam = float(np.max(p + q))
    m = 2 * n - 1
    # transient block of the uniformized kernel
    stay = 1.0 - (p + q) / lam
    kernel = sparse.diags([stay, p[:-1] / lam, q[1:] / lam], [0, 1, -1], shape=(m, m), format="csr").T.tocsr()
    exit_up = p[-1] / lam
    exit_dn = q[0] / lam
    kmax = _poisson_weights(lam * time_grid[-1], tail)
    v = np.zeros(m)
    v[n - 1] = 1.0
    up = np.zeros(kmax + 1)
    dn = np.zeros(kmax + 1)
    for k in range(1, kmax + 1):
        up[k] = up[k - 1] + v[-1] * exit_up
        dn[k] = dn[k - 1] + v[0] * exit_dn
        v = kernel @ v
    ks = np.arange(kmax + 1)
    joint_up = np.empty(time_grid.size)
    joint_dn = np.empty(time_grid.size)
    for i, t in enumerate(time_grid):
        w = poisson.pmf(ks, lam * t)
        joint_up[i] = w @ up
        joint_dn[i] = w @ dn
    split = splitting_probability_exact(chain, start)
    return {
        "time_grid": time_grid,
        "forward": joint_up / split,
        "backward": joint_dn / (1.0 - split),
        "joint_forward": joint_up,
        "joint_backward": joint_dn,
        "splitting_probability": split,
        "truncation": kmax,
    }


# -- winding-augmented chain ------------------------------------------------


def _uniformized(transitions, n_states, start_state, lam, t, tail):
    """Distribution at time ``t`` of a chain given as (src, dst, rate) arrays.

    Mass that leaves through a destination of -1 is dropped and reported.
    """
    src, dst, rate = transitions
    keep = dst >= 0
    out_rate = np.bincount(src, weights=rate, minlength=n_states)
    diag = 1.0 - out_rate / lam
    rows = np.concatenate([dst[keep], np.arange(n_states)])
    cols = np.concatenate([src[keep], np.arange(n_states)])
    vals = np.concatenate([rate[keep] / lam, diag])
    kernel = sparse.csr_matrix((vals, (rows, cols)), shape=(n_states, n_states))
    v = np.zeros(n_states)
    v[start_state] = 1.0
    if t == 0:
        return v, 1.0
    kmax = _poisson_weights(lam * t, tail)
    weights = poisson.pmf(np.arange(kmax + 1), lam * t)
    acc = weights[0] * v
    for k in range(1, kmax + 1):
        v = kernel @ v
        acc += weights[k] * v
    return acc, float(weights.sum())


def _winding_transitions(chain, start, k_max):
    n = chain.n_sites
    sites = _offset_sites(chain, start)
    m = 2 * n - 1
    levels = 2 * k_max + 1
    j = np.tile(np.arange(m), levels)  # offset index, offset = j - (n-1)
    k = np.repeat(np.arange(levels), m)  # level index, winding = k - k_max
    idx = k * m + j
    p, q = chain.p[sites][j], chain.q[sites][j]

    def target(j2, k2):
        valid = (k2 >= 0) & (k2 < levels)
        return np.where(valid, k2 * m + j2, -1)

    up_j = np.where(j == m - 1, n - 1, j + 1)
    up_k = np.where(j == m - 1, k + 1, k)
    dn_j = np.where(j == 0, n - 1, j - 1)
    dn_k = np.where(j == 0, k - 1, k)
    src = np.concatenate([idx, idx])
    dst = np.concatenate([target(up_j, up_k), target(dn_j, dn_k)])
    rate = np.concatenate([p, q])
    return src, dst, rate, m, levels


def winding_distribution_exact(chain, start, t, k_max=None, tail=1e-15, guard=2):
    """Exact law of the net cycle count ``W_t`` for ``|k| <= k_max``.

    The augmented chain keeps ``k_max + guard`` levels on each side; if more
    than ``tail`` mass reaches the guard levels, ``k_max`` is enlarged.
    Returns ``(ks, probs)``.
    """
    lam = float(np.max(chain.p + chain.q))
    if k_max is None:
        k_max = int(np.ceil(lam * t / chain.n_sites + 6 * np.sqrt(lam * t + 1) / chain.n_sites)) + 4
    for _ in range(MAX_DOUBLINGS):
        levels_half = k_max + guard
        src, dst, rate, m, levels = _winding_transitions(chain, start, levels_half)
        dist, kept = _uniformized((src, dst, rate), m * levels, levels_half * m + (chain.n_sites - 1), lam, t, tail)
        by_level = dist.reshape(levels, m).sum(axis=1)
        # mass in the guard levels or lost through the boundary; measured
        # against the Poisson weight actually summed, whose rounding deficit
        # can exceed 1e-14 on long horizons
        outside = kept - (by_level[guard:-guard].sum() if guard else by_level.sum())
        if outside <= max(tail, 1e-14):
            ks = np.arange(-k_max, k_max + 1)
            return ks, by_level[guard : levels - guard]
        k_max *= 2
    raise OracleError("winding truncation did not converge")


def joint_counts_exact(chain, start, t, m_max=None, tail=1e-15):
    """Exact law of ``(N+_t, N-_t)``; returns a ``(m_max+1, m_max+1)`` array."""
    n = chain.n_sites
    lam = float(np.max(chain.p + chain.q))
    if m_max is None:
        m_max = int(np.ceil(lam * t / n + 6 * np.sqrt(lam * t + 1) / n)) + 4
    for _ in range(MAX_DOUBLINGS):
        sites = _offset_sites(chain, start)
        m = 2 * n - 1
        size = m_max + 1
        j = np.tile(np.arange(m), size * size)
        c = np.repeat(np.arange(size * size), m)
        a, b = c // size, c % size  # a = N+, b = N-
        idx = c * m + j
        p, q = chain.p[sites][j], chain.q[sites][j]
        up_j = np.where(j == m - 1, n - 1, j + 1)
        up_a = np.where(j == m - 1, a + 1, a)
        dn_j = np.where(j == 0, n - 1, j - 1)
        dn_b = np.where(j == 0, b + 1, b)
        up = np.where(up_a < size, (up_a * size + b) * m + up_j, -1)
        dn = np.where(dn_b < size, (a * size + dn_b) * m + dn_j, -1)
        src = np.concatenate([idx, idx])
        dst = np.concatenate([up, dn])
        rate = np.concatenate([p, q])
        dist, kept = _uniformized((src, dst, rate), size * size * m, n - 1, lam, t, tail)
        probs = dist.reshape(size, size, m).sum(axis=2)
        if kept - probs.sum() <= max(tail, 1e-14):
            return probs
        m_max *= 2
    raise OracleError("count truncation did not converge")


# -- tilted generator -------------------------------------------------------


def tilted_generator(chain, lam):
    """Rate matrix with each forward jump weighted ``e^(lam/n)`` and each
    backward jump ``e^(-lam/n)``, so the tilt acts on the net cycle count."""
    n = chain.n_sites
    w = lam / n
    mat = np.diag(-(chain.p + chain.q))
    i = np.arange(n)
    mat[i, (i + 1) % n] += chain.p * np.exp(w)
    mat[i, (i - 1) % n] += chain.q * np.exp(-w)
    return mat


def tilted_scgf_exact(chain, lam):
    """Leading eigenvalue of the tilted generator: the SCGF of ``W_t``."""
    ev = linalg.eigvals(tilted_generator(chain, lam))
    if not np.all(np.isfinite(ev)):
        raise OracleError(f"eigensolver failed at lambda={lam}")
    return float(np.max(ev.real))


def joint_scgf_exact(chain, lam1, lam2, start=0):
    """SCGF of ``lam1 N+ + lam2 N-``: leading eigenvalue of the offset chain
    with cycle-completing jumps weighted ``e^lam1`` (forward) and ``e^lam2``."""
    n = chain.n_sites
    sites = _offset_sites(chain, start)
    p, q = chain.p[sites], chain.q[sites]
    m = 2 * n - 1
    mat = np.diag(-(p + q))
    j = np.arange(m)
    up = np.where(j == m - 1, n - 1, j + 1)
    dn = np.where(j == 0, n - 1, j - 1)
    mat[j, up] += p * np.where(j == m - 1, np.exp(lam1), 1.0)
    mat[j, dn] += q * np.where(j == 0, np.exp(lam2), 1.0)
    return float(np.max(linalg.eigvals(mat).real))


# -- simulation -------------------------------------------------------------


def gillespie_logs(chain, start, horizon, n_paths, master_seed=0):
    """Simulate the ring walk and return one ``CycleEventLog`` per path."""
    lam = float(np.max(chain.p + chain.q))
    expected = lam * horizon
    logs = []
    for i in range(n_paths):
        size = int(expected + 8 * np.sqrt(expected + 1) + 64)
        while True:
            g = streams.stream(master_seed, i, streams.INCREMENTS)
            expo = g.standard_exponential(size)
            unif = streams.stream(master_seed, i, streams.BRIDGE).random(size)
            cap = size // chain.n_sites + 8
            ev_t = np.empty(cap)
            ev_s = np.empty(cap, dtype=np.int8)
            nev, used, finished, _ = K.ring_gillespie(chain.p, chain.q, int(start), float(horizon), expo, unif, ev_t, ev_s)
            if finished:
                break
            size *= 2
        logs.append(CycleEventLog(ev_t[:nev].copy(), ev_s[:nev].copy(), float(horizon), float(start)))
    return logs
