"""Exact simulation primitives: splittable RNG streams, CMS stable sampling,
subordinated Gaussian increments, gamma lifetimes, and offspring draws.

Streams are counter-based (Philox) and keyed by (master_seed, stream_id), so a
stream's sequence depends only on its key — never on scheduling or worker
count.  All samplers accept an optional ``size`` and vectorize over it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_CMS_UNDERFLOW = 1e-300


@dataclass
class RngStream:
    """A deterministic random stream keyed by (master_seed, stream_id).

    Equal keys reproduce identical sequences; distinct stream_ids are
    statistically independent.  The stream also counts CMS underflow
    resamples so diagnostics can report them.
    """

    master_seed: int
    stream_id: int
    gen: np.random.Generator = field(init=False, repr=False)
    cms_resamples: int = field(default=0, init=False)

    def __post_init__(self):
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        self.gen = np.random.Generator(np.random.Philox(key=key))

    def spawn(self, stream_id: int) -> "RngStream":
        """A fresh stream under the same master seed."""
        return RngStream(self.master_seed, stream_id)


def sample_stable_subordinator(alpha: float, t: float, rng: RngStream, size=None):
    """Exact sample(s) of S_t for the alpha/2-stable subordinator.

    Chambers-Mallows-Stuck form, with E[exp(-lam S_t)] = exp(-t (2 lam)^(alpha/2)):

        S_t = 2 t^(2/alpha) sin(a(U + pi/2)/2) / cos(U)^(2/a)
              * (cos(U - a(U + pi/2)/2) / E)^(2/a - 1)

    with U ~ Uniform(-pi/2, pi/2) and E ~ Exp(1).  alpha = 2 short-circuits to
    the deterministic S_t = 2t.  Samples underflowing to < 1e-300 are redrawn
    (counted on the stream).
    """
    if not 0.0 < alpha <= 2.0:
        raise DomainError(f"alpha must lie in (0, 2], got {alpha}")
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")
    if alpha == 2.0:
        out = np.full(size, 2.0 * t) if size is not None else 2.0 * t
        return out
    a = alpha / 2.0
    scalar = size is None
    n = 1 if scalar else int(np.prod(size))
    out = np.empty(n)
    todo = np.arange(n)
    while todo.size:
        u = rng.gen.uniform(-np.pi / 2.0, np.pi / 2.0, todo.size)
        e = rng.gen.standard_exponential(todo.size)
        shifted = a * (u + np.pi / 2.0)
        s = (2.0 * t ** (1.0 / a) * np.sin(shifted)
             / np.cos(u) ** (1.0 / a)
             * (np.cos(u - shifted) / e) ** (1.0 / a - 1.0))
        out[todo] = s
        bad = ~(s >= _CMS_UNDERFLOW)
        rng.cms_resamples += int(np.count_nonzero(bad))
        todo = todo[bad]
    if scalar:
        return float(out[0])
    return out.reshape(size)


@dataclass(frozen=True)
class SubordinatedIncrement:
    """Subordinator time consumed and the Brownian displacement over it."""

    ds: object  # real > 0, scalar or (n,)
    dx: object  # vector[d], (d,) or (n, d)


def sample_subordinated_increment(d: int, alpha: float, kappa: float, dt,
                                  rng: RngStream, size=None) -> SubordinatedIncrement:
    """One move of the subordinated Brownian motion over operator kappa*Delta_alpha.

    ds = kappa^(2/alpha) * S(alpha, dt) (deterministic 2*kappa*dt at alpha = 2)
    and dx = sqrt(ds) * N(0, I_d).  ``dt`` may be an array matching ``size``.
    """
    if d < 1:
        raise DomainError(f"dimension must be positive, got {d}")
    if kappa <= 0.0:
        raise DomainError(f"kappa must be positive, got {kappa}")
    if size is None:
        ds = kappa ** (2.0 / alpha) * sample_stable_subordinator(alpha, float(dt), rng)
        dx = np.sqrt(ds) * rng.gen.standard_normal(d)
        return SubordinatedIncrement(ds=ds, dx=dx)
    dt = np.asarray(dt, dtype=float)
    if np.any(dt <= 0.0):
        raise DomainError("dt must be positive")
    if alpha == 2.0:
        ds = 2.0 * kappa * np.broadcast_to(dt, size).astype(float)
    else:
        # scale-invariance: S(alpha, dt) = dt^(2/alpha) S(alpha, 1)
        unit = sample_stable_subordinator(alpha, 1.0, rng, size=size)
        ds = kappa ** (2.0 / alpha) * dt ** (2.0 / alpha) * unit
    dx = np.sqrt(ds)[..., None] * rng.gen.standard_normal((*np.shape(ds), d))
    return SubordinatedIncrement(ds=ds, dx=dx)


def sample_lifetime(delta: float, rng: RngStream, size=None):
    """Gamma(shape delta, rate 1) lifetime sample(s)."""
    if delta <= 0.0:
        raise DomainError(f"gamma shape must be positive, got {delta}")
    out = rng.gen.gamma(delta, size=size)
    return float(out) if size is None else out


def sample_offspring(q, rng: RngStream, size=None):
    """Index into q's category list sampled with the exact probabilities.

    ``q`` needs only a ``probs`` attribute (positive, summing to 1); the engine
    passes a BranchingLaw.  Returns an integer index (or array of them).
    """
    probs = np.asarray(q.probs, dtype=float)
    cum = np.cumsum(probs)
    cum[-1] = 1.0
    u = rng.gen.random(size)
    idx = np.searchsorted(cum, u, side="right")
    return int(idx) if size is None else idx
