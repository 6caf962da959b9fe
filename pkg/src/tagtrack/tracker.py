"""Sequential importance resampling particle filter, one instance per tag."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rf
from .world import Area, ObjectState, TargetDynamics, UavState, random_walk_displacements


@dataclass(frozen=True)
class TrackerConfig:
    num_particles: int = 10_000
    resample_threshold: float = 0.5  # fraction of num_particles
    sigma_min: float = 35.0  # meters; localization threshold

    def __post_init__(self):
        if self.num_particles < 1:
            raise ValueError("num_particles must be >= 1")
        if not (0.0 < self.resample_threshold <= 1.0):
            raise ValueError("resample_threshold must lie in (0, 1]")
        if self.sigma_min <= 0.0:
            raise ValueError("sigma_min must be positive")


@dataclass
class ObjectBelief:
    """Weighted particle approximation of one tag's posterior.

    particles: (N, 3) positions in meters; weights: (N,) non-negative, summing to 1.
    `diverged` flags that the latest update underflowed and was reset to uniform.
    """

    tag_id: int
    particles: np.ndarray
    weights: np.ndarray
    localized: bool = False
    diverged: bool = False


def init_belief(
    tag_id: int,
    area: Area,
    tag_height: float,
    cfg: TrackerConfig,
    rng: np.random.Generator,
) -> ObjectBelief:
    """Uniform particles over the 2D search area at the tag height, uniform weights."""
    n = cfg.num_particles
    pts = np.empty((n, 3))
    pts[:, :2] = area.sample(rng, n)
    pts[:, 2] = tag_height
    return ObjectBelief(tag_id=tag_id, particles=pts, weights=np.full(n, 1.0 / n))


def init_belief_at(
    tag_id: int,
    position,
    sigma: float,
    cfg: TrackerConfig,
    rng: np.random.Generator,
    area: Area | None = None,
) -> ObjectBelief:
    """Particles drawn as a tight horizontal Gaussian blob around a known position.

    Used to construct converged beliefs for controlled experiments.
    """
    n = cfg.num_particles
    center = np.asarray(position, dtype=float).reshape(3)
    pts = np.tile(center, (n, 1))
    pts[:, :2] += rng.normal(scale=sigma, size=(n, 2))
    if area is not None:
        pts[:, :2] = area.clamp(pts[:, :2])
    return ObjectBelief(tag_id=tag_id, particles=pts, weights=np.full(n, 1.0 / n))


def predict(
    belief: ObjectBelief,
    dyn: TargetDynamics,
    rng: np.random.Generator,
    area: Area | None = None,
) -> ObjectBelief:
    """Propagate every particle through the random-walk transition; weights unchanged."""
    pts = belief.particles + random_walk_displacements(len(belief.particles), dyn, rng)
    if area is not None:
        pts[:, :2] = area.clamp(pts[:, :2])
    return replace(belief, particles=pts)


def update(
    belief: ObjectBelief,
    z: rf.Measurement,
    uav: UavState,
    cfg: rf.PropagationConfig,
) -> ObjectBelief:
    """Bayes reweighting by the measurement likelihood, log-sum-exp stabilized.

    If every likelihood underflows (all particles coincident with the observer),
    the weights reset to uniform and the belief is flagged diverged.
    """
    if z.tag_id != belief.tag_id:
        raise ValueError(f"measurement tag {z.tag_id} does not match belief tag {belief.tag_id}")
    ll = rf.log_likelihood_array(z.rssi, belief.particles, uav, cfg)
    with np.errstate(divide="ignore"):
        logw = np.log(belief.weights) + ll
    m = np.max(logw)
    if not np.isfinite(m):
        n = len(belief.weights)
        return replace(belief, weights=np.full(n, 1.0 / n), diverged=True)
    w = np.exp(logw - m)
    w /= w.sum()
    return replace(belief, weights=w, diverged=False)


def effective_sample_size(weights: np.ndarray) -> float:
    return 1.0 / float(np.sum(weights * weights))


def systematic_resample_indices(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Systematic resampling: one uniform offset, N evenly spaced positions."""
    n = len(weights)
    positions = (rng.random() + np.arange(n)) / n
    cum = np.cumsum(weights)
    cum[-1] = 1.0  # guard against rounding
    return np.searchsorted(cum, positions, side="right")


def resample_if_needed(
    belief: ObjectBelief,
    cfg: TrackerConfig,
    rng: np.random.Generator,
) -> ObjectBelief:
    """Systematic resampling when the effective sample size drops below the threshold."""
    n = len(belief.weights)
    if effective_sample_size(belief.weights) >= cfg.resample_threshold * n:
        return belief
    idx = systematic_resample_indices(belief.weights, rng)
    return replace(belief, particles=belief.particles[idx], weights=np.full(n, 1.0 / n))


def estimate(belief: ObjectBelief) -> ObjectState:
    """Weighted mean of the particles."""
    return ObjectState(position=belief.weights @ belief.particles, tag_id=belief.tag_id)


def uncertainty(belief: ObjectBelief) -> float:
    """Belief spread: the maximum of the per-axis weighted standard deviations."""
    mean = belief.weights @ belief.particles
    dev = belief.particles - mean
    var = belief.weights @ (dev * dev)
    return float(np.sqrt(np.max(var)))


def mark_localized(belief: ObjectBelief, cfg: TrackerConfig) -> ObjectBelief:
    """Set `localized` once the spread falls below sigma_min; never reverts."""
    if belief.localized or uncertainty(belief) < cfg.sigma_min:
        return replace(belief, localized=True)
    return belief
