"""Distance-only link lifetime and availability estimation.

Everything here works from timestamped inter-node distance measurements;
no positions, headings, or GPS data are required.  Under constant relative
velocity the squared distance between two nodes is an exact quadratic in
time, which is what makes a three-sample estimator sufficient:

    dist(t)^2 = d0^2 + 2*M*t + v^2*t^2

with v the relative speed and M the radial coefficient (position dot
velocity in the relative frame).  The relative-frame reduction means the
same estimator covers one moving node, both nodes moving, or neither.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Radicands in [-RADICAND_SLACK, 0) are treated as zero: noiseless data can
# land a hair below zero through rounding alone.  Anything more negative is
# inconsistent with constant-velocity motion and yields an invalid estimate.
RADICAND_SLACK = 1e-9


class LinkDownError(ValueError):
    """Raised when an operation requires a currently-connected link."""


@dataclass(frozen=True)
class DistanceSample:
    """One timestamped inter-node distance measurement (SI units)."""

    t: float
    dist: float

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError(f"sample time must be >= 0, got {self.t}")
        if self.dist < 0:
            raise ValueError(f"distance must be >= 0, got {self.dist}")


@dataclass(frozen=True)
class MotionEstimate:
    """Relative speed recovered from distance samples.

    ``valid`` is False when no real constant-velocity motion fits the
    samples (negative radicand beyond numeric slack); ``rel_speed`` is
    then 0.0 rather than NaN so the payload stays arithmetic-safe.
    """

    rel_speed: float
    valid: bool


@dataclass(frozen=True)
class LinkGeometry:
    """Scalar geometry of one link: current separation, radio radius, and a
    displacement magnitude.

    ``travel`` is the straight-line displacement of one node relative to
    the other: the distance covered by the elapsed time of interest for
    availability queries, or the distance at which the moving node meets
    the radio boundary for expiry queries.
    """

    dist: float
    radius: float
    travel: float

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise ValueError(f"radio radius must be > 0, got {self.radius}")
        if self.dist < 0:
            raise ValueError(f"distance must be >= 0, got {self.dist}")
        if self.travel < 0:
            raise ValueError(f"travel must be >= 0, got {self.travel}")


@dataclass(frozen=True)
class LinkForecast:
    """Predicted remaining lifetime and availability of one link."""

    expiry: float
    prob: float

    def __post_init__(self) -> None:
        if not self.expiry > 0:
            raise ValueError(f"expiry must be > 0, got {self.expiry}")
        if not 0.0 <= self.prob <= 1.0:
            raise ValueError(f"probability out of [0,1]: {self.prob}")


def estimate_speed(
    s0: DistanceSample, s1: DistanceSample, s2: DistanceSample
) -> MotionEstimate:
    """Recover relative speed from three distance samples.

    The first sample is the reference; with t1, t2 measured from it,
    constant relative velocity forces

        v^2 = ((t2-t1)*d0^2 + t1*d2^2 - t2*d1^2) / (t1*t2*(t2-t1))

    i.e. v^2 is the second divided difference of squared distance.

    Raises ValueError unless s0.t < s1.t < s2.t.
    """
    if not (s0.t < s1.t < s2.t):
        raise ValueError(
            f"sample times must strictly increase, got {s0.t}, {s1.t}, {s2.t}"
        )
    t1 = s1.t - s0.t
    t2 = s2.t - s0.t
    d0, d1, d2 = s0.dist, s1.dist, s2.dist
    radicand = ((t2 - t1) * d0 * d0 + t1 * d2 * d2 - t2 * d1 * d1) / (
        t1 * t2 * (t2 - t1)
    )
    if radicand < -RADICAND_SLACK:
        return MotionEstimate(rel_speed=0.0, valid=False)
    return MotionEstimate(rel_speed=math.sqrt(max(radicand, 0.0)), valid=True)


def link_expiry_time(est: MotionEstimate, geom: LinkGeometry) -> float:
    """Time until a currently-up link crosses the radio boundary.

    ``geom.travel`` must be the displacement at which the moving node
    meets the boundary, so the crossing solves T^2 - b*T + c = 0 with

        b = (travel^2 + dist^2 - radius^2) / (rel_speed * travel)
        c = (dist^2 - radius^2) / rel_speed^2

    The smallest positive real root is returned.  A zero-speed pair never
    expires; so does a quadratic without positive real roots.

    Raises LinkDownError when geom.dist > geom.radius and ValueError on an
    invalid estimate.
    """
    if not est.valid:
        raise ValueError("cannot predict expiry from an invalid speed estimate")
    if geom.dist > geom.radius:
        raise LinkDownError(
            f"link already down: dist {geom.dist} > radius {geom.radius}"
        )
    v = est.rel_speed
    if v == 0.0:
        return math.inf
    z = geom.travel
    if z == 0.0:
        return math.inf
    b = (z * z + geom.dist * geom.dist - geom.radius * geom.radius) / (v * z)
    c = (geom.dist * geom.dist - geom.radius * geom.radius) / (v * v)
    disc = b * b - 4.0 * c
    if disc < 0.0:
        return math.inf
    root = math.sqrt(disc)
    lo = (b - root) / 2.0
    hi = (b + root) / 2.0
    if lo > 0.0:
        return lo
    if hi > 0.0:
        return hi
    return math.inf


def availability_probability(geom: LinkGeometry) -> float:
    """Probability that two nodes are still within radio range after one
    has moved ``geom.travel`` meters in a uniformly random direction.

    Piecewise in Z = travel, d = dist, D = radius:

        1                               Z <= D - d
        arccos((Z^2+d^2-D^2)/(2*Z*d))/pi    D - d < Z <= D + d
        0                               Z > D + d

    The middle branch is the fraction of directions whose endpoint lands
    inside the radius-D disk; dividing the angle by pi normalizes it to a
    probability.  Co-located pairs (d = 0) stay connected iff Z <= D.
    """
    d, big_d, z = geom.dist, geom.radius, geom.travel
    if d == 0.0:
        return 1.0 if z <= big_d else 0.0
    if z <= big_d - d:
        return 1.0
    if z > big_d + d:
        return 0.0
    if z == 0.0:
        # Only reachable when d > radius: a pair that never was connected.
        return 0.0
    # The arccos argument is evaluated anchored to whichever branch seam is
    # closer; the factored forms avoid the cancellation that would otherwise
    # wash out the seam values (arccos is infinitely steep at +/-1).
    seam_lo = z - (big_d - d)  # > 0 here
    seam_hi = (big_d + d) - z  # >= 0 here
    x = -1.0 + seam_lo * (z + d + big_d) / (2.0 * z * d)
    if x > 0.0:
        x = 1.0 - seam_hi * (z + (big_d - d)) / (2.0 * z * d)
    x = min(1.0, max(-1.0, x))
    return math.acos(x) / math.pi


def path_availability(link_probs) -> float:
    """Availability of a multi-hop path: product of per-link availability
    probabilities, under independent link motion.
    """
    probs = list(link_probs)
    if not probs:
        raise ValueError("path must contain at least one link")
    result = 1.0
    for p in probs:
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"link probability out of [0,1]: {p}")
        result *= p
    return result


def forecast_link(
    s0: DistanceSample,
    s1: DistanceSample,
    s2: DistanceSample,
    radius: float,
    horizon: float,
) -> tuple[MotionEstimate, LinkForecast]:
    """Full distance-only forecast for one link from three samples.

    Returns the speed estimate plus a LinkForecast whose expiry counts
    from the newest sample and whose probability is the chance the link
    still holds ``horizon`` seconds after that sample.

    Raises ValueError when the samples admit no constant-velocity motion
    and LinkDownError when the newest sample is already out of range.
    """
    if horizon <= 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    est = estimate_speed(s0, s1, s2)
    if not est.valid:
        raise ValueError("samples are inconsistent with constant-velocity motion")
    d_now = s2.dist
    if d_now > radius:
        raise LinkDownError(f"link already down: dist {d_now} > radius {radius}")
    v = est.rel_speed
    if v == 0.0:
        forecast = LinkForecast(expiry=math.inf, prob=1.0)
        return est, forecast
    # Radial coefficient M = (first divided difference of dist^2 minus the
    # quadratic term), re-anchored from the reference sample to the newest.
    t1 = s1.t - s0.t
    t2 = s2.t - s0.t
    m0 = (s1.dist * s1.dist - s0.dist * s0.dist - v * v * t1 * t1) / (2.0 * t1)
    m_now = m0 + v * v * t2
    # Boundary crossing: v^2 s^2 + 2 M s + (d^2 - radius^2) = 0, smallest
    # positive root in travel distance.
    disc = m_now * m_now - v * v * (d_now * d_now - radius * radius)
    if disc < 0.0:
        expiry = math.inf
    else:
        root = math.sqrt(disc)
        travel_lo = (-m_now - root) / v
        travel_hi = (-m_now + root) / v
        exit_travel = travel_lo if travel_lo > 0.0 else travel_hi
        if exit_travel <= 0.0:
            expiry = math.inf
        else:
            expiry = link_expiry_time(
                est, LinkGeometry(dist=d_now, radius=radius, travel=exit_travel)
            )
    prob = availability_probability(
        LinkGeometry(dist=d_now, radius=radius, travel=v * horizon)
    )
    return est, LinkForecast(expiry=expiry, prob=prob)
