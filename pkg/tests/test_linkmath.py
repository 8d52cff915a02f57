"""Link-math tests: frozen oracle values plus kinematic property checks."""

import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adhocsim.linkmath import (
    DistanceSample,
    LinkDownError,
    LinkGeometry,
    MotionEstimate,
    availability_probability,
    estimate_speed,
    forecast_link,
    link_expiry_time,
    path_availability,
)

import oracles


def samples_from(d0, speed, heading, times=(0.0, 1.0, 2.0)):
    return [
        DistanceSample(t=t, dist=d)
        for t, d in oracles.sample_distances(d0, speed, heading, times)
    ]


# --- estimate_speed ---------------------------------------------------------


def test_stationary_pair_gives_zero_speed():
    s = [DistanceSample(t, 100.0) for t in (0.0, 1.0, 2.0)]
    est = estimate_speed(*s)
    assert est.valid
    assert est.rel_speed == 0.0


def test_radial_recession_recovers_speed():
    # Receding at 10 m/s: distances 100, 110, 120 at t = 0, 1, 2.
    est = estimate_speed(
        DistanceSample(0.0, 100.0),
        DistanceSample(1.0, 110.0),
        DistanceSample(2.0, 120.0),
    )
    assert est.valid
    assert est.rel_speed == pytest.approx(10.0, rel=1e-12)


def test_transverse_pass_recovers_speed():
    # 10 m/s perpendicular to the initial line of sight.
    s = samples_from(100.0, 10.0, math.pi / 2)
    assert s[1].dist == pytest.approx(100.4987562, abs=1e-6)
    assert s[2].dist == pytest.approx(101.9803903, abs=1e-6)
    est = estimate_speed(*s)
    assert est.valid
    assert est.rel_speed == pytest.approx(10.0, rel=1e-6)


def test_non_monotonic_timestamps_rejected():
    a = DistanceSample(0.0, 100.0)
    b = DistanceSample(1.0, 100.0)
    with pytest.raises(ValueError):
        estimate_speed(b, a, DistanceSample(2.0, 100.0))
    with pytest.raises(ValueError):
        estimate_speed(a, DistanceSample(0.0, 90.0), b)


def test_inconsistent_samples_flagged_invalid():
    # Squared distances concave in t: no real constant-velocity fit.
    est = estimate_speed(
        DistanceSample(0.0, 100.0),
        DistanceSample(1.0, 150.0),
        DistanceSample(2.0, 160.0),
    )
    assert not est.valid
    assert est.rel_speed == 0.0
    assert not math.isnan(est.rel_speed)


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        DistanceSample(-1.0, 10.0)
    with pytest.raises(ValueError):
        DistanceSample(0.0, -10.0)


@settings(max_examples=200, deadline=None)
@given(
    speed=st.floats(0.1, 50.0),
    d0=st.floats(1.0, 500.0),
    heading=st.floats(0.0, 2.0 * math.pi),
    t1=st.floats(0.25, 30.0),
    gap=st.floats(0.25, 30.0),
)
def test_speed_recovery_property(speed, d0, heading, t1, gap):
    t2 = min(t1 + gap, 60.0)
    s = samples_from(d0, speed, heading, (0.0, t1, t2))
    est = estimate_speed(*s)
    assert est.valid
    assert est.rel_speed == pytest.approx(speed, rel=1e-6)


# --- link_expiry_time -------------------------------------------------------


def geom_for(d0, speed, heading, radius):
    travel = oracles.exit_travel(d0, speed, heading, radius)
    return LinkGeometry(dist=d0, radius=radius, travel=travel)


def test_static_link_never_expires():
    est = MotionEstimate(rel_speed=0.0, valid=True)
    geom = LinkGeometry(dist=100.0, radius=250.0, travel=0.0)
    assert link_expiry_time(est, geom) == math.inf


def test_radial_recession_expiry():
    est = MotionEstimate(rel_speed=10.0, valid=True)
    assert link_expiry_time(est, geom_for(100.0, 10.0, 0.0, 250.0)) == pytest.approx(
        15.0, abs=1e-9
    )


def test_radial_approach_expiry_passes_through():
    est = MotionEstimate(rel_speed=10.0, valid=True)
    assert link_expiry_time(
        est, geom_for(100.0, 10.0, math.pi, 250.0)
    ) == pytest.approx(35.0, abs=1e-9)


def test_expiry_rejects_down_link():
    est = MotionEstimate(rel_speed=10.0, valid=True)
    with pytest.raises(LinkDownError):
        link_expiry_time(est, LinkGeometry(dist=300.0, radius=250.0, travel=50.0))


def test_expiry_rejects_invalid_estimate():
    est = MotionEstimate(rel_speed=0.0, valid=False)
    with pytest.raises(ValueError):
        link_expiry_time(est, LinkGeometry(dist=100.0, radius=250.0, travel=50.0))


def test_expiry_matches_stepped_kinematics():
    rng = random.Random(7)
    for _ in range(50):
        d0 = rng.uniform(5.0, 240.0)
        speed = rng.uniform(0.5, 30.0)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        radius = 250.0
        est = MotionEstimate(rel_speed=speed, valid=True)
        t_pred = link_expiry_time(est, geom_for(d0, speed, heading, radius))
        t_step = oracles.stepped_boundary_crossing(d0, speed, heading, radius)
        assert t_step is not None
        assert abs(t_step - t_pred) <= 1e-3 + 1e-9


# --- availability_probability ------------------------------------------------


def test_availability_inner_region_certain():
    assert availability_probability(LinkGeometry(100.0, 250.0, 0.0)) == 1.0
    assert availability_probability(LinkGeometry(100.0, 250.0, 150.0)) == 1.0


def test_availability_outer_region_impossible():
    assert availability_probability(LinkGeometry(100.0, 250.0, 400.0)) == 0.0


def test_availability_middle_branch_value():
    prob = availability_probability(LinkGeometry(100.0, 250.0, 200.0))
    assert prob == pytest.approx(math.acos(-0.3125) / math.pi, abs=1e-12)
    assert prob == pytest.approx(0.6012, abs=5e-4)
    assert prob == pytest.approx(oracles.mc_availability(200.0, 100.0, 250.0), abs=2e-3)


def test_availability_branch_seams_exact():
    rng = random.Random(11)
    for _ in range(100):
        d = rng.uniform(1.0, 200.0)
        big_d = d + rng.uniform(1.0, 300.0)
        at_lower = availability_probability(LinkGeometry(d, big_d, big_d - d))
        at_upper = availability_probability(LinkGeometry(d, big_d, big_d + d))
        assert abs(at_lower - 1.0) <= 1e-9
        assert abs(at_upper - 0.0) <= 1e-9


def test_availability_colocated_pair():
    assert availability_probability(LinkGeometry(0.0, 250.0, 100.0)) == 1.0
    assert availability_probability(LinkGeometry(0.0, 250.0, 250.0)) == 1.0
    assert availability_probability(LinkGeometry(0.0, 250.0, 300.0)) == 0.0


def test_availability_never_connected():
    assert availability_probability(LinkGeometry(300.0, 250.0, 0.0)) == 0.0
    assert availability_probability(LinkGeometry(300.0, 250.0, 10.0)) == 0.0


@settings(max_examples=300, deadline=None)
@given(
    d=st.floats(0.0, 500.0),
    radius=st.floats(1.0, 500.0),
    travel=st.floats(0.0, 1200.0),
)
def test_availability_bounds_property(d, radius, travel):
    prob = availability_probability(LinkGeometry(d, radius, travel))
    assert 0.0 <= prob <= 1.0


@settings(max_examples=200, deadline=None)
@given(
    d=st.floats(1.0, 240.0),
    z1=st.floats(0.0, 600.0),
    dz=st.floats(0.0, 600.0),
)
def test_availability_monotone_in_travel(d, z1, dz):
    radius = 250.0
    lo = availability_probability(LinkGeometry(d, radius, z1))
    hi = availability_probability(LinkGeometry(d, radius, z1 + dz))
    assert hi <= lo + 1e-12


def test_availability_against_monte_carlo_middle_regime():
    rng = random.Random(3)
    for _ in range(100):
        radius = rng.uniform(50.0, 400.0)
        d = rng.uniform(1.0, radius)
        travel = rng.uniform(radius - d, radius + d)
        analytic = availability_probability(LinkGeometry(d, radius, travel))
        assert analytic == pytest.approx(
            oracles.mc_availability(travel, d, radius), abs=3e-3
        )


# --- path_availability -------------------------------------------------------


def test_path_single_link():
    assert path_availability([0.75]) == 0.75


def test_path_dead_link_kills_path():
    assert path_availability([0.9, 0.0, 0.8]) == 0.0


def test_path_two_link_product():
    assert path_availability([0.6012, 0.6012]) == pytest.approx(0.3614, abs=5e-4)


def test_path_empty_rejected():
    with pytest.raises(ValueError):
        path_availability([])


def test_path_bad_probability_rejected():
    with pytest.raises(ValueError):
        path_availability([0.5, 1.5])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_path_never_exceeds_weakest_link(probs):
    assert path_availability(probs) <= min(probs) + 1e-15


# --- forecast_link -----------------------------------------------------------


def test_forecast_link_radial_recession():
    s = samples_from(100.0, 10.0, 0.0)
    est, fc = forecast_link(*s, radius=250.0, horizon=5.0)
    assert est.rel_speed == pytest.approx(10.0, rel=1e-9)
    # Newest sample sits at 120 m; boundary 250 m; 13 s left at 10 m/s.
    assert fc.expiry == pytest.approx(13.0, abs=1e-9)
    # 50 m of travel cannot break a link with 130 m of slack.
    assert fc.prob == 1.0


def test_forecast_link_static_pair():
    s = [DistanceSample(t, 80.0) for t in (0.0, 1.0, 2.0)]
    est, fc = forecast_link(*s, radius=250.0, horizon=100.0)
    assert fc.expiry == math.inf
    assert fc.prob == 1.0


def test_forecast_link_matches_stepped_crossing():
    rng = random.Random(19)
    for _ in range(25):
        d0 = rng.uniform(20.0, 200.0)
        speed = rng.uniform(1.0, 25.0)
        heading = rng.uniform(0.0, 2.0 * math.pi)
        radius = 250.0
        s = samples_from(d0, speed, heading, (0.0, 0.5, 1.0))
        if s[2].dist > radius:
            continue
        est, fc = forecast_link(*s, radius=radius, horizon=3.0)
        t_step = oracles.stepped_boundary_crossing(d0, speed, heading, radius)
        assert t_step is not None
        # fc.expiry counts from the newest sample at t = 1.0.
        assert abs((t_step - 1.0) - fc.expiry) <= 2e-3


def test_forecast_link_rejects_out_of_range():
    s = samples_from(240.0, 10.0, 0.0)
    with pytest.raises(LinkDownError):
        forecast_link(*s, radius=250.0, horizon=5.0)
