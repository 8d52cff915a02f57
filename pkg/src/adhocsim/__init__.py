"""Deterministic MANET/VANET simulator with distance-only link forecasting."""

from adhocsim.linkmath import (
    DistanceSample,
    LinkForecast,
    LinkGeometry,
    MotionEstimate,
    availability_probability,
    estimate_speed,
    forecast_link,
    link_expiry_time,
    path_availability,
)

__all__ = [
    "DistanceSample",
    "LinkForecast",
    "LinkGeometry",
    "MotionEstimate",
    "availability_probability",
    "estimate_speed",
    "forecast_link",
    "link_expiry_time",
    "path_availability",
]
