"""Metrics module using Prometheus."""

from .prometheus_metrics import SimulationMetrics

__all__ = [
    "SimulationMetrics",
]
