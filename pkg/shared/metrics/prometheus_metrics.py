"""Prometheus metrics definitions and helpers.

Simulation runs are batch jobs, so metrics live on a private registry and are
dumped to a textfile next to the run outputs instead of being scraped.
"""

from pathlib import Path
from typing import Optional

from prometheus_client import (
    CollectorRegistry,
    Counter,
    Histogram,
    Info,
    generate_latest,
    write_to_textfile,
)


class SimulationMetrics:
    """Counters and histograms for one simulation run."""

    def __init__(self, registry: Optional[CollectorRegistry] = None) -> None:
        """Initialize simulation metrics.

        Args:
            registry: Prometheus registry to use (a fresh one by default)
        """
        self.registry = registry if registry is not None else CollectorRegistry()

        self.run_info = Info(
            "cps_run",
            "Schema version and config hash of the run",
            registry=self.registry,
        )

        self.shots_simulated = Counter(
            "cps_shots_simulated_total",
            "Number of fountain shots simulated",
            registry=self.registry,
        )

        self.transits_sampled = Counter(
            "cps_transits_sampled_total",
            "Number of atom transits through the cavity mode",
            registry=self.registry,
        )

        self.emission_outcomes = Counter(
            "cps_emission_outcomes_total",
            "Per-pulse emission outcomes by channel",
            ["channel"],
            registry=self.registry,
        )

        self.clicks_synthesized = Counter(
            "cps_clicks_synthesized_total",
            "Detector clicks written to the stream",
            ["detector", "origin"],
            registry=self.registry,
        )

        # 10 us .. 10 ms
        self.transit_duration = Histogram(
            "cps_transit_interaction_duration_seconds",
            "Time each transit spends inside the mode waist",
            buckets=[1e-5, 3e-5, 1e-4, 2e-4, 3e-4, 5e-4, 1e-3, 2e-3, 4e-3, 1e-2],
            registry=self.registry,
        )

    def describe_run(self, schema: str, config_hash: str, seed: int) -> None:
        """Attach run identity to the metrics dump."""
        self.run_info.info({"schema": schema, "config_hash": config_hash, "seed": str(seed)})

    def write(self, path: Path) -> None:
        """Write the registry in Prometheus text format.

        Args:
            path: Destination file
        """
        write_to_textfile(str(path), self.registry)

    def render(self) -> bytes:
        """Render the registry in Prometheus text format."""
        return generate_latest(self.registry)
