"""
End-to-end run of one scenario.

design the drive -> tabulate the pulse response over |g| -> sample atom
transits shot by shot -> sample per-pulse outcomes -> synthesize clicks.

Shots are handed to worker threads in chunks. Every random draw of shot k
comes from a stream keyed by (seed, stage, k), so the result does not depend
on the number of workers or on the chunk size.
"""

import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from scipy.integrate import trapezoid

from shared.metrics import SimulationMetrics

from .analysis.hom import calibrate_dephasing
from .config import ScenarioConfig, config_hash, get_settings
from .fountain.models import AtomTransit, LaunchConfig
from .fountain.transits import calibrate_atom_flux, overlap_fraction, sample_shot
from .photostream.models import ClickOrigin, ClickStream, InterferometerConfig, PhotonBatch, PulseSchedule
from .photostream.synthesis import synthesize_clicks
from .qsim.emission_table import EmissionTable
from .qsim.integrator import evolve_amplitudes
from .qsim.models import OUTCOME_CODES, OutcomeKind, PulseEnvelope, StateHistory
from .qsim.trajectory import CAVITY_PHOTON, repump_cycles
from .shaping.band_limit import band_limit
from .shaping.catalog import catalog_shape
from .shaping.inversion import invert_target
from .shaping.models import InversionResult, ShapeTarget
from .utils.seeding import keyed_rng

logger = structlog.get_logger(__name__)

GROUND_TRUTH_SCHEMA = "ground_truth"
GROUND_TRUTH_VERSION = 1

# independent random streams per stage
TRANSIT_STREAM = 0
EMISSION_STREAM = 1
CLICK_STREAM = 2


@dataclass(frozen=True)
class PulseDesign:
    """Designed drive and its forward simulation for an atom at g0."""

    target: ShapeTarget
    inversion: InversionResult
    drive: PulseEnvelope
    forward: StateHistory

    @property
    def t(self) -> np.ndarray:
        return self.target.t

    @property
    def emission_probability(self) -> float:
        return self.forward.emission_probability

    @property
    def shape_error(self) -> float:
        """Relative L2 distance between the simulated and the target intensity."""
        target = self.target.intensity
        simulated = self.forward.photon_intensity
        return float(np.sqrt(trapezoid((simulated - target) ** 2, self.t) / trapezoid(target**2, self.t)))

    def to_records(self) -> Dict[str, np.ndarray]:
        return {
            "t": self.t,
            "omega": np.real(self.inversion.omega.values),
            "omega_band_limited": np.real(self.drive.values),
            "target_intensity": self.target.intensity,
            "simulated_intensity": self.forward.photon_intensity,
            "excited_population": self.inversion.excited_population,
        }


def design_pulse(config: ScenarioConfig) -> PulseDesign:
    """
    Invert the configured target shape and band-limit the drive.

    Raises:
        InfeasibleTargetError: the target needs more than the |e,0> budget
            (only when pulse.strict_feasibility is set)
    """
    pulse = config.pulse
    target = catalog_shape(
        pulse.shape,
        pulse.duration,
        pulse.p_target,
        dt=pulse.dt,
        amplitudes=pulse.custom_amplitudes,
    )
    inversion = invert_target(config.system, target, strict=pulse.strict_feasibility)
    drive = inversion.omega if pulse.band_limit_hz is None else band_limit(inversion.omega, pulse.band_limit_hz)
    forward = evolve_amplitudes(config.system, drive, config.system.g0)
    design = PulseDesign(target=target, inversion=inversion, drive=drive, forward=forward)
    logger.info(
        "pulse_designed",
        shape=pulse.shape,
        p_target=pulse.p_target,
        p_emit=design.emission_probability,
        feasible=inversion.feasible,
        c_e_floor=inversion.c_e_floor,
        band_limit_hz=pulse.band_limit_hz,
        shape_error=design.shape_error,
    )
    return design


@dataclass
class ShotResult:
    """Photons and ground truth of one shot."""

    shot_index: int
    photons: PhotonBatch
    transits: List[AtomTransit]
    outcome_counts: np.ndarray


@dataclass
class SimulationResult:
    """Everything one run produced."""

    config: ScenarioConfig
    schedule: PulseSchedule
    design: PulseDesign
    table: EmissionTable
    launch: LaunchConfig
    interferometer: InterferometerConfig
    stream: ClickStream
    photons: PhotonBatch
    transits: List[List[AtomTransit]]
    outcome_counts: Dict[str, int]
    metrics: Optional[SimulationMetrics] = field(default=None, repr=False)

    @property
    def config_hash(self) -> str:
        return config_hash(self.config)

    @property
    def overlap_fraction(self) -> float:
        return overlap_fraction(self.transits)

    def ground_truth(self) -> Dict[str, Any]:
        """JSON-ready record of the true transits and emissions."""
        transits = [
            {
                "shot_index": tr.shot_index,
                "atom_index": tr.atom_index,
                "t_enter": tr.t_enter,
                "t_exit": tr.t_exit,
                "peak_coupling": tr.peak_coupling,
                "closest_coupling": tr.closest_coupling,
                "interaction_duration": tr.duration,
                "enters_waist": tr.enters_waist,
                "pulses": len(tr),
            }
            for shot in self.transits
            for tr in shot
        ]
        photons = self.photons
        return {
            "schema": GROUND_TRUTH_SCHEMA,
            "version": GROUND_TRUTH_VERSION,
            "config_hash": self.config_hash,
            "rng_seed": self.config.run.rng_seed,
            "mode": self.config.run.mode,
            "n_shots": self.config.run.n_shots,
            "design_emission_probability": self.design.emission_probability,
            "chain_total": self.config.chain.total,
            "atom_flux": self.launch.atom_flux,
            "overlap_fraction": self.overlap_fraction,
            "dephasing_sigma": self.interferometer.sigma_delta,
            "outcome_counts": self.outcome_counts,
            "transits": transits,
            "emissions": {
                "shot_index": photons.shot_index,
                "pulse_index": photons.pulse_index,
                "t_emit": photons.t_emit,
                "atom_index": photons.atom_index if photons.atom_index is not None else np.zeros(0),
            },
            "clicks_by_origin": {
                origin.name.lower(): int(np.count_nonzero(self.stream.origin == origin))
                for origin in ClickOrigin
            }
            if self.stream.origin is not None
            else {},
        }


class ScenarioSimulator:
    """Runs the shots of one scenario against a fixed pulse response."""

    def __init__(
        self,
        config: ScenarioConfig,
        design: PulseDesign,
        table: EmissionTable,
        launch: LaunchConfig,
        interferometer: InterferometerConfig,
        metrics: Optional[SimulationMetrics] = None,
    ):
        self.config = config
        self.schedule = config.schedule()
        self.design = design
        self.table = table
        self.launch = launch
        self.interferometer = interferometer
        self.metrics = metrics
        self._shape_t = table.t - table.t[0]
        self._lock = threading.Lock()
        self._stats = {"shots": 0, "transits": 0, "photons": 0, "clicks": 0}

    def _emit(
        self,
        shot: int,
        atom_index: int,
        pulse: np.ndarray,
        coupling: np.ndarray,
        rng: np.random.Generator,
        counts: np.ndarray,
    ) -> PhotonBatch:
        ready = repump_cycles(pulse.size, self.config.pulse.p_repump, rng)
        pulse, coupling = pulse[ready], coupling[ready]
        codes, t_emit = self.table.sample(coupling, rng)
        counts += np.bincount(codes, minlength=counts.size)[: counts.size]
        counts[OUTCOME_CODES[OutcomeKind.NO_EVENT]] += int(np.count_nonzero(~ready))
        emitted = codes == CAVITY_PHOTON
        n = int(emitted.sum())
        return PhotonBatch(
            shot_index=np.full(n, shot, dtype=np.int64),
            pulse_index=pulse[emitted],
            t_emit=t_emit[emitted],
            atom_index=np.full(n, atom_index, dtype=np.int64),
            shape_index=self.table.index_for(coupling[emitted]),
            shape_t=self._shape_t,
            shapes=self.table.photon_amplitude,
        )

    def simulate_shot(self, shot: int) -> ShotResult:
        """Outcomes of every gated pulse of one shot."""
        config, schedule = self.config, self.schedule
        seed = config.run.rng_seed
        rng = keyed_rng(seed, EMISSION_STREAM, shot)
        counts = np.zeros(len(OUTCOME_CODES), dtype=np.int64)
        batches: List[PhotonBatch] = []
        transits: List[AtomTransit] = []

        if config.run.mode == "stationary":
            pulse = np.arange(schedule.pulses_per_gate, dtype=np.int64)
            coupling = np.full(pulse.size, config.run.stationary_coupling * config.system.g0)
            batches.append(self._emit(shot, 0, pulse, coupling, rng, counts))
        else:
            transits = sample_shot(
                self.launch,
                config.mode,
                shot,
                (seed, TRANSIT_STREAM),
                config.system.g0,
                schedule.period,
            )
            for transit in transits:
                pulse = transit.pulse_slot - schedule.first_gate_slot
                gated = (pulse >= 0) & (pulse < schedule.pulses_per_gate)
                if not gated.any():
                    continue
                coupling = np.abs(transit.g_of_t[gated])
                batches.append(self._emit(shot, transit.atom_index, pulse[gated], coupling, rng, counts))

        return ShotResult(
            shot_index=shot,
            photons=PhotonBatch.concat(batches),
            transits=transits,
            outcome_counts=counts,
        )

    def simulate_chunk(self, shots: Sequence[int]) -> Tuple[List[ShotResult], ClickStream]:
        """Shots of one worker task, with their clicks."""
        results = [self.simulate_shot(shot) for shot in shots]
        photons = PhotonBatch.concat([r.photons for r in results])
        stream = synthesize_clicks(
            photons,
            self.config.chain,
            self.schedule,
            (self.config.run.rng_seed, CLICK_STREAM),
            interferometer=self.interferometer,
            shots=shots,
        )
        self._record(results, stream)
        return results, stream

    def _record(self, results: Sequence[ShotResult], stream: ClickStream) -> None:
        n_transits = sum(len(r.transits) for r in results)
        n_photons = sum(len(r.photons) for r in results)
        with self._lock:
            self._stats["shots"] += len(results)
            self._stats["transits"] += n_transits
            self._stats["photons"] += n_photons
            self._stats["clicks"] += len(stream)
        if self.metrics is None:
            return
        self.metrics.shots_simulated.inc(len(results))
        self.metrics.transits_sampled.inc(n_transits)
        for result in results:
            for transit in result.transits:
                if transit.enters_waist:
                    self.metrics.transit_duration.observe(transit.duration)
            for kind, code in OUTCOME_CODES.items():
                self.metrics.emission_outcomes.labels(channel=kind.value).inc(int(result.outcome_counts[code]))
        if stream.origin is not None:
            for detector in (0, 1):
                for origin in ClickOrigin:
                    n = int(np.count_nonzero((stream.detector == detector) & (stream.origin == origin)))
                    self.metrics.clicks_synthesized.labels(detector=f"D{detector + 1}", origin=origin.name.lower()).inc(n)

    def get_stats(self) -> Dict[str, int]:
        with self._lock:
            return dict(self._stats)

    def run(self, threads: int = 1) -> SimulationResult:
        run = self.config.run
        shots = list(range(run.n_shots))
        chunks = [shots[i : i + run.shots_per_task] for i in range(0, len(shots), run.shots_per_task)]
        logger.info("simulation_started", shots=run.n_shots, chunks=len(chunks), threads=threads, mode=run.mode)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outputs = list(pool.map(self.simulate_chunk, chunks))
        else:
            outputs = [self.simulate_chunk(chunk) for chunk in chunks]

        results = [r for chunk_results, _ in outputs for r in chunk_results]
        stream = ClickStream.merge([s for _, s in outputs])
        counts = np.sum([r.outcome_counts for r in results], axis=0) if results else np.zeros(len(OUTCOME_CODES))
        outcome_counts = {kind.value: int(counts[code]) for kind, code in OUTCOME_CODES.items()}

        logger.info("simulation_finished", **self.get_stats(), outcomes=outcome_counts)
        return SimulationResult(
            config=self.config,
            schedule=self.schedule,
            design=self.design,
            table=self.table,
            launch=self.launch,
            interferometer=self.interferometer,
            stream=stream,
            photons=PhotonBatch.concat([r.photons for r in results]),
            transits=[r.transits for r in results],
            outcome_counts=outcome_counts,
            metrics=self.metrics,
        )


def calibrated_interferometer(config: ScenarioConfig, table: EmissionTable) -> InterferometerConfig:
    """Interferometer with σ_Δ tuned to run.target_visibility, when set."""
    interferometer = config.interferometer
    if config.run.target_visibility is None:
        return interferometer
    intensity = table.intensity(config.run.stationary_coupling * config.system.g0)
    sigma = calibrate_dephasing(table.t, intensity, config.run.target_visibility)
    return interferometer.model_copy(update={"dephasing_sigma": sigma})


def calibrated_launch(config: ScenarioConfig) -> LaunchConfig:
    """Launch with atom_flux tuned to run.target_overlap_fraction, when set."""
    launch = config.launch
    if config.run.mode != "fountain" or config.run.target_overlap_fraction is None:
        return launch
    flux = calibrate_atom_flux(
        launch,
        config.mode,
        config.run.target_overlap_fraction,
        rng_seed=(config.run.rng_seed, TRANSIT_STREAM),
        g0=config.system.g0,
        pulse_period=config.pulse.period,
    )
    return launch.model_copy(update={"atom_flux": flux})


def simulate_scenario(
    config: ScenarioConfig,
    threads: Optional[int] = None,
    metrics: Optional[SimulationMetrics] = None,
) -> SimulationResult:
    """
    Simulate the click stream of a scenario.

    Args:
        config: Validated scenario
        threads: Worker threads (defaults to CPS_THREADS)
        metrics: Metrics to update while running

    Returns:
        SimulationResult with the sorted click stream and its ground truth
    """
    threads = threads or get_settings().threads
    design = design_pulse(config)
    table = EmissionTable(config.system, design.drive, n_couplings=config.pulse.n_couplings)
    simulator = ScenarioSimulator(
        config,
        design,
        table,
        calibrated_launch(config),
        calibrated_interferometer(config, table),
        metrics=metrics,
    )
    if metrics is not None:
        metrics.describe_run("click_stream", config_hash(config), config.run.rng_seed)
    return simulator.run(threads=threads)
