"""
Scenario commands: design a pulse, simulate a run, analyze a click stream,
report statistics against the published values.

Each command reads a validated ScenarioConfig, writes its artifacts under
the output directory and stamps them with the config hash.
"""

from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, TypeVar, Union

import numpy as np
import structlog

from shared.logging import bind_context
from shared.metrics import SimulationMetrics

from ..analysis.correlation import (
    central_peak_ratio,
    cross_correlate,
    fit_transit_envelope,
    peak_areas,
    split_detectors,
)
from ..analysis.emission_fit import fit_emission_probability
from ..analysis.hom import hom_visibility
from ..analysis.models import CorrelationHistogram, SummaryRecord, TransitSelection
from ..analysis.postselect import expected_counts, recover_shape, select_transits, shape_agreement
from ..analysis.summary import compare_to_reference, read_summary, write_summary
from ..config import ScenarioConfig, config_hash, load_scenario
from ..photostream.click_format import read_clicks, write_clicks
from ..photostream.models import ClickStream
from ..pipeline import PulseDesign, SimulationResult, design_pulse, simulate_scenario
from ..shaping.catalog import spatial_profile
from ..storage.documents import read_json, write_json
from ..storage.tables import write_table
from ..utils.error_handler import InsufficientStatisticsError

logger = structlog.get_logger(__name__)

PathLike = Union[str, Path]
T = TypeVar("T")

CLICK_FILE_NAMES = {"text": "clicks.csv", "binary": "clicks.bin"}


def prepare_scenario(
    config_path: PathLike,
    command: str,
    seed: Optional[int] = None,
    out: Optional[PathLike] = None,
    click_format: Optional[str] = None,
    n_shots: Optional[int] = None,
) -> ScenarioConfig:
    """Load a scenario, apply command-line overrides and bind the run context."""
    config = load_scenario(config_path)
    overrides: Dict[str, Any] = {}
    if seed is not None:
        overrides["rng_seed"] = seed
    if out is not None:
        overrides["output_dir"] = str(out)
    if click_format is not None:
        overrides["format"] = click_format
    if n_shots is not None:
        overrides["n_shots"] = n_shots
    if overrides:
        config = config.with_run(**overrides)
    bind_context(command=command, config_hash=config_hash(config), rng_seed=config.run.rng_seed)
    return config


def _output_dir(config: ScenarioConfig) -> Path:
    out = Path(config.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_design_pulse(config: ScenarioConfig) -> PulseDesign:
    """
    Invert the target shape and write the drive next to the forward-simulated photon.

    Writes pulse_design.tsv, spatial_profile.tsv and design_report.json.

    Raises:
        InfeasibleTargetError: strict feasibility and an exhausted |e,0> budget
    """
    out = _output_dir(config)
    digest = config_hash(config)
    design = design_pulse(config)

    write_table(out / "pulse_design.tsv", "pulse_design", design.to_records(), digest)
    profile = spatial_profile(design.target.phi_target, config.pulse.refractive_index)
    write_table(out / "spatial_profile.tsv", "spatial_profile", profile.to_records(), digest)
    write_json(
        out / "design_report.json",
        {
            "schema": "design_report",
            "version": 1,
            "config_hash": digest,
            "shape": config.pulse.shape,
            "p_target": config.pulse.p_target,
            "feasible": design.inversion.feasible,
            "c_e_floor": design.inversion.c_e_floor,
            "t_exhausted": design.inversion.t_exhausted,
            "band_limit_hz": config.pulse.band_limit_hz,
            "simulated_emission_probability": design.emission_probability,
            "relative_shape_error": design.shape_error,
            "omega_max": float(np.max(np.abs(design.drive.values))),
        },
    )
    logger.info("pulse_design_written", out=str(out), feasible=design.inversion.feasible)
    return design


def cmd_simulate(
    config: ScenarioConfig,
    threads: Optional[int] = None,
    metrics: Optional[SimulationMetrics] = None,
) -> SimulationResult:
    """
    Run the scenario end to end.

    Writes the click stream (clicks.csv or clicks.bin), ground_truth.json
    and metrics.prom.
    """
    out = _output_dir(config)
    digest = config_hash(config)
    metrics = metrics or SimulationMetrics()
    result = simulate_scenario(config, threads=threads, metrics=metrics)
    schedule = result.schedule

    write_clicks(
        result.stream,
        out / CLICK_FILE_NAMES[config.run.format],
        format=config.run.format,
        metadata={
            "config_hash": digest,
            "rng_seed": config.run.rng_seed,
            "n_shots": config.run.n_shots,
            "interferometer": config.interferometer.kind,
            "polarization": config.interferometer.polarization,
            "period_s": schedule.period,
            "shot_period_s": schedule.shot_period,
            "gate_start_s": schedule.gate_start,
            "gate_duration_s": schedule.gate_duration,
        },
    )
    write_json(out / "ground_truth.json", result.ground_truth())
    metrics.write(out / "metrics.prom")
    logger.info("simulation_written", out=str(out), clicks=len(result.stream))
    return result


def _optional(statistic: str, func: Callable[..., T], *args: Any, **kwargs: Any) -> Optional[T]:
    try:
        return func(*args, **kwargs)
    except InsufficientStatisticsError as e:
        logger.warning("statistic_skipped", statistic=statistic, reason=str(e))
        return None


def _write_histogram(path: Path, schema: str, hist: CorrelationHistogram, digest: str) -> None:
    records = dict(hist.to_records())
    records["g2"] = np.nan_to_num(hist.normalized().counts, nan=0.0)
    write_table(path, schema, records, digest)


def _analyze_hbt(
    stream: ClickStream, config: ScenarioConfig, design: PulseDesign, out: Path, digest: str
) -> List[SummaryRecord]:
    schedule = config.schedule()
    analysis = config.analysis
    period = schedule.period
    records: List[SummaryRecord] = []

    d1, d2 = split_detectors(stream)
    hist = cross_correlate(
        d1,
        d2,
        analysis.g2_bin_width,
        analysis.g2_max_tau,
        schedule=schedule,
        dark_rate_hz=config.chain.dark_rate_hz,
    )
    _write_histogram(out / "g2_histogram.tsv", "g2_histogram", hist, digest)
    ks, areas, errors = peak_areas(hist, period)
    write_table(
        out / "g2_peaks.tsv",
        "g2_peaks",
        {"k": ks, "tau_s": ks * period, "area": areas, "err": errors},
        digest,
    )

    ratio = _optional("g2_central_ratio", central_peak_ratio, hist, period, n_side=analysis.side_peaks)
    if ratio is not None:
        central_pairs = int(hist.counts[hist.window(-0.5 * period, 0.5 * period)].sum())
        records.append(SummaryRecord("g2_central_ratio", ratio[0], ratio[1], central_pairs))

    envelope = _optional("transit_envelope_fwhm", fit_transit_envelope, hist, period)
    if envelope is not None:
        records.append(SummaryRecord("transit_envelope_fwhm", envelope[0], envelope[1], int(hist.counts.sum()), "s"))

    model_t, model = design.t - design.t[0], design.forward.photon_intensity
    shapes = {"all": stream}
    for threshold in analysis.selection_thresholds:
        selected, _ = select_transits(stream, TransitSelection(analysis.selection_bin_width, threshold))
        shapes[f"t{threshold}"] = selected
    for label, clicks in shapes.items():
        shape = recover_shape(clicks, schedule, n_bins=analysis.shape_bins)
        table = dict(shape.to_records())
        table["model_counts"] = expected_counts(shape, model_t, model)
        write_table(out / f"shape_{label}.tsv", "shape_histogram", table, digest)
        agreement = _optional(f"shape_{label}", shape_agreement, shape, model_t, model)
        if agreement is not None:
            records.append(SummaryRecord(f"shape_chi2_p_{label}", agreement[1], None, shape.total))

    fit = _optional(
        "p_max",
        fit_emission_probability,
        stream,
        analysis.k_pulses,
        config.chain,
        schedule,
        min_events=analysis.min_conditioning_events,
    )
    if fit is not None:
        write_table(out / "emission_fit.tsv", "emission_fit", fit.to_records(), digest)
        chain = config.chain
        detection = chain.eta_collection * chain.eta_detector
        records += [
            SummaryRecord("p_max_raw", fit.p_max_raw, fit.p_max_raw_err, fit.n_conditioning),
            SummaryRecord(
                "p_max_outcoupled", fit.p_max_raw / detection, fit.p_max_raw_err / detection, fit.n_conditioning
            ),
            SummaryRecord("p_max_corrected", fit.p_max_corrected, fit.p_max_corrected_err, fit.n_conditioning),
        ]
        if fit.low_confidence:
            logger.warning("emission_fit_low_confidence", conditioning_events=fit.n_conditioning)
    return records


def _analyze_hom(
    stream: ClickStream,
    config: ScenarioConfig,
    out: Path,
    digest: str,
    perpendicular: Optional[ClickStream],
) -> List[SummaryRecord]:
    schedule = config.schedule()
    analysis = config.analysis

    def histogram(clicks: ClickStream) -> CorrelationHistogram:
        d1, d2 = split_detectors(clicks)
        return cross_correlate(
            d1,
            d2,
            analysis.hom_bin_width,
            analysis.hom_max_tau,
            schedule=schedule,
            dark_rate_hz=config.chain.dark_rate_hz,
        )

    hist = histogram(stream)
    _write_histogram(out / "hom_histogram.tsv", "hom_histogram", hist, digest)
    if perpendicular is None:
        logger.info("hom_visibility_skipped", reason="no perpendicular stream given")
        return []

    hist_perp = histogram(perpendicular)
    _write_histogram(out / "hom_histogram_perpendicular.tsv", "hom_histogram", hist_perp, digest)
    result = hom_visibility(hist, hist_perp, schedule.period)
    central = hist.window(-0.5 * schedule.period, 0.5 * schedule.period)
    write_table(
        out / "hom_ratio.tsv",
        "hom_ratio",
        {
            "tau_s": hist.centers[central],
            "parallel": hist.counts[central],
            "perpendicular": hist_perp.counts[central],
        },
        digest,
    )
    n_events = int(result.area_parallel + result.area_perpendicular)
    records = [SummaryRecord("hom_visibility", result.visibility, result.visibility_err, n_events)]
    if result.coherence_time is not None:
        records.append(
            SummaryRecord("coherence_time", result.coherence_time, result.coherence_time_err, n_events, "s")
        )
    return records


def cmd_analyze(
    config: ScenarioConfig,
    stream_path: PathLike,
    perpendicular_path: Optional[PathLike] = None,
) -> List[SummaryRecord]:
    """
    Run the statistics suite on a click file and write one table per figure
    plus summary.json.

    HBT scenarios produce the g² histogram, its peak areas, arrival-time
    histograms (unselected and per threshold) and the emission fit. HOM
    scenarios produce the coincidence histogram and, given the perpendicular
    stream, the visibility and coherence time.
    """
    out = _output_dir(config)
    digest = config_hash(config)
    stream, header = read_clicks(stream_path)
    if header.get("config_hash") not in (None, digest):
        logger.warning("stream_config_mismatch", stream_hash=header.get("config_hash"), config_hash=digest)

    if config.interferometer.kind == "HOM":
        perpendicular = read_clicks(perpendicular_path)[0] if perpendicular_path is not None else None
        records = _analyze_hom(stream, config, out, digest, perpendicular)
    else:
        records = _analyze_hbt(stream, config, design_pulse(config), out, digest)

    write_summary(
        records,
        out / "summary.json",
        digest,
        extra={"stream": Path(stream_path).name, "clicks": len(stream), "interferometer": config.interferometer.kind},
    )
    return records


def cmd_report(summary_path: PathLike, ground_truth_path: Optional[PathLike] = None) -> List[Dict[str, Any]]:
    """Rows of the statistics next to the published reference values."""
    records, _ = read_summary(summary_path)
    if ground_truth_path is not None:
        truth = read_json(ground_truth_path)
        if "overlap_fraction" in truth:
            records.append(
                SummaryRecord(
                    "two_atom_overlap_fraction",
                    float(truth["overlap_fraction"]),
                    None,
                    len(truth.get("transits", [])),
                )
            )
    return compare_to_reference(records)


def format_report(rows: List[Dict[str, Any]]) -> str:
    """Fixed-width text rendering of :func:`cmd_report` rows."""
    lines = [f"{'statistic':<26}{'value':>14}{'uncertainty':>14}{'reference':>14}{'ref. unc.':>12}  ok"]
    for row in rows:
        unc = row.get("uncertainty")
        ref = row.get("reference")
        ref_unc = row.get("reference_uncertainty")
        ok = row.get("within_reference")
        lines.append(
            f"{row['statistic']:<26}{row['value']:>14.6g}"
            f"{'' if unc is None else format(unc, '.3g'):>14}"
            f"{'' if ref is None else format(ref, '.4g'):>14}"
            f"{'' if ref_unc is None else format(ref_unc, '.3g'):>12}"
            f"  {'' if ok is None else ('yes' if ok else 'no')}"
        )
    return "\n".join(lines)
