import csv
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy
import yaml

from .coordinate_interference import (
    correlated_pdf,
    fringe_period,
    marginal_particle_pdf,
    overlap_visibility,
    pdf_cqi_3body,
    pdf_cqi_4body,
    pdf_sqi_3body,
)
from .core import DomainError, Model, ScatteringScenario, UnitMode, UnitSystem, make_unit_system
from .kinematics import (
    reduced_mass,
    relative_wavevector,
    solve_collective_recoil,
    solve_two_body_recoil,
    solve_unequal_scatterer_recoil,
    wavevector_ratio_massive,
    wavevector_ratio_photon,
)
from .momentum_interference import (
    MomentumScenario,
    momentum_transition_wavelength,
    p1_fringe_visibility,
    pdf_cqi_momentum,
    pdf_sqi_momentum,
    sqi_visibility,
)
from .oracle import reflection_spectrum
from .transitions import (
    DimerSpec,
    Probe,
    SlabSpec,
    TransitionReport,
    dimer_transition,
    slab_transition,
)


class ConfigError(ValueError):
    """
    Raised when a run configuration cannot be used as is.
    """


REQUIRED = object()

SCENARIO_KEYS = {"m": REQUIRED, "v": REQUIRED, "M": REQUIRED, "V": REQUIRED}

# Per command, the accepted physics parameters and their defaults
COMMAND_KEYS: dict[str, dict[str, Any]] = {
    "recoil": {**SCENARIO_KEYS, "model": "SQI", "n_s": 2, "M3": None, "V3": None, "nu": None},
    "pdf-coordinate": {
        **SCENARIO_KEYS,
        "x0": REQUIRED,
        "model": "SQI",
        "separation": None,
        "particles": 1,
        "d": None,
        "l_coh": None,
        "L_coh": None,
        "elapsed": 0.0,
    },
    "pdf-momentum": {
        **SCENARIO_KEYS,
        "x0": REQUIRED,
        "dp_s": REQUIRED,
        "model": "SQI",
        "dp_p": None,
        "p1": 0.0,
        "p2": None,
        "p3": None,
    },
    "marginal": {
        **SCENARIO_KEYS,
        "x0": REQUIRED,
        "space": "coordinate",
        "dp_s": None,
        "periods": 10,
        "samples": 401,
        "l_coh": None,
        "L_coh": None,
        "elapsed": 0.0,
    },
    "transitions": {
        "kind": REQUIRED,
        "D": None,
        "M": None,
        "m_atom": None,
        "n_g": None,
        "T": None,
        "probe": "photon",
        "nu": None,
        "m_n": None,
        "d0": None,
        "dL": None,
        "L_c": None,
        "wavelength": None,
    },
    "oracle": {
        **SCENARIO_KEYS,
        "x0": REQUIRED,
        "g": REQUIRED,
        "k_min": None,
        "k_max": None,
        "count": 1024,
    },
    "compare": {
        **SCENARIO_KEYS,
        "x0": REQUIRED,
        "l_coh": None,
        "L_coh": None,
        "elapsed": 0.0,
        "L_c": None,
        "wavelength": None,
    },
}

# Keys holding text rather than numbers
TEXT_KEYS = {"model", "space", "kind", "probe"}

RESERVED_KEYS = {"command", "units", "output", "sweep"}

DEFAULT_UNITS = {"transitions": UnitMode.SI}


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    start: float
    stop: float
    count: int
    scale: str = "linear"

    def __post_init__(self):
        if self.count < 2:
            raise ConfigError(f"sweep count must be at least 2, got {self.count}")
        if self.scale not in ("linear", "log"):
            raise ConfigError(f"sweep scale must be 'linear' or 'log', got {self.scale!r}")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ConfigError("log sweeps need strictly positive bounds")

    def values(self) -> numpy.ndarray:
        if self.scale == "log":
            return numpy.geomspace(self.start, self.stop, self.count)
        return numpy.linspace(self.start, self.stop, self.count)


@dataclass(frozen=True)
class RunConfig:
    command: str
    parameters: dict[str, Any]
    sweep: SweepSpec | None = None
    output: str | None = None
    units: UnitMode = UnitMode.Natural
    source: str | None = field(default=None, compare=False)


def _number(key: str, value: Any) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"'{key}' must be a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            pass
    raise ConfigError(f"'{key}' must be a number, got {value!r}")


def to_sweep(sweep: Any, command: str) -> SweepSpec | None:
    if sweep is None:
        return None
    if not isinstance(sweep, dict):
        raise ConfigError("'sweep' key must be a dictionary")
    for key in sweep:
        if key not in ("parameter", "start", "stop", "count", "scale"):
            raise ConfigError(f"unknown sweep key '{key}'")
    for key in ("parameter", "start", "stop", "count"):
        if key not in sweep:
            raise ConfigError(f"sweep is missing '{key}'")
    parameter = sweep["parameter"]
    if parameter not in COMMAND_KEYS[command] or parameter in TEXT_KEYS:
        raise ConfigError(f"cannot sweep '{parameter}' for command '{command}'")
    count = sweep["count"]
    if not isinstance(count, int) or isinstance(count, bool):
        raise ConfigError(f"sweep count must be an integer, got {count!r}")
    return SweepSpec(
        parameter=parameter,
        start=_number("start", sweep["start"]),
        stop=_number("stop", sweep["stop"]),
        count=count,
        scale=str(sweep.get("scale", "linear")),
    )


class CqiStudioApplication:
    """
    Batch front end: loads run configurations and writes their CSV results.
    Output path and unit mode given here override those of the configuration.
    """

    def __init__(self, units: str | None = None, output: str | None = None):
        self.units = units
        self.output = output

    def load_file(self, path: str) -> RunConfig:
        if not os.path.isfile(path):
            raise ConfigError(f"File {path} does not exist")
        if not path.endswith((".yaml", ".yml")):
            raise ConfigError(f"File {path} is not a YAML file")
        with open(path, "r", encoding="utf-8") as f:
            try:
                settings = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError(f"File {path} is not valid YAML: {e}") from None
        return self.load_config(settings, source=path)

    def load_config(self, settings: Any, source: str | None = None) -> RunConfig:
        if not isinstance(settings, dict):
            raise ConfigError("configuration must be a mapping of keys to values")

        command = settings.get("command")
        if command not in COMMAND_KEYS:
            raise ConfigError(
                f"'command' must be one of {', '.join(COMMAND_KEYS)}, got {command!r}"
            )
        accepted = COMMAND_KEYS[command]

        for key in settings:
            if key not in accepted and key not in RESERVED_KEYS:
                raise ConfigError(f"unknown key '{key}' for command '{command}'")

        sweep = to_sweep(settings.get("sweep"), command)

        parameters: dict[str, Any] = {}
        for key, default in accepted.items():
            value = settings.get(key, default)
            if value is REQUIRED or (value is None and default is REQUIRED):
                if sweep is not None and sweep.parameter == key:
                    continue
                raise ConfigError(f"missing required key '{key}' for command '{command}'")
            if value is not None and key not in TEXT_KEYS:
                value = _number(key, value)
            parameters[key] = value

        units = self.units or settings.get("units") or DEFAULT_UNITS.get(command, UnitMode.Natural)
        try:
            units = UnitMode(units.lower()) if isinstance(units, str) else UnitMode(units)
        except ValueError:
            raise ConfigError(f"'units' must be 'natural' or 'si', got {units!r}") from None

        output = self.output or settings.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("'output' must be a path")

        return RunConfig(command, parameters, sweep, output, units, source)

    def run(self, config: RunConfig) -> list[str]:
        """
        Evaluates every sweep point, then writes the CSV file(s). Nothing is
        written when a point fails. Returns the written paths.
        """
        logger = logging.getLogger(__name__)
        if config.output is None:
            raise ConfigError("no output path: set 'output' or pass --out")

        units = make_unit_system(config.units)
        command = COMMANDS[config.command]
        points = (
            [dict(config.parameters)]
            if config.sweep is None
            else [
                {**config.parameters, config.sweep.parameter: float(value)}
                for value in config.sweep.values()
            ]
        )
        if config.sweep is not None and not command.sweepable:
            raise ConfigError(f"command '{config.command}' does not support sweeps")

        tables: dict[str, list[dict[str, Any]]] = {}
        for params in points:
            results = command.handler(params, units)
            for suffix, rows in results.items():
                for row in rows:
                    if config.sweep is not None:
                        name = f"{config.sweep.parameter}[{units.label}]"
                        row = {name: params[config.sweep.parameter], **row}
                    tables.setdefault(suffix, []).append(row)

        paths = []
        stem, ext = os.path.splitext(config.output)
        for suffix, rows in tables.items():
            path = config.output if suffix == "" else f"{stem}.{suffix}{ext or '.csv'}"
            write_csv(path, rows)
            paths.append(path)
            logger.info("Wrote %d rows to %s", len(rows), path)
        return paths


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, int, numpy.floating, numpy.integer)):
        return f"{float(value):.17g}"
    if value is None:
        return ""
    return str(value)


def write_csv(path: str, rows: list[dict[str, Any]]):
    header = list(rows[0]) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(row.get(name)) for name in header])


def _model(params: dict[str, Any]) -> Model:
    try:
        return Model(str(params["model"]).upper())
    except ValueError:
        raise ConfigError(f"'model' must be SQI or CQI, got {params['model']!r}") from None


def _require(params: dict[str, Any], *keys: str, context: str):
    for key in keys:
        if params.get(key) is None:
            raise ConfigError(f"missing required key '{key}' for {context}")


def _scenario(params: dict[str, Any], units: UnitSystem, model: Model) -> ScatteringScenario:
    return ScatteringScenario.three_body(
        params["m"],
        params["v"],
        params["M"],
        params["V"],
        params["x0"],
        model=model,
        l_coh=params.get("l_coh"),
        L_coh=params.get("L_coh"),
        elapsed=params.get("elapsed") or 0.0,
        units=units,
    )


def recoil_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    m, v, M, V = params["m"], params["v"], params["M"], params["V"]
    label = units.label
    model = _model(params)
    unequal = model is Model.CQI and (params["M3"] is not None or params["V3"] is not None)
    if model is Model.SQI:
        solution = solve_two_body_recoil(m, v, M, V, units)
    elif unequal:
        _require(params, "M3", "V3", context="unequal scatterers")
        solution = solve_unequal_scatterer_recoil(m, v, M, V, params["M3"], params["V3"], units)
    else:
        solution = solve_collective_recoil(m, v, M, V, int(params["n_s"]), units)

    row: dict[str, Any] = {
        "branch": solution.branch,
        f"v1r[{label}]": solution.v_pr[0],
        f"V2r[{label}]": solution.V_sr[0],
    }
    if unequal:
        row[f"V3r[{label}]"] = solution.V_sr[1]
    row[f"k1r[{label}]"] = solution.k_pr[0]
    row[f"K2r[{label}]"] = solution.K_sr[0]
    if unequal:
        row[f"K3r[{label}]"] = solution.K_sr[1]

    shift = wavevector_ratio_massive(m, M, v, V, units)
    row["ratio"] = shift.ratio
    row["ratio_cross_check"] = shift.cross_check
    if params["nu"] is not None:
        row["photon_ratio"] = wavevector_ratio_photon(params["nu"], M, units)
    dp, de = solution.conservation_residuals()
    row["momentum_residual"] = dp
    row["energy_residual"] = de
    return {"": [row]}


def pdf_coordinate_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    label = units.label
    model = _model(params)
    particles = int(params["particles"])
    if particles == 2:
        if model is not Model.CQI:
            raise ConfigError("two particles are only modelled collectively (model: CQI)")
        scenario = ScatteringScenario.four_body(
            params["m"], params["v"], params["M"], params["V"], params["x0"],
            params["d"] or params["x0"], units,
        )
        value = pdf_cqi_4body(params["m"], params["M"], params["v"], params["V"], params["x0"], units)
        visibility = 1.0
    elif particles == 1:
        scenario = _scenario(params, units, model)
        visibility = correlated_pdf(scenario).visibility
        if model is Model.SQI:
            separation = params["separation"]
            separation = params["x0"] if separation is None else separation
            value = pdf_sqi_3body(scenario, 0.0, 0.0, separation)
        else:
            value = pdf_cqi_3body(scenario)
    else:
        raise ConfigError(f"'particles' must be 1 or 2, got {particles}")
    return {
        "": [
            {
                f"pdf_{model.value.lower()}": float(value),
                "visibility": visibility,
                f"fringe_period[{label}]": fringe_period(model, scenario),
            }
        ]
    }


def _momentum_scenario(params: dict[str, Any], units: UnitSystem) -> MomentumScenario:
    return MomentumScenario(
        params["m"], params["v"], params["M"], params["V"], params["x0"],
        params["dp_s"], params.get("dp_p"), units,
    )


def pdf_momentum_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    model = _model(params)
    scenario = _momentum_scenario(params, units)
    shift = scenario.recoil_shift(model)
    centre = scenario.scatterer_state().p0 + (shift / 2 if model is Model.SQI else shift)
    p2 = centre if params["p2"] is None else params["p2"]
    p3 = centre if params["p3"] is None else params["p3"]
    pdf = pdf_sqi_momentum if model is Model.SQI else pdf_cqi_momentum
    value = pdf(scenario, params["p1"], p2, p3)
    visibility = (
        sqi_visibility(scenario.m, scenario.v, scenario.M, scenario.dp_s, scenario.V, units).visibility
        if model is Model.SQI
        else 1.0
    )
    return {
        "": [
            {
                f"pdf_{model.value.lower()}": float(value),
                f"recoil_shift[{units.label}]": shift,
                "visibility": visibility,
            }
        ]
    }


def marginal_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    space = str(params["space"]).lower()
    if space == "coordinate":
        row: dict[str, Any] = {}
        for model in Model:
            result = marginal_particle_pdf(
                model,
                _scenario(params, units, model),
                numpy.array([-1.0, 1.0]) * params["x0"],
                periods=int(params["periods"]),
                samples=int(params["samples"]),
            )
            row[f"marginal_{model.value.lower()}"] = float(result.grid.values[0])
            row[f"converged_{model.value.lower()}"] = result.converged
        return {"": [row]}
    if space == "momentum":
        _require(params, "dp_s", context="momentum marginals")
        scenario = _momentum_scenario(params, units)
        closed_form = sqi_visibility(scenario.m, scenario.v, scenario.M, scenario.dp_s, scenario.V, units)
        return {
            "": [
                {
                    "visibility_sqi": p1_fringe_visibility(Model.SQI, scenario),
                    "visibility_cqi": p1_fringe_visibility(Model.CQI, scenario),
                    "visibility_closed_form": closed_form.visibility,
                    f"recoil_shift[{units.label}]": closed_form.recoil_shift,
                    f"mass_scaled_threshold[{units.label}]": closed_form.mass_scaled_threshold,
                }
            ]
        }
    raise ConfigError(f"'space' must be 'coordinate' or 'momentum', got {space!r}")


def transitions_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    kind = str(params["kind"]).lower()
    if kind == "slab":
        _require(params, "D", "M", "m_atom", "n_g", "T", context="slab transitions")
        try:
            probe = Probe(str(params["probe"]).lower())
        except ValueError:
            raise ConfigError(f"'probe' must be photon or neutron, got {params['probe']!r}") from None
        if probe is Probe.Photon:
            if params["nu"] is None and params["wavelength"] is not None:
                params = {**params, "nu": units.c / params["wavelength"]}
            _require(params, "nu", context="photon probes")
        spec = SlabSpec(
            D=params["D"],
            M=params["M"],
            m_atom=params["m_atom"],
            n_g=params["n_g"],
            T=params["T"],
            probe=probe,
            nu=params["nu"],
            **({"m_n": params["m_n"]} if params["m_n"] is not None else {}),
        )
        report = slab_transition(spec, units)
    elif kind == "dimer":
        _require(params, "d0", "dL", "wavelength", context="dimer transitions")
        report = dimer_transition(DimerSpec(params["d0"], params["dL"], params["wavelength"]), units)
    elif kind == "momentum":
        _require(params, "L_c", context="momentum transitions")
        report = momentum_transition_wavelength(params["L_c"], params["wavelength"])
    else:
        raise ConfigError(f"'kind' must be slab, dimer or momentum, got {kind!r}")
    return {"": [report.as_row()]}


def oracle_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    label = units.label
    m, v, M, V, x0 = params["m"], params["v"], params["M"], params["V"], params["x0"]
    scenario = _scenario(params, units, Model.CQI)
    k_rel = relative_wavevector(m, 2 * M, v, V, units)
    if k_rel == 0:
        raise DomainError("no relative motion: the spectrum has no reference wavevector")
    # At least eight fringes of the spectrum around the relative wavevector
    half = max(0.5 * abs(k_rel), 4 * math.pi / x0)
    k_min = params["k_min"] if params["k_min"] is not None else max(abs(k_rel) - half, 0.05 * abs(k_rel))
    k_max = params["k_max"] if params["k_max"] is not None else abs(k_rel) + half
    k = numpy.linspace(k_min, k_max, int(params["count"]))

    mu = reduced_mass(m, 2 * M)
    spectrum = reflection_spectrum(k, params["g"], x0, mu, units)
    rows = [
        {f"k[{label}]": ki, "reflectance": r, "normalized": n}
        for ki, r, n in zip(spectrum.k, spectrum.reflectance, spectrum.normalized)
    ]
    closed_form = fringe_period(Model.CQI, scenario)
    separation = spectrum.separation_period(k_rel)
    periods = {
        f"period_k[{label}]": spectrum.period(),
        f"separation_period[{label}]": separation,
        f"closed_form_period[{label}]": closed_form,
        "relative_difference": None if separation is None else separation / closed_form - 1,
        "weak": spectrum.weak,
    }
    return {"": rows, "periods": [periods]}


def _overlap_report(scenario: ScatteringScenario) -> TransitionReport:
    overlap = overlap_visibility(scenario)
    return TransitionReport(
        name=f"overlap-{scenario.model.value.lower()}",
        inequality="visibility >= 0.5",
        threshold=0.5,
        value=overlap.visibility,
        margin=0.5 / overlap.visibility if overlap.visibility > 0 else math.inf,
        verdict=overlap.verdict,
    )


def compare_command(params: dict[str, Any], units: UnitSystem) -> dict[str, list[dict]]:
    label = units.label
    sqi = _scenario(params, units, Model.SQI)
    cqi = _scenario(params, units, Model.CQI)
    row = {
        "pdf_sqi": float(pdf_sqi_3body(sqi, 0.0, 0.0, sqi.x0)),
        "pdf_cqi": float(pdf_cqi_3body(cqi)),
        f"period_sqi[{label}]": fringe_period(Model.SQI, sqi),
        f"period_cqi[{label}]": fringe_period(Model.CQI, cqi),
    }
    reports = [_overlap_report(sqi), _overlap_report(cqi)]
    if params["L_c"] is not None:
        reports.append(momentum_transition_wavelength(params["L_c"], params["wavelength"]))
    return {"": [row], "transitions": [report.as_row() for report in reports]}


@dataclass(frozen=True)
class Command:
    handler: Callable[[dict[str, Any], UnitSystem], dict[str, list[dict]]]
    sweepable: bool = True


COMMANDS: dict[str, Command] = {
    "recoil": Command(recoil_command),
    "pdf-coordinate": Command(pdf_coordinate_command),
    "pdf-momentum": Command(pdf_momentum_command),
    "marginal": Command(marginal_command),
    "transitions": Command(transitions_command),
    "oracle": Command(oracle_command, sweepable=False),
    "compare": Command(compare_command),
}
