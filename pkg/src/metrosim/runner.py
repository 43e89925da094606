"""Configuration-driven experiment runner.

Each experiment reads a JSON configuration, writes one or more CSV files and a
``summary.json`` into an output directory. The CSV schemas are listed in the
documentation of the runner module; numbers are written in scientific notation
with 15 decimal digits."""

import argparse
import datetime
import math
import os
import sys
import time
from typing import Dict, List, Optional, Sequence

import json_tricks
import numpy
from scipy.stats import linregress

from . import dephasing, metrology, redfield, simulation
from .errors import ConfigError, MetrosimError

# parameters holding frequencies, converted to rad/s when the config declares Hz
frequency_parameters = ["omega0", "omega_a", "base_frequency", "cutoff_frequency"]
frequency_units = ["Hz", "rad/s"]

experiments: Dict[str, dict] = {
    "sweep": {
        "n": 4, "omega0": 5.0, "omega_a": 0.0, "alpha": 1.0, "beta": 1.0, "T": 1.0, "points": 400,
        "tolerance": 1e-6,
    },
    "ratio": {"n_min": 2, "n_max": 64, "alpha": 1.0, "beta": 1.0, "tolerance": 1e-9},
    "ensemble": {
        "N": 4, "omega0": 5.0, "omega_a": 0.0, "base_frequency": 0.2, "cutoff_frequency": 140.0,
        "b1": None, "t_calibration": 0.2, "t_end": 1.0, "t_step": 5e-3, "realizations": 2000,
        "threads": 1, "schemes": list(simulation.ensemble_schemes), "coverage": 0.99,
    },
    "fit-gamma": {
        "N": 4, "omega0": 5.0, "omega_a": 0.0, "base_frequency": 0.2, "cutoff_frequency": 140.0,
        "b1": None, "t_calibration": 0.2, "t_end": 0.2, "t_step": 5e-3, "realizations": 2000,
        "threads": 1, "schemes": list(simulation.ensemble_schemes), "t_fit_min": 0.01, "t_fit_max": 0.2,
        "expected_exponent": None, "exponent_tolerance": 0.15,
    },
    "partial": {"N_max": 16, "x_values": [0.0, 0.3, 1.0, 3.0], "summation": "working"},
    "field": {"N_max": 64, "gamma0": 1.0, "gamma_a": 1.0, "T": 1.0, "t": 1.0, "N_fit_min": 10},
    "oracle-check": {
        "N_values": [1, 2, 3], "x_values": [0.0, 0.3, 1.0, 3.0, float("inf")], "couplings": ["zero", "optimal", "N"],
        "law": "markovian", "alpha": 1.0, "beta": 1.0, "t_end": 1.0, "t_step": 0.02, "step": 2e-3,
        "tolerance": 1e-6,
    },
}


# smallest admissible value of the count parameters
count_minimums = {
    "n": 1, "N": 1, "points": 1, "n_min": 1, "n_max": 1, "realizations": 2, "threads": 1, "N_max": 1,
    "N_fit_min": 1,
}


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _is_count(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _parameter_problem(name: str, value, default) -> Optional[str]:
    """Checks a parameter against the type of its default; returns the problem found, if any."""
    if default is None:
        if value is not None and not _is_number(value):
            return "must be a number or null, {0!r} was passed".format(value)
    elif isinstance(default, bool):
        if not isinstance(value, bool):
            return "must be true or false, {0!r} was passed".format(value)
    elif isinstance(default, str):
        if not isinstance(value, str):
            return "must be a string, {0!r} was passed".format(value)
    elif isinstance(default, int):
        if not _is_count(value):
            return "must be an integer, {0!r} was passed".format(value)
        if value < count_minimums.get(name, value):
            return "must be at least {0}, {1} was passed".format(count_minimums[name], value)
    elif isinstance(default, float):
        if not _is_number(value):
            return "must be a number, {0!r} was passed".format(value)
    elif isinstance(default, list):
        if not isinstance(value, list) or not value:
            return "must be a non-empty list, {0!r} was passed".format(value)
        if isinstance(default[0], str):
            valid = all(isinstance(v, str) for v in value)
        elif _is_count(default[0]):
            valid = all(_is_count(v) and v >= 1 for v in value)
        else:
            valid = all(_is_number(v) for v in value)
        if not valid:
            return "must be a list like {0!r}, {1!r} was passed".format(default, value)
    return None


def load_config_data(path: str) -> dict:
    """Reads a JSON configuration file into a dictionary."""
    try:
        with open(path) as fp:
            data = json_tricks.load(fp)
    except (OSError, ValueError) as e:
        raise ConfigError("could not read configuration {0}: {1}".format(path, e))
    if not isinstance(data, dict):
        raise ConfigError("configuration {0} must hold a JSON object".format(path))
    return data


class RunConfig:
    """A validated experiment configuration.

    :param experiment: name of the experiment, a key of :py:data:`experiments`
    :param parameters: overrides of the experiment defaults
    :param units: must declare ``{"frequency": "Hz"}`` or ``{"frequency": "rad/s"}``
    :param output: output directory
    :param seed: seed of every random stream
    """

    def __init__(self, experiment: str, parameters: Optional[dict] = None, units: Optional[dict] = None,
                 output: str = "output", seed: int = 0):
        problems = {}
        if experiment not in experiments:
            raise ConfigError("unknown experiment {0!r}".format(experiment),
                              {"experiment": "must be one of {0}".format(list(experiments))})
        parameters = dict(parameters or {})
        units = dict(units or {})

        unknown = sorted(set(parameters) - set(experiments[experiment]))
        for key in unknown:
            problems["parameters." + key] = "not a parameter of {0!r}".format(experiment)
        for key, value in parameters.items():
            if key in experiments[experiment]:
                problem = _parameter_problem(key, value, experiments[experiment][key])
                if problem:
                    problems["parameters." + key] = problem
        if units.get("frequency") not in frequency_units:
            problems["units.frequency"] = "must be one of {0}, {1!r} was passed".format(
                frequency_units, units.get("frequency"))
        if not isinstance(seed, int) or seed < 0:
            problems["seed"] = "must be a non-negative integer"
        if problems:
            raise ConfigError("invalid configuration for {0!r}".format(experiment), problems)

        resolved = dict(experiments[experiment])
        resolved.update(parameters)
        if "n_min" in resolved and resolved["n_max"] < resolved["n_min"]:
            raise ConfigError("invalid configuration for {0!r}".format(experiment),
                              {"parameters.n_max": "must be at least n_min = {0}".format(resolved["n_min"])})
        if units["frequency"] == "Hz":
            for key in frequency_parameters:
                if key in resolved and resolved[key] is not None:
                    resolved[key] = 2 * math.pi * resolved[key]

        self._experiment = experiment
        self._parameters = resolved
        self._units = units
        self._output = output
        self._seed = seed

    def __str__(self):
        return "Run ({0}, seed={1}, output={2})".format(self._experiment, self._seed, self._output)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if "experiment" not in data:
            raise ConfigError("invalid configuration", {"experiment": "missing"})
        if "units" not in data:
            raise ConfigError("invalid configuration", {"units": "missing; declare the frequency unit"})
        return cls(data["experiment"], data.get("parameters"), data["units"],
                   data.get("output", "output"), data.get("seed", 0))

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        return cls.from_dict(load_config_data(path))

    @property
    def experiment(self) -> str:
        return self._experiment

    @property
    def parameters(self) -> dict:
        """Parameters after merging defaults; frequencies are in rad/s."""
        return self._parameters

    @property
    def output(self) -> str:
        return self._output

    @property
    def seed(self) -> int:
        return self._seed

    def to_dict(self) -> dict:
        return {"experiment": self._experiment, "units": self._units, "parameters": self._parameters,
                "output": self._output, "seed": self._seed}


def write_csv(path: str, header: Sequence[str], columns: Sequence[Sequence[float]]):
    """Writes equally long numeric columns with a header row."""
    numpy.savetxt(path, numpy.column_stack([numpy.asarray(c, dtype=float) for c in columns]),
                  fmt="%.15e", delimiter=",", header=",".join(header), comments="")


def write_gnuplot_script(csv_path: str, header: Sequence[str], logscale: bool = False):
    """Plotting script for a CSV written by :py:func:`write_csv`, one curve per column."""
    name = os.path.basename(csv_path)
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel '{0}'".format(header[0]),
    ]
    if logscale:
        lines.append("set logscale xy")
    curves = ["'{0}' using 1:{1} with lines".format(name, i + 1) for i in range(1, len(header))]
    lines.append("plot " + ", \\\n     ".join(curves))
    with open(os.path.splitext(csv_path)[0] + ".gp", "w") as fp:
        fp.write("\n".join(lines) + "\n")


def _laws(p: dict) -> Dict[str, dephasing.DephasingLaw]:
    return {"markovian": dephasing.Markovian(p["alpha"]), "non_markovian": dephasing.NonMarkovian(p["beta"])}


def run_sweep(config: RunConfig, gnuplot: bool = False) -> dict:
    """Uncertainty of every scheme against the interrogation time, with the optimal times
    found in closed form and by numerical minimization."""
    p = config.parameters
    n, T = p["n"], p["T"]
    t = numpy.linspace(T / p["points"], T, p["points"])
    cases = {
        "correlated": (dephasing.FullyCorrelated(), "entangled"),
        "uncorrelated": (dephasing.Uncorrelated(), "entangled"),
        "unentangled": (dephasing.Uncorrelated(), "unentangled"),
        "aux": (dephasing.FullyCorrelated(), "entangled_with_aux"),
    }

    header, columns, markers = ["t"], [t], {}
    for law_name, law in _laws(p).items():
        for case, (topology, scheme) in cases.items():
            label = "{0}_{1}".format(law_name, case)
            header.append(label)
            columns.append(numpy.sqrt(metrology.envelope_uncertainty(law, topology, n, t, T, scheme)))

            optimum = metrology.optimal_time(law, topology, n, p["omega0"], scheme, T, p["omega_a"])
            marker = {"t_e": optimum.t_e, "t_phase": optimum.t_phase, "method": optimum.method}
            if scheme != "entangled_with_aux":
                numeric = metrology.numeric_optimal_time(law, topology, n, T, scheme)
                marker["t_numeric"] = numeric
                marker["passed"] = bool(abs(numeric - optimum.t_e) <= p["tolerance"])
            markers[label] = marker

    path = os.path.join(config.output, "sweep.csv")
    write_csv(path, header, columns)
    if gnuplot:
        write_gnuplot_script(path, header, logscale=True)
    return {"files": [path], "optimal_times": markers,
            "passed": all(m.get("passed", True) for m in markers.values())}


def _slope(x, y) -> float:
    return linregress(numpy.log(x), numpy.log(y)).slope


def run_ratio(config: RunConfig, gnuplot: bool = False) -> dict:
    """Precision ratio of entangled over unentangled probes against the number of qubits."""
    p = config.parameters
    ns = numpy.arange(p["n_min"], p["n_max"] + 1)
    laws = _laws(p)
    topologies = {"correlated": dephasing.FullyCorrelated(), "uncorrelated": dephasing.Uncorrelated()}

    header, columns = ["n"], [ns]
    ratios = {}
    for law_name, law in laws.items():
        for topology_name, topology in topologies.items():
            label = "{0}_{1}".format(law_name, topology_name)
            ratios[label] = numpy.array([metrology.precision_ratio(law, topology, int(n)).r for n in ns])
            header.append(label)
            columns.append(ratios[label])
    header.append("non_markovian_uncorrelated_table")
    columns.append([metrology.tabulated_ratio(laws["non_markovian"], topologies["uncorrelated"], int(n)) for n in ns])
    aux = numpy.array([metrology.aux_precision_ratio(int(n)) if n % 2 == 0 else numpy.nan for n in ns])
    header.append("aux")
    columns.append(aux)

    tol = p["tolerance"]
    even = ~numpy.isnan(aux)
    nm_slope = _slope(ns, ratios["non_markovian_uncorrelated"])
    aux_slope = _slope(ns[even][-2:], aux[even][-2:]) if numpy.count_nonzero(even) >= 2 else float("nan")
    checks = {
        "markovian_uncorrelated": bool(numpy.all(numpy.abs(ratios["markovian_uncorrelated"] - 1) <= tol)),
        "markovian_correlated": bool(numpy.all(numpy.abs(ratios["markovian_correlated"] * numpy.sqrt(ns) - 1) <= tol)),
        "non_markovian_correlated": bool(numpy.all(numpy.abs(ratios["non_markovian_correlated"] - 1) <= tol)),
        "non_markovian_uncorrelated_slope": bool(abs(nm_slope - 0.25) <= 0.005),
        "aux_slope": bool(abs(aux_slope - 0.5) <= 0.02),
    }

    path = os.path.join(config.output, "ratio.csv")
    write_csv(path, header, columns)
    if gnuplot:
        write_gnuplot_script(path, header, logscale=True)
    return {"files": [path], "non_markovian_uncorrelated_slope": nm_slope, "aux_local_slope": aux_slope,
            "checks": checks, "passed": all(checks.values())}


def _noise(config: RunConfig) -> simulation.NoiseSpec:
    p = config.parameters
    base = p["base_frequency"]
    spec = simulation.NoiseSpec(1.0, 0.0, base, int(round(p["cutoff_frequency"] / base)), seed=config.seed)
    b1 = p["b1"] if p["b1"] is not None else simulation.calibrate_amplitude(spec, p["N"], p["t_calibration"])
    return spec.replace(b1=b1)


def _simulate(config: RunConfig, verbose: bool):
    p = config.parameters
    spec = _noise(config)
    simulator = simulation.EnsembleSimulator(
        spec, p["N"], p["omega0"], p["omega_a"], simulation.time_grid(p["t_end"], p["t_step"]))
    simulator.simulate(p["schemes"], p["realizations"], p["threads"], verbose)
    return spec, simulator


def run_ensemble(config: RunConfig, gnuplot: bool = False, verbose: bool = False) -> dict:
    """Monte Carlo ensembles of every scheme, compared with the Gaussian limit."""
    p = config.parameters
    spec, simulator = _simulate(config, verbose)
    files, coverage = [], {}
    header = ["t", "mean_cos", "mean_sin", "P0", "stderr", "M", "P0_gaussian"]
    for scheme, result in simulator.results.items():
        gaussian = simulation.gaussian_probability(simulator.specs[scheme], p["N"], p["omega0"], p["omega_a"],
                                                   result.t_grid)
        deviation = numpy.abs(result.P0 - gaussian)
        coverage[scheme] = float(numpy.mean(deviation <= 3 * result.stderr + 1e-12))
        path = os.path.join(config.output, "ensemble_{0}.csv".format(scheme))
        write_csv(path, header, [result.t_grid, result.mean_cos, result.mean_sin, result.P0, result.stderr,
                                 numpy.full(result.t_grid.size, result.M), gaussian])
        if gnuplot:
            write_gnuplot_script(path, header)
        files.append(path)
    return {"files": files, "b1": spec.b1, "noise": spec.to_dict(), "coverage_3_sigma": coverage,
            "durations": simulator.durations, "passed": all(c >= p["coverage"] for c in coverage.values())}


def run_fit_gamma(config: RunConfig, gnuplot: bool = False, verbose: bool = False) -> dict:
    """Decoherence factor extracted from the ensembles and its power-law exponent."""
    p = config.parameters
    spec, simulator = _simulate(config, verbose)
    t = None
    header, columns, exponents, checks = ["t"], [], {}, {}
    for scheme, result in simulator.results.items():
        t = result.t_grid
        fit = simulation.fit_decoherence_factor(result)
        gamma = numpy.full(t.size, numpy.nan)
        gamma[:fit.gamma.size] = fit.gamma
        header.append("gamma_{0}".format(scheme))
        columns.append(gamma)
        if scheme == "with_aux":
            checks[scheme] = bool(numpy.nanmax(numpy.abs(gamma)) <= 1e-10)
            continue
        exponent = simulation.fit_power_law(fit.t_grid, fit.gamma, p["t_fit_min"], p["t_fit_max"]).exponent
        exponents[scheme] = exponent
        if p["expected_exponent"] is not None:
            checks[scheme] = bool(abs(exponent - p["expected_exponent"]) <= p["exponent_tolerance"])

    path = os.path.join(config.output, "fit_gamma.csv")
    write_csv(path, header, [t] + columns)
    if gnuplot:
        write_gnuplot_script(path, header, logscale=True)
    return {"files": [path], "b1": spec.b1, "noise": spec.to_dict(), "exponents": exponents, "checks": checks,
            "passed": all(checks.values())}


def run_partial(config: RunConfig, gnuplot: bool = False) -> dict:
    """Dephasing factor of the auxiliary scheme in partially correlated baths."""
    p = config.parameters
    rows = []
    for N in range(1, p["N_max"] + 1):
        for x in p["x_values"]:
            a, b = dephasing.partial_corr_sums(N, x, p["summation"])
            optimum = dephasing.optimal_aux_coupling(N, x, p["summation"])
            rows.append([N, x, a, b, optimum.K, optimum.A_min,
                         dephasing.partial_corr_factor(N, x, N, p["summation"]),
                         dephasing.partial_corr_factor(N, x, 0, p["summation"])])
    header = ["N", "x", "a", "b", "K_opt", "A_min", "A_K_N", "A_K_0"]
    path = os.path.join(config.output, "partial.csv")
    write_csv(path, header, numpy.array(rows).T)
    return {"files": [path], "rows": len(rows), "passed": True}


def run_field(config: RunConfig, gnuplot: bool = False) -> dict:
    """Uncertainty of a magnetic-field estimate against the number of working qubits."""
    p = config.parameters
    Ns = numpy.arange(1, p["N_max"] + 1)
    delta = numpy.full(Ns.size, numpy.nan)
    for i, N in enumerate(Ns):
        if N * p["gamma0"] != p["gamma_a"]:
            delta[i] = math.sqrt(metrology.field_sensing_uncertainty(int(N), p["gamma0"], p["gamma_a"], p["T"], p["t"]))
    header = ["N", "delta_B"]
    path = os.path.join(config.output, "field.csv")
    write_csv(path, header, [Ns, delta])
    if gnuplot:
        write_gnuplot_script(path, header, logscale=True)
    window = (Ns >= p["N_fit_min"]) & ~numpy.isnan(delta)
    slope = _slope(Ns[window], delta[window]) if numpy.count_nonzero(window) >= 2 else float("nan")
    return {"files": [path], "slope": slope, "passed": True}


def run_oracle_check(config: RunConfig, gnuplot: bool = False, verbose: bool = False) -> dict:
    """Integrates the master equation of working qubits plus an auxiliary qubit and compares the
    coherence between the two probe branches with its closed form."""
    p = config.parameters
    law = _laws(p)[p["law"]]
    t = simulation.time_grid(p["t_end"], p["t_step"])
    rows = []
    for N in p["N_values"]:
        for x in p["x_values"]:
            topology = dephasing.PartiallyCorrelated(x)
            for coupling in p["couplings"]:
                K = {"zero": 0.0, "optimal": dephasing.optimal_aux_coupling(N, x).K, "N": float(N)}[coupling]
                A = dephasing.partial_corr_factor(N, x, K)
                kernel = dephasing.CorrelationKernel.from_law(law, topology, N, K)
                generator = redfield.DephasingGenerator(kernel, [1.0] * N + [0.0], aux=True)
                probe = metrology.ProbeConfig(N, 1.0, aux=True, omega_a=0.0)
                states = redfield.integrate(generator, redfield.ghz_density_matrix(probe), t, p["step"],
                                            verbose=verbose)
                coherence = numpy.abs(redfield.offdiagonal_trace(states, *redfield.ghz_pair(probe)))
                error = redfield.max_relative_error(coherence, redfield.closed_form_coherence(law, A, t))
                rows.append([N, x, K, A, error, float(error < p["tolerance"])])
    header = ["N", "x", "K", "A", "max_relative_error", "passed"]
    path = os.path.join(config.output, "oracle_check.csv")
    write_csv(path, header, numpy.array(rows).T)
    failures = sum(1 for row in rows if not row[-1])
    return {"files": [path], "cases": len(rows), "failures": failures, "passed": failures == 0}


runners = {
    "sweep": run_sweep,
    "ratio": run_ratio,
    "ensemble": run_ensemble,
    "fit-gamma": run_fit_gamma,
    "partial": run_partial,
    "field": run_field,
    "oracle-check": run_oracle_check,
}
verbose_runners = ["ensemble", "fit-gamma", "oracle-check"]
monte_carlo_runners = ["ensemble", "fit-gamma"]


def run(config: RunConfig, gnuplot: bool = False, verbose: bool = False) -> dict:
    """Runs an experiment and writes its CSV files and ``summary.json`` into ``config.output``.

    :returns: the summary
    """
    os.makedirs(config.output, exist_ok=True)
    started = datetime.datetime.now().isoformat()
    start_time = time.time()
    if config.experiment in verbose_runners:
        summary = runners[config.experiment](config, gnuplot, verbose)
    else:
        summary = runners[config.experiment](config, gnuplot)
    summary.update({
        "experiment": config.experiment,
        "seed": config.seed,
        "config": config.to_dict(),
        "started": started,
        "duration": time.time() - start_time,
    })
    with open(os.path.join(config.output, "summary.json"), "w") as fp:
        # inf correlation ratios and undefined slopes are written as Infinity and NaN
        json_tricks.dump(summary, fp, indent=2, allow_nan=True)
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metrosim",
        description="Quantum metrology under collective dephasing: analytics, Monte Carlo and master-equation checks.",
    )
    subparsers = parser.add_subparsers(dest="experiment", required=True)
    for name, runner in runners.items():
        sub = subparsers.add_parser(name, help=(runner.__doc__ or "").split("\n")[0])
        sub.add_argument("--config", help="JSON configuration file")
        sub.add_argument("--seed", type=int, help="seed of every random stream")
        sub.add_argument("--out", help="output directory")
        if name in monte_carlo_runners:
            sub.add_argument("--realizations", type=int, help="number of Monte Carlo trajectories")
            sub.add_argument("--threads", type=int, help="number of worker threads")
        sub.add_argument("--gnuplot-script", action="store_true", help="write a gnuplot script next to every CSV")
        sub.add_argument("--verbose", action="store_true", help="report progress on stderr")
    return parser


def _resolve(args: argparse.Namespace) -> RunConfig:
    data = {"experiment": args.experiment, "units": {"frequency": "Hz"}, "parameters": {}}
    if args.config:
        data = dict(load_config_data(args.config))
        if data.get("experiment", args.experiment) != args.experiment:
            raise ConfigError("configuration is for {0!r}, not {1!r}".format(data["experiment"], args.experiment),
                              {"experiment": "does not match the subcommand"})
        data["experiment"] = args.experiment
    parameters = dict(data.get("parameters") or {})
    for key in ["realizations", "threads"]:
        if getattr(args, key, None) is not None:
            parameters[key] = getattr(args, key)
    data["parameters"] = parameters
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output"] = args.out
    return RunConfig.from_dict(data)


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``metrosim`` command.

    :returns: 0 on success, 2 for configuration errors, 3 for numerical failures and 4 when an
              ``oracle-check`` fails its acceptance criterion
    """
    args = build_parser().parse_args(argv)
    try:
        config = _resolve(args)
        summary = run(config, args.gnuplot_script, args.verbose)
    except ConfigError as e:
        print("configuration error: {0}".format(e), file=sys.stderr)
        return 2
    except MetrosimError as e:
        print("{0}: {1}".format(type(e).__name__, e), file=sys.stderr)
        return 3

    if args.verbose:
        print("{0} finished in {1:.3f} s, outputs in {2}".format(config.experiment, summary["duration"],
                                                                 config.output), file=sys.stderr)
    if config.experiment == "oracle-check" and not summary["passed"]:
        print("oracle check failed in {0} of {1} cases".format(summary["failures"], summary["cases"]),
              file=sys.stderr)
        return 4
    return 0
