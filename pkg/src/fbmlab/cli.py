"""Command-line entry point.

One experiment per invocation. Options resolve in three layers: explicit
command-line flags beat values from `--config FILE` (YAML key/value, keys
matching the option names, optionally nested under the command path), which
beat built-in defaults. Unknown config fields are rejected. Exit codes:
2 for configuration problems, 3 for numerical failures (a diagnostic JSON
goes to stderr), 0 on success.
"""

from __future__ import annotations

import json
import os
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import __version__, artifacts, figures, verify
from .area import area_convergence
from .covariance import DomainError, FbmCovariance, HurstParams, QuadratureError
from .density import marginal_kde, kde, sample_y, smoothness_probe
from .malliavin import malliavin_batch, spectral_diagnostic, tail_diagnostic
from .sampling import sample_fbm
from .variation import SizeError, pvar_bruteforce, pvar_exact

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_MARGINAL_AXES = {"b1": 0, "b2": 1, "a": 2}


def _default_threads() -> int:
    return os.cpu_count() or 1


def _params(h: float, t: float) -> HurstParams:
    strict = 1.0 / 3.0 < h < 0.5
    return HurstParams(h, t, strict=strict)


def _fail_numerical(err: Exception) -> None:
    diagnostic = {"error": type(err).__name__, "message": str(err)}
    if isinstance(err, QuadratureError):
        diagnostic["achieved_tolerance"] = err.achieved
    click.echo(json.dumps(diagnostic, sort_keys=True), err=True)
    sys.exit(EXIT_NUMERICAL)


def _lookup_config_section(raw: dict, path: list[str]) -> dict:
    node = raw
    for part in path:
        if isinstance(node, dict) and part in node:
            node = node[part]
        else:
            return raw
    return node if isinstance(node, dict) else raw


def finalize(ctx: click.Context, **values):
    """Fill in non-explicit options from the config file, validating fields."""
    config_path = values.pop("config", None)
    if config_path is None:
        return values
    try:
        with open(config_path) as fh:
            raw = yaml.safe_load(fh) or {}
    except OSError as err:
        raise click.UsageError(f"cannot read config file: {err}")
    except yaml.YAMLError as err:
        raise click.UsageError(f"config file is not valid YAML: {err}")
    if not isinstance(raw, dict):
        raise click.UsageError("config file must hold a key/value mapping")
    path = ctx.command_path.split()[1:]  # drop the program name
    section = _lookup_config_section(raw, path)
    section = {str(k).replace("-", "_"): v for k, v in section.items()}
    section.pop("schema_version", None)
    params_by_name = {p.name: p for p in ctx.command.params}
    for key, val in section.items():
        if key not in params_by_name or key == "config":
            raise click.UsageError(
                f"unknown config field {key!r} for command {' '.join(path)!r}"
            )
        if ctx.get_parameter_source(key) == click.core.ParameterSource.DEFAULT:
            param = params_by_name[key]
            values[key] = param.type.convert(val, param, ctx)
    return values


def config_option(fn):
    return click.option(
        "--config",
        type=click.Path(exists=False, dir_okay=False),
        default=None,
        help="YAML file supplying defaults for this command's options.",
    )(fn)


def _echo_config(values: dict) -> dict:
    echo = {k: v for k, v in values.items() if k != "config"}
    echo["schema_version"] = artifacts.SCHEMA_VERSION
    return echo


@click.group()
@click.version_option(version=__version__, prog_name="fbmlab")
def main():
    """Numerical laboratory for planar fBm and its Levy area."""


@main.group()
def kernel():
    """Covariance kernel checks."""


@kernel.command("verify")
@click.option("--H", "h", type=float, required=True, help="Hurst exponent.")
@click.option("--T", "t", type=float, default=1.0, show_default=True, help="Horizon.")
@click.option("--grid-n", type=int, default=8, show_default=True, help="Grid points per axis for the 2D variation.")
@click.option("--samples", type=int, default=10_000, show_default=True, help="Random rectangles/quadruples per check.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="JSON report path.")
@click.option("--plot", is_flag=True, help="Render a PNG next to the report.")
@config_option
@click.pass_context
def kernel_verify(ctx, **values):
    """Check negativity, the rectangle bound, and the 2D variation ceiling."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        report = verify.appendix_report(
            params,
            negativity_samples=v["samples"],
            bound_samples=v["samples"],
            grid_n=v["grid_n"],
            seed=v["seed"],
        )
    except (DomainError, QuadratureError, FloatingPointError) as err:
        _fail_numerical(err)
    artifacts.write_json(v["out"], report, config=_echo_config(v))
    if v["plot"]:
        figures.kernel_figure(FbmCovariance(params), max(v["grid_n"], 32), Path(v["out"]).with_suffix(".png"))
    click.echo(f"kernel verify: {'pass' if report['passed'] else 'FAIL'} -> {v['out']}")
    if not report["passed"]:
        sys.exit(1)


@main.command()
@click.option("--H", "h", type=float, required=True, help="Hurst exponent.")
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--level", type=int, default=8, show_default=True, help="Dyadic level of the grid.")
@click.option("--count", type=int, default=100, show_default=True, help="Number of paths.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", type=click.Choice(["cholesky", "circulant"]), default="cholesky", show_default=True)
@click.option("--threads", type=int, default=_default_threads, help="Worker threads (default: all cores).")
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="CSV path for the sampled paths.")
@click.option("--plot", is_flag=True, help="Render a PNG next to the CSV.")
@config_option
@click.pass_context
def simulate(ctx, **values):
    """Sample planar fBm paths onto a CSV (sample,component,k,t,value)."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        batch = sample_fbm(params, v["level"], v["count"], v["seed"], method=v["method"], threads=v["threads"])
    except (DomainError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)

    def rows():
        for i in range(batch.count):
            for c in (0, 1):
                for k, (tk, val) in enumerate(zip(batch.times, batch.values[i, c])):
                    yield (i, c + 1, k, tk, val)

    cfg = _echo_config(v)
    cfg["fallback"] = batch.fallback
    artifacts.write_csv(v["out"], ["sample", "component", "k", "t", "value"], rows(), config=cfg)
    if v["plot"]:
        figures.paths_figure(batch, Path(v["out"]).with_suffix(".png"))
    note = " (circulant fell back to cholesky)" if batch.fallback else ""
    click.echo(f"simulate: wrote {batch.count} paths at level {batch.level} -> {v['out']}{note}")


@main.command()
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="CSV produced by `simulate`.")
@click.option("--p", "p", type=float, required=True, help="Variation order, at least 1.")
@click.option("--mode", type=click.Choice(["dp", "bruteforce"]), default="dp", show_default=True)
@click.option("--sample", type=int, default=0, show_default=True)
@click.option("--component", type=int, default=1, show_default=True, help="1-based path component.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Optional JSON output path.")
@config_option
@click.pass_context
def variation(ctx, **values):
    """p-variation of one stored path component, with the achieving partition."""
    v = finalize(ctx, **values)
    try:
        times, samples = artifacts.read_paths_csv(v["input_path"])
    except (ValueError, OSError) as err:
        raise click.UsageError(str(err))
    if v["sample"] not in samples:
        raise click.UsageError(f"sample {v['sample']} not present in {v['input_path']}")
    vals = samples[v["sample"]]
    if not 1 <= v["component"] <= vals.shape[0]:
        raise click.UsageError(f"component must be in 1..{vals.shape[0]}")
    series = vals[v["component"] - 1]
    try:
        if v["mode"] == "dp":
            value, partition = pvar_exact(series, v["p"], return_partition=True)
        else:
            value, partition = pvar_bruteforce(series, v["p"], return_partition=True)
    except SizeError as err:
        raise click.UsageError(str(err))
    except ValueError as err:
        _fail_numerical(err)
    payload = {
        "value": value,
        "partition_indices": partition,
        "partition_times": [float(times[i]) for i in partition],
        "p": v["p"],
        "mode": v["mode"],
        "sample": v["sample"],
        "component": v["component"],
    }
    click.echo(json.dumps(artifacts._jsonable(payload), sort_keys=True))
    if v["out"]:
        artifacts.write_json(v["out"], payload, config=_echo_config(v))


@main.command()
@click.option("--H", "h", type=float, required=True)
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--level-min", type=int, default=4, show_default=True)
@click.option("--level-max", type=int, default=12, show_default=True)
@click.option("--count", type=int, default=500, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", type=click.Choice(["cholesky", "circulant"]), default="cholesky", show_default=True)
@click.option("--threads", type=int, default=_default_threads)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="CSV path (sample,m,area).")
@click.option("--plot", is_flag=True)
@config_option
@click.pass_context
def area(ctx, **values):
    """Areas of nested dyadic projections, one fine path per sample."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        conv = area_convergence(
            params, v["level_min"], v["level_max"], v["count"], v["seed"],
            method=v["method"], threads=v["threads"],
        )
    except (DomainError, ValueError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)

    def rows():
        for i in range(conv.areas.shape[0]):
            for j, m in enumerate(conv.levels):
                yield (i, int(m), conv.areas[i, j])

    cfg = _echo_config(v)
    cfg["fitted_log2_slope"] = conv.slope
    artifacts.write_csv(v["out"], ["sample", "m", "area"], rows(), config=cfg)
    if v["plot"]:
        figures.area_figure(conv, Path(v["out"]).with_suffix(".png"))
    click.echo(
        f"area: levels {v['level_min']}..{v['level_max']}, fitted log2 slope "
        f"{conv.slope:.3f} -> {v['out']}"
    )


@main.group(invoke_without_command=True)
@click.option("--H", "h", type=float, default=None, help="Hurst exponent (sample report).")
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--level", type=int, default=8, show_default=True)
@click.option("--count", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--threads", type=int, default=_default_threads)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="CSV path (sample,phi,...).")
@click.option("--plot", is_flag=True)
@config_option
@click.pass_context
def malliavin(ctx, **values):
    """Per-sample covariance matrix columns; see also `spectral` and `tail`."""
    if ctx.invoked_subcommand is not None:
        return
    v = finalize(ctx, **values)
    if v["h"] is None or v["out"] is None:
        raise click.UsageError("--H and --out are required for the sample report")
    params = _params(v["h"], v["t"])
    try:
        batch = sample_fbm(params, v["level"], v["count"], v["seed"], threads=v["threads"])
        cols = malliavin_batch(batch)
    except (DomainError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)

    def rows():
        for i in range(cols.count):
            yield (
                i, cols.phi[i], cols.det_gamma[i], cols.qnorm2[i],
                cols.q_at_T[i, 0], cols.q_at_T[i, 1],
            )

    artifacts.write_csv(
        v["out"], ["sample", "phi", "det_gamma", "qnorm2", "q1T", "q2T"], rows(),
        config=_echo_config(v),
    )
    if v["plot"]:
        figures.malliavin_figure(cols, Path(v["out"]).with_suffix(".png"))
    click.echo(f"malliavin: {cols.count} samples, min phi {cols.phi.min():.6g} -> {v['out']}")


@malliavin.command("spectral")
@click.option("--H", "h", type=float, required=True)
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--grid-n", type=int, default=32, show_default=True, help="Kernel sections per component (max 64).")
@click.option("--eval-level", type=int, default=8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="JSON report path.")
@click.option("--plot", is_flag=True)
@config_option
@click.pass_context
def malliavin_spectral(ctx, **values):
    """Spectrum of the determinant form restricted to kernel sections."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        report = spectral_diagnostic(params, v["grid_n"], eval_level=v["eval_level"])
    except (DomainError, ValueError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)
    payload = {
        "grid_n": report.grid_n,
        "eval_level": report.eval_level,
        "eigenvalues": report.eigenvalues,
        "trace": report.trace,
        "positive_count": report.positive_count,
        "min_eigenvalue": report.min_eigenvalue,
        "threshold": report.threshold,
    }
    artifacts.write_json(v["out"], payload, config=_echo_config(v))
    if v["plot"]:
        figures.spectral_figure([report], Path(v["out"]).with_suffix(".png"))
    click.echo(
        f"malliavin spectral: {report.positive_count} positive eigenvalues, "
        f"trace {report.trace:.6g} -> {v['out']}"
    )


@malliavin.command("tail")
@click.option("--H", "h", type=float, required=True)
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--level", type=int, default=8, show_default=True)
@click.option("--count", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--s-grid", type=str, default="10,100,1000,10000", show_default=True,
              help="Comma-separated decay abscissae.")
@click.option("--threads", type=int, default=_default_threads)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--plot", is_flag=True)
@config_option
@click.pass_context
def malliavin_tail(ctx, **values):
    """Decay of E[exp(-s phi)] and inverse-moment stability."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        s_grid = [float(x) for x in str(v["s_grid"]).split(",") if x.strip()]
    except ValueError:
        raise click.UsageError(f"--s-grid must be comma-separated numbers, got {v['s_grid']!r}")
    try:
        report = tail_diagnostic(params, v["level"], v["count"], v["seed"], s_grid, threads=v["threads"])
    except (DomainError, ValueError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)
    payload = {
        "s_grid": report.s_grid,
        "log_mean_exp": report.log_mean_exp,
        "slope": report.slope,
        "inv_moments": report.inv_moments,
        "inv_moments_half": report.inv_moments_half,
        "stable": report.stable,
        "excluded": report.excluded,
        "count": report.count,
    }
    artifacts.write_json(v["out"], payload, config=_echo_config(v))
    if v["plot"]:
        figures.tail_figure(report, Path(v["out"]).with_suffix(".png"))
    click.echo(f"malliavin tail: fitted slope {report.slope:.3f} -> {v['out']}")


@main.command()
@click.option("--H", "h", type=float, required=True)
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--level", type=int, default=8, show_default=True)
@click.option("--count", type=int, default=100_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid-n", type=int, default=21, show_default=True)
@click.option("--marginal", type=click.Choice(sorted(_MARGINAL_AXES)), default=None,
              help="Emit a 1D marginal instead of the 3D lattice.")
@click.option("--threads", type=int, default=_default_threads)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--plot", is_flag=True)
@config_option
@click.pass_context
def density(ctx, **values):
    """Kernel density estimate of (endpoint, area) on a lattice CSV."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        samples = sample_y(params, v["level"], v["count"], v["seed"], threads=v["threads"])
        if v["marginal"] is not None:
            grid, dens = marginal_kde(samples, _MARGINAL_AXES[v["marginal"]])
        else:
            estimate = kde(samples, grid_n=v["grid_n"])
            probe = smoothness_probe(estimate)
    except (DomainError, ValueError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)

    cfg = _echo_config(v)
    if v["marginal"] is not None:
        rows = ((i, grid[i], dens[i]) for i in range(len(grid)))
        artifacts.write_csv(v["out"], ["i", "x", "value"], rows, config=cfg)
        click.echo(f"density: 1D marginal {v['marginal']} -> {v['out']}")
        return

    def rows():
        g = v["grid_n"]
        for ix in range(g):
            for iy in range(g):
                for iz in range(g):
                    yield (
                        ix, iy, iz,
                        estimate.axes[0][ix], estimate.axes[1][iy], estimate.axes[2][iz],
                        estimate.values[ix, iy, iz],
                    )

    cfg["mass"] = estimate.mass()
    cfg["captured_fraction"] = estimate.captured_fraction
    cfg["probe_all_finite"] = probe.all_finite
    artifacts.write_csv(v["out"], ["ix", "iy", "iz", "x", "y", "z", "value"], rows(), config=cfg)
    if v["plot"]:
        figures.density_figure(estimate, Path(v["out"]).with_suffix(".png"))
    click.echo(
        f"density: mass {estimate.mass():.4f}, captured {estimate.captured_fraction:.3f} -> {v['out']}"
    )


@main.command("verify-all")
@click.option("--H", "h", type=float, default=0.4, show_default=True)
@click.option("--T", "t", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--quick", is_flag=True, help="Reduced sample sizes for a fast pass.")
@click.option("--threads", type=int, default=_default_threads)
@click.option("--out-dir", type=click.Path(file_okay=False), default="verify-out", show_default=True)
@config_option
@click.pass_context
def verify_all(ctx, **values):
    """Run every check group and persist one artifact per group."""
    v = finalize(ctx, **values)
    params = _params(v["h"], v["t"])
    try:
        reports = verify.run_all(params, seed=v["seed"], quick=v["quick"], threads=v["threads"])
    except (DomainError, QuadratureError, np.linalg.LinAlgError) as err:
        _fail_numerical(err)
    out_dir = Path(v["out_dir"])
    cfg = _echo_config(v)
    for name, report in reports.items():
        artifacts.write_json(out_dir / f"{name}.json", report, config=cfg)
    for name, ok in reports["summary"]["checks"].items():
        click.echo(f"  {'pass' if ok else 'FAIL'}  {name}")
    overall = reports["summary"]["passed"]
    click.echo(f"verify-all: {'pass' if overall else 'FAIL'} -> {out_dir}/")
    if not overall:
        sys.exit(1)


if __name__ == "__main__":
    main()
