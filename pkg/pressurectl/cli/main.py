import logging
import os
from typing import Dict, List, Optional

import typer
import yaml

from pressurectl.util.errors import EXIT_SIM_ABORT, ConfigError, ExceptionManager

app = typer.Typer(help="Gas-generator pressure control: simulate, compare, design, calibrate.")
calibrate_app = typer.Typer(help="Fit plant sub-models from measurement files.")
presets_app = typer.Typer(help="Scenario presets shipped in the knowledge base.")
app.add_typer(calibrate_app, name="calibrate")
app.add_typer(presets_app, name="presets")

CONTROLLER_CHOICES = ("pi", "mrac", "crm", "drcrm")


def setup_logging(level: int):
    """
    Configure application logging at process start.
    Uses basicConfig with force=True to reset pre-existing handlers.
    """
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        force=True,
    )


def _fail(exc: Exception, ctx: typer.Context) -> None:
    debug = bool(ctx.obj and ctx.obj.get("debug"))
    typer.secho(ExceptionManager.handle(exc, include_trace=debug), fg=typer.colors.RED, err=True)
    raise typer.Exit(code=ExceptionManager.exit_code(exc))


def _load_run(ref: str, ctx: typer.Context):
    from pressurectl.kb.presets import PresetService

    run = PresetService().resolve(ref)
    seed = ctx.obj.get("seed") if ctx.obj else None
    if seed is not None:
        run.scenario.noise.seed = seed
    return run


@app.callback()
def main(
    ctx: typer.Context,
    verbose: bool = typer.Option(False, "-v", "--verbose", help="Enable INFO level logging."),
    debug: bool = typer.Option(False, "-d", "--debug", help="Enable DEBUG level logging."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Noise seed; overrides scenario.noise.seed."),
):
    log_level = logging.WARNING
    if debug:
        log_level = logging.DEBUG
    elif verbose:
        log_level = logging.INFO
    setup_logging(log_level)
    ctx.obj = {"debug": debug, "seed": seed}


def _window_metrics(trace, scenario):
    from pressurectl.sim.metrics import compute_metrics

    rows = []
    if trace.aborted:
        return rows
    for w in scenario.step_windows():
        rows.append(compute_metrics(trace, w.start, w.end, w.label))
    return rows


@app.command()
def simulate(
    ctx: typer.Context,
    config: str = typer.Argument(..., help="Run config path or preset name."),
    mode: Optional[str] = typer.Option(None, "--mode", help="Controller: pi, mrac, crm or drcrm."),
    out: Optional[str] = typer.Option(None, "--out", help="Write the trace CSV here."),
):
    """Run one closed-loop scenario and print step metrics."""
    from pressurectl.controllers.design import build_controller
    from pressurectl.plant.factory import build_plant
    from pressurectl.sim.reports import metrics_report
    from pressurectl.sim.runner import controller_config_for, run_closed_loop
    from pressurectl.sim.scenario import Scenario

    try:
        run = _load_run(config, ctx)
        plant = build_plant(run.plant)
        scenario = Scenario(run.scenario, run.name or "")
        cfg = controller_config_for(run, plant, mode)
        controller = build_controller(cfg, plant.u_limits)
        trace = run_closed_loop(plant, controller, scenario, cfg.mode)
        if out:
            trace.to_csv(out)
        typer.echo(metrics_report({cfg.mode: _window_metrics(trace, scenario)}, {cfg.mode: trace}), nl=False)
    except Exception as e:
        _fail(e, ctx)
    if trace.aborted:
        typer.secho(f"Simulation aborted: {trace.diagnostic}", fg=typer.colors.RED, err=True)
        raise typer.Exit(code=EXIT_SIM_ABORT)


@app.command()
def compare(
    ctx: typer.Context,
    config: str = typer.Argument(..., help="Run config path or preset name."),
    controllers: str = typer.Option("pi,mrac,crm,drcrm", "--controllers", help="Comma-separated controller modes."),
    jobs: int = typer.Option(1, "--jobs", help="Parallel runs."),
    out_dir: Optional[str] = typer.Option(None, "--out-dir", help="Write one trace CSV per controller here."),
):
    """Run several controllers on one shared scenario and tabulate their metrics."""
    from pressurectl.plant.factory import build_plant
    from pressurectl.sim.reports import metrics_report
    from pressurectl.sim.runner import controller_config_for, controller_factory, run_batch
    from pressurectl.sim.scenario import Scenario

    try:
        modes = [m.strip() for m in controllers.split(",") if m.strip()]
        unknown = [m for m in modes if m not in CONTROLLER_CHOICES]
        if unknown or not modes:
            raise ConfigError(f"unknown controllers {unknown}; choose from {', '.join(CONTROLLER_CHOICES)}")
        run = _load_run(config, ctx)
        scenario = Scenario(run.scenario, run.name or "")
        plant = build_plant(run.plant)
        factories = [controller_factory(controller_config_for(run, plant, m), plant) for m in modes]
        traces = run_batch(lambda: build_plant(run.plant), factories, scenario, jobs=jobs, labels=modes)
        results: Dict[str, List] = {}
        for mode, trace in zip(modes, traces):
            results[mode] = _window_metrics(trace, scenario)
            if out_dir:
                os.makedirs(out_dir, exist_ok=True)
                trace.to_csv(os.path.join(out_dir, f"{mode}.csv"))
        typer.echo(_metrics_table(results))
        typer.echo(metrics_report(results, dict(zip(modes, traces))), nl=False)
    except Exception as e:
        _fail(e, ctx)
    if any(t.aborted for t in traces):
        raise typer.Exit(code=EXIT_SIM_ABORT)


def _metrics_table(results) -> str:
    header = f"{'controller':<10} {'window':<10} {'sse%':>8} {'rise_s':>8} {'settle_s':>9} {'overshoot%':>11}"
    lines = [header, "-" * len(header)]
    for mode, rows in results.items():
        for m in rows:
            flag = "" if m.settled else " *"
            lines.append(f"{mode:<10} {m.label:<10} {m.steady_state_error:>8.3f} {m.rise_time:>8.3f} "
                         f"{m.settling_time:>9.3f} {m.overshoot:>11.3f}{flag}")
    return "\n".join(lines)


@app.command()
def design(
    ctx: typer.Context,
    config: str = typer.Argument(..., help="Run config (plant section) path or preset name."),
    mode: str = typer.Option("drcrm", "--mode", help="Controller: pi, mrac, crm or drcrm."),
    spec: Optional[str] = typer.Option(None, "--spec", help="YAML with sse, rise_time, settling_time, overshoot."),
    out: Optional[str] = typer.Option(None, "--out", help="Write the run config here instead of stdout."),
):
    """Design a controller and emit a complete run config with a controller section."""
    from pressurectl.config import DesignSettings, dump_model, validate_model
    from pressurectl.plant.factory import build_plant
    from pressurectl.sim.reports import design_report
    from pressurectl.sim.runner import design_for
    from pressurectl.util.io import read_yaml

    try:
        if mode not in CONTROLLER_CHOICES:
            raise ConfigError(f"unknown mode '{mode}'; choose from {', '.join(CONTROLLER_CHOICES)}")
        run = _load_run(config, ctx)
        settings = run.design
        if spec:
            merged = dict(dump_model(settings))
            merged.update(read_yaml(spec) or {})
            merged["mode"] = mode
            settings = validate_model(DesignSettings, merged)
        plant = build_plant(run.plant)
        cfg = design_for(run, plant, mode, settings)
        data = dump_model(run)
        data["design"] = dump_model(settings)
        data["controller"] = dump_model(cfg)
        text = yaml.safe_dump(data, sort_keys=False)
        if out:
            with open(out, "w") as f:
                f.write(text)
            summary = {
                "out": out,
                "delay_steps": round(cfg.delay / cfg.dt),
                "theta0": list(cfg.theta0),
                "gamma": list(cfg.gamma),
            }
            if cfg.reference is not None:
                summary.update(a_m=cfg.reference.a_m, b_m=cfg.reference.b_m, ell=cfg.reference.ell)
            typer.echo(design_report(mode, summary), nl=False)
        else:
            typer.echo(text, nl=False)
    except Exception as e:
        _fail(e, ctx)


@app.command()
def resources(
    ctx: typer.Context,
    config: str = typer.Argument(..., help="Run config path or preset name."),
    mode: Optional[str] = typer.Option(None, "--mode", help="Controller mode; defaults to the config's."),
):
    """Memory and operation count of the embedded control law."""
    from pressurectl.plant.factory import build_plant
    from pressurectl.sim.reports import resources_report
    from pressurectl.sim.resources import resource_estimate
    from pressurectl.sim.runner import controller_config_for

    try:
        run = _load_run(config, ctx)
        cfg = run.controller if run.controller is not None and mode in (None, run.controller.mode) \
            else controller_config_for(run, build_plant(run.plant), mode)
        typer.echo(resources_report(cfg.mode, resource_estimate(cfg), cfg.dt), nl=False)
    except Exception as e:
        _fail(e, ctx)


@calibrate_app.command("inflow")
def calibrate_inflow(
    ctx: typer.Context,
    data: str = typer.Argument(..., help="CSV with columns P_ss [Pa], A_t [mm^2]."),
    config: Optional[str] = typer.Option(None, "--config", help="Run config supplying the gas parameters."),
    write: Optional[str] = typer.Option(None, "--write", help="Store the fitted c3..c6 in this config."),
):
    """Fit the cubic inflow polynomial from steady operating points."""
    from pressurectl.calibration.fitting import fit_inflow_polynomial, read_inflow_points, write_plant_section
    from pressurectl.plant.factory import cats_plant_from_config
    from pressurectl.config import PlantConfig

    try:
        plant_cfg = _load_run(config, ctx).plant if config else PlantConfig()
        gas = cats_plant_from_config(plant_cfg).gas
        fit = fit_inflow_polynomial(read_inflow_points(data), gas)
        for name, value in zip(("c3", "c4", "c5", "c6"), fit.polynomial.coeffs):
            typer.echo(f"{name}={value:.10g}")
        typer.echo(f"degree={fit.degree}")
        typer.echo(f"residual_rms={fit.residual_rms:.6g}")
        if write:
            write_plant_section(write, inflow=fit.polynomial)
    except Exception as e:
        _fail(e, ctx)


@calibrate_app.command("actuator")
def calibrate_actuator(
    ctx: typer.Context,
    data: str = typer.Argument(..., help="CSV with columns t [s], theta_mes [qc]."),
    step: float = typer.Option(..., "--step", help="Commanded step size [qc]."),
    t_step: float = typer.Option(0.0, "--t-step", help="Time of the command step [s]."),
    write: Optional[str] = typer.Option(None, "--write", help="Store tau_act and delay in this config."),
):
    """Fit the first-order-plus-dead-time actuator model from a step response."""
    from pressurectl.calibration.fitting import fit_first_order_delay, read_step_trace, write_plant_section

    try:
        fit = fit_first_order_delay(read_step_trace(data), step, t_step)
        typer.echo(f"tau_act={fit.tau_act:.6g}")
        typer.echo(f"delay={fit.delay:.6g}")
        typer.echo(f"residual_rms={fit.residual_rms:.6g}")
        if write:
            write_plant_section(write, actuator=fit)
    except Exception as e:
        _fail(e, ctx)


@presets_app.command("list")
def presets_list(ctx: typer.Context):
    """List the named presets."""
    from pressurectl.kb.presets import PresetService

    service = PresetService()
    for name in service.list():
        try:
            description = service.load(name).description or ""
        except Exception as e:
            _fail(e, ctx)
        typer.echo(f"{name:<24} {description}")


@presets_app.command("export")
def presets_export(
    ctx: typer.Context,
    name: str = typer.Argument(..., help="Preset name."),
    dest: str = typer.Argument(".", help="Destination file or directory."),
):
    """Copy a preset out of the knowledge base for editing."""
    from pressurectl.kb.presets import PresetService

    try:
        path = PresetService().export(name, dest)
        typer.echo(f"Exported '{name}' to {path}")
    except Exception as e:
        _fail(e, ctx)


def run_app():
    app()


if __name__ == "__main__":
    run_app()
