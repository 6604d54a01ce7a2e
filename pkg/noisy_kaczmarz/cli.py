"""
Command-line interface for noisy-kaczmarz.

Global options go before the subcommand:

    noisy-kaczmarz --seed 7 --out results/ gen-problem --m 2000 --n 100 --s 10 --sigma 0.05
    noisy-kaczmarz solve --problem results/
    noisy-kaczmarz bound --eta 0.01 --sigma 0.05 --x0-err2 100 --k 2000
    noisy-kaczmarz --config config/sparse_sphere.json experiment --trials 20
"""

import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import click
import numpy as np
import typer
from rich import box
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

from noisy_kaczmarz import __version__
from noisy_kaczmarz.common.config import RuntimeSettings
from noisy_kaczmarz.common.errors import NoisyKaczmarzError
from noisy_kaczmarz.common.logger import configure_logging, get_logger
from noisy_kaczmarz.common.telemetry import (
    setup_telemetry,
    shutdown_telemetry,
    telemetry_endpoint_from_env,
)
from noisy_kaczmarz.config_loader import (
    ExperimentConfig,
    PolicyConfig,
    apply_overrides,
    default_experiment_config,
    load_experiment_config,
)
from noisy_kaczmarz.core.schedule import (
    BoundParams,
    ScheduleParams,
    asymptote_large_k,
    asymptote_small_sigma,
    bound_f,
    continuous_alpha,
)
from noisy_kaczmarz.experiments.audit import audit_suite
from noisy_kaczmarz.experiments.runner import run_experiment
from noisy_kaczmarz.experiments.sweeps import (
    BASE_ETA,
    BASE_K_MAX,
    BASE_SIGMA,
    BASE_X0_ERR2,
    BOUND_SWEEP_SIGMAS,
    bound_sweep,
    emit_sweep,
    schedule_series,
)
from noisy_kaczmarz.generators import EnsembleSpec, generate_problem
from noisy_kaczmarz.policies.factory import RatePolicyFactory
from noisy_kaczmarz.reporter.curves import (
    write_bound_sweep,
    write_result,
    write_schedule_table,
    write_trace,
)
from noisy_kaczmarz.solver import solve
from noisy_kaczmarz.storage.matrix_io import read_problem, write_problem

PROG_NAME = "noisy-kaczmarz"

app = typer.Typer(
    name=PROG_NAME,
    help="Relaxed randomized Kaczmarz with the optimal scheduled learning rate",
    add_completion=False,
    no_args_is_help=True,
)
console = Console()
logger = get_logger(__name__)


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class EnsembleKindOption(str, Enum):
    SPARSE = "sparse-sphere"
    DENSE = "dense-sphere"


class NoiseOption(str, Enum):
    NORMAL = "normal"
    RADEMACHER = "rademacher"


class SamplerOption(str, Enum):
    WEIGHTED = "weighted"
    IN_ORDER = "in-order"


class SweepOption(str, Enum):
    SIGMA = "sigma"
    ETA = "eta"


@dataclass
class GlobalOptions:
    seed: Optional[int]
    config: Optional[Path]
    out: Optional[Path]
    fmt: Optional[str]
    settings: RuntimeSettings

    @property
    def out_dir(self) -> Path:
        return self.out if self.out is not None else self.settings.out_dir

    @property
    def format(self) -> str:
        return self.fmt or OutputFormat.CSV.value


def _fail(title: str, message: str) -> None:
    logger.error(f"{title}: {message}")
    console.print(
        Panel(
            f"[red]✗ {escape(message)}[/red]",
            title=f"[bold red]{title}[/bold red]",
            box=box.ROUNDED,
            border_style="red",
        )
    )
    raise typer.Exit(1)


def _options(ctx: typer.Context) -> GlobalOptions:
    opts = ctx.obj
    if not isinstance(opts, GlobalOptions):
        opts = GlobalOptions(None, None, None, None, RuntimeSettings.from_env())
    return opts


def _fmt_value(value: float) -> str:
    return f"{value:.6g}"


@app.callback()
def main_callback(
    ctx: typer.Context,
    seed: Optional[int] = typer.Option(None, "--seed", min=0, help="Master seed"),
    config: Optional[Path] = typer.Option(None, "--config", help="Experiment config (YAML or JSON)"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory"),
    fmt: Optional[OutputFormat] = typer.Option(None, "--format", help="Output format"),
    log_level: Optional[str] = typer.Option(None, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    telemetry: bool = typer.Option(
        False, "--telemetry", help="Export traces and metrics over OTLP (implied by OTEL_EXPORTER_OTLP_ENDPOINT)"
    ),
):
    """
    Relaxed randomized Kaczmarz with the optimal scheduled learning rate.
    """
    settings = RuntimeSettings.from_env()
    configure_logging(log_level or settings.log_level)
    if telemetry or telemetry_endpoint_from_env():
        setup_telemetry()
        ctx.call_on_close(shutdown_telemetry)
    ctx.obj = GlobalOptions(
        seed=seed,
        config=config,
        out=out,
        fmt=fmt.value if fmt is not None else None,
        settings=settings,
    )


@app.command()
def version():
    """Print the package version."""
    console.print(f"{PROG_NAME} {__version__}")


@app.command("gen-problem")
def gen_problem(
    ctx: typer.Context,
    m: Optional[int] = typer.Option(None, "--m", min=1, help="Number of rows"),
    n: Optional[int] = typer.Option(None, "--n", min=1, help="Number of columns"),
    s: Optional[int] = typer.Option(None, "--s", min=1, help="Nonzeros per row (sparse-sphere)"),
    sigma: Optional[float] = typer.Option(None, "--sigma", min=0.0, help="Noise scale"),
    kind: Optional[EnsembleKindOption] = typer.Option(None, "--kind", help="Row ensemble"),
    noise: Optional[NoiseOption] = typer.Option(None, "--noise", help="Noise distribution"),
    withhold_truth: bool = typer.Option(
        False, "--withhold-truth", help="Omit x and b from the sidecar (real-data mode)"
    ),
):
    """
    Generate a random problem and write matrix.txt + problem.json.
    """
    opts = _options(ctx)
    try:
        base: Dict[str, Any] = {}
        if opts.config is not None:
            base = load_experiment_config(opts.config).ensemble.model_dump()
        flags = {"m": m, "n": n, "s": s, "sigma": sigma, "seed": opts.seed}
        flags["kind"] = kind.value if kind is not None else None
        flags["noise"] = noise.value if noise is not None else None
        base.update({key: value for key, value in flags.items() if value is not None})
        if "m" not in base or "n" not in base:
            _fail("Invalid options", "gen-problem needs --m and --n (or --config)")
        spec = EnsembleSpec.model_validate(base)
        problem = generate_problem(spec)
        matrix_path, sidecar_path = write_problem(
            problem, opts.out_dir, seed=spec.seed, noise=spec.noise, include_truth=not withhold_truth
        )
    except typer.Exit:
        raise
    except (NoisyKaczmarzError, ValueError, FileNotFoundError) as e:
        _fail("Problem generation failed", str(e))

    console.print(f"[green]✓[/green] Matrix: [cyan]{matrix_path}[/cyan]")
    console.print(f"[green]✓[/green] Sidecar: [cyan]{sidecar_path}[/cyan]")
    console.print(
        f"  {spec.kind} m={spec.m} n={spec.n} sigma={spec.sigma} seed={spec.seed} nnz={problem.A.nnz}"
    )


@app.command("solve")
def solve_cmd(
    ctx: typer.Context,
    problem_dir: Path = typer.Option(..., "--problem", help="Directory holding matrix.txt and problem.json"),
    policy: str = typer.Option("scheduled_optimal", "--policy", help="Policy type"),
    mu: float = typer.Option(1.0, "--mu", help="Rate of the constant policy"),
    eta: Optional[float] = typer.Option(None, "--eta", help="Condition parameter (default 1/n)"),
    sigma: Optional[float] = typer.Option(None, "--sigma", min=0.0, help="Override the stored noise scale"),
    beta0: Optional[float] = typer.Option(None, "--beta0", min=0.0, help="β0 (default n/σ²)"),
    x0_err2: Optional[float] = typer.Option(None, "--x0-err2", min=0.0, help="‖x - x0‖² estimate"),
    k_max: Optional[int] = typer.Option(None, "--kmax", min=0, help="Iterations (default m)"),
    sampler: SamplerOption = typer.Option(SamplerOption.WEIGHTED, "--sampler", help="Row selection"),
):
    """
    Solve a problem directory and write the per-step trace.
    """
    opts = _options(ctx)
    try:
        problem = read_problem(problem_dir)
        sigma_value = problem.sigma if sigma is None else sigma
        sigma2 = sigma_value * sigma_value
        eta_value = 1.0 / problem.n if eta is None else eta
        if beta0 is not None:
            beta0_value = beta0
        elif sigma2 == 0.0:
            beta0_value = 0.0
        else:
            beta0_value = (problem.n if x0_err2 is None else x0_err2) / sigma2

        params: Dict[str, Any] = {"mu": mu} if policy == "constant" else {}
        policy_obj = RatePolicyFactory.create(
            PolicyConfig(name=policy, type=policy, params=params),
            eta=eta_value,
            sigma2=sigma2,
            beta0=beta0_value,
        )
        seed = opts.seed if opts.seed is not None else 0
        trace = solve(problem, policy_obj, sampler_kind=sampler.value, seed=seed, k_max=k_max)
        path = write_trace(trace, opts.out_dir / f"trace_{policy}.{opts.format}", opts.format)
    except (NoisyKaczmarzError, ValueError, FileNotFoundError) as e:
        _fail("Solve failed", str(e))

    table = Table(title="Solve", box=box.ROUNDED)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value")
    table.add_row("policy", policy)
    table.add_row("iterations", str(trace.iterations))
    table.add_row("final |residual|", _fmt_value(abs(trace.residuals[-1])) if trace.iterations else "-")
    if trace.sq_errors is not None:
        table.add_row("initial ‖x - x_k‖²", _fmt_value(trace.sq_errors[0]))
        table.add_row("final ‖x - x_k‖²", _fmt_value(trace.sq_errors[-1]))
    else:
        table.add_row("mode", "real data (no ground truth)")
    console.print(table)
    console.print(f"[green]✓[/green] Trace: [cyan]{path}[/cyan]")


@app.command()
def schedule(
    ctx: typer.Context,
    eta: float = typer.Option(BASE_ETA, "--eta", help="Condition parameter η"),
    sigma: float = typer.Option(BASE_SIGMA, "--sigma", min=0.0, help="Noise scale σ"),
    beta0: Optional[float] = typer.Option(None, "--beta0", min=0.0, help="β0 = ‖x - x0‖²/σ²"),
    x0_err2: Optional[float] = typer.Option(None, "--x0-err2", min=0.0, help="‖x - x0‖² (alternative to --beta0)"),
    k_max: int = typer.Option(BASE_K_MAX, "--kmax", min=0, help="Last iteration"),
    sweep: Optional[SweepOption] = typer.Option(
        None, "--sweep", help="Write one table per σ or η value around the base point"
    ),
):
    """
    Tabulate α_k, β_k, σ²β_k, f(k) and the continuous rate α(t).
    """
    opts = _options(ctx)
    try:
        if sweep is not None:
            paths = emit_sweep(
                sweep.value,
                opts.out_dir,
                opts.format,
                eta=eta,
                sigma=sigma,
                x0_err2=BASE_X0_ERR2 if x0_err2 is None else x0_err2,
                k_max=k_max,
            )
            for path in paths:
                console.print(f"[green]✓[/green] Schedule table: [cyan]{path}[/cyan]")
            return
        if beta0 is not None and x0_err2 is not None:
            _fail("Invalid options", "give --beta0 or --x0-err2, not both")
        sigma2 = sigma * sigma
        if beta0 is not None:
            params = ScheduleParams(eta=eta, sigma2=sigma2, beta0=beta0)
        else:
            params = ScheduleParams.from_error(eta, sigma2, BASE_X0_ERR2 if x0_err2 is None else x0_err2)
        series = schedule_series(params, k_max)
        path = write_schedule_table(series, opts.out_dir / f"schedule.{opts.format}", opts.format)
    except typer.Exit:
        raise
    except (NoisyKaczmarzError, ValueError) as e:
        _fail("Schedule failed", str(e))

    table = Table(title=f"Schedule (η={eta:g}, σ²={params.sigma2:g}, β0={params.beta0:g})", box=box.ROUNDED)
    for column in ("k", "α_k", "σ²β_k", "f(k)", "α(t=k)"):
        table.add_column(column, justify="right")
    shown = range(min(len(series), 11))
    for j in shown:
        table.add_row(
            str(int(series.k[j])),
            _fmt_value(series.alpha_k[j]),
            _fmt_value(series.sigma2_beta_k[j]),
            _fmt_value(series.f_k[j]),
            _fmt_value(series.alpha_continuous_t[j]),
        )
    console.print(table)
    console.print(f"[green]✓[/green] Schedule table: [cyan]{path}[/cyan]")


@app.command()
def bound(
    ctx: typer.Context,
    eta: float = typer.Option(..., "--eta", help="Condition parameter η"),
    sigma: float = typer.Option(..., "--sigma", min=0.0, help="Noise scale σ"),
    x0_err2: float = typer.Option(..., "--x0-err2", min=0.0, help="‖x - x0‖²"),
    k: float = typer.Option(..., "--k", min=0.0, help="Iteration (may be fractional)"),
    sweep: bool = typer.Option(
        False, "--sweep", help=f"Also write √f(k)/‖x‖ for σ in {BOUND_SWEEP_SIGMAS} up to k"
    ),
):
    """
    Evaluate the closed-form error bound f(k) = σ²/(ηW(e^{ηk+c})).
    """
    opts = _options(ctx)
    try:
        bp = BoundParams.create(eta, sigma * sigma, x0_err2)
        value = bound_f(k, bp)
        alpha_t = continuous_alpha(k, bp)
        small = asymptote_small_sigma(k, eta, x0_err2) if x0_err2 > 0.0 else 0.0
        large = asymptote_large_k(k, eta, bp.sigma2) if k >= 1 else float("nan")
        sweep_path = None
        if sweep:
            series = bound_sweep(eta=eta, x0_err2=x0_err2, k_max=int(k))
            sweep_path = write_bound_sweep(series, opts.out_dir / f"bound_sweep.{opts.format}", opts.format)
    except (NoisyKaczmarzError, ValueError) as e:
        _fail("Bound failed", str(e))

    console.print(f"f({k:g}) = {value!r}")
    table = Table(box=box.ROUNDED)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    table.add_row("c", _fmt_value(bp.c))
    table.add_row("√f(k)", _fmt_value(float(np.sqrt(value))))
    table.add_row("α(t = k)", _fmt_value(alpha_t))
    table.add_row("e^{-ηk}‖x - x0‖²", _fmt_value(small))
    table.add_row("σ²/(η²k)", _fmt_value(large))
    console.print(table)
    if sweep_path is not None:
        console.print(f"[green]✓[/green] Bound sweep: [cyan]{sweep_path}[/cyan]")


def _experiment_config(
    opts: GlobalOptions, overrides: Dict[str, Any]
) -> ExperimentConfig:
    cfg = load_experiment_config(opts.config) if opts.config is not None else default_experiment_config()
    overrides = {**overrides, "master_seed": opts.seed, "format": opts.fmt}
    return apply_overrides(cfg, overrides)


@app.command()
def experiment(
    ctx: typer.Context,
    trials: Optional[int] = typer.Option(None, "--trials", min=1, help="Number of trials"),
    k_max: Optional[int] = typer.Option(None, "--kmax", min=0, help="Iterations per solve"),
    sigma: Optional[float] = typer.Option(None, "--sigma", min=0.0, help="Override the ensemble σ"),
    eta: Optional[float] = typer.Option(None, "--eta", help="Override η"),
    sampler: Optional[SamplerOption] = typer.Option(None, "--sampler", help="Row selection"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="Worker threads"),
    single_trace: bool = typer.Option(False, "--single-trace", help="Also write the per-step traces of trial 0"),
):
    """
    Run a multi-trial experiment and write aggregated curves.
    """
    opts = _options(ctx)
    try:
        cfg = _experiment_config(
            opts,
            {
                "trials": trials,
                "k_max": k_max,
                "ensemble.sigma": sigma,
                "eta": eta,
                "sampler": sampler.value if sampler is not None else None,
                "single_trace": True if single_trace else None,
            },
        )
        out_dir = opts.out or (Path(cfg.output) if cfg.output else opts.settings.out_dir)
        result = run_experiment(cfg, workers=workers)
        files = write_result(result, out_dir)
    except (NoisyKaczmarzError, ValueError, FileNotFoundError) as e:
        _fail("Experiment failed", str(e))

    table = Table(title=f"{cfg.name}: {cfg.trials} trials, k = {cfg.resolved_k_max}", box=box.ROUNDED)
    table.add_column("Policy", style="cyan")
    table.add_column("mean ‖x - x_k‖²", justify="right")
    table.add_column("f(k)", justify="right")
    table.add_column("median rel. error", justify="right")
    for name, curve in result.curves.items():
        table.add_row(
            name,
            _fmt_value(curve.mse_mean[-1]),
            _fmt_value(curve.f_k[-1]),
            _fmt_value(curve.relerr_median[-1]),
        )
    console.print(table)
    console.print(f"[green]✓[/green] {len(files)} files in [cyan]{out_dir}[/cyan]")


@app.command()
def audit(
    ctx: typer.Context,
    steps: int = typer.Option(10_000, "--steps", min=1, help="Number of randomized steps"),
):
    """
    Check the exact one-step error identities on random steps.
    """
    opts = _options(ctx)
    seed = opts.seed if opts.seed is not None else 0
    try:
        summary = audit_suite(n_steps=steps, seed=seed)
    except NoisyKaczmarzError as e:
        _fail("Audit failed", e.message)

    table = Table(title=f"Step identity audit ({summary.steps} steps)", box=box.ROUNDED)
    table.add_column("Identity", style="cyan")
    table.add_column("max relative residual", justify="right")
    table.add_row("Pythagorean", f"{summary.max_pythagorean_residual:.3e}")
    table.add_row("Decomposition", f"{summary.max_decomposition_residual:.3e}")
    console.print(table)
    for alpha, mean in summary.z_mean.items():
        console.print(f"  α={alpha:g}: mean Z_k = {mean:.4g} (α²σ² = {summary.z_expected[alpha]:.4g})")
    if not summary.passed:
        _fail("Audit failed", f"residuals exceed {summary.tolerance:g}")
    console.print("[green]✓[/green] All identities hold")


def usage() -> str:
    command = typer.main.get_command(app)
    with click.Context(command, info_name=PROG_NAME) as ctx:
        return command.get_help(ctx)


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the CLI and return its exit status.

    No arguments, unknown commands and unknown flags print usage and return 2.
    """
    args = list(sys.argv[1:] if argv is None else argv)
    if not args:
        typer.echo(usage(), err=True)
        return 2
    try:
        result = app(args=args, prog_name=PROG_NAME, standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return 2
    except click.exceptions.Abort:
        return 1
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    sys.exit(main())
