"""Command line interface: ``ccfp check|solve|bounds|validate|approx-dump``.

Exit codes: 0 optimal/pass, 1 certification failed, 2 infeasible,
3 iteration limit, 4 assumption failure, 5 I/O, input or digest mismatch.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from . import io
from .approx import DEFAULT_Z_MAX, approximation, eval_pwa, make_breakpoints
from .errors import AssumptionError, CcfpError, DomainError, ParseError
from .normal_dist import log_quantile
from .reformulate import Variant, build_nlp
from .solver import SolveOptions, solve
from .validate import mc_probability

EXIT_OK = 0
EXIT_CERT_FAILED = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3
EXIT_ASSUMPTION = 4
EXIT_IO = 5
STATUS_EXIT = {"optimal": EXIT_OK, "infeasible": EXIT_INFEASIBLE, "iteration-limit": EXIT_LIMIT}

instance_option = click.option(
    "-i", "--instance", "instance_path", required=True, help="Instance JSON path or bundled instance name."
)
z_max_option = click.option("--z-max", type=float, default=DEFAULT_Z_MAX, show_default=True, help="Largest breakpoint.")
seed_option = click.option("--seed", type=int, default=0, show_default=True, help="64-bit RNG seed.")


def _load(instance_path):
    try:
        return io.load_instance(instance_path)
    except ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)


def _k_values(raw) -> list[int]:
    out = []
    for item in raw:
        for part in str(item).split(","):
            if part.strip():
                out.append(int(part))
    return out


def _fail_assumption(exc: AssumptionError):
    click.echo(f"error: {exc}", err=True)
    if exc.report is not None:
        click.echo(exc.report.format(), err=True)
    sys.exit(EXIT_ASSUMPTION)


def _solve(inst, variant, seed, multistart):
    nlp = build_nlp(inst, variant)
    return solve(nlp, SolveOptions(seed=seed, multistart=multistart))


class _Group(click.Group):
    """Maps usage and input errors to exit code 5 so that 2 always means infeasible."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            return super().main(args, prog_name, complete_var, standalone_mode=False, **extra)
        except click.exceptions.Exit as exc:
            sys.exit(exc.exit_code)
        except click.ClickException as exc:
            exc.show()
            sys.exit(EXIT_IO)
        except click.Abort:
            click.echo("aborted", err=True)
            sys.exit(EXIT_CERT_FAILED)
        except CcfpError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_IO)


@click.group(cls=_Group)
@click.version_option(package_name="ccfp")
def cli():
    """Chance-constrained fractional programs with a random benchmark."""


@cli.command()
@instance_option
def check(instance_path):
    """Print the assumption report for an instance."""
    inst = _load(instance_path)
    report = inst.report
    click.echo(report.format())
    sys.exit(EXIT_ASSUMPTION if report.failed() else EXIT_OK)


@cli.command("solve")
@instance_option
@click.option("--method", type=click.Choice(["exact", "secant", "tangent"]), default="secant", show_default=True)
@click.option("-K", "K", type=int, default=3, show_default=True, help="Number of secant segments.")
@z_max_option
@seed_option
@click.option("--multistart", type=int, default=5, show_default=True)
@click.option("--samples", type=int, default=0, help="Monte Carlo samples for an inline validation (0 = skip).")
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Write the result JSON here.")
def solve_cmd(instance_path, method, K, z_max, seed, multistart, samples, out):
    """Solve one variant and report the optimum."""
    inst = _load(instance_path)
    try:
        variant = Variant(method, None if method == "exact" else K, z_max)
        result = _solve(inst, variant, seed, multistart)
    except AssumptionError as exc:
        _fail_assumption(exc)
    except DomainError as exc:
        raise click.UsageError(str(exc)) from None
    doc = io.result_to_dict(inst, variant, result)
    doc["validation"] = None
    if samples and result.status == "optimal":
        doc["validation"] = mc_probability(inst, result.x, samples, seed).to_dict()
    click.echo(f"{variant.label()}: status={result.status} objective={result.objective:.10g}")
    click.echo(f"  x = {np.array2string(result.x, precision=6)}")
    click.echo(f"  z = {np.array2string(result.z, precision=6)}")
    click.echo(f"  stationarity={result.stationarity:.3g} violation={result.violation:.3g} time={result.wall_time:.2f}s")
    if result.message:
        click.echo(f"  {result.message}")
    if out:
        io.write_json(doc, out)
    sys.exit(STATUS_EXIT[result.status])


@cli.command()
@instance_option
@click.option("-K", "K", multiple=True, default=("3,4,5,6",), show_default=True, help="Segment counts (repeat or comma list).")
@z_max_option
@seed_option
@click.option("--multistart", type=int, default=5, show_default=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), help="Write the CSV table here instead of stdout.")
def bounds(instance_path, K, z_max, seed, multistart, out):
    """Secant (lower) and tangent (upper) bounds for each K."""
    inst = _load(instance_path)
    rows = []
    worst = EXIT_OK
    try:
        for k in _k_values(K):
            sec = _solve(inst, Variant("secant", k, z_max), seed, multistart)
            tan = _solve(inst, Variant("tangent", k, z_max), seed, multistart)
            rows.append((k, sec, tan))
            worst = max(worst, STATUS_EXIT[sec.status], STATUS_EXIT[tan.status])
    except AssumptionError as exc:
        _fail_assumption(exc)
    header = ["K", "secant_objective", "secant_time_s", "tangent_objective", "tangent_time_s", "gap", "secant_status", "tangent_status"]
    table = [
        [k, s.objective, s.wall_time, t.objective, t.wall_time, t.objective - s.objective, s.status, t.status]
        for k, s, t in rows
    ]
    text = io.csv_text(header, table)
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
        click.echo(f"{'K':>3} {'lower (secant)':>16} {'time':>7} {'upper (tangent)':>16} {'time':>7} {'gap':>10}")
        for k, s, t in rows:
            click.echo(
                f"{k:>3} {s.objective:>16.6f} {s.wall_time:>7.2f} {t.objective:>16.6f} {t.wall_time:>7.2f} "
                f"{t.objective - s.objective:>10.6f}" + ("" if s.optimal and t.optimal else f"  [{s.status}/{t.status}]")
            )
    else:
        click.echo(text, nl=False)
    sys.exit(worst)


@cli.command("validate")
@instance_option
@click.option("-r", "--result", "result_path", required=True, type=click.Path(dir_okay=False), help="Result JSON from solve.")
@click.option("--samples", type=int, default=1_000_000, show_default=True)
@seed_option
def validate_cmd(instance_path, result_path, samples, seed):
    """Certify a solved point against the chance constraint; append the report to the result file."""
    inst = _load(instance_path)
    try:
        doc = io.read_result(result_path)
    except ParseError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_IO)
    digest = io.instance_digest(inst)
    if doc["instance_digest"] != digest:
        click.echo(f"error: result digest {doc['instance_digest']} does not match instance {digest}", err=True)
        sys.exit(EXIT_IO)
    x = np.array(doc["x"], dtype=float)
    try:
        report = mc_probability(inst, x, samples, seed)
    except DomainError as exc:
        raise click.UsageError(str(exc)) from None
    doc["validation"] = report.to_dict()
    io.write_json(doc, result_path)
    target = 1.0 - inst.epsilon
    kind = doc["variant"]["kind"]
    lo, hi = doc["validation"]["ci"]
    click.echo(f"exact probability  {report.p_exact:.10f}  (target {target:.6g})")
    click.echo(f"Monte Carlo        {report.p_mc:.10f}  95% CI [{lo:.6f}, {hi:.6f}], N={report.N}, seed={report.seed}")
    click.echo(f"agreement          {'ok' if report.agrees else 'MISMATCH'} (tolerance {report.tolerance:.3g})")
    shortfall = target - report.p_exact
    if report.p_exact >= target - 1e-9:
        click.echo("verdict            feasible")
        code = EXIT_OK
    elif kind == "tangent":
        click.echo(f"verdict            relaxation point, short of the target by {shortfall:.6g}")
        code = EXIT_OK
    else:
        click.echo(f"verdict            INFEASIBLE, short of the target by {shortfall:.6g}")
        code = EXIT_CERT_FAILED
    if not report.agrees:
        code = EXIT_CERT_FAILED
    sys.exit(code)


@cli.command("approx-dump")
@click.option("-K", "K", type=int, default=3, show_default=True)
@z_max_option
@click.option("--points", type=int, default=1000, show_default=True, help="Sweep resolution.")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False), help="Coefficient CSV.")
@click.option("--sweep", type=click.Path(dir_okay=False), help="Sweep CSV (default: <out>_sweep.csv).")
def approx_dump(K, z_max, points, out, sweep):
    """Write breakpoints and piece coefficients, plus a sweep of both approximations."""
    try:
        bp = make_breakpoints(K, z_max)
    except DomainError as exc:
        raise click.UsageError(str(exc)) from None
    sec = approximation("secant", K, z_max)
    tan = approximation("tangent", K, z_max)
    rows = []
    for k, xi in enumerate(bp.grid):
        u = sec.slopes[k] if k < sec.pieces else ""
        t = sec.intercepts[k] if k < sec.pieces else ""
        rows.append([k + 1, float(xi), u, t, tan.slopes[k], tan.intercepts[k]])
    Path(out).write_text(io.csv_text(["k", "xi", "u", "t", "d", "b"], rows), encoding="utf-8", newline="\n")
    sweep_path = Path(sweep) if sweep else Path(out).with_name(Path(out).stem + "_sweep.csv")
    zz = np.linspace(bp.grid[0], bp.grid[-1], points)
    srows = [[float(z), log_quantile(z)[0], eval_pwa(sec, z), eval_pwa(tan, z)] for z in zz]
    sweep_path.write_text(io.csv_text(["z", "log_quantile", "secant", "tangent"], srows), encoding="utf-8", newline="\n")
    click.echo(f"wrote {out} ({len(rows)} breakpoints, {sec.pieces} secants, {tan.pieces} tangents) and {sweep_path}")


def main(argv=None):
    cli.main(args=argv, prog_name="ccfp")


if __name__ == "__main__":
    main()
