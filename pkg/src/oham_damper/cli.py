"""Command-line interface: ``oham-damper {reference,solve,compare,residual,models}``.

Exit codes: 0 success, 2 configuration error, 3 numerical blow-up,
4 non-convergence under ``--strict``, 5 span mismatch.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import ConfigError, RunConfig
from .etp import EtpExpression, EtpTerm, Phase
from .models import (
    BinghamBodyParams,
    BinghamForceParams,
    FieldSaturationParams,
    HerschelBulkleyParams,
    LiModelParams,
    Regime,
    bingham_body_force,
    bingham_force,
    bingmax_force,
    field_saturation,
    herschel_bulkley_stress,
    li_force,
)
from .multistep import (
    PiecewiseSolution,
    compare_curves,
    compare_to_oracle,
    evaluate_piecewise,
    solve_multistep,
    step_index,
)
from .oham import ic_coefficient
from .reference import AugmentedState, IntegrationError, OracleTrajectory, integrate, sample
from .system import MemoryForcing, ResidualEvaluator

logger = logging.getLogger("oham_damper")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NONCONVERGED = 4
EXIT_SPAN = 5

GRID_POINTS = 2001
CSV_FMT = "%.15g"


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------- io


def write_csv(path: Path, header: list[str], columns: list[np.ndarray]) -> None:
    data = np.column_stack(columns)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=CSV_FMT, delimiter=",")


def write_plot_data(path: Path, t: np.ndarray, y: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        np.savetxt(fh, np.column_stack([t, y]), fmt=CSV_FMT, delimiter=" ")


def read_trajectory_csv(path: Path, cfg: RunConfig) -> OracleTrajectory:
    try:
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read reference CSV {path}: {exc}", EXIT_CONFIG) from exc
    if data.shape[1] != 4 or len(data) < 2:
        raise CliError(f"reference CSV {path} must have columns t,x,v,w and at least two rows", EXIT_CONFIG)
    return OracleTrajectory(t=data[:, 0], states=data[:, 1:], params=cfg.damper, h=float(data[1, 0] - data[0, 0]))


def format_report(sol: PiecewiseSolution, cfg: RunConfig) -> str:
    d = sol.params
    lines = [
        "# OHAM piecewise solution (step-local time t' = t - t_lo)",
        f"# damper: c={d.c!r} mu={d.mu!r} alpha={d.alpha!r} beta={d.beta!r} f0={d.f0!r} A={d.A!r} v0={d.v0!r}",
        f"# memory_carry: {'true' if sol.memory_carry else 'false'}",
        f"# optimizer: {cfg.optimizer.method.value} max_evals={cfg.optimizer.max_evals} "
        f"restarts={cfg.optimizer.restarts} seed={cfg.optimizer.seed}",
        "",
    ]
    for i, step in enumerate(sol.steps, start=1):
        ts = step.trial
        lines.append(f"step {i}: t in [{step.t_lo:.10f}, {step.t_hi:.10f}]")
        rows = [("A", ts.A), ("v0", ts.v0), ("lambda", ts.lam), ("omega", ts.omega)]
        rows += [(f"C{k}", c) for k, c in enumerate(ts.C, start=1)]
        rows += [("D (derived)", ic_coefficient(ts)), ("J", step.J), ("w_in", step.w_in)]
        rows += [("x_end", step.end_state.x), ("v_end", step.end_state.v), ("w_end", step.end_state.w)]
        lines.extend(f"  {name:<12}= {value:.10f}" for name, value in rows)
        lines.append(f"  converged   = {'yes' if step.converged else 'no'} (evals={step.evals})")
        if not sol.memory_carry and i > 1:
            lines.append(f"  neglected history forcing for t' >= 0.5: <= {step.neglected_forcing_bound(d):.3e}")
        lines.append(f"  x(t') = {step.expr}")
        lines.append("")
    return "\n".join(lines)


# ----------------------------------------------------------------- config flags


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = config_mod.load(args.config) if args.config else RunConfig()
    updates = {}
    if args.steps is not None or args.t_end is not None:
        steps = args.steps if args.steps is not None else len(cfg.boundaries) - 1
        t_end = args.t_end if args.t_end is not None else cfg.t_end
        if steps < 1:
            raise ConfigError("must be at least 1", "--steps")
        if not t_end > cfg.t_start:
            raise ConfigError(f"must exceed the start time {cfg.t_start}", "--t-end")
        updates["boundaries"] = tuple(float(b) for b in np.linspace(cfg.t_start, t_end, steps + 1))
    if args.no_memory_carry:
        updates["memory_carry"] = False
    opt_updates = {}
    if args.seed is not None:
        opt_updates["seed"] = args.seed
    if args.method is not None:
        opt_updates["method"] = args.method
    if args.max_evals is not None:
        opt_updates["max_evals"] = args.max_evals
    if args.restarts is not None:
        opt_updates["restarts"] = args.restarts
    try:
        if opt_updates:
            updates["optimizer"] = replace(cfg.optimizer, **opt_updates)
        if args.h is not None:
            updates["oracle_h"] = args.h
        if args.out is not None:
            updates["output_dir"] = args.out
        if args.plot_data:
            updates["emit_plot_data"] = True
        return replace(cfg, **updates)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def prepare_output(cfg: RunConfig) -> Path:
    out = cfg.resolved_output_dir()
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory: {exc}", "output.dir") from exc
    (out / "config.toml").write_text(config_mod.dumps(cfg))
    return out


def run_reference(cfg: RunConfig) -> OracleTrajectory:
    d = cfg.damper
    try:
        return integrate(d, AugmentedState(d.A, d.v0, 0.0), cfg.t_start, cfg.t_end, cfg.oracle_h)
    except IntegrationError as exc:
        raise CliError(f"reference integration failed: {exc}", EXIT_BLOWUP) from exc


def run_solve(cfg: RunConfig) -> PiecewiseSolution:
    try:
        return solve_multistep(cfg.damper, cfg.plan)
    except ArithmeticError as exc:
        raise CliError(str(exc), EXIT_BLOWUP) from exc


def check_strict(sol: PiecewiseSolution, strict: bool) -> None:
    bad = [i for i, s in enumerate(sol.steps, start=1) if not s.converged]
    if bad and strict:
        raise CliError(f"optimizer did not converge on step(s) {bad}", EXIT_NONCONVERGED)


# -------------------------------------------------------------------- commands


def cmd_reference(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = prepare_output(cfg)
    traj = run_reference(cfg)
    write_csv(out / "reference.csv", ["t", "x", "v", "w"], [traj.t, traj.x, traj.v, traj.w])
    final = traj.state(len(traj) - 1)
    print(f"reference: {len(traj) - 1} RK4 steps of h={cfg.oracle_h:g} on [{cfg.t_start:g}, {cfg.t_end:g}]")
    print(f"final state: t={traj.t_end:.15g} x={final.x:.15g} v={final.v:.15g} w={final.w:.15g}")
    print(f"wrote {out / 'reference.csv'}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = prepare_output(cfg)
    sol = run_solve(cfg)
    t = np.linspace(sol.t_start, sol.t_end, GRID_POINTS)
    x, v = evaluate_piecewise(sol, t)
    write_csv(out / "oham.csv", ["t", "x", "v", "step_index"], [t, x, v, step_index(sol, t) + 1])
    (out / "params_report.txt").write_text(format_report(sol, cfg))
    for i, s in enumerate(sol.steps, start=1):
        print(
            f"step {i} [{s.t_lo:g}, {s.t_hi:g}]: J={s.J:.10f} lambda={s.trial.lam:.10f} "
            f"omega={s.trial.omega:.10f}{'' if s.converged else ' (not converged)'}"
        )
    print(f"wrote {out / 'oham.csv'} and {out / 'params_report.txt'}")
    check_strict(sol, args.strict)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = prepare_output(cfg)
    traj = read_trajectory_csv(Path(args.reference_csv), cfg) if args.reference_csv else run_reference(cfg)
    if args.self_compare:
        t = np.linspace(traj.t0, traj.t_end, GRID_POINTS)
        x_ref = sample(traj, t)[:, 0]
        cmp = compare_curves(t, x_ref.copy(), x_ref, np.zeros(len(t), dtype=int), 1)
        sol = None
    else:
        if traj.t0 > cfg.t_start + 1e-12 or traj.t_end < cfg.t_end - 1e-12:
            raise CliError(
                f"reference span [{traj.t0:g}, {traj.t_end:g}] does not cover [{cfg.t_start:g}, {cfg.t_end:g}]",
                EXIT_SPAN,
            )
        sol = run_solve(cfg)
        cmp = compare_to_oracle(sol, traj, GRID_POINTS)
    write_csv(out / "compare.csv", ["t", "x_oham", "x_ref", "abs_err"], [cmp.t, cmp.x_approx, cmp.x_ref, cmp.abs_err])
    lines = [f"max_abs = {cmp.max_abs:.15g}", f"rms = {cmp.rms:.15g}", f"rel_l2 = {cmp.rel_l2:.15g}"]
    lines += [f"step {p['step']}: max_abs = {p['max_abs']:.15g} rms = {p['rms']:.15g}" for p in cmp.per_step]
    (out / "metrics.txt").write_text("\n".join(lines) + "\n")
    if cfg.emit_plot_data:
        write_plot_data(out / "plot_numerical.dat", cmp.t, cmp.x_ref)
        write_plot_data(out / "plot_oham.dat", cmp.t, cmp.x_approx)
    print("\n".join(lines))
    if sol is not None:
        check_strict(sol, args.strict)
    return EXIT_OK


def cmd_residual(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    out = prepare_output(cfg)
    sol = run_solve(cfg)
    t = np.linspace(sol.t_start, sol.t_end, GRID_POINTS)
    idx = step_index(sol, t)
    R = np.empty_like(t)
    for k, step in enumerate(sol.steps):
        mask = idx == k
        forcing = MemoryForcing(step.w_in) if sol.memory_carry and step.w_in != 0.0 else None
        R[mask] = ResidualEvaluator(sol.params, step.expr, forcing)(t[mask] - step.t_lo)
    write_csv(out / "residual.csv", ["t", "R", "step_index"], [t, R, idx + 1])
    print(f"max |R| = {np.abs(R).max():.15g}")
    print(f"wrote {out / 'residual.csv'}")
    check_strict(sol, args.strict)
    return EXIT_OK


# ---------------------------------------------------------------------- models


def parse_range(text: str, name: str) -> np.ndarray:
    """``start:stop:step`` (inclusive of ``stop``) or a single value."""
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"malformed range {text!r}", name) from None
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) != 3:
        raise ConfigError(f"range must be start:stop:step, got {text!r}", name)
    start, stop, step = nums
    if not step > 0 or stop < start or not all(map(math.isfinite, nums)):
        raise ConfigError(f"range needs step > 0 and stop >= start, got {text!r}", name)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(n)


MODEL_NAMES = ("bingham", "herschel-bulkley", "field-law", "bingham-body", "li", "bingmax")


def tabulate_model(args: argparse.Namespace) -> tuple[list[str], list[np.ndarray]]:
    name = args.model
    if name == "bingham":
        v = parse_range(args.v, "--v")
        p = BinghamForceParams(f_c=args.fc, c_0=args.c0, f_0=args.f0)
        return ["v", "F"], [v, bingham_force(p, v)]
    if name == "herschel-bulkley":
        v = parse_range(args.v, "--v")
        p = HerschelBulkleyParams(k_consistency=args.c0, m=args.m)
        return ["gamma_dot", "tau"], [v, herschel_bulkley_stress(p, args.fc, v) + args.f0]
    if name == "field-law":
        B = parse_range(args.B, "--B")
        p = FieldSaturationParams(Y0=args.y0, Yinf=args.yinf, alpha_ys=args.alpha_ys)
        return ["B", "Y"], [B, field_saturation(p, B)]
    if name == "bingham-body":
        p = BinghamBodyParams(f_c=args.fc, c_0=args.c0, f_0=args.f0, k_spring=args.k_spring)
        if Regime(args.regime) is Regime.FLOW:
            v = parse_range(args.v, "--v")
            return ["v1", "F"], [v, bingham_body_force(p, Regime.FLOW, v, 0.0, 0.0)]
        dx = parse_range(args.dx, "--dx")
        return ["dx", "F"], [dx, bingham_body_force(p, Regime.STICK, 0.0, np.zeros_like(dx), dx)]
    if name == "li":
        v = parse_range(args.v, "--v")
        p = LiModelParams(f_c=args.fc, c_0=args.c0, m_fluid=args.m_fluid)
        return ["v", "F"], [v, li_force(p, v, args.a)]
    # bingmax: velocity history v(t) = v_const + v_amp sin(v_freq t)
    t = parse_range(args.t, "--t")
    history = EtpExpression(
        (EtpTerm(args.v_const), EtpTerm(args.v_amp, 0, 0.0, args.v_freq, Phase.SIN))
    )
    F = np.array([bingmax_force(args.c, args.mu, args.fc, history, ti) for ti in t])
    return ["t", "F"], [t, F]


def cmd_models(args: argparse.Namespace) -> int:
    try:
        header, cols = tabulate_model(args)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc), args.model) from exc
    if args.csv:
        path = Path(args.csv)
    else:
        out = Path(args.out) if args.out else RunConfig().resolved_output_dir()
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"models_{args.model}.csv"
    write_csv(path, header, cols)
    print(f"wrote {len(cols[0])} rows to {path}")
    return EXIT_OK


# ---------------------------------------------------------------------- parser


def _run_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="TOML run configuration")
    p.add_argument("--t-end", type=float, help="end time; with --steps gives uniform boundaries")
    p.add_argument("--steps", type=int, help="number of uniform steps")
    p.add_argument("--no-memory-carry", action="store_true", help="drop the carried history term")
    p.add_argument("--strict", action="store_true", help="exit 4 if any step did not converge")
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["nelder-mead", "lm"])
    p.add_argument("--max-evals", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--threads", type=int, default=None, help="cap on numeric-library threads")
    p.add_argument("--h", type=float, help="reference RK4 step")
    p.add_argument("--out", help="output directory (fallback: $OHAM_DAMPER_OUT)")
    p.add_argument("--plot-data", action="store_true", help="emit two-column plot data files")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oham-damper", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = _run_options()
    sub.add_parser("reference", parents=[run], help="RK4 reference trajectory").set_defaults(func=cmd_reference)
    sub.add_parser("solve", parents=[run], help="piecewise OHAM solution").set_defaults(func=cmd_solve)
    cmp = sub.add_parser("compare", parents=[run], help="OHAM vs reference error metrics")
    cmp.add_argument("--reference-csv", help="reuse a reference.csv instead of integrating")
    cmp.add_argument("--self", dest="self_compare", action="store_true", help="compare the reference with itself")
    cmp.set_defaults(func=cmd_compare)
    sub.add_parser("residual", parents=[run], help="residual of the OHAM solution").set_defaults(func=cmd_residual)

    m = sub.add_parser("models", help="tabulate a constitutive model")
    m.add_argument("model", choices=MODEL_NAMES)
    m.add_argument("--v", "--gamma-dot", dest="v", default="-2:2:0.5", help="velocity / shear-rate range a:b:step")
    m.add_argument("--fc", "--tau-y", dest="fc", type=float, default=1.0, help="friction force / yield stress")
    m.add_argument("--c0", "--eta", "--k", dest="c0", type=float, default=1.0, help="viscous coefficient / consistency")
    m.add_argument("--f0", type=float, default=0.0, help="force offset")
    m.add_argument("--m", type=float, default=1.0, help="Herschel-Bulkley flow index")
    m.add_argument("--B", default="0:2:0.1", help="flux density range")
    m.add_argument("--y0", type=float, default=1.0)
    m.add_argument("--yinf", type=float, default=0.0)
    m.add_argument("--alpha-ys", type=float, default=1.0)
    m.add_argument("--k-spring", type=float, default=1.0)
    m.add_argument("--regime", choices=[r.value for r in Regime], default="flow")
    m.add_argument("--dx", default="-1:1:0.25", help="x2 - x1 range for the stick regime")
    m.add_argument("--m-fluid", type=float, default=0.0)
    m.add_argument("--a", type=float, default=0.0, help="acceleration for the li model")
    m.add_argument("--c", type=float, default=1.0, help="bingmax damping")
    m.add_argument("--mu", type=float, default=20.0, help="bingmax relaxation rate")
    m.add_argument("--t", default="0:10:0.5", help="bingmax time range")
    m.add_argument("--v-const", type=float, default=0.0)
    m.add_argument("--v-amp", type=float, default=1.0)
    m.add_argument("--v-freq", type=float, default=1.0)
    m.add_argument("--out", help="output directory")
    m.add_argument("--csv", help="explicit CSV path")
    m.add_argument("--threads", type=int, default=None)
    m.add_argument("-v", "--verbose", action="store_true")
    m.set_defaults(func=cmd_models)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=max(1, args.threads)):
                return args.func(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
