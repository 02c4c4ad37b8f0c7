"""Command-line front end: gauss, algebraic, simulate, analyze, reproduce, serve."""
import argparse
import logging
import sys
import time as clock
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import numpy as np

from app.core.config import settings
from app.core.exceptions import AcceptanceError, InsufficientDataError, InvalidArgumentError, VFEError
from app.core.run_config import RunConfig
from app.schemas.models import GaussArgs, GridSpec, RationalTime
from app.services.algebraic_service import algebraic_service
from app.services.analysis_service import analysis_service
from app.services.export_service import export_service
from app.services.gauss_sum_service import gauss_sum_service
from app.services.orchestrator import SCALES, TARGETS, orchestrator
from app.services.spectral_service import spectral_service

logger = logging.getLogger("vfe")


def cmd_gauss(args: argparse.Namespace) -> int:
    gauss_args = GaussArgs(a=args.a, b=args.b, c=args.c)
    direct = gauss_sum_service.gauss_sum_direct(gauss_args)
    closed = gauss_sum_service.gauss_sum_closed(gauss_args)
    magnitude = gauss_sum_service.gauss_magnitude(gauss_args)
    agree = abs(direct.to_complex() - closed.to_complex()) < settings.GAUSS_TOLERANCE
    print(f"G({args.a}, {args.b}, {args.c})")
    print(f"  direct: {direct.re:.15g} {direct.im:+.15g}i")
    print(f"  closed: {closed.re:.15g} {closed.im:+.15g}i")
    print(f"  |G|:    {magnitude:.15g}")
    print(f"  agree:  {agree}")
    return 0


def cmd_algebraic(args: argparse.Namespace) -> int:
    time = _rational_time(args.M, args.p, args.q)
    if args.perturb is not None:
        time = algebraic_service.perturbed_time(time.M, time.p, time.q, args.perturb)
    residual = algebraic_service.closure_residual(time)
    polygon = algebraic_service.build_polygon(time)
    out_dir = Path(args.out or settings.OUT_DIR)
    files = export_service.write_polygon(polygon, out_dir)
    print(f"M={time.M} p={time.p} q={time.q}  t={time.t:.17g}")
    print(f"  rho:              {polygon.rho:.17g}")
    print(f"  psi_hat0:         {polygon.psi_hat0:.17g}")
    print(f"  closure residual: {residual:.3e}")
    print(f"  sides:            {algebraic_service.distinct_sides(polygon)}")
    print(f"  written:          {files['csv']}, {files['json']}")
    if args.perturb is not None:
        cloud = _write_tangent_cloud(polygon, out_dir)
        print(f"  tangent cloud:    {cloud}")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _config(args, M=args.M, nodes_per_side=args.nodes_per_side, steps=args.steps,
                     dump_times=args.dump_times, out=args.out)
    steps = config.steps or spectral_service.reference_steps(config.nodes_per_side)
    spec = _grid(config.M, config.N, steps)
    dump_times, labels = _dump_times(config.dump_times, spec)

    started = clock.perf_counter()
    traj = spectral_service.run(spec, record_full_at=dump_times)
    wall = clock.perf_counter() - started
    out_dir = Path(config.out or settings.OUT_DIR) / f"M{config.M}_n{config.nodes_per_side}"
    manifest = export_service.write_trajectory(traj, out_dir, wall_time=wall, dump_labels=labels)
    print(f"Simulated M={config.M}, N={config.N}, n_t={steps} in {wall:.1f}s")
    print(f"  manifest: {manifest}")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _config(args, run_dir=args.run_dir, out=args.out, phi_terms=args.phi_terms)
    if not config.run_dir:
        raise InvalidArgumentError("analyze needs --run-dir (a directory holding manifest.json)")
    run_dir = Path(config.run_dir)
    traj = export_service.read_trajectory(run_dir / "manifest.json")
    spec = traj.spec
    out_dir = Path(config.out) if config.out else run_dir
    report = {"spec": {"M": spec.M, "N": spec.N, "n_t": spec.n_t}, "warnings": []}

    speed = analysis_service.fit_center_speed(traj)
    report["speed"] = speed.model_dump()

    comparison = _comparison_states(traj)
    if comparison:
        states, times = comparison
        report["position_error"] = analysis_service.compare_trajectories(states, times, speed.c_M)
    if spec.M == 3 and spec.n_t % 3 == 0 and spec.n_t // 3 in traj.dumps:
        report["midpoint_error"] = analysis_service.compare_tangent_midpoints(traj.dumps[spec.n_t // 3], 3)

    times, z = analysis_service.z_of_t(traj)
    tau, z_M = analysis_service.z_M(traj, speed.c_M)
    phi = analysis_service.phi_on_uniform_grid(spec.n_t, config.phi_terms)
    export_service.write_series(out_dir / "z_t.csv", ["t", "z_re", "z_im"], times, z)
    export_service.write_series(out_dir / "phi_t.csv", ["tau", "phi_re", "phi_im", "z_M_re", "z_M_im"],
                                tau, phi, z_M)
    report["affine"] = analysis_service.affine_fit(z_M, phi).model_dump(by_alias=True)

    t_pq = float(Fraction(config.holder_p, config.holder_q))
    try:
        holder = analysis_service.holder_exponent(tau, z_M, t_pq, config.holder_window, config.holder_side)
        log_d, log_z = analysis_service.holder_samples(tau, z_M, t_pq, config.holder_window, config.holder_side)
        export_service.write_series(out_dir / "holder_pairs.csv", ["log_dt", "log_dz"], log_d, log_z)
        report["holder"] = holder.model_dump()
    except InsufficientDataError as e:
        logger.warning(f"Skipping Holder fit: {e}")
        report["warnings"].append(str(e))

    path = export_service.write_report(report, out_dir / "report.json")
    print(f"c_M = {speed.c_M:.6f}, max |h - c_M t| = {speed.max_deviation:.4e}")
    if "position_error" in report:
        print(f"max |X_num - c_M t e3 - X_alg| = {report['position_error']:.4e}")
    print(f"report: {path}")
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    config = _config(args, scale=args.scale, out=args.out)
    report = orchestrator.reproduce_sync(args.target, config.scale, Path(config.out or settings.OUT_DIR))
    for c in report["criteria"]:
        status = "PASS" if c["passed"] else "FAIL"
        bounds = f"[{_num(c['lower'])}, {_num(c['upper'])}]"
        print(f"  {status}  {c['name']}: measured {c['measured']:.4e}, expected {_num(c['expected'])}, band {bounds}")
    if not report["passed"]:
        raise AcceptanceError(f"{args.target} ({config.scale}) failed at least one criterion")
    print(f"{args.target} ({config.scale}): all criteria passed")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn
    uvicorn.run("app.main:app", host=args.host, port=args.port, reload=False)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfe", description="Polygonal vortex filament engine")
    parser.add_argument("--verbose", "-v", action="store_true", help="DEBUG logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gauss", help="generalized quadratic Gauss sum G(a, b, c)")
    p.add_argument("-a", type=int, required=True)
    p.add_argument("-b", type=int, required=True)
    p.add_argument("-c", type=int, required=True)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser("algebraic", help="exact skew polygon at t_pq = (2pi/M^2)(p/q)")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--perturb", type=int, metavar="Q_PRIME",
                   help="build at t_pq + (2pi/M^2)/Q_PRIME and write the stereographic tangent cloud")
    p.add_argument("--out", help="output directory (default: $VFE_OUT_DIR)")
    p.set_defaults(func=cmd_algebraic)

    p = sub.add_parser("simulate", help="pseudo-spectral RK4 run up to t = 2pi/M^2")
    p.add_argument("--config", help="run config file (# vfe-run-config v1)")
    p.add_argument("--M", type=int)
    p.add_argument("--nodes-per-side", dest="nodes_per_side", type=int, help="N/M, a power of two")
    p.add_argument("--steps", type=int, help="time steps (default: 151200*4^r for N/M = 512*2^r)")
    p.add_argument("--dump-times", dest="dump_times",
                   help='file with one time per line, "paper1260" or "none"')
    p.add_argument("--out", help="output root (default: $VFE_OUT_DIR)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="fits and comparisons over a finished run")
    p.add_argument("--config", help="run config file")
    p.add_argument("--run-dir", dest="run_dir", help="directory holding manifest.json")
    p.add_argument("--phi-terms", dest="phi_terms", type=int)
    p.add_argument("--out", help="report directory (default: the run directory)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reproduce", help="chain simulate, algebraic and analyze for a published table")
    p.add_argument("target", choices=TARGETS)
    p.add_argument("--scale", choices=SCALES)
    p.add_argument("--config", help="run config file")
    p.add_argument("--out", help="output root (default: $VFE_OUT_DIR)")
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("serve", help="start the HTTP API")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    try:
        return args.func(args)
    except VFEError as e:
        logger.error(str(e))
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except ValueError as e:
        # pydantic validation of direct arguments
        print(f"error: {e}", file=sys.stderr)
        return InvalidArgumentError.exit_code


def _config(args: argparse.Namespace, **overrides) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values = RunConfig.load(Path(args.config)).model_dump()
    values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig.build(**values)


def _rational_time(M: int, p: int, q: int) -> RationalTime:
    try:
        return RationalTime(M=M, p=p, q=q)
    except ValueError as e:
        raise InvalidArgumentError(f"invalid rational time M={M}, p={p}, q={q}") from e


def _write_tangent_cloud(polygon, out_dir: Path) -> Path:
    """tangents_M<M>_p<p>_q<q>.csv: T per segment and its stereographic image from the north pole."""
    time = polygon.time
    T = polygon.tangents
    projected = analysis_service.stereographic_projection(T)
    path = out_dir / f"tangents_M{time.M}_p{time.p}_q{time.q}.csv"
    return export_service.write_series(path, ["k", "T1", "T2", "T3", "w_re", "w_im"],
                                       np.arange(len(T)), T[:, 0], T[:, 1], T[:, 2], projected)


def _grid(M: int, N: int, steps: int) -> GridSpec:
    try:
        return GridSpec(M=M, N=N, n_t=steps)
    except ValueError as e:
        raise InvalidArgumentError(f"invalid grid M={M}, N={N}, n_t={steps}") from e


def _dump_times(option: Optional[str], spec):
    """(times, {step: label}) for --dump-times."""
    if not option or option == "none":
        return [], {}
    if option == "paper1260":
        divisions = settings.COMPARISON_DIVISIONS
        times = [spec.t_final * m / divisions for m in range(divisions + 1)]
    else:
        try:
            lines = Path(option).read_text().split()
            times = [float(v) for v in lines]
        except (OSError, ValueError) as e:
            raise InvalidArgumentError(f"cannot read dump times from {option}: {e}") from e
    labels = {int(round(t / spec.dt)): m for m, t in enumerate(times)}
    return times, labels


def _comparison_states(traj):
    """Dumped states at the comparison grid, if the run recorded all of them."""
    spec = traj.spec
    times = analysis_service.comparison_times(spec.M)
    states = []
    for time in times:
        step = int(round(time.t / spec.dt))
        if step not in traj.dumps or abs(step * spec.dt - time.t) > 1e-9:
            return None
        states.append(traj.dumps[step])
    return states, times


def _num(value) -> str:
    return "-" if value is None else f"{value:.4e}"


if __name__ == "__main__":
    sys.exit(main())
