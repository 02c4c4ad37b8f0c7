import asyncio
import logging
import time as clock
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from app.core import reference_values as ref
from app.core.config import settings
from app.core.exceptions import InvalidArgumentError
from app.schemas.models import CriterionResult, RationalTime, ReproductionPlan, SimulationCase, Trajectory
from app.services.algebraic_service import algebraic_service
from app.services.analysis_service import analysis_service
from app.services.export_service import export_service
from app.services.spectral_service import spectral_service

logger = logging.getLogger(__name__)

TARGETS = ("table1", "table2", "riemann", "holder")
SCALES = ("desk", "paper")
FULL_RESOLUTIONS = (512, 1024, 2048, 4096, 8192)


def simulate_case(case: SimulationCase) -> Tuple[Trajectory, float]:
    """Worker entry point: one spectral run, returned with its wall time."""
    started = clock.perf_counter()
    traj = spectral_service.run(case.spec, record_full_at=case.dump_times())
    return traj, clock.perf_counter() - started


def band(name: str, measured: float, expected: float, factor: float) -> CriterionResult:
    lower, upper = expected / factor, expected * factor
    return CriterionResult(name=name, measured=measured, expected=expected, lower=lower, upper=upper,
                           passed=bool(lower <= measured <= upper))


def window(name: str, measured: float, lower: Optional[float], upper: Optional[float],
           expected: Optional[float] = None) -> CriterionResult:
    passed = (lower is None or measured >= lower) and (upper is None or measured <= upper)
    return CriterionResult(name=name, measured=measured, expected=expected, lower=lower, upper=upper,
                           passed=bool(passed))


class ProcessingStage:
    def __init__(self, name: str, func: Callable, weight: float = 1.0):
        self.name = name
        self.func = func
        self.weight = weight


class ReproductionOrchestrator:
    """Runs a reproduction target as weighted stages and keeps a progress record per job."""

    def __init__(self):
        self.stages: List[ProcessingStage] = [
            ProcessingStage("Simulate", self._run_simulations, weight=8.0),
            ProcessingStage("Algebraic", self._run_algebraic, weight=1.0),
            ProcessingStage("Analyze", self._run_analysis, weight=1.0),
            ProcessingStage("Report", self._run_report, weight=0.5),
        ]
        self._progress: Dict[str, Dict[str, Any]] = {}

    async def get_status(self, job_id: str) -> Dict[str, Any]:
        return self._progress.get(job_id, {"job_id": job_id, "status": "unknown", "progress": 0})

    def plan(self, target: str, scale: str = "desk") -> ReproductionPlan:
        if target not in TARGETS:
            raise InvalidArgumentError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
        if scale not in SCALES:
            raise InvalidArgumentError(f"unknown scale {scale!r}; choose from {', '.join(SCALES)}")

        divisions = settings.COMPARISON_DIVISIONS
        resolutions = [settings.BASE_NODES_PER_SIDE] if scale == "desk" else list(FULL_RESOLUTIONS)
        if target == "table1":
            Ms = [3, 5, 10] if scale == "desk" else list(range(3, 11))
        elif target == "table2":
            Ms = [3, 10] if scale == "desk" else list(range(3, 11))
        elif target == "riemann":
            Ms = list(range(3, 9)) if scale == "desk" else list(range(3, 21))
            resolutions = resolutions[-1:]
        else:
            Ms = [3]
            resolutions = resolutions[-1:]

        cases = [
            SimulationCase(M=M, nodes_per_side=n, n_t=spectral_service.reference_steps(n),
                           divisions=divisions if target == "table2" else None)
            for M in Ms for n in resolutions
        ]
        return ReproductionPlan(target=target, scale=scale, cases=cases, divisions=divisions,
                                phi_terms=settings.PHI_TERMS,
                                holder_window=(settings.HOLDER_WINDOW_MIN, settings.HOLDER_WINDOW_MAX))

    async def reproduce(self, job_id: str, target: str, scale: str = "desk",
                        out_dir: Optional[Path] = None,
                        plan: Optional[ReproductionPlan] = None) -> Dict[str, Any]:
        self._progress[job_id] = {
            "job_id": job_id,
            "status": "processing",
            "progress": 0,
            "current_stage": None,
            "stages": {s.name: "pending" for s in self.stages},
            "logs": [],
            "report": None,
        }
        record = self._progress[job_id]
        context: Dict[str, Any] = {
            "job_id": job_id,
            "plan": plan or self.plan(target, scale),
            "out_dir": Path(out_dir or settings.OUT_DIR) / target,
        }

        try:
            total_weight = sum(s.weight for s in self.stages)
            current_weight = 0.0

            for stage in self.stages:
                record["current_stage"] = stage.name
                record["stages"][stage.name] = "running"
                record["logs"].append(f"Starting {stage.name}...")

                result = await stage.func(context)
                context.update(result)

                record["stages"][stage.name] = "completed"
                current_weight += stage.weight
                record["progress"] = int((current_weight / total_weight) * 100)

            record["status"] = "completed"
            record["progress"] = 100
            record["current_stage"] = None
            record["report"] = context["report"]
            return context["report"]

        except Exception as e:
            logger.error(f"Error in job {job_id} ({target}/{scale}): {str(e)}")
            record["status"] = "error"
            record["logs"].append(f"ERROR: {str(e)}")
            raise

    def reproduce_sync(self, target: str, scale: str = "desk", out_dir: Optional[Path] = None,
                       plan: Optional[ReproductionPlan] = None) -> Dict[str, Any]:
        job_id = f"{target}-{scale}"
        return asyncio.run(self.reproduce(job_id, target, scale, out_dir, plan))

    # Stages

    async def _run_simulations(self, context: Dict[str, Any]) -> Dict[str, Any]:
        plan: ReproductionPlan = context["plan"]
        record = self._progress[context["job_id"]]
        loop = asyncio.get_running_loop()
        runs: Dict[Tuple[int, int], Trajectory] = {}

        def finished(case: SimulationCase, traj: Trajectory, wall: float):
            runs[(case.M, case.nodes_per_side)] = traj
            run_dir = context["out_dir"] / f"M{case.M}_n{case.nodes_per_side}"
            labels = {int(round(t / case.spec.dt)): m for m, t in enumerate(case.dump_times())}
            export_service.write_trajectory(traj, run_dir, wall_time=wall, dump_labels=labels)
            record["logs"].append(f"Simulated M={case.M}, N/M={case.nodes_per_side} in {wall:.1f}s")

        if len(plan.cases) > 1 and settings.MAX_WORKERS > 1:
            with ProcessPoolExecutor(max_workers=settings.MAX_WORKERS) as pool:
                futures = [loop.run_in_executor(pool, simulate_case, case) for case in plan.cases]
                for case, future in zip(plan.cases, futures):
                    traj, wall = await future
                    finished(case, traj, wall)
        else:
            for case in plan.cases:
                traj, wall = await loop.run_in_executor(None, simulate_case, case)
                finished(case, traj, wall)
        return {"runs": runs}

    async def _run_algebraic(self, context: Dict[str, Any]) -> Dict[str, Any]:
        plan: ReproductionPlan = context["plan"]
        residuals: Dict[int, float] = {}
        if plan.target != "table2":
            return {"closure": residuals}
        for M in sorted({case.M for case in plan.cases}):
            times = analysis_service.comparison_times(M, plan.divisions)
            worst = 0.0
            for time in times:
                analysis_service.polygon(time)
                worst = max(worst, algebraic_service.closure_residual(time))
            residuals[M] = worst
            logger.info(f"Built {len(times)} exact polygons for M={M}; worst closure residual {worst:.3e}")
        if 3 in residuals:
            export_service.write_polygon(analysis_service.polygon(RationalTime(M=3, p=1, q=3)),
                                         context["out_dir"])
        return {"closure": residuals}

    async def _run_analysis(self, context: Dict[str, Any]) -> Dict[str, Any]:
        plan: ReproductionPlan = context["plan"]
        handler = {
            "table1": self._analyze_table1,
            "table2": self._analyze_table2,
            "riemann": self._analyze_riemann,
            "holder": self._analyze_holder,
        }[plan.target]
        results, criteria = handler(plan, context["runs"], context["out_dir"])
        return {"results": results, "criteria": criteria}

    async def _run_report(self, context: Dict[str, Any]) -> Dict[str, Any]:
        plan: ReproductionPlan = context["plan"]
        criteria: List[CriterionResult] = context["criteria"]
        report = {
            "target": plan.target,
            "scale": plan.scale,
            "passed": all(c.passed for c in criteria),
            "criteria": [c.model_dump() for c in criteria],
            "results": context["results"],
            "closure": {str(M): r for M, r in context.get("closure", {}).items()},
        }
        export_service.write_report(report, context["out_dir"] / "report.json")
        for c in criteria:
            if not c.passed:
                logger.warning(f"Criterion {c.name} failed: measured {c.measured:.4e}, "
                               f"band [{c.lower}, {c.upper}]")
        return {"report": report}

    # Target analyses

    def _analyze_table1(self, plan, runs, out_dir):
        results, criteria = {}, []
        for (M, n), traj in sorted(runs.items()):
            fit = analysis_service.fit_center_speed(traj)
            results[f"M{M}_n{n}"] = fit.model_dump()
            expected = ref.SPEED_DEVIATION.get(M, {}).get(n)
            if expected is not None:
                criteria.append(band(f"speed_deviation_M{M}_n{n}", fit.max_deviation, expected, ref.TABLE_FACTOR))
            if M in ref.CENTER_SPEED:
                c = ref.CENTER_SPEED[M]
                criteria.append(window(f"center_speed_M{M}_n{n}", fit.c_M,
                                       c - ref.CENTER_SPEED_BAND, c + ref.CENTER_SPEED_BAND, c))
        return results, criteria

    def _analyze_table2(self, plan, runs, out_dir):
        results, criteria = {}, []
        for (M, n), traj in sorted(runs.items()):
            fit = analysis_service.fit_center_speed(traj)
            times = analysis_service.comparison_times(M, plan.divisions)
            states = [traj.dump_at(time.t) for time in times]
            error = analysis_service.compare_trajectories(states, times, fit.c_M)
            entry = {"c_M": fit.c_M, "position_error": error}
            expected = ref.POSITION_ERROR.get(M, {}).get(n)
            if expected is not None:
                criteria.append(band(f"position_error_M{M}_n{n}", error, expected, ref.TABLE_FACTOR))

            if M == 3 and plan.divisions % 3 == 0:
                midpoint = analysis_service.compare_tangent_midpoints(traj.dump_at(traj.spec.t_final / 3), 3)
                entry["midpoint_error"] = midpoint
                threshold = ref.MIDPOINT_THRESHOLD_FINE if n >= 8192 else ref.MIDPOINT_THRESHOLD_DESK
                if n >= settings.BASE_NODES_PER_SIDE:
                    criteria.append(window(f"tangent_midpoint_n{n}", midpoint, None, threshold,
                                           ref.MIDPOINT_ERROR_FINE if n >= 8192 else None))
            results[f"M{M}_n{n}"] = entry
        return results, criteria

    def _analyze_riemann(self, plan, runs, out_dir):
        results, criteria = {}, []
        errors: Dict[int, float] = {}
        for (M, n), traj in sorted(runs.items()):
            fit = analysis_service.fit_center_speed(traj)
            tau, z = analysis_service.z_M(traj, fit.c_M)
            phi = analysis_service.phi_on_uniform_grid(traj.spec.n_t, plan.phi_terms)
            affine = analysis_service.affine_fit(z, phi)
            errors[M] = affine.max_abs_err
            results[f"M{M}_n{n}"] = {"c_M": fit.c_M, **affine.model_dump(by_alias=True)}
            export_service.write_series(out_dir / f"riemann_M{M}_n{n}.csv",
                                        ["tau", "z_re", "z_im", "phi_re", "phi_im"], tau, z, phi)

        trend = [M for M in (3, 4, 5, 6) if M in errors]
        if len(trend) > 1:
            decreasing = all(errors[a] > errors[b] for a, b in zip(trend, trend[1:]))
            criteria.append(CriterionResult(name="riemann_error_decreasing",
                                            measured=float(errors[trend[-1]]),
                                            expected=None, passed=decreasing))
        return results, criteria

    def _analyze_holder(self, plan, runs, out_dir):
        results, criteria = {}, []
        p, q = plan.holder_time
        t_pq = float(Fraction(p, q))
        for (M, n), traj in sorted(runs.items()):
            fit = analysis_service.fit_center_speed(traj)
            tau, z = analysis_service.z_M(traj, fit.c_M)
            holder = analysis_service.holder_exponent(tau, z, t_pq, plan.holder_window, plan.holder_side)
            log_d, log_z = analysis_service.holder_samples(tau, z, t_pq, plan.holder_window, plan.holder_side)
            export_service.write_series(out_dir / f"holder_M{M}_n{n}.csv", ["log_dt", "log_dz"], log_d, log_z)
            results[f"M{M}_n{n}"] = holder.model_dump()
            lo, hi = ref.HOLDER_BAND
            criteria.append(window(f"holder_exponent_M{M}_n{n}", holder.exponent, lo, hi, 0.5))
            criteria.append(window(f"holder_r2_M{M}_n{n}", holder.r_squared, ref.HOLDER_MIN_R2, None))
        return results, criteria


orchestrator = ReproductionOrchestrator()
