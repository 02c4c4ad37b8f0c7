import logging
from fractions import Fraction
from math import pi
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import DegenerateFitError, InsufficientDataError, InvalidArgumentError
from app.schemas.models import (AffineFit, ComplexValue, HolderFit, RationalTime, SkewPolygon,
                                SpectralState, SpeedFit, Trajectory)
from app.services.algebraic_service import algebraic_service, rotation_z
from app.services.spectral_service import spectral_service

logger = logging.getLogger(__name__)

Side = Literal["both", "left", "right"]


class AnalysisService:
    """Cross-checks between the spectral runs and the exact polygons, plus the
    diagnostics of the corner trajectory X(0, t)."""

    def __init__(self):
        self._polygons: Dict[Tuple[int, int, int], SkewPolygon] = {}

    # Center of mass

    def fit_center_speed(self, traj: Trajectory) -> SpeedFit:
        if traj.times.size < 2:
            raise InvalidArgumentError("trajectory has no recorded steps")
        t_final = traj.times[-1]
        c_M = float(traj.height[-1] / t_final)
        deviation = float(np.max(np.abs(traj.height - c_M * traj.times)))
        logger.debug(f"center speed M={traj.spec.M}: c_M={c_M:.6f}, max deviation {deviation:.4e}")
        return SpeedFit(c_M=c_M, max_deviation=deviation)

    # Numeric vs algebraic

    def comparison_times(self, M: int, divisions: Optional[int] = None) -> List[RationalTime]:
        """t^(m) = (2pi/M^2) * m/divisions as rational times, m = 0..divisions."""
        divisions = divisions or settings.COMPARISON_DIVISIONS
        return [RationalTime.from_fraction(M, Fraction(m, divisions)) for m in range(divisions + 1)]

    def polygon(self, time: RationalTime) -> SkewPolygon:
        key = (time.M, time.p, time.q)
        if key not in self._polygons:
            self._polygons[key] = algebraic_service.build_polygon(time)
        return self._polygons[key]

    def algebraic_nodes(self, time: RationalTime, N: int, n_nodes: int) -> np.ndarray:
        """X_alg on the first n_nodes nodes, shifted so the node mean of X3 is zero."""
        polygon = self.polygon(time)
        full = algebraic_service.sample_at_nodes(polygon, N, N)
        X = full[:n_nodes].copy()
        X[:, 2] -= full[:, 2].mean()
        return X

    def algebraic_state(self, time: RationalTime, N: int, fold: Optional[int] = None) -> SpectralState:
        """SpectralState sampled from the exact polygon (X at zero node-mean height)."""
        fold = fold or time.M
        n = N // fold
        polygon = self.polygon(time)
        segments = polygon.n_vertices
        j = np.arange(n, dtype=np.int64)
        segment = (j * segments // N) % segments
        return SpectralState(time=time.t, X=self.algebraic_nodes(time, N, n),
                             T=polygon.tangents[segment].copy(), M=time.M, N=N, fold=fold)

    def compare_trajectories(self, num: Sequence[SpectralState], alg_times: Sequence[RationalTime],
                             c_M: float) -> float:
        if len(num) != len(alg_times):
            raise InvalidArgumentError(f"{len(num)} states against {len(alg_times)} algebraic times")
        worst = 0.0
        for state, time in zip(num, alg_times):
            if state.M != time.M or abs(state.time - time.t) > 1e-9 * max(1.0, time.t):
                raise InvalidArgumentError(
                    f"state at t={state.time} does not match t_pq={time.t} (M={time.M}, p={time.p}, q={time.q})")
            X_alg = self.algebraic_nodes(time, state.N, state.n)
            X_num = state.X - np.array([0.0, 0.0, c_M * state.time])
            worst = max(worst, float(np.max(np.linalg.norm(X_num - X_alg, axis=1))))
        logger.debug(f"max |X_num - c_M t e3 - X_alg| over {len(num)} times: {worst:.4e}")
        return worst

    def midpoint_tangents(self) -> np.ndarray:
        """The nine exact tangents of the triangle at t_{1,3}, one per constant interval."""
        a = 2.0 ** (1.0 / 3.0)
        b = np.sqrt(a * a - 1.0)
        first = np.array([
            [a - 1.0, -b, 1.0 - a * a],
            [1.0, 0.0, 0.0],
            [a - 1.0, b, a * a - 1.0],
        ])
        first /= np.linalg.norm(first, axis=1)[:, None]
        return np.vstack([first @ rotation_z(2 * pi * k / 3).T for k in range(3)])

    def compare_tangent_midpoints(self, num_state: SpectralState, M: int = 3) -> float:
        if M != 3 or num_state.M != 3:
            raise InvalidArgumentError("the exact midpoint tangents are only known for M = 3")
        if abs(num_state.time - 2 * pi / 27) > 1e-9:
            raise InvalidArgumentError(f"state time {num_state.time} is not t_(1,3) = 2*pi/27")
        T = spectral_service.expand_state(num_state).T
        N = num_state.N
        pieces = 9
        centers = np.rint((np.arange(pieces) + 0.5) * N / pieces).astype(int) % N
        error = float(np.max(np.abs(T[centers] - self.midpoint_tangents())))
        logger.info(f"tangent midpoint error at t_(1,3), N={N}: {error:.4e}")
        return error

    # Corner trajectory

    def z_of_t(self, traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
        """(t, z(t)) with z = -|(X1, X2)(0, t)| + i X3(0, t)."""
        x0 = traj.x0
        return traj.times, -np.hypot(x0[:, 0], x0[:, 1]) + 1j * x0[:, 2]

    def z_M(self, traj: Trajectory, c_M: float) -> Tuple[np.ndarray, np.ndarray]:
        """(tau, z_M(tau)) on tau in [0, 1], z_M(tau) = z(2 pi tau/M^2) - i c_M 2 pi tau/M^2."""
        times, z = self.z_of_t(traj)
        return times / traj.spec.t_final, z - 1j * c_M * times

    def phi_series(self, t: float, K: Optional[int] = None) -> ComplexValue:
        return ComplexValue.from_complex(complex(self.phi_values(np.array([t]), K)[0]))

    def phi_values(self, ts: np.ndarray, K: Optional[int] = None) -> np.ndarray:
        """-sum_{k=1}^{K} exp(-2 pi i k^2 t)/(pi k^2) at arbitrary t."""
        K = K or settings.PHI_TERMS
        if K < 1:
            raise InvalidArgumentError(f"K must be >= 1, got {K}")
        k = np.arange(1, K + 1, dtype=float)
        ts = np.mod(np.atleast_1d(np.asarray(ts, dtype=float)), 1.0)
        values = np.empty(ts.size, dtype=complex)
        for start in range(0, ts.size, 256):
            phases = np.mod(np.outer(ts[start:start + 256], k * k), 1.0)
            values[start:start + 256] = -(np.exp(-2j * pi * phases) / (pi * k * k)).sum(axis=1)
        return values

    def phi_on_uniform_grid(self, n: int, K: Optional[int] = None) -> np.ndarray:
        """phi(j/n), j = 0..n, from one n-point FFT of 1/(pi k^2) binned on k^2 mod n."""
        K = K or settings.PHI_TERMS
        if n < 1 or K < 1:
            raise InvalidArgumentError(f"need n >= 1 and K >= 1, got n={n}, K={K}")
        k = np.arange(1, K + 1, dtype=np.int64)
        weights = np.bincount((k * k) % n, weights=1.0 / (pi * k.astype(float) ** 2), minlength=n)
        values = -np.fft.fft(weights)
        return np.append(values, values[0])

    def affine_fit(self, z_samples: np.ndarray, phi_samples: np.ndarray) -> AffineFit:
        z = np.asarray(z_samples, dtype=complex)
        phi = np.asarray(phi_samples, dtype=complex)
        if z.shape != phi.shape or z.size == 0:
            raise InvalidArgumentError(f"sample shapes differ: {z.shape} vs {phi.shape}")
        dz = z - z.mean()
        spread = np.mean(np.abs(dz) ** 2)
        if spread <= np.finfo(float).tiny:
            raise DegenerateFitError("z samples are constant; lambda is undefined")
        lam = float(np.real(np.mean(dz * np.conj(phi - phi.mean())) / spread))
        mu = phi.mean() - lam * z.mean()
        residual = phi - lam * z - mu
        with np.errstate(divide="ignore", invalid="ignore"):
            relative = np.abs(residual / phi)
        fit = AffineFit(lambda_=lam, mu=ComplexValue.from_complex(mu),
                        max_abs_err=float(np.max(np.abs(residual))),
                        max_rel_err=float(np.max(relative)))
        logger.debug(f"affine fit: lambda={lam:.6f}, mu={mu:.6f}, max abs err {fit.max_abs_err:.4e}")
        return fit

    def holder_samples(self, times: np.ndarray, z_samples: np.ndarray, t_pq: float,
                       window: Optional[Tuple[float, float]] = None,
                       side: Side = "both") -> Tuple[np.ndarray, np.ndarray]:
        """(log|t - t_pq|, log|z(t) - z(t_pq)|) over the window."""
        window = window or (settings.HOLDER_WINDOW_MIN, settings.HOLDER_WINDOW_MAX)
        times = np.asarray(times, dtype=float)
        z = np.asarray(z_samples, dtype=complex)
        if times.shape != z.shape:
            raise InvalidArgumentError(f"times {times.shape} and samples {z.shape} differ in shape")
        if side not in ("both", "left", "right"):
            raise InvalidArgumentError(f"side must be both, left or right, got {side!r}")
        if not times.min() <= t_pq <= times.max():
            raise InvalidArgumentError(f"samples do not bracket t_pq={t_pq}")

        center = int(np.argmin(np.abs(times - t_pq)))
        offset = times - times[center]
        distance = np.abs(offset)
        mask = (distance >= window[0]) & (distance <= window[1])
        if side == "left":
            mask &= offset < 0
        elif side == "right":
            mask &= offset > 0
        rise = np.abs(z - z[center])
        mask &= rise > 0
        return np.log(distance[mask]), np.log(rise[mask])

    def holder_exponent(self, times: np.ndarray, z_samples: np.ndarray, t_pq: float,
                        window: Optional[Tuple[float, float]] = None,
                        side: Side = "both") -> HolderFit:
        window = window or (settings.HOLDER_WINDOW_MIN, settings.HOLDER_WINDOW_MAX)
        log_d, log_z = self.holder_samples(times, z_samples, t_pq, window, side)
        if log_d.size < settings.HOLDER_MIN_SAMPLES:
            raise InsufficientDataError(
                f"{log_d.size} samples in window {window}, need {settings.HOLDER_MIN_SAMPLES}")
        slope, intercept = np.polyfit(log_d, log_z, 1)
        predicted = slope * log_d + intercept
        total = np.sum((log_z - log_z.mean()) ** 2)
        r_squared = 1.0 - np.sum((log_z - predicted) ** 2) / total if total > 0 else 1.0
        logger.debug(f"Holder fit at t_pq={t_pq}: exponent {slope:.4f}, r^2 {r_squared:.4f}")
        return HolderFit(exponent=float(slope), r_squared=float(r_squared), window=tuple(window),
                         side=side, n_samples=int(log_d.size))

    def stereographic_projection(self, tangents: np.ndarray) -> np.ndarray:
        """(T1 + i T2)/(1 + T3); the south pole maps to infinity."""
        T = np.asarray(tangents, dtype=float)
        denominator = 1.0 + T[..., 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            projected = (T[..., 0] + 1j * T[..., 1]) / denominator
        return np.where(denominator == 0.0, complex(np.inf, 0.0), projected)


analysis_service = AnalysisService()
