import logging
import time as clock
from functools import lru_cache
from math import ceil, log2, pi, sin
from typing import Callable, Iterable, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import BlowUpError, InvalidArgumentError
from app.schemas.models import GridSpec, SpectralState, Trajectory
from app.services.algebraic_service import rotation_z

logger = logging.getLogger(__name__)

SYMMETRIES = ("z", "t3")


@lru_cache(maxsize=64)
def _wavenumbers(n: int, fold: int, symmetry: str) -> np.ndarray:
    """Wavenumbers carried by the n-point transform of a fold-symmetric field.

    Z-type fields live on k = fold*r + 1, T3-type on k = fold*r, both aliased
    into [-N/2, N/2 - 1].
    """
    N = n * fold
    shift = 1 if symmetry == "z" else 0
    r = np.arange(n)
    return ((fold * r + shift + N // 2) % N - N // 2).astype(float)


@lru_cache(maxsize=64)
def _weights(n: int, fold: int, symmetry: str, order: int) -> np.ndarray:
    k = _wavenumbers(n, fold, symmetry)
    w = (1j * k) ** order
    if order % 2 == 1:
        w[k == -(n * fold) // 2] = 0.0
    return w


@lru_cache(maxsize=64)
def _twist(n: int, fold: int) -> np.ndarray:
    return np.exp(-2j * pi * np.arange(n) / (n * fold))


class SpectralService:
    """Pseudo-spectral RK4 integrator for X_t = T x T_s, T_t = T x T_ss.

    Fields are stored on the first N/fold nodes only; fold = M uses the
    M-fold rotation symmetry so every transform has N/M points, fold = 1 is
    the plain full-grid scheme.
    """

    def init_state(self, M: int, N: int, full: bool = False) -> SpectralState:
        self._grid(M, N)
        n = N // M
        s = 2 * pi * np.arange(n) / N
        radius = pi / (M * sin(pi / M))
        # first vertex of the regular polygon, -i*pi*exp(-i*pi/M)/(M sin(pi/M))
        corner = -1j * radius * np.exp(-1j * pi / M)
        X = np.zeros((n, 3))
        X[:, 0] = corner.real + s
        X[:, 1] = corner.imag
        T = np.zeros((n, 3))
        T[:, 0] = 1.0
        state = SpectralState(time=0.0, X=X, T=T, M=M, N=N, fold=M)
        return self.expand_state(state) if full else state

    def expand_state(self, state: SpectralState) -> SpectralState:
        """Full N-node state rebuilt from the stored block by the rotation symmetry."""
        if state.fold == 1:
            return state
        blocks_X, blocks_T = [], []
        for b in range(state.fold):
            R = rotation_z(2 * pi * b / state.fold)
            blocks_X.append(state.X @ R.T)
            blocks_T.append(state.T @ R.T)
        return SpectralState(time=state.time, X=np.vstack(blocks_X), T=np.vstack(blocks_T),
                             M=state.M, N=state.N, fold=1)

    def spectral_derivative(self, field: np.ndarray, order: int, symmetry: str,
                            fold: int, N: int) -> np.ndarray:
        """d^order/ds^order of a field sampled on s_j = 2*pi*j/N, j < N/fold.

        symmetry "z": complex field Z = f1 + i f2 with Z(s + 2pi/fold) = exp(2pi i/fold) Z(s).
        symmetry "t3": real field with f(s + 2pi/fold) = f(s).
        """
        if symmetry not in SYMMETRIES:
            raise InvalidArgumentError(f"symmetry must be one of {SYMMETRIES}, got {symmetry!r}")
        if order not in (1, 2):
            raise InvalidArgumentError(f"order must be 1 or 2, got {order}")
        field = np.asarray(field)
        n = field.shape[0]
        if fold < 1 or n * fold != N:
            raise InvalidArgumentError(f"field of length {n} does not match N={N} with fold={fold}")

        if symmetry == "z":
            twist = _twist(n, fold)
            spectrum = np.fft.fft(field * twist)
            return np.fft.ifft(spectrum * _weights(n, fold, "z", order)) * np.conj(twist)
        spectrum = np.fft.fft(field)
        return np.fft.ifft(spectrum * _weights(n, fold, "t3", order)).real

    def tangent_derivatives(self, T: np.ndarray, fold: int, N: int) -> Tuple[np.ndarray, np.ndarray]:
        """(T_s, T_ss), sharing one forward transform per component type."""
        n = T.shape[0]
        twist = _twist(n, fold)
        z_hat = np.fft.fft((T[:, 0] + 1j * T[:, 1]) * twist)
        t3_hat = np.fft.fft(T[:, 2])

        derivatives = []
        for order in (1, 2):
            z = np.fft.ifft(z_hat * _weights(n, fold, "z", order)) * np.conj(twist)
            t3 = np.fft.ifft(t3_hat * _weights(n, fold, "t3", order)).real
            derivatives.append(np.column_stack([z.real, z.imag, t3]))
        return derivatives[0], derivatives[1]

    def rk4_step(self, state: SpectralState, dt: float, step: Optional[int] = None) -> SpectralState:
        X, T = self._advance(state.X, state.T, dt, state.fold, state.N,
                             step if step is not None else 1)
        return state.model_copy(update={"time": state.time + dt, "X": X, "T": T})

    def run(self, spec: GridSpec, record_full_at: Iterable[float] = (),
            enforce_stability: bool = True, full_grid: bool = False,
            progress: Optional[Callable[[float], None]] = None) -> Trajectory:
        bound = spec.stability_bound(settings.STABILITY_CONSTANT)
        if enforce_stability and spec.dt > bound:
            raise InvalidArgumentError(
                f"dt={spec.dt:.4e} exceeds the stability bound {bound:.4e} "
                f"(need at least {self.min_steps(spec.M, spec.N)} steps)")

        dump_steps = set()
        for t in record_full_at:
            step = int(round(t / spec.dt))
            if not 0 <= step <= spec.n_t:
                raise InvalidArgumentError(f"requested dump time {t} is outside [0, {spec.t_final}]")
            dump_steps.add(step)

        state = self.init_state(spec.M, spec.N, full=full_grid)
        X, T = state.X, state.T
        fold, N = state.fold, state.N
        dt = spec.dt

        x0 = np.empty((spec.n_t + 1, 3))
        height = np.empty(spec.n_t + 1)
        x0[0] = X[0]
        height[0] = X[:, 2].mean()
        dumps = {}
        if 0 in dump_steps:
            dumps[0] = state

        logger.info(f"Spectral run: M={spec.M}, N={N}, fold={fold}, n_t={spec.n_t}, dt={dt:.4e}")
        started = clock.perf_counter()
        report_every = max(1, spec.n_t // 10)

        for step in range(1, spec.n_t + 1):
            X, T = self._advance(X, T, dt, fold, N, step)
            x0[step] = X[0]
            # (M/N) * sum over the stored block equals the mean over its nodes
            height[step] = X[:, 2].mean()
            if step in dump_steps:
                dumps[step] = SpectralState(time=step * dt, X=X.copy(), T=T.copy(),
                                            M=spec.M, N=N, fold=fold)
            if step % report_every == 0:
                fraction = step / spec.n_t
                logger.info(f"M={spec.M} N={N}: {int(round(100 * fraction))}% ({step}/{spec.n_t} steps)")
                if progress:
                    progress(fraction)

        elapsed = clock.perf_counter() - started
        logger.info(f"Spectral run M={spec.M}, N={N} finished in {elapsed:.1f}s")
        times = np.arange(spec.n_t + 1) * dt
        return Trajectory(spec=spec, times=times, x0=x0, height=height, dumps=dumps)

    def reference_steps(self, nodes_per_side: int) -> int:
        """151200 * 4^r steps for N/M = 512 * 2^r."""
        base = settings.BASE_NODES_PER_SIDE
        ratio = nodes_per_side / base
        r = log2(ratio) if ratio > 0 else -1.0
        if r < 0 or r != int(r):
            raise InvalidArgumentError(f"nodes per side must be {base} * 2^r, got {nodes_per_side}")
        return settings.BASE_STEPS * 4 ** int(r)

    def min_steps(self, M: int, N: int, constant: Optional[float] = None) -> int:
        constant = constant or settings.STABILITY_CONSTANT
        return ceil((2 * pi / M ** 2) / (constant / N ** 2))

    def is_stable(self, M: int, N: int, constant: float, steps: int = 400) -> bool:
        """Whether `steps` steps of size constant/N^2 from the polygon datum stay bounded."""
        state = self.init_state(M, N)
        X, T = state.X, state.T
        dt = constant / N ** 2
        try:
            for step in range(1, steps + 1):
                X, T = self._advance(X, T, dt, state.fold, N, step)
        except BlowUpError:
            return False
        return True

    def measure_stability_constant(self, M: int, N: int, steps: int = 400,
                                   lower: float = 1.0, upper: float = 40.0,
                                   iterations: int = 12) -> float:
        """Bisects the largest C with dt = C/N^2 that survives `steps` steps."""
        if self.is_stable(M, N, upper, steps):
            raise InvalidArgumentError(f"C={upper} is still stable; raise the upper bracket")
        if not self.is_stable(M, N, lower, steps):
            raise InvalidArgumentError(f"C={lower} already blows up; lower the bracket")
        for _ in range(iterations):
            middle = 0.5 * (lower + upper)
            if self.is_stable(M, N, middle, steps):
                lower = middle
            else:
                upper = middle
        logger.info(f"Measured stability constant for M={M}, N={N}: C in [{lower:.3f}, {upper:.3f}]")
        return lower

    def _velocities(self, T: np.ndarray, fold: int, N: int) -> Tuple[np.ndarray, np.ndarray]:
        T_s, T_ss = self.tangent_derivatives(T, fold, N)
        return np.cross(T, T_s), np.cross(T, T_ss)

    def _advance(self, X: np.ndarray, T: np.ndarray, dt: float, fold: int, N: int,
                 step: int) -> Tuple[np.ndarray, np.ndarray]:
        A_X, A_T = self._velocities(T, fold, N)
        B_X, B_T = self._velocities(T + 0.5 * dt * A_T, fold, N)
        C_X, C_T = self._velocities(T + 0.5 * dt * B_T, fold, N)
        D_X, D_T = self._velocities(T + dt * C_T, fold, N)

        X_next = X + dt / 6.0 * (A_X + 2.0 * B_X + 2.0 * C_X + D_X)
        T_tilde = T + dt / 6.0 * (A_T + 2.0 * B_T + 2.0 * C_T + D_T)

        if not (np.all(np.isfinite(X_next)) and np.all(np.isfinite(T_tilde))):
            raise BlowUpError(step, "non-finite state")
        norms = np.linalg.norm(T_tilde, axis=1)
        if norms.max() > settings.BLOWUP_NORM:
            raise BlowUpError(step, f"tangent norm {norms.max():.3e} before normalisation")
        return X_next, T_tilde / norms[:, None]

    def _grid(self, M: int, N: int) -> GridSpec:
        try:
            return GridSpec(M=M, N=N, n_t=1)
        except ValidationError as e:
            raise InvalidArgumentError(f"invalid grid M={M}, N={N}: {e.errors()[0]['msg']}") from e


spectral_service = SpectralService()
