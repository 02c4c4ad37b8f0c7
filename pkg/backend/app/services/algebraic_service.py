import logging
from fractions import Fraction
from math import acos, cos, log, pi, sqrt
from typing import Dict, List, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import ClosureError, InvalidArgumentError
from app.schemas.models import DeltaTrain, Frame, RationalTime, SkewPolygon
from app.services.gauss_sum_service import gauss_sum_service

logger = logging.getLogger(__name__)

E3 = np.array([0.0, 0.0, 1.0])


def axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation matrix from axis & angle (Rodrigues)."""
    axis = np.reshape(axis, 3) / np.linalg.norm(axis)
    K = np.array([[0.0, -axis[2], axis[1]],
                  [axis[2], 0.0, -axis[0]],
                  [-axis[1], axis[0], 0.0]])
    return np.identity(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * K @ K


def rotation_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _clamped_acos(x: float) -> float:
    return acos(min(1.0, max(-1.0, x)))


class AlgebraicService:
    """Exact polygonal solution of the binormal flow at rational times t_pq.

    psi(s, t_pq) is a train of q Dirac deltas per period whose strengths are
    generalized quadratic Gauss sums; each delta turns the parallel frame
    (T, e1, e2) by a closed-form rotation, and integrating T gives the skew
    polygon, which is then placed using the M-fold rotation and mirror
    symmetries of the regular initial polygon.
    """

    def rho_angle(self, M: int, q: int) -> float:
        if M < 3 or q < 1:
            raise InvalidArgumentError(f"rho_angle needs M >= 3 and q >= 1, got M={M}, q={q}")
        exponent = 2.0 / q if q % 2 == 1 else 4.0 / q
        return _clamped_acos(2.0 * cos(pi / M) ** exponent - 1.0)

    def psi_hat0(self, time: RationalTime) -> float:
        rho = self.rho_angle(time.M, time.q)
        effective_q = time.q if time.q % 2 == 1 else time.q / 2
        return time.M * sqrt(effective_q) / (2 * pi) * rho

    def psi_hat0_limit_q(self, M: int) -> float:
        """Limit of psi_hat0 as q grows without bound."""
        return M * sqrt(2.0) / pi * sqrt(-log(cos(pi / M)))

    def delta_train(self, time: RationalTime) -> DeltaTrain:
        M, p, q = time.M, time.p, time.q
        psi0 = self.psi_hat0(time)
        scale = 2 * pi / (M * q) * psi0
        coefficients = np.array([scale * gauss_sum_service._closed(-p, m, q) for m in range(q)],
                                dtype=complex)
        # |G| is sqrt(q), sqrt(2q) or exactly 0; drop round-off on the vanishing ones
        magnitudes = np.array([gauss_sum_service._magnitude(q, m) for m in range(q)])
        coefficients[magnitudes == 0.0] = 0.0
        positions = 2 * pi * np.arange(q) / (M * q)
        return DeltaTrain(time=time, positions=positions, coefficients=coefficients,
                          rho=self.rho_angle(M, q), psi_hat0=psi0)

    def corner_rotation(self, coefficient: complex) -> np.ndarray:
        """exp(A) for a delta of strength rho*exp(i*theta): rotation by rho about (0, sin theta, -cos theta)."""
        coefficient = complex(coefficient)
        if coefficient == 0:
            return np.identity(3)
        rho, theta = abs(coefficient), np.angle(coefficient)
        cr, sr = cos(rho), np.sin(rho)
        ct, st = cos(theta), np.sin(theta)
        return np.array([
            [cr, sr * ct, sr * st],
            [-sr * ct, cr * ct * ct + st * st, (cr - 1.0) * ct * st],
            [-sr * st, (cr - 1.0) * ct * st, cr * st * st + ct * ct],
        ])

    def propagate_frame(self, train: DeltaTrain, initial: Frame, segments: int) -> List[Frame]:
        matrices = self._propagate(train, initial, segments)
        return [Frame.from_matrix(F) for F in matrices]

    def closure_residual(self, time: RationalTime) -> float:
        """|Tr(P) - 1 - 2cos(2pi/M)| for the period product P = M_{q-1} ... M_0."""
        trace_residual, power_residual = self.closure_report(time)
        if power_residual > settings.CLOSURE_TOLERANCE:
            logger.warning(f"P^M deviates from the identity by {power_residual:.3e} at M={time.M}, p={time.p}, q={time.q}")
        return trace_residual

    def closure_report(self, time: RationalTime) -> Tuple[float, float]:
        """(trace residual, max|P^M - I|)."""
        P = self._period_product(self.delta_train(time))
        trace_residual = abs(np.trace(P) - 1.0 - 2.0 * cos(2 * pi / time.M))
        power_residual = float(np.max(np.abs(np.linalg.matrix_power(P, time.M) - np.identity(3))))
        logger.debug(f"closure M={time.M} p={time.p} q={time.q}: trace {trace_residual:.3e}, power {power_residual:.3e}")
        return float(trace_residual), power_residual

    def closure_spectrum(self, time: RationalTime) -> np.ndarray:
        P = self._period_product(self.delta_train(time))
        return np.linalg.eigvals(P)

    def build_polygon(self, time: RationalTime) -> SkewPolygon:
        trace_residual, power_residual = self.closure_report(time)
        residual = max(trace_residual, power_residual)
        if residual > settings.CLOSURE_FAILURE:
            raise ClosureError(
                f"closure residual {residual:.3e} for M={time.M}, p={time.p}, q={time.q}", residual)

        train = self.delta_train(time)
        segments = time.M * time.q
        frames = self._propagate(train, np.identity(3), segments)
        tangents = frames[:, 0, :]
        side = 2 * pi / segments
        vertices = np.zeros((segments, 3))
        vertices[1:] = side * np.cumsum(tangents[:-1], axis=0)

        virtual = np.tile(~train.nonzero, time.M)
        raw = SkewPolygon(time=time, vertices=vertices, tangents=tangents, virtual=virtual,
                          side_length=side, rho=train.rho, psi_hat0=train.psi_hat0)
        return self.align_polygon(raw, time.M)

    def align_polygon(self, raw: SkewPolygon, M: int) -> SkewPolygon:
        n = raw.n_vertices
        if n % M != 0:
            raise InvalidArgumentError(f"{n} vertices do not split into {M} symmetric blocks")
        block = n // M
        X = raw.vertices
        x_plus = X[block] - X[0]
        x_minus = X[0] - X[n - block]
        v_plus = x_plus / np.linalg.norm(x_plus)
        v_minus = x_minus / np.linalg.norm(x_minus)

        w = np.cross(v_minus, v_plus)
        w_norm = np.linalg.norm(w)
        if w_norm < settings.ASSERT_TOLERANCE:
            raise InvalidArgumentError("consecutive symmetric chords are parallel; alignment is undefined")
        w = w / w_norm
        R1 = self._rotation_to_vertical(w)

        v_new = R1 @ v_plus
        R2 = rotation_z(-np.arctan2(v_new[1], v_new[0]))
        R = R2 @ R1

        vertices = X @ R.T
        tangents = raw.tangents @ R.T
        corners = vertices[::block][:M]
        center = corners.mean(axis=0)
        vertices = vertices - np.array([center[0], center[1], 0.0])
        return raw.model_copy(update={"vertices": vertices, "tangents": tangents})

    def polygon_at_vertical_offset(self, polygon: SkewPolygon, offset: float) -> SkewPolygon:
        shift = offset - polygon.vertical_offset
        return polygon.model_copy(update={
            "vertices": polygon.vertices + shift * E3,
            "vertical_offset": offset,
        })

    def closure_gap(self, polygon: SkewPolygon) -> float:
        """|X(2*pi) - X(0)|, with X(2*pi) integrated from the last vertex."""
        end = polygon.vertices[-1] + polygon.side_length * polygon.tangents[-1]
        return float(np.linalg.norm(end - polygon.vertices[0]))

    def rotation_residual(self, polygon: SkewPolygon) -> float:
        """max |X(s + 2pi/M) - Rz(2pi/M) X(s)| over the vertices."""
        M = polygon.time.M
        block = polygon.n_vertices // M
        R = rotation_z(2 * pi / M)
        shifted = np.roll(polygon.vertices, -block, axis=0)
        return float(np.max(np.abs(shifted - polygon.vertices @ R.T)))

    def mirror_residual(self, polygon: SkewPolygon) -> float:
        """max |X(-s) - H X(s)|, H the reflection in the vertical plane through the z-axis and X(0)."""
        X = polygon.vertices
        radial = np.array([X[0, 0], X[0, 1], 0.0])
        if np.linalg.norm(radial) < settings.ASSERT_TOLERANCE:
            raise InvalidArgumentError("X(0) lies on the symmetry axis; mirror plane is undefined")
        u = radial / np.linalg.norm(radial)
        H = 2.0 * np.outer(u, u) - np.diag([1.0, 1.0, 0.0]) + np.diag([0.0, 0.0, 1.0])
        reflected_index = (-np.arange(polygon.n_vertices)) % polygon.n_vertices
        return float(np.max(np.abs(X[reflected_index] - X @ H.T)))

    def distinct_sides(self, polygon: SkewPolygon) -> int:
        """Number of segments after merging collinear neighbours."""
        T = polygon.tangents
        turns = np.einsum("ij,ij->i", T, np.roll(T, -1, axis=0))
        return int(np.count_nonzero(turns < 1.0 - 1e-10))

    def corner_at_origin(self, time: RationalTime) -> bool:
        return gauss_sum_service._magnitude(time.q, 0) > 0.0

    def scan_cornerless_times(self, M: int, max_q: int) -> List[RationalTime]:
        found = []
        for q in range(1, max_q + 1):
            for p in range(0, q):
                if Fraction(p, q).denominator != q:
                    continue
                time = RationalTime(M=M, p=p, q=q)
                if not self.corner_at_origin(time):
                    found.append(time)
        return found

    def perturbed_time(self, M: int, p: int, q: int, q_prime: int) -> RationalTime:
        """t_pq + (2*pi/M^2)/q'."""
        if q < 1 or q_prime < 1:
            raise InvalidArgumentError(f"q and q' must be positive, got q={q}, q'={q_prime}")
        return RationalTime.from_fraction(M, Fraction(p, q) + Fraction(1, q_prime))

    def sample_at_nodes(self, polygon: SkewPolygon, n_nodes: int, N: int) -> np.ndarray:
        """Linear interpolation of X at s_j = 2*pi*j/N, j < n_nodes."""
        segments = polygon.n_vertices
        j = np.arange(n_nodes, dtype=np.int64)
        # s_j / side = j * segments / N, kept in integers
        scaled = j * segments
        index = (scaled // N) % segments
        fraction = (scaled % N) / N
        return polygon.vertices[index] + (fraction * polygon.side_length)[:, None] * polygon.tangents[index]

    def _rotation_to_vertical(self, w: np.ndarray) -> np.ndarray:
        w3 = float(np.clip(w[2], -1.0, 1.0))
        if w3 >= 1.0 - settings.ASSERT_TOLERANCE:
            return np.identity(3)
        axis = np.cross(w, E3)
        if np.linalg.norm(axis) < settings.ASSERT_TOLERANCE:
            # w antiparallel to e3: any horizontal axis works
            axis = np.array([1.0, 0.0, 0.0])
        return axis_angle(axis, acos(w3))

    def _corner_matrices(self, train: DeltaTrain) -> np.ndarray:
        return np.array([self.corner_rotation(z) for z in train.coefficients])

    def _period_product(self, train: DeltaTrain) -> np.ndarray:
        P = np.identity(3)
        for Mk in self._corner_matrices(train):
            P = Mk @ P
        return P

    def _propagate(self, train: DeltaTrain, initial, segments: int) -> np.ndarray:
        """Frames (as row-stacked matrices) on segments k = 0..segments-1."""
        q = train.coefficients.size
        if segments % q != 0:
            raise InvalidArgumentError(f"segments={segments} is not a multiple of q={q}")
        F0 = initial.as_matrix() if isinstance(initial, Frame) else np.asarray(initial, dtype=float)
        if np.max(np.abs(F0 @ F0.T - np.identity(3))) > settings.ASSERT_TOLERANCE \
                or abs(np.linalg.det(F0) - 1.0) > settings.ASSERT_TOLERANCE:
            raise InvalidArgumentError("initial frame is not a right-handed orthonormal triple")

        # partial products M_m ... M_0 within one period
        partial = np.empty((q, 3, 3))
        acc = np.identity(3)
        for m, Mk in enumerate(self._corner_matrices(train)):
            acc = Mk @ acc
            partial[m] = acc
        period = acc

        # frame_{b q + m} = partial_m . P^b . F0
        periods = segments // q
        powers = np.empty((periods, 3, 3))
        power = F0.copy()
        for b in range(periods):
            powers[b] = power
            power = period @ power
        frames = np.einsum("mij,bjk->bmik", partial, powers)
        return frames.reshape(segments, 3, 3)


algebraic_service = AlgebraicService()
