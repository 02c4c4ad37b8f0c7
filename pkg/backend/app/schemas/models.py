from fractions import Fraction
from math import gcd, pi
from typing import Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# Gauss sums

class GaussArgs(BaseModel):
    a: int
    b: int
    c: int = Field(..., ge=1)

class ComplexValue(BaseModel):
    re: float
    im: float

    @classmethod
    def from_complex(cls, z: complex) -> "ComplexValue":
        return cls(re=float(z.real), im=float(z.imag))

    def to_complex(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self) -> float:
        return abs(self.to_complex())

# Algebraic evolution

class RationalTime(BaseModel):
    """t_pq = (2*pi/M^2) * (p/q) for an initial regular M-gon."""
    M: int = Field(..., ge=3)
    p: int
    q: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _coprime(self):
        if gcd(self.p, self.q) != 1:
            raise ValueError(f"p={self.p} and q={self.q} must be coprime")
        return self

    @classmethod
    def from_fraction(cls, M: int, fraction: Fraction) -> "RationalTime":
        return cls(M=M, p=fraction.numerator, q=fraction.denominator)

    @property
    def fraction(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def period(self) -> float:
        return 2 * pi / self.M ** 2

    @property
    def t(self) -> float:
        return self.period * self.p / self.q

class DeltaTrain(BaseModel):
    """psi(s, t_pq) on the first period [0, 2*pi/M): q deltas with complex strengths."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    time: RationalTime
    positions: np.ndarray
    coefficients: np.ndarray  # complex, alpha_m + i beta_m
    rho: float
    psi_hat0: float

    @property
    def nonzero(self) -> np.ndarray:
        return np.abs(self.coefficients) > 0.0

    def coefficient_values(self) -> List[ComplexValue]:
        return [ComplexValue.from_complex(z) for z in self.coefficients]

class Frame(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    T: np.ndarray
    e1: np.ndarray
    e2: np.ndarray

    @classmethod
    def identity(cls) -> "Frame":
        return cls.from_matrix(np.eye(3))

    @classmethod
    def from_matrix(cls, rows: np.ndarray) -> "Frame":
        return cls(T=np.array(rows[0], dtype=float), e1=np.array(rows[1], dtype=float),
                   e2=np.array(rows[2], dtype=float))

    def as_matrix(self) -> np.ndarray:
        # rows are (T, e1, e2), the row-stacked form the corner rotations act on
        return np.vstack([self.T, self.e1, self.e2])

    def orthonormality_error(self) -> float:
        F = self.as_matrix()
        gram = np.max(np.abs(F @ F.T - np.eye(3)))
        return float(max(gram, abs(np.linalg.det(F) - 1.0)))

class SkewPolygon(BaseModel):
    """Vertices X(2*pi*k/(Mq)) and the constant tangent on each segment [k, k+1)."""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    time: RationalTime
    vertices: np.ndarray
    tangents: np.ndarray
    virtual: np.ndarray  # True where the corner coefficient vanishes
    side_length: float
    rho: float
    psi_hat0: float
    vertical_offset: float = 0.0

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def arc_positions(self) -> np.ndarray:
        return self.side_length * np.arange(self.n_vertices)

    @property
    def side_count(self) -> int:
        return int(np.count_nonzero(~self.virtual))

# Spectral solver

class GridSpec(BaseModel):
    M: int = Field(..., ge=3)
    N: int = Field(..., ge=3)
    n_t: int = Field(..., ge=1)

    @model_validator(mode="after")
    def _grid(self):
        if self.N % self.M != 0:
            raise ValueError(f"N={self.N} is not a multiple of M={self.M}")
        n = self.N // self.M
        if n & (n - 1) != 0:
            raise ValueError(f"N/M={n} is not a power of two")
        return self

    @property
    def nodes_per_side(self) -> int:
        return self.N // self.M

    @property
    def t_final(self) -> float:
        return 2 * pi / self.M ** 2

    @property
    def dt(self) -> float:
        return self.t_final / self.n_t

    def stability_bound(self, constant: float) -> float:
        return constant / self.N ** 2

class SpectralState(BaseModel):
    """X and T on the reduced nodes s_j = 2*pi*j/N, j < N/fold.

    `fold` is the rotation symmetry actually exploited: M for the reduced
    block, 1 for a full-circle state.
    """
    model_config = ConfigDict(arbitrary_types_allowed=True)

    time: float
    X: np.ndarray
    T: np.ndarray
    M: int
    N: int
    fold: int

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def nodes(self) -> np.ndarray:
        return 2 * pi * np.arange(self.n) / self.N

class Trajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    spec: GridSpec
    times: np.ndarray
    x0: np.ndarray          # X(0, t) per step
    height: np.ndarray      # h(t) per step
    dumps: Dict[int, SpectralState] = {}

    @field_validator("times")
    @classmethod
    def _increasing(cls, v: np.ndarray) -> np.ndarray:
        if v.size > 1 and not np.all(np.diff(v) > 0):
            raise ValueError("trajectory times must be strictly increasing")
        return v

    def dump_at(self, t: float) -> SpectralState:
        step = int(round(t / self.spec.dt))
        return self.dumps[step]

# Analysis

class SpeedFit(BaseModel):
    c_M: float
    max_deviation: float

class AffineFit(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    lambda_: float = Field(..., alias="lambda")
    mu: ComplexValue
    max_abs_err: float
    max_rel_err: float

class HolderFit(BaseModel):
    exponent: float
    r_squared: float
    window: Tuple[float, float]
    side: Literal["both", "left", "right"] = "both"
    n_samples: int

class CriterionResult(BaseModel):
    name: str
    measured: float
    expected: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    passed: bool

# Reproduction

class SimulationCase(BaseModel):
    M: int = Field(..., ge=3)
    nodes_per_side: int
    n_t: int
    divisions: Optional[int] = None  # dump at t_final*m/divisions, m = 0..divisions

    @property
    def spec(self) -> GridSpec:
        return GridSpec(M=self.M, N=self.M * self.nodes_per_side, n_t=self.n_t)

    def dump_times(self) -> List[float]:
        if not self.divisions:
            return []
        t_final = self.spec.t_final
        return [t_final * m / self.divisions for m in range(self.divisions + 1)]

class ReproductionPlan(BaseModel):
    target: Literal["table1", "table2", "riemann", "holder"]
    scale: Literal["desk", "paper"] = "desk"
    cases: List[SimulationCase]
    divisions: int = 1260
    holder_time: Tuple[int, int] = (1, 5)
    holder_window: Tuple[float, float] = (1e-4, 1e-2)
    holder_side: Literal["both", "left", "right"] = "both"
    phi_terms: int = 8192
