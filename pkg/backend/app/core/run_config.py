"""Line-oriented `key=value` run configuration shared by the CLI subcommands.

    # vfe-run-config v1
    M=3
    nodes_per_side=512
    steps=151200
"""
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from app.core.exceptions import InvalidArgumentError
from app.schemas.models import GridSpec, RationalTime

HEADER = "# vfe-run-config v1"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    M: int = 3
    p: int = 1
    q: int = 1
    nodes_per_side: int = 512
    steps: Optional[int] = None
    dump_times: str = "paper1260"
    out: Optional[str] = None
    run_dir: Optional[str] = None
    phi_terms: int = 8192
    holder_p: int = 1
    holder_q: int = 5
    holder_window: Tuple[float, float] = (1e-4, 1e-2)
    holder_side: Literal["both", "left", "right"] = "both"
    scale: Literal["desk", "paper"] = "desk"

    @model_validator(mode="after")
    def _domain(self):
        if self.nodes_per_side < 1:
            raise ValueError("nodes_per_side must be positive")
        try:
            GridSpec(M=self.M, N=self.M * self.nodes_per_side, n_t=self.steps or 1)
            RationalTime(M=self.M, p=self.p, q=self.q)
            RationalTime(M=self.M, p=self.holder_p, q=self.holder_q)
        except ValidationError as e:
            raise ValueError(e.errors()[0]["msg"]) from None
        lo, hi = self.holder_window
        if not 0 < lo < hi:
            raise ValueError(f"holder_window must satisfy 0 < min < max, got {self.holder_window}")
        if self.phi_terms < 1:
            raise ValueError("phi_terms must be >= 1")
        return self

    @property
    def N(self) -> int:
        return self.M * self.nodes_per_side

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        lines = text.splitlines()
        if not lines or lines[0].strip() != HEADER:
            raise InvalidArgumentError(f"config must start with '{HEADER}'")
        values = {}
        for number, raw in enumerate(lines[1:], start=2):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidArgumentError(f"line {number}: expected key=value, got {line!r}")
            key, value = key.strip(), value.strip()
            if key not in cls.model_fields:
                raise InvalidArgumentError(f"line {number}: unknown key {key!r}")
            values[key] = _decode(key, value)
        return cls.build(**values)

    @classmethod
    def load(cls, path: Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise InvalidArgumentError(f"cannot read config {path}: {e}") from e
        return cls.parse(text)

    @classmethod
    def build(cls, **values) -> "RunConfig":
        """Validated construction; pydantic errors surface as InvalidArgumentError."""
        try:
            return cls(**values)
        except ValidationError as e:
            raise InvalidArgumentError(f"invalid run config: {e.errors()[0]['msg']}") from e

    def dump(self) -> str:
        lines: List[str] = [HEADER]
        for key, value in self.model_dump().items():
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def save(self, path: Path) -> Path:
        path = Path(path)
        path.write_text(self.dump())
        return path


def _decode(key: str, value: str):
    if key == "holder_window":
        parts = [v.strip() for v in value.split(",")]
        if len(parts) != 2:
            raise InvalidArgumentError(f"holder_window needs two comma-separated numbers, got {value!r}")
        return tuple(parts)
    return value
