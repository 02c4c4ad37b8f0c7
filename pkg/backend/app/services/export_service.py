import csv
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.core.exceptions import InvalidArgumentError
from app.schemas.models import GridSpec, RationalTime, SkewPolygon, SpectralState, Trajectory

logger = logging.getLogger(__name__)

POLYGON_COLUMNS = ["k", "s_k", "X1", "X2", "X3", "T1", "T2", "T3", "virtual_flag"]
TRAJECTORY_COLUMNS = ["t", "X1", "X2", "X3", "h"]
STATE_COLUMNS = ["j", "s_j", "X1", "X2", "X3", "T1", "T2", "T3"]


def fmt(x: float) -> str:
    """Shortest-safe decimal for binary64: 17 significant digits."""
    return f"{float(x):.17g}"


def sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


class ExportService:
    """CSV/JSON writers and readers for polygons, trajectories, state dumps and reports."""

    # Polygons

    def polygon_payload(self, polygon: SkewPolygon) -> Dict[str, Any]:
        time = polygon.time
        return {
            "M": time.M, "p": time.p, "q": time.q,
            "t": time.t,
            "rho": polygon.rho,
            "psi_hat0": polygon.psi_hat0,
            "side_length": polygon.side_length,
            "vertical_offset": polygon.vertical_offset,
            "vertices": [
                {
                    "k": k,
                    "s_k": float(s),
                    "X": [float(v) for v in polygon.vertices[k]],
                    "T": [float(v) for v in polygon.tangents[k]],
                    "virtual": bool(polygon.virtual[k]),
                }
                for k, s in enumerate(polygon.arc_positions)
            ],
        }

    def write_polygon(self, polygon: SkewPolygon, out_dir: Path, stem: Optional[str] = None) -> Dict[str, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        time = polygon.time
        stem = stem or f"polygon_M{time.M}_p{time.p}_q{time.q}"

        csv_path = out_dir / f"{stem}.csv"
        with open(csv_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(POLYGON_COLUMNS)
            for k, s in enumerate(polygon.arc_positions):
                writer.writerow([k, fmt(s), *map(fmt, polygon.vertices[k]), *map(fmt, polygon.tangents[k]),
                                 int(polygon.virtual[k])])

        json_path = out_dir / f"{stem}.json"
        with open(json_path, "w") as f:
            json.dump(self.polygon_payload(polygon), f, indent=2)
        logger.info(f"Wrote polygon M={time.M} p={time.p} q={time.q} to {csv_path} and {json_path}")
        return {"csv": csv_path, "json": json_path}

    def read_polygon(self, json_path: Path) -> SkewPolygon:
        with open(json_path) as f:
            payload = json.load(f)
        rows = payload["vertices"]
        return SkewPolygon(
            time=RationalTime(M=payload["M"], p=payload["p"], q=payload["q"]),
            vertices=np.array([r["X"] for r in rows], dtype=float),
            tangents=np.array([r["T"] for r in rows], dtype=float),
            virtual=np.array([r["virtual"] for r in rows], dtype=bool),
            side_length=payload["side_length"],
            rho=payload["rho"],
            psi_hat0=payload["psi_hat0"],
            vertical_offset=payload.get("vertical_offset", 0.0),
        )

    def read_polygon_csv(self, csv_path: Path) -> Dict[str, np.ndarray]:
        rows = self._read_rows(csv_path, POLYGON_COLUMNS)
        return {
            "s_k": rows[:, 1],
            "vertices": rows[:, 2:5],
            "tangents": rows[:, 5:8],
            "virtual": rows[:, 8].astype(bool),
        }

    # Spectral runs

    def write_trajectory(self, traj: Trajectory, out_dir: Path, wall_time: float = 0.0,
                         dump_labels: Optional[Dict[int, int]] = None) -> Path:
        """trajectory.csv, state_<m>.csv per dump and manifest.json; returns the manifest path.

        dump_labels maps a step to the label m used in the state file name
        (defaults to the step itself).
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        dump_labels = dump_labels or {}

        traj_path = out_dir / "trajectory.csv"
        with open(traj_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(TRAJECTORY_COLUMNS)
            for t, x, h in zip(traj.times, traj.x0, traj.height):
                writer.writerow([fmt(t), *map(fmt, x), fmt(h)])

        files = {"trajectory": traj_path.name}
        dumps = []
        for step in sorted(traj.dumps):
            state = traj.dumps[step]
            label = dump_labels.get(step, step)
            path = out_dir / f"state_{label}.csv"
            self.write_state(state, path)
            dumps.append({"label": label, "step": step, "time": state.time, "fold": state.fold,
                          "file": path.name})

        spec = traj.spec
        manifest = {
            "spec": {"M": spec.M, "N": spec.N, "n_t": spec.n_t},
            "nodes_per_side": spec.nodes_per_side,
            "dt": spec.dt,
            "wall_time": wall_time,
            "files": files,
            "dumps": dumps,
            "checksums": {name: sha256(out_dir / name)
                          for name in [traj_path.name] + [d["file"] for d in dumps]},
        }
        manifest_path = out_dir / "manifest.json"
        with open(manifest_path, "w") as f:
            json.dump(manifest, f, indent=2)
        logger.info(f"Wrote trajectory with {len(dumps)} state dumps to {out_dir}")
        return manifest_path

    def write_state(self, state: SpectralState, path: Path) -> Path:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(STATE_COLUMNS)
            for j, s in enumerate(state.nodes):
                writer.writerow([j, fmt(s), *map(fmt, state.X[j]), *map(fmt, state.T[j])])
        return path

    def read_state(self, path: Path, time: float, M: int, N: int, fold: int) -> SpectralState:
        rows = self._read_rows(path, STATE_COLUMNS)
        return SpectralState(time=time, X=rows[:, 2:5].copy(), T=rows[:, 5:8].copy(), M=M, N=N, fold=fold)

    def read_trajectory(self, manifest_path: Path, verify: bool = True) -> Trajectory:
        manifest_path = Path(manifest_path)
        out_dir = manifest_path.parent
        try:
            with open(manifest_path) as f:
                manifest = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidArgumentError(f"cannot read run manifest {manifest_path}: {e}") from e
        if verify:
            for name, expected in manifest.get("checksums", {}).items():
                if sha256(out_dir / name) != expected:
                    raise InvalidArgumentError(f"checksum mismatch for {name} in {out_dir}")

        spec = GridSpec(**manifest["spec"])
        rows = self._read_rows(out_dir / manifest["files"]["trajectory"], TRAJECTORY_COLUMNS)
        dumps = {
            d["step"]: self.read_state(out_dir / d["file"], d["time"], spec.M, spec.N, d["fold"])
            for d in manifest["dumps"]
        }
        return Trajectory(spec=spec, times=rows[:, 0].copy(), x0=rows[:, 1:4].copy(),
                          height=rows[:, 4].copy(), dumps=dumps)

    # Analysis outputs

    def write_series(self, path: Path, columns: Sequence[str], *arrays: np.ndarray) -> Path:
        """Plot-ready CSV; complex arrays are split into re/im columns."""
        flat: List[np.ndarray] = []
        for a in arrays:
            a = np.asarray(a)
            if np.iscomplexobj(a):
                flat.extend([a.real, a.imag])
            else:
                flat.append(a)
        if len(flat) != len(columns):
            raise InvalidArgumentError(f"{len(columns)} column names for {len(flat)} columns")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(columns)
            for row in zip(*flat):
                writer.writerow([fmt(v) for v in row])
        return path

    def write_report(self, report: Dict[str, Any], path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            json.dump(report, f, indent=2, default=_jsonable)
        logger.info(f"Report written to {path}")
        return path

    def read_report(self, path: Path) -> Dict[str, Any]:
        with open(path) as f:
            return json.load(f)

    def _read_rows(self, path: Path, columns: Sequence[str]) -> np.ndarray:
        with open(path, newline="") as f:
            reader = csv.reader(f)
            header = next(reader, None)
            if header != list(columns):
                raise InvalidArgumentError(f"{path} has header {header}, expected {list(columns)}")
            rows = [[float(v) for v in row] for row in reader]
        return np.array(rows, dtype=float).reshape(-1, len(columns))


def _jsonable(value: Any) -> Any:
    if hasattr(value, "model_dump"):
        return value.model_dump(by_alias=True)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    raise TypeError(f"{type(value).__name__} is not JSON serialisable")


export_service = ExportService()
