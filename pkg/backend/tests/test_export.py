import sys
import os
import json

import numpy as np
import pytest

sys.path.append(os.path.join(os.path.dirname(__file__), '..'))

from app.core.exceptions import InvalidArgumentError
from app.schemas.models import GridSpec, RationalTime
from app.services.algebraic_service import algebraic_service
from app.services.export_service import POLYGON_COLUMNS, export_service, fmt
from app.services.spectral_service import spectral_service


@pytest.fixture(scope="module")
def small_run():
    spec = GridSpec(M=3, N=48, n_t=spectral_service.min_steps(3, 48))
    return spectral_service.run(spec, record_full_at=[0.0, spec.t_final / 3, spec.t_final])


def test_fmt_is_lossless():
    for x in (np.pi, 1 / 3, 2.0 ** -40, -123456.789):
        assert float(fmt(x)) == x


def test_polygon_files(tmp_path):
    polygon = algebraic_service.build_polygon(RationalTime(M=3, p=1, q=4))
    files = export_service.write_polygon(polygon, tmp_path)
    assert files["csv"].name == "polygon_M3_p1_q4.csv"

    header = files["csv"].read_text().splitlines()[0]
    assert header == ",".join(POLYGON_COLUMNS)

    back = export_service.read_polygon(files["json"])
    assert np.array_equal(back.vertices, polygon.vertices)
    assert np.array_equal(back.virtual, polygon.virtual)
    assert back.rho == polygon.rho

    table = export_service.read_polygon_csv(files["csv"])
    assert np.array_equal(table["tangents"], polygon.tangents)
    assert table["virtual"].sum() == 6


def test_trajectory_manifest(tmp_path, small_run):
    spec = small_run.spec
    middle = int(round(spec.t_final / 3 / spec.dt))
    manifest_path = export_service.write_trajectory(small_run, tmp_path, wall_time=1.5,
                                                    dump_labels={0: 0, spec.n_t: 3})
    manifest = json.loads(manifest_path.read_text())
    assert manifest["spec"] == {"M": 3, "N": 48, "n_t": spec.n_t}
    assert [d["file"] for d in manifest["dumps"]] == ["state_0.csv", f"state_{middle}.csv", "state_3.csv"]
    assert set(manifest["checksums"]) == {"trajectory.csv", "state_0.csv", f"state_{middle}.csv",
                                          "state_3.csv"}

    back = export_service.read_trajectory(manifest_path)
    assert np.array_equal(back.times, small_run.times)
    assert np.array_equal(back.x0, small_run.x0)
    assert np.array_equal(back.height, small_run.height)
    assert set(back.dumps) == set(small_run.dumps)
    assert np.array_equal(back.dumps[spec.n_t].T, small_run.dumps[spec.n_t].T)


def test_trajectory_files_are_reproducible(tmp_path, small_run):
    first = export_service.write_trajectory(small_run, tmp_path / "a")
    second = export_service.write_trajectory(small_run, tmp_path / "b")
    assert json.loads(first.read_text())["checksums"] == json.loads(second.read_text())["checksums"]


def test_tampered_run_is_rejected(tmp_path, small_run):
    manifest_path = export_service.write_trajectory(small_run, tmp_path)
    with open(tmp_path / "trajectory.csv", "a") as f:
        f.write(f"{fmt(1.0)},0,0,0,0\n")
    with pytest.raises(InvalidArgumentError):
        export_service.read_trajectory(manifest_path)
    assert export_service.read_trajectory(manifest_path, verify=False).times.size == small_run.times.size + 1


def test_series_and_report(tmp_path):
    path = export_service.write_series(tmp_path / "z.csv", ["t", "z_re", "z_im"],
                                       np.array([0.0, 0.5]), np.array([1 + 2j, 3 - 4j]))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,z_re,z_im"
    assert lines[2] == "0.5,3,-4"
    with pytest.raises(InvalidArgumentError):
        export_service.write_series(tmp_path / "bad.csv", ["t"], np.zeros(2), np.zeros(2))

    report = {"c_M": np.float64(0.25), "values": np.arange(3), "z": 1 + 1j}
    export_service.write_report(report, tmp_path / "report.json")
    assert export_service.read_report(tmp_path / "report.json") == {
        "c_M": 0.25, "values": [0, 1, 2], "z": {"re": 1.0, "im": 1.0}}


def test_wrong_header_is_rejected(tmp_path):
    path = tmp_path / "state.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(InvalidArgumentError):
        export_service.read_state(path, 0.0, 3, 48, 3)
