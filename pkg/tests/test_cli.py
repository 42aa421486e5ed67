"""Command-line tests: each command prints one result envelope and returns its exit code."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Callable

import pytest

from riemann_surfaces_ex.main import COMMANDS, build_parser, run

GENUS2_SPEC = {"schema_version": 1, "monomials": [[0, 2, 1, 0], [5, 0, -1, 0], [0, 0, 1, 0]]}
ELLIPTIC_SPEC = {"schema_version": 1, "monomials": [[0, 2, 1, 0], [3, 0, -1, 0], [2, 0, 3, 0], [1, 0, -2, 0]]}
FERMAT_SPEC = {"schema_version": 1, "monomials": [[0, 3, 1, 0], [3, 0, 1, 0], [0, 0, -1, 0]]}

WriteJson = Callable[[str, dict[str, Any]], Path]


def run_cli(capsys: pytest.CaptureFixture[str], argv: list[str]) -> tuple[int, dict[str, Any]]:
    code = run(argv)
    return code, json.loads(capsys.readouterr().out)


def test_parser_knows_every_command() -> None:
    """Test every command has a subparser."""
    parser = build_parser()
    for name in COMMANDS:
        argv = [name, "polys.json"] if name == "resultant" else [name, "spec.json"]
        if name in ("rr", "abel", "invert"):
            argv.append("extra.json")
        assert parser.parse_args(argv).command == name


def test_genus(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test genus of w^2 = z^5 - 1 is two."""
    code, envelope = run_cli(capsys, ["genus", str(write_json("curve.json", GENUS2_SPEC))])
    assert code == 0
    assert envelope["command"] == "genus"
    assert envelope["exit_code"] == 0
    assert envelope["outputs"]["genus"] == 2
    assert envelope["outputs"]["hyperelliptic_genus"] == 2
    assert envelope["outputs"]["euler_characteristic"] == -2
    assert len(envelope["curve_hash"]) == 64


def test_genus_general_curve(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test the Fermat cubic has genus one without a hyperelliptic check."""
    code, envelope = run_cli(capsys, ["genus", str(write_json("fermat.json", FERMAT_SPEC))])
    assert code == 0
    assert envelope["outputs"]["genus"] == 1
    assert envelope["outputs"]["kind"] == "general"
    assert "hyperelliptic_genus" not in envelope["outputs"]


def test_malformed_spec(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test invalid input files exit with the domain error code."""
    path = write_json("bad.json", {"schema_version": 1, "monomials": []})
    code, envelope = run_cli(capsys, ["genus", str(path)])
    assert code == 2
    assert envelope["exit_code"] == 2
    assert "CurveSpec" in envelope["error"]


def test_missing_file(capsys: pytest.CaptureFixture[str], tmp_path: Path) -> None:
    """Test an unreadable spec is a domain error."""
    code, envelope = run_cli(capsys, ["branch", str(tmp_path / "missing.json")])
    assert code == 2
    assert "Cannot read" in envelope["error"]


def test_branch_with_plots(capsys: pytest.CaptureFixture[str], write_json: WriteJson, tmp_path: Path) -> None:
    """Test the branch locus is listed and its CSV is written."""
    plot_dir = tmp_path / "plots"
    argv = ["branch", str(write_json("curve.json", ELLIPTIC_SPEC)), "--plot-dir", str(plot_dir)]
    code, envelope = run_cli(capsys, argv)
    assert code == 0
    assert envelope["outputs"]["count"] == 3
    assert envelope["outputs"]["includes_infinity"]
    assert envelope["diagnostics"]["plot_files"] == [str(plot_dir / "branch_points.csv")]


def test_monodromy(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test every finite branch point of an elliptic curve swaps the two sheets."""
    code, envelope = run_cli(capsys, ["monodromy", str(write_json("curve.json", ELLIPTIC_SPEC))])
    assert code == 0
    outputs = envelope["outputs"]
    assert [point["cycle_type"] for point in outputs["branch_points"]] == [[2]] * 3
    assert outputs["infinity"]["cycle_type"] == [2]
    assert outputs["transitive"]
    assert outputs["relation_holds"]


def test_periods(capsys: pytest.CaptureFixture[str], write_json: WriteJson, tmp_path: Path) -> None:
    """Test tau = i for roots 0, 1, 2 and the JSON copy on disk."""
    out = tmp_path / "periods.json"
    argv = ["periods", str(write_json("curve.json", ELLIPTIC_SPEC)), "--json-out", str(out)]
    code, envelope = run_cli(capsys, argv)
    assert code == 0
    assert envelope["outputs"]["tau"] == [pytest.approx(0.0, abs=1e-8), pytest.approx(1.0, abs=1e-8)]
    assert min(envelope["diagnostics"]["im_z_eigenvalues"]) > 0
    assert json.loads(out.read_text())["outputs"]["genus"] == 1


def test_rr(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test Riemann-Roch for 2 infinity on a genus-two curve."""
    divisor = {"schema_version": 1, "terms": [{"point": {"kind": "infinity"}, "coefficient": 2}]}
    argv = ["rr", str(write_json("curve.json", GENUS2_SPEC)), str(write_json("divisor.json", divisor))]
    code, envelope = run_cli(capsys, argv)
    assert code == 0
    outputs = envelope["outputs"]
    assert (outputs["dim_L"], outputs["dim_I_minus"], outputs["chi"]) == (2, 1, 1)
    assert outputs["monomial_dim_L"] == 2
    assert outputs["riemann_roch_holds"]


def test_abel(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test the divisor of z - 1 maps to the origin."""
    function = {"schema_version": 1, "r_num": [[-1, 0], [1, 0]]}
    argv = ["abel", str(write_json("curve.json", ELLIPTIC_SPEC)), str(write_json("f.json", function))]
    code, envelope = run_cli(capsys, argv)
    assert code == 0
    assert envelope["outputs"]["principal"]
    assert abs(complex(*envelope["diagnostics"]["residue_sum"])) < 1e-8


def test_abel_needs_hyperelliptic(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test functions on general curves are refused."""
    function = {"schema_version": 1, "r_num": [[0, 0], [1, 0]]}
    argv = ["abel", str(write_json("curve.json", FERMAT_SPEC)), str(write_json("f.json", function))]
    code, _ = run_cli(capsys, argv)
    assert code == 2


def test_invert_checks_target_length(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test the target needs 2g coordinates."""
    target = {"schema_version": 1, "coords": [0.25]}
    argv = ["invert", str(write_json("curve.json", ELLIPTIC_SPEC)), str(write_json("target.json", target))]
    code, envelope = run_cli(capsys, argv)
    assert code == 2
    assert "2 lattice coordinates" in envelope["error"]


def test_resultant(capsys: pytest.CaptureFixture[str], write_json: WriteJson) -> None:
    """Test Res(x^2 - 1, x - 2) = 3 through every route."""
    polys = {"schema_version": 1, "f": [[-1, 0], [0, 0], [1, 0]], "g": [[-2, 0], [1, 0]]}
    code, envelope = run_cli(capsys, ["resultant", str(write_json("polys.json", polys))])
    assert code == 0
    outputs = envelope["outputs"]
    assert outputs["resultant"] == [pytest.approx(3.0), pytest.approx(0.0, abs=1e-12)]
    assert outputs["resultant_exact"] == "3"
    assert outputs["discriminant_f"] == [pytest.approx(4.0), pytest.approx(0.0, abs=1e-12)]
    for value in outputs["product_forms"].values():
        assert complex(*value) == pytest.approx(3.0)
    assert envelope["curve_hash"] is None
