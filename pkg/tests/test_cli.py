import json
import math
import subprocess
import sys
from fractions import Fraction

import pytest

from wienermoment.cli import DEVIATIONS, main

X1_SQ = json.dumps({"terms": [{"coeff": 1.0, "mono": [{"t": "1/1", "pow": 2}]}]})
X1_PLUS_2 = json.dumps({"terms": [{"coeff": 1.0, "mono": [{"t": "1/1", "pow": 1}]},
                                  {"coeff": 2.0, "mono": []}]})
MINUS_ONE = json.dumps({"terms": [{"coeff": -1.0, "mono": []}]})


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def load(path):
    with open(path) as fh:
        return json.load(fh)


@pytest.fixture
def gaussian_inst(tmp_path, capsys):
    path = tmp_path / "g.json"
    code, _, _ = run(["gen", "gaussian", "--n", 2, "--c", 1, "--degree", 2,
                      "--constraint", X1_SQ, "--out", path], capsys)
    assert code == 0
    return path


@pytest.fixture
def band_inst(tmp_path, capsys):
    path = tmp_path / "band.json"
    code, _, _ = run(["gen", "uniform-band-atoms", "--n", 2, "--c", 1, "--degree", 2,
                      "--constraint", X1_PLUS_2, "--out", path], capsys)
    assert code == 0
    return path


def test_gen_gaussian_writes_table(gaussian_inst):
    inst = load(gaussian_inst)
    assert inst["functional"]["kind"] == "table"
    # 2*degree + constraint degree
    assert inst["functional"]["max_degree"] == 6
    moments = {json.dumps(m["mono"]): m["value"] for m in inst["functional"]["moments"]}
    assert moments[json.dumps([{"t": "1/1", "pow": 4}])] == pytest.approx(3.0)


def test_gen_uniform_band_atoms(band_inst):
    inst = load(band_inst)
    measure = load(band_inst.with_suffix(".measure.json"))
    assert inst["functional"] == {"kind": "atoms", "file": "band.measure.json"}
    assert len(measure["atoms"]) == 4
    assert all(a["w"] == 0.25 for a in measure["atoms"])


def test_gen_missing_table_file(tmp_path, capsys):
    code, _, err = run(["gen", "table-from-file", tmp_path / "missing.json"], capsys)
    assert code == 2 and "not found" in err


def test_gen_rejects_bad_constraint(capsys):
    code, _, _ = run(["gen", "gaussian", "--constraint", "{not json"], capsys)
    assert code == 2


def test_check_passes(gaussian_inst, capsys):
    code, out, _ = run(["check", gaussian_inst], capsys)
    report = json.loads(out)
    assert code == 0 and report["pass"]
    assert report["tool"] == "wienermoment" and "version" in report
    assert report["instance"]["grid_n"] == 2


def test_check_wrong_scale_fails(gaussian_inst, tmp_path, capsys):
    inst = load(gaussian_inst)
    inst.update(c=4.0, c0=3.6, c1=4.4)
    bad = tmp_path / "c4.json"
    bad.write_text(json.dumps(inst))
    code, out, _ = run(["check", bad], capsys)
    report = json.loads(out)
    assert code == 1 and not report["qv"]["pass"]
    for row in report["qv"]["rows"]:
        assert row["defect"] == pytest.approx(3.0, abs=1e-9)


def test_check_malformed_polynomial(gaussian_inst, tmp_path, capsys):
    inst = load(gaussian_inst)
    inst["constraints"] = [{"terms": [{"coeff": 1.0, "mono": [{"t": "2/4", "pow": 1}]}]}]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(inst))
    assert run(["check", bad], capsys)[0] == 2
    bad.write_text("{")
    assert run(["check", bad], capsys)[0] == 2


def test_instance_invariants(gaussian_inst, tmp_path, capsys):
    inst = load(gaussian_inst)
    inst.update(c0=1.2)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(inst))
    assert run(["check", bad], capsys)[0] == 2


def test_solve_uniform_band(band_inst, capsys):
    code, out, _ = run(["solve", band_inst], capsys)
    report = json.loads(out)
    assert code == 0 and report["status"] == "solved"
    assert report["represent"]["residual"] <= 1e-8


def test_solve_empty_feasible_set(band_inst, tmp_path, capsys):
    inst = load(band_inst)
    inst["constraints"] = [json.loads(MINUS_ONE)]
    bad = tmp_path / "neg.json"
    bad.write_text(json.dumps(inst))
    code, out, _ = run(["solve", bad, "--force"], capsys)
    assert code == 1 and json.loads(out)["status"] == "EmptyFeasibleSet"
    # without --force the failing certificate stops the pipeline first
    code, out, _ = run(["solve", bad], capsys)
    assert code == 1 and json.loads(out)["status"] == "check_failed"


def test_solve_factorize_uniform_signs(band_inst, capsys):
    code, out, _ = run(["solve", band_inst, "--factorize"], capsys)
    atoms = json.loads(out)["walk_measure"]["atoms"]
    assert code == 0 and len(atoms) == 4
    for a in atoms:
        assert abs(Fraction(a["w"]) - Fraction(1, 4)) <= 1e-12
        assert all(x == pytest.approx(1.0) for xs in a["xi_list"] for x in xs)


def test_solve_quantize_and_csv(band_inst, tmp_path, capsys):
    inst = load(band_inst)
    inst["lattice"] = {"K": 1.0, "h": 0.25}
    path = tmp_path / "band_q.json"
    path.write_text(json.dumps(inst))
    out = tmp_path / "report.json"
    code, _, _ = run(["solve", path, "--quantize", "--csv", "--out", out], capsys)
    assert code == 0
    block = load(out)["quantized"]
    assert block["lattice"]["h"] == 0.25
    assert math.isclose(sum(a["w"] for a in block["measure"]["atoms"]), 1.0, abs_tol=1e-12)
    rows = out.with_suffix(".csv").read_text().splitlines()
    assert rows[0] == "mono,error" and len(rows) == 1 + len(block["errors"])


def test_factorize_and_quantize_subcommands(band_inst, capsys):
    code, out, _ = run(["factorize", band_inst], capsys)
    assert code == 0 and len(json.loads(out)["walk_measure"]["atoms"]) == 4
    code, out, err = run(["quantize", band_inst, "--K", 1, "--h", 0.5, "--csv"], capsys)
    assert code == 0 and json.loads(out)["quantized"]["lattice"]["K"] == 1.0
    assert err.startswith("mono,error")
    assert run(["quantize", band_inst], capsys)[0] == 2


def test_qv_csv_and_deviations(gaussian_inst, tmp_path, capsys):
    out = tmp_path / "qv.json"
    code, _, _ = run(["qv", gaussian_inst, "--csv", "--paper-deviations", "--out", out], capsys)
    assert code == 0
    report = load(out)
    assert [d["id"] for d in report["deviations"]] == [d["id"] for d in DEVIATIONS]
    assert len(report["deviations"]) == 3
    assert out.with_suffix(".csv").read_text().startswith("n,defect,estimated_c")
    code, out_text, _ = run(["qv", gaussian_inst], capsys)
    assert "deviations" not in json.loads(out_text)


def test_montecarlo_reports_identical_across_threads(gaussian_inst, tmp_path, capsys):
    inst = load(gaussian_inst)
    inst["functional"] = {"kind": "montecarlo", "samples": 50000}
    inst["seed"] = 11
    path = tmp_path / "mc.json"
    path.write_text(json.dumps(inst))
    outputs = set()
    for threads in (1, 4, 1):
        code, out, _ = run(["qv", path, "--threads", threads], capsys)
        assert code in (0, 1)
        outputs.add(out)
    assert len(outputs) == 1
    other = run(["qv", path, "--seed", 12], capsys)[1]
    assert other not in outputs


def test_solve_byte_identical_files(band_inst, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(["solve", band_inst, "--factorize", "--out", a], capsys)
    run(["solve", band_inst, "--factorize", "--out", b, "--threads", 4], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_no_partial_files_on_error(gaussian_inst, tmp_path, capsys):
    inst = load(gaussian_inst)
    inst["constraints"] = [{"terms": [{"coeff": 1.0, "mono": [{"t": "1/3", "pow": 1}]}]}]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(inst))
    before = set(p.name for p in tmp_path.iterdir())
    code, _, _ = run(["check", bad, "--out", tmp_path / "never.json"], capsys)
    assert code == 2
    assert set(p.name for p in tmp_path.iterdir()) == before


def test_console_entry_point(gaussian_inst):
    proc = subprocess.run([sys.executable, "-m", "wienermoment.cli", "check", str(gaussian_inst)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["pass"]
