import json
from fractions import Fraction as F
from importlib import resources

import jsonschema
import pytest

from budgetagg.analysis import RandomProfileSpec, random_profile, worst_case_family
from budgetagg.cli import run_capture
from budgetagg.formats import parse_profile, profile_to_csv, profile_to_json
from instances import GREEDY_GAP_4x5, LADDER_UNDERSPENDS, LADDER_WINS

SCHEMA = json.loads(resources.files("budgetagg").joinpath("schemas/report.schema.json").read_text())
PROFILE_SCHEMA = json.loads(resources.files("budgetagg").joinpath("schemas/profile.schema.json").read_text())


def _write(tmp_path, p, name="p.csv"):
    f = tmp_path / name
    f.write_text(profile_to_csv(p), encoding="utf-8")
    return str(f)


def _json(argv):
    code, out, err = run_capture(argv + ["--format", "json"])
    doc = json.loads(out) if out else None
    if doc is not None:
        jsonschema.validate(doc, SCHEMA)
        _lowest_terms(doc)
    return code, doc, err


def _lowest_terms(doc):
    if isinstance(doc, dict):
        for v in doc.values():
            _lowest_terms(v)
    elif isinstance(doc, list):
        for v in doc:
            _lowest_terms(v)
    elif isinstance(doc, str) and "/" in doc and doc.replace("/", "").replace("-", "").isdigit():
        assert str(F(doc)) == doc


def test_run_ladder(tmp_path):
    code, doc, _ = _json(["run", _write(tmp_path, LADDER_WINS), "--mech", "ladder"])
    assert code == 0
    assert doc["allocation"] == ["5/12", "5/12", "1/6"]
    assert doc["welfare"] == "11/6" and doc["t_star"] == "11/12"
    assert doc["allocation_decimal_approx"][2] == 0.166666666667


def test_run_table_output(tmp_path):
    code, out, _ = run_capture(["run", _write(tmp_path, LADDER_WINS), "--mech", "Ladder"])
    assert code == 0 and "5/12 5/12 1/6" in out and "11/6" in out


def test_run_constant_on_four_alternatives(tmp_path):
    p = random_profile(RandomProfileSpec(3, 4, 5, seed=1))
    code, doc, _ = _json(["run", _write(tmp_path, p), "--mech", "constant"])
    assert code == 0 and doc["allocation"] == ["1/4"] * 4


def test_gen_piped_into_run(tmp_path):
    code, text, _ = run_capture(["gen", "--family", "worst-case", "--n", "9", "--ell", "3"])
    assert code == 0
    f = tmp_path / "wc.csv"
    f.write_text(text)
    code, doc, _ = _json(["run", str(f), "--mech", "utilprop"])
    assert doc["allocation"] == ["1/9"] * 6 + ["1/3"]


def test_audit_worst_case_family():
    code, doc, _ = _json(["audit", "--family", "worst-case", "--n", "9", "--ell", "3"])
    assert code == 0
    assert doc["ratio_utilprop"] == "9/5" and doc["alpha_star"] == "9/5" and doc["alpha_bound_tight"]


def test_audit_enumerated_dominance():
    code, doc, _ = _json(["audit", "--dominance", "--enumerate", "--n", "2", "--m", "2", "--denominator", "4"])
    assert code == 0 and doc["ok"] and doc["profiles"] == 25
    assert all(p["holds"] for p in doc["pairs"] if p["claimed"] == "a>=b")


def test_audit_proportional_spending_failure(tmp_path):
    code, doc, _ = _json(["audit", _write(tmp_path, LADDER_UNDERSPENDS), "--mech", "ladder",
                          "--check", "proportional-spending"])
    assert code == 1
    assert doc["checks"][0]["detail"] == "k=1: 2/3 < 5/6"


def test_audit_other_checks(tmp_path):
    f = _write(tmp_path, worst_case_family(4, 2))
    code, doc, _ = _json(["audit", f, "--mech", "utilprop", "--mech", "greedydecomp",
                          "--check", "single-minded", "--check", "range-respect", "--check", "decomposable"])
    assert code == 0 and len(doc["checks"]) == 6
    code, doc, _ = _json(["audit", f, "--mech", "util", "--check", "single-minded"])
    assert code == 1


def test_audit_truthfulness():
    code, doc, _ = _json(["audit", "--truthfulness", "--mech", "ladder", "--n", "3", "--m", "3", "--trials", "10"])
    assert code == 0 and doc["checks"][0]["pairs_checked"] == 30


def test_dominate_pairs():
    code, doc, _ = _json(["dominate", "--pairs", "util:utilprop,fan:greedymax", "--trials", "20"])
    assert code == 0 and [p["a"] for p in doc["pairs"]] == ["Util", "Fan"]
    code, out, _ = run_capture(["dominate", "--pairs", "constant:util", "--trials", "20", "--format", "csv"])
    assert code == 1 and out.startswith("a,b,claimed")


def test_decomp_certificate(tmp_path):
    code, doc, _ = _json(["decomp", _write(tmp_path, GREEDY_GAP_4x5)])
    assert code == 0 and doc["welfare"] == "2" and doc["certificate_valid"]
    assert len(doc["contributions"]) == 4


def test_optdecomp(tmp_path, monkeypatch):
    f = _write(tmp_path, GREEDY_GAP_4x5)
    code, doc, _ = _json(["optdecomp", f])
    assert code == 0 and doc["welfare"] == "7/3"
    assert doc["allocation"] == ["1/12", "1/12", "1/4", "1/4", "1/3"]
    code, _, err = run_capture(["optdecomp", f, "--node-limit", "2"])
    assert code == 2 and "node limit" in err
    monkeypatch.setenv("BUDGET_AGG_NODE_LIMIT", "2")
    assert run_capture(["optdecomp", f])[0] == 2
    assert run_capture(["optdecomp", f, "--node-limit", "1000"])[0] == 0


def test_optdecomp_size_cap(tmp_path):
    big = random_profile(RandomProfileSpec(5, 5, 4, seed=0))
    code, _, err = run_capture(["optdecomp", _write(tmp_path, big)])
    assert code == 2 and "n*m" in err


def test_weighted_run(tmp_path):
    f = tmp_path / "w.json"
    f.write_text('{"votes": [["1", "0"], ["0", "1"]], "weights": [2, 2]}')
    code, doc, _ = _json(["weighted-run", str(f), "--mech", "utilprop"])
    assert code == 0 and doc["allocation"] == ["1/2", "1/2"]
    code, doc, _ = _json(["weighted-run", str(f), "--weights", "3,1"])
    assert code == 0 and doc["allocation"] == ["3/4", "1/4"] and doc["certificate_valid"]
    g = tmp_path / "nw.csv"
    g.write_text("1,0\n0,1\n")
    assert run_capture(["weighted-run", str(g)])[0] == 2


def test_gen_outputs(tmp_path):
    code, text, _ = run_capture(["gen", "--family", "gap", "--n", "4", "--eps", "1/100"])
    assert code == 0 and text.splitlines()[2] == "0,0,101/400,101/400,99/200"
    code, text, _ = run_capture(["gen", "--family", "pwu-lb", "--n", "4"])
    assert [len(line.split(",")) for line in text.splitlines()] == [9] * 4
    args = ["gen", "--random", "--n", "3", "--m", "3", "--denominator", "6", "--seed", "7"]
    assert run_capture(args) == run_capture(args)
    out = tmp_path / "r.json"
    assert run_capture(args + ["--format", "json", "-o", str(out)])[0] == 0
    doc = json.loads(out.read_text())
    jsonschema.validate(doc, PROFILE_SCHEMA)
    assert parse_profile(out.read_text())[0] == random_profile(RandomProfileSpec(3, 3, 6, 7))


def test_profile_json_matches_schema():
    jsonschema.validate(json.loads(profile_to_json(LADDER_WINS, (1, 2, 1, 1))), PROFILE_SCHEMA)


@pytest.mark.parametrize("argv", [
    ["gen", "--family", "worst-case", "--n", "3", "--ell", "5"],
    ["gen", "--family", "pwu-lb", "--n", "3"],
    ["gen"],
    ["run", "/nonexistent/profile.csv", "--mech", "fan"],
    ["audit", "--family", "worst-case", "--n", "4"],
    ["dominate", "--pairs", "util-utilprop"],
    ["dominate", "--trials", "0"],
])
def test_input_errors_exit_2(argv):
    assert run_capture(argv)[0] == 2


def test_parse_error_reports_position(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("1/2,1/2\n1/3,zz\n")
    code, _, err = run_capture(["run", str(f), "--mech", "ladder"])
    assert code == 2 and "line 2, column 5" in err


def test_unknown_mechanism(tmp_path):
    code, _, err = run_capture(["run", _write(tmp_path, LADDER_WINS), "--mech", "median"])
    assert code == 2 and "unknown mechanism" in err


def test_internal_error_exit_3(tmp_path, monkeypatch):
    import budgetagg.cli as cli
    from budgetagg.core import InternalInvariantError

    def boom(*_):
        raise InternalInvariantError("broken")

    monkeypatch.setattr(cli, "run_phantom", boom)
    code, _, err = run_capture(["run", _write(tmp_path, LADDER_WINS), "--mech", "fan"])
    assert code == 3 and "internal error" in err
