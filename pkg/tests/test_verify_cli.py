import csv
import io
import json
import math

import numpy as np
import pytest

from eigenratio.errors import ConfigError, DegenerateSpectrum
from eigenratio.model_spaces import circle_exact_spectrum, torus_exact_spectrum
from eigenratio.reports import CONSTANTS, FAIL, PASS, InequalityReport, asserted, within
from eigenratio.spectra import Spectrum
from eigenratio.verify_cli import (
    ExperimentConfig,
    load_config,
    main,
    optimality_scan,
    parse_length,
    parse_model_string,
    ratio_bound_check,
    run_suite,
    summary_csv,
    weyl_diagnostic,
)

E = math.e


def test_constants_match_closed_forms():
    assert CONSTANTS["8*sqrt(2)"] == pytest.approx(8 * math.sqrt(2), rel=1e-12)
    assert CONSTANTS["(16e/(e-1))^2"] == pytest.approx((16 * E / (E - 1)) ** 2, rel=1e-12)
    assert CONSTANTS["(e-1)/(sqrt(2)e)"] == pytest.approx((E - 1) / (math.sqrt(2) * E), rel=1e-12)
    assert CONSTANTS["(e-1)^2/(16sqrt(2)e^2)"] == pytest.approx((E - 1) ** 2 / (16 * math.sqrt(2) * E**2), rel=1e-12)
    assert CONSTANTS["152"] == 152
    assert CONSTANTS["(16e/(e-1))^2"] < 641


def test_pass_rule():
    assert within(1.0, 1.0) and within(1.0 + 5e-10, 1.0) and not within(1.0 + 2e-9, 1.0)
    assert within(1e3 * (1 + 5e-10), 1e3) and not within(1e3 * (1 + 2e-9), 1e3)
    rep = asserted("x", 2.0, 3.0)
    assert rep.status == PASS and rep.slack == 1.0
    assert asserted("x", 3.0, 2.0).status == FAIL


def test_ratio_bound_examples():
    circ = circle_exact_spectrum(1.0, 20)
    for k in range(1, 21):
        rep = ratio_bound_check(circ, k)
        assert rep.lhs == pytest.approx(math.ceil(k / 2) ** 2, rel=1e-12)
        assert rep.status == PASS
    tor = torus_exact_spectrum(2, 0.5, 9)
    rep = ratio_bound_check(tor, 9)
    assert rep.lhs == pytest.approx(16, rel=1e-12) and rep.rhs == pytest.approx(CONSTANTS["(16e/(e-1))^2"] * 81)
    assert ratio_bound_check(tor, 1).lhs == 1.0


def test_ratio_bound_degenerate():
    S = Spectrum(eigenvalues=np.array([0.0, 0.0, 1.0]), eigenfunctions=np.eye(3), method="dense",
                 residuals=np.zeros(3))
    with pytest.raises(DegenerateSpectrum):
        ratio_bound_check(S, 2)


def test_optimality_examples():
    (row,) = optimality_scan(2, [0.5])
    assert (row["k"], row["ratio"], row["lower_bound"]) == (9, 16.0, 9.0)
    assert row["exact_ratio"] == pytest.approx(16.0, rel=1e-12)
    (row,) = optimality_scan(3, [0.5])
    assert (row["k"], row["ratio"]) == (17, 64.0) and row["lower_bound"] == pytest.approx(32.111, abs=1e-3)
    rows = optimality_scan(2, np.linspace(0.1, 0.9, 9))
    assert all(r["pass"] for r in rows)
    assert all(r["ratio_over_k2"] >= 1 / 9 for r in rows)


def test_weyl_examples():
    circ = weyl_diagnostic(circle_exact_spectrum(1.0, 400), 1)
    assert circ["exponent"] == pytest.approx(2.0, abs=0.05) and circ["expected"] == 2.0
    tor = weyl_diagnostic(torus_exact_spectrum(2, 0.9, 400), 2)
    assert tor["exponent"] == pytest.approx(1.0, abs=0.1)
    short = weyl_diagnostic(circle_exact_spectrum(1.0, 10), 1)
    assert short["rows"] == [] and "fewer than 20" in short["note"]


def test_parse_helpers():
    assert parse_length("2pi") == 2 * math.pi
    assert parse_length("pi") == math.pi
    assert parse_length(0.25) == 0.25
    assert parse_model_string("torus:n=2,a=0.5,counts=16x64") == {"kind": "torus", "n": 2, "a": 0.5, "counts": [16, 64]}
    assert parse_model_string("g.txt") == {"kind": "graph", "path": "g.txt"}
    with pytest.raises(ConfigError):
        parse_model_string("circle:q=3")


def test_config_rejects_unknown_and_bad_keys():
    with pytest.raises(ConfigError, match="unknown|Additional"):
        ExperimentConfig.from_dict({"models": [{"kind": "circle"}], "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"models": [{"kind": "sphere"}]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"models": []})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"models": [{"kind": "circle"}], "kappa": [1.5]})


def test_malformed_config_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("models = [ { kind = 'circle' \n")
    assert main(["verify-all", "--config", str(bad), "--out", str(tmp_path / "o")]) != 0
    assert "error" in capsys.readouterr().err
    bad.write_text("name = 'x'\nextra = 3\n[[models]]\nkind = 'circle'\n")
    assert main(["verify-all", "--config", str(bad), "--out", str(tmp_path / "o")]) != 0
    assert main(["verify-all", "--config", "no_such_bundle"]) != 0


def _read_rows(path):
    return list(csv.DictReader(io.StringIO(path.read_text())))


def test_circle_smoke_bundle(tmp_path):
    cfg = load_config("circle_smoke")
    code, rows = run_suite(cfg, tmp_path)
    assert code == 0
    statuses = {r.status for r in rows}
    assert FAIL not in statuses and "ERROR" not in statuses
    table = _read_rows(tmp_path / "summary.csv")
    assert list(table[0].keys()) == ["check", "model", "k", "lhs", "rhs", "slack", "status"]
    assert len(table) == len(rows)
    assert len(list((tmp_path / "reports").glob("*.json"))) == len(rows)
    names = {r.name for r in rows}
    for needed in ("eigenfunction_split", "improved_cheeger", "step_approximation", "ratio_bound",
                   "buser_ledoux", "higher_buser_ledoux", "hk_ratio", "improved_higher_order_cheeger",
                   "shifted_higher_cheeger", "cheng_dimension_free", "cheng_classical",
                   "coarea_identity", "weyl_exponent"):
        assert needed in names
    doc = json.loads(next((tmp_path / "reports").glob("*improved_cheeger*.json")).read_text())
    assert {"C0", "thresholds", "overshoot"} <= set(doc["extra"]["certificate"]["approximation"])


def test_error_rows_are_not_failures(tmp_path):
    cfg = ExperimentConfig.from_dict({
        "models": [{"kind": "graph", "path": str(tmp_path / "missing.txt")}, {"kind": "circle", "a": 1.0, "N": 6}],
        "k_max": 2,
    })
    code, rows = run_suite(cfg)
    assert rows[0].status == "ERROR"
    assert code == 0


def test_exit_code_tracks_fail_rows():
    ok = [asserted("a", 1, 2)]
    bad = ok + [asserted("b", 3, 2)]
    assert ("FAIL" in summary_csv(bad)) and ("FAIL" not in summary_csv(ok))


def test_worker_pool_preserves_order(tmp_path):
    base = {"models": [{"kind": "circle", "a": 1.0, "N": 8}, {"kind": "circle", "a": 2.0, "N": 10},
                       {"kind": "torus", "n": 2, "a": 0.6, "counts": [3, 4]}],
            "k_max": 3, "method": "dense"}
    serial = summary_csv(run_suite(ExperimentConfig.from_dict(base))[1])
    pooled = summary_csv(run_suite(ExperimentConfig.from_dict({**base, "workers": 3}))[1])
    assert serial == pooled


def test_graph_file_model(tmp_path):
    from eigenratio.graph_core import write_graph
    from eigenratio.model_spaces import circle_graph

    write_graph(circle_graph(1.0, 9), tmp_path / "g.txt")
    cfg = ExperimentConfig.from_dict({"models": [{"kind": "graph", "path": str(tmp_path / "g.txt")}], "k_max": 2})
    code, rows = run_suite(cfg)
    assert code == 0
    skipped = {r.name for r in rows if r.status == "SKIPPED"}
    assert "buser_ledoux" in skipped


@pytest.mark.parametrize("cmd", ["spectrum", "cheeger", "improved-cheeger", "multiway", "obsdiam"])
def test_cli_subcommands(cmd, tmp_path, capsys):
    out = tmp_path / "o.json"
    code = main([cmd, "--model", "circle:a=2pi,N=32", "--k", "3", "--method", "dense", "--out", str(out)])
    assert code == 0
    assert json.loads(out.read_text())
    code = main([cmd, "--model", "torus:n=2,a=0.5,counts=4x8", "--k", "2", "--format", "csv"])
    assert code == 0
    assert capsys.readouterr().out.count("\n") >= 2


def test_cli_ratio_scan(capsys):
    assert main(["ratio-scan", "--n", "2", "3", "--a", "0.5", "0.3"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["k"] == 9 and len(rows) == 4


def test_cli_verify_all_deterministic(tmp_path, capsys):
    for d in ("r1", "r2"):
        assert main(["verify-all", "--config", "circle_smoke", "--method", "dense", "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "r1" / "summary.csv").read_bytes() == (tmp_path / "r2" / "summary.csv").read_bytes()
    assert "0 FAIL" in capsys.readouterr().out


def test_report_serialization_handles_numpy():
    rep = InequalityReport("x", 1.0, 2.0, PASS, extra={"arr": np.arange(3), "v": np.float64(2.5)})
    assert json.loads(json.dumps(rep.to_dict()))["extra"]["arr"] == [0, 1, 2]
