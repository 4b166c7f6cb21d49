import json

import numpy as np
import pytest

from ncidirac.cli import main
from ncidirac.model import Model, ModelError, bundled_model_path, load_model


def minimal_doc():
    return {
        "name": "toy",
        "parameters": {"hbar": 1.0},
        "algebra": {"dim": 3, "brackets": [["e1", "e2", {"e3": "1"}]]},
        "subalgebra": {"h": ["e3"]},
        "bilinear_form": {"covariant": [["1", "0"], ["0", "1"]]},
        "chart": {"factors": [["x1", "e1"], ["x2", "e2"], ["h1", "e3"]],
                  "m_coords": ["x1", "x2"], "h_coords": ["h1"]},
    }


def test_bundled_models_load():
    for name in ("five_dim", "ads3"):
        m = load_model(bundled_model_path(name))
        assert m.alg.antisymmetry_residual() == 0.0
        assert m.gammas.anticommutator_residual() < 1e-11


def test_minimal_model_builds():
    m = Model(minimal_doc())
    assert m.alg.dim == 3
    assert m.rep.hom_residual < 1e-12  # adjoint fallback is faithful here


def test_duplicate_bracket_rejected():
    doc = minimal_doc()
    doc["algebra"]["brackets"].append(["e2", "e1", {"e3": "-1"}])
    with pytest.raises(ModelError, match="duplicate"):
        Model(doc)


def test_non_subalgebra_rejected():
    doc = minimal_doc()
    doc["subalgebra"] = {"h": ["e1"]}  # [e1, e2] = e3 leaves span{e1}
    with pytest.raises(ModelError):
        Model(doc)


def test_unknown_basis_label_path():
    doc = minimal_doc()
    doc["algebra"]["brackets"][0][2] = {"e9": "1"}
    with pytest.raises(ModelError, match=r"\$\.algebra\.brackets\[0\]"):
        Model(doc)


def test_bad_expression_reported_with_path():
    doc = minimal_doc()
    doc["bilinear_form"] = {"covariant": [["1", "zeta"], ["zeta", "1"]]}
    with pytest.raises(ModelError, match="bilinear_form"):
        Model(doc)


def test_degenerate_form_rejected():
    doc = minimal_doc()
    doc["bilinear_form"] = {"covariant": [["1", "1"], ["1", "1"]]}
    with pytest.raises(ModelError):
        Model(doc)


def test_with_params_rederives(ads3):
    mod = ads3.with_params(m=1.05)
    assert mod.params["j1"] == pytest.approx(-1.05)
    mod2 = ads3.with_params(j2=0.9)  # unpin the derived value
    assert mod2.params["j2"] == pytest.approx(0.9)
    assert mod2.params["j1"] == pytest.approx(-ads3.real_param("m"))


def test_cli_validate(capsys):
    assert main(["validate", "five_dim"]) == 0
    out = capsys.readouterr().out
    assert "five_dim: ok" in out


def test_cli_validate_missing_file():
    assert main(["validate", "no_such_model"]) == 2


def test_cli_verify_subset_json(tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = main(["verify", "ads3", "--suite", "algebra", "--format", "json",
                 "-o", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["model"] == "ads3"
    assert doc["passed"] is True
    assert all(c["passed"] for c in doc["checks"])
    ids = [c["id"] for c in doc["checks"]]
    assert len(ids) == len(set(ids))  # every check appears exactly once


def test_cli_verify_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["verify", "five_dim", "--suite", "algebra,clifford",
                     "--seed", "7", "--format", "json", "-o", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_cli_empty_suite_usage_error(capsys):
    assert main(["verify", "ads3", "--suite", " "]) == 2


def test_cli_unknown_suite(capsys):
    assert main(["verify", "ads3", "--suite", "nonsense"]) == 2


def test_cli_report_roundtrip(tmp_path, capsys):
    out = tmp_path / "rep.json"
    main(["verify", "ads3", "--suite", "algebra", "--format", "json",
          "-o", str(out)])
    assert main(["report", str(out), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc == json.loads(out.read_text())


def test_failing_check_has_worst_sample_and_exit_code(tmp_path):
    # shrink a tolerance beyond reach by scaling: a wrong-mass model fails
    doc = json.loads(bundled_model_path("ads3").read_text())
    doc["parameters"]["m"] = 0.8
    doc["derived_parameters"]["j1"] = "-m - 0.05"  # break the mass pinning
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    rep_path = tmp_path / "rep.json"
    code = main(["verify", str(bad), "--suite", "solutions", "--format",
                 "json", "-o", str(rep_path)])
    assert code == 1
    rep = json.loads(rep_path.read_text())
    failed = [c for c in rep["checks"] if not c["passed"]]
    assert failed
    assert any("worst_sample" in c for c in failed
               if c["id"].startswith("solutions.dirac_residual"))
