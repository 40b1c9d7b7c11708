import json

from diracshell.checks import REGISTRY, check_gauge_equivalence
from diracshell.cli import main


def test_registry_names_unique():
    names = set()
    for fn in REGISTRY:
        res_name = fn.__name__
        assert res_name not in names
        names.add(res_name)
    assert len(REGISTRY) >= 16


def test_gauge_suite_negative_control():
    # tampering with the connection coefficient must break the equivalence
    tampered = check_gauge_equivalence(coupling=0.30, n_s=128)
    assert not tampered.passed
    honest = check_gauge_equivalence(n_s=128)
    assert honest.passed


def test_check_verb_all_suites_pass(tmp_path, capsys):
    out = tmp_path / "checks.json"
    code = main(["check", "--out", str(out)])
    captured = capsys.readouterr().out
    assert code == 0
    summary = json.loads(out.read_text())
    assert all(entry["passed"] for entry in summary.values())
    assert captured.count("[PASS]") == len(summary)
    assert "[FAIL]" not in captured
