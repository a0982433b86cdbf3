import acceptance
from acceptance import AcceptanceCheck, run_acceptance
from settings import DEFAULTS


def test_raising_check_is_reported_as_failure(monkeypatch):
    def _check_boom(settings):
        raise RuntimeError("no convergence")

    def _check_fine(settings):
        return AcceptanceCheck("fine", True, "1", "1")

    monkeypatch.setattr(acceptance, "CHECKS", [_check_boom, _check_fine])
    results = run_acceptance(DEFAULTS)
    assert [(r.name, r.passed) for r in results] == [("boom", False), ("fine", True)]
    assert results[0].measured == "error: no convergence"


def test_structural_invariants_hold_on_defaults():
    result = acceptance._check_structural(DEFAULTS)
    assert result.passed, result.measured


def test_operator_spread_and_uniqueness_on_defaults():
    assert acceptance._check_operator_spread(DEFAULTS).passed
    assert acceptance._check_uniqueness(DEFAULTS).passed
