import lie.nilsoliton as ns
import json
import numpy as np
import pytest


def run(name, command, **flags):
    return ns.report.run_pipeline(
        ns.corpus.corpus(name), command, ns.report.PipelineFlags(**flags)
    )


def jacobi_violation():
    return ns.document.parse_algebra(
        '{"dim": 5, "brackets": [{"i": 1, "j": 2, "k": 4, "c": 1},'
        ' {"i": 2, "j": 3, "k": 4, "c": 1}, {"i": 1, "j": 4, "k": 5, "c": 1}]}'
    )


def test_report_n4():
    """n4 has a simple spectrum, so the criterion decides and the flow certifies."""
    report = run("n4", "report")
    assert report.verdict == "soliton-found"
    assert report.verdict_kind == "soliton"
    assert report.exit_code() == 0
    assert report.obstructions == {"scaling": False}
    assert report.criterion.definitive
    assert report.criterion.verdict == "interior"
    assert report.search is None
    assert report.certificate.c == pytest.approx(-1.5, abs=1e-6)
    assert report.flow["certified"]


def test_report_h5_searches():
    """A repeated eigenvalue triggers the frame search before the flow."""
    report = run("h5", "report", search=4)
    assert report.search["samples"] == 4
    assert report.search["status"] == "inconclusive-positive"
    assert not report.criterion.definitive
    assert report.verdict == "soliton-found"


def test_report_is_deterministic():
    first = run("L5", "report", seed=3).to_json()
    assert run("L5", "report", seed=3).to_json() == first
    data = json.loads(first)
    assert data["tool"] == "nilsoliton"
    assert data["input"]["name"] == "L5"
    assert data["timings"] is None


def test_timings():
    report = run("h3", "flow", timings=True)
    assert set(report.timings) == {"validate", "pre-einstein", "ricci", "flow"}
    assert run("h3", "flow").elapsed.keys() == report.timings.keys()


def test_validate_rejection():
    """validate reports a broken bracket, other commands raise."""
    doc = jacobi_violation()
    report = ns.report.run_pipeline(doc, "validate")
    assert not report.validation.ok
    assert report.validation.error["code"] == "jacobi-violation"
    assert report.exit_code() == 1
    with pytest.raises(ns.core.JacobiViolation):
        ns.report.run_pipeline(doc, "report")


def test_stage_commands():
    """The stage commands fill their block and decide nothing."""
    der = run("h5", "der")
    assert der.derivations["dim"] == 15
    assert der.verdict is None and der.exit_code() == 0

    pe = run("n4", "pre-einstein")
    assert pe.pre_einstein["derivations"] == 7
    assert pe.ricci is None

    ric = run("h3", "ricci")
    assert ric.ricci["c"] == pytest.approx(-1.5)
    assert ric.ricci["residual"] == pytest.approx(0.0, abs=1e-12)


def test_nu():
    lam = np.diag([0.0, 0.0, 1.0, 0.0]).tolist()
    report = run("n4", "nu", lam=lam)
    assert report.nu["nu"] == pytest.approx(1.0)
    assert not report.nu["is_derivation"]
    with pytest.raises(ns.core.ParseError):
        run("n4", "nu")


def test_criterion_command():
    report = run("n4", "criterion")
    assert report.verdict == "inconclusive"
    assert report.exit_code() == 20
    assert report.criterion.definitive
    assert report.certificate is None


def test_criterion_command_exterior(monkeypatch):
    """A definitive exterior verdict concludes no-soliton with its certificate."""
    doc = ns.document.parse_algebra(
        '{"dim": 5, "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1},'
        ' {"i": 2, "j": 4, "k": 1, "c": 1}, {"i": 3, "j": 4, "k": 2, "c": 1},'
        ' {"i": 4, "j": 5, "k": 3, "c": 1}]}'
    )
    mu = ns.document.to_structure_tensor(doc)
    pe = ns.derivations.PreEinstein.from_diagonal(
        mu, 9 / 31 * np.array([1.0, 2.0, 3.0, -1.0, 4.0])
    )
    # The bracket is graded but not Lie, so validation and φ are stubbed.
    monkeypatch.setattr(
        ns.algebra,
        "validate_bracket",
        lambda mu, tol=None, raise_on_error=True: ns.algebra.ValidationReport(
            ok=True, dim=mu.dim, entries=4, jacobi_residual=0.0
        ),
    )
    monkeypatch.setattr(ns.derivations, "pre_einstein", lambda mu, tol=None, seed=0: pe)

    report = ns.report.run_pipeline(doc, "criterion")
    assert report.criterion.definitive
    assert report.criterion.verdict == "exterior"
    assert report.search is None
    assert report.verdict == "no-soliton"
    assert report.verdict_kind == "negative-weight"
    assert report.exit_code() == 10
    assert ns.check.verify_certificate(report.certificate, pe.mu, pe)


def test_certify():
    """A report's certificate re-checks, a tampered one is rejected."""
    text = run("h3", "report").to_json()
    assert run("h3", "certify", certificate=text).verdict == "soliton-found"

    data = json.loads(text)
    data["certificate"]["c"] = -1.2
    with pytest.raises(ns.core.MalformedCertificate):
        run("h3", "certify", certificate=data)
    with pytest.raises(ns.core.MalformedCertificate):
        run("h3", "certify")


def test_unknown_command():
    with pytest.raises(ns.core.ParseError):
        run("h3", "solve")
