import lie.nilsoliton as ns
import numpy as np
import pytest


def setup(name):
    mu = ns.document.to_structure_tensor(ns.corpus.corpus(name))
    pe = ns.derivations.pre_einstein(mu)
    return pe.mu, pe


def soliton(name):
    mu, pe = setup(name)
    outcome = ns.kempf_ness.flow(mu, pe)
    assert outcome.tag == "converged"
    return mu, pe, outcome.certificate


def stub(mu):
    return ns.derivations.PreEinstein.from_diagonal(mu, np.zeros(mu.dim))


def test_soliton_certificate_h3():
    """The standard metric of h3 certifies with c = −3/2 and D = diag(1, 1, 2)."""
    mu, pe, cert = soliton("h3")
    assert cert.c == pytest.approx(-1.5)
    assert np.diag(cert.D).tolist() == pytest.approx([1.0, 1.0, 2.0])
    assert ns.check.verify_certificate(cert, mu, pe)


@pytest.mark.parametrize(
    "update",
    [
        {"c": -1.4},
        {"residual": 1e-3},
        {"energy": 0.5},
        {"D": np.diag([1.0, 1.0, 2.1]).tolist()},
    ],
)
def test_tampered_soliton_certificate(update):
    """Changing any certified number breaks the certificate."""
    mu, pe, cert = soliton("h3")
    assert not ns.check.verify_certificate(cert.model_copy(update=update), mu, pe)


def test_tampered_soliton_generator():
    """A generator off 𝔭 or out of step with A is caught."""
    mu, pe, cert = soliton("L5")
    x = np.array(cert.generator)
    bumped = x + 0.01 * np.diag(pe.s)
    failures = ns.check.certificate_failures(
        cert.model_copy(update={"generator": bumped.tolist()}), mu, pe
    )
    assert "generator is not in 𝔭" in failures
    assert "A does not match the generator" in failures


def test_negative_weight_certificate():
    """The flow's obstruction for h3 with φ = 0, then tampered."""
    h3 = ns.core.StructureTensor(3, {(0, 1, 2): 1.0})
    pe = stub(h3)
    cert = ns.kempf_ness.flow(h3, pe).certificate
    assert ns.check.verify_certificate(cert, h3, pe)
    assert not ns.check.verify_certificate(cert.model_copy(update={"nu": -0.5}), h3, pe)
    assert not ns.check.verify_certificate(cert.model_copy(update={"triple": cert.triple[::-1]}), h3, pe)


def test_negative_weight_claim_on_derivation():
    """A derivation of h3 never certifies an obstruction."""
    mu, pe = setup("h3")
    lam = np.diag([1.0, 1.0, 2.0]) / np.sqrt(6)
    cert = ns.stability.ObstructionCertificate(
        kind="negative-weight",
        lam=lam.tolist(),
        nu=-0.5,
        frame=np.eye(3).tolist(),
        working_frame=np.eye(3).tolist(),
        triple=[1, 2, 3],
    )
    failures = ns.check.certificate_failures(cert, mu, pe)
    assert "lambda is a derivation" in failures
    assert any(f.startswith("ν = ") for f in failures)


def test_scaling_certificate():
    """Scaling certificates check the eigenvector equation and the group action."""
    h3 = ns.core.StructureTensor(3, {(0, 1, 2): 1.0})
    pe = stub(h3)
    cert = ns.stability.scaling_obstruction(h3, pe)
    assert ns.check.verify_certificate(cert, h3, pe)
    assert not ns.check.verify_certificate(cert.model_copy(update={"c": -1.0}), h3, pe)
    with pytest.raises(ns.core.MalformedCertificate):
        ns.check.certificate_failures(cert.model_copy(update={"c": None}), h3, pe)


def test_zero_phi_certificate():
    """Zero-φ certificates reject a foreign frame and a foreign direction."""
    mu = ns.document.to_structure_tensor(ns.corpus.corpus("n4"))
    pe = stub(mu)
    cert = ns.stability.zero_phi_obstruction(mu, pe)
    assert ns.check.verify_certificate(cert, mu, pe)
    turned = np.eye(4)
    turned[np.ix_([2, 3], [2, 3])] = [[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]]
    assert not ns.check.verify_certificate(
        cert.model_copy(update={"frame": turned.tolist()}), mu, pe
    )
    assert not ns.check.verify_certificate(
        cert.model_copy(update={"lam": (2.0 * np.eye(4)).tolist()}), mu, pe
    )


def test_working_frame_mismatch():
    """A certificate issued in another working frame is malformed."""
    mu, pe, cert = soliton("n4")
    moved = cert.model_copy(update={"working_frame": (2.0 * np.eye(4)).tolist()})
    with pytest.raises(ns.core.MalformedCertificate):
        ns.check.verify_certificate(moved, mu, pe)
    with pytest.raises(ns.core.MalformedCertificate):
        ns.check.verify_certificate(cert.model_copy(update={"D": [[1.0]]}), mu, pe)


def test_load_and_dump():
    """Certificates survive JSON, bare or inside a report."""
    mu, pe, cert = soliton("n4")
    data = ns.check.dump_certificate(cert)
    assert ns.check.load_certificate(data) == cert

    h3 = ns.core.StructureTensor(3, {(0, 1, 2): 1.0})
    obstruction = ns.stability.zero_phi_obstruction(h3, stub(h3))
    data = ns.check.dump_certificate(obstruction)
    assert "lambda" in data
    assert ns.check.load_certificate({"verdict": "no-soliton", "certificate": data}) == obstruction

    with pytest.raises(ns.core.MalformedCertificate):
        ns.check.load_certificate("{not json")
    with pytest.raises(ns.core.MalformedCertificate):
        ns.check.load_certificate({"certificate": None})
    with pytest.raises(ns.core.MalformedCertificate):
        ns.check.load_certificate({"kind": "miracle"})
