import lie.nilsoliton as ns
import numpy as np
import pytest


def setup(name):
    mu = ns.document.to_structure_tensor(ns.corpus.corpus(name))
    pe = ns.derivations.pre_einstein(mu)
    return pe.mu, pe


def stub(mu):
    return ns.derivations.PreEinstein.from_diagonal(mu, np.zeros(mu.dim))


@pytest.mark.parametrize("name,norm2", [("h3", 1 / 3), ("n4", 2 / 3), ("h5", 0.5)])
def test_s_direction(name, norm2):
    """‖I − φ‖² for known pre-Einstein derivations."""
    _, pe = setup(name)
    assert ns.stability.s_direction(pe).norm2 == pytest.approx(norm2)


@pytest.mark.parametrize("name,count", [("h3", 3), ("n4", 3), ("h5", 10), ("free23", 11)])
def test_p_basis(name, count):
    """𝔭 is orthonormal, symmetric, commutes with φ and is orthogonal to I − φ."""
    _, pe = setup(name)
    pb = ns.stability.p_basis(pe)
    assert pb.count == count
    flat = pb.elements.reshape(pb.count, -1)
    assert np.allclose(flat @ flat.T, np.eye(pb.count), atol=1e-12)
    for e in pb.elements:
        assert ns.stability.slice_violation(e, pe) <= 1e-12
    assert ns.stability.slice_violation(np.diag(pe.s), pe) > 0.5


def test_p_basis_coordinates():
    """matrix and coordinates are inverse on 𝔭."""
    _, pe = setup("h5")
    pb = ns.stability.p_basis(pe)
    A = np.random.default_rng(1).normal(size=pb.count)
    assert pb.coordinates(pb.matrix(A)) == pytest.approx(A)
    with pytest.raises(ns.core.DimensionMismatch):
        pb.matrix(np.zeros(pb.count + 1))


def test_p_basis_degenerate():
    """φ = I leaves no scaling direction."""
    mu = ns.core.StructureTensor(3, {(0, 1, 2): 1.0})
    with pytest.raises(ns.core.DegeneratePhi):
        ns.stability.p_basis(ns.derivations.PreEinstein.from_diagonal(mu, np.ones(3)))


def test_hm_weight_values():
    """Weights of simple directions on h3 and n4."""
    h3, pe = setup("h3")
    assert ns.stability.hm_weight(np.diag([1.0, 1.0, 2.0]), h3).nu == pytest.approx(0.0)
    assert ns.stability.hm_weight(np.diag(pe.s), h3).nu == pytest.approx(-1.0)
    assert ns.stability.hm_weight(-np.diag(pe.s), h3).nu == pytest.approx(1.0)

    swap = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
    w = ns.stability.hm_weight(swap, h3)
    assert w.nu == pytest.approx(0.0, abs=1e-12)
    assert w.eigenvalues == pytest.approx([-1.0, 0.0, 1.0])

    n4, _ = setup("n4")
    assert ns.stability.hm_weight(np.diag([0.0, 0.0, 1.0, 0.0]), n4).nu == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["h3", "n4", "L5", "h5", "free23"])
def test_scaling_direction_weight(name):
    """ν(I − φ) = −1 on the working-frame bracket."""
    mu, pe = setup(name)
    assert ns.stability.hm_weight(np.diag(pe.s), mu).nu == pytest.approx(-1.0, abs=1e-10)


def test_hm_weight_on_derivations():
    """Every element of 𝔭 is a derivation of h3, so every weight vanishes."""
    h3, pe = setup("h3")
    pb = ns.stability.p_basis(pe)
    rng = np.random.default_rng(2)
    for _ in range(8):
        lam = pb.matrix(rng.normal(size=pb.count))
        assert ns.derivations.is_derivation(lam, h3)
        assert ns.stability.hm_weight(lam, h3).nu == pytest.approx(0.0, abs=1e-8)


def test_hm_weight_homogeneous_and_equivariant():
    """ν(tλ) = tν(λ) for t > 0 and ν(kλkᵗ; ρ(k)μ) = ν(λ; μ) for orthogonal k."""
    mu, pe = setup("h5")
    pb = ns.stability.p_basis(pe)
    rng = np.random.default_rng(4)
    k, _ = np.linalg.qr(rng.normal(size=(5, 5)))
    moved = ns.algebra.rho_act(ns.core.FrameChange(k, k.T), mu)
    for _ in range(6):
        lam = pb.matrix(rng.normal(size=pb.count))
        nu = ns.stability.hm_weight(lam, mu).nu
        assert ns.stability.hm_weight(2.5 * lam, mu).nu == pytest.approx(2.5 * nu, abs=1e-9)
        assert ns.stability.hm_weight(k @ lam @ k.T, moved).nu == pytest.approx(nu, abs=1e-8)


def test_hm_weight_repeated_eigenvalues():
    """Rotating inside an eigenspace of λ does not change the weight."""
    mu, pe = setup("h5")
    lam = np.diag([1.0, -1.0, 1.0, -1.0, 0.0])
    c, s = np.cos(0.3), np.sin(0.3)
    r = np.eye(5)
    r[np.ix_([0, 2], [0, 2])] = [[c, -s], [s, c]]
    moved = ns.algebra.rho_act(ns.core.FrameChange(r, r.T), mu)
    assert ns.stability.hm_weight(lam, moved).nu == pytest.approx(
        ns.stability.hm_weight(lam, mu).nu, abs=1e-12
    )


def test_support_mask_by_blocks():
    """Rounding counts only inside a block that carries real mass."""
    c = np.zeros((3, 3, 3))
    c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0
    c[1, 1, 2] = 1e-15
    c[2, 2, 0] = 1e-15
    c[0, 2, 0] = -1e-15
    mask = ns.stability.support_mask(c, np.array([1.0, 1.0, 2.0]))
    assert sorted(zip(*np.nonzero(mask))) == [(0, 1, 2), (1, 0, 2), (1, 1, 2)]
    assert not ns.stability.support_mask(c, np.array([1.0, 2.0, 3.0]))[1, 1, 2]


def test_hm_weight_rejections():
    """Asymmetric λ and mismatched shapes are input errors."""
    h3, _ = setup("h3")
    with pytest.raises(ns.core.AsymmetricInput):
        ns.stability.hm_weight(np.triu(np.ones((3, 3))), h3)
    with pytest.raises(ns.core.DimensionMismatch):
        ns.stability.hm_weight(np.eye(4), h3)
    with pytest.raises(ns.core.EmptySupport):
        ns.stability.hm_weight(np.eye(3), ns.core.StructureTensor(3, {}))


@pytest.mark.parametrize("name", ["h3", "n4", "h5", "L5", "free23"])
def test_no_scaling_obstruction_on_corpus(name):
    """Algebras with a nilsoliton have no scaling eigenvector in 𝔭."""
    mu, pe = setup(name)
    assert ns.stability.scaling_obstruction(mu, pe) is None


def test_scaling_obstruction_with_zero_phi():
    """With φ = 0 on h3 the direction (1, 1, −2)/√6 scales μ."""
    h3 = ns.core.StructureTensor(3, {(0, 1, 2): 1.0})
    pe = stub(h3)
    cert = ns.stability.scaling_obstruction(h3, pe)
    assert cert.kind == "scaling"
    assert cert.c == pytest.approx(-4 / np.sqrt(6))
    assert cert.nu == pytest.approx(cert.c)
    assert np.diag(cert.matrix()).tolist() == pytest.approx(
        (np.array([1.0, 1.0, -2.0]) / np.sqrt(6)).tolist(), abs=1e-9
    )
    assert ns.check.verify_certificate(cert, h3, pe)


@pytest.mark.parametrize("name", ["h3", "n4", "L5", "free23"])
def test_zero_phi_obstruction(name):
    """The central construction has ν ≤ −1 and is not a derivation."""
    mu = ns.document.to_structure_tensor(ns.corpus.corpus(name))
    pe = stub(mu)
    cert = ns.stability.zero_phi_obstruction(mu, pe)
    assert cert.nu <= -1.0 + 1e-8
    assert not ns.derivations.is_derivation(cert.matrix(), mu)
    assert ns.check.verify_certificate(cert, mu, pe)


def test_zero_phi_requires_zero_phi():
    mu, pe = setup("n4")
    with pytest.raises(ns.core.PhiNonzero):
        ns.stability.zero_phi_obstruction(mu, pe)


def test_tt_condition3():
    """diag(2, 1, 1, 1, 1) on h5 breaks the derivation E13 + E31 − E24 − E42."""
    mu, pe = setup("h5")
    g = np.diag([2.0, 1.0, 1.0, 1.0, 1.0])
    lam = ns.stability.tt_condition3(mu, pe, g)
    assert lam is not None
    assert np.linalg.norm(lam) == pytest.approx(1.0)
    assert ns.stability.slice_violation(lam, pe) <= 1e-10
    assert ns.derivations.is_derivation(lam, mu)
    assert not ns.derivations.is_derivation(lam, ns.algebra.rho_act(ns.core.FrameChange(g), mu))

    witness = np.zeros((5, 5))
    witness[0, 2] = witness[2, 0] = 1.0
    witness[1, 3] = witness[3, 1] = -1.0
    assert ns.derivations.is_derivation(witness, mu)
    assert not ns.derivations.is_derivation(
        witness, ns.algebra.rho_act(ns.core.FrameChange(g), mu)
    )


def test_tt_condition3_commuting():
    """Frame changes must commute with φ."""
    mu, pe = setup("n4")
    with pytest.raises(ns.core.FrameNotCommuting):
        ns.stability.tt_condition3(mu, pe, np.eye(4) + np.eye(4, k=1))
    assert ns.stability.tt_condition3(mu, pe, np.diag([1.0, 2.0, 1.0, 1.0])) is None
