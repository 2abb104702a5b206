import lie.nilsoliton as ns
import numpy as np
import pytest


def setup(name):
    mu = ns.document.to_structure_tensor(ns.corpus.corpus(name))
    pe = ns.derivations.pre_einstein(mu)
    return pe.mu, pe


def test_ricci_h5():
    """Ric(h5) = diag(−½, −½, −½, −½, 1)."""
    mu, _ = setup("h5")
    assert np.allclose(ns.ricci.ricci_endo(mu), np.diag([-0.5] * 4 + [1.0]))


@pytest.mark.parametrize(
    "name,c,D",
    [
        ("h3", -1.5, [1.0, 1.0, 2.0]),
        ("n4", -1.5, [0.5, 1.0, 1.5, 2.0]),
        ("h5", -2.0, [1.5, 1.5, 1.5, 1.5, 3.0]),
    ],
)
def test_soliton_residual_at_soliton(name, c, D):
    """The standard metrics of h3, n4 and h5 are nilsolitons."""
    mu, pe = setup(name)
    fit = ns.ricci.soliton_residual(mu, pe)
    assert fit.c == pytest.approx(c)
    assert np.diag(fit.D).tolist() == pytest.approx(D)
    assert fit.residual <= 1e-12
    assert np.allclose(fit.ricci, fit.c * np.eye(mu.dim) + fit.D, atol=1e-12)


def test_soliton_residual_off_soliton():
    """n4 with the metric diag(1, 2, 1, 1) misses by √54/16."""
    mu, pe = setup("n4")
    moved = ns.algebra.rho_act(ns.core.FrameChange(np.diag([1.0, 2.0, 1.0, 1.0])), mu)
    fit = ns.ricci.soliton_residual(moved, pe)
    assert fit.c == pytest.approx(-15 / 16)
    assert fit.residual == pytest.approx(np.sqrt(54) / 16)
    assert fit.residual == pytest.approx(0.459, abs=1e-3)
    normalized = ns.ricci.soliton_residual(moved, pe, normalize=True)
    assert normalized.residual == pytest.approx(fit.residual / 1.25)


def test_ricci_equivariant():
    """Ric(ρ(k)μ) = k Ric(μ) kᵗ for orthogonal k."""
    mu, _ = setup("free23")
    k, _ = np.linalg.qr(np.random.default_rng(6).normal(size=(6, 6)))
    moved = ns.algebra.rho_act(ns.core.FrameChange(k, k.T), mu)
    assert np.allclose(
        ns.ricci.ricci_endo(moved), k @ ns.ricci.ricci_endo(mu) @ k.T, atol=1e-12
    )


@pytest.mark.parametrize("name", ["n4", "L5", "free23"])
def test_ricci_orthogonal_to_derivations(name):
    """⟨Ric(μ_g), ψ⟩ = 0 for ψ ∈ Der(μ_g) and Ric(μ_g) commutes with φ for g ∈ exp(𝔭)."""
    mu, pe = setup(name)
    pb = ns.stability.p_basis(pe)
    rng = np.random.default_rng(7)
    for _ in range(4):
        A = rng.normal(size=pb.count)
        A *= rng.uniform(0.2, 1.0) / np.linalg.norm(A)
        mu_g = ns.algebra.rho_act(ns.core.FrameChange.exp(pb.matrix(A)), mu)
        ric = ns.ricci.ricci_endo(mu_g)
        for psi in ns.derivations.derivation_space(mu_g).basis:
            assert ns.algebra.hs_inner(ric, psi) == pytest.approx(0.0, abs=1e-10)
        assert np.linalg.norm(ric @ pe.phi - pe.phi @ ric) <= 1e-10
