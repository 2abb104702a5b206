import lie.nilsoliton as ns
import numpy as np
import pytest


def setup(name):
    mu = ns.document.to_structure_tensor(ns.corpus.corpus(name))
    pe = ns.derivations.pre_einstein(mu)
    return pe.mu, pe


def exterior_fixture():
    """μ(e1, e2) = e1 + e2 + e3 with φ = 0, whose points miss P₀."""
    mu = ns.core.StructureTensor(3, {(0, 1, 0): 1.0, (0, 1, 1): 1.0, (0, 1, 2): 1.0})
    return mu, ns.derivations.PreEinstein.from_diagonal(mu, np.zeros(3))


def simple_exterior_fixture():
    """Four brackets on five vectors with simple φ and P₀ outside Conv(F)."""
    mu = ns.core.StructureTensor(
        5, {(0, 1, 2): 1.0, (1, 3, 0): 1.0, (2, 3, 1): 1.0, (3, 4, 2): 1.0}
    )
    phi = 9 / 31 * np.array([1.0, 2.0, 3.0, -1.0, 4.0])
    return mu, ns.derivations.PreEinstein.from_diagonal(mu, phi)


def test_build_F():
    """Points of h3, n4 and h5 in the standard frame."""
    mu, pe = setup("h3")
    triples, F = ns.criterion.build_F(mu, pe)
    assert triples == [(0, 1, 2)]
    assert F.tolist() == [[1.0, 1.0, -1.0]]

    mu, pe = setup("h5")
    _, F = ns.criterion.build_F(mu, pe)
    assert F.tolist() == [[1.0, 1.0, 0.0, 0.0, -1.0], [0.0, 0.0, 1.0, 1.0, -1.0]]


def test_points_on_hyperplane():
    """Every point satisfies ⟨f, s⟩ = 1, so f − P₀ is orthogonal to s."""
    for name in ["n4", "L6", "h7", "free23"]:
        mu, pe = setup(name)
        _, F = ns.criterion.build_F(mu, pe)
        P0, _ = ns.criterion.project_origin(F, pe.s)
        assert F @ pe.s == pytest.approx(np.ones(len(F)))
        assert (F - P0) @ pe.s == pytest.approx(np.zeros(len(F)), abs=1e-12)


def test_project_origin():
    """P₀ = s/Σs² and a mismatch with the affine hull is reported."""
    mu, pe = setup("n4")
    _, F = ns.criterion.build_F(mu, pe)
    P0, norm2 = ns.criterion.project_origin(F, pe.s)
    assert P0.tolist() == pytest.approx([1.0, 0.5, 0.0, -0.5])
    assert norm2 == pytest.approx(1.5)
    with pytest.raises(ns.core.ProjectionMismatch):
        ns.criterion.project_origin(F[:1], pe.s)
    with pytest.raises(ns.core.EmptySupport):
        ns.criterion.project_origin(np.zeros((0, 4)), pe.s)


def test_interior_test():
    """Interior, exterior and infeasible placements of P₀."""
    hull = ns.criterion.interior_test(
        [[1.0, 1.0, -1.0, 0.0], [1.0, 0.0, 1.0, -1.0]], [1.0, 0.5, 0.0, -0.5]
    )
    assert hull.verdict == "interior"
    assert hull.margin == pytest.approx(0.5)
    assert hull.beta.tolist() == pytest.approx([0.5, 0.5])

    F = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, -1.0]]
    verdict, margin, beta = ns.criterion.interior_test(F, [1 / 3, 1 / 3, 1 / 3])
    assert verdict == "exterior"
    assert margin == pytest.approx(-1 / 3)
    assert beta.tolist() == pytest.approx([2 / 3, 2 / 3, -1 / 3])

    verdict, margin, beta = ns.criterion.interior_test([[1.0, 0.0], [0.0, 1.0]], [2.0, 0.0])
    assert verdict == "exterior"
    assert margin == -np.inf
    assert beta is None


@pytest.mark.parametrize(
    "name,alpha", [("h3", [1 / 3]), ("n4", [1 / 3, 1 / 3]), ("h5", [0.25, 0.25])]
)
def test_yyt_solve(name, alpha):
    """Positive solutions of Y Yᵗα = 𝟙 with and without the sum constraint."""
    mu, pe = setup(name)
    _, F = ns.criterion.build_F(mu, pe)
    _, norm2 = ns.criterion.project_origin(F, pe.s)
    assert ns.criterion.yyt_solve(F, norm2).tolist() == pytest.approx(alpha)
    assert ns.criterion.yyt_solve(F, norm2, impose_sum=False).tolist() == pytest.approx(alpha)
    assert sum(alpha) == pytest.approx(1 / norm2)


@pytest.mark.parametrize("name", ns.corpus.corpus_names())
def test_verdict_on_corpus(name):
    """Every built-in algebra passes the criterion in its working frame."""
    mu, pe = setup(name)
    report = ns.criterion.criterion_verdict(mu, pe)
    assert report.verdict == "interior"
    assert report.margin > 0
    assert min(report.alpha) > 0
    assert report.sum_constraint_redundant
    assert report.definitive == pe.simple_spectrum
    assert report.Y.shape == (len(report.F), mu.dim)


def test_verdict_n4_is_definitive():
    mu, pe = setup("n4")
    report = ns.criterion.criterion_verdict(mu, pe)
    assert report.definitive
    assert report.triples == [[1, 2, 3], [1, 3, 4]]
    assert report.beta == pytest.approx([0.5, 0.5])
    assert report.alpha == pytest.approx([1 / 3, 1 / 3])


@pytest.mark.parametrize("name", ["h5", "free23"])
def test_rotated_frames_stay_interior(name):
    """Both tests agree, and say interior, in 100 random φ-diagonalizing frames."""
    mu, pe = setup(name)
    rng = np.random.default_rng(29)
    for _ in range(100):
        q = ns.criterion._block_rotation(pe, rng)
        report = ns.criterion.criterion_verdict(mu, pe, q)
        assert report.verdict == "interior"
        assert report.alpha is not None
        assert not report.definitive


def test_frame_must_diagonalize_phi():
    mu, pe = setup("n4")
    c, s = np.cos(0.4), np.sin(0.4)
    q = np.eye(4)
    q[np.ix_([0, 1], [0, 1])] = [[c, -s], [s, c]]
    with pytest.raises(ns.core.FrameNotDiagonalizing):
        ns.criterion.criterion_verdict(mu, pe, q)
    with pytest.raises(ns.core.FrameNotDiagonalizing):
        ns.criterion.criterion_verdict(mu, pe, 2.0 * np.eye(4))


def test_exterior_fixture():
    """The hull test and the Y Yᵗ test both reject the fixture."""
    mu, pe = exterior_fixture()
    report = ns.criterion.criterion_verdict(mu, pe)
    assert report.verdict == "exterior"
    assert report.margin == pytest.approx(-1 / 3)
    assert report.alpha is None
    assert report.alpha_free is None

    l, tau = ns.criterion.separating_functional(report.F, pe.s)
    assert tau == pytest.approx(0.5)
    assert l.tolist() == pytest.approx([0.5, 0.5, -1.0])
    cert = ns.criterion.negative_weight_certificate(mu, pe, None, l)
    assert cert.nu == pytest.approx(-0.5 / np.linalg.norm(l))
    assert ns.check.verify_certificate(cert, mu, pe)


def test_basis_search_finds_obstruction():
    mu, pe = exterior_fixture()
    result = ns.criterion.basis_search(mu, pe, budget=4, seed=3)
    assert result.status == "no-soliton"
    assert result.best_margin <= -1 / 3 + 1e-9
    assert result.worst.verdict == "exterior"
    assert result.certificate.kind == "negative-weight"
    assert ns.check.verify_certificate(result.certificate, mu, pe)


def test_basis_search_simple_spectrum():
    mu, pe = setup("n4")
    result = ns.criterion.basis_search(mu, pe, budget=50)
    assert result.status == "definitive"
    assert result.samples == 1
    assert result.best_margin == pytest.approx(0.5)
    assert result.certificate is None


def test_simple_exterior_verdict():
    """One frame decides, P₀ has a single negative barycentric coordinate."""
    mu, pe = simple_exterior_fixture()
    assert pe.simple_spectrum
    report = ns.criterion.criterion_verdict(mu, pe)
    assert report.verdict == "exterior"
    assert report.definitive
    assert report.margin == pytest.approx(-5 / 74)
    assert sorted(report.beta) == pytest.approx([-5 / 74, 12 / 74, 33 / 74, 34 / 74])
    assert report.alpha is None


def test_exterior_certificate():
    mu, pe = simple_exterior_fixture()
    cert = ns.criterion.exterior_certificate(mu, pe, ns.criterion.criterion_verdict(mu, pe))
    assert cert.kind == "negative-weight"
    assert cert.nu < 0
    assert ns.check.verify_certificate(cert, mu, pe)

    n4, n4_pe = setup("n4")
    assert ns.criterion.exterior_certificate(
        n4, n4_pe, ns.criterion.criterion_verdict(n4, n4_pe)
    ) is None


def test_basis_search_simple_exterior():
    """A simple spectrum is decided by one frame and keeps its certificate."""
    mu, pe = simple_exterior_fixture()
    result = ns.criterion.basis_search(mu, pe, budget=50)
    assert result.status == "definitive"
    assert result.samples == 1
    assert result.best_margin == pytest.approx(-5 / 74)
    assert result.certificate.kind == "negative-weight"
    assert ns.check.verify_certificate(result.certificate, mu, pe)


def test_basis_search_independent_of_workers():
    """Sample i uses the generator seeded with (seed, i) whatever the worker count."""
    mu, pe = setup("h5")
    one = ns.criterion.basis_search(mu, pe, budget=12, seed=5, nprocs=1)
    three = ns.criterion.basis_search(mu, pe, budget=12, seed=5, nprocs=3)
    assert one.status == three.status == "inconclusive-positive"
    assert one.best_margin == three.best_margin
    assert one.worst.frame == three.worst.frame
    assert one.best_margin > 0
