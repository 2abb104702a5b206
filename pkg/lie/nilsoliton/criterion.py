"""
Module for the convex-geometric test of nilsoliton existence.

In an orthonormal frame B that diagonalizes the pre-Einstein derivation φ, each
structure constant μ^k_{ij} ≠ 0 contributes the point e_i + e_j − e_k to a finite set
F_B ⊂ ℝⁿ. All points lie on the hyperplane ⟨x, s⟩ = 1 with s = diag(I − φ), and the
projection of the origin onto their affine hull is

.. math::

    P_0 = \\frac{s}{\\sum_l s_l^2}.

A nilsoliton exists exactly when P_0 lies in the relative interior of Conv(F_B) for
every such frame, equivalently when Y Yᵗα = 𝟙 has a positive solution α, where Y has
the points of F_B as rows. When φ has simple spectrum the frame is unique up to order
and sign, so a single frame decides. Otherwise :obj:`basis_search` samples frames and
can only falsify, by finding a frame where P_0 falls outside and lifting the
separating functional to a destabilizing direction.

"""
__all__ = [
    "CriterionReport",
    "HullTest",
    "BasisSearchResult",
    "build_F",
    "project_origin",
    "interior_test",
    "yyt_solve",
    "separating_functional",
    "negative_weight_certificate",
    "exterior_certificate",
    "criterion_verdict",
    "basis_search",
]

import numpy as np
from pydantic import BaseModel
from typing import List, Literal, Optional, Tuple
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations
import lie.nilsoliton.stability as stability
import lie.nilsoliton.simplex as simplex
import lie.nilsoliton.internal as internal


class CriterionReport(BaseModel):
    """Outcome of the criterion in one frame.

    ``triples`` are one-based. ``alpha`` solves Y Yᵗα = 𝟙 with Σα = ‖P₀‖⁻² and
    ``alpha_free`` solves it without the sum constraint.
    """

    triples: List[List[int]]
    F: List[List[float]]
    P0: List[float]
    P0_norm2: float
    beta: Optional[List[float]] = None
    margin: float
    alpha: Optional[List[float]] = None
    alpha_free: Optional[List[float]] = None
    sum_constraint_redundant: bool
    verdict: Literal["interior", "boundary", "exterior"]
    definitive: bool
    frame: List[List[float]]

    @property
    def Y(self) -> np.ndarray:
        return np.array(self.F, dtype=float)


class HullTest:
    """Result of :obj:`interior_test`.

    Attributes:
        verdict: ``interior``, ``boundary`` or ``exterior``.
        margin: The optimal t*, the smallest barycentric weight.
        beta: The barycentric weights, or None when infeasible.
    """

    def __init__(self, verdict, margin, beta):
        self.verdict = verdict
        self.margin = float(margin)
        self.beta = beta

    def __iter__(self):
        return iter((self.verdict, self.margin, self.beta))


class BasisSearchResult(BaseModel):
    """Outcome of :obj:`basis_search`.

    ``status`` is ``no-soliton`` when a frame yields a verified obstruction,
    ``definitive`` when the spectrum of φ is simple and one frame decided (an
    exterior verdict then carries its negative-weight certificate), and
    ``inconclusive-positive`` when the budget ran out without a violating frame.
    """

    status: Literal["no-soliton", "definitive", "inconclusive-positive"]
    samples: int
    seed: int
    best_margin: float
    worst: CriterionReport
    certificate: Optional[stability.ObstructionCertificate] = None


def _check_frame(frame, pe: derivations.PreEinstein) -> Tuple[np.ndarray, np.ndarray]:
    """Orthogonal Q with QφQᵗ diagonal; returns s in the frame."""
    tol = pe.tol
    q = np.eye(pe.dim) if frame is None else np.asarray(frame, dtype=float)
    if q.shape != (pe.dim, pe.dim):
        raise core.DimensionMismatch(f"frame of shape {q.shape} for dim {pe.dim}")
    if not algebra.is_orthogonal(q, 1e-9):
        raise core.FrameNotDiagonalizing("frame is not orthogonal")
    turned = q @ pe.phi @ q.T
    d = np.diag(turned)
    if np.linalg.norm(turned - np.diag(d)) > tol.eps_eig * max(1.0, np.linalg.norm(d)):
        raise core.FrameNotDiagonalizing("frame does not diagonalize φ")
    return q, 1.0 - d


def build_F(
    mu: core.StructureTensor, pe: derivations.PreEinstein, frame=None
) -> Tuple[List[Tuple[int, int, int]], np.ndarray]:
    """Support triples of μ in the frame Q and the deduplicated points e_i + e_j − e_k.

    ``mu`` is in the working frame of ``pe`` and ``frame`` is an orthogonal matrix Q
    with QφQᵗ diagonal; the bracket is moved by ρ(Q). Triples are zero-based.

    Examples:

        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> pe = derivations.PreEinstein.from_diagonal(n4, [1 / 3, 2 / 3, 1.0, 4 / 3])
        >>> triples, F = build_F(n4, pe)
        >>> F.tolist()
        [[1.0, 1.0, -1.0, 0.0], [1.0, 0.0, 1.0, -1.0]]
    """
    q, _ = _check_frame(frame, pe)
    mu_b = mu if frame is None else algebra.rho_act(core.FrameChange(q, q.T), mu, pe.tol)
    n = mu.dim
    triples = mu_b.triples()
    points = {}
    for i, j, k in triples:
        f = np.zeros(n)
        f[i] += 1.0
        f[j] += 1.0
        f[k] -= 1.0
        points.setdefault(tuple(f.tolist()), f)
    return triples, np.array(list(points.values())).reshape(-1, n)


def project_origin(F, s, tol: float = 1e-10) -> Tuple[np.ndarray, float]:
    """Projection P₀ of the origin onto the affine hull of F, with ‖P₀‖².

    The least-squares projection is compared against s/Σs_l².

    Examples:

        >>> P0, norm2 = project_origin([[1.0, 1.0, -1.0]], [1 / 3, 1 / 3, -1 / 3])
        >>> np.round(P0, 12).tolist(), round(norm2, 12)
        ([1.0, 1.0, -1.0], 3.0)
    """
    F = np.asarray(F, dtype=float)
    s = np.asarray(s, dtype=float)
    if F.shape[0] == 0:
        raise core.EmptySupport("point set is empty")
    f0 = F[0]
    V = (F[1:] - f0).T
    if V.shape[1] > 0:
        ls = f0 - V @ (np.linalg.pinv(V) @ f0)
    else:
        ls = f0
    norm2 = float(np.sum(s**2))
    p0 = s / norm2
    gap = float(np.linalg.norm(ls - p0))
    if gap > tol * max(1.0, np.linalg.norm(p0)):
        raise core.ProjectionMismatch(
            f"affine projection differs from s/‖s‖² by {gap:.3e}, φ may be wrong"
        )
    return p0, 1.0 / norm2


def _verdict(margin: float, eps: float) -> str:
    if margin > eps:
        return "interior"
    if margin < -eps:
        return "exterior"
    return "boundary"


def interior_test(F, P0, tol=None) -> HullTest:
    """Is P₀ in the relative interior of Conv(F)?

    Solves max t subject to Σβ_p f_p = P₀, Σβ_p = 1 and β_p ≥ t.

    Examples:

        >>> interior_test([[1.0, 1.0, -1.0, 0.0], [1.0, 0.0, 1.0, -1.0]],
        ...               [1.0, 0.5, 0.0, -0.5]).verdict
        'interior'
        >>> verdict, margin, beta = interior_test([[1.0, 0.0], [0.0, 1.0]], [1.0, 0.0])
        >>> verdict, abs(margin) < 1e-12
        ('boundary', True)
    """
    tol = algebra._tolerances(tol)
    F = np.asarray(F, dtype=float)
    P0 = np.asarray(P0, dtype=float)
    m = F.shape[0]
    # Variables (β_1..β_m, t), all free.
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_eq = np.zeros((F.shape[1] + 1, m + 1))
    A_eq[:-1, :m] = F.T
    A_eq[-1, :m] = 1.0
    b_eq = np.concatenate([P0, [1.0]])
    A_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    r = simplex.solve_lp(c, A_eq, b_eq, A_ub, np.zeros(m), free=range(m + 1))
    if r.status == "infeasible":
        return HullTest("exterior", -np.inf, None)
    if r.status != "optimal":
        raise core.LPNumericalFailure(f"interior program is {r.status}")
    margin = float(r.x[-1])
    return HullTest(_verdict(margin, tol.eps_lp), margin, r.x[:m])


def _yyt_program(Y, norm2: float, impose_sum: bool) -> Tuple[Optional[np.ndarray], float]:
    Y = np.asarray(Y, dtype=float)
    m = Y.shape[0]
    G = Y @ Y.T
    c = np.zeros(m + 1)
    c[-1] = -1.0
    rows = [np.hstack([G, np.zeros((m, 1))])]
    rhs = [np.ones(m)]
    if impose_sum:
        rows.append(np.concatenate([np.ones(m), [0.0]])[None, :])
        rhs.append([1.0 / norm2])
    A_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    r = simplex.solve_lp(
        c, np.vstack(rows), np.concatenate(rhs), A_ub, np.zeros(m), free=range(m + 1)
    )
    if r.status == "infeasible":
        return None, -np.inf
    if r.status != "optimal":
        raise core.LPNumericalFailure(f"Y Yᵗ program is {r.status}")
    return r.x[:m], float(r.x[-1])


def yyt_solve(Y, P0_norm2: float, impose_sum: bool = True, tol=None) -> Optional[np.ndarray]:
    """Positive solution α of Y Yᵗα = 𝟙, with Σα = 1/‖P₀‖² when ``impose_sum``.

    Returns None when no solution has all α_p > ε_lp.

    Examples:

        >>> np.round(yyt_solve([[1, 1, 0, 0, -1], [0, 0, 1, 1, -1]], 2.0), 12).tolist()
        [0.25, 0.25]
    """
    tol = algebra._tolerances(tol)
    alpha, margin = _yyt_program(Y, P0_norm2, impose_sum)
    return alpha if margin > tol.eps_lp else None


def separating_functional(F, s, tol=None) -> Tuple[np.ndarray, float]:
    """A functional l ⟂ s maximizing min_p ⟨l, f_p⟩ over the box |l_i| ≤ 1.

    A positive optimum τ* means diag(l) lies in 𝔭 and has weight −min⟨l, f_p⟩ ≤ −τ*.

    Examples:

        >>> l, tau = separating_functional([[0, 1, 0], [1, 0, 0], [1, 1, -1]], [1, 1, 1])
        >>> round(tau, 12), np.round(l, 12).tolist()
        (0.5, [0.5, 0.5, -1.0])
    """
    F = np.asarray(F, dtype=float)
    s = np.asarray(s, dtype=float)
    m, n = F.shape
    # Variables (l_1..l_n, τ), all free.
    c = np.zeros(n + 1)
    c[-1] = -1.0
    A_eq = np.concatenate([s, [0.0]])[None, :]
    A_ub = np.vstack(
        [
            np.hstack([-F, np.ones((m, 1))]),
            np.hstack([np.eye(n), np.zeros((n, 1))]),
            np.hstack([-np.eye(n), np.zeros((n, 1))]),
        ]
    )
    b_ub = np.concatenate([np.zeros(m), np.ones(2 * n)])
    r = simplex.solve_lp(c, A_eq, [0.0], A_ub, b_ub, free=range(n + 1))
    if r.status != "optimal":
        raise core.LPNumericalFailure(f"separation program is {r.status}")
    return r.x[:n], float(r.x[-1])


def negative_weight_certificate(
    mu: core.StructureTensor, pe: derivations.PreEinstein, frame, l
) -> Optional[stability.ObstructionCertificate]:
    """Lift the functional l in frame Q to λ = Qᵗ diag(l) Q and certify it.

    Returns None unless the weight recomputed by :obj:`lie.nilsoliton.stability.hm_weight`
    is below −ε_cert and λ is not a derivation.
    """
    tol = pe.tol
    q = np.eye(pe.dim) if frame is None else np.asarray(frame, dtype=float)
    lam = q.T @ np.diag(np.asarray(l, dtype=float)) @ q
    size = np.linalg.norm(lam)
    if size <= tol.eps_cert:
        return None
    lam = 0.5 * (lam + lam.T) / size
    weight = stability.hm_weight(lam, mu, tol)
    if weight.nu >= -tol.eps_cert or derivations.is_derivation(lam, mu, tol):
        internal.logger.warning("Separating functional does not destabilize", nu=weight.nu)
        return None
    return stability._certificate("negative-weight", lam, weight, pe)


def exterior_certificate(
    mu: core.StructureTensor, pe: derivations.PreEinstein, report: CriterionReport
) -> Optional[stability.ObstructionCertificate]:
    """The negative-weight certificate behind an exterior verdict, or None.

    The separating functional is computed in the frame of ``report`` and lifted with
    :obj:`negative_weight_certificate`.

    Examples:

        >>> mu = core.StructureTensor(3, {(0, 1, 0): 1.0, (0, 1, 1): 1.0, (0, 1, 2): 1.0})
        >>> pe = derivations.PreEinstein.from_diagonal(mu, [0.0, 0.0, 0.0])
        >>> exterior_certificate(mu, pe, criterion_verdict(mu, pe)).kind
        'negative-weight'
    """
    if report.verdict != "exterior":
        return None
    tol = pe.tol
    q = np.array(report.frame, dtype=float)
    l, tau = separating_functional(report.F, 1.0 - np.diag(q @ pe.phi @ q.T), tol)
    if tau <= tol.eps_lp:
        return None
    return negative_weight_certificate(mu, pe, q, l)


def criterion_verdict(
    mu: core.StructureTensor, pe: derivations.PreEinstein, frame=None
) -> CriterionReport:
    """Run both forms of the criterion in one frame and cross-check them.

    ``definitive`` is set when φ has simple spectrum.

    Examples:

        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> pe = derivations.PreEinstein.from_diagonal(n4, [1 / 3, 2 / 3, 1.0, 4 / 3])
        >>> report = criterion_verdict(n4, pe)
        >>> report.verdict, report.definitive, np.round(report.alpha, 12).tolist()
        ('interior', True, [0.333333333333, 0.333333333333])
    """
    tol = pe.tol
    q, s = _check_frame(frame, pe)
    triples, F = build_F(mu, pe, frame)
    P0, norm2 = project_origin(F, s)
    hull = interior_test(F, P0, tol)
    alpha, margin_y = _yyt_program(F, norm2, True)
    alpha_free, margin_f = _yyt_program(F, norm2, False)

    if (hull.verdict == "interior" and margin_y < -tol.eps_lp) or (
        hull.verdict == "exterior" and margin_y > tol.eps_lp
    ):
        raise core.TestsDisagree(
            f"hull margin {hull.margin:.3e} and Y Yᵗ margin {margin_y:.3e} disagree"
        )
    keep = margin_y > tol.eps_lp
    keep_free = margin_f > tol.eps_lp
    redundant = keep == keep_free and (
        not keep or bool(np.allclose(alpha, alpha_free, atol=1e-8))
    )
    return CriterionReport(
        triples=[[i + 1, j + 1, k + 1] for i, j, k in triples],
        F=F.tolist(),
        P0=P0.tolist(),
        P0_norm2=norm2,
        beta=None if hull.beta is None else hull.beta.tolist(),
        margin=hull.margin,
        alpha=alpha.tolist() if keep else None,
        alpha_free=alpha_free.tolist() if keep_free else None,
        sum_constraint_redundant=redundant,
        verdict=hull.verdict,
        definitive=pe.simple_spectrum,
        frame=q.tolist(),
    )


def _block_rotation(pe: derivations.PreEinstein, rng) -> np.ndarray:
    """Haar-distributed orthogonal blocks on the φ-eigenspaces."""
    n = pe.dim
    q = np.eye(n)
    for g in pe.groups:
        if len(g) < 2:
            continue
        z = rng.normal(size=(len(g), len(g)))
        o, r = np.linalg.qr(z)
        q[np.ix_(g, g)] = o * np.sign(np.diag(r))
    return q


def _givens(n, p, r, theta) -> np.ndarray:
    G = np.eye(n)
    G[p, p] = G[r, r] = np.cos(theta)
    G[p, r] = -np.sin(theta)
    G[r, p] = np.sin(theta)
    return G


def _margin(mu, pe, q) -> float:
    _, F = build_F(mu, pe, q)
    P0, _ = project_origin(F, pe.s)
    return interior_test(F, P0, pe.tol).margin


def _refine(mu, pe, q, margin, sweeps: int) -> Tuple[np.ndarray, float]:
    """Coordinate descent of the margin over Givens angles inside eigenspaces."""
    angles = np.pi * np.arange(1, 8) / 8
    for _ in range(sweeps):
        improved = False
        for g in pe.groups:
            for a, p in enumerate(g):
                for r in g[a + 1 :]:
                    for theta in angles:
                        trial = _givens(pe.dim, p, r, theta) @ q
                        value = _margin(mu, pe, trial)
                        if value < margin - pe.tol.eps_lp:
                            q, margin, improved = trial, value, True
        if not improved:
            break
    return q, margin


def basis_search(
    mu: core.StructureTensor,
    pe: derivations.PreEinstein,
    budget: int = 64,
    seed: int = 0,
    nprocs: int = 1,
    progress_bar: bool = False,
    sweeps: int = 2,
) -> BasisSearchResult:
    """Look for a φ-diagonalizing frame in which P₀ leaves Conv(F).

    Sample 0 is the working frame itself and sample i > 0 is a block rotation drawn
    from a generator seeded with (seed, i), so the outcome does not depend on
    ``nprocs``. The frame with the smallest margin is refined by Givens rotations.
    A violating frame is turned into a negative-weight certificate through the
    separating functional; without one the result is only inconclusive-positive.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> pe = derivations.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])
        >>> result = basis_search(h3, pe, budget=8)
        >>> result.status, round(result.best_margin, 12)
        ('inconclusive-positive', 1.0)
    """
    if pe.simple_spectrum:
        report = criterion_verdict(mu, pe)
        return BasisSearchResult(
            status="definitive",
            samples=1,
            seed=seed,
            best_margin=report.margin,
            worst=report,
            certificate=exterior_certificate(mu, pe, report),
        )

    def sample(index):
        if index == 0:
            q = np.eye(pe.dim)
        else:
            q = _block_rotation(pe, np.random.default_rng([seed, index]))
        return _margin(mu, pe, q), q

    budget = max(1, int(budget))
    results = core.WorkerPool(nprocs, progress_bar).map(sample, list(range(budget)))
    best = 0
    for index, (margin, _) in enumerate(results):
        if margin < results[best][0]:
            best = index
    margin, q = results[best]
    q, margin = _refine(mu, pe, q, margin, sweeps)
    worst = criterion_verdict(mu, pe, q)
    internal.logger.info(
        "Searched diagonalizing frames", samples=budget, best_margin=margin, seed=seed
    )

    cert = exterior_certificate(mu, pe, worst)
    return BasisSearchResult(
        status="no-soliton" if cert is not None else "inconclusive-positive",
        samples=budget,
        seed=seed,
        best_margin=margin,
        worst=worst,
        certificate=cert,
    )
