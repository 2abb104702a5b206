"""
Module for the relative stability data of a bracket: the scaling direction
𝒮 = ℝ(I − φ), the slice 𝔭 of symmetric endomorphisms commuting with φ and orthogonal
to 𝒮, Hilbert-Mumford weights, and the explicit obstructions to a nilsoliton.

All inputs are taken in the working frame of a
:obj:`lie.nilsoliton.derivations.PreEinstein`, where φ is diagonal.

The Hilbert-Mumford weight of a symmetric λ is

.. math::

    \\nu(\\lambda;\\mu) = -\\min\\{\\lambda_i + \\lambda_j - \\lambda_k : \\mu^k_{ij} \\neq 0\\}

with the λ_i the eigenvalues of λ and μ written in an eigenframe of λ. The minimum is
taken over eigenvalue clusters so it does not depend on the choice of eigenframe.

"""
__all__ = [
    "SDirection",
    "PBasis",
    "HMWeight",
    "ObstructionCertificate",
    "s_direction",
    "p_basis",
    "hm_weight",
    "support_mask",
    "slice_violation",
    "scaling_obstruction",
    "zero_phi_obstruction",
    "tt_condition3",
]

import numpy as np
import scipy as sp
from pydantic import BaseModel, ConfigDict, Field
from typing import List, Literal, Optional, Tuple
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations
import lie.nilsoliton.internal as internal


class SDirection:
    """The scaling direction S = I − φ.

    >>> import lie.nilsoliton.derivations as d
    >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
    >>> round(s_direction(d.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])).norm2, 12)
    0.333333333333
    """

    def __init__(self, s: np.ndarray):
        self.s = np.asarray(s, dtype=float)
        self.S = np.diag(self.s)
        self.norm2 = float(np.sum(self.s**2))


def s_direction(pe: derivations.PreEinstein) -> SDirection:
    return SDirection(pe.s)


class PBasis:
    """Orthonormal basis of 𝔭 in the working frame.

    Elements are the symmetrized units (E_pq + E_qp)/√2 inside each φ-eigenspace,
    followed by an orthonormal basis of the diagonal matrices orthogonal to I − φ.

    Attributes:
        elements: Array (count, n, n).
        labels: One label per element, ``sym(p,q)`` (1-based) or ``diag(k)``.
        phi: The diagonal of φ.
        s: The diagonal of I − φ.
    """

    def __init__(self, elements: np.ndarray, labels: List[str], phi, s):
        self.elements = elements
        self.labels = labels
        self.phi = np.asarray(phi, dtype=float)
        self.s = np.asarray(s, dtype=float)

    @property
    def count(self) -> int:
        return int(self.elements.shape[0])

    @property
    def dim(self) -> int:
        return int(self.phi.shape[0])

    def __len__(self):
        return self.count

    def matrix(self, coords) -> np.ndarray:
        """The endomorphism Σ_a A_a λ_a."""
        coords = np.asarray(coords, dtype=float)
        if coords.shape != (self.count,):
            raise core.DimensionMismatch(
                f"expected {self.count} 𝔭-coordinates, got {coords.shape}"
            )
        return np.einsum("a,aij->ij", coords, self.elements)

    def coordinates(self, lam) -> np.ndarray:
        """Orthogonal projection of λ onto 𝔭 in coordinates."""
        return np.einsum("aij,ij->a", self.elements, np.asarray(lam, dtype=float))

    def violation(self, lam) -> float:
        """See :obj:`slice_violation`."""
        return _slice_defect(lam, self.phi, self.s)


def p_basis(pe: derivations.PreEinstein) -> PBasis:
    """Build the orthonormal basis of 𝔭.

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> h5 = core.StructureTensor(5, {(0, 1, 4): 1.0, (2, 3, 4): 1.0})
        >>> p_basis(d.PreEinstein.from_diagonal(h5, [0.75] * 4 + [1.5])).count
        10
    """
    n = pe.dim
    if pe.is_zero and n == 1:
        raise core.DegeneratePhi("𝔭 is empty for φ = 0 in dimension 1")
    s = pe.s
    if np.sum(s**2) <= pe.tol.eps_eig:
        raise core.DegeneratePhi("I − φ vanishes")

    elements, labels = [], []
    for group in pe.groups:
        for a, p in enumerate(group):
            for q in group[a + 1 :]:
                e = np.zeros((n, n))
                e[p, q] = e[q, p] = 1.0 / np.sqrt(2.0)
                elements.append(e)
                labels.append(f"sym({p + 1},{q + 1})")

    null = sp.linalg.null_space(s[None, :])
    for k in range(null.shape[1]):
        v = null[:, k]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        elements.append(np.diag(v))
        labels.append(f"diag({k + 1})")

    return PBasis(np.array(elements).reshape(-1, n, n), labels, pe.diagonal, s)


def slice_violation(lam, pe: derivations.PreEinstein) -> float:
    """Largest failure of the three 𝔭 predicates relative to ‖λ‖.

    The predicates are symmetry, commuting with φ and orthogonality to I − φ.

    >>> import lie.nilsoliton.derivations as d
    >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
    >>> pe = d.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])
    >>> slice_violation(np.diag([1.0, -1.0, 0.0]), pe) < 1e-12
    True
    >>> slice_violation(np.eye(3), pe) > 0.1
    True
    """
    return _slice_defect(lam, pe.diagonal, pe.s)


def _slice_defect(lam, diagonal, s) -> float:
    lam = np.asarray(lam, dtype=float)
    size = max(np.linalg.norm(lam), 1e-300)
    phi = np.diag(diagonal)
    return float(
        max(
            np.linalg.norm(lam - lam.T),
            np.linalg.norm(lam @ phi - phi @ lam),
            abs(np.dot(np.diag(lam), s)) / np.sqrt(np.sum(s**2)),
        )
        / size
    )


class HMWeight:
    """A Hilbert-Mumford weight with the data needed to check it by hand.

    Attributes:
        nu: The weight ν(λ;μ).
        opposite: The weight ν(−λ;μ).
        triple: Zero-based (i, j, k) attaining the minimum, in the eigenframe of λ.
        eigenvalues: Eigenvalues of λ in eigenframe order.
        frame: Orthogonal matrix whose columns are the eigenvectors of λ.
    """

    def __init__(self, nu, opposite, triple, eigenvalues, frame):
        self.nu = float(nu)
        self.opposite = float(opposite)
        self.triple = triple
        self.eigenvalues = eigenvalues
        self.frame = frame

    def __iter__(self):
        return iter((self.nu, self.triple))


def _eigenframe(lam: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if np.linalg.norm(lam - np.diag(np.diag(lam))) <= 1e-14 * max(1.0, np.linalg.norm(lam)):
        return np.diag(lam).copy(), np.eye(lam.shape[0])
    return sp.linalg.eigh(0.5 * (lam + lam.T))


def _cluster_support(c: np.ndarray, w: np.ndarray, tol):
    """Support of a bracket by blocks of clustered eigenvalues.

    Returns the clusters of ``w``, the cluster label of each index and a boolean
    array over cluster triples, true where the block norm exceeds ``eps_mu`` of
    the largest block.
    """
    groups = derivations._cluster(w, tol.eps_eig)
    label = np.empty(len(w), dtype=int)
    for a, g in enumerate(groups):
        label[g] = a
    r = len(groups)
    blocks = np.zeros((r, r, r))
    np.add.at(
        blocks, (label[:, None, None], label[None, :, None], label[None, None, :]), c * c
    )
    blocks = np.sqrt(blocks)
    return groups, label, blocks > tol.eps_mu * blocks.max()


def support_mask(c: np.ndarray, w: np.ndarray, tol=None) -> np.ndarray:
    """Entries of c, in an eigenframe with eigenvalues w, that belong to its support.

    An entry counts when it is nonzero and its cluster block passes
    :obj:`_cluster_support`. Rounding left behind by a rotation into the eigenframe
    is dropped this way.

    >>> c = np.zeros((3, 3, 3)); c[0, 1, 2], c[1, 0, 2] = 1.0, -1.0; c[0, 0, 1] = 1e-15
    >>> int(support_mask(c, np.array([1.0, 2.0, 3.0])).sum())
    2
    """
    tol = algebra._tolerances(tol)
    _, label, support = _cluster_support(c, w, tol)
    return support[label[:, None, None], label[None, :, None], label[None, None, :]] & (c != 0.0)


def hm_weight(lam, mu: core.StructureTensor, tol=None) -> HMWeight:
    """Hilbert-Mumford weight of a symmetric λ on μ.

    The bracket is moved to an orthonormal eigenframe of λ. Eigenvalues are clustered
    with ``eps_eig`` and the support is read from the norms of the cluster blocks, so
    rotations inside an eigenspace do not change the answer.

    Examples:

        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> w = hm_weight(np.diag([0.0, 0.0, 1.0, 0.0]), n4)
        >>> w.nu, w.triple, w.opposite
        (1.0, (0, 1, 2), 1.0)

        >>> hm_weight(np.array([[0.0, 1.0], [0.0, 0.0]]), core.StructureTensor(2, {(0, 1, 1): 1.0}))
        Traceback (most recent call last):
        ...
        AsymmetricInput: λ is not symmetric
    """
    tol = algebra._tolerances(tol)
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (mu.dim, mu.dim):
        raise core.DimensionMismatch(f"λ of shape {lam.shape} for dim {mu.dim}")
    if not algebra.is_symmetric(lam, 1e-10):
        raise core.AsymmetricInput("λ is not symmetric")
    if mu.is_zero():
        raise core.EmptySupport("bracket has no support")

    w, q = _eigenframe(lam)
    c = np.einsum("ai,bj,abc,ck->ijk", q, q, mu.dense(), q, optimize=True)

    groups, _, support = _cluster_support(c, w, tol)
    values = np.array([np.mean(w[g]) for g in groups])
    if not np.any(support):
        raise core.EmptySupport("bracket has no support")

    levels = values[:, None, None] + values[None, :, None] - values[None, None, :]
    lo = np.where(support, levels, np.inf)
    a, b, k = np.unravel_index(np.argmin(lo), lo.shape)
    nu = -float(lo[a, b, k]) + 0.0
    opposite = float(np.max(np.where(support, levels, -np.inf)))

    sub = np.abs(c[np.ix_(groups[a], groups[b], groups[k])])
    ia, ib, ik = np.unravel_index(np.argmax(sub), sub.shape)
    i, j, kk = int(groups[a][ia]), int(groups[b][ib]), int(groups[k][ik])
    triple = (min(i, j), max(i, j), kk)
    return HMWeight(nu, opposite, triple, w, q)


class ObstructionCertificate(BaseModel):
    """Witness that no nilsoliton exists.

    ``lambda`` is the destabilizing direction and ``frame`` the orthogonal matrix of
    its eigenvectors, both in the working frame ``working_frame`` of the
    pre-Einstein derivation. ``triple`` is one-based in the eigenframe.
    """

    model_config = ConfigDict(populate_by_name=True)

    kind: Literal["negative-weight", "scaling", "zero-phi"]
    lam: List[List[float]] = Field(alias="lambda")
    nu: float
    frame: List[List[float]]
    working_frame: List[List[float]]
    c: Optional[float] = None
    triple: Optional[List[int]] = None

    def matrix(self) -> np.ndarray:
        return np.array(self.lam, dtype=float)


def _certificate(kind, lam, weight: HMWeight, pe, c=None) -> ObstructionCertificate:
    return ObstructionCertificate(
        kind=kind,
        lam=np.asarray(lam).tolist(),
        nu=weight.nu,
        frame=np.asarray(weight.frame).tolist(),
        working_frame=pe.frame.g.tolist(),
        c=c,
        triple=[x + 1 for x in weight.triple],
    )


def _flat(tensor: np.ndarray) -> np.ndarray:
    iu, ju = np.triu_indices(tensor.shape[0], 1)
    return tensor[iu, ju, :].reshape(-1)


def _action_columns(pb: PBasis, mu) -> np.ndarray:
    """Columns vec ρ_*(λ_a)·μ over the i < j entries."""
    cols = [_flat(algebra.rho_star_act(e, mu)) for e in pb.elements]
    if not cols:
        return np.zeros((len(_flat(algebra._dense(mu))), 0))
    return np.column_stack(cols)


def scaling_obstruction(
    mu: core.StructureTensor, pe: derivations.PreEinstein, pb: Optional[PBasis] = None
) -> Optional[ObstructionCertificate]:
    """Search 𝔭 for λ with ρ_*(λ)·μ = cμ and c ≠ 0.

    ``mu`` must be in the working frame of ``pe``. The pair (λ, c) spans the null space
    of [ρ_*(λ_a)·μ | −μ]. The returned λ has unit norm and c < 0, so ν(λ;μ) = c.

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> scaling_obstruction(h3, d.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])) is None
        True
    """
    tol = pe.tol
    pb = p_basis(pe) if pb is None else pb
    m = np.hstack([_action_columns(pb, mu), -_flat(mu.dense())[:, None]])
    null = sp.linalg.null_space(m, rcond=tol.eps_rank)
    if null.shape[1] == 0:
        return None
    w = null[-1, :]
    if np.linalg.norm(w) <= tol.eps_cert:
        return None
    v = null @ (w / np.linalg.norm(w))
    x, c = v[:-1], v[-1]
    size = np.linalg.norm(x)
    if size <= tol.eps_cert:
        return None
    x, c = x / size, c / size
    if abs(c) <= tol.eps_cert:
        return None
    if c > 0:
        x, c = -x, -c
    lam = pb.matrix(x)
    weight = hm_weight(lam, mu, tol)
    internal.logger.info("Found scaling obstruction", c=c, nu=weight.nu)
    return _certificate("scaling", lam, weight, pe, c=float(c))


def zero_phi_obstruction(
    mu: core.StructureTensor, pe: derivations.PreEinstein
) -> ObstructionCertificate:
    """The obstruction λ = diag(1, ..., 1, −n+1) for φ = 0.

    The last vector of the frame is central, taken from the last nonzero term of the
    lower central series, so every support triple has weight at most −1.

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> round(zero_phi_obstruction(h3, d.PreEinstein.from_diagonal(h3, [0.0] * 3)).nu, 12)
        -4.0
        >>> zero_phi_obstruction(h3, d.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3]))
        Traceback (most recent call last):
        ...
        PhiNonzero: pre-Einstein derivation is not zero
    """
    if not pe.is_zero:
        raise core.PhiNonzero("pre-Einstein derivation is not zero")
    n = mu.dim
    e = algebra.lower_central_series(mu, pe.tol).central_vector
    q = np.column_stack([sp.linalg.null_space(e[None, :]), e])
    d = np.ones(n)
    d[-1] = 1.0 - n
    lam = q @ np.diag(d) @ q.T
    lam = 0.5 * (lam + lam.T)
    weight = hm_weight(lam, mu, pe.tol)
    if weight.nu >= -pe.tol.eps_cert or derivations.is_derivation(lam, mu, pe.tol):
        raise core.NilsolitonError(
            f"central construction failed to destabilize, ν = {weight.nu:.6g}"
        )
    return _certificate("zero-phi", lam, weight, pe)


def tt_condition3(
    mu: core.StructureTensor, pe: derivations.PreEinstein, g, pb: Optional[PBasis] = None
) -> Optional[np.ndarray]:
    """Find a unit λ ∈ 𝔭 ∩ Der(μ) that is not a derivation of ρ(g)·μ.

    Returns None when 𝔭 ∩ Der(μ) ⊂ Der(ρ(g)·μ).

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> pe = d.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])
        >>> tt_condition3(h3, pe, np.eye(3)) is None
        True
    """
    tol = pe.tol
    if not isinstance(g, core.FrameChange):
        g = core.FrameChange(g, eps_inv=tol.eps_inv)
    phi = pe.phi
    if np.linalg.norm(g.g @ phi - phi @ g.g) > tol.eps_eig * max(1.0, np.linalg.norm(g.g)):
        raise core.FrameNotCommuting("frame change does not commute with φ")
    pb = p_basis(pe) if pb is None else pb

    inside = sp.linalg.null_space(_action_columns(pb, mu), rcond=tol.eps_rank)
    if inside.shape[1] == 0:
        return None
    mu_g = algebra.rho_act(g, mu, tol)
    moved = np.array(
        [_flat(algebra.rho_star_act(pb.matrix(col), mu_g)) for col in inside.T]
    ).T
    _, sv, vt = sp.linalg.svd(moved, full_matrices=False)
    if sv[0] <= tol.eps_der * mu_g.norm():
        return None
    lam = pb.matrix(inside @ vt[0])
    lam = lam / np.linalg.norm(lam)
    internal.logger.debug("Derivation not preserved by frame change", defect=float(sv[0]))
    return lam
