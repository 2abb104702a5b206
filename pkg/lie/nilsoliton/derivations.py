"""
Module for the derivation algebra Der(μ) and the pre-Einstein derivation.

The pre-Einstein derivation φ is the semisimple, real-spectrum derivation with

.. math::

    \\mathrm{tr}(\\varphi\\psi) = \\mathrm{tr}(\\psi) \\quad \\forall \\psi \\in \\mathrm{Der}(\\mu).

:obj:`pre_einstein` solves that trace system on a basis of Der(μ) and then moves to a
working frame in which φ is diagonal and the frame is orthonormal. Every module
downstream works with the pair (μ', diagonal φ) held by :obj:`PreEinstein`.

"""
__all__ = [
    "DerivationSpace",
    "PreEinstein",
    "derivation_space",
    "is_derivation",
    "pre_einstein",
    "compatible_frame",
]

import numpy as np
import scipy as sp
from typing import List, Optional, Tuple
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.internal as internal


class DerivationSpace:
    """A basis of Der(μ), orthonormal for the Hilbert-Schmidt product.

    Attributes:
        basis: Array (d, n, n) of derivations.
        residual: Largest ‖ρ_*(ψ)·μ‖ over the basis.
        singular_values: Spectrum of the constraint map, for diagnostics.
    """

    def __init__(self, basis: np.ndarray, residual: float, singular_values: np.ndarray):
        self.basis = basis
        self.residual = residual
        self.singular_values = singular_values

    @property
    def dim(self) -> int:
        return int(self.basis.shape[0])

    def __len__(self):
        return self.dim

    def contains(self, lam, tol: float = 1e-9) -> bool:
        """True if λ lies in the span of the basis to within tol·‖λ‖."""
        lam = np.asarray(lam, dtype=float)
        flat = self.basis.reshape(self.dim, -1)
        v = lam.reshape(-1)
        gap = np.linalg.norm(v - flat.T @ (flat @ v))
        return bool(gap <= tol * max(np.linalg.norm(v), 1e-300))


def _constraint_matrix(mu: core.StructureTensor) -> np.ndarray:
    """Matrix of vec(D) ↦ ρ_*(D)·μ restricted to the pairs i < j, shape (P·n, n²)."""
    n = mu.dim
    c = mu.dense()
    iu, ju = np.triu_indices(n, 1)
    p = np.arange(len(iu))
    # L[p, k, a, b] is the coefficient of D[a, b] in (ρ_*(D)·μ)[i_p, j_p, k]
    L = np.einsum("ka,pb->pkab", np.eye(n), c[iu, ju, :])
    L[p, :, :, iu] -= c[:, ju, :].transpose(1, 2, 0)
    L[p, :, :, ju] -= c[iu].transpose(0, 2, 1)
    return L.reshape(len(iu) * n, n * n)


def derivation_space(mu: core.StructureTensor, tol=None) -> DerivationSpace:
    """Null space of D ↦ ρ_*(D)·μ by singular value decomposition.

    Singular values below ``eps_rank`` times the largest are zero. A singular value
    within a factor of 10 of that cutoff makes the dimension ambiguous.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> derivation_space(h3).dim
        6
        >>> h5 = core.StructureTensor(5, {(0, 1, 4): 1.0, (2, 3, 4): 1.0})
        >>> derivation_space(h5).dim
        15
    """
    tol = algebra._tolerances(tol)
    if mu.is_zero():
        raise core.Commutative("bracket is zero, the algebra is commutative")
    n = mu.dim
    m = _constraint_matrix(mu)
    _, sv, vt = sp.linalg.svd(m, full_matrices=True)
    cutoff = tol.eps_rank * sv[0]
    near = (sv > cutoff / 10) & (sv < cutoff * 10)
    rank = int(np.sum(sv > cutoff))
    if np.any(near):
        low = int(np.sum(sv >= cutoff * 10))
        high = int(np.sum(sv > cutoff / 10))
        raise core.RankAmbiguity(
            "derivation space dimension is either {} or {}".format(
                n * n - high, n * n - low
            ),
            candidates=[n * n - high, n * n - low],
        )
    basis = vt[rank:].reshape(-1, n, n)
    residual = 0.0
    for psi in basis:
        r = algebra.rho_star_act(psi, mu)
        residual = max(residual, np.sqrt(algebra.tensor_inner(r, r)))
    internal.logger.debug("Computed derivation space", dim=len(basis), residual=residual)
    return DerivationSpace(basis, float(residual), sv)


def is_derivation(lam, mu: core.StructureTensor, tol=None) -> bool:
    """True if ‖ρ_*(λ)·μ‖ ≤ ε_der·‖λ‖·‖μ‖.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> is_derivation(np.diag([1.0, 1.0, 2.0]), h3)
        True
        >>> is_derivation(np.eye(3), h3)
        False
    """
    tol = algebra._tolerances(tol)
    lam = np.asarray(lam, dtype=float)
    r = algebra.rho_star_act(lam, mu)
    return bool(
        np.sqrt(algebra.tensor_inner(r, r))
        <= tol.eps_der * np.linalg.norm(lam) * mu.norm()
    )


class PreEinstein:
    """The pre-Einstein derivation in its working frame.

    In the working frame φ is diagonal and the frame is orthonormal, so φ is symmetric.

    Attributes:
        mu: The bracket μ' = ρ(g0)·μ in the working frame.
        frame: The frame change g0 from the input frame to the working frame.
        diagonal: The entries of φ in working-frame order.
        groups: Index arrays of the φ-eigenspaces, sorted by eigenvalue.
        tol: The tolerances used to build it.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> pe = PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])
        >>> pe.multiplicities
        [2, 1]
        >>> pe.simple_spectrum
        False
        >>> np.round(pe.s, 12).tolist()
        [0.333333333333, 0.333333333333, -0.333333333333]
    """

    def __init__(
        self,
        mu: core.StructureTensor,
        diagonal,
        frame: Optional[core.FrameChange] = None,
        tol=None,
    ):
        self.tol = algebra._tolerances(tol)
        self.mu = mu
        self.frame = core.FrameChange.identity(mu.dim) if frame is None else frame
        d = np.array(diagonal, dtype=float)
        if d.shape != (mu.dim,):
            raise core.DimensionMismatch(f"φ diagonal must have length {mu.dim}")
        self.groups = _cluster(d, self.tol.eps_eig)
        for g in self.groups:
            d[g] = np.mean(d[g])
        d.setflags(write=False)
        self.diagonal = d
        self._derivations = None

    @classmethod
    def from_diagonal(cls, mu: core.StructureTensor, diagonal, tol=None):
        """Use a prescribed diagonal φ in the frame of μ, without solving for it.

        Intended for synthetic fixtures such as φ = 0.
        """
        return cls(mu, diagonal, tol=tol)

    @property
    def dim(self) -> int:
        return self.mu.dim

    @property
    def phi(self) -> np.ndarray:
        return np.diag(self.diagonal)

    @property
    def s(self) -> np.ndarray:
        """The vector diag(I − φ)."""
        return 1.0 - self.diagonal

    @property
    def eigenvalues(self) -> List[float]:
        return [float(self.diagonal[g[0]]) for g in self.groups]

    @property
    def multiplicities(self) -> List[int]:
        return [len(g) for g in self.groups]

    @property
    def simple_spectrum(self) -> bool:
        return all(len(g) == 1 for g in self.groups)

    @property
    def is_zero(self) -> bool:
        return bool(np.all(np.abs(self.diagonal) <= self.tol.eps_eig))

    @property
    def derivations(self) -> DerivationSpace:
        """Der(μ') in the working frame, computed on first use."""
        if self._derivations is None:
            self._derivations = derivation_space(self.mu, self.tol)
        return self._derivations

    def trace_defect(self) -> float:
        """Largest |tr(φψ) − tr(ψ)| over the derivation basis."""
        psi = self.derivations.basis
        return float(
            np.max(
                np.abs(np.einsum("i,aii->a", self.diagonal, psi) - np.einsum("aii->a", psi)),
                initial=0.0,
            )
        )

    def summary(self) -> dict:
        return {
            "diagonal": self.diagonal.tolist(),
            "eigenvalues": self.eigenvalues,
            "multiplicities": self.multiplicities,
            "s": self.s.tolist(),
            "is_zero": self.is_zero,
            "simple_spectrum": self.simple_spectrum,
        }


def _cluster(values: np.ndarray, eps: float) -> List[np.ndarray]:
    """Group indices whose values agree within eps·max(1, max|value|), sorted by value."""
    order = np.argsort(values, kind="stable")
    scale = eps * max(1.0, float(np.max(np.abs(values), initial=0.0)))
    groups = []
    for i in order:
        if groups and values[i] - values[groups[-1][-1]] <= scale:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return [np.array(sorted(g)) for g in groups]


def _diagonalizable(phi: np.ndarray, tol) -> bool:
    w, v = sp.linalg.eig(phi)
    if np.max(np.abs(w.imag), initial=0.0) > tol.eps_eig * max(1.0, np.max(np.abs(w))):
        return False
    return bool(np.linalg.cond(v) <= tol.kappa_max)


def compatible_frame(
    mu: core.StructureTensor, phi_raw, tol=None
) -> Tuple[core.FrameChange, core.StructureTensor, PreEinstein]:
    """Move to a frame where φ is diagonal and declare that frame orthonormal.

    Returns the frame change g0 with g0·φ·g0⁻¹ diagonal, the transported bracket
    μ' = ρ(g0)·μ, and the resulting :obj:`PreEinstein`. An already diagonal φ keeps
    the identity frame and its own order; otherwise eigenvalues come out ascending.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> g0, mu, pe = compatible_frame(h3, np.diag([2 / 3, 2 / 3, 4 / 3]))
        >>> g0.is_orthogonal(), mu.entries
        (True, {(0, 1, 2): 1.0})
    """
    tol = algebra._tolerances(tol)
    phi = np.asarray(phi_raw, dtype=float)
    n = mu.dim
    scale = max(1.0, np.linalg.norm(phi))
    if np.linalg.norm(phi - np.diag(np.diag(phi))) <= tol.eps_eig * scale:
        g0 = core.FrameChange.identity(n)
        d = np.diag(phi)
    elif algebra.is_symmetric(phi, tol.eps_eig):
        d, q = sp.linalg.eigh(0.5 * (phi + phi.T))
        g0 = core.FrameChange(q.T, q)
    else:
        w, v = sp.linalg.eig(phi)
        if np.max(np.abs(w.imag)) > tol.eps_eig * scale:
            raise core.NonDiagonalizable("φ has complex eigenvalues")
        order = np.argsort(w.real, kind="stable")
        d, v = w.real[order], v[:, order].real
        if np.linalg.cond(v) > tol.kappa_max:
            raise core.NonDiagonalizable(
                "eigenvector matrix condition {:.3e} exceeds {:.1e}".format(
                    np.linalg.cond(v), tol.kappa_max
                )
            )
        # Unit columns keep g0 well scaled.
        v = v / np.linalg.norm(v, axis=0)
        try:
            g0 = core.FrameChange(sp.linalg.inv(v), v, eps_inv=tol.eps_inv)
        except core.SingularFrame as err:
            raise core.NonDiagonalizable(err.message)
    mu_w = algebra.rho_act(g0, mu, tol)
    return g0, mu_w, PreEinstein(mu_w, d, frame=g0, tol=tol)


def pre_einstein(mu: core.StructureTensor, tol=None, seed: int = 0) -> PreEinstein:
    """Solve for the pre-Einstein derivation and its working frame.

    The trace system M x = t with M_ab = tr(ψ_a ψ_b), t_a = tr(ψ_a) over a basis of
    Der(μ) is solved by the minimal-norm pseudoinverse. If that φ is not verifiably
    semisimple, up to ``fallback_samples`` points of the affine solution set are tried,
    drawn from a generator seeded with ``seed``.

    Examples:

        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> np.round(pre_einstein(n4).diagonal, 8).tolist()
        [0.33333333, 0.66666667, 1.0, 1.33333333]
    """
    tol = algebra._tolerances(tol)
    ds = derivation_space(mu, tol)
    psi = ds.basis
    gram = np.einsum("aij,bji->ab", psi, psi)
    t = np.einsum("aii->a", psi)
    x = sp.linalg.pinv(gram, rtol=tol.eps_rank) @ t
    defect = float(np.max(np.abs(gram @ x - t), initial=0.0))
    if defect > tol.eps_pe * max(1.0, np.max(np.abs(t), initial=0.0)):
        raise core.SemisimplicityUnverified(
            f"trace system is inconsistent, defect {defect:.3e}"
        )
    phi = np.einsum("a,aij->ij", x, psi)

    fallback = 0
    if not _diagonalizable(phi, tol):
        null = sp.linalg.null_space(gram, rcond=tol.eps_rank)
        rng = np.random.default_rng(seed)
        found = None
        for fallback in range(1, tol.fallback_samples + 1):
            y = rng.normal(size=null.shape[1])
            y *= rng.uniform() ** (1.0 / max(1, len(y))) / max(np.linalg.norm(y), 1e-300)
            candidate = np.einsum("a,aij->ij", x + null @ y, psi)
            if _diagonalizable(candidate, tol):
                found = candidate
                break
        if found is None:
            raise core.SemisimplicityUnverified(
                "no diagonalizable solution of the trace system after {} samples".format(
                    tol.fallback_samples
                )
            )
        phi = found

    g0, mu_w, pe = compatible_frame(mu, phi, tol)
    internal.logger.info(
        "Solved pre-Einstein system",
        derivations=ds.dim,
        rank=int(np.linalg.matrix_rank(gram)),
        fallback=fallback,
        eigenvalues=pe.eigenvalues,
        multiplicities=pe.multiplicities,
    )
    return pe
