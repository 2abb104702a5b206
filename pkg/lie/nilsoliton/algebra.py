"""
Module for bracket arithmetic on metric nilpotent Lie algebras.

Everything here works on the dense skew array ``C[i, j, k]`` of a
:obj:`lie.nilsoliton.core.StructureTensor` with numpy ``einsum`` and returns new
immutable values. The GL action on brackets is

.. math::

    (\\rho(g)\\mu)(X_1, X_2) = g\\,\\mu(g^{-1}X_1, g^{-1}X_2)

and its derivative at the identity is :obj:`rho_star_act`.

"""
__all__ = [
    "ValidationReport",
    "CentralSeries",
    "validate_bracket",
    "bracket_eval",
    "rho_act",
    "rho_star_act",
    "hs_inner",
    "tensor_inner",
    "jacobi_residual",
    "lower_central_series",
    "is_symmetric",
    "is_orthogonal",
]

import numpy as np
import scipy as sp
from pydantic import BaseModel
from typing import List, Optional, Union
import lie.nilsoliton.core as core
import lie.nilsoliton.internal as internal


class ValidationReport(BaseModel):
    """Outcome of :obj:`validate_bracket`."""

    ok: bool
    dim: int
    entries: int
    jacobi_residual: float
    nilpotency_step: Optional[int] = None
    series_dims: List[int] = []
    commutative: bool = False
    error: Optional[dict] = None


class CentralSeries:
    """Descending central series 𝔫 = C¹ ⊃ C² ⊃ ... ⊃ 0.

    Attributes:
        bases: Orthonormal column bases of each term, ending with an empty (n, 0) basis.
        dims: The dimension of each term.
        central_vector: Unit vector in the last nonzero term.
    """

    def __init__(self, bases: List[np.ndarray], central_vector: np.ndarray):
        self.bases = bases
        self.dims = [int(b.shape[1]) for b in bases]
        self.central_vector = central_vector

    @property
    def step(self) -> int:
        return len(self.dims) - 1


def _tolerances(tol):
    return core.Tolerances() if tol is None else tol


def _dense(mu) -> np.ndarray:
    if isinstance(mu, core.StructureTensor):
        return mu.dense()
    return np.asarray(mu, dtype=float)


def bracket_eval(mu: core.StructureTensor, x1, x2) -> np.ndarray:
    """Evaluate μ(X1, X2).

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> bracket_eval(h3, [1, 0, 0], [0, 1, 0]).tolist()
        [0.0, 0.0, 1.0]
        >>> bracket_eval(h3, [1, 1, 0], [1, -1, 0]).tolist()
        [0.0, 0.0, -2.0]
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x1.shape != (mu.dim,) or x2.shape != (mu.dim,):
        raise core.DimensionMismatch(
            f"bracket arguments must have length {mu.dim}, got {x1.shape} and {x2.shape}"
        )
    return np.einsum("i,j,ijk->k", x1, x2, mu.dense())


def rho_act(g: core.FrameChange, mu: core.StructureTensor, tol=None):
    """Transport μ by a frame change, returning μ_g = ρ(g)·μ.

    The coefficients are (μ_g)^k_{ij} = ⟨g μ(g⁻¹e_i, g⁻¹e_j), e_k⟩.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> rho_act(core.FrameChange(np.diag([2.0, 1.0, 1.0])), h3).entries
        {(0, 1, 2): 0.5}
    """
    tol = _tolerances(tol)
    if not isinstance(g, core.FrameChange):
        g = core.FrameChange(g, eps_inv=tol.eps_inv)
    if g.dim != mu.dim:
        raise core.DimensionMismatch(f"frame of size {g.dim} for bracket of dim {mu.dim}")
    c = np.einsum(
        "ai,bj,abc,kc->ijk", g.inverse, g.inverse, mu.dense(), g.g, optimize=True
    )
    return core.StructureTensor.from_dense(c, eps_mu=tol.eps_mu)


def rho_star_act(lam, mu) -> np.ndarray:
    """Dense skew tensor of ρ_*(λ)·μ = λμ(X1,X2) − μ(λX1,X2) − μ(X1,λX2).

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> float(np.abs(rho_star_act(np.diag([1.0, 1.0, 2.0]), h3)).max())
        0.0
        >>> float(rho_star_act(np.diag([1.0, 0.0, 0.0]), h3)[0, 1, 2])
        -1.0
    """
    lam = np.asarray(lam, dtype=float)
    c = _dense(mu)
    if lam.shape != (c.shape[0], c.shape[0]):
        raise core.DimensionMismatch(
            f"endomorphism {lam.shape} does not match dim {c.shape[0]}"
        )
    return (
        np.einsum("kl,ijl->ijk", lam, c)
        - np.einsum("li,ljk->ijk", lam, c)
        - np.einsum("lj,ilk->ijk", lam, c)
    )


def hs_inner(a, b) -> float:
    """Hilbert-Schmidt inner product trace(AᵗB).

    >>> round(hs_inner(np.diag([2 / 3, 2 / 3, 4 / 3]), np.diag([1.0, 1.0, 2.0])), 12)
    4.0
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise core.DimensionMismatch(f"shapes {a.shape} and {b.shape} differ")
    return float(np.sum(a * b))


def tensor_inner(mu1, mu2) -> float:
    """Inner product of brackets summing over i < j.

    Accepts :obj:`lie.nilsoliton.core.StructureTensor` or dense skew arrays.

    >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
    >>> tensor_inner(h3, h3)
    1.0
    """
    c1, c2 = _dense(mu1), _dense(mu2)
    if c1.shape != c2.shape:
        raise core.DimensionMismatch(f"shapes {c1.shape} and {c2.shape} differ")
    return float(0.5 * np.sum(c1 * c2))


def jacobi_residual(mu: core.StructureTensor) -> float:
    """Largest Jacobiator norm over all index triples, relative to ‖μ‖²."""
    c = mu.dense()
    if mu.is_zero():
        return 0.0
    jac = (
        np.einsum("ijk,klm->ijlm", c, c, optimize=True)
        + np.einsum("jlk,kim->ijlm", c, c, optimize=True)
        + np.einsum("lik,kjm->ijlm", c, c, optimize=True)
    )
    return float(np.linalg.norm(jac, axis=3).max() / mu.norm() ** 2)


def lower_central_series(mu: core.StructureTensor, tol=None) -> CentralSeries:
    """Orthonormal bases of C¹ = 𝔫, C^{k+1} = μ(𝔫, C^k) until the series reaches zero.

    Examples:

        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> s = lower_central_series(n4)
        >>> s.dims, s.step
        ([4, 2, 1, 0], 3)
        >>> np.round(s.central_vector, 12).tolist()
        [0.0, 0.0, 0.0, 1.0]
    """
    tol = _tolerances(tol)
    n = mu.dim
    c = mu.dense()
    cutoff = tol.eps_rank * max(mu.max_abs(), 1e-300) * np.sqrt(n)
    basis = np.eye(n)
    bases = [basis]
    while basis.shape[1] > 0:
        images = np.einsum("ijk,jd->idk", c, basis).reshape(-1, n)
        _, sv, vt = sp.linalg.svd(images, full_matrices=False)
        rank = int(np.sum(sv > cutoff))
        if rank >= basis.shape[1]:
            raise core.NotNilpotent(
                f"lower central series stabilizes at dimension {basis.shape[1]}",
                dims=[b.shape[1] for b in bases],
            )
        bases.append(vt[:rank].T)
        basis = bases[-1]

    e = bases[-2][:, 0].copy()
    e[np.abs(e) < 1e-14] = 0.0
    if e[np.argmax(np.abs(e))] < 0:
        e = -e + 0.0
    return CentralSeries(bases, e)


def validate_bracket(
    mu: core.StructureTensor, tol=None, raise_on_error: bool = True
) -> ValidationReport:
    """Check that μ is a noncommutative nilpotent Lie bracket.

    With ``raise_on_error=False`` the failure is recorded in the report instead of raised.

    Examples:

        >>> validate_bracket(core.StructureTensor(3, {(0, 1, 2): 1.0})).nilpotency_step
        2

        >>> validate_bracket(core.StructureTensor(3, {(0, 1, 0): 1.0}))
        Traceback (most recent call last):
        ...
        NotNilpotent: lower central series stabilizes at dimension 1
    """
    tol = _tolerances(tol)
    report = dict(dim=mu.dim, entries=len(mu), jacobi_residual=0.0)
    try:
        if mu.is_zero():
            report["commutative"] = True
            raise core.Commutative("bracket is zero, the algebra is commutative")
        report["jacobi_residual"] = jacobi_residual(mu)
        if report["jacobi_residual"] > tol.eps_jac:
            raise core.JacobiViolation(
                "Jacobi residual {:.3e} exceeds {:.1e}".format(
                    report["jacobi_residual"], tol.eps_jac
                )
            )
        series = lower_central_series(mu, tol)
        report["series_dims"] = series.dims
        report["nilpotency_step"] = series.step
    except core.NilsolitonError as err:
        if raise_on_error:
            raise
        internal.logger.warning("Bracket rejected", code=err.code, message=err.message)
        return ValidationReport(ok=False, error=err.as_dict(), **report)

    internal.logger.debug("Validated bracket", **report)
    return ValidationReport(ok=True, **report)


def is_symmetric(a, tol: float = 1e-10) -> bool:
    """True if ‖A − Aᵗ‖ ≤ tol·max(1, ‖A‖)."""
    a = np.asarray(a, dtype=float)
    return bool(np.linalg.norm(a - a.T) <= tol * max(1.0, np.linalg.norm(a)))


def is_orthogonal(a, tol: float = 1e-10) -> bool:
    """True if ‖AᵗA − I‖ ≤ tol."""
    a = np.asarray(a, dtype=float)
    return bool(np.linalg.norm(a.T @ a - np.eye(a.shape[0])) <= tol)
