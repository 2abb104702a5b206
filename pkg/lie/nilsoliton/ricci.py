"""
Module for the Ricci endomorphism of a metric nilpotent Lie algebra and the nilsoliton
equation Ric = cI + D.

For an orthonormal frame the Ricci endomorphism is

.. math::

    R_{ab} = -\\frac{1}{2}\\sum_{i,j} \\mu^j_{ai}\\mu^j_{bi}
             + \\frac{1}{4}\\sum_{i,j} \\mu^a_{ij}\\mu^b_{ij}

with both sums over ordered pairs and the skew extension of μ.

"""
__all__ = [
    "SolitonCertificate",
    "SolitonResidual",
    "ricci_endo",
    "soliton_residual",
]

import numpy as np
from pydantic import BaseModel
from typing import List, Literal
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations


class SolitonCertificate(BaseModel):
    """Witness of a nilsoliton metric.

    The metric is exp(X) applied to the working frame ``working_frame``, where
    ``generator`` is X = Σ A_a λ_a and ``A`` are its coordinates in 𝔭. The bracket
    μ_g = ρ(exp X)·μ then satisfies Ric = cI + D with D = −cφ. ``residual`` is measured
    with μ_g scaled to unit norm, and ``energy`` is log‖μ_g‖².
    """

    kind: Literal["soliton"] = "soliton"
    A: List[float]
    generator: List[List[float]]
    c: float
    D: List[List[float]]
    residual: float
    energy: float
    working_frame: List[List[float]]


class SolitonResidual:
    """Projection of Ric onto ℝ(I − φ).

    Attributes:
        c: The soliton constant r = ⟨Ric, I − φ⟩/‖I − φ‖².
        D: The derivation part −rφ.
        residual: ‖Ric − r(I − φ)‖.
        ricci: The Ricci endomorphism itself.
    """

    def __init__(self, c, D, residual, ricci):
        self.c = float(c)
        self.D = D
        self.residual = float(residual)
        self.ricci = ricci

    def __iter__(self):
        return iter((self.c, self.D, self.residual))


def ricci_endo(mu) -> np.ndarray:
    """Ricci endomorphism in the (orthonormal) frame of μ.

    Accepts a :obj:`lie.nilsoliton.core.StructureTensor` or a dense skew array.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> np.diag(ricci_endo(h3)).tolist()
        [-0.5, -0.5, 0.5]
        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> np.diag(ricci_endo(n4)).tolist()
        [-1.0, -0.5, 0.0, 0.5]
    """
    c = algebra._dense(mu)
    return -0.5 * np.einsum("aij,bij->ab", c, c) + 0.25 * np.einsum("ija,ijb->ab", c, c)


def soliton_residual(
    mu, pe: derivations.PreEinstein, normalize: bool = False
) -> SolitonResidual:
    """Best fit of Ric_μ by r(I − φ), the form of any nilsoliton Ricci endomorphism.

    ``mu`` must share the working frame of ``pe``. With ``normalize`` the bracket is
    scaled to unit norm first.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> pe = derivations.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])
        >>> c, D, residual = soliton_residual(h3, pe)
        >>> round(c, 12), np.round(np.diag(D), 12).tolist(), residual < 1e-12
        (-1.5, [1.0, 1.0, 2.0], True)
    """
    c = algebra._dense(mu)
    if normalize:
        c = c / np.sqrt(algebra.tensor_inner(c, c))
    ric = ricci_endo(c)
    S = np.diag(pe.s)
    r = algebra.hs_inner(ric, S) / algebra.hs_inner(S, S)
    return SolitonResidual(r, -r * pe.phi, np.linalg.norm(ric - r * S), ric)
