"""
Module for the Kempf-Ness energy on Y = exp(𝔭) and the gradient flow that minimizes it.

A point of Y is written g = exp(X) with X = Σ A_a λ_a in an orthonormal basis of 𝔭
(:obj:`lie.nilsoliton.stability.PBasis`), and the energy is

.. math::

    E_\\mu(A) = \\log \\|\\rho(\\exp X)\\cdot\\mu\\|^2 .

E is convex along the geodesics t ↦ exp(X)exp(λt/2), its critical points are exactly
the nilsoliton metrics, and its slope at infinity along λ is the Hilbert-Mumford weight
ν(λ;μ). The flow therefore either converges to a soliton or runs off to infinity along
a destabilizing direction.

All brackets here are in the working frame of the pre-Einstein derivation. Energies are
evaluated in an eigenframe of X, where ρ(exp X) is diagonal, through ``logsumexp`` so
large ‖A‖ do not overflow. Only entries in the cluster support of the rotated bracket
(:obj:`lie.nilsoliton.stability.support_mask`) take part, so rounding from the rotation
is never amplified by the exponential weights.

"""
__all__ = [
    "FlowConfig",
    "FlowRecord",
    "FlowTrace",
    "FlowOutcome",
    "ConvexityReport",
    "energy",
    "geodesic_energy",
    "directional_derivative",
    "gradient",
    "flow",
    "convexity_probe",
]

import numpy as np
import scipy as sp
import scipy.special
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from typing import List, Optional, Union
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations
import lie.nilsoliton.stability as stability
import lie.nilsoliton.ricci as ricci
import lie.nilsoliton.internal as internal


class FlowConfig(BaseModel):
    """Parameters of :obj:`flow`.

    Examples:

        >>> FlowConfig().max_iter
        5000
        >>> FlowConfig.create(armijo_c=0.9)
        Traceback (most recent call last):
        ...
        ConfigInvalid: armijo_c: Input should be less than or equal to 0.5
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    max_iter: int = Field(5000, gt=0)
    grad_tol: float = Field(1e-9, gt=0)
    step_init: float = Field(1.0, gt=0)
    armijo_c: float = Field(1e-4, gt=0, le=0.5)
    armijo_shrink: float = Field(0.5, gt=0, lt=1)
    radius_max: float = Field(50.0, gt=0)
    slope_window: int = Field(100, gt=0)
    seed: int = Field(0, ge=0)
    init_radius: float = Field(0.0, ge=0)

    @classmethod
    def create(cls, **kwargs):
        """Build a config, converting validation failures to ConfigInvalid."""
        try:
            return cls(**kwargs)
        except ValidationError as ve:
            first = ve.errors()[0]
            where = ".".join(str(x) for x in first["loc"])
            raise core.ConfigInvalid(f"{where}: {first['msg']}")


class FlowRecord(BaseModel):
    iteration: int
    energy: float
    grad_norm: float
    residual: float
    radius: float
    step: float


class FlowTrace(BaseModel):
    """Per-iteration history. Energies are for the bracket scaled to unit norm."""

    records: List[FlowRecord] = []
    outcome: str = "running"


class FlowOutcome:
    """Result of :obj:`flow`.

    Attributes:
        tag: One of ``converged``, ``diverged`` or ``max-iter``.
        trace: The :obj:`FlowTrace`.
        A: Final 𝔭-coordinates.
        certificate: A soliton certificate when converged, an obstruction certificate
            when diverged along a verified destabilizing direction, otherwise None.
        candidate: The unit direction X/‖X‖ when diverged.
        candidate_nu: Its Hilbert-Mumford weight.
    """

    def __init__(self, tag, trace, A, certificate=None, candidate=None, candidate_nu=None):
        self.tag = tag
        self.trace = trace
        self.A = A
        self.certificate = certificate
        self.candidate = candidate
        self.candidate_nu = candidate_nu

    def summary(self) -> dict:
        last = self.trace.records[-1] if self.trace.records else None
        return {
            "outcome": self.tag,
            "iterations": len(self.trace.records),
            "energy": None if last is None else last.energy,
            "grad_norm": None if last is None else last.grad_norm,
            "residual": None if last is None else last.residual,
            "radius": None if last is None else last.radius,
            "candidate_nu": self.candidate_nu,
        }


class ConvexityReport(BaseModel):
    """Samples of E along a geodesic and the explanation of a flat geodesic.

    A flat geodesic means μ is an eigenvector of ρ_*(λ): ``derivation`` when the
    eigenvalue is zero, otherwise ``scaling_constant`` holds it.
    """

    t: List[float]
    energies: List[float]
    second_differences: List[float]
    min_second_difference: float
    convex: bool
    flat: bool
    derivation: bool
    scaling_constant: Optional[float] = None
    consistent: bool


# -----------------------------------------------------------------------------------------
# Energy in an eigenframe
# -----------------------------------------------------------------------------------------


class _State:
    """The bracket ρ(exp X)·μ described in an orthonormal eigenframe Q of X.

    ``unit`` holds the transported bracket scaled to unit norm and ``log_norm2`` the
    logarithm of the squared norm that was divided out. Entries outside the cluster
    support of the rotated bracket are zeroed before any exponential weight is applied.
    """

    def __init__(self, w: np.ndarray, right: np.ndarray, c: np.ndarray, tol=None):
        ct = np.einsum("ia,jb,abc,kc->ijk", right, right, c, right, optimize=True)
        support = stability.support_mask(ct, w, tol)
        if not np.any(support):
            raise core.EmptySupport("bracket has no support")
        expo = w[None, None, :] - w[:, None, None] - w[None, :, None]
        self.log_norm2 = float(
            sp.special.logsumexp(2.0 * expo[support], b=0.5 * ct[support] ** 2)
        )
        scale = np.exp(np.where(support, expo - 0.5 * self.log_norm2, -np.inf))
        self.w = w
        self.q = right.T
        self.unit = np.where(support, ct, 0.0) * scale
        self._ricci = None

    @property
    def ricci(self) -> np.ndarray:
        """Ricci endomorphism of the unit bracket, in the eigenframe."""
        if self._ricci is None:
            self._ricci = ricci.ricci_endo(self.unit)
        return self._ricci

    def derivative(self, lam: np.ndarray) -> float:
        return float(np.sum(self._weighted() * (self.q.T @ lam @ self.q)))

    def derivatives(self, elements: np.ndarray) -> np.ndarray:
        turned = np.einsum("ia,kij,jb->kab", self.q, elements, self.q, optimize=True)
        return np.einsum("ab,kab->k", self._weighted(), turned)

    def working(self) -> np.ndarray:
        """The unit bracket rotated back to the working frame."""
        q = self.q
        return np.einsum("ai,bj,ijk,ck->abc", q, q, self.unit, q, optimize=True)

    def _weighted(self):
        return 2.0 * self.ricci * np.cosh(self.w[:, None] - self.w[None, :])

    def residual(self, s: np.ndarray):
        ric = self.q @ self.ricci @ self.q.T
        S = np.diag(s)
        r = algebra.hs_inner(ric, S) / algebra.hs_inner(S, S)
        return r, float(np.linalg.norm(ric - r * S))


def _symmetric_state(x: np.ndarray, c: np.ndarray, tol=None) -> _State:
    w, q = stability._eigenframe(x)
    return _State(w, q.T, c, tol)


def _generator(A, pb: stability.PBasis) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        if A.shape != (pb.dim, pb.dim):
            raise core.DimensionMismatch(f"generator of shape {A.shape} for dim {pb.dim}")
        if pb.violation(A) > 1e-8:
            raise core.OutsideSlice("generator is not in 𝔭")
        return 0.5 * (A + A.T)
    return pb.matrix(A)


def energy(A, mu: core.StructureTensor, pb: stability.PBasis, radius_max: float = None):
    """The energy log‖ρ(exp X)·μ‖² at X = Σ A_a λ_a.

    ``A`` is a coordinate vector, or a matrix that must lie in 𝔭.

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> pe = d.PreEinstein.from_diagonal(n4, [1 / 3, 2 / 3, 1.0, 4 / 3])
        >>> pb = stability.p_basis(pe)
        >>> energy(np.zeros(pb.count), n4, pb) == np.log(2.0)
        True
        >>> energy(np.eye(4), n4, pb)
        Traceback (most recent call last):
        ...
        OutsideSlice: generator is not in 𝔭
    """
    radius_max = FlowConfig().radius_max if radius_max is None else radius_max
    x = _generator(A, pb)
    if np.linalg.norm(x) > 4 * radius_max:
        raise core.Overflow(
            f"‖A‖ = {np.linalg.norm(x):.3g} exceeds {4 * radius_max:.3g}, rescale the input"
        )
    return _symmetric_state(x, mu.dense()).log_norm2


def geodesic_energy(A, lam, t: float, mu: core.StructureTensor, pb: stability.PBasis):
    """Energy along the geodesic t ↦ exp(X)·exp(λt/2).

    At X = 0 this is log Σ e^{(λ_k − λ_i − λ_j)t}(μ^k_{ij})² in an eigenframe of λ.
    Otherwise ρ(exp(λt/2)) is applied first in that eigenframe, the result is scaled
    to unit norm, and the energy of exp(X) on it is added, so no product of
    exponentials is ever formed.

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> pb = stability.p_basis(d.PreEinstein.from_diagonal(n4, [1 / 3, 2 / 3, 1.0, 4 / 3]))
        >>> lam = np.diag([0.0, 0.0, 1.0, 0.0])
        >>> bool(np.isclose(geodesic_energy(np.zeros(pb.count), lam, 1.5, n4, pb),
        ...                 np.log(np.exp(1.5) + np.exp(-1.5))))
        True
    """
    lam = np.asarray(lam, dtype=float)
    if pb.violation(lam) > 1e-8:
        raise core.OutsideSlice("geodesic direction is not in 𝔭")
    x = _generator(A, pb)
    half = _symmetric_state(0.25 * t * (lam + lam.T), mu.dense())
    if np.linalg.norm(x) == 0.0:
        return half.log_norm2
    return half.log_norm2 + _symmetric_state(x, half.working()).log_norm2


def directional_derivative(A, lam, mu: core.StructureTensor, pb: stability.PBasis):
    """Derivative of :obj:`geodesic_energy` at t = 0.

    It equals 2⟨Ric(μ_g/‖μ_g‖), g λ g⁻¹⟩ for g = exp(X).

    >>> import lie.nilsoliton.derivations as d
    >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
    >>> pb = stability.p_basis(d.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3]))
    >>> abs(directional_derivative(np.zeros(pb.count), pb.elements[0], h3, pb)) < 1e-14
    True
    """
    lam = np.asarray(lam, dtype=float)
    return _symmetric_state(_generator(A, pb), mu.dense()).derivative(lam)


def gradient(A, mu: core.StructureTensor, pb: stability.PBasis) -> np.ndarray:
    """Coordinates a ↦ directional_derivative(A, λ_a); zero exactly at critical points."""
    return _symmetric_state(_generator(A, pb), mu.dense()).derivatives(pb.elements)


def _slope(records: List[FlowRecord], window: int) -> float:
    tail = records[-min(window, len(records)) :]
    r = np.array([x.radius for x in tail])
    e = np.array([x.energy for x in tail])
    if len(tail) < 3 or np.ptp(r) <= 0.0:
        return 0.0
    return float(np.polyfit(r, e, 1)[0])


# Beyond this spread of log singular values the SVD of exp(X)·exp(−ηΔ) loses the
# small singular values to rounding.
_EXACT_SPREAD = 8.0


def _advance(x: np.ndarray, delta: np.ndarray, eta: float) -> np.ndarray:
    """Symmetric representative ½·log(hᵗh) of h = exp(X)·exp(−ηΔ).

    The exact representative is used while exp(X) is well conditioned. Further out
    the step is taken to first order in η through the divided differences of
    ½·log on the eigenvalues e^{2w} of exp(2X), which in the eigenframe of X weight
    Δ_ij by (w_i − w_j)·coth(w_i − w_j). Armijo backtracking still checks the decrease.
    """
    scale = 1.0 + np.linalg.norm(x) * np.linalg.norm(delta)
    if np.linalg.norm(x @ delta - delta @ x) <= 1e-12 * scale:
        return x - eta * delta
    w, q = stability._eigenframe(x)
    if np.ptp(w) <= _EXACT_SPREAD:
        h = sp.linalg.expm(x) @ sp.linalg.expm(-eta * delta)
        _, sigma, vh = sp.linalg.svd(h)
        return vh.T @ np.diag(np.log(sigma)) @ vh
    d = w[:, None] - w[None, :]
    apart = np.abs(d) > 1e-12
    loewner = np.ones_like(d)
    loewner[apart] = d[apart] / np.tanh(d[apart])
    step = q @ ((q.T @ delta @ q) * loewner) @ q.T
    return x - eta * 0.5 * (step + step.T)


def flow(
    mu: core.StructureTensor,
    pe: derivations.PreEinstein,
    config: Optional[FlowConfig] = None,
    start=None,
    pb: Optional[stability.PBasis] = None,
) -> FlowOutcome:
    """Riemannian gradient descent of the energy with Armijo backtracking.

    Each step moves g ← g·exp(−ηΔ) with Δ = Σ_a (∇E)_a λ_a and takes the symmetric
    representative of the new point. The bracket is scaled to unit norm first; the
    soliton constant reported in a certificate is scaled back.

    Args:
        mu: The bracket in the working frame of ``pe``.
        pe: The pre-Einstein derivation.
        config: Flow parameters.
        start: Optional starting 𝔭-coordinates. Without it the flow starts at the
            origin, or at a seeded random point of norm ``init_radius``.
        pb: Optional precomputed basis of 𝔭.

    Returns:
        A :obj:`FlowOutcome`.
    """
    config = FlowConfig() if config is None else config
    tol = pe.tol
    if mu.dim != pe.dim:
        raise core.DimensionMismatch(f"bracket of dim {mu.dim} for φ of dim {pe.dim}")
    pb = stability.p_basis(pe) if pb is None else pb
    scale = mu.norm()
    c = mu.dense() / scale

    if start is not None:
        A = np.array(start, dtype=float)
    elif config.init_radius > 0 and pb.count > 0:
        u = np.random.default_rng(config.seed).normal(size=pb.count)
        A = config.init_radius * u / np.linalg.norm(u)
    else:
        A = np.zeros(pb.count)
    x = pb.matrix(A)

    trace = FlowTrace()
    tag = "max-iter"
    step = 0.0
    state = _symmetric_state(x, c, tol)
    for iteration in range(config.max_iter):
        grad = state.derivatives(pb.elements)
        gnorm = float(np.linalg.norm(grad))
        r, residual = state.residual(pe.s)
        radius = float(np.linalg.norm(A))
        trace.records.append(
            FlowRecord(
                iteration=iteration,
                energy=state.log_norm2,
                grad_norm=gnorm,
                residual=residual,
                radius=radius,
                step=step,
            )
        )
        if gnorm <= config.grad_tol and residual <= tol.eps_sol:
            tag = "converged"
            break
        if radius > config.radius_max and _slope(trace.records, config.slope_window) < -tol.eps_cert:
            tag = "diverged"
            break

        delta = pb.matrix(grad)
        e0 = state.log_norm2
        slack = 1e-13 * max(1.0, abs(e0))
        eta = config.step_init
        accepted = False
        while eta > 1e-16:
            a_new = pb.coordinates(_advance(x, delta, eta))
            x_new = pb.matrix(a_new)
            if np.linalg.norm(x_new) > 4 * config.radius_max:
                eta *= config.armijo_shrink
                continue
            trial = _symmetric_state(x_new, c, tol)
            decrease = config.armijo_c * eta * 2.0 * gnorm**2
            if trial.log_norm2 <= e0 - decrease or (
                decrease < slack and trial.log_norm2 <= e0 + slack
            ):
                accepted = True
                break
            eta *= config.armijo_shrink
        if not accepted:
            internal.logger.warning(
                "Line search stalled", iteration=iteration, grad_norm=gnorm, residual=residual
            )
            break
        A, x, state, step = a_new, x_new, trial, eta

    trace.outcome = tag
    internal.logger.info(
        "Flow finished",
        outcome=tag,
        iterations=len(trace.records),
        energy=trace.records[-1].energy,
        grad_norm=trace.records[-1].grad_norm,
    )

    if tag == "converged":
        r, residual = state.residual(pe.s)
        log_norm2 = state.log_norm2 + 2.0 * np.log(scale)
        const = r * np.exp(log_norm2)
        cert = ricci.SolitonCertificate(
            A=A.tolist(),
            generator=x.tolist(),
            c=float(const),
            D=(-const * pe.phi).tolist(),
            residual=residual,
            energy=float(log_norm2),
            working_frame=pe.frame.g.tolist(),
        )
        return FlowOutcome(tag, trace, A, certificate=cert)

    if tag == "diverged":
        lam = x / np.linalg.norm(x)
        weight = stability.hm_weight(lam, mu, tol)
        cert = None
        if weight.nu < -tol.eps_cert and not derivations.is_derivation(lam, mu, tol):
            cert = stability._certificate("negative-weight", lam, weight, pe)
        else:
            internal.logger.warning(
                "Divergence direction is not destabilizing", nu=weight.nu
            )
        return FlowOutcome(
            tag, trace, A, certificate=cert, candidate=lam, candidate_nu=weight.nu
        )

    return FlowOutcome(tag, trace, A)


def convexity_probe(
    A, lam, mu: core.StructureTensor, pb: stability.PBasis, t_grid=None, tol=None
) -> ConvexityReport:
    """Sample the energy along a geodesic and check its second differences.

    The default grid is t = −3, ..., 3. A flat geodesic is cross-checked against
    ρ_*(λ)·μ = cμ, a derivation when c = 0.

    Examples:

        >>> import lie.nilsoliton.derivations as d
        >>> n4 = core.StructureTensor(4, {(0, 1, 2): 1.0, (0, 2, 3): 1.0})
        >>> pb = stability.p_basis(d.PreEinstein.from_diagonal(n4, [1 / 3, 2 / 3, 1.0, 4 / 3]))
        >>> report = convexity_probe(np.zeros(pb.count), np.diag([0.0, 0.0, 1.0, 0.0]), n4, pb)
        >>> report.convex, report.flat, report.min_second_difference > 0.1
        (True, False, True)
    """
    tol = algebra._tolerances(tol)
    lam = np.asarray(lam, dtype=float)
    t = np.arange(-3.0, 4.0) if t_grid is None else np.asarray(t_grid, dtype=float)
    e = np.array([geodesic_energy(A, lam, ti, mu, pb) for ti in t])
    h = np.diff(t)
    d2 = ((e[2:] - e[1:-1]) / h[1:] - (e[1:-1] - e[:-2]) / h[:-1]) / (0.5 * (h[1:] + h[:-1]))
    flat = bool(np.max(np.abs(d2), initial=0.0) <= 1e-10)

    action = algebra.rho_star_act(lam, mu)
    norm2 = algebra.tensor_inner(mu.dense(), mu.dense())
    const = algebra.tensor_inner(action, mu.dense()) / norm2
    rest = action - const * mu.dense()
    eigen = np.sqrt(algebra.tensor_inner(rest, rest)) <= tol.eps_cert * np.sqrt(norm2) * max(
        1.0, np.linalg.norm(lam)
    )
    derivation = bool(derivations.is_derivation(lam, mu, tol))
    scaling = float(const) if eigen and not derivation else None
    return ConvexityReport(
        t=t.tolist(),
        energies=e.tolist(),
        second_differences=d2.tolist(),
        min_second_difference=float(np.min(d2, initial=np.inf)),
        convex=bool(np.all(d2 >= -1e-7)),
        flat=flat,
        derivation=derivation,
        scaling_constant=scaling,
        consistent=(not flat) or derivation or scaling is not None,
    )
