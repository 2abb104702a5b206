"""
Module for checking certificates and reading or writing them as JSON.

:obj:`verify_certificate` recomputes every certified quantity without reusing the code
that produced it. The Ricci endomorphism comes from adjoint matrices instead of the
einsum formula. Hilbert-Mumford weights come from the spectrum of ρ_*(λ) as an
operator on the full n³ coefficient space instead of from an eigenframe of λ. The
bracket is transported by explicit matrix products instead of an einsum.

Consistency checks (claimed against recomputed values) use tolerances ten times
tighter than the ones used to build certificates. The acceptance bounds themselves,
residual ≤ ε_sol, ν < −ε_cert and |c| > ε_cert, are as stated.

"""
__all__ = [
    "Certificate",
    "certificate_failures",
    "verify_certificate",
    "load_certificate",
    "dump_certificate",
]

import json
import numpy as np
import scipy as sp
from pydantic import Field, TypeAdapter, ValidationError
from typing import List, Union
from typing_extensions import Annotated
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations
import lie.nilsoliton.stability as stability
import lie.nilsoliton.ricci as ricci
import lie.nilsoliton.internal as internal

Certificate = Annotated[
    Union[ricci.SolitonCertificate, stability.ObstructionCertificate],
    Field(discriminator="kind"),
]

_adapter = TypeAdapter(Certificate)


def load_certificate(data):
    """Parse a certificate from JSON text or a decoded object.

    A full run report is accepted too, and its ``certificate`` entry is used.

    Examples:

        >>> cert = load_certificate('{"kind": "zero-phi", "lambda": [[1.0]], "nu": -1.0,'
        ...                         ' "frame": [[1.0]], "working_frame": [[1.0]]}')
        >>> cert.kind, cert.matrix().tolist()
        ('zero-phi', [[1.0]])
        >>> load_certificate({"kind": "soliton"})
        Traceback (most recent call last):
        ...
        MalformedCertificate: certificate does not parse: A: Field required
    """
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as err:
            raise core.MalformedCertificate(
                f"certificate is not JSON (line {err.lineno}): {err.msg}"
            )
    if isinstance(data, dict) and "kind" not in data and "certificate" in data:
        data = data["certificate"]
        if data is None:
            raise core.MalformedCertificate("report carries no certificate")
    try:
        return _adapter.validate_python(data)
    except ValidationError as ve:
        first = ve.errors()[0]
        where = ".".join(str(x) for x in first["loc"][1:]) or "kind"
        raise core.MalformedCertificate(f"certificate does not parse: {where}: {first['msg']}")


def dump_certificate(cert) -> dict:
    """JSON-ready dict of a certificate, with ``lambda`` spelled out."""
    return cert.model_dump(mode="json", by_alias=True)


def _matrix(rows, n: int, name: str) -> np.ndarray:
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        raise core.MalformedCertificate(f"{name} is not a numeric matrix")
    if a.shape != (n, n):
        raise core.MalformedCertificate(f"{name} has shape {a.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(a)):
        raise core.MalformedCertificate(f"{name} has non-finite entries")
    return a


def _transport(g: np.ndarray, c: np.ndarray) -> np.ndarray:
    """ρ(g)·μ through μ_g(e_i, e_j) = g·μ(g⁻¹e_i, g⁻¹e_j), pair by pair."""
    n = g.shape[0]
    ginv = sp.linalg.solve(g, np.eye(n))
    out = np.zeros_like(c)
    for i in range(n):
        for j in range(i + 1, n):
            v = ginv[:, i] @ np.tensordot(ginv[:, j], c, axes=(0, 1))
            out[i, j] = g @ v
            out[j, i] = -out[i, j]
    return out


def _adjoints(c: np.ndarray) -> np.ndarray:
    """ad[a] is the matrix of X ↦ μ(e_a, X)."""
    return np.transpose(c, (0, 2, 1))


def _ricci(c: np.ndarray) -> np.ndarray:
    ad = _adjoints(c)
    n = c.shape[0]
    first = np.array([[np.trace(ad[a] @ ad[b].T) for b in range(n)] for a in range(n)])
    second = sum(ad[i] @ ad[i].T for i in range(n))
    return -0.5 * first + 0.25 * second


def _action(lam: np.ndarray, c: np.ndarray) -> np.ndarray:
    """The operator ρ_*(λ) on the n³ coefficient space, indices (i, j, k)."""
    n = lam.shape[0]
    eye = np.eye(n)
    return (
        np.kron(np.kron(eye, eye), lam)
        - np.kron(np.kron(lam.T, eye), eye)
        - np.kron(np.kron(eye, lam.T), eye)
    )


def _kron_weight(lam: np.ndarray, c: np.ndarray, tol) -> float:
    """Largest eigenvalue of ρ_*(λ) whose eigenspace meets μ, an independent ν."""
    op = _action(lam, c)
    w, v = sp.linalg.eigh(0.5 * (op + op.T))
    comp = v.T @ c.reshape(-1)
    size = np.linalg.norm(comp)
    groups = derivations._cluster(w, tol.eps_eig)
    weights = [
        float(np.mean(w[g]))
        for g in groups
        if np.linalg.norm(comp[g]) > tol.eps_der * size
    ]
    if not weights:
        raise core.EmptySupport("bracket has no support")
    return max(weights)


def _scaled_norm(c: np.ndarray) -> float:
    return float(np.sqrt(0.5 * np.sum(c * c)))


def _soliton_failures(cert, mu, pe, tol) -> List[str]:
    n = mu.dim
    x = _matrix(cert.generator, n, "generator")
    D = _matrix(cert.D, n, "D")
    failures = []
    if stability.slice_violation(x, pe) > 1e-8 and np.linalg.norm(x) > 0.0:
        failures.append("generator is not in 𝔭")
    pb = stability.p_basis(pe)
    if len(cert.A) != pb.count:
        raise core.MalformedCertificate(f"A has {len(cert.A)} coordinates, 𝔭 has {pb.count}")
    if np.linalg.norm(pb.matrix(cert.A) - x) > 1e-9 * max(1.0, np.linalg.norm(x)):
        failures.append("A does not match the generator")

    c = _transport(sp.linalg.expm(x), mu.dense())
    norm = _scaled_norm(c)
    unit = c / norm
    ric = _ricci(unit)
    c_hat = cert.c / norm**2
    D_hat = D / norm**2
    residual = float(np.linalg.norm(ric - c_hat * np.eye(n) - D_hat))
    if residual > tol.eps_sol:
        failures.append(f"residual {residual:.3e} exceeds {tol.eps_sol:.1e}")
    if abs(residual - cert.residual) > tol.eps_sol / 10:
        failures.append(f"claimed residual {cert.residual:.3e} but found {residual:.3e}")
    if np.linalg.norm(D_hat + c_hat * pe.phi) > tol.eps_sol * max(1.0, abs(c_hat)):
        failures.append("D is not proportional to φ")
    defect = np.linalg.norm((_action(D_hat, unit) @ unit.reshape(-1)))
    if defect > tol.eps_der / 10 * max(1.0, np.linalg.norm(D_hat)):
        failures.append(f"D is not a derivation of μ_g, defect {defect:.3e}")
    energy = 2.0 * np.log(norm)
    if abs(energy - cert.energy) > tol.eps_sol / 10 * max(1.0, abs(energy)):
        failures.append(f"claimed energy {cert.energy:.6g} but found {energy:.6g}")
    return failures


def _obstruction_failures(cert, mu, pe, tol) -> List[str]:
    n = mu.dim
    lam = _matrix(cert.lam, n, "lambda")
    frame = _matrix(cert.frame, n, "frame")
    failures = []
    size = np.linalg.norm(lam)
    if size == 0.0:
        return ["lambda is zero"]
    if stability.slice_violation(lam, pe) > tol.eps_cert / 10:
        failures.append("lambda is not in 𝔭")
    if not algebra.is_orthogonal(frame, 1e-9):
        failures.append("frame is not orthogonal")
    else:
        turned = frame.T @ lam @ frame
        if np.linalg.norm(turned - np.diag(np.diag(turned))) > tol.eps_eig / 10 * size:
            failures.append("frame does not diagonalize lambda")

    c = mu.dense()
    unit = c / _scaled_norm(c)
    nu = _kron_weight(lam, unit, tol)
    bound = tol.eps_cert / 10 * max(1.0, size)
    if abs(nu - cert.nu) > bound:
        failures.append(f"claimed ν = {cert.nu:.6g} but found {nu:.6g}")
    moved = (_action(lam, unit) @ unit.reshape(-1)).reshape(c.shape)
    derivation = np.sqrt(0.5 * np.sum(moved**2)) <= tol.eps_der * size

    if cert.kind == "scaling":
        if cert.c is None:
            raise core.MalformedCertificate("scaling certificate has no constant c")
        if abs(cert.c) <= tol.eps_cert:
            failures.append(f"scaling constant {cert.c:.3e} is not separated from zero")
        gap = np.sqrt(0.5 * np.sum((moved - cert.c * unit) ** 2))
        if gap > bound:
            failures.append(f"μ is not a ρ_*(λ)-eigenvector, defect {gap:.3e}")
        group = _transport(sp.linalg.expm(lam), unit) - np.exp(cert.c) * unit
        if np.sqrt(0.5 * np.sum(group**2)) > 1e-6:
            failures.append("ρ(exp λ)·μ differs from e^c·μ")
        if abs(nu - cert.c) > bound:
            failures.append(f"weight {nu:.6g} differs from the scaling constant")
    else:
        if nu >= -tol.eps_cert:
            failures.append(f"ν = {nu:.6g} is not negative")
        if derivation:
            failures.append("lambda is a derivation")
        if cert.triple is not None:
            i, j, k = [t - 1 for t in cert.triple]
            if not all(0 <= t < n for t in (i, j, k)):
                raise core.MalformedCertificate(f"triple {cert.triple} is out of range")
            w = np.diag(frame.T @ lam @ frame)
            if abs(-(w[i] + w[j] - w[k]) - nu) > bound * 10:
                failures.append("witness triple does not attain ν")
    return failures


def certificate_failures(cert, mu: core.StructureTensor, pe: derivations.PreEinstein):
    """List every check the certificate fails; empty when it is valid.

    ``mu`` and ``pe`` must describe the working frame the certificate was issued in.
    """
    tol = pe.tol
    if mu.dim != pe.dim:
        raise core.DimensionMismatch(f"bracket of dim {mu.dim} for φ of dim {pe.dim}")
    frame = _matrix(cert.working_frame, mu.dim, "working_frame")
    if np.linalg.norm(frame - pe.frame.g) > 1e-8 * max(1.0, np.linalg.norm(frame)):
        raise core.MalformedCertificate(
            "certificate was issued in a different working frame"
        )
    if cert.kind == "soliton":
        failures = _soliton_failures(cert, mu, pe, tol)
    else:
        failures = _obstruction_failures(cert, mu, pe, tol)
    for f in failures:
        internal.logger.debug("Certificate check failed", kind=cert.kind, reason=f)
    return failures


def verify_certificate(cert, mu: core.StructureTensor, pe: derivations.PreEinstein) -> bool:
    """True iff every invariant of the certificate holds on an independent recomputation.

    Examples:

        >>> h3 = core.StructureTensor(3, {(0, 1, 2): 1.0})
        >>> pe = derivations.PreEinstein.from_diagonal(h3, [2 / 3, 2 / 3, 4 / 3])
        >>> cert = ricci.SolitonCertificate(
        ...     A=[0.0, 0.0, 0.0], generator=np.zeros((3, 3)).tolist(), c=-1.5,
        ...     D=np.diag([1.0, 1.0, 2.0]).tolist(), residual=0.0, energy=0.0,
        ...     working_frame=np.eye(3).tolist())
        >>> verify_certificate(cert, h3, pe)
        True
        >>> verify_certificate(cert.model_copy(update={"c": -1.501}), h3, pe)
        False
    """
    return not certificate_failures(cert, mu, pe)
