"""
Module for running the analysis pipelines behind the command line and collecting
their results into a :obj:`RunReport`.

The full ``report`` pipeline is

    1. validate the bracket,
    2. solve for the pre-Einstein derivation and its working frame,
    3. try the explicit obstructions (φ = 0 and scaling eigenvectors),
    4. run the criterion, searching frames when φ has a repeated eigenvalue,
    5. run the gradient flow,

and stops at the first verified obstruction. A verdict of ``soliton-found`` or
``no-soliton`` is only ever given for a certificate that passed
:obj:`lie.nilsoliton.check.verify_certificate`.

"""
__all__ = [
    "PipelineFlags",
    "RunReport",
    "COMMANDS",
    "run_pipeline",
    "summary",
]

import contextlib
import hashlib
import time
import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr
from typing import Any, Dict, List, Literal, Optional
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.derivations as derivations
import lie.nilsoliton.stability as stability
import lie.nilsoliton.ricci as ricci
import lie.nilsoliton.kempf_ness as kempf_ness
import lie.nilsoliton.criterion as criterion
import lie.nilsoliton.check as check
import lie.nilsoliton.document as document
import lie.nilsoliton.internal as internal

COMMANDS = [
    "validate",
    "der",
    "pre-einstein",
    "ricci",
    "nu",
    "criterion",
    "flow",
    "certify",
    "report",
]

EXIT_CODES = {"soliton-found": 0, "no-soliton": 10, "inconclusive": 20}

_CriterionReport = criterion.CriterionReport

# Frames sampled by the report pipeline when φ has a repeated eigenvalue.
DEFAULT_SEARCH = 32


class PipelineFlags(BaseModel):
    """Options shared by the pipelines.

    ``search`` is the number of frames for the basis search, ``lam`` the matrix for
    ``nu`` and ``certificate`` the decoded certificate for ``certify``.
    """

    model_config = ConfigDict(extra="forbid")

    seed: int = 0
    search: Optional[int] = None
    nprocs: int = 1
    flow: kempf_ness.FlowConfig = kempf_ness.FlowConfig()
    lam: Optional[List[List[float]]] = None
    certificate: Optional[Any] = None
    timings: bool = False
    progress_bar: bool = False


class RunReport(BaseModel):
    """Everything a pipeline computed, as written to stdout."""

    tool: str = "nilsoliton"
    version: str = internal.VERSION
    command: str
    seed: int
    input: Dict[str, Any]
    validation: Optional[algebra.ValidationReport] = None
    derivations: Optional[Dict[str, Any]] = None
    pre_einstein: Optional[Dict[str, Any]] = None
    ricci: Optional[Dict[str, Any]] = None
    nu: Optional[Dict[str, Any]] = None
    obstructions: Optional[Dict[str, Any]] = None
    criterion: Optional[_CriterionReport] = None
    search: Optional[Dict[str, Any]] = None
    flow: Optional[Dict[str, Any]] = None
    certificate: Optional[check.Certificate] = None
    verdict: Optional[Literal["soliton-found", "no-soliton", "inconclusive"]] = None
    verdict_kind: Optional[str] = None
    timings: Optional[Dict[str, float]] = None

    _elapsed: Dict[str, float] = PrivateAttr(default_factory=dict)

    @property
    def elapsed(self) -> Dict[str, float]:
        """Wall-times per stage, kept even when not part of the document."""
        return dict(self._elapsed)

    def exit_code(self) -> int:
        if self.validation is not None and not self.validation.ok:
            return 1
        if self.verdict is None:
            return 0
        return EXIT_CODES[self.verdict]

    def to_json(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2) + "\n"


@contextlib.contextmanager
def _stage(times: Dict[str, float], name: str):
    start = time.perf_counter()
    try:
        yield
    finally:
        times[name] = times.get(name, 0.0) + time.perf_counter() - start


def _digest(doc: document.AlgebraDocument) -> str:
    return hashlib.sha256(document.render_algebra(doc).encode("utf-8")).hexdigest()


def _accept(cert, pe, what: str):
    """Return cert if it verifies, else None."""
    if cert is None:
        return None
    failures = check.certificate_failures(cert, pe.mu, pe)
    if failures:
        internal.logger.warning(
            "Certificate failed verification", source=what, kind=cert.kind, reasons=failures
        )
        return None
    return cert


def _exterior(pe, crit):
    """Verified certificate behind a definitive exterior verdict."""
    if not crit.definitive:
        return None
    return _accept(criterion.exterior_certificate(pe.mu, pe, crit), pe, "criterion")


def _ricci_block(pe) -> Dict[str, Any]:
    fit = ricci.soliton_residual(pe.mu, pe)
    return {
        "c": fit.c,
        "residual": fit.residual,
        "D": fit.D.tolist(),
        "ricci": fit.ricci.tolist(),
    }


def _pre_einstein_block(pe) -> Dict[str, Any]:
    block = pe.summary()
    block["frame"] = pe.frame.g.tolist()
    block["derivations"] = pe.derivations.dim
    block["trace_defect"] = pe.trace_defect()
    return block


def _obstructions(pe, pb) -> Dict[str, Any]:
    found = {}
    if pe.is_zero:
        found["zero_phi"] = _accept(stability.zero_phi_obstruction(pe.mu, pe), pe, "zero-phi")
    found["scaling"] = _accept(stability.scaling_obstruction(pe.mu, pe, pb), pe, "scaling")
    return found


def _search(pe, flags, budget) -> criterion.BasisSearchResult:
    return criterion.basis_search(
        pe.mu,
        pe,
        budget=budget,
        seed=flags.seed,
        nprocs=flags.nprocs,
        progress_bar=flags.progress_bar,
    )


def _flow(pe, pb, flags):
    outcome = kempf_ness.flow(pe.mu, pe, flags.flow, pb=pb)
    block = outcome.summary()
    block["A"] = np.asarray(outcome.A).tolist()
    if outcome.candidate is not None:
        block["candidate"] = outcome.candidate.tolist()
    cert = _accept(outcome.certificate, pe, "flow")
    block["certified"] = cert is not None
    return block, outcome, cert


def run_pipeline(
    doc: document.AlgebraDocument, command: str, flags: Optional[PipelineFlags] = None
) -> RunReport:
    """Run one command on an algebra document.

    Args:
        doc: The parsed algebra.
        command: One of :obj:`COMMANDS`.
        flags: Options, see :obj:`PipelineFlags`.

    Returns:
        The :obj:`RunReport`. Errors of the numerical modules propagate as
        :obj:`lie.nilsoliton.core.NilsolitonError`.

    Examples:

        >>> import lie.nilsoliton.corpus as corpus
        >>> report = run_pipeline(corpus.corpus("n4"), "ricci")
        >>> round(report.ricci["c"], 12), report.exit_code()
        (-1.5, 0)
    """
    flags = PipelineFlags() if flags is None else flags
    if command not in COMMANDS:
        raise core.ParseError(f"unknown command {command}, expected one of {COMMANDS}")
    tol = core.Tolerances()
    clock = {}
    report = RunReport(
        command=command,
        seed=flags.seed,
        input={"name": doc.name, "dim": doc.dim, "digest": _digest(doc)},
    )
    mu = document.to_structure_tensor(doc, tol)

    with _stage(clock, "validate"):
        report.validation = algebra.validate_bracket(
            mu, tol, raise_on_error=(command != "validate")
        )
    if command == "validate":
        return _finish(report, clock, flags)

    if command == "der":
        with _stage(clock, "der"):
            ds = derivations.derivation_space(mu, tol)
        report.derivations = {
            "dim": ds.dim,
            "residual": ds.residual,
            "basis": ds.basis.tolist(),
        }
        return _finish(report, clock, flags)

    if command == "nu":
        if flags.lam is None:
            raise core.ParseError("nu needs a lambda matrix")
        lam = np.array(flags.lam, dtype=float)
        with _stage(clock, "nu"):
            weight = stability.hm_weight(lam, mu, tol)
        report.nu = {
            "nu": weight.nu,
            "nu_opposite": weight.opposite,
            "triple": [x + 1 for x in weight.triple],
            "eigenvalues": np.asarray(weight.eigenvalues).tolist(),
            "is_derivation": derivations.is_derivation(lam, mu, tol),
        }
        return _finish(report, clock, flags)

    with _stage(clock, "pre-einstein"):
        pe = derivations.pre_einstein(mu, tol, seed=flags.seed)
        report.pre_einstein = _pre_einstein_block(pe)
    if command == "pre-einstein":
        return _finish(report, clock, flags)

    with _stage(clock, "ricci"):
        report.ricci = _ricci_block(pe)
    if command == "ricci":
        return _finish(report, clock, flags)

    if command == "certify":
        if flags.certificate is None:
            raise core.MalformedCertificate("no certificate given")
        cert = check.load_certificate(flags.certificate)
        with _stage(clock, "certify"):
            failures = check.certificate_failures(cert, pe.mu, pe)
        if failures:
            raise core.MalformedCertificate(
                "certificate failed verification: " + "; ".join(failures)
            )
        return _conclude(report, cert, clock, flags)

    pb = stability.p_basis(pe)

    if command == "criterion":
        with _stage(clock, "criterion"):
            report.criterion = criterion.criterion_verdict(pe.mu, pe)
        cert = _exterior(pe, report.criterion)
        if flags.search and not pe.simple_spectrum:
            with _stage(clock, "search"):
                result = _search(pe, flags, flags.search)
            report.search = result.model_dump(by_alias=True, exclude={"certificate"})
            cert = _accept(result.certificate, pe, "search")
        return _conclude(report, cert, clock, flags)

    if command == "flow":
        with _stage(clock, "flow"):
            report.flow, _, cert = _flow(pe, pb, flags)
        return _conclude(report, cert, clock, flags)

    # Full report.
    with _stage(clock, "obstructions"):
        found = _obstructions(pe, pb)
    report.obstructions = {k: v is not None for k, v in found.items()}
    cert = next((v for v in found.values() if v is not None), None)
    if cert is not None:
        return _conclude(report, cert, clock, flags)

    with _stage(clock, "criterion"):
        report.criterion = criterion.criterion_verdict(pe.mu, pe)
    cert = _exterior(pe, report.criterion)
    if cert is not None:
        return _conclude(report, cert, clock, flags)
    if not pe.simple_spectrum:
        budget = DEFAULT_SEARCH if flags.search is None else flags.search
        if budget > 0:
            with _stage(clock, "search"):
                result = _search(pe, flags, budget)
            report.search = result.model_dump(by_alias=True, exclude={"certificate"})
            cert = _accept(result.certificate, pe, "search")
            if cert is not None:
                return _conclude(report, cert, clock, flags)

    with _stage(clock, "flow"):
        report.flow, _, cert = _flow(pe, pb, flags)
    return _conclude(report, cert, clock, flags)


def _conclude(report: RunReport, cert, clock, flags) -> RunReport:
    report.certificate = cert
    if cert is None:
        report.verdict = "inconclusive"
    elif cert.kind == "soliton":
        report.verdict = "soliton-found"
        report.verdict_kind = "soliton"
    else:
        report.verdict = "no-soliton"
        report.verdict_kind = cert.kind
    return _finish(report, clock, flags)


def _finish(report: RunReport, clock, flags) -> RunReport:
    report._elapsed = {k: float(v) for k, v in clock.items()}
    if flags.timings:
        report.timings = report.elapsed
    internal.logger.debug("Finished pipeline", command=report.command, verdict=report.verdict)
    return report


def summary(report: RunReport) -> str:
    """Short human-readable account of a report for stderr.

    >>> import lie.nilsoliton.corpus as corpus
    >>> print(summary(run_pipeline(corpus.corpus("h3"), "validate")).splitlines()[0])
    nilsoliton validate h3 (dim 3)
    """
    name = report.input.get("name") or report.input["digest"][:12]
    lines = [f"nilsoliton {report.command} {name} (dim {report.input['dim']})"]
    if report.validation is not None:
        v = report.validation
        state = "ok" if v.ok else "rejected: " + v.error["message"]
        lines.append(f"  bracket {state}, step {v.nilpotency_step}, dims {v.series_dims}")
    if report.derivations is not None:
        lines.append(f"  dim Der = {report.derivations['dim']}")
    if report.nu is not None:
        lines.append(
            "  nu = {:.6g} (opposite {:.6g}) at triple {}".format(
                report.nu["nu"], report.nu["nu_opposite"], tuple(report.nu["triple"])
            )
        )
    if report.pre_einstein is not None:
        pe = report.pre_einstein
        pairs = ", ".join(
            f"{e:.6g}x{m}" for e, m in zip(pe["eigenvalues"], pe["multiplicities"])
        )
        lines.append(f"  pre-Einstein eigenvalues {pairs}")
    if report.ricci is not None:
        lines.append(
            "  c = {:.6g}, residual {:.3e} at the start metric".format(
                report.ricci["c"], report.ricci["residual"]
            )
        )
    if report.criterion is not None:
        c = report.criterion
        lines.append(
            "  criterion {} (margin {:.6g}{})".format(
                c.verdict, c.margin, ", definitive" if c.definitive else ""
            )
        )
    if report.search is not None:
        lines.append(
            "  search {} over {} frames, best margin {:.6g}".format(
                report.search["status"], report.search["samples"], report.search["best_margin"]
            )
        )
    if report.flow is not None:
        f = report.flow
        lines.append(f"  flow {f['outcome']} after {f['iterations']} iterations")
    if report.verdict is not None:
        kind = f" ({report.verdict_kind})" if report.verdict_kind else ""
        lines.append(f"  verdict: {report.verdict}{kind}")
    if report.elapsed:
        lines.append(
            "  time: " + ", ".join(f"{k} {v:.3f}s" for k, v in report.elapsed.items())
        )
    return "\n".join(lines)
