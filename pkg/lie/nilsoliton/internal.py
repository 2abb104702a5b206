"""
This :obj:`lie.nilsoliton.internal` module contains functions called from the click-based
command line interface. This is so __main__ contains little logic. There should be no
click dependence here--it should all be in __main__.

------------------------------------------------------------------------------------------
"""

import json
import logging
import os
import sys
from pathlib import Path

import structlog
import lie.nilsoliton.core as core

structlog.configure(
    wrapper_class=structlog.make_filtering_bound_logger(
        int(os.environ.get("NILSOLITON_LOG_LEVEL", logging.INFO))
    ),
    logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
)

logger = structlog.get_logger(__name__)


# This is special for the docstring copier below.
from functools import wraps
from typing import Callable, TypeVar, Any, Optional
from typing_extensions import ParamSpec

T = TypeVar("T")
P = ParamSpec("P")


def copy_doc(
    copy_func: Callable[..., Any]
) -> Callable[[Callable[P, T]], Callable[P, T]]:
    r"""Prepends the docstring from another function. This function is intended to
    be used as a decorator.

    Args:
        copy_func (Callable[..., Any]): The function whose docstring should be copied.

    Returns:
        Callable[[Callable[P, T]], Callable[P, T]]: The decorator function.

    Examples:

        Define a function with a docstring.

        >>> def some():
        ...    '''Summary for the command line.\f Details for the API docs.'''
        ...    return None

        Copy the part before the form feed to the pig function.

        >>> @copy_doc(some)
        ... def pig():
        ...    return None

        >>> pig.__doc__
        'Summary for the command line.'

    """

    def decorator(func: Callable[P, T]) -> Callable[P, T]:
        @wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> T:
            return func(*args, **kwargs)

        # Anything after \f is dropped as per click rules, so the command line help
        # and the HTML docs for the CLI are the same. The API docs use the local
        # docstrings and keep everything.
        s = copy_func.__doc__
        if not s:
            raise ValueError(
                "@copy_doc({}) will not work because it has an empty docstring!".format(
                    copy_func.__name__
                )
            )
        i = s.find("\f")
        if i >= 0:
            s = s[0:i]
        wrapper.__doc__ = s
        return wrapper

    return decorator


VERSION = "0.1.0"

# -----------------------------------------------------------------------------------------
# Commands
# -----------------------------------------------------------------------------------------


def _read_text(source: str) -> str:
    if source == "-":
        return sys.stdin.read()
    try:
        return Path(source).read_text(encoding="utf-8")
    except UnicodeDecodeError as err:
        raise core.ParseError(f"{source} is not UTF-8 text: {err.reason}")
    except OSError as err:
        raise core.ParseError(f"cannot read {source}: {err.strerror}")


def load_algebra(source: str):
    """Read an algebra document from a path, ``-`` for stdin, or ``corpus:NAME``."""
    import lie.nilsoliton.document as document
    import lie.nilsoliton.corpus as corpus

    if source.startswith("corpus:"):
        return corpus.corpus(source[len("corpus:") :])
    doc = document.parse_algebra(_read_text(source))
    logger.debug("Loaded algebra", source=source, dim=doc.dim, brackets=len(doc.brackets))
    return doc


def flow_config(config: Optional[str] = None, **overrides):
    """Build a FlowConfig from an optional JSON file and command line overrides.

    Overrides that are None are ignored.
    """
    import lie.nilsoliton.kempf_ness as kempf_ness

    data = {}
    if config:
        try:
            data = json.loads(_read_text(config))
        except json.JSONDecodeError as err:
            raise core.ConfigInvalid(f"{config} line {err.lineno}: {err.msg}")
        if not isinstance(data, dict):
            raise core.ConfigInvalid(f"{config} must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return kempf_ness.FlowConfig.create(**data)


def error_document(err: ValueError) -> str:
    """The JSON printed to stdout for a failed command."""
    if hasattr(err, "as_dict"):
        body = err.as_dict()
    else:
        body = {"module": "cli", "code": "error", "message": str(err)}
    return json.dumps({"error": body}, indent=2)


def analyze(
    command: str,
    input_file: str,
    seed: int = 0,
    search: Optional[int] = None,
    nprocs: int = 1,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    config: Optional[str] = None,
    lambda_file: Optional[str] = None,
    certificate_file: Optional[str] = None,
    quiet: bool = False,
    timings: bool = False,
):
    """Run an analysis of a nilpotent Lie algebra and print its report.
    \f
    The report JSON goes to stdout and a short summary to stderr.

    Args:
        command: Pipeline to run, one of :obj:`lie.nilsoliton.report.COMMANDS`.

        input_file: Algebra document path, ``-`` for stdin or ``corpus:NAME``.

        seed: Seed for every randomized step.

        search: Number of frames sampled by the criterion search.

        nprocs: Parallel workers for the search.

        max_iter: Flow iteration limit, overriding the config file.

        tol: Flow gradient tolerance, overriding the config file.

        config: Flow configuration JSON file.

        lambda_file: Lambda document for ``nu``.

        certificate_file: Certificate or report JSON for ``certify``.

        quiet: Suppress the summary.

        timings: Include wall-times in the report.

    Returns:
        The exit code: 0 soliton found or nothing to decide, 10 no soliton,
        20 inconclusive, 1 rejected input.

    """
    import lie.nilsoliton.document as document
    import lie.nilsoliton.report as report

    doc = load_algebra(input_file)
    flags = report.PipelineFlags(
        seed=seed,
        search=search,
        nprocs=nprocs,
        flow=flow_config(config, max_iter=max_iter, grad_tol=tol, seed=seed),
        timings=timings,
        progress_bar=not quiet and nprocs > 1,
    )
    if lambda_file:
        lam = document.parse_lambda(_read_text(lambda_file))
        if lam.dim != doc.dim:
            raise core.DimensionMismatch(f"lambda of dim {lam.dim} for algebra of dim {doc.dim}")
        flags.lam = lam.rows
    if certificate_file:
        flags.certificate = _read_text(certificate_file)

    logger.info("Running pipeline", command=command, input=input_file, seed=seed)
    result = report.run_pipeline(doc, command, flags)
    sys.stdout.write(result.to_json())
    if not quiet:
        print(report.summary(result), file=sys.stderr)
    return result.exit_code()


def corpus(name: Optional[str] = None, list_: bool = False):
    """Print a built-in algebra document, or list the built-in names.
    \f
    Args:
        name: Built-in name such as ``h3``, ``n4``, ``L5`` or ``free23``.

        list\\_: Just list the names.

    """
    import lie.nilsoliton.corpus as corpus_
    import lie.nilsoliton.document as document

    if list_ or not name:
        for n in corpus_.corpus_names():
            print(n)
        return
    sys.stdout.write(document.render_algebra(corpus_.corpus(name)))


def schema(name: str):
    """Print the JSON schema of a document type.
    \f
    Args:
        name: One of ``algebra``, ``lambda``, ``flow-config``, ``certificate`` or
            ``report``.

    """
    import lie.nilsoliton.document as document
    import lie.nilsoliton.kempf_ness as kempf_ness
    import lie.nilsoliton.check as check
    import lie.nilsoliton.report as report

    models = {
        "algebra": document.AlgebraDocument.model_json_schema,
        "lambda": document.LambdaDocument.model_json_schema,
        "flow-config": kempf_ness.FlowConfig.model_json_schema,
        "certificate": lambda: check._adapter.json_schema(by_alias=True),
        "report": lambda: report.RunReport.model_json_schema(by_alias=True),
    }
    if name not in models:
        raise core.UnknownName(f"unknown schema {name}, expected one of {sorted(models)}")
    print(json.dumps(models[name](), indent=2, sort_keys=True))
