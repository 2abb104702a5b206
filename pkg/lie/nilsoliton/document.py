"""
Module for the JSON documents read and written by the command line.

An algebra document lists the nonzero structure constants with one-based indices,

.. code:: json

    {"dim": 3, "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}], "name": "h3"}

meaning μ(e_1, e_2) = 1.0·e_3. A lambda document holds a symmetric matrix,

.. code:: json

    {"dim": 2, "rows": [[1.0, 0.0], [0.0, -1.0]]}

"""
__all__ = [
    "Bracket",
    "AlgebraDocument",
    "LambdaDocument",
    "parse_algebra",
    "parse_lambda",
    "render_algebra",
    "to_structure_tensor",
    "from_structure_tensor",
]

import json
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, StrictInt, ValidationError
from typing import Any, Dict, List, Optional
import lie.nilsoliton.core as core
import lie.nilsoliton.algebra as algebra
import lie.nilsoliton.internal as internal


class Bracket(BaseModel):
    model_config = ConfigDict(extra="forbid")

    i: StrictInt
    j: StrictInt
    k: StrictInt
    c: float


class AlgebraDocument(BaseModel):
    """A nilpotent Lie algebra by its structure constants.

    Unknown top-level fields are dropped with a warning, kept in ``warnings``.
    """

    model_config = ConfigDict(extra="ignore")

    dim: StrictInt = Field(ge=1)
    brackets: List[Bracket]
    name: Optional[str] = None
    metadata: Dict[str, Any] = {}

    _warnings: List[str] = PrivateAttr(default_factory=list)

    @property
    def warnings(self) -> List[str]:
        return list(self._warnings)


class LambdaDocument(BaseModel):
    """A symmetric endomorphism given by its rows."""

    model_config = ConfigDict(extra="forbid")

    dim: StrictInt = Field(ge=1)
    rows: List[List[float]]

    def matrix(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)


def _decode(text, error=core.ParseError):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise error(
            f"line {err.lineno} column {err.colno}: {err.msg}", line=err.lineno
        )


def _validation_message(ve: ValidationError) -> str:
    first = ve.errors()[0]
    where = ".".join(str(x) for x in first["loc"]) or "document"
    return f"{where}: {first['msg']}"


def parse_algebra(text) -> AlgebraDocument:
    """Strictly parse an algebra document.

    Examples:

        >>> doc = parse_algebra('{"dim": 3, "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}]}')
        >>> doc.dim, doc.brackets[0].k
        (3, 3)

        >>> parse_algebra('{"dim": 3, "brackets": [{"i": 2, "j": 1, "k": 3, "c": 1.0}]}')
        Traceback (most recent call last):
        ...
        ParseError: brackets.0: i < j is required, got i=2 j=1

        >>> parse_algebra('{"dim": 3, "brackets": [{"i": 1, "j": 2, "k": 4, "c": 1.0}]}')
        Traceback (most recent call last):
        ...
        IndexOutOfRange: brackets.0: index 4 outside 1..3

        >>> doc = parse_algebra('{"dim": 2, "brackets": [], "colour": "blue"}')
        >>> doc.warnings
        ['unknown field colour']
    """
    data = _decode(text)
    if not isinstance(data, dict):
        raise core.ParseError("document must be a JSON object")
    try:
        doc = AlgebraDocument.model_validate(data)
    except ValidationError as ve:
        raise core.ParseError(_validation_message(ve))

    known = set(AlgebraDocument.model_fields)
    for key in sorted(data):
        if key not in known:
            doc._warnings.append(f"unknown field {key}")
    if doc.warnings:
        internal.logger.warning("Ignoring unknown fields", fields=doc.warnings)

    seen = set()
    for p, b in enumerate(doc.brackets):
        if not b.i < b.j:
            raise core.ParseError(f"brackets.{p}: i < j is required, got i={b.i} j={b.j}")
        for x in (b.i, b.j, b.k):
            if not 1 <= x <= doc.dim:
                raise core.IndexOutOfRange(f"brackets.{p}: index {x} outside 1..{doc.dim}")
        key = (b.i, b.j, b.k)
        if key in seen:
            raise core.DuplicateTriple(f"brackets.{p}: triple {key} appears twice")
        seen.add(key)
        if not np.isfinite(b.c):
            raise core.ParseError(f"brackets.{p}: coefficient is not finite")
    return doc


def parse_lambda(text) -> LambdaDocument:
    """Parse a lambda document and check that the matrix is square and symmetric.

    >>> parse_lambda('{"dim": 2, "rows": [[1, 2], [2, 0]]}').matrix().tolist()
    [[1.0, 2.0], [2.0, 0.0]]
    >>> parse_lambda('{"dim": 2, "rows": [[1, 2], [0, 0]]}')
    Traceback (most recent call last):
    ...
    AsymmetricInput: lambda matrix is not symmetric
    """
    data = _decode(text)
    try:
        doc = LambdaDocument.model_validate(data)
    except ValidationError as ve:
        raise core.ParseError(_validation_message(ve))
    if len(doc.rows) != doc.dim or any(len(r) != doc.dim for r in doc.rows):
        raise core.ParseError(f"rows must form a {doc.dim}x{doc.dim} matrix")
    if not algebra.is_symmetric(doc.matrix(), 1e-12):
        raise core.AsymmetricInput("lambda matrix is not symmetric")
    return doc


def render_algebra(doc: AlgebraDocument) -> str:
    """Canonical JSON text, so parse_algebra(render_algebra(doc)) == doc."""
    return json.dumps(doc.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"


def to_structure_tensor(doc: AlgebraDocument, tol=None) -> core.StructureTensor:
    """The zero-based :obj:`lie.nilsoliton.core.StructureTensor` of a document.

    >>> doc = parse_algebra('{"dim": 3, "brackets": [{"i": 1, "j": 2, "k": 3, "c": 1.0}]}')
    >>> to_structure_tensor(doc).entries
    {(0, 1, 2): 1.0}
    """
    tol = algebra._tolerances(tol)
    return core.StructureTensor(
        doc.dim,
        {(b.i - 1, b.j - 1, b.k - 1): b.c for b in doc.brackets},
        eps_mu=tol.eps_mu,
    )


def from_structure_tensor(
    mu: core.StructureTensor, name: Optional[str] = None, metadata=None
) -> AlgebraDocument:
    return AlgebraDocument(
        dim=mu.dim,
        brackets=[
            Bracket(i=i + 1, j=j + 1, k=k + 1, c=c) for (i, j, k), c in sorted(mu.entries.items())
        ],
        name=name,
        metadata={} if metadata is None else dict(metadata),
    )
