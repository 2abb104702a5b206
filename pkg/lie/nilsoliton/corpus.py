"""
Module for the built-in algebras.

    - ``h3``, ``h5``, ..., ``h13``: Heisenberg algebras h(2k+1) with
      μ(e_{2a−1}, e_{2a}) = e_{2k+1}
    - ``n4``: μ(e_1, e_2) = e_3, μ(e_1, e_3) = e_4
    - ``L3``, ..., ``L9``: filiform algebras with μ(e_1, e_i) = e_{i+1}, 2 ≤ i ≤ n−1
      (``L3`` is h3 and ``L4`` is n4)
    - ``free23``: free 2-step nilpotent on three generators

"""
__all__ = [
    "corpus",
    "corpus_names",
]

from typing import List
import lie.nilsoliton.core as core
import lie.nilsoliton.document as document


def _heisenberg(k: int):
    n = 2 * k + 1
    return n, [(2 * a + 1, 2 * a + 2, n) for a in range(k)]


def _filiform(n: int):
    return n, [(1, i, i + 1) for i in range(2, n)]


def _builders():
    table = {}
    for k in range(1, 7):
        table[f"h{2 * k + 1}"] = (_heisenberg, k, "Heisenberg")
    table["n4"] = (_filiform, 4, "4-dimensional filiform")
    for n in range(3, 10):
        table[f"L{n}"] = (_filiform, n, "standard graded filiform")
    table["free23"] = (lambda _: (6, [(1, 2, 4), (1, 3, 5), (2, 3, 6)]), 0, "free 2-step")
    return table


_TABLE = _builders()


def corpus_names() -> List[str]:
    """Names of the built-in algebras, ordered by dimension.

    >>> corpus_names()[:4]
    ['h3', 'L3', 'n4', 'L4']
    """
    dims = {name: build(arg)[0] for name, (build, arg, _) in _TABLE.items()}
    return sorted(_TABLE, key=lambda name: (dims[name], list(_TABLE).index(name)))


def corpus(name: str) -> document.AlgebraDocument:
    """The algebra document for a built-in name.

    Examples:

        >>> [(b.i, b.j, b.k) for b in corpus("L5").brackets]
        [(1, 2, 3), (1, 3, 4), (1, 4, 5)]
        >>> corpus("free23").dim
        6
        >>> corpus("g2")
        Traceback (most recent call last):
        ...
        UnknownName: unknown algebra g2
    """
    if name not in _TABLE:
        raise core.UnknownName(f"unknown algebra {name}")
    build, arg, family = _TABLE[name]
    n, triples = build(arg)
    return document.AlgebraDocument(
        dim=n,
        brackets=[document.Bracket(i=i, j=j, k=k, c=1.0) for i, j, k in triples],
        name=name,
        metadata={"family": family},
    )
