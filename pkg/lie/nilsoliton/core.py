"""
Module for core classes. The rule is that core should only contain classes, and
each class should have doctests showing how it is used.

The two value classes used everywhere are :obj:`StructureTensor`, the bracket of a
nilpotent Lie algebra stored by its structure constants, and :obj:`FrameChange`,
an invertible matrix with its cached inverse acting on brackets.

All errors raised by the package derive from :obj:`NilsolitonError`, which is a
:obj:`ValueError` so the command line catches them like any other input problem.

"""

import numpy as np
import scipy as sp
from tqdm import tqdm
from typing import Dict, List, Tuple, Optional, Callable, Any
from pydantic import BaseModel, ConfigDict

# -----------------------------------------------------------------------------------------
# Errors
# -----------------------------------------------------------------------------------------


class NilsolitonError(ValueError):
    """Base class for all errors raised by nilsoliton.

    Carries a machine-readable ``code`` and the ``module`` that raised it.

    Examples:

        >>> e = NotNilpotent("series stabilizes at dimension 1")
        >>> isinstance(e, ValueError)
        True
        >>> (e.module, e.code)
        ('algebra-core', 'not-nilpotent')
        >>> e.as_dict()['message']
        'series stabilizes at dimension 1'
    """

    code = "error"
    module = "nilsoliton"

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def as_dict(self):
        return {"module": self.module, "code": self.code, "message": self.message}


class JacobiViolation(NilsolitonError):
    code, module = "jacobi-violation", "algebra-core"


class NotNilpotent(NilsolitonError):
    code, module = "not-nilpotent", "algebra-core"


class Commutative(NilsolitonError):
    code, module = "commutative", "algebra-core"


class DimensionMismatch(NilsolitonError):
    code, module = "dimension-mismatch", "algebra-core"


class SingularFrame(NilsolitonError):
    code, module = "singular-frame", "algebra-core"


class RankAmbiguity(NilsolitonError):
    code, module = "rank-ambiguity", "derivations"


class SemisimplicityUnverified(NilsolitonError):
    code, module = "semisimplicity-unverified", "derivations"


class NonDiagonalizable(NilsolitonError):
    code, module = "non-diagonalizable", "derivations"


class DegeneratePhi(NilsolitonError):
    code, module = "degenerate-phi", "stability"


class AsymmetricInput(NilsolitonError):
    code, module = "asymmetric-input", "stability"


class EmptySupport(NilsolitonError):
    code, module = "empty-support", "stability"


class PhiNonzero(NilsolitonError):
    code, module = "phi-nonzero", "stability"


class FrameNotCommuting(NilsolitonError):
    code, module = "frame-not-commuting", "stability"


class OutsideSlice(NilsolitonError):
    code, module = "outside-slice", "kempf-ness"


class Overflow(NilsolitonError):
    code, module = "overflow", "kempf-ness"


class ConfigInvalid(NilsolitonError):
    code, module = "config-invalid", "kempf-ness"


class FrameNotDiagonalizing(NilsolitonError):
    code, module = "frame-not-diagonalizing", "criterion"


class ProjectionMismatch(NilsolitonError):
    code, module = "projection-mismatch", "criterion"


class LPNumericalFailure(NilsolitonError):
    code, module = "lp-numerical-failure", "criterion"


class TestsDisagree(NilsolitonError):
    code, module = "tests-disagree", "criterion"

    # Not a pytest test class.
    __test__ = False


class MalformedCertificate(NilsolitonError):
    code, module = "malformed-certificate", "ricci"


class ParseError(NilsolitonError):
    code, module = "parse-error", "cli"


class IndexOutOfRange(NilsolitonError):
    code, module = "index-out-of-range", "cli"


class DuplicateTriple(NilsolitonError):
    code, module = "duplicate-triple", "cli"


class UnknownName(NilsolitonError):
    code, module = "unknown-name", "cli"


# -----------------------------------------------------------------------------------------
# Tolerances
# -----------------------------------------------------------------------------------------


class Tolerances(BaseModel):
    """Numerical thresholds shared by all modules.

    Every threshold is relative to the natural scale of the quantity it guards,
    e.g. ``eps_mu`` to the largest structure constant.

    Examples:

        >>> tol = Tolerances()
        >>> tol.eps_mu, tol.eps_sol
        (1e-10, 1e-08)
        >>> Tolerances(eps_lp=1e-6).eps_lp
        1e-06
    """

    model_config = ConfigDict(frozen=True)

    eps_mu: float = 1e-10
    eps_jac: float = 1e-9
    eps_inv: float = 1e-8
    eps_der: float = 1e-9
    eps_rank: float = 1e-9
    eps_pe: float = 1e-8
    eps_eig: float = 1e-7
    eps_cert: float = 1e-7
    eps_sol: float = 1e-8
    eps_lp: float = 1e-9
    kappa_max: float = 1e8
    fallback_samples: int = 32


# -----------------------------------------------------------------------------------------
# Structure constants
# -----------------------------------------------------------------------------------------


class StructureTensor:
    """The bracket μ of an n-dimensional algebra as structure constants.

    Coefficients are keyed by zero-based ``(i, j, k)`` with ``i < j``, meaning
    μ(e_i, e_j) has component ``c`` along e_k. The skew part is implied. Entries
    below ``eps_mu`` times the largest coefficient are dropped at construction.

    Args:
        dim: The dimension n.
        entries: Map from zero-based (i, j, k) with i < j to the coefficient.
        eps_mu: Relative structural zero threshold.

    Examples:

        The 3-dimensional Heisenberg algebra.

        >>> h3 = StructureTensor(3, {(0, 1, 2): 1.0})
        >>> h3.dim, len(h3)
        (3, 1)
        >>> float(h3.dense()[1, 0, 2])
        -1.0
        >>> h3.norm()
        1.0

        Tiny entries are structural zeros.

        >>> StructureTensor(3, {(0, 1, 2): 1.0, (0, 2, 1): 1e-14}).triples()
        [(0, 1, 2)]

        Storing i > j is an input error.

        >>> StructureTensor(3, {(1, 0, 2): 1.0})
        Traceback (most recent call last):
        ...
        DimensionMismatch: triple (1, 0, 2) must have i < j < 3 and k < 3
    """

    def __init__(
        self, dim: int, entries: Dict[Tuple[int, int, int], float], eps_mu: float = 1e-10
    ):
        self.dim = int(dim)
        if self.dim < 1:
            raise DimensionMismatch(f"dimension must be positive, got {dim}")
        clean = {}
        for (i, j, k), c in entries.items():
            if not (0 <= i < j < self.dim and 0 <= k < self.dim):
                raise DimensionMismatch(
                    f"triple {(i, j, k)} must have i < j < {self.dim} and k < {self.dim}"
                )
            if not np.isfinite(c):
                raise DimensionMismatch(f"coefficient at {(i, j, k)} is not finite")
            clean[(int(i), int(j), int(k))] = float(c)
        cmax = max([abs(c) for c in clean.values()], default=0.0)
        self._entries = {t: c for t, c in clean.items() if abs(c) > eps_mu * cmax}
        self._dense = None

    @classmethod
    def from_dense(cls, array, eps_mu: float = 1e-10, reference: Optional[float] = None):
        """Build from a full (n, n, n) array C[i, j, k] = μ^k_{ij}.

        Only the i < j half is read. With ``reference`` the pruning threshold is
        ``eps_mu * reference`` instead of relative to the largest entry.

        >>> C = np.zeros((3, 3, 3))
        >>> C[0, 1, 2], C[1, 0, 2] = 2.0, -2.0
        >>> StructureTensor.from_dense(C).entries
        {(0, 1, 2): 2.0}
        """
        a = np.asarray(array, dtype=float)
        n = a.shape[0]
        if a.shape != (n, n, n):
            raise DimensionMismatch(f"dense bracket must be (n,n,n), got {a.shape}")
        iu, ju = np.triu_indices(n, 1)
        block = a[iu, ju, :]
        if reference is not None:
            block = np.where(np.abs(block) > eps_mu * reference, block, 0.0)
        entries = {}
        for p, k in zip(*np.nonzero(block)):
            entries[(int(iu[p]), int(ju[p]), int(k))] = float(block[p, k])
        return cls(n, entries, eps_mu=eps_mu)

    @property
    def entries(self) -> Dict[Tuple[int, int, int], float]:
        return dict(self._entries)

    def triples(self) -> List[Tuple[int, int, int]]:
        return sorted(self._entries)

    def __len__(self):
        return len(self._entries)

    def dense(self) -> np.ndarray:
        """Full skew array C with C[i, j, k] = μ^k_{ij} (read-only)."""
        if self._dense is None:
            n = self.dim
            c = np.zeros((n, n, n))
            for (i, j, k), v in self._entries.items():
                c[i, j, k] = v
                c[j, i, k] = -v
            c.setflags(write=False)
            self._dense = c
        return self._dense

    def norm(self) -> float:
        """Norm for the inner product summing over i < j."""
        return float(np.sqrt(sum(v * v for v in self._entries.values())))

    def max_abs(self) -> float:
        return max([abs(v) for v in self._entries.values()], default=0.0)

    def is_zero(self) -> bool:
        return len(self._entries) == 0

    def scaled(self, factor: float):
        return StructureTensor(
            self.dim, {t: factor * v for t, v in self._entries.items()}
        )

    def __repr__(self):
        return f"StructureTensor(dim={self.dim}, entries={len(self)})"


# -----------------------------------------------------------------------------------------
# Frame changes
# -----------------------------------------------------------------------------------------


class FrameChange:
    """An invertible matrix g with its inverse, acting on brackets by ρ(g).

    Args:
        g: The invertible matrix.
        inverse: Optional known inverse, e.g. exp(-A) for g = exp(A).
        eps_inv: Bound on ‖g·g⁻¹ − I‖.

    Examples:

        >>> f = FrameChange(np.diag([2.0, 1.0, 1.0]))
        >>> float(f.inverse[0, 0])
        0.5
        >>> f.error
        0.0
        >>> FrameChange.identity(3).is_orthogonal()
        True

        Singular matrices are rejected.

        >>> FrameChange(np.zeros((2, 2)))
        Traceback (most recent call last):
        ...
        SingularFrame: frame change is singular
    """

    def __init__(self, g, inverse=None, eps_inv: float = 1e-8):
        g = np.array(g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise DimensionMismatch(f"frame change must be square, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise SingularFrame("frame change has non-finite entries")
        if inverse is None:
            try:
                inverse = sp.linalg.inv(g)
            except (np.linalg.LinAlgError, ValueError):
                raise SingularFrame("frame change is singular")
        inverse = np.array(inverse, dtype=float)
        if not np.all(np.isfinite(inverse)):
            raise SingularFrame("frame change is singular")
        n = g.shape[0]
        self.error = float(np.linalg.norm(g @ inverse - np.eye(n)))
        if self.error > eps_inv:
            raise SingularFrame(
                f"frame change is ill-conditioned, ‖g·g⁻¹ − I‖ = {self.error:.3e}"
            )
        g.setflags(write=False)
        inverse.setflags(write=False)
        self.g = g
        self.inverse = inverse

    @classmethod
    def identity(cls, n: int):
        return cls(np.eye(n), np.eye(n))

    @classmethod
    def exp(cls, a, eps_inv: float = 1e-8):
        """g = exp(A) with inverse exp(−A).

        >>> f = FrameChange.exp(np.diag([1.0, -1.0, 0.0]))
        >>> bool(np.isclose(f.g[0, 0] * f.g[1, 1], 1.0))
        True
        """
        a = np.asarray(a, dtype=float)
        return cls(sp.linalg.expm(a), sp.linalg.expm(-a), eps_inv=eps_inv)

    @property
    def dim(self):
        return self.g.shape[0]

    def compose(self, other):
        """Frame change self·other."""
        return FrameChange(self.g @ other.g, other.inverse @ self.inverse)

    def is_orthogonal(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.norm(self.g.T @ self.g - np.eye(self.dim)) <= tol)

    def condition(self) -> float:
        return float(np.linalg.norm(self.g, 2) * np.linalg.norm(self.inverse, 2))


# -----------------------------------------------------------------------------------------
# Parallel execution
# -----------------------------------------------------------------------------------------


class WorkerPool:
    """Maps a function over tasks with threads, keeping task order.

    Args:
        max_workers: Number of parallel workers to use.
        progress_bar: If progress bar output should be enabled--it can be useful to
            disable for tests and other non-interactive use cases.

    Examples:

        >>> pool = WorkerPool(max_workers=3, progress_bar=False)
        >>> pool.map(lambda x: x * x, [3, 1, 2])
        [9, 1, 4]

    With ``max_workers=1`` the tasks run inline in order, which keeps single-threaded
    runs free of thread start-up.
    """

    def __init__(self, max_workers: int = 1, progress_bar: bool = False):
        self.max_workers = max(1, int(max_workers))
        self.progress_bar = progress_bar

    def map(self, fn: Callable[[Any], Any], tasks: List[Any]) -> List[Any]:
        """Run every task through fn.

        Args:
            fn: Function of one task.
            tasks: The task list.

        Returns:
            List of results, results[i] = fn(tasks[i]).
        """
        import concurrent.futures

        results = [None] * len(tasks)
        with tqdm(total=len(tasks), disable=not self.progress_bar) as pbar:
            if self.max_workers == 1:
                for i, task in enumerate(tasks):
                    results[i] = fn(task)
                    pbar.update(1)
                return results
            with concurrent.futures.ThreadPoolExecutor(
                max_workers=self.max_workers
            ) as executor:
                submits = {executor.submit(fn, task): i for i, task in enumerate(tasks)}
                for future in concurrent.futures.as_completed(submits):
                    results[submits[future]] = future.result()
                    pbar.update(1)
        return results
