"""Standard-form cone programs and solver outcomes.

Problems are ``minimize c @ x  s.t.  A @ x + s = b,  s in K`` where ``K`` is
a nonnegative orthant of dimension ``l`` followed by second-order cones
``{(t, z) : ||z|| <= t}`` of dimensions ``soc``. The dual is
``maximize -b @ y  s.t.  A.T @ y + c = 0,  y in K``.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field

import numpy as np

from robust_slp.errors import MalformedProblemError


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    PRIMAL_INFEASIBLE = "PrimalInfeasible"
    DUAL_INFEASIBLE = "DualInfeasible"
    ITER_LIMIT = "IterLimit"


@dataclass(frozen=True)
class ConicProblem:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    l: int = 0
    soc: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        A = np.asarray(self.A, dtype=float).reshape(len(b), len(c))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "soc", tuple(int(q) for q in self.soc))
        if self.l < 0:
            raise MalformedProblemError(f"orthant dimension must be >= 0, got {self.l}")
        if any(q < 2 for q in self.soc):
            raise MalformedProblemError(f"SOC dimensions must be >= 2, got {self.soc}")
        if self.l + sum(self.soc) != len(b):
            raise MalformedProblemError(
                f"cone dimensions sum to {self.l + sum(self.soc)} but b has {len(b)} rows"
            )
        for name, arr in (("c", c), ("A", A), ("b", b)):
            if not np.all(np.isfinite(arr)):
                raise MalformedProblemError(f"{name} has non-finite entries")

    @property
    def n(self) -> int:
        return len(self.c)

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def layout(self):
        from robust_slp.socp.cones import ConeLayout

        return ConeLayout.from_dims(self.l, self.soc)

    def cone_slices(self):
        """Slices of the SOC blocks within an ``m``-vector."""
        out, start = [], self.l
        for q in self.soc:
            out.append(slice(start, start + q))
            start += q
        return out

    def dumps(self) -> str:
        """Self-describing text dump with 17 significant digits."""
        buf = io.StringIO()
        buf.write("# conic problem: minimize c'x s.t. Ax + s = b, s in K\n")
        buf.write(f"n {self.n}\nm {self.m}\nl {self.l}\n")
        buf.write("soc " + " ".join(str(q) for q in self.soc) + "\n")
        buf.write("c\n" + _fmt_row(self.c) + "\n")
        buf.write("b\n" + _fmt_row(self.b) + "\n")
        buf.write("A\n")
        for row in self.A:
            buf.write(_fmt_row(row) + "\n")
        return buf.getvalue()

    def dump(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ConicProblem":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        head = {}
        i = 0
        while lines[i] not in ("c",):
            key, *vals = lines[i].split()
            head[key] = [int(v) for v in vals]
            i += 1
        n, m = head["n"][0], head["m"][0]
        c = _parse_row(lines[i + 1], n)
        b = _parse_row(lines[i + 3], m)
        rows = [_parse_row(ln, n) for ln in lines[i + 5 : i + 5 + m]]
        A = np.array(rows).reshape(m, n)
        return cls(c=c, A=A, b=b, l=head["l"][0], soc=tuple(head.get("soc", [])))

    @classmethod
    def load(cls, path) -> "ConicProblem":
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _fmt_row(v):
    return " ".join(f"{x:.17g}" for x in v)


def _parse_row(line, n):
    vals = [float(x) for x in line.split()] if n else []
    if len(vals) != n:
        raise MalformedProblemError(f"expected {n} numbers, got {len(vals)}")
    return np.array(vals)


@dataclass(frozen=True)
class SolverSettings:
    """Termination and algorithm parameters.

    ``max_iterations`` bounds the operator-splitting iterations; the
    interior-point method stops after ``ipm_max_iterations``.
    """

    algorithm: str = "ipm"
    max_iterations: int = 50_000
    ipm_max_iterations: int = 100
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    infeas_tol: float = 1e-7
    step_fraction: float = 0.99
    relaxation: float = 1.5
    check_every: int = 10
    infeas_confirmations: int = 10

    def __post_init__(self):
        for name in ("abs_tol", "rel_tol", "infeas_tol"):
            if not getattr(self, name) > 0:
                raise MalformedProblemError(f"{name} must be positive")
        if self.algorithm not in ("ipm", "admm"):
            raise MalformedProblemError(f"unknown algorithm {self.algorithm!r}")


@dataclass
class SolveResult:
    status: Status
    x: np.ndarray | None = None
    s: np.ndarray | None = None
    y: np.ndarray | None = None
    objective: float = float("nan")
    dual_objective: float = float("nan")
    certificate: np.ndarray | None = None
    iterations: int = 0
    residuals: dict = field(default_factory=dict)
    solve_time: float = 0.0
    algorithm: str = ""

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL
