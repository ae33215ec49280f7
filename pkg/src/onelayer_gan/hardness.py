"""3SAT as a ReLU-bilinear min-max problem, decided by exhaustive search.

For clause matrix ``A`` (one row per clause, +1/-1 per positive/negated
literal) the objective is

    f(x, y) = relu(-A x - 2)^T y1
            + (sum_i relu(x_i) + relu(-x_i) - d) * y2
            + relu(x - 1)^T y3 + relu(-x - 1)^T y4

Every group is linear in y, so a stationary point exists iff some x zeroes
all four groups at once: the box groups force ``x in [-1, 1]^d``, the
counting group then forces ``|x_i| = 1``, and a sign vector zeroes the
clause group iff ``a_i^T x >= -2``, i.e. no clause has all three literals
false.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_BRUTEFORCE_VARS = 24
MIN_CLAUSES = 4


def _relu(x):
    return np.maximum(x, 0.0)


@dataclass(frozen=True)
class Sat3Instance:
    """Clauses as triples of non-zero DIMACS literals (``-3`` is ``not x3``)."""

    num_vars: int
    clauses: tuple

    def __post_init__(self):
        if self.num_vars < 1:
            raise ValueError("need at least one variable")
        clauses = tuple(tuple(int(l) for l in c) for c in self.clauses)
        if len(clauses) < MIN_CLAUSES:
            raise ValueError(f"need at least {MIN_CLAUSES} clauses, got {len(clauses)}")
        for c in clauses:
            if len(c) != 3:
                raise ValueError(f"clause {c} does not have exactly 3 literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} out of range 1..{self.num_vars}")
        object.__setattr__(self, "clauses", clauses)

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    @classmethod
    def random(cls, num_vars: int, num_clauses: int, rng: np.random.Generator) -> "Sat3Instance":
        """Variables drawn with replacement, so repeated and clashing literals occur."""
        v = rng.integers(1, num_vars + 1, size=(num_clauses, 3))
        s = rng.choice(np.array([-1, 1]), size=(num_clauses, 3))
        return cls(num_vars, tuple(tuple(int(a) for a in row) for row in v * s))

    def satisfied_by(self, x) -> bool:
        """``x`` in ``{-1, +1}^d`` with +1 meaning true."""
        x = np.asarray(x)
        return all(any((x[abs(l) - 1] > 0) == (l > 0) for l in c) for c in self.clauses)

    def to_dimacs(self) -> str:
        lines = [f"p cnf {self.num_vars} {self.num_clauses}"]
        lines += [" ".join(str(l) for l in c) + " 0" for c in self.clauses]
        return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> Sat3Instance:
    """Parse DIMACS CNF; clauses may span lines and must have 3 literals each."""
    num_vars = None
    declared = None
    lits: list[int] = []
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("%"):
            break
        if line.startswith("p"):
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise ValueError(f"line {lineno}: malformed problem line {line!r}")
            num_vars, declared = int(parts[2]), int(parts[3])
            continue
        if num_vars is None:
            raise ValueError(f"line {lineno}: clause before the problem line")
        for tok in line.split():
            try:
                lit = int(tok)
            except ValueError:
                raise ValueError(f"line {lineno}: bad literal {tok!r}") from None
            if lit == 0:
                clauses.append(tuple(lits))
                lits = []
            else:
                lits.append(lit)
    if lits:
        clauses.append(tuple(lits))
    if num_vars is None:
        raise ValueError("missing 'p cnf' problem line")
    if declared is not None and declared != len(clauses):
        raise ValueError(f"problem line declares {declared} clauses, found {len(clauses)}")
    return Sat3Instance(num_vars, tuple(clauses))


@dataclass(frozen=True)
class MinMaxForm:
    """Clause matrix plus the layout of the stacked dual vector ``y``."""

    A: np.ndarray
    d: int

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def y_dim(self) -> int:
        return self.m + 1 + 2 * self.d

    def split_y(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.y_dim,):
            raise ValueError(f"y must have length {self.y_dim}")
        m, d = self.m, self.d
        return y[:m], y[m], y[m + 1 : m + 1 + d], y[m + 1 + d :]


def build_minmax(sat: Sat3Instance) -> MinMaxForm:
    """Clause row ``i`` gets +1 at positive and -1 at negated literals.

    A literal repeated within a clause adds up (``x1 v x1 v x1`` gives a
    row with 3 in column 1), which keeps ``a_i^T x = -3`` exactly when the
    clause is false. A clause containing both ``x`` and ``not x`` cancels to
    a row that never reaches -3.
    """
    A = np.zeros((sat.num_clauses, sat.num_vars))
    for i, c in enumerate(sat.clauses):
        for lit in c:
            A[i, abs(lit) - 1] += 1.0 if lit > 0 else -1.0
    return MinMaxForm(A, sat.num_vars)


def term_groups(form: MinMaxForm, x):
    """The four vectors multiplying ``y1, y2, y3, y4``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (form.d,):
        raise ValueError(f"x must have length {form.d}")
    clause = _relu(-form.A @ x - 2.0)
    count = float(np.sum(_relu(x) + _relu(-x)) - form.d)
    return clause, count, _relu(x - 1.0), _relu(-x - 1.0)


def eval_form(form: MinMaxForm, x, y) -> float:
    y1, y2, y3, y4 = form.split_y(y)
    c, n, up, lo = term_groups(form, x)
    return float(c @ y1 + n * y2 + up @ y3 + lo @ y4)


def form_gradients(form: MinMaxForm, x, y):
    """``(grad_x, grad_y)`` with ReLU slope 0 at kinks."""
    x = np.asarray(x, dtype=float)
    y1, y2, y3, y4 = form.split_y(y)
    c, n, up, lo = term_groups(form, x)
    step = lambda u: (u > 0).astype(float)
    gx = (
        -form.A.T @ (step(-form.A @ x - 2.0) * y1)
        + y2 * (step(x) - step(-x))
        + step(x - 1.0) * y3
        - step(-x - 1.0) * y4
    )
    gy = np.concatenate([c, [n], up, lo])
    return gx, gy


def find_zeroing_assignment(form: MinMaxForm, chunk: int = 1 << 16):
    """First ``x in {-1, +1}^d`` (lexicographic in bits) zeroing every group, else ``None``."""
    d = form.d
    if d > MAX_BRUTEFORCE_VARS:
        raise ValueError(f"exhaustive search over 2^{d} points exceeds the 2^{MAX_BRUTEFORCE_VARS} budget")
    total = 1 << d
    bits = np.arange(d, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        X = (((idx[:, None] >> bits) & 1) * 2 - 1).astype(float)
        # box and counting groups vanish on sign vectors; only clauses remain
        ok = np.all(X @ form.A.T >= -2.0, axis=1)
        hit = np.flatnonzero(ok)
        if hit.size:
            return X[hit[0]]
    return None


def stationary_exists_bruteforce(form: MinMaxForm) -> bool:
    """True iff some sign vector zeroes all term groups (stationary at ``y = 0``)."""
    return find_zeroing_assignment(form) is not None


def grid_zeroing_points(form: MinMaxForm, levels=(-1.0, -0.5, 0.0, 0.5, 1.0)):
    """All points of ``levels^d`` zeroing every group; used to check that only sign vectors do."""
    out = []
    for x in itertools.product(levels, repeat=form.d):
        c, n, up, lo = term_groups(form, np.array(x))
        if not c.any() and n == 0 and not up.any() and not lo.any():
            out.append(np.array(x))
    return out
