"""Standard-form semidefinite programming layer.

A ConicProgram is a linear objective over block variables (PSD matrices,
nonnegative vectors, free vectors) with linear equality/inequality
constraints whose coefficients are dense tables over block entries.
Complex Hermitian data enters through `embed_hermitian`; the program
itself is purely real.

Solving is delegated to the Clarabel interior-point solver behind the
SolveReport contract: certified optima with duality gap and feasibility
residuals, and improving-ray certificates for infeasible or unbounded
programs. Downstream code depends only on this contract.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import clarabel
import numpy as np
from scipy import sparse

_SQRT2 = np.sqrt(2.0)

DEFAULT_TOL = 1e-8


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass(frozen=True)
class PsdBlock:
    """Real symmetric positive semidefinite matrix variable of order n."""

    n: int


@dataclass(frozen=True)
class NonnegBlock:
    """Elementwise nonnegative vector variable of length n."""

    n: int


@dataclass(frozen=True)
class FreeBlock:
    """Unconstrained vector variable of length n."""

    n: int


Block = PsdBlock | NonnegBlock | FreeBlock

#: One addend of a linear functional: (block index, dense coefficient table).
#: For a PsdBlock the table is (n, n) and means sum_{r,c} coef[r,c]*X[r,c]
#: (equal to tr(coef @ X) since X is symmetric); for vector blocks it is
#: (n,) and means coef . x.
Term = tuple[int, np.ndarray]


@dataclass
class Constraint:
    terms: list[Term]
    sense: str  # "==", "<=" or ">="
    rhs: float


@dataclass
class ConicProgram:
    """Block-structured conic program; immutable once handed to solve()."""

    blocks: list[Block] = field(default_factory=list)
    objective: list[Term] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    maximize: bool = False

    def add_block(self, block: Block) -> int:
        self.blocks.append(block)
        return len(self.blocks) - 1

    def add_constraint(self, terms: list[Term], sense: str, rhs: float) -> None:
        if sense not in ("==", "<=", ">="):
            raise ValueError(f"unknown constraint sense {sense!r}")
        self.constraints.append(Constraint(list(terms), sense, float(rhs)))

    def _check_term(self, block_idx: int, coef: np.ndarray) -> None:
        if not 0 <= block_idx < len(self.blocks):
            raise ValueError(f"term references unknown block {block_idx}")
        block = self.blocks[block_idx]
        want = (block.n, block.n) if isinstance(block, PsdBlock) else (block.n,)
        if np.asarray(coef).shape != want:
            raise ValueError(
                f"coefficient table for block {block_idx} must have shape {want}"
            )

    def validate(self) -> None:
        for block_idx, coef in self.objective:
            self._check_term(block_idx, coef)
        for con in self.constraints:
            if con.sense not in ("==", "<=", ">="):
                raise ValueError(f"unknown constraint sense {con.sense!r}")
            for block_idx, coef in con.terms:
                self._check_term(block_idx, coef)


@dataclass
class SolveReport:
    """Certified solver outcome for one ConicProgram."""

    status: SolveStatus
    primal_objective: float
    dual_objective: float
    gap: float
    iterations: int
    block_values: list[np.ndarray] | None
    certificate: np.ndarray | None
    primal_residual: float
    solve_time: float


# ---------------------------------------------------------------------------
# Complex Hermitian <-> real symmetric embedding


def embed_hermitian(h: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a Hermitian matrix.

    Preserves the PSD cone and doubles the trace; for Hermitian A, B the
    inner-product bridge is Re(tr(A B)) = tr(embed(A) embed(B)) / 2.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("embed_hermitian needs a square matrix")
    scale = 1.0 + float(np.max(np.abs(h))) if h.size else 1.0
    if float(np.max(np.abs(h - h.conj().T))) > tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    h = 0.5 * (h + h.conj().T)
    re, im = h.real, h.imag
    return np.block([[re, -im], [im, re]])


def extract_hermitian(y: np.ndarray) -> np.ndarray:
    """Hermitian matrix matching an embedded real symmetric block value.

    Inverse of embed_hermitian on exact embeddings; on a general symmetric
    PSD block value it returns the Hermitian PSD matrix with identical
    objective/constraint contributions under the factor-2 trace convention.
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0] // 2
    if y.shape != (2 * n, 2 * n):
        raise ValueError("embedded matrix must have even order")
    re = 0.5 * (y[:n, :n] + y[n:, n:])
    im = 0.5 * (y[n:, :n] - y[:n, n:])
    x = re + 1j * im
    return 0.5 * (x + x.conj().T)


# ---------------------------------------------------------------------------
# Scaled-triangle (svec) packing used by the PSD cone


def _svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def _psd_entry_maps(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map dense (r, c) entries to svec coordinates with their weights."""
    rr, cc = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    lo, hi = np.minimum(rr, cc), np.maximum(rr, cc)
    idx = (hi * (hi + 1)) // 2 + lo
    wgt = np.where(rr == cc, 1.0, 1.0 / _SQRT2)
    return idx.ravel(), wgt.ravel()


def _mat_from_svec(x: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n, n))
    k = 0
    for c in range(n):
        for r in range(c + 1):
            v = x[k]
            k += 1
            if r == c:
                out[r, c] = v
            else:
                out[r, c] = out[c, r] = v / _SQRT2
    return out


# ---------------------------------------------------------------------------
# Solving


def _block_width(block: Block) -> int:
    return _svec_dim(block.n) if isinstance(block, PsdBlock) else block.n


def _row_coefficients(prog: ConicProgram, offsets: list[int], terms: list[Term]):
    """Sparse (cols, vals) of one constraint row in solver coordinates."""
    cols, vals = [], []
    for block_idx, coef in terms:
        block = prog.blocks[block_idx]
        coef = np.asarray(coef, dtype=float)
        if isinstance(block, PsdBlock):
            idx, wgt = _psd_entry_maps(block.n)
            acc = np.zeros(_svec_dim(block.n))
            np.add.at(acc, idx, coef.ravel() * wgt)
        else:
            acc = coef
        nz = np.nonzero(acc)[0]
        cols.append(nz + offsets[block_idx])
        vals.append(acc[nz])
    if cols:
        return np.concatenate(cols), np.concatenate(vals)
    return np.zeros(0, dtype=int), np.zeros(0)


def solve(prog: ConicProgram, tol: float = DEFAULT_TOL) -> SolveReport:
    """Solve a ConicProgram to the requested tolerance.

    Status OPTIMAL comes with primal/dual objectives whose gap and
    feasibility residual meet the tolerance contract (the residual is the
    worst violation per unit-normalized constraint row); INFEASIBLE and
    UNBOUNDED return an improving-ray certificate. Non-convergence is
    reported as NUMERICAL_FAILURE, never as a silent answer.
    """
    prog.validate()
    offsets: list[int] = []
    total = 0
    for block in prog.blocks:
        offsets.append(total)
        total += _block_width(block)

    q = np.zeros(total)
    for block_idx, coef in prog.objective:
        cols, vals = _row_coefficients(prog, offsets, [(block_idx, coef)])
        q[cols] += vals
    if prog.maximize:
        q = -q

    rows_a: list[np.ndarray] = []
    cols_a: list[np.ndarray] = []
    vals_a: list[np.ndarray] = []
    b: list[float] = []
    cones: list = []
    row = 0

    def emit(cols: np.ndarray, vals: np.ndarray, rhs: float) -> None:
        nonlocal row
        rows_a.append(np.full(cols.shape, row, dtype=int))
        cols_a.append(cols)
        vals_a.append(vals)
        b.append(rhs)
        row += 1

    def row_scale(vals: np.ndarray, rhs: float) -> float:
        # User rows are normalized to unit coefficient norm so feasibility
        # tolerances mean the same thing on every row regardless of the
        # caller's units. Cone-membership rows stay unscaled.
        mag = float(np.max(np.abs(vals))) if vals.size else 0.0
        return max(mag, abs(rhs), 1e-300)

    row_scales: list[float] = []
    eqs = [c for c in prog.constraints if c.sense == "=="]
    ineqs = [c for c in prog.constraints if c.sense != "=="]
    for con in eqs:
        cols, vals = _row_coefficients(prog, offsets, con.terms)
        scale = row_scale(vals, con.rhs)
        row_scales.append(scale)
        emit(cols, vals / scale, con.rhs / scale)
    if eqs:
        cones.append(clarabel.ZeroConeT(len(eqs)))

    nonneg_rows = 0
    membership_row: dict[int, int] = {}  # block index -> first cone-slack row
    for con in ineqs:
        cols, vals = _row_coefficients(prog, offsets, con.terms)
        scale = row_scale(vals, con.rhs)
        row_scales.append(scale)
        if con.sense == "<=":
            emit(cols, vals / scale, con.rhs / scale)
        else:
            emit(cols, -vals / scale, -con.rhs / scale)
        nonneg_rows += 1
    for block_idx, block in enumerate(prog.blocks):
        if isinstance(block, NonnegBlock):
            membership_row[block_idx] = row
            for j in range(block.n):
                emit(np.array([offsets[block_idx] + j]), np.array([-1.0]), 0.0)
                nonneg_rows += 1
    if nonneg_rows:
        cones.append(clarabel.NonnegativeConeT(nonneg_rows))

    for block_idx, block in enumerate(prog.blocks):
        if isinstance(block, PsdBlock):
            width = _svec_dim(block.n)
            start = offsets[block_idx]
            membership_row[block_idx] = row
            for j in range(width):
                emit(np.array([start + j]), np.array([-1.0]), 0.0)
            cones.append(clarabel.PSDTriangleConeT(block.n))

    a_mat = sparse.csc_matrix(
        (
            np.concatenate(vals_a) if vals_a else np.zeros(0),
            (
                np.concatenate(rows_a) if rows_a else np.zeros(0, dtype=int),
                np.concatenate(cols_a) if cols_a else np.zeros(0, dtype=int),
            ),
        ),
        shape=(row, total),
    )
    b_vec = np.asarray(b)

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_rel = tol
    settings.tol_gap_abs = tol
    settings.tol_feas = tol
    solver = clarabel.DefaultSolver(
        sparse.csc_matrix((total, total)), q, a_mat, b_vec, cones, settings
    )
    t0 = time.perf_counter()
    sol = solver.solve()
    elapsed = time.perf_counter() - t0

    sign = -1.0 if prog.maximize else 1.0
    status_name = str(sol.status)
    x = np.asarray(sol.x)
    z = np.asarray(sol.z)

    if status_name == "Solved":
        status = SolveStatus.OPTIMAL
    elif status_name == "PrimalInfeasible":
        status = SolveStatus.INFEASIBLE
    elif status_name == "DualInfeasible":
        status = SolveStatus.UNBOUNDED
    else:
        status = SolveStatus.NUMERICAL_FAILURE

    block_values = None
    residual = np.nan
    primal = dual = np.nan
    certificate = None
    if status is SolveStatus.OPTIMAL:
        primal = sign * float(sol.obj_val)
        dual = sign * float(sol.obj_val_dual)
        s = np.asarray(sol.s)
        block_values = []
        # Cone-constrained blocks are read from the cone slack of their
        # membership rows (s == x up to the feasibility tolerance): the
        # slack is kept exactly inside its cone by the solver, so PSD block
        # values have no spurious negative eigenvalues.
        for block_idx, (block, off) in enumerate(zip(prog.blocks, offsets)):
            if isinstance(block, PsdBlock):
                r0 = membership_row[block_idx]
                block_values.append(
                    _mat_from_svec(s[r0 : r0 + _svec_dim(block.n)], block.n)
                )
            elif isinstance(block, NonnegBlock):
                r0 = membership_row[block_idx]
                block_values.append(s[r0 : r0 + block.n].copy())
            else:
                block_values.append(x[off : off + block.n].copy())
        residual = _constraint_residual(eqs + ineqs, row_scales, block_values)
    elif status is SolveStatus.INFEASIBLE:
        certificate = z
    elif status is SolveStatus.UNBOUNDED:
        certificate = x

    return SolveReport(
        status=status,
        primal_objective=primal,
        dual_objective=dual,
        gap=abs(primal - dual) if status is SolveStatus.OPTIMAL else np.nan,
        iterations=int(sol.iterations),
        block_values=block_values,
        certificate=certificate,
        primal_residual=residual,
        solve_time=elapsed,
    )


def value_of(terms: list[Term], block_values: list[np.ndarray]) -> float:
    """Evaluate a linear functional at concrete block values."""
    return float(
        sum(np.sum(np.asarray(coef) * block_values[idx]) for idx, coef in terms)
    )


def _constraint_residual(
    constraints: list[Constraint],
    scales: list[float],
    block_values: list[np.ndarray],
) -> float:
    """Worst row violation, measured per unit-normalized row."""
    worst = 0.0
    for con, scale in zip(constraints, scales):
        lhs = value_of(con.terms, block_values)
        if con.sense == "==":
            worst = max(worst, abs(lhs - con.rhs) / scale)
        elif con.sense == "<=":
            worst = max(worst, (lhs - con.rhs) / scale)
        else:
            worst = max(worst, (con.rhs - lhs) / scale)
    return worst


# ---------------------------------------------------------------------------
# Debug dump


def dump_program(prog: ConicProgram) -> str:
    """Sparse text form of a program, one line per nonzero.

    Format:
        conicprogram v1
        sense max|min
        block <index> <psd|nonneg|free> <n>
        obj <block> <row> <col> <value>
        con <index> <sense> <rhs>
        coef <con-index> <block> <row> <col> <value>

    Vector-block entries use col 0. Intended for cross-checking a program
    against external tooling.
    """
    lines = ["conicprogram v1", f"sense {'max' if prog.maximize else 'min'}"]
    kind = {PsdBlock: "psd", NonnegBlock: "nonneg", FreeBlock: "free"}
    for i, block in enumerate(prog.blocks):
        lines.append(f"block {i} {kind[type(block)]} {block.n}")

    def entry_lines(prefix: str, terms: list[Term]) -> list[str]:
        out = []
        for block_idx, coef in terms:
            coef = np.asarray(coef, dtype=float)
            if coef.ndim == 1:
                coef = coef[:, None]
            for (r, c) in zip(*np.nonzero(coef)):
                out.append(f"{prefix} {block_idx} {r} {c} {float(coef[r, c])!r}")
        return out

    lines.extend(entry_lines("obj", prog.objective))
    for j, con in enumerate(prog.constraints):
        lines.append(f"con {j} {con.sense} {con.rhs!r}")
        lines.extend(entry_lines(f"coef {j}", con.terms))
    return "\n".join(lines) + "\n"
