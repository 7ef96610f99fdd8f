"""Dense semidefinite-programming engine and recovery-certification builders.

Problems are small (PSD blocks up to 16x16) and are solved by a first-order
operator-splitting scheme: alternating projections onto the affine equality
set (through one cached SVD) and onto the PSD cone (per-block
eigendecomposition), with over-relaxation and residual-balanced penalty.

Complex Hermitian d x d variables are vectorized to real vectors of length
d^2 (diagonal entries, then sqrt(2)-scaled real and imaginary upper
triangles), which preserves inner products and keeps all constraint data
real.

Feasibility is classified by a phase-1 pass that minimizes the equality
residual over the cone: INFEASIBLE only when the converged minimum
violation exceeds ``eps_infeasible``, FEASIBLE when a point reaches
``eps_feasible``; the dead zone in between surfaces as MAX_ITER.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import markov
from .registers import ChoiOperator, DensityOperator, partial_trace

OPTIMAL = "OPTIMAL"
FEASIBLE = "FEASIBLE"
INFEASIBLE = "INFEASIBLE"
MAX_ITER = "MAX_ITER"

_SQRT2 = math.sqrt(2.0)


class ProblemFormatError(ValueError):
    """Raised for undeclared variables, bad dimensions, or non-Hermitian data."""


# ---------------------------------------------------------------------------
# Hermitian <-> real vectorization
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _triu(dim: int):
    iu, ju = np.triu_indices(dim, k=1)
    return iu, ju


def svec(matrix: np.ndarray) -> np.ndarray:
    """Real vectorization of a Hermitian matrix, inner-product preserving."""
    dim = matrix.shape[0]
    iu, ju = _triu(dim)
    upper = matrix[iu, ju]
    return np.concatenate(
        [matrix.diagonal().real, _SQRT2 * upper.real, _SQRT2 * upper.imag]
    )


def unsvec(vector: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`svec`."""
    iu, ju = _triu(dim)
    m = iu.size
    matrix = np.zeros((dim, dim), dtype=complex)
    matrix[np.arange(dim), np.arange(dim)] = vector[:dim]
    upper = (vector[dim : dim + m] + 1j * vector[dim + m :]) / _SQRT2
    matrix[iu, ju] = upper
    matrix[ju, iu] = upper.conj()
    return matrix


# ---------------------------------------------------------------------------
# Problem and solution containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    """One affine equality: sum_k <A_k, X_k> + sum_m g_m s_m = rhs."""

    blocks: dict
    scalars: dict
    rhs: float


@dataclass(frozen=True)
class ConicProblem:
    """Vectorized SDP: Hermitian PSD blocks, free scalars, affine equalities,
    and a linear objective (empty objective means pure feasibility)."""

    psd_blocks: tuple
    free_scalars: tuple = ()
    equalities: tuple = ()
    objective_blocks: dict = field(default_factory=dict)
    objective_scalars: dict = field(default_factory=dict)

    def validate(self) -> None:
        dims = dict(self.psd_blocks)
        if len(dims) != len(self.psd_blocks):
            raise ProblemFormatError("duplicate PSD block names")
        if set(dims) & set(self.free_scalars):
            raise ProblemFormatError("a name cannot be both a block and a scalar")
        for where, blocks, scalars in (
            ("objective", self.objective_blocks, self.objective_scalars),
            *(
                (f"equality {k}", con.blocks, con.scalars)
                for k, con in enumerate(self.equalities)
            ),
        ):
            for name, data in blocks.items():
                if name not in dims:
                    raise ProblemFormatError(f"{where} references undeclared block {name!r}")
                data = np.asarray(data)
                if data.shape != (dims[name], dims[name]):
                    raise ProblemFormatError(
                        f"{where}: data for block {name!r} has shape {data.shape}, "
                        f"expected {(dims[name], dims[name])}"
                    )
                if np.abs(data - data.conj().T).max() > 1e-12:
                    raise ProblemFormatError(f"{where}: data for block {name!r} is not Hermitian")
            for name in scalars:
                if name not in self.free_scalars:
                    raise ProblemFormatError(f"{where} references undeclared scalar {name!r}")

    @property
    def total_dim(self) -> int:
        return sum(d * d for _, d in self.psd_blocks) + len(self.free_scalars)


@dataclass(frozen=True)
class ConicSolution:
    status: str
    objective_value: float | None
    block_values: dict
    scalar_values: dict
    primal_residual: float
    min_eigenvalue: float
    iterations: int
    debug: dict | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "objective_value": self.objective_value,
            "scalar_values": dict(self.scalar_values),
            "primal_residual": self.primal_residual,
            "min_eigenvalue": self.min_eigenvalue,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and splitting parameters.

    ``eps_feasible < eps_infeasible`` is required: residuals between the two
    are reported as undetermined (MAX_ITER) rather than forced into a
    verdict.
    """

    eps_feasible: float = 1e-7
    eps_psd: float = 1e-9
    eps_infeasible: float = 1e-5
    max_iterations: int = 50000
    penalty: float = 1.0
    over_relaxation: float = 1.6
    eps_gap: float = 1e-8
    check_interval: int = 25
    stall_checks: int = 40
    rebalance_interval: int = 500

    def __post_init__(self):
        if min(self.eps_feasible, self.eps_psd, self.eps_infeasible) <= 0:
            raise ValueError("tolerances must be positive")
        if self.eps_feasible >= self.eps_infeasible:
            raise ValueError("eps_feasible must be smaller than eps_infeasible")

    def to_dict(self) -> dict:
        return {
            "eps_feasible": self.eps_feasible,
            "eps_psd": self.eps_psd,
            "eps_infeasible": self.eps_infeasible,
            "max_iterations": self.max_iterations,
            "penalty": self.penalty,
            "over_relaxation": self.over_relaxation,
        }


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


class _Assembled:
    def __init__(self, problem: ConicProblem):
        self.block_dims = list(problem.psd_blocks)
        self.slices = {}
        offset = 0
        for name, dim in self.block_dims:
            self.slices[name] = slice(offset, offset + dim * dim)
            offset += dim * dim
        self.scalar_cols = {}
        for name in problem.free_scalars:
            self.scalar_cols[name] = offset
            offset += 1
        self.n = offset
        self.m = len(problem.equalities)

        self.A = np.zeros((self.m, self.n))
        self.b = np.zeros(self.m)
        for r, con in enumerate(problem.equalities):
            for name, data in con.blocks.items():
                self.A[r, self.slices[name]] = svec(np.asarray(data, dtype=complex))
            for name, coeff in con.scalars.items():
                self.A[r, self.scalar_cols[name]] = coeff
            self.b[r] = con.rhs

        self.c = np.zeros(self.n)
        for name, data in problem.objective_blocks.items():
            self.c[self.slices[name]] = svec(np.asarray(data, dtype=complex))
        for name, coeff in problem.objective_scalars.items():
            self.c[self.scalar_cols[name]] = coeff

    def project_cone(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        """Project onto the PSD cone blockwise; returns (point, min eigenvalue seen)."""
        out = x.copy()
        eig_min = 0.0
        for name, dim in self.block_dims:
            sl = self.slices[name]
            h = unsvec(x[sl], dim)
            w, v = np.linalg.eigh((h + h.conj().T) / 2)
            eig_min = min(eig_min, float(w[0]))
            w = np.maximum(w, 0.0)
            out[sl] = svec((v * w) @ v.conj().T)
        return out, eig_min

    def min_eigenvalue(self, x: np.ndarray) -> float:
        eig = 0.0
        for name, dim in self.block_dims:
            h = unsvec(x[self.slices[name]], dim)
            eig = min(eig, float(np.linalg.eigvalsh((h + h.conj().T) / 2)[0]))
        return eig

    def extract(self, x: np.ndarray) -> tuple[dict, dict]:
        blocks = {name: unsvec(x[self.slices[name]], dim) for name, dim in self.block_dims}
        scalars = {name: float(x[col]) for name, col in self.scalar_cols.items()}
        return blocks, scalars


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------


class _AffineProjector:
    """Orthogonal projection onto {x : A x = P_range(A) b} through a cached SVD."""

    def __init__(self, A: np.ndarray, b: np.ndarray):
        if A.size:
            u, s, vt = np.linalg.svd(A, full_matrices=False)
            rank = int((s > s[0] * 1e-12).sum()) if s.size and s[0] > 0 else 0
            self.vr = vt[:rank].T
            self.x_ls = self.vr @ ((u[:, :rank].T @ b) / s[:rank])
        else:
            self.vr = np.zeros((A.shape[1], 0))
            self.x_ls = np.zeros(A.shape[1])

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return v - self.vr @ (self.vr.T @ v) + self.x_ls


def _maxabs(v: np.ndarray) -> float:
    return float(np.abs(v).max()) if v.size else 0.0


def solve(problem: ConicProblem, config: SolverConfig | None = None) -> ConicSolution:
    """Solve a conic problem: phase-1 feasibility, then phase-2 optimization.

    Returned block values are exact on the affine equalities (up to the
    least-squares floor) and PSD within ``eps_psd``; INFEASIBLE is declared
    only when the converged phase-1 violation exceeds ``eps_infeasible``.
    """
    cfg = config or SolverConfig()
    problem.validate()
    asm = _Assembled(problem)
    A, b, c = asm.A, asm.b, asm.c
    has_objective = bool(np.any(c))
    history: list[float] = []

    proj_aff = _AffineProjector(A, b)
    ls_residual = _maxabs(A @ proj_aff.x_ls - b)

    def finished(status, x, iterations):
        blocks, scalars = asm.extract(x)
        return ConicSolution(
            status=status,
            objective_value=None if status == INFEASIBLE else float(c @ x),
            block_values=blocks,
            scalar_values=scalars,
            primal_residual=_maxabs(A @ x - b),
            min_eigenvalue=asm.min_eigenvalue(x),
            iterations=iterations,
            debug={
                "psd_blocks": [[name, dim] for name, dim in problem.psd_blocks],
                "free_scalars": list(problem.free_scalars),
                "constraint_count": asm.m,
                "vectorized_dim": asm.n,
                "residual_history": _downsample(history),
            },
        )

    if ls_residual > cfg.eps_infeasible:
        # no point in the cone can close an affine-inconsistent system
        history.append(ls_residual)
        x_cone, _ = asm.project_cone(proj_aff.x_ls)
        return finished(INFEASIBLE, x_cone, 0)

    x_feas, iters1, status1 = _phase1(asm, proj_aff, cfg, history)
    if status1 is not FEASIBLE:
        return finished(status1, x_feas, iters1)
    if not has_objective:
        return finished(FEASIBLE, x_feas, iters1)

    x_opt, iters2, status2 = _phase2(asm, proj_aff, x_feas, cfg, history)
    return finished(status2, x_opt, iters1 + iters2)


def _downsample(history: list[float], limit: int = 200) -> list[float]:
    if len(history) <= limit:
        return list(history)
    stride = -(-len(history) // limit)
    return history[::stride]


def _phase1(asm, proj_aff, cfg, history):
    """Cone-constrained least squares on the equality residual (ADMM)."""
    A, b = asm.A, asm.b
    n = asm.n
    sigma = cfg.penalty
    gram = A.T @ A

    def factor(sig):
        return np.linalg.cholesky(gram + sig * np.eye(n))

    chol = factor(sigma)
    atb = A.T @ b

    x, _ = asm.project_cone(proj_aff.x_ls)
    xbar = proj_aff(x)
    if asm.min_eigenvalue(xbar) >= -cfg.eps_psd and _maxabs(A @ xbar - b) <= cfg.eps_feasible:
        return xbar, 0, FEASIBLE

    u = np.zeros(n)
    best_residual = _maxabs(A @ x - b)
    stall = 0
    for it in range(1, cfg.max_iterations + 1):
        rhs = atb + sigma * (x - u)
        z = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        z_relaxed = cfg.over_relaxation * z + (1.0 - cfg.over_relaxation) * x
        x_prev = x
        x, _ = asm.project_cone(z_relaxed + u)
        u = u + z_relaxed - x

        if it % cfg.check_interval == 0:
            xbar = proj_aff(x)
            if (
                asm.min_eigenvalue(xbar) >= -cfg.eps_psd
                and _maxabs(A @ xbar - b) <= cfg.eps_feasible
            ):
                return xbar, it, FEASIBLE
            residual = _maxabs(A @ x - b)
            history.append(residual)
            if residual >= best_residual * (1.0 - 1e-9):
                stall += 1
            else:
                stall = 0
            best_residual = min(best_residual, residual)
            gap = _maxabs(x - z)
            if stall >= cfg.stall_checks and gap <= 1e-6 * (1.0 + _maxabs(x)):
                status = INFEASIBLE if best_residual > cfg.eps_infeasible else MAX_ITER
                return x, it, status
        if it % cfg.rebalance_interval == 0:
            prim = float(np.linalg.norm(x - z))
            dual = sigma * float(np.linalg.norm(x - x_prev))
            if prim > 10.0 * dual and sigma < 1e6:
                sigma *= 2.0
                u /= 2.0
                chol = factor(sigma)
            elif dual > 10.0 * prim and sigma > 1e-6:
                sigma /= 2.0
                u *= 2.0
                chol = factor(sigma)

    residual = _maxabs(A @ x - b)
    status = INFEASIBLE if (stall >= cfg.stall_checks and residual > cfg.eps_infeasible) else MAX_ITER
    return x, cfg.max_iterations, status


def _phase2(asm, proj_aff, x_start, cfg, history):
    """Minimize the linear objective over affine-set /\\ cone (ADMM)."""
    A, b, c = asm.A, asm.b, asm.c
    sigma = cfg.penalty
    z = x_start.copy()
    u = np.zeros(asm.n)
    last_objective = math.inf
    plateau = 0
    for it in range(1, cfg.max_iterations + 1):
        x = proj_aff(z - u - c / sigma)
        x_relaxed = cfg.over_relaxation * x + (1.0 - cfg.over_relaxation) * z
        z_prev = z
        z, _ = asm.project_cone(x_relaxed + u)
        u = u + x_relaxed - z

        if it % cfg.check_interval == 0:
            gap = _maxabs(x - z)
            history.append(_maxabs(A @ z - b))
            objective = float(c @ z)
            settled = abs(objective - last_objective) <= 1e-11 * max(1.0, abs(objective))
            plateau = plateau + 1 if settled else 0
            last_objective = objective
            if gap <= cfg.eps_gap and plateau >= 3:
                xbar = proj_aff(z)
                if (
                    asm.min_eigenvalue(xbar) >= -cfg.eps_psd
                    and _maxabs(A @ xbar - b) <= cfg.eps_feasible
                ):
                    return xbar, it, OPTIMAL
        if it % cfg.rebalance_interval == 0:
            prim = float(np.linalg.norm(x - z))
            dual = sigma * float(np.linalg.norm(z - z_prev))
            if prim > 10.0 * dual and sigma < 1e6:
                sigma *= 2.0
                u /= 2.0
            elif dual > 10.0 * prim and sigma > 1e-6:
                sigma /= 2.0
                u *= 2.0

    return proj_aff(z), cfg.max_iterations, MAX_ITER


# ---------------------------------------------------------------------------
# Recovery-certification builders
# ---------------------------------------------------------------------------


def _split_labels(marginal: DensityOperator, target: DensityOperator, act_on: str):
    """Extension labels = target labels minus marginal labels, in target order."""
    ext = tuple(lab for lab in target.labels if lab not in marginal.labels)
    if not ext:
        raise ValueError("target must extend the marginal by at least one subsystem")
    expected = []
    for lab in marginal.labels:
        expected.append(lab)
        if lab == act_on:
            expected.extend(ext)
    if tuple(expected) != target.labels:
        raise ValueError(
            f"target labels {target.labels} must equal the marginal labels with the "
            f"extension inserted after {act_on!r} (expected {tuple(expected)})"
        )
    return ext


def check_marginal(marginal: DensityOperator, target: DensityOperator, act_on: str = "C",
                   atol: float = 1e-10) -> tuple[str, ...]:
    """Validate that ``marginal`` is the partial trace of ``target``.

    The reconstruction SDP is trivially infeasible on mismatched data, so
    the mismatch is rejected upfront with a message saying why.
    """
    ext = _split_labels(marginal, target, act_on)
    reduced = partial_trace(target, ext)
    gap = float(np.abs(reduced.matrix - marginal.matrix).max())
    if gap > atol:
        raise ValueError(
            f"marginal is not the partial trace of the target over {ext} "
            f"(max deviation {gap:.3e}); refusing to build a vacuously "
            "infeasible problem"
        )
    return ext


def _grouped_marginal(marginal: DensityOperator, act_on: str) -> np.ndarray:
    """Marginal reordered so the acted subsystem is last, as a flat matrix."""
    axis = marginal.register.axis(act_on)
    n = marginal.register.n_qubits
    order = [k for k in range(n) if k != axis] + [axis]
    tensor_form = np.transpose(marginal.as_tensor(), order + [n + k for k in order])
    return tensor_form.reshape(marginal.dim, marginal.dim)


def _reconstruction_matrix(marginal: DensityOperator, act_on: str, n_ext: int) -> np.ndarray:
    """Real matrix of the map svec(J) -> svec(extended state).

    Implements the Choi application literally: partial transpose on the
    acted slot, Kronecker lift, one big product, partial trace over the
    input slot. Kept deliberately separate from the channel-application
    code used for certificate verification.
    """
    rest_dim = marginal.dim // 2
    out_dim = 2 ** (1 + n_ext)
    choi_dim = 2 * out_dim
    full_dim = rest_dim * out_dim

    grouped = _grouped_marginal(marginal, act_on)
    gt = grouped.reshape(rest_dim, 2, rest_dim, 2)
    rho_pt = np.transpose(gt, (0, 3, 2, 1)).reshape(marginal.dim, marginal.dim)
    lifted = np.kron(rho_pt, np.eye(out_dim))
    eye_rest = np.eye(rest_dim)

    cols = []
    for k in range(choi_dim * choi_dim):
        unit = np.zeros(choi_dim * choi_dim)
        unit[k] = 1.0
        basis_element = unsvec(unit, choi_dim)
        big = lifted @ np.kron(eye_rest, basis_element)
        big = big.reshape(rest_dim, 2, out_dim, rest_dim, 2, out_dim)
        traced = np.trace(big, axis1=1, axis2=4)
        cols.append(svec(traced.reshape(full_dim, full_dim)))
    return np.stack(cols, axis=1)


def _target_svec(marginal: DensityOperator, target: DensityOperator, act_on: str,
                 ext: tuple[str, ...]) -> np.ndarray:
    """svec of the target, permuted into the builder's output ordering."""
    produced = [lab for lab in marginal.labels if lab != act_on] + [act_on, *ext]
    perm = [target.labels.index(lab) for lab in produced]
    n = len(produced)
    tensor_form = np.transpose(target.as_tensor(), perm + [n + q for q in perm])
    return svec(tensor_form.reshape(target.dim, target.dim))


def build_cptp_feasibility(
    marginal: DensityOperator, target: DensityOperator, act_on: str = "C"
) -> ConicProblem:
    """Feasibility SDP for an exact channel recovery of ``target`` from ``marginal``.

    One PSD Choi block, trace-preservation rows, and the full entrywise
    reconstruction constraint; zero objective. FEASIBLE means a channel
    exists whose extension of the marginal reproduces the target.
    """
    ext = check_marginal(marginal, target, act_on)
    n_ext = len(ext)
    choi_dim = 2 ** (2 + n_ext)
    recon = _reconstruction_matrix(marginal, act_on, n_ext)
    rhs = _target_svec(marginal, target, act_on, ext)

    rows = []
    eye_out = np.eye(choi_dim // 2)
    identity_svec = svec(np.eye(2))
    for k in range(4):
        unit = np.zeros(4)
        unit[k] = 1.0
        basis_2 = unsvec(unit, 2)
        rows.append(
            Constraint(blocks={"J": np.kron(basis_2, eye_out)}, scalars={}, rhs=float(identity_svec[k]))
        )
    for r in range(recon.shape[0]):
        rows.append(Constraint(blocks={"J": unsvec(recon[r], choi_dim)}, scalars={}, rhs=float(rhs[r])))

    return ConicProblem(psd_blocks=(("J", choi_dim),), equalities=tuple(rows))


def build_overhead_problem(
    marginal: DensityOperator, target: DensityOperator, act_on: str = "C"
) -> ConicProblem:
    """Quasiprobability-recovery SDP: minimize c1 + c2 over a two-channel split.

    Two PSD Choi blocks normalized to c1 and c2 times the identity, with the
    difference reconstructing the target.
    """
    ext = check_marginal(marginal, target, act_on)
    n_ext = len(ext)
    choi_dim = 2 ** (2 + n_ext)
    recon = _reconstruction_matrix(marginal, act_on, n_ext)
    rhs = _target_svec(marginal, target, act_on, ext)

    rows = []
    eye_out = np.eye(choi_dim // 2)
    identity_svec = svec(np.eye(2))
    for name, scalar in (("J1", "c1"), ("J2", "c2")):
        for k in range(4):
            unit = np.zeros(4)
            unit[k] = 1.0
            rows.append(
                Constraint(
                    blocks={name: np.kron(unsvec(unit, 2), eye_out)},
                    scalars={scalar: -float(identity_svec[k])},
                    rhs=0.0,
                )
            )
    for r in range(recon.shape[0]):
        data = unsvec(recon[r], choi_dim)
        rows.append(Constraint(blocks={"J1": data, "J2": -data}, scalars={}, rhs=float(rhs[r])))

    return ConicProblem(
        psd_blocks=(("J1", choi_dim), ("J2", choi_dim)),
        free_scalars=("c1", "c2"),
        equalities=tuple(rows),
        objective_scalars={"c1": 1.0, "c2": 1.0},
    )


@dataclass(frozen=True)
class OverheadResult:
    """Outcome of the sampling-overhead minimization.

    ``nu`` is log2 of the optimal c1 + c2, or +inf when no
    Hermitian-preserving recovery exists at all. The Choi difference J1 - J2
    carries the recovered quasiprobability map, and
    ``certificate_residual`` re-verifies it through the independent channel
    application path.
    """

    status: str
    nu: float
    c1: float | None = None
    c2: float | None = None
    choi_difference: ChoiOperator | None = None
    certificate_residual: float | None = None
    solution: ConicSolution | None = None

    def __post_init__(self):
        if math.isfinite(self.nu):
            if self.c1 is None or self.c2 is None:
                raise ValueError("finite overhead requires c1 and c2")
            if self.c1 < -1e-9 or self.c2 < -1e-9:
                raise ValueError(f"channel weights must be nonnegative: c1={self.c1}, c2={self.c2}")
            if abs(self.c1 - self.c2 - 1.0) > 1e-7:
                raise ValueError(
                    f"trace preservation forces c1 - c2 = 1, got {self.c1 - self.c2}"
                )
            if self.nu < -1e-9:
                raise ValueError(f"overhead cannot be negative, got nu={self.nu}")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "nu": self.nu,
            "c1_plus_c2": None if self.c1 is None else self.c1 + self.c2,
            "c1": self.c1,
            "c2": self.c2,
            "certificate_residual": self.certificate_residual,
        }


def sampling_overhead(
    marginal: DensityOperator,
    target: DensityOperator,
    config: SolverConfig | None = None,
    act_on: str = "C",
) -> OverheadResult:
    """Minimal quasiprobability cost of recovering ``target`` from ``marginal``."""
    ext = check_marginal(marginal, target, act_on)
    problem = build_overhead_problem(marginal, target, act_on)
    solution = solve(problem, config)
    if solution.status not in (OPTIMAL, FEASIBLE):
        return OverheadResult(status=solution.status, nu=math.inf, solution=solution)

    c1 = solution.scalar_values["c1"]
    c2 = solution.scalar_values["c2"]
    difference = ChoiOperator(
        matrix=solution.block_values["J1"] - solution.block_values["J2"],
        input_label=act_on,
        copy_label=act_on + "'",
        extension_labels=ext,
        cp_flag=False,
    )
    residual = markov.verify_recovery(target, marginal, difference, act_on=act_on)
    return OverheadResult(
        status=solution.status,
        nu=math.log2(c1 + c2),
        c1=c1,
        c2=c2,
        choi_difference=difference,
        certificate_residual=residual,
        solution=solution,
    )


def cptp_certify(
    marginal: DensityOperator,
    target: DensityOperator,
    config: SolverConfig | None = None,
    act_on: str = "C",
) -> tuple[ConicSolution, ChoiOperator | None, float | None]:
    """Solve the channel-recovery feasibility problem and verify any certificate."""
    ext = check_marginal(marginal, target, act_on)
    problem = build_cptp_feasibility(marginal, target, act_on)
    solution = solve(problem, config)
    if solution.status not in (OPTIMAL, FEASIBLE):
        return solution, None, None
    choi = ChoiOperator(
        matrix=_clip_psd(solution.block_values["J"]),
        input_label=act_on,
        copy_label=act_on + "'",
        extension_labels=ext,
        cp_flag=True,
    )
    residual = markov.verify_recovery(target, marginal, choi, act_on=act_on)
    return solution, choi, residual


def _clip_psd(matrix: np.ndarray) -> np.ndarray:
    """Clip tiny negative eigenvalues so the certificate is PSD exactly."""
    h = (matrix + matrix.conj().T) / 2
    w, v = np.linalg.eigh(h)
    return (v * np.maximum(w, 0.0)) @ v.conj().T


@dataclass(frozen=True)
class SweepRow:
    p: float
    inclusion_verdict: bool | None = None
    inclusion_max_leak: float | None = None
    cptp_status: str | None = None
    cptp_residual: float | None = None
    hptp_status: str | None = None
    nu: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        out = {
            "p": self.p,
            "inclusion": self.inclusion_verdict,
            "inclusion_max_leak": self.inclusion_max_leak,
            "cptp": self.cptp_status,
            "cptp_residual": self.cptp_residual,
            "hptp": self.hptp_status,
            "nu": self.nu,
        }
        if self.error is not None:
            out["error"] = self.error
        return out


@dataclass(frozen=True)
class SweepReport:
    rows: tuple
    first_inclusion_pass: float | None

    def to_dict(self) -> dict:
        return {
            "rows": [row.to_dict() for row in self.rows],
            "first_inclusion_pass_p": self.first_inclusion_pass,
        }


def recoverability_sweep(family, grid, config: SolverConfig | None = None) -> SweepReport:
    """Run inclusion + both certifications across a parameter grid.

    ``family`` maps a grid point to a four-subsystem state. Per-point
    failures are recorded in the row without aborting the sweep.
    """
    rows = []
    for p in grid:
        p = float(p)
        try:
            state = family(p)
            ext = tuple(lab for lab in state.labels if lab not in ("A", "B", "C"))
            marginal = partial_trace(state, ext)
            inclusion = markov.kernel_inclusion_check(marginal)
            cptp_solution, _, cptp_residual = cptp_certify(marginal, state, config)
            overhead = sampling_overhead(marginal, state, config)
            rows.append(
                SweepRow(
                    p=p,
                    inclusion_verdict=inclusion.verdict,
                    inclusion_max_leak=inclusion.max_leak,
                    cptp_status=cptp_solution.status,
                    cptp_residual=cptp_residual,
                    hptp_status=overhead.status,
                    nu=overhead.nu,
                )
            )
        except Exception as exc:  # noqa: BLE001 - sweep must keep going per point
            rows.append(SweepRow(p=p, error=f"{type(exc).__name__}: {exc}"))
    passing = [row.p for row in rows if row.inclusion_verdict]
    return SweepReport(rows=tuple(rows), first_inclusion_pass=min(passing, default=None))
