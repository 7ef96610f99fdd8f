"""Structural virtual-recovery analysis of multipartite states.

Conditioning is always a projective measurement of one subsystem in the
computational basis. Conditional blocks keep the collapsed subsystem in
place: projecting C of a state on (A, B, C) onto |j> and tracing out B
yields a 4x4 operator on (A, C) whose C slot holds |j><j|. This matches the
convention in which conditional kernels are two-qubit subspaces.

The kernel-inclusion check is a NECESSARY condition only: a passing verdict
never certifies that a recovery channel exists. Certification is the job of
the conic module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linops
from .registers import ChoiOperator, DensityOperator, LabelError, QubitRegister

INCLUSION_LEAK_TOL = 1e-8
BLOCK_MATCH_TOL = 1e-10


@dataclass(frozen=True)
class ConditionalBlock:
    """Unnormalized post-measurement operator for one outcome.

    ``weight`` is the trace (the outcome probability when the parent state
    is normalized); summing the weights over all outcomes recovers the trace
    of the parent state.
    """

    outcome: int
    kept_labels: tuple[str, ...]
    matrix: np.ndarray

    @property
    def weight(self) -> float:
        return float(np.trace(self.matrix).real)

    def as_operator(self) -> DensityOperator:
        return DensityOperator(
            register=QubitRegister(self.kept_labels), matrix=self.matrix, normalized=False
        )


@dataclass(frozen=True)
class OutcomeInclusion:
    outcome: int
    ker_dim_ac: int
    ker_dim_bc: int
    contained: bool
    max_leak: float

    def to_dict(self) -> dict:
        return {
            "j": self.outcome,
            "ker_dim_ac": self.ker_dim_ac,
            "ker_dim_bc": self.ker_dim_bc,
            "contained": self.contained,
            "max_leak": self.max_leak,
        }


@dataclass(frozen=True)
class InclusionReport:
    """Per-outcome kernel-inclusion verdicts; the verdict is the AND over outcomes.

    A True verdict is necessary, not sufficient, for recoverability.
    """

    per_outcome: tuple[OutcomeInclusion, ...]
    tol: float

    @property
    def verdict(self) -> bool:
        return all(entry.contained for entry in self.per_outcome)

    @property
    def max_leak(self) -> float:
        return max((entry.max_leak for entry in self.per_outcome), default=0.0)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "necessary_only": True,
            "outcomes": [entry.to_dict() for entry in self.per_outcome],
        }


@dataclass(frozen=True)
class BlockOperator:
    """Operator-valued block <i| rho |j> of a state expanded on one subsystem."""

    row: int
    col: int
    on_labels: tuple[str, ...]
    matrix: np.ndarray


@dataclass(frozen=True)
class ConsistencyWitness:
    first: tuple[int, ...]
    second: tuple[int, ...]
    traced_gap: float
    block_gap: float

    def to_dict(self) -> dict:
        return {
            "first": list(self.first),
            "second": list(self.second),
            "traced_gap": self.traced_gap,
            "block_gap": self.block_gap,
        }


@dataclass(frozen=True)
class ConsistencyReport:
    """Pairwise linearity obstruction report for marginal-based recovery.

    Inconsistent means two blocks share the same traced part (within tol)
    but differ as full operators, which no linear map can reproduce. The
    pairwise test is one-sided: a consistent report does not certify that a
    channel exists.
    """

    consistent: bool
    witnesses: tuple[ConsistencyWitness, ...]
    tol: float

    def to_dict(self) -> dict:
        return {
            "consistent": self.consistent,
            "tol": self.tol,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def _trace_out_axes(matrix: np.ndarray, n_qubits: int, axes) -> np.ndarray:
    """Partial trace of a raw (not necessarily Hermitian) 2^n matrix over qubit axes."""
    tensor_form = matrix.reshape((2,) * (2 * n_qubits))
    for offset, axis in enumerate(sorted(axes)):
        half = tensor_form.ndim // 2
        tensor_form = np.trace(tensor_form, axis1=axis - offset, axis2=axis - offset + half)
    dim = 2 ** (n_qubits - len(axes))
    return tensor_form.reshape(dim, dim)


def conditional_block(
    rho: DensityOperator, measure: str, outcome: int, trace_out
) -> ConditionalBlock:
    """Project ``measure`` onto |outcome>, trace out ``trace_out``, keep the slot.

    The measured subsystem stays in the output register, collapsed to
    |outcome><outcome|, so kernels of conditional blocks live in the same
    space regardless of which side was traced out.
    """
    trace_out = {trace_out} if isinstance(trace_out, str) else set(trace_out)
    if measure in trace_out:
        raise LabelError(f"measured label {measure!r} cannot also be traced out")
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1 for a qubit measurement, got {outcome}")
    axis = rho.register.axis(measure)
    for lab in trace_out:
        rho.register.axis(lab)

    n = rho.register.n_qubits
    tensor_form = rho.as_tensor()
    tensor_form = np.take(tensor_form, outcome, axis=axis)
    tensor_form = np.take(tensor_form, outcome, axis=axis + n - 1)

    remaining = [lab for lab in rho.labels if lab != measure]
    for lab in sorted(trace_out, key=remaining.index, reverse=True):
        pos = remaining.index(lab)
        half = tensor_form.ndim // 2
        tensor_form = np.trace(tensor_form, axis1=pos, axis2=pos + half)
        remaining.pop(pos)

    kept = [lab for lab in rho.labels if lab not in trace_out]
    reduced_dim = 2 ** len(remaining)
    reduced = tensor_form.reshape(reduced_dim, reduced_dim)

    # re-embed |outcome><outcome| at the measured slot, in original label order
    collapsed = np.zeros((2, 2), dtype=complex)
    collapsed[outcome, outcome] = 1.0
    combined = np.kron(reduced, collapsed)  # order: remaining..., measure
    order_now = remaining + [measure]
    perm = [order_now.index(lab) for lab in kept]
    k = len(kept)
    tensor_out = combined.reshape((2,) * (2 * k))
    tensor_out = np.transpose(tensor_out, perm + [k + q for q in perm])
    return ConditionalBlock(
        outcome=outcome,
        kept_labels=tuple(kept),
        matrix=tensor_out.reshape(2 ** k, 2 ** k),
    )


def kernel_inclusion_check(
    rho: DensityOperator,
    tol: float = INCLUSION_LEAK_TOL,
    condition_on: str | None = None,
    rel_tol: float = linops.DEFAULT_REL_TOL,
) -> InclusionReport:
    """Kernel-inclusion criterion on a three-subsystem state.

    For each outcome j of measuring the conditioning subsystem (the last
    label unless given), tests Ker(first-side block) <= Ker(second-side
    block): leaks up to ``tol`` count as contained.
    """
    if rho.register.n_qubits != 3:
        raise LabelError(
            f"kernel inclusion needs a state on exactly three labels, got {rho.labels}"
        )
    cond = condition_on if condition_on is not None else rho.labels[-1]
    rho.register.axis(cond)
    first, second = [lab for lab in rho.labels if lab != cond]

    entries = []
    for outcome in (0, 1):
        block_ac = conditional_block(rho, cond, outcome, {second})
        block_bc = conditional_block(rho, cond, outcome, {first})
        ker_ac = linops.kernel_basis(block_ac.matrix, rel_tol=rel_tol)
        ker_bc = linops.kernel_basis(block_bc.matrix, rel_tol=rel_tol)
        contained, leak = linops.subspace_contained(ker_ac, ker_bc, tol=tol)
        entries.append(
            OutcomeInclusion(
                outcome=outcome,
                ker_dim_ac=ker_ac.dim,
                ker_dim_bc=ker_bc.dim,
                contained=contained,
                max_leak=leak,
            )
        )
    return InclusionReport(per_outcome=tuple(entries), tol=tol)


def apply_choi(rho: DensityOperator, choi: ChoiOperator, act_on: str) -> DensityOperator:
    """Apply the channel encoded by ``choi`` to one subsystem of ``rho``.

    The acted subsystem is replaced in place by the channel output: its copy
    slot keeps the name ``act_on`` and the extension labels are inserted
    right after it. Trace is preserved when the Choi matrix is
    trace-preserving; the output is a valid state when ``cp_flag`` is set
    and the input is normalized.
    """
    collisions = set(choi.extension_labels) & (set(rho.labels) - {act_on})
    if collisions:
        raise LabelError(f"extension labels collide with state labels: {sorted(collisions)}")
    axis = rho.register.axis(act_on)
    n = rho.register.n_qubits
    rest_dim = rho.dim // 2
    out_dim = choi.output_dim

    # move the acted qubit last, group the rest
    order = [k for k in range(n) if k != axis] + [axis]
    tensor_form = np.transpose(rho.as_tensor(), order + [n + k for k in order])
    grouped = tensor_form.reshape(rest_dim, 2, rest_dim, 2)
    choi_grouped = choi.matrix.reshape(2, out_dim, 2, out_dim)
    # out[a, o, b, p] = sum_{c,d} rho[a, c, b, d] * J[c, o, d, p]
    out = np.einsum("acbd,codp->aobp", grouped, choi_grouped)

    rest_labels = [lab for lab in rho.labels if lab != act_on]
    out_labels = rest_labels + [act_on] + list(choi.extension_labels)
    final_labels = []
    for lab in rho.labels:
        if lab == act_on:
            final_labels.append(act_on)
            final_labels.extend(choi.extension_labels)
        else:
            final_labels.append(lab)
    m = len(final_labels)
    perm = [out_labels.index(lab) for lab in final_labels]
    full = out.reshape((2,) * (2 * m))
    full = np.transpose(full, perm + [m + q for q in perm])
    matrix = full.reshape(2 ** m, 2 ** m)
    return DensityOperator(
        register=QubitRegister(tuple(final_labels)),
        matrix=matrix,
        normalized=rho.normalized and choi.is_trace_preserving and choi.cp_flag,
        check_psd=choi.cp_flag,
    )


def verify_recovery(
    target: DensityOperator,
    marginal: DensityOperator,
    choi: ChoiOperator,
    act_on: str = "C",
) -> float:
    """Max-abs entrywise gap between the channel-extended marginal and the target."""
    recovered = apply_choi(marginal, choi, act_on)
    if recovered.labels != target.labels:
        raise LabelError(
            f"recovered labels {recovered.labels} do not match target {target.labels}"
        )
    return float(np.abs(recovered.matrix - target.matrix).max())


def operator_blocks(rho: DensityOperator, over) -> list[BlockOperator]:
    """Expand a state in the computational basis of the ``over`` subsystems.

    Returns all blocks <i| rho |j> as operators on the remaining labels, with
    i, j enumerating the basis of the ``over`` group in register order.
    """
    over = [over] if isinstance(over, str) else list(over)
    axes = [rho.register.axis(lab) for lab in over]
    rest = [lab for lab in rho.labels if lab not in over]
    if not rest:
        raise LabelError("blocks need at least one remaining subsystem")
    n = rho.register.n_qubits
    order = axes + [rho.register.axis(lab) for lab in rest]
    tensor_form = np.transpose(rho.as_tensor(), order + [n + k for k in order])
    block_dim = 2 ** len(over)
    rest_dim = 2 ** len(rest)
    grouped = tensor_form.reshape(block_dim, rest_dim, block_dim, rest_dim)
    return [
        BlockOperator(row=i, col=j, on_labels=tuple(rest), matrix=grouped[i, :, j, :].copy())
        for i in range(block_dim)
        for j in range(block_dim)
    ]


def theta_blocks(rho: DensityOperator, condition_on: str) -> list[BlockOperator]:
    """2x2 array of blocks of a state over one subsystem's basis.

    Diagonal blocks are Hermitian, off-diagonal blocks are mutual adjoints,
    and the diagonal traces sum to the state's trace.
    """
    return operator_blocks(rho, condition_on)


def marginal_block_consistency(
    rho: DensityOperator,
    keep: str,
    extend_to,
    tol: float = BLOCK_MATCH_TOL,
) -> ConsistencyReport:
    """Pairwise linearity obstruction for recovering ``rho`` from its ``keep`` marginal.

    Expands the state in blocks over the complement of keep+extend_to,
    traces each block down to ``keep``, and flags any two blocks whose
    traced parts agree while the full blocks differ. Such a pair rules out
    every linear extension map from keep to keep+extend_to.
    """
    extend_to = {extend_to} if isinstance(extend_to, str) else set(extend_to)
    if keep in extend_to:
        raise LabelError(f"keep label {keep!r} cannot be part of extend_to")
    rho.register.axis(keep)
    complement = [lab for lab in rho.labels if lab != keep and lab not in extend_to]
    if not complement:
        raise LabelError("no subsystem left to index the blocks")

    blocks = operator_blocks(rho, complement)
    on_labels = blocks[0].on_labels
    drop_axes = [on_labels.index(lab) for lab in on_labels if lab in extend_to]
    traced = [_trace_out_axes(block.matrix, len(on_labels), drop_axes) for block in blocks]

    witnesses = []
    for a in range(len(blocks)):
        for b in range(a + 1, len(blocks)):
            traced_gap = float(np.abs(traced[a] - traced[b]).max())
            if traced_gap <= tol:
                block_gap = float(np.abs(blocks[a].matrix - blocks[b].matrix).max())
                if block_gap > tol:
                    witnesses.append(
                        ConsistencyWitness(
                            first=(blocks[a].row, blocks[a].col),
                            second=(blocks[b].row, blocks[b].col),
                            traced_gap=traced_gap,
                            block_gap=block_gap,
                        )
                    )
    return ConsistencyReport(consistent=not witnesses, witnesses=tuple(witnesses), tol=tol)
