"""Finite-rank nonnegative operators in eigen-representation.

An operator is stored as gamma = sum_k lambda_k |u_k><u_k| with nonnegative
weights and grid functions u_k; nothing is ever materialized as a dense
N^d x N^d matrix.  Densities, block-conjugated densities and kinetic traces
all reduce to sums over the eigenpairs.

Contracts describe the operator bound a checker relies on:

* unit_ball:      0 <= gamma <= 1, verified through orthonormality of the
                  eigenfunctions and lambda_k <= 1.
* power_bounded:  0 <= gamma <= (-Laplacian)^a, verified through the largest
                  eigenvalue of the weighted Gram matrix of the functions
                  (-Laplacian)^{-a/2} u_k.
* none:           nothing is claimed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dyadic_partition import DyadicBlockSet
from .errors import ContractViolationError, GridMismatchError, ZeroModeSingularityError
from .torus_grid import (
    DEFAULT_SIZE_CAP,
    GridFunction,
    TorusGrid,
    abs_squared,
    apply_symbol,
    kinetic_form,
    lp_norm,
)

GRAM_TOLERANCE = 1e-10
EIGENVALUE_TOLERANCE = 1e-10
ZERO_MEAN_RTOL = 1e-10

CONTRACT_KINDS = ("none", "unit_ball", "power_bounded")


@dataclass(frozen=True)
class OperatorContract:
    kind: str = "none"
    power: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in CONTRACT_KINDS:
            raise ValueError(f"unknown contract kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "power": float(self.power)}

    @classmethod
    def from_dict(cls, data: dict) -> "OperatorContract":
        return cls(data["kind"], float(data.get("power", 0.0)))


NO_CONTRACT = OperatorContract("none")
UNIT_BALL = OperatorContract("unit_ball")


def power_bounded(power: float) -> OperatorContract:
    return OperatorContract("power_bounded", float(power))


@dataclass
class FiniteRankOperator:
    """gamma = sum_k eigenvalues[k] |eigenfunctions[k]><eigenfunctions[k]|."""

    grid: TorusGrid
    eigenvalues: np.ndarray
    eigenfunctions: np.ndarray  # shape (rank,) + grid.shape
    contract: OperatorContract = NO_CONTRACT

    def __post_init__(self) -> None:
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=float)
        self.eigenfunctions = np.asarray(self.eigenfunctions)
        if self.eigenvalues.ndim != 1 or self.eigenvalues.size == 0:
            raise ValueError("eigenvalues must be a nonempty 1d array")
        if np.any(self.eigenvalues < 0):
            raise ValueError("eigenvalues must be nonnegative")
        expected = (self.eigenvalues.size,) + self.grid.shape
        if self.eigenfunctions.shape != expected:
            raise GridMismatchError(
                f"eigenfunctions of shape {self.eigenfunctions.shape} do not "
                f"match rank and grid, expected {expected}"
            )

    @property
    def rank(self) -> int:
        return int(self.eigenvalues.size)

    def eigenfunction(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.eigenfunctions[k])

    def trace(self) -> float:
        total = 0.0
        for k in range(self.rank):
            total += float(self.eigenvalues[k]) * lp_norm(self.eigenfunction(k), 2) ** 2
        return total


def _weighted_abs2_sum(op: FiniteRankOperator, fields) -> np.ndarray:
    """sum_k lambda_k |fields_k|^2 accumulated in ascending k order."""
    acc = np.zeros(op.grid.shape)
    for k, values in enumerate(fields):
        acc = acc + float(op.eigenvalues[k]) * abs_squared(values)
    return acc


def density(op: FiniteRankOperator) -> GridFunction:
    """The diagonal density sum_k lambda_k |u_k(x)|^2, clamped at zero."""
    acc = _weighted_abs2_sum(op, (op.eigenfunctions[k] for k in range(op.rank)))
    return GridFunction(op.grid, np.maximum(acc, 0.0))


def conjugated_density(
    op: FiniteRankOperator, blocks: DyadicBlockSet, j: int
) -> GridFunction:
    """Density of P_j gamma P_j, i.e. sum_k lambda_k |P_j u_k|^2."""
    if blocks.grid != op.grid:
        raise GridMismatchError("operator and block set live on different grids")
    table = blocks.symbol(j)
    projected = (
        apply_symbol(op.eigenfunction(k), table).values for k in range(op.rank)
    )
    acc = _weighted_abs2_sum(op, projected)
    return GridFunction(op.grid, np.maximum(acc, 0.0))


def kinetic_trace(op: FiniteRankOperator, power: float) -> float:
    """tr (-Laplacian)^power gamma = sum_k lambda_k <u_k, (-Laplacian)^power u_k>."""
    power = float(power)
    if power < 0:
        raise ValueError(f"kinetic_trace requires power >= 0, got {power}")
    total = 0.0
    for k in range(op.rank):
        total += float(op.eigenvalues[k]) * kinetic_form(op.eigenfunction(k), power)
    return total


def diagonal_block_bound(blocks: DyadicBlockSet, j: int) -> float:
    """B_j = L^{-d} sum_xi Psi_j(xi)^2; a pointwise bound on the density of
    P_j gamma P_j for every operator satisfying the unit-ball contract."""
    table = blocks.symbol(j)
    return float(np.sum(table**2) / blocks.grid.volume)


def fermi_sea(grid: TorusGrid, chemical_potential: float) -> FiniteRankOperator:
    """Projection onto the plane waves with |xi|^2 <= chemical_potential.

    Eigenfunctions are the normalized lattice waves L^{-d/2} e^{i xi x} with
    unit weights, ordered by (|xi|^2, flattened lattice index) so the
    construction is deterministic.
    """
    mu = float(chemical_potential)
    if mu <= 0:
        raise ValueError(f"chemical potential must be positive, got {mu}")
    nsq_flat = grid.frequency_norms_squared.reshape(-1)
    selected = np.flatnonzero(nsq_flat <= mu)
    if selected.size == 0:
        raise ValueError("no lattice modes under the chemical potential")
    order = np.lexsort((selected, nsq_flat[selected]))
    modes = selected[order]

    amplitude = grid.volume**-0.5
    functions = np.empty((modes.size,) + grid.shape, dtype=complex)
    for k, flat_index in enumerate(modes):
        multi = np.unravel_index(int(flat_index), grid.shape)
        phase = np.zeros(grid.shape)
        for axis, m_idx in enumerate(multi):
            phase = phase + grid.axis_frequencies[m_idx] * grid.coordinate_grids[axis]
        functions[k] = amplitude * np.exp(1j * phase)
    weights = np.ones(modes.size)
    return FiniteRankOperator(grid, weights, functions, contract=UNIT_BALL)


@dataclass
class ValidationReport:
    contract: OperatorContract
    passed: bool
    margin: float
    checks: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "contract": self.contract.to_dict(),
            "passed": bool(self.passed),
            "margin": float(self.margin),
            "checks": {k: float(v) for k, v in self.checks.items()},
        }


def _gram_matrix(op: FiniteRankOperator) -> np.ndarray:
    flat = op.eigenfunctions.reshape(op.rank, -1)
    return op.grid.cell_volume * (flat @ flat.conj().T)


def validate_contract(
    op: FiniteRankOperator, contract: OperatorContract | None = None
) -> ValidationReport:
    """Check the operator against a contract and report the violation margin.

    The margin is the largest excess over the mathematical bound (0 when
    everything holds exactly); the report passes when each excess stays
    within its numerical tolerance.
    """
    if contract is None:
        contract = op.contract
    if contract.kind == "none":
        return ValidationReport(contract, True, 0.0)

    checks: dict[str, float] = {}
    gram = _gram_matrix(op)
    gram_excess = float(np.max(np.abs(gram - np.eye(op.rank))))
    checks["gram_residual"] = gram_excess
    failed = gram_excess > GRAM_TOLERANCE

    if contract.kind == "unit_ball":
        eigen_excess = float(np.max(op.eigenvalues) - 1.0)
        checks["eigenvalue_excess"] = eigen_excess
        failed = failed or eigen_excess > EIGENVALUE_TOLERANCE
        margin = max(gram_excess, eigen_excess, 0.0)
        return ValidationReport(contract, not failed, margin, checks)

    # power_bounded: top eigenvalue of M_kl = sqrt(l_k l_l) <v_k, v_l> with
    # v_k = (-Laplacian)^{-power/2} u_k must not exceed 1.
    a = contract.power
    spectra = np.fft.fftn(op.eigenfunctions, axes=tuple(range(1, op.grid.dimension + 1)))
    spectra = spectra.reshape(op.rank, -1) * op.grid.cell_volume
    nsq = op.grid.frequency_norms_squared.reshape(-1)
    zero_col = int(np.flatnonzero(nsq == 0.0)[0])

    if a != 0.0:
        row_norms = np.sqrt(abs_squared(spectra).sum(axis=1))
        zero_mass = np.abs(spectra[:, zero_col])
        offenders = zero_mass > ZERO_MEAN_RTOL * np.maximum(row_norms, 1e-300)
        if np.any(offenders):
            if a < 0:
                raise ZeroModeSingularityError(
                    "zero-mode singularity: power-bounded contract with negative "
                    "power requires mean-zero eigenfunctions"
                )
            # Positive power: the bounding operator annihilates constants, so
            # any zero-mode mass is an outright (infinite) violation.
            checks["power_excess"] = float("inf")
            return ValidationReport(contract, False, float("inf"), checks)

    weights = np.zeros(nsq.shape)
    positive = nsq > 0
    weights[positive] = nsq[positive] ** (-a)
    if a == 0.0:
        weights[zero_col] = 1.0
    scaled = spectra * weights
    overlap = (scaled @ spectra.conj().T) / op.grid.volume
    root_weights = np.sqrt(op.eigenvalues)
    m_matrix = root_weights[:, None] * overlap * root_weights[None, :]
    m_matrix = 0.5 * (m_matrix + m_matrix.conj().T)
    top = float(np.linalg.eigvalsh(m_matrix)[-1])
    power_excess = top - 1.0
    checks["power_excess"] = power_excess
    failed = failed or power_excess > EIGENVALUE_TOLERANCE
    margin = max(gram_excess, power_excess, 0.0)
    return ValidationReport(contract, not failed, margin, checks)


def require_contract(op: FiniteRankOperator, contract: OperatorContract) -> ValidationReport:
    report = validate_contract(op, contract)
    if not report.passed:
        raise ContractViolationError(
            f"operator fails the {contract.kind} contract with margin {report.margin:.3e}"
        )
    return report


FILE_SCHEMA_VERSION = 1


def save_operator(op: FiniteRankOperator, path) -> None:
    """Write a JSON header line followed by the raw eigenfunction array.

    The binary payload is row-major complex128, little endian, which is byte
    for byte the interleaved real/imaginary float64 layout.
    """
    header = {
        "schema_version": FILE_SCHEMA_VERSION,
        "kind": "finite_rank_operator",
        "dimension": op.grid.dimension,
        "box_length": float(op.grid.box_length),
        "points_per_axis": op.grid.points_per_axis,
        "rank": op.rank,
        "eigenvalues": [float(v) for v in op.eigenvalues],
        "contract": op.contract.to_dict(),
    }
    payload = np.ascontiguousarray(op.eigenfunctions.astype(np.dtype("<c16"), copy=False))
    with open(path, "wb") as handle:
        handle.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        handle.write(b"\n")
        handle.write(payload.tobytes(order="C"))


def load_operator(path, size_cap: int = DEFAULT_SIZE_CAP) -> FiniteRankOperator:
    with open(path, "rb") as handle:
        header_line = handle.readline()
        header = json.loads(header_line.decode("utf-8"))
        if header.get("schema_version") != FILE_SCHEMA_VERSION:
            raise ValueError(
                f"unsupported operator file schema {header.get('schema_version')!r}"
            )
        raw = handle.read()
    grid = TorusGrid(
        header["dimension"],
        header["box_length"],
        header["points_per_axis"],
        size_cap=size_cap,
    )
    rank = int(header["rank"])
    expected = rank * grid.size * np.dtype("<c16").itemsize
    if len(raw) != expected:
        raise ValueError(
            f"operator payload has {len(raw)} bytes, expected {expected}"
        )
    functions = np.frombuffer(raw, dtype="<c16").reshape((rank,) + grid.shape).copy()
    weights = np.asarray(header["eigenvalues"], dtype=float)
    contract = OperatorContract.from_dict(header["contract"])
    return FiniteRankOperator(grid, weights, functions, contract=contract)
