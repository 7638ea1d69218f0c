"""Independent oracles and certification for prepared quantum doubles.

oracle_double_state enumerates the reference wavefunction straight from the
multiplication table, touching neither the gate constructors nor the gauging
maps, so any disagreement with a protocol output is attributable. The
stabilizer builders expose the commuting vertex and plaquette projectors,
ground_state_degeneracy counts their joint rank and is cross-checked by an
independent commuting-pair orbit count, and check_identity materializes both
sides of every operator identity the gauging maps rely on and reports the
largest entry difference.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .cellulation import Cellulation
from .gates import (
    controlled_left,
    controlled_right,
    cz_abelian,
    left_mult,
    loop_z,
    loop_z_tilde,
    omega_gate,
    parent_to_pair,
    right_mult,
    sigma_gate,
)
from .groups import (
    FactorSystem,
    FiniteGroup,
    character_table,
    is_nil2_extension,
    irrep_table,
)
from .kwmaps import kw_abelian, kw_hat_abelian, KwMode
from .register import (
    DiagonalOperator,
    LocalOperator,
    QuditRegister,
    SiteSpec,
    StabilizerOperator,
    init_plus,
)

__all__ = [
    "ORACLE_BUDGET",
    "StabilizerReport",
    "oracle_double_state",
    "vertex_action",
    "vertex_stabilizer",
    "plaquette_stabilizer",
    "stabilizer_report",
    "ground_state_degeneracy",
    "commuting_pair_classes",
    "check_identity",
    "identity_names",
    "identity_suite",
]

# enumeration terms for the reference state
ORACLE_BUDGET = 1_000_000
# edge-space dimension for the dense degeneracy projector
GSD_DIM_BUDGET = 2048
# amplitudes for the register-level identity checks
DENSE_CHECK_BUDGET = 5_000_000
# per-column work for the wall push-through check
WORK_BUDGET = 20_000_000
# basis columns for the pure-column identity checks
COLUMN_BUDGET = 2_000_000

EXPECTATION_IMAG_TOL = 1e-10


def _edge_site(e: int) -> Hashable:
    return ("e", e)


def _real(value: complex, what: str) -> float:
    if abs(value.imag) > EXPECTATION_IMAG_TOL:
        raise ValueError(f"{what} expectation {value} is off the real axis beyond {EXPECTATION_IMAG_TOL}")
    return float(value.real)


# ---------------------------------------------------------------------------
# reference state and stabilizers


def oracle_double_state(
    g_group: FiniteGroup,
    cell: Cellulation,
    edge_of: Callable[[int], Hashable] = _edge_site,
    budget: int = ORACLE_BUDGET,
) -> QuditRegister:
    """Reference double state: equal-weight domain walls of every vertex assignment.

    Plain enumeration with multiplication-table lookups only; independent of
    the gate and gauging modules by construction.
    """
    d, n_v, n_e = g_group.order, cell.n_vertices, cell.n_edges
    terms = d**n_v
    if terms > budget or d**n_e > budget:
        raise ValueError(
            f"enumeration needs {terms} terms on a {d}^{n_e} edge space, over the budget {budget}"
        )
    amps = np.zeros((d,) * n_e, dtype=np.complex128)
    for assign in itertools.product(range(d), repeat=n_v):
        walls = tuple(
            g_group.mul(g_group.inverse(assign[i_v]), assign[f_v]) for i_v, f_v in cell.edges
        )
        amps[walls] += 1.0
    amps /= np.linalg.norm(amps)
    specs = [SiteSpec(edge_of(e), "edge", g_group) for e in range(n_e)]
    return QuditRegister(specs, amps)


def vertex_action(
    g_group: FiniteGroup,
    cell: Cellulation,
    v: int,
    g: int,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> List[LocalOperator]:
    """One vertex gauge transformation: left multiplication on the edges
    leaving v, inverse right multiplication on the edges entering v."""
    ops: List[LocalOperator] = []
    for e, sign in cell.edges_at_vertex(v):
        sid = edge_of(e)
        ops.append(left_mult(g_group, g, sid) if sign == 1 else right_mult(g_group, g, sid))
    return ops


def vertex_stabilizer(
    g_group: FiniteGroup,
    cell: Cellulation,
    v: int,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> StabilizerOperator:
    """The vertex projector: the group average of the vertex actions."""
    incident = cell.edges_at_vertex(v)
    if len({e for e, _ in incident}) != len(incident):
        raise ValueError(f"vertex {v} carries a self-loop edge, which the vertex term does not support")
    terms = []
    for g in g_group.elements():
        factors = {op.targets[0]: op for op in vertex_action(g_group, cell, v, g, edge_of)}
        terms.append((1.0 / g_group.order, factors))
    return StabilizerOperator(terms, name=f"A[{v}]")


def plaquette_stabilizer(
    g_group: FiniteGroup,
    cell: Cellulation,
    p: int,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> DiagonalOperator:
    """The plaquette projector: diagonal indicator of a trivial ordered
    boundary-walk product, so it needs no representation data."""
    walk = cell.plaquettes[p]
    edges: List[int] = []
    for e, _ in walk:
        if e not in edges:
            edges.append(e)
    d = g_group.order
    grids = np.indices((d,) * len(edges)).reshape(len(edges), -1)
    acc = np.zeros(grids.shape[1], dtype=np.int64)
    for e, orient in walk:
        labels = grids[edges.index(e)]
        if orient == -1:
            labels = g_group.inv[labels]
        acc = g_group.mult[acc, labels]
    diag = (acc == 0).astype(np.complex128)
    return DiagonalOperator([edge_of(e) for e in edges], diag, name=f"B[{p}]")


@dataclass
class StabilizerReport:
    """Certification record for one edge register.

    Expectations are stored as plain reals; the builder rejects values that
    drift off the real axis. loop_values maps each stored irrep label to its
    per-plaquette loop expectation, which equals the irrep dimension on a
    double state.
    """

    vertex_expectations: Dict[int, float]
    plaquette_expectations: Dict[int, float]
    loop_values: Dict[str, Dict[int, float]] = field(default_factory=dict)
    fidelity_vs_oracle: Optional[float] = None
    gsd: Optional[int] = None

    def min_expectation(self) -> float:
        values = list(self.vertex_expectations.values()) + list(self.plaquette_expectations.values())
        return min(values) if values else 1.0

    def to_json(self) -> str:
        payload = {
            "vertex_expectations": {str(v): x for v, x in sorted(self.vertex_expectations.items())},
            "plaquette_expectations": {str(p): x for p, x in sorted(self.plaquette_expectations.items())},
            "loop_values": {
                label: {str(p): x for p, x in sorted(per.items())}
                for label, per in sorted(self.loop_values.items())
            },
            "min_expectation": self.min_expectation(),
        }
        if self.fidelity_vs_oracle is not None:
            payload["fidelity_vs_oracle"] = float(self.fidelity_vs_oracle)
        if self.gsd is not None:
            payload["gsd"] = int(self.gsd)
        return json.dumps(payload, sort_keys=True, indent=2)


def stabilizer_report(
    reg: QuditRegister,
    g_group: FiniteGroup,
    cell: Cellulation,
    edge_of: Callable[[int], Hashable] = _edge_site,
    oracle: Optional[QuditRegister] = None,
    gsd: Optional[int] = None,
    loops: bool = True,
) -> StabilizerReport:
    """Evaluate every vertex and plaquette projector on reg, plus irrep loop
    values where matrices are stored and the fidelity when a reference state
    is supplied."""
    vexp = {
        v: _real(reg.expectation(vertex_stabilizer(g_group, cell, v, edge_of)), f"A[{v}]")
        for v in range(cell.n_vertices)
    }
    pexp = {
        p: _real(reg.expectation(plaquette_stabilizer(g_group, cell, p, edge_of)), f"B[{p}]")
        for p in range(cell.n_plaquettes)
    }
    loop_values: Dict[str, Dict[int, float]] = {}
    if loops and cell.n_plaquettes:
        try:
            table = irrep_table(g_group)
        except ValueError:
            table = None
        if table is not None:
            for irrep in table.irreps:
                per = {
                    p: _real(
                        reg.expectation(loop_z(irrep, cell.plaquettes[p], cell, edge_of)),
                        f"loop[{irrep.label},{p}]",
                    )
                    for p in range(cell.n_plaquettes)
                }
                loop_values[irrep.label] = per
    fid = None if oracle is None else reg.fidelity(oracle)
    return StabilizerReport(
        vertex_expectations=vexp,
        plaquette_expectations=pexp,
        loop_values=loop_values,
        fidelity_vs_oracle=fid,
        gsd=gsd,
    )


# ---------------------------------------------------------------------------
# ground state degeneracy


def _vertex_perm_columns(
    g_group: FiniteGroup, cell: Cellulation, v: int, g: int, grids: np.ndarray
) -> np.ndarray:
    """Row index hit by each basis column under one vertex action."""
    d = g_group.order
    labels = grids.copy()
    for e, sign in cell.edges_at_vertex(v):
        op = left_mult(g_group, g, "x") if sign == 1 else right_mult(g_group, g, "x")
        labels[e] = op.image[labels[e]]
    return np.ravel_multi_index(tuple(labels), (d,) * cell.n_edges)


def ground_state_degeneracy(
    g_group: FiniteGroup, cell: Cellulation, dim_budget: int = GSD_DIM_BUDGET
) -> int:
    """Rank of the joint stabilizer projector on the edge space."""
    if not cell.closed:
        raise ValueError("degeneracy counting needs a closed cellulation")
    d, n_e = g_group.order, cell.n_edges
    dim = d**n_e
    if dim > dim_budget:
        raise ValueError(f"edge space {d}^{n_e} exceeds the dense projector budget {dim_budget}")
    grids = np.indices((d,) * n_e).reshape(n_e, -1)
    cols = np.arange(dim)
    proj: Optional[np.ndarray] = None
    for v in range(cell.n_vertices):
        acc = np.zeros((dim, dim), dtype=np.complex128)
        for g in g_group.elements():
            rows = _vertex_perm_columns(g_group, cell, v, g, grids)
            acc[rows, cols] += 1.0 / g_group.order
        proj = acc if proj is None else acc @ proj
    if proj is None:
        proj = np.eye(dim, dtype=np.complex128)
    for p in range(cell.n_plaquettes):
        bp = plaquette_stabilizer(g_group, cell, p)
        spots = [sid[1] for sid in bp.targets]
        joint = np.ravel_multi_index(tuple(grids[e] for e in spots), (d,) * len(spots))
        proj *= bp.diag[joint].real[:, None]
    herm_dev = np.abs(proj - proj.conj().T).max()
    if herm_dev > 1e-10:
        raise ValueError(f"stabilizer projector fails hermiticity by {herm_dev:.2e}")
    eigs = np.linalg.eigvalsh((proj + proj.conj().T) / 2)
    loose = eigs[(eigs > 1e-8) & (eigs < 1 - 1e-8)]
    if loose.size:
        raise ValueError(f"projector spectrum has {loose.size} values away from 0 and 1")
    return int(np.count_nonzero(eigs >= 1 - 1e-8))


def commuting_pair_classes(g_group: FiniteGroup) -> int:
    """Commuting pairs counted modulo simultaneous conjugation.

    Independent of all state machinery; equals the number of anyon types of
    the double model, i.e. its torus degeneracy.
    """
    pairs = [
        (a, b)
        for a in g_group.elements()
        for b in g_group.elements()
        if g_group.mul(a, b) == g_group.mul(b, a)
    ]
    seen = set()
    count = 0
    for pair in pairs:
        if pair in seen:
            continue
        count += 1
        for g in g_group.elements():
            seen.add((g_group.conjugate(g, pair[0]), g_group.conjugate(g, pair[1])))
    return count


# ---------------------------------------------------------------------------
# pure-column evolution: every gauging layer is a permutation, so a basis
# column stays a basis column and a whole map fits in one label array per site


class _PureColumns:
    """All basis columns of a permutation-layer circuit, tracked as labels."""

    def __init__(self, n_cols: int):
        self.n_cols = n_cols
        self.dims: Dict[Hashable, int] = {}
        self.labels: Dict[Hashable, np.ndarray] = {}
        self.phases = np.ones(n_cols, dtype=np.complex128)
        self.scale = 1.0

    def add_site(self, sid: Hashable, dim: int, labels: np.ndarray) -> None:
        self.dims[sid] = dim
        self.labels[sid] = np.asarray(labels, dtype=np.int64)

    def apply(self, op: LocalOperator) -> None:
        dims = [self.dims[t] for t in op.targets]
        flat = self.labels[op.targets[0]]
        for t, dim in zip(op.targets[1:], dims[1:]):
            flat = flat * dim + self.labels[t]
        if op.kind == "perm":
            if op.phase is not None:
                self.phases = self.phases * op.phase[flat]
            out = op.image[flat]
            for t, dim in zip(reversed(op.targets), reversed(dims)):
                self.labels[t] = out % dim
                out = out // dim
        elif op.kind == "diag":
            self.phases = self.phases * op.diag[flat]
        else:
            raise ValueError("pure-column evolution covers perm and diag layers only")

    def contract_plus(self, sid: Hashable) -> None:
        self.scale *= self.dims.pop(sid) ** -0.5
        del self.labels[sid]

    def amplitudes(self) -> np.ndarray:
        return self.scale * self.phases

    def row_index(self, order: Sequence[Hashable]) -> np.ndarray:
        flat = np.zeros(self.n_cols, dtype=np.int64)
        for sid in order:
            flat = flat * self.dims[sid] + self.labels[sid]
        return flat


def _pure_deviation(
    rows_a: np.ndarray, amps_a: np.ndarray, rows_b: np.ndarray, amps_b: np.ndarray
) -> float:
    """Largest dense-matrix entry difference between two one-entry-per-column maps."""
    same = rows_a == rows_b
    dev = np.where(
        same, np.abs(amps_a - amps_b), np.maximum(np.abs(amps_a), np.abs(amps_b))
    )
    return float(dev.max()) if dev.size else 0.0


def _column_grids(order: int, n_v: int) -> np.ndarray:
    n_cols = order**n_v
    if n_cols > COLUMN_BUDGET:
        raise ValueError(f"{order}^{n_v} basis columns exceed the budget {COLUMN_BUDGET}")
    return np.indices((order,) * n_v).reshape(n_v, -1)


def _pure_kw_g(g_group: FiniteGroup, cell: Cellulation) -> _PureColumns:
    """The full gauging map, column by column, from the entangler tables."""
    grids = _column_grids(g_group.order, cell.n_vertices)
    pc = _PureColumns(grids.shape[1])
    for v in range(cell.n_vertices):
        pc.add_site(("v", v), g_group.order, grids[v])
    for e in range(cell.n_edges):
        pc.add_site(("e", e), g_group.order, np.zeros(pc.n_cols, dtype=np.int64))
    for e, (i_v, f_v) in enumerate(cell.edges):
        pc.apply(controlled_left(g_group, ("v", i_v), ("e", e)).dagger())
        pc.apply(controlled_right(g_group, ("v", f_v), ("e", e)).dagger())
    for v in range(cell.n_vertices):
        pc.contract_plus(("v", v))
    return pc


def _pure_kw_n(fs: FactorSystem, cell: Cellulation) -> _PureColumns:
    """The subgroup gauging map on split vertices, quotient parts left live."""
    if fs.parent is None:
        raise ValueError("factor system carries no parent tables")
    grids = _column_grids(fs.parent.order, cell.n_vertices)
    n_grp, q_grp = fs.n_group, fs.q_group
    pc = _PureColumns(grids.shape[1])
    for v in range(cell.n_vertices):
        pc.add_site(("n", v), n_grp.order, fs.tpart[grids[v]])
        pc.add_site(("q", v), q_grp.order, fs.proj[grids[v]])
    for e in range(cell.n_edges):
        pc.add_site(("e", e), n_grp.order, np.zeros(pc.n_cols, dtype=np.int64))
    for e, (i_v, f_v) in enumerate(cell.edges):
        pc.apply(controlled_left(n_grp, ("n", i_v), ("e", e)).dagger())
        pc.apply(controlled_right(n_grp, ("n", f_v), ("e", e)).dagger())
        pc.apply(omega_gate(fs, ("q", i_v), ("e", e), ("q", f_v)))
        pc.apply(sigma_gate(fs, ("q", i_v), ("e", e)).dagger())
    for v in range(cell.n_vertices):
        pc.contract_plus(("n", v))
    return pc


def _edge_order(cell: Cellulation) -> List[Hashable]:
    return [("e", e) for e in range(cell.n_edges)]


def _split_row_order(cell: Cellulation) -> List[Hashable]:
    return [("q", v) for v in range(cell.n_vertices)] + _edge_order(cell)


def _column_shift(grids: np.ndarray, mapped: List[np.ndarray], order: int) -> np.ndarray:
    """Column index of each shifted vertex assignment."""
    flat = np.zeros(grids.shape[1], dtype=np.int64)
    for labels in mapped:
        flat = flat * order + labels
    return flat


# ---------------------------------------------------------------------------
# identity checks


def _check_left_action_gauged_away(g_group: FiniteGroup, cell: Cellulation) -> float:
    base = _pure_kw_g(g_group, cell)
    rows = base.row_index(_edge_order(cell))
    amps = base.amplitudes()
    grids = _column_grids(g_group.order, cell.n_vertices)
    worst = 0.0
    for g in range(1, g_group.order):
        perm = _column_shift(grids, [g_group.mult[g, grids[v]] for v in range(cell.n_vertices)], g_group.order)
        worst = max(worst, _pure_deviation(rows[perm], amps[perm], rows, amps))
    return worst


def _check_right_action_becomes_vertex_term(g_group: FiniteGroup, cell: Cellulation) -> float:
    base = _pure_kw_g(g_group, cell)
    order = _edge_order(cell)
    rows = base.row_index(order)
    amps = base.amplitudes()
    grids = _column_grids(g_group.order, cell.n_vertices)
    d = g_group.order
    edge_labels = [base.labels[("e", e)] for e in range(cell.n_edges)]
    worst = 0.0
    for v in range(cell.n_vertices):
        for g in range(1, d):
            mapped = [
                g_group.mult[grids[w], g_group.inv[g]] if w == v else grids[w]
                for w in range(cell.n_vertices)
            ]
            perm = _column_shift(grids, mapped, d)
            moved = [lab.copy() for lab in edge_labels]
            for e, sign in cell.edges_at_vertex(v):
                op = left_mult(g_group, g, "x") if sign == 1 else right_mult(g_group, g, "x")
                moved[e] = op.image[moved[e]]
            flat = np.zeros(base.n_cols, dtype=np.int64)
            for lab in moved:
                flat = flat * d + lab
            worst = max(worst, _pure_deviation(rows[perm], amps[perm], flat, amps))
    return worst


def _check_plaquette_loops_carry_irrep_dimension(g_group: FiniteGroup, cell: Cellulation) -> float:
    if not cell.plaquettes:
        raise ValueError("needs a cellulation with plaquettes")
    table = irrep_table(g_group)
    base = _pure_kw_g(g_group, cell)
    worst = 0.0
    for irrep in table.irreps:
        for p in range(cell.n_plaquettes):
            op = loop_z(irrep, cell.plaquettes[p], cell)
            dims = [base.dims[t] for t in op.targets]
            flat = base.labels[op.targets[0]]
            for t, dim in zip(op.targets[1:], dims[1:]):
                flat = flat * dim + base.labels[t]
            traces = op.diag[flat]
            worst = max(worst, base.scale * float(np.abs(traces - irrep.dim).max()))
    return worst


def _check_quotient_symmetry_survives(fs: FactorSystem, cell: Cellulation) -> float:
    base = _pure_kw_n(fs, cell)
    order = _split_row_order(cell)
    rows = base.row_index(order)
    amps = base.amplitudes()
    parent, q_grp = fs.parent, fs.q_group
    grids = _column_grids(parent.order, cell.n_vertices)
    worst = 0.0
    for g in range(1, parent.order):
        perm = _column_shift(grids, [parent.mult[g, grids[v]] for v in range(cell.n_vertices)], parent.order)
        shifted = _PureColumns(base.n_cols)
        for sid in order:
            shifted.add_site(sid, base.dims[sid], base.labels[sid])
        qg = int(fs.proj[g])
        for v in range(cell.n_vertices):
            shifted.labels[("q", v)] = q_grp.mult[qg, shifted.labels[("q", v)]]
        worst = max(worst, _pure_deviation(rows[perm], amps[perm], shifted.row_index(order), amps))
    return worst


def _check_dressed_loops_carry_irrep_dimension(fs: FactorSystem, cell: Cellulation) -> float:
    if not cell.plaquettes:
        raise ValueError("needs a cellulation with plaquettes")
    table = irrep_table(fs.n_group)
    base = _pure_kw_n(fs, cell)
    worst = 0.0
    for irrep in table.irreps:
        for p in range(cell.n_plaquettes):
            op = loop_z_tilde(fs, irrep, cell.plaquettes[p], cell, lambda v: ("q", v), _edge_site)
            dims = [base.dims[t] for t in op.targets]
            flat = base.labels[op.targets[0]]
            for t, dim in zip(op.targets[1:], dims[1:]):
                flat = flat * dim + base.labels[t]
            traces = op.diag[flat]
            worst = max(worst, base.scale * float(np.abs(traces - irrep.dim).max()))
    return worst


def _check_two_step_composition(fs: FactorSystem, cell: Cellulation) -> float:
    base = _pure_kw_n(fs, cell)
    q_grp = fs.q_group
    for e in range(cell.n_edges):
        base.add_site(("qe", e), q_grp.order, np.zeros(base.n_cols, dtype=np.int64))
    for e, (i_v, f_v) in enumerate(cell.edges):
        base.apply(controlled_left(q_grp, ("q", i_v), ("qe", e)).dagger())
        base.apply(controlled_right(q_grp, ("q", f_v), ("qe", e)).dagger())
    for v in range(cell.n_vertices):
        base.contract_plus(("q", v))
    to_parent = np.argsort(parent_to_pair(fs))
    parent = fs.parent
    flat = np.zeros(base.n_cols, dtype=np.int64)
    for e in range(cell.n_edges):
        merged = to_parent[base.labels[("e", e)] * q_grp.order + base.labels[("qe", e)]]
        flat = flat * parent.order + merged
    full = _pure_kw_g(parent, cell)
    rows = full.row_index(_edge_order(cell))
    return _pure_deviation(flat, base.amplitudes(), rows, full.amplitudes())


def _conjugation_deviation(lhs_image: np.ndarray, rhs_image: np.ndarray) -> float:
    return 0.0 if np.array_equal(lhs_image, rhs_image) else 1.0


def _pair_images(g_group: FiniteGroup, g: int):
    d = g_group.order
    a = np.repeat(np.arange(d), d)
    b = np.tile(np.arange(d), d)
    cl = controlled_left(g_group, "a", "b")
    cr = controlled_right(g_group, "a", "b")
    lg = left_mult(g_group, g, "x").image
    rg = right_mult(g_group, g, "x").image
    return d, a, b, cl, cr, lg, rg


def _check_cl_absorbs_left_multiplication(g_group: FiniteGroup, cell: Cellulation) -> float:
    worst = 0.0
    for g in range(1, g_group.order):
        d, a, b, cl, _, lg, _ = _pair_images(g_group, g)
        inner = lg[a] * d + lg[b]
        lhs = cl.dagger().image[inner[cl.image]]
        rhs = lg[a] * d + b
        worst = max(worst, _conjugation_deviation(lhs, rhs))
    return worst


def _check_cr_absorbs_left_multiplication(g_group: FiniteGroup, cell: Cellulation) -> float:
    worst = 0.0
    for g in range(1, g_group.order):
        d, a, b, _, cr, lg, rg = _pair_images(g_group, g)
        inner = lg[a] * d + rg[b]
        lhs = cr.dagger().image[inner[cr.image]]
        rhs = lg[a] * d + b
        worst = max(worst, _conjugation_deviation(lhs, rhs))
    return worst


def _check_cl_spreads_right_multiplication(g_group: FiniteGroup, cell: Cellulation) -> float:
    worst = 0.0
    for g in range(1, g_group.order):
        d, a, b, cl, _, lg, rg = _pair_images(g_group, g)
        inner = rg[a] * d + b
        lhs = cl.dagger().image[inner[cl.image]]
        rhs = rg[a] * d + lg[b]
        worst = max(worst, _conjugation_deviation(lhs, rhs))
    return worst


def _check_cr_spreads_right_multiplication(g_group: FiniteGroup, cell: Cellulation) -> float:
    worst = 0.0
    for g in range(1, g_group.order):
        d, a, b, _, cr, _, rg = _pair_images(g_group, g)
        inner = rg[a] * d + b
        lhs = cr.dagger().image[inner[cr.image]]
        rhs = rg[a] * d + rg[b]
        worst = max(worst, _conjugation_deviation(lhs, rhs))
    return worst


def _check_charge_diagonals_push_to_edge(g_group: FiniteGroup, cell: Cellulation) -> float:
    """Conjugating the paired charge diagonal through either entangler leaves
    a bare edge diagonal, component by component."""
    table = irrep_table(g_group)
    d = g_group.order
    a = np.repeat(np.arange(d), d)
    b = np.tile(np.arange(d), d)
    cl_inv = controlled_left(g_group, "a", "b").dagger().image
    cr_inv = controlled_right(g_group, "a", "b").dagger().image
    worst = 0.0
    for irrep in table.irreps:
        mats = irrep.matrices
        rhs = mats[b]
        prod_l = np.einsum("xij,xjk->xik", mats[a], mats[b])
        lhs_l = prod_l[cl_inv]
        worst = max(worst, float(np.abs(lhs_l - rhs).max()))
        prod_r = np.einsum("xij,xjk->xik", mats[b], mats[g_group.inv[a]])
        lhs_r = prod_r[cr_inv]
        worst = max(worst, float(np.abs(lhs_r - rhs).max()))
    return worst


def _check_plaquette_projector_from_irrep_sum(g_group: FiniteGroup, cell: Cellulation) -> float:
    """The delta-form plaquette projector equals the dimension-weighted sum of
    irrep loop diagonals."""
    if not cell.plaquettes:
        raise ValueError("needs a cellulation with plaquettes")
    table = irrep_table(g_group)
    worst = 0.0
    for p in range(cell.n_plaquettes):
        bp = plaquette_stabilizer(g_group, cell, p)
        acc = np.zeros_like(bp.diag)
        for irrep in table.irreps:
            op = loop_z(irrep, cell.plaquettes[p], cell)
            if list(op.targets) != list(bp.targets):
                raise ValueError("loop and projector disagree on the edge set")
            acc += irrep.dim * op.diag
        worst = max(worst, float(np.abs(acc / g_group.order - bp.diag).max()))
    return worst


def _nil2_sites(fs: FactorSystem, cell: Cellulation):
    n_grp, q_grp = fs.n_group, fs.q_group
    q_verts = [SiteSpec(("v", v), "vertex", q_grp) for v in range(cell.n_vertices)]
    n_edges = [SiteSpec(("e", e, "n"), "edge", n_grp) for e in range(cell.n_edges)]
    q_edges = [SiteSpec(("e", e, "q"), "edge", q_grp) for e in range(cell.n_edges)]
    plaqs = [SiteSpec(("p", p), "plaquette", n_grp) for p in range(cell.n_plaquettes)]
    return q_verts, n_edges, q_edges, plaqs


def _check_central_extension_circuit_matches_composition(
    fs: FactorSystem, cell: Cellulation
) -> float:
    """The three-layer circuit with deferred projections equals the chained
    plaquette-route, dressing, vertex-route grouping of the same map."""
    if not is_nil2_extension(fs):
        raise ValueError("needs a central extension with abelian subgroup and quotient")
    if not cell.closed or not cell.plaquettes:
        raise ValueError("needs a closed cellulation with plaquettes")
    n_grp, q_grp = fs.n_group, fs.q_group
    dim = (
        q_grp.order ** cell.n_vertices
        * (n_grp.order * q_grp.order) ** cell.n_edges
        * n_grp.order ** cell.n_plaquettes
    )
    if dim > DENSE_CHECK_BUDGET:
        raise ValueError(f"joint space of {dim} amplitudes exceeds the budget {DENSE_CHECK_BUDGET}")
    q_verts, n_edges, q_edges, plaqs = _nil2_sites(fs, cell)

    def plus(spec: SiteSpec) -> np.ndarray:
        return np.full(spec.dim, spec.dim**-0.5, dtype=np.complex128)

    def ident(spec: SiteSpec) -> np.ndarray:
        v = np.zeros(spec.dim, dtype=np.complex128)
        v[0] = 1.0
        return v

    one = init_plus(q_verts + plaqs)
    one.add_sites(n_edges, plus)
    one.add_sites(q_edges, ident)
    for e in range(cell.n_edges):
        p_minus, p_plus = cell.plaquette_pair(e)
        if p_minus != p_plus:
            one.apply(cz_abelian(n_grp, ("p", p_plus), ("e", e, "n")))
            one.apply(cz_abelian(n_grp, ("p", p_minus), ("e", e, "n")).dagger())
    for e, (i_v, f_v) in enumerate(cell.edges):
        one.apply(omega_gate(fs, ("v", i_v), ("e", e, "n"), ("v", f_v)))
    for e, (i_v, f_v) in enumerate(cell.edges):
        one.apply(controlled_left(q_grp, ("v", i_v), ("e", e, "q")).dagger())
        one.apply(controlled_right(q_grp, ("v", f_v), ("e", e, "q")).dagger())
    prob_one = 1.0
    for p in range(cell.n_plaquettes):
        prob_one *= one.project_plus(("p", p))
    for v in range(cell.n_vertices):
        prob_one *= one.project_plus(("v", v))

    hat_reg = init_plus(plaqs)
    res_hat = kw_hat_abelian(
        hat_reg, cell, n_grp, KwMode.postselect(), plaquette_of=lambda p: ("p", p), edge_of=lambda e: ("e", e, "n")
    )
    two = init_plus(q_verts)
    two_amps = np.multiply.outer(two.amps, hat_reg.amps)
    two = QuditRegister(q_verts + list(hat_reg.sites), two_amps)
    for e, (i_v, f_v) in enumerate(cell.edges):
        two.apply(omega_gate(fs, ("v", i_v), ("e", e, "n"), ("v", f_v)))
    res_q = kw_abelian(
        two, cell, q_grp, KwMode.postselect(), vertex_of=lambda v: ("v", v), edge_of=lambda e: ("e", e, "q")
    )
    # both routes renormalize after each projection, so weigh the branches back
    prob_two = res_hat.probability * res_q.probability
    one._check_layout(two)
    diff = np.sqrt(prob_one) * one.amps - np.sqrt(prob_two) * two.amps
    return float(np.abs(diff).max())


def _check_decorated_wall_pushthrough(fs: FactorSystem, cell: Cellulation) -> float:
    """Commuting the dressing layer through the plaquette-route map leaves a
    pure diagonal pairing each edge's vertex cocycle with its plaquette wall."""
    n_grp, q_grp = fs.n_group, fs.q_group
    if not n_grp.is_abelian:
        raise ValueError("needs an abelian subgroup")
    if not cell.closed or not cell.plaquettes:
        raise ValueError("needs a closed cellulation with plaquettes")
    dn, dq = n_grp.order, q_grp.order
    n_cols = dq**cell.n_vertices * dn**cell.n_plaquettes
    if n_cols * dn**cell.n_edges > WORK_BUDGET:
        raise ValueError(f"column sweep exceeds the work budget {WORK_BUDGET}")
    chi = character_table(n_grp)
    cz = cz_abelian(n_grp, "p", "e").diag.reshape(dn, dn)
    omega_images = omega_gate(fs, "qi", "e", "qf").image.reshape(dq, dn, dq)
    pairs = [cell.plaquette_pair(e) for e in range(cell.n_edges)]
    edge_scale = dn**-0.5
    worst = 0.0
    for qs in itertools.product(range(dq), repeat=cell.n_vertices):
        for bs in itertools.product(range(dn), repeat=cell.n_plaquettes):
            lhs_vecs: List[np.ndarray] = []
            rhs_phase = 1.0 + 0.0j
            for e, (i_v, f_v) in enumerate(cell.edges):
                p_minus, p_plus = pairs[e]
                vec = np.full(dn, edge_scale, dtype=np.complex128)
                if p_minus != p_plus:
                    vec = vec * cz[bs[p_plus]] * np.conj(cz[bs[p_minus]])
                qi, qf = qs[i_v], qs[f_v]
                moved = np.empty_like(vec)
                targets = (omega_images[qi, :, qf] // dq) % dn
                moved[targets] = vec
                lhs_vecs.append(moved)
                wall = n_grp.mul(n_grp.inverse(bs[p_plus]), bs[p_minus])
                rhs_phase *= chi[fs.omega_inv(qi, q_grp.mul(q_grp.inverse(qi), qf)), wall]
            lhs = np.ones(1, dtype=np.complex128)
            rhs = np.ones(1, dtype=np.complex128)
            for e in range(cell.n_edges):
                lhs = np.multiply.outer(lhs, lhs_vecs[e]).reshape(-1)
                base = np.full(dn, edge_scale, dtype=np.complex128)
                p_minus, p_plus = pairs[e]
                if p_minus != p_plus:
                    base = base * cz[bs[p_plus]] * np.conj(cz[bs[p_minus]])
                rhs = np.multiply.outer(rhs, base).reshape(-1)
            worst = max(worst, float(np.abs(lhs - rhs_phase * rhs).max()))
    return worst


_GROUP_IDENTITIES: Dict[str, Callable[[FiniteGroup, Cellulation], float]] = {
    "left_action_gauged_away": _check_left_action_gauged_away,
    "right_action_becomes_vertex_term": _check_right_action_becomes_vertex_term,
    "plaquette_loops_carry_irrep_dimension": _check_plaquette_loops_carry_irrep_dimension,
    "plaquette_projector_from_irrep_sum": _check_plaquette_projector_from_irrep_sum,
    "cl_absorbs_left_multiplication": _check_cl_absorbs_left_multiplication,
    "cr_absorbs_left_multiplication": _check_cr_absorbs_left_multiplication,
    "cl_spreads_right_multiplication": _check_cl_spreads_right_multiplication,
    "cr_spreads_right_multiplication": _check_cr_spreads_right_multiplication,
    "charge_diagonals_push_to_edge": _check_charge_diagonals_push_to_edge,
}

_SYSTEM_IDENTITIES: Dict[str, Callable[[FactorSystem, Cellulation], float]] = {
    "two_step_composition": _check_two_step_composition,
    "quotient_symmetry_survives": _check_quotient_symmetry_survives,
    "dressed_loops_carry_irrep_dimension": _check_dressed_loops_carry_irrep_dimension,
    "central_extension_circuit_matches_composition": _check_central_extension_circuit_matches_composition,
    "decorated_wall_pushthrough": _check_decorated_wall_pushthrough,
}


def identity_names() -> Tuple[str, ...]:
    return tuple(list(_GROUP_IDENTITIES) + list(_SYSTEM_IDENTITIES))


def check_identity(name: str, subject, cell: Cellulation) -> float:
    """Materialize both sides of one named identity on one graph and return
    the largest absolute entry difference."""
    if name in _GROUP_IDENTITIES:
        if not isinstance(subject, FiniteGroup):
            raise TypeError(f"identity {name!r} takes a group, got {type(subject).__name__}")
        return _GROUP_IDENTITIES[name](subject, cell)
    if name in _SYSTEM_IDENTITIES:
        if not isinstance(subject, FactorSystem):
            raise TypeError(f"identity {name!r} takes a factor system, got {type(subject).__name__}")
        return _SYSTEM_IDENTITIES[name](subject, cell)
    raise KeyError(f"unknown identity {name!r}; known: {', '.join(identity_names())}")


def identity_suite(
    cell: Cellulation,
    groups: Optional[Dict[str, FiniteGroup]] = None,
    systems: Optional[Dict[str, FactorSystem]] = None,
) -> List[Dict[str, object]]:
    """Run every known identity against every supplied subject on one graph.

    Returns a flat table; combinations an identity cannot apply to (open
    graph, missing irrep matrices, non-central extension, budget) appear as
    rows with a skip reason instead of a deviation.
    """
    rows: List[Dict[str, object]] = []
    for name in identity_names():
        subjects = (groups or {}) if name in _GROUP_IDENTITIES else (systems or {})
        for label, subject in subjects.items():
            row: Dict[str, object] = {"identity": name, "subject": label, "graph": cell.name}
            try:
                row["deviation"] = check_identity(name, subject, cell)
            except ValueError as err:
                row["skipped"] = str(err)
            rows.append(row)
    return rows
