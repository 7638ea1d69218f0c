"""Preparation protocols for quantum double states, with shot accounting.

Each protocol assembles the gauging maps into measurement rounds, repairs
sampled outcomes with one feedforward layer per round, and reassembles split
edge labels into the full group at the end. The transcript records every
unitary layer, outcome, and correction plan, along with the branch
probability and the fidelity against the enumeration oracle when requested.

Syndrome bookkeeping helpers read dual labels back off a register: the
charge label at a vertex is the character row traced out by the vertex
actions, the flux label at a plaquette is the inverse of the concentrated
boundary-walk product. On any protocol branch before feedforward these
equal the measurement outcomes exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Dict, Hashable, List, Optional, Tuple

import numpy as np

from .cellulation import Cellulation, dual_spanning_tree, spanning_tree
from .feedforward import CorrectionPlan, SyndromeSet, charge_correction, flux_correction
from .gates import (
    controlled_left,
    controlled_right,
    cz_abelian,
    left_mult,
    omega_gate,
    parent_to_pair,
    right_mult,
    z_dual,
)
from .groups import (
    FactorSystem,
    FiniteGroup,
    character_table,
    derived_series,
    factor_system_of,
    is_nil2_extension,
)
from .kwmaps import KwMode, kw_abelian, kw_exact_g, kw_n_in_g
from .register import STATE_TOL, DiagonalOperator, QuditRegister, SiteSpec, StabilizerOperator, init_plus

__all__ = [
    "ProtocolRound",
    "ProtocolTranscript",
    "prepare_abelian_double",
    "prepare_nil2_double",
    "prepare_metabelian_double",
    "prepare_solvable_double",
    "gauge_input_state",
    "charge_syndromes",
    "flux_syndromes",
]

SYNDROME_TOL = 1e-8


def _vertex_site(v: int) -> Hashable:
    return ("v", v)


def _edge_site(e: int) -> Hashable:
    return ("e", e)


def _plus_local(spec: SiteSpec) -> np.ndarray:
    return np.full(spec.dim, spec.dim**-0.5, dtype=np.complex128)


def _identity_local(spec: SiteSpec) -> np.ndarray:
    v = np.zeros(spec.dim, dtype=np.complex128)
    v[0] = 1.0
    return v


# ---------------------------------------------------------------------------
# transcript record


@dataclass
class ProtocolRound:
    """One measurement round: unitary layers, outcomes, applied corrections."""

    label: str
    layers: List[str]
    outcomes: Dict[str, Dict[int, int]]
    corrections: List[Dict[str, object]] = field(default_factory=list)
    probability: float = 1.0

    def as_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "layers": list(self.layers),
            "outcomes": {
                family: {str(k): int(v) for k, v in sorted(vals.items())}
                for family, vals in sorted(self.outcomes.items())
            },
            "corrections": self.corrections,
            "probability": float(self.probability),
        }


@dataclass
class ProtocolTranscript:
    """Full run record plus the final register.

    shots counts the measurement layers actually executed, one per round;
    corrections within a round commute (diagonals commute among themselves,
    and the two correction families act on disjoint sites).
    """

    protocol: str
    group: str
    graph: str
    shots: int
    rounds: List[ProtocolRound]
    register: QuditRegister
    probability: float
    fidelity_vs_oracle: Optional[float] = None

    def __post_init__(self):
        if self.shots != len(self.rounds):
            raise ValueError(f"shots {self.shots} disagrees with {len(self.rounds)} recorded rounds")

    def to_json(self) -> str:
        payload = {
            "protocol": self.protocol,
            "group": self.group,
            "graph": self.graph,
            "shots": self.shots,
            "rounds": [r.as_dict() for r in self.rounds],
            "probability": float(self.probability),
            "register": {
                "sites": [str(s.sid) for s in self.register.sites],
                "dimension": int(np.prod([s.dim for s in self.register.sites], dtype=np.int64)),
            },
        }
        if self.fidelity_vs_oracle is not None:
            payload["fidelity_vs_oracle"] = float(self.fidelity_vs_oracle)
        return json.dumps(payload, sort_keys=True, indent=2)


def _plan_record(plan: CorrectionPlan, applied: bool = True) -> Dict[str, object]:
    return {
        "basis": plan.basis,
        "exponents": {str(e): int(x) for e, x in sorted(plan.exponents.items())},
        "applied": bool(applied),
    }


def _round_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence(entropy=(int(seed), int(r))).generate_state(1)[0])


def _round_mode(mode: KwMode, r: int, total: int) -> KwMode:
    """Per-round sampling streams; postselect and forced pass through.

    A forced outcome table applies to every round (absent keys default to
    the trivial outcome), so an empty table reproduces postselect exactly.
    """
    if mode.kind != "sample" or total == 1:
        return mode
    return KwMode.sample(_round_seed(mode.seed, r))


def _measure_layer(
    reg: QuditRegister, mode: KwMode, pairs: List[Tuple[int, Hashable]]
) -> Tuple[Dict[int, int], float]:
    rng = mode.generator()
    outcomes: Dict[int, int] = {}
    prob = 1.0
    for key, sid in pairs:
        if mode.kind == "postselect":
            prob *= reg.project_plus(sid)
            outcomes[key] = 0
        else:
            forced = mode.outcomes.get(key, 0) if mode.kind == "forced" else None
            outcomes[key] = reg.measure_fourier(sid, rng=rng, forced=forced)
            prob *= reg.retired[sid].probability
    return outcomes, prob


def _oracle_fidelity(reg: QuditRegister, g_group: FiniteGroup, cell: Cellulation) -> float:
    probe = init_plus([SiteSpec(("v", v), "vertex", g_group) for v in range(cell.n_vertices)])
    return reg.fidelity(kw_exact_g(probe, cell, g_group))


# ---------------------------------------------------------------------------
# solvable round planning


def _solvable_chain(g_group: FiniteGroup) -> Tuple[List[FactorSystem], FiniteGroup]:
    """Factor systems for the rounds, innermost abelian subgroup each stage.

    Every stage gauges the last nontrivial derived subgroup of what remains,
    which is always abelian and normal, until the remainder itself is
    abelian. Non-solvable groups are rejected naming the obstruction.
    """
    chain, length = derived_series(g_group)
    if length is None:
        core = chain[-1]
        raise ValueError(
            f"{g_group.name} is not solvable: its perfect core has order {core.order} "
            f"and no measurement round can reduce a perfect subgroup"
        )
    systems: List[FactorSystem] = []
    h = g_group
    while not h.is_abelian:
        sub = derived_series(h)[0][-2]
        fs = factor_system_of(h, sub)
        systems.append(fs)
        h = fs.q_group
    return systems, h


def _reassemble_edges(reg: QuditRegister, cell: Cellulation, systems: List[FactorSystem]) -> None:
    """Merge per-round edge labels back into the full group, innermost first.

    Each merge pairs a subgroup label with the already-reassembled quotient
    label (subgroup-major) and relabels the pair to the parent's elements: a
    pure relabeling, no gates.
    """
    for j in range(len(systems), 0, -1):
        fs = systems[j - 1]
        image = np.argsort(parent_to_pair(fs))
        for e in range(cell.n_edges):
            new_sid = ("e", e) if j == 1 else ("e", e, j)
            reg.merge_sites(("e", e, j), ("e", e, j + 1), SiteSpec(new_sid, "edge", fs.parent))
            reg.relabel_site(new_sid, image)


def _split_vertices(reg: QuditRegister, cell: Cellulation, fs: FactorSystem, j: int) -> None:
    """Present each live vertex in the (subgroup, quotient) pair basis."""
    pair = parent_to_pair(fs)
    for v in range(cell.n_vertices):
        sid = ("v", v) if j == 1 else ("v", v, j - 1, "q")
        reg.relabel_site(sid, pair)
        reg.split_site(
            sid,
            SiteSpec(("v", v, j, "n"), "vertex", fs.n_group),
            SiteSpec(("v", v, j, "q"), "vertex", fs.q_group),
        )


def _subgroup_round(
    reg: QuditRegister, cell: Cellulation, fs: FactorSystem, j: int, mode: KwMode
) -> ProtocolRound:
    res = kw_n_in_g(
        reg,
        cell,
        fs,
        mode,
        n_of=lambda v: ("v", v, j, "n"),
        q_of=lambda v: ("v", v, j, "q"),
        edge_of=lambda e: ("e", e, j),
    )
    return ProtocolRound(
        label=f"gauge the order-{fs.n_group.order} normal subgroup inside {fs.parent.name}",
        layers=["restricted edge entangler with cocycle and automorphism dressing"],
        outcomes={"charge": res.outcomes},
        corrections=[_plan_record(res.corrections)],
        probability=res.probability,
    )


def _abelian_round(
    reg: QuditRegister,
    cell: Cellulation,
    a_group: FiniteGroup,
    mode: KwMode,
    vertex_of: Callable[[int], Hashable],
    edge_of: Callable[[int], Hashable],
) -> ProtocolRound:
    res = kw_abelian(reg, cell, a_group, mode, vertex_of=vertex_of, edge_of=edge_of)
    return ProtocolRound(
        label=f"gauge the abelian group {a_group.name}",
        layers=["controlled group multiplications write domain walls onto identity-state edges"],
        outcomes={"charge": res.outcomes},
        corrections=[_plan_record(res.corrections)],
        probability=res.probability,
    )


def _gauge_rounds(
    reg: QuditRegister,
    g_group: FiniteGroup,
    cell: Cellulation,
    mode: KwMode,
    protocol: str,
    oracle: Optional[QuditRegister],
) -> ProtocolTranscript:
    systems, final_grp = _solvable_chain(g_group)
    total = len(systems) + 1
    rounds: List[ProtocolRound] = []
    prob = 1.0
    for j, fs in enumerate(systems, start=1):
        _split_vertices(reg, cell, fs, j)
        rnd = _subgroup_round(reg, cell, fs, j, _round_mode(mode, j, total))
        rounds.append(rnd)
        prob *= rnd.probability
    if systems:
        vertex_of = lambda v: ("v", v, len(systems), "q")
        edge_of = lambda e: ("e", e, total)
    else:
        vertex_of, edge_of = _vertex_site, _edge_site
    rnd = _abelian_round(reg, cell, final_grp, _round_mode(mode, total, total), vertex_of, edge_of)
    rounds.append(rnd)
    prob *= rnd.probability
    if systems:
        _reassemble_edges(reg, cell, systems)
    fid = reg.fidelity(oracle) if oracle is not None else None
    return ProtocolTranscript(
        protocol=protocol,
        group=g_group.name,
        graph=cell.name,
        shots=total,
        rounds=rounds,
        register=reg,
        probability=prob,
        fidelity_vs_oracle=fid,
    )


# ---------------------------------------------------------------------------
# protocols


def prepare_abelian_double(
    a_group: FiniteGroup, cell: Cellulation, mode: KwMode, with_oracle: bool = True
) -> ProtocolTranscript:
    """One-shot double of an abelian group from uniform vertex ancillas."""
    if not a_group.is_abelian:
        raise ValueError("prepare_abelian_double needs an abelian group")
    reg = init_plus([SiteSpec(("v", v), "vertex", a_group) for v in range(cell.n_vertices)])
    rnd = _abelian_round(reg, cell, a_group, mode, _vertex_site, _edge_site)
    fid = _oracle_fidelity(reg, a_group, cell) if with_oracle else None
    return ProtocolTranscript(
        protocol="abelian_double",
        group=a_group.name,
        graph=cell.name,
        shots=1,
        rounds=[rnd],
        register=reg,
        probability=rnd.probability,
        fidelity_vs_oracle=fid,
    )


def prepare_nil2_double(
    fs: FactorSystem,
    cell: Cellulation,
    mode: KwMode,
    with_oracle: bool = True,
    feedforward: bool = True,
) -> ProtocolTranscript:
    """One-shot double of a central extension from three coupling layers.

    Plaquette ancillas couple character phases onto the subgroup edges, the
    cocycle dressing ties them to the quotient vertices, and the quotient
    entangler writes domain walls onto the quotient edges; one measurement
    layer then reads every vertex and plaquette, and one feedforward layer
    (character diagonals for the charges, group shifts for the fluxes)
    repairs the branch. Edge pairs are merged into full-group labels at the
    end.

    In forced mode, keys 0..V-1 select vertex outcomes and V..V+P-1
    plaquette outcomes. With feedforward disabled the register keeps its
    split, uncorrected edges for inspection and no fidelity is computed.
    """
    if not is_nil2_extension(fs):
        raise ValueError("prepare_nil2_double needs a central extension with abelian subgroup and quotient")
    if not cell.closed:
        raise ValueError("prepare_nil2_double needs a closed cellulation")
    n_grp, q_grp = fs.n_group, fs.q_group
    n_v, n_p = cell.n_vertices, cell.n_plaquettes
    reg = init_plus(
        [SiteSpec(("v", v), "vertex", q_grp) for v in range(n_v)]
        + [SiteSpec(("p", p), "plaquette", n_grp) for p in range(n_p)]
    )
    reg.add_sites([SiteSpec(("e", e, "n"), "edge", n_grp) for e in range(cell.n_edges)], _plus_local)
    reg.add_sites([SiteSpec(("e", e, "q"), "edge", q_grp) for e in range(cell.n_edges)], _identity_local)
    for e in range(cell.n_edges):
        p_minus, p_plus = cell.plaquette_pair(e)
        if p_minus == p_plus:
            continue
        reg.apply(cz_abelian(n_grp, ("p", p_plus), ("e", e, "n")))
        reg.apply(cz_abelian(n_grp, ("p", p_minus), ("e", e, "n")).dagger())
    for e, (i_v, f_v) in enumerate(cell.edges):
        reg.apply(omega_gate(fs, ("v", i_v), ("e", e, "n"), ("v", f_v)))
    for e, (i_v, f_v) in enumerate(cell.edges):
        reg.apply(controlled_left(q_grp, ("v", i_v), ("e", e, "q")).dagger())
        reg.apply(controlled_right(q_grp, ("v", f_v), ("e", e, "q")).dagger())
    pairs = [(v, ("v", v)) for v in range(n_v)] + [(n_v + p, ("p", p)) for p in range(n_p)]
    raw, prob = _measure_layer(reg, mode, pairs)
    v_outs = {v: raw[v] for v in range(n_v)}
    p_outs = {p: raw[n_v + p] for p in range(n_p)}
    charge_plan = charge_correction(
        SyndromeSet("charge", v_outs, q_grp), cell, spanning_tree(cell)
    ).inverse()
    flux_plan = flux_correction(SyndromeSet("flux", p_outs, n_grp), cell, dual_spanning_tree(cell))
    fid = None
    if feedforward:
        for e, t in sorted(charge_plan.exponents.items()):
            reg.apply(z_dual(q_grp, t, ("e", e, "q")))
        for e, x in sorted(flux_plan.exponents.items()):
            reg.apply(left_mult(n_grp, x, ("e", e, "n")))
        image = np.argsort(parent_to_pair(fs))
        for e in range(cell.n_edges):
            reg.merge_sites(("e", e, "n"), ("e", e, "q"), SiteSpec(("e", e), "edge", fs.parent))
            reg.relabel_site(("e", e), image)
        if with_oracle:
            fid = _oracle_fidelity(reg, fs.parent, cell)
    rnd = ProtocolRound(
        label=f"one-shot double of {fs.parent.name}",
        layers=[
            "plaquette-to-edge character couplings, opposite phases on each edge's plaquette pair",
            "cocycle dressing on every edge",
            "controlled quotient multiplications write domain walls onto identity-state quotient edges",
        ],
        outcomes={"charge": v_outs, "flux": p_outs},
        corrections=[
            _plan_record(charge_plan, applied=feedforward),
            _plan_record(flux_plan, applied=feedforward),
        ],
        probability=prob,
    )
    return ProtocolTranscript(
        protocol="nil2_double",
        group=fs.parent.name,
        graph=cell.name,
        shots=1,
        rounds=[rnd],
        register=reg,
        probability=prob,
        fidelity_vs_oracle=fid,
    )


def prepare_metabelian_double(
    fs: FactorSystem, cell: Cellulation, mode: KwMode, with_oracle: bool = True
) -> ProtocolTranscript:
    """Two-shot double of an abelian-by-abelian extension.

    Round one gauges the subgroup parts of the split vertices; round two
    gauges the remaining quotient vertices with fresh edge ancillas; the
    edge pairs are then merged into full-group labels.
    """
    if not (fs.n_group.is_abelian and fs.q_group.is_abelian):
        raise ValueError("prepare_metabelian_double needs abelian subgroup and abelian quotient")
    reg = init_plus(
        [
            SiteSpec(("v", v, 1, part), "vertex", grp)
            for v in range(cell.n_vertices)
            for part, grp in [("n", fs.n_group), ("q", fs.q_group)]
        ]
    )
    rnd1 = _subgroup_round(reg, cell, fs, 1, _round_mode(mode, 1, 2))
    rnd2 = _abelian_round(
        reg, cell, fs.q_group, _round_mode(mode, 2, 2), lambda v: ("v", v, 1, "q"), lambda e: ("e", e, 2)
    )
    _reassemble_edges(reg, cell, [fs])
    fid = _oracle_fidelity(reg, fs.parent, cell) if with_oracle else None
    return ProtocolTranscript(
        protocol="metabelian_double",
        group=fs.parent.name,
        graph=cell.name,
        shots=2,
        rounds=[rnd1, rnd2],
        register=reg,
        probability=rnd1.probability * rnd2.probability,
        fidelity_vs_oracle=fid,
    )


def prepare_solvable_double(
    g_group: FiniteGroup, cell: Cellulation, mode: KwMode, with_oracle: bool = True
) -> ProtocolTranscript:
    """Double of any solvable group in one round per derived-series step."""
    reg = init_plus([SiteSpec(("v", v), "vertex", g_group) for v in range(cell.n_vertices)])
    oracle = None
    if with_oracle:
        probe = init_plus([SiteSpec(("v", v), "vertex", g_group) for v in range(cell.n_vertices)])
        oracle = kw_exact_g(probe, cell, g_group)
    return _gauge_rounds(reg, g_group, cell, mode, "solvable_double", oracle)


def gauge_input_state(
    reg: QuditRegister,
    g_group: FiniteGroup,
    cell: Cellulation,
    mode: KwMode,
    with_oracle: bool = True,
) -> ProtocolTranscript:
    """Run the solvable round structure on a supplied symmetric vertex state.

    The input register must hold exactly the vertex sites and be invariant
    under the global left action within 1e-10; the output matches the
    definitional map applied to the same input.
    """
    if len(reg.sites) != cell.n_vertices or any(
        reg.spec(("v", v)).dim != g_group.order for v in range(cell.n_vertices)
    ):
        raise ValueError("gauge_input_state needs a register with exactly the vertex sites")
    for g in range(1, g_group.order):
        probe = reg.copy()
        for v in range(cell.n_vertices):
            probe.apply(left_mult(g_group, g, ("v", v)))
        if np.abs(probe.amps - reg.amps).max() > STATE_TOL:
            raise ValueError(
                f"input state is not invariant under the global left action (element {g} moves it)"
            )
    _solvable_chain(g_group)
    oracle = kw_exact_g(reg.copy(), cell, g_group) if with_oracle else None
    return _gauge_rounds(reg, g_group, cell, mode, "gauge_input", oracle)


# ---------------------------------------------------------------------------
# syndrome bookkeeping


def charge_syndromes(
    reg: QuditRegister,
    a_group: FiniteGroup,
    cell: Cellulation,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> Dict[int, int]:
    """Dual label at each vertex from the vertex-action eigenvalue pattern.

    Rejects states without a definite label; on a protocol branch before
    charge feedforward the labels equal the measurement outcomes.
    """
    chi = character_table(a_group)
    out: Dict[int, int] = {}
    for v in range(cell.n_vertices):
        vals = []
        for g in a_group.elements():
            factors = {}
            for e, sign in cell.edges_at_vertex(v):
                sid = edge_of(e)
                op = left_mult(a_group, g, sid) if sign == 1 else right_mult(a_group, g, sid)
                factors[sid] = op
            vals.append(reg.expectation(StabilizerOperator([(1.0, factors)], name=f"A^{g}[{v}]")))
        vals = np.array(vals)
        matches = [c for c in a_group.elements() if np.abs(vals - chi[c]).max() < SYNDROME_TOL]
        if len(matches) != 1:
            raise ValueError(f"vertex {v} carries no definite charge label")
        out[v] = matches[0]
    return out


def flux_syndromes(
    reg: QuditRegister,
    a_group: FiniteGroup,
    cell: Cellulation,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> Dict[int, int]:
    """Dual label at each plaquette: inverse of the concentrated walk product.

    Rejects smeared flux; on a protocol branch before flux feedforward the
    labels equal the measurement outcomes.
    """
    d = a_group.order
    out: Dict[int, int] = {}
    for p in range(cell.n_plaquettes):
        walk = cell.plaquettes[p]
        edges: List[int] = []
        for e, _ in walk:
            if e not in edges:
                edges.append(e)
        grids = np.indices((d,) * len(edges)).reshape(len(edges), -1)
        acc = np.zeros(grids.shape[1], dtype=np.int64)
        for e, orient in walk:
            labels = grids[edges.index(e)]
            if orient == -1:
                labels = a_group.inv[labels]
            acc = a_group.mult[acc, labels]
        hit = None
        for n in a_group.elements():
            val = reg.expectation(
                DiagonalOperator([edge_of(e) for e in edges], (acc == n).astype(np.complex128))
            )
            if abs(val - 1) < SYNDROME_TOL:
                hit = n
                break
        if hit is None:
            raise ValueError(f"plaquette {p} carries no definite flux label")
        out[p] = a_group.inverse(hit)
    return out
