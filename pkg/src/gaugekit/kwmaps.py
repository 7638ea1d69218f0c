"""Kramers-Wannier maps in exact and measured form.

kw_exact_g is the definitional oracle: it writes the domain walls of every
vertex basis configuration onto the edges by direct enumeration. kw_abelian
and kw_hat_abelian are the gate-level maps for an abelian group on the
vertex route and the plaquette (dual) route; kw_n_in_g gauges a normal
subgroup presented by a factor system, leaving the quotient parts of the
vertices live. Measured modes repair nontrivial outcomes through feedforward
so every sampled branch matches the postselected branch.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
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
    sigma_gate,
    split_left_mult,
    z_dual,
    z_tilde,
)
from .groups import FactorSystem, FiniteGroup
from .register import STATE_TOL, QuditRegister, SiteSpec

__all__ = ["KwMode", "KwResult", "kw_abelian", "kw_hat_abelian", "kw_exact_g", "kw_n_in_g"]

# dense-assembly ceiling for the enumeration oracle, in amplitudes
EXACT_BUDGET = 20_000_000


def _vertex_site(v: int) -> Hashable:
    return ("v", v)


def _edge_site(e: int) -> Hashable:
    return ("e", e)


def _plaquette_site(p: int) -> Hashable:
    return ("p", p)


def _n_site(v: int) -> Hashable:
    return ("v", v, "n")


def _q_site(v: int) -> Hashable:
    return ("v", v, "q")


def _identity_local(spec: SiteSpec) -> np.ndarray:
    v = np.zeros(spec.dim, dtype=np.complex128)
    v[0] = 1.0
    return v


def _plus_local(spec: SiteSpec) -> np.ndarray:
    return np.full(spec.dim, 1.0 / np.sqrt(spec.dim), dtype=np.complex128)


@dataclass(frozen=True)
class KwMode:
    """Measurement handling for the gate-level maps.

    postselect keeps the trivial branch of every measurement, sample draws
    one branch per site with a counter-based generator, forced selects the
    stated outcomes (rejected when their Born probability vanishes).
    """

    kind: str
    seed: Optional[int] = None
    outcomes: Optional[Dict[int, int]] = None

    def __post_init__(self):
        if self.kind not in ("postselect", "sample", "forced"):
            raise ValueError(f"unknown mode kind {self.kind!r}")
        if self.kind == "sample" and self.seed is None:
            raise ValueError("sample mode needs a seed")
        if self.kind == "forced" and self.outcomes is None:
            raise ValueError("forced mode needs an outcome table")

    @staticmethod
    def postselect() -> "KwMode":
        return KwMode("postselect")

    @staticmethod
    def sample(seed: int) -> "KwMode":
        return KwMode("sample", seed=int(seed))

    @staticmethod
    def forced(outcomes: Dict[int, int]) -> "KwMode":
        return KwMode("forced", outcomes=dict(outcomes))

    def generator(self) -> Optional[np.random.Generator]:
        if self.kind != "sample":
            return None
        return np.random.Generator(np.random.Philox(self.seed))


@dataclass
class KwResult:
    """Output register plus the measurement record that produced it.

    outcomes maps each measured site index to its dual label; corrections is
    the plan that was applied (empty in postselect mode); probability is the
    joint Born weight of the branch.
    """

    register: QuditRegister
    outcomes: Dict[int, int]
    corrections: CorrectionPlan
    probability: float
    fidelity_vs_oracle: Optional[float] = None

    @property
    def normalization(self) -> float:
        return float(np.sqrt(self.probability))

    def to_json(self) -> str:
        payload = {
            "outcomes": {str(k): int(v) for k, v in sorted(self.outcomes.items())},
            "corrections": {
                "basis": self.corrections.basis,
                "exponents": {str(e): int(x) for e, x in sorted(self.corrections.exponents.items())},
            },
            "probability": float(self.probability),
            "normalization": self.normalization,
        }
        if self.fidelity_vs_oracle is not None:
            payload["fidelity_vs_oracle"] = float(self.fidelity_vs_oracle)
        return json.dumps(payload, sort_keys=True, indent=2)


def _require_symmetric(reg: QuditRegister, ops_for_g, order: int, what: str) -> None:
    """Reject inputs that carry a net charge: the global product constraint on
    outcomes is satisfiable exactly for invariant states, so repair would fail."""
    for g in range(1, order):
        probe = reg.copy()
        for op in ops_for_g(g):
            probe.apply(op)
        if np.abs(probe.amps - reg.amps).max() > STATE_TOL:
            raise ValueError(
                f"{what}: input is not invariant under the global left action "
                f"(element {g} moves it); the residual charge obstructs outcome repair"
            )


def _measure_sites(
    reg: QuditRegister, mode: KwMode, site_pairs: List[Tuple[int, Hashable]]
) -> Tuple[Dict[int, int], float]:
    rng = mode.generator()
    outcomes: Dict[int, int] = {}
    prob = 1.0
    for idx, sid in site_pairs:
        if mode.kind == "postselect":
            prob *= reg.project_plus(sid)
            outcomes[idx] = 0
        else:
            forced = mode.outcomes.get(idx, 0) if mode.kind == "forced" else None
            outcomes[idx] = reg.measure_fourier(sid, rng=rng, forced=forced)
            prob *= reg.retired[sid].probability
    return outcomes, prob


def kw_abelian(
    reg: QuditRegister,
    cell: Cellulation,
    a_group: FiniteGroup,
    mode: KwMode,
    vertex_of: Callable[[int], Hashable] = _vertex_site,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> KwResult:
    """Gauge an abelian symmetry along the vertex route.

    Allocates edge ancillas in the identity state, writes each domain wall
    a_i^-1 a_f onto its edge, measures every vertex in the Fourier basis and
    cancels the outcome phases with one layer of character diagonals. The
    register is modified in place and returned inside the result.
    """
    if not a_group.is_abelian:
        raise ValueError("kw_abelian needs an abelian group")
    n_v = cell.n_vertices
    _require_symmetric(
        reg,
        lambda g: [left_mult(a_group, g, vertex_of(v)) for v in range(n_v)],
        a_group.order,
        "kw_abelian",
    )
    reg.add_sites(
        [SiteSpec(edge_of(e), "edge", a_group) for e in range(cell.n_edges)], _identity_local
    )
    for e, (i_v, f_v) in enumerate(cell.edges):
        reg.apply(controlled_left(a_group, vertex_of(i_v), edge_of(e)).dagger())
        reg.apply(controlled_right(a_group, vertex_of(f_v), edge_of(e)).dagger())
    outcomes, prob = _measure_sites(reg, mode, [(v, vertex_of(v)) for v in range(n_v)])
    syndrome = SyndromeSet("charge", outcomes, a_group)
    applied = charge_correction(syndrome, cell, spanning_tree(cell)).inverse()
    for e, t in sorted(applied.exponents.items()):
        reg.apply(z_dual(a_group, t, edge_of(e)))
    return KwResult(register=reg, outcomes=outcomes, corrections=applied, probability=prob)


def kw_hat_abelian(
    reg: QuditRegister,
    cell: Cellulation,
    a_group: FiniteGroup,
    mode: KwMode,
    plaquette_of: Callable[[int], Hashable] = _plaquette_site,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> KwResult:
    """Gauge an abelian symmetry along the plaquette (dual) route.

    Allocates edge ancillas in the uniform state, couples each edge to its
    two plaquettes with opposite character phases, measures every plaquette
    in the Fourier basis and shifts the fluxes back with one layer of group
    multiplications on the direct edges.
    """
    if not a_group.is_abelian:
        raise ValueError("kw_hat_abelian needs an abelian group")
    if not cell.closed:
        raise ValueError("kw_hat_abelian needs a closed cellulation")
    n_p = cell.n_plaquettes
    _require_symmetric(
        reg,
        lambda g: [left_mult(a_group, g, plaquette_of(p)) for p in range(n_p)],
        a_group.order,
        "kw_hat_abelian",
    )
    reg.add_sites(
        [SiteSpec(edge_of(e), "edge", a_group) for e in range(cell.n_edges)], _plus_local
    )
    for e in range(cell.n_edges):
        p_minus, p_plus = cell.plaquette_pair(e)
        if p_minus == p_plus:
            continue  # both couplings hit the same plaquette and cancel
        reg.apply(cz_abelian(a_group, plaquette_of(p_plus), edge_of(e)))
        reg.apply(cz_abelian(a_group, plaquette_of(p_minus), edge_of(e)).dagger())
    outcomes, prob = _measure_sites(reg, mode, [(p, plaquette_of(p)) for p in range(n_p)])
    syndrome = SyndromeSet("flux", outcomes, a_group)
    applied = flux_correction(syndrome, cell, dual_spanning_tree(cell))
    for e, x in sorted(applied.exponents.items()):
        reg.apply(left_mult(a_group, x, edge_of(e)))
    return KwResult(register=reg, outcomes=outcomes, corrections=applied, probability=prob)


def kw_exact_g(
    reg: QuditRegister,
    cell: Cellulation,
    g_group: FiniteGroup,
    vertex_of: Callable[[int], Hashable] = _vertex_site,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> QuditRegister:
    """Definitional map |g_V> -> |g_i^-1 g_f on each edge>, any finite group.

    Assembled by direct basis enumeration, no gates and no measurement; the
    output is normalized. The input register must hold exactly the vertex
    sites. This is the oracle every protocol output is compared against.
    """
    d = g_group.order
    n_v, n_e = cell.n_vertices, cell.n_edges
    if len(reg.sites) != n_v:
        raise ValueError("kw_exact_g expects a register with exactly the vertex sites")
    if d ** n_e > EXACT_BUDGET:
        raise ValueError(
            f"edge space {d}^{n_e} exceeds the dense-assembly budget {EXACT_BUDGET}"
        )
    order = [reg.pos(vertex_of(v)) for v in range(n_v)]
    amps = np.moveaxis(reg.amps, order, range(n_v)).reshape(-1)
    grids = np.indices((d,) * n_v).reshape(n_v, -1)
    walls = np.empty((n_e, grids.shape[1]), dtype=np.int64)
    for e, (i_v, f_v) in enumerate(cell.edges):
        walls[e] = g_group.mult[g_group.inv[grids[i_v]], grids[f_v]]
    flat = np.ravel_multi_index(tuple(walls), (d,) * n_e)
    out = np.zeros(d ** n_e, dtype=np.complex128)
    np.add.at(out, flat, amps)
    norm = np.linalg.norm(out)
    if norm < 1e-12:
        raise ValueError("input has no invariant component; the map projects it to zero")
    specs = [SiteSpec(edge_of(e), "edge", g_group) for e in range(n_e)]
    return QuditRegister(specs, (out / norm).reshape((d,) * n_e))


def kw_n_in_g(
    reg: QuditRegister,
    cell: Cellulation,
    fs: FactorSystem,
    mode: KwMode,
    n_of: Callable[[int], Hashable] = _n_site,
    q_of: Callable[[int], Hashable] = _q_site,
    edge_of: Callable[[int], Hashable] = _edge_site,
) -> KwResult:
    """Gauge a normal subgroup inside a group given in the split basis.

    Vertex sites must be presented as (subgroup part, quotient part) pairs.
    Allocates subgroup-valued edge ancillas, applies the restricted edge
    entangler followed by the omega and inverse-sigma dressing layers,
    measures only the subgroup part of every vertex, and repairs outcomes
    with one layer of dressed character diagonals. Quotient parts stay live.

    Measured modes need an abelian subgroup: repairs for a non-abelian one
    would be string operators that do not stay in one layer. Postselect mode
    accepts any subgroup.
    """
    n_grp = fs.n_group
    if mode.kind != "postselect" and not n_grp.is_abelian:
        raise ValueError(
            "kw_n_in_g in a measured mode needs an abelian subgroup; "
            "only postselect mode supports a non-abelian one"
        )
    n_v = cell.n_vertices
    _require_symmetric(
        reg,
        lambda g: [split_left_mult(fs, g, n_of(v), q_of(v)) for v in range(n_v)],
        fs.parent.order,
        "kw_n_in_g",
    )
    reg.add_sites(
        [SiteSpec(edge_of(e), "edge", n_grp) for e in range(cell.n_edges)], _identity_local
    )
    for e, (i_v, f_v) in enumerate(cell.edges):
        reg.apply(controlled_left(n_grp, n_of(i_v), edge_of(e)).dagger())
        reg.apply(controlled_right(n_grp, n_of(f_v), edge_of(e)).dagger())
        reg.apply(omega_gate(fs, q_of(i_v), edge_of(e), q_of(f_v)))
        reg.apply(sigma_gate(fs, q_of(i_v), edge_of(e)).dagger())
    outcomes, prob = _measure_sites(reg, mode, [(v, n_of(v)) for v in range(n_v)])
    if mode.kind == "postselect":
        applied = CorrectionPlan(basis="Z", exponents={}, group=n_grp)
    else:
        syndrome = SyndromeSet("charge", outcomes, n_grp)
        applied = charge_correction(syndrome, cell, spanning_tree(cell)).inverse()
        for e, t in sorted(applied.exponents.items()):
            reg.apply(z_tilde(fs, t, e, cell, q_of, edge_of))
    return KwResult(register=reg, outcomes=outcomes, corrections=applied, probability=prob)
