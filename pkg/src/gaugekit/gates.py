"""Constructors for group-register gates.

Covers group multiplication operators, controlled multiplications, abelian
CX/CZ/Fourier, character and irrep diagonals, loop diagonals, and the
factor-system entanglers (sigma, omega, edge entanglers for a full group and
for a normal subgroup inside a group).
"""

from __future__ import annotations

from typing import Callable, Hashable, Optional, Sequence, Tuple

import numpy as np

from .cellulation import Cellulation
from .groups import FactorSystem, FiniteGroup, Irrep, character_table
from .register import DiagonalOperator, LocalOperator

__all__ = [
    "left_mult",
    "right_mult",
    "controlled_left",
    "controlled_right",
    "cx_abelian",
    "cz_abelian",
    "fourier_abelian",
    "z_dual",
    "z_irrep_component",
    "loop_z",
    "z_tilde",
    "loop_z_tilde",
    "sigma_gate",
    "omega_gate",
    "ug_edge_factor",
    "u_ng_edge_factor",
    "parent_to_pair",
    "split_left_mult",
]


def left_mult(group: FiniteGroup, g: int, sid: Hashable) -> LocalOperator:
    """L^g |h> = |gh>."""
    image = group.mult[g]
    return LocalOperator([sid], "perm", image, name=f"L^{g}")


def right_mult(group: FiniteGroup, g: int, sid: Hashable) -> LocalOperator:
    """R^g |h> = |h gbar>."""
    image = group.mult[:, group.inverse(g)]
    return LocalOperator([sid], "perm", image, name=f"R^{g}")


def _joint2(da: int, db: int) -> Tuple[np.ndarray, np.ndarray]:
    a = np.repeat(np.arange(da), db)
    b = np.tile(np.arange(db), da)
    return a, b


def controlled_left(group: FiniteGroup, c_sid: Hashable, t_sid: Hashable) -> LocalOperator:
    """CL |g1, g2> = |g1, g1 g2>."""
    d = group.order
    g1, g2 = _joint2(d, d)
    image = g1 * d + group.mult[g1, g2]
    return LocalOperator([c_sid, t_sid], "perm", image, name="CL")


def controlled_right(group: FiniteGroup, c_sid: Hashable, t_sid: Hashable) -> LocalOperator:
    """CR |g1, g2> = |g1, g2 g1bar>."""
    d = group.order
    g1, g2 = _joint2(d, d)
    image = g1 * d + group.mult[g2, group.inv[g1]]
    return LocalOperator([c_sid, t_sid], "perm", image, name="CR")


def _require_abelian(group: FiniteGroup, what: str) -> None:
    if not group.is_abelian:
        raise ValueError(f"{what} needs an abelian group, got {group.name}")


def cx_abelian(a_group: FiniteGroup, c_sid: Hashable, t_sid: Hashable) -> LocalOperator:
    """CX |a_v, a_e> = |a_v, a_v a_e>."""
    _require_abelian(a_group, "cx_abelian")
    op = controlled_left(a_group, c_sid, t_sid)
    op.name = "CX"
    return op


def cz_abelian(a_group: FiniteGroup, c_sid: Hashable, t_sid: Hashable) -> LocalOperator:
    """CZ |a_v, a_e> = chi^{a_v}(a_e) |a_v, a_e>."""
    _require_abelian(a_group, "cz_abelian")
    chi = character_table(a_group)
    d = a_group.order
    a, b = _joint2(d, d)
    return LocalOperator([c_sid, t_sid], "diag", chi[a, b], name="CZ")


def fourier_abelian(a_group: FiniteGroup, sid: Hashable) -> LocalOperator:
    """F_ab = chi^a(b)/sqrt|A|."""
    _require_abelian(a_group, "fourier_abelian")
    mat = character_table(a_group) / np.sqrt(a_group.order)
    return LocalOperator([sid], "dense", mat, name="F")


def z_dual(a_group: FiniteGroup, t: int, sid: Hashable) -> LocalOperator:
    """Z^t |a> = chi^t(a) |a> for a dual-group label t."""
    _require_abelian(a_group, "z_dual")
    chi = character_table(a_group)
    return LocalOperator([sid], "diag", chi[t], name=f"Z^{t}")


def z_irrep_component(irrep: Irrep, i: int, j: int, sid: Hashable) -> LocalOperator:
    """Z^mu_ij |g> = rho^mu(g)_ij |g>; not unitary for dim > 1."""
    diag = irrep.matrices[:, i, j]
    unitary = bool(np.abs(np.abs(diag) - 1).max() < 1e-12)
    return LocalOperator([sid], "diag", diag, unitary=unitary, name=f"Z^{irrep.label}[{i}{j}]")


def _check_loop_closed(loop: Sequence[Tuple[int, int]], cell: Cellulation) -> None:
    if not loop:
        raise ValueError("empty loop")
    ends = []
    for e, o in loop:
        i, f = cell.edges[e]
        ends.append((i, f) if o == 1 else (f, i))
    for k in range(len(ends)):
        if ends[k][1] != ends[(k + 1) % len(ends)][0]:
            raise ValueError(f"loop is not closed at step {k}: {ends[k][1]} != {ends[(k + 1) % len(ends)][0]}")


def loop_z(
    irrep: Irrep,
    loop: Sequence[Tuple[int, int]],
    cell: Cellulation,
    edge_of: Callable[[int], Hashable] = lambda e: ("e", e),
) -> DiagonalOperator:
    """Tr of the ordered product of rho^mu(g_e^{O_e}) around a closed loop.

    The loop is an oriented edge list ((edge, +-1), ...); an edge may appear
    several times. The result is diagonal over the distinct edges touched.
    """
    group = irrep_group_guard(irrep)
    _check_loop_closed(loop, cell)
    edges = []
    for e, _ in loop:
        if e not in edges:
            edges.append(e)
    dims = [group.order] * len(edges)
    diag = np.zeros(int(np.prod(dims)), dtype=np.complex128)
    for flat, config in enumerate(np.ndindex(*dims)):
        m = np.eye(irrep.dim, dtype=np.complex128)
        for e, o in loop:
            g = config[edges.index(e)]
            if o == -1:
                g = group.inverse(g)
            m = m @ irrep.matrices[g]
        diag[flat] = np.trace(m)
    return DiagonalOperator([edge_of(e) for e in edges], diag, name=f"loopZ^{irrep.label}")


def irrep_group_guard(irrep: Irrep) -> FiniteGroup:
    if irrep.group is None:
        raise ValueError("irrep carries no group reference")
    return irrep.group


def z_tilde(
    fs: FactorSystem,
    t: int,
    edge: int,
    cell: Cellulation,
    vertex_of: Callable[[int], Hashable],
    edge_of: Callable[[int], Hashable],
) -> LocalOperator:
    """Dressed charge diagonal chi^t(sigma^{q_i}[n_e] omega(q_i, q_i^-1 q_f)).

    Acts on (Q-part of i_e, N-edge, Q-part of f_e); needs abelian N.
    """
    n_grp, q_grp = fs.n_group, fs.q_group
    _require_abelian(n_grp, "z_tilde")
    chi = character_table(n_grp)
    dq, dn = q_grp.order, n_grp.order
    i_v, f_v = cell.edges[edge]
    diag = np.zeros(dq * dn * dq, dtype=np.complex128)
    for qi in range(dq):
        for n in range(dn):
            for qf in range(dq):
                ntil = n_grp.mul(fs.sigma[qi, n], fs.omega[qi, q_grp.mul(q_grp.inverse(qi), qf)])
                diag[(qi * dn + n) * dq + qf] = chi[t, ntil]
    return LocalOperator(
        [vertex_of(i_v), edge_of(edge), vertex_of(f_v)], "diag", diag, name=f"Zt^{t}[{edge}]"
    )


def loop_z_tilde(
    fs: FactorSystem,
    irrep: Irrep,
    loop: Sequence[Tuple[int, int]],
    cell: Cellulation,
    vertex_of: Callable[[int], Hashable],
    edge_of: Callable[[int], Hashable],
) -> DiagonalOperator:
    """Tr of the ordered product of rho^nu(ntilde_e^{O_e}) around a closed loop."""
    n_grp, q_grp = fs.n_group, fs.q_group
    _check_loop_closed(loop, cell)
    edges, verts = [], []
    for e, _ in loop:
        if e not in edges:
            edges.append(e)
        for v in cell.edges[e]:
            if v not in verts:
                verts.append(v)
    dims = [q_grp.order] * len(verts) + [n_grp.order] * len(edges)
    diag = np.zeros(int(np.prod(dims)), dtype=np.complex128)
    for flat, config in enumerate(np.ndindex(*dims)):
        qs = config[: len(verts)]
        ns = config[len(verts) :]
        m = np.eye(irrep.dim, dtype=np.complex128)
        for e, o in loop:
            i_v, f_v = cell.edges[e]
            qi, qf = qs[verts.index(i_v)], qs[verts.index(f_v)]
            n = ns[edges.index(e)]
            ntil = n_grp.mul(fs.sigma[qi, n], fs.omega[qi, q_grp.mul(q_grp.inverse(qi), qf)])
            if o == -1:
                ntil = n_grp.inverse(ntil)
            m = m @ irrep.matrices[ntil]
        diag[flat] = np.trace(m)
    targets = [vertex_of(v) for v in verts] + [edge_of(e) for e in edges]
    return DiagonalOperator(targets, diag, name=f"loopZt^{irrep.label}")


def sigma_gate(fs: FactorSystem, q_sid: Hashable, n_sid: Hashable) -> LocalOperator:
    """Sigma |q, n> = |q, sigma^q[n]>."""
    dq, dn = fs.q_group.order, fs.n_group.order
    q, n = _joint2(dq, dn)
    image = q * dn + fs.sigma[q, n]
    return LocalOperator([q_sid, n_sid], "perm", image, name="Sigma")


def omega_gate(fs: FactorSystem, qi_sid: Hashable, n_sid: Hashable, qf_sid: Hashable) -> LocalOperator:
    """Omega |q1, n, q2> = |q1, n * omega(q1, q1^-1 q2)^-1, q2>."""
    q_grp, n_grp = fs.q_group, fs.n_group
    dq, dn = q_grp.order, n_grp.order
    image = np.zeros(dq * dn * dq, dtype=np.int64)
    for q1 in range(dq):
        for n in range(dn):
            for q2 in range(dq):
                w = fs.omega[q1, q_grp.mul(q_grp.inverse(q1), q2)]
                n2 = n_grp.mul(n, n_grp.inverse(w))
                image[(q1 * dn + n) * dq + q2] = (q1 * dn + n2) * dq + q2
    return LocalOperator([qi_sid, n_sid, qf_sid], "perm", image, name="Omega")


def ug_edge_factor(group: FiniteGroup, i_sid: Hashable, e_sid: Hashable, f_sid: Hashable) -> LocalOperator:
    """Edge entangler |g_i, g_e, g_f> = |g_i, g_i^-1 g_e g_f, g_f>."""
    d = group.order
    image = np.zeros(d * d * d, dtype=np.int64)
    for gi in range(d):
        for ge in range(d):
            new = group.mult[group.inv[gi], ge]
            for gf in range(d):
                image[(gi * d + ge) * d + gf] = (gi * d + group.mul(new, gf)) * d + gf
    return LocalOperator([i_sid, e_sid, f_sid], "perm", image, name="U^G[e]")


def parent_to_pair(fs: FactorSystem) -> np.ndarray:
    """Relabeling g -> tpart(g)*|Q| + proj(g) from parent labels to split pairs."""
    return fs.tpart * fs.q_group.order + fs.proj


def split_left_mult(fs: FactorSystem, g: int, n_sid: Hashable, q_sid: Hashable) -> LocalOperator:
    """L^g on a split vertex: |n_v, q_v> = |n_g sigma^{q_g}[n_v] omega(q_g, q_v), q_g q_v>."""
    n_grp, q_grp = fs.n_group, fs.q_group
    ng, qg = int(fs.tpart[g]), int(fs.proj[g])
    n, q = _joint2(n_grp.order, q_grp.order)
    n2 = n_grp.mult[n_grp.mult[ng, fs.sigma[qg, n]], fs.omega[qg, q]]
    image = n2 * q_grp.order + q_grp.mult[qg, q]
    return LocalOperator([n_sid, q_sid], "perm", image, name=f"Lsplit^{g}")


def u_ng_edge_factor(fs: FactorSystem, i_sid: Hashable, e_sid: Hashable, f_sid: Hashable) -> LocalOperator:
    """Edge entangler for N inside G, vertices in split-pair labels n*|Q|+q.

    |g_i, n_e, g_f> = |g_i, t(g_i^-1 iota(n_e) g_f), g_f> with t the
    transversal part of the parent group.
    """
    parent = fs.parent
    dq, dn, dg = fs.q_group.order, fs.n_group.order, parent.order
    pair = parent_to_pair(fs)
    to_parent = np.argsort(pair)
    image = np.zeros(dg * dn * dg, dtype=np.int64)
    for pi in range(dg):
        gi = to_parent[pi]
        for ne in range(dn):
            left = parent.mul(parent.inv[gi], fs.embed[ne])
            for pf in range(dg):
                gf = to_parent[pf]
                ne2 = fs.tpart[parent.mul(left, gf)]
                image[(pi * dn + ne) * dg + pf] = (pi * dn + ne2) * dg + pf
    return LocalOperator([i_sid, e_sid, f_sid], "perm", image, name="U^NG[e]")
