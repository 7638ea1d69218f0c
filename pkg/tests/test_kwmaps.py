"""Kramers-Wannier maps: exact oracle, measured modes, outcome repair."""

import json

import numpy as np
import pytest

from gaugekit.cellulation import hexagon_torus, square_torus, theta_sphere, two_vertex_graph
from gaugekit.gates import left_mult, loop_z, parent_to_pair
from gaugekit.groups import (
    catalog,
    catalog_factor_system,
    character_table,
    commutator_subgroup,
    direct_product,
    factor_system_of,
    irrep_table,
    subgroup_from_members,
)
from gaugekit.kwmaps import EXACT_BUDGET, KwMode, kw_abelian, kw_exact_g, kw_hat_abelian, kw_n_in_g
from gaugekit.register import QuditRegister, SiteSpec, init_plus

CAT = catalog()


def random_state(rng, dims):
    x = rng.normal(size=dims) + 1j * rng.normal(size=dims)
    return (x / np.linalg.norm(x)).astype(np.complex128)


def symmetrize(reg, group, sids):
    """Project onto the invariant sector by group-averaging the left action."""
    acc = np.zeros_like(reg.amps)
    for g in range(group.order):
        probe = reg.copy()
        for s in sids:
            probe.apply(left_mult(group, g, s))
        acc = acc + probe.amps
    norm = np.linalg.norm(acc)
    assert norm > 1e-9
    reg.amps = acc / norm
    return reg


def symmetric_vertex_register(rng, cell, group, role="vertex", tag="v"):
    reg = init_plus([SiteSpec((tag, i), role, group) for i in range(cell.n_vertices if tag == "v" else cell.n_plaquettes)])
    reg.amps = random_state(rng, reg.dims)
    n = cell.n_vertices if tag == "v" else cell.n_plaquettes
    return symmetrize(reg, group, [(tag, i) for i in range(n)])


def walk_product(cell, group, a_config, p):
    w = 0
    for e, o in cell.plaquettes[p]:
        w = group.mul(w, a_config[e] if o == 1 else group.inverse(a_config[e]))
    return w


def split_input(base, fs, n_vertices):
    """Relabel parent-valued vertices into (subgroup, quotient) pairs."""
    work = base.copy()
    for v in range(n_vertices):
        work.relabel_site(("v", v), parent_to_pair(fs))
        work.split_site(
            ("v", v),
            SiteSpec(("v", v, "n"), "vertex", fs.n_group),
            SiteSpec(("v", v, "q"), "vertex", fs.q_group),
        )
    return work


def two_step(base, cell, fs, mode1, mode2):
    """Gauge the subgroup, then the quotient, and reassemble parent edge labels."""
    work = split_input(base, fs, cell.n_vertices)
    r1 = kw_n_in_g(work, cell, fs, mode1)
    r2 = kw_abelian(
        r1.register,
        cell,
        fs.q_group,
        mode2,
        vertex_of=lambda v: ("v", v, "q"),
        edge_of=lambda e: ("e", e, "q"),
    )
    final = r2.register
    for e in range(cell.n_edges):
        final.merge_sites(("e", e), ("e", e, "q"), SiteSpec(("e", e), "edge", fs.parent))
        final.relabel_site(("e", e), np.argsort(parent_to_pair(fs)).astype(np.int64))
    return final


# --- modes and results --------------------------------------------------------


def test_mode_validation():
    with pytest.raises(ValueError, match="unknown mode kind"):
        KwMode("collapse")
    with pytest.raises(ValueError, match="needs a seed"):
        KwMode("sample")
    with pytest.raises(ValueError, match="outcome table"):
        KwMode("forced")
    assert KwMode.postselect().generator() is None
    assert KwMode.sample(7).generator() is not None


def test_sample_mode_is_deterministic_per_seed():
    cell = square_torus(2, 2)
    z2 = CAT["Z2"]
    runs = []
    for _ in range(2):
        reg = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
        runs.append(kw_abelian(reg, cell, z2, KwMode.sample(13)))
    assert runs[0].outcomes == runs[1].outcomes
    assert np.array_equal(runs[0].register.amps, runs[1].register.amps)


def test_result_serializes_to_json():
    cell = square_torus(2, 2)
    z2 = CAT["Z2"]
    reg = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
    res = kw_abelian(reg, cell, z2, KwMode.sample(3))
    payload = json.loads(res.to_json())
    assert set(payload) >= {"outcomes", "corrections", "probability", "normalization"}
    assert payload["corrections"]["basis"] == "Z"
    assert len(payload["outcomes"]) == cell.n_vertices
    res.fidelity_vs_oracle = 1.0
    assert json.loads(res.to_json())["fidelity_vs_oracle"] == 1.0


# --- vertex route -------------------------------------------------------------


def test_vertex_route_postselect_matches_oracle():
    """Uniform input on the square torus lands exactly on the enumeration oracle."""
    cell = square_torus(2, 2)
    z2 = CAT["Z2"]
    reg = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
    oracle = kw_exact_g(reg.copy(), cell, z2)
    res = kw_abelian(reg, cell, z2, KwMode.postselect())
    assert res.register is reg
    assert abs(res.register.fidelity(oracle) - 1) < 1e-12
    assert set(res.outcomes.values()) == {0}
    assert res.corrections.is_empty()
    # each of the four plus-projections keeps weight 1/2 except the redundant last one
    assert abs(res.probability - 1 / 8) < 1e-12


def test_vertex_route_trivial_group():
    cell = hexagon_torus()
    z1 = CAT["Z1"]
    reg = init_plus([SiteSpec(("v", v), "vertex", z1) for v in range(cell.n_vertices)])
    res = kw_abelian(reg, cell, z1, KwMode.sample(3))
    assert res.register.dims == (1,) * cell.n_edges
    assert abs(res.register.amps.reshape(-1)[0] - 1) < 1e-12


def test_vertex_route_sampled_branches_match_postselect():
    cell = square_torus(2, 2)
    z2 = CAT["Z2"]
    base = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
    ref = kw_abelian(base.copy(), cell, z2, KwMode.postselect()).register
    for seed in range(20):
        out = kw_abelian(base.copy(), cell, z2, KwMode.sample(seed)).register
        assert out.fidelity(ref) >= 1 - 1e-9, seed


def test_vertex_route_sampled_generic_symmetric_input():
    rng = np.random.default_rng(11)
    cell = hexagon_torus()
    z3 = CAT["Z3"]
    base = symmetric_vertex_register(rng, cell, z3)
    ref = kw_abelian(base.copy(), cell, z3, KwMode.postselect()).register
    oracle = kw_exact_g(base.copy(), cell, z3)
    assert abs(ref.fidelity(oracle) - 1) < 1e-10
    for seed in range(20):
        out = kw_abelian(base.copy(), cell, z3, KwMode.sample(seed)).register
        assert out.fidelity(ref) >= 1 - 1e-9, seed


def test_vertex_route_rejects_nonabelian_group():
    cell = hexagon_torus()
    reg = init_plus([SiteSpec(("v", v), "vertex", CAT["S3"]) for v in range(cell.n_vertices)])
    with pytest.raises(ValueError, match="abelian"):
        kw_abelian(reg, cell, CAT["S3"], KwMode.postselect())


def test_vertex_route_rejects_charged_input_before_touching_it():
    cell = hexagon_torus()
    z2 = CAT["Z2"]
    amps = np.zeros((2, 2), dtype=np.complex128)
    amps[0, 1] = 1.0
    reg = QuditRegister([SiteSpec(("v", v), "vertex", z2) for v in range(2)], amps)
    before = reg.amps.copy()
    with pytest.raises(ValueError, match="not invariant"):
        kw_abelian(reg, cell, z2, KwMode.sample(0))
    assert len(reg.sites) == 2
    assert np.array_equal(reg.amps, before)


def test_vertex_route_forced_branches():
    rng = np.random.default_rng(12)
    cell = hexagon_torus()
    z3 = CAT["Z3"]
    base = symmetric_vertex_register(rng, cell, z3)
    ref = kw_abelian(base.copy(), cell, z3, KwMode.postselect()).register
    for c0 in range(3):
        res = kw_abelian(base.copy(), cell, z3, KwMode.forced({0: c0, 1: (3 - c0) % 3}))
        assert res.register.fidelity(ref) >= 1 - 1e-12, c0
        if c0:
            assert not res.corrections.is_empty()


def test_vertex_route_forced_rejects_impossible_tables():
    cell = hexagon_torus()
    z3 = CAT["Z3"]
    base = init_plus([SiteSpec(("v", v), "vertex", z3) for v in range(cell.n_vertices)])
    # outcomes multiplying to a nontrivial total have zero joint probability
    with pytest.raises(ValueError, match="zero Born probability"):
        kw_abelian(base.copy(), cell, z3, KwMode.forced({0: 1, 1: 1}))
    with pytest.raises(ValueError, match="out of range"):
        kw_abelian(base.copy(), cell, z3, KwMode.forced({0: 5, 1: 0}))


# --- dual route ---------------------------------------------------------------


def test_dual_route_is_uniform_over_flat_configs():
    """On a handle the dual route spreads over every holonomy sector, so its
    output differs from the vertex route by exactly the sector count."""
    cell = square_torus(2, 2)
    z2 = CAT["Z2"]
    regp = init_plus([SiteSpec(("p", p), "plaquette", z2) for p in range(cell.n_plaquettes)])
    hat = kw_hat_abelian(regp, cell, z2, KwMode.postselect()).register

    flat = np.zeros((2,) * cell.n_edges, dtype=np.complex128)
    for idx in np.ndindex(*(2,) * cell.n_edges):
        if all(walk_product(cell, z2, idx, p) == 0 for p in range(cell.n_plaquettes)):
            flat[idx] = 1
    flat /= np.linalg.norm(flat)
    flat_reg = QuditRegister([SiteSpec(("e", e), "edge", z2) for e in range(cell.n_edges)], flat)
    assert abs(hat.fidelity(flat_reg) - 1) < 1e-12

    regv = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
    exact = kw_abelian(regv, cell, z2, KwMode.postselect()).register
    assert abs(hat.fidelity(exact) - 0.25) < 1e-12


def test_dual_route_matches_vertex_route_on_sphere():
    """At genus zero every flat configuration is a wall configuration."""
    cell = theta_sphere()
    z2 = CAT["Z2"]
    regv = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
    a = kw_abelian(regv, cell, z2, KwMode.postselect()).register
    regp = init_plus([SiteSpec(("p", p), "plaquette", z2) for p in range(cell.n_plaquettes)])
    b = kw_hat_abelian(regp, cell, z2, KwMode.postselect()).register
    assert abs(a.fidelity(b) - 1) < 1e-12


def test_dual_route_trivial_group():
    cell = square_torus(2, 2)
    z1 = CAT["Z1"]
    regp = init_plus([SiteSpec(("p", p), "plaquette", z1) for p in range(cell.n_plaquettes)])
    res = kw_hat_abelian(regp, cell, z1, KwMode.sample(5))
    assert res.register.dims == (1,) * cell.n_edges


def test_dual_route_requires_closed_cellulation():
    z2 = CAT["Z2"]
    cell = two_vertex_graph(3)
    regp = init_plus([SiteSpec(("p", 0), "plaquette", z2)])
    with pytest.raises(ValueError, match="closed"):
        kw_hat_abelian(regp, cell, z2, KwMode.postselect())


def test_dual_route_sampled_and_forced_branches():
    rng = np.random.default_rng(13)
    cell = square_torus(2, 2)
    z3 = CAT["Z3"]
    base = init_plus([SiteSpec(("p", p), "plaquette", z3) for p in range(cell.n_plaquettes)])
    base.amps = random_state(rng, base.dims)
    symmetrize(base, z3, [("p", p) for p in range(cell.n_plaquettes)])
    ref = kw_hat_abelian(base.copy(), cell, z3, KwMode.postselect()).register
    for seed in range(20):
        out = kw_hat_abelian(base.copy(), cell, z3, KwMode.sample(seed)).register
        assert out.fidelity(ref) >= 1 - 1e-9, seed
    for table in ((1, 2, 0, 0), (2, 2, 1, 1), (1, 1, 1, 0)):
        res = kw_hat_abelian(base.copy(), cell, z3, KwMode.forced(dict(enumerate(table))))
        assert res.register.fidelity(ref) >= 1 - 1e-12
        assert res.corrections.basis == "X"


def test_dual_route_forced_single_plaquette_flux_is_impossible():
    """The hexagon has one plaquette, so a lone nontrivial flux cannot occur."""
    cell = hexagon_torus()
    z3 = CAT["Z3"]
    regp = init_plus([SiteSpec(("p", 0), "plaquette", z3)])
    with pytest.raises(ValueError, match="zero Born probability"):
        kw_hat_abelian(regp, cell, z3, KwMode.forced({0: 1}))


def test_dual_route_is_fourier_of_dual_wall_map():
    """Kernel law: the dual route equals edge-Fourier after the dual-incidence
    wall map, as dense maps up to one overall scalar."""
    for cell, gname in ((hexagon_torus(), "Z2"), (hexagon_torus(), "Z3"), (square_torus(2, 2), "Z2")):
        grp = CAT[gname]
        d, n_e, n_p = grp.order, cell.n_edges, cell.n_plaquettes
        chi = character_table(grp)
        hat = np.zeros((d ** n_e, d ** n_p), dtype=np.complex128)
        four = np.zeros_like(hat)
        for bi, b in enumerate(np.ndindex(*(d,) * n_p)):
            walls = []
            for e in range(n_e):
                pm, pp = cell.plaquette_pair(e)
                walls.append(grp.mul(grp.inverse(b[pm]), b[pp]))
            for ai, a in enumerate(np.ndindex(*(d,) * n_e)):
                phase = 1.0
                for p in range(n_p):
                    phase *= chi[b[p], walk_product(cell, grp, a, p)]
                hat[ai, bi] = phase
                wall_phase = 1.0
                for e in range(n_e):
                    wall_phase *= chi[a[e], walls[e]]
                four[ai, bi] = wall_phase
        idx = np.unravel_index(np.abs(four).argmax(), four.shape)
        scale = hat[idx] / four[idx]
        assert np.abs(hat - scale * four).max() < 1e-10, (cell.name, gname)


def test_dual_route_implementation_matches_its_kernel():
    rng = np.random.default_rng(14)
    cell = square_torus(2, 2)
    z3 = CAT["Z3"]
    base = init_plus([SiteSpec(("p", p), "plaquette", z3) for p in range(cell.n_plaquettes)])
    base.amps = random_state(rng, base.dims)
    symmetrize(base, z3, [("p", p) for p in range(cell.n_plaquettes)])
    out = kw_hat_abelian(base.copy(), cell, z3, KwMode.postselect()).register.amps.reshape(-1)
    chi = character_table(z3)
    want = np.zeros(3 ** cell.n_edges, dtype=np.complex128)
    psi = base.amps.reshape(-1)
    for ai, a in enumerate(np.ndindex(*(3,) * cell.n_edges)):
        for bi, b in enumerate(np.ndindex(*(3,) * cell.n_plaquettes)):
            phase = 1.0
            for p in range(cell.n_plaquettes):
                phase *= chi[b[p], walk_product(cell, z3, a, p)]
            want[ai] += phase * psi[bi]
    want /= np.linalg.norm(want)
    assert abs(abs(np.vdot(want, out)) ** 2 - 1) < 1e-12


# --- exact map ----------------------------------------------------------------


def test_exact_map_uniform_input_gives_uniform_wall_sum():
    cell = square_torus(2, 2)
    z2 = CAT["Z2"]
    reg = init_plus([SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)])
    out = kw_exact_g(reg, cell, z2)
    walls = set()
    for a in np.ndindex(*(2,) * cell.n_vertices):
        walls.add(tuple(z2.mul(z2.inverse(a[i]), a[f]) for i, f in cell.edges))
    amps = out.amps.reshape(-1)
    support = {idx for idx, x in enumerate(amps) if abs(x) > 1e-12}
    expect = {int(np.ravel_multi_index(w, (2,) * cell.n_edges)) for w in walls}
    assert support == expect
    vals = np.abs(amps[sorted(support)])
    assert vals.max() - vals.min() < 1e-12


def test_exact_map_basis_and_constant_inputs():
    cell = two_vertex_graph(1)
    s3 = CAT["S3"]
    for g1 in range(6):
        for g2 in range(6):
            amps = np.zeros((6, 6), dtype=np.complex128)
            amps[g1, g2] = 1.0
            reg = QuditRegister([SiteSpec(("v", 0), "vertex", s3), SiteSpec(("v", 1), "vertex", s3)], amps)
            out = kw_exact_g(reg, cell, s3)
            assert abs(out.amps[s3.mul(s3.inverse(g1), g2)] - 1) < 1e-12
    # constant configurations carry no walls
    cellh = hexagon_torus()
    amps = np.zeros((6, 6), dtype=np.complex128)
    amps[4, 4] = 1.0
    reg = QuditRegister([SiteSpec(("v", 0), "vertex", s3), SiteSpec(("v", 1), "vertex", s3)], amps)
    out = kw_exact_g(reg, cellh, s3)
    assert abs(out.amps[0, 0, 0] - 1) < 1e-12


def test_exact_map_input_validation():
    z2 = CAT["Z2"]
    cell = square_torus(2, 2)
    reg = init_plus([SiteSpec(("v", v), "vertex", CAT["S4"]) for v in range(cell.n_vertices)])
    with pytest.raises(ValueError, match="budget"):
        kw_exact_g(reg, cell, CAT["S4"])
    extra = init_plus(
        [SiteSpec(("v", v), "vertex", z2) for v in range(cell.n_vertices)] + [SiteSpec("x", "aux", z2)]
    )
    with pytest.raises(ValueError, match="exactly the vertex sites"):
        kw_exact_g(extra, cell, z2)
    amps = np.zeros((2, 2), dtype=np.complex128)
    amps[0, 0], amps[1, 1] = 1.0, -1.0
    anti = QuditRegister([SiteSpec(("v", 0), "vertex", z2), SiteSpec(("v", 1), "vertex", z2)], amps)
    with pytest.raises(ValueError, match="no invariant component"):
        kw_exact_g(anti, two_vertex_graph(1), z2)


def test_exact_map_kernel_absorbs_global_left_action():
    """Shifting every vertex by the same element never changes the output."""
    rng = np.random.default_rng(15)
    cell = hexagon_torus()
    for name, grp in CAT.items():
        if grp.order ** cell.n_edges > EXACT_BUDGET:
            continue
        base = init_plus([SiteSpec(("v", v), "vertex", grp) for v in range(cell.n_vertices)])
        base.amps = random_state(rng, base.dims)
        ref = kw_exact_g(base.copy(), cell, grp)
        for g in range(1, grp.order):
            shifted = base.copy()
            for v in range(cell.n_vertices):
                shifted.apply(left_mult(grp, g, ("v", v)))
            out = kw_exact_g(shifted, cell, grp)
            assert np.abs(out.amps - ref.amps).max() < 1e-12, (name, g)


def test_loop_expectation_is_irrep_dimension():
    """Plaquette loops on exact-map output read off each irrep's dimension."""
    cellh = hexagon_torus()
    for name in ("Z3", "S3", "D4", "Q8"):
        grp = CAT[name]
        base = init_plus([SiteSpec(("v", v), "vertex", grp) for v in range(cellh.n_vertices)])
        out = kw_exact_g(base, cellh, grp)
        for irr in irrep_table(grp).irreps:
            val = out.expectation(loop_z(irr, cellh.plaquettes[0], cellh))
            assert abs(val - irr.dim) < 1e-10, (name, irr.label)
    sq = square_torus(2, 2)
    for name in ("Z2", "Z3"):
        grp = CAT[name]
        base = init_plus([SiteSpec(("v", v), "vertex", grp) for v in range(sq.n_vertices)])
        out = kw_exact_g(base, sq, grp)
        for p in range(sq.n_plaquettes):
            for irr in irrep_table(grp).irreps:
                val = out.expectation(loop_z(irr, sq.plaquettes[p], sq))
                assert abs(val - irr.dim) < 1e-10, (name, p, irr.label)


# --- subgroup route -----------------------------------------------------------


def test_split_route_two_step_matches_oracle():
    """Gauging the subgroup then the quotient reproduces the one-shot oracle."""
    rng = np.random.default_rng(16)
    cell = hexagon_torus()
    for name in ("S3", "D4", "Q8"):
        fs = catalog_factor_system(name)
        base = symmetric_vertex_register(rng, cell, fs.parent)
        oracle = kw_exact_g(base.copy(), cell, fs.parent)
        post = two_step(base.copy(), cell, fs, KwMode.postselect(), KwMode.postselect())
        assert abs(post.fidelity(oracle) - 1) < 1e-10, name
        sampled = two_step(base.copy(), cell, fs, KwMode.sample(5), KwMode.sample(9))
        assert abs(sampled.fidelity(oracle) - 1) < 1e-10, name


def test_split_route_nonabelian_subgroup_postselect_only():
    """A non-abelian subgroup still gauges correctly by postselection, and the
    measured modes refuse it."""
    rng = np.random.default_rng(17)
    cell = hexagon_torus()
    s4 = CAT["S4"]
    fs = factor_system_of(s4, commutator_subgroup(s4))
    assert not fs.n_group.is_abelian
    base = symmetric_vertex_register(rng, cell, s4)
    oracle = kw_exact_g(base.copy(), cell, s4)
    post = two_step(base.copy(), cell, fs, KwMode.postselect(), KwMode.postselect())
    assert abs(post.fidelity(oracle) - 1) < 1e-10
    with pytest.raises(ValueError, match="abelian subgroup"):
        kw_n_in_g(split_input(base, fs, cell.n_vertices), cell, fs, KwMode.sample(1))


def test_split_route_trivial_factor_system_reduces_to_abelian_route():
    """For a direct product the dressing layers vanish and only the subgroup
    factor is touched."""
    rng = np.random.default_rng(18)
    cell = hexagon_torus()
    g6 = direct_product(CAT["Z2"], CAT["Z3"])
    fs = factor_system_of(g6, subgroup_from_members(g6, [0, 3]))
    assert fs.is_trivial()
    base = symmetric_vertex_register(rng, cell, g6)
    work = split_input(base, fs, cell.n_vertices)
    a = kw_n_in_g(work.copy(), cell, fs, KwMode.sample(21)).register
    b = kw_abelian(
        work.copy(), cell, fs.n_group, KwMode.sample(21), vertex_of=lambda v: ("v", v, "n")
    ).register
    assert abs(a.fidelity(b) - 1) < 1e-10


def test_split_route_forced_and_sampled_branches():
    rng = np.random.default_rng(19)
    cell = hexagon_torus()
    fs = catalog_factor_system("S3")
    base = symmetric_vertex_register(rng, cell, fs.parent)
    work = split_input(base, fs, cell.n_vertices)
    ref = kw_n_in_g(work.copy(), cell, fs, KwMode.postselect()).register
    forced = kw_n_in_g(work.copy(), cell, fs, KwMode.forced({0: 1, 1: 2}))
    assert forced.register.fidelity(ref) >= 1 - 1e-12
    assert not forced.corrections.is_empty()
    for seed in range(20):
        out = kw_n_in_g(work.copy(), cell, fs, KwMode.sample(seed)).register
        assert out.fidelity(ref) >= 1 - 1e-9, seed


def test_split_route_orbit_input_specialization():
    """A symmetrized basis orbit puts definite transversal walls on the edges
    and the projected quotient orbit on the vertices."""
    fs = catalog_factor_system("S3")
    s3, n3, q2 = fs.parent, fs.n_group, fs.q_group
    cell = hexagon_torus()
    gv = (2, 5)
    amps = np.zeros((6, 6), dtype=np.complex128)
    for h in range(6):
        amps[s3.mul(h, gv[0]), s3.mul(h, gv[1])] += 1.0
    amps /= np.linalg.norm(amps)
    base = QuditRegister([SiteSpec(("v", v), "vertex", s3) for v in range(2)], amps)
    res = kw_n_in_g(split_input(base, fs, 2), cell, fs, KwMode.postselect())
    assert [s.sid for s in res.register.sites] == [
        ("v", 0, "q"), ("v", 1, "q"), ("e", 0), ("e", 1), ("e", 2)]
    edge_lab = tuple(int(fs.tpart[s3.mul(s3.inverse(gv[i]), gv[f])]) for i, f in cell.edges)
    expect = np.zeros((2, 2, 3, 3, 3), dtype=np.complex128)
    for q in range(2):
        vidx = tuple(q2.mul(q, int(fs.proj[g])) for g in gv)
        expect[vidx + edge_lab] += 1.0
    expect /= np.linalg.norm(expect)
    assert abs(abs(np.vdot(expect, res.register.amps)) ** 2 - 1) < 1e-12


def test_split_route_output_is_quotient_symmetric():
    """Gauging the subgroup trades the full symmetry for a quotient symmetry."""
    rng = np.random.default_rng(20)
    cell = hexagon_torus()
    fs = catalog_factor_system("S3")
    base = symmetric_vertex_register(rng, cell, fs.parent)
    out = kw_n_in_g(split_input(base, fs, cell.n_vertices), cell, fs, KwMode.sample(4)).register
    for q in range(1, fs.q_group.order):
        probe = out.copy()
        for v in range(cell.n_vertices):
            probe.apply(left_mult(fs.q_group, q, ("v", v, "q")))
        assert np.abs(probe.amps - out.amps).max() < 1e-10, q
