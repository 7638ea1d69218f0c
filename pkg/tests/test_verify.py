"""Certification layer: oracle state, stabilizers, degeneracy, identity suite."""

import json

import numpy as np
import pytest

from gaugekit.cellulation import hexagon_torus, square_torus, theta_sphere, two_vertex_graph
from gaugekit.groups import (
    catalog,
    catalog_factor_system,
    character_table,
    commutator_subgroup,
    factor_system_of,
    irrep_table,
)
from gaugekit.kwmaps import kw_exact_g
from gaugekit.register import QuditRegister, SiteSpec, init_plus
from gaugekit.verify import (
    StabilizerReport,
    check_identity,
    commuting_pair_classes,
    ground_state_degeneracy,
    identity_names,
    identity_suite,
    oracle_double_state,
    plaquette_stabilizer,
    stabilizer_report,
    vertex_stabilizer,
)

CAT = catalog()

# both degeneracy oracles reproduced these on the one-plaquette torus
TORUS_GSD = {"Z2": 4, "Z3": 9, "S3": 8, "D4": 22}
EXTRA_PAIR_CLASSES = {"Z4": 16, "Z6": 36, "Z2xZ2": 16, "Q8": 22, "A4": 14, "S4": 21, "A5": 22}


def exact_double(g_group, cell):
    reg = init_plus([SiteSpec(("v", v), "vertex", g_group) for v in range(cell.n_vertices)])
    return kw_exact_g(reg, cell, g_group)


def random_edge_register(rng, g_group, cell):
    dims = (g_group.order,) * cell.n_edges
    x = rng.normal(size=dims) + 1j * rng.normal(size=dims)
    specs = [SiteSpec(("e", e), "edge", g_group) for e in range(cell.n_edges)]
    return QuditRegister(specs, x / np.linalg.norm(x))


# --- oracle state -----------------------------------------------------------


def test_oracle_single_edge_is_uniform():
    reg = oracle_double_state(CAT["Z2"], two_vertex_graph())
    assert np.allclose(reg.amps, np.full(2, 2**-0.5))


def test_oracle_hexagon_s3_support_is_diagonal():
    g = CAT["S3"]
    reg = oracle_double_state(g, hexagon_torus())
    # all three edges share the one wall value, uniformly over the group
    want = np.zeros((6, 6, 6))
    for h in range(6):
        want[h, h, h] = 6**-0.5
    assert np.allclose(reg.amps, want)


@pytest.mark.parametrize("name", ["Z2", "Z4", "S3", "D4"])
def test_oracle_matches_definitional_map(name):
    g = CAT[name]
    cell = hexagon_torus()
    assert oracle_double_state(g, cell).fidelity(exact_double(g, cell)) > 1 - 1e-12


def test_oracle_square_torus_z2():
    g = CAT["Z2"]
    cell = square_torus(2, 2)
    assert oracle_double_state(g, cell).fidelity(exact_double(g, cell)) > 1 - 1e-12


def test_oracle_budget_rejection():
    with pytest.raises(ValueError, match="budget"):
        oracle_double_state(CAT["A5"], square_torus(2, 2))


# --- stabilizers --------------------------------------------------------------


@pytest.mark.parametrize("name", ["Z2", "Z3", "S3", "D4", "A4"])
def test_oracle_satisfies_all_stabilizers(name):
    g = CAT[name]
    cell = hexagon_torus()
    reg = oracle_double_state(g, cell)
    for v in range(cell.n_vertices):
        val = reg.expectation(vertex_stabilizer(g, cell, v))
        assert abs(val - 1) < 1e-9
    for p in range(cell.n_plaquettes):
        val = reg.expectation(plaquette_stabilizer(g, cell, p))
        assert abs(val - 1) < 1e-9


@pytest.mark.parametrize("name", ["Z2", "S3"])
def test_stabilizers_are_commuting_projectors(name):
    g = CAT[name]
    cell = hexagon_torus()
    rng = np.random.default_rng(7)
    reg = random_edge_register(rng, g, cell)
    ops = [vertex_stabilizer(g, cell, v) for v in range(cell.n_vertices)]
    ops += [plaquette_stabilizer(g, cell, p) for p in range(cell.n_plaquettes)]
    for op in ops:
        once = reg.copy().apply(op)
        twice = once.copy().apply(op)
        assert np.abs(once.amps - twice.amps).max() < 1e-12
    for a in ops:
        for b in ops:
            ab = reg.copy().apply(a).apply(b)
            ba = reg.copy().apply(b).apply(a)
            assert np.abs(ab.amps - ba.amps).max() < 1e-12


def test_vertex_stabilizer_expectation_is_symmetric_weight():
    # on a random state the vertex projector expectation stays in [0, 1]
    g = CAT["Z3"]
    cell = hexagon_torus()
    rng = np.random.default_rng(3)
    reg = random_edge_register(rng, g, cell)
    val = reg.expectation(vertex_stabilizer(g, cell, 0))
    assert abs(val.imag) < 1e-12
    assert -1e-12 < val.real < 1 + 1e-12


def test_open_graph_vertex_terms():
    g = CAT["Z2"]
    cell = two_vertex_graph(3)
    reg = oracle_double_state(g, cell)
    rep = stabilizer_report(reg, g, cell)
    assert rep.plaquette_expectations == {}
    assert rep.min_expectation() > 1 - 1e-9


# --- degeneracy ---------------------------------------------------------------


@pytest.mark.parametrize("name,want", sorted(TORUS_GSD.items()))
def test_torus_degeneracy_frozen_values(name, want):
    g = CAT[name]
    assert ground_state_degeneracy(g, hexagon_torus()) == want
    assert commuting_pair_classes(g) == want


@pytest.mark.parametrize("name,want", sorted(EXTRA_PAIR_CLASSES.items()))
def test_pair_class_counts(name, want):
    assert commuting_pair_classes(CAT[name]) == want


def test_projector_rank_matches_pair_classes_beyond_frozen():
    for name in ["Z4", "Z2xZ2", "Q8", "A4"]:
        g = CAT[name]
        assert ground_state_degeneracy(g, hexagon_torus()) == commuting_pair_classes(g)


def test_degeneracy_square_torus_is_genus_invariant():
    assert ground_state_degeneracy(CAT["Z2"], square_torus(2, 2)) == 4


def test_degeneracy_sphere_is_one():
    assert ground_state_degeneracy(CAT["S3"], theta_sphere()) == 1
    assert ground_state_degeneracy(CAT["Z4"], theta_sphere()) == 1


def test_degeneracy_rejections():
    with pytest.raises(ValueError, match="budget"):
        ground_state_degeneracy(CAT["S4"], hexagon_torus())
    with pytest.raises(ValueError, match="closed"):
        ground_state_degeneracy(CAT["Z2"], two_vertex_graph())


# --- report -------------------------------------------------------------------


def test_report_on_oracle_s3():
    g = CAT["S3"]
    cell = hexagon_torus()
    reg = oracle_double_state(g, cell)
    rep = stabilizer_report(reg, g, cell, oracle=exact_double(g, cell), gsd=8)
    assert rep.min_expectation() > 1 - 1e-9
    assert rep.fidelity_vs_oracle > 1 - 1e-9
    assert rep.gsd == 8
    assert abs(rep.loop_values["triv"][0] - 1) < 1e-9
    assert abs(rep.loop_values["sgn"][0] - 1) < 1e-9
    assert abs(rep.loop_values["std"][0] - 2) < 1e-9
    payload = json.loads(rep.to_json())
    assert payload["gsd"] == 8
    assert payload["vertex_expectations"]["0"] == pytest.approx(1.0)
    assert payload["loop_values"]["std"]["0"] == pytest.approx(2.0)


def test_report_loop_values_equal_irrep_dimensions():
    cell = hexagon_torus()
    for name in ["Z4", "D4", "Q8"]:
        g = CAT[name]
        rep = stabilizer_report(oracle_double_state(g, cell), g, cell)
        for irrep in irrep_table(g).irreps:
            assert abs(rep.loop_values[irrep.label][0] - irrep.dim) < 1e-9


def test_report_skips_loops_without_stored_irreps():
    g = CAT["A4"]
    cell = hexagon_torus()
    rep = stabilizer_report(oracle_double_state(g, cell), g, cell)
    assert rep.loop_values == {}


def test_report_rejects_complex_expectation():
    # one nonzero edge on a plaquette walk makes the loop value a phase
    g = CAT["Z3"]
    cell = square_torus(2, 2)
    walk_edge = cell.plaquettes[0][0][0]
    amps = np.zeros((3,) * cell.n_edges)
    amps[tuple(1 if e == walk_edge else 0 for e in range(cell.n_edges))] = 1.0
    reg = QuditRegister([SiteSpec(("e", e), "edge", g) for e in range(cell.n_edges)], amps)
    with pytest.raises(ValueError, match="real axis"):
        stabilizer_report(reg, g, cell)


def test_report_dataclass_defaults():
    rep = StabilizerReport(vertex_expectations={0: 1.0}, plaquette_expectations={})
    assert rep.min_expectation() == 1.0
    assert rep.fidelity_vs_oracle is None
    assert "gsd" not in json.loads(rep.to_json())


# --- character sum rules --------------------------------------------------------


@pytest.mark.parametrize("name", ["Z2", "Z3", "Z4", "Z6", "Z2xZ2", "S3", "D4", "Q8"])
def test_irrep_dimension_sum_rule(name):
    g = CAT[name]
    table = irrep_table(g)
    assert sum(irrep.dim**2 for irrep in table.irreps) == g.order
    # dimension-weighted characters resolve the identity
    for h in g.elements():
        total = sum(irrep.dim * irrep.characters[h] for irrep in table.irreps)
        want = g.order if h == 0 else 0.0
        assert abs(total - want) < 1e-12


def test_abelian_character_pairing_is_symmetric():
    for name in ["Z4", "Z6", "Z2xZ2"]:
        chi = character_table(CAT[name])
        assert np.abs(chi - chi.T).max() < 1e-12


# --- identity suite --------------------------------------------------------------


GROUP_IDENTITY_NAMES = [
    "left_action_gauged_away",
    "right_action_becomes_vertex_term",
    "plaquette_loops_carry_irrep_dimension",
    "plaquette_projector_from_irrep_sum",
    "cl_absorbs_left_multiplication",
    "cr_absorbs_left_multiplication",
    "cl_spreads_right_multiplication",
    "cr_spreads_right_multiplication",
    "charge_diagonals_push_to_edge",
]

SYSTEM_IDENTITY_NAMES = [
    "two_step_composition",
    "quotient_symmetry_survives",
    "dressed_loops_carry_irrep_dimension",
    "central_extension_circuit_matches_composition",
    "decorated_wall_pushthrough",
]


def catalog_systems():
    systems = {name: catalog_factor_system(name) for name in ["S3", "D4", "Q8"]}
    systems["A4/V4"] = factor_system_of(CAT["A4"], commutator_subgroup(CAT["A4"]))
    systems["S4/A4"] = factor_system_of(CAT["S4"], commutator_subgroup(CAT["S4"]))
    return systems


def test_identity_registry_is_complete():
    assert list(identity_names()) == GROUP_IDENTITY_NAMES + SYSTEM_IDENTITY_NAMES


@pytest.mark.parametrize("name", sorted(CAT))
def test_group_identities_on_both_reference_graphs(name):
    g = CAT[name]
    for cell in [two_vertex_graph(), hexagon_torus()]:
        for ident in GROUP_IDENTITY_NAMES:
            try:
                dev = check_identity(ident, g, cell)
            except ValueError as err:
                assert "irreps unsupported" in str(err) or "plaquettes" in str(err)
                continue
            assert dev < 1e-10, (ident, name, cell.name, dev)


@pytest.mark.parametrize("label", ["S3", "D4", "Q8", "A4/V4", "S4/A4"])
def test_system_identities_on_both_reference_graphs(label):
    fs = catalog_systems()[label]
    for cell in [two_vertex_graph(), hexagon_torus()]:
        for ident in SYSTEM_IDENTITY_NAMES:
            try:
                dev = check_identity(ident, fs, cell)
            except ValueError as err:
                text = str(err)
                assert (
                    "irreps unsupported" in text
                    or "plaquettes" in text
                    or "central extension" in text
                    or "abelian subgroup" in text
                    or "closed" in text
                ), text
                continue
            assert dev < 1e-10, (ident, label, cell.name, dev)


def test_wall_pushthrough_orientation_on_higher_genus_cells():
    # nondegenerate plaquette pairs fix the sign convention of the pairing
    for cell in [theta_sphere(), square_torus(2, 2)]:
        assert check_identity("decorated_wall_pushthrough", catalog_factor_system("D4"), cell) < 1e-10
    assert check_identity("decorated_wall_pushthrough", catalog_factor_system("S3"), square_torus(2, 2)) < 1e-10


def test_circuit_composition_identity_with_nondegenerate_pairs():
    for label in ["D4", "Q8"]:
        dev = check_identity(
            "central_extension_circuit_matches_composition", catalog_factor_system(label), theta_sphere()
        )
        assert dev < 1e-10


def test_two_step_runs_with_nonabelian_subgroup():
    fs = factor_system_of(CAT["S4"], commutator_subgroup(CAT["S4"]))
    assert check_identity("two_step_composition", fs, hexagon_torus()) < 1e-10


def test_identity_suite_rows_and_skips():
    cell = hexagon_torus()
    rows = identity_suite(cell, groups={"Z2": CAT["Z2"], "A4": CAT["A4"]}, systems={"D4": catalog_factor_system("D4")})
    assert all(row["graph"] == cell.name for row in rows)
    ran = [row for row in rows if "deviation" in row]
    skipped = [row for row in rows if "skipped" in row]
    assert len(ran) + len(skipped) == len(rows)
    assert all(row["deviation"] < 1e-10 for row in ran)
    assert {row["subject"] for row in skipped} == {"A4"}


def test_check_identity_subject_type_errors():
    with pytest.raises(TypeError, match="takes a group"):
        check_identity("left_action_gauged_away", catalog_factor_system("S3"), hexagon_torus())
    with pytest.raises(TypeError, match="takes a factor system"):
        check_identity("two_step_composition", CAT["S3"], hexagon_torus())
    with pytest.raises(KeyError, match="unknown identity"):
        check_identity("no_such_identity", CAT["Z2"], hexagon_torus())


def test_identity_budget_guards():
    with pytest.raises(ValueError, match="basis columns"):
        check_identity("left_action_gauged_away", CAT["A5"], square_torus(2, 2))
    with pytest.raises(ValueError, match="budget"):
        check_identity(
            "central_extension_circuit_matches_composition",
            catalog_factor_system("D4"),
            square_torus(2, 2),
        )
