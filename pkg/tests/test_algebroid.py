"""Flip construction, axiom suite, and bracket recovery."""

import numpy as np
import pytest

from invalg import catalog
from invalg.algebroid import (
    AlgebroidSpec,
    ProlongElement,
    bracket_from_flip,
    braid_permutations,
    check_axioms,
    check_bracket_laws,
    check_leibniz,
    check_yang_baxter,
    flip_from_bracket,
    involution_from_spec,
    roundtrip_bracket,
    sample_double_prolongation,
    sample_prolongation,
    sigma,
    spec_from_flip,
)
from invalg.bundle import AElement, ConnectionSpec, ScalarFieldSpec, SectionSpec, TAElement
from invalg.jet import JetPoint, PolyMap, residual


def const_section(vec, dim_M=0):
    return SectionSpec(PolyMap.constant(np.asarray(vec, dtype=float), dim_M))


def pe_jets(pe):
    v = JetPoint.constant(np.concatenate([pe.v.m, pe.v.a]), 0)
    return v, pe.w.to_jet()


# -- spec construction and structure functions --------------------------------


def test_from_structure_rejects_bad_entries():
    with pytest.raises(ValueError):
        AlgebroidSpec.from_structure(0, 3, PolyMap.zero(0, 0), [(1, 0, 2, 1.0)])
    with pytest.raises(ValueError):
        AlgebroidSpec.from_structure(0, 3, PolyMap.zero(0, 0), [(1, 1, 2, 1.0)])
    with pytest.raises(ValueError):
        AlgebroidSpec.from_structure(0, 3, PolyMap.zero(0, 0), [(0, 1, 3, 1.0)])
    with pytest.raises(ValueError):
        AlgebroidSpec.from_structure(0, 3, PolyMap.zero(0, 0),
                                     [(0, 1, 2, 1.0), (0, 1, 2, 2.0)])


def test_c_apply_matches_cross_product():
    spec = catalog.so3()
    rng = np.random.default_rng(3)
    m = np.zeros(0)
    for _ in range(20):
        a, b = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        assert np.allclose(spec.c_apply(m, a, b), np.cross(a, b), atol=1e-15)


def test_c_apply_antisymmetry_is_exact():
    spec = catalog.lie_algebra_bundle()
    rng = np.random.default_rng(4)
    for _ in range(20):
        m = rng.uniform(-1, 1, 1)
        a, b = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        fwd = spec.c_apply(m, a, b)
        bwd = spec.c_apply(m, b, a)
        assert np.all(fwd + bwd == 0.0)
        jf = spec.c_apply_jet(JetPoint.constant(m, 0), JetPoint.constant(a, 0),
                              JetPoint.constant(b, 0))
        jb = spec.c_apply_jet(JetPoint.constant(m, 0), JetPoint.constant(b, 0),
                              JetPoint.constant(a, 0))
        assert all(x.coeffs[0] + y.coeffs[0] == 0.0 for x, y in zip(jf.entries, jb.entries))


def test_c_tensor_reflection():
    spec = catalog.so3()
    t = spec.c_tensor(np.zeros(0))
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[k, i, j], eps[k, j, i] = 1.0, -1.0
    assert np.array_equal(t, eps)
    full = spec.c_full()
    assert np.array_equal(full.eval_floats(np.zeros(0)).reshape(3, 3, 3), eps)


def test_anchor_jet_matches_matrix():
    spec = catalog.action_so3_r3()
    rng = np.random.default_rng(5)
    for _ in range(10):
        m, a = rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3)
        expected = np.cross(a, m)
        assert np.allclose(spec.anchor_apply(m, a), expected, atol=1e-14)
        jet_val = spec.anchor_apply_jet(JetPoint.constant(m, 0), JetPoint.constant(a, 0))
        assert np.allclose(jet_val.row(0), expected, atol=1e-14)


# -- well-formedness predicate ------------------------------------------------


def test_well_formed_valid_fixtures():
    for name in ["abelian", "tangent-r2", "so3", "sl2", "action-so3-r3",
                 "lie-algebra-bundle"]:
        report = catalog.get(name).well_formed(samples=30, seed=1)
        assert report.passed, "%s: %s" % (name, report.to_text())


def test_broken_jacobi_defect_is_e2():
    spec = catalog.broken_jacobi()
    e = np.eye(3)
    defect = spec.jacobiator(np.zeros(0), e[0], e[1], e[2])
    assert np.array_equal(defect, np.array([0.0, 1.0, 0.0]))
    report = spec.well_formed(samples=30, seed=1)
    assert not report["jacobi"].passed
    assert report["jacobi"].max_residual > 1e-3
    assert report["anchor-compatible"].passed


def test_incompatible_anchor_fails_compatibility():
    report = catalog.incompatible_anchor().well_formed(samples=30, seed=1)
    assert report["jacobi"].passed
    assert not report["anchor-compatible"].passed
    assert report["anchor-compatible"].max_residual > 1e-3


# -- samplers and element invariants ------------------------------------------


def test_sampled_elements_satisfy_constraints_exactly():
    spec = catalog.action_so3_r3()
    rng = np.random.default_rng(7)
    for _ in range(10):
        m = rng.uniform(-1, 1, 3)
        pe = sample_prolongation(spec, m, rng)
        assert pe.residual(spec) == 0.0
        dpe = sample_double_prolongation(spec, m, rng)
        assert dpe.residual(spec) == 0.0


def test_sigma_rejects_invalid_pairs():
    spec = catalog.tangent(2)
    inv = involution_from_spec(spec)
    m = np.array([0.3, -0.4])
    bad = ProlongElement(
        AElement(m, np.array([1.0, 2.0])),
        TAElement(m, np.array([0.5, 0.5]), np.array([9.0, 9.0]), np.zeros(2)),
    )
    with pytest.raises(ValueError):
        sigma(inv, bad)


def test_sigma_is_an_involution():
    spec = catalog.action_so3_r3()
    inv = involution_from_spec(spec)
    rng = np.random.default_rng(11)
    for _ in range(10):
        pe = sample_prolongation(spec, rng.uniform(-1, 1, 3), rng)
        back = sigma(inv, sigma(inv, pe))
        assert np.max(np.abs(back.v.a - pe.v.a)) < 1e-12
        assert np.max(np.abs(back.w.a - pe.w.a)) < 1e-12
        assert np.max(np.abs(back.w.mdot - pe.w.mdot)) < 1e-12
        assert np.max(np.abs(back.w.adot - pe.w.adot)) < 1e-12


# -- the flip over a point base: frozen tangent formula -----------------------


def test_point_base_flip_components():
    inv = involution_from_spec(catalog.so3())
    v = JetPoint.constant(np.array([1.0, 0.0, 0.0]), 0)
    w = JetPoint.from_rows(1, [[0.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
    out = inv.flip(v, w)
    # (v, w_H, w_V) -> (v, w_V + [v, w_H]); e1 x e2 = e3
    assert np.array_equal(out.row(0), [1.0, 0.0, 0.0])
    assert np.array_equal(out.row(1), [0.0, 0.0, 3.0])


def test_point_base_tangent_flip_formula():
    # depth-1 v = (a; b), depth-2 w with rows (c, e, d, f) at masks 0,1,2,3
    # maps to rows (a, b, d+[a,c], f+[a,e]+[b,c]) where [x,y] = cross(x,y)
    inv = involution_from_spec(catalog.so3())
    a, b = [1.0, 2.0, 0.0], [0.0, 1.0, 1.0]
    c, e = [1.0, 0.0, 1.0], [0.0, 3.0, 1.0]
    d, f = [2.0, 1.0, 0.0], [1.0, 1.0, 1.0]
    v = JetPoint.from_rows(1, [a, b])
    w = JetPoint.from_rows(2, [c, e, d, f])
    out = inv.flip(v, w)
    assert np.array_equal(out.row(0), a)
    assert np.array_equal(out.row(1), b)
    assert np.array_equal(out.row(2), [4.0, 0.0, -2.0])
    assert np.array_equal(out.row(3), [4.0, 1.0, 3.0])

    rng = np.random.default_rng(13)
    for _ in range(20):
        rows = rng.uniform(-1, 1, (6, 3))
        v = JetPoint.from_rows(1, rows[:2])
        w = JetPoint.from_rows(2, [rows[2], rows[4], rows[3], rows[5]])
        out = inv.flip(v, w)
        expect2 = rows[3] + np.cross(rows[0], rows[2])
        expect3 = rows[5] + np.cross(rows[0], rows[4]) + np.cross(rows[1], rows[2])
        assert np.max(np.abs(out.row(2) - expect2)) < 1e-15
        assert np.max(np.abs(out.row(3) - expect3)) < 1e-15


# -- connection independence of the composite route ---------------------------


def test_composite_flip_with_flat_connection_is_canonical():
    spec = catalog.action_so3_r3()
    canonical = involution_from_spec(spec)
    composite = flip_from_bracket(spec)
    rng = np.random.default_rng(17)
    for _ in range(50):
        pe = sample_prolongation(spec, rng.uniform(-1, 1, 3), rng)
        v, w = pe_jets(pe)
        assert residual(composite.flip(v, w), canonical.flip(v, w)) == 0.0


def test_composite_flip_is_connection_independent():
    spec = catalog.action_so3_r3()
    rng = np.random.default_rng(19)
    conn = ConnectionSpec.random_poly(rng, 3, 3, degree=1)
    with_gamma = flip_from_bracket(spec, conn)
    flat = flip_from_bracket(spec)
    worst = 0.0
    for _ in range(100):
        pe = sample_prolongation(spec, rng.uniform(-1, 1, 3), rng)
        v, w = pe_jets(pe)
        worst = max(worst, residual(with_gamma.flip(v, w), flat.flip(v, w)))
    assert worst < 1e-12


def test_composite_flip_point_base():
    composite = flip_from_bracket(catalog.sl2())
    v = JetPoint.constant(np.array([1.0, 0.0, 0.0]), 0)  # H
    w = JetPoint.from_rows(1, [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])  # (E; 0)
    out = composite.flip(v, w)
    assert np.array_equal(out.row(0), [1.0, 0.0, 0.0])
    assert np.array_equal(out.row(1), [0.0, 2.0, 0.0])  # [H, E] = 2E


# -- axiom suite --------------------------------------------------------------


def test_axioms_tangent_plane_exact():
    report = check_axioms(involution_from_spec(catalog.tangent(2)), samples=40, seed=2)
    assert report.passed
    for name in report.names():
        assert report[name].max_residual < 1e-12, name


def test_axioms_valid_fixtures():
    for name in ["so3", "sl2", "action-so3-r3", "lie-algebra-bundle", "abelian"]:
        inv = involution_from_spec(catalog.get(name))
        report = check_axioms(inv, samples=40, seed=3)
        assert report.passed, "%s: %s" % (name, report.to_text())


def test_axioms_composite_route():
    rng = np.random.default_rng(23)
    conn = ConnectionSpec.random_poly(rng, 3, 3, degree=1)
    inv = flip_from_bracket(catalog.action_so3_r3(), conn)
    report = check_axioms(inv, samples=30, seed=4)
    assert report.passed, report.to_text()


def test_broken_jacobi_fails_flip_axiom_only():
    report = check_axioms(involution_from_spec(catalog.broken_jacobi()),
                          samples=40, seed=5)
    assert not report["flip"].passed
    assert report["flip"].max_residual > 1e-3
    for name in ["projection", "unit", "involution", "source", "zero-sections"]:
        assert report[name].passed, name
        assert report[name].max_residual < 1e-12, name


def test_incompatible_anchor_fails_target():
    report = check_axioms(involution_from_spec(catalog.incompatible_anchor()),
                          samples=40, seed=6)
    assert not report["target"].passed
    assert report["target"].max_residual > 1e-3
    for name in ["projection", "unit", "involution", "source"]:
        assert report[name].passed, name


def test_target_residual_matches_hand_computation():
    # anchor (1, m) with zero bracket: the only mismatched slot of the target
    # law is the mixed second derivative, off by a_v x a_w in the plane
    spec = catalog.incompatible_anchor()
    inv = involution_from_spec(spec)
    m = np.array([0.5])
    pe = ProlongElement(
        AElement(m, np.array([1.0, 2.0])),
        TAElement(m, np.array([3.0, 1.0]),
                  spec.anchor_apply(m, np.array([1.0, 2.0])), np.zeros(2)),
    )
    from invalg.algebroid import t_rho_jet
    from invalg.jet import flip_c
    v, w = pe_jets(pe)
    lhs = t_rho_jet(inv, inv.flip(v, w))
    rhs = flip_c(t_rho_jet(inv, w), 1, 2)
    assert abs(residual(lhs, rhs) - 5.0) < 1e-12


# -- Yang-Baxter form ---------------------------------------------------------


def test_yang_baxter_valid_and_broken():
    ok = check_yang_baxter(involution_from_spec(catalog.action_so3_r3()),
                           samples=30, seed=8)
    assert ok.passed, ok.to_text()
    bad = check_yang_baxter(involution_from_spec(catalog.broken_jacobi()),
                            samples=30, seed=8)
    assert not bad["yang-baxter"].passed
    assert bad["yang-baxter"].max_residual > 1e-3
    assert bad["permutation-braid"].passed


def test_braid_permutations_agree():
    p1, p2, expected = braid_permutations()
    t = tuple(range(7))
    assert p1(p2(p1(t))) == p2(p1(p2(t))) == expected(t)


# -- brackets recovered from flips --------------------------------------------


def test_bracket_from_flip_tangent_line():
    spec = catalog.tangent(1)
    inv = involution_from_spec(spec)
    X = SectionSpec(PolyMap.constant(np.array([1.0]), 1))
    Y = SectionSpec(PolyMap(1, 1, (((1.0, (1,)),),)))  # Y(m) = m
    bracket = bracket_from_flip(inv, X, Y)
    for m in [-0.7, 0.0, 0.4]:
        assert abs(bracket(np.array([m]))[0] - 1.0) < 1e-14


def test_bracket_from_flip_so3_structure():
    inv = involution_from_spec(catalog.so3())
    e = np.eye(3)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            got = bracket_from_flip(inv, const_section(e[i]), const_section(e[j]))(np.zeros(0))
            assert np.array_equal(got, np.cross(e[i], e[j]))


def test_bracket_laws_so3_and_action():
    report = check_bracket_laws(involution_from_spec(catalog.so3()),
                                samples=30, seed=9)
    assert report.passed, report.to_text()
    report = check_bracket_laws(involution_from_spec(catalog.action_so3_r3()),
                                samples=30, seed=10)
    assert report.passed, report.to_text()


def test_leibniz_rule():
    spec = catalog.action_so3_r3()
    inv = involution_from_spec(spec)
    X = SectionSpec(PolyMap(3, 3, (
        ((1.0, (0, 0, 0)), (0.5, (1, 0, 0))),
        ((1.0, (0, 1, 0)),),
        ((-0.5, (0, 0, 2)),),
    )))
    Y = SectionSpec(PolyMap(3, 3, (
        ((1.0, (0, 0, 1)),),
        ((1.0, (0, 0, 0)),),
        ((0.25, (1, 1, 0)),),
    )))
    f = ScalarFieldSpec(PolyMap(3, 1, (
        ((1.0, (0, 0, 0)), (2.0, (1, 0, 0)), (-1.0, (0, 2, 1))),
    )))
    report = check_leibniz(inv, X, Y, f, samples=30, seed=11)
    assert report.passed, report.to_text()


def test_roundtrip_bracket_and_flip():
    report = roundtrip_bracket(catalog.action_so3_r3(), samples=30, seed=12)
    assert report.passed, report.to_text()
    assert report["bracket-roundtrip"].max_residual < 1e-12

    report = roundtrip_bracket(catalog.sl2(), samples=30, seed=13)
    assert report.passed, report.to_text()
    assert report["flip-roundtrip"].max_residual == 0.0


def test_spec_recovery_is_exact_over_a_point():
    for name in ["so3", "sl2"]:
        spec = catalog.get(name)
        recovered = spec_from_flip(involution_from_spec(spec))
        assert recovered.c_pairs.terms == spec.c_pairs.terms
    with pytest.raises(ValueError):
        spec_from_flip(involution_from_spec(catalog.tangent(1)))
