"""Differentiating groupoids: matrix groups and pair groupoids.

The flip of a differentiated groupoid is the second-order jet composite

    flip(v, w) = cw . 0v . (c0pw)^{-1}

For a matrix group the second-order jets are quadruples of matrices and the
composite is truncated polynomial algebra, so it runs unchanged whether the
matrix entries are floats or jet scalars; the latter makes the resulting
involution algebroid fully checkable by the axiom suite.  The pair groupoid
over R^m is carried alongside: there the same composite is pure index
bookkeeping and lands exactly on the tangent-bundle flip.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .algebroid import (
    InvolutionAlgebroid,
    bracket_from_flip,
    check_axioms,
    check_yang_baxter,
    involution_from_spec,
    sample_prolongation,
    spec_from_flip,
)
from .catalog import tangent
from .bundle import SectionSpec, TAElement
from .jet import JetPoint, JetScalar, PolyMap, flip_c, join_innermost, residual, split_innermost
from .report import Report, run_check


@dataclass(frozen=True)
class MatrixGroupSpec:
    """A matrix Lie group presented by a basis of its algebra inside gl(N).

    Construction checks that the basis is linearly independent and closed
    under commutators (projection residual at most 1e-9).  Projection onto
    basis coordinates solves the normal equations, which keeps coordinates
    of exact basis combinations exact for orthogonal bases.
    """

    n: int
    basis: tuple
    name: str = ""

    def __post_init__(self):
        mats = tuple(np.asarray(b, dtype=float) for b in self.basis)
        object.__setattr__(self, "basis", mats)
        for b in mats:
            if b.shape != (self.n, self.n):
                raise ValueError("basis matrices must be %dx%d" % (self.n, self.n))
        if not mats:
            raise ValueError("empty algebra basis")
        flat = np.stack([b.reshape(-1) for b in mats])
        if np.linalg.matrix_rank(flat) != len(mats):
            raise ValueError("algebra basis is linearly dependent")
        gram = flat @ flat.T
        object.__setattr__(self, "_proj", np.linalg.solve(gram, flat))
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                com = mats[i] @ mats[j] - mats[j] @ mats[i]
                try:
                    self.project(com)
                except ValueError:
                    raise ValueError(
                        "algebra basis is not closed under commutators "
                        "(pair %d, %d)" % (i, j)
                    ) from None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def to_matrix(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        out = np.zeros((self.n, self.n))
        for c, b in zip(coords, self.basis):
            out = out + c * b
        return out

    def project(self, mat, tol: float = 1e-9) -> np.ndarray:
        mat = np.asarray(mat, dtype=float)
        coords = self._proj @ mat.reshape(-1)
        if float(np.max(np.abs(mat - self.to_matrix(coords)), initial=0.0)) > tol:
            raise ValueError("matrix lies outside the algebra span")
        return coords

    def as_matrix(self, value) -> np.ndarray:
        """Accept either basis coordinates or a matrix already in the span."""
        arr = np.asarray(value, dtype=float)
        if arr.shape == (self.dim,):
            return self.to_matrix(arr)
        if arr.shape == (self.n, self.n):
            self.project(arr)
            return arr
        raise ValueError("expected %d coordinates or a %dx%d matrix"
                         % (self.dim, self.n, self.n))

    # jet-entried counterparts, for the polymorphic flip

    def matrix_jet(self, coords: JetPoint) -> np.ndarray:
        out = np.full((self.n, self.n), JetScalar.constant(0.0, coords.depth), dtype=object)
        for c, b in zip(coords.entries, self.basis):
            out = out + b * c
        return out

    def project_jet(self, mat: np.ndarray, depth: int, tol: float = 1e-9) -> JetPoint:
        flat = mat.reshape(-1)
        coords = JetPoint([sum((float(p) * f for p, f in zip(row, flat)),
                               JetScalar.constant(0.0, depth))
                           for row in self._proj], depth)
        recon = self.matrix_jet(coords)
        worst = 0.0
        for a, b in zip(mat.reshape(-1), recon.reshape(-1)):
            worst = max(worst, max(abs(x - y) for x, y in zip(a.coeffs, b.coeffs)))
        if worst > tol:
            raise ValueError("matrix jet lies outside the algebra span")
        return coords


@dataclass(frozen=True)
class GroupJet2:
    """Second-order two-parameter jet through a matrix group: base matrix and
    the three derivative slots.  Entries may be floats or jet scalars; no
    constraint keeps truncated jets on the group manifold."""

    g: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    g12: np.ndarray

    def __post_init__(self):
        shape = np.shape(self.g)
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError("group jets hold square matrices")
        for part in (self.g1, self.g2, self.g12):
            if np.shape(part) != shape:
                raise ValueError("jet slots must share the base shape")


def jet2_identity(n: int) -> GroupJet2:
    z = np.zeros((n, n))
    return GroupJet2(np.eye(n), z, z, z)


def jet2_mul(x: GroupJet2, y: GroupJet2) -> GroupJet2:
    """Truncated product: Leibniz in each direction and in the mixed slot."""
    if np.shape(x.g) != np.shape(y.g):
        raise ValueError("size mismatch in jet product")
    return GroupJet2(
        x.g @ y.g,
        x.g1 @ y.g + x.g @ y.g1,
        x.g2 @ y.g + x.g @ y.g2,
        x.g12 @ y.g + x.g1 @ y.g2 + x.g2 @ y.g1 + x.g @ y.g12,
    )


def jet2_inv(x: GroupJet2, base_inv=None) -> GroupJet2:
    """Closed-form truncated inverse; jet2_mul(x, jet2_inv(x)) is the identity
    jet to solver precision.  Pass base_inv when the base inverse is known
    (jet-entried matrices cannot go through the linear solver)."""
    gi = np.linalg.inv(x.g) if base_inv is None else base_inv
    return GroupJet2(
        gi,
        -(gi @ x.g1 @ gi),
        -(gi @ x.g2 @ gi),
        gi @ (x.g1 @ gi @ x.g2 + x.g2 @ gi @ x.g1 - x.g12) @ gi,
    )


def group_flip_slots(spec: MatrixGroupSpec, V, W_H, W_V):
    """Run the flip composite on matrix slots and return the three derivative
    slots of the result; the second one vanishes identically."""
    e = np.eye(spec.n)
    z = np.zeros((spec.n, spec.n))
    cw = GroupJet2(e, z, W_H, W_V)
    zero_v = GroupJet2(e, V, z, z)
    c0pw = GroupJet2(e, z, W_H, z)
    out = jet2_mul(jet2_mul(cw, zero_v), jet2_inv(c0pw))
    return out.g1, out.g2, out.g12


def group_flip(spec: MatrixGroupSpec, v, w) -> TAElement:
    """Flip of the differentiated group on one prolongation pair; v and the
    pair w = (w_H, w_V) are basis coordinates or matrices in the span."""
    w_h, w_v = w
    g1, g2, g12 = group_flip_slots(spec, spec.as_matrix(v), spec.as_matrix(w_h),
                                   spec.as_matrix(w_v))
    if float(np.max(np.abs(g2), initial=0.0)) != 0.0:
        raise ArithmeticError("source slot of the flip composite did not cancel")
    empty = np.zeros(0)
    return TAElement(empty, spec.project(g1), empty, spec.project(g12))


def group_involution(spec: MatrixGroupSpec) -> InvolutionAlgebroid:
    """The differentiated group as an involution algebroid over a point; the
    flip evaluator runs the group composite with jet-scalar matrix entries,
    so tangent prolongations come from the same formula."""
    k = spec.dim

    def flip(v: JetPoint, w: JetPoint) -> JetPoint:
        if w.depth != v.depth + 1:
            raise ValueError("flip needs w one level deeper than v")
        depth = v.depth
        w_val, w_dot = split_innermost(w)
        V = spec.matrix_jet(v)
        WH = spec.matrix_jet(w_val)
        WV = spec.matrix_jet(w_dot)
        e = np.full((spec.n, spec.n), JetScalar.constant(0.0, depth), dtype=object)
        for i in range(spec.n):
            e[i, i] = JetScalar.constant(1.0, depth)
        z = np.full((spec.n, spec.n), JetScalar.constant(0.0, depth), dtype=object)
        cw = GroupJet2(e, z, WH, WV)
        zero_v = GroupJet2(e, V, z, z)
        c0pw = GroupJet2(e, z, WH, z)
        out = jet2_mul(jet2_mul(cw, zero_v), jet2_inv(c0pw, base_inv=e))
        for entry in out.g2.reshape(-1):
            if any(c != 0.0 for c in entry.coeffs):
                raise ArithmeticError("source slot of the flip composite did not cancel")
        value = spec.project_jet(out.g1, depth)
        dot = spec.project_jet(out.g12, depth)
        return join_innermost(value, dot)

    return InvolutionAlgebroid(0, k, PolyMap.zero(0, 0), flip, describe=spec.name)


def differentiate_group(spec: MatrixGroupSpec, samples: int = 60, seed: int = 0,
                        workers: int = 1):
    """Differentiate a matrix group and verify the result: the axiom suite,
    the braid form, antisymmetry of the recovered bracket, and the Jacobi
    defect of the recovered structure constants.  Returns the involution
    algebroid (carrying the recovered constants) and the report."""
    first = group_involution(spec)
    recovered = spec_from_flip(first)
    inv = InvolutionAlgebroid(0, spec.dim, PolyMap.zero(0, 0), first.flip,
                              spec=recovered, describe=spec.name)
    report = Report()
    report.extend(check_axioms(inv, samples=samples, seed=seed, workers=workers))
    report.extend(check_yang_baxter(inv, samples=max(10, samples // 2), seed=seed,
                                    workers=workers))

    basis = np.eye(spec.dim)
    pairs = [(i, j) for i in range(spec.dim) for j in range(spec.dim) if i != j]

    def antisym(pair):
        i, j = pair
        fwd = bracket_from_flip(inv, SectionSpec(PolyMap.constant(basis[i], 0)),
                                SectionSpec(PolyMap.constant(basis[j], 0)))(np.zeros(0))
        bwd = bracket_from_flip(inv, SectionSpec(PolyMap.constant(basis[j], 0)),
                                SectionSpec(PolyMap.constant(basis[i], 0)))(np.zeros(0))
        return float(np.max(np.abs(fwd + bwd), initial=0.0))

    report.add(run_check("bracket-antisymmetric", pairs, antisym, 1e-9, seed,
                         serialize=list, workers=workers))
    report.extend(recovered.well_formed(samples=30, seed=seed, workers=workers))
    return inv, report


# -- pair groupoids over R^m --------------------------------------------------


@dataclass(frozen=True)
class PairGroupoidSpec:
    """The groupoid of ordered pairs of points of R^dim; an arrow (a, b) runs
    from b to a and composition drops the matched middle point."""

    dim: int
    name: str = "pair-groupoid"


def pair_compose(x, y, tol: float = 1e-9):
    """Second-order composition: components are jets of the two endpoint
    paths, composable when the middle paths agree."""
    if residual(x[1], y[0]) > tol:
        raise ValueError("pair jets are not composable: middle paths differ")
    return (x[0], y[1])


def pair_inverse(x):
    return (x[1], x[0])


def _assemble4(b0: JetPoint, b1: JetPoint, b2: JetPoint, b3: JetPoint) -> JetPoint:
    """Attach two outer directions to four depth-k blocks; block dirs shift
    inward by two."""
    blocks = (b0, b1, b2, b3)
    k = b0.depth
    inner = 1 << k
    entries = []
    for i in range(b0.dim):
        cs = [0.0] * (4 * inner)
        for outer in range(4):
            coeffs = blocks[outer].entries[i].coeffs
            for m in range(inner):
                cs[outer | (m << 2)] = coeffs[m]
        entries.append(JetScalar(k + 2, cs))
    return JetPoint(entries, k + 2)


def _extract4(x: JetPoint):
    """Inverse of _assemble4."""
    k = x.depth - 2
    inner = 1 << k
    blocks = []
    for outer in range(4):
        entries = []
        for e in x.entries:
            entries.append(JetScalar(k, [e.coeffs[outer | (m << 2)] for m in range(inner)]))
        blocks.append(JetPoint(entries, k))
    return tuple(blocks)


def pair_involution(spec: PairGroupoidSpec) -> InvolutionAlgebroid:
    """Differentiate the pair groupoid: embed prolongation pairs as pairs of
    endpoint-path jets, run the flip composite through composition and
    inversion, and read the result back.  Everything is relabeling, so the
    output coincides bit for bit with the tangent-bundle flip."""
    d = spec.dim
    rho = PolyMap.constant(np.eye(d).reshape(-1), d)

    def flip(v: JetPoint, w: JetPoint) -> JetPoint:
        if w.depth != v.depth + 1:
            raise ValueError("flip needs w one level deeper than v")
        depth = v.depth
        w_val, w_dot = split_innermost(w)
        mj, av = v.take(0, d), v.take(d, 2 * d)
        aw = w_val.take(d, 2 * d)
        mdot, adot = w_dot.take(0, d), w_dot.take(d, 2 * d)
        zero = JetPoint([JetScalar.constant(0.0, depth) for _ in range(d)], depth)
        # embeddings: first component carries the moving endpoint, second the
        # anchored one; the fiber direction sits on the second outer slot
        w1 = _assemble4(mj, mdot, aw, adot)
        w2 = _assemble4(mj, mdot, zero, zero)
        cw = (flip_c(w1, 1, 2), flip_c(w2, 1, 2))
        zero_v = (_assemble4(mj, zero, av, zero), _assemble4(mj, zero, zero, zero))
        c0pw = (_assemble4(mj, aw, zero, zero), _assemble4(mj, zero, zero, zero))
        out = pair_compose(pair_compose(cw, zero_v), pair_inverse(c0pw))
        c_move = _extract4(out[0])
        c_anchor = _extract4(out[1])
        # consistency of the output embedding: anchored component must be the
        # base path prolonged by the new fiber value, with nothing higher
        if residual(c_anchor[0], c_move[0]) > 1e-9 or residual(c_anchor[1], c_move[1]) > 1e-9:
            raise ArithmeticError("pair flip output lost its embedding shape")
        for blk in (c_anchor[2], c_anchor[3]):
            if any(c != 0.0 for e in blk.entries for c in e.coeffs):
                raise ArithmeticError("pair flip output lost its embedding shape")
        value = c_move[0].concat(c_move[2])
        dot = c_move[1].concat(c_move[3])
        return join_innermost(value, dot)

    return InvolutionAlgebroid(d, d, rho, flip, describe=spec.name)


def differentiate_pair_groupoid(spec: PairGroupoidSpec, samples: int = 40,
                                seed: int = 0, workers: int = 1):
    """Differentiate the pair groupoid and verify it lands on the tangent
    algebroid of the base, bit for bit, besides passing the axiom suite."""
    inv = pair_involution(spec)
    reference = tangent(spec.dim)
    ref_inv = involution_from_spec(reference)
    final = InvolutionAlgebroid(spec.dim, spec.dim, inv.rho, inv.flip,
                                spec=reference, describe=spec.name)
    report = Report()
    report.extend(check_axioms(final, samples=samples, seed=seed, workers=workers))
    report.extend(check_yang_baxter(final, samples=max(10, samples // 2), seed=seed,
                                    workers=workers))

    rng = np.random.default_rng(seed)
    pes = [sample_prolongation(final, rng.uniform(-1, 1, spec.dim), rng)
           for _ in range(samples)]

    def matches(pe):
        v = JetPoint.constant(np.concatenate([pe.v.m, pe.v.a]), 0)
        w = pe.w.to_jet()
        return residual(final.flip(v, w), ref_inv.flip(v, w))

    report.add(run_check("matches-tangent-flip", pes, matches, 0.0, seed,
                         serialize=None, workers=workers))
    return final, report


# -- the group catalog --------------------------------------------------------


def so3_group() -> MatrixGroupSpec:
    basis = (
        np.array([[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]),
        np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]),
        np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
    )
    return MatrixGroupSpec(3, basis, name="so3")


def sl2_group() -> MatrixGroupSpec:
    basis = (
        np.array([[1.0, 0.0], [0.0, -1.0]]),
        np.array([[0.0, 1.0], [0.0, 0.0]]),
        np.array([[0.0, 0.0], [1.0, 0.0]]),
    )
    return MatrixGroupSpec(2, basis, name="sl2")


def diag_abelian_group(n: int) -> MatrixGroupSpec:
    basis = tuple(np.diag(row) for row in np.eye(n))
    return MatrixGroupSpec(n, basis, name="diag-abelian(%d)" % n)


def group_catalog(name: str):
    """Named group and groupoid fixtures: so3, sl2, diag-abelian(n),
    pair-groupoid(m)."""
    if name == "so3":
        return so3_group()
    if name == "sl2":
        return sl2_group()
    m = re.fullmatch(r"diag-abelian\((\d+)\)", name)
    if m:
        return diag_abelian_group(int(m.group(1)))
    m = re.fullmatch(r"pair-groupoid\((\d+)\)", name)
    if m:
        return PairGroupoidSpec(int(m.group(1)))
    raise KeyError("unknown group fixture %r; known: so3, sl2, diag-abelian(n), "
                   "pair-groupoid(m)" % (name,))


GROUP_CATALOG_NAMES = ("so3", "sl2", "diag-abelian(n)", "pair-groupoid(m)")
