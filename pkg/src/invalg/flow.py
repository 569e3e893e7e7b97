"""Transport along path and homotopy variations as ODE flows.

A variation of admissible paths is a four-block polynomial curve in the
tangent of the total space; transporting a fiber element along it means
solving the flow equation whose right side is the flip of the moving element
against the variation.  The base equation closes on its own, and the fiber
equation is affine in the fiber, so the solver runs in two stages: base
first on a refined grid, then the affine fiber system along it.  The same
machinery iterated in two parameters gives homotopy transport and the
differentiation / integration maps between fiber paths and infinitesimal
variations.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .algebroid import InvolutionAlgebroid
from .bundle import AElement, TAElement
from .jet import JetPoint, PolyMap, flip_c, residual


def rk4_solve(field, x0, t_end: float, h: float):
    """Classical fourth-order Runge-Kutta with a fixed step.

    The step is snapped so an integer number of steps lands on t_end
    exactly; samples cover t = 0 through t_end inclusive.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    if t_end <= 0:
        raise ValueError("final time must be positive")
    n = max(1, int(round(t_end / h)))
    hs = t_end / n
    x = np.array(x0, dtype=float).reshape(-1)
    times = np.empty(n + 1)
    states = np.empty((n + 1, x.size))
    times[0] = 0.0
    states[0] = x
    for i in range(n):
        t = i * hs
        k1 = np.asarray(field(t, x))
        k2 = np.asarray(field(t + hs / 2, x + (hs / 2) * k1))
        k3 = np.asarray(field(t + hs / 2, x + (hs / 2) * k2))
        k4 = np.asarray(field(t + hs, x + hs * k3))
        x = x + (hs / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise ArithmeticError("trajectory diverged at t = %g" % (t + hs))
        times[i + 1] = (i + 1) * hs
        states[i + 1] = x
    return times, states


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Taylor kernel."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expm takes a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("expm needs finite entries")
    norm = float(np.max(np.abs(a), initial=0.0)) * a.shape[0]
    squarings = 0
    while norm > 0.5:
        norm /= 2.0
        squarings += 1
    scaled = a / float(2 ** squarings)
    result = np.eye(a.shape[0])
    term = np.eye(a.shape[0])
    for k in range(1, 40):
        term = term @ scaled / k
        result = result + term
        if float(np.max(np.abs(term))) <= 1e-17 * max(1.0, float(np.max(np.abs(result)))):
            break
    for _ in range(squarings):
        result = result @ result
    return result


def _split_blocks(arr, dm: int, da: int):
    arr = np.asarray(arr, dtype=float).reshape(2 * (dm + da))
    n = dm + da
    return arr[:dm], arr[dm:n], arr[n:n + dm], arr[n + dm:]


@dataclass(frozen=True)
class APathVariation:
    """Polynomial curve of prolongation data: four blocks (base point,
    fiber point, base velocity, fiber velocity) as functions of one time
    parameter.  Nothing is forced at construction beyond shapes, so
    ill-formed curves are representable for negative tests; membership is a
    measurement."""

    dim_M: int
    dim_A: int
    phi: PolyMap
    t_end: float = 1.0

    def __post_init__(self):
        if self.phi.in_dim != 1:
            raise ValueError("path variation is a curve in one parameter")
        if self.phi.out_dim != 2 * (self.dim_M + self.dim_A):
            raise ValueError("path variation needs four blocks of output")
        if not self.t_end > 0:
            raise ValueError("final time must be positive")

    def blocks(self, t: float) -> TAElement:
        m, a, mdot, adot = _split_blocks(self.phi.eval_floats([t]), self.dim_M, self.dim_A)
        return TAElement(m, a, mdot, adot)

    def membership_residual(self, inv: InvolutionAlgebroid, grid: int = 33) -> dict:
        """Largest defect of the two defining identities of a variation of
        admissible paths over a uniform time grid: the anchor matching the
        base speed, and its derivative matching along the variation."""
        dm, da = self.dim_M, self.dim_A
        worst = {"anchor": 0.0, "variation": 0.0}
        for t in np.linspace(0.0, self.t_end, grid):
            jet = self.phi.eval_jet(JetPoint.from_rows(1, [[t], [1.0]]))
            val = jet.base
            dot = np.array([e.coeffs[1] for e in jet.entries])
            m, a, mdot, adot = _split_blocks(val, dm, da)
            m_t, _, mdot_t, _ = _split_blocks(dot, dm, da)
            r1 = np.abs(inv.anchor_apply(m, a) - m_t)
            worst["anchor"] = max(worst["anchor"], float(np.max(r1, initial=0.0)))
            vel = inv.anchor_apply_jet(
                JetPoint.from_rows(1, [m, mdot]), JetPoint.from_rows(1, [a, adot]))
            r2 = [abs(vel.entries[i].coeffs[1] - mdot_t[i]) for i in range(dm)]
            worst["variation"] = max(worst["variation"], max(r2, default=0.0))
        return worst


@dataclass(frozen=True)
class AHomotopyVariation:
    """Two polynomial surfaces of prolongation data over the unit square,
    one for each parameter direction, sharing base blocks.  As with path
    variations the defining identities are measured, not forced."""

    dim_M: int
    dim_A: int
    h0: PolyMap
    h1: PolyMap

    def __post_init__(self):
        for part in (self.h0, self.h1):
            if part.in_dim != 2:
                raise ValueError("homotopy variation is a surface in two parameters")
            if part.out_dim != 2 * (self.dim_M + self.dim_A):
                raise ValueError("homotopy variation needs four blocks of output")

    def _full_jet(self, pm: PolyMap, s: float, t: float) -> JetPoint:
        return pm.eval_jet(JetPoint.from_rows(2, [[s, t], [1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))

    def membership_residual(self, inv: InvolutionAlgebroid, grid: int = 9) -> dict:
        """Defects of the four identities an admissible homotopy variation
        satisfies: shared base blocks, each direction a path variation, and
        the flip exchanging the two directions' prolongations."""
        dm, da = self.dim_M, self.dim_A
        n = dm + da
        worst = {"paired-base": 0.0, "horizontal": 0.0, "vertical": 0.0, "continuity": 0.0}
        for s in np.linspace(0.0, 1.0, grid):
            for t in np.linspace(0.0, 1.0, grid):
                j0 = self._full_jet(self.h0, s, t)
                j1 = self._full_jet(self.h1, s, t)
                c0 = np.array([e.coeffs for e in j0.entries])
                c1 = np.array([e.coeffs for e in j1.entries])

                pair = max(
                    float(np.max(np.abs(c0[:dm] - c1[:dm]), initial=0.0)),
                    float(np.max(np.abs(c0[n:n + dm] - c1[n:n + dm]), initial=0.0)),
                )
                worst["paired-base"] = max(worst["paired-base"], pair)

                worst["horizontal"] = max(
                    worst["horizontal"], self._direction_residual(inv, c0, 1))
                worst["vertical"] = max(
                    worst["vertical"], self._direction_residual(inv, c1, 2))

                # the exchange identity, evaluated through the flip itself
                v = JetPoint.from_rows(1, [c0[:n, 0], c0[n:, 0]])
                ts_h1 = JetPoint.from_rows(
                    2, [c1[:n, 0], c1[:n, 1], c1[n:, 0], c1[n:, 1]])
                lhs = inv.flip(v, flip_c(ts_h1, 1, 2))
                tt_h0 = JetPoint.from_rows(
                    2, [c0[:n, 0], c0[:n, 2], c0[n:, 0], c0[n:, 2]])
                worst["continuity"] = max(
                    worst["continuity"], residual(lhs, flip_c(tt_h0, 1, 2)))
        return worst

    def _direction_residual(self, inv, coeffs, mask: int) -> float:
        dm, da = self.dim_M, self.dim_A
        n = dm + da
        m, a = coeffs[:dm, 0], coeffs[dm:n, 0]
        mdot, adot = coeffs[n:n + dm, 0], coeffs[n + dm:, 0]
        m_d, mdot_d = coeffs[:dm, mask], coeffs[n:n + dm, mask]
        r1 = float(np.max(np.abs(inv.anchor_apply(m, a) - m_d), initial=0.0))
        vel = inv.anchor_apply_jet(
            JetPoint.from_rows(1, [m, mdot]), JetPoint.from_rows(1, [a, adot]))
        r2 = max((abs(vel.entries[i].coeffs[1] - mdot_d[i]) for i in range(dm)), default=0.0)
        return max(r1, r2)


@dataclass(frozen=True)
class LinearDynSys:
    """Affine fiber system along a precomputed base trajectory: the base is
    sampled on a grid twice as fine as the fiber step so the fiber solver
    can evaluate the coefficients at half steps."""

    times: np.ndarray
    base_points: np.ndarray
    coefficient: Callable  # (t, m) -> (matrix, offset)

    def base_at(self, t: float) -> np.ndarray:
        dt = self.times[1] - self.times[0] if len(self.times) > 1 else 1.0
        idx = int(round(t / dt))
        if idx < 0 or idx >= len(self.times) or abs(self.times[idx] - t) > 1e-9:
            raise ValueError("time %g is off the base grid" % t)
        return self.base_points[idx]

    def solve(self, b0, t_end: float, h: float):
        cache = {}

        def field(t, b):
            key = round(t * 1e12)
            if key not in cache:
                cache[key] = self.coefficient(t, self.base_at(t))
            mat, off = cache[key]
            return mat @ b + off

        return rk4_solve(field, b0, t_end, h)


@dataclass(frozen=True)
class PathTransport:
    """Sampled solution of a transport along a path variation, with the
    measured defect of the anchor identity it must satisfy."""

    times: np.ndarray
    base: np.ndarray
    fiber: np.ndarray
    anchor_residual: float

    def to_csv(self) -> str:
        lines = []
        for i, t in enumerate(self.times):
            row = [t, *self.base[i], *self.fiber[i]]
            lines.append(",".join("%.17g" % x for x in row))
        return "\n".join(lines) + "\n"


def _coefficient_evaluator(inv: InvolutionAlgebroid, phi: APathVariation):
    """The affine right side of the fiber equation, read off the attached
    structure data when present and from flip evaluations otherwise."""
    dm, da = inv.dim_M, inv.dim_A

    if inv.spec is not None:
        spec = inv.spec

        def coefficient(t, m):
            _, a_phi, _, adot_phi = _split_blocks(phi.phi.eval_floats([t]), dm, da)
            mat = spec.c_tensor(m) @ a_phi
            return mat, adot_phi

        return coefficient

    def coefficient(t, m):
        _, a_phi, mdot_phi, adot_phi = _split_blocks(phi.phi.eval_floats([t]), dm, da)

        def velocity(b):
            v = JetPoint.constant(np.concatenate([m, b]), 0)
            w = JetPoint.from_rows(
                1, [np.concatenate([m, a_phi]),
                    np.concatenate([mdot_phi, adot_phi])])
            out = inv.flip(v, w)
            return np.array([e.coeffs[1] for e in out.entries[dm:]])

        off = velocity(np.zeros(da))
        mat = np.empty((da, da))
        basis = np.eye(da)
        for j in range(da):
            mat[:, j] = velocity(basis[j]) - off
        return mat, off

    return coefficient


def apath_transport(inv: InvolutionAlgebroid, phi: APathVariation, a0: AElement,
                    h: float = 1e-3, composability_tol: float = 1e-9) -> PathTransport:
    """Transport a fiber element along a path variation: the base point
    follows the anchor of the variation's fiber block and the fiber follows
    the affine equation read off from the flip.  The anchor identity the
    result satisfies is measured and returned, not assumed."""
    dm, da = inv.dim_M, inv.dim_A
    start = phi.blocks(0.0)
    if composability_tol != np.inf:
        gap = max(
            float(np.max(np.abs(np.asarray(a0.m, dtype=float) - start.m), initial=0.0)),
            float(np.max(np.abs(inv.anchor_apply(a0.m, a0.a) - start.mdot), initial=0.0)),
        )
        if gap > composability_tol:
            raise ValueError(
                "initial element is not composable with the variation "
                "(defect %.3e)" % gap)

    n = max(1, int(round(phi.t_end / h)))
    hs = phi.t_end / n

    def base_field(t, m):
        _, a_phi, _, _ = _split_blocks(phi.phi.eval_floats([t]), dm, da)
        return inv.anchor_apply(m, a_phi)

    fine_times, fine_base = rk4_solve(base_field, a0.m, phi.t_end, hs / 2)
    system = LinearDynSys(fine_times, fine_base, _coefficient_evaluator(inv, phi))
    times, fiber = system.solve(a0.a, phi.t_end, hs)
    base = fine_base[::2]

    worst = 0.0
    for i, t in enumerate(times):
        v = phi.blocks(t)
        worst = max(worst, float(np.max(np.abs(base[i] - v.m), initial=0.0)))
        worst = max(worst, float(np.max(
            np.abs(inv.anchor_apply(base[i], fiber[i]) - v.mdot), initial=0.0)))
    return PathTransport(times, base, fiber, worst)


def _fix_first(pm: PolyMap, s0: float) -> PolyMap:
    inner = PolyMap.from_terms(1, [((s0, (0,)),), ((1.0, (1,)),)])
    return pm.compose(inner)


def _fix_second(pm: PolyMap, t0: float) -> PolyMap:
    inner = PolyMap.from_terms(1, [((1.0, (1,)),), ((t0, (0,)),)])
    return pm.compose(inner)


@dataclass(frozen=True)
class HomotopyTransport:
    """Both integration orders of a transport over the unit square and
    their largest disagreement."""

    s_nodes: np.ndarray
    t_nodes: np.ndarray
    base0: np.ndarray
    fiber0: np.ndarray
    base1: np.ndarray
    fiber1: np.ndarray
    discrepancy: float

    def to_csv(self, which: int = 0) -> str:
        fiber = self.fiber0 if which == 0 else self.fiber1
        lines = []
        for i, s in enumerate(self.s_nodes):
            for j, t in enumerate(self.t_nodes):
                row = [s, t, *fiber[i, j]]
                lines.append(",".join("%.17g" % x for x in row))
        return "\n".join(lines) + "\n"


def ahomotopy_transport(inv: InvolutionAlgebroid, hv: AHomotopyVariation, a0: AElement,
                        h: float = 1e-3, grid: int = 11, workers: int = 1) -> HomotopyTransport:
    """Transport a fiber element over the unit square both ways: vertically
    then horizontally, and in the transposed order.  For well-formed
    homotopy variations the two surfaces agree; the discrepancy is measured
    and returned either way."""
    dm, da = inv.dim_M, inv.dim_A
    start = hv.h0.eval_floats([0.0, 0.0])
    m0, _, mdot0, _ = _split_blocks(start, dm, da)
    gap = max(
        float(np.max(np.abs(np.asarray(a0.m, dtype=float) - m0), initial=0.0)),
        float(np.max(np.abs(inv.anchor_apply(a0.m, a0.a) - mdot0), initial=0.0)),
    )
    if gap > 1e-9:
        raise ValueError(
            "initial element is not composable with the homotopy (defect %.3e)" % gap)

    if grid < 2:
        raise ValueError("output grid needs at least two nodes per axis")
    segments = grid - 1
    n = max(segments, int(round(1.0 / h)))
    n = ((n + segments - 1) // segments) * segments
    hs = 1.0 / n
    stride = n // segments
    nodes = np.linspace(0.0, 1.0, grid)

    def spine_and_rows(first_dir: bool):
        # first_dir True: integrate along t at the s=0 edge, then rows in s
        edge = _fix_first(hv.h1, 0.0) if first_dir else _fix_second(hv.h0, 0.0)
        spine = apath_transport(inv, APathVariation(dm, da, edge, 1.0), a0,
                                hs, composability_tol=np.inf)
        base = np.empty((grid, grid, dm))
        fiber = np.empty((grid, grid, da))

        def solve_row(j):
            anchor_idx = j * stride
            init = AElement(spine.base[anchor_idx], spine.fiber[anchor_idx])
            slice_pm = _fix_second(hv.h0, nodes[j]) if first_dir else _fix_first(hv.h1, nodes[j])
            run = apath_transport(inv, APathVariation(dm, da, slice_pm, 1.0), init,
                                  hs, composability_tol=np.inf)
            return run.base[::stride], run.fiber[::stride]

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(solve_row, range(grid)))
        else:
            rows = [solve_row(j) for j in range(grid)]
        for j, (brow, frow) in enumerate(rows):
            if first_dir:
                base[:, j], fiber[:, j] = brow, frow
            else:
                base[j, :], fiber[j, :] = brow, frow
        return base, fiber

    base0, fiber0 = spine_and_rows(True)
    base1, fiber1 = spine_and_rows(False)
    discrepancy = max(
        float(np.max(np.abs(base0 - base1), initial=0.0)),
        float(np.max(np.abs(fiber0 - fiber1), initial=0.0)),
    )
    return HomotopyTransport(nodes, nodes, base0, fiber0, base1, fiber1, discrepancy)


# -- differentiation and integration between fiber data and variations --------


def _linear_rows(mat: np.ndarray, pm: PolyMap) -> PolyMap:
    """Compose a constant matrix with a polynomial map, exactly."""
    mat = np.asarray(mat, dtype=float)
    rows = []
    for k in range(mat.shape[0]):
        acc = {}
        for j in range(mat.shape[1]):
            if mat[k, j] == 0.0:
                continue
            for c, exps in pm.terms[j]:
                acc[exps] = acc.get(exps, 0.0) + mat[k, j] * c
        rows.append(tuple((c, e) for e, c in sorted(acc.items()) if c != 0.0))
    return PolyMap(pm.in_dim, mat.shape[0], tuple(rows))


def inf_apath_vee(inv: InvolutionAlgebroid, chi: PolyMap, m) -> APathVariation:
    """Differentiate a fiber path starting at zero into an infinitesimal
    path variation: the flip of the zero section against the path's tangent,
    which in blocks reads (m, 0, anchor applied to the path, its speed)."""
    dm, da = inv.dim_M, inv.dim_A
    if chi.in_dim != 1 or chi.out_dim != da:
        raise ValueError("fiber path must map one parameter to fiber coordinates")
    start = chi.eval_floats([0.0])
    if float(np.max(np.abs(start), initial=0.0)) > 1e-12:
        raise ValueError("fiber path must start at zero")
    m = np.asarray(m, dtype=float).reshape(dm)
    blocks = PolyMap.constant(m, 1)
    blocks = blocks.stack(PolyMap.zero(1, da))
    blocks = blocks.stack(_linear_rows(inv.anchor_matrix(m), chi))
    blocks = blocks.stack(chi.partial(0))
    return APathVariation(dm, da, blocks, 1.0)


def alg1_residuals(inv: InvolutionAlgebroid, phi: APathVariation, grid: int = 33) -> dict:
    """Defects of the three conditions cutting out infinitesimal path
    variations: zero value part over a constant base, no base speed at the
    start, and the path-variation identity."""
    dm, da = inv.dim_M, inv.dim_A
    m = phi.blocks(0.0).m
    starts = 0.0
    for t in np.linspace(0.0, phi.t_end, grid):
        v = phi.blocks(t)
        starts = max(starts,
                     float(np.max(np.abs(v.a), initial=0.0)),
                     float(np.max(np.abs(v.m - m), initial=0.0)))
    member = phi.membership_residual(inv, grid)
    return {
        "starts-at-zero": starts,
        "source-constant": float(np.max(np.abs(phi.blocks(0.0).mdot), initial=0.0)),
        "variation": max(member.values()),
    }


@dataclass(frozen=True)
class FiberPath:
    """Sampled path through a single fiber."""

    m: np.ndarray
    times: np.ndarray
    values: np.ndarray

    def to_csv(self) -> str:
        lines = []
        for i, t in enumerate(self.times):
            lines.append(",".join("%.17g" % x for x in [t, *self.values[i]]))
        return "\n".join(lines) + "\n"


def inf_apath_wedge(inv: InvolutionAlgebroid, phi: APathVariation, h: float = 1e-3,
                    membership_tol: float = 1e-9) -> FiberPath:
    """Integrate an infinitesimal path variation back into a fiber path
    starting at zero, by transporting the zero vector along it.  The base
    must not move along the way; that is verified, not assumed."""
    checks = alg1_residuals(inv, phi)
    defect = max(checks.values())
    if defect > membership_tol:
        raise ValueError(
            "curve is not an infinitesimal path variation (defect %.3e)" % defect)
    m = phi.blocks(0.0).m
    run = apath_transport(inv, phi, AElement(m, np.zeros(inv.dim_A)), h,
                          composability_tol=membership_tol)
    drift = float(np.max(np.abs(run.base - m), initial=0.0))
    if drift > 1e-9:
        raise ArithmeticError("base point drifted by %.3e during integration" % drift)
    return FiberPath(m, run.times, run.fiber)


def inf_ahomotopy_vee(inv: InvolutionAlgebroid, eta: PolyMap, m) -> AHomotopyVariation:
    """Differentiate a fiber surface through zero into an infinitesimal
    homotopy variation, one direction at a time."""
    dm, da = inv.dim_M, inv.dim_A
    if eta.in_dim != 2 or eta.out_dim != da:
        raise ValueError("fiber surface must map two parameters to fiber coordinates")
    start = eta.eval_floats([0.0, 0.0])
    if float(np.max(np.abs(start), initial=0.0)) > 1e-12:
        raise ValueError("fiber surface must start at zero")
    m = np.asarray(m, dtype=float).reshape(dm)
    anchored = _linear_rows(inv.anchor_matrix(m), eta)

    def half(direction: int) -> PolyMap:
        blocks = PolyMap.constant(m, 2)
        blocks = blocks.stack(PolyMap.zero(2, da))
        blocks = blocks.stack(anchored)
        blocks = blocks.stack(eta.partial(direction))
        return blocks

    return AHomotopyVariation(dm, da, half(0), half(1))


def alg2_residuals(inv: InvolutionAlgebroid, hv: AHomotopyVariation, grid: int = 9) -> dict:
    """Defects of the five conditions cutting out infinitesimal homotopy
    variations, plus the shared-base pairing of the two halves."""
    dm, da = inv.dim_M, inv.dim_A
    m = _split_blocks(hv.h0.eval_floats([0.0, 0.0]), dm, da)[0]
    starts = 0.0
    for s in np.linspace(0.0, 1.0, grid):
        for t in np.linspace(0.0, 1.0, grid):
            for pm in (hv.h0, hv.h1):
                bm, ba, _, _ = _split_blocks(pm.eval_floats([s, t]), dm, da)
                starts = max(starts,
                             float(np.max(np.abs(ba), initial=0.0)),
                             float(np.max(np.abs(bm - m), initial=0.0)))
    source = max(
        float(np.max(np.abs(_split_blocks(hv.h0.eval_floats([0.0, 0.0]), dm, da)[2]),
                     initial=0.0)),
        float(np.max(np.abs(_split_blocks(hv.h1.eval_floats([0.0, 0.0]), dm, da)[2]),
                     initial=0.0)),
    )
    member = hv.membership_residual(inv, grid)
    return {
        "starts-at-zero": starts,
        "source-constant": source,
        "horizontal": member["horizontal"],
        "vertical": member["vertical"],
        "continuity": member["continuity"],
        "paired-base": member["paired-base"],
    }


@dataclass(frozen=True)
class FiberSurface:
    """Sampled surface through a single fiber."""

    m: np.ndarray
    s_nodes: np.ndarray
    t_nodes: np.ndarray
    values: np.ndarray

    def to_csv(self) -> str:
        lines = []
        for i, s in enumerate(self.s_nodes):
            for j, t in enumerate(self.t_nodes):
                lines.append(",".join("%.17g" % x for x in [s, t, *self.values[i, j]]))
        return "\n".join(lines) + "\n"


def inf_ahomotopy_wedge(inv: InvolutionAlgebroid, hv: AHomotopyVariation, h: float = 1e-3,
                        grid: int = 11, membership_tol: float = 1e-9) -> FiberSurface:
    """Integrate an infinitesimal homotopy variation into a fiber surface by
    transporting the zero vector over the square; both integration orders are
    run and must agree."""
    checks = alg2_residuals(inv, hv)
    defect = max(checks.values())
    if defect > membership_tol:
        raise ValueError(
            "surface is not an infinitesimal homotopy variation (defect %.3e)" % defect)
    dm, da = inv.dim_M, inv.dim_A
    m = _split_blocks(hv.h0.eval_floats([0.0, 0.0]), dm, da)[0]
    run = ahomotopy_transport(inv, hv, AElement(m, np.zeros(da)), h, grid)
    drift = max(
        float(np.max(np.abs(run.base0 - m), initial=0.0)),
        float(np.max(np.abs(run.base1 - m), initial=0.0)),
    )
    if drift > 1e-9:
        raise ArithmeticError("base point drifted by %.3e during integration" % drift)
    return FiberSurface(m, run.s_nodes, run.t_nodes, run.fiber0)


def grid_derivative(values, spacing: float, axis: int = 0) -> np.ndarray:
    """Fourth-order finite-difference derivative of uniformly sampled data,
    with one-sided stencils at the edges.  Needs five samples along the
    axis."""
    values = np.asarray(values, dtype=float)
    v = np.moveaxis(values, axis, 0)
    if v.shape[0] < 5:
        raise ValueError("need at least five samples along the axis")
    out = np.empty_like(v)
    out[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / 12
    out[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / 12
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / 12
    out[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / 12
    out[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / 12
    return np.moveaxis(out / spacing, 0, axis)
