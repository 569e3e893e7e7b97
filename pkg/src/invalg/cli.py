"""Command line front end: fixture files in, residual reports and tables out.

Fixtures are JSON with explicit polynomial coefficient tables (no expression
language), so every run is deterministic: same fixture and flags, same bytes
out.  Exit codes: 0 all checks pass, 1 a check failed or a flow was rejected,
2 the input could not be used.
"""

import argparse
import json
import os
import sys

import numpy as np

from .algebroid import (
    AlgebroidSpec,
    _random_section_poly,
    bracket_from_flip,
    check_axioms,
    check_bracket_laws,
    check_leibniz,
    check_yang_baxter,
    flip_from_bracket,
    involution_from_spec,
    sample_prolongation,
    spec_from_flip,
)
from .bundle import AElement, ConnectionSpec, ScalarFieldSpec, SectionSpec, ta_residual
from .catalog import DESCRIPTIONS, get as catalog_get, names as catalog_names
from .flow import AHomotopyVariation, APathVariation, ahomotopy_transport, apath_transport
from .groupoid import (
    GROUP_CATALOG_NAMES,
    MatrixGroupSpec,
    PairGroupoidSpec,
    differentiate_group,
    differentiate_pair_groupoid,
    group_catalog,
)
from .jet import PolyMap, check_tangent_axioms
from .report import CheckResult, Report, run_check

SCHEMA_VERSION = 1
KINDS = ("algebroid", "involution-flip", "group", "section", "scalar-field",
         "apath", "ahomotopy", "connection")


class FixtureError(ValueError):
    """Anything wrong with an input file or flag value; maps to exit code 2."""


# -- fixture loading ----------------------------------------------------------


def _require(node: dict, key: str, where: str):
    if key not in node:
        raise FixtureError("missing %r in %s" % (key, where))
    return node[key]


def _load_polymap(table, in_dim: int, out_dim: int, where: str) -> PolyMap:
    if not isinstance(table, list) or len(table) != out_dim:
        raise FixtureError("%s needs %d coefficient rows" % (where, out_dim))
    rows = []
    for r, row in enumerate(table):
        if not isinstance(row, list):
            raise FixtureError("%s row %d must be a list of terms" % (where, r))
        terms = []
        for entry in row:
            try:
                coeff = float(entry["coeff"])
                exps = [int(e) for e in entry["exponents"]]
            except (TypeError, KeyError, ValueError):
                raise FixtureError(
                    "%s row %d: each term needs a coeff and an exponents list" % (where, r))
            if len(exps) != in_dim or any(e < 0 for e in exps):
                raise FixtureError(
                    "%s row %d: exponents must be %d nonnegative integers" % (where, r, in_dim))
            terms.append((coeff, tuple(exps)))
        rows.append(terms)
    return PolyMap.from_terms(in_dim, rows)


def _merge_terms(terms) -> tuple:
    acc = {}
    for c, e in terms:
        acc[e] = acc.get(e, 0.0) + c
    return tuple(sorted((e, c) for e, c in acc.items() if c != 0.0))


def _load_structure(entries, dim_M: int, dim_A: int) -> list:
    """Canonicalize bracket entries to i < j, folding in the antisymmetry
    sign; mirror duplicates must agree after the fold or the file is
    rejected."""
    if not isinstance(entries, list):
        raise FixtureError("structure must be a list of entries")
    canon = {}
    for pos, entry in enumerate(entries):
        where = "structure entry %d" % pos
        try:
            i = int(_require(entry, "i", where))
            j = int(_require(entry, "j", where))
            k = int(_require(entry, "k", where))
        except (TypeError, ValueError):
            raise FixtureError("%s: indices must be integers" % where)
        if not (0 <= i < dim_A and 0 <= j < dim_A and 0 <= k < dim_A):
            raise FixtureError("%s: indices out of range for %d fiber coordinates"
                               % (where, dim_A))
        if i == j:
            raise FixtureError("%s: diagonal entries vanish by antisymmetry; drop it" % where)
        if "terms" in entry:
            pm = _load_polymap([entry["terms"]], dim_M, 1, where)
            terms = list(pm.terms[0])
        elif "coeff" in entry:
            try:
                terms = [(float(entry["coeff"]), tuple([0] * dim_M))]
            except (TypeError, ValueError):
                raise FixtureError("%s: coeff must be a number" % where)
        else:
            raise FixtureError("%s: needs either coeff or terms" % where)
        sign = 1.0
        if i > j:
            i, j, sign = j, i, -1.0
        normalized = _merge_terms((sign * c, e) for c, e in terms)
        key = (i, j, k)
        if key in canon and canon[key] != normalized:
            raise FixtureError(
                "structure entries for the pair (%d, %d) output %d disagree "
                "after antisymmetry" % (i, j, k))
        canon[key] = normalized
    out = []
    for (i, j, k), normalized in sorted(canon.items()):
        out.append((i, j, k, [(c, e) for e, c in normalized]))
    return out


def _catalog_spec(name) -> AlgebroidSpec:
    try:
        return catalog_get(name)
    except KeyError as exc:
        raise FixtureError(str(exc.args[0]) if exc.args else str(exc))


def _load_algebroid_node(node, where: str) -> AlgebroidSpec:
    if isinstance(node, str):
        return _catalog_spec(node)
    if not isinstance(node, dict):
        raise FixtureError("%s must be an object or a catalog name" % where)
    if "catalog" in node:
        return _catalog_spec(node["catalog"])
    dm = int(_require(node, "dim_M", where))
    da = int(_require(node, "dim_A", where))
    rho = _load_polymap(_require(node, "anchor", where), dm, dm * da, where + ".anchor")
    entries = _load_structure(node.get("structure", []), dm, da)
    try:
        return AlgebroidSpec.from_structure(dm, da, rho, entries)
    except ValueError as exc:
        raise FixtureError(str(exc))


def _load_element(node, dm: int, da: int) -> AElement:
    try:
        m = np.asarray(_require(node, "m", "initial"), dtype=float).reshape(dm)
        a = np.asarray(_require(node, "a", "initial"), dtype=float).reshape(da)
    except (TypeError, ValueError):
        raise FixtureError("initial element needs m with %d and a with %d entries" % (dm, da))
    return AElement(m, a)


def load_fixture(path: str) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise FixtureError("cannot read %s: %s" % (path, exc))
    except json.JSONDecodeError as exc:
        raise FixtureError("invalid JSON in %s: %s" % (path, exc))
    if not isinstance(raw, dict):
        raise FixtureError("fixture must be a JSON object")
    if raw.get("schema_version") != SCHEMA_VERSION:
        raise FixtureError("unsupported schema_version %r" % (raw.get("schema_version"),))
    kind = raw.get("kind")
    if kind not in KINDS:
        raise FixtureError("unknown kind %r; expected one of %s" % (kind, ", ".join(KINDS)))
    out = {"kind": kind, "raw": raw}

    if kind in ("algebroid", "involution-flip"):
        out["spec"] = _load_algebroid_node(raw, kind)
    elif kind == "connection":
        out["spec"] = _load_algebroid_node(_require(raw, "algebroid", kind), "connection.algebroid")
        dm, da = out["spec"].dim_M, out["spec"].dim_A
        if "gamma" in raw:
            gamma = _load_polymap(raw["gamma"], dm, da * dm * da, "connection.gamma")
            out["connection"] = ConnectionSpec(dm, da, gamma)
        else:
            out["connection"] = ConnectionSpec.flat(dm, da)
    elif kind == "group":
        if "catalog" in raw:
            try:
                out["group"] = group_catalog(raw["catalog"])
            except KeyError as exc:
                raise FixtureError(str(exc.args[0]) if exc.args else str(exc))
        else:
            n = int(_require(raw, "n", kind))
            basis_raw = _require(raw, "basis", kind)
            try:
                basis = tuple(np.asarray(b, dtype=float).reshape(n, n) for b in basis_raw)
                out["group"] = MatrixGroupSpec(n, basis, name=str(raw.get("name", "")))
            except (TypeError, ValueError) as exc:
                raise FixtureError("bad group basis: %s" % exc)
    elif kind == "section":
        dm = int(_require(raw, "dim_M", kind))
        da = int(_require(raw, "dim_A", kind))
        out["section"] = SectionSpec(_load_polymap(_require(raw, "table", kind), dm, da, kind))
    elif kind == "scalar-field":
        dm = int(_require(raw, "dim_M", kind))
        out["field"] = ScalarFieldSpec(_load_polymap(_require(raw, "table", kind), dm, 1, kind))
    elif kind == "apath":
        out["spec"] = _load_algebroid_node(_require(raw, "algebroid", kind), "apath.algebroid")
        dm, da = out["spec"].dim_M, out["spec"].dim_A
        blocks = _load_polymap(_require(raw, "blocks", kind), 1, 2 * (dm + da), "apath.blocks")
        try:
            out["variation"] = APathVariation(dm, da, blocks, float(raw.get("t_end", 1.0)))
        except ValueError as exc:
            raise FixtureError(str(exc))
        if "initial" in raw:
            out["initial"] = _load_element(raw["initial"], dm, da)
    elif kind == "ahomotopy":
        out["spec"] = _load_algebroid_node(_require(raw, "algebroid", kind), "ahomotopy.algebroid")
        dm, da = out["spec"].dim_M, out["spec"].dim_A
        h0 = _load_polymap(_require(raw, "h0", kind), 2, 2 * (dm + da), "ahomotopy.h0")
        h1 = _load_polymap(_require(raw, "h1", kind), 2, 2 * (dm + da), "ahomotopy.h1")
        try:
            out["variation"] = AHomotopyVariation(dm, da, h0, h1)
        except ValueError as exc:
            raise FixtureError(str(exc))
        if "initial" in raw:
            out["initial"] = _load_element(raw["initial"], dm, da)
    return out


# -- serialization helpers ----------------------------------------------------


def _structure_entries(spec: AlgebroidSpec) -> list:
    entries = []
    pairs = spec.pairs
    for k in range(spec.dim_A):
        for pos, (i, j) in enumerate(pairs):
            row = spec.c_pairs.terms[k * len(pairs) + pos]
            if not row:
                continue
            entries.append({"i": i, "j": j, "k": k,
                            "terms": [{"coeff": c, "exponents": list(e)} for c, e in row]})
    return entries


def _ser_vector(v) -> list:
    return [float(x) for x in np.asarray(v).reshape(-1)]


def _dumps(payload, compact: bool) -> str:
    if compact:
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return json.dumps(payload, sort_keys=True, indent=2)


def _differentiate(group_spec, samples: int, seed: int, workers: int):
    if isinstance(group_spec, PairGroupoidSpec):
        return differentiate_pair_groupoid(group_spec, samples=samples, seed=seed,
                                           workers=workers)
    return differentiate_group(group_spec, samples=samples, seed=seed, workers=workers)


# -- check suites -------------------------------------------------------------


def _algebroid_report(inv, samples: int, seed: int, tolerances: dict, workers: int) -> Report:
    report = Report()
    report.extend(check_tangent_axioms(samples=samples, seed=seed, workers=workers))
    report.extend(check_axioms(inv, samples=samples, seed=seed,
                               tolerances=tolerances, workers=workers))
    report.extend(check_yang_baxter(inv, samples=max(10, samples // 2), seed=seed,
                                    tolerances=tolerances, workers=workers))
    rng = np.random.default_rng(seed)
    sections = [SectionSpec(_random_section_poly(rng, inv.dim_M, inv.dim_A))
                for _ in range(3)]
    field = ScalarFieldSpec(_random_section_poly(rng, inv.dim_M, 1))
    point_count = max(10, samples // 5)
    report.extend(check_bracket_laws(inv, sections=sections, samples=point_count, seed=seed,
                                     tolerance=tolerances.get("bracket-laws", 1e-9),
                                     workers=workers))
    report.extend(check_leibniz(inv, sections[0], sections[1], field, samples=point_count,
                                seed=seed, tolerance=tolerances.get("leibniz", 1e-9),
                                workers=workers))
    return report


def _connection_report(spec, conn, samples: int, seed: int, tolerances: dict,
                       workers: int) -> Report:
    inv_conn = flip_from_bracket(spec, conn)
    inv_canon = involution_from_spec(spec)
    report = check_axioms(inv_conn, samples=samples, seed=seed,
                          tolerances=tolerances, workers=workers)
    rng = np.random.default_rng(seed)
    pes = [sample_prolongation(inv_canon, rng.uniform(-1, 1, spec.dim_M), rng)
           for _ in range(samples)]

    def agreement(pe):
        return ta_residual(inv_conn.flip_elements(pe), inv_canon.flip_elements(pe))

    report.add(run_check("connection-independence", pes, agreement,
                         tolerances.get("connection-independence", 1e-12), seed,
                         workers=workers))
    return report


def _membership_report(fx: dict, tolerances: dict) -> Report:
    inv = involution_from_spec(fx["spec"])
    if fx["kind"] == "apath":
        grid = 33
        residuals = fx["variation"].membership_residual(inv, grid)
    else:
        grid = 9
        residuals = fx["variation"].membership_residual(inv, grid)
        grid = grid * grid
    report = Report()
    for name in sorted(residuals):
        tol = tolerances.get(name, 1e-9)
        value = float(residuals[name])
        report.add(CheckResult(name, grid, None, value, tol, value <= tol, None))
    return report


def _check_report(fx: dict, samples: int, seed: int, tolerances: dict,
                  workers: int) -> Report:
    if samples == 0:
        return Report()
    kind = fx["kind"]
    if kind in ("algebroid", "involution-flip"):
        return _algebroid_report(involution_from_spec(fx["spec"]), samples, seed,
                                 tolerances, workers)
    if kind == "connection":
        return _connection_report(fx["spec"], fx["connection"], samples, seed,
                                  tolerances, workers)
    if kind == "group":
        _, report = _differentiate(fx["group"], samples, seed, workers)
        return report
    if kind in ("apath", "ahomotopy"):
        return _membership_report(fx, tolerances)
    return Report()  # sections and scalar fields are fully validated at load


# -- commands -----------------------------------------------------------------


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")
    else:
        print(text)


def _format_report(report: Report, fmt: str) -> str:
    if fmt == "json":
        return report.to_json()
    if fmt == "csv":
        return report.to_csv()
    return report.to_text()


def do_check(args, workers: int) -> int:
    fx = load_fixture(args.fixture)
    tolerances = _parse_tolerances(args.tolerance)
    report = _check_report(fx, args.samples, args.seed, tolerances, workers)
    _emit(_format_report(report, args.format), args.out)
    return 0 if report.passed else 1


def do_convert(args, workers: int) -> int:
    fx = load_fixture(args.fixture)
    kind = fx["kind"]
    if args.direction == "to-flip":
        if kind == "algebroid":
            spec = fx["spec"]
        elif kind == "group":
            inv_g, _ = _differentiate(fx["group"], max(10, args.samples // 4),
                                      args.seed, workers)
            spec = inv_g.spec
        else:
            raise FixtureError("convert to-flip needs an algebroid or group fixture, got %r"
                               % kind)
        inv = involution_from_spec(spec)
        rng = np.random.default_rng(args.seed)
        n_eval = max(1, min(args.samples, 20))
        table = []
        for _ in range(n_eval):
            pe = sample_prolongation(inv, rng.uniform(-1, 1, spec.dim_M), rng)
            out = inv.flip_elements(pe)
            table.append({
                "v": {"m": _ser_vector(pe.v.m), "a": _ser_vector(pe.v.a)},
                "w": {"m": _ser_vector(pe.w.m), "a": _ser_vector(pe.w.a),
                      "mdot": _ser_vector(pe.w.mdot), "adot": _ser_vector(pe.w.adot)},
                "alpha": {"m": _ser_vector(out.m), "a": _ser_vector(out.a),
                          "mdot": _ser_vector(out.mdot), "adot": _ser_vector(out.adot)},
            })
        payload = {
            "schema_version": SCHEMA_VERSION,
            "kind": "involution-flip",
            "dim_M": spec.dim_M,
            "dim_A": spec.dim_A,
            "anchor": spec.rho.to_table(),
            "structure": _structure_entries(spec),
            "evaluation": {"samples": n_eval, "seed": args.seed, "table": table},
        }
    else:  # to-bracket
        if kind != "involution-flip":
            raise FixtureError("convert to-bracket needs an involution-flip fixture, got %r"
                               % kind)
        spec = fx["spec"]
        inv = involution_from_spec(spec)
        dm, da = spec.dim_M, spec.dim_A
        rng = np.random.default_rng(args.seed)
        points = [rng.uniform(-1, 1, dm) for _ in range(max(1, min(args.samples, 10)))]
        table = []
        for i in range(da):
            for j in range(i + 1, da):
                ei = SectionSpec(PolyMap.constant(np.eye(da)[i], dm))
                ej = SectionSpec(PolyMap.constant(np.eye(da)[j], dm))
                bracket = bracket_from_flip(inv, ei, ej)
                for m in points:
                    table.append({"i": i, "j": j, "m": _ser_vector(m),
                                  "value": _ser_vector(bracket(m))})
        payload = {
            "schema_version": SCHEMA_VERSION,
            "result": "bracket",
            "dim_M": dm,
            "dim_A": da,
            "evaluation": {"samples": len(points), "seed": args.seed, "table": table},
        }
        if dm == 0:
            fitted = spec_from_flip(inv)
            payload["structure"] = _structure_entries(fitted)
    _emit(_dumps(payload, compact=args.format == "json"), args.out)
    return 0


def do_transport(args, workers: int) -> int:
    fx = load_fixture(args.fixture)
    kind = fx["kind"]
    if kind not in ("apath", "ahomotopy"):
        raise FixtureError("transport needs an apath or ahomotopy fixture, got %r" % kind)
    if "initial" not in fx:
        raise FixtureError("transport needs an initial element in the fixture")
    tolerances = _parse_tolerances(args.tolerance)
    inv = involution_from_spec(fx["spec"])
    report = Report()
    if kind == "apath":
        run = apath_transport(inv, fx["variation"], fx["initial"], h=args.step)
        tol = tolerances.get("anchor-relation", 1e-6)
        report.add(CheckResult("anchor-relation", len(run.times), None,
                               float(run.anchor_residual), tol,
                               run.anchor_residual <= tol, None))
        csv_text = run.to_csv()
    else:
        run = ahomotopy_transport(inv, fx["variation"], fx["initial"], h=args.step,
                                  workers=workers)
        tol = tolerances.get("homotopy-discrepancy", 1e-6)
        report.add(CheckResult("homotopy-discrepancy",
                               len(run.s_nodes) * len(run.t_nodes), None,
                               float(run.discrepancy), tol,
                               run.discrepancy <= tol, None))
        csv_text = run.to_csv()
    with open(args.out, "w") as fh:
        fh.write(csv_text)
    print(_format_report(report, args.format))
    return 0 if report.passed else 1


def do_differentiate_group(args, workers: int) -> int:
    target = args.group
    if os.path.exists(target):
        fx = load_fixture(target)
        if fx["kind"] != "group":
            raise FixtureError("differentiate-group needs a group fixture, got %r" % fx["kind"])
        spec = fx["group"]
        label = spec.name or target
    else:
        try:
            spec = group_catalog(target)
        except KeyError as exc:
            raise FixtureError(str(exc.args[0]) if exc.args else str(exc))
        label = target
    inv, report = _differentiate(spec, args.samples, args.seed, workers)
    constants = _structure_entries(inv.spec)
    if args.format == "json":
        text = _dumps({"group": label, "constants": constants,
                       "report": report.to_dict()}, compact=True)
    elif args.format == "csv":
        text = report.to_csv()
    else:
        lines = [report.to_text(), "recovered structure constants:"]
        if not constants:
            lines.append("  (all zero)")
        for e in constants:
            lines.append("  C(e%d, e%d) -> e%d: %s"
                         % (e["i"], e["j"], e["k"],
                            " + ".join("%r x^%s" % (t["coeff"], t["exponents"])
                                       if any(t["exponents"]) else repr(t["coeff"])
                                       for t in e["terms"])))
        text = "\n".join(lines)
    _emit(text, args.out)
    return 0 if report.passed else 1


def do_catalog(args) -> int:
    if args.format == "json":
        text = _dumps({"algebroids": catalog_names(),
                       "groups": list(GROUP_CATALOG_NAMES)}, compact=True)
    else:
        lines = []
        for name in catalog_names():
            lines.append("algebroid  %-22s %s" % (name, DESCRIPTIONS.get(name, "")))
        for name in GROUP_CATALOG_NAMES:
            lines.append("group      %s" % name)
        text = "\n".join(lines)
    _emit(text, args.out)
    return 0


# -- argument plumbing --------------------------------------------------------


def _parse_tolerances(pairs) -> dict:
    tols = {}
    for item in pairs or []:
        name, sep, value = item.partition("=")
        if not sep or not name:
            raise FixtureError("--tolerance expects name=value, got %r" % item)
        try:
            tols[name.strip()] = float(value)
        except ValueError:
            raise FixtureError("bad tolerance value in %r" % item)
    return tols


def _workers() -> int:
    raw = os.environ.get("INVALG_THREADS", "")
    try:
        count = int(raw) if raw else 1
    except ValueError:
        count = 1
    return max(1, count)


def _add_common(sub, step=False):
    sub.add_argument("--samples", type=int, default=200)
    sub.add_argument("--seed", type=int, default=42)
    sub.add_argument("--tolerance", action="append", metavar="CHECK=VALUE",
                     help="override a named check tolerance; repeatable")
    sub.add_argument("--out", metavar="PATH", default=None)
    sub.add_argument("--format", choices=("json", "text", "csv"), default="text")
    if step:
        sub.add_argument("--step", type=float, default=1e-3)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invalg",
        description="verify and integrate involution algebroids from fixture files")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run the verification suites on a fixture")
    p.add_argument("fixture")
    _add_common(p)

    p = sub.add_parser("convert", help="convert between bracket and flip presentations")
    p.add_argument("fixture")
    p.add_argument("direction", choices=("to-flip", "to-bracket"))
    _add_common(p)

    p = sub.add_parser("transport", help="integrate a path or homotopy transport to CSV")
    p.add_argument("fixture")
    _add_common(p, step=True)

    p = sub.add_parser("differentiate-group", help="differentiate a matrix group")
    p.add_argument("group", help="catalog name or group fixture path")
    _add_common(p)

    p = sub.add_parser("catalog", help="list built-in fixtures")
    p.add_argument("action", choices=("list",))
    p.add_argument("--format", choices=("json", "text", "csv"), default="text")
    p.add_argument("--out", metavar="PATH", default=None)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    workers = _workers()
    try:
        if args.command == "check":
            return do_check(args, workers)
        if args.command == "convert":
            return do_convert(args, workers)
        if args.command == "transport":
            if not args.out:
                raise FixtureError("transport needs --out for the trajectory table")
            return do_transport(args, workers)
        if args.command == "differentiate-group":
            return do_differentiate_group(args, workers)
        if args.command == "catalog":
            return do_catalog(args)
        raise FixtureError("unknown command %r" % args.command)
    except FixtureError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
