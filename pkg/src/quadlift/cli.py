"""Command-line interface.

Subcommands: quadratize, encode, verify, rank1, qcqp, example, trace-slice.
All randomness flows from one seeded generator per invocation, so outputs
are byte-identical across reruns with the same arguments.

Exit codes: 0 success, 1 input error, 2 verification failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .encode import (
    STRICT,
    PseudoSpecEncoding,
    build_encoding,
    check_rank_one_member,
    encode_compact,
    lift,
    lift_compact,
    normalize_relations,
    project,
    strict_to_equations,
)
from .errors import QuadliftError
from .geometry import hull_distance
from .poly import PolySystem, Relation
from .quadratize import QuadSystem, lift_point, quadratize
from .search import (
    QcqpInstance,
    boundary_rank_check,
    enumerate_rank_one,
    qcqp_check,
    trace_slice_pseudo_check,
)
from .spectra import Pencil, SpectrahedronSpec, rank_one_factor

EXAMPLE2_PENCIL = Pencil(
    np.eye(3),
    (
        np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
        np.array([[0.0, 0.0, 1.0], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0]]),
        np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]),
    ),
)

EXAMPLE2_POINTS = np.array(
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [-0.5, 0.5, -0.5]]
)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[float]]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _load_system(data: dict) -> Tuple[QuadSystem, PolySystem]:
    """Returns (quadratized system, base system usable for compact encoding)."""
    if "aux" in data:
        quad = QuadSystem.from_json(data)
        return quad, quad.system
    sys_ = PolySystem.from_json(data)
    return quadratize(sys_), sys_


# ---------------------------------------------------------------------------
# subcommands


def cmd_quadratize(args) -> int:
    data = _load_json(args.input)
    sys_ = PolySystem.from_json(data)
    quad = quadratize(sys_)
    _write_json(Path(args.out), quad.to_json())
    print(
        f"quadratized: {sys_.nvars} vars, {len(sys_.constraints)} constraints -> "
        f"{quad.table.n_aux} aux vars, max degree {quad.system.max_degree()}"
    )
    return 0


def cmd_encode(args) -> int:
    data = _load_json(args.input)
    if args.compact:
        if "aux" in data:
            base = QuadSystem.from_json(data).system
        else:
            base = PolySystem.from_json(data)
        rng = np.random.default_rng(args.seed)
        box = [(args.box[0], args.box[1])] * base.nvars
        enc = encode_compact(
            base, B=args.B, box=None if args.B is not None else box, rng=rng
        )
        print(
            f"compact encoding: N={enc.layout.N}, k={enc.layout.k}, "
            f"{len(enc.matrices)} constraints, trace constraint present, B={_fmt(enc.B)}"
        )
    else:
        if "aux" in data:
            quad = QuadSystem.from_json(data)
        else:
            quad = quadratize(PolySystem.from_json(data))
        norm = normalize_relations(quad.system)
        if norm.slack_sources:
            print(
                f"routing {len(norm.slack_sources)} GE constraint(s) through "
                "square-slack equations"
            )
        eqs, layout = strict_to_equations(norm.system)
        enc = build_encoding(eqs, layout)
        print(
            f"strict encoding: N={layout.N}, k={layout.k}, n={layout.n}, "
            f"{len(enc.matrices)} constraints "
            f"({sum(1 for b in enc.rhs if b == 0.0)} zero-rhs, "
            f"{sum(1 for b in enc.rhs if b == 1.0)} unit-rhs)"
        )
    _write_json(Path(args.out), enc.to_json())
    return 0


def _strict_feasible(quad: QuadSystem, x: np.ndarray, margin: float, tol: float) -> bool:
    lifted = lift_point(x, quad.table)
    for p, rel in quad.system.constraints:
        val = p.evaluate(lifted)
        if rel is Relation.GT and val <= margin:
            return False
        if rel is Relation.LT and val >= -margin:
            return False
        if rel is Relation.EQ and abs(val) > tol:
            return False
        if rel is Relation.GE and val < 0.0:
            return False
        if rel is Relation.LE and val > 0.0:
            return False
    return True


def cmd_verify(args) -> int:
    enc = PseudoSpecEncoding.from_json(_load_json(args.encoding))
    sys_data = _load_json(args.system)
    quad, base = _load_system(sys_data)
    rng = np.random.default_rng(args.seed)
    tol = args.tol
    n0 = quad.n_original
    lo, hi = args.box

    violations: List[str] = []
    n_forward = n_reverse = 0

    if enc.layout.variant == STRICT:
        norm = normalize_relations(quad.system)
        eqs, layout = strict_to_equations(norm.system)
        if layout != enc.layout:
            print(f"layout mismatch: system gives {layout}, encoding has {enc.layout}",
                  file=sys.stderr)
            return 1

        def lift_x(x):
            xu = lift_point(x, quad.table)
            xus = norm.extend_point(xu)
            return lift(xus, eqs, layout)

    else:
        enc2 = encode_compact(base, B=enc.B)
        if enc2.layout != enc.layout:
            print("layout mismatch for compact encoding", file=sys.stderr)
            return 1
        n0 = base.nvars

        def lift_x(x):
            return lift_compact(x, enc2)

    accepted = 0
    attempts = 0
    max_attempts = max(200 * args.samples, 1000)
    while accepted < args.samples and attempts < max_attempts:
        x = rng.uniform(lo, hi, size=n0)
        attempts += 1
        if not _strict_feasible(quad, x, margin=1e-6, tol=tol):
            continue
        accepted += 1
        try:
            v, X = lift_x(x)
        except QuadliftError as exc:
            violations.append(f"lift failed at {x.tolist()}: {exc}")
            continue
        n_forward += 1
        res = enc.residuals(X)
        scale = 1.0 + float(np.dot(v, v))
        if np.max(np.abs(res), initial=0.0) > tol * scale:
            violations.append(
                f"forward: residual {np.max(np.abs(res)):.3e} at {x.tolist()}"
            )
            continue
        report = check_rank_one_member(X, enc, tol=max(tol * scale, 1e-7))
        if not report.ok:
            violations.append(f"forward: member check failed at {x.tolist()}")
            continue
        proj = project(X, enc)[:n0]
        if np.max(np.abs(proj - x)) > 1e-7 * (1.0 + np.abs(x).max()):
            violations.append(f"forward: projection mismatch at {x.tolist()}")
            continue
        # reverse direction: sign-flipped factors stay feasible and must
        # project back into the original region
        v2 = v.copy()
        if enc.layout.variant == STRICT:
            for a in range(1, enc.layout.k + 1):
                if rng.uniform() < 0.5:
                    v2[enc.layout.pos_r(a)] *= -1.0
        else:
            for a in range(1, enc.layout.k + 1):
                if rng.uniform() < 0.5:
                    v2[enc.layout.pos_z(a)] *= -1.0
        X2 = np.outer(v2, v2)
        if np.max(np.abs(enc.residuals(X2)), initial=0.0) <= tol * scale:
            n_reverse += 1
            proj2 = project(X2, enc)[:n0]
            lifted2 = lift_point(proj2, quad.table)
            if not quad.system.satisfied(lifted2, 1e-7):
                violations.append(f"reverse: projected point leaves the region at {x.tolist()}")

    print(f"verify: {accepted} feasible samples ({attempts} drawn), "
          f"{n_forward} forward checks, {n_reverse} reverse checks, "
          f"{len(violations)} violations")
    for msg in violations[:10]:
        print("  " + msg)
    if accepted == 0 and args.samples > 0:
        print("note: no feasible samples found; checks were vacuous")
    return 0 if not violations else 2


def _load_pencil(data: dict) -> Pencil:
    M0 = np.array(data["M0"], dtype=float)
    mats = tuple(np.array(M, dtype=float) for M in data["mats"])
    return Pencil(M0, mats)


def cmd_rank1(args) -> int:
    if args.example == 2:
        pencil = EXAMPLE2_PENCIL
    elif args.pencil:
        pencil = _load_pencil(_load_json(args.pencil))
    else:
        print("rank1 needs --pencil FILE or --example 2", file=sys.stderr)
        return 1
    spec = SpectrahedronSpec(pencil.N, (), pencil=pencil)
    box = [(args.box[0], args.box[1])] * pencil.nparams
    locus = enumerate_rank_one(spec, box, grid_res=args.grid, tol=args.tol)
    header = (
        [f"x{i+1}" for i in range(pencil.nparams)]
        + [f"v{i+1}" for i in range(pencil.N)]
        + ["min_eig", "second_eig"]
    )
    rows = []
    for p, f in zip(locus.points, locus.factors):
        ev = np.linalg.eigvalsh(pencil.at(p))
        rows.append(list(p) + list(f) + [ev[0], ev[1]])
    _write_csv(Path(args.out), header, rows)
    print(f"rank-one locus: {len(locus)} point(s) -> {args.out}")
    return 0


def _builtin_qcqp(name: str) -> QcqpInstance:
    from .poly import parse_poly

    if name == "circle":
        return QcqpInstance(
            n=2,
            constraints=((parse_poly("x^2 + y^2 - 1", ["x", "y"]), Relation.EQ),),
            objective=np.diag([1.0, -1.0]),
            box=((-2.0, 2.0), (-2.0, 2.0)),
        )
    if name == "finite4":
        return QcqpInstance(
            n=3,
            constraints=(),
            objective=np.eye(3),
            box=((-2.0, 2.0),) * 3,
            feasible_points=EXAMPLE2_POINTS,
        )
    raise ValueError(f"unknown builtin instance {name!r}")


def cmd_qcqp(args) -> int:
    if args.builtin:
        inst = _builtin_qcqp(args.builtin)
    elif args.instance:
        data = _load_json(args.instance)
        from .poly import parse_poly

        names = list(data["vars"])
        constraints = tuple(
            (parse_poly(c["poly"], names), Relation.from_symbol(c["rel"]))
            for c in data["constraints"]
        )
        inst = QcqpInstance(
            n=len(names),
            constraints=constraints,
            objective=np.array(data["objective"], dtype=float),
            box=tuple((b[0], b[1]) for b in data["box"]),
            feasible_points=(
                np.array(data["feasible_points"], dtype=float)
                if "feasible_points" in data
                else None
            ),
            band=data.get("band", 1e-3),
        )
    else:
        print("qcqp needs --builtin NAME or --instance FILE", file=sys.stderr)
        return 1
    report = qcqp_check(inst, args.samples, np.random.default_rng(args.seed))
    if report is None:
        print("no feasible samples found")
        return 2
    out = {
        "brute_min": report.brute_min,
        "hull_min": report.hull_min,
        "gap": report.gap,
        "n_feasible": report.n_feasible,
        "pipeline_discrepancy": report.pipeline_discrepancy,
    }
    if args.out:
        _write_json(Path(args.out), out)
    print(
        f"qcqp: brute_min={_fmt(report.brute_min)} hull_min={_fmt(report.hull_min)} "
        f"gap={_fmt(report.gap)} ({report.n_feasible} feasible samples)"
    )
    return 0


def _write_svg(path: Path, boundary: np.ndarray) -> None:
    lo = boundary.min(axis=0)
    hi = boundary.max(axis=0)
    span = np.maximum(hi - lo, 1e-9)
    size = 400.0
    pad = 20.0

    def to_px(p):
        q = (p - lo) / span
        return (pad + q[0] * (size - 2 * pad), size - pad - q[1] * (size - 2 * pad))

    pts = " ".join(f"{to_px(p)[0]:.2f},{to_px(p)[1]:.2f}" for p in boundary)
    path.write_text(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">\n'
        f'  <polygon points="{pts}" fill="#c8e6c0" stroke="#2e7d32" stroke-width="1.5"/>\n'
        "</svg>\n"
    )


def cmd_example(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    if args.which == 1:
        return _example1(out_dir, rng, args.samples)
    return _example2(out_dir, args.grid)


def _example1(out_dir: Path, rng: np.random.Generator, n_samples: int) -> int:
    # planar region x(1 - x) - y^2 >= 0: the trace-1 slice of the 2x2 PSD cone
    n_boundary = 400
    thetas = np.linspace(0.0, np.pi, n_boundary, endpoint=False)
    boundary = np.stack([np.cos(thetas) ** 2, np.cos(thetas) * np.sin(thetas)], axis=1)
    _write_csv(out_dir / "boundary.csv", ["theta", "x", "y"],
               [[t, p[0], p[1]] for t, p in zip(thetas, boundary)])

    n_locus = 200
    locus_rows = []
    locus_pts = []
    for t in np.linspace(0.0, np.pi, n_locus, endpoint=False):
        c, s = math.cos(t), math.sin(t)
        X = np.array([[c * c, c * s], [c * s, s * s]])
        v = rank_one_factor(X, tol=1e-10)
        if v is None:
            continue
        x, y = X[0, 0], X[0, 1]
        residual = x * (1 - x) - y * y
        locus_rows.append([t, x, y, residual])
        locus_pts.append([x, y])
    _write_csv(out_dir / "rank1_circle.csv", ["theta", "x", "y", "curve_residual"], locus_rows)
    locus_pts = np.array(locus_pts)

    n_interior = max(n_samples, 100)
    interior = []
    while len(interior) < n_interior:
        cand = rng.uniform([-0.1, -0.6], [1.1, 0.6], size=(4 * n_interior, 2))
        ok = cand[:, 0] * (1 - cand[:, 0]) - cand[:, 1] ** 2 >= 0.0
        interior.extend(cand[ok].tolist())
    region = np.vstack([boundary, np.array(interior[:n_interior])])
    _write_csv(out_dir / "region_samples.csv", ["x", "y"], region.tolist())
    _write_svg(out_dir / "region.svg", boundary)

    dist = hull_distance(region, locus_pts)
    _write_json(
        out_dir / "summary.json",
        {
            "n_boundary": n_boundary,
            "n_rank_one": len(locus_rows),
            "max_curve_residual": max(abs(r[3]) for r in locus_rows),
            "hull_distance": dist,
        },
    )
    print(f"example 1: {len(locus_rows)} rank-one samples, hull distance {_fmt(dist)}")
    return 0


def _example2(out_dir: Path, grid_res: float) -> int:
    spec = SpectrahedronSpec(3, (), pencil=EXAMPLE2_PENCIL)
    locus = enumerate_rank_one(spec, [(-2.0, 2.0)] * 3, grid_res=grid_res, tol=1e-9)
    pts = locus.points
    _write_csv(out_dir / "points.csv", ["x", "y", "z"], pts.tolist())

    mats = [EXAMPLE2_PENCIL.at(p) for p in pts]
    combos, weights, pairs = [], [], []
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            combos.append([mats[i], mats[j]])
            weights.append([0.5, 0.5])
            pairs.append((i, j))
    report = boundary_rank_check(combos, weights, tol=1e-9)
    _write_csv(
        out_dir / "midpoints.csv",
        ["i", "j", "x", "y", "z", "min_eig", "singular"],
        [
            [i, j] + (0.5 * (pts[i] + pts[j])).tolist() + [c.min_eig, float(c.singular)]
            for (i, j), c in zip(pairs, report.combos)
        ],
    )
    _write_csv(
        out_dir / "edges.csv",
        ["i", "j", "xi", "yi", "zi", "xj", "yj", "zj"],
        [[i, j] + pts[i].tolist() + pts[j].tolist() for i, j in pairs],
    )

    volume = None
    if len(pts) == 4:
        order = np.lexsort(np.round(pts, 9).T[::-1])
        sorted_pts = pts[order]
        volume = abs(float(np.linalg.det(sorted_pts[1:] - sorted_pts[0]))) / 6.0
    _write_json(
        out_dir / "summary.json",
        {
            "n_rank_one_points": len(pts),
            "tetrahedron_volume": volume,
            "all_midpoints_singular": report.all_singular,
        },
    )
    print(
        f"example 2: {len(pts)} rank-one points, volume "
        f"{_fmt(volume) if volume is not None else 'n/a'}, "
        f"midpoints singular: {report.all_singular}"
    )
    return 0


def cmd_trace_slice(args) -> int:
    report = trace_slice_pseudo_check(args.n, args.samples, np.random.default_rng(args.seed))
    print(
        f"trace-slice n={report.n}: {report.n_samples} samples, "
        f"max reconstruction error {_fmt(report.max_reconstruction_error)}, "
        f"max weight defect {_fmt(report.max_weight_sum_defect)}"
    )
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadlift",
        description="Quadratize polynomial systems and lift them into rank-one "
        "slices of the PSD cone.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quadratize", help="rewrite a polynomial system to degree <= 2")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_quadratize)

    p = sub.add_parser("encode", help="build the semidefinite encoding of a system")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.add_argument("--compact", action="store_true")
    p.add_argument("--B", type=float, default=None)
    p.add_argument("--box", type=float, nargs=2, default=(-2.0, 2.0))
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("verify", help="cross-check an encoding against its system")
    p.add_argument("encoding")
    p.add_argument("system")
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--box", type=float, nargs=2, default=(-2.0, 2.0))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rank1", help="enumerate rank-one points of a pencil")
    p.add_argument("--pencil", default=None)
    p.add_argument("--example", type=int, choices=[2], default=None)
    p.add_argument("--box", type=float, nargs=2, default=(-2.0, 2.0))
    p.add_argument("--grid", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank1)

    p = sub.add_parser("qcqp", help="QCQP vs lifted-hull value comparison")
    p.add_argument("--builtin", choices=["circle", "finite4"], default=None)
    p.add_argument("--instance", default=None)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_qcqp)

    p = sub.add_parser("example", help="reproduce the worked examples")
    p.add_argument("which", type=int, choices=[1, 2])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--grid", type=float, default=0.05)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("trace-slice", help="decompose trace-1 PSD samples")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_trace_slice)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (QuadliftError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
