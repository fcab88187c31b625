"""Command-line entry point.

Subcommands: grassmann, energy, flatness, admissibility, lipgraph, gen,
check, experiment. Reports are JSON lines on stdout; plot data is plain
CSV. Exit codes: 0 success, 2 precondition violation, 3 property
failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import checks, flatness, lipgraph, sampled_sets
from .energy import (
    KERNELS,
    EnergyConfig,
    c1_constant,
    c2_constant,
    cross_energy,
    default_cutoff,
    energy as compute_energy,
    local_energy,
    wedge_scan,
)
from .grassmann import Subspace, angle_metric, principal_angles

EXIT_OK = 0
EXIT_PRECONDITION = 2
EXIT_PROPERTY = 3
EXIT_IO = 4


def _emit(obj, out=None):
    line = json.dumps(obj, sort_keys=True)
    if out is None:
        print(line)
    else:
        out.write(line + "\n")


def _thread_count(args) -> int:
    if getattr(args, "threads", None):
        return args.threads
    env = os.environ.get("MENERGY_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_set(path) -> sampled_sets.SampledSet:
    if str(path).endswith(".csv"):
        raise ValueError("CSV clouds need --m; use the flatness subcommand")
    return sampled_sets.load_sampled_set(path)


def _load_cloud(path, m) -> sampled_sets.SampledSet:
    if str(path).endswith(".csv"):
        return sampled_sets.load_point_cloud_csv(path, m)
    return sampled_sets.load_sampled_set(path)


def _cmd_grassmann(args) -> int:
    with open(args.a) as fh:
        fa = Subspace(np.asarray(json.load(fh), float))
    with open(args.b) as fh:
        fb = Subspace(np.asarray(json.load(fh), float))
    dec = principal_angles(fa, fb)
    _emit(
        {
            "angle_metric": angle_metric(fa, fb),
            "principal_angles": dec.angles.tolist(),
        }
    )
    return EXIT_OK


def _cmd_energy(args) -> int:
    s = _load_set(args.set)
    cutoff = args.cutoff
    if cutoff is None:
        cutoff = default_cutoff(s, args.tau)
    cfg = EnergyConfig(
        tau=args.tau,
        kernel=args.kernel,
        cutoff=cutoff,
        parallel_blocks=_thread_count(args),
    )
    if args.center is not None:
        center = np.asarray([float(v) for v in args.center.split(",")])
        report = local_energy(s, center, args.radius, cfg)
    else:
        report = compute_energy(s, cfg)
    _emit(report.as_dict())
    return EXIT_OK


def _cmd_flatness(args) -> int:
    s = _load_cloud(args.cloud, args.m)
    if args.points == "all":
        indices = list(range(s.size))
    else:
        indices = [int(v) for v in args.points.split(",")]
    radii = [float(v) for v in args.radii.split(",")]
    report = flatness.reifenberg_report(s, indices, radii, args.delta)
    for entry in report.entries:
        _emit(entry.as_dict())
    _emit({"verdict": report.verdict, "delta": report.delta, "grid": report.grid})
    return EXIT_OK if report.verdict else EXIT_PROPERTY


def _cmd_admissibility(args) -> int:
    s = _load_set(args.set)
    p = s.points[args.p]
    h = s.frames[args.p] if s.frames is not None else None
    if h is None:
        raise ValueError("set has no frames at the probe point")
    report = flatness.admissibility_probe(
        s,
        p,
        h,
        args.alpha,
        args.M,
        args.R,
        args.c,
        dyadic_levels=args.levels,
        scale_divisor=args.scale_divisor,
    )
    _emit(report.as_dict())
    return EXIT_OK if report.passed else EXIT_PROPERTY


def _graph_fixture(name: str, coeffs_path=None) -> lipgraph.GraphDescriptor:
    base = Subspace(np.eye(2, 3))
    if name == "paraboloid":
        return lipgraph.GraphDescriptor(
            base_plane=base,
            evaluator=lambda t: np.array([0.5 * float(np.dot(t, t))]),
            derivative_evaluator=lambda t: np.asarray(t, float)[None, :],
            lip_bound=1.0,
            anchor=np.zeros(3),
            hessian_bound=1.0,
        )
    if name == "cone_abs":
        return lipgraph.GraphDescriptor(
            base_plane=base,
            evaluator=lambda t: np.array([0.3 * float(np.linalg.norm(t))]),
            lip_bound=0.3,
            anchor=np.zeros(3),
        )
    if name == "sin_wave":
        return lipgraph.GraphDescriptor(
            base_plane=base,
            evaluator=lambda t: np.array([0.2 * math.sin(float(t[0]))]),
            derivative_evaluator=lambda t: np.array(
                [[0.2 * math.cos(float(t[0])), 0.0]]
            ),
            lip_bound=0.2,
            anchor=np.zeros(3),
            hessian_bound=0.2,
        )
    if name == "polynomial":
        if coeffs_path is None:
            raise ValueError("polynomial fixture needs --coeffs")
        with open(coeffs_path) as fh:
            spec = json.load(fh)
        coeffs = np.asarray(spec["coeffs"], float)  # 1d polynomial in t[0]
        deriv = np.polynomial.polynomial.polyder(coeffs)
        lip = float(spec.get("lip", 1.0))

        def u_eval(t, c=coeffs):
            return np.array(
                [np.polynomial.polynomial.polyval(float(t[0]), c)]
            )

        def du_eval(t, d=deriv):
            return np.array(
                [[np.polynomial.polynomial.polyval(float(t[0]), d), 0.0]]
            )

        return lipgraph.GraphDescriptor(
            base_plane=base,
            evaluator=u_eval,
            derivative_evaluator=du_eval,
            lip_bound=lip,
            anchor=np.zeros(3),
            hessian_bound=float(spec.get("hessian", 1.0)),
        )
    raise ValueError(f"unknown fixture: {name}")


def _cmd_lipgraph(args) -> int:
    if args.action == "sobolev":
        g = _graph_fixture(args.fixture, args.coeffs)
        value, power, ratio = lipgraph.sobolev_sufficiency_check(
            g, args.tau, args.r, args.grid
        )
        _emit({"energy": value, "seminorm_power": power, "ratio": ratio})
        return EXIT_OK
    if args.action == "intersect":
        ga = _graph_fixture(args.fixture, args.coeffs)
        ang = args.tilt
        tilted = Subspace.from_spanning(
            np.array([[1.0, 0.0, 0.0], [0.0, math.cos(ang), math.sin(ang)]])
        )
        gb = lipgraph.GraphDescriptor(
            base_plane=tilted,
            evaluator=lambda t: np.zeros(1),
            derivative_evaluator=lambda t: np.zeros((1, 2)),
            lip_bound=0.0,
            anchor=np.zeros(3),
        )
        x_plane, j, c_val, verified, pts = lipgraph.intersect_graphs(
            ga, gb, args.chi, args.sigma
        )
        _emit(
            {
                "j": j,
                "C": c_val,
                "verified": verified,
                "points": pts.tolist(),
                "X": None if x_plane is None else x_plane.frame.tolist(),
            }
        )
        return EXIT_OK if verified else EXIT_PROPERTY
    raise ValueError(f"unknown lipgraph action: {args.action}")


def _cmd_gen(args) -> int:
    kind = args.kind
    if kind == "circle":
        s = sampled_sets.gen_circle(args.radius, args.n)
    elif kind == "sphere":
        s = sampled_sets.gen_sphere(args.radius, 2, args.n)
    elif kind == "torus":
        s = sampled_sets.gen_torus(args.major, args.minor, args.n)
    elif kind == "ellipse":
        s = sampled_sets.gen_ellipse(args.a, args.b, args.n)
    elif kind == "wedge":
        s = sampled_sets.gen_wedge(args.beta, args.levels, args.n)
    elif kind == "parallel_sheets":
        s = sampled_sets.gen_parallel_sheets(args.delta, args.eps, args.R)
    elif kind == "transversal_sheets":
        s = sampled_sets.gen_transversal_sheets(args.chi, args.eps, args.R)
    else:
        raise ValueError(f"unknown generator: {kind}")
    sampled_sets.save_sampled_set(s, args.out)
    _emit({"written": args.out, "points": s.size, "total_mass": s.total_mass()})
    return EXIT_OK


def _cmd_check(args) -> int:
    records = checks.run_check_suite(args.suite, args.seed, _thread_count(args))
    sink = None
    if args.out:
        sink = open(args.out, "w")
    try:
        for record in records:
            _emit(record, sink)
    finally:
        if sink is not None:
            sink.close()
    return EXIT_OK if all(r["passed"] for r in records) else EXIT_PROPERTY


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _cmd_experiment(args) -> int:
    name = args.name
    cfg = EnergyConfig(tau=1.0, parallel_blocks=_thread_count(args))
    ok = True
    if name == "circle_zero":
        s = sampled_sets.gen_circle(1.0, args.n or 512)
        value = compute_energy(s, cfg).value
        ok = value <= 1e-10
        _emit({"experiment": name, "value": value, "passed": ok})
    elif name == "mobius_invariance":
        s = sampled_sets.gen_ellipse(2.0, 1.0, args.n or 1024)
        before = compute_energy(s, cfg).value
        inverted = sampled_sets.apply_mobius(
            s, sampled_sets.SphereInversion(np.array([0.0, 5.0]), 1.0)
        )
        after = compute_energy(inverted, cfg).value
        rel = abs(after - before) / before
        ok = rel <= 0.02
        _emit(
            {
                "experiment": name,
                "before": before,
                "after": after,
                "relative_change": rel,
                "passed": ok,
            }
        )
    elif name == "wedge_divergence":
        levels = list(range(3, 3 + (args.n or 6)))
        rows = wedge_scan(1.0, levels, cfg)
        ok = all(r["value"] >= 0.8 * r["floor"] for r in rows)
        for r in rows:
            _emit({"experiment": name, **r})
        _emit({"experiment": name, "passed": ok})
        if args.out:
            _write_csv(
                args.out,
                ["level", "value", "floor", "partial_sum"],
                [[r["level"], r["value"], r["floor"], r["partial_sum"]] for r in rows],
            )
    elif name == "strand_bounds":
        delta, eps, big_r = 0.5, 0.001, 1.0
        par = sampled_sets.gen_parallel_sheets(delta, eps, big_r)
        q_center = np.array([0.0, 0.0, min(2 * delta * eps * big_r, 0.9 * eps * big_r)])
        cross = cross_energy(
            par,
            (q_center, eps**2 * big_r * 1.01),
            (np.zeros(3), 2 * eps * big_r * 1.01),
            cfg,
        ).value
        ck = sampled_sets.measured_mass_constant(
            par, np.zeros(3), [eps * big_r, 2 * eps * big_r]
        )
        c1 = c1_constant(ck, eps, delta, cfg.tau, 2)
        c2 = c2_constant(ck, eps, delta, cfg.tau, 2)
        ok = cross > c1 and c2 < c1
        _emit(
            {
                "experiment": name,
                "cross_energy": cross,
                "c1": c1,
                "c2": c2,
                "passed": ok,
            }
        )
    elif name == "comparison_chain":
        s = sampled_sets.gen_torus(2.0, 0.7, args.n or 500)
        lt = compute_energy(s, cfg).value
        ks = compute_energy(
            s, EnergyConfig(tau=1.0, kernel="ks", parallel_blocks=cfg.parallel_blocks)
        ).value
        m = s.intrinsic_dim
        ok = 2.0**-m * lt <= ks * (1 + 1e-12) and ks <= float(m) ** m * lt * (1 + 1e-12)
        _emit(
            {"experiment": name, "E_tau": lt, "E_ks": ks, "passed": ok}
        )
    elif name == "sobolev_sufficiency":
        g = _graph_fixture("paraboloid")
        value, power, ratio = lipgraph.sobolev_sufficiency_check(g, 1.0, 0.5, args.n or 12)
        ok = power > 0 and ratio > 0
        _emit(
            {
                "experiment": name,
                "energy": value,
                "seminorm_power": power,
                "ratio": ratio,
                "passed": ok,
            }
        )
    else:
        raise ValueError(f"unknown experiment: {name}")
    return EXIT_OK if ok else EXIT_PROPERTY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="menergy",
        description="Moebius-invariant energies on sampled sets",
    )
    parser.add_argument("--threads", type=int, default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grassmann", help="angle between two frames")
    p.add_argument("action", choices=["angle"])
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.set_defaults(func=_cmd_grassmann)

    p = sub.add_parser("energy", help="energy of a sampled set")
    p.add_argument("--set", required=True)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--kernel", choices=list(KERNELS), default="ltau")
    p.add_argument("--cutoff", type=float, default=None)
    p.add_argument("--center", default=None)
    p.add_argument("--radius", type=float, default=math.inf)
    p.set_defaults(func=_cmd_energy)

    p = sub.add_parser("flatness", help="beta/theta flatness report")
    p.add_argument("--cloud", required=True)
    p.add_argument("--points", default="all")
    p.add_argument("--radii", required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--m", type=int, default=1)
    p.set_defaults(func=_cmd_flatness)

    p = sub.add_parser("admissibility", help="two-clause admissibility probe")
    p.add_argument("--set", required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--R", type=float, required=True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--scale-divisor", type=float, default=10.0)
    p.set_defaults(func=_cmd_admissibility)

    p = sub.add_parser("lipgraph", help="Lipschitz graph analytics")
    p.add_argument("action", choices=["intersect", "sobolev"])
    p.add_argument("--fixture", default="paraboloid")
    p.add_argument("--coeffs", default=None)
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--grid", type=int, default=12)
    p.add_argument("--chi", type=float, default=0.7)
    p.add_argument("--sigma", type=float, default=0.01)
    p.add_argument("--tilt", type=float, default=0.8)
    p.set_defaults(func=_cmd_lipgraph)

    p = sub.add_parser("gen", help="write an analytic fixture")
    p.add_argument("--kind", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--major", type=float, default=2.0)
    p.add_argument("--minor", type=float, default=0.7)
    p.add_argument("--a", type=float, default=2.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=4)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.001)
    p.add_argument("--chi", type=float, default=0.3)
    p.add_argument("--R", type=float, default=1.0)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("check", help="run seeded property suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("experiment", help="run a named experiment")
    p.add_argument("--name", required=True)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except (OSError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": "io", "detail": str(exc)}), file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(
            json.dumps({"error": "precondition", "detail": str(exc)}),
            file=sys.stderr,
        )
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
