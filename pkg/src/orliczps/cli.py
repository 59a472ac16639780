"""Command line entry point: ``orliczps <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .corpus import default_config, load_config, make_grid, field_from_spec, body_from_spec
from .affine_ball import make_quadrature
from .field import diameter, load_field, save_field, support_volume
from .rearrangement import DirectionSchedule, approximate_sdr, sdr, steiner
from .report import emit_report
from .suites import SUITES, RunContext, run_suite

log = logging.getLogger("orliczps")


def _config(args) -> dict:
    cfg = load_config(args.config) if args.config else default_config(args.seed or 0)
    if args.seed is not None:
        cfg["seed"] = args.seed
    return cfg


def cmd_verify(args) -> int:
    cfg = _config(args)
    out = Path(args.out or cfg.get("out", "results"))
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    ctx = None
    failures = 0
    for name in names:
        if ctx is None and name in ("affine_ps", "euclidean_ps", "steiner_inclusion", "sandwich"):
            ctx = RunContext(cfg)
        rep = run_suite(name, cfg, ctx)
        for fmt in args.format:
            emit_report(rep, fmt, out)
        s = rep.summary()
        print(f"{name}: {s['pass']} pass, {s['fail']} fail, {s['skipped']} skipped"
              f" (min margin {s['min_margin']})")
        for c in rep.failures:
            print(f"  FAIL {c.case_id} margin={c.margin}")
        failures += s["fail"]
    return 0 if failures == 0 else 1


def cmd_corpus(args) -> int:
    spec = json.loads(Path(args.spec).read_text()) if args.spec else {}
    cfg = default_config(int(spec.get("seed", args.seed or 0)))
    cfg.update(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = make_grid(cfg)
    for i, fs in enumerate(cfg["fields"]):
        f = field_from_spec(grid, fs)
        name = fs.get("name", f"field_{i}")
        save_field(f, out / f"{name}.opsf", {"name": name, "spec": fs})
    q = make_quadrature(grid.dim, int(cfg["quadrature"]["count"]))
    bodies = []
    for bs in cfg["bodies"]:
        K = body_from_spec(q, bs)
        bodies.append({"name": K.name, "dim": K.dim, "quadrature_count": q.count,
                       "radial": K.radial.tolist(), "spec": bs})
    (out / "bodies.json").write_text(json.dumps(bodies, indent=1, sort_keys=True) + "\n")
    print(f"wrote {len(cfg['fields'])} fields and {len(bodies)} bodies to {out}")
    return 0


def cmd_field_info(args) -> int:
    f = load_field(args.file)
    g = f.grid
    info = {
        "dim": g.dim,
        "box": [list(g.lo), list(g.hi)],
        "resolution": list(g.resolution),
        "integral": f.integral(),
        "max": f.max(),
        "support_volume": support_volume(f),
        "diameter": diameter(f),
        "meta": f.meta,
    }
    print(json.dumps(info, indent=2, sort_keys=True, default=str))
    return 0


def _direction(values, dim):
    v = np.asarray(values, dtype=float)
    if v.size != dim:
        raise SystemExit(f"direction needs {dim} components")
    return v / np.linalg.norm(v)


def cmd_steiner(args) -> int:
    f = load_field(args.file)
    out = steiner(f, _direction(args.direction, f.grid.dim), args.method)
    save_field(out, args.out, {**f.meta, "steiner": args.direction})
    print(f"wrote {args.out}")
    return 0


def cmd_sdr(args) -> int:
    f = load_field(args.file)
    save_field(sdr(f), args.out, {**f.meta, "rearranged": True})
    print(f"wrote {args.out}")
    return 0


def cmd_approx_sdr(args) -> int:
    f = load_field(args.file)
    sched = DirectionSchedule.make(args.schedule, f.grid.dim, args.k, args.seed)
    fk, trace = approximate_sdr(f, sched, args.k)
    if args.out:
        save_field(fk, args.out, {**f.meta, "approx_sdr_steps": args.k})
    if args.trace:
        trace.to_csv(args.trace)
    else:
        print("step,L1_distance,integral,max")
        for row in trace.rows():
            print(",".join(repr(x) for x in row))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="orliczps",
                                description="Affine Orlicz Polya-Szego numerics and checks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run an inequality suite")
    v.add_argument("suite", choices=sorted(SUITES) + ["all"])
    v.add_argument("--config", help="JSON config (defaults to the built-in corpus)")
    v.add_argument("--seed", type=int, default=None)
    v.add_argument("--out", help="output directory")
    v.add_argument("--format", nargs="+", default=["json", "csv"],
                   choices=["json", "csv", "svg-bundle"])
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("corpus", help="corpus tools")
    csub = c.add_subparsers(dest="corpus_command", required=True)
    cg = csub.add_parser("generate", help="write corpus fields and bodies")
    cg.add_argument("--spec", help="JSON corpus spec (overrides the defaults)")
    cg.add_argument("--seed", type=int, default=None)
    cg.add_argument("--out", default="corpus")
    cg.set_defaults(func=cmd_corpus)

    fi = sub.add_parser("field", help="field tools")
    fsub = fi.add_subparsers(dest="field_command", required=True)
    info = fsub.add_parser("info", help="summarise a field file")
    info.add_argument("file")
    info.set_defaults(func=cmd_field_info)

    st = sub.add_parser("steiner", help="Steiner-symmetrize a field file")
    st.add_argument("file")
    st.add_argument("--direction", type=float, nargs="+", required=True)
    st.add_argument("--method", choices=["sort", "profile"], default="sort")
    st.add_argument("--out", required=True)
    st.set_defaults(func=cmd_steiner)

    sd = sub.add_parser("sdr", help="symmetric decreasing rearrangement of a field file")
    sd.add_argument("file")
    sd.add_argument("--out", required=True)
    sd.set_defaults(func=cmd_sdr)

    ap = sub.add_parser("approx-sdr", help="Steiner schedule towards the rearrangement")
    ap.add_argument("file")
    ap.add_argument("--k", type=int, default=40)
    ap.add_argument("--schedule", choices=["axes_cyclic", "random_uniform"],
                    default="axes_cyclic")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="write the final field here")
    ap.add_argument("--trace", help="write the CSV trace here instead of stdout")
    ap.set_defaults(func=cmd_approx_sdr)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
