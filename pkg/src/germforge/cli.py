"""Command-line entry point: ``germforge <command> [options]``.

Every command writes its data files and a ``manifest.json`` into ``--out``.
Options may also come from a JSON ``--config`` file (keys are option names
with ``_`` or ``-``); explicit command-line options win.  Exit status is 0
on success, 2 for input errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .errors import InputError, NumericalError
from .germ_expr import format_complex, jet_of_expr, parse_expr, parse_number
from .words import parse_word

DEFAULT_OUT = "germforge-out"


def _pair(text, kind=float):
    parts = [p for p in str(text).replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise InputError(f"expected two comma-separated values, got {text!r}")
    try:
        return tuple(kind(p) for p in parts)
    except ValueError as exc:
        raise InputError(f"bad number in {text!r}") from exc


def _floats(text):
    items = text if isinstance(text, (list, tuple)) else [p for p in str(text).replace(" ", "").split(",") if p]
    try:
        return [float(v) for v in items]
    except ValueError as exc:
        raise InputError(f"bad number in {text!r}") from exc


def _torsion(text):
    if text is None or str(text).lower() in ("none", "free", ""):
        return None
    return _pair(text, int)


def _opt_expr(text):
    return None if text in (None, "", "none") else parse_expr(text)


def _cplx_rows(coeffs):
    return [[c.real, c.imag] for c in np.asarray(coeffs, dtype=complex)]


# ------------------------------------------------------------------ commands

def cmd_jet(a, out):
    j = jet_of_expr(parse_expr(a.expr), a.order)
    print(", ".join(format_complex(c) for c in j.coeffs))
    return [io.write_json(out / "jet.json", {"expr": a.expr, "order": a.order, "coefficients": _cplx_rows(j.coeffs)})]


def cmd_break_relation(a, out):
    from .relations import break_relation

    w = parse_word(a.word)
    v, h = break_relation(w, parse_expr(a.f), parse_expr(a.g), K=a.K, order=a.order, samples=a.samples, seed=a.seed)
    data = v.to_json()
    data["conjugator"] = _cplx_rows(h.coefficients)
    print(f"{data['word']}: {'broken' if v.broken else 'not broken'}"
          + (f" at order {v.witness_order}" if v.broken else ""))
    return [io.write_json(out / "break_relation.json", data)]


def cmd_free_cert(a, out):
    from .relations import certify_free_product

    rep = certify_free_product(parse_expr(a.f), parse_expr(a.g), _opt_expr(a.conj), _torsion(a.torsion),
                               a.max_blocks, order=a.order, max_letters=a.max_letters)
    print(f"{rep.words_checked} words checked, {len(rep.failures)} possible relations")
    return [io.write_json(out / "free_cert.json", rep.to_json())]


def _ctx(a):
    from .pseudogroup import DiscContext

    return DiscContext(a.radius, parse_expr(a.f), parse_expr(a.g), a.grid)


def _flagged(payload: dict, ctx) -> dict:
    # the univalence radius of a germ is only a heuristic; say when R exceeds it
    return dict(payload, radius_hint_exceeded=ctx.radius_hint_exceeded)


def cmd_domains(a, out):
    from .pseudogroup import domain_components

    ctx = _ctx(a)
    d = domain_components(ctx, parse_word(a.word), _opt_expr(a.conj))
    print(f"{d.n_components} components; origin in component {d.origin_label}")
    return [
        io.write_json(out / "domains.json", _flagged(d.to_json(), ctx)),
        io.write_json(out / "labels.json", io.encode_labels(d.labels)),
    ]


FP_HEADER = ["word", "re_z", "im_z", "re_mult", "im_mult", "hyperbolic"]


def _fp_rows(records):
    return [[r.to_row()[k] for k in FP_HEADER] for r in records]


def cmd_fixed_points(a, out):
    from .pseudogroup import find_fixed_points

    ctx = _ctx(a)
    recs = find_fixed_points(ctx, parse_word(a.word), _opt_expr(a.conj), _pair(a.annulus))
    print(f"{len(recs)} fixed points, {sum(r.hyperbolic for r in recs)} hyperbolic")
    rows = [dict(r.to_row(), residual=r.residual) for r in recs]
    return [
        io.write_csv(out / "fixed_points.csv", FP_HEADER, _fp_rows(recs)),
        io.write_json(out / "fixed_points.json", _flagged({"records": rows}, ctx)),
    ]


def cmd_orbits(a, out):
    from .pseudogroup import orbits_disjoint

    ctx = _ctx(a)
    v = orbits_disjoint(ctx, parse_number(str(a.z1)), parse_number(str(a.z2)), a.max_blocks,
                        conjugator=_opt_expr(a.conj), torsion=_torsion(a.torsion), max_letters=a.max_letters)
    print(v.text)
    return [io.write_json(out / "orbits.json", _flagged(v.to_json(), ctx))]


def cmd_census(a, out):
    from .pseudogroup import census_nonsimply, holonomy_model

    conj = parse_expr(a.conj)
    ctx, tor = holonomy_model(a.k, conj, a.radius, a.grid)
    rep = census_nonsimply(ctx, tor, conj, a.max_blocks, _pair(a.annulus))
    print(f"{rep.distinct_count} distinct fixed points; cumulative {rep.cumulative}")
    return [
        io.write_csv(out / "census.csv", FP_HEADER, _fp_rows(rep.records)),
        io.write_json(out / "census.json", _flagged(rep.to_json(), ctx)),
    ]


def cmd_riemann(a, out):
    from .conformal.perturbation import boundary_dump, build_perturbation, build_teardrop
    from .conformal.riemann import riemann_map
    from .parallel import pmap

    alphas = _floats(a.alpha)

    def one(alpha):
        rm = riemann_map(build_teardrop(a.delta, alpha, a.node_count))
        H = build_perturbation(rm)
        row = [alpha, H.p, H.neg_log_p, H.sup_deviation(), H.value_at_one().real]
        return row, boundary_dump(rm)

    res = pmap(one, alphas)
    for row, _ in res:
        print(f"alpha={row[0]:g}  p={row[1]!r}  sup|H-z|={row[3]:.6e}  H(1)={row[4]!r}")
    paths = [io.write_csv(out / "convergence.csv", ["alpha", "p_m", "neg_log_p", "sup_dev", "H(1)"],
                          [r for r, _ in res])]
    paths.append(io.write_json(out / "boundary.json",
                               {"delta": a.delta, "maps": [dict(b, alpha=al) for al, (_, b) in zip(alphas, res)]}))
    return paths


def cmd_perturb(a, out):
    from .conformal.perturbation import normalize_tangency, perturbation_for

    H = perturbation_for(a.delta, a.alpha, a.node_count)
    n = normalize_tangency(H, a.N)
    data = {
        "delta": a.delta,
        "alpha": a.alpha,
        "p": H.p,
        "neg_log_p": H.neg_log_p,
        "H(1)": H.value_at_one(),
        "sup_dev": H.sup_deviation(),
        "taylor_jet": _cplx_rows(n.taylor.coeffs),
        "normalized_jet": _cplx_rows(n.jet.coeffs),
        "tangency_error": n.tangency_error,
        "normalized_at_one": n.value_at_one,
    }
    print(f"H(1)={data['H(1)'].real!r}  (S o H)(1)={n.value_at_one.real!r}  tangency error={n.tangency_error:.2e}")
    return [io.write_json(out / "perturb.json", data)]


def cmd_demo_break(a, out):
    from .conformal.demo import relation_breaking_demo

    rep = relation_breaking_demo(parse_expr(a.f), parse_expr(a.g), parse_word(a.word), parse_number(str(a.z)),
                                 deltas=tuple(_floats(a.deltas)), tie_break=not a.no_tie_break,
                                 node_count=a.node_count)
    print(f"broken with delta={rep.delta:g} alpha={rep.alpha:g}: displacement {rep.displacement:.6e}")
    return [io.write_json(out / "demo_break.json", rep.to_json())]


# ------------------------------------------------------------------ parser

def _common_disc(p):
    p.add_argument("--f", required=True, help="expression for f")
    p.add_argument("--g", required=True, help="expression for g")
    p.add_argument("--conj", default=None, help="conjugator h (B stands for h^-1 g h)")
    p.add_argument("--radius", type=float, default=0.8)
    p.add_argument("--grid", type=float, default=0.02, help="grid pitch")


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="germforge", description=__doc__.splitlines()[0])
    top.add_argument("--version", action="version", version=io.versions()["germforge"])
    sub = top.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("--config", default=None, help="JSON file with option defaults")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=DEFAULT_OUT, help="output directory")
        p.set_defaults(func=fn)
        return p

    p = add("jet", cmd_jet, "Taylor jet of an expression")
    p.add_argument("--expr", required=True)
    p.add_argument("--order", type=int, default=10)

    p = add("break-relation", cmd_break_relation, "break a relation by a sampled conjugator")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--K", type=int, default=8)
    p.add_argument("--order", type=int, default=24)
    p.add_argument("--samples", type=int, default=16)

    p = add("free-cert", cmd_free_cert, "certify a free product up to a word bound")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--conj", default=None)
    p.add_argument("--torsion", default=None, help="k,l or 'free'")
    p.add_argument("--max-blocks", type=int, default=4)
    p.add_argument("--max-letters", type=int, default=None)
    p.add_argument("--order", type=int, default=24)

    p = add("domains", cmd_domains, "components of a word's domain of definition")
    _common_disc(p)
    p.add_argument("--word", required=True)

    p = add("fixed-points", cmd_fixed_points, "fixed points of a word in an annulus")
    _common_disc(p)
    p.add_argument("--word", required=True)
    p.add_argument("--annulus", default="0.1,0.6")

    p = add("orbits", cmd_orbits, "bounded orbit-disjointness check")
    _common_disc(p)
    p.add_argument("--z1", required=True)
    p.add_argument("--z2", required=True)
    p.add_argument("--max-blocks", type=int, default=3)
    p.add_argument("--max-letters", type=int, default=None)
    p.add_argument("--torsion", default=None)

    p = add("census", cmd_census, "fixed-point census for the order (k+1, 2) holonomy model")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--conj", required=True)
    p.add_argument("--max-blocks", type=int, default=4)
    p.add_argument("--radius", type=float, default=0.8)
    p.add_argument("--grid", type=float, default=0.02)
    p.add_argument("--annulus", default="0.1,0.6")

    p = add("riemann", cmd_riemann, "teardrop Riemann maps and perturbations")
    p.add_argument("--delta", type=float, default=1.2)
    p.add_argument("--alpha", default="0.05", help="one value or a comma-separated list")
    p.add_argument("--node-count", type=int, default=1024)

    p = add("perturb", cmd_perturb, "perturbation H and its order-N tangency normalization")
    p.add_argument("--delta", type=float, default=1.2)
    p.add_argument("--alpha", type=float, default=0.02)
    p.add_argument("--N", type=int, default=5)
    p.add_argument("--node-count", type=int, default=1024)

    p = add("demo-break", cmd_demo_break, "destroy a relation at a point by a conformal perturbation")
    p.add_argument("--f", required=True)
    p.add_argument("--g", required=True)
    p.add_argument("--word", required=True)
    p.add_argument("--z", required=True)
    p.add_argument("--deltas", default="1.2,1.1,1.05")
    p.add_argument("--no-tie-break", action="store_true")
    p.add_argument("--node-count", type=int, default=1024)
    return top


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser, argv):
    """Parse ``argv`` with defaults taken from the ``--config`` file."""
    path = _config_path(argv)
    commands = parser._subparsers._group_actions[0].choices
    if path is not None and argv and argv[0] in commands:
        try:
            cfg = json.loads(Path(path).read_text())
        except (OSError, ValueError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise InputError("config must be a JSON object")
        cfg.pop("schema_version", None)
        sub = commands[argv[0]]
        known = {a.dest for a in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            dest = k.replace("-", "_")
            if dest not in known or dest in ("config", "func"):
                raise InputError(f"unknown config key {k!r} for {argv[0]}")
            defaults[dest] = v
        for act in sub._actions:
            if act.dest in defaults:
                act.required = False
        sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        from .parallel import thread_count

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        paths = args.func(args, out)
        config = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "config")}
        config["threads"] = thread_count()
        io.write_manifest(out, args.command, config, args.seed, paths, time.perf_counter() - t0)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
