"""Command-line front door: reproducible pipelines over the library.

Artifacts are JSON/CSV next to matplotlib-rendered figures, so a report
directory tells the whole story of a run.
"""

from __future__ import annotations

import json
import os
import sys
from fractions import Fraction

import click
import numpy as np

from .exact import CurvePoly
from .ode import OdeSpec
from . import systems


def _load_ode(ode_path, example):
    if example:
        try:
            return systems.BUILTIN_ODES[example]()
        except KeyError:
            raise click.UsageError(f"unknown example {example!r}; "
                                   f"choose from {sorted(systems.BUILTIN_ODES)}")
    if not ode_path:
        raise click.UsageError("provide --ode FILE or --example NAME")
    return OdeSpec.load(ode_path)


def _load_curve(curve_path, example=None):
    if example and not curve_path:
        return systems.BUILTIN_CURVES[example]()
    if not curve_path:
        raise click.UsageError("provide --curve FILE")
    return CurvePoly.load(curve_path)


@click.group()
@click.option("--precision", "precision", type=int, default=50, show_default=True,
              help="working precision (decimal digits) for numeric stages")
@click.option("--tol", type=float, default=1e-10, show_default=True,
              help="generic numeric tolerance")
@click.option("--seed", type=int, default=0, show_default=True,
              help="seed for randomized trials")
@click.pass_context
def main(ctx, precision, tol, seed):
    """Resurgence toolkit for Borel transforms on parametric algebraic curves."""
    ctx.ensure_object(dict)
    ctx.obj.update(precision=precision, tol=tol, seed=seed)


@main.command("find-curve")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--example", type=str, default=None)
@click.option("--max-D", "max_d", type=int, default=4, show_default=True)
@click.option("--max-dk", type=int, default=4, show_default=True)
@click.option("--max-m", type=int, default=6, show_default=True)
@click.option("--out", type=click.Path(), required=True)
def cmd_find_curve(ode_path, example, max_d, max_dk, max_m, out):
    """Search for an algebraic curve carrying the perturbative Borel germ."""
    from .ansatz import CurveNotFound, find_curve

    ode = _load_ode(ode_path, example)
    try:
        curve, report = find_curve(ode, max_D=max_d, max_dk=max_dk, max_m=max_m)
    except CurveNotFound as exc:
        click.echo("no curve found; rank profile:")
        for row in exc.profile:
            click.echo(f"  {row}")
        sys.exit(3)
    curve.save(out)
    click.echo(f"curve found at shape {report['shape']}; written to {out}")


@main.command("germ")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--example", type=str, default=None)
@click.option("--order", "-K", type=int, default=20, show_default=True)
@click.option("--z0", type=str, default=None, help="numeric mode at this z (a+bj)")
@click.option("--out", type=click.Path(), required=True)
def cmd_germ(ode_path, example, order, z0, out):
    """Perturbative Borel germ (exact CSV, or numeric columns at --z0)."""
    from .borelpde import origin_sequence_mp, perturbative_germ, to_borel_pde
    import csv as _csv

    ode = _load_ode(ode_path, example)
    pde = to_borel_pde(ode)
    if z0 is None:
        germ = perturbative_germ(pde, order)
        germ.dump_csv(out)
    else:
        z = complex(z0)
        seq = origin_sequence_mp(ode, z, order)
        with open(out, "w", newline="") as fh:
            wr = _csv.writer(fh)
            wr.writerow(["k", "z", "re", "im"])
            for k, v in enumerate(seq):
                wr.writerow([k, z0, float(v.real), float(v.imag)])
    click.echo(f"germ through order {order} written to {out}")


@main.command("graph")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--example", type=str, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.option("--svg", type=click.Path(), default=None)
def cmd_graph(ode_path, example, out, svg):
    """Singularity graph (nodes, children, arrows) with optional figure."""
    from .geometry import singularity_graph

    ode = _load_ode(ode_path, example)
    graph = singularity_graph(ode)
    graph.save(out)
    click.echo(f"singularity graph written to {out}")
    if svg:
        from .plotting import render_singularity_graph
        render_singularity_graph(graph, svg, title=f"singularity graph ({ode.label})")
        click.echo(f"figure written to {svg}")


@main.command("stokes-graph")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--curve", "curve_path", type=click.Path(exists=True), default=None)
@click.option("--example", type=str, default=None)
@click.option("--window", type=str, default="-1.5,3,-2,2", show_default=True)
@click.option("--res", type=int, default=0, show_default=True,
              help="visibility-grid resolution for region classification")
@click.option("--theta", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.option("--svg", type=click.Path(), default=None)
def cmd_stokes_graph(ode_path, curve_path, example, window, res, theta, out, svg):
    """Trace naive/true/higher Stokes lines and assemble the graph."""
    from .stokes import stokes_graph

    ode = _load_ode(ode_path, example)
    curve = None
    if curve_path or example in systems.BUILTIN_CURVES:
        curve = _load_curve(curve_path, example)
    win = tuple(float(x) for x in window.split(","))
    data = stokes_graph(ode, curve, window=win, resolution=res, theta=theta)
    data.save(out)
    click.echo(f"stokes graph ({len(data.lines)} lines) written to {out}")
    if svg:
        from .plotting import render_stokes_graph
        render_stokes_graph(data, svg, title=f"Stokes graph ({ode.label})")
        click.echo(f"figure written to {svg}")


@main.command("large-order")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--example", type=str, default=None)
@click.option("--z0", type=str, required=True)
@click.option("-N", "n_coeffs", type=int, default=200, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@click.pass_context
def cmd_large_order(ctx, ode_path, example, z0, n_coeffs, out):
    """Darboux fit of the germ coefficient sequence at a point."""
    from .borelpde import origin_sequence_mp
    from .largeorder import fit_darboux

    ode = _load_ode(ode_path, example)
    z = complex(z0)
    dps = ctx.obj["precision"]
    seq = origin_sequence_mp(ode, z, n_coeffs, dps=dps)
    fit = fit_darboux(seq, hypotheses=2, dps=dps, z0=z)
    payload = {
        "z0": [z.real, z.imag],
        "N": n_coeffs,
        "components": [
            {"kind": c.kind, "chi": [c.chi.real, c.chi.imag], "alpha": str(c.alpha),
             "amplitude": [c.amplitude.real, c.amplitude.imag], "stability": c.stability}
            for c in fit.components
        ],
        "tau_flags": fit.tau_flags,
    }
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
    click.echo(f"fit with {len(fit.components)} component(s) written to {out}")


@main.command("automorphism")
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--ode", "ode_path", type=click.Path(exists=True), default=None)
@click.option("--example", type=str, default=None)
@click.option("--path", "path_file", type=click.Path(exists=True), required=True,
              help="JSON list of [re, im] path vertices")
@click.option("--constants", "constants_file", type=click.Path(exists=True), default=None,
              help='JSON {"i,j": [re, im]} Stokes constants')
@click.option("--out", type=click.Path(), required=True)
def cmd_automorphism(graph_path, ode_path, example, path_file, constants_file, out):
    """Generator word along a path across a saved Stokes graph.

    The saved JSON carries the line geometry; the singulant field (crossing
    orientations) is rebuilt from the ODE, so pass --ode or --example."""
    import numpy as _np
    from .automorphisms import word_along_path, word_to_json, compose_label
    from .geometry import singularity_graph
    from .stokes import SingulantField, StokesGraphData, StokesLine, TurningPoint

    ode = _load_ode(ode_path, example)
    with open(graph_path) as fh:
        gd = json.load(fh)
    lines = [StokesLine(kind=l["kind"], indices=tuple(l["indices"]),
                        points=_np.array([complex(a, b) for a, b in l["pts"]]),
                        active=_np.array(l["active"], dtype=bool))
             for l in gd["lines"]]
    data = StokesGraphData(turning_points=[], lines=lines, regions={},
                           window=tuple(gd["window"]), theta=gd.get("theta", 0.0))
    data.field = SingulantField(singularity_graph(ode).singulants)
    with open(path_file) as fh:
        pts = [complex(a, b) for a, b in json.load(fh)]
    constants = {}
    if constants_file:
        with open(constants_file) as fh:
            for key, val in json.load(fh).items():
                i, j = (int(x) for x in key.split(","))
                constants[(i, j)] = complex(val[0], val[1])
    word = word_along_path(data, pts, constants=constants)
    with open(out, "w") as fh:
        json.dump({"word": word_to_json(word), "composition": compose_label(word)}, fh, indent=1)
    click.echo(f"word {compose_label(word) or '(empty)'} written to {out}")


@main.command("match")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--example", type=str, default=None)
@click.option("--link", type=str, default="0:1", show_default=True)
@click.option("-K", "k_order", type=int, default=16, show_default=True)
@click.option("-M", "m_order", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
def cmd_match(ode_path, example, link, k_order, m_order, out):
    """Inner-outer matching of one link: recovered integration constants."""
    from .ansatz import find_curve
    from .borelpde import to_borel_pde
    from .geometry import singularity_graph
    from .innerouter import match_link, select_links

    ode = _load_ode(ode_path, example)
    pde = to_borel_pde(ode)
    curve = systems.BUILTIN_CURVES[example]() if example in systems.BUILTIN_CURVES \
        else find_curve(ode)[0]
    graph = singularity_graph(ode)
    i, j = (int(x) for x in link.split(":"))
    frame = next((f for f in select_links(graph) if (f.i, f.j) == (i, j)), None)
    if frame is None:
        raise click.UsageError(f"no admissible link {i}:{j}; "
                               f"available: {[(f.i, f.j) for f in select_links(graph)]}")
    res = match_link(pde, curve, frame, graph, K=k_order, M=m_order)
    payload = {
        "link": [i, j],
        "alpha_j": str(res["alpha_j"]),
        "side": str(res["side"]),
        "omega": repr(res["omega"]),
        "C": [[str(c.re), str(c.im)] for c in res["C"]],
        "C_lateral": [[str(c.re), str(c.im)] for c in res["C_lateral"]],
        "exact": res["report"]["exact"],
        "provenance": "matched",
    }
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
    click.echo(f"constants {payload['C_lateral']} (provenance matched) written to {out}")


@main.command("resum")
@click.option("--ode", "ode_path", type=click.Path(exists=True))
@click.option("--curve", "curve_path", type=click.Path(exists=True), default=None)
@click.option("--example", type=str, default=None)
@click.option("--z", "z_str", type=str, required=True)
@click.option("--eps", type=float, default=0.05, show_default=True)
@click.option("--side", type=click.Choice(["above", "below", "both"]), default="above",
              show_default=True)
@click.option("--out", type=click.Path(), required=True)
def cmd_resum(ode_path, curve_path, example, z_str, eps, side, out):
    """Lateral Borel-Laplace sum at a point."""
    from .resummation import laplace_sum

    curve = _load_curve(curve_path, example)
    z = complex(z_str)
    sides = ["above", "below"] if side == "both" else [side]
    payload = {"z": [z.real, z.imag], "eps": eps, "sums": {}}
    for s in sides:
        ls = laplace_sum(curve, z, eps, side=s)
        payload["sums"][s] = {"value": [ls.value.real, ls.value.imag],
                              "error_estimate": ls.error_estimate,
                              "deformation": ls.deformation}
    with open(out, "w") as fh:
        json.dump(payload, fh, indent=1)
    click.echo(f"lateral sum(s) written to {out}")


@main.command("verify")
@click.option("--example", type=str, default="running", show_default=True)
@click.option("--criteria", type=str, default=None,
              help="comma-separated criterion number prefixes, e.g. '1 ,2 ,5 '")
@click.option("--out", type=click.Path(), default=None)
def cmd_verify(example, criteria, out):
    """Run the acceptance suite; exit 0 iff every criterion passes."""
    from .acceptance import run_criteria

    names = None
    if criteria:
        names = [c if c.endswith(" ") else c + " " for c in criteria.split(",")]
    elif example == "pearcey":
        names = ["4 "]
    elif example == "cubic":
        names = ["3 ", "5 "]
    results = run_criteria(names=names, out=click.echo)
    if out:
        with open(out, "w") as fh:
            json.dump(results, fh, indent=1)
    sys.exit(0 if all(r["passed"] for r in results) else 1)


@main.command("pipeline")
@click.option("--example", type=str, default="running", show_default=True)
@click.option("--ode", "ode_path", type=click.Path(exists=True), default=None)
@click.option("--outdir", type=click.Path(), required=True)
@click.option("--window", type=str, default="-1.5,3,-2,2", show_default=True)
@click.option("--res", type=int, default=7, show_default=True)
@click.option("--eps", type=float, default=0.05, show_default=True)
@click.option("--z0", type=str, default="2+0j", show_default=True)
@click.option("-N", "n_coeffs", type=int, default=160, show_default=True)
@click.option("--force", is_flag=True, help="recompute even when outputs exist")
@click.pass_context
def cmd_pipeline(ctx, example, ode_path, outdir, window, res, eps, z0, n_coeffs, force):
    """find-curve -> graph -> stokes-graph -> large-order -> match -> resum,
    writing every stage artifact (JSON/CSV + figures) under OUTDIR."""
    os.makedirs(outdir, exist_ok=True)
    ode = _load_ode(ode_path, example)

    def stage(name, fn):
        path = os.path.join(outdir, name)
        if os.path.exists(path) and not force:
            click.echo(f"[skip] {name} exists")
            return path
        fn(path)
        click.echo(f"[done] {name}")
        return path

    from .ansatz import find_curve
    from .borelpde import to_borel_pde
    from .geometry import singularity_graph
    from .stokes import stokes_graph
    from .plotting import render_singularity_graph, render_stokes_graph

    curve_file = os.path.join(outdir, "curve.json")
    if os.path.exists(curve_file) and not force:
        curve = CurvePoly.load(curve_file)
        click.echo("[skip] curve.json exists")
    else:
        curve, _rep = find_curve(ode)
        curve.save(curve_file)
        click.echo("[done] curve.json")
    graph = singularity_graph(ode)
    stage("singularity_graph.json", lambda p: graph.save(p))
    stage("singularity_graph.svg",
          lambda p: render_singularity_graph(graph, p, title=f"{example}: singularity graph"))
    win = tuple(float(x) for x in window.split(","))
    sdata = stokes_graph(ode, curve, window=win, resolution=res, graph=graph)
    stage("stokes_graph.json", lambda p: sdata.save(p))
    stage("stokes_graph.svg",
          lambda p: render_stokes_graph(sdata, p, title=f"{example}: Stokes graph"))

    def do_fit(path):
        from .borelpde import origin_sequence_mp
        from .largeorder import fit_darboux
        z = complex(z0)
        seq = origin_sequence_mp(ode, z, n_coeffs, dps=ctx.obj["precision"])
        fit = fit_darboux(seq, hypotheses=2, dps=ctx.obj["precision"], z0=z)
        with open(path, "w") as fh:
            json.dump({"z0": z0, "components": [
                {"kind": c.kind, "chi": [c.chi.real, c.chi.imag], "alpha": str(c.alpha),
                 "amplitude": [c.amplitude.real, c.amplitude.imag]} for c in fit.components],
                "tau_flags": fit.tau_flags}, fh, indent=1)

    stage("large_order_fit.json", do_fit)

    def do_match(path):
        from .innerouter import match_link, select_links
        pde = to_borel_pde(ode)
        out = []
        for frame in select_links(graph):
            try:
                res_m = match_link(pde, curve, frame, graph, K=16, depth=3)
                out.append({"link": [frame.i, frame.j],
                            "C": [str(c) for c in res_m["C"]],
                            "C_lateral": [str(c) for c in res_m["C_lateral"]],
                            "side": str(res_m["side"]), "exact": res_m["report"]["exact"]})
            except Exception as exc:
                out.append({"link": [frame.i, frame.j], "error": str(exc)})
        with open(path, "w") as fh:
            json.dump(out, fh, indent=1)

    stage("match_constants.json", do_match)

    def do_resum(path):
        from .resummation import laplace_sum
        z = complex(z0)
        payload = {}
        for s in ("above", "below"):
            ls = laplace_sum(curve, z, eps, side=s)
            payload[s] = {"value": [ls.value.real, ls.value.imag],
                          "error": ls.error_estimate}
        with open(path, "w") as fh:
            json.dump({"z": z0, "eps": eps, "sums": payload}, fh, indent=1)

    stage("resum.json", do_resum)
    click.echo(f"pipeline artifacts in {outdir}")


if __name__ == "__main__":
    main()
