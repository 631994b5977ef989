"""``spinlab`` command line.

Exit codes: 0 on success, 1 on usage, validation or I/O errors, 2 when a
verification check fails.  JSON goes to stdout unless ``--out`` is given.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path

import click
import jsonschema
import numpy as np

from . import __version__
from .analysis import (
    Check,
    TransitionMatrix,
    detailed_balance_residual,
    field_matrix,
    gap as chain_gap,
    glauber_gap,
    glauber_matrix,
    le_check,
    min_gap,
    projected_matrix,
    report,
    stationarity_residual,
    transition_matrix,
)
from .checks import LIMIT_THRESHOLD, PARAM_GRID, SUITES, run_suite, load_golden
from .core import (
    Graph,
    Pinning,
    TwoSpinSystem,
    all_graphs,
    conditional_table,
    enumerate_distribution,
    named_graph,
)
from .coupling import (
    WeightedHamming,
    coupling_gap_bridge,
    magnetize_good,
    path_coupling_certificate,
)
from .dynamics import DynamicsSpec, run_chain
from .influence import complete_si_estimate, flavor_comparison, max_spectral_radius
from .trees import (
    PotentialSpec,
    boundedness_certificate,
    contraction_certificate,
    influence_preservation_residual,
    saw_tree,
    tree_marginal_ratios,
    tree_total_influence,
)
from .uniqueness import UniquenessQuery, solved_gap, uniqueness_check

EXIT_OK, EXIT_ERROR, EXIT_FAILED = 0, 1, 2


class CheckFailed(Exception):
    """Raised after output is written when a verification check did not hold."""


# ---------------------------------------------------------------------------
# helpers


def _clean(obj):
    """Make payloads JSON-safe: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    return obj


def schema_for(name: str) -> dict:
    text = resources.files("spinlab").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)


def dumps(payload: dict) -> str:
    return json.dumps(_clean(payload), sort_keys=True, indent=2) + "\n"


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent or Path("."), prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(ctx: click.Context, name: str, payload: dict, csv_text: str | None = None) -> None:
    """Validate against the shipped schema, then write JSON (or CSV when asked)."""
    clean = _clean(payload)
    jsonschema.validate(clean, schema_for(name))
    text = csv_text if (csv_text is not None and ctx.obj.get("csv")) else dumps(clean)
    out = ctx.obj.get("out")
    if out:
        write_atomic(out, text)
    else:
        click.echo(text, nl=False)


def load_graph(spec: str) -> Graph:
    path = Path(spec)
    if path.exists():
        return Graph.read(path)
    try:
        return named_graph(spec)
    except ValueError:
        raise click.BadParameter(f"no graph file or builtin named {spec!r}", param_hint="--graph")


def build_system(graph: Graph, model: str, beta: float | None, gamma: float | None, lam: float, fields: str | None) -> TwoSpinSystem:
    if model == "hardcore":
        b, g = 0.0, 1.0
    elif model == "ising":
        if beta is None:
            raise click.BadParameter("ising needs --beta", param_hint="--beta")
        b = g = beta
    else:
        if beta is None or gamma is None:
            raise click.BadParameter("general model needs --beta and --gamma", param_hint="--beta/--gamma")
        b, g = beta, gamma
    if fields:
        vals = tuple(float(x) for x in Path(fields).read_text().split())
        if len(vals) != graph.n:
            raise click.BadParameter(f"expected {graph.n} fields, got {len(vals)}", param_hint="--fields")
    else:
        vals = (lam,) * graph.n
    try:
        return TwoSpinSystem(graph, b, g, vals)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--beta/--gamma/--lambda")


def parse_pin(text: str | None) -> Pinning:
    """``"0=+1,3=-1"`` to a pinning."""
    if not text:
        return Pinning()
    out = {}
    for item in text.split(","):
        v, _, s = item.partition("=")
        try:
            spin = int(s)
            out[int(v)] = spin
        except ValueError:
            raise click.BadParameter(f"bad pin entry {item!r}", param_hint="--pin")
        if spin not in (-1, 1):
            raise click.BadParameter("pinned spins must be +1 or -1", param_hint="--pin")
    return Pinning.from_dict(out)


def resolve_seed(seed: int | None, required: bool) -> int | None:
    if seed is not None:
        return seed
    env = os.environ.get("SPINLAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise click.BadParameter("SPINLAB_SEED must be an integer", param_hint="SPINLAB_SEED")
    if required:
        raise click.UsageError("a seed is required: pass --seed or set SPINLAB_SEED")
    return None


def _theta_cb(ctx, param, value):
    if value is not None and not 0.0 < value < 1.0:
        raise click.BadParameter("theta must lie in (0,1)")
    return value


def _positive_cb(ctx, param, value):
    if value is not None and not value > 0:
        raise click.BadParameter("must be positive")
    return value


def _nonneg_cb(ctx, param, value):
    if value is not None and value < 0:
        raise click.BadParameter("must be non-negative")
    return value


def model_options(f):
    opts = [
        click.option("--graph", "graph_spec", required=True, help="Edge-list file or builtin (path:n, cycle:n, complete:n, star:k, empty:n, edge)."),
        click.option("--model", type=click.Choice(["hardcore", "ising", "general"]), default="hardcore", show_default=True),
        click.option("--beta", type=float, default=None, callback=_nonneg_cb),
        click.option("--gamma", type=float, default=None, callback=_positive_cb),
        click.option("--lambda", "lam", type=float, default=1.0, show_default=True, callback=_positive_cb),
        click.option("--fields", type=click.Path(exists=True, dir_okay=False), default=None, help="Per-vertex activities, whitespace separated."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def dyn_options(f):
    opts = [
        click.option("--dyn", type=click.Choice(["glauber", "block", "field", "projected"]), default="glauber", show_default=True),
        click.option("--theta", type=float, default=None, callback=_theta_cb),
        click.option("--ell", type=int, default=None),
        click.option("--k", "kval", type=int, default=None),
        click.option("--pick", type=click.Choice(["free", "all"]), default="free", show_default=True),
        click.option("--inner-steps", type=int, default=None, help="Field dynamics: replace exact block resampling by this many Glauber steps."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def build_dynamics(dyn: str, theta, ell, kval, pick, inner_steps) -> DynamicsSpec:
    try:
        if dyn == "glauber":
            return DynamicsSpec.glauber(pick)
        if dyn == "block":
            if ell is None:
                raise click.BadParameter("block dynamics needs --ell", param_hint="--ell")
            return DynamicsSpec.block(ell, pick)
        if dyn == "field":
            if theta is None:
                raise click.BadParameter("field dynamics needs --theta", param_hint="--theta")
            return DynamicsSpec.field(theta, inner_steps)
        if kval is None or ell is None:
            raise click.BadParameter("projected dynamics needs --k and --ell", param_hint="--k/--ell")
        return DynamicsSpec.projected(kval, ell)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--dyn")


def parse_spins(text: str, n: int) -> np.ndarray:
    if len(text) != n or set(text) - {"+", "-"}:
        raise click.BadParameter(f"start must be a string of {n} '+'/'-' characters", param_hint="--start")
    return np.array([1 if c == "+" else -1 for c in text])


# ---------------------------------------------------------------------------
# commands


@click.group()
@click.version_option(__version__, prog_name="spinlab")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output here instead of stdout.")
@click.option("--csv", "as_csv", is_flag=True, help="Emit the tabular payload as CSV where one exists.")
@click.pass_context
def cli(ctx: click.Context, out: str | None, as_csv: bool) -> None:
    """Exact analysis and sampling for two-spin systems on small graphs."""
    ctx.ensure_object(dict)
    ctx.obj["out"] = out
    ctx.obj["csv"] = as_csv


@cli.command()
@model_options
@dyn_options
@click.option("--steps", type=int, required=True, callback=_nonneg_cb)
@click.option("--seed", type=int, default=None)
@click.option("--start", type=str, default=None, help="Initial state as a '+'/'-' string (default all '-').")
@click.option("--thin", type=int, default=1, show_default=True)
@click.pass_context
def sample(ctx, graph_spec, model, beta, gamma, lam, fields, dyn, theta, ell, kval, pick, inner_steps, steps, seed, start, thin):
    """Run a chain and summarise the visited states."""
    seed = resolve_seed(seed, required=True)
    system = build_system(load_graph(graph_spec), model, beta, gamma, lam, fields)
    spec = build_dynamics(dyn, theta, ell, kval, pick, inner_steps)
    table = enumerate_distribution(system)
    try:
        spec.check_against(table)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--ell")
    x0 = parse_spins(start, system.n) if start else -np.ones(system.n, dtype=int)
    try:
        traj = run_chain(spec, table, x0, steps, seed, thin=thin)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--start")
    payload = {"command": "sample", "graph": _graph_dict(system.graph), "params": system.params(), **traj.summary(table)}
    emit(ctx, "sample", payload, traj.to_csv())


def _graph_dict(g: Graph) -> dict:
    return {"n": g.n, "edges": [list(e) for e in g.edges]}


@cli.command("gap")
@model_options
@dyn_options
@click.option("--pin", type=str, default=None, help="Boundary condition, e.g. '0=+1,2=-1'.")
@click.option("--with-min-gap", is_flag=True, help="Also report the worst Glauber gap over all pinnings.")
@click.pass_context
def gap_cmd(ctx, graph_spec, model, beta, gamma, lam, fields, dyn, theta, ell, kval, pick, inner_steps, pin, with_min_gap):
    """Exact transition matrix, spectrum and reversibility checks."""
    system = build_system(load_graph(graph_spec), model, beta, gamma, lam, fields)
    spec = build_dynamics(dyn, theta, ell, kval, pick, inner_steps)
    if spec.inner_steps:
        raise click.BadParameter("exact matrices need exact block resampling", param_hint="--inner-steps")
    table = enumerate_distribution(system)
    pinning = parse_pin(pin)
    if pinning.domain:
        table = conditional_table(table, pinning)
    try:
        P = transition_matrix(spec, table)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--dyn")
    checks = [
        le_check("detailed balance residual", detailed_balance_residual(P), 0.0, 1e-10),
        le_check("stationarity residual", stationarity_residual(P), 0.0, 1e-10),
    ]
    payload = {"command": "gap", **report(P, checks)}
    payload["pinning"] = {str(k): v for k, v in pinning.as_dict().items()}
    if with_min_gap:
        mg = min_gap(enumerate_distribution(system))
        payload["min_gap"] = {"value": mg.value, "witness": mg.witness, "pinnings": mg.pinnings}
    emit(ctx, "gap", payload)
    if not all(c.passed for c in checks):
        raise CheckFailed("reversibility check failed")


@cli.command()
@click.option("--beta", type=float, required=True, callback=_nonneg_cb)
@click.option("--gamma", type=float, required=True, callback=_positive_cb)
@click.option("--lambda", "lam", type=float, required=True, callback=_positive_cb)
@click.option("--delta-max", type=str, default=None, help="Maximum degree Delta (integer or 'inf'); checks d = 1..Delta-1.")
@click.option("--d", "dval", type=int, default=None, help="Check a single branching number d.")
@click.option("--delta", type=float, default=None, help="Required gap; default is the solved gap.")
@click.option("--strict", is_flag=True, help="Exit 2 if the verdict is 'not unique'.")
@click.pass_context
def unique(ctx, beta, gamma, lam, delta_max, dval, delta, strict):
    """Tree-recursion uniqueness (with gap) for (beta, gamma, lambda)."""
    if (delta_max is None) == (dval is None):
        raise click.UsageError("give exactly one of --delta-max or --d")
    Delta = None
    if delta_max is not None:
        if delta_max.lower() in ("inf", "infinity"):
            Delta = math.inf
        else:
            try:
                Delta = int(delta_max)
            except ValueError:
                raise click.BadParameter("must be an integer or 'inf'", param_hint="--delta-max")
            if Delta < 1:
                raise click.BadParameter("must be at least 1", param_hint="--delta-max")
    if dval is not None and dval < 1:
        raise click.BadParameter("must be at least 1", param_hint="--d")
    try:
        q = UniquenessQuery(beta, gamma, lam, delta)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--beta/--gamma/--lambda/--delta")
    rep = uniqueness_check(q, d=dval, Delta=Delta)
    payload = {"command": "unique", "Delta": delta_max if Delta is not None else None, **rep.to_dict()}
    emit(ctx, "unique", payload)
    if strict and not rep.passed:
        raise CheckFailed("not unique")


@cli.command()
@model_options
@click.option("--seed", type=int, default=None)
@click.option("--n-random", type=int, default=50, show_default=True)
@click.option("--refine", type=int, default=0, show_default=True, help="Local refinement rounds around the best field.")
@click.option("--flavor", type=click.Choice(["absolute", "signed"]), default="absolute", show_default=True)
@click.pass_context
def si(ctx, graph_spec, model, beta, gamma, lam, fields, seed, n_random, refine, flavor):
    """Spectral radius of influence matrices over pinnings and a field grid."""
    seed = resolve_seed(seed, required=True)
    system = build_system(load_graph(graph_spec), model, beta, gamma, lam, fields)
    table = enumerate_distribution(system)
    try:
        est = complete_si_estimate(table, n_random=n_random, seed=seed, refine_rounds=refine, flavor=flavor, keep_records=True)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--graph")
    rho, pin = max_spectral_radius(table, flavor)
    payload = {
        "command": "si",
        "graph": _graph_dict(system.graph),
        "params": system.params(),
        "seed": seed,
        "flavor": flavor,
        "unmagnetized_max": rho,
        "unmagnetized_argmax_pinning": {str(k): v for k, v in pin.as_dict().items()},
        "flavor_comparison": flavor_comparison(table),
        **est.to_dict(),
    }
    emit(ctx, "si", payload, est.to_csv())


@cli.command()
@model_options
@click.option("--root", type=int, default=0, show_default=True)
@click.option("--ordering", type=str, default=None, help="Comma-separated vertex order for cycle-closing pins.")
@click.option("--dot", type=click.Path(dir_okay=False), default=None, help="Also write the tree in DOT format.")
@click.option("--certify", is_flag=True, help="Add contraction and boundedness certificates for sqrt|h|.")
@click.pass_context
def saw(ctx, graph_spec, model, beta, gamma, lam, fields, root, ordering, dot, certify):
    """Self-avoiding-walk tree: size, root ratio, influences and certificates."""
    system = build_system(load_graph(graph_spec), model, beta, gamma, lam, fields)
    order = [int(x) for x in ordering.split(",")] if ordering else None
    try:
        tree = saw_tree(system.graph, root, order)
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--graph/--root/--ordering")
    ratios = tree_marginal_ratios(tree, system)
    payload = {
        "command": "saw",
        "graph": _graph_dict(system.graph),
        "params": system.params(),
        "root": root,
        "n_nodes": tree.size,
        "n_free": tree.n_free,
        "pinned_leaves": {"plus": int(np.sum(tree.pin > 0)), "minus": int(np.sum(tree.pin < 0))},
        "root_ratio": float(ratios[0]),
        "root_marginal_plus": float(ratios[0] / (1 + ratios[0])) if math.isfinite(ratios[0]) else 1.0,
        "total_influence": tree_total_influence(tree, system),
    }
    if system.n <= 16:
        payload["preservation_residual"] = influence_preservation_residual(system, root)
    failed = False
    if certify:
        certs = _certificates(system)
        payload["certificates"] = certs
        failed = not all(c["pass"] for c in certs["items"])
    if dot:
        write_atomic(dot, tree.to_dot())
    emit(ctx, "saw", payload)
    if failed:
        raise CheckFailed("potential certificate failed")


def _certificates(system: TwoSpinSystem) -> dict:
    lam = system.fields[0]
    if any(x != lam for x in system.fields) or system.beta * system.gamma >= 1:
        raise click.BadParameter("certificates need a uniform antiferromagnetic system", param_hint="--certify")
    Delta = max(system.graph.max_degree, 3)
    delta = solved_gap(system.beta, system.gamma, lam, Delta)
    spec = PotentialSpec(system.beta, system.gamma)
    items = []
    if delta > 0:
        for d in range(1, Delta):
            c = contraction_certificate(spec, lam, d, delta)
            items.append({"kind": "contraction", "d": d, **c.to_dict()})
        for d1 in range(Delta):
            for d2 in range(d1, Delta):
                c = boundedness_certificate(spec, lam, lam, d1, d2)
                items.append({"kind": "boundedness", "d1": d1, "d2": d2, **c.to_dict()})
    return {"Delta": Delta, "delta": delta, "unique": delta > 0, "items": items}


@cli.command()
@model_options
@click.option("--weights", type=click.Choice(["degree", "unit"]), default="degree", show_default=True)
@click.option("--delta", type=float, default=None, help="Gap used for weights and magnetization (default: solved gap).")
@click.option("--magnetize", "mag", type=str, default=None, help="'auto' for theta = delta^2/64, or a theta in (0,1).")
@click.option("--bridge/--no-bridge", default=True, show_default=True, help="Compare r with the exact Glauber gap.")
@click.option("--strict", is_flag=True, help="Exit 2 if the certificate fails.")
@click.pass_context
def couple(ctx, graph_spec, model, beta, gamma, lam, fields, weights, delta, mag, bridge, strict):
    """Path-coupling contraction certificate for Glauber dynamics."""
    base = build_system(load_graph(graph_spec), model, beta, gamma, lam, fields)
    g = base.graph
    if delta is None and (weights == "degree" or mag == "auto"):
        if base.beta * base.gamma >= 1 or any(x != base.fields[0] for x in base.fields):
            raise click.BadParameter("solved gap needs a uniform antiferromagnetic system; pass --delta", param_hint="--delta")
        delta = solved_gap(base.beta, base.gamma, base.fields[0], g.max_degree)
        if delta <= 0:
            raise click.BadParameter("system is not unique with a positive gap; pass --delta", param_hint="--delta")
    system = base
    theta = None
    if mag is not None:
        try:
            theta = delta**2 / 64 if mag == "auto" else float(mag)
        except ValueError:
            raise click.BadParameter("must be 'auto' or a number", param_hint="--magnetize")
        if not 0 < theta < 1:
            raise click.BadParameter("theta must lie in (0,1)", param_hint="--magnetize")
        system = magnetize_good(base, theta)
    metric = WeightedHamming.degree_weights(g, delta) if weights == "degree" else WeightedHamming.unit(g.n)
    cert = path_coupling_certificate(system, metric)
    payload = {
        "command": "couple",
        "graph": _graph_dict(g),
        "params": system.params(),
        "delta": delta,
        "theta": theta,
        **cert.to_dict(),
    }
    bridge_ok = True
    if bridge and cert.passed and g.n <= 12:
        table = enumerate_distribution(system)
        P = TransitionMatrix(table, glauber_matrix(table, "all"), DynamicsSpec.glauber("all"))
        bridge_ok, one_minus = coupling_gap_bridge(cert, P)
        payload["bridge"] = {"one_minus_lambda2": one_minus, "pass": bridge_ok}
    emit(ctx, "couple", payload)
    if not bridge_ok:
        raise CheckFailed("spectral gap below the coupling rate")
    if strict and not cert.passed:
        raise CheckFailed("coupling certificate failed")


@cli.command()
@model_options
@click.option("--theta", type=float, default=0.5, show_default=True, callback=_theta_cb)
@click.option("--ks", type=str, default="2,4,8,16,32,64", show_default=True)
@click.pass_context
def limit(ctx, graph_spec, model, beta, gamma, lam, fields, theta, ks):
    """Entrywise distance between projected block dynamics and field dynamics."""
    system = build_system(load_graph(graph_spec), model, beta, gamma, lam, fields)
    try:
        kvals = sorted({int(x) for x in ks.split(",")})
    except ValueError:
        raise click.BadParameter("comma-separated integers expected", param_hint="--ks")
    if len(kvals) < 2 or kvals[0] < 1:
        raise click.BadParameter("need at least two positive values", param_hint="--ks")
    table = enumerate_distribution(system)
    PF = field_matrix(table, theta)
    rows = []
    for k in kvals:
        ell = math.ceil(theta * k * table.n)
        rows.append({"k": k, "ell": ell, "distance": float(np.abs(projected_matrix(table, k, ell) - PF).max())})
    first, last = rows[0]["distance"], rows[-1]["distance"]
    checks = [Check("distance shrinks from smallest to largest k", last, first, bool(last < first))]
    edge_default = system.graph == named_graph("edge") and system.beta == 0 and system.fields == (1.0, 1.0) and theta == 0.5
    if edge_default and 64 in kvals:
        d64 = next(r["distance"] for r in rows if r["k"] == 64)
        checks.append(le_check("k=64 distance below frozen threshold", d64, LIMIT_THRESHOLD, 0.0))
    payload = {
        "command": "limit",
        "graph": _graph_dict(system.graph),
        "params": system.params(),
        "theta": theta,
        "rows": rows,
        "checks": [c.to_dict() for c in checks],
    }
    csv_text = "k,ell,distance\n" + "".join(f"{r['k']},{r['ell']},{r['distance']!r}\n" for r in rows)
    emit(ctx, "limit", payload, csv_text)
    if not all(c.passed for c in checks):
        raise CheckFailed("limit check failed")


def _run_suite_job(args):
    name, nmax, golden = args
    return run_suite(name, nmax, golden).to_dict()


@cli.command()
@click.option("--suite", "suites", multiple=True, default=("all",), show_default=True, help=f"One of: all, {', '.join(SUITES)}.")
@click.option("--nmax", type=int, default=None, help="Cap on graph order for the sweeps.")
@click.option("--golden", type=click.Path(exists=True, dir_okay=False), default=None, help="JSON file overriding golden reference values.")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--timings", is_flag=True, help="Include wall-clock times (breaks byte-identical output).")
@click.pass_context
def verify(ctx, suites, nmax, golden, workers, timings):
    """Run invariant suites; exit 2 if any fails."""
    names = list(SUITES) if "all" in suites else list(dict.fromkeys(suites))
    bad = [s for s in names if s not in SUITES]
    if bad:
        raise click.BadParameter(f"unknown suite(s): {', '.join(bad)}", param_hint="--suite")
    if nmax is not None and nmax < 1:
        raise click.BadParameter("must be at least 1", param_hint="--nmax")
    if workers < 1:
        raise click.BadParameter("must be at least 1", param_hint="--workers")
    try:
        gold = load_golden(golden) if golden else None
    except (ValueError, json.JSONDecodeError) as exc:
        raise click.BadParameter(str(exc), param_hint="--golden")
    jobs = [(name, nmax, gold) for name in names]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_suite_job, jobs))
    else:
        results = [_run_suite_job(j) for j in jobs]
    if not timings:
        for r in results:
            r.pop("elapsed", None)
    for r in results:
        click.echo(f"[{'PASS' if r['pass'] else 'FAIL'}] {r['name']}", err=True)
    payload = {"command": "verify", "nmax": nmax, "pass": all(r["pass"] for r in results), "suites": results}
    emit(ctx, "verify", payload)
    if not payload["pass"]:
        raise CheckFailed("verification failed")


def _sweep_job(args):
    edges, n, b, g, lam, theta = args
    graph = Graph(n, tuple(tuple(e) for e in edges))
    table = enumerate_distribution(TwoSpinSystem.uniform(graph, b, g, lam))
    fd = chain_gap(TransitionMatrix(table, field_matrix(table, theta), DynamicsSpec.field(theta)))
    rho, _ = max_spectral_radius(table)
    return {
        "n": n,
        "edges": [list(e) for e in edges],
        "beta": b,
        "gamma": g,
        "lambda": lam,
        "theta": theta,
        "glauber_gap": glauber_gap(table, "all"),
        "field_gap": fd,
        "max_influence_radius": rho,
    }


@cli.command()
@click.option("--nmax", type=int, default=4, show_default=True)
@click.option("--theta", type=float, default=0.5, show_default=True, callback=_theta_cb)
@click.option("--workers", type=int, default=1, show_default=True)
@click.pass_context
def sweep(ctx, nmax, theta, workers):
    """Glauber gap, field gap and influence radius over connected graphs and the parameter grid."""
    if not 1 <= nmax <= 7:
        raise click.BadParameter("must lie in [1, 7]", param_hint="--nmax")
    if workers < 1:
        raise click.BadParameter("must be at least 1", param_hint="--workers")
    jobs = [
        (list(gr.edges), gr.n, b, g, lam, theta)
        for n in range(1, nmax + 1)
        for gr in all_graphs(n, connected=True)
        for b, g, lam in PARAM_GRID
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_job, jobs, chunksize=16))
    else:
        rows = [_sweep_job(j) for j in jobs]
    cols = ["n", "edges", "beta", "gamma", "lambda", "theta", "glauber_gap", "field_gap", "max_influence_radius"]
    lines = [",".join(cols)]
    for r in rows:
        vals = [" ".join(f"{u}-{v}" for u, v in r["edges"]) if c == "edges" else repr(r[c]) for c in cols]
        lines.append(",".join(vals))
    emit(ctx, "sweep", {"command": "sweep", "nmax": nmax, "theta": theta, "rows": rows}, "\n".join(lines) + "\n")


def main(argv: list[str] | None = None) -> int:
    """Entry point; returns the exit code instead of raising ``SystemExit``."""
    try:
        cli.main(args=argv, prog_name="spinlab", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    except CheckFailed as exc:
        click.echo(f"check failed: {exc}", err=True)
        return EXIT_FAILED
    except (OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_ERROR
    return EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
