"""Command-line front end.

Loads a network file, dispatches to the requested engine and prints one
report row per result as JSON lines (default) or CSV.  Every randomized
subcommand either takes an explicit --seed or reports the seed it chose, so
published numbers are reproducible.  Exit codes: 0 success, 1 validation or
model errors, 2 usage errors.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import io
import json
import secrets
import sys

import numpy as np

from . import cascade as cascade_mod
from . import exact as exact_mod
from . import sampler as sampler_mod
from . import simulator as sim_mod
from .errors import AoiError
from .network import parse_network, validate_ssn


def _load_network(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise AoiError(f"cannot read network file {path!r}: {exc}") from exc
    return validate_ssn(parse_network(text))


def _parse_subset_expr(net, expr: str) -> int:
    expr = expr.strip()
    if expr.startswith("{") and expr.endswith("}"):
        labels = [x.strip() for x in expr[1:-1].split(",") if x.strip()]
    else:
        labels = [expr]
    if not labels:
        raise AoiError(f"empty subset expression {expr!r}")
    try:
        return net.subset_mask(labels)
    except KeyError as exc:
        raise AoiError(str(exc)) from exc


def _subset_name(net, mask: int) -> str:
    labels = net.subset_labels(mask)
    if len(labels) == 1:
        return labels[0]
    return "{" + ",".join(labels) + "}"


def _row(target, method, value, stderr=None, **meta):
    return {
        "target": target,
        "method": method,
        "value": float(value),
        "stderr": None if stderr is None else float(stderr),
        "meta": {k: str(v) for k, v in meta.items()},
    }


def _emit(rows, fmt: str, out) -> None:
    if fmt == "csv":
        writer = csv_mod.writer(out)
        writer.writerow(["target", "method", "value", "stderr", "meta"])
        for r in rows:
            meta = ";".join(f"{k}={v}" for k, v in sorted(r["meta"].items()))
            stderr = "" if r["stderr"] is None else repr(r["stderr"])
            writer.writerow([r["target"], r["method"], repr(r["value"]), stderr, meta])
    else:
        for r in rows:
            out.write(json.dumps(r, sort_keys=True) + "\n")


def _seed_of(args) -> int:
    if args.seed is not None:
        return args.seed
    return secrets.randbits(63)


def _targets(net, args):
    if getattr(args, "all", False):
        return [(name, 1 << i) for i, name in enumerate(net.node_names)]
    expr = args.subset if getattr(args, "subset", None) else args.node
    mask = _parse_subset_expr(net, expr)
    return [(_subset_name(net, mask), mask)]


def cmd_validate(args):
    net = _load_network(args.net)
    return [
        _row(
            "network",
            "validate",
            net.total_rate,
            nodes=net.n_user,
            edges=len(net.edge_rates) - 1,
            source=net.base.source,
            fingerprint=net.fingerprint,
        )
    ]


def cmd_exact(args):
    net = _load_network(args.net)
    return [
        _row(name, "exact", exact_mod.average_age(net, mask))
        for name, mask in _targets(net, args)
    ]


def cmd_mgf(args):
    net = _load_network(args.net)
    mask = _parse_subset_expr(net, args.node)
    value = exact_mod.mgf(net, exact_mod.MgfQuery(mask, args.s))
    return [_row(_subset_name(net, mask), "mgf", value.real, s=args.s)]


def cmd_cdf(args):
    net = _load_network(args.net)
    mask = _parse_subset_expr(net, args.node)
    name = _subset_name(net, mask)
    try:
        start, stop, step = (float(x) for x in args.d_grid.split(":"))
    except ValueError as exc:
        raise AoiError(f"bad --d-grid {args.d_grid!r}, want START:STOP:STEP") from exc
    grid = np.arange(start, stop + step * 0.5, step)
    rows = []
    if args.method == "inversion":
        for d in grid:
            value = exact_mod.cdf_via_inversion(net, exact_mod.TailQuery(mask, d))
            rows.append(_row(name, "cdf-inversion", value, d=d))
    else:
        if args.samples is None:
            raise AoiError("--method sample requires --samples")
        seed = _seed_of(args)
        batch = sampler_mod.sample_ages(
            net, args.samples, sampler_mod.RngPolicy(seed)
        )
        for d in grid:
            value = sampler_mod.empirical_cdf(batch, mask, d)
            stderr = (value * (1.0 - value) / batch.n) ** 0.5
            rows.append(
                _row(name, "cdf-sample", value, stderr, d=d, n=batch.n, seed=seed)
            )
    return rows


def cmd_chernoff(args):
    net = _load_network(args.net)
    mask = _parse_subset_expr(net, args.node)
    value = exact_mod.chernoff_bound(net, exact_mod.TailQuery(mask, args.d))
    return [_row(_subset_name(net, mask), "chernoff", value, d=args.d)]


def cmd_sample(args):
    net = _load_network(args.net)
    seed = _seed_of(args)
    batch = sampler_mod.sample_ages(
        net, args.samples, sampler_mod.RngPolicy(seed), workers=args.workers
    )
    if args.dump_csv:
        with open(args.dump_csv, "w", newline="") as fh:
            writer = csv_mod.writer(fh)
            writer.writerow(net.node_names)
            for row in batch.ages:
                writer.writerow([f"{x:.12g}" for x in row])
    rows = []
    for i, name in enumerate(net.node_names):
        est, stderr = sampler_mod.estimate(
            batch, 1 << i, sampler_mod.Functional.mean()
        )
        rows.append(_row(name, "sample", est, stderr, n=args.samples, seed=seed))
    return rows


def cmd_simulate(args):
    net = _load_network(args.net)
    seed = _seed_of(args)
    thresholds = (
        [float(x) for x in args.thresholds.split(",")] if args.thresholds else []
    )
    cfg = sim_mod.SimConfig(
        total_events=args.events,
        master_seed=seed,
        burn_in_fraction=args.burn_in,
    )
    res = sim_mod.simulate(net, cfg, thresholds=thresholds, trace_path=args.trace)
    rows = []
    for name in net.node_names:
        rows.append(
            _row(
                name,
                "simulate",
                sim_mod.time_average(res, name),
                sim_mod.time_average_stderr(res, name),
                events=args.events,
                seed=seed,
                burn_in=args.burn_in,
            )
        )
        for d in thresholds:
            rows.append(
                _row(
                    name,
                    "simulate-violation",
                    sim_mod.violation_fraction(res, name, d),
                    events=args.events,
                    seed=seed,
                    d=d,
                )
            )
    return rows


def cmd_cascade(args):
    net = _load_network(args.net)
    chain = cascade_mod.decompose_chain(net)
    table = cascade_mod.chain_average_ages(net, chain)
    return [
        _row(name, "cascade", table[1 << i], blocks=len(chain.blocks))
        for i, name in enumerate(net.node_names)
    ]


def cmd_compare(args):
    net = _load_network(args.net)
    mask = _parse_subset_expr(net, args.node)
    name = _subset_name(net, mask)
    seed = _seed_of(args)

    exact_val = exact_mod.average_age(net, mask)
    batch = sampler_mod.sample_ages(net, args.samples, sampler_mod.RngPolicy(seed))
    samp, samp_se = sampler_mod.estimate(batch, mask, sampler_mod.Functional.mean())

    # subsets need per-replicate minima; the simulator reports singleton
    # trajectories, so compare uses the min over per-node integrals only
    # for singletons and the exact subset for multi-node targets
    cfg = sim_mod.SimConfig(total_events=args.events, master_seed=seed)
    res = sim_mod.simulate(net, cfg)
    labels = net.subset_labels(mask)
    if len(labels) == 1:
        sim_val = sim_mod.time_average(res, labels[0])
        sim_se = sim_mod.time_average_stderr(res, labels[0])
    else:
        # time average of the subset minimum, via the birth logs
        sim_val, sim_se = _subset_time_average(res, net, mask)

    gate_sampler = abs(samp - exact_val) <= 4.0 * samp_se
    gate_sim = abs(sim_val - exact_val) <= 4.0 * sim_se
    verdict = gate_sampler and gate_sim
    return [
        _row(name, "exact", exact_val),
        _row(name, "sample", samp, samp_se, n=args.samples, seed=seed),
        _row(name, "simulate", sim_val, sim_se, events=args.events, seed=seed),
        _row(
            name,
            "verdict",
            1.0 if verdict else 0.0,
            sampler_gate="pass" if gate_sampler else "fail",
            simulator_gate="pass" if gate_sim else "fail",
            sigma=4,
        ),
    ]


def _subset_time_average(res, net, mask):
    """Time average of min over subset nodes, from the birth change logs."""
    idx = [i for i in range(net.n_user) if mask >> i & 1]
    cuts = np.unique(
        np.concatenate(
            [res.change_times[i] for i in idx] + [[res.window_start, res.end_time]]
        )
    )
    cuts = cuts[(cuts >= res.window_start) & (cuts <= res.end_time)]
    births = np.maximum.reduce(
        [sim_mod._birth_at(res, i, cuts[:-1]) for i in idx]
    )
    a1 = cuts[:-1] - births
    a2 = cuts[1:] - births
    integral = float(np.sum(a2 * a2 - a1 * a1) / 2.0)
    mean = integral / res.window_length
    # batch means over the same cuts
    bounds = np.linspace(res.window_start, res.end_time, sim_mod.N_BATCHES + 1)
    means = []
    for j in range(sim_mod.N_BATCHES):
        s = np.maximum(cuts[:-1], bounds[j])
        e = np.minimum(cuts[1:], bounds[j + 1])
        ok = e > s
        x1 = s[ok] - births[ok]
        x2 = e[ok] - births[ok]
        means.append(float(np.sum(x2 * x2 - x1 * x1) / 2.0 / (bounds[j + 1] - bounds[j])))
    means = np.array(means)
    return mean, float(means.std(ddof=1) / np.sqrt(sim_mod.N_BATCHES))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoinet",
        description="Age-of-information analysis for single-source networks",
    )
    parser.add_argument(
        "--format", choices=["jsonl", "csv"], default="jsonl", help="output format"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.add_argument("--net", required=True, help="network JSON file")
        p.set_defaults(func=func)
        return p

    add("validate", cmd_validate, help="check the single-source model")

    p = add("exact", cmd_exact, help="exact average ages")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--node")
    g.add_argument("--subset")
    g.add_argument("--all", action="store_true")

    p = add("mgf", cmd_mgf, help="E[exp(s*age)] at a real s")
    p.add_argument("--node", required=True)
    p.add_argument("--s", type=float, required=True)

    p = add("cdf", cmd_cdf, help="CDF values over a threshold grid")
    p.add_argument("--node", required=True)
    p.add_argument("--d-grid", required=True, metavar="START:STOP:STEP")
    p.add_argument("--method", choices=["inversion", "sample"], default="inversion")
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)

    p = add("chernoff", cmd_chernoff, help="Chernoff tail bound")
    p.add_argument("--node", required=True)
    p.add_argument("--d", type=float, required=True)

    p = add("sample", cmd_sample, help="Monte Carlo shortest-path sampling")
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-csv", metavar="FILE")

    p = add("simulate", cmd_simulate, help="discrete-event ground truth")
    p.add_argument("--events", type=int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--burn-in", type=float, default=0.1)
    p.add_argument("--thresholds", metavar="d1,d2,...")
    p.add_argument("--trace", metavar="FILE")

    add("cascade", cmd_cascade, help="chain-of-blocks exact averages")

    p = add("compare", cmd_compare, help="cross-method agreement check")
    p.add_argument("--node", required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--events", type=int, required=True)
    p.add_argument("--seed", type=int)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        rows = args.func(args)
    except AoiError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    buf = io.StringIO()
    _emit(rows, args.format, buf)
    sys.stdout.write(buf.getvalue())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
