"""Command-line harness.

Exit codes: 0 success with every verdict secure, 2 an insecure verdict,
1 an operational error (bad input, infeasible scenario without --force, ...).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import functools
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import __version__, adversary, binning, coset, gossip, network
from .field import Field
from .scenario import Scenario, ScenarioError, build_code, load_scenario
from .seeds import child_seed, substream

EXIT_OK, EXIT_ERROR, EXIT_INSECURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for insecure verdicts here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


class Output:
    """Collects named artifacts; writes them under --out and echoes the report."""

    def __init__(self, out: str | None):
        self.dir = Path(out) if out else None
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text

    def flush(self, report_name: str = "report.txt") -> None:
        if self.dir is not None:
            self.dir.mkdir(parents=True, exist_ok=True)
            for name, text in sorted(self.files.items()):
                (self.dir / name).write_text(text)
        sys.stdout.write(self.files.get(report_name, ""))


@contextmanager
def _mapper(parallel: int):
    if parallel and parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            yield functools.partial(pool.map, chunksize=8)
    else:
        yield map


def _scenario(args) -> Scenario:
    sc = load_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
        if sc.gossip is not None:
            changes["gossip"] = sc.gossip.with_(seed=args.seed)
    if args.trials is not None:
        if args.trials < 1:
            raise UsageError("--trials must be >= 1")
        changes["trials"] = args.trials
    if changes:
        sc = dataclasses.replace(sc, **changes)
    return sc


# --- mincut ---------------------------------------------------------------------


def _edge_label(edges) -> str:
    return "+".join(f"{u}->{v}#{i}" for u, v, i in edges)


def cmd_mincut(args) -> int:
    sc = _scenario(args)
    if sc.network is None:
        raise UsageError("mincut needs a multicast scenario")
    spec = sc.network
    rows = []
    for d in spec.destinations:
        for s in spec.source_names:
            rows.append(("rho_sd", s, d, network.min_cut(spec, s, d) if s != d else 0))
        srcs = [s for s in spec.source_names if s != d]
        rows.append(("rho_Sd", "S", d, network.min_cut(spec, srcs, d) if srcs else 0))
    w = sc.adversary.w
    edges = spec.unit_edges()
    sampled = False
    if w > 0 and edges:
        size = min(w, len(edges))
        if math.comb(len(edges), size) <= sc.adversary.max_sets:
            sets = list(itertools.combinations(edges, size))
        else:
            rng = substream(sc.seed, "adversary", "mincut")
            sets = [tuple(edges[i] for i in sorted(rng.choice(len(edges), size, replace=False)))
                    for _ in range(sc.adversary.max_sets)]
            sampled = True
        for s in spec.source_names:
            for taps in sets:
                rows.append(("rho_sz", s, _edge_label(taps), network.eve_min_cut(spec, s, taps)))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["kind", "source", "sink", "value"])
    writer.writerows(rows)
    out = Output(args.out)
    out.add("mincut.csv", buf.getvalue())
    if sampled:
        out.add("mincut-note.txt", f"wiretap sets sampled: {sc.adversary.max_sets}\n")
    out.flush("mincut.csv")
    return EXIT_OK


# --- run (multicast) ------------------------------------------------------------


def _encode(encoder, M, rng):
    """Encode a k x c message matrix column by column."""
    if isinstance(encoder, coset.CosetCode):
        return coset.encode_matrix(encoder, M)
    cols = [
        binning.encode_individual(encoder, M[:, j]) if encoder.mode == binning.INDIVIDUAL
        else binning.encode_strong(encoder, M[:, j], rng)
        for j in range(M.shape[1])
    ]
    return np.array(cols, dtype=np.int64).T


def _decode(encoder, X):
    if isinstance(encoder, coset.CosetCode):
        return coset.decode_matrix(encoder, X)
    return np.array([binning.decode_individual(encoder, X[:, j]) for j in range(X.shape[1])]).T


def _format_packets(run) -> str:
    lines = []
    for p in run.packets:
        u, v, i = p.edge
        coding = " ".join(str(int(x)) for x in p.coding)
        payload = " ".join(str(int(x)) for x in p.payload)
        lines.append(f"{u}->{v}#{i} | {coding} | {payload}")
    return "\n".join(lines) + "\n"


def multicast_trial(sc: Scenario, encoder, trial: int) -> dict:
    spec = sc.network
    F = spec.field
    msg_rng = substream(sc.seed, "codebook", "messages", trial)
    M = {s: F.random(msg_rng, (k, spec.payload)) for s, k in spec.sources}
    X = {s: _encode(encoder, M[s], msg_rng) for s in spec.source_names}
    generators = {}
    if isinstance(encoder, coset.CosetCode):
        generators = {s: encoder.G for s in spec.source_names}
    run = network.rlnc_run(spec, X, substream(sc.seed, "network", trial), sc.source_policy, generators)
    decode_rows = []
    for d in spec.destinations:
        res = network.decode_at(run.states[d], spec)
        correct = res.complete and all(
            np.array_equal(res.matrices[s], X[s]) and np.array_equal(_decode(encoder, res.matrices[s]), M[s])
            for s in spec.source_names
        )
        decode_rows.append((trial, d, res.rank, res.needed, int(res.complete), int(correct)))
    encoders = {s: encoder for s in spec.source_names}
    a = sc.adversary
    report = adversary.individual_security_audit(
        encoders, run, a.w, a.k_s, a.scope, a.max_sets, child_seed(sc.seed, "adversary", trial), a.cap
    )
    return {
        "decode": decode_rows,
        "report": report,
        "fallbacks": run.policy_fallbacks,
        "packets": _format_packets(run) if trial == 0 else None,
    }


def _trial_star(args):
    return multicast_trial(*args)


def cmd_run(args) -> int:
    sc = _scenario(args)
    if sc.kind == "gossip":
        return _gossip(sc, args)
    if sc.network is None:
        raise UsageError("run needs a multicast or gossip scenario")
    spec = sc.network
    if not sc.code:
        raise UsageError("run needs a code section")
    encoder = build_code(sc)
    ks = {k for _, k in spec.sources}
    if len(ks) > 1:
        raise UsageError("every source must carry the same k")
    k = ks.pop() if ks else 0
    if encoder.k != k or (isinstance(encoder, binning.BinCodebook) and encoder.n != k):
        raise UsageError(f"code length does not match k={k} rows per source")
    feas = network.feasibility_check(spec, k, sc.adversary.w)
    if not feas.individual_feasible and not args.force:
        sys.stderr.write("refusing to run an infeasible scenario (use --force):\n" + feas.text())
        return EXIT_ERROR
    with _mapper(args.parallel) as mapper:
        results = list(mapper(_trial_star, [(sc, encoder, t) for t in range(sc.trials)]))
    decode_buf = io.StringIO()
    writer = csv.writer(decode_buf, lineterminator="\n")
    writer.writerow(["trial", "destination", "rank", "needed", "complete", "correct"])
    leak_buf = io.StringIO()
    leak_writer = csv.writer(leak_buf, lineterminator="\n")
    header_done = False
    successes = 0
    for t, r in enumerate(results):
        writer.writerows(r["decode"])
        successes += all(row[5] for row in r["decode"])
        lines = r["report"].to_csv().splitlines()
        if not header_done:
            leak_writer.writerow(["trial"] + lines[0].split(","))
            header_done = True
        for line in lines[1:]:
            leak_buf.write(f"{t},{line}\n")
    reports = [r["report"] for r in results]
    secure = sum(rep.secure for rep in reports)
    summary = {
        "kind": "multicast",
        "seed": sc.seed,
        "q": spec.q,
        "k": k,
        "w": sc.adversary.w,
        "k_s": sc.adversary.k_s,
        "source_policy": sc.source_policy,
        "trials": sc.trials,
        "feasibility": feas.text().splitlines(),
        "decode_success_trials": successes,
        "secure_trials": secure,
        "policy_fallbacks": sum(r["fallbacks"] for r in results),
        "max_mi_bits": round(max(rep.max_bits for rep in reports), 12),
        "max_joint_mi_bits": round(max(rep.max_joint_bits for rep in reports), 12),
        "exhaustive": all(rep.exhaustive for rep in reports),
        "first_audit": reports[0].to_dict(),
        "verdict": "secure" if secure == sc.trials else "insecure",
    }
    out = Output(args.out)
    out.add("decode.csv", decode_buf.getvalue())
    out.add("leakage.csv", leak_buf.getvalue())
    out.add("packets.log", results[0]["packets"])
    out.add("report.txt", _dumps(summary))
    out.flush()
    return EXIT_OK if secure == sc.trials else EXIT_INSECURE


# --- gossip ---------------------------------------------------------------------


def _gossip(sc: Scenario, args) -> int:
    cfg = sc.gossip
    if cfg is None:
        raise UsageError("gossip needs a gossip scenario")
    out = Output(args.out)
    base = gossip.run(cfg)
    out.add("trace.txt", base.dump())
    summary = {
        "kind": "gossip",
        "seed": sc.seed,
        "v": cfg.v,
        "q": cfg.q,
        "exchange": cfg.exchange,
        "sources": [[s, k] for s, k in cfg.sources],
        "completion_round": base.completion_round,
        "trials": sc.trials,
    }
    secure = True
    if sc.code:
        code = build_code(sc)
        if not isinstance(code, coset.CosetCode):
            raise UsageError("secure gossip needs a coset code")
        with _mapper(args.parallel) as mapper:
            rep = gossip.secure_gossip_experiment(
                cfg, code, sc.adversary.w, sc.trials, sc.adversary.k_s, sc.significance, map_fn=mapper
            )
        summary.update(rep.summary())
        out.add("gossip.csv", rep.to_csv())
        leak = io.StringIO()
        for t, r in enumerate(rep.audits):
            lines = r.to_csv().splitlines()
            if t == 0:
                leak.write("trial," + lines[0] + "\n")
            leak.writelines(f"{t},{line}\n" for line in lines[1:])
        out.add("leakage.csv", leak.getvalue())
        secure = rep.secure
        rounds = rep.coded_rounds
    else:
        rounds = gossip.completion_rounds(cfg, sc.trials)
        buf = io.StringIO()
        buf.write("trial,completion_round\n")
        buf.writelines(f"{i},{int(r)}\n" for i, r in enumerate(rounds))
        out.add("gossip.csv", buf.getvalue())
    if cfg.sources and sc.flooding_trials >= 100:
        fl = gossip.estimate_flooding(cfg, sc.flooding_trials, loss=sc.flooding_loss)
        k = max(k for _, k in cfg.sources)
        bound = gossip.gossip_round_bound(fl.T, fl.alpha, k, len(cfg.sources), sc.eps, cfg.q)
        p95 = float(np.quantile(rounds, 0.95, method="inverted_cdf"))
        summary["flooding"] = {
            "T": fl.T,
            "alpha": round(fl.alpha, 9),
            "alpha_is_lower_bound": fl.alpha_is_lower_bound,
            "residuals": [round(r, 9) for r in fl.residuals],
            "rounds_bound": round(bound, 9),
            "p95_round": p95,
            "within_bound_plus_2": bool(p95 <= bound + 2),
        }
    summary["verdict"] = "secure" if secure else "insecure"
    out.add("report.txt", _dumps(summary))
    out.flush()
    return EXIT_OK if secure else EXIT_INSECURE


def cmd_gossip(args) -> int:
    return _gossip(_scenario(args), args)


# --- audit ------------------------------------------------------------------------


def _load_encoder(path: Path):
    text = path.read_text()
    head = next((l.strip() for l in text.splitlines() if l.strip()), "")
    if head == coset.CODE_HEADER:
        return coset.parse_code(text)
    if head == binning.CODEBOOK_HEADER:
        return binning.parse_codebook(text)
    return None


def cmd_audit(args) -> int:
    path = Path(args.target)
    try:
        encoder = _load_encoder(path)
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    w, k_s, scope, max_sets, cap = args.w, args.k_s, args.scope, 10_000, adversary.DEFAULT_ENUMERATION_CAP
    seed = 0 if args.seed is None else args.seed
    if encoder is None:
        sc = _scenario(argparse.Namespace(scenario=path, seed=args.seed, trials=args.trials))
        if sc.kind != "code-audit":
            raise UsageError("audit takes a code file or a code-audit scenario")
        encoder = build_code(sc)
        a = sc.adversary
        w = a.w if w is None else w
        k_s = a.k_s if args.k_s is None else k_s
        scope = a.scope if args.scope is None else scope
        max_sets, cap, seed = a.max_sets, a.cap, sc.seed
    k_s = 1 if k_s is None else k_s
    scope = scope or "coset"
    if isinstance(encoder, binning.BinCodebook) and encoder.mode == binning.STRONG:
        report = adversary.strong_security_audit(encoder, w, max_sets, seed, cap)
    else:
        report = adversary.coordinate_audit(encoder, w, k_s, scope, max_sets, seed, cap)
    out = Output(args.out)
    out.add("leakage.csv", report.to_csv())
    out.add("report.txt", report.to_text())
    out.flush()
    return EXIT_OK if report.secure else EXIT_INSECURE


# --- search-code ------------------------------------------------------------------


def cmd_search_code(args) -> int:
    budget = math.inf if args.budget in ("inf", "∞") else int(args.budget)
    field = Field(args.q)
    if not 0 <= args.w < args.k:
        raise UsageError("need 0 <= w < k")
    if budget == math.inf:
        budget = field.q ** (args.w * args.k)
    code = coset.search_code(args.k, args.w, field, budget=int(budget), seed=args.seed or 0)
    if code is None:
        sys.stderr.write(f"no (k={args.k}, w={args.w}) generator over GF({args.q}) passes the column check\n")
        return EXIT_ERROR
    out = Output(args.out)
    out.add("code.txt", coset.format_code(code))
    out.flush("code.txt")
    return EXIT_OK


# --- entry point ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    common.add_argument("--out", default=None, help="directory for CSV and report files")
    common.add_argument("--trials", type=int, default=None, help="override the number of trials")
    common.add_argument("--force", action="store_true", help="run even if the cut conditions fail")
    common.add_argument("--parallel", type=int, default=0, metavar="N", help="worker processes for trials")

    p = _Parser(prog="smsm", description="Secure multi-source multicast toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("mincut", parents=[common], help="min-cut table for a multicast scenario")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_mincut)

    s = sub.add_parser("run", parents=[common], help="encode, disseminate, decode and audit")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_run)

    s = sub.add_parser("gossip", parents=[common], help="algebraic gossip experiment")
    s.add_argument("scenario")
    s.set_defaults(func=cmd_gossip)

    s = sub.add_parser("audit", parents=[common], help="exact leakage audit of a code file")
    s.add_argument("target", help="coset code descriptor, codebook dump or code-audit scenario")
    s.add_argument("--w", type=int, default=None, help="symbols Eve reads (default: the code's w)")
    s.add_argument("--k-s", dest="k_s", type=int, default=None, help="largest message subset audited")
    s.add_argument("--scope", choices=("coset", "all"), default=None)
    s.set_defaults(func=cmd_audit)

    s = sub.add_parser("search-code", parents=[common], help="find a generator passing the column check")
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--w", type=int, required=True)
    s.add_argument("--q", type=int, default=2)
    s.add_argument("--budget", default=str(1 << 16), help="candidates to try, or 'inf'")
    s.set_defaults(func=cmd_search_code)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ScenarioError, ValueError, OSError, network.UnsupportedTopologyError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
