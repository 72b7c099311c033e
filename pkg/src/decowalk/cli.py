"""Command-line experiment driver.

Each subcommand reads one JSON config document; flags given on the command
line (``--seed``, ``--mode``, ``--out``, ``--threads``) override the matching
config fields.  CSV outputs start with a ``# config_sha256=... seed=...``
comment followed by a header row.  The hash covers the effective config minus
``out`` and ``threads``, neither of which can change results.

Exit codes: 0 success, 2 config or domain error, 3 numeric non-convergence,
4 resource cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import bounds, matapp, spectral
from .errors import CapabilityError, ConvergenceError, DomainError, ResourceLimitError
from .fourier import has_explicit_dual, unitary_dual
from .graphwalk import DecoratedGraph, deviation, fit_log_rate, iter_walk_distributions, measured_rate
from .groups import SpecialLinearGroup, group_from_descriptor

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_RESOURCE = 0, 2, 3, 4
SEED_MAX = 2**64


class ConfigError(DomainError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x) or math.isnan(x):
            return str(x)
        return f"{x:.12g}"
    return str(x)


class Run:
    """Effective config plus output plumbing for one subcommand invocation."""

    def __init__(self, command: str, config: dict, out: Path):
        self.command = command
        self.config = config
        self.out = out
        hashed = {k: v for k, v in config.items() if k not in ("out", "threads")}
        blob = json.dumps({"command": command, **hashed}, sort_keys=True, separators=(",", ":"))
        self.sha = hashlib.sha256(blob.encode()).hexdigest()

    @property
    def seed(self) -> int:
        return int(self.config.get("seed", 0))

    @property
    def threads(self) -> int:
        return max(1, int(self.config.get("threads", 1)))

    @property
    def mode(self) -> str:
        return self.config.get("mode", "exact")

    def write_csv(self, name: str, header, rows, trailer: list[str] = ()) -> Path:
        buf = io.StringIO()
        buf.write(f"# config_sha256={self.sha} seed={self.seed}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
        for line in trailer:
            buf.write(f"# {line}\n")
        return self._write(name, buf.getvalue())

    def write_json(self, name: str, payload: dict) -> Path:
        payload = {"config_sha256": self.sha, "seed": self.seed, **payload}
        return self._write(name, json.dumps(payload, sort_keys=True, indent=2, default=_json_default) + "\n")

    def _write(self, name, text):
        self.out.mkdir(parents=True, exist_ok=True)
        path = self.out / name
        path.write_text(text)
        return path


def _json_default(x):
    if hasattr(x, "item"):
        return x.item()
    if isinstance(x, tuple):
        return list(x)
    raise TypeError(f"not serializable: {type(x)}")


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _require(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required field {key!r}")
    return cfg[key]


def _n_range(cfg: dict, default=(0, 20)) -> list[int]:
    if "N_values" in cfg:
        Ns = [int(x) for x in cfg["N_values"]]
    else:
        lo, hi = cfg.get("N_range", default)
        Ns = list(range(int(lo), int(hi) + 1))
    if not Ns:
        raise ConfigError("N range is empty")
    return Ns


def _graph(cfg: dict) -> DecoratedGraph:
    g = dict(_require(cfg, "graph"))
    if "group" not in g:
        g["group"] = _require(cfg, "group")
    return DecoratedGraph.from_dict(g)


# ---------------------------------------------------------------------------
# subcommands


def cmd_walks(run: Run) -> int:
    cfg = run.config
    graph = _graph(cfg)
    i, j = int(cfg.get("start", 0)), int(cfg.get("end", 0))
    Ns = _n_range(cfg)
    mode = run.mode
    hyp = spectral.walk_hypotheses(graph)
    rows, logs = [], {}
    for dist in iter_walk_distributions(graph, i, j, max(Ns), mode=mode):
        if dist.N not in Ns:
            continue
        if (dist.total == 0) if dist.exact else dist.log_total == -math.inf:
            rows.append((dist.N, 0, None, None, None))
            continue
        dev = deviation(dist)
        count = int(dist.total) if dist.exact else None
        log_count = math.log(count) if dist.exact else dist.log_total
        rows.append((dist.N, count if count is not None else "", log_count,
                     dev.max_deviation, dev.total_variation))
        logs[dist.N] = dev.log_max_deviation
    fit_Ns = [N for N in Ns if N >= int(cfg.get("fit_from", 1))]
    if mode == "exact":
        fit = measured_rate(graph, i, j, fit_Ns)
        note, ratio = fit.note, fit.ratio
    else:
        pts = [(N, logs[N]) for N in fit_Ns if N in logs and logs[N] > -math.inf]
        slope, _ = fit_log_rate([p[0] for p in pts], [p[1] for p in pts])
        ratio = math.exp(slope)
        note = f"rate {ratio:.6g} per step (float mode)"
    if not hyp.collapse_expected:
        note = "no convergence expected: decorations fail the generation/character hypotheses; " + note
    path = run.write_csv("walks.csv", ("N", "walk_count", "log_walk_count", "max_deviation",
                                       "total_variation"), rows)
    run.write_json("walks_summary.json", {
        "note": note, "ratio": ratio, "hypotheses": {
            "generates": hyp.generates, "no_constant_character": hyp.no_constant_character,
            "pair_products_generate": hyp.pair_products_generate}})
    print(f"{path}: {note}")
    return EXIT_OK


def _tau_row(graph_cfg: dict, n: int, p: int, seed: int):
    try:
        G = SpecialLinearGroup(n, p)
        order = G.order
        graph = DecoratedGraph.from_dict({**graph_cfg, "group": {"family": "sl", "n": n, "modulus": p}},
                                         group=G.ambient).over(G)
    except ResourceLimitError as exc:
        return (p, None, "skipped: " + str(exc), None, None, None, None, None, None)
    except DomainError as exc:
        return (p, None, "hypothesis-failure: " + str(exc), None, None, None, None, None, None)
    hyp = spectral.walk_hypotheses(graph, G)
    if not hyp.collapse_expected:
        return (p, order, "hypothesis-failure", None, None, None, None, None, None)
    try:
        rate = spectral.regular_transfer_rate(graph, G, seed=seed)
    except ResourceLimitError as exc:
        return (p, order, "skipped: " + str(exc), None, None, None, None, None, None)
    d = g = None
    if graph.is_symmetric:
        eff = bounds.effective_rate(graph, group=G)
        d, g = eff.d, eff.g
    status = "ok" if rate.report.converged else "not-converged"
    return (p, order, status, rate.ratio, rate.radius, rate.lambda_max, d, g,
            rate.report.gelfand.get(32))


def cmd_tau_uniformity(run: Run) -> int:
    cfg = run.config
    if cfg.get("family", "sl") != "sl":
        raise ConfigError("tau-uniformity supports the sl family")
    n = int(cfg.get("n", 2))
    moduli = [int(p) for p in _require(cfg, "moduli")]
    if not moduli:
        raise ConfigError("moduli list is empty")
    graph_cfg = dict(_require(cfg, "graph"))
    tasks = [(graph_cfg, n, p, run.seed) for p in moduli]
    if run.threads > 1:
        with ThreadPoolExecutor(run.threads) as pool:
            rows = list(pool.map(lambda a: _tau_row(*a), tasks))
    else:
        rows = [_tau_row(*a) for a in tasks]
    ratios = [r[3] for r in rows if r[3] is not None]
    r_star = max(ratios) if ratios else None
    gs = [r[7] for r in rows if r[7] is not None]
    trailer = [f"summary max_ratio={_fmt(r_star)} max_g={_fmt(max(gs) if gs else None)}"]
    path = run.write_csv("tau_uniformity.csv", ("modulus", "group_order", "status", "ratio", "radius",
                                                "lambda_max", "d", "g", "gelfand_32"), rows, trailer)
    run.write_json("tau_uniformity.json", {"r_star": r_star, "moduli": moduli,
                                           "all_below_one": bool(ratios) and all(r < 1 for r in ratios)})
    for r in rows:
        if r[2] != "ok":
            _log(f"modulus {r[0]}: {r[2]}")
    print(f"{path}: r* = {_fmt(r_star)}")
    if any(r[2] == "not-converged" for r in rows):
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_irreducibility(run: Run) -> int:
    cfg = run.config
    if "generators_path" in cfg:
        path = Path(cfg["generators_path"])
        if not path.exists():
            raise ConfigError(f"generator file {path} does not exist")
        gens = matapp.IntegerMatrixGenSet.from_json(path.read_text())
    else:
        gens = matapp.builtin_generators(cfg.get("kind", "SL"), int(cfg.get("n", 3)))
    if gens.kind == "Sp":
        _log(f"validated {len(gens.matrices)} generators against the symplectic form J")
    Ns = _n_range(cfg, (10, 60))
    samples = int(cfg.get("samples", 10_000))
    sel = cfg.get("prime_selection")
    if sel is not None:
        schedule = {N: [matapp.select_prime(float(sel["c"]), N, gens.n, float(sel["eps"]))] for N in Ns}
        reports = [matapp.reducibility_experiment(gens, [N], schedule[N], samples, run.seed,
                                                  cfg.get("adjacency"), run.threads) for N in Ns]
        report = matapp.combine_reports(reports)
    else:
        primes = [int(p) for p in cfg.get("primes", [7])]
        if not primes:
            _log("warning: empty prime list, every element is vacuously reducible")
        report = matapp.reducibility_experiment(gens, Ns, primes, samples, run.seed,
                                                cfg.get("adjacency"), run.threads)
    csv_path = run.write_csv("irreducibility.csv", matapp.DecayReport.CSV_HEADER, report.csv_rows())
    payload = {"report": report.summary()}
    if "bounds" in cfg:
        b = cfg["bounds"]
        payload["predicted_bounds"] = matapp.predicted_bounds(
            gens.kind, gens.n, Ns, float(b["c"]), float(b.get("eps", 0.1)), b.get("c2"), b.get("c3"))
    run.write_json("irreducibility.json", payload)
    for note in report.notes:
        _log(note)
    print(f"{csv_path}: slope={_fmt(report.slope)} decreasing={report.strictly_decreasing}")
    return EXIT_OK


def cmd_shrink(run: Run) -> int:
    cfg = run.config
    sb = bounds.shrink_bound(float(_require(cfg, "lambda")), float(_require(cfg, "d")))
    text = json.dumps({k: v for k, v in json.loads(sb.to_json()).items()}, sort_keys=True, indent=2)
    print(text)
    if sb.alpha0 is not None:
        target = 1 - (1 - sb.lam**2) * (1 - sb.d**2) / 2
        print(f"h(lambda, d, alpha0) = {target + sb.h_residual:.12g}; target {target:.12g}; "
              f"residual {sb.h_residual:.3g}")
    if "out" in cfg:
        run.write_json("shrink.json", json.loads(sb.to_json()))
    return EXIT_OK


def cmd_spectral_gap(run: Run) -> int:
    cfg = run.config
    graph = _graph(cfg)
    rows = []
    converged = True
    if has_explicit_dual(graph.group):
        for rho in unitary_dual(graph.group):
            cg = spectral.collapse_gap(graph, rho)
            rows.append((rho.label, rho.dimension, cg.radius, cg.lambda_max, cg.ratio, cg.certified_strict))
    rate = spectral.regular_transfer_rate(graph, seed=run.seed)
    converged = rate.report.converged
    rows.append(("regular-nontrivial", graph.group.order, rate.radius, rate.lambda_max, rate.ratio,
                 rate.report.gelfand.get(32, math.inf) < rate.lambda_max))
    path = run.write_csv("spectral_gap.csv", ("representation", "dimension", "radius", "lambda_max",
                                              "ratio", "certified_strict"), rows)
    print(f"{path}: max nontrivial ratio {_fmt(rate.ratio)}")
    return EXIT_OK if converged else EXIT_CONVERGENCE


def cmd_kazhdan(run: Run) -> int:
    cfg = run.config
    G = group_from_descriptor(_require(cfg, "group"))
    S = [G.element(lit) for lit in _require(cfg, "generators")]
    est = bounds.cayley_gap(G, S)
    payload = {"kazhdan": json.loads(est.to_json())}
    if cfg.get("tprime", True):
        try:
            tp = bounds.tprime_epsilon(G, S)
            payload["tprime"] = {"epsilon1": tp.epsilon1, "separation": tp.separation,
                                 "lambda1": tp.kazhdan.lambda1}
        except bounds.SubgroupGenerationError as exc:
            payload["tprime"] = {"refused": str(exc)}
            _log(f"refusal: {exc}")
    run.write_json("kazhdan.json", payload)
    print(json.dumps(payload, sort_keys=True, default=_json_default))
    return EXIT_OK


COMMANDS = {
    "walks": cmd_walks,
    "tau-uniformity": cmd_tau_uniformity,
    "irreducibility": cmd_irreducibility,
    "shrink": cmd_shrink,
    "spectral-gap": cmd_spectral_gap,
    "kazhdan": cmd_kazhdan,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config document")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--mode", choices=("exact", "float"), help="walk DP arithmetic")
    common.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")
    parser = argparse.ArgumentParser(prog="decowalk", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "shrink":
            p.add_argument("--lambda", dest="lam", type=float)
            p.add_argument("--d", type=float)
    return parser


def load_config(args) -> dict:
    cfg: dict = {}
    if args.config is not None:
        if not args.config.exists():
            raise ConfigError(f"config file {args.config} does not exist")
        try:
            cfg = json.loads(args.config.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    for key in ("seed", "mode", "threads"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.out is not None:
        cfg["out"] = str(args.out)
    if getattr(args, "lam", None) is not None:
        cfg["lambda"] = args.lam
    if getattr(args, "d", None) is not None:
        cfg["d"] = args.d
    seed = cfg.get("seed", 0)
    if not isinstance(seed, int) or not 0 <= seed < SEED_MAX:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg.get("mode", "exact") not in ("exact", "float"):
        raise ConfigError("mode must be exact or float")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        run = Run(args.command, cfg, Path(cfg.get("out", ".")))
        return COMMANDS[args.command](run)
    except ConvergenceError as exc:
        _log(f"error: {exc}")
        return EXIT_CONVERGENCE
    except ResourceLimitError as exc:
        _log(f"error: {exc}")
        return EXIT_RESOURCE
    except (DomainError, CapabilityError, KeyError, TypeError, ValueError) as exc:
        _log(f"config error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
