"""Command-line front end: seeded reproducible runs with flat-file outputs.

    entbench <exact|simulate|twirl-verify|sweep|classical>
             [--config FILE] [--seed N] [--out DIR] [--trials N]
             [--samples N] [--from-manifest FILE] [key=value ...]

Configuration is a single JSON document; command-line flags and trailing
``key=value`` tokens override file values (dots descend into nested keys).
Every run writes a manifest with the fully resolved configuration; rerunning
``simulate`` from a manifest reproduces the result files byte for byte.
Exit codes: 0 success, 1 verification failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, classical, multisource, qubit_pair, quantum, states
from .protocols import ExperimentConfig, StateSpec, asymptotic_sweep, run_experiment
from .twirl import GroupAction, mc_twirl

EXACT_COLUMNS = ["formula", "d", "n", "epsilon", "alpha", "p", "p1", "p2", "p3", "value", "flag"]

FORMULAS = (
    "classical-one",
    "one-way",
    "pair-level0",
    "pair-repeated",
    "pooled",
    "qubit-optimal",
    "qubit-sequential",
    "two-source",
    "two-source-local",
    "three-source",
)

TWIRL_TARGETS = ("one-sample", "two-sample", "three-source", "qubit-weights")

_CONCLUSIVE_STDERR = 5e-3


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".12g")
    return "" if x is None else str(x)


def _round12(obj):
    if isinstance(obj, float):
        return float(format(obj, ".12g"))
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    return obj


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_round12(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _set_nested(config: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = config
    for k in keys[:-1]:
        node = node.setdefault(k, {})
    node[keys[-1]] = value


def _parse_override(token: str) -> tuple[str, object]:
    if "=" not in token:
        raise ValueError(f"override {token!r} is not key=value")
    key, raw = token.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _resolve_config(args, overrides) -> dict:
    config: dict = {}
    if args.config:
        config.update(json.loads(Path(args.config).read_text()))
    if getattr(args, "from_manifest", None):
        manifest = json.loads(Path(args.from_manifest).read_text())
        config = manifest["config"]
    for flag in ("seed", "trials", "samples"):
        val = getattr(args, flag, None)
        if val is not None:
            config[flag] = val
    if args.out is not None:
        config["out_dir"] = args.out
    for token in overrides:
        key, value = _parse_override(token)
        _set_nested(config, key, value)
    config.setdefault("out_dir", "entbench_out")
    config.setdefault("seed", 0)
    return config


def _state_spec(node, d: int) -> StateSpec:
    if node is None:
        return StateSpec("max_entangled", d)
    return StateSpec(
        family=node.get("family", "isotropic"),
        d=int(node.get("d", d)),
        params=tuple(node.get("params", ())),
    )


def _manifest(command: str, config: dict, outputs: list[str], started: str) -> dict:
    return {
        "tool": "entbench",
        "version": __version__,
        "command": command,
        "config": config,
        "seed": config.get("seed", 0),
        "started_at": started,
        "finished_at": _now(),
        "outputs": outputs,
    }


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _as_list(value) -> list:
    if value is None:
        return [None]
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


# ---------------------------------------------------------------------------
# commands


def cmd_exact(config: dict, out_dir: Path) -> tuple[int, list[str]]:
    formula = config.get("formula")
    if formula not in FORMULAS:
        raise ValueError(f"unknown formula {formula!r}; choose from {FORMULAS}")
    d = int(config.get("d", 2))
    n = config.get("n")
    eps = config.get("epsilon")
    alpha = config.get("alpha")
    rows = []

    def row(value, flag="", p=None, p1=None, p2=None, p3=None):
        rows.append([formula, d, n, eps, alpha, p, p1, p2, p3, value, flag])

    if formula == "classical-one":
        for p in _as_list(config.get("p")):
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                row(classical.beta_one_sample(eps, alpha, float(p)), p=p)
    elif formula == "one-way":
        for p in _as_list(config.get("p")):
            row(quantum.beta_one_way(d, eps, alpha, float(p)), p=p)
    elif formula == "pair-level0":
        for p in _as_list(config.get("p")):
            row(quantum.two_sample_trace(d, float(p)), p=p)
    elif formula == "pair-repeated":
        for p in _as_list(config.get("p")):
            row(quantum.beta_pair_repeated(d, int(n), eps, alpha, float(p)), p=p)
    elif formula == "pooled":
        for p in _as_list(config.get("p")):
            row(quantum.pooled_trace(d, int(n), float(p)), p=p)
    elif formula in ("qubit-optimal", "qubit-sequential"):
        sigma = _state_spec(config.get("state"), 2).build()
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if formula == "qubit-optimal":
                value = qubit_pair.beta_optimal_two_sample(sigma)
            else:
                value = qubit_pair.beta_sequential_two_sample(sigma)
        row(value, p=states.fidelity_defect(sigma))
    elif formula in ("two-source", "two-source-local"):
        for p1 in _as_list(config.get("p1")):
            for p2 in _as_list(config.get("p2")):
                if formula == "two-source":
                    value, ok = multisource.beta_two_source(d, float(p1), float(p2))
                    row(value, flag="ok" if ok else "outside-validity", p1=p1, p2=p2)
                else:
                    row(multisource.beta_two_source_local(d, float(p1), float(p2)), p1=p1, p2=p2)
    elif formula == "three-source":
        import warnings

        for p1 in _as_list(config.get("p1")):
            for p2 in _as_list(config.get("p2")):
                for p3 in _as_list(config.get("p3")):
                    with warnings.catch_warnings():
                        warnings.simplefilter("ignore")
                        value, ok = multisource.beta_three_source(
                            d, float(p1), float(p2), float(p3)
                        )
                    row(value, flag="ok" if ok else "outside-validity", p1=p1, p2=p2, p3=p3)
    _write_csv(out_dir / "exact.csv", EXACT_COLUMNS, rows)
    print(f"wrote {len(rows)} rows to {out_dir / 'exact.csv'}")
    return 0, ["exact.csv"]


def cmd_simulate(config: dict, out_dir: Path) -> tuple[int, list[str]]:
    d = int(config.get("d", 2))
    spec = ExperimentConfig(
        protocol=config.get("protocol", "global_projective"),
        d=d,
        n=int(config.get("n", 1)),
        epsilon=float(config.get("epsilon", 0.0)),
        alpha=float(config.get("alpha", 0.05)),
        trials=int(config.get("trials", 10000)),
        seed=int(config.get("seed", 0)),
        state=_state_spec(config.get("state"), d),
        state2=_state_spec(config.get("state2"), d) if config.get("state2") else None,
    )
    result = run_experiment(spec)
    payload = {
        "command": "simulate",
        "protocol": result.protocol,
        "trials": result.trials,
        "accepted": result.accepted,
        "rate": result.rate,
        "ci95": result.ci95,
        "exact": result.exact,
        "extra": result.extra,
        "config": {k: v for k, v in config.items() if k != "out_dir"},
    }
    _write_json(out_dir / "result.json", payload)
    _write_csv(
        out_dir / "trace.csv",
        ["count", "occurrences"],
        [[k, v] for k, v in sorted(result.counts.items())],
    )
    print(
        f"{result.protocol}: rate={result.rate:.6g} exact={result.exact:.6g} "
        f"ci95={result.ci95:.3g} ({out_dir / 'result.json'})"
    )
    return 0, ["result.json", "trace.csv"]


def _twirl_case(target: str, d: int):
    """Seed operator, group action, and closed-form target for each check."""
    phi = states.max_entangled_ket(d)
    p = states.proj(phi)
    eye = np.eye(d * d)
    if target == "one-sample":
        u0 = np.zeros(d, dtype=complex)
        u0[0] = 1.0
        seed = d * states.proj(np.kron(u0, u0.conj()))
        return seed, GroupAction("local", d), quantum.one_sample_covariant_test(d).mat
    if target == "two-sample":
        u = states.max_entangled_ket(d, ("A1", "A2"))
        k = states.Ket(np.kron(u.vec, u.vec.conj()), (d,) * 4, ("A1", "A2", "B1", "B2"))
        k = states.permute_systems(k, ("A1", "B1", "A2", "B2"))
        seed = d * d * states.proj(k.vec)
        return seed, GroupAction("local_independent", d, 2), quantum.two_sample_covariant_test(d).mat
    if target == "three-source":
        seed = multisource.ghz_seed_operator(d)
        return (
            seed,
            GroupAction("local_independent", d, 3),
            multisource.three_source_covariant_test(d).mat,
        )
    if target == "qubit-weights":
        if d != 2:
            raise ValueError("qubit-weights target is d=2 only")
        u = qubit_pair.optimal_seed_vector()
        k = states.Ket(np.kron(u, u.conj()), (2, 2, 2, 2), ("A1", "A2", "B1", "B2"))
        k = states.permute_systems(k, ("A1", "B1", "A2", "B2"))
        seed = 4.0 * states.proj(k.vec)
        return seed, GroupAction("local_phase", 2, 2), qubit_pair.optimal_two_sample_test().mat
    raise ValueError(f"unknown twirl target {target!r}; choose from {TWIRL_TARGETS}")


def cmd_twirl_verify(config: dict, out_dir: Path) -> tuple[int, list[str]]:
    target = config.get("target")
    d = int(config.get("d", 2))
    samples = int(config.get("samples", 100000))
    seed, action, reference = _twirl_case(target, d)
    rng = np.random.default_rng(int(config.get("seed", 0)))
    est = mc_twirl(seed, action, samples, rng)
    max_dev = est.deviation(reference)
    max_stderr = float(est.stderr.max())
    if max_stderr > _CONCLUSIVE_STDERR:
        status = "inconclusive"
    elif est.within(reference, nsigma=5.0):
        status = "pass"
    else:
        status = "fail"
    payload = {
        "command": "twirl-verify",
        "target": target,
        "d": d,
        "samples": samples,
        "max_abs_deviation": max_dev,
        "max_stderr": max_stderr,
        "criterion": "entrywise |mean - reference| <= 5 stderr",
        "status": status,
    }
    _write_json(out_dir / "twirl_report.json", payload)
    print(f"twirl-verify {target} d={d} N={samples}: {status} (dev={max_dev:.3g}, stderr={max_stderr:.3g})")
    return (1 if status == "fail" else 0), ["twirl_report.json"]


def cmd_sweep(config: dict, out_dir: Path) -> tuple[int, list[str]]:
    rows = asymptotic_sweep(
        delta=float(config.get("delta", 1.0)),
        t_alt=float(config.get("tprime", 3.0)),
        alpha=float(config.get("alpha", 0.05)),
        n_list=config.get("n_list", [100, 1000, 10000]),
        protocol=config.get("protocol", "bell_pairs"),
        d=int(config.get("d", 2)),
        trials=int(config.get("trials", 0)),
        seed=int(config.get("seed", 0)),
    )
    header = ["n", "epsilon", "exact", "empirical", "ci95", "poisson_limit", "gap", "boundary_accept"]
    _write_csv(out_dir / "sweep.csv", header, [[r[h] for h in header] for r in rows])
    print(f"wrote {len(rows)} rows to {out_dir / 'sweep.csv'}")
    return 0, ["sweep.csv"]


def cmd_classical(config: dict, out_dir: Path) -> tuple[int, list[str]]:
    rows = []
    alpha = float(config.get("alpha", 0.05))
    if config.get("n") is not None:
        n = int(config["n"])
        eps = float(config.get("epsilon", 0.0))
        t = classical.binomial_ump_test(n, eps, alpha)
        for q in _as_list(config.get("q", [])):
            rows.append(
                ["binomial", n, eps, alpha, t.threshold, t.gamma, q,
                 classical.beta_binomial(n, eps, alpha, float(q))]
            )
        if not _as_list(config.get("q", [])):
            rows.append(["binomial", n, eps, alpha, t.threshold, t.gamma, None, None])
    if config.get("delta") is not None:
        delta = float(config["delta"])
        t = classical.poisson_ump_test(delta, alpha)
        for tp in _as_list(config.get("tprime", [])):
            rows.append(
                ["poisson", None, delta, alpha, t.threshold, t.gamma, tp,
                 classical.beta_poisson(delta, alpha, float(tp))]
            )
    header = ["kind", "n", "boundary", "alpha", "threshold", "gamma", "alternative", "beta"]
    _write_csv(out_dir / "classical.csv", header, rows)
    print(f"wrote {len(rows)} rows to {out_dir / 'classical.csv'}")
    return 0, ["classical.csv"]


COMMANDS = {
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "twirl-verify": cmd_twirl_verify,
    "sweep": cmd_sweep,
    "classical": cmd_classical,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entbench", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"entbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        if name == "simulate":
            p.add_argument("--from-manifest", dest="from_manifest", default=None)
        p.add_argument("overrides", nargs="*", help="key=value config overrides")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = _now()
    try:
        config = _resolve_config(args, args.overrides)
        config["command"] = args.command
        out_dir = Path(config["out_dir"])
        out_dir.mkdir(parents=True, exist_ok=True)
        code, outputs = COMMANDS[args.command](config, out_dir)
    except (ValueError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"entbench: error: {exc}", file=sys.stderr)
        return 2
    manifest = _manifest(args.command, config, outputs, started)
    _write_json(out_dir / "manifest.json", manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
