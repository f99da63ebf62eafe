"""Command-line interface: ``attdecode <subcommand> ...``.

Exit codes: 0 success, 1 input error, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings

import numpy as np

from . import benchmark, experiment
from .density import (
    DensityVector,
    componentwise_density,
    default_covariance,
    fit_gmm,
    knn_density,
    mixture_density,
    parse_components,
)
from .detect import run_attdecode
from .errors import AttDeCoDeError, InputError
from .graph import degree_density, load_network, local_density, read_attributes_csv, write_network
from .metrics import ari, nmi
from .simgen import SynthConfig, generate_instance, write_truth

log = logging.getLogger("attdecode")


def _default_seed() -> int:
    raw = os.environ.get("ATTDECODE_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"ATTDECODE_SEED must be an integer, got {raw!r}") from None


def _estimator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=5, help="neighbours for kNN density (default 5)")
    p.add_argument("--components", default="1-9",
                   help="GMM component counts: '3', '1-9', '2,4,8' or 'n/2' (default 1-9)")
    p.add_argument("--cov", choices=["spherical", "diag", "full"], default=None,
                   help="GMM covariance model (default: full if p <= 10 else diag)")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default $ATTDECODE_SEED or 0)")


def _attr_density(X: np.ndarray, method: str, args) -> DensityVector:
    if method == "knn":
        return knn_density(X, args.k)
    comps = parse_components(args.components, X.shape[0])
    cov = args.cov or default_covariance(X.shape[1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = fit_gmm(X, comps, cov, seed=args.seed)
    if not model.converged:
        log.warning("EM stopped before convergence (M=%d)", model.M)
    log.info("GMM: M=%d cov=%s BIC=%.3f", model.M, cov, model.bic)
    if method == "gmm":
        return mixture_density(model, X)
    return componentwise_density(model, X)


def _read_density_csv(path, ids) -> DensityVector:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = {r["id"]: float(r["density"]) for r in csv.DictReader(fh)}
    try:
        return DensityVector(np.array([rows[v] for v in ids]), "external", {"file": str(path)})
    except KeyError as exc:
        raise InputError(f"{path}: no density for node {exc.args[0]!r}") from None


def _read_labels(path) -> dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise InputError(f"{path}: expected header 'id,label'")
        return {r["id"]: r["label"] for r in reader}


def _dump(obj, path) -> None:
    text = json.dumps(obj, indent=2)
    if path in (None, "-"):
        print(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def cmd_density(args) -> None:
    table = read_attributes_csv(args.attrs)
    ids = [r[0] for r in table]
    X = np.array([r[1:] for r in table], dtype=float)
    dv = _attr_density(X, args.method, args)
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["id", "density"])
        for vid, v in zip(ids, dv.values):
            w.writerow([vid, repr(float(v))])
    finally:
        if args.out:
            out.close()


def cmd_detect(args) -> None:
    net = load_network(args.edges, args.attrs)
    if args.density == "degree":
        dv = degree_density(net)
    elif args.density == "local":
        dv = local_density(net)
    elif args.density == "external":
        if not args.density_file:
            raise InputError("--density external needs --density-file")
        dv = _read_density_csv(args.density_file, net.node_ids)
    else:
        if net.p == 0:
            raise InputError(f"--density {args.density} needs --attrs")
        dv = _attr_density(net.attributes, args.density, args)
    part = run_attdecode(net, dv, args.min_cluster_size)
    _dump(part.to_dict(net), args.out)


def cmd_simulate(args) -> None:
    cfg = SynthConfig(n=args.n, K=args.k, mu=args.mu, size_mode=args.sizes,
                      seed=args.seed, mixing_mode=args.mixing_mode)
    inst = generate_instance(cfg)
    prefix = args.out_prefix
    write_network(inst.network, f"{prefix}.edges.csv", f"{prefix}.attrs.csv")
    write_truth(inst, f"{prefix}.truth.csv")
    deg = inst.network.degrees()
    log.info("n=%d edges=%d mean realized mixing=%.4f", cfg.n, inst.network.n_edges,
             float(inst.realized_mixing[deg > 0].mean()) if (deg > 0).any() else 0.0)


def cmd_metrics(args) -> None:
    pred, truth = _read_labels(args.pred), _read_labels(args.truth)
    if set(pred) != set(truth):
        raise InputError("prediction and truth files cover different node ids")
    ids = list(truth)
    a = [pred[i] for i in ids]
    b = [truth[i] for i in ids]
    _dump({
        "nmi": nmi(a, b),
        "ari": ari(a, b),
        "k_pred": len({x for x in a if x not in ("0", "")}),
        "k_truth": len(set(b)),
    }, args.out)


def cmd_experiment(args) -> None:
    spec = experiment.load_spec(args.spec)
    if args.seed is not None:
        spec.seed = args.seed
    elif "ATTDECODE_SEED" in os.environ:
        spec.seed = _default_seed()
    out = args.out or spec.output
    if not out:
        raise InputError("no output path: give --out or 'output' in the spec")
    records = experiment.run_experiment(spec, workers=args.workers, timing=args.timing)
    count = experiment.write_records(records, out, timing=args.timing)
    log.info("wrote %d records to %s", count, out)
    if args.summary:
        experiment.write_summary(experiment.summarize(experiment.read_records(out)), args.summary)


def cmd_bench(args) -> None:
    seeds = range(args.seed, args.seed + args.seeds)
    result = benchmark.run_benchmark_lesmis(args.data_dir, args.attrs, args.truth, seeds,
                                            args.cov, args.min_cluster_size)
    if args.json:
        _dump(result, args.json)
    print(f"{'method':<26}{'NMI':>6}{'ARI':>7}{'K':>5}")
    for r in result["rows"]:
        print(f"{r['method']:<26}{r['nmi']:>6.2f}{r['ari']:>7.2f}{r['k_hat']:>5d}")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="attdecode", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="attribute-space node densities")
    p.add_argument("--attrs", required=True)
    p.add_argument("--method", choices=["knn", "gmm", "gmm-component"], default="knn")
    _estimator_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("detect", help="run AttDeCoDe / DeCoDe on a network")
    p.add_argument("--edges", required=True)
    p.add_argument("--attrs")
    p.add_argument("--density", choices=["knn", "gmm", "gmm-component", "degree", "local", "external"],
                   default="knn")
    p.add_argument("--density-file", help="CSV id,density for --density external")
    _estimator_flags(p)
    p.add_argument("--min-cluster-size", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="generate a synthetic attributed network")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sizes", choices=["uniform", "dirichlet"], default="uniform")
    p.add_argument("--mixing-mode", choices=["rewire", "add"], default="rewire")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="NMI / ARI between two labelings")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("experiment", help="run a simulation grid from a YAML spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out")
    p.add_argument("--summary", help="also write a per-cell summary CSV here")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="add a wall_time_ms column (not reproducible)")
    p.add_argument("--seed", type=int, default=None, help="override the spec's master seed")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bench-lesmis", help="Les Misérables benchmark table")
    p.add_argument("--data-dir")
    p.add_argument("--attrs")
    p.add_argument("--truth")
    p.add_argument("--cov", choices=["spherical", "diag", "full"], default="spherical")
    p.add_argument("--seeds", type=int, default=10, help="number of EM seeds (best NMI reported)")
    p.add_argument("--seed", type=int, default=None, help="first EM seed")
    p.add_argument("--min-cluster-size", type=int, default=1)
    p.add_argument("--json", help="write full results (including per-seed runs) here")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "seed", None) is None and args.command != "experiment":
            args.seed = _default_seed()
        args.func(args)
    except (AttDeCoDeError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
