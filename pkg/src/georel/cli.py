"""Command-line entry point: ``georel {train,eval,verify,export}``."""

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time

import numpy as np
import torch

from . import data as D
from .errors import CheckpointError, DataFormatError, GeoRelError, NonFiniteError
from .eval import (
    containment_accuracy,
    evaluate_ranking,
    geometric_accuracy,
    metrics_json,
    per_relation_csv,
    subsumption_auc,
    subsumption_ranking,
    summarize,
)
from .models import MODEL_REGISTRY
from .poincare import ecv, hcv
from .synthetic import ball_grid
from .training import SeedStreams, dumps_checkpoint, load_checkpoint

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DATA, EXIT_NONFINITE, EXIT_CHECKPOINT = 0, 1, 2, 3, 4, 5

PARSERS = {
    "ultrae": D.parse_triples,
    "shrinke": D.parse_hyper,
    "neste": D.parse_nested,
    "boxel": D.parse_el_jsonl,
    "hmi": D.parse_hex,
}

# flags that map straight onto estimator hyperparameters
HPARAM_FLAGS = ("dim", "lr", "epochs", "neg", "seed", "kind")


class UsageError(Exception):
    """Bad flag or config value; reported with exit code 2."""


# ------------------------------------------------------------------ helpers


def blob_sha1(path):
    """Content hash in git's blob format, so it matches ``git hash-object``."""
    with open(path, "rb") as fh:
        body = fh.read()
    return hashlib.sha1(b"blob %d\0" % len(body) + body).hexdigest()


def parse_value(text):
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    if low in ("none", "null"):
        return None
    for cast in (int, float):
        try:
            return cast(text.strip())
        except ValueError:
            pass
    return text.strip()


def read_config(path):
    """Flat ``key=value`` file; blank lines and ``#`` comments are skipped."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read config {path}: {err.strerror}") from None
    with fh:
        for no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected key=value")
            key, val = line.split("=", 1)
            out[key.strip().replace("-", "_")] = parse_value(val)
    return out


def format_config(cfg):
    return "".join(f"{k}={v}\n" for k, v in sorted(cfg.items()))


def write_text(out_dir, name, text):
    with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


class Manifest:
    """Run record written when a command starts and rewritten when it ends."""

    def __init__(self, out_dir, command, argv, config, seed, inputs):
        self.out_dir = out_dir
        self.start = time.perf_counter()
        self.timings = {}
        self.body = {
            "command": command,
            "argv": list(argv),
            "config": config,
            "seed": seed,
            "inputs": {p: blob_sha1(p) for p in inputs},
            "status": "running",
        }
        self._write()

    def _write(self):
        self.body["timings"] = dict(self.timings)
        write_text(self.out_dir, "manifest.json", json.dumps(self.body, sort_keys=True, indent=1) + "\n")

    def lap(self, name, since):
        self.timings[name] = round(time.perf_counter() - since, 6)

    def finish(self, status, code, **extra):
        self.timings["total"] = round(time.perf_counter() - self.start, 6)
        self.body.update(status=status, exit_code=code, **extra)
        self._write()


def parse_data(model, path):
    if not os.path.isfile(path):
        raise DataFormatError(f"no such file: {path}")
    return PARSERS[model](path)


def ensure_out(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as err:
        raise UsageError(f"cannot create output directory {path}: {err.strerror}") from None


# ------------------------------------------------------------------- train


def build_estimator(args):
    cls = MODEL_REGISTRY[args.model]
    valid = set(cls().get_params(deep=False))
    cfg = read_config(args.config) if args.config else {}
    for key in HPARAM_FLAGS:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    for key, val in (kv.split("=", 1) for kv in args.set or ()):
        cfg[key.strip().replace("-", "_")] = parse_value(val)
    if args.skip_self_check:
        cfg["self_check"] = False
    cfg.setdefault("self_check", True)
    unknown = sorted(set(cfg) - valid)
    if unknown:
        raise UsageError(f"{args.model} has no hyperparameter(s) {', '.join(unknown)}")
    try:
        est = cls(**cfg)
    except (TypeError, ValueError) as err:
        raise UsageError(str(err)) from None
    return est


def training_data(args):
    records = parse_data(args.model, args.data)
    inputs = [args.data]
    if args.model == "neste":
        if args.atomic:
            atomic = parse_data("ultrae", args.atomic)
            inputs.append(args.atomic)
        else:
            atomic = list(dict.fromkeys(t for n in records for t in (n.head, n.tail)))
        records = list(atomic) + list(records)
    val = None
    if args.valid:
        val = parse_data(args.model, args.valid)
        inputs.append(args.valid)
    return records, val, inputs


def cmd_train(args, argv):
    if args.atomic and args.model != "neste":
        raise UsageError("--atomic only applies to --model neste")
    est = build_estimator(args)
    ensure_out(args.out)
    config = {k: v for k, v in sorted(est.get_params(deep=False).items())}
    for p in [args.data, args.valid, args.atomic]:
        if p and not os.path.isfile(p):
            raise DataFormatError(f"no such file: {p}")
    inputs = [p for p in (args.data, args.atomic, args.valid) if p]
    man = Manifest(args.out, "train", argv, dict(model=args.model, **config), est.seed, inputs)
    try:
        t0 = time.perf_counter()
        records, val, _ = training_data(args)
        man.lap("parse", t0)
        t0 = time.perf_counter()
        est.fit(records, val_data=val)
        man.lap("fit", t0)
    except NonFiniteError as err:
        man.finish("failed", EXIT_NONFINITE, error=str(err))
        raise
    except GeoRelError as err:
        man.finish("failed", EXIT_DATA, error=str(err))
        raise
    write_text(args.out, "checkpoint.json", dumps_checkpoint(est))
    write_text(args.out, "loss.csv", est.history_.curve_csv())
    write_text(args.out, "config.txt", format_config(config))
    final = est.history_.curve[-1][1] if est.history_.curve else None
    man.finish("ok", EXIT_OK, final_loss=final, best_epoch=est.history_.best_epoch)
    print(f"trained {args.model}: final loss {final!r}; artifacts in {args.out}")
    return EXIT_OK


# -------------------------------------------------------------------- eval


def _kg_records(tag, path):
    if tag != "neste":
        return parse_data(tag, path)
    # NestE is ranked on atomic triples; a nested file contributes its inner triples
    try:
        nested = parse_data("neste", path)
    except DataFormatError:
        return parse_data("ultrae", path)
    return list(dict.fromkeys(t for n in nested for t in (n.head, n.tail)))


def eval_kg(model, tag, args):
    records = _kg_records(tag, args.data)
    filt = [r for p in args.filter or () for r in _kg_records(tag, p)]
    metrics, table = evaluate_ranking(model, records, filt)
    return metrics, per_relation_csv(table)


def eval_boxel(model, args):
    axioms = parse_data("boxel", args.data)
    filt = [a for p in args.filter or () for a in parse_data("boxel", p)]
    metrics = {
        "n_axioms": len(axioms),
        "geometric_accuracy": geometric_accuracy(model, axioms, args.tol),
        "exact_geometric_accuracy": geometric_accuracy(model, axioms),
        "tolerance": args.tol,
    }
    atomic = [a for a in axioms if a.form == "nf1" and "{" not in a.c + a.d]
    if atomic:
        metrics.update(summarize(subsumption_ranking(model, atomic, filt)))
        metrics["containment_accuracy"] = containment_accuracy(model, [(a.c, a.d) for a in atomic])
        try:
            metrics["auc"] = subsumption_auc(model, atomic, SeedStreams(args.seed).numpy("eval/auc"))
        except GeoRelError:
            metrics["auc"] = None
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(["form", "n", "satisfied"])
    forms = sorted({a.form for a in axioms})
    for form in forms:
        sub = [a for a in axioms if a.form == form]
        w.writerow([form, len(sub), repr(geometric_accuracy(model, sub, args.tol))])
    return metrics, rows.getvalue()


def eval_hmi(model, args):
    graph = parse_data("hmi", args.data)
    missing = sorted(set(graph.labels) - set(model.labels))
    if missing:
        raise DataFormatError(f"labels not in the checkpoint: {', '.join(missing)}", args.data)
    grid = ball_grid()
    scores = model.decision_function(grid)
    preds = model.predict(grid).astype(np.float64)
    ins, dis = model.constraint_losses()
    metrics = {
        "n_points": len(grid),
        "hcv": float(hcv(scores, model.edge_ids("hierarchy"))),
        "ecv": float(ecv(preds, model.edge_ids("exclusion"))),
        "inside_loss": float(ins.sum()),
        "disjoint_loss": float(dis.sum()),
    }
    rows = io.StringIO()
    w = csv.writer(rows, lineterminator="\n")
    w.writerow(["kind", "a", "b", "loss"])
    for kind, edges, vals in (("h", model.graph_.hierarchy, ins), ("e", model.graph_.exclusion, dis)):
        for (a, b), v in zip(edges, vals):
            w.writerow([kind, a, b, repr(float(v))])
    return metrics, rows.getvalue()


def cmd_eval(args, argv):
    model = load_checkpoint(args.checkpoint, expected_model=args.model)
    tag = model.model_tag
    ensure_out(args.out)
    if not os.path.isfile(args.data):
        raise DataFormatError(f"no such file: {args.data}")
    for p in args.filter or ():
        if not os.path.isfile(p):
            raise DataFormatError(f"no such file: {p}")
    inputs = [args.checkpoint, args.data] + list(args.filter or ())
    man = Manifest(args.out, "eval", argv, {"model": tag, "filter": list(args.filter or ()), "tol": args.tol}, args.seed, inputs)
    t0 = time.perf_counter()
    try:
        if tag == "boxel":
            metrics, table = eval_boxel(model, args)
        elif tag == "hmi":
            metrics, table = eval_hmi(model, args)
        else:
            metrics, table = eval_kg(model, tag, args)
    except GeoRelError as err:
        man.finish("failed", EXIT_DATA, error=str(err))
        raise
    man.lap("eval", t0)
    write_text(args.out, "metrics.json", metrics_json(metrics))
    write_text(args.out, "per_relation.csv" if tag not in ("boxel", "hmi") else "breakdown.csv", table)
    man.finish("ok", EXIT_OK)
    print(metrics_json(metrics), end="")
    return EXIT_OK


# ------------------------------------------------------------------ verify


def cmd_verify(args, argv):
    from .verify import SUITES, format_table, run_suites

    names = list(SUITES) if args.suite == "all" else [args.suite]
    man = None
    if args.out:
        ensure_out(args.out)
        man = Manifest(args.out, "verify", argv, {"suite": args.suite, "inject_failure": args.inject_failure}, args.seed, [])
    checks, timings = run_suites(names, seed=args.seed, inject_failure=args.inject_failure)
    table = format_table(checks)
    print(table)
    for name, secs in timings.items():
        print(f"suite {name}: {secs:.2f}s")
    failed = [c for c in checks if not c.passed]
    for c in failed:
        print(f"FAILED {c.suite}/{c.name}: measured {c.measured:.3g} > bound {c.bound:.3g} ({c.detail})")
    code = EXIT_VERIFY if failed else EXIT_OK
    if man is not None:
        write_text(args.out, "verify.txt", table + "\n")
        man.timings.update({k: round(v, 6) for k, v in timings.items()})
        man.finish("failed" if failed else "ok", code, n_checks=len(checks), n_failed=len(failed))
    return code


# ------------------------------------------------------------------ export


def cmd_export(args, argv):
    model = load_checkpoint(args.checkpoint, expected_model=args.model)
    ensure_out(args.out)
    man = Manifest(args.out, "export", argv, {"model": model.model_tag}, None, [args.checkpoint])
    written = []
    for name, tensor in sorted(model.params_.items()):
        arr = tensor.detach().numpy()
        ns = model.param_rows.get(name)
        if ns:
            labels = getattr(model.vocab_, ns).names
        elif arr.ndim < 2:
            labels = [name]
        else:
            labels = [str(i) for i in range(len(arr))]
        rows = arr.reshape(len(labels), -1)
        buf = io.StringIO()
        for label, row in zip(labels, rows):
            buf.write(label + "\t" + "\t".join(repr(float(v)) for v in row) + "\n")
        fname = f"{name}.tsv"
        write_text(args.out, fname, buf.getvalue())
        written.append(fname)
    man.finish("ok", EXIT_OK, files=written)
    print(f"exported {len(written)} parameter tables to {args.out}")
    return EXIT_OK


# ------------------------------------------------------------------ parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="georel", description="Train, evaluate and check geometric relational embeddings.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    models = sorted(MODEL_REGISTRY)

    t = sub.add_parser("train", help="fit a model and write a checkpoint")
    t.add_argument("--model", required=True, choices=models)
    t.add_argument("--data", required=True, help="training file in the model's input format")
    t.add_argument("--out", required=True, help="output directory")
    t.add_argument("--valid", help="validation file (keeps the best-validation parameters)")
    t.add_argument("--atomic", help="atomic triples for neste (default: the inner triples of --data)")
    t.add_argument("--config", help="key=value file of hyperparameters; flags take precedence")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="any other hyperparameter")
    t.add_argument("--dim", type=int)
    t.add_argument("--lr", type=float)
    t.add_argument("--epochs", type=int)
    t.add_argument("--neg", type=int)
    t.add_argument("--seed", type=int)
    t.add_argument("--kind", choices=["q", "h", "s"])
    t.add_argument("--skip-self-check", action="store_true", help="skip the startup gradient check")

    e = sub.add_parser("eval", help="score a checkpoint on a test file")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--model", choices=models, help="expected model tag")
    e.add_argument("--data", required=True)
    e.add_argument("--out", required=True)
    e.add_argument("--filter", nargs="+", metavar="FILE", help="files of known true records for filtered ranking")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--tol", type=float, default=1e-5, help="slack for boxel containment checks")

    v = sub.add_parser("verify", help="run the property suites")
    v.add_argument(
        "--suite",
        default="all",
        choices=["patterns", "soundness", "gradients", "geometry", "algebra", "monotonicity", "all"],
    )
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--inject-failure", action="store_true", help="force one failing check per suite")
    v.add_argument("--out", help="optional directory for the table and manifest")

    x = sub.add_parser("export", help="write checkpoint parameters as labelled TSV tables")
    x.add_argument("--checkpoint", required=True)
    x.add_argument("--model", choices=models)
    x.add_argument("--out", required=True)
    return p


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "verify": cmd_verify, "export": cmd_export}


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    torch.set_num_threads(max(1, int(os.environ.get("GEORE_THREADS", "1") or 1)))
    try:
        args = build_parser().parse_args(argv)
        if args.command == "train" and args.kind is not None and args.model != "neste":
            raise UsageError("--kind only applies to --model neste")
        return COMMANDS[args.command](args, argv)
    except UsageError as err:
        print(f"georel: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointError as err:
        print(f"georel: checkpoint error: {err}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except NonFiniteError as err:
        print(f"georel: {err}", file=sys.stderr)
        return EXIT_NONFINITE
    except (DataFormatError, GeoRelError) as err:
        print(f"georel: data error: {err}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
