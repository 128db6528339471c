"""Command-line entry point wiring the whole detection pipeline.

Subcommands compose through files only::

    arpsentry simulate  --devices 50 --attacks 20 --duration 3600 --seed 7 --out run/
    arpsentry split     --trace run/trace.jsonl --fraction 0.5 --seed 7 --out run/
    arpsentry train     --trace run/train.jsonl --model ensemble --seed 7 --out run/
    arpsentry detect    --model run/model.json --trace run/test.jsonl --out run/
    arpsentry aggregate --logs run/edgelog.json --out run/
    arpsentry evaluate  --predictions run/predictions.csv --out run/
    arpsentry report    --dir run/

Exit codes: 0 success, 1 data/model error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import aggregator as agg
from . import detector as det
from . import features as feat
from . import metrics as met
from . import models as mdl
from . import pcapio
from . import report as rpt
from . import simulate as sim
from . import trace as trc
from .manifest import ManifestWriter

logger = logging.getLogger("arpsentry")

DATA_ERRORS = (
    trc.TraceError,
    feat.FeatureError,
    mdl.ModelError,
    det.DetectorError,
    agg.AggregatorError,
    sim.SimulationError,
    met.EvaluationError,
    FileNotFoundError,
    OSError,
)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _public_config(args) -> dict:
    skip = {"func", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# ---------------------------------------------------------------------------
# Subcommands


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    config = sim.SimConfig(
        devices=args.devices,
        duration=args.duration,
        seed=args.seed,
        benign_rate=args.benign_rate,
        attacks=args.attacks,
        attack_rate=args.attack_rate,
        attack_duration=args.attack_duration,
    )
    result = sim.simulate(config)
    manifest = ManifestWriter("simulate", _public_config(args))
    trace_path = out / "trace.jsonl"
    trc.write_trace(result.trace, trace_path)
    ownership_path = out / "ownership.json"
    sim.write_ownership(result.ownership, ownership_path)
    episodes_path = out / "episodes.jsonl"
    sim.write_episodes(result.episodes, episodes_path)
    for path in (trace_path, ownership_path, episodes_path):
        manifest.add_output(path)
    manifest.write(out)
    spoofed = sum(1 for ev in result.trace.events if ev.label == trc.LABEL_SPOOF)
    logger.info(
        "simulated %d events (%d spoofed, %d episodes) -> %s",
        len(result.trace), spoofed, len(result.episodes), trace_path,
    )
    return 0


def cmd_import(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("import", _public_config(args))
    manifest.add_input(args.pcap)
    trace, stats = pcapio.import_pcap(args.pcap)
    trace_path = out / "trace.jsonl"
    trc.write_trace(trace, trace_path)
    manifest.add_output(trace_path)
    manifest.write(out)
    logger.info(
        "imported %d ARP events (%d non-ARP skipped, %d truncated) -> %s",
        stats.arp_events, stats.skipped_non_arp, stats.skipped_truncated,
        trace_path,
    )
    return 0


def cmd_split(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("split", _public_config(args))
    manifest.add_input(args.trace)
    trace = trc.read_trace(args.trace)
    episodes = sim.read_episodes(args.episodes) if args.episodes else None
    train, test = sim.split_trace(trace, args.fraction, args.seed, episodes=episodes)
    train_path = out / "train.jsonl"
    test_path = out / "test.jsonl"
    trc.write_trace(train, train_path)
    trc.write_trace(test, test_path)
    manifest.add_output(train_path)
    manifest.add_output(test_path)
    manifest.write(out)
    logger.info("split %d events into %d train / %d test",
                len(trace), len(train), len(test))
    return 0


def cmd_featurize(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("featurize", _public_config(args))
    manifest.add_input(args.trace)
    trace = trc.read_trace(args.trace)
    config = feat.FeatureConfig(delta=args.delta, streaming=args.streaming)
    rows = feat.featurize(trace, config)
    features_path = out / "features.csv"
    feat.write_feature_csv(rows, features_path)
    manifest.add_output(features_path)
    manifest.write(out)
    logger.info("featurized %d events -> %s", len(rows), features_path)
    return 0


def _featurized_training_data(args):
    if args.features:
        vectors, labels = feat.read_feature_csv(args.features)
    else:
        trace = trc.read_trace(args.trace)
        config = feat.FeatureConfig(delta=args.delta, streaming=False)
        rows = feat.featurize(trace, config)
        vectors = [fv.as_list() for _, fv in rows]
        labels = [ev.label for ev, _ in rows]
    if any(label is None for label in labels):
        raise mdl.ModelError("training requires labeled data")
    return vectors, labels


def _train_one(kind: str, vectors, labels, config: mdl.TrainConfig):
    trainers = {
        "logistic": mdl.train_logistic,
        "tree": mdl.train_tree,
        "forest": mdl.train_forest,
        "mlp": mdl.train_mlp,
    }
    if kind not in trainers:
        raise mdl.ModelError(f"unsupported model kind: {kind!r}")
    return trainers[kind](vectors, labels, config)


def cmd_train(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("train", _public_config(args))
    manifest.add_input(args.features if args.features else args.trace)
    vectors, labels = _featurized_training_data(args)
    config = mdl.TrainConfig(
        seed=args.seed,
        learning_rate=args.lr,
        epochs=args.epochs,
        max_depth=args.depth,
        forest_size=args.forest_size,
        val_split=args.val_split,
    )

    # deterministic block split: tail fraction held out for reporting
    n_val = int(len(vectors) * config.val_split)
    train_X, train_y = vectors[: len(vectors) - n_val], labels[: len(labels) - n_val]
    val_X, val_y = vectors[len(vectors) - n_val :], labels[len(labels) - n_val :]

    if args.model == "ensemble":
        members = [m.strip() for m in args.members.split(",") if m.strip()]
        model = mdl.Ensemble(
            members=[_train_one(kind, train_X, train_y, config) for kind in members]
        )
    else:
        model = _train_one(args.model, train_X, train_y, config)

    model_path = out / "model.json"
    mdl.save_model(model, model_path)
    manifest.add_output(model_path)
    manifest.write(out)

    for member in getattr(model, "members", [model]):
        loss = getattr(member, "final_loss", None)
        if loss is not None:
            logger.info("%s final training loss: %.6f", member.kind, loss)
    if val_X and all(label is not None for label in val_y):
        preds = [model.predict(x)[0] for x in val_X]
        report = met.score(preds, val_y)
        logger.info("held-out accuracy %.4f on %d examples",
                    report.accuracy, len(val_y))
    logger.info("model written -> %s", model_path)
    return 0


def _edge_assignment(nodes, n_edges: int) -> dict[str, int]:
    return {node: i % n_edges for i, node in enumerate(sorted(nodes))}


def cmd_detect(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("detect", _public_config(args))
    manifest.add_input(args.model)
    manifest.add_input(args.trace)
    model = mdl.load_model(args.model)
    trace = trc.read_trace(args.trace)
    feature_config = feat.FeatureConfig(delta=args.delta, streaming=True)
    detector_config = det.DetectorConfig(
        window=args.window,
        gamma=args.gamma,
        alpha=args.alpha,
        smoothing=not args.no_smoothing,
    )

    outputs = []
    all_alerts = []
    all_predictions = []
    if args.edges <= 1:
        log, windows, predictions = det.run_edge(
            trace, model, feature_config, detector_config
        )
        edge_results = [(log, windows)]
        all_alerts.extend(log.alerts)
        all_predictions.extend(predictions)
    else:
        assignment = _edge_assignment(
            {ev.src_node for ev in trace.events}, args.edges
        )
        edge_results = []
        for edge in range(args.edges):
            events = [ev for ev in trace.events if assignment[ev.src_node] == edge]
            if not events:
                continue
            sub = trc.build_trace(events, duration=trace.duration)
            log, windows, predictions = det.run_edge(
                sub, model, feature_config, detector_config,
                edge_id=f"edge{edge}",
            )
            edge_results.append((log, windows))
            all_alerts.extend(log.alerts)
            all_predictions.extend(predictions)
        all_predictions.sort(key=lambda p: p.ts)

    single = len(edge_results) == 1
    for log, windows in edge_results:
        suffix = "" if single else f"_{log.edge_id}"
        edgelog_path = out / f"edgelog{suffix}.json"
        det.write_edge_log(log, edgelog_path)
        windows_path = out / f"windows{suffix}.csv"
        det.write_window_csv(windows, detector_config, windows_path)
        outputs.extend([edgelog_path, windows_path])

    alerts_path = out / "alerts.jsonl"
    det.write_alert_log(all_alerts, alerts_path)
    predictions_path = out / "predictions.csv"
    det.write_predictions_csv(all_predictions, predictions_path)
    outputs.extend([alerts_path, predictions_path])

    for path in outputs:
        manifest.add_output(path)
    manifest.write(out)
    detections = sum(log.total_detections() for log, _ in edge_results)
    logger.info("%d events, %d detections, %d alerts -> %s",
                len(trace), detections, len(all_alerts), out)
    return 0


def cmd_aggregate(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("aggregate", _public_config(args))
    if not args.logs:
        raise agg.AggregatorError("no edge logs supplied")
    logs = []
    for path in args.logs:
        manifest.add_input(path)
        logs.append(det.read_edge_log(path))
    config = agg.AggregatorConfig(tau=args.tau, isolate_above=args.isolate_above)
    table = agg.aggregate(logs)
    directives = agg.decide_mitigation(table, config)
    threat_path = out / "threat.csv"
    agg.write_threat_csv(table, directives, threat_path)
    directives_path = out / "directives.jsonl"
    agg.write_directive_log(directives, directives_path)
    manifest.add_output(threat_path)
    manifest.add_output(directives_path)
    manifest.write(out)
    logger.info("%d nodes scored, %d directives -> %s",
                len(table), len(directives), out)
    return 0


def _parse_sweep(spec: str) -> list[float]:
    lo, hi, steps = spec.split(":")
    lo, hi, steps = float(lo), float(hi), int(steps)
    if steps < 2 or not 0.0 <= lo < hi <= 1.0:
        raise met.EvaluationError(f"invalid sweep spec: {spec!r}")
    return [lo + i * (hi - lo) / (steps - 1) for i in range(steps)]


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    manifest = ManifestWriter("evaluate", _public_config(args))
    manifest.add_input(args.predictions)
    predictions = det.read_predictions_csv(args.predictions)
    if any(p.true_label is None for p in predictions):
        raise met.EvaluationError("evaluation requires labels")
    preds = [p.label for p in predictions]
    labels = [p.true_label for p in predictions]
    timestamps = [p.ts for p in predictions]

    report = met.score(preds, labels)
    series = met.accuracy_over_time(preds, labels, timestamps, args.window)

    window_preds = []
    window_labels = []
    buckets: dict[int, list] = {}
    for p in predictions:
        buckets.setdefault(int(p.ts // args.window), []).append(p)
    for idx in sorted(buckets):
        group = buckets[idx]
        window_preds.append(int(any(p.label == 1 for p in group)))
        window_labels.append(int(any(p.true_label == 1 for p in group)))
    window_report = met.score(window_preds, window_labels)

    metrics_path = out / "metrics.json"
    met.write_metrics_json(
        report,
        metrics_path,
        extra={"window_level": window_report.to_obj(), "events": len(predictions)},
    )
    accuracy_path = out / "accuracy_over_time.csv"
    met.write_accuracy_csv(series, accuracy_path)
    fpr_path = out / "fpr.csv"
    met.write_fpr_csv(
        [("arpsentry", report.fpr if report.fpr is not None else 0.0)], fpr_path
    )
    outputs = [metrics_path, accuracy_path, fpr_path]

    if args.tau_sweep:
        if not args.edge_log:
            raise met.EvaluationError("--tau-sweep requires --edge-log")
        manifest.add_input(args.edge_log)
        log = det.read_edge_log(args.edge_log)
        table = agg.aggregate([log])
        rows = []
        for tau in _parse_sweep(args.tau_sweep):
            config = agg.AggregatorConfig(tau=tau, isolate_above=max(tau, 0.8))
            rows.append((tau, len(agg.decide_mitigation(table, config))))
        sweep_path = out / "tau_sweep.csv"
        met.write_tau_sweep_csv(rows, sweep_path)
        outputs.append(sweep_path)

    for path in outputs:
        manifest.add_output(path)
    manifest.write(out)
    logger.info("accuracy %.4f, fpr %s -> %s", report.accuracy,
                f"{report.fpr:.4f}" if report.fpr is not None else "n/a", out)
    return 0


def cmd_report(args) -> int:
    written = rpt.render_report(args.dir)
    if not written:
        raise met.EvaluationError(f"no plot CSVs found in {args.dir}")
    for path in written:
        logger.info("figure -> %s", path)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arpsentry",
        description="Multi-layered ARP spoofing detection pipeline",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", help="JSON file of flag defaults")
        return p

    p = add("simulate", cmd_simulate, help="generate a labeled ARP trace")
    p.add_argument("--devices", type=int, default=50)
    p.add_argument("--attacks", type=int, default=20)
    p.add_argument("--duration", type=float, default=3600.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--benign-rate", type=float, default=sim.DEFAULT_BENIGN_RATE)
    p.add_argument("--attack-rate", type=float, default=sim.DEFAULT_ATTACK_RATE)
    p.add_argument("--attack-duration", type=float,
                   default=sim.DEFAULT_ATTACK_DURATION)
    p.add_argument("--out", required=True)

    p = add("import", cmd_import, help="import ARP events from a pcap file")
    p.add_argument("--pcap", required=True)
    p.add_argument("--out", required=True)

    p = add("split", cmd_split, help="episode-aware train/test split")
    p.add_argument("--trace", required=True)
    p.add_argument("--fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--episodes", help="episodes.jsonl from simulate")
    p.add_argument("--out", required=True)

    p = add("featurize", cmd_featurize, help="dump per-packet feature vectors")
    p.add_argument("--trace", required=True)
    p.add_argument("--delta", type=float, default=feat.DEFAULT_DELTA)
    p.add_argument("--streaming", action="store_true")
    p.add_argument("--out", required=True)

    p = add("train", cmd_train, help="train a classifier or ensemble")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--trace", help="labeled trace file")
    group.add_argument("--features", help="labeled feature CSV")
    p.add_argument("--model", default="ensemble",
                   choices=["logistic", "tree", "forest", "mlp", "ensemble"])
    p.add_argument("--members", default="logistic,tree,forest",
                   help="comma list of ensemble member kinds")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--forest-size", type=int, default=5)
    p.add_argument("--val-split", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=feat.DEFAULT_DELTA)
    p.add_argument("--out", required=True)

    p = add("detect", cmd_detect, help="run edge detection over a trace")
    p.add_argument("--model", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--window", type=float, default=det.DEFAULT_WINDOW)
    p.add_argument("--gamma", type=float, default=det.DEFAULT_GAMMA)
    p.add_argument("--alpha", type=float, default=det.DEFAULT_ALPHA)
    p.add_argument("--delta", type=float, default=feat.DEFAULT_DELTA)
    p.add_argument("--no-smoothing", action="store_true")
    p.add_argument("--edges", type=int, default=1)
    p.add_argument("--out", required=True)

    p = add("aggregate", cmd_aggregate, help="fuse edge logs, decide mitigation")
    p.add_argument("--logs", nargs="+", required=True)
    p.add_argument("--tau", type=float, default=agg.DEFAULT_TAU)
    p.add_argument("--isolate-above", type=float,
                   default=agg.DEFAULT_ISOLATE_ABOVE)
    p.add_argument("--out", required=True)

    p = add("evaluate", cmd_evaluate, help="score predictions, emit plot data")
    p.add_argument("--predictions", required=True)
    p.add_argument("--window", type=float, default=det.DEFAULT_WINDOW)
    p.add_argument("--edge-log")
    p.add_argument("--tau-sweep", help="lo:hi:steps, e.g. 0.1:0.9:9")
    p.add_argument("--out", required=True)

    p = add("report", cmd_report, help="render figures from evaluate outputs")
    p.add_argument("--dir", required=True)

    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    if "--config" not in argv:
        return
    path = argv[argv.index("--config") + 1]
    with open(path, "r", encoding="utf-8") as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise met.EvaluationError("config file must hold a JSON object")
    for action in parser._subparsers._group_actions:  # noqa: SLF001
        for sub in action.choices.values():
            sub.set_defaults(**overrides)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config_file(parser, argv)
    except (OSError, json.JSONDecodeError, met.EvaluationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
