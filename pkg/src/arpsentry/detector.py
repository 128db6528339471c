"""Edge-side detection: per-packet inference, fixed-length windows,
spoofing-rate tracking with EMA smoothing, and threshold alerting.

Each edge runs one ``EdgeDetector`` over its packet stream. Packets are
featurized in streaming mode, classified, and logged per source node;
windows close at every multiple of the window length, producing a
spoofing rate (flagged fraction) and its exponentially smoothed value.
An alert is raised when the governing rate strictly exceeds gamma.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .features import FeatureConfig, FeatureStream
from .trace import ArpEvent, Trace

DEFAULT_WINDOW = 60.0
DEFAULT_GAMMA = 0.02
DEFAULT_ALPHA = 0.3


class DetectorError(Exception):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    window: float = DEFAULT_WINDOW  # seconds
    gamma: float = DEFAULT_GAMMA  # alert threshold on the governing rate
    alpha: float = DEFAULT_ALPHA  # EMA weight on the newest window
    smoothing: bool = True  # alert on the smoothed rate when True

    def __post_init__(self):
        if self.window <= 0:
            raise DetectorError("window length must be > 0")
        if not 0.0 <= self.gamma <= 1.0:
            raise DetectorError("gamma must be in [0, 1]")
        if not 0.0 <= self.alpha <= 1.0:
            raise DetectorError("alpha must be in [0, 1]")


@dataclass(frozen=True)
class WindowState:
    index: int
    packets: int
    positives: int
    rho: float
    rho_bar: float


@dataclass(frozen=True)
class Detection:
    ts: float
    src_node: str
    confidence: float


@dataclass(frozen=True)
class AlertRecord:
    window_index: int
    edge_id: str
    rate: float  # governing rate that tripped the threshold
    smoothed: bool
    detections: tuple[Detection, ...]


@dataclass
class Prediction:
    ts: float
    src_node: str
    label: int
    prob: float
    true_label: Optional[int]


@dataclass
class EdgeLog:
    edge_id: str
    counters: dict[str, int] = field(default_factory=dict)
    alerts: list[AlertRecord] = field(default_factory=list)
    events_seen: int = 0
    events_skipped: int = 0

    def total_detections(self) -> int:
        return sum(self.counters.values())


def ema_update(prev_rho_bar: float, rho: float, alpha: float) -> float:
    """Exponential moving average step: alpha*rho + (1-alpha)*prev."""
    return alpha * rho + (1.0 - alpha) * prev_rho_bar


def should_alert(state: WindowState, config: DetectorConfig) -> bool:
    """True iff the governing rate strictly exceeds gamma."""
    rate = state.rho_bar if config.smoothing else state.rho
    return rate > config.gamma


class EdgeDetector:
    """Streaming per-edge detection state.

    Feed events in timestamp order via ``process``; call ``finalize`` with
    the trace duration to close remaining windows. Window and log state
    carries over between calls, so a stream may be delivered in pieces.
    """

    def __init__(
        self,
        model,
        duration: float,
        feature_config: FeatureConfig,
        detector_config: DetectorConfig,
        edge_id: str = "edge0",
    ):
        self.model = model
        self.duration = duration
        self.config = detector_config
        self.edge_id = edge_id
        self._stream = FeatureStream(duration, feature_config)
        self._counters: dict[str, int] = defaultdict(int)
        self._log = EdgeLog(edge_id=edge_id)
        self.windows: list[WindowState] = []
        self.predictions: list[Prediction] = []
        self._rho_bar = 0.0
        self._current = 0  # open window index
        self._packets = 0
        self._positives = 0
        self._detections: list[Detection] = []

    def process(self, event: ArpEvent) -> None:
        idx = self._window_index(event.ts)
        if idx < self._current:
            raise DetectorError(f"event at ts {event.ts} behind open window")
        while self._current < idx:
            self._close_window()
        fv = self._stream.update(event)
        label, prob = self.model.predict(fv.as_list())
        self._packets += 1
        self._log.events_seen += 1
        self.predictions.append(
            Prediction(ts=event.ts, src_node=event.src_node, label=label,
                       prob=prob, true_label=event.label)
        )
        if label == 1:
            self._positives += 1
            self._counters[event.src_node] += 1
            self._detections.append(
                Detection(ts=event.ts, src_node=event.src_node, confidence=prob)
            )

    def skip_malformed(self) -> None:
        self._log.events_skipped += 1

    def finalize(self) -> EdgeLog:
        """Close every window up to the trace duration and return the log."""
        total = max(1, math.ceil(self.duration / self.config.window - 1e-9))
        while self._current < total:
            self._close_window()
        self._log.counters = dict(self._counters)
        return self._log

    # -- internals ---------------------------------------------------------

    def _window_index(self, ts: float) -> int:
        total = max(1, math.ceil(self.duration / self.config.window - 1e-9))
        return min(int(ts // self.config.window), total - 1)

    def _close_window(self) -> None:
        rho = self._positives / self._packets if self._packets else 0.0
        self._rho_bar = ema_update(self._rho_bar, rho, self.config.alpha)
        state = WindowState(
            index=self._current,
            packets=self._packets,
            positives=self._positives,
            rho=rho,
            rho_bar=self._rho_bar,
        )
        self.windows.append(state)
        if should_alert(state, self.config):
            rate = state.rho_bar if self.config.smoothing else state.rho
            self._log.alerts.append(
                AlertRecord(
                    window_index=state.index,
                    edge_id=self.edge_id,
                    rate=rate,
                    smoothed=self.config.smoothing,
                    detections=tuple(self._detections),
                )
            )
        self._current += 1
        self._packets = 0
        self._positives = 0
        self._detections = []


def run_edge(
    trace: Trace,
    model,
    feature_config: FeatureConfig,
    detector_config: DetectorConfig,
    edge_id: str = "edge0",
) -> tuple[EdgeLog, list[WindowState], list[Prediction]]:
    """Run one edge detector over a whole trace."""
    detector = EdgeDetector(model, trace.duration, feature_config,
                            detector_config, edge_id=edge_id)
    for event in trace.events:
        detector.process(event)
    log = detector.finalize()
    return log, detector.windows, detector.predictions


# ---------------------------------------------------------------------------
# Serialization

WINDOW_CSV_HEADER = "l,packets,positives,rho,rho_bar,alert"


def write_window_csv(windows, config: DetectorConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(WINDOW_CSV_HEADER + "\n")
        for w in windows:
            fh.write(
                f"{w.index},{w.packets},{w.positives},{w.rho!r},{w.rho_bar!r},"
                f"{int(should_alert(w, config))}\n"
            )


def write_alert_log(alerts, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for alert in alerts:
            fh.write(
                json.dumps(
                    {
                        "window": alert.window_index,
                        "edge": alert.edge_id,
                        "rate": alert.rate,
                        "smoothed": alert.smoothed,
                        "detections": [
                            {"ts": d.ts, "src": d.src_node, "confidence": d.confidence}
                            for d in alert.detections
                        ],
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )


def write_edge_log(log: EdgeLog, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "edge": log.edge_id,
                "counters": {k: log.counters[k] for k in sorted(log.counters)},
                "events_seen": log.events_seen,
                "events_skipped": log.events_skipped,
                "alerts": len(log.alerts),
            },
            fh,
            separators=(",", ":"),
        )
        fh.write("\n")


def read_edge_log(path) -> EdgeLog:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    log = EdgeLog(edge_id=obj["edge"])
    log.counters = dict(obj["counters"])
    log.events_seen = obj.get("events_seen", 0)
    log.events_skipped = obj.get("events_skipped", 0)
    return log


def write_predictions_csv(predictions, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("ts,src_node,pred,prob,label\n")
        for p in predictions:
            label = p.true_label if p.true_label is not None else -1
            fh.write(f"{p.ts!r},{p.src_node},{p.label},{p.prob!r},{label}\n")


def read_predictions_csv(path) -> list[Prediction]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "ts,src_node,pred,prob,label":
            raise DetectorError(f"unexpected predictions header: {header}")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            ts, src, pred, prob, label = line.split(",")
            true_label = int(label)
            out.append(
                Prediction(ts=float(ts), src_node=src, label=int(pred),
                           prob=float(prob),
                           true_label=None if true_label < 0 else true_label)
            )
    return out
