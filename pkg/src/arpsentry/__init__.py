"""Multi-layered ARP spoofing detection: traces, features, classifiers,
edge alerting, cluster mitigation, simulation, and evaluation."""

__version__ = "0.1.0"

from .trace import ArpEvent, Trace, read_trace, write_trace  # noqa: F401
from .features import FeatureConfig, FeatureVector, featurize  # noqa: F401
from .models import Ensemble, TrainConfig, load_model, save_model  # noqa: F401
from .detector import DetectorConfig, run_edge  # noqa: F401
from .aggregator import AggregatorConfig, aggregate, decide_mitigation  # noqa: F401
from .simulate import SimConfig, split_trace  # noqa: F401
from .metrics import score, accuracy_over_time  # noqa: F401
