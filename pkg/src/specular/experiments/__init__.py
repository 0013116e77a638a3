from .config import SUITES, ConfigError, ExperimentConfig, load_config, parse_config
from .duhamel import PicardReport, duhamel_evaluate, picard_sweep, transport_field
from .report import CheckRow, ExperimentReport, FittedConstant
from .seminorm import SeminormEstimate, estimate_seminorm
from .suites import SUITE_RUNNERS, run_suite

__all__ = [
    "CheckRow",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "FittedConstant",
    "PicardReport",
    "SUITES",
    "SUITE_RUNNERS",
    "SeminormEstimate",
    "duhamel_evaluate",
    "estimate_seminorm",
    "load_config",
    "parse_config",
    "picard_sweep",
    "run_suite",
    "transport_field",
]
