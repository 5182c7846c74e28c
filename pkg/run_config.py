#!/usr/bin/env python3
"""
Run Configuration
Resolved settings for one CLI invocation: defaults, then a JSON config file, then flags
"""
import json
from dataclasses import asdict, dataclass, field, fields
from typing import Any, Dict, List, Optional

from account_records import FEATURE_SETS, Scheme
from model_pipeline import ALGORITHMS, HyperParams, hyperparams_from_dict, parse_algorithms

DEFAULT_SEED = 42
DEFAULT_PER_CLASS = 700

HYPERPARAM_KEYS = tuple(f.name for f in fields(HyperParams))


@dataclass
class RunConfig:
    command: str = ''
    seed: int = DEFAULT_SEED
    per_class: int = DEFAULT_PER_CLASS
    accounts: Optional[str] = None
    labels: Optional[str] = None
    keywords: Optional[str] = None
    features: Optional[str] = None
    model: Optional[str] = None
    out: Optional[str] = None
    scheme: str = '2'
    schemes: str = '2,4'
    algorithm: str = 'rf'
    algorithms: str = 'all'
    feature_set: str = 'all'
    test_fraction: float = 0.25
    folds: Optional[int] = None
    top_k: int = 5
    hyperparams: HyperParams = field(default_factory=HyperParams)

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.per_class < 1:
            raise ValueError(f"per_class must be >= 1, got {self.per_class}")
        if self.feature_set not in FEATURE_SETS:
            raise ValueError(f"unknown feature set '{self.feature_set}' (expected one of: {', '.join(FEATURE_SETS)})")
        if not 0.0 < self.test_fraction < 1.0:
            raise ValueError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if self.folds is not None and self.folds < 2:
            raise ValueError(f"folds must be >= 2, got {self.folds}")
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")
        Scheme.parse(self.scheme)
        self.scheme_list()
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm '{self.algorithm}' (expected one of: {', '.join(ALGORITHMS)})")
        parse_algorithms(self.algorithms)

    def scheme_list(self) -> List[Scheme]:
        parsed = [Scheme.parse(s) for s in str(self.schemes).split(',') if s.strip()]
        if not parsed:
            raise ValueError("no schemes given")
        return [s for s in Scheme if s in parsed]

    def with_overrides(self, overrides: Dict[str, Any]) -> 'RunConfig':
        """Apply non-None values; hyperparameter names update `hyperparams`"""
        data = self.to_dict()
        for key, value in overrides.items():
            if value is None:
                continue
            if key in HYPERPARAM_KEYS:
                data['hyperparams'][key] = value
            else:
                data[key] = value
        return run_config_from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def run_config_from_dict(config_dict: Dict[str, Any]) -> RunConfig:
    """Create a RunConfig from a dictionary, falling back to defaults"""
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(config_dict) - known)
    if unknown:
        raise ValueError(f"unknown config key(s): {', '.join(unknown)}")
    values = {k: v for k, v in config_dict.items() if k != 'hyperparams'}
    hyper = config_dict.get('hyperparams') or {}
    if not isinstance(hyper, dict):
        raise ValueError("'hyperparams' must be a JSON object")
    return RunConfig(hyperparams=hyperparams_from_dict(hyper), **values)


def load_run_config(path: str) -> RunConfig:
    with open(path, 'r', encoding='utf-8') as f:
        try:
            config_data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"invalid config JSON in {path} (line {e.lineno}: {e.msg})") from None
    if not isinstance(config_data, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return run_config_from_dict(config_data)
