"""
Experiment configuration
JSON config documents, .env loading and worker-count resolution
"""

import json
import os
from dataclasses import dataclass, field, fields

import psutil
from dotenv import load_dotenv

from model.errors import ConfigError

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
load_dotenv(os.path.join(ROOT, '.env'))

KNOWN_ALLOCATORS = ('myopic', 'myopic_plus', 'random', 'greedy_exact', 'greedy_mc', 'tirm')
GENERATOR_TYPES = ('weighted_cascade', 'topical')
CTP_MODES = ('uniform', 'host_topics')


def default_output_dir():
    return os.getenv('ADALLOC_OUTPUT_DIR', os.path.join(ROOT, 'results'))


def resolve_workers(requested=None):
    """ADALLOC_WORKERS wins, then the requested count, then physical cores (or 1)"""
    override = os.getenv('ADALLOC_WORKERS')
    if override:
        try:
            value = int(override)
        except ValueError:
            raise ConfigError(f"ADALLOC_WORKERS must be an integer, got '{override}'")
        if value < 1:
            raise ConfigError("ADALLOC_WORKERS must be at least 1")
        return value
    if requested:
        return int(requested)
    return psutil.cpu_count(logical=False) or 1


@dataclass
class ExperimentConfig:
    graph: str = None
    campaign: str = None
    attention: str = None
    generator: dict = None
    allocators: list = field(default_factory=lambda: ['myopic', 'myopic_plus', 'tirm'])
    epsilon: float = 0.1
    ell: float = 1.0
    lambdas: list = field(default_factory=lambda: [0.0])
    kappas: list = field(default_factory=lambda: [1])
    eval_runs: int = 10000
    seed: int = 0
    output_dir: str = None
    workers: int = None
    pilot_size: int = 2000
    max_theta: int = None
    mc_runs_greedy: int = 1000
    log_steps: bool = False
    ctp_mode: str = 'uniform'

    def __post_init__(self):
        if self.generator is not None and self.graph is not None:
            raise ConfigError("config names both a generator and a graph file")
        if self.generator is None and self.graph is None:
            raise ConfigError("config needs either a generator or a graph file")
        if self.graph is not None and self.campaign is None:
            raise ConfigError("a graph file needs a campaign file")
        if self.generator is not None:
            kind = self.generator.get('type')
            if kind not in GENERATOR_TYPES:
                raise ConfigError(f"generator type must be one of {GENERATOR_TYPES}, got {kind!r}")
            for key in ('n', 'm', 'h'):
                if key not in self.generator:
                    raise ConfigError(f"generator needs '{key}'")
        unknown = [a for a in self.allocators if a not in KNOWN_ALLOCATORS]
        if unknown:
            raise ConfigError(f"unknown allocators: {', '.join(unknown)}")
        if not self.allocators:
            raise ConfigError("at least one allocator is required")
        if self.eval_runs < 1:
            raise ConfigError("eval_runs must be at least 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must be in (0, 1)")
        if not self.ell > 0:
            raise ConfigError("ell must be positive")
        if any(lam < 0 for lam in self.lambdas) or not self.lambdas:
            raise ConfigError("lambdas must be a non-empty list of non-negative values")
        if self.attention is None and (not self.kappas or any(int(k) < 0 for k in self.kappas)):
            raise ConfigError("kappas must be a non-empty list of non-negative integers")
        if self.pilot_size < 1:
            raise ConfigError("pilot_size must be at least 1")
        if self.max_theta is not None and self.max_theta < 1:
            raise ConfigError("max_theta must be positive")
        if self.mc_runs_greedy < 1:
            raise ConfigError("mc_runs_greedy must be at least 1")
        if self.ctp_mode not in CTP_MODES:
            raise ConfigError(f"ctp_mode must be one of {CTP_MODES}")
        if self.output_dir is None:
            self.output_dir = default_output_dir()
        self.workers = resolve_workers(self.workers)

    @classmethod
    def from_dict(cls, data):
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e))

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_config(path):
    """Parse a JSON config document into an ExperimentConfig"""
    try:
        with open(path) as handle:
            data = json.load(handle)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    config = ExperimentConfig.from_dict(data)
    base = os.path.dirname(os.path.abspath(path))
    for key in ('graph', 'campaign', 'attention'):
        value = getattr(config, key)
        if value is not None and not os.path.isabs(value):
            setattr(config, key, os.path.join(base, value))
    return config
