"""Experiment configuration: schema, YAML loading and named presets."""
import copy
from dataclasses import asdict, dataclass, field, fields

import yaml

from .. import datagen

EXPERIMENTS = ("mse_sweep", "scaling", "support_recovery", "phase_transition",
               "noise_suite", "certify")
METHODS = ("gard", "m_est", "romp", "admm")
INLIER_KINDS = ("none", "gaussian", "snr", "alpha_stable", "two_gaussian")

METHOD_PARAM_KEYS = {
    "gard": {"epsilon0", "engine", "max_outliers"},
    "m_est": {"tuning_c", "max_iters", "param_tol", "fixed_scale"},
    "romp": {"epsilon0", "tuning_c", "max_iters", "param_tol", "fixed_scale"},
    "admm": {"lam", "rho0", "rho_growth", "rho_cap", "stop_tol", "max_iters"},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "mse_sweep"
    methods: list = field(default_factory=lambda: list(METHODS))
    n: int = 200
    m: int = 20
    fractions: list = field(default_factory=lambda: [0.05, 0.10, 0.15, 0.20, 0.25])
    trials: int = 20
    master_seed: int = 0
    method_params: dict = field(default_factory=dict)
    output_path: str = "bench_out/result.csv"
    inlier: dict = field(default_factory=lambda: {"kind": "gaussian", "sigma": 1.0})
    outlier_magnitude: float = 25.0
    outlier_sign: str = "random_pm"
    y0_max: float | None = None
    n_values: list = field(default_factory=lambda: [300, 600, 1200])
    m_values: list = field(default_factory=lambda: [10, 20, 30])
    tests: list = field(default_factory=lambda: ["A", "B", "C", "D"])
    success_tol: float = 0.03
    theory_max_n: int = 40
    theory_max_s: int = 5
    workers: int = 1

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        bad = [mth for mth in self.methods if mth not in METHODS]
        if bad or not self.methods:
            raise ConfigError(f"unknown or empty methods {bad}; allowed {METHODS}")
        if len(set(self.methods)) != len(self.methods):
            raise ConfigError("duplicate methods")
        for mth, params in self.method_params.items():
            if mth not in METHODS:
                raise ConfigError(f"method_params for unknown method {mth!r}")
            extra = set(params) - METHOD_PARAM_KEYS[mth]
            if extra:
                raise ConfigError(f"unknown {mth} parameters {sorted(extra)}")
        if not (isinstance(self.n, int) and isinstance(self.m, int)) or self.m < 1 or self.n <= self.m:
            raise ConfigError(f"need integers n > m >= 1, got n={self.n}, m={self.m}")
        if not self.fractions or any(not 0.0 <= f < 0.5 for f in self.fractions):
            raise ConfigError("fractions must be non-empty and lie in [0, 0.5)")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not isinstance(self.master_seed, int) or self.master_seed < 0 or self.master_seed >= 2 ** 64:
            raise ConfigError("master_seed must be a 64-bit non-negative integer")
        inlier_model(self.inlier)
        if self.outlier_sign not in ("random_pm", "fixed"):
            raise ConfigError("outlier_sign must be random_pm or fixed")
        if any(t not in ("A", "B", "C", "D") for t in self.tests):
            raise ConfigError("tests must be drawn from A, B, C, D")
        for n, m in self.grid_shapes():
            if n <= m:
                raise ConfigError(f"grid point n={n}, m={m} needs n > m")
            worst = max(round(f * n) for f in self.fractions)
            if worst and worst >= n - m:
                raise ConfigError(f"fraction grid gives {worst} outliers at n={n}, m={m}; need < n - m")
        return self

    def grid_shapes(self):
        """(n, m) pairs visited by the experiment."""
        if self.experiment == "scaling":
            return [(n, self.m) for n in self.n_values]
        if self.experiment == "phase_transition":
            return [(self.n, m) for m in self.m_values]
        return [(self.n, self.m)]

    def to_dict(self):
        return asdict(self)


def inlier_model(spec):
    """Map an ``inlier`` config block to a datagen noise model (None for clean data)."""
    kind = spec.get("kind") if isinstance(spec, dict) else None
    if kind not in INLIER_KINDS:
        raise ConfigError(f"inlier.kind must be one of {INLIER_KINDS}")
    params = {k: v for k, v in spec.items() if k != "kind"}
    cls = {"gaussian": datagen.GaussianInlier, "snr": datagen.SnrGaussianInlier,
           "alpha_stable": datagen.AlphaStableInlier,
           "two_gaussian": datagen.TwoGaussianMixInlier}.get(kind)
    if cls is None:
        if params:
            raise ConfigError("inlier kind 'none' takes no parameters")
        return None
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad inlier parameters for {kind}: {exc}") from exc


_FIELD_NAMES = None


def from_dict(data, base=None):
    """Build a config from a mapping, on top of ``base``. Unknown keys are errors."""
    global _FIELD_NAMES
    if _FIELD_NAMES is None:
        _FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping")
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    cfg = copy.deepcopy(base) if base is not None else ExperimentConfig()
    for key, value in data.items():
        if key == "method_params" and isinstance(value, dict):
            merged = copy.deepcopy(cfg.method_params)
            for mth, params in value.items():
                if not isinstance(params, dict):
                    raise ConfigError(f"method_params.{mth} must be a mapping")
                merged.setdefault(mth, {}).update(params)
            value = merged
        setattr(cfg, key, value)
    return cfg.validate()


def load_config(path, base=None):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return from_dict(data, base)


def _preset(**kw):
    return kw


# Full-size settings (no suffix), desk-scale (-desk) and CI-scale (-ci, n <= 120).
PRESETS = {
    "mse-m50": _preset(experiment="mse_sweep", n=600, m=50, trials=100,
                       fractions=[0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45]),
    "mse-m100": _preset(experiment="mse_sweep", n=600, m=100, trials=100,
                        fractions=[0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45]),
    "mse-m170": _preset(experiment="mse_sweep", n=600, m=170, trials=100,
                        fractions=[0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40]),
    "mse-desk": _preset(experiment="mse_sweep", n=200, m=20, trials=20,
                        fractions=[0.05, 0.10, 0.15, 0.20, 0.25]),
    "mse-ci": _preset(experiment="mse_sweep", n=120, m=10, trials=10,
                      fractions=[0.05, 0.10, 0.15, 0.20, 0.25]),
    "tiny": _preset(experiment="mse_sweep", n=60, m=5, trials=3, fractions=[1 / 60]),
    "scaling-full": _preset(experiment="scaling", m=100, n=600, trials=100, fractions=[0.10],
                            methods=["gard", "m_est"], n_values=[600, 1200, 2400, 4800]),
    "scaling-desk": _preset(experiment="scaling", m=100, n=300, trials=5, fractions=[0.10],
                            n_values=[300, 600, 1200]),
    "scaling-ci": _preset(experiment="scaling", m=10, n=60, trials=5, fractions=[0.10],
                          n_values=[60, 90, 120]),
    "support-clean": _preset(experiment="support_recovery", n=600, m=100, trials=10000,
                             methods=["gard"], inlier={"kind": "none"},
                             fractions=[0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20]),
    "support-clean-ci": _preset(experiment="support_recovery", n=30, m=3, trials=20,
                                methods=["gard"], inlier={"kind": "none"},
                                fractions=[0.0, 1 / 30, 2 / 30, 3 / 30]),
    "support-noisy": _preset(experiment="support_recovery", n=600, m=100, trials=10000,
                             methods=["gard"], outlier_magnitude=150.0, y0_max=175.0,
                             inlier={"kind": "gaussian", "sigma": 28.0 / 600 ** 0.5, "truncate_to": 28.0},
                             fractions=[0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20]),
    "support-noisy-ci": _preset(experiment="support_recovery", n=30, m=3, trials=20,
                                methods=["gard"], outlier_magnitude=150.0, y0_max=175.0,
                                inlier={"kind": "gaussian", "sigma": 1.0, "truncate_to": 5.0},
                                fractions=[0.0, 1 / 30, 2 / 30]),
    "support-snr": _preset(experiment="support_recovery", n=600, m=100, trials=10000,
                           methods=["gard"], outlier_magnitude=150.0, y0_max=175.0,
                           inlier={"kind": "snr", "snr_db": 20.0},
                           fractions=[0.02, 0.04, 0.06, 0.08, 0.10, 0.12, 0.14, 0.16, 0.18, 0.20]),
    "phase-full": _preset(experiment="phase_transition", n=600, trials=200,
                          methods=["gard", "m_est"], m_values=[50, 100, 150, 200, 250, 300],
                          fractions=[round(0.025 * i, 3) for i in range(20)]),
    "phase-ci": _preset(experiment="phase_transition", n=120, trials=20,
                        methods=["gard", "m_est"], m_values=[5, 10, 20],
                        inlier={"kind": "gaussian", "sigma": 0.5},
                        fractions=[round(0.05 * i, 3) for i in range(10)]),
    "suite-full": _preset(experiment="noise_suite", n=600, m=100, trials=100),
    "suite-desk": _preset(experiment="noise_suite", n=200, m=20, trials=20),
    "suite-ci": _preset(experiment="noise_suite", n=120, m=10, trials=10),
    "certify-ci": _preset(experiment="certify", n=30, m=5, trials=20, methods=["gard"],
                          inlier={"kind": "none"}, fractions=[1 / 30, 2 / 30]),
}

SUBCOMMAND_EXPERIMENT = {
    "mse-sweep": "mse_sweep",
    "scaling": "scaling",
    "support": "support_recovery",
    "phase": "phase_transition",
    "noise-suite": "noise_suite",
    "certify": "certify",
}


def preset_config(name):
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return from_dict(PRESETS[name])
