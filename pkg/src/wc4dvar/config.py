"""Experiment configuration.

Configs are INI files (``configparser`` grammar): ``[section]`` headers
followed by ``key = value`` lines; ``#`` and ``;`` start comments.  Every
key has a default, so a config only lists what it changes.  Sections and
keys are those of the dataclasses below, e.g.::

    [model]
    kind = lorenz96
    n = 80
    steps = 150
    dt = 0.025

    [precond]
    methods = none, deterministic, revd, nystrom, ritzit
    k = 5, 10, 15
    l = 5
    sketch_seeds = 0:50

List values are comma separated; ``a:b`` in ``sketch_seeds`` expands to
``range(a, b)``.  Booleans accept yes/no, true/false, on/off, 1/0.
Overrides use ``section.key=value``.
"""
import configparser
import dataclasses
import io
from dataclasses import dataclass, field
from importlib import resources

from .errors import ConfigError

MODEL_KINDS = ("advection", "lorenz96", "identity")
PRECOND_METHODS = ("none", "deterministic", "lanczos", "revd", "nystrom", "ritzit")


@dataclass
class ModelSection:
    kind: str = "advection"
    n: int = 40
    steps: int = 50
    dt: float = 0.02
    forcing: float = 8.0
    spinup_steps: int = 500
    init_perturbation: float = 0.01
    bump_amplitude: float = 6.0
    bump_center: float = 0.5
    bump_width: float = 0.1


@dataclass
class CovarianceSection:
    background_kind: str = "soar"
    soar_distance: str = "chordal"
    sigma_b: float = 0.1
    length_b: float = 10.0
    model_error_kind: str = "laplacian"
    sigma_q: float = 0.05
    length_q: float = 10.0
    sigma_o: float = 0.05
    truth_model_error: bool = True


@dataclass
class ObservationSection:
    space_stride: int = 4
    time_stride: int = 5
    enabled: bool = True


@dataclass
class SolverSection:
    max_iter: int = 100
    rel_tol: float = 1e-6
    first_loop_max_iter: int = 100
    reorthogonalize: bool = False
    precond_inner_loop: int = 2


@dataclass
class PrecondSection:
    methods: list = field(default_factory=lambda: ["none", "revd", "nystrom", "ritzit"])
    k: list = field(default_factory=lambda: [15])
    l: list = field(default_factory=lambda: [5])
    sketch_seeds: list = field(default_factory=lambda: [0])


@dataclass
class SeedSection:
    truth: int = 1
    background: int = 2
    observations: int = 3
    model_error: int = 4


@dataclass
class OutputSection:
    dense_cap: int = 4096
    spectrum_method: str = "dense"


SECTIONS = {
    "model": ModelSection,
    "covariance": CovarianceSection,
    "observations": ObservationSection,
    "solver": SolverSection,
    "precond": PrecondSection,
    "seeds": SeedSection,
    "output": OutputSection,
}


@dataclass
class ExperimentConfig:
    model: ModelSection = field(default_factory=ModelSection)
    covariance: CovarianceSection = field(default_factory=CovarianceSection)
    observations: ObservationSection = field(default_factory=ObservationSection)
    solver: SolverSection = field(default_factory=SolverSection)
    precond: PrecondSection = field(default_factory=PrecondSection)
    seeds: SeedSection = field(default_factory=SeedSection)
    output: OutputSection = field(default_factory=OutputSection)

    def validate(self):
        m, c, o = self.model, self.covariance, self.observations
        if m.kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {m.kind!r}")
        if m.n < 4 or m.steps < 1 or not m.dt > 0:
            raise ConfigError("model needs n >= 4, steps >= 1 and dt > 0")
        if m.kind == "advection" and not 0 < m.dt * m.n <= 1:
            raise ConfigError(f"Courant number dt*n = {m.dt * m.n:g} outside (0, 1]")
        for name in ("sigma_b", "sigma_q", "sigma_o"):
            if not getattr(c, name) > 0:
                raise ConfigError(f"covariance.{name} must be positive")
        for kind in (c.background_kind, c.model_error_kind):
            if kind not in ("diagonal", "soar", "laplacian"):
                raise ConfigError(f"unknown covariance kind {kind!r}")
        if c.soar_distance not in ("chordal", "cyclic", "linear"):
            raise ConfigError(f"unknown covariance.soar_distance {c.soar_distance!r}")
        if not 1 <= o.space_stride <= m.n or not 1 <= o.time_stride <= m.steps:
            raise ConfigError("observation strides inconsistent with the grid")
        s, p = self.solver, self.precond
        if s.max_iter < 0 or s.first_loop_max_iter < 0 or not s.rel_tol >= 0:
            raise ConfigError("solver limits must be non-negative")
        if s.precond_inner_loop not in (1, 2):
            raise ConfigError("solver.precond_inner_loop must be 1 or 2")
        bad = [x for x in p.methods if x not in PRECOND_METHODS]
        if bad or not p.methods:
            raise ConfigError(f"unknown preconditioner methods {bad}; expected {PRECOND_METHODS}")
        if s.precond_inner_loop == 1 and {"deterministic", "lanczos"} & set(p.methods):
            raise ConfigError("previous-loop preconditioners need precond_inner_loop = 2; "
                              "there is no earlier inner loop to take them from")
        if any(k < 0 for k in p.k) or any(l < 0 for l in p.l) or not p.sketch_seeds:
            raise ConfigError("precond needs k >= 0, l >= 0 and at least one sketch seed")
        n_A = m.n * (m.steps + 1)
        if any(k + l > n_A for k in p.k for l in p.l):
            raise ConfigError(f"k + l exceeds the Hessian dimension {n_A}")
        if self.output.spectrum_method not in ("dense", "lowrank"):
            raise ConfigError("output.spectrum_method must be dense or lowrank")
        return self

    @property
    def hessian_size(self):
        return self.model.n * (self.model.steps + 1)

    def to_ini(self):
        parser = configparser.ConfigParser()
        for name in SECTIONS:
            section = getattr(self, name)
            parser[name] = {f.name: _format(getattr(section, f.name))
                            for f in dataclasses.fields(section)}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()


def _format(value):
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, list):
        return ", ".join(str(v) for v in value)
    return repr(value) if isinstance(value, float) else str(value)


def _parse_seeds(text):
    seeds = []
    for part in _split(text):
        if ":" in part:
            lo, hi = part.split(":")
            seeds.extend(range(int(lo), int(hi)))
        else:
            seeds.append(int(part))
    return seeds


def _split(text):
    return [p.strip() for p in text.split(",") if p.strip()]


def _coerce(section_name, f, text):
    default = f.default_factory() if f.default is dataclasses.MISSING else f.default
    try:
        if isinstance(default, bool):
            lowered = text.strip().lower()
            if lowered in ("yes", "true", "on", "1"):
                return True
            if lowered in ("no", "false", "off", "0"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
        if isinstance(default, list):
            if f.name == "sketch_seeds":
                return _parse_seeds(text)
            if f.name in ("k", "l"):
                return [int(v) for v in _split(text)]
            return [v.lower() for v in _split(text)]
        return text.strip().lower()
    except ValueError as exc:
        raise ConfigError(f"bad value {text!r} for {section_name}.{f.name}") from exc


def _apply(config, section_name, key, text):
    if section_name not in SECTIONS:
        raise ConfigError(f"unknown config section [{section_name}]")
    section = getattr(config, section_name)
    fields = {f.name: f for f in dataclasses.fields(section)}
    if key not in fields:
        raise ConfigError(f"unknown key {key!r} in [{section_name}]")
    setattr(section, key, _coerce(section_name, fields[key], text))


def parse_config(text, overrides=()):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    config = ExperimentConfig()
    for section_name in parser.sections():
        for key, value in parser[section_name].items():
            _apply(config, section_name, key, value)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        lhs, value = item.split("=", 1)
        section_name, key = lhs.strip().split(".", 1)
        _apply(config, section_name, key.strip(), value)
    return config.validate()


def load_config(path, overrides=()):
    """Read a config file; ``path`` may also name a bundled config (e.g. ``advection.cfg``)."""
    try:
        with open(path) as fh:
            text = fh.read()
    except FileNotFoundError:
        bundled = resources.files("wc4dvar") / "configs" / str(path)
        if not bundled.is_file():
            raise ConfigError(f"config file {path} not found") from None
        text = bundled.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def bundled_config(name, overrides=()):
    text = (resources.files("wc4dvar") / "configs" / name).read_text()
    return parse_config(text, overrides)
