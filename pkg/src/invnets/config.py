"""Experiment configuration: TOML ingestion and domain validation.

Configs are nested tables; every field is checked against its documented
domain and violations raise ConfigError naming the field and the bound.
"""

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python < 3.11
    import tomli as _toml

from invnets.errors import ConfigError

EXPERIMENT_NAMES = (
    "ir-simulate",
    "ir-invert",
    "acoustic-bf",
    "acoustic-deconv",
    "lista-vs-ista",
    "transform-denoise",
    "pinn-ode",
    "pinn-pde",
)

_REQUIRED = object()


def load_config(path):
    try:
        with open(path, "rb") as fh:
            return _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc


def _dig(cfg, dotted):
    cur = cfg
    for part in dotted.split("."):
        if not isinstance(cur, dict) or part not in cur:
            return _REQUIRED
        cur = cur[part]
    return cur


def take_number(cfg, dotted, default=_REQUIRED, lo=None, hi=None, integer=False):
    """Fetch a numeric field, enforcing [lo, hi]; bounds are inclusive."""
    val = _dig(cfg, dotted)
    if val is _REQUIRED:
        if default is _REQUIRED:
            raise ConfigError(f"missing required config field {dotted!r}")
        return default
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"field {dotted!r} must be a number, got {val!r}")
    if integer and int(val) != val:
        raise ConfigError(f"field {dotted!r} must be an integer, got {val!r}")
    if lo is not None and val < lo:
        raise ConfigError(f"field {dotted!r} must be >= {lo}, got {val!r}")
    if hi is not None and val > hi:
        raise ConfigError(f"field {dotted!r} must be <= {hi}, got {val!r}")
    return int(val) if integer else float(val)


def take_choice(cfg, dotted, choices, default=_REQUIRED):
    val = _dig(cfg, dotted)
    if val is _REQUIRED:
        if default is _REQUIRED:
            raise ConfigError(f"missing required config field {dotted!r}")
        return default
    if val not in choices:
        raise ConfigError(f"field {dotted!r} must be one of {sorted(choices)}, got {val!r}")
    return val


def take_bool(cfg, dotted, default=_REQUIRED):
    val = _dig(cfg, dotted)
    if val is _REQUIRED:
        if default is _REQUIRED:
            raise ConfigError(f"missing required config field {dotted!r}")
        return default
    if not isinstance(val, bool):
        raise ConfigError(f"field {dotted!r} must be a boolean, got {val!r}")
    return val


def take_list(cfg, dotted, default=_REQUIRED):
    val = _dig(cfg, dotted)
    if val is _REQUIRED:
        if default is _REQUIRED:
            raise ConfigError(f"missing required config field {dotted!r}")
        return default
    if not isinstance(val, list):
        raise ConfigError(f"field {dotted!r} must be a list, got {val!r}")
    return val


def experiment_name(cfg):
    name = _dig(cfg, "experiment.name")
    if name is _REQUIRED:
        raise ConfigError("missing required config field 'experiment.name'")
    if name not in EXPERIMENT_NAMES:
        raise ConfigError(
            f"unknown experiment {name!r}; valid names: {', '.join(EXPERIMENT_NAMES)}"
        )
    return name


def experiment_seed(cfg, override=None):
    if override is not None:
        return int(override)
    return take_number(cfg, "experiment.seed", integer=True, lo=0)
