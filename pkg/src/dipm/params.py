"""Run parameters and the flat ``key = value`` configuration format."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .heat1d import PROFILE_KINDS

REGIMES = ("supercritical", "subcritical")
MODES = ("decomposed", "full")
PERTURBATIONS = ("random", "bump", "none")
_S_TOL = 1e-12


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


@dataclass(frozen=True)
class ParamSet:
    alpha: float = 1.5
    s: float | None = None
    regime: str | None = None
    epsilon: float = 1e-3
    q: float = 1.0
    p: float = 4.0
    n1: int = 128
    n2: int = 128
    L1: float = 2 * math.pi
    L2: float = 2 * math.pi
    cfl: float = 0.5
    dealias: float = 2 / 3
    dt: float = 1e-2
    t_end: float = 1.0
    sample_dt: float = 0.1
    profile: str = "gaussian"
    profile_width: float = 1.0
    profile_amplitude: float = 1.0
    perturbation: str = "random"
    perturbation_width: float = 1.0
    seed: int = 0
    mode: str = "decomposed"
    output_dir: str | None = None
    checkpoint_dt: float = 0.0
    energy_probe_dt: float = 1e-3
    threshold: float | None = None
    eps1: float | None = None
    gronwall_fit_fraction: float = 0.1

    def __post_init__(self):
        # fill regime-dependent defaults before validating
        if self.s is None:
            object.__setattr__(self, "s", 2 - self.alpha if self.alpha < 1 else 1.0)
        if self.regime is None:
            object.__setattr__(self, "regime", "supercritical" if self.alpha < 1 else "subcritical")
        self.validate()

    def validate(self):
        a = self.alpha
        if not 0 < a < 2:
            raise ConfigError("alpha", f"alpha out of (0,2): {a}")
        if self.regime not in REGIMES:
            raise ConfigError("regime", f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not 2 <= self.p < math.inf:
            raise ConfigError("p", f"p must lie in [2, inf), got {self.p}")
        if self.regime == "supercritical":
            if not a < 1:
                raise ConfigError("regime", f"supercritical regime needs alpha < 1, got {a}")
            if abs(self.s - (2 - a)) > _S_TOL:
                raise ConfigError("s", f"supercritical regime needs s = 2 - alpha = {2 - a}, got {self.s}")
            if not 1 <= self.q < 1 / a:
                raise ConfigError("q", f"q must lie in [1, 1/alpha) = [1, {1 / a}), got {self.q}")
        else:
            if not a >= 1:
                raise ConfigError("regime", f"subcritical regime needs alpha >= 1, got {a}")
            if not self.s >= 1:
                raise ConfigError("s", f"subcritical regime needs s >= 1, got {self.s}")
            q_hi = 1 / (a - 1) if a > 1 else math.inf
            if not (1 <= self.q < q_hi and self.q <= self.p):
                raise ConfigError("q", f"q must lie in [1, {q_hi}) and q <= p, got {self.q}")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon", f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 < self.cfl < 1:
            raise ConfigError("cfl", f"cfl must lie in (0, 1), got {self.cfl}")
        if not 0 < self.dealias <= 1:
            raise ConfigError("dealias", f"dealias must lie in (0, 1], got {self.dealias}")
        for key in ("dt", "t_end", "sample_dt", "profile_width", "perturbation_width",
                    "L1", "L2"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, f"{key} must be positive, got {getattr(self, key)}")
        for key in ("checkpoint_dt", "energy_probe_dt"):
            if not getattr(self, key) >= 0:
                raise ConfigError(key, f"{key} must be >= 0, got {getattr(self, key)}")
        for key in ("n1", "n2"):
            n = getattr(self, key)
            if n < 8 or n % 2:
                raise ConfigError(key, f"{key} must be an even integer >= 8, got {n}")
        if self.profile not in PROFILE_KINDS:
            raise ConfigError("profile", f"profile must be one of {PROFILE_KINDS}, got {self.profile!r}")
        if self.perturbation not in PERTURBATIONS:
            raise ConfigError("perturbation", f"perturbation must be one of {PERTURBATIONS}")
        if self.mode not in MODES:
            raise ConfigError("mode", f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.gronwall_fit_fraction <= 1:
            raise ConfigError("gronwall_fit_fraction", "must lie in (0, 1]")

    @property
    def supercritical(self) -> bool:
        return self.regime == "supercritical"

    def grid(self):
        from .spectral import Grid2D

        try:
            return Grid2D(self.n1, self.n2, self.L1, self.L2)
        except ValueError as exc:
            raise ConfigError("n1/n2", str(exc)) from None

    def replace(self, **changes) -> "ParamSet":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- config files

_FIELD_TYPES = {f.name: f.type for f in fields(ParamSet)}


def _convert(key, raw, typ):
    raw = raw.strip()
    try:
        if "int" in typ:
            return int(raw)
        if "float" in typ:
            if "None" in typ and raw.lower() in ("", "none"):
                return None
            return float(raw)
        if "None" in typ and raw.lower() in ("", "none"):
            return None
        return raw
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r}") from None


def parse_config_text(text: str, extra_keys=()) -> tuple[dict, dict]:
    """Split config text into ``(plain entries, sweep lists)``.

    Lines are ``key = value``; ``#`` starts a comment.  Keys prefixed with
    ``sweep.`` hold comma-separated value lists.  Keys outside the
    :class:`ParamSet` schema must be listed in ``extra_keys``.
    """
    plain, sweep = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(None, f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        target = plain
        if key.startswith("sweep."):
            key = key[len("sweep."):]
            target = sweep
        if key not in _FIELD_TYPES and key not in extra_keys:
            raise ConfigError(key, f"unknown key {key!r}")
        if key in target:
            raise ConfigError(key, f"duplicate key {key!r}")
        target[key] = value
    return plain, sweep


def convert_values(entries: dict) -> dict:
    out = {}
    for key, raw in entries.items():
        typ = _FIELD_TYPES.get(key)
        out[key] = _convert(key, raw, str(typ)) if typ is not None else raw.strip()
    return out


def params_from_dict(values: dict) -> ParamSet:
    known = {k: v for k, v in values.items() if k in _FIELD_TYPES}
    return ParamSet(**known)


def load_config(path, extra_keys=()) -> tuple[dict, dict]:
    """Read a config file into converted ``(plain, sweep)`` dictionaries."""
    text = Path(path).read_text()
    plain, sweep = parse_config_text(text, extra_keys)
    sweep_vals = {
        k: [_convert(k, item, str(_FIELD_TYPES.get(k, "str"))) for item in v.split(",")]
        for k, v in sweep.items()
    }
    return convert_values(plain), sweep_vals


def format_config(values: dict) -> str:
    lines = []
    for key, val in values.items():
        if val is None:
            continue
        if isinstance(val, float):
            val = f"{val:.17g}"
        lines.append(f"{key} = {val}")
    return "\n".join(lines) + "\n"
