"""
Flat ``key = value`` run configuration.
"""

from dataclasses import dataclass, field

from .simulate import SimConfig
from .solvers import SolverConfig

MODES = {"gray3": ((0, 45, 90), 1), "color4": ((0, 45, 90, 135), 3)}

PRESETS = {
    "simulation": SolverConfig.fista_simulation,
    "real": SolverConfig.fista_real,
    "psf-mismatch": SolverConfig.fista_psf_mismatch,
}


def parse_value(text):
    t = text.strip()
    if len(t) >= 2 and t[0] == t[-1] and t[0] in "\"'":
        return t[1:-1]
    low = t.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for conv in (int, float):
        try:
            return conv(t)
        except ValueError:
            pass
    return t


def read_config(path):
    """Parse a flat config file into a dict.  Keys use '_' or '-' interchangeably."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if not key:
                raise ValueError(f"{path}:{lineno}: empty key")
            out[key] = parse_value(value)
    return out


@dataclass
class RunConfig:
    mode: str = "gray3"
    paths: dict = field(default_factory=dict)
    solver: SolverConfig = field(default_factory=SolverConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    repeats: int = 4

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {sorted(MODES)}, got {self.mode!r}")

    @property
    def angles(self):
        return MODES[self.mode][0]

    @property
    def channels(self):
        return MODES[self.mode][1]


def solver_config(opts):
    """Build a SolverConfig from merged options (preset first, then overrides)."""
    kind = str(opts.get("solver") or "fista").lower()
    if kind == "admm":
        base = SolverConfig.admm_simulation
    else:
        preset = str(opts.get("preset") or "simulation")
        if preset not in PRESETS:
            raise ValueError(f"preset must be one of {sorted(PRESETS)}, got {preset!r}")
        base = PRESETS[preset]
    names = {
        "iters": "iterations",
        "lambda": "lam",
        "lambda_w": "lambda_w",
        "c": "step_factor",
        "rho": "rho",
        "cg_tol": "cg_tol",
        "cg_iters": "cg_max_iter",
        "log_every": "log_every",
        "lipschitz_iters": "lipschitz_iters",
        "seed": "lipschitz_seed",
    }
    kw = {}
    for key, attr in names.items():
        if opts.get(key) is not None:
            kw[attr] = opts[key]
    for attr in ("iterations", "cg_max_iter", "log_every", "lipschitz_iters", "lipschitz_seed"):
        if attr in kw:
            kw[attr] = int(kw[attr])
    for attr in ("lam", "lambda_w", "step_factor", "rho", "cg_tol"):
        if attr in kw:
            kw[attr] = float(kw[attr])
    return base(**kw)
