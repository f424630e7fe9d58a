"""Experiment configuration: a small ``key=value`` format with ``[sections]``.

Example::

    N = 40
    L = 3
    family = ellipse:a=2,b=1

    [phantom]
    kind = coherent
    k = 10, 0

    [landweber]
    n_iter = 100

Blank lines and ``#`` comments are ignored.  Unknown sections or keys are
errors that name the offending line.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .curves import CurveFamily, Ellipse, Spiral, UnitCircle
from .errors import ConfigError
from .phantoms import CoherentState, TruncatedGaussian
from .reconstruction import LandweberConfig

__all__ = ["ExperimentConfig", "ConjugateSettings", "parse_config", "load_config", "parse_family",
           "family_descriptor", "with_op", "OPERATIONS"]

OPERATIONS = ("forward", "adjoint", "backproject", "fbp", "landweber",
              "conjugate-locus", "conjugate-chain", "compare")


@dataclass(frozen=True)
class ConjugateSettings:
    base: tuple = (0.0, 0.0)
    eta: float = 0.0
    mu: float = 1.0
    R: float = 3.0
    k_max: int = 4
    n_angles: int = 64
    t_max: float | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to rerun one experiment."""

    N: int = 40
    L: float = 3.0
    family: str = "circle"
    weight: float = 1.0
    n_quad: int | None = None
    seed: int = 0
    op: str | None = None
    phantom: TruncatedGaussian = field(default_factory=TruncatedGaussian)
    landweber: LandweberConfig = field(default_factory=LandweberConfig)
    conjugate: ConjugateSettings = field(default_factory=ConjugateSettings)
    input: str | None = None
    compare_a: str | None = None
    compare_b: str | None = None
    out_dir: str = "out"
    prefix: str = "result"

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def family_object(self) -> CurveFamily:
        return parse_family(self.family)

    def echo(self) -> dict:
        """Plain-dict view written to metadata; ``parse_config(to_text(echo))`` rebuilds it."""
        d = asdict(self)
        d["phantom"]["kind"] = "coherent" if isinstance(self.phantom, CoherentState) else "gaussian"
        d["h"] = self.h
        return d

    def to_text(self) -> str:
        """Render back into the config grammar."""
        lines = [f"N = {self.N}", f"L = {self.L!r}", f"family = {self.family}",
                 f"weight = {self.weight!r}", f"seed = {self.seed}"]
        if self.n_quad is not None:
            lines.append(f"n_quad = {self.n_quad}")
        if self.op is not None:
            lines.append(f"op = {self.op}")
        p = self.phantom
        lines += ["", "[phantom]",
                  f"kind = {'coherent' if isinstance(p, CoherentState) else 'gaussian'}",
                  f"center = {p.center[0]!r}, {p.center[1]!r}", f"sigma = {p.sigma!r}",
                  f"r_c = {p.r_c!r}"]
        if p.taper is not None:
            lines.append(f"taper = {p.taper!r}")
        if isinstance(p, CoherentState):
            lines.append(f"k = {p.k[0]!r}, {p.k[1]!r}")
        lw = self.landweber
        lines += ["", "[landweber]", f"n_iter = {lw.n_iter}", f"support_radius = {lw.support_radius!r}",
                  f"taper = {lw.taper!r}", f"chi_margin = {lw.chi_margin!r}",
                  f"record_residuals = {str(lw.record_residuals).lower()}", f"n_power = {lw.n_power}"]
        if lw.step is not None:
            lines.append(f"step = {lw.step!r}")
        if lw.norm_estimate is not None:
            lines.append(f"norm_estimate = {lw.norm_estimate!r}")
        c = self.conjugate
        lines += ["", "[conjugate]", f"base = {c.base[0]!r}, {c.base[1]!r}", f"eta = {c.eta!r}",
                  f"mu = {c.mu!r}", f"R = {c.R!r}", f"k_max = {c.k_max}", f"n_angles = {c.n_angles}"]
        if c.t_max is not None:
            lines.append(f"t_max = {c.t_max!r}")
        io_lines = []
        if self.input is not None:
            io_lines.append(f"grid = {self.input}")
        if self.compare_a is not None:
            io_lines.append(f"a = {self.compare_a}")
        if self.compare_b is not None:
            io_lines.append(f"b = {self.compare_b}")
        lines += ["", "[input]", *io_lines, "", "[output]", f"dir = {self.out_dir}", f"prefix = {self.prefix}"]
        return "\n".join(lines) + "\n"


def parse_family(desc: str) -> CurveFamily:
    """``circle``, ``ellipse:a=2,b=1`` or ``spiral:a=-0.25``; any may add ``orientation=-1``."""
    name, _, rest = desc.strip().partition(":")
    name = name.strip().lower()
    params = {}
    if rest.strip():
        for item in rest.split(","):
            k, eq, v = item.partition("=")
            if not eq:
                raise ConfigError(f"family parameter {item.strip()!r} is not key=value", key="family")
            try:
                params[k.strip()] = float(v)
            except ValueError:
                raise ConfigError(f"family parameter {k.strip()} has non-numeric value {v.strip()!r}",
                                  key="family") from None
    allowed = {"circle": {"orientation"}, "ellipse": {"a", "b", "orientation"},
               "spiral": {"a", "orientation"}}
    if name not in allowed:
        raise ConfigError(f"unknown family {name!r} (circle, ellipse, spiral)", key="family")
    extra = set(params) - allowed[name]
    if extra:
        raise ConfigError(f"family {name} does not take {sorted(extra)}", key="family")
    orient = params.pop("orientation", 1.0)
    if orient not in (1.0, -1.0):
        raise ConfigError("orientation must be +1 or -1", key="family")
    try:
        if name == "circle":
            return UnitCircle(int(orient))
        if name == "ellipse":
            return Ellipse(params.get("a", 2.0), params.get("b", 1.0), int(orient))
        return Spiral(params.get("a", -0.25), int(orient))
    except ValueError as exc:
        raise ConfigError(str(exc), key="family") from None


def family_descriptor(family: CurveFamily) -> str:
    """Inverse of :func:`parse_family` for the built-in families."""
    suffix = [] if family.orientation == 1 else ["orientation=-1"]
    if isinstance(family, UnitCircle):
        return "circle" + (":" + ",".join(suffix) if suffix else "")
    if isinstance(family, Ellipse):
        return "ellipse:" + ",".join([f"a={family.a!r}", f"b={family.b!r}", *suffix])
    if isinstance(family, Spiral):
        return "spiral:" + ",".join([f"a={family.a!r}", *suffix])
    raise ValueError(f"{type(family).__name__} has no config descriptor")


# (section, key) -> converter name
_KEYS = {
    "": {"N": "int", "L": "float", "family": "str", "weight": "float", "n_quad": "int",
         "seed": "int", "op": "str"},
    "phantom": {"kind": "str", "center": "pair", "sigma": "float", "r_c": "float",
                "taper": "float", "k": "pair"},
    "landweber": {"n_iter": "int", "step": "float", "support_radius": "float", "taper": "float",
                  "chi_margin": "float", "norm_estimate": "float", "record_residuals": "bool",
                  "n_power": "int", "R": "float"},
    "conjugate": {"base": "pair", "eta": "float", "mu": "float", "R": "float", "k_max": "int",
                  "n_angles": "int", "t_max": "float"},
    "input": {"grid": "str", "a": "str", "b": "str"},
    "output": {"dir": "str", "prefix": "str"},
}


def _convert(kind, raw, key, line):
    raw = raw.strip()
    try:
        if kind == "int":
            v = float(raw)
            if not v.is_integer():
                raise ValueError
            return int(v)
        if kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == "pair":
            parts = [float(p) for p in raw.replace(";", ",").split(",")]
            if len(parts) != 2 or not all(math.isfinite(p) for p in parts):
                raise ValueError
            return tuple(parts)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
    except ValueError:
        raise ConfigError(f"cannot read {raw!r} as {kind}", key=key, line=line) from None
    if not raw:
        raise ConfigError("empty value", key=key, line=line)
    return raw


def _tokens(text):
    section = ""
    seen = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            if not s.endswith("]"):
                raise ConfigError(f"malformed section header {s!r}", line=lineno)
            section = s[1:-1].strip().lower()
            if section not in _KEYS or section == "":
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        key, eq, val = s.partition("=")
        key = key.strip()
        if not eq or not key:
            raise ConfigError(f"expected key=value, got {s!r}", line=lineno)
        if key not in _KEYS[section]:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key at {where}", key=key, line=lineno)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key (first on line {seen[(section, key)]})", key=key, line=lineno)
        seen[(section, key)] = lineno
        yield section, key, _convert(_KEYS[section][key], val, key, lineno), lineno


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; missing keys take the documented defaults."""
    vals = {}
    lines = {}
    for section, key, value, lineno in _tokens(text):
        vals[(section, key)] = value
        lines[(section, key)] = lineno

    def get(section, key, default=None):
        return vals.get((section, key), default)

    def fail(section, key, msg):
        raise ConfigError(msg, key=key, line=lines.get((section, key)))

    N = get("", "N", 40)
    if N < 8:
        fail("", "N", f"N must be >= 8, got {N}")
    L = get("", "L", 3.0)
    if not L > 0:
        fail("", "L", f"L must be positive, got {L}")
    family = get("", "family", "circle")
    try:
        parse_family(family)
    except ConfigError as exc:
        raise ConfigError(str(exc).split("] ", 1)[-1], key="family", line=lines.get(("", "family"))) from None
    weight = get("", "weight", 1.0)
    n_quad = get("", "n_quad")
    if n_quad is not None and n_quad < 16:
        fail("", "n_quad", "n_quad must be >= 16")
    op = get("", "op")
    if op is not None and op not in OPERATIONS:
        fail("", "op", f"unknown operation {op!r}; expected one of {', '.join(OPERATIONS)}")

    kind = get("phantom", "kind", "gaussian").lower()
    if kind not in ("gaussian", "coherent"):
        fail("phantom", "kind", f"phantom kind must be gaussian or coherent, got {kind!r}")
    cls = CoherentState if kind == "coherent" else TruncatedGaussian
    pkw = {}
    for k in ("center", "sigma", "r_c", "taper", "k"):
        if ("phantom", k) in vals:
            if k == "k" and cls is not CoherentState:
                fail("phantom", k, "frequency k only applies to kind=coherent")
            pkw[k] = vals[("phantom", k)]
    try:
        phantom = cls(**pkw)
    except ConfigError as exc:
        raise ConfigError(str(exc).split("] ", 1)[-1], key=exc.key,
                          line=lines.get(("phantom", exc.key))) from None

    lkw = {}
    for k in ("n_iter", "step", "support_radius", "taper", "chi_margin", "norm_estimate",
              "record_residuals", "n_power"):
        if ("landweber", k) in vals:
            lkw[k] = vals[("landweber", k)]
    if ("landweber", "R") in vals:
        if "support_radius" in lkw:
            fail("landweber", "R", "give either R or support_radius, not both")
        lkw["support_radius"] = vals[("landweber", "R")]
    try:
        lw = LandweberConfig(**lkw)
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in lkw if k in msg), None)
        raise ConfigError(msg, key=key, line=lines.get(("landweber", key))) from None

    ckw = {k: vals[("conjugate", k)] for k in _KEYS["conjugate"] if ("conjugate", k) in vals}
    conj = ConjugateSettings(**ckw)
    if not conj.R > 0:
        fail("conjugate", "R", "escape radius R must be positive")
    if conj.k_max < 1:
        fail("conjugate", "k_max", "k_max must be >= 1")
    if conj.n_angles < 8:
        fail("conjugate", "n_angles", "n_angles must be >= 8")
    if conj.mu == 0:
        fail("conjugate", "mu", "mu must be nonzero")
    if conj.t_max is not None and not conj.t_max > 0:
        fail("conjugate", "t_max", "t_max must be positive")

    return ExperimentConfig(
        N=N, L=L, family=family, weight=weight, n_quad=n_quad, seed=get("", "seed", 0), op=op,
        phantom=phantom, landweber=lw, conjugate=conj,
        input=get("input", "grid"), compare_a=get("input", "a"), compare_b=get("input", "b"),
        out_dir=get("output", "dir", "out"), prefix=get("output", "prefix", "result"),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ConfigError(f"config file {path} is not UTF-8") from None
    return parse_config(text)


def with_op(cfg: ExperimentConfig, op: str) -> ExperimentConfig:
    if op not in OPERATIONS:
        raise ConfigError(f"unknown operation {op!r}; expected one of {', '.join(OPERATIONS)}", key="op")
    return replace(cfg, op=op)

