"""Experiment configuration as flat ``dotted.key = value`` text.

Example::

    mode = physical
    geometry.L_over_T = 3.0
    detector.A.omega = 4.0
    sweep.L_over_T = 2.0, 3.0, 4.0

Unknown keys are rejected; missing keys take their defaults.
"""

from dataclasses import dataclass, field
import math
import os

from .correlator import DetectorSpec, FieldSpec
from .errors import ConfigurationError
from .windows import WindowSpec

MODES = ("dominance", "physical")
FORMATS = ("json", "csv")
FAMILIES = ("gaussian", "raised-cosine", "superoscillatory")

_DETECTOR_KEYS = {
    "omega": (float, 4.0),
    "window": (str, "gaussian"),
    "eps0": (float, 1.0),
    "T": (float, 1.0),
    "sigma": ("optfloat", None),
    "N": (int, 10),
    "a": (float, 4.0),
}

SCHEMA = {
    "mode": (str, "dominance"),
    "seed": (int, 0),
    "workers": (int, 4),
    "dominance.s": (float, 0.01),
    "field.mass": (float, 0.0),
    "field.rtol": (float, 1e-9),
    "geometry.L_over_T": (float, 3.0),
    "filter.eta": (str, "auto"),
    "filter.normalize": (bool, True),
    "analysis.negativity": (bool, True),
    "analysis.svetlichny": (bool, True),
    "analysis.starts": (int, 16),
    "analysis.lp_test": (bool, True),
    "analysis.psd_projection": (bool, True),
    "sweep.L_over_T": ("floatlist", ()),
    "sweep.eta": ("floatlist", ()),
    "sweep.eps0": ("floatlist", ()),
    "output.path": (str, ""),
    "output.format": (str, "json"),
}
for _d in ("A", "B", "C"):
    for _k, _v in _DETECTOR_KEYS.items():
        SCHEMA[f"detector.{_d}.{_k}"] = _v


def _parse_value(key, kind, text):
    text = text.strip()
    try:
        if kind is bool:
            low = text.lower()
            if low not in ("true", "false"):
                raise ValueError(text)
            return low == "true"
        if kind == "optfloat":
            return None if text.lower() in ("", "none", "auto") else float(text)
        if kind == "floatlist":
            return tuple(float(x) for x in text.split(",") if x.strip())
        return kind(text)
    except ValueError:
        raise ConfigurationError(f"bad value for {key}: {text!r}") from None


def _format_value(kind, value):
    if kind is bool:
        return "true" if value else "false"
    if kind == "optfloat":
        return "auto" if value is None else repr(float(value))
    if kind == "floatlist":
        return ", ".join(repr(float(x)) for x in value)
    if kind is float:
        return repr(float(value))
    return str(value)


@dataclass
class ExperimentConfig:
    """Flat mapping of dotted keys to typed values, validated on creation."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        unknown = sorted(set(self.values) - set(SCHEMA))
        if unknown:
            raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")
        merged = {k: default for k, (_, default) in SCHEMA.items()}
        merged.update(self.values)
        self.values = merged
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    def replace(self, **updates):
        """Copy with keys updated; dots in keys are written as double underscores."""
        vals = dict(self.values)
        for k, v in updates.items():
            vals[k.replace("__", ".")] = v
        return ExperimentConfig(vals)

    def validate(self):
        v = self.values
        if v["mode"] not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if v["output.format"] not in FORMATS:
            raise ConfigurationError(f"output.format must be one of {FORMATS}")
        if not 0 < v["dominance.s"] <= 1:
            raise ConfigurationError("dominance.s must lie in (0, 1]")
        if v["analysis.starts"] < 1 or v["workers"] < 1:
            raise ConfigurationError("analysis.starts and workers must be positive")
        eta = v["filter.eta"]
        if eta not in ("auto", "none"):
            try:
                x = float(eta)
            except ValueError:
                raise ConfigurationError("filter.eta must be auto, none or a number") from None
            if not 0 < x <= 1:
                raise ConfigurationError("filter.eta must lie in (0, 1]")
        for axis in ("sweep.L_over_T", "sweep.eta", "sweep.eps0"):
            if not all(math.isfinite(x) for x in v[axis]):
                raise ConfigurationError(f"{axis} must contain finite numbers")
        if any(not x > 0 for x in (v["geometry.L_over_T"],) + v["sweep.L_over_T"]):
            raise ConfigurationError("L/T values must be positive")
        if any(not 0 < x <= 1 for x in v["sweep.eta"]):
            raise ConfigurationError("sweep.eta values must lie in (0, 1]")
        for d in ("A", "B", "C"):
            if v[f"detector.{d}.window"] not in FAMILIES:
                raise ConfigurationError(f"detector.{d}.window must be one of {FAMILIES}")
        # builds the specs, surfacing their own checks
        if v["mode"] == "physical":
            self.detectors()
            self.field()

    # -- derived objects ---------------------------------------------------

    def field(self):
        return FieldSpec(mass=self["field.mass"], rtol=self["field.rtol"])

    def window(self, d):
        p = f"detector.{d}."
        fam = self[p + "window"]
        so = fam == "superoscillatory"
        return WindowSpec(fam, eps0=self[p + "eps0"], T=self[p + "T"],
                          sigma=self[p + "sigma"] if fam == "gaussian" else None,
                          N=self[p + "N"] if so else None, a=self[p + "a"] if so else None)

    def detectors(self, L_over_T=None):
        """Detectors on an equilateral triangle of side L = L_over_T * T."""
        ratio = self["geometry.L_over_T"] if L_over_T is None else L_over_T
        T = self["detector.A.T"]
        L = ratio * T
        h = L * math.sqrt(3) / 2
        corners = {"A": (0.0, 0.0, 0.0), "B": (L, 0.0, 0.0), "C": (L / 2, h, 0.0)}
        return tuple(DetectorSpec(d, corners[d], self[f"detector.{d}.omega"], self.window(d))
                     for d in ("A", "B", "C"))

    def sweep_points(self):
        """(L_over_T, eps0 factor, eta) triples in deterministic config order."""
        ratios = self["sweep.L_over_T"] or (self["geometry.L_over_T"],)
        scales = self["sweep.eps0"] or (1.0,)
        etas = self["sweep.eta"] or (None,)
        return [(r, s, e) for r in ratios for s in scales for e in etas]

    # -- text form ---------------------------------------------------------

    def dumps(self):
        lines = []
        for key, (kind, _) in SCHEMA.items():
            lines.append(f"{key} = {_format_value(kind, self.values[key])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        values = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"line {n}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in SCHEMA:
                raise ConfigurationError(f"line {n}: unknown key {key!r}")
            values[key] = _parse_value(key, SCHEMA[key][0], val)
        return cls(values)

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                return cls.loads(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None

    def save(self, path):
        with open(os.fspath(path), "w") as fh:
            fh.write(self.dumps())
