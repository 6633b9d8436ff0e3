"""INI-style problem configuration.

Example::

    [problem]
    T = 1
    omega = 1.5
    h = "1/(2+(t-1)^2) + u^2/5 + 2*u + 1/(1+7*v^2) + 7"
    g = "1"

    [cone]
    variant = nonnegative        ; changing-sign | nonnegative | strictly-positive
    a = 0.48                     ; b = 1 - a

    [radii]
    index1 = 1                   ; comma-separated radii per condition kind
    index0 = 2

    [thresholds]
    source = closed-form         ; closed-form | oracle | manual
    m = 11.5009                  ; only read when source = manual
    M = 6.58486

    [certifier]
    epsilon = 0
    box_grid = 41

    [solver]
    nodes = 401
    theta = 0.5
    tol = 1e-10
    max_iter = 10000
    ceiling = 1e12
    rule = product
    u0 = auto                    ; auto | a number

    [reference]                  ; optional published values to compare against
    m = 11.5009
    M = 6.58486
    f.index0.2 = 6.62418

Keys are case-sensitive (m and M differ).  Expressions must be quoted.
"""

from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .bounds import StripInterval
from .certifier import CertificationProblem, ConeVariant, ThresholdSource, radii_from_lists
from .errors import ConfigError, DomainError, ParseError
from .kernel import ProblemParams
from .nonlinearity import NonlinearityExpr, parse, parse_weight

_SCHEMA = {
    "problem": {"T", "omega", "h", "g"},
    "cone": {"variant", "a"},
    "radii": {"index1", "index0"},
    "thresholds": {"source", "m", "M"},
    "certifier": {"epsilon", "box_grid"},
    "solver": {"nodes", "theta", "tol", "max_iter", "ceiling", "rule", "u0"},
    "reference": None,  # free-form numeric keys
}
_REQUIRED = {"problem": ("T", "omega", "h")}


@dataclass(frozen=True)
class SolverSettings:
    nodes: int = 401
    theta: float = 0.5
    tol: float = 1e-10
    max_iter: int = 10_000
    ceiling: float = 1e12
    rule: str = "product"
    u0: Optional[float] = None  # None = automatic choice


@dataclass(frozen=True)
class ProblemConfig:
    params: ProblemParams
    h: NonlinearityExpr
    g: Optional[NonlinearityExpr]
    strip: StripInterval
    cone: ConeVariant
    radii: tuple
    threshold_source: ThresholdSource
    manual_m: Optional[float]
    manual_M: Optional[float]
    epsilon: float
    box_grid: int
    solver: SolverSettings
    reference: dict = field(default_factory=dict)
    text: str = ""

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    def certification_problem(self) -> CertificationProblem:
        return CertificationProblem(self.params, self.strip, self.cone, self.h, self.radii, self.g,
                                    self.epsilon, self.box_grid)


class _Locator:
    """Line numbers of keys in the raw text (configparser does not keep them)."""

    def __init__(self, text: str):
        self.lines = {}
        section = None
        for no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            m = re.match(r"\[([^\]]+)\]", stripped)
            if m:
                section = m.group(1).strip()
                self.lines.setdefault((section, None), no)
                continue
            m = re.match(r"([^=:;#\s][^=:]*?)\s*[=:]", stripped)
            if m and section is not None:
                self.lines.setdefault((section, m.group(1)), no)

    def line(self, section: str, key: Optional[str] = None) -> Optional[int]:
        return self.lines.get((section, key))


class _Reader:
    def __init__(self, cp: configparser.ConfigParser, loc: _Locator):
        self.cp, self.loc = cp, loc

    def error(self, section, key, message):
        return ConfigError(message, self.loc.line(section, key), f"{section}.{key}" if key else section)

    def raw(self, section, key, default=None):
        if not self.cp.has_option(section, key):
            return default
        return self.cp.get(section, key).strip()

    def number(self, section, key, default=None, positive=False, integer=False):
        text = self.raw(section, key)
        if text is None:
            return default
        try:
            value = int(text) if integer else float(text)
        except ValueError:
            kind = "an integer" if integer else "a decimal number"
            raise self.error(section, key, f"expected {kind}, got {text!r}") from None
        if not math.isfinite(value):
            raise self.error(section, key, f"value must be finite, got {text!r}")
        if positive and not value > 0:
            raise self.error(section, key, f"value must be > 0, got {text!r}")
        return value

    def number_list(self, section, key):
        text = self.raw(section, key)
        if not text:
            return []
        out = []
        for item in text.split(","):
            try:
                value = float(item)
            except ValueError:
                raise self.error(section, key, f"expected comma-separated numbers, got {item.strip()!r}") from None
            if not (math.isfinite(value) and value > 0):
                raise self.error(section, key, f"radii must be finite and > 0, got {item.strip()!r}")
            out.append(value)
        return out

    def expression(self, section, key, weight=False, default=None):
        text = self.raw(section, key)
        if text is None:
            if default is None:
                return None
            text = default
        if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
            text = text[1:-1]
        elif text != default:
            raise self.error(section, key, "expressions must be quoted")
        try:
            return parse_weight(text) if weight else parse(text)
        except ParseError as exc:
            raise self.error(section, key, f"cannot parse expression: {exc}") from None


def loads(text: str) -> ProblemConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}", getattr(exc, "lineno", None)) from None
    loc = _Locator(text)
    rd = _Reader(cp, loc)

    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]", loc.line(section))
        allowed = _SCHEMA[section]
        for key in cp.options(section):
            if allowed is not None and key not in allowed:
                raise rd.error(section, key, f"unknown key; allowed: {', '.join(sorted(allowed))}")
    for section, keys in _REQUIRED.items():
        for key in keys:
            if not cp.has_option(section, key):
                raise ConfigError(f"missing required key {section}.{key}", loc.line(section), f"{section}.{key}")

    T = rd.number("problem", "T", positive=True)
    omega = rd.number("problem", "omega")
    try:
        params = ProblemParams(T, omega)
    except DomainError as exc:
        raise rd.error("problem", "omega", str(exc)) from None
    h = rd.expression("problem", "h")
    g = rd.expression("problem", "g", weight=True, default="1")
    if g.is_constant() and g() == 1.0:
        g = None

    a = rd.number("cone", "a", default=0.25)
    try:
        strip = StripInterval(a)
    except DomainError as exc:
        raise rd.error("cone", "a", str(exc)) from None
    variant = rd.raw("cone", "variant", "changing-sign")
    try:
        cone = ConeVariant(variant)
    except ValueError:
        choices = ", ".join(v.value for v in ConeVariant)
        raise rd.error("cone", "variant", f"unknown cone variant {variant!r}; choose from {choices}") from None

    radii = radii_from_lists(rd.number_list("radii", "index1"), rd.number_list("radii", "index0"))

    try:
        source = ThresholdSource.parse(rd.raw("thresholds", "source", "closed-form"))
    except ValueError as exc:
        raise rd.error("thresholds", "source", str(exc)) from None
    manual_m = rd.number("thresholds", "m", positive=True)
    manual_M = rd.number("thresholds", "M", positive=True)

    epsilon = rd.number("certifier", "epsilon", default=0.0)
    if epsilon < 0:
        raise rd.error("certifier", "epsilon", "margin must be >= 0")
    box_grid = rd.number("certifier", "box_grid", default=41, integer=True)
    if box_grid < 2:
        raise rd.error("certifier", "box_grid", "grid must have at least 2 points per axis")

    nodes = rd.number("solver", "nodes", default=401, integer=True)
    if nodes < 3 or nodes % 2 == 0:
        raise rd.error("solver", "nodes", f"node count must be odd and >= 3, got {nodes}")
    theta = rd.number("solver", "theta", default=0.5)
    if not 0 < theta <= 1:
        raise rd.error("solver", "theta", f"damping must lie in (0, 1], got {theta}")
    rule = rd.raw("solver", "rule", "product")
    if rule not in ("product", "trapezoid"):
        raise rd.error("solver", "rule", f"unknown quadrature rule {rule!r}")
    u0_text = rd.raw("solver", "u0", "auto")
    u0 = None if u0_text == "auto" else rd.number("solver", "u0")
    solver = SolverSettings(
        nodes=nodes,
        theta=theta,
        tol=rd.number("solver", "tol", default=1e-10, positive=True),
        max_iter=rd.number("solver", "max_iter", default=10_000, integer=True, positive=True),
        ceiling=rd.number("solver", "ceiling", default=1e12, positive=True),
        rule=rule,
        u0=u0,
    )

    reference = {}
    if cp.has_section("reference"):
        for key in cp.options("reference"):
            reference[key] = rd.number("reference", key)

    return ProblemConfig(params, h, g, strip, cone, radii, source, manual_m, manual_M, epsilon, box_grid,
                         solver, reference, text)


def load(path) -> ProblemConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc.strerror}") from None
    return loads(text)
