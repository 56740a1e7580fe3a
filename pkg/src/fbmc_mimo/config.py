"""Scenario files: strict INI parsing and canonical serialization.

Schema (every key optional unless noted, defaults shown)::

    [fbmc]
    L = 64                    # subcarriers, power of two
    overlap_factor = 4        # 3, 4 or 6
    num_symbols = 64          # symbol instants per frame, >= 2*overlap_factor
    pam_order = 2             # 2 or 4

    [channel]
    profile = exponential     # exponential | flat | custom
    num_taps = 8              # exponential only
    decay = 1.0               # exponential only, decay constant in samples
    delays =                  # custom only, comma separated integers
    powers =                  # custom only, comma separated reals
    snr_in_db = 0.0           # per-antenna SNR of each unit-power user

    [array]
    M = (required)            # BS antennas
    K = (required)            # users per cell

    [contamination]           # section presence enables multicell pilots
    num_cells = 7
    cross_gains = 0.3         # one value or num_cells - 1 values
    shared_pilots = true

    [blind]
    step_size = 0.3
    dispersion_constant = auto
    iterations = 100
    block_size = 32
    init = mf_contaminated

    [run]
    experiment = self_equalization   # or blind_tracking
    trials = 100
    seed = 0
    workers = 1

The ``[blind]`` section is only meaningful for ``experiment = blind_tracking``,
which also fills in the ``[contamination]`` defaults when that section is
absent.
"""

import configparser
import re
from pathlib import Path

from .blind import BlindConfig
from .channel import PowerDelayProfile
from .combining import ContaminationConfig
from .errors import ConfigurationError
from .filterbank import FbmcConfig
from .scenario import Scenario

PROFILES = ("exponential", "flat", "custom")

SCHEMA = {
    "fbmc": {"L": 64, "overlap_factor": 4, "num_symbols": 64, "pam_order": 2},
    "channel": {"profile": "exponential", "num_taps": 8, "decay": 1.0,
                "delays": None, "powers": None, "snr_in_db": 0.0},
    "array": {"M": None, "K": None},
    "contamination": {"num_cells": 7, "cross_gains": (0.3,), "shared_pilots": True},
    "blind": {"step_size": 0.3, "dispersion_constant": None, "iterations": 100,
              "block_size": 32, "init": "mf_contaminated"},
    "run": {"experiment": "self_equalization", "trials": 100, "seed": 0, "workers": 1},
}

REQUIRED = {("array", "M"), ("array", "K")}


class ScenarioError(ConfigurationError):
    """Scenario file problem, located by section, key and line when known."""

    def __init__(self, message, section=None, key=None, line=None):
        where = ""
        if section and key:
            where = f"{section}.{key}"
        elif section:
            where = f"[{section}]"
        if line is not None:
            where = f"{where} (line {line})" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.section = section
        self.key = key
        self.line = line


def _key_lines(text):
    """Line number of every ``section.key`` and ``[section]`` in the file."""
    lines = {}
    section = None
    for i, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        m = re.match(r"^\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines[(section, None)] = i
            continue
        m = re.match(r"^([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section is not None and not raw[:1].isspace():
            lines[(section, m.group(1).strip())] = i
    return lines


def _to_int(text):
    return int(text.strip())


def _to_float(text):
    return float(text.strip())


def _to_bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected true or false, got {text.strip()!r}")


def _to_list(conv):
    def parse(text):
        items = [s for s in re.split(r"[,\s]+", text.strip()) if s]
        if not items:
            raise ValueError("empty list")
        return tuple(conv(s) for s in items)
    return parse


def _optional_float(text):
    return None if text.strip().lower() in ("", "auto") else float(text)


CONVERTERS = {
    ("fbmc", "L"): _to_int,
    ("fbmc", "overlap_factor"): _to_int,
    ("fbmc", "num_symbols"): _to_int,
    ("fbmc", "pam_order"): _to_int,
    ("channel", "profile"): lambda s: s.strip().lower(),
    ("channel", "num_taps"): _to_int,
    ("channel", "decay"): _to_float,
    ("channel", "delays"): _to_list(int),
    ("channel", "powers"): _to_list(float),
    ("channel", "snr_in_db"): _to_float,
    ("array", "M"): _to_int,
    ("array", "K"): _to_int,
    ("contamination", "num_cells"): _to_int,
    ("contamination", "cross_gains"): _to_list(float),
    ("contamination", "shared_pilots"): _to_bool,
    ("blind", "step_size"): _to_float,
    ("blind", "dispersion_constant"): _optional_float,
    ("blind", "iterations"): _to_int,
    ("blind", "block_size"): _to_int,
    ("blind", "init"): lambda s: s.strip(),
    ("run", "experiment"): lambda s: s.strip(),
    ("run", "trials"): _to_int,
    ("run", "seed"): _to_int,
    ("run", "workers"): _to_int,
}

# section.key tokens that library validation messages may mention
_MESSAGE_KEYS = {
    "L must": ("fbmc", "L"),
    "overlap_factor": ("fbmc", "overlap_factor"),
    "num_symbols": ("fbmc", "num_symbols"),
    "pam_order": ("fbmc", "pam_order"),
    "delays": ("channel", "delays"),
    "tap delays": ("channel", "delays"),
    "powers": ("channel", "powers"),
    "num_taps": ("channel", "num_taps"),
}


def _read_parser(text, source):
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), default_section="__none__"
    )
    parser.optionxform = str  # keys are case sensitive (M, K, L)
    try:
        parser.read_string(text, source=str(source))
    except configparser.MissingSectionHeaderError as exc:
        raise ScenarioError("key outside of any [section]", line=exc.lineno) from exc
    except configparser.DuplicateSectionError as exc:
        raise ScenarioError("duplicate section", section=exc.section, line=exc.lineno) from exc
    except configparser.DuplicateOptionError as exc:
        raise ScenarioError("duplicate key", exc.section, exc.option, exc.lineno) from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ScenarioError("syntax error, expected 'key = value'", line=line) from exc
    return parser


def _collect(parser, lines):
    values = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ScenarioError(f"unknown section, expected one of {sorted(SCHEMA)}",
                                section=section, line=lines.get((section, None)))
        for key, raw in parser.items(section):
            line = lines.get((section, key))
            if key not in SCHEMA[section]:
                raise ScenarioError(
                    f"unknown key, [{section}] accepts {sorted(SCHEMA[section])}",
                    section, key, line,
                )
            try:
                values[(section, key)] = CONVERTERS[(section, key)](raw)
            except ValueError as exc:
                raise ScenarioError(f"cannot parse {raw!r}: {exc}", section, key, line) from exc
    for section, key in sorted(REQUIRED):
        if (section, key) not in values:
            raise ScenarioError("required key is missing", section, key)
    return values


def _locate(message, lines, sections):
    for token, (section, key) in _MESSAGE_KEYS.items():
        if token in message and (section, key) in lines:
            return section, key, lines[(section, key)]
    m = re.match(r"^(\w+)\.(\w+)", message)
    if m and m.group(1) in sections:
        return m.group(1), m.group(2), lines.get((m.group(1), m.group(2)))
    return None, None, None


def build_scenario(values, present_sections=()):
    """Scenario from ``{(section, key): value}`` with schema defaults applied."""
    def get(section, key):
        return values.get((section, key), SCHEMA[section][key])

    fbmc = FbmcConfig(get("fbmc", "L"), get("fbmc", "overlap_factor"),
                      get("fbmc", "num_symbols"), get("fbmc", "pam_order"))
    profile = get("channel", "profile")
    if profile not in PROFILES:
        raise ScenarioError(f"profile must be one of {PROFILES}, got {profile!r}",
                            "channel", "profile")
    custom_keys = [k for k in ("delays", "powers") if ("channel", k) in values]
    if profile == "custom":
        if len(custom_keys) != 2:
            raise ScenarioError("profile = custom needs both delays and powers",
                                "channel", "profile")
        pdp = PowerDelayProfile(get("channel", "delays"), get("channel", "powers"))
    else:
        if custom_keys:
            raise ScenarioError(f"only allowed with profile = custom, profile is {profile}",
                                "channel", custom_keys[0])
        if profile == "flat":
            pdp = PowerDelayProfile.flat()
        else:
            pdp = PowerDelayProfile.exponential(get("channel", "num_taps"),
                                                get("channel", "decay"))
    contamination = None
    if "contamination" in present_sections:
        contamination = ContaminationConfig(get("contamination", "num_cells"),
                                            get("contamination", "cross_gains"),
                                            get("contamination", "shared_pilots"))
    blind = None
    if "blind" in present_sections:
        blind = BlindConfig(step_size=get("blind", "step_size"),
                            dispersion_constant=get("blind", "dispersion_constant"),
                            iterations=get("blind", "iterations"),
                            block_size=get("blind", "block_size"),
                            init=get("blind", "init"))
    return Scenario(
        fbmc=fbmc, pdp=pdp, M=get("array", "M"), K=get("array", "K"),
        snr_in_db=get("channel", "snr_in_db"), contamination=contamination, blind=blind,
        trials=get("run", "trials"), seed=get("run", "seed"),
        experiment=get("run", "experiment"), workers=get("run", "workers"),
    )


def parse_scenario_text(text, source="<string>"):
    """Parse scenario text; see the module docstring for the schema.

    Raises
    ------
    ScenarioError
        For syntax errors (with line number), unknown sections or keys, values
        that do not parse, and semantic violations.  Messages start with the
        offending ``section.key`` whenever it can be determined.
    """
    lines = _key_lines(text)
    parser = _read_parser(text, source)
    values = _collect(parser, lines)
    try:
        return build_scenario(values, set(parser.sections()))
    except ScenarioError:
        raise
    except ConfigurationError as exc:
        message = str(exc)
        section, key, line = _locate(message, lines, set(parser.sections()))
        if section is not None:
            message = message.removeprefix(f"{section}.{key} ")
        raise ScenarioError(message, section, key, line) from exc


def parse_scenario(path):
    """Read and validate a scenario file.

    Raises
    ------
    FileNotFoundError
        When ``path`` does not exist.
    ScenarioError
        See :func:`parse_scenario_text`.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FileNotFoundError(f"scenario file not found: {path}") from None
    return parse_scenario_text(text, source=path)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def scenario_values(scenario):
    """``{section: {key: value}}`` fully describing ``scenario`` in schema terms."""
    fb = scenario.fbmc
    out = {
        "fbmc": {"L": fb.num_subcarriers, "overlap_factor": fb.overlap_factor,
                 "num_symbols": fb.num_symbols, "pam_order": fb.pam_order},
        "channel": {"profile": "custom", "delays": tuple(scenario.pdp.delays),
                    "powers": tuple(scenario.pdp.powers),
                    "snr_in_db": float(scenario.snr_in_db)},
        "array": {"M": scenario.M, "K": scenario.K},
    }
    if scenario.contamination is not None:
        c = scenario.contamination
        out["contamination"] = {"num_cells": c.num_cells, "cross_gains": tuple(c.cross_gains),
                                "shared_pilots": c.shared_pilots}
    if scenario.blind is not None:
        b = scenario.blind
        out["blind"] = {"step_size": float(b.step_size),
                        "dispersion_constant": ("auto" if b.dispersion_constant is None
                                                else float(b.dispersion_constant)),
                        "iterations": b.iterations, "block_size": b.block_size,
                        "init": b.init}
    out["run"] = {"experiment": scenario.experiment, "trials": scenario.trials,
                  "seed": scenario.seed, "workers": scenario.workers}
    return out


def format_scenario(scenario):
    """Canonical scenario text; parses back to an equal Scenario.

    The channel is always written as an explicit custom profile so the text
    does not depend on how the profile was first specified.
    """
    parts = []
    for section, kv in scenario_values(scenario).items():
        parts.append(f"[{section}]\n")
        parts.extend(f"{k} = {_fmt(v)}\n" for k, v in kv.items())
        parts.append("\n")
    return "".join(parts).rstrip("\n") + "\n"
