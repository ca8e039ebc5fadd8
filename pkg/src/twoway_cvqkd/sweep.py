"""Run configuration, parameter sweeps, zero-crossing searches and output files.

Config files are flat ``key = value`` text with dotted sections::

    # practical two-way run
    protocol = two_way_finite
    params.length_km = 10
    params.eta = 0.97
    budget.n_total = 1e8
    sweep.variable = length_km
    sweep.start = 0
    sweep.stop = 40
    sweep.step = 0.25

Unset parameters take the reference values of :class:`TwoWayParams`.
"""

from __future__ import annotations

import logging
import math
from contextlib import contextmanager
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import finite_size as fs
from . import protocols as pr
from .errors import (
    ConfigParseError,
    ConfigValidationError,
    CVQKDError,
    InvalidArgumentError,
    NoCrossingError,
    NumericFailureError,
)

log = logging.getLogger(__name__)

PROTOCOLS = ("two_way_ideal", "two_way_finite", "one_way_finite")
SWEEP_VARIABLES = ("length_km", "excess_noise")
OUTPUT_FORMATS = ("csv", "plot")
RESULT_COLUMNS = ("key_rate", "i_ab", "holevo", "delta_n", "t_min", "sigma2_max")

DISTANCE_TOL = 0.01
NOISE_TOL = 1e-4
MAX_DISTANCE_KM = 500.0


@dataclass(frozen=True)
class SweepAxis:
    variable: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigValidationError("sweep.variable", f"must be one of {', '.join(SWEEP_VARIABLES)}")
        if not self.step > 0:
            raise ConfigValidationError("sweep.step", "must be > 0")
        if not self.start < self.stop:
            raise ConfigValidationError("sweep.start", "must be < sweep.stop")

    def grid(self) -> list[float]:
        """``start, start+step, ...`` up to ``stop``; empty when not even one step fits."""
        span = self.stop - self.start
        if self.step > span * (1 + 1e-12):
            return []
        count = int(math.floor(span / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(count)]


@dataclass(frozen=True)
class SweepConfig:
    protocol: str
    params: pr.TwoWayParams = pr.TwoWayParams()
    budget: fs.EstimationBudget | None = None
    sweep: SweepAxis | None = None
    output_path: str | None = None
    output_format: str = "csv"
    v_mod: float | None = None

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigValidationError("protocol", f"must be one of {', '.join(PROTOCOLS)}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigValidationError("output.format", f"must be one of {', '.join(OUTPUT_FORMATS)}")
        if self.protocol != "two_way_ideal" and self.budget is None:
            object.__setattr__(self, "budget", fs.EstimationBudget.split(10 ** 8))

    @property
    def finite(self) -> bool:
        return self.protocol != "two_way_ideal"


@dataclass(frozen=True)
class ResultRow:
    value: float
    key_rate: float
    i_ab: float
    holevo: float
    delta_n: float
    t_min: float
    sigma2_max: float

    @classmethod
    def failed(cls, value: float) -> "ResultRow":
        nan = float("nan")
        return cls(value, nan, nan, nan, nan, nan, nan)


# ---------------------------------------------------------------- config parsing

_PARAM_KEYS = {f"params.{f.name}" for f in fields(pr.TwoWayParams) if f.name != "eta"}
_ETA_KEYS = {"params.eta", "params.eta_aa", "params.eta_ab", "params.eta_ba", "params.eta_bb"}
_BUDGET_KEYS = {"budget.n_total", "budget.m", "budget.m_fraction", "budget.eps_pe",
                "budget.eps_bar", "budget.eps_pa", "budget.v_mod"}
_SWEEP_KEYS = {"sweep.variable", "sweep.start", "sweep.stop", "sweep.step"}
_OUTPUT_KEYS = {"output.path", "output.format"}
_WAVEFORM_KEYS = {"waveforms.xi_a", "waveforms.xi_b", "waveforms.rx_a", "waveforms.rx_b"}
KNOWN_KEYS = {"protocol"} | _PARAM_KEYS | _ETA_KEYS | _BUDGET_KEYS | _SWEEP_KEYS | _OUTPUT_KEYS | _WAVEFORM_KEYS


def parse_config_text(text: str) -> dict[str, str]:
    """Split ``key = value`` lines into a dict of raw strings."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ConfigParseError("expected 'key = value'", lineno, col)
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigParseError("empty key", lineno, 1)
        if any(c.isspace() for c in key):
            raise ConfigParseError(f"malformed key {key!r}", lineno, raw.index(key) + 1)
        if not value:
            raise ConfigParseError(f"missing value for {key!r}", lineno, raw.index("=") + 2)
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        if key in out:
            raise ConfigParseError(f"duplicate key {key!r}", lineno, raw.index(key) + 1)
        out[key] = value
    return out


def _number(raw: dict, key: str) -> float:
    try:
        v = float(raw[key])
    except ValueError:
        raise ConfigValidationError(key, f"expected a number, got {raw[key]!r}") from None
    if not math.isfinite(v):
        raise ConfigValidationError(key, "must be finite")
    return v


def _integer(raw: dict, key: str) -> int:
    v = _number(raw, key)
    if v != int(v):
        raise ConfigValidationError(key, f"expected an integer, got {raw[key]!r}")
    return int(v)


@contextmanager
def _field(name):
    """Report constructor failures as validation errors naming ``name``."""
    try:
        yield
    except InvalidArgumentError as exc:
        raise ConfigValidationError(name, str(exc)) from exc


def config_from_dict(raw: dict[str, str], base_dir: Path | None = None) -> SweepConfig:
    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigValidationError(unknown[0], "unknown key")
    if "protocol" not in raw:
        raise ConfigValidationError("protocol", "required field is missing")

    kw = {k.split(".", 1)[1]: _number(raw, k) for k in _PARAM_KEYS if k in raw}
    eta = _number(raw, "params.eta") if "params.eta" in raw else 1.0
    etas = {n: (_number(raw, f"params.eta_{n}") if f"params.eta_{n}" in raw else eta)
            for n in ("aa", "ab", "ba", "bb")}
    wf_keys = [k for k in sorted(_WAVEFORM_KEYS) if k in raw]
    if wf_keys:
        if len(wf_keys) != 4:
            missing = sorted(_WAVEFORM_KEYS - set(wf_keys))[0]
            raise ConfigValidationError(missing, "all four waveform files are needed")
        from . import temporal_modes as tm
        base = base_dir or Path(".")
        with _field("waveforms"):
            w = {k.split(".")[1]: tm.read_waveform(base / raw[k]) for k in wf_keys}
            mm = tm.mode_match_matrix(w["xi_a"], w["xi_b"], w["rx_a"], w["rx_b"])
        etas = {n: getattr(mm, n) for n in ("aa", "ab", "ba", "bb")}
    with _field("params.eta"):
        kw["eta"] = pr.ModeMatchMatrix(**etas)
    with _field("params"):
        params = pr.TwoWayParams(**kw)

    budget = None
    if any(k in raw for k in _BUDGET_KEYS - {"budget.v_mod"}) or raw["protocol"] != "two_way_ideal":
        n_total = _integer(raw, "budget.n_total") if "budget.n_total" in raw else 10 ** 8
        if "budget.m" in raw and "budget.m_fraction" in raw:
            raise ConfigValidationError("budget.m", "give either budget.m or budget.m_fraction")
        if "budget.m" in raw:
            m = _integer(raw, "budget.m")
        else:
            frac = _number(raw, "budget.m_fraction") if "budget.m_fraction" in raw else 0.5
            if not 0 < frac < 1:
                raise ConfigValidationError("budget.m_fraction", "must lie in (0, 1)")
            m = int(round(n_total * frac))
        eps = {n: _number(raw, f"budget.{n}") for n in ("eps_pe", "eps_bar", "eps_pa") if f"budget.{n}" in raw}
        with _field("budget"):
            budget = fs.EstimationBudget(n_total=n_total, m=m, **eps)
    v_mod = None
    if "budget.v_mod" in raw:
        v_mod = _number(raw, "budget.v_mod")
        if not v_mod > 0:
            raise ConfigValidationError("budget.v_mod", "must be > 0")

    axis = None
    if any(k in raw for k in _SWEEP_KEYS):
        for k in sorted(_SWEEP_KEYS):
            if k not in raw:
                raise ConfigValidationError(k, "required when a sweep is configured")
        axis = SweepAxis(raw["sweep.variable"], _number(raw, "sweep.start"),
                         _number(raw, "sweep.stop"), _number(raw, "sweep.step"))

    return SweepConfig(protocol=raw["protocol"], params=params, budget=budget,
                       sweep=axis, output_path=raw.get("output.path"),
                       output_format=raw.get("output.format", "csv"), v_mod=v_mod)


def load_config(path) -> SweepConfig:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    return config_from_dict(parse_config_text(text), base_dir=path.parent)


def dump_config(cfg: SweepConfig) -> str:
    """Serialise a config in the same ``key = value`` format (round-trips through load)."""
    p = cfg.params
    lines = [f"protocol = {cfg.protocol}"]
    for f in fields(pr.TwoWayParams):
        if f.name == "eta":
            for n in ("aa", "ab", "ba", "bb"):
                lines.append(f"params.eta_{n} = {getattr(p.eta, n)!r}")
        else:
            lines.append(f"params.{f.name} = {getattr(p, f.name)!r}")
    if cfg.budget is not None:
        b = cfg.budget
        lines += [f"budget.n_total = {b.n_total}", f"budget.m = {b.m}",
                  f"budget.eps_pe = {b.eps_pe!r}", f"budget.eps_bar = {b.eps_bar!r}",
                  f"budget.eps_pa = {b.eps_pa!r}"]
    if cfg.v_mod is not None:
        lines.append(f"budget.v_mod = {cfg.v_mod!r}")
    if cfg.sweep is not None:
        s = cfg.sweep
        lines += [f"sweep.variable = {s.variable}", f"sweep.start = {s.start!r}",
                  f"sweep.stop = {s.stop!r}", f"sweep.step = {s.step!r}"]
    if cfg.output_path is not None:
        lines.append(f"output.path = {cfg.output_path}")
    lines.append(f"output.format = {cfg.output_format}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- evaluation

def with_value(cfg: SweepConfig, variable: str, value: float) -> SweepConfig:
    return replace(cfg, params=replace(cfg.params, **{variable: value}))


def evaluate(cfg: SweepConfig) -> pr.KeyRateBreakdown:
    """Key-rate breakdown at the config's operating point."""
    if cfg.protocol == "two_way_ideal":
        return pr.key_rate_two_way(cfg.params, None, cfg.v_mod)
    if cfg.protocol == "two_way_finite":
        return pr.key_rate_two_way(cfg.params, cfg.budget, cfg.v_mod)
    return pr.key_rate_one_way(cfg.params, cfg.budget, cfg.v_mod)


def key_rate(cfg: SweepConfig, variable: str, value: float) -> float:
    k = evaluate(with_value(cfg, variable, value)).key_rate
    if not math.isfinite(k):
        raise NumericFailureError(f"non-finite key rate at {variable} = {value}")
    return k


def _row(args) -> ResultRow:
    cfg, variable, value = args
    try:
        b = evaluate(with_value(cfg, variable, value))
    except (CVQKDError, ArithmeticError, ValueError) as exc:
        log.warning("%s = %r failed: %s", variable, value, exc)
        return ResultRow.failed(value)
    return ResultRow(value, b.key_rate, b.i_ab, b.holevo, b.delta_n, b.t_min, b.sigma2_max)


def sweep(cfg: SweepConfig, jobs: int = 1) -> list[ResultRow]:
    """Evaluate every grid point of ``cfg.sweep``; failed points become NaN rows."""
    if cfg.sweep is None:
        raise InvalidArgumentError("config has no sweep section")
    axis = cfg.sweep
    tasks = [(cfg, axis.variable, v) for v in axis.grid()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(_row, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [_row(t) for t in tasks]
    return sorted(rows, key=lambda r: r.value)


def _bisect(f, lo: float, hi: float, tol: float) -> float:
    """Root of ``f`` in ``[lo, hi]`` given ``f(lo) > 0 >= f(hi)``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_max_distance(cfg: SweepConfig, tol: float = DISTANCE_TOL) -> float:
    """Largest fibre length with a positive key rate.

    The bracket is grown by doubling from 1 km, then bisected to ``tol``.
    """
    f = lambda length: key_rate(cfg, "length_km", length)  # noqa: E731
    if f(0.0) <= 0:
        raise NoCrossingError("key rate is not positive at L = 0")
    lo, hi = 0.0, 1.0
    while f(hi) > 0:
        if hi >= MAX_DISTANCE_KM:
            raise NoCrossingError(f"key rate still positive at {MAX_DISTANCE_KM:g} km")
        lo, hi = hi, min(2.0 * hi, MAX_DISTANCE_KM)
    return _bisect(f, lo, hi, tol)


def find_max_noise(cfg: SweepConfig, length_km: float, tol: float = NOISE_TOL) -> float:
    """Largest excess noise in ``[0, 1]`` with a positive key rate at ``length_km``."""
    cfg = with_value(cfg, "length_km", length_km)
    f = lambda eps: key_rate(cfg, "excess_noise", eps)  # noqa: E731
    if f(0.0) <= 0:
        raise NoCrossingError(f"key rate is not positive at zero excess noise, L = {length_km} km")
    if f(1.0) > 0:
        raise NoCrossingError(f"key rate still positive at excess noise 1, L = {length_km} km")
    return _bisect(f, 0.0, 1.0, tol)


# ---------------------------------------------------------------- output

def _fmt(x: float) -> str:
    return "nan" if not math.isfinite(x) else format(x, ".15g")


def emit_csv(rows: list[ResultRow], path, variable: str = "value") -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join((variable,) + RESULT_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(getattr(r, c)) for c in ("value",) + RESULT_COLUMNS) + "\n")


def emit_plot_data(rows: list[ResultRow], path, cfg: SweepConfig | None = None) -> None:
    if not rows:
        raise InvalidArgumentError("no rows to write")
    variable = cfg.sweep.variable if cfg is not None and cfg.sweep is not None else "value"
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        if cfg is not None:
            for line in dump_config(cfg).splitlines():
                fh.write(f"# {line}\n")
        fh.write(f"# {variable} key_rate\n")
        for r in rows:
            fh.write(f"{_fmt(r.value)} {_fmt(r.key_rate)}\n")


def emit(rows: list[ResultRow], cfg: SweepConfig, path=None) -> None:
    path = path or cfg.output_path
    if path is None:
        raise InvalidArgumentError("no output path given")
    if cfg.output_format == "plot":
        emit_plot_data(rows, path, cfg)
    else:
        emit_csv(rows, path, cfg.sweep.variable if cfg.sweep else "value")
