"""Command-line front end for pricing and fee calibration.

Four commands: ``price`` evaluates one contract at a given fee, ``fee``
solves for the fair fee, ``table`` reproduces one of the built-in result
tables, and ``mc-validate`` cross-checks the lattice static fee against the
Monte Carlo estimate.  Inputs come from an optional flat key=value config
file plus command-line flags (flags win).  Rate-like inputs require an
explicit unit suffix: ``5%`` or ``500bp``; bare numbers are rejected so a
percentage can never be silently read as a fraction.

Output is text, CSV, or JSON.  CSV carries a commented metadata block with
every resolved parameter, the seed and the tool version, so any emitted
number can be reproduced from the file alone.
"""

from __future__ import annotations

import argparse
import decimal
import io
import json
import sys
import time
from dataclasses import dataclass

from . import __version__
from .contract import GmwbContract, MarketModel
from .engine import PricingConfig, price
from .errors import ConditioningError, ConfigError, GmwbError, NumericalError, SolverError
from .feesolver import fee_std_error_derivative, solve_fair_fee
from .montecarlo import McConfig, mc_static_price

EXIT_USAGE = 2
EXIT_SOLVER = 3
EXIT_NUMERICAL = 4

_RELATIVE_SLACK = 1e-9    # tolerance when checking g * T == 1

# keys that appear in config files and as flags, with their value kind
_RATE_KEYS = ("g", "beta", "r", "sigma", "alpha")
_INT_KEYS = ("Nw", "M", "J", "q", "paths", "seed")
_FLOAT_KEYS = ("W0",)
_YEAR_KEYS = ("T",)
_TEXT_KEYS = ("command", "mode", "variant", "format", "output", "id", "rows")
_ALL_KEYS = _RATE_KEYS + _INT_KEYS + _FLOAT_KEYS + _YEAR_KEYS + _TEXT_KEYS


def parse_rate(token: str, key: str) -> float:
    """Decimal fraction from a string with a mandatory % or bp suffix."""
    text = token.strip()
    if text.endswith("%"):
        scale, body = 1e-2, text[:-1]
    elif text.endswith("bp"):
        scale, body = 1e-4, text[:-2]
    else:
        raise ConfigError(
            f"{key}={token!r} has no unit: rate values need a '%' or 'bp' suffix"
        )
    try:
        value = float(body)
    except ValueError:
        raise ConfigError(f"{key}={token!r} is not a number with a rate suffix") from None
    return value * scale


def _positional(text: str) -> str:
    """Rewrite exponent notation positionally so tokens stay readable."""
    if "e" in text or "E" in text:
        return format(decimal.Decimal(text), "f")
    return text


def format_rate(value: float) -> str:
    """Shortest percent token that parses back to exactly ``value``."""
    for digits in range(1, 18):
        token = _positional(f"{value * 1e2:.{digits}g}") + "%"
        if parse_rate(token, "x") == value:
            return token
    return f"{value * 1e2!r}%"


def parse_years(token: str, key: str) -> float:
    text = token.strip()
    if text.endswith("y"):
        text = text[:-1]
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}={token!r} is not a year count") from None
    if value <= 0:
        raise ConfigError(f"{key} must be positive, got {token!r}")
    return value


def format_years(value: float) -> str:
    for digits in range(1, 18):
        token = _positional(f"{value:.{digits}g}") + "y"
        if parse_years(token, "x") == value:
            return token
    return f"{value!r}y"


@dataclass
class RunSpec:
    """Fully resolved description of one run.

    Rates are stored as decimal fractions; the parsing and formatting
    helpers own all unit conversion, and ``emit`` produces the flat
    key=value form that ``parse_config`` accepts, so a resolved spec
    round-trips through its own output.
    """

    command: str
    premium: float = 100.0
    maturity: float | None = None
    rate_g: float | None = None
    withdrawals_per_year: int = 4
    penalty: float = 0.10
    rate: float = 0.05
    sigma: float = 0.20
    alpha: float | None = None
    mode: str = "dynamic"
    variant: str = "density"
    num_segments: int = 400
    num_levels: int | None = None
    quad_order: int = 9
    paths: int = 2_000_000
    seed: int = 12345
    out_format: str = "text"
    output: str | None = None
    table_id: str | None = None
    rows: str | None = None

    def emit(self) -> str:
        """Flat key=value text, one key per line, parseable by parse_config."""
        lines = [f"command={self.command}"]
        lines.append(f"W0={self.premium!r}")
        if self.maturity is not None:
            lines.append(f"T={format_years(self.maturity)}")
        if self.rate_g is not None:
            lines.append(f"g={format_rate(self.rate_g)}")
        lines.append(f"Nw={self.withdrawals_per_year}")
        lines.append(f"beta={format_rate(self.penalty)}")
        lines.append(f"r={format_rate(self.rate)}")
        lines.append(f"sigma={format_rate(self.sigma)}")
        if self.alpha is not None:
            lines.append(f"alpha={format_rate(self.alpha)}")
        lines.append(f"mode={self.mode}")
        lines.append(f"variant={self.variant}")
        lines.append(f"M={self.num_segments}")
        if self.num_levels is not None:
            lines.append(f"J={self.num_levels}")
        lines.append(f"q={self.quad_order}")
        lines.append(f"paths={self.paths}")
        lines.append(f"seed={self.seed}")
        lines.append(f"format={self.out_format}")
        if self.output is not None:
            lines.append(f"output={self.output}")
        if self.table_id is not None:
            lines.append(f"id={self.table_id}")
        if self.rows is not None:
            lines.append(f"rows={self.rows}")
        return "\n".join(lines) + "\n"


def _read_config_file(path: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            pairs[key.strip()] = value.strip()
    return pairs


def parse_config(pairs: dict[str, str]) -> RunSpec:
    """Resolve a merged key=value mapping into a RunSpec with defaults."""
    for key in pairs:
        if key not in _ALL_KEYS:
            raise ConfigError(f"unknown key {key!r}")
    command = pairs.get("command")
    if command is None:
        raise ConfigError("missing key 'command'")
    if command not in ("price", "fee", "table", "mc-validate"):
        raise ConfigError(f"command={command!r} is not one of price, fee, table, mc-validate")

    spec = RunSpec(command=command)
    if "W0" in pairs:
        try:
            spec.premium = float(pairs["W0"])
        except ValueError:
            raise ConfigError(f"W0={pairs['W0']!r} is not a number") from None
        if spec.premium <= 0:
            raise ConfigError(f"W0 must be positive, got {pairs['W0']!r}")

    has_t, has_g = "T" in pairs, "g" in pairs
    if has_t:
        spec.maturity = parse_years(pairs["T"], "T")
    if has_g:
        spec.rate_g = parse_rate(pairs["g"], "g")
        if spec.rate_g <= 0:
            raise ConfigError(f"g must be positive, got {pairs['g']!r}")
    if has_t and has_g:
        if abs(spec.rate_g * spec.maturity - 1.0) > _RELATIVE_SLACK:
            raise ConfigError(
                f"inconsistent keys 'g' and 'T': g*T = {spec.rate_g * spec.maturity!r}, "
                "the annual rate must be the reciprocal of the maturity"
            )
    elif has_t:
        spec.rate_g = 1.0 / spec.maturity
    elif has_g:
        spec.maturity = 1.0 / spec.rate_g
    elif command != "table":
        raise ConfigError(f"command {command!r} needs either 'g' or 'T'")

    for key, attr in (("Nw", "withdrawals_per_year"), ("M", "num_segments"),
                      ("J", "num_levels"), ("q", "quad_order"),
                      ("paths", "paths"), ("seed", "seed")):
        if key in pairs:
            try:
                setattr(spec, attr, int(pairs[key]))
            except ValueError:
                raise ConfigError(f"{key}={pairs[key]!r} is not an integer") from None

    for key, attr in (("beta", "penalty"), ("r", "rate"), ("sigma", "sigma"),
                      ("alpha", "alpha")):
        if key in pairs:
            setattr(spec, attr, parse_rate(pairs[key], key))

    if "mode" in pairs:
        spec.mode = pairs["mode"]
        if spec.mode not in ("static", "dynamic"):
            raise ConfigError(f"mode={spec.mode!r} is not 'static' or 'dynamic'")
    if "variant" in pairs:
        spec.variant = pairs["variant"]
        if spec.variant not in ("density", "moment"):
            raise ConfigError(f"variant={spec.variant!r} is not 'density' or 'moment'")
    if "format" in pairs:
        spec.out_format = pairs["format"]
        if spec.out_format not in ("text", "csv", "json"):
            raise ConfigError(f"format={spec.out_format!r} is not text, csv or json")
    spec.output = pairs.get("output", spec.output)
    spec.table_id = pairs.get("id", spec.table_id)
    spec.rows = pairs.get("rows", spec.rows)

    if command == "table":
        if spec.table_id is None:
            raise ConfigError("command 'table' needs key 'id'")
        if spec.table_id not in TABLES:
            known = ", ".join(sorted(TABLES))
            raise ConfigError(f"id={spec.table_id!r} is not a built-in table ({known})")
    if command == "price" and spec.alpha is None:
        raise ConfigError("command 'price' needs key 'alpha'")
    return spec


@dataclass(frozen=True)
class TableRow:
    rate_g: float
    withdrawals_per_year: int
    sigma: float
    reference_bp: float | None = None   # published literature value, if any

    def key(self) -> str:
        if self.reference_bp is None:
            return format_rate(self.rate_g)
        return f"{self.withdrawals_per_year}-{format_rate(self.sigma)}"


@dataclass(frozen=True)
class TableSpec:
    identifier: str
    mode: str
    penalty: float
    rate: float
    num_segments: int
    num_levels: int | None
    quad_order: int
    rows: tuple[TableRow, ...]
    reference_label: str | None = None


_G_ROWS = (0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.15)

TABLES: dict[str, TableSpec] = {
    "table1-static": TableSpec(
        identifier="table1-static", mode="static", penalty=0.10, rate=0.05,
        num_segments=400, num_levels=None, quad_order=9,
        rows=tuple(TableRow(g, 4, 0.20) for g in _G_ROWS),
    ),
    "table2-dynamic-quarterly": TableSpec(
        identifier="table2-dynamic-quarterly", mode="dynamic", penalty=0.10,
        rate=0.05, num_segments=400, num_levels=100, quad_order=9,
        rows=tuple(TableRow(g, 4, 0.20) for g in _G_ROWS),
    ),
    "table3-dynamic-monthly": TableSpec(
        identifier="table3-dynamic-monthly", mode="dynamic", penalty=0.10,
        rate=0.05, num_segments=400, num_levels=300, quad_order=9,
        rows=tuple(TableRow(g, 12, 0.20) for g in _G_ROWS),
    ),
    "table4-beta5": TableSpec(
        identifier="table4-beta5", mode="dynamic", penalty=0.05, rate=0.05,
        num_segments=400, num_levels=100, quad_order=9,
        rows=tuple(TableRow(g, 4, 0.20) for g in _G_ROWS),
    ),
    # Annual and half-yearly withdrawals compared against published values;
    # the per-step volatility spread is largest here, so the quadrature
    # order is raised until the fee is converged in it.
    "table5-forsyth": TableSpec(
        identifier="table5-forsyth", mode="dynamic", penalty=0.10, rate=0.05,
        num_segments=400, num_levels=100, quad_order=32,
        rows=(
            TableRow(0.10, 1, 0.20, reference_bp=129.1),
            TableRow(0.10, 1, 0.30, reference_bp=293.3),
            TableRow(0.10, 2, 0.20, reference_bp=133.5),
            TableRow(0.10, 2, 0.30, reference_bp=302.4),
        ),
        reference_label="reference_bp: Chen & Forsyth (2008) published fees, literature values",
    ),
}

_BASE_COLUMNS = ("g", "T", "fee_bp", "mode", "variant", "M", "J", "q", "runtime_ms")


def _contract_for(spec: RunSpec) -> GmwbContract:
    return GmwbContract(
        premium=spec.premium,
        maturity=spec.maturity,
        withdrawals_per_year=spec.withdrawals_per_year,
        penalty=spec.penalty,
    )


def _pricing_config(spec: RunSpec) -> PricingConfig:
    return PricingConfig(
        mode=spec.mode,
        variant=spec.variant,
        num_segments=spec.num_segments,
        num_guarantee_levels=spec.num_levels,
        quad_order=spec.quad_order,
    )


def _solve_fee(contract: GmwbContract, rate: float, sigma: float,
               config: PricingConfig) -> float:
    def price_at(alpha: float) -> float:
        market = MarketModel.flat(rate, sigma, alpha, contract.n_periods)
        return price(contract, market, config)

    return solve_fair_fee(price_at, contract.premium).fee


def _metadata_lines(spec: RunSpec) -> list[str]:
    lines = [f"version={__version__}"]
    lines.extend(spec.emit().rstrip("\n").split("\n"))
    table = TABLES.get(spec.table_id) if spec.command == "table" else None
    if table is not None and table.reference_label is not None:
        lines.append(f"note={table.reference_label}")
    return lines


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _render(spec: RunSpec, columns: tuple[str, ...], rows: list[dict]) -> str:
    meta = _metadata_lines(spec)
    if spec.out_format == "json":
        payload = {
            "metadata": dict(line.split("=", 1) for line in meta),
            "columns": list(columns),
            "rows": rows,
        }
        return json.dumps(payload, indent=2) + "\n"
    buffer = io.StringIO()
    if spec.out_format == "csv":
        for line in meta:
            buffer.write(f"# {line}\n")
        buffer.write(",".join(columns) + "\n")
        for row in rows:
            buffer.write(",".join(_format_cell(row.get(c)) for c in columns) + "\n")
        return buffer.getvalue()
    # text: aligned columns, metadata as a preamble
    cells = [[_format_cell(row.get(c)) for c in columns] for row in rows]
    widths = [max(len(c), *(len(line[i]) for line in cells)) if cells else len(c)
              for i, c in enumerate(columns)]
    for line in meta:
        buffer.write(f"{line}\n")
    buffer.write("  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip() + "\n")
    for line in cells:
        buffer.write("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() + "\n")
    return buffer.getvalue()


def _row_skeleton(spec: RunSpec) -> dict:
    return {
        "g": format_rate(spec.rate_g),
        "T": format_years(spec.maturity),
        "mode": spec.mode,
        "variant": spec.variant,
        "M": spec.num_segments,
        "J": spec.num_levels if spec.mode == "dynamic" else None,
        "q": spec.quad_order,
    }


def _run_price(spec: RunSpec) -> tuple[tuple[str, ...], list[dict]]:
    contract = _contract_for(spec)
    config = _pricing_config(spec)
    if spec.mode == "dynamic":
        spec.num_levels = config.resolve_levels(contract)
    market = MarketModel.flat(spec.rate, spec.sigma, spec.alpha, contract.n_periods)
    started = time.perf_counter()
    value = price(contract, market, config)
    elapsed = int(round((time.perf_counter() - started) * 1e3))
    row = _row_skeleton(spec)
    row.update(alpha_bp=spec.alpha * 1e4, price=value, runtime_ms=elapsed)
    columns = ("g", "T", "alpha_bp", "price", "mode", "variant", "M", "J", "q", "runtime_ms")
    return columns, [row]


def _run_fee(spec: RunSpec) -> tuple[tuple[str, ...], list[dict]]:
    contract = _contract_for(spec)
    config = _pricing_config(spec)
    spec.num_levels = config.resolve_levels(contract) if spec.mode == "dynamic" else None
    started = time.perf_counter()
    fee = _solve_fee(contract, spec.rate, spec.sigma, config)
    elapsed = int(round((time.perf_counter() - started) * 1e3))
    row = _row_skeleton(spec)
    row.update(fee_bp=fee * 1e4, runtime_ms=elapsed)
    return _BASE_COLUMNS, [row]


def _select_rows(table: TableSpec, selector: str | None) -> tuple[TableRow, ...]:
    if selector is None:
        return table.rows
    wanted = [token.strip() for token in selector.split(",") if token.strip()]
    by_key = {row.key(): row for row in table.rows}
    chosen = []
    for token in wanted:
        if token not in by_key:
            known = ", ".join(by_key)
            raise ConfigError(f"rows={token!r} is not a row of {table.identifier} ({known})")
        chosen.append(by_key[token])
    if not chosen:
        raise ConfigError("rows= selected nothing")
    return tuple(chosen)


def _run_table(spec: RunSpec) -> tuple[tuple[str, ...], list[dict]]:
    table = TABLES[spec.table_id]
    spec.mode = table.mode
    spec.num_segments = table.num_segments
    spec.num_levels = table.num_levels
    spec.quad_order = table.quad_order
    columns = _BASE_COLUMNS
    if table.reference_label is not None:
        columns = columns + ("frequency", "sigma", "reference_bp")
    rows = []
    for table_row in _select_rows(table, spec.rows):
        contract = GmwbContract(
            premium=spec.premium,
            maturity=1.0 / table_row.rate_g,
            withdrawals_per_year=table_row.withdrawals_per_year,
            penalty=table.penalty,
        )
        config = PricingConfig(
            mode=table.mode,
            variant=spec.variant,
            num_segments=table.num_segments,
            num_guarantee_levels=table.num_levels,
            quad_order=table.quad_order,
        )
        started = time.perf_counter()
        fee = _solve_fee(contract, table.rate, table_row.sigma, config)
        elapsed = int(round((time.perf_counter() - started) * 1e3))
        row = {
            "g": format_rate(table_row.rate_g),
            "T": format_years(contract.maturity),
            "fee_bp": fee * 1e4,
            "mode": table.mode,
            "variant": spec.variant,
            "M": table.num_segments,
            "J": table.num_levels,
            "q": table.quad_order,
            "runtime_ms": elapsed,
        }
        if table.reference_label is not None:
            row.update(
                frequency=table_row.withdrawals_per_year,
                sigma=format_rate(table_row.sigma),
                reference_bp=table_row.reference_bp,
            )
        rows.append(row)
    return columns, rows


def _run_mc_validate(spec: RunSpec) -> tuple[tuple[str, ...], list[dict]]:
    spec.mode = "static"   # the simulator prices the contractual schedule
    contract = _contract_for(spec)
    config = PricingConfig(
        mode="static",
        variant=spec.variant,
        num_segments=spec.num_segments,
        quad_order=spec.quad_order,
    )
    started = time.perf_counter()
    engine_fee = _solve_fee(contract, spec.rate, spec.sigma, config)

    def mc_price(alpha: float) -> float:
        market = MarketModel.flat(spec.rate, spec.sigma, alpha, contract.n_periods)
        mc_config = McConfig(contract, market, paths=spec.paths, seed=spec.seed)
        return mc_static_price(mc_config, alpha).price

    mc_fee = solve_fair_fee(mc_price, contract.premium).fee
    market = MarketModel.flat(spec.rate, spec.sigma, mc_fee, contract.n_periods)
    estimate = mc_static_price(McConfig(contract, market, spec.paths, spec.seed), mc_fee)
    se_fee = fee_std_error_derivative(mc_price, mc_fee, estimate.std_error)
    elapsed = int(round((time.perf_counter() - started) * 1e3))
    row = {
        "g": format_rate(contract.annual_rate),
        "T": format_years(contract.maturity),
        "engine_fee_bp": engine_fee * 1e4,
        "mc_fee_bp": mc_fee * 1e4,
        "gap_bp": (mc_fee - engine_fee) * 1e4,
        "se_bp": se_fee * 1e4,
        "paths": spec.paths,
        "seed": spec.seed,
        "M": spec.num_segments,
        "q": spec.quad_order,
        "runtime_ms": elapsed,
    }
    columns = ("g", "T", "engine_fee_bp", "mc_fee_bp", "gap_bp", "se_bp",
               "paths", "seed", "M", "q", "runtime_ms")
    return columns, [row]


_RUNNERS = {
    "price": _run_price,
    "fee": _run_fee,
    "table": _run_table,
    "mc-validate": _run_mc_validate,
}


def run(spec: RunSpec) -> int:
    """Execute a resolved spec; returns the process exit status."""
    try:
        columns, rows = _RUNNERS[spec.command](spec)
    except (GmwbError, ValueError) as error:
        record = {"type": type(error).__name__, "message": str(error)}
        print(json.dumps(record), file=sys.stderr)
        if isinstance(error, (NumericalError, ConditioningError)):
            return EXIT_NUMERICAL
        if isinstance(error, SolverError):
            return EXIT_SOLVER
        return EXIT_USAGE
    text = _render(spec, columns, rows)
    if spec.output is None:
        sys.stdout.write(text)
    else:
        with open(spec.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmwb",
        description="Price guaranteed-minimum-withdrawal annuities and solve fair fees.",
    )
    parser.add_argument("command", choices=("price", "fee", "table", "mc-validate"))
    parser.add_argument("--config", help="flat key=value file; flags override it")
    parser.add_argument("--W0", help="premium (currency, default 100)")
    parser.add_argument("--T", help="maturity in years, e.g. 10y (reciprocal of g)")
    parser.add_argument("--g", help="annual contractual rate with unit, e.g. 10%%")
    parser.add_argument("--Nw", help="withdrawals per year (default 4)")
    parser.add_argument("--beta", help="penalty rate with unit, e.g. 10%% (default)")
    parser.add_argument("--r", help="risk-free rate with unit (default 5%%)")
    parser.add_argument("--sigma", help="volatility with unit (default 20%%)")
    parser.add_argument("--alpha", help="annual fee with unit, e.g. 136bp (price command)")
    parser.add_argument("--mode", help="static or dynamic (default dynamic)")
    parser.add_argument("--variant", help="density or moment (default density)")
    parser.add_argument("--M", help="wealth-grid segments (default 400)")
    parser.add_argument("--J", help="guarantee levels (default 100, monthly 300)")
    parser.add_argument("--q", help="quadrature order (default 9)")
    parser.add_argument("--paths", help="Monte Carlo paths (default 2000000)")
    parser.add_argument("--seed", help="Monte Carlo seed (default 12345)")
    parser.add_argument("--id", help="built-in table: " + ", ".join(sorted(TABLES)))
    parser.add_argument("--rows", help="comma-separated row keys to run, e.g. 10%%,15%%")
    parser.add_argument("--format", help="text, csv or json (default text)")
    parser.add_argument("--output", help="write to this path instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    arguments = _build_parser().parse_args(argv)
    try:
        pairs = _read_config_file(arguments.config) if arguments.config else {}
        for key in _ALL_KEYS:
            flag = getattr(arguments, key.replace("-", "_"), None)
            if flag is not None:
                pairs[key] = flag
        pairs["command"] = arguments.command
        spec = parse_config(pairs)
    except (ConfigError, OSError) as error:
        record = {"type": type(error).__name__, "message": str(error)}
        print(json.dumps(record), file=sys.stderr)
        return EXIT_USAGE
    return run(spec)


if __name__ == "__main__":
    sys.exit(main())
