"""Command-line front end.

Four subcommands:

* ``sweep``    — information/disturbance curves over an attack-family
                 parameter grid, written as CSV.
* ``simulate`` — Monte Carlo protocol run, written as JSON counts.
* ``verify``   — closed-form formulas against exact enumeration.
* ``mub``      — analyzer-tree synthesis with certification report.

Every file output is written atomically (temp file + rename) and is
accompanied by a ``<output>.manifest.json`` recording the resolved
configuration, seed, tool version, and wall-clock duration.  Outputs
are deterministic given (config, seed); numbers are printed with 12
significant digits.

Exit codes: 0 success, 1 usage/configuration error, 2 verification
failure (a failed formula check or a gated simulation outside 3 sigma).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import __version__, attacks, metrics, mubnet
from .attacks import (
    EXPONENT_LINEAR,
    EXPONENT_SQUARED,
    DiagonalAttack,
    MultiPeakShape,
    attack_from_json,
    attack_to_json,
    gaussian_grid_weights,
    gaussian_window_attack,
    multipeak_attack,
    product_multipeak_attack,
    sharp_attack,
    square_window_attack,
)
from .franson import SettingsBank
from .mcsim import ProtocolConfig, SiftedStats, ZeroVarianceError, compare_to_exact, run_protocol
from .metrics import (
    disturbance,
    eve_information,
    multi_setting_error_rate,
    multipeak_error_rate,
    product_error_rate,
    window_error_rate,
)
from .statevec import FrameSpec

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2

_SEED_ENV = "FRANSON_SEC_SEED"


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _atomic_write(path: str, text: str) -> None:
    import tempfile

    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_manifest(
    out_path: str, command: str, config: dict, seed: int | None, started: float
) -> None:
    manifest = {
        "schema": "run-manifest/1",
        "command": command,
        "config": config,
        "seed": seed,
        "tool_version": __version__,
        "outputs": [os.path.abspath(out_path)],
        "duration_s": round(time.monotonic() - started, 6),
    }
    _atomic_write(out_path + ".manifest.json", json.dumps(manifest, indent=2) + "\n")


def _resolve_seed(args, config: dict | None = None) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(_SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{_SEED_ENV} must be an integer, got {env!r}") from exc
    if config and "seed" in config:
        return int(config["seed"])
    return 0


def _load_config(args, presets: dict[str, dict], command: str) -> dict:
    if args.preset is not None and args.config is not None:
        raise ConfigError("pass either --preset or --config, not both")
    if args.preset is not None:
        if args.preset not in presets:
            raise ConfigError(
                f"unknown {command} preset {args.preset!r}; "
                f"available: {', '.join(sorted(presets))}"
            )
        return json.loads(json.dumps(presets[args.preset]))  # deep copy
    if args.config is None:
        raise ConfigError("need --preset or --config")
    try:
        with open(args.config) as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# sweep


def _matched_window_width(num_bins: int, window_L: int) -> float:
    """Soft-window width whose leak matches a hard window of L bins."""
    from scipy.optimize import brentq

    frame = FrameSpec(num_bins)
    target = math.log2(num_bins) - math.log2(window_L)

    def gap(a: float) -> float:
        return eve_information(gaussian_window_attack(frame, a)) - target

    return brentq(gap, 1e-4, 4.0 * num_bins, xtol=1e-12)


def _sweep_rows(cfg: dict) -> list[tuple[float, DiagonalAttack, SettingsBank]]:
    """Expand a sweep config into (param, attack, settings bank) rows."""
    family = cfg.get("family")
    try:
        num_bins = int(cfg["num_bins"])
    except KeyError as exc:
        raise ConfigError("sweep config needs num_bins") from exc
    frame = FrameSpec(num_bins, float(cfg.get("bin_width", 1.0)))
    mode = cfg.get("exponent_mode", EXPONENT_SQUARED)
    rows: list[tuple[float, DiagonalAttack, SettingsBank]] = []

    if family == "gaussian_multipeak":
        L = int(cfg["L"])
        delta_e = int(cfg.get("delta_e", 1))
        bank = SettingsBank.of(*cfg.get("bank", [delta_e]))
        for alpha in cfg["alphas"]:
            if alpha == 0:
                shape = MultiPeakShape.flat(L, delta_e)
            else:
                weights = gaussian_grid_weights(L, 1, float(alpha), mode).weights
                shape = MultiPeakShape(L, (delta_e,), weights)
            rows.append((float(alpha), multipeak_attack(frame, shape), bank))
    elif family == "product_gaussian":
        w = int(cfg["w"])
        spacings = tuple(int(s) for s in cfg["spacings"])
        bank = SettingsBank.of(*cfg.get("bank", list(spacings)))
        for alpha in cfg["alphas"]:
            if alpha == 0:
                weights = None
            else:
                weights = gaussian_grid_weights(
                    w, len(spacings), float(alpha), mode
                ).weights
            rows.append(
                (
                    float(alpha),
                    product_multipeak_attack(frame, w, spacings, weights),
                    bank,
                )
            )
    elif family == "flat_multipeak":
        delta_e = int(cfg.get("delta_e", 1))
        bank = SettingsBank.of(*cfg.get("bank", [delta_e]))
        for L in cfg["Ls"]:
            shape = MultiPeakShape.flat(int(L), delta_e)
            rows.append((float(L), multipeak_attack(frame, shape), bank))
    elif family == "square_window":
        L = int(cfg["L"])
        attack = square_window_attack(frame, L)
        for dt in cfg["delta_taus"]:
            rows.append((float(dt), attack, SettingsBank.of(int(dt))))
    elif family == "gaussian_window":
        if "a" in cfg:
            a = float(cfg["a"])
        elif "match_window_L" in cfg:
            a = _matched_window_width(num_bins, int(cfg["match_window_L"]))
        else:
            raise ConfigError("gaussian_window sweep needs a or match_window_L")
        attack = gaussian_window_attack(frame, a)
        for dt in cfg["delta_taus"]:
            rows.append((float(dt), attack, SettingsBank.of(int(dt))))
    else:
        raise ConfigError(f"unknown sweep family {family!r}")

    if not rows:
        raise ConfigError("sweep grid is empty")
    return rows


_SWEEP_PRESETS: dict[str, dict] = {
    # soft window vs. delay at the leak level of a 6-bin hard window
    "fig2": {
        "schema": "sweep-config/1",
        "family": "gaussian_window",
        "num_bins": 64,
        "match_window_L": 6,
        "delta_taus": list(range(1, 13)),
    },
    # soft comb of 64 peaks: leak/disturbance trade-off over the width
    "fig3": {
        "schema": "sweep-config/1",
        "family": "gaussian_multipeak",
        "num_bins": 1024,
        "L": 64,
        "delta_e": 1,
        "alphas": [round(3e-4 * 1.18**i, 10) for i in range(48)],
    },
    # two-axis soft comb, 16 peaks per axis
    "fig5": {
        "schema": "sweep-config/1",
        "family": "product_gaussian",
        "num_bins": 1024,
        "w": 16,
        "spacings": [3, 67],
        "alphas": [round(0.05 * i, 10) for i in range(1, 11)],
    },
    # two-axis combs at the quoted operating points (0 = flat)
    "table-sec6": {
        "schema": "sweep-config/1",
        "family": "product_gaussian",
        "num_bins": 1024,
        "w": 16,
        "spacings": [3, 67],
        "alphas": [0, 0.2, 0.3],
    },
}


def _cmd_sweep(args) -> int:
    started = time.monotonic()
    config = _load_config(args, _SWEEP_PRESETS, "sweep")
    rows = _sweep_rows(config)
    convention = config.get("convention", metrics.RAW_AVERAGE)

    def one(row):
        param, attack, bank = row
        report = disturbance(attack, bank, convention=convention)
        return metrics.InfoDisturbancePoint(
            param=param,
            eve_bits=eve_information(attack),
            p_error=report.p_error,
            visibility=report.visibility,
        )

    if args.threads > 1 and len(rows) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            points = list(pool.map(one, rows))
    else:
        points = [one(row) for row in rows]

    if args.out is None:
        print("param,eve_bits,p_error,visibility")
        for pt in points:
            print(
                f"{_fmt(pt.param)},{_fmt(pt.eve_bits)},"
                f"{_fmt(pt.p_error)},{_fmt(pt.visibility)}"
            )
    else:
        metrics.write_curve_csv(args.out, points)
        _write_manifest(args.out, "sweep", config, None, started)
        print(f"wrote {len(points)} points to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate

_SIM_PRESETS: dict[str, dict] = {
    "no-attack": {
        "schema": "simulate-config/1",
        "num_bins": 1024,
        "attack": None,
        "bank": [1],
        "num_frames": 1_000_000,
        "p_timing": 0.9,
    },
    "sharp": {
        "schema": "simulate-config/1",
        "num_bins": 1024,
        "attack": {"schema": "attack/1", "kind": "sharp", "params": {}},
        "bank": [1],
        "num_frames": 1_000_000,
        "p_timing": 0.9,
    },
    # flat comb of 32 peaks probed at its own spacing
    "flat-comb": {
        "schema": "simulate-config/1",
        "num_bins": 1024,
        "attack": {
            "schema": "attack/1",
            "kind": "multipeak",
            "params": {"L": 32, "delta_e": 1, "weights": [1.0 / 32] * 32},
        },
        "bank": [1],
        "num_frames": 1_000_000,
        "p_timing": 0.9,
    },
}


def _protocol_from_config(config: dict, seed: int) -> ProtocolConfig:
    try:
        frame = FrameSpec(int(config["num_bins"]), float(config.get("bin_width", 1.0)))
        bank = SettingsBank.of(*[int(d) for d in config["bank"]])
    except KeyError as exc:
        raise ConfigError(f"simulate config missing {exc}") from exc
    attack_doc = config.get("attack")
    attack = None if attack_doc is None else attack_from_json(attack_doc, frame)
    return ProtocolConfig(
        frame=frame,
        bank=bank,
        attack=attack,
        num_frames=int(config.get("num_frames", 100_000)),
        seed=seed,
        p_timing=float(config.get("p_timing", 0.9)),
        intercept_fraction=float(config.get("intercept_fraction", 1.0)),
    )


def _cmd_simulate(args) -> int:
    started = time.monotonic()
    config = _load_config(args, _SIM_PRESETS, "simulate")
    seed = _resolve_seed(args, config)
    protocol = _protocol_from_config(config, seed)
    stats = run_protocol(protocol)
    payload = stats.to_json()

    if args.out is None:
        print(payload)
    else:
        _atomic_write(args.out, payload + "\n")
        resolved = dict(config)
        resolved["seed"] = seed
        _write_manifest(args.out, "simulate", resolved, seed, started)
        print(f"wrote stats to {args.out}")

    if args.gate:
        exact = 0.0
        if protocol.attack is not None:
            exact = disturbance(
                protocol.attack, protocol.bank, state=protocol.state
            ).p_error
        try:
            z = compare_to_exact(stats, exact)
        except ZeroVarianceError as exc:
            print(f"gate: FAIL ({exc})", file=sys.stderr)
            return EXIT_VERIFY
        print(f"gate: z = {_fmt(z)} against exact p = {_fmt(exact)}")
        if abs(z) > 3.0:
            print("gate: FAIL (|z| > 3)", file=sys.stderr)
            return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify

_FORMULAS = {
    "window": (window_error_rate, ("L", "dtau")),
    "multipeak": (multipeak_error_rate, ("L",)),
    "multi-setting": (multi_setting_error_rate, ("L", "d")),
    "product": (product_error_rate, ("w",)),
}


def _verify_checks() -> list[tuple[str, float, float]]:
    """(name, computed-by-enumeration, closed-form) triples."""
    checks: list[tuple[str, float, float]] = []

    frame = FrameSpec(64)
    for L in (2, 4, 8):
        attack = square_window_attack(frame, L)
        for dt in range(1, min(L + 3, 12)):
            p = disturbance(attack, SettingsBank.of(dt)).p_error
            checks.append((f"window L={L} dtau={dt}", p, window_error_rate(L, dt)))
        checks.append(
            (
                f"window-info L={L}",
                eve_information(attack),
                metrics.window_information(64, L),
            )
        )

    frame = FrameSpec(128)
    for L in (2, 4, 8):
        for de in (1, 3):
            attack = multipeak_attack(frame, MultiPeakShape.flat(L, de))
            p = disturbance(attack, SettingsBank.of(de)).p_error
            checks.append((f"comb L={L} de={de}", p, multipeak_error_rate(L)))
            checks.append(
                (
                    f"comb-info L={L} de={de}",
                    eve_information(attack),
                    metrics.comb_information(128, [1.0 / L] * L),
                )
            )

    frame = FrameSpec(256)
    delta_e = 5
    unmatched = [7, 11, 13]
    for L in (4, 8):
        attack = multipeak_attack(frame, MultiPeakShape.flat(L, delta_e))
        for d in (1, 2, 3):
            bank = SettingsBank.of(delta_e, *unmatched[: d - 1])
            p = disturbance(attack, bank).p_error
            checks.append(
                (f"multi-setting L={L} d={d}", p, multi_setting_error_rate(L, d))
            )

    frame = FrameSpec(256)
    for w in (2, 4):
        for spacings in ((3,), (3, 17)):
            attack = product_multipeak_attack(frame, w, spacings)
            p = disturbance(attack, SettingsBank.of(spacings[0])).p_error
            name = f"product w={w} d={len(spacings)}"
            checks.append((name, p, product_error_rate(w)))
            checks.append(
                (
                    name + " info",
                    eve_information(attack),
                    metrics.product_information(256, w, len(spacings)),
                )
            )
    return checks


def _exponent_mode_report() -> dict:
    """Which soft-comb exponent convention reproduces the reference
    operating point (64 peaks per 1024 bins giving ~6 bits at ~99.2%)."""
    frame = FrameSpec(1024)
    outcome = {}
    for mode in (EXPONENT_SQUARED, EXPONENT_LINEAR):
        weights = gaussian_grid_weights(32, 1, 0.0335, mode).weights
        attack = multipeak_attack(frame, MultiPeakShape(32, (1,), weights))
        bits = eve_information(attack)
        vis = disturbance(attack, SettingsBank.of(1)).visibility
        outcome[mode] = {
            "eve_bits": bits,
            "visibility": vis,
            "matches": bool(abs(bits - 6.0) <= 0.15 and abs(vis - 0.992) <= 0.003),
        }
    matching = [mode for mode, entry in outcome.items() if entry["matches"]]
    return {
        "exponent_mode": matching[0] if matching else None,
        "candidates": outcome,
    }


def _cmd_verify(args) -> int:
    started = time.monotonic()
    if args.formula is not None:
        if args.formula not in _FORMULAS:
            print(
                f"unknown formula {args.formula!r}; "
                f"available: {', '.join(sorted(_FORMULAS))}",
                file=sys.stderr,
            )
            return EXIT_USAGE
        func, needed = _FORMULAS[args.formula]
        values = []
        for name in needed:
            value = getattr(args, name)
            if value is None:
                print(f"formula {args.formula} needs --{name}", file=sys.stderr)
                return EXIT_USAGE
            values.append(value)
        print(_fmt(func(*values)))
        return EXIT_OK

    tol = 1e-9
    checks = _verify_checks()
    failures = 0
    lines = []
    for name, computed, expected in checks:
        err = abs(computed - expected)
        ok = err <= tol
        failures += 0 if ok else 1
        status = "PASS" if ok else "FAIL"
        line = f"{status} {name}: {_fmt(computed)} vs {_fmt(expected)} (|err|={err:.3e})"
        lines.append(line)
        print(line)

    exponent = _exponent_mode_report()
    print(f"exponent mode matching reference points: {exponent['exponent_mode']}")

    if args.out is not None:
        report = {
            "schema": "verify-report/1",
            "tolerance": tol,
            "checks": [
                {
                    "name": name,
                    "computed": computed,
                    "expected": expected,
                    "pass": abs(computed - expected) <= tol,
                }
                for name, computed, expected in checks
            ],
            "exponent_mode": exponent["exponent_mode"],
            "exponent_candidates": exponent["candidates"],
            "failures": failures,
        }
        _atomic_write(args.out, json.dumps(report, indent=2) + "\n")
        _write_manifest(args.out, "verify", {"formula": None}, None, started)

    if failures:
        print(f"{failures} formula check(s) failed", file=sys.stderr)
        return EXIT_VERIFY
    print(f"all {len(checks)} formula checks passed")
    return EXIT_OK


# ---------------------------------------------------------------------------
# mub


def _cmd_mub(args) -> int:
    started = time.monotonic()
    if args.N is None:
        print("mub needs --N", file=sys.stderr)
        return EXIT_USAGE
    if not 1 <= args.N <= 12:
        print(f"--N must lie in [1, 12], got {args.N}", file=sys.stderr)
        return EXIT_USAGE
    try:
        net = mubnet.synthesize_network(args.N, method=args.method)
    except mubnet.SynthesisError as exc:
        print(f"synthesis failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY

    doc = mubnet.network_to_json(net)
    if args.N <= 5:
        report = mubnet.certify_network(net)
        doc["certification"] = report
        worst = max(report.values())
        print(f"depth {args.N}: {net.num_blocks} blocks, max deviation {worst:.3e}")
        if worst > 1e-10:
            print("certification failed", file=sys.stderr)
            return EXIT_VERIFY
    else:
        doc["certification"] = None
        print(f"depth {args.N}: {net.num_blocks} blocks (certification skipped)")

    payload = json.dumps(doc, indent=2) + "\n"
    if args.out is None:
        print(payload, end="")
    else:
        _atomic_write(args.out, payload)
        _write_manifest(args.out, "mub", {"N": args.N, "method": args.method}, None, started)
        print(f"wrote netlist to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="franson-sec", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p: _Parser) -> None:
        p.add_argument("--config", help="JSON config path")
        p.add_argument("--preset", help="named built-in config")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int, help=f"RNG seed (fallback: ${_SEED_ENV})")
        p.add_argument("--threads", type=int, default=1, help="worker threads")

    p_sweep = sub.add_parser("sweep", help="information/disturbance curve CSV")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_sim = sub.add_parser("simulate", help="Monte Carlo protocol run")
    common(p_sim)
    p_sim.add_argument(
        "--gate",
        action="store_true",
        help="exit 2 unless the error rate sits within 3 sigma of exact",
    )
    p_sim.set_defaults(func=_cmd_simulate)

    p_verify = sub.add_parser("verify", help="closed forms vs. enumeration")
    p_verify.add_argument("--out", help="JSON report path")
    p_verify.add_argument("--formula", help="print one closed-form value")
    p_verify.add_argument("--L", type=int, help="window/comb size")
    p_verify.add_argument("--dtau", type=int, help="interferometer delay in bins")
    p_verify.add_argument("--d", type=int, help="number of delay settings / axes")
    p_verify.add_argument("--w", type=int, help="peaks per axis")
    p_verify.set_defaults(func=_cmd_verify)

    p_mub = sub.add_parser("mub", help="synthesize an analyzer tree")
    p_mub.add_argument("--N", type=int, help="tree depth (outputs = 2^N)")
    p_mub.add_argument("--out", help="netlist JSON path")
    p_mub.add_argument(
        "--method",
        default="auto",
        choices=["auto", "constructive", "search"],
        help="phase synthesis strategy",
    )
    p_mub.set_defaults(func=_cmd_mub)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
