"""Command-line interface: predict / simulate / compare / sweep / validate-sampler.

Configuration is a single JSON document; individual flags override fields.
Every output row carries config_hash, the SHA-256 of the canonical (sorted-key,
compact) JSON of the physics-relevant fields, so results are traceable to their
exact configuration.  JSON output uses shortest round-trip floats; CSV uses 17
significant digits.  Exit codes: 0 success, 2 configuration error, 3 comparison
threshold breach, 4 numerical failure.
"""

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import sys

from . import haarsim as hs
from . import predictions as pred
from . import splinefourier as sf
from .errors import (
    AccuracyError,
    EstimateInvalidError,
    IncompleteWeightsError,
    InvalidParameterError,
    InvalidRequestError,
    OutOfTruncationError,
    SamplerFailureError,
    SizeLimitError,
    UnsupportedIntegrandError,
    UnsupportedRangeError,
)

DEFAULT_SEED = 1729
DEFAULT_Z_THRESHOLD = 4.0
QUANTITIES = ("C", "C0", "C2", "C_even", "C_odd", "gaussian_limit")

_KIND_NAMES = {
    "so_even": "SO_even",
    "o_minus": "O_minus",
    "usp": "USp",
    "o_full": "O_full",
}
# The ensemble whose Haar average converges to each comparable quantity.
_QUANTITY_KIND = {"C": "O_full", "C_even": "SO_even", "C_odd": "O_minus"}

_CONFIG_FIELDS = {
    "n",
    "phis",
    "quantities",
    "ensemble",
    "ensemble_N",
    "samples",
    "seed",
    "z_threshold",
    "sampler",
    "workers",
    "format",
    "out",
}


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """A parsed, validated run configuration."""

    n: int
    phis: tuple  # TestFunction instances
    quantities: tuple
    ensemble: str
    ensemble_N: tuple
    samples: int
    seed: int
    z_threshold: float
    sampler: str
    workers: int
    fmt: str
    out: str

    @classmethod
    def from_dict(cls, raw):
        unknown = set(raw) - _CONFIG_FIELDS
        if unknown:
            raise InvalidRequestError(f"unknown config fields: {sorted(unknown)}")
        if "phis" not in raw:
            raise InvalidRequestError("config field 'phis' is required")
        specs = raw["phis"]
        if isinstance(specs, dict):
            specs = [specs]
        if not isinstance(specs, list) or not specs:
            raise InvalidRequestError("'phis' must be a spec object or list of them")
        n = raw.get("n")
        if n is None:
            n = len(specs)
        n = int(n)
        if n < 1:
            raise InvalidRequestError("'n' must be a positive integer")
        if len(specs) == 1 and n > 1:
            specs = specs * n
        if len(specs) != n:
            raise InvalidRequestError(
                f"'phis' lists {len(specs)} functions but n = {n}"
            )
        phis = tuple(sf.from_spec(s) for s in specs)
        quantities = tuple(raw.get("quantities", ["C"]))
        for q in quantities:
            if q not in QUANTITIES:
                raise InvalidRequestError(
                    f"unknown quantity {q!r}; choose from {list(QUANTITIES)}"
                )
        ensemble = raw.get("ensemble", "O_full")
        if ensemble not in _KIND_NAMES.values():
            raise InvalidRequestError(
                f"unknown ensemble {ensemble!r}; choose from "
                f"{sorted(_KIND_NAMES.values())}"
            )
        ensemble_N = tuple(int(N) for N in raw.get("ensemble_N", [40]))
        if not ensemble_N or any(N < 1 for N in ensemble_N):
            raise InvalidRequestError("'ensemble_N' must list positive integers")
        samples = int(raw.get("samples", 10000))
        seed = int(raw.get("seed", DEFAULT_SEED))
        z_threshold = float(raw.get("z_threshold", DEFAULT_Z_THRESHOLD))
        sampler = raw.get("sampler", "matrix")
        if sampler not in ("matrix", "weyl"):
            raise InvalidRequestError("'sampler' must be 'matrix' or 'weyl'")
        workers = int(raw.get("workers", 1))
        if workers < 1:
            raise InvalidRequestError("'workers' must be >= 1")
        fmt = raw.get("format", "json")
        if fmt not in ("json", "csv"):
            raise InvalidRequestError("'format' must be 'json' or 'csv'")
        return cls(
            n=n,
            phis=phis,
            quantities=quantities,
            ensemble=ensemble,
            ensemble_N=ensemble_N,
            samples=samples,
            seed=seed,
            z_threshold=z_threshold,
            sampler=sampler,
            workers=workers,
            fmt=fmt,
            out=raw.get("out"),
        )

    def canonical(self):
        """The physics-relevant fields, JSON-ready (presentation knobs excluded)."""
        return {
            "n": self.n,
            "phis": [f.to_spec() for f in self.phis],
            "quantities": list(self.quantities),
            "ensemble": self.ensemble,
            "ensemble_N": list(self.ensemble_N),
            "samples": self.samples,
            "seed": self.seed,
            "z_threshold": self.z_threshold,
            "sampler": self.sampler,
        }

    @property
    def config_hash(self):
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def request(self):
        req = pred.MomentRequest(self.phis)
        if any(q != "gaussian_limit" for q in self.quantities):
            req.require_support()
        return req

    def phi_specs(self):
        return [f.to_spec() for f in self.phis]


def load_config(path, overrides):
    """Parse the JSON config at `path`, apply flag overrides, validate."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidRequestError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise InvalidRequestError(f"{path}: config must be a JSON object")
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    return RunConfig.from_dict(raw)


# ---------------------------------------------------------------- quantities


def _predicted(quantity, req, memo):
    """(value, accuracy, method) for one quantity, memoized per request."""
    if quantity in memo:
        return memo[quantity]
    if quantity == "C":
        rep = pred.c_total(req)
        out = (rep.value, rep.accuracy, "closed-form+quadrature")
    elif quantity == "C0":
        out = (pred.c0(req), 1e-14, "closed-form")
    elif quantity == "C2":
        rep = pred.c_total(req)
        out = (rep.value - pred.c0(req), rep.accuracy, "closed-form+quadrature")
    elif quantity in ("C_even", "C_odd"):
        even, odd = pred.c_even_odd(req)
        memo["C_even"] = (even, 1e-6, "closed-form+quadrature")
        memo["C_odd"] = (odd, 1e-6, "closed-form+quadrature")
        return memo[quantity]
    elif quantity == "gaussian_limit":
        out = (pred.gaussian_limit(req), 1e-12, "closed-form")
    else:
        raise InvalidRequestError(f"unknown quantity {quantity!r}")
    memo[quantity] = out
    return out


# ------------------------------------------------------------------- commands


def _cmd_predict(cfg):
    req = cfg.request()
    memo = {}
    rows = []
    for q in cfg.quantities:
        value, accuracy, method = _predicted(q, req, memo)
        rows.append(
            {
                "quantity": q,
                "n": cfg.n,
                "phis": cfg.phi_specs(),
                "value": float(value),
                "method": method,
                "accuracy": float(accuracy),
                "config_hash": cfg.config_hash,
            }
        )
    return rows, 0


_PREDICT_COLUMNS = ("quantity", "n", "phis", "value", "method", "accuracy", "config_hash")


def _cmd_simulate(cfg):
    req = pred.MomentRequest(cfg.phis)
    rows = []
    for N in cfg.ensemble_N:
        kind = hs.EnsembleKind(cfg.ensemble, N)
        est = hs.mc_moment(
            kind,
            req,
            cfg.samples,
            cfg.seed,
            sampler=cfg.sampler,
            workers=cfg.workers,
        )
        rows.append(
            {
                "kind": cfg.ensemble,
                "N": N,
                "samples": est.samples,
                "seed": cfg.seed,
                "mean": est.mean,
                "stderr": est.stderr,
                "failures": est.failures,
                "config_hash": cfg.config_hash,
            }
        )
    return rows, 0


_SIMULATE_COLUMNS = (
    "kind", "N", "samples", "seed", "mean", "stderr", "failures", "config_hash",
)


def _cmd_compare(cfg):
    req = cfg.request()
    memo = {}
    rows = []
    breach = False
    for q in cfg.quantities:
        if q not in _QUANTITY_KIND:
            raise InvalidRequestError(
                f"compare supports {sorted(_QUANTITY_KIND)}; got {q!r}"
            )
        prediction = _predicted(q, req, memo)[0]
        for N in cfg.ensemble_N:
            kind = hs.EnsembleKind(_QUANTITY_KIND[q], N)
            est = hs.mc_moment(
                kind,
                req,
                cfg.samples,
                cfg.seed,
                sampler=cfg.sampler,
                workers=cfg.workers,
            )
            diff = est.mean - prediction
            if diff == 0.0:
                z = 0.0
            elif est.stderr == 0.0:
                z = float("inf") if diff > 0 else float("-inf")
            else:
                z = diff / est.stderr
            if abs(z) > cfg.z_threshold:
                breach = True
            rows.append(
                {
                    "quantity": q,
                    "kind": kind.tag,
                    "N": N,
                    "prediction": float(prediction),
                    "mc_mean": est.mean,
                    "mc_stderr": est.stderr,
                    "z": z,
                    "samples": est.samples,
                    "seed": cfg.seed,
                    "config_hash": cfg.config_hash,
                }
            )
    return rows, (3 if breach else 0)


_COMPARE_COLUMNS = (
    "quantity", "kind", "N", "prediction", "mc_mean", "mc_stderr", "z",
    "samples", "seed", "config_hash",
)


def _parse_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidRequestError("--grid expects start:stop:step")
    start, stop, step = (float(p) for p in parts)
    if step <= 0:
        raise InvalidRequestError("--grid step must be positive")
    values = []
    k = 0
    while True:
        v = start + k * step
        if v > stop + 1e-12:
            break
        values.append(round(v, 12))
        k += 1
    if not values:
        raise InvalidRequestError("--grid produced no points")
    return values


def _cmd_sweep(cfg, vary, grid_text):
    if vary != "sigma":
        raise InvalidRequestError(f"--vary supports 'sigma'; got {vary!r}")
    for f in cfg.phis:
        if f.family is None:
            raise InvalidRequestError(
                "sigma sweeps need built-in family test functions"
            )
    rows = []
    for sigma in _parse_grid(grid_text):
        specs = [{"family": f.family, "sigma": sigma} for f in cfg.phis]
        cfg_s = dataclasses.replace(
            cfg, phis=tuple(sf.from_spec(s) for s in specs)
        )
        req = cfg_s.request()
        memo = {}
        for q in cfg_s.quantities:
            value, accuracy, method = _predicted(q, req, memo)
            rows.append(
                {
                    "sigma": sigma,
                    "quantity": q,
                    "n": cfg_s.n,
                    "value": float(value),
                    "method": method,
                    "accuracy": float(accuracy),
                    "config_hash": cfg_s.config_hash,
                }
            )
    return rows, 0


_SWEEP_COLUMNS = (
    "sigma", "quantity", "n", "value", "method", "accuracy", "config_hash",
)


def _cmd_validate_sampler(kind_name, N, samples, seed, sampler):
    kind = hs.EnsembleKind(_KIND_NAMES[kind_name], N)
    diag = hs.validate_sampler(kind, samples, seed, sampler=sampler)
    diag["kind"] = {"tag": kind.tag, "N": kind.N}
    return diag, 0


# --------------------------------------------------------------------- output


def _fmt_cell(value):
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    if isinstance(value, (list, dict)):
        return json.dumps(value, sort_keys=True, separators=(",", ":"))
    return str(value)


def _emit(payload, fmt, out, columns=None):
    """Serialize rows (or one object) to stdout or a file, deterministically."""
    if fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        if columns is None:
            raise InvalidRequestError("CSV output is undefined for this command")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in payload:
            writer.writerow([_fmt_cell(row[c]) for c in columns])
        text = buf.getvalue()
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------- arg parsing


def _add_common(p):
    p.add_argument("--config", required=True, help="JSON configuration file")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--format", dest="fmt", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int, default=None, help="master seed override")


def _add_mc(p):
    p.add_argument("--samples", type=int, default=None)
    p.add_argument(
        "--ensemble-N",
        dest="ensemble_N",
        default=None,
        help="comma-separated list of N values, e.g. 20,40,80",
    )
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--sampler", choices=("matrix", "weyl"), default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orthomoments",
        description=(
            "Centered moments of linear eigenvalue statistics over the "
            "orthogonal group: closed-form predictions and Haar Monte Carlo. "
            f"Default master seed: {DEFAULT_SEED}."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="closed-form quantities from a config")
    _add_common(p)

    p = sub.add_parser("simulate", help="Monte Carlo means for one ensemble")
    _add_common(p)
    _add_mc(p)

    p = sub.add_parser("compare", help="predictions vs Monte Carlo, with z-scores")
    _add_common(p)
    _add_mc(p)
    p.add_argument("--z-threshold", dest="z_threshold", type=float, default=None)

    p = sub.add_parser("sweep", help="predictions over a sigma grid")
    _add_common(p)
    p.add_argument("--vary", required=True, help="swept parameter (sigma)")
    p.add_argument("--grid", required=True, help="start:stop:step")

    p = sub.add_parser("validate-sampler", help="sampler structural diagnostics")
    p.add_argument("--kind", required=True, choices=sorted(_KIND_NAMES))
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--sampler", choices=("matrix", "weyl"), default="matrix")
    p.add_argument("--out", default=None)
    return parser


def _overrides(args):
    over = {
        "seed": getattr(args, "seed", None),
        "samples": getattr(args, "samples", None),
        "workers": getattr(args, "workers", None),
        "sampler": getattr(args, "sampler", None),
        "z_threshold": getattr(args, "z_threshold", None),
        "format": getattr(args, "fmt", None),
        "out": getattr(args, "out", None),
    }
    raw_n = getattr(args, "ensemble_N", None)
    if raw_n is not None:
        try:
            over["ensemble_N"] = [int(x) for x in raw_n.split(",") if x]
        except ValueError as exc:
            raise InvalidRequestError(f"bad --ensemble-N {raw_n!r}") from exc
    return over


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate-sampler":
            diag, code = _cmd_validate_sampler(
                args.kind, args.N, args.samples, args.seed, args.sampler
            )
            _emit(diag, "json", args.out)
            return code
        cfg = load_config(args.config, _overrides(args))
        if args.command == "predict":
            rows, code = _cmd_predict(cfg)
            columns = _PREDICT_COLUMNS
        elif args.command == "simulate":
            rows, code = _cmd_simulate(cfg)
            columns = _SIMULATE_COLUMNS
        elif args.command == "compare":
            rows, code = _cmd_compare(cfg)
            columns = _COMPARE_COLUMNS
        else:
            rows, code = _cmd_sweep(cfg, args.vary, args.grid)
            columns = _SWEEP_COLUMNS
        _emit(rows, cfg.fmt, cfg.out, columns)
        return code
    except (
        InvalidParameterError,
        InvalidRequestError,
        SizeLimitError,
        IncompleteWeightsError,
        FileNotFoundError,
    ) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (
        AccuracyError,
        EstimateInvalidError,
        SamplerFailureError,
        UnsupportedIntegrandError,
        OutOfTruncationError,
        UnsupportedRangeError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
