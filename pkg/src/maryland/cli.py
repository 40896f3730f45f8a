"""Command-line front end.

    maryland verify   --omega golden --theta 0.3 --eta 1.0 --l 0.5 --n 50
    maryland cocycle  --n 100 --format json
    maryland renorm   --n 100 --out chain.csv
    maryland sigma    --re -3:3:13 --im -2:2:9
    maryland minsol   --re -1.5:1.5:13 --im -1:1:5
    maryland scan     --eta-grid -2:2:5 --l-grid 0.2:1:3

Parameters come from built-in defaults, then a ``key = value`` config file
(``--config``), then explicit flags.  Exit codes: 0 success, 1 a check
failed, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .cocycle import cocycle_product
from .errors import DomainError, MarylandError, MinSolPoleError
from .minsol import MinSolContext, pole_set_distance, upsilon_real
from .params import SpectralParams
from .renorm import cascade, cascade_reconstruct, renorm_reconstruct, renormalize_once
from .sigma import LATTICE_TOL, SigmaContext, lattice_distance, log_sigma_array
from .verify import run_verify

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3

NAMED_OMEGA = {
    "golden": (math.sqrt(5) - 1) / 2,
    "silver": math.sqrt(2) - 1,
}

DEFAULTS = {
    "omega": "golden",
    "theta": 0.3,
    "eta": None,
    "l": None,
    "energy": None,
    "lambda": None,
    "n": 50,
    "depth": 64,
    "tol": 1e-6,
    "precision": "double",
    "out": None,
    "format": None,
    "re": None,
    "im": None,
    "eta_grid": "-2:2:5",
    "l_grid": "0.2:1.0:3",
    "workers": 1,
    "strict": False,
}
# eta and l fall back to these when neither they nor (energy, lambda) are given
DEFAULT_ETA, DEFAULT_L = 1.0, 0.5

COMMANDS = ("verify", "cocycle", "renorm", "sigma", "minsol", "scan")


class InputError(Exception):
    pass


# --- serialization -----------------------------------------------------------

def fmt(x) -> str:
    """Floats with 17 significant digits; everything else via ``str``."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    if x is None:
        return ""
    return str(x)


def to_json(obj, indent=0) -> str:
    """Deterministic JSON with 17-digit floats; non-finite floats become strings."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{to_json(str(k))}: {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [inner + to_json(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        s = fmt(obj)
        return s if math.isfinite(float(obj)) else '"' + s + '"'
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return '"' + s + '"'


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# --- configuration -----------------------------------------------------------

def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise InputError(f"cannot read config {path!r}: {exc}") from exc
    for i, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{i}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        k = k.replace("-", "_")
        if k not in DEFAULTS:
            raise InputError(f"{path}:{i}: unknown key {k!r}")
        out[k] = v
    return out


def _float(name, v):
    try:
        return float(v)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a number, got {v!r}") from None


def _int(name, v):
    try:
        f = float(v)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be an integer, got {v!r}") from None
    if not f.is_integer():
        raise InputError(f"{name} must be an integer, got {v!r}")
    return int(f)


def _bool(name, v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise InputError(f"{name} must be a boolean, got {v!r}")


def parse_grid(name, spec):
    """``"a:b:n"`` -> ``np.linspace(a, b, n)``."""
    parts = str(spec).split(":")
    if len(parts) != 3:
        raise InputError(f"{name} must look like start:stop:count, got {spec!r}")
    a, b = _float(name, parts[0]), _float(name, parts[1])
    n = _int(name, parts[2])
    if n < 1:
        raise InputError(f"{name} count must be positive")
    return np.linspace(a, b, n)


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags, then type-check everything."""
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None and v is not False:
            cfg[k] = v
    out = {}
    om = str(cfg["omega"]).strip().lower()
    out["omega"] = NAMED_OMEGA[om] if om in NAMED_OMEGA else _float("omega", cfg["omega"])
    out["theta"] = _float("theta", cfg["theta"])
    have_el = cfg["energy"] is not None or cfg["lambda"] is not None
    have_eta = cfg["eta"] is not None or cfg["l"] is not None
    if have_el and have_eta:
        raise InputError("give either (eta, l) or (energy, lambda), not both")
    if have_el:
        if cfg["energy"] is None or cfg["lambda"] is None:
            raise InputError("energy and lambda must be given together")
        out["energy"] = _float("energy", cfg["energy"])
        out["lambda"] = _float("lambda", cfg["lambda"])
    else:
        out["eta"] = _float("eta", DEFAULT_ETA if cfg["eta"] is None else cfg["eta"])
        out["l"] = _float("l", DEFAULT_L if cfg["l"] is None else cfg["l"])
    out["n"] = _int("n", cfg["n"])
    out["depth"] = _int("depth", cfg["depth"])
    if out["depth"] < 1:
        raise InputError("depth must be >= 1")
    out["tol"] = _float("tol", cfg["tol"])
    if not out["tol"] > 0:
        raise InputError("tol must be positive")
    out["precision"] = str(cfg["precision"])
    if out["precision"] not in ("double", "extended"):
        raise InputError("precision must be 'double' or 'extended'")
    out["format"] = cfg["format"]
    if out["format"] is not None and out["format"] not in ("csv", "json"):
        raise InputError("format must be 'csv' or 'json'")
    out["out"] = cfg["out"]
    out["re"], out["im"] = cfg["re"], cfg["im"]
    out["eta_grid"], out["l_grid"] = cfg["eta_grid"], cfg["l_grid"]
    out["workers"] = _int("workers", cfg["workers"])
    out["strict"] = _bool("strict", cfg["strict"])
    return out


def make_params(cfg) -> SpectralParams:
    if "energy" in cfg:
        return SpectralParams.from_energy(cfg["omega"], cfg["theta"], cfg["energy"], cfg["lambda"])
    return SpectralParams(cfg["omega"], cfg["theta"], cfg["eta"], cfg["l"])


# --- commands ------------------------------------------------------------------

def cmd_verify(cfg):
    p = make_params(cfg)
    report = run_verify(p, cfg["n"])
    if cfg["format"] == "csv":
        rows = [(c["name"], c["residual"], c["tol"], c["passed"]) for c in report["checks"]]
        text = to_csv(("name", "residual", "tol", "passed"), rows)
    else:
        text = to_json(report) + "\n"
    return text, EXIT_OK if report["passed"] else EXIT_CHECK


def _matrix_fields(m):
    return [v for x in np.asarray(m).ravel() for v in (float(x.real), float(x.imag))]


MATRIX_COLUMNS = ("m00_re", "m00_im", "m01_re", "m01_im", "m10_re", "m10_im", "m11_re", "m11_im")


def cmd_cocycle(cfg):
    p = make_params(cfg)
    P = cocycle_product(p, cfg["n"], precision=cfg["precision"])
    vals = _matrix_fields(P.mat)
    if cfg["format"] == "json":
        obj = {"n": cfg["n"], "log_scale": P.log_scale, "mantissa": dict(zip(MATRIX_COLUMNS, vals))}
        return to_json(obj) + "\n", EXIT_OK
    return to_csv(("n", "log_scale") + MATRIX_COLUMNS, [[cfg["n"], P.log_scale] + vals]), EXIT_OK


def cmd_renorm(cfg):
    p = make_params(cfg)
    chain = cascade(p, cfg["n"], max_depth=cfg["depth"], precision=cfg["precision"], tol=cfg["tol"],
                    truncate=not cfg["strict"])
    rows = []
    for k, (lv, cond, pert) in enumerate(zip(chain.levels, chain.conditions, chain.perturbed)):
        q = lv.params
        rows.append([k, q.omega, q.theta, q.eta, q.l, lv.n_steps, cond, pert])
    t = chain.terminal_params
    rows.append([chain.depth, t.omega, t.theta, t.eta, t.l, chain.terminal_n, None, False])
    header = ("k", "omega", "theta", "eta", "l", "n", "condition", "perturbed")
    if cfg["format"] == "json":
        direct = cocycle_product(chain.levels[0].params if chain.levels else p, cfg["n"],
                                 precision=cfg["precision"])
        obj = {
            "levels": [dict(zip(header, r)) for r in rows],
            "depth": chain.depth,
            "truncated": chain.truncated,
            "error_estimate": chain.error_estimate,
            "direct_comparison": cascade_reconstruct(chain).rel_error(direct),
        }
        return to_json(obj) + "\n", EXIT_OK
    return to_csv(header, rows), EXIT_OK


def _grid(cfg, re_default, im_default):
    re = parse_grid("re", cfg["re"] or re_default)
    im = parse_grid("im", cfg["im"] or im_default)
    return [complex(x, y) for y in im for x in re]


GRID_HEADER = ("re", "im", "value_re", "value_im", "log_abs")


def cmd_sigma(cfg):
    """sigma on a grid; points within the lattice tolerance of a zero or pole are skipped."""
    ctx = SigmaContext(cfg["omega"])
    pts = [z for z in _grid(cfg, "-3:3:13", "-2:2:9") if lattice_distance(ctx, z) >= LATTICE_TOL]
    ls = log_sigma_array(ctx, np.array(pts, dtype=complex)) if pts else np.array([])
    rows = []
    for z, v in zip(pts, ls):
        f = complex(np.exp(v))
        rows.append([z.real, z.imag, f.real, f.imag, float(v.real)])
    return _grid_output(cfg, rows)


def cmd_minsol(cfg):
    """The minimal solution on a grid; points on its pole set are skipped."""
    ctx = MinSolContext(make_params(cfg))
    pts = [z for z in _grid(cfg, "-1.5:1.5:13", "-1:1:5")
           if pole_set_distance(z, ctx.omega) >= ctx.pole_tol]
    vals = upsilon_real(ctx, np.array(pts, dtype=complex)) if pts else []
    rows = []
    for z, f in zip(pts, vals):
        f = complex(f)
        rows.append([z.real, z.imag, f.real, f.imag, math.log(abs(f)) if f != 0 else -math.inf])
    return _grid_output(cfg, rows)


def _grid_output(cfg, rows):
    if cfg["format"] == "json":
        return to_json([dict(zip(GRID_HEADER, r)) for r in rows]) + "\n", EXIT_OK
    return to_csv(GRID_HEADER, rows), EXIT_OK


SCAN_HEADER = ("eta", "l", "energy", "lambda", "n", "n_next", "condition_left", "condition_right",
               "renorm_error", "status")


def scan_point(args):
    """One row of ``scan``: the renormalization identity at ``(eta, l)``."""
    omega, theta, eta, l, n = args
    try:
        p = SpectralParams(omega, theta, eta, l)
        r = renormalize_once(p, n)
        err = renorm_reconstruct(r).rel_error(cocycle_product(r.params, n))
        status = "perturbed" if r.perturbed else "ok"
        return [p.eta, l, p.energy, p.coupling, n, r.n_next, r.condition_left, r.condition_right, err, status]
    except MarylandError as exc:
        return [eta, l, math.nan, math.nan, n, None, math.nan, math.nan, math.nan, type(exc).__name__]


def cmd_scan(cfg):
    etas = parse_grid("eta_grid", cfg["eta_grid"])
    ls = parse_grid("l_grid", cfg["l_grid"])
    jobs = [(cfg["omega"], cfg["theta"], float(e), float(l), cfg["n"]) for e in etas for l in ls]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as ex:
            rows = list(ex.map(scan_point, jobs))
    else:
        rows = [scan_point(j) for j in jobs]
    if cfg["format"] == "json":
        return to_json([dict(zip(SCAN_HEADER, r)) for r in rows]) + "\n", EXIT_OK
    return to_csv(SCAN_HEADER, rows), EXIT_OK


HANDLERS = {
    "verify": cmd_verify,
    "cocycle": cmd_cocycle,
    "renorm": cmd_renorm,
    "sigma": cmd_sigma,
    "minsol": cmd_minsol,
    "scan": cmd_scan,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maryland", description="Renormalization of the Maryland-model cocycle.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="key = value file; flags override it")
    ap.add_argument("--omega", help="frequency in (0, 1), or 'golden' / 'silver'")
    ap.add_argument("--theta")
    ap.add_argument("--eta")
    ap.add_argument("--l")
    ap.add_argument("--energy", help="E; use with --lambda instead of --eta/--l")
    ap.add_argument("--lambda", dest="lambda")
    ap.add_argument("--n", help="number of cocycle steps N")
    ap.add_argument("--depth", help="maximal number of renormalization levels")
    ap.add_argument("--tol", help="error budget of the cascade")
    ap.add_argument("--precision", choices=("double", "extended"))
    ap.add_argument("--out", help="output file (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--re", help="grid of Re z as start:stop:count (sigma, minsol)")
    ap.add_argument("--im", help="grid of Im z as start:stop:count (sigma, minsol)")
    ap.add_argument("--eta-grid", dest="eta_grid", help="scan grid of eta, start:stop:count")
    ap.add_argument("--l-grid", dest="l_grid", help="scan grid of l, start:stop:count")
    ap.add_argument("--workers", help="worker processes for scan")
    ap.add_argument("--strict", action="store_true", default=None,
                    help="renorm: fail instead of truncating the chain at the error budget")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        text, code = HANDLERS[args.command](cfg)
    except (InputError, DomainError) as exc:
        print(f"maryland: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (MarylandError, ArithmeticError) as exc:
        print(f"maryland: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
