"""Command-line front end.

Sequence files are JSON::

    {"alpha": 0.5, "p": 2,
     "window": {"t_min": -30, "t_max": 30},
     "points": [{"log_r": -30.0, "theta": 0.0}, ...]}

``p`` is a number or the string ``"inf"``; ``window`` is optional and
defaults to the observed extent. Angles are radians. A CSV file with the
header ``log_r,theta`` is accepted too, with ``--alpha`` and ``--p`` on the
command line.

Exit codes: 0 success, 1 hard error, 2 invalid input or violated
precondition, 3 spectral run that did not stabilize.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import sys
import warnings
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from .cis import (DEFAULT_DELTA_SUP_CAP, DEFAULT_EPS_TOL, DEFAULT_N_MAX,
                  DEFAULT_SEPARATION_FLOOR, cis_check)
from .density import default_R_list, lower_log_density
from .errors import PreconditionError, SmallFockError
from .fockspace import SpaceParams
from .geometry import PointSequence, separation_constant
from .products import DEFAULT_TAIL_TOL, finite_product_zeros, jensen_growth_bound, jensen_residual
from .spectral import (STABILIZATION_STEP, STABILIZATION_TOL, bounds_over_shifts, default_margin,
                       extremal_product_bound, fitting_coeff_range, frame_matrix, frame_report,
                       shift_grid)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_UNSTABLE = 3


class InputError(PreconditionError):
    """Malformed sequence or config file."""


@dataclass(frozen=True)
class SequenceFile:
    params: SpaceParams
    seq: PointSequence

    def summary(self) -> dict:
        return {"alpha": self.params.alpha, "p": self.params.p_label(),
                "n_points": len(self.seq), "window": list(self.seq.window)}


def _real(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{what} must be a number, got {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise InputError(f"{what} must be finite, got {x!r}")
    return v


def _p_value(x) -> float:
    if isinstance(x, str):
        if x.strip().lower() in ("inf", "infinity"):
            return math.inf
        raise InputError(f"p must be a number or \"inf\", got {x!r}")
    if isinstance(x, bool) or not isinstance(x, (int, float)) or math.isnan(x):
        raise InputError(f"p must be a number or \"inf\", got {x!r}")
    return float(x)


def parse_sequence(doc: dict) -> SequenceFile:
    if not isinstance(doc, dict):
        raise InputError("sequence file must hold a JSON object")
    for key in ("alpha", "p", "points"):
        if key not in doc:
            raise InputError(f"sequence file lacks the field {key!r}")
    params = SpaceParams(_real(doc["alpha"], "alpha"), _p_value(doc["p"]))
    pts = doc["points"]
    if not isinstance(pts, list) or not pts:
        raise InputError("points must be a nonempty list")
    t, th = [], []
    for i, q in enumerate(pts):
        if not isinstance(q, dict) or "log_r" not in q or "theta" not in q:
            raise InputError(f"point {i} must be an object with log_r and theta")
        t.append(_real(q["log_r"], f"points[{i}].log_r"))
        th.append(_real(q["theta"], f"points[{i}].theta"))
    window = None
    if doc.get("window") is not None:
        w = doc["window"]
        if not isinstance(w, dict) or "t_min" not in w or "t_max" not in w:
            raise InputError("window must be an object with t_min and t_max")
        window = (_real(w["t_min"], "window.t_min"), _real(w["t_max"], "window.t_max"))
    return SequenceFile(params, PointSequence.from_arrays(np.array(t), np.array(th), window))


def load_sequence(path, alpha: Optional[float] = None, p=None) -> SequenceFile:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if path.suffix.lower() == ".csv":
        if alpha is None or p is None:
            raise InputError("CSV input needs --alpha and --p")
        rows = list(csv.DictReader(text.splitlines()))
        if rows and not {"log_r", "theta"} <= set(rows[0]):
            raise InputError("CSV header must contain log_r,theta")
        try:
            pts = [{"log_r": float(r["log_r"]), "theta": float(r["theta"])} for r in rows]
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad CSV value: {exc}") from exc
        return parse_sequence({"alpha": alpha, "p": p, "points": pts})
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from exc
    if alpha is not None:
        doc["alpha"] = alpha
    if p is not None:
        doc["p"] = p
    return parse_sequence(doc)


def fixture_path(name: str) -> Path:
    """Path of a bundled fixture, e.g. ``critical_lattice``."""
    return Path(str(resources.files("smallfock") / "fixtures" / f"{name}.json"))


@dataclass
class RunConfig:
    eps_tol: float = DEFAULT_EPS_TOL
    N_max: int = DEFAULT_N_MAX
    delta_sup_cap: float = DEFAULT_DELTA_SUP_CAP
    separation_floor: float = DEFAULT_SEPARATION_FLOOR
    R_list: Optional[list] = None
    density_tol: Optional[float] = None
    coeff_range: Optional[list] = None
    margin: Optional[float] = None
    shift_grid_size: int = 8
    stabilization_step: int = STABILIZATION_STEP
    stabilization_tol: float = STABILIZATION_TOL
    n_t: int = 801
    n_theta: int = 256
    tail_tol: float = DEFAULT_TAIL_TOL
    interval: Optional[list] = None
    R: Optional[float] = None
    seed: int = 0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise InputError(f"unknown config keys: {unknown}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        for name in ("eps_tol", "delta_sup_cap", "stabilization_tol", "tail_tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0):
                raise InputError(f"{name} must be positive, got {v!r}")
        if not 0 < self.eps_tol < 0.5:
            raise InputError("eps_tol must lie in (0, 1/2)")
        for name in ("N_max", "shift_grid_size", "stabilization_step", "n_t", "n_theta"):
            v = getattr(self, name)
            if not (isinstance(v, int) and v > 0):
                raise InputError(f"{name} must be a positive integer, got {v!r}")
        if self.separation_floor < 0:
            raise InputError("separation_floor must be nonnegative")
        for name in ("margin", "density_tol", "R"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, (int, float)) and v > 0):
                raise InputError(f"{name} must be positive, got {v!r}")

    def materialize(self, sf: SequenceFile) -> "RunConfig":
        """Copy with every data-dependent default filled in."""
        c = dataclasses.replace(self)
        if c.R_list is None:
            c.R_list = default_R_list(sf.seq)
        c.R_list = [float(r) for r in c.R_list]
        if c.density_tol is None:
            c.density_tol = 1.0 / max(c.R_list)
        if c.margin is None:
            c.margin = default_margin(sf.params)
        if c.coeff_range is None and sf.params.p == 2:
            try:
                c.coeff_range = list(fitting_coeff_range(sf.seq, sf.params, c.margin,
                                                         c.stabilization_step))
            except PreconditionError:
                c.coeff_range = None
        return c

    def as_record(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class CommandResult:
    record: dict
    lines: list
    exit_code: int = EXIT_OK


def _coeff_range(cfg: RunConfig) -> tuple[int, int]:
    if cfg.coeff_range is None:
        raise PreconditionError("no coefficient range fits the data window; set coeff_range")
    a, b = cfg.coeff_range
    return int(a), int(b)


def cmd_density(sf: SequenceFile, cfg: RunConfig) -> CommandResult:
    prof = lower_log_density(sf.seq, cfg.R_list)
    two_a = 2 * sf.params.alpha
    lines = [f"{'R':>10}  {'inf count/R':>12}"]
    lines += [f"{r:10.4g}  {v:12.6f}" for r, v in prof.entries]
    lines.append(f"estimate D = {prof.estimate:.6f} at R = {prof.R_max_used:g} (2 alpha = {two_a:g})")
    return CommandResult({"density": prof.as_record()}, lines)


def cmd_cis(sf: SequenceFile, cfg: RunConfig) -> CommandResult:
    v = cis_check(sf.seq, sf.params, cfg.N_max, cfg.eps_tol, cfg.delta_sup_cap,
                  cfg.separation_floor)
    rec = v.as_record()
    lines = [
        f"separated       {v.separated}  (d = {v.separation:.6g})",
        f"delta bounded   {v.deltas_bounded}  (sup |delta| = {v.delta_sup:.6g})",
    ]
    if v.averaging is not None:
        lines.append(f"averaging       m = {v.averaging.m}, N = {v.averaging.N}, "
                     f"margin = {v.averaging.margin:.6g}")
    else:
        lines.append(f"averaging       none up to N_max = {v.N_max} "
                     f"(best margin {v.best_margin:.6g})")
    lines.append(f"complete interpolating: {'PASS' if v.passed else 'FAIL'}"
                 + ("" if v.passed else f" (condition {v.failed_condition})"))
    return CommandResult({"cis": rec}, lines)


def _certify(fm, A: float, B: float, rng: np.random.Generator, n: int = 16) -> bool:
    m = fm.matrix
    b = rng.standard_normal((m.shape[1], n)) + 1j * rng.standard_normal((m.shape[1], n))
    nb = np.sum(np.abs(b) ** 2, axis=0)
    nm = np.sum(np.abs(m @ b) ** 2, axis=0)
    slack = 1e-8 * max(B, 1.0) * nb
    return bool(np.all(A * nb <= nm + slack) and np.all(nm <= B * nb + slack))


def cmd_bounds(sf: SequenceFile, cfg: RunConfig) -> CommandResult:
    if sf.params.p != 2:
        raise PreconditionError("frame bounds are computed for p = 2 only")
    cr = _coeff_range(cfg)
    kw = dict(stabilization_step=cfg.stabilization_step, stabilization_tol=cfg.stabilization_tol)
    base = frame_report(sf.seq, sf.params, cr, cfg.margin, **kw)
    fm = frame_matrix(sf.seq, sf.params, cr, cfg.margin)
    certified = _certify(fm, base.A, base.B, np.random.default_rng(cfg.seed))
    prof = bounds_over_shifts(sf.seq, sf.params, shift_grid(sf.params, cfg.shift_grid_size),
                              cr, cfg.margin, **kw)
    rec = {"bounds": base.as_record(), "random_certificate": certified,
           "shift_profile": prof.as_record()}
    lines = [
        f"coeff_range {cr[0]}..{cr[1]}, window [{base.point_window[0]:.4g}, "
        f"{base.point_window[1]:.4g}], {base.n_points} points",
        f"A = {base.A:.6e}  B = {base.B:.6e}  B/A = {base.B / base.A if base.A else math.inf:.4g}",
        f"stabilized {base.stabilized} (widened A = {base.A_wide:.6e}, B = {base.B_wide:.6e})",
        f"{'shift':>10}  {'A':>13}  {'B':>13}  stabilized",
    ]
    lines += [f"{r.shift:10.4f}  {r.A:13.6e}  {r.B:13.6e}  {r.stabilized}" for r in prof.reports]
    lines.append(f"min_s A = {prof.A_min:.6e}  max_s B = {prof.B_max:.6e}")
    code = EXIT_OK if (base.stabilized and prof.stabilized) else EXIT_UNSTABLE
    if code == EXIT_UNSTABLE:
        lines.append("warning: frame bounds did not stabilize under range growth")
    return CommandResult(rec, lines, code)


def cmd_extremal(sf: SequenceFile, cfg: RunConfig) -> CommandResult:
    if cfg.interval is None:
        raise PreconditionError("extremal needs an interval (--interval T_LO T_HI)")
    c = extremal_product_bound(sf.seq, sf.params, tuple(cfg.interval),
                               n_t=cfg.n_t, n_theta=cfg.n_theta)
    lines = [
        f"band [{c.interval[0]:g}, {c.interval[1]:g}]: {c.band_count} points, 2N = {c.two_N}, "
        f"deficiency {c.deficiency:.6g}",
        f"log measured ratio  {c.log_measured_ratio:.6f}",
        f"log predicted floor {c.log_predicted_floor:.6f}"
        + ("" if c.floor_applies else " (|I| delta <= 3/(2 alpha): no growth predicted)"),
    ]
    lines += list(c.notes)
    return CommandResult({"extremal": c.as_record()}, lines)


def cmd_jensen(sf: SequenceFile, cfg: RunConfig) -> CommandResult:
    if cfg.R is None:
        raise PreconditionError("jensen needs a radius (--R)")
    zs = finite_product_zeros(sf.seq)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rep = jensen_residual(zs, cfg.R)
    notes = [str(w.message) for w in caught]
    avg, bound = jensen_growth_bound(zs, rep.R, sf.params)
    rec = {"jensen": rep.as_record(), "circle_average": avg, "growth_bound": bound,
           "notes": notes}
    lines = [
        f"R = {rep.R:g}: {rep.n_inside} lifted zeros inside, {rep.nodes} nodes",
        f"counting side {rep.counting_integral:.12g}",
        f"average side  {rep.circle_average - rep.log_g0:.12g}",
        f"residual      {rep.residual:.3e}",
        f"circle average {avg:.6g} <= alpha R^2/2 + log-norm = {bound:.6g}: {avg <= bound}",
    ] + notes
    return CommandResult(rec, lines)


def classify_verdict(separated: bool, D: float, two_alpha: float, tol: float,
                     cis_pass: bool) -> str:
    if not separated:
        return "not separated: not ShS"
    if D > two_alpha + tol:
        return "supercritical: ShS evidence (density > 2α)"
    if D < two_alpha - tol:
        return "subcritical: not SS, not ShS (density < 2α)"
    if cis_pass:
        return "critical: SS-type evidence, not ShS (density = 2α)"
    return "critical: not ShS (density = 2α), no complete-interpolation evidence"


def cmd_classify(sf: SequenceFile, cfg: RunConfig) -> CommandResult:
    a = sf.params.alpha
    sep = separation_constant(sf.seq)
    prof = lower_log_density(sf.seq, cfg.R_list)
    D = prof.estimate
    v = cis_check(sf.seq, sf.params, cfg.N_max, cfg.eps_tol, cfg.delta_sup_cap,
                  cfg.separation_floor)
    separated = sep > cfg.separation_floor
    verdict = classify_verdict(separated, D, 2 * a, cfg.density_tol, v.passed)
    cmp = "above" if D > 2 * a + cfg.density_tol else (
        "below" if D < 2 * a - cfg.density_tol else "equal within tolerance")
    rec = {
        "verdict": verdict,
        "separation_constant": sep,
        "separated": separated,
        "density": prof.as_record(),
        "threshold": {"D": D, "two_alpha": 2 * a, "tolerance": cfg.density_tol,
                      "comparison": cmp},
        "cis": v.as_record(),
    }
    lines = [
        f"separation       {sep:.6g} ({'separated' if separated else 'not separated'})",
        f"density D        {D:.6f} vs 2 alpha = {2 * a:g}: {cmp} (tol {cfg.density_tol:.3g})",
        f"complete interp. {'PASS' if v.passed else 'FAIL'}",
    ]
    if sf.params.p == 2 and cfg.coeff_range is not None:
        try:
            rep = frame_report(sf.seq, sf.params, _coeff_range(cfg), cfg.margin,
                               stabilization_step=cfg.stabilization_step,
                               stabilization_tol=cfg.stabilization_tol)
        except PreconditionError as exc:
            rec["frame_bounds"] = {"error": str(exc)}
        else:
            rec["frame_bounds"] = rep.as_record()
            lines.append(f"frame bounds     A = {rep.A:.4e}, B = {rep.B:.4e}, "
                         f"stabilized {rep.stabilized}")
    lines.append(f"verdict: {verdict}")
    return CommandResult(rec, lines)


COMMANDS = {
    "density": cmd_density,
    "cis": cmd_cis,
    "bounds": cmd_bounds,
    "extremal": cmd_extremal,
    "classify": cmd_classify,
    "jensen": cmd_jensen,
}


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def render_record(command: str, sf: SequenceFile, cfg: RunConfig, res: CommandResult) -> str:
    doc = {"command": command, "input": sf.summary(), "config": cfg.as_record(),
           "result": res.record, "exit_code": res.exit_code}
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def render_table(command: str, sf: SequenceFile, cfg: RunConfig, res: CommandResult) -> str:
    head = (f"# {command}: {len(sf.seq)} points, alpha = {sf.params.alpha:g}, "
            f"p = {sf.params.p_label()}, window [{sf.seq.window[0]:g}, {sf.seq.window[1]:g}]")
    return "\n".join([head] + res.lines) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="sequence file (.json, or .csv with log_r,theta)")
    common.add_argument("--config", help="JSON file with RunConfig overrides")
    common.add_argument("--format", choices=("table", "record"), default="table")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--alpha", type=float, default=None)
    common.add_argument("--p", default=None, help="number or inf")

    ap = argparse.ArgumentParser(prog="smallfock",
                                 description="Sampling diagnostics in small Fock spaces.")
    sub = ap.add_subparsers(dest="command", required=True)
    d = sub.add_parser("density", parents=[common], help="lower logarithmic density profile")
    d.add_argument("--R", dest="R_list", type=float, nargs="+", default=None)
    sub.add_parser("cis", parents=[common], help="complete interpolating sequence test")
    b = sub.add_parser("bounds", parents=[common], help="p = 2 frame bounds and shift profile")
    b.add_argument("--coeff-range", type=int, nargs=2, default=None)
    e = sub.add_parser("extremal", parents=[common], help="p = inf extremal product certificate")
    e.add_argument("--interval", type=float, nargs=2, required=True)
    sub.add_parser("classify", parents=[common], help="composite verdict")
    j = sub.add_parser("jensen", parents=[common], help="Jensen identity check")
    j.add_argument("--R", type=float, required=True)
    return ap


def _load_config(args) -> RunConfig:
    over = {}
    if args.config:
        try:
            over = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(over, dict):
            raise InputError("config file must hold a JSON object")
    if args.seed is not None:
        over["seed"] = args.seed
    for name in ("R_list", "coeff_range", "interval", "R"):
        v = getattr(args, name, None)
        if v is not None:
            over[name] = list(v) if isinstance(v, (list, tuple)) else v
    return RunConfig.from_dict(over)


def run(argv=None) -> tuple[int, str, Optional[str]]:
    """Parse ``argv`` and execute; returns ``(exit_code, text, out_path)``."""
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        p = None if args.p is None else _p_value(_p_token(args.p))
        sf = load_sequence(args.file, args.alpha, p)
        cfg = cfg.materialize(sf)
        res = COMMANDS[args.command](sf, cfg)
    except PreconditionError as exc:
        return EXIT_INVALID, f"error: {exc}\n", None
    except SmallFockError as exc:
        return EXIT_ERROR, f"error: {exc}\n", None
    render = render_record if args.format == "record" else render_table
    return res.exit_code, render(args.command, sf, cfg, res), args.out


def _p_token(s: str):
    if s.strip().lower() in ("inf", "infinity"):
        return "inf"
    try:
        return float(s)
    except ValueError as exc:
        raise InputError(f"p must be a number or inf, got {s!r}") from exc


def main(argv=None) -> int:
    try:
        code, text, out = run(argv)
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    if code in (EXIT_ERROR, EXIT_INVALID):
        sys.stderr.write(text)
    elif out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return code
