"""Command-line frontend.

System files are line oriented::

    # comment
    dim = 2
    f1 = -x2
    f2 = x1 - x2 + x1^2*x2
    region = -3 3 -3 3        # optional: lower/upper per axis
    method = taylor           # optional analysis keys (flags override)
    order = 20

Exit codes: 0 certified, 2 completed but not certified, 1 error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

SCHEMA = 1
GRID_HEADER = ["x1", "x2", "re_phi", "im_phi", "abs_phi", "lyapunov", "decreasing"]
LC_HEADER = ["theta", "y", "x1", "x2", "log_abs_phi"]
ANALYSIS_KEYS = {
    "method": str, "order": int, "degree": int, "nbar": int, "stride": int, "delta": float,
    "er_norm": float, "p": int, "resolution": int, "guess": "floats",
}


# ---------------------------------------------------------------- parsing


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class SystemDefinition:
    dimension: int
    components: tuple  # MonomialPoly per component
    expressions: tuple
    region: tuple | None = None  # ((lower...), (upper...))
    analysis: dict = field(default_factory=dict)
    exact: tuple = ()  # per component: {exponent: Fraction}

    def system(self):
        from .system import DynamicalSystem

        return DynamicalSystem(self.components, "file")


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<var>x\d+)|(?P<op>[-+*/^()]))")


class _ExprParser:
    """Recursive descent over ``+ - * / ^`` producing exact coefficient maps."""

    def __init__(self, text: str, dim: int, line: int, col0: int):
        self.text, self.dim, self.line, self.col0 = text, dim, line, col0
        self.toks = []
        pos = 0
        while pos < len(text):
            if text[pos:].strip() == "":
                break
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                self.fail("unexpected character " + repr(text[pos:].lstrip()[:1]), pos + len(text[pos:]) - len(text[pos:].lstrip()))
            kind = m.lastgroup
            start = m.start(kind)
            self.toks.append((kind, m.group(kind), start))
            pos = m.end()
        self.i = 0

    def fail(self, msg, pos):
        raise ParseError(msg, self.line, self.col0 + pos + 1)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, len(self.text))

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def parse(self):
        if not self.toks:
            self.fail("empty expression", 0)
        out = self.expr()
        if self.i < len(self.toks):
            self.fail(f"unexpected {self.peek()[1]!r}", self.peek()[2])
        return out

    # polynomials are dicts exponent-tuple -> Fraction
    def _add(self, a, b, sign=1):
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, Fraction(0)) + sign * v
        return {k: v for k, v in out.items() if v != 0}

    def _mul(self, a, b):
        out = {}
        for ka, va in a.items():
            for kb, vb in b.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, Fraction(0)) + va * vb
        return {k: v for k, v in out.items() if v != 0}

    def _const(self, c):
        return {(0,) * self.dim: Fraction(c)} if c != 0 else {}

    def expr(self):
        out = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            out = self._add(out, self.term(), 1 if op == "+" else -1)
        return out

    def term(self):
        out = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, _, pos = self.take()[1], None, self.peek()[2]
            rhs = self.unary()
            if op == "*":
                out = self._mul(out, rhs)
            else:
                if any(any(k) for k in rhs) or not rhs:
                    self.fail("division only by a nonzero constant", pos)
                c = next(iter(rhs.values()))
                out = {k: v / c for k, v in out.items()}
        return out

    def unary(self):
        if self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            inner = self.unary()
            return inner if op == "+" else {k: -v for k, v in inner.items()}
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not val.isdigit():
                self.fail("exponent must be a nonnegative integer", pos)
            out = self._const(1)
            for _ in range(int(val)):
                out = self._mul(out, base)
            return out
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return self._const(Fraction(val))
        if kind == "var":
            k = int(val[1:])
            if not 1 <= k <= self.dim:
                self.fail(f"undeclared variable {val} (dim = {self.dim})", pos)
            e = [0] * self.dim
            e[k - 1] = 1
            return {tuple(e): Fraction(1)}
        if val == "(":
            out = self.expr()
            if self.take()[1] != ")":
                self.fail("missing ')'", pos)
            return out
        self.fail("expected a number, variable or '('" if kind else "unexpected end of expression", pos)


def parse_system(text: str) -> SystemDefinition:
    """Parse a system-definition file (grammar in the module docstring)."""
    from .poly import MonomialPoly

    dim = None
    comps: dict[int, tuple] = {}
    region = None
    analysis: dict = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", ln, len(line) - len(line.lstrip()) + 1)
        key, _, val = line.partition("=")
        k = key.strip()
        vcol = len(key) + 1 + (len(val) - len(val.lstrip()))
        if k == "dim":
            if dim is not None:
                raise ParseError("duplicate dim", ln, 1)
            if not val.strip().isdigit() or int(val) < 1:
                raise ParseError("dim must be a positive integer", ln, vcol + 1)
            dim = int(val)
        elif re.fullmatch(r"f\d+", k):
            if dim is None:
                raise ParseError("dim must be declared before components", ln, 1)
            i = int(k[1:])
            if not 1 <= i <= dim:
                raise ParseError(f"component {k} exceeds dim = {dim}", ln, line.index(k) + 1)
            if i in comps:
                raise ParseError(f"duplicate component {k}", ln, line.index(k) + 1)
            comps[i] = (_ExprParser(val, dim, ln, len(key) + 1).parse(), val.strip())
        elif k == "region":
            try:
                nums = [float(Fraction(t)) for t in val.split()]
            except ValueError:
                raise ParseError("region needs numbers", ln, vcol + 1) from None
            region = (ln, nums)
        elif k in ANALYSIS_KEYS:
            typ = ANALYSIS_KEYS[k]
            try:
                if typ == "floats":
                    analysis[k] = [float(Fraction(t)) for t in val.split()]
                else:
                    analysis[k] = typ(val.strip()) if typ is not float else float(Fraction(val.strip()))
            except ValueError:
                raise ParseError(f"bad value for {k}", ln, vcol + 1) from None
        else:
            raise ParseError(f"unknown key {k!r}", ln, line.index(k) + 1 if k else 1)
    if dim is None:
        raise ParseError("missing dim declaration", 1, 1)
    missing = [i for i in range(1, dim + 1) if i not in comps]
    if missing:
        raise ParseError(f"dimension mismatch: missing f{missing[0]}", len(text.splitlines()) or 1, 1)
    reg = None
    if region is not None:
        ln, nums = region
        if len(nums) != 2 * dim:
            raise ParseError(f"region needs {2 * dim} numbers", ln, 1)
        lo, hi = np.array(nums[0::2]), np.array(nums[1::2])
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi)) and np.all(hi > lo)):
            raise ParseError("region bounds must be finite with upper > lower", ln, 1)
        reg = (tuple(lo), tuple(hi))
    polys, exprs, exact = [], [], []
    for i in range(1, dim + 1):
        terms, src = comps[i]
        polys.append(MonomialPoly(dim, {k: float(v) for k, v in terms.items()}))
        exprs.append(src)
        exact.append(terms)
    return SystemDefinition(dim, tuple(polys), tuple(exprs), reg, analysis, tuple(exact))


# ---------------------------------------------------------------- helpers


class StageError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"{stage}: {type(exc).__name__}: {exc}")
        self.stage = stage


class _Stage:
    def __init__(self, name, timing):
        self.name, self.timing = name, timing

    def __enter__(self):
        self.t0 = time.perf_counter()

    def __exit__(self, et, ev, tb):
        self.timing[self.name] = time.perf_counter() - self.t0
        if ev is not None and not isinstance(ev, StageError):
            raise StageError(self.name, ev) from ev
        return False


def _c(z) -> list[float]:
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    return repr(float(v))


def _load_system(args):
    """Returns (system, SystemDefinition | None, source block for the report)."""
    from . import catalog

    if getattr(args, "system", None):
        return catalog.builtin(args.system), None, {"builtin": args.system}
    if not args.file:
        raise ValueError("give a system file or --system NAME")
    text = Path(args.file).read_text()
    d = parse_system(text)
    return d.system(), d, {"text": text}


def _system_from_source(src: dict):
    from . import catalog

    if "builtin" in src:
        return catalog.builtin(src["builtin"])
    return parse_system(src["text"]).system()


def _opt(args, d, key, default):
    v = getattr(args, key, None)
    if v is not None:
        return v
    if d is not None and key in d.analysis:
        return d.analysis[key]
    return default


def _box(args, d, n, default=2.0):
    if getattr(args, "box", None):
        b = np.asarray(args.box, float)
        if len(b) != 2 * n:
            raise ValueError(f"--box needs {2 * n} numbers")
        return b[0::2], b[1::2]
    if d is not None and d.region is not None:
        return np.asarray(d.region[0]), np.asarray(d.region[1])
    return -default * np.ones(n), default * np.ones(n)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


# ---------------------------------------------------------------- fixed-point analysis


def _fp_grid_rows(efs, V, system, lower, upper, resolution):
    from .stability import GridSpec, decrease_region, evaluate

    grid = GridSpec(tuple(lower), tuple(upper), (resolution, resolution))
    pts = grid.points().reshape(-1, 2)
    phi = evaluate(efs[0], pts)
    reg = decrease_region(V, system, grid)
    lyap = reg.values.ravel()
    dec = reg.decreasing.ravel()
    return [(p[0], p[1], z.real, z.imag, abs(z), l, d) for p, z, l, d in zip(pts, phi, lyap, dec)]


def _taylor_residual(system, ef, radius):
    from .taylor import pde_residual

    r = 0.5 * radius if np.isfinite(radius) else 0.5
    n = ef.dimension
    rng = np.random.default_rng(0)
    u = rng.standard_normal((400, n))
    u *= (rng.uniform(0, 1, (400, 1)) ** (1 / n)) * r / np.linalg.norm(u, axis=1, keepdims=True)
    x = ef.center + u
    res = pde_residual(system, ef, x)
    return float(np.max(np.abs(res) / (1 + np.abs(ef(x)))))


def analyze_fp(args) -> int:
    from .bernstein_fp import CERTIFY_THRESHOLD, solve_box_eigenfunctions
    from .stability import GridSpec, basin_estimate, make_lyapunov, sample_basin, verify_decay_envelope, verify_semigroup
    from .system import BoxMap, find_fixed_point, jacobian_spectrum
    from .taylor import estimate_radius, solve_all_taylor

    timing: dict = {}
    with _Stage("parse", timing):
        system, d, src = _load_system(args)
        if not getattr(system, "is_polynomial", False):
            raise ValueError("fixed-point analysis needs a polynomial system")
        n = system.dimension
        method = _opt(args, d, "method", "taylor")
        lower, upper = _box(args, d, n)
        guess = np.asarray(_opt(args, d, "guess", [0.0] * n), float)
        p = _opt(args, d, "p", None)
        resolution = int(_opt(args, d, "resolution", 101))
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    arrays: dict = {}
    with _Stage("fixed_point", timing):
        x_star = find_fixed_point(system, guess)
    efs_meta = []
    if method == "taylor":
        order = int(_opt(args, d, "order", 20))
        with _Stage("spectrum", timing):
            spec = jacobian_spectrum(system, x_star)
        with _Stage("taylor", timing):
            efs = solve_all_taylor(system, spec, order)
        for i, ef in enumerate(efs):
            rad = estimate_radius(ef) if order >= 20 else float("nan")
            res = _taylor_residual(system, ef, rad)
            efs_meta.append({
                "index": i, "eigenvalue": _c(ef.eigenvalue), "method": "taylor", "order": order,
                "degree": None, "residual": res, "certified": bool(res < CERTIFY_THRESHOLD),
                "radius": rad if np.isfinite(rad) else None,
            })
            arrays[f"coeffs_{i}"] = ef.coeff_array
        arrays["center"] = np.asarray(x_star)
    elif method == "bernstein":
        degree = int(_opt(args, d, "degree", 40))
        box = BoxMap(np.asarray(lower, float), np.asarray(upper, float))
        with _Stage("bernstein", timing):
            spec_box, efs = solve_box_eigenfunctions(system, box, degree, fixed_point=x_star)
            spec = jacobian_spectrum(system, x_star)
        for i, ef in enumerate(efs):
            efs_meta.append({
                "index": i, "eigenvalue": _c(ef.eigenvalue), "method": "bernstein", "order": None,
                "degree": degree, "residual": ef.lsq_residual, "certified": bool(ef.certified), "radius": None,
            })
            arrays[f"coeffs_{i}"] = ef.coeffs
        arrays["fixed_point_box"] = efs[0].fixed_point_box
        arrays["seeds"] = np.stack([ef.seed for ef in efs])
    else:
        raise StageError("parse", ValueError(f"unknown method {method!r}"))
    arrays["eigenvalues"] = np.array([complex(e.eigenvalue) for e in efs])
    arrays["box"] = np.stack([lower, upper])

    with _Stage("lyapunov", timing):
        V = make_lyapunov(efs, p)
    basin = None
    grid_path = None
    with _Stage("basin", timing):
        if n <= 3:
            res_b = resolution if n == 2 else max(11, resolution // 4)
            grid = GridSpec(tuple(lower), tuple(upper), (res_b,) * n)
            basin = basin_estimate(V, system, grid, x_star=x_star)
    with _Stage("verify", timing):
        if method == "bernstein":
            width = np.asarray(upper) - np.asarray(lower)
            pts = rng.uniform(np.asarray(lower) + 0.05 * width, np.asarray(upper) - 0.05 * width, (args.samples, n))
        elif basin is not None and basin.certified:
            pts = sample_basin(basin, V, args.samples, rng)
        else:
            pts = x_star + 0.1 * rng.standard_normal((args.samples, n))
        reports = [verify_semigroup(ef, ef.eigenvalue, system, pts, args.horizon) for ef in efs]
        env = verify_decay_envelope(V, system, pts, args.horizon)
    with _Stage("artifacts", timing):
        np.savez(out / "eigenfunctions.npz", **arrays)
        if n == 2:
            grid_path = out / "grid.csv"
            _write_csv(grid_path, GRID_HEADER, _fp_grid_rows(efs, V, system, lower, upper, args.grid))
    sg_ok = all(r.passed(args.semigroup_tol) for r in reports)
    certified = bool(all(m["certified"] for m in efs_meta) and sg_ok and env and (basin is None or basin.certified))
    report = {
        "schema": SCHEMA,
        "command": "analyze-fp",
        "system": src,
        "method": method,
        "fixed_point": [float(v) for v in x_star],
        "spectrum": {
            "eigenvalues": [_c(v) for v in spec.eigenvalues],
            "left_eigenvectors": [[_c(v) for v in spec.left_eigenvectors[:, i]] for i in range(n)],
            "nonresonant": bool(spec.nonresonant),
        },
        "eigenfunctions": efs_meta,
        "lyapunov": {
            "p": V.p,
            "members": len(V.eigenfunctions),
            "dominant_rate": V.dominant_rate,
            "level": basin.level if basin is not None else None,
            "decrease_margin": (basin.decrease_margin if basin is not None and basin.certified else None),
            "basin_certified": basin.certified if basin is not None else None,
            "basin_area": basin.area() if basin is not None else None,
            "resolution": resolution if basin is not None else None,
        },
        "verification": {
            "semigroup_max_error": [r.max_error if r.n_used else None for r in reports],
            "semigroup_points_used": [r.n_used for r in reports],
            "semigroup_points_skipped": [r.n_skipped for r in reports],
            "semigroup_tolerance": args.semigroup_tol,
            "horizon": args.horizon,
            "envelope_pass": bool(env),
        },
        "certified": certified,
        "artifacts": {"coefficients": "eigenfunctions.npz", "grid": grid_path.name if grid_path else None},
        "timing": timing,
    }
    _write_json(out / "report.json", report)
    print(f"certified={certified} report={out / 'report.json'}")
    return 0 if certified else 2


# ---------------------------------------------------------------- limit-cycle analysis


def _lc_rows(ef, n_theta, n_y):
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    y = np.linspace(0, 1, n_y)
    rows = []
    T, Y = np.meshgrid(theta, y, indexing="ij")
    X = ef.lc.from_polar(T, Y)
    with np.errstate(divide="ignore"):
        L = np.log(np.abs(ef.eval_polar(T, Y)))
    for t, yy, x, l in zip(T.ravel(), Y.ravel(), X.reshape(-1, 2), L.ravel()):
        rows.append((t, yy, x[0], x[1], l))
    return rows


def analyze_lc(args) -> int:
    from .limit_cycle import auto_project, boundary_c2, assemble_lc_system, pde_residual_grid, project_field, solve_lc
    from .stability import verify_semigroup
    from .system import find_limit_cycle, floquet_exponents

    timing: dict = {}
    with _Stage("parse", timing):
        system, d, src = _load_system(args)
        if system.dimension != 2:
            raise ValueError("limit-cycle analysis is planar only")
        n_bar = int(_opt(args, d, "nbar", 40))
        degree = int(_opt(args, d, "degree", 20))
        stride = int(_opt(args, d, "stride", 1))
        delta = float(_opt(args, d, "delta", 0.0))
        er_norm = _opt(args, d, "er_norm", None)
        guess = np.asarray(_opt(args, d, "guess", [2.0, 0.0]), float)
    rng = np.random.default_rng(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with _Stage("limit_cycle", timing):
        lc = find_limit_cycle(system, guess, delta=delta, er_norm=er_norm)
    with _Stage("floquet", timing):
        lam = floquet_exponents(system, lc)[0]
        lam = lam.real if abs(lam.imag) < 1e-12 else lam
    with _Stage("projection", timing):
        proj = project_field(system, lc, n_bar, args.s_prime) if args.s_prime else auto_project(system, lc, n_bar)
        c2 = boundary_c2(system, lc, lam, n_bar)
    with _Stage("solve", timing):
        lcs = assemble_lc_system(proj, c2, lam, n_bar, degree, harmonic_stride=stride, delta=lc.delta)
        ef = solve_lc(lcs, lc)
    with _Stage("verify", timing):
        R, phi = pde_residual_grid(system, ef, 2 * 4 * (2 * n_bar + 1), 2 * 2 * (proj.s_prime + 1))
        fresh = float(np.max(np.abs(R)))
        scale = float(np.max(np.abs(phi)))
        fresh_ok = fresh <= 10 * ef.lsq_residual * scale
        pts = lc.from_polar(rng.uniform(0, 2 * np.pi, 50), rng.uniform(0, 1, 50))
        sg = verify_semigroup(ef, lam, system, pts, lc.period / 2)
    with _Stage("artifacts", timing):
        np.savez(
            out / "eigenfunction_lc.npz", coeffs=ef.coeffs, c2=ef.c2, thetas=lc.thetas, radii=lc.radii,
            center=lc.center, params=np.array([lc.period, lc.delta, lc.er_norm, n_bar, degree, stride]),
            eigenvalue=np.array(complex(lam)),
        )
        _write_csv(out / "log_abs_phi.csv", LC_HEADER, _lc_rows(ef, args.grid, max(2, args.grid // 2)))
    certified = bool(ef.certified and fresh_ok and sg.passed(args.semigroup_tol))
    report = {
        "schema": SCHEMA,
        "command": "analyze-lc",
        "system": src,
        "limit_cycle": {
            "period": lc.period,
            "center": [float(v) for v in lc.center],
            "radius_range": [float(lc.radii.min()), float(lc.radii.max())],
            "delta": lc.delta,
            "er_norm": lc.er_norm,
        },
        "floquet_exponent": _c(lam),
        "eigenfunctions": [{
            "index": 0, "eigenvalue": _c(lam), "method": "fourier-bernstein", "order": None, "degree": degree,
            "nbar": n_bar, "harmonic_stride": stride, "s_prime": proj.s_prime, "projection_error": proj.error,
            "residual": ef.lsq_residual, "certified": bool(ef.certified), "radius": None,
        }],
        "verification": {
            "fresh_grid_residual": fresh,
            "fresh_grid_bound": 10 * ef.lsq_residual * scale,
            "fresh_grid_pass": bool(fresh_ok),
            "semigroup_max_error": sg.max_error if sg.n_used else None,
            "semigroup_points_used": sg.n_used,
            "semigroup_points_skipped": sg.n_skipped,
            "semigroup_tolerance": args.semigroup_tol,
            "horizon": lc.period / 2,
        },
        "certified": certified,
        "artifacts": {"coefficients": "eigenfunction_lc.npz", "grid": "log_abs_phi.csv"},
        "timing": timing,
    }
    _write_json(out / "report.json", report)
    print(f"certified={certified} exponent={lam} report={out / 'report.json'}")
    return 0 if certified else 2


# ---------------------------------------------------------------- artifact reloading


def load_artifacts(report_path: Path):
    """Rebuild (report, system, eigenfunctions) from a report and its coefficient file."""
    from .bernstein_fp import BernsteinEigenfunction
    from .limit_cycle import FourierBernsteinEigenfunction
    from .system import BoxMap, LimitCycleParam
    from .taylor import TaylorEigenfunction

    report = json.loads(Path(report_path).read_text())
    system = _system_from_source(report["system"])
    data = np.load(Path(report_path).parent / report["artifacts"]["coefficients"])
    efs = []
    if report["command"] == "analyze-lc":
        period, delta, er_norm, n_bar, degree, stride = data["params"]
        lc = LimitCycleParam(float(period), data["thetas"], data["radii"], data["center"], float(delta), float(er_norm))
        m = report["eigenfunctions"][0]
        efs.append(FourierBernsteinEigenfunction(
            lc, int(n_bar), int(degree), complex(data["eigenvalue"]), data["coeffs"], data["c2"], m["residual"],
            int(stride), m["certified"],
        ))
    elif report["method"] == "taylor":
        for m in report["eigenfunctions"]:
            A = data[f"coeffs_{m['index']}"]
            n = A.ndim
            seed = np.array([A[tuple(np.eye(n, dtype=int)[i])] for i in range(n)])
            efs.append(TaylorEigenfunction(data["center"], complex(*m["eigenvalue"]), m["order"], A, seed))
    else:
        box = BoxMap(data["box"][0], data["box"][1])
        for m in report["eigenfunctions"]:
            i = m["index"]
            efs.append(BernsteinEigenfunction(
                box, m["degree"], complex(*m["eigenvalue"]), data[f"coeffs_{i}"], m["residual"],
                data["fixed_point_box"], data["seeds"][i], m["certified"],
            ))
    return report, system, efs


def emit_grid(args) -> int:
    from .stability import make_lyapunov

    report, system, efs = load_artifacts(Path(args.report))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if report["command"] == "analyze-lc":
        path = out / "log_abs_phi.csv"
        _write_csv(path, LC_HEADER, _lc_rows(efs[0], args.resolution, args.resolution))
    else:
        if system.dimension != 2:
            raise ValueError("grids are emitted for planar systems only")
        lo, hi = np.load(Path(args.report).parent / report["artifacts"]["coefficients"])["box"]
        if args.box:
            b = np.asarray(args.box, float)
            lo, hi = b[0::2], b[1::2]
        V = make_lyapunov(efs, report["lyapunov"]["p"] if report["lyapunov"]["members"] > 1 else None)
        path = out / "grid.csv"
        _write_csv(path, GRID_HEADER, _fp_grid_rows(efs, V, system, lo, hi, args.resolution))
    print(path)
    return 0


def verify_cmd(args) -> int:
    from .stability import make_lyapunov, verify_decay_envelope, verify_semigroup

    report, system, efs = load_artifacts(Path(args.report))
    rng = np.random.default_rng(args.seed)
    if report["command"] == "analyze-lc":
        ef = efs[0]
        pts = ef.lc.from_polar(rng.uniform(0, 2 * np.pi, args.samples), rng.uniform(0, 1, args.samples))
        sg = [verify_semigroup(ef, ef.eigenvalue, system, pts, ef.lc.period / 2)]
        env = None
    else:
        lo, hi = np.load(Path(args.report).parent / report["artifacts"]["coefficients"])["box"]
        w = hi - lo
        if report["method"] == "bernstein":
            pts = rng.uniform(lo + 0.05 * w, hi - 0.05 * w, (args.samples, len(lo)))
        else:
            pts = np.asarray(report["fixed_point"]) + 0.1 * rng.standard_normal((args.samples, len(lo)))
        sg = [verify_semigroup(ef, ef.eigenvalue, system, pts, args.horizon) for ef in efs]
        V = make_lyapunov(efs, report["lyapunov"]["p"] if report["lyapunov"]["members"] > 1 else None)
        env = verify_decay_envelope(V, system, pts, args.horizon)
    ok = all(r.passed(args.semigroup_tol) for r in sg) and env is not False
    summary = {
        "schema": SCHEMA,
        "semigroup_max_error": [r.max_error if r.n_used else None for r in sg],
        "semigroup_points_used": [r.n_used for r in sg],
        "envelope_pass": env,
        "passed": bool(ok),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0 if ok else 2


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="koopstab", description="Koopman-eigenfunction stability analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("file", nargs="?", help="system-definition file")
        p.add_argument("--system", help="built-in system name instead of a file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=None, help="cap BLAS/LAPACK threads")
        p.add_argument("--samples", type=int, default=200, help="verification sample count")
        p.add_argument("--semigroup-tol", type=float, default=1e-3)
        p.add_argument("--grid", type=int, default=101, help="CSV grid resolution")

    fp = sub.add_parser("analyze-fp", help="fixed-point analysis")
    common(fp)
    fp.add_argument("--method", choices=["taylor", "bernstein"])
    fp.add_argument("--order", type=int)
    fp.add_argument("--degree", type=int)
    fp.add_argument("--box", type=float, nargs="+", help="lower/upper per axis")
    fp.add_argument("--p", type=int)
    fp.add_argument("--resolution", type=int, help="basin lattice points per axis")
    fp.add_argument("--guess", type=float, nargs="+")
    fp.add_argument("--horizon", type=float, default=1.0)
    fp.set_defaults(func=analyze_fp)

    lc = sub.add_parser("analyze-lc", help="limit-cycle analysis")
    common(lc)
    lc.add_argument("--nbar", type=int)
    lc.add_argument("--degree", type=int)
    lc.add_argument("--stride", type=int)
    lc.add_argument("--delta", type=float)
    lc.add_argument("--er-norm", dest="er_norm", type=float)
    lc.add_argument("--s-prime", dest="s_prime", type=int)
    lc.add_argument("--guess", type=float, nargs=2)
    lc.set_defaults(func=analyze_lc)

    eg = sub.add_parser("emit-grid", help="regenerate CSV grids from a report")
    eg.add_argument("report")
    eg.add_argument("--resolution", type=int, default=101)
    eg.add_argument("--box", type=float, nargs=4)
    eg.add_argument("--out", default=".")
    eg.add_argument("--threads", type=int, default=None)
    eg.set_defaults(func=emit_grid)

    vf = sub.add_parser("verify", help="rerun trajectory verifications from a report")
    vf.add_argument("report")
    vf.add_argument("--seed", type=int, default=0)
    vf.add_argument("--samples", type=int, default=200)
    vf.add_argument("--horizon", type=float, default=1.0)
    vf.add_argument("--semigroup-tol", type=float, default=1e-3)
    vf.add_argument("--threads", type=int, default=None)
    vf.set_defaults(func=verify_cmd)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except StageError as exc:
        print(f"error in stage {exc}", file=sys.stderr)
        return 1
    except (ParseError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
