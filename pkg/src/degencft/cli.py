"""Command-line driver: configuration, experiments, reports and the operator cache.

Usage::

    degencft <subcommand> [--config FILE] [--cutoff N] [--band M] [--germ SPEC]
             [--t T] [--w W] [--s S] [--schedule R1,R2,...] [--out DIR] [--csv]

Config files hold one ``key = value`` pair per line; ``#`` starts a comment.
Keys are the long option names with dashes or underscores (``cutoff``,
``band``, ``germ``, ``t``, ``w``, ``s``, ``schedule``, ``tol``, ``out``,
``jobs``, ``csv``, ``window``, ``degree``, ``trials``, ``seed``).  Command-line
flags override the file.

Germ descriptions: ``identity``, ``cayley``, ``exp`` / ``exp:EPS``, ``contact``
or a comma separated Taylor coefficient list ``c1,c2,...`` of sigma (complex
literals such as ``0.1j`` allowed).

Each subcommand writes ``<out>/<subcommand>.json`` (schema ``degencft-report/1``,
see README) and, with ``--csv``, tables as ``<out>/<subcommand>_<table>.csv``.
The exit status is 0 iff every checked record passes.  Operators are cached
under ``$DEGENCFT_CACHE`` (default ``~/.cache/degencft``) keyed by the config hash.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import fock, geometry, implementing, net, segal, virasoro, voa
from .boundary import BoundaryFunction

SCHEMA = "degencft-report/1"
CACHE_ENV = "DEGENCFT_CACHE"
DEFAULT_SUITE = ("verify-car", "verify-virasoro", "verify-borcherds", "qei", "pants", "converge", "admissible")


class ConfigError(ValueError):
    pass


# configuration -----------------------------------------------------------------
@dataclass
class ExperimentConfig:
    cutoff: float = 4.0
    band: int = 16
    germ: str = "cayley"
    t: float = 0.5
    w: complex = -0.5
    s: float = 0.15
    schedule: tuple = (2.0, 1.5, 1.2, 1.05, 1.0)
    tol: float = 1e-10
    window: float = 2.0
    degree: int = 4
    trials: int = 50
    seed: int = 0
    jobs: int = 1
    out: str = "reports"
    csv: bool = False

    def validate(self):
        n2 = 2 * self.cutoff
        if self.cutoff < 1 or abs(n2 - round(n2)) > 1e-9:
            raise ConfigError(f"cutoff: need a half-integer >= 1, got {self.cutoff}")
        if self.band < 2 * self.cutoff:
            raise ConfigError(f"band: need band >= 2 * cutoff = {2 * self.cutoff:g}, got {self.band}")
        sch = list(self.schedule)
        if not sch or any(b >= a for a, b in zip(sch, sch[1:])) or sch[-1] != 1.0:
            raise ConfigError(f"schedule: must decrease strictly and end at 1, got {self.schedule}")
        if self.jobs < 1:
            raise ConfigError("jobs: must be >= 1")
        return self

    def canonical(self) -> dict:
        d = dataclasses.asdict(self)
        d["w"] = [self.w.real, self.w.imag]
        d["schedule"] = list(self.schedule)
        for k in ("out", "jobs", "csv"):  # output plumbing does not change results
            d.pop(k)
        return d

    def digest(self) -> str:
        body = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha1(b"config %d\0" % len(body) + body).hexdigest()


_CASTS = {
    "cutoff": float, "band": int, "germ": str, "t": float, "w": lambda v: complex(v.replace(" ", "")),
    "s": float, "schedule": lambda v: tuple(float(x) for x in v.split(",") if x.strip()),
    "tol": float, "window": float, "degree": int, "trials": int, "seed": int, "jobs": int,
    "out": str, "csv": lambda v: v.strip().lower() in ("1", "true", "yes", "on"),
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (x.strip() for x in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CASTS:
            raise ConfigError(f"{source}:{lineno}: unknown field {key!r}")
        try:
            values[key] = _CASTS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: field {key!r}: {exc}") from None
    return values


def build_config(args) -> ExperimentConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(parse_config_text(Path(args.config).read_text(), args.config))
    for key in _CASTS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = _CASTS[key](v) if isinstance(v, str) and key != "germ" and key != "out" else v
    return ExperimentConfig(**values).validate()


# reports ------------------------------------------------------------------------
@dataclass
class Record:
    name: str
    anchor: str
    value: float | list
    tol: float | None
    window: float | None
    passed: bool | None = None
    wall: float = 0.0
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed is None and self.tol is not None:
            v = max(np.ravel(self.value)) if np.ndim(self.value) else self.value
            self.passed = bool(v <= self.tol)


class Experiment:
    """Collects timed records and CSV tables for one subcommand."""

    def __init__(self, name: str, cfg: ExperimentConfig):
        self.name, self.cfg = name, cfg
        self.records: list[Record] = []
        self.tables: dict[str, list] = {}

    def check(self, name, anchor, fn, tol=None, window=None, **detail):
        """Time ``fn``; it returns a value, or (value, passed), or
        (value, passed, extra detail)."""
        t0 = time.perf_counter()
        out = fn()
        wall = time.perf_counter() - t0
        out = out if isinstance(out, tuple) else (out, None)
        value, passed = out[0], out[1]
        if len(out) > 2:
            detail.update(out[2])
        rec = Record(name, anchor, _jsonable(value), tol, window, passed, wall, _jsonable(detail))
        self.records.append(rec)
        return rec

    def report(self) -> dict:
        checked = [r for r in self.records if r.passed is not None]
        verdict = "pass" if all(r.passed for r in checked) else "fail"
        body = {
            "schema": SCHEMA,
            "experiment": self.name,
            "config_hash": self.cfg.digest(),
            "config": self.cfg.canonical(),
            "records": [{k: v for k, v in dataclasses.asdict(r).items() if k != "wall"} for r in self.records],
            "verdict": verdict,
        }
        return body


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(f"{float(x):.6e}")  # fixed precision keeps reports byte-stable
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [_jsonable(x.real), _jsonable(x.imag)]
    return x


def write_report(exp: Experiment, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    body = exp.report()
    text = json.dumps(body, indent=2, sort_keys=True)
    (outdir / f"{exp.name}.json").write_text(text + "\n")
    timing = {r.name: round(r.wall, 4) for r in exp.records}
    (outdir / f"{exp.name}.timing.json").write_text(json.dumps(timing, indent=2) + "\n")
    if exp.cfg.csv:
        for tname, rows in exp.tables.items():
            with open(outdir / f"{exp.name}_{tname}.csv", "w", newline="") as fh:
                wr = csv.writer(fh)
                for row in rows:
                    wr.writerow([_jsonable(x) for x in row])
    return body


# operator cache -------------------------------------------------------------------
def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "degencft"))


def cached_pants(X, cfg: ExperimentConfig, N: float, R: float = 1.0):
    key = hashlib.sha1(f"{cfg.digest()}|pants|{N}|{R}".encode()).hexdigest()[:20]
    path = cache_dir() / f"{key}.op"
    space = fock.enumerate_basis(N)
    tspace = segal._tensor_space(space)
    if path.exists():
        try:
            op, _ = fock.load_operator(path, space, tspace)
            return segal.SurfaceOperator(op, R, X)
        except (ValueError, OSError):
            pass
    T = segal.pants_operator(X, N, R, check=False)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fock.save_operator(path, T.matrix, space.cutoff2)
    except OSError:
        pass
    return T


# experiments ------------------------------------------------------------------------
def _surface(cfg: ExperimentConfig):
    germ = geometry.germ_from_spec(cfg.germ, cfg.band)
    return segal.DegenerateSurface(germ, cfg.t, "pants", cfg.w, cfg.s)


def _geometry_record(exp: Experiment, X):
    def run():
        try:
            X.check()
            return "valid"
        except segal.SurfaceGeometryError as exc:
            return f"invalid: {exc}"
    exp.check("surface geometry (informational)", "segal.surface", run)


def run_verify_car(cfg, exp):
    space = fock.enumerate_basis(cfg.cutoff)

    def car():
        res = fock.anticommutator_residuals(space, cfg.band)
        worst = max(res.values())
        return worst, worst < 1e-12, res
    exp.check("anticommutators", "fock.car", car, window=cfg.cutoff)

    def character():
        want = [1]
        for n in range(int(2 * cfg.cutoff) + 1):  # (1 + q^{n+1/2})^2 in half-integer steps
            for _ in range(2):
                e = 2 * n + 1
                new = want + [0] * e
                for i, c in enumerate(want):
                    new[i + e] += c
                want = new
        want = want[: int(2 * cfg.cutoff) + 1]
        got = [int(x) for x in fock.character(int(2 * cfg.cutoff))]
        return float(got != want), got == want
    exp.check("level dimensions", "fock.basis", character, window=cfg.cutoff)


def run_verify_virasoro(cfg, exp):
    space = fock.enumerate_basis(cfg.cutoff)

    def brackets():
        res = virasoro.virasoro_bracket_residuals(space, 3)
        return max(v[0] for v in res.values())
    exp.check("virasoro brackets |m|,|n| <= 3", "voa.virasoro", brackets, tol=cfg.tol, window=cfg.cutoff)

    def fermion():
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        for _ in range(5):
            f = BoundaryFunction(rng.normal(size=5) + 1j * rng.normal(size=5), 2).with_band(cfg.band)
            g = BoundaryFunction(rng.normal(size=5) + 1j * rng.normal(size=5), 2).with_band(cfg.band)
            try:
                r = virasoro.fermion_commutator_residual(f, g, space)
            except virasoro.ExactnessError:
                continue
            worst = max(worst, r["unstarred"], r["starred"])
        return worst
    exp.check("smeared virasoro vs fermion", "virasoro.fermion-commutator", fermion, tol=cfg.tol)


def run_verify_borcherds(cfg, exp):
    space = fock.enumerate_basis(cfg.cutoff)

    def borcherds():
        res = voa.borcherds_suite(space, cfg.trials, cfg.seed)
        worst = max(res.values())
        return worst, worst < 1e-9, res
    exp.check("borcherds identities", "voa.borcherds", borcherds, window=cfg.cutoff)


def _one_minus_cos(band):
    return BoundaryFunction.from_dict({0: 1.0, 1: -0.5, -1: -0.5}, band)


def run_qei(cfg, exp):
    cutoffs = [k / 2 for k in range(4, int(4 * cfg.cutoff) + 1, 2)]
    res = virasoro.qei_spectrum(_one_minus_cos(cfg.band), cutoffs)
    exp.tables["spectrum"] = [["cutoff", "min_eigenvalue", "vacuum_overlap"]] + \
        [[r.cutoff, r.min_eigenvalue, r.vacuum_overlap] for r in res]
    exp.check("min eigenvalue of L(1 - cos)", "virasoro.qei",
              lambda: max(abs(r.min_eigenvalue) for r in res), tol=cfg.tol, window=max(cutoffs))
    exp.check("vacuum overlap defect", "virasoro.qei",
              lambda: max(1 - r.vacuum_overlap for r in res), tol=cfg.tol, window=max(cutoffs))


def run_annulus(cfg, exp):
    germ = geometry.germ_from_spec(cfg.germ, cfg.band)
    f = virasoro.two_sided_test_function(0.3)
    Ns = [cfg.cutoff, cfg.cutoff + 2, cfg.cutoff + 4]
    res = [virasoro.intertwine_terms(germ, cfg.t, f, N, min(cfg.window, N)) for N in Ns]
    exp.tables["intertwining"] = [["cutoff", "unstarred", "starred"]] + \
        [[N, r.unstarred, r.starred] for N, r in zip(Ns, res)]
    mono = all(b.residual < a.residual for a, b in zip(res, res[1:]))
    exp.check("intertwining residual decreases in N", "virasoro.intertwining",
              lambda: ([r.residual for r in res], mono), window=cfg.window)
    space = fock.enumerate_basis(cfg.cutoff)
    E = virasoro.exp_semigroup(germ.rho, cfg.t, space, min_re=virasoro.germ_min_re(germ)).toarray()

    def vac():
        v = np.zeros(space.dim)
        v[space.index[()]] = 1
        return float(np.linalg.norm(E @ v - v))
    exp.check("annulus fixes the vacuum", "segal.annulus", vac, tol=1e-13)
    exp.check("annulus is a contraction", "virasoro.semigroup",
              lambda: (float(np.linalg.norm(E, 2)), bool(np.linalg.norm(E, 2) <= 1 + 1e-12)))


def run_pants(cfg, exp):
    X = _surface(cfg)
    _geometry_record(exp, X)
    N, M = cfg.cutoff, min(cfg.window, cfg.cutoff)
    T1 = cached_pants(X, cfg, N)
    space, tspace = T1.rows, T1.cols

    def vacuum():
        col = T1.matrix.matrix[:, tspace.index[((), ())]].toarray().ravel()
        col[space.index[()]] -= 1
        return float(np.abs(col).max())
    exp.check("T(Omega (x) Omega) = Omega", "segal.pants", vacuum, tol=1e-13)

    def factor():
        worst = 0.0
        for R in (1.2, 2.0):
            TR = segal.pants_operator(X, N, R, check=False).toarray()
            scaled = (R ** (-space.energies2 / 2.0))[:, None] * T1.toarray()
            worst = max(worst, float(np.abs(TR - scaled).max()))
        return worst
    exp.check("T_R = R^-L0 T_1", "segal.pants", factor, tol=1e-13)

    tuples = segal.hardy_tuples(X, cfg.degree, cfg.band)
    certs = segal.commutation_residual(T1, tuples, M)
    table = [["tuple", "unstarred", "starred", "checked"]]
    for h, c in zip(tuples, certs):
        exact = h.exact_on(M, N)
        table.append([h.source, c.unstarred, c.starred, exact])
        exp.check(f"certificate {h.source}", "segal.commutation",
                  lambda c=c: c.residual, tol=cfg.tol * 100 if exact else None, window=M)
    exp.tables["certificates"] = table
    ref = next(h for h in tuples if h.exponent == 0)
    bad = segal.commutation_residual(T1, [ref.perturbed()], M)[0]
    exp.check("negative control (perturbed disk component)", "segal.commutation",
              lambda: (bad.residual, bool(bad.residual > 1e3 * cfg.tol)), window=M)


def run_converge(cfg, exp):
    X = _surface(cfg)
    rows = segal.convergence_study(X, cfg.schedule, cfg.cutoff, check=False)
    exp.tables["singular_values"] = [["R", "top_singular_value"] + [str(p) for p in rows[0].probe_deviation]] + \
        [[r.R, r.top_singular_value] + list(r.probe_deviation.values()) for r in rows]
    devs = [max(r.probe_deviation.values()) for r in rows]
    mono = all(b <= a for a, b in zip(devs, devs[1:]))
    exp.check("probe deviation ||(T_R - T_1) v|| decreases", "segal.limit", lambda: (devs, mono))
    sv = [r.top_singular_value for r in rows]
    trend = "increasing" if all(b >= a for a, b in zip(sv, sv[1:])) else \
        "decreasing" if all(b <= a for a, b in zip(sv, sv[1:])) else "mixed"
    exp.check("top singular value trend (informational)", "segal.limit", lambda: sv, trend=trend)


def run_admissible(cfg, exp):
    germ = geometry.germ_from_spec(cfg.germ, cfg.band)
    band = int(2 * cfg.cutoff) + 2
    W = geometry.composition_operator(germ, cfg.t, band)
    r = implementing.BlockMap.from_composition(W)
    rep = implementing.admissible_decompose(r)
    exp.check("admissible split of W + cWc", "implementing.admissible", lambda: rep.offdiag_trace_norm,
              trace_part_norm=rep.trace_part_norm, band=rep.band, verdict=rep.verdict)
    exp.check("contraction part norm", "implementing.admissible",
              lambda: float(np.linalg.norm(rep.contraction_part, 2)) - 1.0, tol=1e-12)

    def wedge():
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        for _ in range(cfg.trials):
            n = int(rng.integers(1, 6))
            s = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) * rng.uniform(0.2, 1.5)
            _, mx = implementing.exterior_power_norm(s)
            worst = max(worst, abs(mx - implementing.singular_value_bound(s)) / max(1.0, mx))
        return worst
    exp.check("exterior power norm vs singular values", "implementing.exterior", wedge, tol=cfg.tol)


def run_implementer(cfg, exp):
    N, M = cfg.cutoff, min(cfg.window, cfg.cutoff)

    def rotation():
        out = []
        for a in (0.2, 0.7, 1.3):
            qp = implementing.two_mode_rotation(a, 2)
            ker = implementing.vacuum_kernel(qp, fock.enumerate_basis(2), 2)
            om = implementing.vacuum_solve(qp, fock.enumerate_basis(2), 2)
            out.append((abs(om.vector.get((), 0)) - np.cos(a), ker.kernel_dim))
        return max(abs(x[0]) for x in out), all(abs(x[0]) < cfg.tol and x[1] == 1 for x in out)
    exp.check("vacuum solver, two-mode rotation", "implementing.vacuum", rotation)

    def basic():
        space = fock.enumerate_basis(N)
        band = int(2 * N) + 1
        U, _ = implementing.second_quantize_unitary(implementing.rotation_unitary(0.7, band), space, band)
        ref = np.diag(np.exp(0.7j * space.energies2 / 2))
        return implementing.phase_aligned_residual(U.toarray(), ref)
    exp.check("basic representation of a rotation", "implementing.basic", basic, tol=cfg.tol)

    def adjoint():
        germ = geometry.germ_from_spec(cfg.germ, cfg.band)
        return implementer_adjoint_residual(germ, cfg.t, N, M)
    exp.check("implementer of W + cWc equals E^*", "implementing.implementer", adjoint, tol=1e-8, window=M)


def implementer_adjoint_residual(germ, t, N, M, samples: int = 1024) -> float:
    space = fock.enumerate_basis(N)
    E = virasoro.exp_semigroup(germ.rho, t, space, min_re=virasoro.germ_min_re(germ)).toarray()
    band = space.cutoff2 + 2
    W = geometry.composition_operator(germ, t, band, samples)
    r = implementing.BlockMap.from_composition(W)
    omega = E.conj().T[:, space.index[()]]
    R = implementing.implementer(r, omega, space, space).toarray()
    idx = space.window(int(round(2 * M)))
    return float(np.linalg.norm((R - E.conj().T)[np.ix_(idx, idx)], 2))


def run_locality(cfg, exp):
    p = locality_setup(cfg.cutoff)
    for d in (4, 8, 12):
        r = net.rational_approximant(p["X"], p["pair"], d)
        res = net.locality_residual(p["T"], r, M=min(cfg.window, cfg.cutoff))
        exp.check(f"locality, degree {d}", "net.locality", lambda res=res: (res.residual, res.ratio < 10),
                  leakage=res.leakage, ratio=res.ratio)
    neg = net.locality_residual(p["T"], net.bump_function((2.0, 3.5)), M=min(cfg.window, cfg.cutoff),
                                f0=BoundaryFunction.zero(64))
    pos = max(r.value for r in exp.records)
    exp.check("negative control, bump in I", "net.locality",
              lambda: (neg.residual, neg.residual >= 100 * pos), ratio=neg.residual / pos)


CONTACT_SURFACE = dict(t=0.3, w=0.75 * np.exp(-1.2j), s=0.15)


def locality_setup(N: float = 6, xi=None):
    germ = geometry.contact_germ()
    X = segal.DegenerateSurface(germ, kind="pants", **CONTACT_SURFACE)
    pair = net.contact_pair(germ, X.t)
    xi = xi if xi is not None else voa.VoaState({(): 1.0})
    T = net.localized_operator(X, xi, N, reparam=pair)
    return {"X": X, "pair": pair, "T": T}


def run_span(cfg, exp):
    X = _surface(cfg)
    T = cached_pants(X, cfg, cfg.cutoff)
    space = T.rows
    dims = [net.cyclic_span_dim(X, cfg.cutoff, k / 2, T=T) for k in range(int(2 * cfg.cutoff) + 1)]
    full = [int(np.count_nonzero(space.energies2 <= k)) for k in range(int(2 * cfg.cutoff) + 1)]
    exp.tables["span"] = [["window", "rank", "dimension"]] + [[k / 2, d, f] for k, (d, f) in enumerate(zip(dims, full))]
    exp.check("T_xi Omega spans each window", "net.cyclic", lambda: (dims, dims == full), expected=full)


def run_svd_compop(cfg, exp):
    germ = geometry.germ_from_spec(cfg.germ, cfg.band)
    W = geometry.composition_operator(germ, cfg.t, cfg.band)
    s, prods = geometry.approx_numbers(W, cfg.band + 1)
    exp.tables["approx_numbers"] = [["n", "a_n", "prod_max1"]] + [[i + 1, a, p] for i, (a, p) in enumerate(zip(s, prods))]
    exp.check("top approximation number", "geometry.approx", lambda: (float(s[0]), bool(s[0] <= 1 + 1e-8)))
    exp.check("approximation numbers", "geometry.approx", lambda: [float(x) for x in s[:8]])


COMMANDS = {
    "verify-car": run_verify_car,
    "verify-virasoro": run_verify_virasoro,
    "verify-borcherds": run_verify_borcherds,
    "qei": run_qei,
    "annulus": run_annulus,
    "pants": run_pants,
    "converge": run_converge,
    "admissible": run_admissible,
    "implementer": run_implementer,
    "locality": run_locality,
    "span": run_span,
    "svd-compop": run_svd_compop,
}


def run(subcommand: str, cfg: ExperimentConfig):
    """Run one experiment; returns (exit status, report body)."""
    exp = Experiment(subcommand, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", virasoro.QEIPreconditionWarning)
        COMMANDS[subcommand](cfg, exp)
    body = write_report(exp, Path(cfg.out))
    return (0 if body["verdict"] == "pass" else 1), body


def _run_quiet(args):
    name, cfg = args
    return name, run(name, cfg)


def run_suite(cfg: ExperimentConfig, names=DEFAULT_SUITE):
    jobs = [(n, cfg) for n in names]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_run_quiet, jobs))
    else:
        results = [_run_quiet(j) for j in jobs]
    return results


# argument parsing ---------------------------------------------------------------------
def _add_common(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--cutoff", type=float, help="energy cutoff N (half-integer)")
    p.add_argument("--band", type=int, help="Fourier band")
    p.add_argument("--germ", help="semigroup germ description")
    p.add_argument("--t", type=float, help="semigroup time")
    p.add_argument("--w", type=lambda v: complex(v.replace(" ", "")), help="inner disk centre")
    p.add_argument("--s", type=float, help="inner disk radius")
    p.add_argument("--schedule", type=lambda v: tuple(float(x) for x in v.split(",")), help="R values, e.g. 2,1.5,1")
    p.add_argument("--tol", type=float)
    p.add_argument("--window", type=float, help="check window M")
    p.add_argument("--degree", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker processes for the suite")
    p.add_argument("--out", help="report directory")
    p.add_argument("--csv", action="store_true", default=None, help="also write CSV tables")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="degencft", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["suite"]:
        p = sub.add_parser(name, help="default suite" if name == "suite" else f"run the {name} experiment")
        _add_common(p)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"degencft: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "suite":
            results = run_suite(cfg)
        else:
            results = [(args.command, run(args.command, cfg))]
    except fock.CapacityError as exc:
        print(f"degencft: capacity error at cutoff {cfg.cutoff}: {exc}", file=sys.stderr)
        return 3
    status = 0
    for name, (code, body) in results:
        for r in body["records"]:
            mark = "info" if r["passed"] is None else ("ok" if r["passed"] else "FAIL")
            print(f"{name:18s} {mark:4s} {r['name']}: {_fmt(r['value'])}")
        print(f"{name:18s} => {body['verdict']}  ({Path(cfg.out) / (name + '.json')})")
        status = max(status, code)
    return status


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    if isinstance(v, list) and len(v) > 6:
        return "[" + ", ".join(_fmt(x) for x in v[:6]) + ", ...]"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
