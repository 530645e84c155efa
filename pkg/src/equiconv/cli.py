"""Command-line driver.

Each subcommand reads a JSON config, runs one pipeline and writes JSON and
CSV artifacts into ``--out``. Domain errors exit with status 2 and a JSON
error object on stderr; anything else exits with status 1.
"""

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

COMMANDS = ("classify", "spectrum", "expand", "equiconv", "torus-demo", "schrodinger-sf", "oskina")
REQUIRED = {
    "classify": ("operator",),
    "spectrum": ("operator", "R"),
    "expand": ("operator", "function"),
    "equiconv": ("function",),
    "torus-demo": (),
    "schrodinger-sf": ("h", "t_list"),
    "oskina": ("n", "r", "points"),
}
PLOT_HEADER = ("k", "r", "name", "value")
THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

log = logging.getLogger("equiconv")


def _error_types():
    from .errors import ConfigInvalid, DomainError
    return ConfigInvalid, DomainError


@dataclass
class ExperimentConfig:
    command: str
    params: dict = field(default_factory=dict)
    out: str = "."
    seed: int = 0
    tol: float = None
    threads: int = 1

    def to_json(self):
        return asdict(self)

    @classmethod
    def from_json(cls, d):
        return cls(**d).validate()

    def validate(self):
        ConfigInvalid, _ = _error_types()
        if self.command not in COMMANDS:
            raise ConfigInvalid(f"command: must be one of {COMMANDS}")
        if not isinstance(self.params, dict):
            raise ConfigInvalid("params: expected an object")
        for key in REQUIRED[self.command]:
            if key not in self.params:
                if not (self.command == "equiconv" and key == "operator"):
                    raise ConfigInvalid(f"params.{key}: required for {self.command}")
        if self.command == "equiconv" and not ({"operator", "operators"} & set(self.params)):
            raise ConfigInvalid("params.operators: required for equiconv")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigInvalid("seed: must fit in an unsigned 64-bit integer")
        if self.tol is not None and not 0 < float(self.tol) <= 1e-2:
            raise ConfigInvalid("tol: must lie in (0, 1e-2]")
        if not 1 <= int(self.threads) <= 256:
            raise ConfigInvalid("threads: must lie in [1, 256]")
        p = self.params
        if "R" in p and not 0 < float(p["R"]) <= 2 * math.pi * 30:
            raise ConfigInvalid("params.R: must lie in (0, 60 pi]")
        if "k_range" in p:
            lo, hi = (int(v) for v in p["k_range"])
            if not 1 <= lo < hi <= 40:
                raise ConfigInvalid("params.k_range: need 1 <= k_min < k_max <= 40")
        if "grid" in p and not 16 <= int(p["grid"].get("n", 201)) <= 4001:
            raise ConfigInvalid("params.grid.n: must lie in [16, 4001]")
        return self


# --------------------------------------------------------------------------
# output helpers
# --------------------------------------------------------------------------

def fmt(v):
    """12 significant digits in scientific notation."""
    return f"{float(v):.11e}"


def atomic_write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def emit_plotdata(curves, out_dir, family="curves"):
    """Write one CSV per curve family with header (k, r, name, value).

    ``curves`` maps a family name to rows (k, r, name, value); a plain list of
    rows is treated as a single family named ``family``.
    """
    if not isinstance(curves, dict):
        curves = {family: curves}
    if not curves:
        curves = {family: []}
    paths = []
    for fam in sorted(curves):
        rows = [(int(k), float(r), str(n), float(v)) for k, r, n, v in curves[fam]]
        path = os.path.join(out_dir, f"{fam}.csv")
        atomic_write(path, csv_text(PLOT_HEADER, rows))
        paths.append(path)
    return paths


def _c(z):
    return [float(z.real), float(z.imag)]


def _grid(p, default=201):
    import numpy as np
    g = p.get("grid", {})
    return np.linspace(float(g.get("lo", 0.0)), float(g.get("hi", 1.0)), int(g.get("n", default)))


def _h(v):
    return math.inf if v in ("inf", "Infinity", None) else float(v)


# --------------------------------------------------------------------------
# commands; each returns (summary line, json payload)
# --------------------------------------------------------------------------

def cmd_classify(cfg):
    import numpy as np
    from .regularity import classify, random_operator, square_operator
    from .serialize import operator_from_json, operator_to_json

    op = operator_from_json(cfg.params["operator"])
    rep = classify(op)
    out = {"operator": operator_to_json(op), "report": rep.to_json(),
           "squared_verdict": classify(square_operator(op)).verdict}
    rnd = cfg.params.get("random")
    if rnd:
        rng = np.random.default_rng(cfg.seed)
        rows = []
        for i in range(int(rnd.get("count", 50))):
            n = int(rng.choice(rnd.get("orders", [2, 3])))
            o = random_operator(rng, n)
            rows.append((i, n, classify(o).verdict, classify(square_operator(o)).verdict))
        atomic_write(os.path.join(cfg.out, "classify_random.csv"),
                     csv_text(("index", "n", "verdict", "verdict_squared"), rows))
        out["random_agreement"] = sum(a == b for *_, a, b in rows) / max(len(rows), 1)
    write_json(os.path.join(cfg.out, "classify.json"), out)
    t = rep.theta_01
    return f"{rep.verdict} theta_01={t.real:.6g}{t.imag:+.6g}j", out


def cmd_spectrum(cfg):
    from .serialize import operator_from_json
    from .solver.charvalues import find_char_values

    op = operator_from_json(cfg.params["operator"])
    kw = {"tol": cfg.tol} if cfg.tol else {}
    cv = find_char_values(op, float(cfg.params["R"]), **kw)
    header = ("re_rho", "im_rho", "multiplicity", "progression_id", "fit_c_re", "fit_c_im", "fit_residual")
    rows = [(float(a), float(b), int(m), int(p), float(c), float(d), float(e))
            for a, b, m, p, c, d, e in cv.rows()]
    atomic_write(os.path.join(cfg.out, "spectrum.csv"), csv_text(header, rows))
    out = {"count": len(rows), "R": cv.R, "fit_c": [_c(z) for z in cv.fit_c]}
    write_json(os.path.join(cfg.out, "spectrum.json"), out)
    return f"{len(rows)} characteristic values with |rho| <= {cv.R:.6g}", out


def _radii(p, cvs):
    """(k, r) pairs from explicit radii or a separated schedule."""
    from .expansion import choose_radii

    if "r" in p:
        return [(0, float(r)) for r in p["r"]]
    ks = [int(k) for k in p.get("k", [5, 10])]
    sch = choose_radii(cvs, (min(ks), max(ks)))
    return [(k, sch.radius(k)) for k in ks]


def cmd_expand(cfg):
    import numpy as np
    from .expansion import S_r_contour, S_r_residues, partial_sum, sigma_r
    from .serialize import function_from_json, operator_from_json
    from .solver.charvalues import find_char_values

    p = cfg.params
    op = operator_from_json(p["operator"])
    f = function_from_json(p["function"])
    x = _grid(p)
    methods = p.get("methods", ["auto"])
    kmax = max([int(k) for k in p.get("k", [5, 10])] + [0])
    rmax = max([float(r) for r in p.get("r", [])] + [2 * np.pi * kmax + 2 * np.pi])
    cv = find_char_values(op, rmax + 2.0)
    pairs = _radii(p, [cv])
    tol = cfg.tol or 1e-9
    rows, sups = [], {}
    for k, r in pairs:
        for m in methods:
            if m == "contour":
                v = S_r_contour(op, f, r, x, tol=tol).values
            elif m == "residue":
                v = S_r_residues(op, f, r, x, cvs=cv).values
            elif m == "sigma":
                v = sigma_r(f, r, x).values
            elif m == "auto":
                v = partial_sum(op, f, r, x, cvs=cv).values
            else:
                raise _error_types()[0](f"params.methods: unknown method {m!r}")
            sups.setdefault(m, []).append(float(np.max(np.abs(v))))
            rows.extend((k, float(r), float(xi), m, float(z.real), float(z.imag)) for xi, z in zip(x, v))
    atomic_write(os.path.join(cfg.out, "expand.csv"), csv_text(("k", "r", "x", "method", "re", "im"), rows))
    out = {"radii": [[k, r] for k, r in pairs], "methods": methods, "sup": sups}
    if len(methods) >= 2:
        a = np.array([[row[4] + 1j * row[5] for row in rows if row[3] == m] for m in methods[:2]])
        out["max_method_difference"] = float(np.max(np.abs(a[0] - a[1])))
    write_json(os.path.join(cfg.out, "expand.json"), out)
    head = out.get("max_method_difference")
    return (f"max method difference {head:.3e}" if head is not None
            else f"{len(pairs)} radii x {len(methods)} methods"), out


def cmd_equiconv(cfg):
    from .equiconv import whole_interval_report
    from .serialize import function_from_json, operator_from_json

    p = cfg.params
    specs = p.get("operators") or [p["operator"]]
    ops = [operator_from_json(d, f"params.operators[{i}]") for i, d in enumerate(specs)]
    f = function_from_json(p["function"])
    k_range = tuple(int(v) for v in p.get("k_range", (5, 25)))
    ks = [int(k) for k in p["ks"]] if "ks" in p else None
    rep = whole_interval_report(ops, f, k_range=k_range, ks=ks, x_grid=_grid(p),
                                factor=float(p.get("factor", 0.25)))
    out = rep.to_json()
    write_json(os.path.join(cfg.out, "equiconv.json"), out)
    emit_plotdata({"equiconv_curves": rep.curve_rows()}, cfg.out)
    return rep.verdict, out


def cmd_torus(cfg):
    import numpy as np
    from . import torus

    p = cfg.params
    ks = [int(k) for k in p.get("ks", [10, 20, 40, 80])]
    rows = torus.torus_demo(float(p.get("x0", math.pi)), float(p.get("width", 0.05)),
                            float(p.get("inner", 0.1)), float(p.get("outer", 0.2)), ks,
                            int(p.get("M", torus.DEFAULT_M)), bool(p.get("point", False)))
    atomic_write(os.path.join(cfg.out, "torus.csv"),
                 csv_text(("r", "bound", "a_norm", "pf_norm"), [tuple(map(float, r)) for r in rows]))
    out = {"rows": [list(map(float, r)) for r in rows],
           "note": "bound is the cutoff upper bound for the A(K) seminorm, not the infimum"}
    trials = int(p.get("commutator_trials", 0))
    if trials:
        rng = np.random.default_rng(cfg.seed)
        worst = 0.0
        ok = True
        for _ in range(trials):
            M1, M2 = (int(v) for v in rng.integers(1, 40, size=2))
            F = torus.random_sequence(rng, M1)
            g = torus.random_sequence(rng, M2, "smooth-multiplier", decay=float(rng.uniform(0, 3)))
            lhs, rhs, good = torus.commutator_bound_holds(F, g, float(rng.uniform(0, 2 * np.pi * 50)))
            ok &= good
            worst = max(worst, lhs / rhs if rhs else 0.0)
        out["commutator"] = {"trials": trials, "all_hold": bool(ok), "max_ratio": worst}
    write_json(os.path.join(cfg.out, "torus.json"), out)
    return f"bound {rows[0][1]:.4e} -> {rows[-1][1]:.4e}", out


def cmd_schrodinger(cfg):
    from .singular import levitan_marchenko_residuals

    p = cfg.params
    h = _h(p["h"])
    kw = {k: p[k] for k in ("b_max", "N") if k in p}
    cur = levitan_marchenko_residuals(p.get("q"), h, p["t_list"], b=float(p.get("b", 1.0)),
                                      n_grid=int(p.get("n_grid", 41)), form=p.get("form", "printed"), **kw)
    rows = []
    for name in ("oracle-vs-free", "free-vs-line"):
        for t, v in zip(cur["t"], cur[name]):
            rows.append((float(t), name, float(v)))
    atomic_write(os.path.join(cfg.out, "schrodinger.csv"), csv_text(("t", "curve", "value"), rows))
    out = {"h": p["h"], "curves": cur}
    write_json(os.path.join(cfg.out, "schrodinger.json"), out)
    first = cur["oracle-vs-free"] or cur["free-vs-line"]
    return f"residual {first[0]:.4e} -> {first[-1]:.4e}", out


def cmd_oskina(cfg):
    from .expansion import oskina_kernel, oskina_kernel_closed

    p = cfg.params
    n = int(p["n"])
    rs = p["r"] if isinstance(p["r"], list) else [p["r"]]
    rows = []
    for r in rs:
        for x, xi, t in p["points"]:
            v = complex(oskina_kernel(n, float(r), float(x), float(xi), float(t)))
            c = complex(oskina_kernel_closed(n, float(r), float(x), float(xi), float(t)))
            rows.append((float(r), float(x), float(xi), float(t), v.real, v.imag, c.real, c.imag))
    atomic_write(os.path.join(cfg.out, "oskina.csv"),
                 csv_text(("r", "x", "xi", "t", "quad_re", "quad_im", "closed_re", "closed_im"), rows))
    gap = max((abs(complex(a, b) - complex(c, d)) for *_, a, b, c, d in rows), default=0.0)
    out = {"n": n, "max_gap": gap, "rows": len(rows)}
    write_json(os.path.join(cfg.out, "oskina.json"), out)
    return f"max quadrature vs closed form gap {gap:.3e}", out


DISPATCH = {"classify": cmd_classify, "spectrum": cmd_spectrum, "expand": cmd_expand,
            "equiconv": cmd_equiconv, "torus-demo": cmd_torus, "schrodinger-sf": cmd_schrodinger,
            "oskina": cmd_oskina}


def run(cfg: ExperimentConfig):
    """Execute ``cfg``; returns (exit status, summary line)."""
    ConfigInvalid, DomainError = _error_types()
    try:
        cfg.validate()
        os.makedirs(cfg.out, exist_ok=True)
        summary, _ = DISPATCH[cfg.command](cfg)
        return 0, summary
    except (ConfigInvalid, DomainError) as e:
        sys.stderr.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
        return 2, None
    except Exception as e:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        sys.stderr.write(json.dumps({"error": "InternalError", "message": f"{type(e).__name__}: {e}"}) + "\n")
        return 1, None


def build_parser():
    ap = argparse.ArgumentParser(prog="equiconv", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--threads", type=int, default=1)
    return ap


def load_config(args):
    ConfigInvalid, _ = _error_types()
    params = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                params = json.load(fh)
        except OSError as e:
            raise ConfigInvalid(f"config: cannot read {args.config}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigInvalid(f"config: invalid JSON ({e.msg} at line {e.lineno})") from None
    cmd = params.pop("command", args.command)
    if cmd != args.command:
        raise ConfigInvalid(f"command: config is for {cmd!r}, not {args.command!r}")
    return ExperimentConfig(args.command, params, args.out, args.seed, args.tol, args.threads)


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = os.environ.get("EQUICONV_LOG", "error").upper()
    logging.basicConfig(level=getattr(logging, level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    for var in THREAD_VARS:
        os.environ.setdefault(var, str(max(1, args.threads)))
    try:
        cfg = load_config(args)
    except Exception as e:  # noqa: BLE001
        ConfigInvalid, _ = _error_types()
        if isinstance(e, ConfigInvalid):
            sys.stderr.write(json.dumps(e.to_json(), sort_keys=True) + "\n")
            return 2
        raise
    status, summary = run(cfg)
    if summary:
        print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())
