"""JSON round-trips for operators and sampled functions.

Complex numbers are written as ``[re, im]``; plain reals are accepted on
input. Operators use the fields ``n``, ``coefficients``, ``boundary`` (rows
with ``order``, ``a``, ``b``, ``lower``) and ``label``; a ``preset`` name or
``raw_boundary`` forms may be given instead of ``boundary``.
"""

import numpy as np

from .errors import ConfigInvalid
from .model import (BCRow, Coefficient, DifferentialExpression, NormalizedBoundaryConditions,
                    OperatorSpec, RawForm, SampledFunction, dirichlet2, neumann2, normalize_bc,
                    periodic2)

PRESETS = {"dirichlet": dirichlet2, "neumann": neumann2, "periodic": periodic2}
FUNCTION_KINDS = ("zero", "polynomial", "step", "samples", "expr-table")


def cnum(z, path="value"):
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise ConfigInvalid(f"{path}: complex numbers are [re, im]")
        return complex(float(z[0]), float(z[1]))
    try:
        return complex(z)
    except (TypeError, ValueError):
        raise ConfigInvalid(f"{path}: not a number: {z!r}") from None


def cjson(z):
    z = complex(z)
    return [z.real, z.imag]


# --------------------------------------------------------------------------
# coefficients and operators
# --------------------------------------------------------------------------

def coefficient_to_json(c: Coefficient):
    if c.kind == "polynomial":
        return {"kind": "polynomial", "coeffs": [cjson(v) for v in c.data]}
    if c.kind == "step":
        return {"kind": "step", "breaks": list(c.breaks), "values": [cjson(v) for v in c.data]}
    return {"kind": "samples", "values": [cjson(v) for v in c.data]}


def coefficient_from_json(d, path="coefficient"):
    kind = d.get("kind")
    try:
        if kind == "polynomial":
            return Coefficient.polynomial([cnum(v, f"{path}.coeffs") for v in d["coeffs"]])
        if kind == "constant":
            return Coefficient.constant(cnum(d["value"], f"{path}.value"))
        if kind == "step":
            return Coefficient.step(d["breaks"], [cnum(v, f"{path}.values") for v in d["values"]])
        if kind == "samples":
            return Coefficient.samples([cnum(v, f"{path}.values") for v in d["values"]])
    except KeyError as e:
        raise ConfigInvalid(f"{path}: missing field {e.args[0]!r}") from None
    except ValueError as e:
        raise ConfigInvalid(f"{path}: {e}") from None
    raise ConfigInvalid(f"{path}.kind: unknown coefficient kind {kind!r}")


def operator_to_json(op: OperatorSpec):
    rows = [{"order": r.order, "a": cjson(r.a), "b": cjson(r.b),
             "lower": [[j, cjson(u), cjson(v)] for j, u, v in r.lower]} for r in op.bc.rows]
    return {"n": op.n,
            "coefficients": {str(k): coefficient_to_json(c) for k, c in sorted(op.expr.coefficients.items())},
            "smooth_subleading": op.expr.smooth_subleading,
            "boundary": rows, "label": op.label}


def operator_from_json(d, path="operator"):
    if not isinstance(d, dict):
        raise ConfigInvalid(f"{path}: expected an object")
    if "preset" in d:
        name = d["preset"]
        if name not in PRESETS:
            raise ConfigInvalid(f"{path}.preset: unknown preset {name!r}")
        base = PRESETS[name]()
        coeffs = {int(k): coefficient_from_json(v, f"{path}.coefficients.{k}")
                  for k, v in d.get("coefficients", {}).items()}
        return base.with_coefficients(coeffs, d.get("label", name)) if coeffs else base
    if "n" not in d:
        raise ConfigInvalid(f"{path}.n: missing")
    n = int(d["n"])
    if "boundary" in d:
        rows = []
        for i, r in enumerate(d["boundary"]):
            p = f"{path}.boundary[{i}]"
            try:
                rows.append(BCRow(int(r["order"]), cnum(r["a"], p + ".a"), cnum(r["b"], p + ".b"),
                                  tuple((int(j), cnum(u, p + ".lower"), cnum(v, p + ".lower"))
                                        for j, u, v in r.get("lower", []))))
            except KeyError as e:
                raise ConfigInvalid(f"{p}: missing field {e.args[0]!r}") from None
        bc = NormalizedBoundaryConditions(tuple(rows))
    elif "raw_boundary" in d:
        forms = []
        for i, r in enumerate(d["raw_boundary"]):
            p = f"{path}.raw_boundary[{i}]"
            at0 = [cnum(v, p + ".at0") for v in r["at0"]]
            at1 = [cnum(v, p + ".at1") for v in r["at1"]]
            forms.append(RawForm.from_derivatives(at0, at1) if r.get("classical") else RawForm(tuple(at0), tuple(at1)))
        bc = normalize_bc(forms)
    else:
        raise ConfigInvalid(f"{path}.boundary: missing")
    coeffs = {int(k): coefficient_from_json(v, f"{path}.coefficients.{k}")
              for k, v in d.get("coefficients", {}).items()}
    try:
        expr = DifferentialExpression(n, coeffs, bool(d.get("smooth_subleading", False)))
        return OperatorSpec(expr, bc, d.get("label", ""))
    except ValueError as e:
        raise ConfigInvalid(f"{path}: {e}") from None


# --------------------------------------------------------------------------
# functions
# --------------------------------------------------------------------------

def _bump(x, lo, hi):
    t = (np.asarray(x, dtype=float) - lo) / (hi - lo)
    out = np.zeros_like(t)
    m = (t > 0) & (t < 1)
    out[m] = np.exp(-1.0 / (t[m] * (1.0 - t[m])))
    return out


EXPR_TABLE = {
    "one": (0, lambda x: np.ones_like(x)),
    "power": (1, lambda x, p: x ** p),
    "sin": (2, lambda x, w, ph: np.sin(w * x + ph)),
    "cos": (2, lambda x, w, ph: np.cos(w * x + ph)),
    "exp": (1, lambda x, a: np.exp(a * x)),
    "abs": (1, lambda x, c: np.abs(x - c)),
    "gauss": (2, lambda x, c, w: np.exp(-((x - c) / w) ** 2)),
    "bump": (2, _bump),
    "heaviside": (1, lambda x, c: (x >= c).astype(float)),
}


def _expr_terms(terms, path):
    compiled, breaks = [], []
    for i, t in enumerate(terms):
        coeff = cnum(t.get("coeff", 1.0), f"{path}.terms[{i}].coeff")
        factors = []
        for j, fac in enumerate(t.get("factors", [])):
            name, args = fac[0], [float(a) for a in (fac[1] if len(fac) > 1 else [])]
            if name not in EXPR_TABLE:
                raise ConfigInvalid(f"{path}.terms[{i}].factors[{j}]: unknown function {name!r}")
            arity, fn = EXPR_TABLE[name]
            if len(args) != arity:
                raise ConfigInvalid(f"{path}.terms[{i}].factors[{j}]: {name} takes {arity} arguments")
            if name in ("abs", "heaviside") and 0 < args[0] < 1:
                breaks.append(args[0])
            factors.append((fn, args))
        compiled.append((coeff, factors))

    def ev(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for coeff, factors in compiled:
            v = np.ones(x.shape, dtype=complex) * coeff
            for fn, args in factors:
                v = v * fn(x, *args)
            out = out + v
        return out

    return ev, tuple(sorted(set(breaks)))


def function_from_json(d, path="function", N=None):
    if not isinstance(d, dict):
        raise ConfigInvalid(f"{path}: expected an object")
    kind = d.get("kind")
    pay = d.get("payload", {})
    kw = {} if N is None else {"N": int(N)}
    try:
        if kind == "zero":
            return SampledFunction.zero(**kw)
        if kind == "polynomial":
            return SampledFunction.polynomial([cnum(v, f"{path}.payload.coeffs") for v in pay["coeffs"]], **kw)
        if kind == "step":
            return SampledFunction.step(pay["breaks"], [cnum(v, f"{path}.payload.values") for v in pay["values"]], **kw)
        if kind == "samples":
            return SampledFunction.from_samples([cnum(v, f"{path}.payload.values") for v in pay["values"]])
        if kind == "expr-table":
            ev, br = _expr_terms(pay["terms"], f"{path}.payload")
            return SampledFunction.from_callable(ev, breakpoints=br, spec={"kind": kind, "payload": pay}, **kw)
    except KeyError as e:
        raise ConfigInvalid(f"{path}.payload: missing field {e.args[0]!r}") from None
    except ValueError as e:
        raise ConfigInvalid(f"{path}: {e}") from None
    raise ConfigInvalid(f"{path}.kind: must be one of {FUNCTION_KINDS}")


def function_to_json(f: SampledFunction):
    if f.spec is None:
        raise ConfigInvalid("function has no serializable description")
    return dict(f.spec)
