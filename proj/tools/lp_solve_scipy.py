#!/usr/bin/env python3
"""Bridge adapter: solve an LP-format MILP with scipy's HiGHS backend.

Usage: lp_solve_scipy.py IN.lp OUT.sol [--time-limit S] [--mip-gap G]

Reads the CPLEX-style LP dialect written by the gridrestore exporter (a
`\\ var:` manifest fixes variable order; `\\ tag:` comments are ignored),
solves it with scipy.optimize.milp, and writes the solution file the bridge
expects:

    status <optimal|feasible|infeasible|unbounded|limit|error>
    objective <value>
    <name> <value>
"""

import argparse
import re
import sys

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp

TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<rel><=|>=|=<|=>|<|>|=)"
    r"|(?P<op>[+\-:])"
    r"|(?P<ident>[A-Za-z0-9_\.\[\]\(\)#]+))"
)


def tokenize(line):
    out, pos = [], 0
    while pos < len(line):
        m = TOKEN_RE.match(line, pos)
        if not m or m.end() == pos:
            if line[pos:].strip() == "":
                break
            raise ValueError(f"cannot tokenize: {line[pos:]!r}")
        pos = m.end()
        if m.group("num") is not None:
            out.append(("num", float(m.group("num"))))
        elif m.group("rel") is not None:
            r = m.group("rel")
            out.append(("rel", "<=" if r in ("<=", "=<", "<") else ">=" if r in (">=", "=>", ">") else "="))
        elif m.group("op") is not None:
            out.append(("op", m.group("op")))
        else:
            out.append(("ident", m.group("ident")))
    return out


INF_NAMES = {"inf", "infinity", "1e30"}


class Model:
    def __init__(self):
        self.names = []
        self.index = {}
        self.lb = []
        self.ub = []
        self.is_bin = []
        self.obj = {}
        self.rows = []  # (coef dict, rel, rhs)
        self.minimize = False

    def var(self, name, from_manifest=False):
        if name not in self.index:
            self.index[name] = len(self.names)
            self.names.append(name)
            self.lb.append(0.0)
            self.ub.append(np.inf)
            self.is_bin.append(False)
        return self.index[name]


def parse_expression(toks, model):
    """Returns (coefs, rel, rhs); rel/rhs are None for objectives."""
    coefs, rel, rhs = {}, None, None
    sign, coef = 1.0, None
    i = 0
    if len(toks) >= 2 and toks[0][0] == "ident" and toks[1] == ("op", ":"):
        i = 2
    while i < len(toks):
        kind, val = toks[i]
        if kind == "op" and val == "+":
            sign = 1.0
        elif kind == "op" and val == "-":
            sign = -sign
        elif kind == "rel":
            rel = val
            sign, coef = 1.0, None
        elif kind == "num":
            if rel is not None:
                rhs = sign * val
                sign = 1.0
            else:
                coef = sign * val
                sign = 1.0
        elif kind == "ident":
            if val.lower() in INF_NAMES and rel is not None:
                rhs = sign * np.inf
                i += 1
                continue
            c = coef if coef is not None else sign
            j = model.var(val)
            coefs[j] = coefs.get(j, 0.0) + c
            coef, sign = None, 1.0
        i += 1
    return coefs, rel, rhs


def parse_lp(text):
    model = Model()
    section = None
    pending = []

    def flush(pending):
        if not pending:
            return
        toks = [t for line in pending for t in tokenize(line)]
        pending.clear()
        if section == "obj":
            coefs, _, _ = parse_expression(toks, model)
            s = -1.0 if model.minimize else 1.0
            for j, c in coefs.items():
                model.obj[j] = model.obj.get(j, 0.0) + s * c
        elif section == "con":
            coefs, rel, rhs = parse_expression(toks, model)
            if rel is None or rhs is None:
                raise ValueError("constraint lacks relation or rhs")
            model.rows.append((coefs, rel, rhs))

    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("\\"):
            if line.startswith("\\ var: "):
                model.var(line[7:].strip(), from_manifest=True)
            continue
        low = line.lower()
        if low in ("maximize", "maximise", "max"):
            flush(pending); section = "obj"; continue
        if low in ("minimize", "minimise", "min"):
            flush(pending); section = "obj"; model.minimize = True; continue
        if low in ("subject to", "st", "s.t.", "such that"):
            flush(pending); section = "con"; continue
        if low == "bounds":
            flush(pending); section = "bounds"; continue
        if low in ("binaries", "binary", "bin"):
            flush(pending); section = "bin"; continue
        if low in ("generals", "general", "gen"):
            flush(pending); section = "gen"; continue
        if low == "end":
            flush(pending); section = "end"; continue

        if section == "obj":
            pending.append(line)
        elif section == "con":
            toks = tokenize(line)
            if len(toks) >= 2 and toks[0][0] == "ident" and toks[1] == ("op", ":"):
                flush(pending)
            pending.append(line)
            all_toks = [t for ln in pending for t in tokenize(ln)]
            has_rel = any(k == "rel" for k, _ in all_toks)
            if has_rel and all_toks[-1][0] == "num" or (has_rel and all_toks[-1][0] == "ident"
                                                        and all_toks[-1][1].lower() in INF_NAMES):
                flush(pending)
        elif section == "bounds":
            parse_bound_line(line, model)
        elif section == "bin":
            for kind, val in tokenize(line):
                if kind == "ident":
                    j = model.var(val)
                    model.is_bin[j] = True
                    model.lb[j] = max(model.lb[j], 0.0)
                    model.ub[j] = min(model.ub[j], 1.0)
        elif section == "gen":
            pass
        else:
            raise ValueError(f"content outside known section: {line!r}")
    flush(pending)
    return model


def parse_bound_line(line, model):
    toks = tokenize(line)
    if len(toks) == 2 and toks[0][0] == "ident" and toks[1] == ("ident", "free"):
        j = model.var(toks[0][1])
        model.lb[j], model.ub[j] = -np.inf, np.inf
        return

    def read_num(i):
        sign = 1.0
        while i < len(toks) and toks[i][0] == "op" and toks[i][1] in "+-":
            if toks[i][1] == "-":
                sign = -sign
            i += 1
        if i < len(toks) and toks[i][0] == "num":
            return sign * toks[i][1], i + 1
        if i < len(toks) and toks[i][0] == "ident" and toks[i][1].lower() in INF_NAMES:
            return sign * np.inf, i + 1
        return None, i

    val, i = read_num(0)
    if val is not None:  # lo <= x [<= hi]
        if toks[i] != ("rel", "<="):
            raise ValueError(f"bad bound line: {line!r}")
        j = model.var(toks[i + 1][1])
        model.lb[j] = val
        i += 2
        if i < len(toks):
            if toks[i] != ("rel", "<="):
                raise ValueError(f"bad bound line: {line!r}")
            hi, _ = read_num(i + 1)
            model.ub[j] = hi
        return
    if toks[0][0] != "ident":
        raise ValueError(f"bad bound line: {line!r}")
    j = model.var(toks[0][1])
    rel = toks[1][1]
    val, _ = read_num(2)
    if rel == "<=":
        model.ub[j] = val
    elif rel == ">=":
        model.lb[j] = val
    else:
        model.lb[j] = model.ub[j] = val


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("lp_in")
    ap.add_argument("sol_out")
    ap.add_argument("--time-limit", type=float, default=None)
    ap.add_argument("--mip-gap", type=float, default=1e-9)
    args = ap.parse_args()

    with open(args.lp_in) as f:
        model = parse_lp(f.read())

    n = len(model.names)
    c = np.zeros(n)
    for j, v in model.obj.items():
        c[j] = -v  # scipy minimizes; the export is maximize-sense

    constraints = []
    if model.rows:
        data, ri, ci, lo, hi = [], [], [], [], []
        for k, (coefs, rel, rhs) in enumerate(model.rows):
            for j, v in coefs.items():
                ri.append(k)
                ci.append(j)
                data.append(v)
            if rel == "<=":
                lo.append(-np.inf); hi.append(rhs)
            elif rel == ">=":
                lo.append(rhs); hi.append(np.inf)
            else:
                lo.append(rhs); hi.append(rhs)
        A = sparse.csr_matrix((data, (ri, ci)), shape=(len(model.rows), n))
        constraints = [LinearConstraint(A, np.array(lo), np.array(hi))]

    integrality = np.array([1 if b else 0 for b in model.is_bin])
    options = {"mip_rel_gap": args.mip_gap, "presolve": True}
    if args.time_limit is not None:
        options["time_limit"] = args.time_limit

    res = milp(c=c, constraints=constraints,
               bounds=Bounds(np.array(model.lb), np.array(model.ub)),
               integrality=integrality, options=options)

    status_map = {0: "optimal", 1: "limit", 2: "infeasible", 3: "unbounded"}
    status = status_map.get(res.status, "error")
    if status == "limit" and res.x is not None:
        status = "feasible"

    with open(args.sol_out, "w") as f:
        f.write(f"status {status}\n")
        if res.x is not None:
            f.write("objective %.17g\n" % -res.fun)
            for name, v in zip(model.names, res.x):
                f.write("%s %.17g\n" % (name, v))
    return 0


if __name__ == "__main__":
    sys.exit(main())
