"""Independent brute-force evaluators used as oracles.

These deliberately share no code with the engines: expressions are evaluated
by a tree walk over name->value environments, joins are filtered cross
products, sorting uses its own comparison, and text scans are linear filters.
Each one restates the documented semantics in the most naive way possible.
"""

import functools

from polygate import expr as ex
from polygate.engines import array as arr
from polygate.engines import relational as rel
# ---------------------------------------------------------------------------
# naive expression evaluation over (qualifier, name) -> value environments
# ---------------------------------------------------------------------------


def lookup(env, col):
    if col.qualifier is not None:
        return env[(col.qualifier, col.name)]
    hits = [v for (q, n), v in env.items() if n == col.name]
    assert len(hits) == 1, f"ambiguous or unknown {col!r}"
    return hits[0]


def eval_expr(node, env):
    if isinstance(node, ex.Lit):
        return node.value
    if isinstance(node, ex.Col):
        return lookup(env, node)
    if isinstance(node, ex.Unary):
        v = eval_expr(node.operand, env)
        if node.op == "not":
            return not v
        return None if v is None else -v
    assert isinstance(node, ex.Binary)
    if node.op == "and":
        return eval_expr(node.left, env) and eval_expr(node.right, env)
    if node.op == "or":
        return eval_expr(node.left, env) or eval_expr(node.right, env)
    a = eval_expr(node.left, env)
    b = eval_expr(node.right, env)
    if node.op in ("=", "!=", "<", "<=", ">", ">="):
        if a is None or b is None:
            return False
        return {
            "=": a == b,
            "!=": a != b,
            "<": a < b,
            "<=": a <= b,
            ">": a > b,
            ">=": a >= b,
        }[node.op]
    if a is None or b is None:
        return None
    if node.op == "+":
        r = a + b
    elif node.op == "-":
        r = a - b
    elif node.op == "*":
        r = a * b
    else:
        if b == 0:
            return None
        r = a / b
    if node.op == "/":
        r = float(r)
    if isinstance(r, float) and r != r:  # NaN
        return None
    return r


# ---------------------------------------------------------------------------
# independent total-order comparison
# ---------------------------------------------------------------------------


def cmp_values(a, b):
    def band(v):
        if v is None:
            return 0
        if isinstance(v, str):
            return 2
        return 1

    ba, bb = band(a), band(b)
    if ba != bb:
        return -1 if ba < bb else 1
    if ba == 0:
        return 0
    if ba == 2:
        return -1 if a < b else (1 if a > b else 0)
    if a < b:
        return -1
    if a > b:
        return 1
    # numerically equal: Int64 sorts before Float64
    ra = 0 if isinstance(a, int) else 1
    rb = 0 if isinstance(b, int) else 1
    return -1 if ra < rb else (1 if ra > rb else 0)


# ---------------------------------------------------------------------------
# relational oracle: evaluates the same declarative plan trees naively
# ---------------------------------------------------------------------------


def rel_oracle(tables, plan):
    """tables: {name: (schema, rows)}; returns (labels, rows) like the engine."""

    def walk(node):
        if isinstance(node, rel.Scan):
            schema, rows = tables[node.table]
            qual = node.alias or node.table
            labels = [(qual, n, k) for n, k in schema.fields]
            return labels, [tuple(r) for r in rows]
        if isinstance(node, rel.Filter):
            labels, rows = walk(node.input)
            out = [r for r in rows if eval_expr(node.predicate, _env(labels, r)) is True]
            return labels, out
        if isinstance(node, rel.Project):
            labels, rows = walk(node.input)
            new_labels = []
            for i, (name, e) in enumerate(node.items):
                if name is None:
                    name = e.name if isinstance(e, ex.Col) else f"col{i + 1}"
                new_labels.append((None, name.lower(), _expr_kind(e, labels)))
            out = [
                tuple(eval_expr(e, _env(labels, r)) for _, e in node.items) for r in rows
            ]
            return new_labels, out
        if isinstance(node, rel.Join):
            llabels, lrows = walk(node.left)
            rlabels, rrows = walk(node.right)
            out = []
            for lr in lrows:  # cross product, filtered
                for rr in rrows:
                    keep = True
                    for lc, rc in zip(node.left_keys, node.right_keys):
                        a = lookup(_env(llabels, lr), lc)
                        b = lookup(_env(rlabels, rr), rc)
                        if a is None or b is None or a != b:
                            keep = False
                            break
                    if keep:
                        out.append(lr + rr)
            return llabels + rlabels, out
        if isinstance(node, rel.Aggregate):
            labels, rows = walk(node.input)
            key_pos = [_find(labels, c) for c in node.keys]
            groups = {}
            order = []
            for r in rows:
                gk = tuple(_gkey(r[i]) for i in key_pos)
                if gk not in groups:
                    groups[gk] = (tuple(r[i] for i in key_pos), [])
                    order.append(gk)
                groups[gk][1].append(r)
            if not node.keys and not order:
                groups[()] = ((), [])
                order.append(())
            out_rows = []
            for gk in order:
                rep, grows = groups[gk]
                vals = []
                for spec in node.aggs:
                    if spec.arg is None:
                        vals.append(len(grows))
                    else:
                        vs = [
                            eval_expr(spec.arg, _env(labels, r)) for r in grows
                        ]
                        vals.append(_naive_fold(spec.fn, vs))
                out_rows.append(rep + tuple(vals))
            out_labels = [labels[i] for i in key_pos] + [
                (None, (s.label or s.fn).lower(), None) for s in node.aggs
            ]
            return out_labels, out_rows
        if isinstance(node, rel.Sort):
            labels, rows = walk(node.input)
            keys = [(_find(labels, c), desc) for c, desc in node.keys]

            def cmp_rows(x, y):
                for i, desc in keys:
                    c = cmp_values(x[i], y[i])
                    if c:
                        return -c if desc else c
                return 0

            return labels, sorted(rows, key=functools.cmp_to_key(cmp_rows))
        assert isinstance(node, rel.Limit)
        labels, rows = walk(node.input)
        return labels, rows[: node.n]

    return walk(plan)


def _env(labels, row):
    return {(q, n): v for (q, n, _), v in zip(labels, row)}


def _find(labels, col):
    hits = [
        i
        for i, (q, n, _) in enumerate(labels)
        if n == col.name and (col.qualifier is None or q == col.qualifier)
    ]
    assert len(hits) == 1, f"ambiguous or unknown {col!r}"
    return hits[0]


def _expr_kind(e, labels):
    return None  # the oracle never needs output kinds


def _gkey(v):
    if v is None:
        return (0,)
    if isinstance(v, str):
        return (2, v)
    return (1, v)


def _naive_fold(fn, values):
    vs = [v for v in values if v is not None]
    if fn == "count":
        return len(vs)
    if not vs:
        return None
    if fn == "sum":
        total = vs[0]
        for v in vs[1:]:
            total = total + v
        return total
    if fn == "avg":
        total = vs[0]
        for v in vs[1:]:
            total = total + v
        return total / len(vs)
    best = vs[0]
    for v in vs[1:]:
        c = cmp_values(v, best)
        if (fn == "min" and c < 0) or (fn == "max" and c > 0):
            best = v
    return best


# ---------------------------------------------------------------------------
# array oracle
# ---------------------------------------------------------------------------


def arr_oracle(arrays, plan):
    """arrays: {name: (dims, attrs_schema, cells)}; returns (dims, attr_names, cells)."""

    def walk(node):
        if isinstance(node, arr.Scan):
            dims, attrs, cells = arrays[node.array]
            return list(dims), [n for n, _ in attrs.fields], dict(cells)
        if isinstance(node, arr.Subarray):
            dims, attr_names, cells = walk(node.input)
            pairs = [
                (node.bounds[i], node.bounds[i + 1]) for i in range(0, len(node.bounds), 2)
            ]
            new_dims = [
                (n, max(lo, wlo), min(hi, whi))
                for (n, lo, hi), (wlo, whi) in zip(dims, pairs)
            ]
            out = {}
            for coords, tup in cells.items():
                ok = True
                for c, (_, lo, hi) in zip(coords, new_dims):
                    if not (lo <= c <= hi):
                        ok = False
                        break
                if ok:
                    out[coords] = tup
            return new_dims, attr_names, out
        if isinstance(node, arr.Filter):
            dims, attr_names, cells = walk(node.input)
            out = {}
            for coords, tup in cells.items():
                env = _cell_env(dims, attr_names, coords, tup)
                if eval_expr(node.predicate, env) is True:
                    out[coords] = tup
            return dims, attr_names, out
        if isinstance(node, arr.Project):
            dims, attr_names, cells = walk(node.input)
            idx = [attr_names.index(a.lower()) for a in node.attrs]
            return (
                dims,
                [attr_names[i] for i in idx],
                {c: tuple(t[i] for i in idx) for c, t in cells.items()},
            )
        if isinstance(node, arr.Apply):
            dims, attr_names, cells = walk(node.input)
            out = {}
            for coords, tup in cells.items():
                env = _cell_env(dims, attr_names, coords, tup)
                out[coords] = tup + (eval_expr(node.value, env),)
            return dims, attr_names + [node.name.lower()], out
        assert isinstance(node, arr.Aggregate)
        dims, attr_names, cells = walk(node.input)
        dim_names = [n for n, _, _ in dims]
        g_idx = [dim_names.index(d.lower()) for d in node.group_dims]
        groups, order = {}, []
        for coords, tup in cells.items():
            gk = tuple(coords[i] for i in g_idx)
            if gk not in groups:
                groups[gk] = []
                order.append(gk)
            groups[gk].append(tup)
        if not g_idx and not order:
            groups[()] = []
            order.append(())
        if node.attr is None:
            label = "count"
            folded = {gk: (len(groups[gk]),) for gk in order}
        else:
            a_idx = attr_names.index(node.attr.lower())
            label = f"{node.attr.lower()}_{node.fn}"
            folded = {
                gk: (_naive_fold(node.fn, [t[a_idx] for t in groups[gk]]),) for gk in order
            }
        return [dims[i] for i in g_idx], [label], folded

    dims, attr_names, cells = walk(plan)
    names = [n for n, _, _ in dims] + attr_names
    rows = [coords + tup for coords, tup in sorted(cells.items())]
    return names, rows


def _cell_env(dims, attr_names, coords, tup):
    env = {(None, n): c for (n, _, _), c in zip(dims, coords)}
    env.update({(None, n): v for n, v in zip(attr_names, tup)})
    return env


# ---------------------------------------------------------------------------
# text oracle
# ---------------------------------------------------------------------------


def text_oracle(entries, start=None, end=None, pattern=None, latest_only=False):
    """Linear filter over all entries, then sort by key order."""
    picked = list(entries)
    if start is not None:
        picked = [e for e in picked if e[0] >= start]
    if end is not None:
        picked = [e for e in picked if e[0] < end]
    if pattern is not None:
        picked = [e for e in picked if pattern in e[4]]
    if latest_only:
        best = {}
        for e in picked:
            k = (e[0], e[1], e[2])
            if k not in best or e[3] > best[k][3]:
                best[k] = e
        picked = list(best.values())
    return sorted(picked, key=lambda e: (e[0], e[1], e[2], -e[3]))
