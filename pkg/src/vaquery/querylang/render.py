"""Render an AST back to query text.

``parse(render(ast))`` yields a structurally identical AST; the output is a
single-line canonical form, not the original spelling.
"""

from __future__ import annotations

from .nodes import (AndExpr, BBoxExpr, CctSource, CmpExpr, ColumnRef, Expr,
                    JoinClause, NotExpr, OrExpr, Query, R2ASource,
                    ScalarPairCmp, SelectAggregate, SelectColumn,
                    SelectDirection, SelectStar, SMatchArgs, SMatchExpr,
                    Source, SubquerySource, TableSource, WindowClause)


def _num(v) -> str:
    return repr(v)


def _smatch_args(args: SMatchArgs) -> str:
    parts = [_num(args.th)]
    if args.metric is not None:
        parts.append(args.metric.name)
        if args.polarity is not None:
            parts.append(args.polarity.name)
    return f"SMATCH({', '.join(parts)})"


def _select_item(item) -> str:
    if isinstance(item, SelectStar):
        return "*"
    if isinstance(item, SelectColumn):
        return str(item.ref)
    if isinstance(item, SelectAggregate):
        return f"{item.func.upper()}({item.arg if item.arg else '*'})"
    if isinstance(item, SelectDirection):
        return f"DIRECTION({item.ref})"
    raise TypeError(f"unknown select item {item!r}")


def _source(src: Source) -> str:
    if isinstance(src, TableSource):
        text = src.name
    elif isinstance(src, R2ASource):
        text = f"R2A({src.table}, gba={src.gba}, aoa={src.aoa})"
    elif isinstance(src, CctSource):
        gap = f", {src.gap_threshold}" if src.gap_threshold is not None else ""
        text = f"CCT({_source(src.inner)}, {src.option.name}{gap})"
    elif isinstance(src, SubquerySource):
        text = f"({render(src.query)})"
    else:
        raise TypeError(f"unknown source {src!r}")
    if not isinstance(src, SubquerySource) and src.alias and not isinstance(src, TableSource):
        text = f"({text})"
    if src.alias:
        text += f" {src.alias}"
    return text


def _expr(e: Expr) -> str:
    if isinstance(e, CmpExpr):
        value = f'"{e.value}"' if isinstance(e.value, str) else _num(e.value)
        return f"{e.ref} {e.op} {value}"
    if isinstance(e, BBoxExpr):
        comps = []
        for c in e.components:
            if c is None:
                comps.append("*")
            elif isinstance(c, tuple):
                comps.append(f"{_num(c[0])}:{_num(c[1])}")
            else:
                comps.append(_num(c))
        return f"{e.ref} MATCHES [{', '.join(comps)}]"
    if isinstance(e, SMatchExpr):
        probe = ", ".join(_num(v) for v in e.probe)
        return f"{e.ref} {_smatch_args(e.args)} [{probe}]"
    if isinstance(e, AndExpr):
        return " AND ".join(_wrap(p) for p in e.parts)
    if isinstance(e, OrExpr):
        return " OR ".join(_wrap(p) for p in e.parts)
    if isinstance(e, NotExpr):
        return f"NOT {_wrap(e.part)}"
    raise TypeError(f"unknown expression {e!r}")


def _wrap(e: Expr) -> str:
    if isinstance(e, (AndExpr, OrExpr)):
        return f"({_expr(e)})"
    return _expr(e)


def _pair_cmp(c: ScalarPairCmp) -> str:
    left = str(c.left)
    if c.offset:
        left += f" + {_num(c.offset)}" if c.offset > 0 else f" - {_num(-c.offset)}"
    return f"{left} {c.op} {c.right}"


def _join(j: JoinClause) -> str:
    if j.cond.args is None:
        cond = f"{j.cond.left} = {j.cond.right}"
    else:
        cond = f"{j.cond.left} {_smatch_args(j.cond.args)} {j.cond.right}"
    for extra in j.cond.extras:
        cond += f" AND {_pair_cmp(extra)}"
    return f"{j.kind} {_source(j.source)} ON {cond}"


def _window(w: WindowClause) -> str:
    return f"WINDOW({w.kind.name}, {_num(w.size)}, {_num(w.hop)})"


def render(q: Query) -> str:
    parts = ["SELECT " + ", ".join(_select_item(i) for i in q.select),
             "FROM " + _source(q.source)]
    if q.join is not None:
        parts.append(_join(q.join))
    if q.where is not None:
        parts.append("WHERE " + _expr(q.where))
    if q.window is not None:
        parts.append(_window(q.window))
    return " ".join(parts)
