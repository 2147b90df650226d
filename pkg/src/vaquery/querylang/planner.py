"""Query planner: validated AST -> executable operator tree.

The plan is a deterministic function of (AST, catalog): windows sit directly
above each source leaf, grouping sits directly above its source, and no
reordering is attempted beyond two faithful simplifications:

* a WHERE clause that references the base table of a grouped source filters
  the relation before grouping (that is what the qualifier says);
* a projection feeding ``count(*)`` is dropped, since row counts ignore
  columns.

Column-kind violations surface here, before any data flows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from ..errors import SchemaMismatch, UnknownColumn, UnknownIdentifier
from ..model import Column, ColumnKind, FeatureVector, Schema, kind_check
from ..operators import (And, BBoxTest, BBPattern, CctOption, Comparison, Not,
                         Or, Predicate, ScalarPairPredicate, SMatchProbe,
                         equi_join_schema)
from ..similarity import MatchCondition, Metric
from ..windows import WHOLE_STREAM, WindowSpec
from . import nodes as ast


# --- plan nodes ---------------------------------------------------------------

#: payload type flowing out of a node, per window
RELATION = "relation"
ARRABLE = "arrable"


@dataclass(frozen=True)
class SourceNode:
    name: str
    ordinal: int
    schema: Schema
    payload: str = RELATION

    children = ()


@dataclass(frozen=True)
class WindowNode:
    child: "PlanNode"
    spec: WindowSpec

    @property
    def schema(self) -> Schema:
        return self.child.schema

    @property
    def payload(self) -> str:
        return self.child.payload

    @property
    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class SelectNode:
    child: "PlanNode"
    predicate: Predicate

    @property
    def schema(self) -> Schema:
        return self.child.schema

    @property
    def payload(self) -> str:
        return self.child.payload

    @property
    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class R2ANode:
    child: "PlanNode"
    gba: str
    aoa: str
    payload: str = ARRABLE

    @property
    def schema(self) -> Schema:
        return self.child.schema

    @property
    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class CctNode:
    child: "PlanNode"
    option: CctOption
    gap_threshold: int = 1

    @property
    def schema(self) -> Schema:
        return self.child.schema

    payload = ARRABLE

    @property
    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class ProjectNode:
    child: "PlanNode"
    columns: tuple[str, ...]
    schema: Schema

    @property
    def payload(self) -> str:
        return self.child.payload

    @property
    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class JoinNode:
    left: "PlanNode"
    right: "PlanNode"
    kind: str  # JOIN | CJOIN | CCTJOIN
    on_left: str
    on_right: str
    cond: MatchCondition
    extras: tuple[ScalarPairPredicate, ...]
    schema: Schema
    cct_option: CctOption = CctOption.BOTH
    payload: str = RELATION

    @property
    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class EquiJoinNode:
    left: "PlanNode"
    right: "PlanNode"
    on_left: str
    on_right: str
    prefixes: tuple[str, str]
    schema: Schema
    payload: str = RELATION

    @property
    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class AggregateNode:
    child: "PlanNode"
    func: str  # count | sum | avg | min | max
    column: str | None  # None: count(*)
    label: str
    payload: str = RELATION

    @property
    def schema(self) -> Schema:
        return Schema((Column(self.label, ColumnKind.SCALAR_NUMERIC),))

    @property
    def children(self):
        return (self.child,)


@dataclass(frozen=True)
class DirectionNode:
    child: "PlanNode"
    bb_column: str
    key_column: str
    schema: Schema
    epsilon: float = 0.0
    payload: str = RELATION

    @property
    def children(self):
        return (self.child,)


PlanNode = Union[SourceNode, WindowNode, SelectNode, R2ANode, CctNode,
                 ProjectNode, JoinNode, EquiJoinNode, AggregateNode,
                 DirectionNode]


@dataclass(frozen=True)
class QueryPlan:
    root: PlanNode
    sources: tuple[str, ...]  # source names in appearance order
    output_names: tuple[str, ...]


def iter_nodes(node: PlanNode):
    yield node
    for child in node.children:
        yield from iter_nodes(child)


# --- planning ----------------------------------------------------------------


def _window_spec(clause: ast.WindowClause | None, inherited: WindowSpec) -> WindowSpec:
    if clause is None:
        return inherited
    return WindowSpec(clause.kind, clause.size, clause.hop)


class _Catalog:
    def __init__(self, schemas: dict[str, Schema]):
        self.schemas = schemas
        self.order: list[str] = []

    def lookup(self, name: str) -> Schema:
        for key, schema in self.schemas.items():
            if key.lower() == name.lower():
                return schema
        raise UnknownIdentifier(f"unknown source {name!r}")

    def ordinal(self, name: str) -> int:
        self.order.append(name)
        return len(self.order) - 1


@dataclass
class _Planned:
    """A planned source: its node plus the names WHERE/SELECT may qualify with."""

    node: PlanNode
    alias: str | None  # alias of the produced value
    base_name: str | None  # underlying table name for grouped sources
    base_schema: Schema | None
    r2a_at: R2ANode | None  # set when the source chain tops out at R2A/CCT


def _expr_refs(e: ast.Expr) -> list[ast.ColumnRef]:
    if isinstance(e, (ast.CmpExpr, ast.BBoxExpr, ast.SMatchExpr)):
        return [e.ref]
    if isinstance(e, (ast.AndExpr, ast.OrExpr)):
        return [r for p in e.parts for r in _expr_refs(p)]
    return _expr_refs(e.part)


def _to_predicate(e: ast.Expr, schema: Schema) -> Predicate:
    if isinstance(e, ast.CmpExpr):
        return Comparison(schema.resolve(e.ref.name), e.op, e.value)
    if isinstance(e, ast.BBoxExpr):
        comps = [tuple(c) if isinstance(c, tuple) else c for c in e.components]
        return BBoxTest(schema.resolve(e.ref.name), BBPattern(*comps))
    if isinstance(e, ast.SMatchExpr):
        return SMatchProbe(schema.resolve(e.ref.name), FeatureVector(e.probe),
                           _condition(e.args))
    if isinstance(e, ast.AndExpr):
        return And(tuple(_to_predicate(p, schema) for p in e.parts))
    if isinstance(e, ast.OrExpr):
        return Or(tuple(_to_predicate(p, schema) for p in e.parts))
    if isinstance(e, ast.NotExpr):
        return Not(_to_predicate(e.part, schema))
    raise TypeError(f"unknown expression {e!r}")


def _condition(args: ast.SMatchArgs) -> MatchCondition:
    return MatchCondition(args.metric or Metric.COSINE, args.th, args.polarity)


class _Planner:
    def __init__(self, catalog: _Catalog):
        self.catalog = catalog

    def plan_query(self, q: ast.Query, inherited_window: WindowSpec) -> PlanNode:
        if q.join is not None and q.where is not None:
            raise SchemaMismatch("WHERE alongside a join condition is not supported; "
                                 "put extra conjuncts in the ON clause")
        window = _window_spec(q.window, inherited_window)
        planned = self.plan_source(q.source, window)

        if q.join is not None:
            node = self.plan_join(q, planned, window)
            planned = _Planned(node, None, None, None, None)
        elif q.where is not None:
            node = self.place_where(q.where, planned)
            planned = _Planned(node, planned.alias, planned.base_name,
                               planned.base_schema, planned.r2a_at)

        return self.plan_select_list(q.select, planned)

    # sources

    def plan_source(self, src: ast.Source, window: WindowSpec) -> _Planned:
        if isinstance(src, ast.TableSource):
            schema = self.catalog.lookup(src.name)
            node = WindowNode(SourceNode(src.name, self.catalog.ordinal(src.name), schema),
                              window)
            return _Planned(node, src.alias or src.name, src.name, schema, None)
        if isinstance(src, ast.R2ASource):
            schema = self.catalog.lookup(src.table)
            self._check_qualifier(src.gba.qualifier, {src.table})
            self._check_qualifier(src.aoa.qualifier, {src.table})
            base = WindowNode(SourceNode(src.table, self.catalog.ordinal(src.table), schema),
                              window)
            kind_check("r2a_gba", src.gba.name, schema)
            kind_check("r2a_aoa", src.aoa.name, schema)
            node = R2ANode(base, schema.resolve(src.gba.name), schema.resolve(src.aoa.name))
            return _Planned(node, src.alias, src.table, schema, node)
        if isinstance(src, ast.CctSource):
            inner = self.plan_source(src.inner, window)
            if inner.node.payload != ARRABLE:
                raise SchemaMismatch("CCT requires a grouped (arrable) input")
            node = CctNode(inner.node, src.option, src.gap_threshold or 1)
            return _Planned(node, src.alias or inner.alias, inner.base_name,
                            inner.base_schema, inner.r2a_at)
        if isinstance(src, ast.SubquerySource):
            node = self.plan_query(src.query, window)
            return _Planned(node, src.alias, None, None, None)
        raise TypeError(f"unknown source {src!r}")

    @staticmethod
    def _check_qualifier(qualifier: str | None, allowed: set[str]) -> None:
        if qualifier is not None and qualifier.lower() not in {a.lower() for a in allowed}:
            raise UnknownIdentifier(f"unknown qualifier {qualifier!r}")

    # where placement

    def place_where(self, where: ast.Expr, planned: _Planned) -> PlanNode:
        refs = _expr_refs(where)
        base_names = {planned.base_name.lower()} if planned.base_name else set()
        quals = {r.qualifier.lower() for r in refs if r.qualifier is not None}

        if planned.r2a_at is not None and quals and quals <= base_names:
            # the filter speaks about the pre-grouping relation: apply it below
            pred = _to_predicate(where, planned.base_schema)
            pred.check(planned.base_schema)
            r2a = planned.r2a_at
            filtered = R2ANode(SelectNode(r2a.child, pred), r2a.gba, r2a.aoa)
            return _replace_node(planned.node, r2a, filtered)

        allowed = base_names | ({planned.alias.lower()} if planned.alias else set())
        for r in refs:
            self._check_qualifier(r.qualifier, allowed)
        pred = _to_predicate(where, planned.node.schema)
        pred.check(planned.node.schema)
        return SelectNode(planned.node, pred)

    # joins

    def plan_join(self, q: ast.Query, left: _Planned, window: WindowSpec) -> PlanNode:
        clause = q.join
        right = self.plan_source(clause.source, window)

        left_names = {n.lower() for n in (left.alias, left.base_name) if n}
        right_names = {n.lower() for n in (right.alias, right.base_name) if n}

        def side_of(ref: ast.ColumnRef) -> str:
            if ref.qualifier is None:
                raise UnknownIdentifier(f"join condition column {ref.name!r} must be qualified")
            qual = ref.qualifier.lower()
            if qual in left_names:
                return "left"
            if qual in right_names:
                return "right"
            raise UnknownIdentifier(f"unknown qualifier {ref.qualifier!r}")

        lref, rref = clause.cond.left, clause.cond.right
        if side_of(lref) == "right" and side_of(rref) == "left":
            lref, rref = rref, lref
        if side_of(lref) != "left" or side_of(rref) != "right":
            raise SchemaMismatch("join condition must compare one column from each side")

        llabel = left.alias or left.base_name or "left"
        rlabel = right.alias or right.base_name or "right"
        if clause.cond.args is None:
            if clause.kind != "JOIN":
                raise SchemaMismatch(f"{clause.kind} requires an SMATCH condition")
            if clause.cond.extras:
                raise SchemaMismatch("extra conjuncts are not supported with equality joins")
            if left.node.payload != RELATION or right.node.payload != RELATION:
                raise SchemaMismatch("equality joins operate on ungrouped relations")
            kind_check("equality_join", lref.name, left.node.schema)
            kind_check("equality_join", rref.name, right.node.schema)
            schema = equi_join_schema(left.node.schema, right.node.schema, (llabel, rlabel))
            return EquiJoinNode(left.node, right.node,
                                left.node.schema.resolve(lref.name),
                                right.node.schema.resolve(rref.name),
                                (llabel, rlabel), schema)

        if left.node.payload != ARRABLE or right.node.payload != ARRABLE:
            raise SchemaMismatch("similarity joins require grouped (arrable) inputs")
        kind_check("smatch", lref.name, left.node.schema)
        kind_check("smatch", rref.name, right.node.schema)

        extras = []
        for pc in clause.cond.extras:
            pl, pr, off = pc.left, pc.right, pc.offset
            op = pc.op
            if side_of(pl) == "right" and side_of(pr) == "left":
                pl, pr = pr, pl
                op = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "=": "=", "!=": "!="}[op]
                off = -off
            kind_check("compare", pl.name, left.node.schema)
            kind_check("compare", pr.name, right.node.schema)
            extras.append(ScalarPairPredicate(left.node.schema.resolve(pl.name), op,
                                              right.node.schema.resolve(pr.name), off))

        lgba = _gba_of(left.node)
        rgba = _gba_of(right.node)
        schema = Schema((
            Column(f"{llabel}.{lgba}", ColumnKind.SCALAR_NUMERIC),
            Column(f"{rlabel}.{rgba}", ColumnKind.SCALAR_NUMERIC),
            Column("score", ColumnKind.SCALAR_NUMERIC),
        ))
        return JoinNode(left.node, right.node, clause.kind,
                        left.node.schema.resolve(lref.name),
                        right.node.schema.resolve(rref.name),
                        _condition(clause.cond.args), tuple(extras), schema)

    # select list

    def plan_select_list(self, items: tuple[ast.SelectItem, ...], planned: _Planned) -> PlanNode:
        node = planned.node
        if len(items) == 1 and isinstance(items[0], ast.SelectStar):
            return node

        aggs = [i for i in items if isinstance(i, ast.SelectAggregate)]
        dirs = [i for i in items if isinstance(i, ast.SelectDirection)]
        cols = [i for i in items if isinstance(i, ast.SelectColumn)]

        if aggs:
            if len(items) != 1:
                raise SchemaMismatch("an aggregate cannot be combined with other select items")
            agg = aggs[0]
            if agg.arg is None:
                # count(*) ignores columns; drop a projection directly below
                if isinstance(node, ProjectNode):
                    node = node.child
                return AggregateNode(node, "count", None, "count")
            self._check_ref_scope(agg.arg, planned)
            kind_check(agg.func, agg.arg.name, node.schema)
            column = node.schema.resolve(agg.arg.name)
            return AggregateNode(node, agg.func, column, f"{agg.func}({column})")

        if dirs:
            if cols and not all(self._is_gba_ref(c.ref, planned) for c in cols):
                raise SchemaMismatch("direction can only be combined with the group key")
            if len(dirs) != 1:
                raise SchemaMismatch("only one direction item is supported")
            if node.payload != ARRABLE:
                raise SchemaMismatch("direction requires a grouped (arrable) input")
            ref = dirs[0].ref
            self._check_ref_scope(ref, planned)
            kind_check("direction", ref.name, node.schema)
            gba = _gba_of(node)
            schema = Schema((
                Column(gba, node.schema.kind_of(gba)),
                Column("direction", ColumnKind.DIRECTION_ENUM),
            ))
            return DirectionNode(node, node.schema.resolve(ref.name), gba, schema)

        names = []
        for c in cols:
            names.append(self._resolve_output(c.ref, planned))
        if names == list(node.schema.names()):
            return node
        sub = node.schema.subset(names)
        return ProjectNode(node, tuple(names), sub)

    def _check_ref_scope(self, ref: ast.ColumnRef, planned: _Planned) -> None:
        allowed = {n for n in (planned.alias, planned.base_name) if n}
        self._check_qualifier(ref.qualifier, allowed)

    def _is_gba_ref(self, ref: ast.ColumnRef, planned: _Planned) -> bool:
        node = planned.node
        return node.payload == ARRABLE and ref.name.lower() == _gba_of(node).lower()

    def _resolve_output(self, ref: ast.ColumnRef, planned: _Planned) -> str:
        schema = planned.node.schema
        # join outputs carry qualified column names; try the full spelling first
        if ref.qualifier is not None and schema.has(str(ref)):
            return schema.resolve(str(ref))
        self._check_ref_scope(ref, planned)
        if not schema.has(ref.name):
            raise UnknownColumn(ref.name)
        return schema.resolve(ref.name)


def _gba_of(node: PlanNode) -> str:
    if isinstance(node, R2ANode):
        return node.gba
    if isinstance(node, (CctNode, SelectNode, WindowNode)):
        return _gba_of(node.child)
    if isinstance(node, ProjectNode):
        return _gba_of(node.child)
    raise SchemaMismatch("input is not grouped")


def _replace_node(root: PlanNode, target: PlanNode, replacement: PlanNode) -> PlanNode:
    if root is target:
        return replacement
    if isinstance(root, (WindowNode, SelectNode)):
        return type(root)(_replace_node(root.child, target, replacement),
                          root.spec if isinstance(root, WindowNode) else root.predicate)
    if isinstance(root, R2ANode):
        return R2ANode(_replace_node(root.child, target, replacement), root.gba, root.aoa)
    if isinstance(root, CctNode):
        return CctNode(_replace_node(root.child, target, replacement),
                       root.option, root.gap_threshold)
    if isinstance(root, ProjectNode):
        return ProjectNode(_replace_node(root.child, target, replacement),
                           root.columns, root.schema)
    raise SchemaMismatch(f"cannot rebuild plan across {type(root).__name__}")


def plan(query: ast.Query, catalog: dict[str, Schema],
         default_window: WindowSpec | None = None) -> QueryPlan:
    """Plan a parsed query against the catalog of source schemas.

    ``default_window`` applies to sources of queries without a WINDOW
    clause; the fallback is a single window spanning the whole stream.
    """
    cat = _Catalog(catalog)
    planner = _Planner(cat)
    root = planner.plan_query(query, default_window or WHOLE_STREAM)
    return QueryPlan(root, tuple(cat.order), root.schema.names())
