"""Query language front-end: parser, renderer, and planner."""

from . import nodes
from .parser import parse
from .planner import (AggregateNode, CctNode, DirectionNode, JoinNode,
                      PlanNode, ProjectNode, QueryPlan, R2ANode, SelectNode,
                      SourceNode, WindowNode, iter_nodes, plan)
from .render import render

__all__ = [
    "nodes", "parse", "render", "plan", "QueryPlan", "PlanNode", "iter_nodes",
    "SourceNode", "WindowNode", "SelectNode", "R2ANode", "CctNode",
    "ProjectNode", "JoinNode", "AggregateNode", "DirectionNode",
]
