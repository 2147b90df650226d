"""Pipeline execution engine.

A query plan is instantiated as one stage per plan node, connected by
bounded FIFO queues. Source stages feed tuples (optionally rate-throttled,
in timestamp order); window stages close windows as the watermark advances;
per-window stages transform whole window payloads. A cooperative round-robin
scheduler grants each stage a bounded quantum of items per pass, so results
are a function of the plan and the input traces only — feed rates and
quantum sizes change scheduling, never output.

Binary stages (joins) pair windows from their two inputs by window index;
window managers emit every index in order (gaps as empty windows), which
keeps the pairing lock-step and the join's memory bounded by the two
currently-paired windows.
"""

from __future__ import annotations

import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Mapping, Sequence

from .errors import ConfigError, QueueStall, SchemaMismatch
from .model import Arrable, BoundingBox, FeatureVector, Relation, Schema
from .operators import (CctOption, ComparisonCounter, Direction8, JoinPair,
                        aggregate, cct, cct_join, cjoin, count_star, direction,
                        hash_equi_join, nl_join, project, select)
from .querylang.planner import (AggregateNode, CctNode, DirectionNode,
                                EquiJoinNode, JoinNode, PlanNode, ProjectNode,
                                QueryPlan, R2ANode, SelectNode, SourceNode,
                                WindowNode, _gba_of)
from .operators import r2a as r2a_op
from .windows import WindowKind, WindowManager, WindowSpec

_EOS = ("eos",)


@dataclass(frozen=True)
class FeederConfig:
    """Per-source feed behavior: tuples per second, 0 = unthrottled."""

    rate: float = 0.0

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise ConfigError(f"feed rate must be >= 0, got {self.rate}")


@dataclass(frozen=True)
class EngineConfig:
    queue_capacity: int = 1024
    quantum: int = 256
    watchdog_seconds: float = 10.0
    feeders: Mapping[str, FeederConfig] = field(default_factory=dict)
    default_rate: float = 0.0

    def __post_init__(self) -> None:
        if self.queue_capacity <= 0:
            raise ConfigError(f"queue capacity must be positive, got {self.queue_capacity}")
        if self.quantum <= 0:
            raise ConfigError(f"quantum must be positive, got {self.quantum}")
        if self.default_rate < 0:
            raise ConfigError(f"feed rate must be >= 0, got {self.default_rate}")

    def rate_for(self, source: str) -> float:
        cfg = self.feeders.get(source)
        return cfg.rate if cfg is not None else self.default_rate

    @staticmethod
    def from_mapping(raw: Mapping[str, Any]) -> "EngineConfig":
        feeders = {name: FeederConfig(float(rate))
                   for name, rate in dict(raw.get("rates", {})).items()}
        return EngineConfig(
            queue_capacity=int(raw.get("queue_capacity", 1024)),
            quantum=int(raw.get("quantum", 256)),
            watchdog_seconds=float(raw.get("watchdog_seconds", 10.0)),
            feeders=feeders,
            default_rate=float(raw.get("rate", 0.0)),
        )

    @staticmethod
    def from_file(path: str | Path) -> "EngineConfig":
        """Load a config file: JSON, or flat ``key=value`` lines where
        ``rate.<source>=`` sets a per-source feed rate."""
        text = Path(path).read_text(encoding="utf-8")
        stripped = text.lstrip()
        if stripped.startswith("{"):
            return EngineConfig.from_mapping(json.loads(text))
        raw: dict[str, Any] = {"rates": {}}
        for line_no, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value on line {line_no}: {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key.startswith("rate."):
                raw["rates"][key[len("rate."):]] = value
            else:
                raw[key] = value
        return EngineConfig.from_mapping(raw)


class _Queue:
    """Bounded FIFO channel between stages."""

    __slots__ = ("items", "capacity")

    def __init__(self, capacity: int):
        self.items: deque = deque()
        self.capacity = capacity

    def space(self) -> int:
        return self.capacity - len(self.items)

    def put(self, item) -> None:
        self.items.append(item)

    def get(self):
        return self.items.popleft()

    def __len__(self) -> int:
        return len(self.items)


@dataclass
class StageStats:
    name: str
    tuples_in: int = 0
    tuples_out: int = 0
    smatch_comparisons: int = 0
    wall_seconds: float = 0.0
    window_wall: dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "tuples_in": self.tuples_in,
                "tuples_out": self.tuples_out,
                "smatch_comparisons": self.smatch_comparisons,
                "wall_seconds": self.wall_seconds,
                "window_wall": {str(k): v for k, v in sorted(self.window_wall.items())}}


@dataclass
class OpStats:
    stages: list[StageStats]

    @property
    def total_smatch_comparisons(self) -> int:
        return sum(s.smatch_comparisons for s in self.stages)

    @property
    def total_wall_seconds(self) -> float:
        return sum(s.wall_seconds for s in self.stages)

    def stage(self, name: str) -> StageStats:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def of_kind(self, kind: str) -> list[StageStats]:
        """Stages whose name starts with a node kind, e.g. 'source', 'join'."""
        return [s for s in self.stages if s.name.startswith(kind)]

    def to_dict(self) -> dict[str, Any]:
        return {"stages": [s.to_dict() for s in self.stages],
                "total_smatch_comparisons": self.total_smatch_comparisons,
                "total_wall_seconds": self.total_wall_seconds}


def _payload_size(payload) -> int:
    if isinstance(payload, Relation):
        return len(payload.rows)
    if isinstance(payload, Arrable):
        return payload.element_count()
    return len(payload)


class _Stage:
    """One operator instance; owns its state, never runs concurrently with itself."""

    def __init__(self, name: str, inputs: list[_Queue], output: _Queue):
        self.name = name
        self.inputs = inputs
        self.output = output
        self.stats = StageStats(name)
        self.done = False
        self.waiting_on_time = False
        self._pending: deque = deque()

    def _drain(self) -> int:
        moved = 0
        while self._pending and self.output.space() > 0:
            self.output.put(self._pending.popleft())
            moved += 1
        return moved

    def _emit(self, item) -> None:
        self._pending.append(item)

    def step(self, quantum: int) -> int:
        raise NotImplementedError


class _SourceStage(_Stage):
    def __init__(self, name: str, output: _Queue, rows: Sequence[Mapping[str, Any]],
                 rate: float, ordinal: int = 0):
        super().__init__(name, [], output)
        self.ordinal = ordinal
        self._rows: Iterator = iter(rows)
        self._rate = rate
        self._released = 0
        self._started: float | None = None
        self._exhausted = False

    def step(self, quantum: int) -> int:
        progress = self._drain()
        self.waiting_on_time = False
        if self._exhausted:
            if not self._pending:
                self.done = True
            return progress
        if self._started is None:
            self._started = time.monotonic()
        budget = quantum
        if self._rate > 0:
            allowed = int((time.monotonic() - self._started) * self._rate) - self._released
            budget = min(budget, allowed)
            if budget <= 0:
                self.waiting_on_time = True
                return progress
        while budget > 0 and self.output.space() > len(self._pending):
            row = next(self._rows, None)
            if row is None:
                self._exhausted = True
                self._emit(_EOS)
                break
            self._released += 1
            self.stats.tuples_in += 1
            self.stats.tuples_out += 1
            self._emit(("row", row))
            budget -= 1
            progress += 1
        progress += self._drain()
        if self._exhausted and not self._pending:
            self.done = True
        return progress


class _WindowStage(_Stage):
    def __init__(self, name: str, inp: _Queue, output: _Queue, spec: WindowSpec,
                 schema: Schema):
        super().__init__(name, [inp], output)
        self._manager = WindowManager(spec)
        self._spec = spec
        self._schema = schema
        self._ordinal = 0
        self._input_eos = False

    def _emit_closed(self, closed) -> None:
        for win, rows in closed:
            self.stats.tuples_out += len(rows)
            self._emit(("win", win.index, Relation(self._schema, tuple(rows))))

    def step(self, quantum: int) -> int:
        progress = self._drain()
        queue = self.inputs[0]
        taken = 0
        while taken < quantum and queue and self.output.space() > len(self._pending):
            item = queue.get()
            taken += 1
            if item == _EOS:
                self._input_eos = True
                self._emit_closed(self._manager.flush())
                self._emit(_EOS)
                break
            _, row = item
            self.stats.tuples_in += 1
            if self._spec.kind is WindowKind.TIME:
                key = row["ts"]
            else:
                key = self._ordinal
            self._ordinal += 1
            self._manager.add(key, row)
            if self._spec.kind is WindowKind.TIME:
                self._emit_closed(self._manager.close_windows(row["ts"]))
            else:
                self._emit_closed(self._manager.close_windows(self._ordinal))
        progress += taken + self._drain()
        if self._input_eos and not self._pending:
            self.done = True
        return progress


class _PerWindowStage(_Stage):
    """Applies a payload transform to each closed window."""

    def __init__(self, name: str, inp: _Queue, output: _Queue,
                 fn: Callable[[Any], Any], counter: ComparisonCounter | None = None):
        super().__init__(name, [inp], output)
        self._fn = fn
        self._counter = counter
        self._input_eos = False

    def step(self, quantum: int) -> int:
        progress = self._drain()
        queue = self.inputs[0]
        taken = 0
        while taken < quantum and queue and self.output.space() > len(self._pending):
            item = queue.get()
            taken += 1
            if item == _EOS:
                self._input_eos = True
                self._emit(_EOS)
                break
            _, idx, payload = item
            self.stats.tuples_in += _payload_size(payload)
            started = time.monotonic()
            result = self._fn(payload)
            elapsed = time.monotonic() - started
            self.stats.wall_seconds += elapsed
            self.stats.window_wall[idx] = self.stats.window_wall.get(idx, 0.0) + elapsed
            if self._counter is not None:
                self.stats.smatch_comparisons = self._counter.count
            self.stats.tuples_out += _payload_size(result)
            self._emit(("win", idx, result))
        progress += taken + self._drain()
        if self._input_eos and not self._pending:
            self.done = True
        return progress


class _JoinStage(_Stage):
    def __init__(self, name: str, left: _Queue, right: _Queue, output: _Queue,
                 node: JoinNode | EquiJoinNode):
        super().__init__(name, [left, right], output)
        self._node = node
        self._buffers: tuple[dict[int, Any], dict[int, Any]] = ({}, {})
        self._eos = [False, False]
        self._eos_sent = False
        self._next_idx = 0
        self._counter = ComparisonCounter()
        if isinstance(node, JoinNode):
            self._gbas = (_gba_of(node.left), _gba_of(node.right))
        else:
            self._gbas = None

    def _empty(self, side: int):
        child = self._node.left if side == 0 else self._node.right
        if self._gbas is None:
            return Relation(child.schema, ())
        return Arrable(self._gbas[side], "ts", child.schema, ())

    def _process(self, left, right) -> Relation:
        node = self._node
        if isinstance(node, EquiJoinNode):
            return hash_equi_join(left, right, node.on_left, node.on_right, node.prefixes)
        on = (node.on_left, node.on_right)
        if node.kind == "CJOIN":
            pairs = cjoin(left, right, node.cond, on, node.extras, self._counter)
        elif node.kind == "CCTJOIN":
            pairs = cct_join(left, right, node.cond, node.cct_option, on,
                             node.extras, self._counter)
        else:
            pairs = nl_join(left, right, node.cond, on, node.extras, self._counter)
        names = node.schema.names()
        return Relation(node.schema, tuple(
            {names[0]: p.left_oid, names[1]: p.right_oid, names[2]: p.score}
            for p in pairs))

    def step(self, quantum: int) -> int:
        progress = self._drain()
        taken = 0
        for side, queue in enumerate(self.inputs):
            while taken < quantum and queue:
                item = queue.get()
                taken += 1
                if item == _EOS:
                    self._eos[side] = True
                    break
                _, idx, payload = item
                self.stats.tuples_in += _payload_size(payload)
                self._buffers[side][idx] = payload

        left_buf, right_buf = self._buffers
        while self.output.space() > len(self._pending):
            if self._eos[0] and self._eos[1] and not left_buf and not right_buf:
                break  # every window on both sides has been paired
            idx = self._next_idx
            # a side is resolved for idx once the window arrived, or the side
            # ended (its stream simply had fewer windows: pair with empty)
            if not (idx in left_buf or self._eos[0]):
                break
            if not (idx in right_buf or self._eos[1]):
                break
            left = left_buf.pop(idx) if idx in left_buf else self._empty(0)
            right = right_buf.pop(idx) if idx in right_buf else self._empty(1)
            started = time.monotonic()
            result = self._process(left, right)
            elapsed = time.monotonic() - started
            self.stats.wall_seconds += elapsed
            self.stats.window_wall[idx] = elapsed
            self.stats.smatch_comparisons = self._counter.count
            self.stats.tuples_out += len(result.rows)
            self._emit(("win", idx, result))
            self._next_idx += 1
            progress += 1

        if (self._eos[0] and self._eos[1] and not left_buf and not right_buf
                and not self._eos_sent):
            self._emit(_EOS)
            self._eos_sent = True
        progress += taken + self._drain()
        if self._eos_sent and not self._pending:
            self.done = True
        return progress


class _SinkStage(_Stage):
    """Collects the root's window payloads as flat result rows."""

    def __init__(self, inp: _Queue):
        super().__init__("sink", [inp], _Queue(1))
        self.rows: list[dict[str, Any]] = []

    def step(self, quantum: int) -> int:
        queue = self.inputs[0]
        taken = 0
        while taken < quantum and queue:
            item = queue.get()
            taken += 1
            if item == _EOS:
                self.done = True
                break
            _, idx, payload = item
            for row in _payload_rows(payload):
                out = {"window": idx}
                out.update(row)
                self.rows.append(out)
        return taken


def _payload_rows(payload) -> list[dict[str, Any]]:
    if isinstance(payload, Relation):
        return [dict(r) for r in payload.rows]
    if isinstance(payload, Arrable):
        if payload.rows and not payload.rows[0].values:
            # grouped value projected down to its key: one row per group
            return [{payload.gba: r.key} for r in payload.rows]
        return payload.flatten()
    raise SchemaMismatch(f"cannot emit payload of type {type(payload).__name__}")


class Pipeline:
    """Instantiated plan: stages wired by bounded queues, scheduled round-robin."""

    def __init__(self, plan: QueryPlan, config: EngineConfig):
        self.plan = plan
        self.config = config
        self.stages: list[_Stage] = []
        self._source_stages: list[_SourceStage] = []
        self._root_queue = _Queue(config.queue_capacity)
        self._sink = _SinkStage(self._root_queue)
        self._names_used: dict[str, int] = {}
        self._build(plan.root, self._root_queue)
        # schedule leaves first so data flows on the first pass
        self.stages.reverse()
        self._ran = False

    def _stage_name(self, node: PlanNode) -> str:
        base = type(node).__name__.removesuffix("Node").lower()
        if isinstance(node, SourceNode):
            base = f"source[{node.name}]"
        count = self._names_used.get(base, 0)
        self._names_used[base] = count + 1
        return base if count == 0 else f"{base}#{count + 1}"

    # construction

    def _build(self, node: PlanNode, output: _Queue) -> None:
        name = self._stage_name(node)
        make_queue = lambda: _Queue(self.config.queue_capacity)

        if isinstance(node, SourceNode):
            stage = _SourceStage(name, output, (),
                                 self.config.rate_for(node.name), node.ordinal)
            self._source_stages.append(stage)
            self.stages.append(stage)
            return
        if isinstance(node, WindowNode):
            inq = make_queue()
            self.stages.append(_WindowStage(name, inq, output, node.spec, node.schema))
            self._build(node.child, inq)
            return
        if isinstance(node, (JoinNode, EquiJoinNode)):
            lq, rq = make_queue(), make_queue()
            self.stages.append(_JoinStage(name, lq, rq, output, node))
            self._build(node.left, lq)
            self._build(node.right, rq)
            return

        inq = make_queue()
        counter = None
        if isinstance(node, SelectNode):
            counter = ComparisonCounter()
            fn = _select_fn(node, counter)
        elif isinstance(node, R2ANode):
            fn = lambda payload, n=node: r2a_op(payload, n.gba, n.aoa)
        elif isinstance(node, CctNode):
            fn = lambda payload, n=node: cct(payload, n.option, n.gap_threshold)
        elif isinstance(node, ProjectNode):
            fn = lambda payload, n=node: project(payload, n.columns)
        elif isinstance(node, AggregateNode):
            fn = _aggregate_fn(node)
        elif isinstance(node, DirectionNode):
            fn = _direction_fn(node)
        else:
            raise ConfigError(f"unknown plan node {type(node).__name__}")
        self.stages.append(_PerWindowStage(name, inq, output, fn, counter))
        self._build(node.child, inq)

    # execution

    def run(self, sources: Sequence[Relation]) -> tuple[list[dict[str, Any]], OpStats]:
        """Feed the given traces (in plan source order) through the pipeline."""
        if self._ran:
            raise ConfigError("pipeline instances are single-use; instantiate again")
        self._ran = True
        if len(sources) != len(self._source_stages):
            raise SchemaMismatch(
                f"plan needs {len(self._source_stages)} sources, got {len(sources)}")
        for stage in self._source_stages:
            stage._rows = iter(sources[stage.ordinal].rows)

        runnable = self.stages + [self._sink]
        last_progress = time.monotonic()
        while not self._sink.done:
            progress = 0
            for stage in runnable:
                if not stage.done:
                    progress += stage.step(self.config.quantum)
            if progress:
                last_progress = time.monotonic()
                continue
            if any(s.waiting_on_time for s in self._source_stages):
                # a throttled feeder is accruing tokens; that counts as progress
                time.sleep(0.001)
                last_progress = time.monotonic()
                continue
            if time.monotonic() - last_progress > self.config.watchdog_seconds:
                raise QueueStall(
                    f"no stage progressed for {self.config.watchdog_seconds}s")
        return self._sink.rows, self.stats()

    def stats(self) -> OpStats:
        return OpStats([s.stats for s in self.stages])


def _select_fn(node: SelectNode, counter: ComparisonCounter):
    def fn(payload):
        result = select(payload, node.predicate, counter)
        return result
    return fn


def _aggregate_fn(node: AggregateNode):
    def fn(payload):
        if node.column is None:
            value: Any = count_star(payload)
        else:
            try:
                value = aggregate(payload, node.func, node.column)
            except ValueError:
                value = None  # empty window
        return Relation(node.schema, ({node.label: value},))
    return fn


def _direction_fn(node: DirectionNode):
    def fn(payload):
        results = direction(payload, node.epsilon, node.bb_column)
        rows = tuple({node.key_column: key, "direction": d} for key, d in results)
        return Relation(node.schema, rows)
    return fn


def instantiate(plan: QueryPlan, config: EngineConfig | None = None) -> Pipeline:
    """Build a pipeline: one stage per plan node, bounded queues in between."""
    return Pipeline(plan, config or EngineConfig())


def run(pipeline: Pipeline, sources: Sequence[Relation]) -> tuple[list[dict[str, Any]], OpStats]:
    return pipeline.run(sources)


def stats(pipeline: Pipeline) -> OpStats:
    """Consistent snapshot of all stage counters."""
    return pipeline.stats()


# --- result serialization ------------------------------------------------------


def jsonable(value: Any) -> Any:
    if isinstance(value, BoundingBox):
        return value.as_list()
    if isinstance(value, FeatureVector):
        return value.as_list()
    if isinstance(value, Direction8):
        return value.value
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, float) and not math.isfinite(value):
        return repr(value)
    if hasattr(value, "item") and callable(value.item):  # numpy scalars
        return value.item()
    return value


def row_to_json(row: Mapping[str, Any]) -> str:
    """Canonical one-line JSON for a result row (stable key order)."""
    return json.dumps(jsonable(dict(row)), sort_keys=True)


def write_results(rows: Sequence[Mapping[str, Any]], path: str | Path,
                  header: Mapping[str, Any] | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header is not None:
            fh.write(json.dumps({"_meta": jsonable(dict(header))}, sort_keys=True) + "\n")
        for row in rows:
            fh.write(row_to_json(row) + "\n")
