"""Dataflow-graph view of a solution program.

A solution reads as a DAG: fact clauses are input nodes, operator goals in
the solve rule's body are interior nodes, and the solve argument is the
single output.  Edges follow shared variables.  Enumeration goals
(``findall``) become composite nodes that summarize their inner goals rather
than expanding them, since their internals are data-dependent.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .terms import (
    Atom,
    Compound,
    Program,
    Term,
    Var,
    indicator,
    iter_vars,
    render_term,
)

# Builtins whose arguments never produce a binding visible downstream.
_ALL_IN_BUILTINS = {
    ("=:=", 2), ("=\\=", 2), ("<", 2), (">", 2), ("=<", 2), (">=", 2), ("\\=", 2),
}
# Explicit dataflow direction where the default first-binder rule would lie.
_BUILTIN_MODES = {("is", 2): ("out", "in")}


class GraphError(Exception):
    def __init__(self, kind: str, message: str):
        self.kind = kind  # "no_solve_rule" | "cycle"
        super().__init__(message)


@dataclass(frozen=True)
class GraphNode:
    id: str
    kind: str  # "fact" | "op" | "findall" | "output"
    label: str


@dataclass(frozen=True)
class GraphEdge:
    src: str
    dst: str
    label: str


@dataclass
class ComputationGraph:
    nodes: list = field(default_factory=list)
    edges: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def node_ids(self, kind: str | None = None) -> list:
        return [n.id for n in self.nodes if kind is None or n.kind == kind]

    def in_degree(self, node_id: str) -> int:
        return sum(1 for e in self.edges if e.dst == node_id)


class _Builder:
    def __init__(self, registry):
        self.registry = registry
        self.graph = ComputationGraph()
        self.producer: dict[Var, str] = {}
        self.op_instances: dict[str, int] = {}
        self.findall_count = 0
        self._edge_keys: set = set()

    def add_node(self, node_id: str, kind: str, label: str) -> str:
        self.graph.nodes.append(GraphNode(node_id, kind, label))
        return node_id

    def add_edge(self, src: str, dst: str, label: str):
        key = (src, dst, label)
        if key not in self._edge_keys:
            self._edge_keys.add(key)
            self.graph.edges.append(GraphEdge(src, dst, label))

    def consume(self, term: Term, node_id: str):
        """Edges from every produced variable inside ``term`` into the node."""
        for var in dict.fromkeys(iter_vars(term)):
            src = self.producer.get(var)
            if src is not None:
                self.add_edge(src, node_id, var.name)

    def produce(self, term: Term, node_id: str):
        for var in dict.fromkeys(iter_vars(term)):
            previous = self.producer.get(var)
            if previous is not None:
                raise GraphError(
                    "cycle",
                    f"variable {var.name} is bound by two producers "
                    f"({previous} and {node_id}); solutions are single-assignment dataflow",
                )
            self.producer[var] = node_id


def extract_graph(program: Program, registry=None) -> ComputationGraph:
    """Build the dataflow graph of a program's solve rule.

    Raises GraphError("no_solve_rule") when there is no ``solve/1`` rule and
    GraphError("cycle") when a variable has more than one producer.
    """
    if registry is None:
        from .operators import default_registry

        registry = default_registry()

    solve_rule = None
    for clause in program.clauses:
        if not clause.is_fact and indicator(clause.head) == ("solve", 1):
            solve_rule = clause
            break
    if solve_rule is None:
        raise GraphError("no_solve_rule", "program has no solve/1 rule")

    builder = _Builder(registry)
    fact_by_indicator: dict[tuple, str] = {}
    for i, clause in enumerate(program.clauses):
        if not clause.is_fact:
            continue
        node_id = builder.add_node(f"fact{i}", "fact", render_term(clause.head))
        key = indicator(clause.head)
        if key in fact_by_indicator:
            builder.graph.warnings.append(
                f"multiple facts for {key[0]}/{key[1]}; edges use the first one"
            )
        else:
            fact_by_indicator[key] = node_id

    for position, goal in enumerate(solve_rule.body):
        _add_goal(builder, fact_by_indicator, goal, position)

    out_id = builder.add_node("out0", "output", render_term(solve_rule.head.args[0]))
    out_term = solve_rule.head.args[0]
    if isinstance(out_term, Var) and out_term not in builder.producer:
        builder.graph.warnings.append(f"output variable {out_term.name} has no producer")
    builder.consume(out_term, out_id)

    _warn_disconnected(builder.graph, out_id)
    return builder.graph


def _add_goal(builder: _Builder, fact_by_indicator: dict, goal: Term, position: int):
    if isinstance(goal, (Var,)) or not isinstance(goal, (Atom, Compound)):
        builder.graph.warnings.append(f"goal #{position} is not a callable term")
        return
    key = indicator(goal)
    args = goal.args if isinstance(goal, Compound) else ()

    if key in fact_by_indicator:
        # A fact lookup wires the fact node straight to the goal's variables.
        for term in args:
            builder.produce(term, fact_by_indicator[key])
        return

    if key == ("findall", 3):
        template, inner, out = args
        node_id = builder.add_node(
            f"findall{builder.findall_count}", "findall", _findall_label(builder, inner)
        )
        builder.findall_count += 1
        builder.consume(template, node_id)
        builder.consume(inner, node_id)
        builder.produce(out, node_id)
        return

    op = builder.registry.lookup(*key)
    if op is not None:
        instance = builder.op_instances.get(key[0], 0)
        builder.op_instances[key[0]] = instance + 1
        node_id = builder.add_node(f"op{len(builder.graph.nodes)}", "op", f"{key[0]}#{instance}")
        for term, mode in zip(args, op.modes):
            if mode == "in":
                _consume_with_warning(builder, term, node_id, key)
            else:
                if isinstance(term, Var) or _has_vars(term):
                    builder.produce(term, node_id)
        return

    modes = _BUILTIN_MODES.get(key)
    if modes is not None:
        node_id = builder.add_node(f"op{len(builder.graph.nodes)}", "op", key[0])
        for term, mode in zip(args, modes):
            if mode == "in":
                builder.consume(term, node_id)
            else:
                builder.produce(term, node_id)
        return

    node_id = builder.add_node(f"op{len(builder.graph.nodes)}", "op", key[0])
    if key in _ALL_IN_BUILTINS:
        for term in args:
            builder.consume(term, node_id)
        return
    # First-binder rule: variables seen before are inputs, new ones are
    # outputs of this goal.
    for term in args:
        for var in dict.fromkeys(iter_vars(term)):
            if var in builder.producer:
                builder.add_edge(builder.producer[var], node_id, var.name)
            else:
                builder.producer[var] = node_id


def _consume_with_warning(builder: _Builder, term: Term, node_id: str, key: tuple):
    for var in dict.fromkeys(iter_vars(term)):
        src = builder.producer.get(var)
        if src is None:
            builder.graph.warnings.append(
                f"{key[0]}/{key[1]} input {var.name} has no producer"
            )
        else:
            builder.add_edge(src, node_id, var.name)


def _has_vars(term: Term) -> bool:
    return next(iter_vars(term), None) is not None


def _findall_label(builder: _Builder, inner: Term) -> str:
    goals = _flatten_conjunction(inner)
    names = []
    for g in goals:
        try:
            names.append(indicator(g)[0])
        except TypeError:
            names.append("?")
    return f"findall[{','.join(names)}]"


def _flatten_conjunction(t: Term) -> list:
    if isinstance(t, Compound) and t.functor == "," and len(t.args) == 2:
        return _flatten_conjunction(t.args[0]) + _flatten_conjunction(t.args[1])
    return [t]


def _warn_disconnected(graph: ComputationGraph, out_id: str):
    reachable = {out_id}
    changed = True
    while changed:
        changed = False
        for edge in graph.edges:
            if edge.dst in reachable and edge.src not in reachable:
                reachable.add(edge.src)
                changed = True
    for node in graph.nodes:
        if node.kind == "op" and node.id not in reachable:
            graph.warnings.append(f"operator node {node.label} does not feed the output (dead code)")


_SHAPES = {"fact": "box", "op": "ellipse", "findall": "hexagon", "output": "doublecircle"}


def export_dot(graph: ComputationGraph) -> str:
    """Render the graph in DOT form; node order follows construction order,
    so the output is deterministic."""
    lines = ["digraph computation {", "  rankdir=LR;"]
    for node in graph.nodes:
        label = node.label.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  "{node.id}" [shape={_SHAPES[node.kind]}, label="{label}"];')
    for edge in graph.edges:
        label = edge.label.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(f'  "{edge.src}" -> "{edge.dst}" [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
