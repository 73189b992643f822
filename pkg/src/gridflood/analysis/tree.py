"""Diffusion trees built from island-rule traces."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Collection, Mapping

from gridflood.engine import CLOSURE, DIRECT, ISLAND, SEED, DiffusionTrace
from gridflood.grid import l1_distance

ROOT = -1


@dataclass(frozen=True)
class TreeNode:
    agent: int
    parent: int
    time: int
    direct: bool
    pos: tuple[int, ...]


@dataclass
class DiffusionTree:
    window: int
    nodes: dict[int, TreeNode] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.nodes

    def child(self, agent: int) -> list[int]:
        kids = [nd for nd in self.nodes.values() if nd.parent == agent]
        return [nd.agent for nd in sorted(kids, key=lambda nd: (nd.time, nd.agent))]

    def dchild(self, agent: int) -> list[int]:
        return [a for a in self.child(agent) if self.nodes[a].direct]

    def level(self, agent: int) -> int:
        if agent == ROOT:
            return 0
        if agent not in self.nodes:
            raise KeyError(f"agent {agent} is not in the tree")
        depth = 1
        while self.nodes[agent].parent != ROOT:
            agent = self.nodes[agent].parent
            depth += 1
        return depth

    def to_text(self) -> str:
        """Parenthesised form, children by (time, id); ``*`` marks a direct child."""
        if self.empty:
            return ""

        def render(agent: int) -> str:
            label = "r" if agent == ROOT else f"{agent}{'*' if self.nodes[agent].direct else ''}"
            kids = self.child(agent)
            return label + ("(" + ",".join(render(k) for k in kids) + ")" if kids else "")

        return render(ROOT)

    def to_json(self) -> str:
        rows = [{"node": nd.agent, "parent": nd.parent, "time": nd.time, "direct": nd.direct}
                for nd in sorted(self.nodes.values(), key=lambda nd: (nd.time, nd.agent))]
        return json.dumps({"window": self.window, "nodes": rows}, indent=1)


def build_diffusion_tree(trace: DiffusionTrace, window: int,
                         anchors: Collection[tuple[int, ...]] | None = None) -> DiffusionTree:
    """Tree of infections up to ``window``; empty if the source starts outside ``anchors``.

    A closure infectee hangs under whoever directly infected the seed of its
    island, so the island's members are all children of that infector.
    """
    if trace.config.rule != ISLAND:
        raise ValueError("diffusion trees are defined for island-rule traces")
    tree = DiffusionTree(window)
    source = next((e for e in trace.events if e.cause_kind == SEED), None)
    if source is None or (anchors is not None and tuple(source.pos) not in anchors):
        return tree
    infector = {e.infectee: e.cause_agent for e in trace.events if e.cause_kind == DIRECT}
    for e in trace.events:
        if e.t > window:
            continue
        if e.t == 0:
            parent = ROOT
        elif e.cause_kind == DIRECT:
            parent = e.cause_agent
        elif e.cause_kind == CLOSURE:
            parent = infector[e.cause_agent]
        else:
            raise ValueError(f"unexpected event {e}")
        tree.nodes[e.infectee] = TreeNode(e.infectee, parent, e.t, e.cause_kind == DIRECT, tuple(e.pos))
    return tree


def stopped_tree(tree: DiffusionTree, good: Callable[[int], bool] | Mapping[int, bool]) -> DiffusionTree:
    """Keep nodes infected while the good-behaviour indicator holds; a pruned node takes its subtree."""
    is_good = good if callable(good) else (lambda t: bool(good[t]))
    out = DiffusionTree(tree.window)
    for nd in sorted(tree.nodes.values(), key=lambda nd: (nd.time, nd.agent)):
        if is_good(nd.time) and (nd.parent == ROOT or nd.parent in out.nodes):
            out.nodes[nd.agent] = nd
    return out


def generation_distance(tree: DiffusionTree, agent: int) -> int:
    if agent not in tree.nodes:
        raise KeyError(f"agent {agent} is not in the tree")
    node = tree.nodes[agent]
    if node.parent == ROOT:
        return 0
    return l1_distance(node.pos, tree.nodes[node.parent].pos)


def tree_height(tree: DiffusionTree) -> int:
    """Number of levels, the root counting as level 0."""
    if tree.empty:
        return 0
    return 1 + max(tree.level(a) for a in tree.nodes)
