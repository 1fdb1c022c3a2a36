"""Point-region quad-tree with capacity-limited leaves.

Nodes are never pruned or merged: once a quadrant has been split it stays
split for the lifetime of the tree.  A ``robot_id -> leaf`` index makes
removal O(1).
"""
from __future__ import annotations

import json
from typing import Hashable, Iterator, Optional

from usq.geometry import Rect, Vec2

DEFAULT_CAPACITY = 2
DEFAULT_DEPTH_CAP = 16


class QuadNode:
    __slots__ = ("bounds", "children", "occupants", "depth", "close_x", "close_y",
                 "mx", "my", "x0", "y0", "x1", "y1")

    def __init__(self, bounds: Rect, depth: int, close_x: bool = False, close_y: bool = False):
        self.bounds = bounds
        self.depth = depth
        self.children: Optional[tuple[QuadNode, QuadNode, QuadNode, QuadNode]] = None
        self.occupants: list = []
        # max edges that coincide with the closed world boundary
        self.close_x = close_x
        self.close_y = close_y
        self.x0, self.y0, self.x1, self.y1 = bounds.as_tuple()
        self.mx = (bounds.xmin + bounds.xmax) / 2.0
        self.my = (bounds.ymin + bounds.ymax) / 2.0

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    def child_index(self, x: float, y: float) -> int:
        # NW=0, NE=1, SW=2, SE=3
        return (0 if y >= self.my else 2) + (1 if x >= self.mx else 0)

    def contains(self, p) -> bool:
        return self.bounds.contains(p, self.close_x, self.close_y)

    def split(self) -> None:
        nw, ne, sw, se = self.bounds.quadrants()
        d = self.depth + 1
        self.children = (
            QuadNode(nw, d, False, self.close_y),
            QuadNode(ne, d, self.close_x, self.close_y),
            QuadNode(sw, d, False, False),
            QuadNode(se, d, self.close_x, False),
        )

    def __repr__(self):
        kind = "leaf" if self.is_leaf else "node"
        return f"<QuadNode {kind} depth={self.depth} bounds={self.bounds.as_tuple()} occ={self.occupants}>"


class QuadTree:
    """Quad-tree over a fixed world rectangle.

    Leaves hold at most ``m`` robots unless they sit at ``depth_cap``, where
    overflow is accepted (coincident robots would otherwise split forever).
    """

    def __init__(self, world: Rect, m: int = DEFAULT_CAPACITY, depth_cap: int = DEFAULT_DEPTH_CAP):
        if not isinstance(world, Rect):
            raise TypeError("world must be a Rect")
        if m < 1:
            raise ValueError(f"capacity m must be >= 1, got {m}")
        if depth_cap < 1:
            raise ValueError(f"depth_cap must be >= 1, got {depth_cap}")
        self.world = world
        self.m = m
        self.depth_cap = depth_cap
        self.root = QuadNode(world, 0, True, True)
        self.robot_index: dict[Hashable, QuadNode] = {}
        self.positions: dict[Hashable, Vec2] = {}
        self.node_count = 1

    def __len__(self):
        return len(self.robot_index)

    def __contains__(self, robot_id):
        return robot_id in self.robot_index

    def _check_pos(self, pos) -> Vec2:
        p = Vec2(float(pos[0]), float(pos[1]))
        if not self.root.contains(p):
            raise ValueError(f"position {tuple(p)} outside world {self.world.as_tuple()}")
        return p

    def insert(self, robot_id, pos) -> list:
        """Add a robot; returns ids of *other* robots moved by any split."""
        if robot_id in self.robot_index:
            raise KeyError(f"robot {robot_id!r} already in tree")
        p = self._check_pos(pos)
        self.positions[robot_id] = p
        return self._place(robot_id, p)

    def _place(self, robot_id, p: Vec2) -> list:
        node = self.root
        while node.children is not None:
            node = node.children[node.child_index(p.x, p.y)]
        node.occupants.append(robot_id)
        self.robot_index[robot_id] = node
        moved: list = []
        if len(node.occupants) > self.m and node.depth < self.depth_cap:
            self._split(node, moved)
            moved = [rid for rid in moved if rid != robot_id]
        return moved

    def _split(self, node: QuadNode, moved: list) -> None:
        node.split()
        self.node_count += 4
        occupants = node.occupants
        node.occupants = []
        for rid in occupants:
            p = self.positions[rid]
            child = node.children[node.child_index(p.x, p.y)]
            child.occupants.append(rid)
            self.robot_index[rid] = child
            moved.append(rid)
        for child in node.children:
            if len(child.occupants) > self.m and child.depth < self.depth_cap:
                self._split(child, moved)

    def remove(self, robot_id) -> None:
        try:
            leaf = self.robot_index.pop(robot_id)
        except KeyError:
            raise KeyError(f"robot {robot_id!r} not in tree") from None
        leaf.occupants.remove(robot_id)
        del self.positions[robot_id]

    def update_position(self, robot_id, new_pos) -> list:
        """Remove-and-add.  Returns ids of other robots moved by a split."""
        if robot_id not in self.robot_index:
            raise KeyError(f"robot {robot_id!r} not in tree")
        p = self._check_pos(new_pos)
        leaf = self.robot_index[robot_id]
        leaf.occupants.remove(robot_id)
        self.positions[robot_id] = p
        return self._place(robot_id, p)

    def leaf_of(self, robot_id) -> QuadNode:
        try:
            return self.robot_index[robot_id]
        except KeyError:
            raise KeyError(f"robot {robot_id!r} not in tree") from None

    def descend(self, pos) -> QuadNode:
        """Leaf whose bounds contain ``pos``, found from the root."""
        p = self._check_pos(pos)
        node = self.root
        while node.children is not None:
            node = node.children[node.child_index(p.x, p.y)]
        return node

    def query_region(self, region: Rect) -> list:
        """Robots whose stored center lies in ``region`` (half-open), sorted by id.

        Max edges of ``region`` that coincide with the world's closed max
        edges are treated as closed.
        """
        rx0, ry0, rx1, ry1 = region.xmin, region.ymin, region.xmax, region.ymax
        cx = rx1 == self.world.xmax
        cy = ry1 == self.world.ymax
        found = []
        positions = self.positions
        stack = [self.root]
        while stack:
            node = stack.pop()
            b = node.bounds
            if b.xmin > rx1 or rx0 > b.xmax or b.ymin > ry1 or ry0 > b.ymax:
                continue
            if node.children is not None:
                stack.extend(node.children)
                continue
            for rid in node.occupants:
                x, y = positions[rid]
                if rx0 <= x and ry0 <= y and (x < rx1 or (cx and x == rx1)) and (y < ry1 or (cy and y == ry1)):
                    found.append(rid)
        found.sort()
        return found

    def query_regions(self, regions) -> list:
        """Sorted ids inside any of ``regions``; one traversal for all of them."""
        return self.query_boxes([r.as_tuple() for r in regions])

    def query_boxes(self, boxes) -> list:
        """Like :meth:`query_regions` for ``(xmin, ymin, xmax, ymax)`` tuples."""
        return self.query_prepared(self.prepare_boxes(boxes))

    def prepare_boxes(self, boxes) -> tuple:
        """Precompute the pruning box and per-box tests for :meth:`query_prepared`."""
        if not boxes:
            return None, []
        wx, wy = self.world.xmax, self.world.ymax
        tests = [(x0, y0, x1, y1, x1 == wx, y1 == wy) for x0, y0, x1, y1 in boxes]
        xs0, ys0, xs1, ys1 = zip(*boxes)
        return (min(xs0), min(ys0), max(xs1), max(ys1)), tests

    def query_prepared(self, prepared) -> list:
        bbox, tests = prepared
        if bbox is None:
            return []
        bx0, by0, bx1, by1 = bbox
        found = []
        positions = self.positions
        node = self.root
        # skip straight to the smallest node that encloses the whole query
        while node.children is not None:
            mx, my = node.mx, node.my
            if bx1 < mx:
                i = 0 if by0 >= my else (2 if by1 < my else -1)
            elif bx0 >= mx:
                i = 1 if by0 >= my else (3 if by1 < my else -1)
            else:
                i = -1
            if i < 0:
                break
            node = node.children[i]
        stack = [node]
        pop = stack.pop
        push = stack.extend
        while stack:
            node = pop()
            if node.x0 > bx1 or bx0 > node.x1 or node.y0 > by1 or by0 > node.y1:
                continue
            if node.children is not None:
                push(node.children)
                continue
            for rid in node.occupants:
                x, y = positions[rid]
                for rx0, ry0, rx1, ry1, cx, cy in tests:
                    if (rx0 <= x and ry0 <= y and (x < rx1 or (cx and x == rx1))
                            and (y < ry1 or (cy and y == ry1))):
                        found.append(rid)
                        break
        found.sort()
        return found

    def nodes(self) -> Iterator[QuadNode]:
        """Every node, depth-first in NW, NE, SW, SE order."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if node.children is not None:
                stack.extend(reversed(node.children))

    def leaves(self) -> Iterator[QuadNode]:
        """Occupied leaves, depth-first in NW, NE, SW, SE order."""
        for node in self.nodes():
            if node.children is None and node.occupants:
                yield node

    def to_dict(self, node: Optional[QuadNode] = None) -> dict:
        node = node or self.root
        out = {
            "bounds": list(node.bounds.as_tuple()),
            "depth": node.depth,
        }
        if node.children is None:
            out["occupants"] = list(node.occupants)
        else:
            out["children"] = [self.to_dict(c) for c in node.children]
        return out

    def dump_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def dump_text(self) -> str:
        lines = []
        labels = ("NW", "NE", "SW", "SE")

        def walk(node: QuadNode, label: str):
            b = node.bounds
            head = f"{'  ' * node.depth}{label} [{b.xmin:g},{b.ymin:g} .. {b.xmax:g},{b.ymax:g}]"
            if node.children is None:
                lines.append(f"{head} {list(node.occupants)}")
            else:
                lines.append(head)
                for lab, child in zip(labels, node.children):
                    walk(child, lab)

        walk(self.root, "root")
        return "\n".join(lines)


def build_tree(world: Rect, items, m: int = DEFAULT_CAPACITY, depth_cap: int = DEFAULT_DEPTH_CAP) -> QuadTree:
    """Fresh tree from ``(robot_id, pos)`` pairs."""
    tree = QuadTree(world, m, depth_cap)
    for rid, pos in items:
        tree.insert(rid, pos)
    return tree
