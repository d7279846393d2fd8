"""Dynamic-tree overlay for bulk path-pointer maintenance.

The compressed quadtree is unbalanced, but whole runs of nodes need their
path pointer reassigned when chains split or merge.  A link-cut tree with a
lazy assignment tag does this in O(log n) amortized per call: assigning a
label to the tree path between an ancestor and a descendant touches one
preferred path and tags one splay subtree.  The tree is rooted and never
re-rooted, so no reversal flags are needed.

A naive twin with explicit parent pointers implements the same interface by
walking; it backs differential tests and can be swapped in via the
`use_linkcut` flag of the quadtree structure.
"""

from __future__ import annotations

from typing import Hashable, Optional

from geomis.errors import PreconditionError


class _LctNode:
    __slots__ = ("key", "parent", "left", "right", "label", "tag")

    def __init__(self, key):
        self.key = key
        self.parent: Optional[_LctNode] = None
        self.left: Optional[_LctNode] = None
        self.right: Optional[_LctNode] = None
        self.label = None
        self.tag = None


def _set_tag(n: _LctNode, label) -> None:
    n.label = label
    n.tag = label


class LinkCutPointers:
    """Rooted link-cut forest mapping each node to a path label."""

    def __init__(self):
        self.nodes: dict[Hashable, _LctNode] = {}
        self.visits = 0

    def __contains__(self, key) -> bool:
        return key in self.nodes

    def add(self, key, label=None) -> None:
        if key in self.nodes:
            raise PreconditionError(f"node {key} already present")
        n = _LctNode(key)
        n.label = label
        self.nodes[key] = n

    def remove(self, key) -> None:
        n = self.nodes[key]
        self._access(n)
        if n.left is not None or n.parent is not None:
            raise PreconditionError(f"node {key} still attached")
        del self.nodes[key]

    # -- splay plumbing ----------------------------------------------------

    def _push(self, n: _LctNode) -> None:
        if n.tag is not None:
            for c in (n.left, n.right):
                if c is not None:
                    _set_tag(c, n.tag)
            n.tag = None

    def _is_splay_root(self, n: _LctNode) -> bool:
        p = n.parent
        return p is None or (p.left is not n and p.right is not n)

    def _rotate(self, n: _LctNode) -> None:
        p = n.parent
        g = p.parent
        self._push(p)
        self._push(n)
        if p.left is n:
            p.left = n.right
            if n.right is not None:
                n.right.parent = p
            n.right = p
        else:
            p.right = n.left
            if n.left is not None:
                n.left.parent = p
            n.left = p
        p.parent = n
        n.parent = g
        if g is not None:
            if g.left is p:
                g.left = n
            elif g.right is p:
                g.right = n

    def _splay(self, n: _LctNode) -> None:
        self._push(n)
        while not self._is_splay_root(n):
            self.visits += 1
            p = n.parent
            if self._is_splay_root(p):
                self._rotate(n)
            else:
                g = p.parent
                self._push(g)
                self._push(p)
                self._push(n)
                if (g.left is p) == (p.left is n):
                    self._rotate(p)
                    self._rotate(n)
                else:
                    self._rotate(n)
                    self._rotate(n)
        self._push(n)

    def _access(self, n: _LctNode) -> None:
        self._splay(n)
        if n.right is not None:
            n.right = None  # deeper part keeps n as its path parent
        prev = n
        top = n.parent
        while top is not None:
            self._splay(top)
            top.right = prev
            prev.parent = top
            self._splay(n)
            top = n.parent
        # n may still have a splay parent chain handled by splays above

    # -- public ops ----------------------------------------------------------

    def link(self, child_key, parent_key) -> None:
        c = self.nodes[child_key]
        p = self.nodes[parent_key]
        self._access(c)
        if c.left is not None or c.parent is not None:
            raise PreconditionError(f"node {child_key} already has a parent")
        self._access(p)
        c.parent = p  # as path parent

    def cut(self, child_key) -> None:
        c = self.nodes[child_key]
        self._access(c)
        if c.left is None:
            raise PreconditionError(f"node {child_key} has no parent")
        c.left.parent = None
        c.left = None

    def assign(self, top_key, bottom_key, label) -> None:
        """Label every node on the tree path from top down to bottom."""
        b = self.nodes[bottom_key]
        t = self.nodes[top_key]
        self._access(b)
        if t is not b:
            self._splay(t)
            if self._splay_root_of(b) is not t:
                raise PreconditionError(f"{top_key} is not an ancestor of {bottom_key}")
        t.label = label
        if t.right is not None:
            _set_tag(t.right, label)

    @staticmethod
    def _splay_root_of(n: _LctNode) -> _LctNode:
        while n.parent is not None and (n.parent.left is n or n.parent.right is n):
            n = n.parent
        return n

    def label_of(self, key):
        n = self.nodes[key]
        self._access(n)
        self._splay(n)
        return n.label


class NaivePointers:
    """Parent-pointer twin of LinkCutPointers with linear assignment."""

    def __init__(self):
        self.parent: dict[Hashable, Optional[Hashable]] = {}
        self.label: dict[Hashable, object] = {}
        self.visits = 0

    def __contains__(self, key) -> bool:
        return key in self.parent

    def add(self, key, label=None) -> None:
        if key in self.parent:
            raise PreconditionError(f"node {key} already present")
        self.parent[key] = None
        self.label[key] = label

    def remove(self, key) -> None:
        if self.parent[key] is not None:
            raise PreconditionError(f"node {key} still attached")
        del self.parent[key]
        del self.label[key]

    def link(self, child_key, parent_key) -> None:
        if self.parent[child_key] is not None:
            raise PreconditionError(f"node {child_key} already has a parent")
        self.parent[child_key] = parent_key

    def cut(self, child_key) -> None:
        if self.parent[child_key] is None:
            raise PreconditionError(f"node {child_key} has no parent")
        self.parent[child_key] = None

    def assign(self, top_key, bottom_key, label) -> None:
        walker = bottom_key
        while True:
            self.visits += 1
            self.label[walker] = label
            if walker == top_key:
                return
            walker = self.parent[walker]
            if walker is None:
                raise PreconditionError(f"{top_key} is not an ancestor of {bottom_key}")

    def label_of(self, key):
        return self.label[key]
