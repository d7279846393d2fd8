"""Dynamic squares: compressed quadtree, marks, chains, and reporting.

Centered squares are grouped by their minimal cell; the cell tree is stored
compressed (marked cells plus branching ancestors plus the root).  Every
stored node carries a pointer to the chain structure it lies on or bounds
from below, maintained in bulk through a link-cut overlay.  An insertion or
deletion classifies how the tree shape changes, refreshes marks in the
global square store first, applies the structural change (chain extend,
contract, split, or a double merge around a dissolving branching node), and
reports changes to the maintained independent set: one minimum-id square per
leaf plus every chain's active chosen squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from geomis.errors import MembershipError, PreconditionError
from geomis.geometry import CellId, QuadrantLabel, QuadRoot, QuantizedSquare, Square, quadrant_of
from geomis.interval_mis import Delta
from geomis.linkcut import LinkCutPointers, NaivePointers
from geomis.path_structure import PathStructure
from geomis.search_structure import MarkedSquareStore
from geomis.static_pipeline import Decomposition, decompose

ROOT = CellId(0, 0, 0)


@dataclass
class _Node:
    cell: CellId
    parent: Optional[CellId]
    children: dict[QuadrantLabel, CellId] = field(default_factory=dict)
    squares: dict[int, QuantizedSquare] = field(default_factory=dict)

    def kind(self) -> str:
        c = len(self.children)
        if self.cell == ROOT:
            if c == 0:
                return "leaf" if self.squares else "empty"
            return "internal"
        if c == 0:
            return "leaf"
        if c == 1:
            return "monochild"
        return "internal"


@dataclass
class LocateResult:
    status: str  # present | on-edge | attach
    node: Optional[CellId] = None
    above: Optional[CellId] = None
    below: Optional[CellId] = None
    fork: Optional[CellId] = None  # compressed branching point for diverging attaches


def _lca(a: CellId, b: CellId) -> CellId:
    m = min(a.depth, b.depth)
    ax, ay = a.ix >> (a.depth - m), a.iy >> (a.depth - m)
    bx, by = b.ix >> (b.depth - m), b.iy >> (b.depth - m)
    shift = max((ax ^ bx).bit_length(), (ay ^ by).bit_length())
    return CellId(m - shift, ax >> shift, ay >> shift)


class DynamicSquares:
    """Approximate maximum independent set of squares under updates."""

    def __init__(self, seed: int, k: int = 2, bits: int = 40, use_linkcut: bool = True):
        self.root = QuadRoot(seed, bits)
        self.k = k
        self.store = MarkedSquareStore()
        self.nodes: dict[CellId, _Node] = {ROOT: _Node(ROOT, None)}
        self.pointers = LinkCutPointers() if use_linkcut else NaivePointers()
        self.pointers.add(ROOT)
        self.paths: set[PathStructure] = set()
        self.squares: dict[int, QuantizedSquare] = {}
        self.originals: dict[int, Square] = {}
        self.noncentered: set[int] = set()

    # -- owner protocol for path structures ---------------------------------

    def square_by_id(self, sid: int) -> QuantizedSquare:
        return self.squares[sid]

    def node_square_list(self, cell: CellId) -> list[QuantizedSquare]:
        rec = self.nodes.get(cell)
        return list(rec.squares.values()) if rec is not None else []

    # -- helpers ---------------------------------------------------------------

    def _label_toward(self, cell: CellId, descendant: CellId) -> QuadrantLabel:
        return quadrant_of(descendant.ancestor_at(cell.depth + 1), cell)

    def _node_mark(self, cell: CellId) -> Optional[QuadrantLabel]:
        rec = self.nodes[cell]
        if rec.kind() == "monochild":
            (child_cell,) = rec.children.values()
            return self._label_toward(cell, child_cell)
        return None

    def _node_box(self, cell: CellId):
        """Box capturing exactly the squares whose minimal cell is `cell`."""
        span2 = 2 << (self.root.bits - cell.depth)
        x_lo, y_lo = cell.ix * span2, cell.iy * span2
        cx, cy = self.root.cell_center2(cell)
        lo = (x_lo, y_lo, cx, cy, -(1 << 63))
        hi = (cx, cy, x_lo + span2, y_lo + span2, (1 << 63) - 1)
        return lo, hi

    def _remark_node(self, cell: CellId, mark: Optional[QuadrantLabel]) -> None:
        if self.nodes[cell].squares:
            lo, hi = self._node_box(cell)
            self.store.mark_box(lo, hi, mark)

    def _path_of(self, cell: CellId) -> PathStructure:
        p = self.pointers.label_of(cell)
        if p is None:
            raise PreconditionError(f"node {cell} carries no chain pointer")
        return p

    def _new_path(self, top: CellId, bottom: CellId) -> PathStructure:
        p = PathStructure(self, top, bottom)
        self.paths.add(p)
        return p

    def _drop_path(self, p: PathStructure) -> None:
        self.paths.discard(p)

    def _leaf_rep(self, rec: _Node) -> Optional[int]:
        return min(rec.squares) if rec.squares else None

    # -- location ------------------------------------------------------------------

    def locate(self, target: CellId) -> LocateResult:
        cur = ROOT
        while True:
            if cur == target:
                return LocateResult("present", node=cur)
            rec = self.nodes[cur]
            direction = self._label_toward(cur, target)
            child = rec.children.get(direction)
            if child is None:
                return LocateResult("attach", node=cur)
            if child == target:
                return LocateResult("present", node=child)
            if target.is_ancestor_of(child):
                return LocateResult("on-edge", above=cur, below=child)
            if child.is_ancestor_of(target):
                cur = child
                continue
            fork = _lca(child, target)
            return LocateResult("attach", node=cur, below=child, fork=fork)

    # -- structural primitives ---------------------------------------------------------

    def _attach_leaf(self, cell: CellId, parent: CellId) -> None:
        direction = self._label_toward(parent, cell)
        self.nodes[cell] = _Node(cell, parent)
        self.nodes[parent].children[direction] = cell
        self.pointers.add(cell)
        self.pointers.link(cell, parent)

    def _splice_in(self, cell: CellId, above: CellId, below: CellId) -> None:
        self.nodes[cell] = _Node(cell, above)
        self.nodes[cell].children[self._label_toward(cell, below)] = below
        self.nodes[above].children[self._label_toward(above, below)] = cell
        self.nodes[below].parent = cell
        below_path = self.pointers.label_of(below)
        self.pointers.cut(below)
        self.pointers.add(cell, label=below_path)
        self.pointers.link(cell, above)
        self.pointers.link(below, cell)

    def _splice_out(self, cell: CellId) -> None:
        rec = self.nodes.pop(cell)
        (child_cell,) = rec.children.values()
        parent = rec.parent
        self.nodes[child_cell].parent = parent
        self.nodes[parent].children[self._label_toward(parent, child_cell)] = child_cell
        self.pointers.cut(child_cell)
        self.pointers.cut(cell)
        self.pointers.remove(cell)
        self.pointers.link(child_cell, parent)

    def _detach_leaf(self, cell: CellId) -> None:
        rec = self.nodes.pop(cell)
        parent = rec.parent
        del self.nodes[parent].children[self._label_toward(parent, cell)]
        self.pointers.cut(cell)
        self.pointers.remove(cell)

    # -- public updates --------------------------------------------------------------------

    def insert(self, s: Square) -> Delta:
        if s.id in self.squares or s.id in self.noncentered:
            raise MembershipError(f"square id {s.id} already present")
        q = self.root.quantize(s)
        self.originals[s.id] = s
        if not self.root.is_centered(q):
            self.noncentered.add(s.id)
            return Delta()
        self.squares[s.id] = q
        cell = self.root.node_of(q)
        delta = Delta()
        where = self.locate(cell)

        if where.status == "present":
            rec = self.nodes[cell]
            kind = rec.kind()
            mark = self._node_mark(cell)
            self.store.insert(q, mark)
            old_rep = self._leaf_rep(rec)
            rec.squares[s.id] = q
            if kind == "monochild":
                delta.extend(self._path_of(cell).update("insert", q))
            elif kind in ("leaf", "empty"):
                new_rep = self._leaf_rep(rec)
                if old_rep != new_rep:
                    if old_rep is not None:
                        delta.entries.append(("remove", old_rep))
                    delta.entries.append(("add", new_rep))

        elif where.status == "on-edge":
            above, below = where.above, where.below
            mark = self._label_toward(cell, below)
            self.store.insert(q, mark)
            self._splice_in(cell, above, below)
            self.nodes[cell].squares[s.id] = q
            delta.extend(self._path_of(cell).update("insert", q))

        elif where.fork is not None:
            # diverging attach: a fresh branching node splits the chain
            above, below, fork = where.node, where.below, where.fork
            self.store.insert(q, None)
            old_path = self.pointers.label_of(below)
            self._splice_in(fork, above, below)
            upper = old_path
            d_split, lower = upper.split(fork)
            delta.extend(d_split)
            self._new_registered(lower)
            self.pointers.assign(below, lower.bottom, lower)
            self.pointers.assign(fork, fork, upper)
            self._attach_leaf(cell, fork)
            self.nodes[cell].squares[s.id] = q
            fresh = self._new_path(fork, cell)
            self.pointers.assign(cell, cell, fresh)
            delta.entries.append(("add", s.id))

        else:
            at = where.node
            rec = self.nodes[at]
            kind = rec.kind()
            self.store.insert(q, None)
            if at == ROOT:
                was_leaf = kind == "leaf"
                old_rep = self._leaf_rep(rec)
                self._attach_leaf(cell, at)
                self.nodes[cell].squares[s.id] = q
                fresh = self._new_path(at, cell)
                self.pointers.assign(cell, cell, fresh)
                delta.entries.append(("add", s.id))
                if was_leaf and old_rep is not None:
                    delta.entries.append(("remove", old_rep))
            elif kind == "leaf":
                new_label = self._label_toward(at, cell)
                self._remark_node(at, new_label)
                path = self._path_of(at)
                old_rep = self._leaf_rep(rec)
                self._attach_leaf(cell, at)
                self.nodes[cell].squares[s.id] = q
                delta.extend(path.extend(cell))
                self.pointers.assign(cell, cell, path)
                if old_rep is not None:
                    delta.entries.append(("remove", old_rep))
                delta.entries.append(("add", s.id))
            elif kind == "monochild":
                self._remark_node(at, None)
                path = self._path_of(at)
                (old_child,) = self.nodes[at].children.values()
                d_split, lower = path.split(at)
                delta.extend(d_split)
                self.pointers.assign(old_child, lower.bottom, lower)
                self._new_registered(lower)
                self._attach_leaf(cell, at)
                self.nodes[cell].squares[s.id] = q
                fresh = self._new_path(at, cell)
                self.pointers.assign(cell, cell, fresh)
                delta.entries.append(("add", s.id))
            else:  # internal
                self._attach_leaf(cell, at)
                self.nodes[cell].squares[s.id] = q
                fresh = self._new_path(at, cell)
                self.pointers.assign(cell, cell, fresh)
                delta.entries.append(("add", s.id))

        return delta.net()

    def _new_registered(self, p: PathStructure) -> None:
        self.paths.add(p)

    def delete(self, s: Square) -> Delta:
        if s.id in self.noncentered:
            self.noncentered.discard(s.id)
            self.originals.pop(s.id, None)
            return Delta()
        if s.id not in self.squares:
            raise MembershipError(f"square id {s.id} not present")
        q = self.squares[s.id]
        cell = self.root.node_of(q)
        rec = self.nodes[cell]
        kind = rec.kind()
        delta = Delta()
        self.store.delete(q)

        if len(rec.squares) > 1:
            old_rep = self._leaf_rep(rec)
            del rec.squares[s.id]
            if kind == "monochild":
                delta.extend(self._path_of(cell).update("delete", q))
            elif kind in ("leaf", "empty"):
                new_rep = self._leaf_rep(rec)
                if old_rep == s.id:
                    delta.entries.append(("remove", s.id))
                    delta.entries.append(("add", new_rep))
        else:
            del rec.squares[s.id]
            if kind == "monochild":
                delta.extend(self._path_of(cell).update("delete", q))
                self._splice_out(cell)
            elif kind == "internal":
                pass  # branching node stays
            elif cell == ROOT:
                delta.entries.append(("remove", s.id))
            else:  # a leaf dies
                delta.entries.append(("remove", s.id))
                parent = rec.parent
                leaf_path = self._path_of(cell)
                prec = self.nodes[parent]
                if parent == ROOT:
                    self._detach_leaf(cell)
                    self._drop_path(leaf_path)
                    if prec.kind() == "leaf":
                        delta.entries.append(("add", self._leaf_rep(prec)))
                elif prec.kind() == "monochild":
                    # parent had this leaf as its only child: contract the chain
                    self._remark_node(parent, None)
                    self._detach_leaf(cell)
                    delta.extend(leaf_path.contract(parent))
                    rep = self._leaf_rep(prec)
                    if rep is not None:
                        delta.entries.append(("add", rep))
                elif len(prec.children) == 2:
                    # parent dissolves into the surviving chain
                    self._detach_leaf(cell)
                    self._drop_path(leaf_path)
                    (v_cell,) = prec.children.values()
                    self._remark_node(parent, self._label_toward(parent, v_cell))
                    upper = self._path_of(parent)
                    below_path = self._path_of(v_cell)
                    d_merge = upper.merge(below_path)
                    delta.extend(d_merge)
                    self._drop_path(below_path)
                    self.pointers.assign(parent, below_path.bottom, upper)
                    if not prec.squares:
                        self._splice_out(parent)
                else:
                    self._detach_leaf(cell)
                    self._drop_path(leaf_path)

        del self.squares[s.id]
        self.originals.pop(s.id, None)
        return delta.net()

    # -- path pointer surface (bulk reassignment) -------------------------------------------

    def repoint_paths(self, top: CellId, bottom: CellId, path: PathStructure) -> None:
        if top != bottom and not top.is_ancestor_of(bottom):
            raise PreconditionError("repoint range must descend one chain")
        self.pointers.assign(top, bottom, path)

    # -- reporting and verification -----------------------------------------------------------

    def reported(self) -> set[int]:
        out: set[int] = set()
        for rec in self.nodes.values():
            if rec.kind() == "leaf" and rec.squares:
                out.add(min(rec.squares))
        for p in self.paths:
            out |= p.reported()
        return out

    def snapshot(self) -> Decomposition:
        deco = Decomposition()
        for rec in self.nodes.values():
            kind = rec.kind()
            if kind == "leaf":
                deco.leaves.append(rec.cell)
            elif kind == "internal":
                deco.internal.append(rec.cell)
            if rec.squares:
                deco.squares_by_node[rec.cell] = list(rec.squares.values())
        from geomis.static_pipeline import PathDescriptor

        deco.paths = [PathDescriptor(p.top, p.bottom) for p in self.paths]
        return deco

    def check_structure(self) -> None:
        """Shape equals a from-scratch decomposition; marks are consistent;
        pointers resolve; reported squares are pairwise disjoint."""
        deco = decompose(list(self.squares.values()), self.root)
        snap = self.snapshot()
        assert snap.signature() == deco.signature(), (snap.signature(), deco.signature())
        for sid, q in self.squares.items():
            cell = self.root.node_of(q)
            assert self.store.effective_mark(q) == self._node_mark(cell), sid
        for rec in self.nodes.values():
            if rec.cell == ROOT:
                continue
            kind = rec.kind()
            p = self.pointers.label_of(rec.cell)
            if kind == "monochild":
                assert p in self.paths and p.top.is_ancestor_of(rec.cell) and (
                    rec.cell == p.bottom or rec.cell.is_ancestor_of(p.bottom)
                )
                assert rec.cell != p.bottom
            else:
                assert p in self.paths and p.bottom == rec.cell
        ids = sorted(self.reported())
        sqs = [self.squares[i] for i in ids]
        for i in range(len(sqs)):
            for j in range(i + 1, len(sqs)):
                a, b = sqs[i], sqs[j]
                inter = a.x1 <= b.x2 and b.x1 <= a.x2 and a.y1 <= b.y2 and b.y1 <= a.y2
                assert not inter, (ids[i], ids[j])

    def check_paths(self, deep: bool = False) -> None:
        for p in self.paths:
            p.check_invariants(deep=deep)
