"""Labeled unordered rooted trees.

Node ids are dense integers ``0..n-1``.  Every factory in this module numbers
nodes in pre-order, so ``t.pre[x] == x`` for trees built by the parsers, but
the traversal arrays are computed independently and the ancestor test only
relies on them.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


class TreeSyntaxError(ValueError):
    """Raised by the parsers; ``offset`` is a byte offset (bracket) or token index."""

    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        self.offset = offset
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True, eq=False)
class Tree:
    labels: tuple[str, ...]
    parent: tuple[int, ...]  # -1 marks the root
    root: int = field(init=False)
    children: tuple[tuple[int, ...], ...] = field(init=False, repr=False)
    pre: tuple[int, ...] = field(init=False, repr=False)
    post: tuple[int, ...] = field(init=False, repr=False)
    size: tuple[int, ...] = field(init=False, repr=False)
    depth: tuple[int, ...] = field(init=False, repr=False)
    _codes: tuple[str, ...] | None = field(init=False, repr=False, default=None)

    def __post_init__(self) -> None:
        n = len(self.labels)
        if n == 0:
            raise ValueError("a tree needs at least one node")
        if len(self.parent) != n:
            raise ValueError("labels and parent arrays differ in length")
        for lab in self.labels:
            if not isinstance(lab, str) or not lab:
                raise ValueError(f"labels must be non-empty strings, got {lab!r}")
        roots = [v for v, p in enumerate(self.parent) if p == -1]
        if len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        kids: list[list[int]] = [[] for _ in range(n)]
        for v, p in enumerate(self.parent):
            if p != -1:
                if not 0 <= p < n or p == v:
                    raise ValueError(f"node {v} has invalid parent {p}")
                kids[p].append(v)

        pre = [-1] * n
        post = [-1] * n
        size = [1] * n
        depth = [0] * n
        counter_pre = counter_post = 0
        stack = [(roots[0], 0)]
        while stack:
            v, i = stack.pop()
            if i == 0:
                pre[v] = counter_pre
                counter_pre += 1
            if i < len(kids[v]):
                stack.append((v, i + 1))
                c = kids[v][i]
                depth[c] = depth[v] + 1
                stack.append((c, 0))
            else:
                post[v] = counter_post
                counter_post += 1
                if self.parent[v] != -1:
                    size[self.parent[v]] += size[v]
        if counter_pre != n:
            raise ValueError("parent pointers contain a cycle or unreachable nodes")

        set_ = object.__setattr__
        set_(self, "root", roots[0])
        set_(self, "children", tuple(tuple(k) for k in kids))
        set_(self, "pre", tuple(pre))
        set_(self, "post", tuple(post))
        set_(self, "size", tuple(size))
        set_(self, "depth", tuple(depth))

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return f"Tree({render_bracket(self)!r})"

    @property
    def nodes(self) -> range:
        return range(len(self.labels))

    def is_leaf(self, x: int) -> bool:
        return not self.children[x]

    def preorder(self) -> list[int]:
        order = [0] * len(self)
        for v, i in enumerate(self.pre):
            order[i] = v
        return order

    def postorder(self) -> list[int]:
        order = [0] * len(self)
        for v, i in enumerate(self.post):
            order[i] = v
        return order

    def leaves(self) -> list[int]:
        """Leaves in pre-order."""
        return [v for v in self.preorder() if not self.children[v]]

    def subtree(self, x: int) -> list[int]:
        """Nodes of T(x) in pre-order, x first."""
        out = []
        stack = [x]
        while stack:
            v = stack.pop()
            out.append(v)
            stack.extend(reversed(self.children[v]))
        return out

    def leaves_under(self, x: int) -> list[int]:
        return [v for v in self.subtree(x) if not self.children[v]]

    def ancestors(self, x: int) -> Iterator[int]:
        p = self.parent[x]
        while p != -1:
            yield p
            p = self.parent[p]

    def shape_codes(self) -> tuple[str, ...]:
        """Canonical code of every subtree, ignoring labels."""
        if self._codes is None:
            out = [""] * len(self)
            for v in self.postorder():
                out[v] = "(" + "".join(sorted(out[c] for c in self.children[v])) + ")"
            object.__setattr__(self, "_codes", tuple(out))
        return self._codes


def from_nested(spec) -> Tree:
    """Build a tree from ``(label, [children...])`` tuples or a bare label."""
    labels: list[str] = []
    parent: list[int] = []
    stack = [(spec, -1)]
    while stack:
        node, par = stack.pop()
        if isinstance(node, str):
            lab, kids = node, ()
        else:
            lab, kids = node
        labels.append(lab)
        parent.append(par)
        me = len(labels) - 1
        stack.extend((k, me) for k in reversed(list(kids)))
    return Tree(tuple(labels), tuple(parent))


def from_parents(labels: Sequence[str], parent: Sequence[int]) -> Tree:
    """Build a tree from parent pointers and renumber its nodes in pre-order."""
    raw = Tree(tuple(labels), tuple(parent))
    order = raw.preorder()
    new_id = {v: i for i, v in enumerate(order)}
    return Tree(
        tuple(raw.labels[v] for v in order),
        tuple(-1 if raw.parent[v] == -1 else new_id[raw.parent[v]] for v in order),
    )


def label_alphabet(k: int) -> list[str]:
    if k < 1:
        raise ValueError("need at least one label")
    if k <= 26:
        return [chr(ord("a") + i) for i in range(k)]
    return [f"l{i}" for i in range(k)]


def random_tree(rng: random.Random, n: int, max_degree: int = 4, labels: int = 3) -> Tree:
    """Random attachment: node i hangs under a uniform earlier node with spare degree."""
    if n < 1:
        raise ValueError("a tree needs at least one node")
    if max_degree < 1 and n > 1:
        raise ValueError("max degree 0 only allows a single node")
    alphabet = label_alphabet(labels)
    parent = [-1]
    degree = [0]
    open_nodes = [0]
    for i in range(1, n):
        j = rng.randrange(len(open_nodes))
        p = open_nodes[j]
        parent.append(p)
        degree.append(0)
        degree[p] += 1
        if degree[p] == max_degree:
            open_nodes[j] = open_nodes[-1]
            open_nodes.pop()
        open_nodes.append(i)
    return from_parents([rng.choice(alphabet) for _ in range(n)], parent)


# --------------------------------------------------------------------------
# bracket format

_BARE = re.compile(r"[A-Za-z0-9_.\-]+")
_BARE_BYTES = re.compile(rb"[A-Za-z0-9_.\-]+")


def parse_bracket(text: str) -> Tree:
    """Parse ``label [ '(' tree (',' tree)* ')' ]``.

    Labels are bare ``[A-Za-z0-9_.-]+`` or single-quoted with ``''`` as the
    escaped quote.  Whitespace between tokens is ignored.  Offsets in errors
    are byte offsets into the UTF-8 encoding of ``text``.
    """
    data = text.encode("utf-8")
    n = len(data)
    pos = 0

    def skip_ws() -> None:
        nonlocal pos
        while pos < n and data[pos] in b" \t\r\n":
            pos += 1

    def read_label() -> str:
        nonlocal pos
        if pos >= n:
            raise TreeSyntaxError("expected a label, found end of input", pos)
        if data[pos] == 0x27:  # '
            start = pos
            pos += 1
            buf = bytearray()
            while True:
                if pos >= n:
                    raise TreeSyntaxError("unterminated quoted label", start)
                if data[pos] == 0x27:
                    if pos + 1 < n and data[pos + 1] == 0x27:
                        buf.append(0x27)
                        pos += 2
                        continue
                    pos += 1
                    break
                buf.append(data[pos])
                pos += 1
            if not buf:
                raise TreeSyntaxError("empty quoted label", start)
            return buf.decode("utf-8")
        m = _BARE_BYTES.match(data, pos)
        if not m:
            raise TreeSyntaxError(f"unexpected character {chr(data[pos])!r}", pos)
        pos = m.end()
        return m.group(0).decode("ascii")

    skip_ws()
    if pos >= n:
        raise TreeSyntaxError("empty input", 0)

    labels: list[str] = []
    parent: list[int] = []
    # open nodes whose child lists are being read
    open_stack: list[int] = []
    expect_tree = True
    while True:
        skip_ws()
        if expect_tree:
            labels.append(read_label())
            parent.append(open_stack[-1] if open_stack else -1)
            me = len(labels) - 1
            skip_ws()
            if pos < n and data[pos] == 0x28:  # (
                pos += 1
                open_stack.append(me)
                continue
            expect_tree = False
        if not open_stack:
            break
        if pos >= n:
            raise TreeSyntaxError("unbalanced parentheses: missing ')'", pos)
        ch = data[pos]
        if ch == 0x2C:  # ,
            pos += 1
            expect_tree = True
        elif ch == 0x29:  # )
            pos += 1
            open_stack.pop()
        else:
            raise TreeSyntaxError(f"expected ',' or ')', found {chr(ch)!r}", pos)
    skip_ws()
    if pos != n:
        raise TreeSyntaxError("trailing characters after tree", pos)
    return Tree(tuple(labels), tuple(parent))


def _quote(label: str) -> str:
    if _BARE.fullmatch(label):
        return label
    return "'" + label.replace("'", "''") + "'"


def render_bracket(t: Tree) -> str:
    """Render ``t`` with children in canonical order.

    Children are sorted by shape code, then label, then their own rendering,
    so label-isomorphic trees render to the same string.
    """
    codes = t.shape_codes()
    out = [""] * len(t)
    for v in t.postorder():
        lab = _quote(t.labels[v])
        kids = t.children[v]
        if not kids:
            out[v] = lab
            continue
        ordered = sorted(kids, key=lambda c: (codes[c], t.labels[c], out[c]))
        out[v] = lab + "(" + ",".join(out[c] for c in ordered) + ")"
    return out[t.root]


# --------------------------------------------------------------------------
# CSLOGS depth-first integer encoding


def _scan_record(tokens: Sequence[int], start: int) -> tuple[int, int | None]:
    """Walk ``tokens[start:]`` as a record rooted at ``tokens[start]``.

    Returns ``(final_depth, k)`` where ``k`` is the index of the first pop
    that would close the root, or None.
    """
    depth = 1
    for k in range(start + 1, len(tokens)):
        depth += 1 if tokens[k] >= 0 else -1
        if depth == 0:
            return depth, k
    return depth, None


def parse_cslogs_record(tokens: Sequence[int], line: int | None = None) -> Tree:
    """Decode one record.

    A nonnegative integer opens a child of the current node labelled with
    that integer and ``-1`` returns to the parent.  The record is the longest
    suffix of ``tokens`` that never closes its root and ends back at the root.
    Whatever precedes it is a header (tree id, counts) and is ignored; a
    header may only contain nonnegative integers.
    """
    # a header holds nonnegative integers only, so candidate starts stop at the first pop
    header_end = next((i for i, tok in enumerate(tokens) if tok < 0), len(tokens))
    for start in range(header_end):
        depth, closed_at = _scan_record(tokens, start)
        if closed_at is None and depth == 1:
            break
    else:
        if not tokens or tokens[0] < 0:
            raise TreeSyntaxError("record has no node token", 0, line)
        depth, closed_at = _scan_record(tokens, 0)
        if closed_at is not None and (closed_at == len(tokens) - 1 or tokens[closed_at + 1] < 0):
            raise TreeSyntaxError("pop below root", closed_at, line)
        if closed_at is not None:
            raise TreeSyntaxError("trailing unconsumed tokens after the root closes", closed_at + 1, line)
        raise TreeSyntaxError(f"record ends with {depth - 1} unclosed nodes", len(tokens), line)

    labels = [str(tokens[start])]
    parent = [-1]
    cur = 0
    for tok in tokens[start + 1:]:
        if tok >= 0:
            labels.append(str(tok))
            parent.append(cur)
            cur = len(labels) - 1
        else:
            cur = parent[cur]
    return Tree(tuple(labels), tuple(parent))


def _tokenize(text: str, line: int | None) -> list[int]:
    out = []
    for k, raw in enumerate(text.split()):
        try:
            out.append(int(raw))
        except ValueError:
            raise TreeSyntaxError(f"non-integer token {raw!r}", k, line) from None
        if out[-1] < -1:
            raise TreeSyntaxError(f"negative token {raw!r} (only -1 is a pop)", k, line)
    return out


def iter_cslogs(lines: Iterable[str]) -> Iterator[tuple[int, Tree | TreeSyntaxError]]:
    """Yield ``(line_number, tree_or_error)`` for every non-blank line."""
    for no, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            yield no, parse_cslogs_record(_tokenize(text, no), no)
        except TreeSyntaxError as exc:
            yield no, exc


def parse_cslogs(lines: Iterable[str]) -> list[Tree]:
    """Parse every record, raising on the first malformed one."""
    out = []
    for _, item in iter_cslogs(lines):
        if isinstance(item, TreeSyntaxError):
            raise item
        out.append(item)
    return out


# --------------------------------------------------------------------------
# order queries


def _check(t: Tree, *ids: int) -> None:
    for v in ids:
        if not 0 <= v < len(t):
            raise IndexError(f"node id {v} out of range for a tree of {len(t)} nodes")


def is_ancestor(t: Tree, x: int, y: int) -> bool:
    """Strict ancestry: x < y in the tree order."""
    _check(t, x, y)
    return t.pre[x] < t.pre[y] and t.post[x] > t.post[y]


def path_to_leaf(t: Tree, x: int, leaf: int) -> list[int]:
    _check(t, x, leaf)
    if t.children[leaf] or not (x == leaf or is_ancestor(t, x, leaf)):
        raise ValueError(f"node {leaf} is not a leaf under node {x}")
    path = [leaf]
    while path[-1] != x:
        path.append(t.parent[path[-1]])
    path.reverse()
    return path


def is_antichain(t: Tree, nodes: Iterable[int]) -> bool:
    s = sorted(set(nodes), key=lambda v: t.pre[v])
    _check(t, *s)
    # in pre-order, any comparable pair includes an adjacent comparable pair
    return all(not is_ancestor(t, a, b) for a, b in zip(s, s[1:]))


def structurally_isomorphic(t1: Tree, x: int, t2: Tree, y: int) -> bool:
    _check(t1, x)
    _check(t2, y)
    return t1.shape_codes()[x] == t2.shape_codes()[y]


def shape_classes(*trees: Tree) -> list[list[int]]:
    """Intern subtree shape codes jointly, so equal ints mean isomorphic shapes."""
    table: dict[str, int] = {}
    return [[table.setdefault(c, len(table)) for c in t.shape_codes()] for t in trees]
