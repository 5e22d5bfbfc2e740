"""Concurrent B-skiplist with top-down, single-pass inserts.

Every traversal runs top to bottom and left to right under hand-over-hand
reader-writer locking. An insert of a key promoted to height ``h`` takes
read locks above ``h`` and write locks from ``h`` down; it never restarts
and never revisits a level.

Lock footprint during a promoted insert: the node at level ``l + 1`` that
holds the new key's down link stays write-locked until the preallocated node
it points to has been spliced in at level ``l``. At most three node locks
are held at once, on at most two adjacent levels.
"""
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

from .locking import LockTracer, RWLock, TracedRWLock, debug_locks_enabled
from .node import MAX_KEY, MIN_KEY, Node, insert_at, split_at
from .promotion import HeightSampler, PromotionParams


class KeyDomainError(ValueError):
    """Key or value outside the storable 64-bit domain (or the reserved key)."""


def _check_key(key):
    if not MIN_KEY < key <= MAX_KEY:
        raise KeyDomainError(f"key must be in [1, 2**64 - 1], got {key!r}")


@dataclass
class Counters:
    """Diagnostic counters. Updated without synchronization, so values are
    approximate while threads are running."""

    max_height: int
    root_write_locks: int = 0
    point_ops: int = 0
    level_moves: list = None
    range_leaf_nodes: int = 0
    range_queries: int = 0
    max_node_moves: int = 0

    def __post_init__(self):
        if self.level_moves is None:
            self.level_moves = [0] * self.max_height

    @property
    def level_visits(self):
        # every find / insert visits each level exactly once
        return [self.point_ops] * self.max_height

    @property
    def steps_per_level(self):
        """Mean nodes touched per level by point operations (1 + next-link moves)."""
        if not self.point_ops:
            return 0.0
        return 1.0 + sum(self.level_moves) / (self.point_ops * self.max_height)

    def steps_per_level_by_level(self):
        if not self.point_ops:
            return [0.0] * self.max_height
        return [1.0 + m / self.point_ops for m in self.level_moves]

    @property
    def leaf_nodes_per_range(self):
        return self.range_leaf_nodes / self.range_queries if self.range_queries else 0.0

    def snapshot(self):
        return Counters(
            max_height=self.max_height,
            root_write_locks=self.root_write_locks,
            point_ops=self.point_ops,
            level_moves=list(self.level_moves),
            range_leaf_nodes=self.range_leaf_nodes,
            range_queries=self.range_queries,
            max_node_moves=self.max_node_moves,
        )

    def since(self, earlier):
        """Counter deltas accumulated after ``earlier`` was taken."""
        return Counters(
            max_height=self.max_height,
            root_write_locks=self.root_write_locks - earlier.root_write_locks,
            point_ops=self.point_ops - earlier.point_ops,
            level_moves=[a - b for a, b in zip(self.level_moves, earlier.level_moves)],
            range_leaf_nodes=self.range_leaf_nodes - earlier.range_leaf_nodes,
            range_queries=self.range_queries - earlier.range_queries,
            max_node_moves=self.max_node_moves,
        )


@dataclass
class AuditReport:
    violations: list = field(default_factory=list)
    nodes_per_level: list = field(default_factory=list)
    keys_per_level: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return f"audit ok: keys/level={self.keys_per_level} nodes/level={self.nodes_per_level}"
        head = "\n  ".join(self.violations[:20])
        more = f"\n  ... {len(self.violations) - 20} more" if len(self.violations) > 20 else ""
        return f"audit FAILED ({len(self.violations)} violations):\n  {head}{more}"


class BSkipList:
    """Concurrent ordered map from 64-bit keys to 64-bit values.

    Parameters
    ----------
    params : PromotionParams, optional
        Node capacity, scale factor and number of levels. Defaults to 128
        slots, ``c = 0.5`` (so ``p = 1/64``) and 5 levels.
    seed : int, optional
        Seed for the per-thread height streams.
    debug_locks : bool, optional
        Attach a :class:`LockTracer` to every node lock. Defaults to the
        ``BSKIPLIST_DEBUG_LOCKS`` environment variable.
    """

    def __init__(self, params=None, *, seed=None, debug_locks=None):
        if params is None:
            params = PromotionParams()
        self.params = params
        self.capacity = params.node_capacity
        self.max_height = params.max_height
        if debug_locks is None:
            debug_locks = debug_locks_enabled()
        self.tracer = LockTracer() if debug_locks else None
        self.stats = Counters(self.max_height)
        self._heights = HeightSampler(params, seed)

        below = None
        self.sentinels = []
        for level in range(self.max_height):
            if level == 0:
                node = Node(0, self.capacity, self._new_lock(0, MIN_KEY), [MIN_KEY], [0])
            else:
                node = Node(level, self.capacity, self._new_lock(level, MIN_KEY), [MIN_KEY], children=[below])
            self.sentinels.append(node)
            below = node
        self.head = self.sentinels[-1]

    def _new_lock(self, level, header):
        if self.tracer is None:
            return RWLock()
        return TracedRWLock(self.tracer, (level, header))

    def _new_node(self, level, keys, values=None, children=None):
        return Node(level, self.capacity, self._new_lock(level, keys[0]), keys, values, children)

    # ------------------------------------------------------------------
    # reads

    def find(self, key):
        """Value stored under ``key``, or ``None``."""
        _check_key(key)
        stats = self.stats
        stats.point_ops += 1
        level_moves = stats.level_moves
        level = self.max_height - 1
        node = self.head
        node.lock.acquire_read()
        while True:
            moves = 0
            nxt = node.next
            while nxt is not None and nxt.keys[0] <= key:
                nxt.lock.acquire_read()
                node.lock.release()
                node = nxt
                nxt = node.next
                moves += 1
            if moves:
                level_moves[level] += moves
            keys = node.keys
            rank = bisect_right(keys, key) - 1
            if level == 0:
                value = node.values[rank] if keys[rank] == key else None
                node.lock.release()
                return value
            child = node.children[rank]
            child.lock.acquire_read()
            node.lock.release()
            node = child
            level -= 1

    get = find

    def __contains__(self, key):
        return self.find(key) is not None

    def _leaf_for(self, key):
        """Read-locked leaf node whose span covers ``key``."""
        level = self.max_height - 1
        node = self.head
        node.lock.acquire_read()
        while True:
            nxt = node.next
            while nxt is not None and nxt.keys[0] <= key:
                nxt.lock.acquire_read()
                node.lock.release()
                node = nxt
                nxt = node.next
            if level == 0:
                return node
            child = node.children[bisect_right(node.keys, key) - 1]
            child.lock.acquire_read()
            node.lock.release()
            node = child
            level -= 1

    def range(self, key, length, f=None):
        """Apply ``f(key, value)`` to up to ``length`` pairs with keys ``>= key``,
        in ascending order. Returns the number of pairs visited.

        ``f`` runs while a leaf read lock is held, so it must not insert into
        this index.
        """
        if length < 0:
            raise ValueError(f"length must be >= 0, got {length}")
        if not MIN_KEY <= key <= MAX_KEY:
            raise KeyDomainError(f"key must be in [0, 2**64 - 1], got {key!r}")
        node = self._leaf_for(key)
        start = bisect_left(node.keys, max(key, MIN_KEY + 1))
        visited = 0
        leaves = 1
        while visited < length:
            keys = node.keys
            stop = min(len(keys), start + length - visited)
            if f is not None:
                values = node.values
                for i in range(start, stop):
                    f(keys[i], values[i])
            visited += stop - start
            if visited >= length:
                break
            nxt = node.next
            if nxt is None:
                break
            nxt.lock.acquire_read()
            node.lock.release()
            node = nxt
            start = 0
            leaves += 1
        node.lock.release()
        self.stats.range_leaf_nodes += leaves
        self.stats.range_queries += 1
        return visited

    def scan(self, key, length):
        """List of up to ``length`` ``(key, value)`` pairs with keys ``>= key``."""
        out = []
        self.range(key, length, lambda k, v: out.append((k, v)))
        return out

    # ------------------------------------------------------------------
    # insert

    def insert(self, key, value, height=None):
        """Insert or overwrite ``key``. Returns True if the key was new.

        ``height`` forces the promotion height (tests); by default it is
        drawn from the per-thread height stream before touching the index.
        """
        _check_key(key)
        if not 0 <= value <= MAX_KEY:
            raise KeyDomainError(f"value must be in [0, 2**64 - 1], got {value!r}")
        top = self.max_height - 1
        if height is None:
            h = self._heights.sample()
        else:
            h = height
            if not 0 <= h <= top:
                raise ValueError(f"height must be in [0, {top}], got {height}")

        # Nodes for levels h-1..0, each headed by key and chained by down
        # links, built before any interaction with the shared structure.
        tower = []
        below = None
        for lvl in range(h):
            if lvl == 0:
                below = self._new_node(0, [key], [value])
            else:
                below = self._new_node(lvl, [key], children=[below])
            tower.append(below)

        stats = self.stats
        stats.point_ops += 1
        level_moves = stats.level_moves
        capacity = self.capacity
        level = top
        node = self.head
        if h >= top:
            node.lock.acquire_write()
            stats.root_write_locks += 1
        else:
            node.lock.acquire_read()
        # write-locked node at level+1 whose slot parent_slot links to tower[level]
        parent = None
        parent_slot = 0

        while True:
            write = level <= h
            moves = 0
            nxt = node.next
            while nxt is not None and nxt.keys[0] <= key:
                if write:
                    nxt.lock.acquire_write()
                else:
                    nxt.lock.acquire_read()
                node.lock.release()
                node = nxt
                nxt = node.next
                moves += 1
            if moves:
                level_moves[level] += moves

            keys = node.keys
            rank = bisect_right(keys, key) - 1
            if keys[rank] == key:
                self._update(node, rank, level, parent, parent_slot, tower, value)
                return False

            if level == h:
                count = len(keys)
                if count >= capacity:
                    # overflow split: the new node gets no down link from above
                    half = count // 2
                    new = self._new_node(level, keys[half:], node.values[half:] if level == 0 else None,
                                         node.children[half:] if level else None)
                    new.lock.acquire_write()
                    del keys[half:]
                    if level == 0:
                        del node.values[half:]
                    else:
                        del node.children[half:]
                    new.next = node.next
                    node.next = new
                    if count - half > stats.max_node_moves:
                        stats.max_node_moves = count - half
                    if rank + 1 <= half:
                        new.lock.release()
                    else:
                        node.lock.release()
                        node = new
                        rank -= half
                        keys = node.keys
                moved = insert_at(node, rank, key, value, tower[level - 1] if level else None)
                if moved > stats.max_node_moves:
                    stats.max_node_moves = moved
                if level == 0:
                    node.lock.release()
                    return True
                parent = node
                parent_slot = rank + 1
                # node stays locked as the parent until tower[level-1] is spliced
                child = node.children[rank]
                child.lock.acquire_write()
                node = child

            elif level < h:
                # promotion split: tower[level] takes key and the tail after rank
                new = tower[level]
                new.lock.acquire_write()
                moved = len(keys) - rank - 1
                if moved > stats.max_node_moves:
                    stats.max_node_moves = moved
                split_at(node, rank + 1, new)
                new.next = node.next
                node.next = new
                parent.lock.release()
                if level == 0:
                    new.lock.release()
                    node.lock.release()
                    return True
                parent = new
                parent_slot = 0
                child = node.children[rank]
                child.lock.acquire_write()
                node.lock.release()
                node = child

            else:
                child = node.children[rank]
                if level - 1 <= h:
                    child.lock.acquire_write()
                else:
                    child.lock.acquire_read()
                node.lock.release()
                node = child

            level -= 1

    def _update(self, node, rank, level, parent, parent_slot, tower, value):
        """Key already present in ``node`` at ``rank``: finish as an overwrite.

        If the insert already committed the key at higher levels (``parent``
        set), the pending down link is pointed at a node headed by the key,
        splitting ``node`` at the key if it is not already a header. Unused
        tower nodes are dropped.
        """
        if parent is not None:
            if rank == 0:
                parent.children[parent_slot] = node
            else:
                new = tower[level]
                new.lock.acquire_write()
                split_at(node, rank + 1, new)
                node.keys.pop()
                if level == 0:
                    new.values[0] = node.values.pop()
                else:
                    new.children[0] = node.children.pop()
                new.next = node.next
                node.next = new
                parent.children[parent_slot] = new
                node.lock.release()
                node = new
                rank = 0
            parent.lock.release()

        # every down link lands on a node headed by the same key
        while level > 0:
            child = node.children[rank]
            if level == 1:
                child.lock.acquire_write()
            else:
                child.lock.acquire_read()
            node.lock.release()
            node = child
            rank = 0
            level -= 1
        node.values[rank] = value
        node.lock.release()

    # ------------------------------------------------------------------
    # quiescent inspection

    def level_nodes(self, level):
        """Nodes of one level, left to right. Quiescent use only."""
        node = self.sentinels[level]
        while node is not None:
            yield node
            node = node.next

    def items(self):
        """All ``(key, value)`` pairs in key order. Quiescent use only."""
        for node in self.level_nodes(0):
            start = 1 if node.keys[0] == MIN_KEY else 0
            yield from zip(node.keys[start:], node.values[start:])

    def keys(self):
        return [k for k, _ in self.items()]

    def __len__(self):
        return sum(len(n.keys) for n in self.level_nodes(0)) - 1

    def audit(self, expected=None):
        """Check structural invariants; returns an :class:`AuditReport`.

        ``expected`` may be a set of keys or a mapping of key -> value (or
        key -> set of acceptable values) that the leaf level must match.
        Must not run concurrently with inserts.
        """
        report = AuditReport()
        bad = report.violations
        capacity = self.capacity
        level_keys = []
        reachable = []
        for level in range(self.max_height):
            seen = set()
            nodes = set()
            prev_last = None
            count_nodes = 0
            for i, node in enumerate(self.level_nodes(level)):
                count_nodes += 1
                nodes.add(id(node))
                keys = node.keys
                where = f"level {level} node #{i} header={keys[0] if keys else None}"
                if node.level != level:
                    bad.append(f"{where}: tagged level {node.level}")
                if not keys:
                    bad.append(f"{where}: empty node")
                    continue
                if len(keys) > capacity:
                    bad.append(f"{where}: count {len(keys)} > capacity {capacity}")
                if i == 0:
                    if keys[0] != MIN_KEY:
                        bad.append(f"{where}: first node is not a sentinel")
                elif keys[0] == MIN_KEY:
                    bad.append(f"{where}: sentinel key away from the level head")
                if any(a >= b for a, b in zip(keys, keys[1:])):
                    bad.append(f"{where}: keys not strictly increasing")
                if prev_last is not None and keys[0] <= prev_last:
                    bad.append(f"{where}: ordering violation, header <= previous node's last key {prev_last}")
                prev_last = keys[-1]
                if level == 0:
                    if node.values is None or len(node.values) != len(keys):
                        bad.append(f"{where}: values not parallel to keys")
                elif node.children is None or len(node.children) != len(keys):
                    bad.append(f"{where}: children not parallel to keys")
                seen.update(keys)
            seen.discard(MIN_KEY)
            level_keys.append(seen)
            reachable.append(nodes)
            report.nodes_per_level.append(count_nodes)
            report.keys_per_level.append(len(seen))

        for level in range(1, self.max_height):
            missing = level_keys[level] - level_keys[level - 1]
            if missing:
                bad.append(f"inclusion: {len(missing)} keys at level {level} absent below, e.g. {sorted(missing)[:5]}")
            for node in self.level_nodes(level):
                if node.children is None:
                    continue
                for k, child in zip(node.keys, node.children):
                    if child is None:
                        bad.append(f"level {level} key {k}: missing down link")
                        continue
                    if child.level != level - 1:
                        bad.append(f"level {level} key {k}: down link to level {child.level}")
                    if not child.keys or child.keys[0] != k:
                        bad.append(f"level {level} key {k}: down link lands on header "
                                   f"{child.keys[0] if child.keys else None}")
                    if id(child) not in reachable[level - 1]:
                        bad.append(f"level {level} key {k}: down link to a node not linked at level {level - 1}")

        if expected is not None:
            leaf = dict(self.items())
            want = set(expected)
            got = set(leaf)
            if got != want:
                extra = sorted(got - want)[:5]
                lost = sorted(want - got)[:5]
                bad.append(f"leaf key set mismatch: {len(got - want)} unexpected (e.g. {extra}), "
                           f"{len(want - got)} missing (e.g. {lost})")
            if hasattr(expected, "items"):
                for k, allowed in expected.items():
                    if k not in leaf:
                        continue
                    ok = leaf[k] in allowed if isinstance(allowed, (set, frozenset)) else leaf[k] == allowed
                    if not ok:
                        bad.append(f"key {k}: value {leaf[k]} not among expected {allowed!r}")
                        if len(bad) > 100:
                            break
        return report
