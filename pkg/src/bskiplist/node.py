"""Fixed-capacity B-skiplist nodes and the intra-node operations.

Nothing in here takes a lock. Callers hold ``node.lock`` in read mode for
:func:`find_rank` / :func:`next_header` and in write mode for every mutation.
"""
from bisect import bisect_right

#: Reserved for sentinel headers; reads as minus infinity.
MIN_KEY = 0
#: Largest storable key / value (64-bit unsigned).
MAX_KEY = (1 << 64) - 1
#: What :func:`next_header` reports at the end of a level. Larger than any key.
PLUS_INF = 1 << 64


class Node:
    """One physical node at one level.

    ``keys`` holds at most ``capacity`` sorted keys. Leaf nodes (level 0)
    carry a parallel ``values`` list, internal nodes a parallel ``children``
    list with one down link per key. ``keys[0]`` is the header and never
    changes once the node is linked in.
    """

    __slots__ = ("keys", "values", "children", "next", "lock", "level", "capacity")

    def __init__(self, level, capacity, lock, keys=None, values=None, children=None):
        self.level = level
        self.capacity = capacity
        self.lock = lock
        self.keys = keys if keys is not None else []
        if level == 0:
            self.values = values if values is not None else []
            self.children = None
        else:
            self.values = None
            self.children = children if children is not None else []
        self.next = None

    @property
    def count(self):
        return len(self.keys)

    @property
    def header(self):
        return self.keys[0]

    @property
    def is_sentinel(self):
        return self.keys[0] == MIN_KEY

    @property
    def is_leaf(self):
        return self.level == 0

    def __repr__(self):
        return f"Node(level={self.level}, keys={self.keys!r})"


def find_rank(node, key):
    """Return ``(rank, found)`` for the largest stored key ``<= key``.

    Requires ``node.header <= key``, which the traversal guarantees.
    """
    keys = node.keys
    rank = bisect_right(keys, key) - 1
    return rank, keys[rank] == key


def find_rank_linear(node, key):
    """Linear-scan twin of :func:`find_rank`, kept as a test oracle."""
    keys = node.keys
    rank = 0
    for i in range(1, len(keys)):
        if keys[i] > key:
            break
        rank = i
    return rank, keys[rank] == key


def insert_at(node, rank, key, value=None, child=None):
    """Place ``key`` at slot ``rank + 1``, shifting the tail right by one.

    Returns the number of elements shifted, which is bounded by the node
    capacity. Inserting into a full node is a caller bug (split first).
    """
    keys = node.keys
    n = len(keys)
    if n >= node.capacity:
        raise OverflowError(f"insert into full node (count={n}, capacity={node.capacity})")
    slot = rank + 1
    keys.insert(slot, key)
    if node.values is not None:
        node.values.insert(slot, value)
    else:
        node.children.insert(slot, child)
    return n - slot


def split_at(node, split_rank, new_node):
    """Move slots ``split_rank..count`` of ``node`` onto the end of ``new_node``.

    ``new_node`` may already hold a header (promotion splits). Next links are
    left alone; the caller splices.
    """
    if split_rank >= len(node.keys):
        return
    new_node.keys.extend(node.keys[split_rank:])
    del node.keys[split_rank:]
    if node.values is not None:
        new_node.values.extend(node.values[split_rank:])
        del node.values[split_rank:]
    else:
        new_node.children.extend(node.children[split_rank:])
        del node.children[split_rank:]


def write_value(node, rank, value):
    if node.values is None:
        raise TypeError("values live only on leaf nodes")
    node.values[rank] = value


def next_header(node):
    """Header of ``node.next``, or :data:`PLUS_INF` at the end of the level."""
    nxt = node.next
    return PLUS_INF if nxt is None else nxt.keys[0]
