"""Reader-writer node locks, the level-sensitive lock mode rule, and a debug
tracer that checks lock ordering and per-thread lock footprint.

Lock order: top level first, then left to right by header key within a
level. Every acquisition a thread makes must come strictly after every lock
it already holds; that is the deadlock-freedom argument, and the tracer
enforces it when enabled.
"""
import enum
import os
import threading
import time

DEBUG_ENV = "BSKIPLIST_DEBUG_LOCKS"


class LockMode(enum.Enum):
    READ = "read"
    WRITE = "write"


def mode_for(promote_h, level):
    """Read above the promotion height, write at and below it."""
    return LockMode.READ if level > promote_h else LockMode.WRITE


def debug_locks_enabled():
    return os.environ.get(DEBUG_ENV, "").lower() not in ("", "0", "false", "no")


class PyRWLock:
    """Pure-Python writer-preferring reader-writer lock.

    A writer takes ``_gate`` (which also blocks new readers) and then waits
    for the reader list to drain. Readers pass through the gate and register
    by appending to ``_readers``; list append/pop are atomic, so release
    needs no mutex.
    """

    __slots__ = ("_gate", "_readers", "_writing")

    def __init__(self):
        self._gate = threading.Lock()
        self._readers = []
        self._writing = False

    def acquire_read(self):
        gate = self._gate
        gate.acquire()
        self._readers.append(None)
        gate.release()

    def acquire_write(self):
        self._gate.acquire()
        readers = self._readers
        spins = 0
        while readers:
            # readers only hold a node for one traversal step; yield the GIL
            time.sleep(0 if spins < 64 else 1e-5)
            spins += 1
        self._writing = True

    def release(self):
        if self._writing:
            self._writing = False
            self._gate.release()
        else:
            self._readers.pop()

    @property
    def write_locked(self):
        return self._writing

    @property
    def reader_count(self):
        return len(self._readers)


try:
    from ._rwlock import RWLock
except ImportError:  # extension not built
    RWLock = PyRWLock


def acquire(lock, mode):
    if mode is LockMode.WRITE:
        lock.acquire_write()
    else:
        lock.acquire_read()


class LockTracer:
    """Per-thread record of held node locks.

    Flags (a) acquisitions that do not come strictly after every held lock in
    the (level descending, header ascending) order and (b) footprints over
    ``max_locks`` locks or spanning more than ``max_span + 1`` levels.
    """

    def __init__(self, max_locks=3, max_span=1):
        self.max_locks = max_locks
        self.max_span = max_span
        self.order_violations = []
        self.footprint_violations = []
        self.max_held = 0
        self.max_levels_spanned = 0
        self.acquisitions = 0
        self._local = threading.local()

    def _held(self):
        try:
            return self._local.held
        except AttributeError:
            held = self._local.held = []
            return held

    @staticmethod
    def order_key(tag):
        level, header = tag
        return (-level, header)

    def before_acquire(self, tag):
        held = self._held()
        if held:
            key = self.order_key(tag)
            top = max(self.order_key(t) for t in held)
            if key <= top:
                self.order_violations.append((tuple(held), tag))

    def after_acquire(self, tag):
        held = self._held()
        held.append(tag)
        self.acquisitions += 1
        n = len(held)
        levels = [t[0] for t in held]
        span = max(levels) - min(levels)
        if n > self.max_held:
            self.max_held = n
        if span > self.max_levels_spanned:
            self.max_levels_spanned = span
        if n > self.max_locks or span > self.max_span:
            self.footprint_violations.append(tuple(held))

    def on_release(self, tag):
        self._held().remove(tag)

    def held_now(self):
        return list(self._held())

    @property
    def ok(self):
        return not self.order_violations and not self.footprint_violations

    def summary(self):
        return {
            "acquisitions": self.acquisitions,
            "order_violations": len(self.order_violations),
            "footprint_violations": len(self.footprint_violations),
            "max_held": self.max_held,
            "max_levels_spanned": self.max_levels_spanned,
        }


class TracedRWLock(RWLock):
    """:class:`RWLock` that reports to a :class:`LockTracer`.

    ``tag`` is ``(level, header)``; headers are unique per level and never
    change, so the tag stands in for the node's left-to-right position.
    """

    __slots__ = ("tag", "tracer")

    def __init__(self, tracer, tag):
        super().__init__()
        self.tracer = tracer
        self.tag = tag

    def acquire_read(self):
        self.tracer.before_acquire(self.tag)
        RWLock.acquire_read(self)
        self.tracer.after_acquire(self.tag)

    def acquire_write(self):
        self.tracer.before_acquire(self.tag)
        RWLock.acquire_write(self)
        self.tracer.after_acquire(self.tag)

    def release(self):
        self.tracer.on_release(self.tag)
        RWLock.release(self)


def hoh_advance(held, target, mode):
    """Lock ``target`` in ``mode``, then release ``held``; returns ``target``."""
    acquire(target.lock, mode)
    held.lock.release()
    return target
