"""Randomized height assignment for inserted keys."""
import itertools
import random
import threading
from dataclasses import dataclass

#: Bytes per stored pair (8-byte key + 8-byte value).
PAIR_BYTES = 16


@dataclass(frozen=True)
class PromotionParams:
    """Node capacity ``B``, scale ``c`` and the number of levels ``H``.

    The promotion probability is ``1 / (c * B)``.
    """

    node_capacity: int = 128
    scale: float = 0.5
    max_height: int = 5

    def __post_init__(self):
        if self.node_capacity < 2:
            raise ValueError(f"node_capacity must be >= 2, got {self.node_capacity}")
        if self.max_height < 1:
            raise ValueError(f"max_height must be >= 1, got {self.max_height}")
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        p = self.promotion_p
        if not 0 < p <= 0.5:
            raise ValueError(f"promotion probability 1/(c*B) = {p} outside (0, 1/2]")

    @property
    def promotion_p(self):
        return 1.0 / (self.scale * self.node_capacity)

    @classmethod
    def from_node_bytes(cls, node_bytes=2048, scale=0.5, max_height=5):
        """Capacity from a node byte budget, e.g. 2048 bytes -> 128 pairs."""
        return cls(node_capacity=node_bytes // PAIR_BYTES, scale=scale, max_height=max_height)


def sample_height(params, rng):
    """Count successive successes of probability ``p``, clipped at ``H - 1``."""
    p = params.promotion_p
    top = params.max_height - 1
    h = 0
    while h < top and rng.random() < p:
        h += 1
    return h


def height_pmf(p, max_height):
    """Exact law of :func:`sample_height`: ``p**i * (1-p)`` with the tail folded
    into the top level."""
    top = max_height - 1
    pmf = [p**i * (1 - p) for i in range(top)]
    pmf.append(p**top)
    return pmf


class HeightSampler:
    """Per-thread height streams derived from one base seed.

    Each thread that calls :meth:`sample` gets its own ``random.Random``
    seeded from ``(seed, n)`` where ``n`` is the order in which threads first
    touched the sampler, so a single-threaded run is fully reproducible.
    """

    def __init__(self, params, seed=None):
        self.params = params
        self.seed = seed
        self._local = threading.local()
        self._ordinal = itertools.count()

    def _rng(self):
        try:
            return self._local.rng
        except AttributeError:
            n = next(self._ordinal)
            rng = self._local.rng = random.Random(None if self.seed is None else f"{self.seed}/{n}")
            return rng

    def sample(self):
        return sample_height(self.params, self._rng())
