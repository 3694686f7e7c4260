"""Debug floating-point operation counter.

Kernels report the operations they perform analytically (from array sizes)
whenever a counter is active; with no active counter the cost is one list
truthiness check per call.
"""
from contextlib import contextmanager

_active = []


class FlopCounter:
    def __init__(self):
        self.total = 0
        self.by_tag = {}

    def add(self, n, tag):
        self.total += n
        self.by_tag[tag] = self.by_tag.get(tag, 0) + n


def add_flops(n, tag="other"):
    if _active:
        for counter in _active:
            counter.add(n, tag)


@contextmanager
def count_flops():
    """Count flops reported inside the ``with`` block.

    Example:
        >>> with count_flops() as c:
        ...     add_flops(10, "memory")
        >>> c.total
        10
    """
    counter = FlopCounter()
    _active.append(counter)
    try:
        yield counter
    finally:
        _active.remove(counter)
