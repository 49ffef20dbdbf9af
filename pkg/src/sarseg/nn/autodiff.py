"""Minimal reverse-mode autodiff over numpy arrays.

A forward pass builds a graph of ``Node`` objects; ``backward`` walks it in
reverse topological order. ``Param`` is a leaf node that survives across
steps and keeps its accumulated gradient for the optimizer. Inside a
``no_grad()`` block ops create parentless nodes and skip all caching, so
inference does not retain activations.
"""

from contextlib import contextmanager

import numpy as np


class Node:
    __slots__ = ("data", "grad", "_parents", "_bwd")

    def __init__(self, data, parents=(), bwd=None):
        self.data = data
        self.grad = None
        self._parents = parents
        self._bwd = bwd

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype


class Param(Node):
    """Trainable leaf. ``grad`` accumulates across backward passes until zeroed."""

    __slots__ = ()

    def __init__(self, data):
        super().__init__(np.ascontiguousarray(data))

    def zero_grad(self):
        self.grad = None


_GRAD_ENABLED = [True]


def grad_enabled():
    return _GRAD_ENABLED[-1]


@contextmanager
def no_grad():
    _GRAD_ENABLED.append(False)
    try:
        yield
    finally:
        _GRAD_ENABLED.pop()


def make_node(data, parents, bwd):
    """Create a graph node, dropping parents/closure when grads are disabled."""
    if not _GRAD_ENABLED[-1]:
        return Node(data)
    return Node(data, parents, bwd)


def _topo_order(root):
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in visited:
                stack.append((p, False))
    return order


def backward(root, seed_grad=None):
    """Backpropagate from ``root``; gradients accumulate on reachable Params.

    Intermediate nodes release their gradient and closure as soon as they are
    consumed, so peak memory stays close to the forward pass.
    """
    if seed_grad is None:
        seed_grad = np.ones_like(root.data)
    root.grad = seed_grad
    for node in reversed(_topo_order(root)):
        if node._bwd is None:
            continue
        if node.grad is None:
            # dead branch (unused output); nothing to propagate
            node._bwd = None
            continue
        grads = node._bwd(node.grad)
        for parent, g in zip(node._parents, grads):
            if g is None:
                continue
            if parent.grad is None:
                parent.grad = g
            else:
                parent.grad = parent.grad + g
        node._bwd = None
        node._parents = ()
        node.grad = None
