"""Central-difference stencils for mixed partial derivatives of batched functions."""

from __future__ import annotations

import itertools

import numpy as np

# order -> (offsets, weights); every stencil is second-order accurate
_STENCILS = {
    0: (np.array([0.0]), np.array([1.0])),
    1: (np.array([-1.0, 1.0]), np.array([-0.5, 0.5])),
    2: (np.array([-1.0, 0.0, 1.0]), np.array([1.0, -2.0, 1.0])),
    3: (np.array([-2.0, -1.0, 1.0, 2.0]), np.array([-0.5, 1.0, -1.0, 0.5])),
    4: (np.array([-2.0, -1.0, 0.0, 1.0, 2.0]), np.array([1.0, -4.0, 6.0, -4.0, 1.0])),
}


def stencil(counts):
    """Offsets ``(K, d)`` and weights ``(K,)`` for the partial with multiplicities ``counts``."""
    counts = tuple(int(c) for c in counts)
    per_axis = [_STENCILS[c] for c in counts]
    offs = np.array(list(itertools.product(*[o for o, _ in per_axis])))
    wts = np.array([np.prod(w) for w in itertools.product(*[w for _, w in per_axis])])
    keep = wts != 0.0
    return offs[keep], wts[keep]


def mixed_partials(f, base, patterns, h):
    """Evaluate several mixed partial derivatives of ``f`` at every base point.

    ``f`` maps ``(..., d)`` arrays to ``(...)``; ``base`` has shape ``(m, d)``;
    ``patterns`` is a list of multiplicity tuples of length ``d``.  Returns an
    array of shape ``(m, len(patterns))``.  All stencil points are evaluated
    in one call to ``f``.
    """
    base = np.atleast_2d(np.asarray(base, dtype=float))
    chunks, weights, sizes, orders = [], [], [], []
    for pat in patterns:
        offs, wts = stencil(pat)
        chunks.append(offs)
        weights.append(wts)
        sizes.append(len(wts))
        orders.append(sum(pat))
    offsets = np.concatenate(chunks, axis=0)
    values = f(base[:, None, :] + h * offsets[None, :, :])
    out = np.empty((base.shape[0], len(patterns)))
    start = 0
    for p, (wts, size, order) in enumerate(zip(weights, sizes, orders)):
        out[:, p] = values[:, start:start + size] @ wts / h**order
        start += size
    return out


def richardson(f_h, f_half):
    """Combine second-order estimates at steps ``h`` and ``h/2``."""
    return (4.0 * f_half - f_h) / 3.0
