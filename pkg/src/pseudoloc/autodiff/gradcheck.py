"""Central-difference checks of reverse-mode gradients."""

from dataclasses import dataclass

import numpy as np

from .tensor import backward


@dataclass
class GradcheckResult:
    names: list
    indices: list
    analytic: np.ndarray
    numeric: np.ndarray
    rel_error: np.ndarray
    steps: np.ndarray

    @property
    def max_rel_error(self):
        return float(self.rel_error.max()) if self.rel_error.size else 0.0


def relative_error(a, b, floor=1e-6):
    """``|a - b| / max(|a|, |b|, floor)``; the floor keeps near-zero gradients from dividing by ~0."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def stratified_coordinates(params, n, rng):
    """At least one coordinate per parameter, the rest spread in proportion to size."""
    sizes = np.array([p.data.size for p in params], dtype=np.float64)
    extra = max(n - len(params), 0)
    counts = 1 + np.floor(extra * sizes / sizes.sum()).astype(int)
    # hand out the rounding remainder to the largest tensors
    for i in np.argsort(-sizes)[: max(n - counts.sum(), 0)]:
        counts[i] += 1
    coords = []
    for p, c in zip(params, counts):
        flat = rng.choice(p.data.size, size=min(c, p.data.size), replace=False)
        coords += [(p, np.unravel_index(int(f), p.data.shape)) for f in np.sort(flat)]
    return coords


def gradcheck(loss_fn, params, n_coords=100, eps=1e-5, seed=0, floor=1e-6):
    """Compare ``backward`` gradients of ``loss_fn()`` with central differences.

    ``loss_fn`` must be deterministic and return a scalar graph tensor
    depending on ``params``.

    ``eps`` is a step or a sequence of candidate steps. With several, each
    coordinate uses the step whose forward and backward one-sided
    differences agree best: too large a step straddles a ReLU or max kink,
    too small a one loses digits to roundoff. The choice never looks at the
    analytic gradient.
    """
    params = list(params)
    steps = [float(e) for e in np.atleast_1d(eps)]
    for p in params:
        p.zero_grad()
    out = loss_fn()
    f0 = float(out.data)
    backward(out)
    coords = stratified_coordinates(params, n_coords, np.random.default_rng(seed))
    analytic, numeric, chosen = [], [], []
    for p, idx in coords:
        analytic.append(p.grad[idx])
        orig = p.data[idx]
        best = None
        for h in steps:
            p.data[idx] = orig + h
            up = float(loss_fn().data)
            p.data[idx] = orig - h
            down = float(loss_fn().data)
            p.data[idx] = orig
            asym = abs(up + down - 2 * f0) / h
            if best is None or asym < best[0]:
                best = (asym, (up - down) / (2 * h), h)
        numeric.append(best[1])
        chosen.append(best[2])
    analytic, numeric = np.array(analytic), np.array(numeric)
    for p in params:
        p.zero_grad()
    return GradcheckResult([p.name for p, _ in coords], [tuple(int(i) for i in idx) for _, idx in coords],
                           analytic, numeric, relative_error(analytic, numeric, floor), np.array(chosen))
