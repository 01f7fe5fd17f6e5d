"""Independent reference implementations used by the tests."""
import itertools
import math

import numpy as np


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def is_noncrossing(blocks):
    label = {}
    for b, block in enumerate(blocks):
        for v in block:
            label[v] = b
    for a, b, c, d in itertools.combinations(sorted(label), 4):
        if label[a] == label[c] != label[b] == label[d]:
            return False
    return True


def _moments_from_cumulants(kappa, n, noncrossing):
    """m_n as a sum over (non-crossing) partitions of products of cumulants."""
    total = 0.0
    for blocks in set_partitions(range(n)):
        if noncrossing and not is_noncrossing(blocks):
            continue
        total += math.prod(kappa[len(b) - 1] for b in blocks)
    return total


def cumulants_by_enumeration(m, noncrossing):
    """Solve the partition moment-cumulant relation one order at a time."""
    m = list(m)
    kappa = []
    for n in range(1, len(m) + 1):
        kappa.append(0.0)
        # the one-block partition contributes kappa_n exactly once
        kappa[-1] = m[n - 1] - _moments_from_cumulants(kappa, n, noncrossing)
    return np.array(kappa)


def semicircle_cdf(x):
    x = np.clip(np.asarray(x, dtype=float), -2, 2)
    return 0.5 + x * np.sqrt(4 - x * x) / (4 * np.pi) + np.arcsin(x / 2) / np.pi


def quad_moment(density, lo, hi, k):
    from scipy.integrate import quad
    return quad(lambda x: float(density(x)) * x ** k, lo, hi, limit=200)[0]
