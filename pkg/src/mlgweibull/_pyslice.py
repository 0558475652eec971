"""Pure-Python coordinate-sweep slice sampler for cMLG kernels.

Reference twin of the compiled ``_cslice`` module. The cMLG kernel is
``lin'q - sum_r exp(log_rate_r + (Hq)_r)`` with ``lin = H' alpha``; ``H`` is
passed in CSC form so each coordinate touches only its nonzero rows.
"""
import math

import numpy as np


def slice_sweep(indptr, indices, data, lin, log_rate, q, eta, width, max_steps, rng):
    """Update ``q`` and ``eta = H q`` in place with one sweep of slice sampling.

    Each coordinate uses stepping out (at most ``max_steps`` expansions of
    ``width``, split at random between the two ends) followed by shrinkage.

    Returns
    -------
    (status, index)
        ``status`` is 0 on success, 1 if the current point has non-finite log
        density, 2 if shrinkage failed to terminate; ``index`` is the offending
        coordinate or -1.
    """
    # exp overflow far out in the tails is expected: it just means log f = -inf
    with np.errstate(over="ignore", invalid="ignore"):
        return _sweep(indptr, indices, data, lin, log_rate, q, eta, width, max_steps, rng)


def _sweep(indptr, indices, data, lin, log_rate, q, eta, width, max_steps, rng):
    p = q.shape[0]
    for j in range(p):
        start, stop = indptr[j], indptr[j + 1]
        rows = indices[start:stop]
        h = data[start:stop]
        x0 = q[j]
        lin_j = lin[j]
        lc = log_rate[rows] + eta[rows] - h * x0

        def logf(t):
            return lin_j * t - np.exp(lc + h * t).sum()

        f0 = logf(x0)
        if not math.isfinite(f0):
            return 1, j
        logy = f0 + math.log(1.0 - rng.random())

        left = x0 - width * rng.random()
        right = left + width
        steps_left = int(math.floor(max_steps * rng.random()))
        steps_right = max_steps - 1 - steps_left
        while steps_left > 0 and logf(left) > logy:
            left -= width
            steps_left -= 1
        while steps_right > 0 and logf(right) > logy:
            right += width
            steps_right -= 1

        n_shrink = 0
        while True:
            x1 = left + rng.random() * (right - left)
            if logf(x1) >= logy:
                break
            if x1 < x0:
                left = x1
            else:
                right = x1
            n_shrink += 1
            if n_shrink > 200:
                return 2, j

        eta[rows] += h * (x1 - x0)
        q[j] = x1
    return 0, -1
