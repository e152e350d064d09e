"""Compiled inner loop for the cocycle simulation.

The frame is stored flat as ``(a, b, c, d)``.  Generator indices follow
``monodromy.float_generators``: 0 = A, 1 = A^-1, 2 = B, 3 = B^-1.
"""

import math

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_PRECISION = 1
STATUS_NONTERMINATION = 2

MAX_APPLICATIONS = 1_000_000
# Re-orthonormalize as soon as an entry of the cocycle exceeds this; keeps the
# condition number of the factored matrix small during cusp excursions.
GROWTH_LIMIT = 1e4


@njit(cache=True, nogil=True)
def _left_multiply(g, B, work):
    m = B.shape[0]
    for i in range(m):
        for j in range(m):
            acc = 0.0
            for k in range(m):
                acc += g[i, k] * B[k, j]
            work[i, j] = acc
    big = 0.0
    for i in range(m):
        for j in range(m):
            B[i, j] = work[i, j]
            v = abs(work[i, j])
            if v > big:
                big = v
    return big


@njit(cache=True, nogil=True)
def _orthonormalize(B, logsums, accumulate):
    """Gram-Schmidt with one re-orthogonalization pass; positive R diagonal."""
    m = B.shape[0]
    for j in range(m):
        for _ in range(2):
            for k in range(j):
                r = 0.0
                for i in range(m):
                    r += B[i, k] * B[i, j]
                for i in range(m):
                    B[i, j] -= r * B[i, k]
        norm = 0.0
        for i in range(m):
            norm += B[i, j] * B[i, j]
        norm = math.sqrt(norm)
        for i in range(m):
            B[i, j] /= norm
        if accumulate:
            logsums[j] += math.log(norm)


@njit(cache=True, nogil=True)
def advance(frame, B, logsums, gens, step0, nsteps, burn_in, total_steps, qr_interval, dt, y_guard, work):
    """Advance one trajectory by ``nsteps`` geodesic steps.

    Returns ``(last_step, status)``.  ``logsums`` only receives growth after
    ``burn_in`` steps; an orthonormalization at ``burn_in`` discards earlier
    growth.
    """
    e = math.exp(dt)
    a, b, c, d = frame[0], frame[1], frame[2], frame[3]
    step = step0
    status = STATUS_OK
    for _ in range(nsteps):
        step += 1
        a *= e
        b /= e
        c *= e
        d /= e
        det = a * d - b * c
        s = math.sqrt(det)
        a /= s
        b /= s
        c /= s
        d /= s
        accumulate = step > burn_in
        applied = 0
        while True:
            n2 = c * c + d * d
            x = (a * c + b * d) / n2
            y = 1.0 / n2
            if x > 1.0:
                g = 1
                a -= 2.0 * c
                b -= 2.0 * d
            elif x < -1.0:
                g = 0
                a += 2.0 * c
                b += 2.0 * d
            elif (2.0 * x + 1.0) ** 2 + 4.0 * y * y < 1.0:
                g = 2
                c += 2.0 * a
                d += 2.0 * b
            elif (2.0 * x - 1.0) ** 2 + 4.0 * y * y < 1.0:
                g = 3
                c -= 2.0 * a
                d -= 2.0 * b
            else:
                break
            applied += 1
            if applied > MAX_APPLICATIONS:
                status = STATUS_NONTERMINATION
                break
            big = _left_multiply(gens[g], B, work)
            if big > GROWTH_LIMIT:
                _orthonormalize(B, logsums, accumulate)
        if status != STATUS_OK:
            break
        # generators have determinant one, but rounding drifts
        det = a * d - b * c
        s = math.sqrt(det)
        a /= s
        b /= s
        c /= s
        d /= s
        y = 1.0 / (c * c + d * d)
        if y > 1.0 / y_guard or y < y_guard:
            status = STATUS_PRECISION
            break
        if step == burn_in:
            _orthonormalize(B, logsums, False)
        elif accumulate and ((step - burn_in) % qr_interval == 0 or step == total_steps):
            _orthonormalize(B, logsums, True)
    frame[0] = a
    frame[1] = b
    frame[2] = c
    frame[3] = d
    return step, status


def new_work(m):
    return np.empty((m, m))
