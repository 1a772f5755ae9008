"""Hot numeric kernels shared by the numba and pure-numpy execution paths.

Every function below is written as plain numpy source and wrapped by
:func:`hptrim._accel.kernel`, so the exact same code runs jitted or
interpreted. Random numbers come from a splitmix64 counter generator
implemented inline: integer arithmetic is masked to 64 bits, which is a
no-op under numba's wrapping uint64 and keeps Python ints exact, so both
paths produce identical streams.
"""

import numpy as np

from ._accel import USING_NUMBA, kernel

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_stream(seed, *keys):
    """Derive a child seed from ``seed`` by folding in integer ``keys``.

    This is the stream-splitting rule used for replicate and horizon
    sub-streams: each key advances the parent state by a key-dependent
    multiple of the splitmix64 increment and applies the output mix.
    Plain-Python integers only; safe to call from any context.
    """
    h = int(seed) & MASK64
    for k in keys:
        h = (h + _GOLDEN * (int(k) + 1)) & MASK64
        h = _mix64(h)
    return h


def rng_state(seed):
    """Initial kernel RNG state for a seed.

    numba kernels want a uint64 scalar; the interpreted path wants a plain
    Python int (numpy warns on uint64 scalar wraparound).
    """
    s = int(seed) & MASK64
    return np.uint64(s) if USING_NUMBA else s


@kernel
def sm64_next(state):
    # splitmix64: counter state plus output mix; masks keep Python ints
    # within 64 bits and are no-ops on numba uint64.
    state = (state + 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & 0xFFFFFFFFFFFFFFFF
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & 0xFFFFFFFFFFFFFFFF
    z = z ^ (z >> 31)
    return state, z


@kernel
def u64_unit(z):
    # top 53 bits -> double in [0, 1)
    return (z >> 11) * 2.0 ** -53


@kernel
def thinning_kernel(mu, coef, pos_coef, rates, horizon, floor, state, times, comps):
    """Ogata thinning for a linear Hawkes net with exponential kernels.

    ``coef[i, j]`` weights the (unit-jump) integrated process of source j
    in the intensity of target i; ``rates`` holds per-source kernel decay.
    Intensities are rectified at ``floor``. The dominating rate uses only
    the positive part of ``coef`` evaluated at the current state, which
    bounds the true intensity until the next accepted event because the
    integrated processes decay monotonically between events.

    Fills ``times``/``comps`` in global time order and returns the event
    count, or -1 if the preallocated capacity (the runaway guard) is hit.
    """
    n = mu.shape[0]
    cap = times.shape[0]
    x = np.zeros(n)
    t = 0.0
    n_ev = 0
    while True:
        bound = np.maximum(mu + pos_coef @ x, floor)
        big = bound.sum()
        if big <= 0.0:
            break
        state, z = sm64_next(state)
        dt = -np.log(1.0 - u64_unit(z)) / big
        t = t + dt
        if t >= horizon:
            break
        x *= np.exp(-rates * dt)
        lam = np.maximum(mu + coef @ x, floor)
        total = lam.sum()
        state, z = sm64_next(state)
        v = u64_unit(z) * big
        if v < total:
            if n_ev >= cap:
                return -1
            i = 0
            acc = lam[0]
            while v >= acc and i < n - 1:
                i += 1
                acc += lam[i]
            times[n_ev] = t
            comps[n_ev] = i
            n_ev += 1
            x[i] += 1.0
    return n_ev


@kernel
def integrated_on_grid(times, rate, bin_width, n_bins, out):
    """Exponential-kernel integrated process sampled at bin left edges.

    ``out[t]`` sums ``exp(-rate * (t * bin_width - s))`` over event times
    ``s`` strictly before the edge, via the exact per-bin recursion (decay
    the carry, then add the events of the bin just closed at their exact
    positions). ``times`` must be ascending.
    """
    n_ev = times.shape[0]
    step = np.exp(-rate * bin_width)
    out[0] = 0.0
    x = 0.0
    k = 0
    for t in range(1, n_bins):
        edge = t * bin_width
        x *= step
        while k < n_ev and times[k] < edge:
            x += np.exp(-rate * (edge - times[k]))
            k += 1
        out[t] = x


@kernel
def cd_lasso_kernel(x_mat, y, lam, tol, max_iter, beta, obj_hist):
    """Cyclic coordinate descent for (1/T)||y - mu - X beta||^2 + lam*||beta||_1.

    The intercept is unpenalized and re-solved exactly after every sweep.
    ``beta`` is updated in place (warm starts). ``obj_hist[it]`` records
    the objective after sweep ``it``. Returns (intercept, sweeps, converged).
    """
    n_rows, n_cols = x_mat.shape
    col_sq = (x_mat * x_mat).sum(axis=0)
    mu = (y - x_mat @ beta).sum() / n_rows
    r = y - x_mat @ beta - mu
    thresh = 0.5 * lam * n_rows
    converged = False
    sweeps = 0
    for it in range(max_iter):
        max_delta = 0.0
        for j in range(n_cols):
            cj = col_sq[j]
            if cj <= 0.0:
                beta[j] = 0.0
                continue
            bj = beta[j]
            rho = x_mat[:, j] @ r + cj * bj
            if rho > thresh:
                bn = (rho - thresh) / cj
            elif rho < -thresh:
                bn = (rho + thresh) / cj
            else:
                bn = 0.0
            if bn != bj:
                r += x_mat[:, j] * (bj - bn)
                beta[j] = bn
                d = abs(bn - bj)
                if d > max_delta:
                    max_delta = d
        dmu = r.sum() / n_rows
        mu += dmu
        r -= dmu
        if abs(dmu) > max_delta:
            max_delta = abs(dmu)
        sweeps = it + 1
        obj_hist[it] = r @ r / n_rows + lam * np.abs(beta).sum()
        if max_delta < tol:
            converged = True
            break
    return mu, sweeps, converged
