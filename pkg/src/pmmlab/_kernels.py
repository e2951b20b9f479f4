"""Compiled Gillespie kernel for the porous medium model.

Event layout (``n`` events in both topologies):

* interval: leaves ``0..n-3`` are bonds ``(x, x+1)`` for ``x = leaf + 1``,
  leaf ``n-2`` is the reservoir at site 1, leaf ``n-1`` the one at site n-1;
* torus: leaf ``x`` is bond ``(x, x+1 mod n)``; leaf ``n-1`` is the slow bond.

``occ`` always stores the lattice with the interval offset removed, i.e.
``occ[x-1] = eta(x)`` on the interval and ``occ[x] = eta(x)`` on the torus.
Rates include the diffusive ``n**2`` factor so clocks run in macroscopic time.
"""

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _site(occ, x, n, alpha, beta, torus):
    if torus:
        return float(occ[x % n])
    if x <= 0:
        return alpha
    if x >= n:
        return beta
    return float(occ[x - 1])


@njit(cache=True)
def constraint_rate(occ, x, n, m, alpha, beta, torus):
    total = 0.0
    for k in range(1, m + 1):
        prod = 1.0
        for j in range(-(m - k), k + 1):
            if j == 0 or j == 1:
                continue
            prod *= _site(occ, x + j, n, alpha, beta, torus)
            if prod == 0.0:
                break
        total += prod
    return total


@njit(cache=True)
def event_rate(occ, leaf, n, m, alpha, beta, torus, n2, ssep_w, bnd, slow):
    if torus:
        x = leaf
        if occ[x] == occ[(x + 1) % n]:
            return 0.0
        r = n2 * (constraint_rate(occ, x, n, m, alpha, beta, True) + ssep_w)
        if x == n - 1:
            r *= slow
        return r
    if leaf <= n - 3:
        x = leaf + 1
        if occ[x - 1] == occ[x]:
            return 0.0
        return n2 * (constraint_rate(occ, x, n, m, alpha, beta, False) + ssep_w)
    if leaf == n - 2:
        e = float(occ[0])
        return n2 * bnd * (alpha * (1.0 - e) + (1.0 - alpha) * e)
    e = float(occ[n - 2])
    return n2 * bnd * (beta * (1.0 - e) + (1.0 - beta) * e)


@njit(cache=True)
def all_rates(occ, n, m, alpha, beta, torus, n2, ssep_w, bnd, slow):
    out = np.empty(n)
    for leaf in range(n):
        out[leaf] = event_rate(occ, leaf, n, m, alpha, beta, torus, n2, ssep_w, bnd, slow)
    return out


@njit(cache=True)
def _tree_set(tree, size, leaf, value):
    i = leaf + size
    tree[i] = value
    i //= 2
    while i >= 1:
        tree[i] = tree[2 * i] + tree[2 * i + 1]
        i //= 2


@njit(cache=True)
def _tree_find(tree, size, u):
    i = 1
    while i < size:
        left = tree[2 * i]
        if u < left or tree[2 * i + 1] <= 0.0:
            i = 2 * i
        else:
            u -= left
            i = 2 * i + 1
    return i - size


@njit(cache=True)
def _refresh(tree, size, occ, lo, hi, n, m, alpha, beta, torus, n2, ssep_w, bnd, slow):
    # bonds whose constraint window or exclusion factor touches sites lo..hi
    if torus:
        for x in range(lo - m - 1, hi + m + 1):
            leaf = x % n
            _tree_set(tree, size, leaf, event_rate(occ, leaf, n, m, alpha, beta, True, n2, ssep_w, bnd, slow))
        return
    a = max(1, lo - m - 1)
    b = min(n - 2, hi + m)
    for x in range(a, b + 1):
        leaf = x - 1
        _tree_set(tree, size, leaf, event_rate(occ, leaf, n, m, alpha, beta, False, n2, ssep_w, bnd, slow))
    if lo <= m + 1:
        _tree_set(tree, size, n - 2, event_rate(occ, n - 2, n, m, alpha, beta, False, n2, ssep_w, bnd, slow))
    if hi >= n - 2 - m:
        _tree_set(tree, size, n - 1, event_rate(occ, n - 1, n, m, alpha, beta, False, n2, ssep_w, bnd, slow))


@njit(cache=True)
def run(occ, sample_times, seed, n, m, alpha, beta, torus, n2, ssep_w, bnd, slow):
    """Simulate one trajectory; returns snapshots and bookkeeping arrays.

    ``occ`` is modified in place.  Returns ``(snapshots, injections, removals,
    occupation_time, n_events, status)`` where ``status`` is 0 on success and
    1 if an absorbing state (zero total rate) was hit.
    """
    np.random.seed(seed)
    L = occ.shape[0]
    K = sample_times.shape[0]
    snaps = np.zeros((K, L), dtype=np.uint8)
    inj = np.zeros(K, dtype=np.int64)
    rem = np.zeros(K, dtype=np.int64)
    occ_time = np.zeros(L)
    last_change = np.zeros(L)

    size = 1
    while size < n:
        size *= 2
    tree = np.zeros(2 * size)
    for leaf in range(n):
        tree[leaf + size] = event_rate(occ, leaf, n, m, alpha, beta, torus, n2, ssep_w, bnd, slow)
    for i in range(size - 1, 0, -1):
        tree[i] = tree[2 * i] + tree[2 * i + 1]

    t = 0.0
    k = 0
    n_inj = 0
    n_rem = 0
    n_events = 0
    t_end = sample_times[K - 1]
    while k < K and sample_times[k] <= 0.0:
        snaps[k, :] = occ
        k += 1
    while k < K:
        total = tree[1]
        if total <= 0.0:
            for i in range(L):
                occ_time[i] += occ[i] * (t_end - last_change[i])
            while k < K:
                snaps[k, :] = occ
                inj[k] = n_inj
                rem[k] = n_rem
                k += 1
            return snaps, inj, rem, occ_time, n_events, 1
        dt = -np.log(1.0 - np.random.random()) / total
        t_next = t + dt
        while k < K and sample_times[k] < t_next:
            snaps[k, :] = occ
            inj[k] = n_inj
            rem[k] = n_rem
            k += 1
        if k >= K:
            break
        t = t_next
        leaf = _tree_find(tree, size, np.random.random() * total)
        n_events += 1
        if torus:
            x = leaf
            y = (x + 1) % n
            occ_time[x] += occ[x] * (t - last_change[x])
            occ_time[y] += occ[y] * (t - last_change[y])
            last_change[x] = t
            last_change[y] = t
            tmp = occ[x]
            occ[x] = occ[y]
            occ[y] = tmp
            _refresh(tree, size, occ, x, x + 1, n, m, alpha, beta, True, n2, ssep_w, bnd, slow)
        elif leaf <= n - 3:
            i = leaf
            occ_time[i] += occ[i] * (t - last_change[i])
            occ_time[i + 1] += occ[i + 1] * (t - last_change[i + 1])
            last_change[i] = t
            last_change[i + 1] = t
            tmp = occ[i]
            occ[i] = occ[i + 1]
            occ[i + 1] = tmp
            _refresh(tree, size, occ, leaf + 1, leaf + 2, n, m, alpha, beta, False, n2, ssep_w, bnd, slow)
        else:
            i = 0 if leaf == n - 2 else n - 2
            occ_time[i] += occ[i] * (t - last_change[i])
            last_change[i] = t
            if occ[i] == 0:
                n_inj += 1
            else:
                n_rem += 1
            occ[i] = 1 - occ[i]
            _refresh(tree, size, occ, i + 1, i + 1, n, m, alpha, beta, False, n2, ssep_w, bnd, slow)
    for i in range(L):
        occ_time[i] += occ[i] * (t_end - last_change[i])
    return snaps, inj, rem, occ_time, n_events, 0
