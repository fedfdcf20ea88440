"""Bottleneck-ratio (conductance) minimization over hypercube chain states.

The exact minimum runs over every nontrivial bipartition of the 2**n
states, which is 2**(2**n - 1) candidates; that is enumerable only for
n <= 5.  States are assigned to enumeration slots by ascending stationary
mass and one half of the slots is swept with a Gray-coded subset walk
inside a Gray-coded walk over the other half, so each candidate costs O(1)
amortized.  The mass ordering makes every candidate's accumulated cut flow
and set mass relatively accurate at the candidate's own scale (a subset is
visited before any heavier state has passed through the accumulators), so
the returned ratio carries ~1e-10 absolute error even when the stationary
law spans hundreds of decades.  The heaviest state is pinned outside the
enumerated side, which also keeps complement masses cancellation-free.  A
fixed chunk grid keeps results independent of the numba thread count.
"""

from __future__ import annotations

import numpy as np

EXACT_STATE_LIMIT = 32  # n <= 5

_kernel = None


def _get_kernel():
    global _kernel
    if _kernel is not None:
        return _kernel
    import numba

    @numba.njit(parallel=True, cache=True, fastmath=False)
    def kernel(F, pi, r, ll_nbr, ll_cnt, hh_nbr, hh_cnt, hl_nbr, hl_cnt,
               half, seed_q, seed_p):
        n_low_masks = 1 << (half - 1)  # subsets of low slots 1..half-1
        n_high = 1 << half             # subsets of high slots
        nchunks = min(64, n_high)      # fixed grid: thread-count independent
        chunk = n_high // nchunks

        ctz = np.empty(n_low_masks, dtype=np.int8)
        ctz[0] = 0
        for m in range(1, n_low_masks):
            c = 0
            mm = m
            while mm & 1 == 0:
                mm >>= 1
                c += 1
            ctz[m] = c

        # per-low-mask prefix data: pi(S_low) and r(S_low) - cross(S_low),
        # the latter being the cut flow of the low-only subset
        pil = np.zeros(n_low_masks)
        rc = np.zeros(n_low_masks)
        rc_min = 0.0
        pil_max = 0.0
        for m in range(1, n_low_masks):
            b = ctz[m]
            pm = m & (m - 1)
            v = b + 1
            pil[m] = pil[pm] + pi[v]
            extra = 0.0
            for k in range(ll_cnt[v]):
                u = ll_nbr[v, k]
                if (pm >> (u - 1)) & 1:
                    extra += F[v, u]
            rc[m] = rc[pm] + r[v] - 2.0 * extra
            if rc[m] < rc_min:
                rc_min = rc[m]
            if pil[m] > pil_max:
                pil_max = pil[m]

        # reorder per-mask data into Gray-walk order: the inner sweep then
        # reads sequential streams and keeps a single running dot product.
        # tog packs toggled-slot index and sign: value v toggles slot v up,
        # v + half toggles it down.
        rc_g = np.empty(n_low_masks)
        pil_g = np.empty(n_low_masks)
        tog = np.empty(n_low_masks, dtype=np.uint8)
        tog[0] = 0
        for i in range(1, n_low_masks):
            g = i ^ (i >> 1)
            rc_g[i] = rc[g]
            pil_g[i] = pil[g]
            b = ctz[i]
            if (i >> (b + 1)) & 1:
                tog[i] = b + 1 + half
            else:
                tog[i] = b + 1

        best_q = np.empty(nchunks)
        best_p = np.empty(nchunks)
        for ci in numba.prange(nchunks):
            start = ci * chunk
            stop = start + chunk
            # rebuild the walk state at the chunk boundary (ascending slots
            # so small masses accumulate before large ones)
            hmask = start ^ (start >> 1)
            pih = 0.0
            rh = 0.0
            chh = 0.0
            g_high = np.zeros(half)
            # signed lookup: sg[u] = +g_low[u], sg[u + half] = -g_low[u]
            sg = np.zeros(2 * half)
            g_pos = 0.0
            for h in range(half):
                if (hmask >> h) & 1:
                    v = half + h
                    pih += pi[v]
                    rh += r[v]
                    for k in range(hh_cnt[h]):
                        h2 = hh_nbr[h, k]
                        if (hmask >> h2) & 1:
                            chh += F[v, half + h2]
                        g_high[h2] += F[v, half + h2]
                    for k in range(hl_cnt[h]):
                        u = hl_nbr[h, k]
                        sg[u] += F[u, v]
                        sg[u + half] -= F[u, v]
                        g_pos += F[u, v]

            # seeded with a real cut's (Q, pi); candidates with zero
            # stationary mass (float underflow) keep pmin = 0 and never win
            bq = seed_q
            bp = seed_p
            for g in range(start, stop):
                if g > start:
                    gm = g ^ (g >> 1)
                    hb = gm ^ hmask
                    h = 0
                    while (hb >> h) & 1 == 0:
                        h += 1
                    v = half + h
                    if (gm >> h) & 1:
                        s = 1.0
                    else:
                        s = -1.0
                    pih += s * pi[v]
                    rh += s * r[v]
                    chh += 2.0 * s * g_high[h]
                    for k in range(hh_cnt[h]):
                        h2 = hh_nbr[h, k]
                        g_high[h2] += s * F[v, half + h2]
                    for k in range(hl_cnt[h]):
                        u = hl_nbr[h, k]
                        sg[u] += s * F[u, v]
                        sg[u + half] -= s * F[u, v]
                        g_pos += s * F[u, v]
                    hmask = gm
                const = rh - chh
                if hmask != 0:
                    q0 = const
                    if q0 < 0.0:
                        q0 = 0.0
                    p0 = min(pih, 1.0 - pih)
                    if q0 * bp < bq * p0:
                        bq = q0
                        bp = p0
                # numerator >= const + rc_min - 2*g_pos and pmin is capped by
                # both 1/2 and the largest reachable set mass this pass, so
                # no low completion can win when the bound already loses
                lb = const + rc_min - 2.0 * g_pos
                pcap = min(0.5, pih + pil_max)
                if lb > 0.0 and lb * bp >= pcap * bq:
                    continue
                dotv = 0.0
                for i in range(1, n_low_masks):
                    dotv += sg[tog[i]]
                    q = const + rc_g[i] - 2.0 * dotv
                    ps = pih + pil_g[i]
                    pmin = min(ps, 1.0 - ps)
                    if q < 0.0:
                        q = 0.0
                    if q * bp < bq * pmin:
                        bq = q
                        bp = pmin
            best_q[ci] = bq
            best_p[ci] = bp

        out_q = best_q[0]
        out_p = best_p[0]
        for ci in range(1, nchunks):
            if best_q[ci] * out_p < out_q * best_p[ci]:
                out_q = best_q[ci]
                out_p = best_p[ci]
        if out_p == 0.0:
            return -1.0
        return out_q / out_p

    _kernel = kernel
    return kernel


def _sweep_seed(P: np.ndarray, pi: np.ndarray) -> tuple[float, float]:
    """(Q, pi_small) of the best spectral sweep cut, a real-cut upper bound.

    Prefix sets in the order of the second eigenvector of sqrt(P o P^T)
    scaled by sqrt(pi); each prefix is scored from its small side with
    direct positive sums, so no cancellation occurs.
    """
    import scipy.linalg

    m = P.shape[0]
    A = np.sqrt(P * P.T)
    vecs = scipy.linalg.eigh(A)[1]
    v2 = vecs[:, -2]
    with np.errstate(divide="ignore", invalid="ignore"):
        score = np.where(pi > 0, v2 / np.sqrt(np.maximum(pi, 1e-300)), np.inf)
    order = np.argsort(score, kind="stable")
    F = pi[:, None] * P
    members = np.zeros(m, dtype=bool)
    best_q, best_p = 1.0, 0.0
    for k in range(m - 1):
        members[order[k]] = True
        p_in = float(pi[members].sum())
        p_out = float(pi[~members].sum())
        small = members if p_in <= p_out else ~members
        q = float(F[np.ix_(small, ~small)].sum())
        p_small = min(p_in, p_out)
        if q * best_p < best_q * p_small:
            best_q, best_p = q, p_small
    return best_q, best_p


def _padded_lists(lists: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    cnt = np.array([len(l) for l in lists], dtype=np.int64)
    width = max(1, int(cnt.max()))
    arr = np.zeros((len(lists), width), dtype=np.int64)
    for i, l in enumerate(lists):
        arr[i, : len(l)] = l
    return arr, cnt


def exact_min_conductance(P: np.ndarray, pi: np.ndarray) -> float:
    """Exact bottleneck ratio ``min_{pi(S) <= 1/2} Q(S, S^c) / pi(S)``.

    Enumerates every bipartition; only feasible for state spaces up to 32
    states (n <= 5).  Absolute accuracy on the ratio is ~1e-10.
    """
    m = P.shape[0]
    if m > EXACT_STATE_LIMIT:
        raise ValueError(
            f"exact conductance enumerates 2^({m}-1) partitions; "
            f"limit is {EXACT_STATE_LIMIT} states (n <= 5)"
        )
    nbits = int(np.log2(m))
    if 1 << nbits != m:
        raise ValueError("state count must be a power of two")
    pi = np.asarray(pi, dtype=np.float64)

    # slot assignment: heaviest state pinned at slot 0 (always outside the
    # enumerated side); remaining states by ascending mass, the 15 lightest
    # on the low mask bits, the rest on the high bits, ascending within each
    by_mass = np.argsort(pi, kind="stable")  # ascending
    heaviest = by_mass[-1]
    free = [s for s in by_mass if s != heaviest]
    half = m // 2
    slot_of_state = np.empty(m, dtype=np.int64)
    slot_of_state[heaviest] = 0
    for rank, s in enumerate(free):
        slot_of_state[s] = 1 + rank if rank < half - 1 else half + (rank - (half - 1))
    state_of_slot = np.empty(m, dtype=np.int64)
    state_of_slot[slot_of_state] = np.arange(m)

    Pp = P[np.ix_(state_of_slot, state_of_slot)]
    pip = pi[state_of_slot]
    F = pip[:, None] * Pp
    r = pip - np.diag(F)
    if nbits == 1:
        return min(F[0, 1] / min(pip[0], 1 - pip[0]), F[1, 0] / min(pip[1], 1 - pip[1]))

    # adjacency (one-bit flips in the original labels) mapped into slots;
    # edges touching slot 0 are always crossing and need no list entry
    ll: list[list[int]] = [[] for _ in range(half)]
    hh: list[list[int]] = [[] for _ in range(half)]
    hl: list[list[int]] = [[] for _ in range(half)]
    for slot in range(m):
        s = state_of_slot[slot]
        neighbors = [int(slot_of_state[s ^ (1 << j)]) for j in range(nbits)]
        if slot >= half:
            h = slot - half
            for other in neighbors:
                if other >= half:
                    hh[h].append(other - half)
                elif other >= 1:
                    hl[h].append(other)
        elif slot >= 1:
            for other in neighbors:
                if 1 <= other < half:
                    ll[slot].append(other)
    ll_nbr, ll_cnt = _padded_lists(ll)
    hh_nbr, hh_cnt = _padded_lists(hh)
    hl_nbr, hl_cnt = _padded_lists(hl)

    seed_q, seed_p = _sweep_seed(Pp, pip)
    kernel = _get_kernel()
    out = float(
        kernel(np.ascontiguousarray(F), pip, r, ll_nbr, ll_cnt, hh_nbr, hh_cnt,
               hl_nbr, hl_cnt, half, seed_q, seed_p)
    )
    if out < 0.0:
        raise ValueError("stationary distribution too degenerate (underflowed) for conductance")
    return out


def conductance_of(P: np.ndarray, pi: np.ndarray, members: np.ndarray) -> float:
    """``Q(S, S^c) / pi(S)`` for one subset given as a boolean mask."""
    F = pi[:, None] * P
    q = float(F[np.ix_(members, ~members)].sum())
    return q / float(pi[members].sum())


def sampled_min_conductance(
    P: np.ndarray, pi: np.ndarray, samples: int = 2000, seed: int = 0
) -> float:
    """Upper bound on the bottleneck ratio from sampled subsets.

    Tries all singletons plus ``samples`` random subsets (inclusion
    probability itself uniform per sample); valid as an upper bound only.
    """
    m = P.shape[0]
    rng = np.random.default_rng(seed)
    best = np.inf
    for s in range(m):
        members = np.zeros(m, dtype=bool)
        members[s] = True
        side = members if pi[s] <= 0.5 else ~members
        best = min(best, conductance_of(P, pi, side))
    for _ in range(samples):
        p_inc = rng.uniform(0.05, 0.95)
        members = rng.random(m) < p_inc
        if not members.any() or members.all():
            continue
        if float(pi[members].sum()) > 0.5:
            members = ~members
        best = min(best, conductance_of(P, pi, members))
    return float(best)
