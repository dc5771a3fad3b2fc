"""Compiled tree growing and traversal on CSR matrices.

A node's candidate splits are enumerated from the nonzero entries of the
rows it holds, sorted by (feature, value); the implicit zeros of a feature
form one extra value level whose statistics are the node totals minus the
stored entries.  Cost per node is proportional to its nonzeros, not to p.
"""

import numba
import numpy as np

ENTROPY = 0
VARIANCE = 1
# gains within this relative margin count as ties
TIE_RTOL = 1e-12


@numba.njit(cache=True)
def splitmix64(state):
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def entropy_bits(counts, total):
    h = 0.0
    for c in range(counts.size):
        if counts[c] > 0.0:
            q = counts[c] / total
            h -= q * np.log2(q)
    return h


@numba.njit(cache=True)
def _entropy_gain(h_parent, left, node_counts, w_left, w_node, scratch):
    w_right = w_node - w_left
    for c in range(left.size):
        scratch[c] = node_counts[c] - left[c]
    return (h_parent - (w_left / w_node) * entropy_bits(left, w_left)
            - (w_right / w_node) * entropy_bits(scratch, w_right))


@numba.njit(cache=True)
def _variance_gain(s_node, w_node, s_left, w_left):
    s_right = s_node - s_left
    w_right = w_node - w_left
    return s_left * s_left / w_left + s_right * s_right / w_right - s_node * s_node / w_node


@numba.njit(cache=True)
def grow_tree(indptr, indices, data, n_features, weight, y_class, y_reg, n_classes,
              criterion, max_depth, min_samples_split, max_features, seed):
    n_rows = indptr.size - 1
    n_samp = 0
    for i in range(n_rows):
        if weight[i] > 0.0:
            n_samp += 1
    samples = np.empty(n_samp, dtype=np.int64)
    total_nnz = 0
    j = 0
    for i in range(n_rows):
        if weight[i] > 0.0:
            samples[j] = i
            j += 1
            total_nnz += indptr[i + 1] - indptr[i]

    n_val = n_classes if criterion == ENTROPY else 1
    cap = 2 * n_samp + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros((cap, n_val))
    n_node_samples = np.zeros(cap, dtype=np.int64)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_estart = np.empty(cap, dtype=np.int64)
    st_eend = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)

    # all entries of the sampled rows, sorted once by (feature, value); every
    # split partitions a node's segment stably, so child segments stay sorted
    ent_feat = np.empty(total_nnz, dtype=np.int64)
    ent_val = np.empty(total_nnz)
    ent_row = np.empty(total_nnz, dtype=np.int64)
    m = 0
    for q in range(n_samp):
        i = samples[q]
        for k in range(indptr[i], indptr[i + 1]):
            ent_feat[m] = indices[k]
            ent_val[m] = data[k]
            ent_row[m] = i
            m += 1
    o1 = np.argsort(ent_val, kind="mergesort")
    o2 = np.argsort(ent_feat[o1], kind="mergesort")
    order = o1[o2]
    sf = ent_feat[order]
    sv = ent_val[order]
    sr = ent_row[order]
    tf = np.empty(total_nnz, dtype=np.int64)
    tv = np.empty(total_nnz)
    tr = np.empty(total_nnz, dtype=np.int64)

    grp_start = np.empty(total_nnz + 1, dtype=np.int64)
    grp_end = np.empty(total_nnz + 1, dtype=np.int64)
    chosen = np.empty(total_nnz + 1, dtype=np.int64)
    row_val = np.zeros(n_rows)
    goes_left = np.zeros(n_rows, dtype=np.bool_)

    node_counts = np.zeros(max(n_classes, 1))
    left_counts = np.zeros(max(n_classes, 1))
    grp_counts = np.zeros(max(n_classes, 1))
    zero_counts = np.zeros(max(n_classes, 1))
    scratch = np.zeros(max(n_classes, 1))

    rng = np.zeros(1, dtype=np.uint64)
    rng[0] = np.uint64(seed)

    n_nodes = 1
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n_samp
    st_estart[0] = 0
    st_eend[0] = total_nnz
    st_depth[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        es = st_estart[top]
        ee = st_eend[top]
        depth = st_depth[top]
        n_node_samples[node] = end - start

        # node statistics
        w_node = 0.0
        s_node = 0.0
        node_counts[:] = 0.0
        rmin = np.inf
        rmax = -np.inf
        for q in range(start, end):
            i = samples[q]
            w_node += weight[i]
            if criterion == ENTROPY:
                node_counts[y_class[i]] += weight[i]
            else:
                s_node += weight[i] * y_reg[i]
                if y_reg[i] < rmin:
                    rmin = y_reg[i]
                if y_reg[i] > rmax:
                    rmax = y_reg[i]
        if criterion == ENTROPY:
            for c in range(n_classes):
                value[node, c] = node_counts[c]
            n_present = 0
            for c in range(n_classes):
                if node_counts[c] > 0.0:
                    n_present += 1
            pure = n_present <= 1
        else:
            value[node, 0] = s_node / w_node
            pure = rmin == rmax
        if pure or (end - start) < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        # feature groups that are not constant within the node
        n_grp = 0
        a = es
        n_in_node = end - start
        while a < ee:
            b = a
            while b < ee and sf[b] == sf[a]:
                b += 1
            n_zero = n_in_node - (b - a)
            if n_zero > 0 or sv[a] != sv[b - 1]:
                grp_start[n_grp] = a
                grp_end[n_grp] = b
                n_grp += 1
            a = b
        if n_grp == 0:
            continue

        n_eval = n_grp
        for g in range(n_grp):
            chosen[g] = g
        if max_features > 0 and n_grp > max_features:
            for g in range(max_features):
                r = g + np.int64(splitmix64(rng) % np.uint64(n_grp - g))
                tmp = chosen[g]
                chosen[g] = chosen[r]
                chosen[r] = tmp
            n_eval = max_features
            chosen[:n_eval] = np.sort(chosen[:n_eval])

        h_parent = 0.0
        if criterion == ENTROPY:
            h_parent = entropy_bits(node_counts, w_node)

        best_gain = -np.inf
        best_feat = -1
        best_thr = 0.0
        best_a = 0
        best_b = 0
        for e in range(n_eval):
            g = chosen[e]
            a = grp_start[g]
            b = grp_end[g]
            # statistics of the stored entries -> implicit zero block
            w_grp = 0.0
            s_grp = 0.0
            grp_counts[:] = 0.0
            z = a
            for k in range(a, b):
                i = sr[k]
                w_grp += weight[i]
                if criterion == ENTROPY:
                    grp_counts[y_class[i]] += weight[i]
                else:
                    s_grp += weight[i] * y_reg[i]
                if sv[k] < 0.0:
                    z = k + 1
            n_zero = n_in_node - (b - a)
            w_zero = w_node - w_grp
            s_zero = s_node - s_grp
            for c in range(n_classes):
                zero_counts[c] = node_counts[c] - grp_counts[c]

            w_left = 0.0
            s_left = 0.0
            left_counts[:] = 0.0
            idx = a
            zero_done = n_zero == 0
            has_prev = False
            prev = 0.0
            while True:
                if idx < z:
                    nxt = sv[idx]
                    is_zero = False
                elif not zero_done:
                    nxt = 0.0
                    is_zero = True
                elif idx < b:
                    nxt = sv[idx]
                    is_zero = False
                else:
                    break
                if has_prev:
                    if criterion == ENTROPY:
                        gain = _entropy_gain(h_parent, left_counts, node_counts, w_left, w_node, scratch)
                    else:
                        gain = _variance_gain(s_node, w_node, s_left, w_left)
                    if best_feat < 0 or gain > best_gain + TIE_RTOL * max(1.0, abs(best_gain)):
                        thr = prev + (nxt - prev) * 0.5
                        if thr >= nxt or not np.isfinite(thr):
                            thr = prev
                        best_gain = gain
                        best_feat = sf[a]
                        best_thr = thr
                        best_a = a
                        best_b = b
                if is_zero:
                    w_left += w_zero
                    s_left += s_zero
                    for c in range(n_classes):
                        left_counts[c] += zero_counts[c]
                    zero_done = True
                else:
                    while idx < b and sv[idx] == nxt:
                        i = sr[idx]
                        w_left += weight[i]
                        if criterion == ENTROPY:
                            left_counts[y_class[i]] += weight[i]
                        else:
                            s_left += weight[i] * y_reg[i]
                        idx += 1
                prev = nxt
                has_prev = True
        if best_feat < 0:
            continue

        for k in range(best_a, best_b):
            row_val[sr[k]] = sv[k]
        lo = start
        hi = end - 1
        while lo <= hi:
            if row_val[samples[lo]] <= best_thr:
                goes_left[samples[lo]] = True
                lo += 1
            else:
                goes_left[samples[lo]] = False
                tmp = samples[lo]
                samples[lo] = samples[hi]
                samples[hi] = tmp
                hi -= 1
        for k in range(best_a, best_b):
            row_val[sr[k]] = 0.0

        # stable partition of the entry segment: left rows first
        n_left_ent = 0
        for k in range(es, ee):
            if goes_left[sr[k]]:
                n_left_ent += 1
        pl = 0
        pr = n_left_ent
        for k in range(es, ee):
            if goes_left[sr[k]]:
                tf[pl] = sf[k]
                tv[pl] = sv[k]
                tr[pl] = sr[k]
                pl += 1
            else:
                tf[pr] = sf[k]
                tv[pr] = sv[k]
                tr[pr] = sr[k]
                pr += 1
        for k in range(ee - es):
            sf[es + k] = tf[k]
            sv[es + k] = tv[k]
            sr[es + k] = tr[k]

        feature[node] = best_feat
        threshold[node] = best_thr
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        left[node] = lid
        right[node] = rid
        # push right first so the left subtree is grown first
        st_node[top] = rid
        st_start[top] = lo
        st_end[top] = end
        st_estart[top] = es + n_left_ent
        st_eend[top] = ee
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lid
        st_start[top] = start
        st_end[top] = lo
        st_estart[top] = es
        st_eend[top] = es + n_left_ent
        st_depth[top] = depth + 1
        top += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), n_node_samples[:n_nodes].copy())


@numba.njit(cache=True)
def _row_value(indptr, indices, data, i, f):
    lo = indptr[i]
    hi = indptr[i + 1]
    end = hi
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < f:
            lo = mid + 1
        else:
            hi = mid
    if lo < end and indices[lo] == f:
        return data[lo]
    return 0.0


@numba.njit(cache=True)
def apply_tree(indptr, indices, data, feature, threshold, left, right):
    n = indptr.size - 1
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        node = 0
        while left[node] != -1:
            v = _row_value(indptr, indices, data, i, feature[node])
            node = left[node] if v <= threshold[node] else right[node]
        out[i] = node
    return out


@numba.njit(cache=True)
def forest_votes(indptr, indices, data, offsets, feature, threshold, left, right, node_vote, n_classes):
    """Vote counts per row for trees packed back to back; child ids are tree-local."""
    n = indptr.size - 1
    n_trees = offsets.size - 1
    votes = np.zeros((n, n_classes), dtype=np.int64)
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            node = 0
            while left[base + node] != -1:
                v = _row_value(indptr, indices, data, i, feature[base + node])
                node = left[base + node] if v <= threshold[base + node] else right[base + node]
            votes[i, node_vote[base + node]] += 1
    return votes
