# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sketch kernels.

Mirrors pipesketch._pure entry point for entry point; see that module for
the semantics.  Instrumentation hooks are not supported here, callers that
need them route through the pure backend.
"""

import numpy as np

NAME = "compiled"


def ss_run(long long[::1] slot_key, long long[::1] slot_val,
           long long[::1] kids, long long[::1] weights, long long num_keys):
    cdef Py_ssize_t m = slot_key.shape[0]
    cdef Py_ssize_t n = kids.shape[0]
    loc_arr = np.full(num_keys, -1, dtype=np.int64)
    cdef long long[::1] loc = loc_arr
    # binary min-heap of (value, slot) snapshots; stale entries are skipped
    # on pop (a counter only grows, so an entry is current iff it matches)
    heap_val_arr = np.empty(m + n, dtype=np.int64)
    heap_slot_arr = np.empty(m + n, dtype=np.int64)
    cdef long long[::1] hval = heap_val_arr
    cdef long long[::1] hslot = heap_slot_arr
    cdef Py_ssize_t hsize = 0
    cdef Py_ssize_t next_free = m
    cdef Py_ssize_t i, s, c, parent, child
    cdef long long kid, w, v, vs, lv, ls

    for i in range(m):
        if slot_key[i] >= 0:
            loc[slot_key[i]] = i
            hval[hsize] = slot_val[i]
            hslot[hsize] = i
            hsize += 1
        elif next_free == m:
            next_free = i
    # heapify (sift down from last parent)
    for i in range(hsize // 2 - 1, -1, -1):
        c = i
        v = hval[c]
        vs = hslot[c]
        while True:
            child = 2 * c + 1
            if child >= hsize:
                break
            if child + 1 < hsize and (hval[child + 1] < hval[child] or
                    (hval[child + 1] == hval[child] and hslot[child + 1] < hslot[child])):
                child += 1
            if hval[child] < v or (hval[child] == v and hslot[child] < vs):
                hval[c] = hval[child]
                hslot[c] = hslot[child]
                c = child
            else:
                break
        hval[c] = v
        hslot[c] = vs

    for i in range(n):
        kid = kids[i]
        w = weights[i]
        s = loc[kid]
        if s >= 0:
            slot_val[s] += w
            v = slot_val[s]
        elif next_free < m:
            s = next_free
            slot_key[s] = kid
            slot_val[s] = w
            loc[kid] = s
            next_free += 1
            v = w
        else:
            while True:
                # pop min, skipping stale entries
                v = hval[0]
                s = hslot[0]
                hsize -= 1
                if hsize > 0:
                    lv = hval[hsize]
                    ls = hslot[hsize]
                    c = 0
                    while True:
                        child = 2 * c + 1
                        if child >= hsize:
                            break
                        if child + 1 < hsize and (hval[child + 1] < hval[child] or
                                (hval[child + 1] == hval[child] and hslot[child + 1] < hslot[child])):
                            child += 1
                        if hval[child] < lv or (hval[child] == lv and hslot[child] < ls):
                            hval[c] = hval[child]
                            hslot[c] = hslot[child]
                            c = child
                        else:
                            break
                    hval[c] = lv
                    hslot[c] = ls
                if v == slot_val[s]:
                    break
            loc[slot_key[s]] = -1
            slot_key[s] = kid
            slot_val[s] = v + w
            loc[kid] = s
            v = slot_val[s]
        # push (v, s)
        c = hsize
        hsize += 1
        while c > 0:
            parent = (c - 1) // 2
            if hval[parent] > v or (hval[parent] == v and hslot[parent] > s):
                hval[c] = hval[parent]
                hslot[c] = hslot[parent]
                c = parent
            else:
                break
        hval[c] = v
        hslot[c] = s


def hp_pipe_run(long long[::1] slot_key, long long[::1] slot_val,
                signed char[::1] valid, long long[:, ::1] pos,
                long long[::1] kids, long long[::1] weights,
                long long seq0, long long sample_every,
                long long[::1] samples_out):
    cdef Py_ssize_t d = pos.shape[0]
    cdef Py_ssize_t n = kids.shape[0]
    cdef long long evicted_mass = 0
    cdef long long evict_count = 0
    cdef Py_ssize_t n_samples = 0
    cdef Py_ssize_t i, stage
    cdef long long kid, w, p, ckey, cval, tk, tv
    cdef bint settled

    for i in range(n):
        kid = kids[i]
        w = weights[i]
        p = pos[0, kid]
        if valid[p]:
            if slot_key[p] == kid:
                slot_val[p] += w
                continue
            ckey = slot_key[p]
            cval = slot_val[p]
            slot_key[p] = kid
            slot_val[p] = w
        else:
            slot_key[p] = kid
            slot_val[p] = w
            valid[p] = 1
            continue

        settled = False
        for stage in range(1, d):
            p = pos[stage, ckey]
            if valid[p]:
                if slot_key[p] == ckey:
                    slot_val[p] += cval
                    settled = True
                    break
                if slot_val[p] < cval:
                    tk = slot_key[p]
                    tv = slot_val[p]
                    slot_key[p] = ckey
                    slot_val[p] = cval
                    ckey = tk
                    cval = tv
            else:
                slot_key[p] = ckey
                slot_val[p] = cval
                valid[p] = 1
                settled = True
                break
        if not settled:
            evicted_mass += cval
            evict_count += 1
            if sample_every > 0 and (seq0 + i) % sample_every == 0:
                samples_out[n_samples] = cval
                n_samples += 1

    return evicted_mass, evict_count, n_samples


def hp_parallel_run(long long[::1] slot_key, long long[::1] slot_val,
                    signed char[::1] valid, long long[:, ::1] pos,
                    long long[::1] kids, long long[::1] weights,
                    long long seq0, bint record,
                    long long[::1] rep_seq, long long[::1] rep_min,
                    long long[::1] rep_val, long long[::1] rep_kid):
    cdef Py_ssize_t d = pos.shape[0]
    cdef Py_ssize_t m = slot_key.shape[0]
    cdef Py_ssize_t n = kids.shape[0]
    cdef Py_ssize_t i, stage
    cdef long long kid, w, p, hit, empty, min_pos, min_val
    cdef long long occupied = 0
    cdef long long fill_seq = -1
    cdef Py_ssize_t n_reps = 0

    for i in range(m):
        if valid[i]:
            occupied += 1

    for i in range(n):
        kid = kids[i]
        w = weights[i]
        hit = -1
        empty = -1
        min_pos = -1
        min_val = 0
        for stage in range(d):
            p = pos[stage, kid]
            if not valid[p]:
                if empty < 0:
                    empty = p
            elif slot_key[p] == kid:
                hit = p
                break
            elif min_pos < 0 or slot_val[p] < min_val:
                min_pos = p
                min_val = slot_val[p]
        if hit >= 0:
            slot_val[hit] += w
        elif empty >= 0:
            slot_key[empty] = kid
            slot_val[empty] = w
            valid[empty] = 1
            occupied += 1
            if occupied == m:
                fill_seq = seq0 + i
        else:
            if record:
                rep_seq[n_reps] = seq0 + i
                rep_min[n_reps] = min_val
                rep_val[n_reps] = min_val + w
                rep_kid[n_reps] = kid
            n_reps += 1
            slot_key[min_pos] = kid
            slot_val[min_pos] = min_val + w

    return n_reps, occupied, fill_seq


def sh_run(long long[::1] held_key, long long[::1] held_val, Py_ssize_t n_held,
           long long[::1] kids, long long[::1] weights,
           double[::1] uniforms, double p_s):
    cdef Py_ssize_t capacity = held_key.shape[0]
    cdef Py_ssize_t n = kids.shape[0]
    cdef long long num_keys = 0
    cdef Py_ssize_t i
    cdef long long kid, w, s
    cdef long long dropped = 0
    cdef double admit_p

    for i in range(n):
        if kids[i] >= num_keys:
            num_keys = kids[i] + 1
    for i in range(n_held):
        if held_key[i] >= num_keys:
            num_keys = held_key[i] + 1
    loc_arr = np.full(num_keys, -1, dtype=np.int64)
    cdef long long[::1] loc = loc_arr
    for i in range(n_held):
        loc[held_key[i]] = i

    for i in range(n):
        kid = kids[i]
        w = weights[i]
        s = loc[kid]
        if s >= 0:
            held_val[s] += w
            continue
        if w == 1:
            admit_p = p_s
        else:
            admit_p = 1.0 - (1.0 - p_s) ** w
        if uniforms[i] < admit_p:
            if n_held < capacity:
                held_key[n_held] = kid
                held_val[n_held] = w
                loc[kid] = n_held
                n_held += 1
            else:
                dropped += 1

    return n_held, dropped


def cms_run(long long[:, ::1] rows, long long[::1] cache_key,
            long long[::1] cache_seed, long long[::1] cache_exact,
            long long[:, ::1] pos_rows, long long[::1] pos_cache,
            long long[::1] kids, long long[::1] weights, long long threshold):
    cdef Py_ssize_t r = rows.shape[0]
    cdef Py_ssize_t n = kids.shape[0]
    cdef Py_ssize_t i, j
    cdef long long kid, w, cpos, est, v
    cdef long long admitted = 0
    cdef long long collisions = 0

    for i in range(n):
        kid = kids[i]
        w = weights[i]
        cpos = pos_cache[kid]
        if cache_key[cpos] == kid:
            cache_exact[cpos] += w
            continue
        est = -1
        for j in range(r):
            v = rows[j, pos_rows[j, kid]] + w
            rows[j, pos_rows[j, kid]] = v
            if est < 0 or v < est:
                est = v
        if est >= threshold:
            if cache_key[cpos] < 0:
                cache_key[cpos] = kid
                cache_seed[cpos] = est
                cache_exact[cpos] = 0
                admitted += 1
            else:
                collisions += 1

    return admitted, collisions
