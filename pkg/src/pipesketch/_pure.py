"""Pure-Python sketch kernels.

Reference implementations of the per-packet update loops.  The compiled
module ``pipesketch._kern`` mirrors these entry points with identical
semantics; this module is also the fallback backend when the extension is
not built.  Only the pure versions support the optional instrumentation
hooks (outcomes, access logs, contributor sets) used by tests and the
slower diagnostic statistics.

State lives in the caller's numpy arrays and is mutated in place.  Key ids
are dense ints from a KeySpace; -1 marks an empty slot.
"""

from __future__ import annotations

import heapq

NAME = "python"


def ss_run(slot_key, slot_val, kids, weights, num_keys, contributors=None):
    """Space saving: hit increments, miss fills an empty slot, otherwise the
    minimum-valued slot (ties: lowest index) is replaced and keeps its count.

    ``num_keys`` bounds the key-id range (used by the compiled backend for
    its lookup table; ignored here).  ``contributors``, when given, is a
    list of per-slot sets accumulating the distinct key ids that ever
    incremented each counter.
    """
    m = len(slot_key)
    keys = slot_key.tolist()
    vals = slot_val.tolist()
    loc = {}
    heap = []
    next_free = m
    for s in range(m):
        if keys[s] >= 0:
            loc[keys[s]] = s
            heap.append((vals[s], s))
        elif next_free == m:
            next_free = s
    heapq.heapify(heap)
    push = heapq.heappush
    pop = heapq.heappop

    for kid, w in zip(kids.tolist(), weights.tolist()):
        s = loc.get(kid)
        if s is not None:
            vals[s] += w
            push(heap, (vals[s], s))
        elif next_free < m:
            s = next_free
            keys[s] = kid
            vals[s] = w
            loc[kid] = s
            push(heap, (w, s))
            next_free += 1
        else:
            # discard stale heap entries (counters only grow, so an entry
            # is current iff it matches the slot's value)
            while heap[0][0] != vals[heap[0][1]]:
                pop(heap)
            v, s = pop(heap)
            del loc[keys[s]]
            keys[s] = kid
            vals[s] = v + w
            loc[kid] = s
            push(heap, (vals[s], s))
        if contributors is not None:
            contributors[s].add(kid)

    slot_key[:] = keys
    slot_val[:] = vals


def hp_pipe_run(slot_key, slot_val, valid, pos, kids, weights,
                seq0, sample_every, samples_out,
                outcomes=None, access_log=None):
    """Pipelined rolling-minimum update.

    Stage 0 always installs the incoming key (displacing the occupant into
    carried state); stages 1..d-1 hash the carried key and keep the larger
    of slot and carried, the survivor of the last stage being evicted
    entirely.  Returns (evicted_mass, evict_count, n_samples); sampled
    eviction counts (packets at seq % sample_every == 0 that ended in a
    full eviction) are written to samples_out.
    """
    d = pos.shape[0]
    keys = slot_key.tolist()
    vals = slot_val.tolist()
    ok = valid.tolist()
    posl = pos.tolist()
    pos0 = posl[0]
    evicted_mass = 0
    evict_count = 0
    n_samples = 0

    for i, (kid, w) in enumerate(zip(kids.tolist(), weights.tolist())):
        log = [] if access_log is not None else None
        p = pos0[kid]
        if ok[p]:
            if keys[p] == kid:
                vals[p] += w
                if log is not None:
                    log.append((0, 1, 1))
                    access_log.append(log)
                if outcomes is not None:
                    outcomes.append(("none",))
                continue
            ckey = keys[p]
            cval = vals[p]
            keys[p] = kid
            vals[p] = w
            if log is not None:
                log.append((0, 1, 1))
        else:
            keys[p] = kid
            vals[p] = w
            ok[p] = 1
            if log is not None:
                log.append((0, 1, 1))
                access_log.append(log)
            if outcomes is not None:
                outcomes.append(("none",))
            continue

        outcome = None
        for stage in range(1, d):
            p = posl[stage][ckey]
            if ok[p]:
                if keys[p] == ckey:
                    vals[p] += cval
                    if log is not None:
                        log.append((stage, 1, 1))
                    outcome = ("merged", stage)
                    break
                if vals[p] < cval:
                    keys[p], ckey = ckey, keys[p]
                    vals[p], cval = cval, vals[p]
                    if log is not None:
                        log.append((stage, 1, 1))
                elif log is not None:
                    log.append((stage, 1, 0))
            else:
                keys[p] = ckey
                vals[p] = cval
                ok[p] = 1
                if log is not None:
                    log.append((stage, 1, 1))
                outcome = ("none",)
                break
        else:
            evicted_mass += cval
            evict_count += 1
            outcome = ("evicted", ckey, cval)
            if sample_every and (seq0 + i) % sample_every == 0:
                samples_out[n_samples] = cval
                n_samples += 1
        if log is not None:
            access_log.append(log)
        if outcomes is not None:
            outcomes.append(outcome)

    slot_key[:] = keys
    slot_val[:] = vals
    valid[:] = ok
    return evicted_mass, evict_count, n_samples


def hp_parallel_run(slot_key, slot_val, valid, pos, kids, weights,
                    seq0, record, rep_seq, rep_min, rep_val, rep_kid):
    """Probe-all-stages variant: one slot per stage, hit increments, first
    empty (lowest stage) takes a new key, otherwise the probed minimum
    (ties: lowest stage) is replaced and keeps its count.

    With ``record`` set, each replacement logs (absolute seq, probed min,
    installed value, key id).  Returns (n_replacements, occupied, fill_seq)
    where fill_seq is the absolute seq at which the table became full during
    this batch (-1 if it did not).
    """
    d = pos.shape[0]
    m = len(slot_key)
    keys = slot_key.tolist()
    vals = slot_val.tolist()
    ok = valid.tolist()
    posl = pos.tolist()
    occupied = sum(ok)
    fill_seq = -1
    n_reps = 0

    for i, (kid, w) in enumerate(zip(kids.tolist(), weights.tolist())):
        hit = -1
        empty = -1
        min_pos = -1
        min_val = 0
        for stage in range(d):
            p = posl[stage][kid]
            if not ok[p]:
                if empty < 0:
                    empty = p
            elif keys[p] == kid:
                hit = p
                break
            elif min_pos < 0 or vals[p] < min_val:
                min_pos = p
                min_val = vals[p]
        if hit >= 0:
            vals[hit] += w
        elif empty >= 0:
            keys[empty] = kid
            vals[empty] = w
            ok[empty] = 1
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
            keys[min_pos] = kid
            vals[min_pos] = min_val + w

    slot_key[:] = keys
    slot_val[:] = vals
    valid[:] = ok
    return n_reps, occupied, fill_seq


def sh_run(held_key, held_val, n_held, kids, weights, uniforms, p_s):
    """Sample and hold: held flows count every packet; unheld packets are
    admitted with probability 1 - (1-p_s)^weight while capacity remains.

    ``uniforms`` supplies one pre-drawn uniform per packet position (drawn
    whether or not the packet needs one, so batch splits are reproducible).
    Returns (n_held, dropped_full).
    """
    capacity = len(held_key)
    keys = held_key.tolist()
    vals = held_val.tolist()
    loc = {keys[i]: i for i in range(n_held)}
    dropped = 0

    for i, (kid, w) in enumerate(zip(kids.tolist(), weights.tolist())):
        s = loc.get(kid)
        if s is not None:
            vals[s] += w
            continue
        admit_p = p_s if w == 1 else 1.0 - (1.0 - p_s) ** w
        if uniforms[i] < admit_p:
            if n_held < capacity:
                keys[n_held] = kid
                vals[n_held] = w
                loc[kid] = n_held
                n_held += 1
            else:
                dropped += 1

    held_key[:] = keys
    held_val[:] = vals
    return n_held, dropped


def cms_run(rows, cache_key, cache_seed, cache_exact,
            pos_rows, pos_cache, kids, weights, threshold):
    """Count-min sketch with a heavy-flow cache.

    Cached flows are counted exactly and bypass the sketch.  Other packets
    update every row; when the min-row estimate reaches the threshold the
    flow tries to enter the cache at its hashed slot, losing to any
    pre-existing occupant.  The cache entry stores the estimate at admission
    and the exact count since.  Returns (admitted, collisions).
    """
    r = rows.shape[0]
    rowsl = rows.tolist()
    ckeys = cache_key.tolist()
    cseed = cache_seed.tolist()
    cexact = cache_exact.tolist()
    prows = pos_rows.tolist()
    pcache = pos_cache.tolist()
    admitted = 0
    collisions = 0

    for kid, w in zip(kids.tolist(), weights.tolist()):
        cpos = pcache[kid]
        if ckeys[cpos] == kid:
            cexact[cpos] += w
            continue
        est = None
        for j in range(r):
            row = rowsl[j]
            idx = prows[j][kid]
            row[idx] += w
            if est is None or row[idx] < est:
                est = row[idx]
        if est >= threshold:
            if ckeys[cpos] < 0:
                ckeys[cpos] = kid
                cseed[cpos] = est
                cexact[cpos] = 0
                admitted += 1
            else:
                collisions += 1

    rows[:] = rowsl
    cache_key[:] = ckeys
    cache_seed[:] = cseed
    cache_exact[:] = cexact
    return admitted, collisions
