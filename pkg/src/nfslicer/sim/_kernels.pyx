# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled twins of the pure-Python simulation kernels.

Same integer-only arithmetic and event ordering as ``kernels_py``;
either backend must produce bit-identical outputs.  See kernels_py for
the station model and tie rules.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef long long HUGE = <long long>1 << 62

CODE_BYPASS = 0
CODE_SLICED = 1
CODE_OCCUPIED = 2
CODE_BELOW_THRESHOLD = 3
CODE_EMPTY_SLICE = 4


def station_pass(t, ser, long long base, long long overhead, long long batch_max):
    cdef cnp.int64_t[::1] tv = np.ascontiguousarray(t, dtype=np.int64)
    cdef cnp.int64_t[::1] sv = np.ascontiguousarray(ser, dtype=np.int64)
    cdef Py_ssize_t n = tv.shape[0]
    out_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef long long prev_end = -HUGE
    cdef long long start, dur, end
    cdef Py_ssize_t i = 0, j, k
    while i < n:
        start = tv[i] + base
        if prev_end > start:
            start = prev_end
        j = i
        dur = overhead
        while j < n and j - i < batch_max and tv[j] + base <= start:
            dur += sv[j]
            j += 1
        end = start + dur
        for k in range(i, j):
            out[k] = end
        prev_end = end
        i = j
    return out_arr


def core_pass(t, ser, shard, int n_shards):
    cdef cnp.int64_t[::1] tv = np.ascontiguousarray(t, dtype=np.int64)
    cdef cnp.int64_t[::1] sv = np.ascontiguousarray(ser, dtype=np.int64)
    cdef cnp.int64_t[::1] sh = np.ascontiguousarray(shard, dtype=np.int64)
    cdef Py_ssize_t n = tv.shape[0]
    out_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    free_arr = np.full(n_shards, -HUGE, dtype=np.int64)
    cdef cnp.int64_t[::1] free = free_arr
    cdef Py_ssize_t i
    cdef long long start, end
    cdef Py_ssize_t s
    for i in range(n):
        s = <Py_ssize_t>sh[i]
        start = tv[i]
        if free[s] > start:
            start = free[s]
        end = start + sv[i]
        free[s] = end
        out[i] = end
    return out_arr


def path_pass(t1, stream, wire, cand, stored, code, shard, service,
              ser_pcie_full, ser_pcie_sliced, ser_mem_full, ser_mem_sliced,
              gen, ttl, slot_bytes, cursor,
              long long n_entries, long long ttl_init, int n_shards,
              long long pcie_base, long long pcie_overhead,
              long long pcie_batch_max,
              int use_mem, long long mem_base, long long hw_ns):
    cdef cnp.int64_t[::1] t1v = np.ascontiguousarray(t1, dtype=np.int64)
    cdef cnp.int8_t[::1] streamv = np.ascontiguousarray(stream, dtype=np.int8)
    cdef cnp.int64_t[::1] wirev = np.ascontiguousarray(wire, dtype=np.int64)
    cdef cnp.int64_t[::1] candv = np.ascontiguousarray(cand, dtype=np.int64)
    cdef cnp.int64_t[::1] storedv = np.ascontiguousarray(stored, dtype=np.int64)
    code_arr = np.array(code, dtype=np.int8, copy=True)
    cdef cnp.int8_t[::1] codev = code_arr
    cdef cnp.int64_t[::1] shardv = np.ascontiguousarray(shard, dtype=np.int64)
    cdef cnp.int64_t[::1] servicev = np.ascontiguousarray(service, dtype=np.int64)
    cdef cnp.int64_t[::1] spf = np.ascontiguousarray(ser_pcie_full, dtype=np.int64)
    cdef cnp.int64_t[::1] sps = np.ascontiguousarray(ser_pcie_sliced, dtype=np.int64)
    cdef cnp.int64_t[::1] smf = np.ascontiguousarray(ser_mem_full, dtype=np.int64)
    cdef cnp.int64_t[::1] sms = np.ascontiguousarray(ser_mem_sliced, dtype=np.int64)
    cdef cnp.int64_t[::1] genv = gen
    cdef cnp.int64_t[::1] ttlv = ttl
    cdef cnp.int64_t[::1] slot_bytesv = slot_bytes
    cdef cnp.int64_t[::1] cursorv = cursor

    cdef Py_ssize_t n = t1v.shape[0]

    pcie_size_arr = np.zeros(n, dtype=np.int64)
    slot_idx_arr = np.full(n, -1, dtype=np.int64)
    d5_arr = np.zeros(n, dtype=np.int64)
    t6_arr = np.zeros(n, dtype=np.int64)
    drop_arr = np.zeros(n, dtype=np.int8)
    out_size_arr = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] pcie_size = pcie_size_arr
    cdef cnp.int64_t[::1] slot_idx = slot_idx_arr
    cdef cnp.int64_t[::1] d5 = d5_arr
    cdef cnp.int64_t[::1] t6 = t6_arr
    cdef cnp.int8_t[::1] drop = drop_arr
    cdef cnp.int64_t[::1] out_size = out_size_arr

    scratch = np.zeros(6 * max(n, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] slot_gen = scratch[0:max(n, 1)]
    cdef cnp.int64_t[::1] ser1 = scratch[max(n, 1):2 * max(n, 1)]
    cdef cnp.int64_t[::1] serm = scratch[2 * max(n, 1):3 * max(n, 1)]
    cdef cnp.int64_t[::1] u1 = scratch[3 * max(n, 1):4 * max(n, 1)]
    cdef cnp.int64_t[::1] u3 = scratch[4 * max(n, 1):5 * max(n, 1)]
    cdef cnp.int64_t[::1] mu = scratch[5 * max(n, 1):6 * max(n, 1)]

    qarr = np.zeros(3 * max(n, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] q3 = qarr[0:max(n, 1)]
    cdef cnp.int64_t[::1] qmi = qarr[max(n, 1):2 * max(n, 1)]
    cdef cnp.int64_t[::1] qmo = qarr[2 * max(n, 1):3 * max(n, 1)]
    nxt_arr = np.full(max(n, 1), -1, dtype=np.int64)
    cdef cnp.int64_t[::1] nxt = nxt_arr

    carr = np.zeros(4 * max(n_shards, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] chead = carr[0:n_shards]
    cdef cnp.int64_t[::1] ctail = carr[n_shards:2 * n_shards]
    cdef cnp.int64_t[::1] cend = carr[2 * n_shards:3 * n_shards]
    cdef cnp.int64_t[::1] cpkt = carr[3 * n_shards:4 * n_shards]
    cdef Py_ssize_t s
    for s in range(n_shards):
        chead[s] = -1
        ctail[s] = -1
        cend[s] = HUGE
        cpkt[s] = -1

    cdef Py_ssize_t arr_ptr = 0, s1_head = 0, sliced_ptr = 0
    cdef long long s1_poll = HUGE, s1_end = HUGE, s1_start = 0
    cdef Py_ssize_t s1_b0 = 0, s1_b1 = 0
    cdef long long busy1 = 0

    cdef Py_ssize_t qmi_head = 0, qmi_tail = 0
    cdef long long mi_end = HUGE
    cdef Py_ssize_t mi_pkt = -1
    cdef Py_ssize_t qmo_head = 0, qmo_tail = 0
    cdef long long mo_end = HUGE
    cdef Py_ssize_t mo_pkt = -1

    cdef Py_ssize_t q3_head = 0, q3_tail = 0
    cdef long long s3_poll = HUGE, s3_end = HUGE, s3_start = 0
    cdef Py_ssize_t s3_b0 = 0, s3_b1 = 0
    cdef long long busy3 = 0

    cdef long long next_arrival = t1v[0] if n else HUGE
    cdef long long T, start, dur, head_u, delay
    cdef Py_ssize_t i, j, pos, cur, slot

    while True:
        T = next_arrival
        if s1_poll < T:
            T = s1_poll
        if s1_end < T:
            T = s1_end
        if mi_end < T:
            T = mi_end
        for s in range(n_shards):
            if cend[s] < T:
                T = cend[s]
        if mo_end < T:
            T = mo_end
        if s3_poll < T:
            T = s3_poll
        if s3_end < T:
            T = s3_end
        if T == HUGE:
            break

        # Phase a: completions, downstream first.
        if s3_end == T:
            for pos in range(s3_b0, s3_b1):
                i = <Py_ssize_t>q3[pos]
                d5[i] = T
                if codev[i] == 1:  # CODE_SLICED
                    slot = <Py_ssize_t>slot_idx[i]
                    if ttlv[slot] > 0 and genv[slot] == slot_gen[i]:
                        ttlv[slot] = 0
                        out_size[i] = wirev[i]
                    else:
                        drop[i] = 1
                    t6[i] = T + hw_ns
                else:
                    out_size[i] = pcie_size[i]
                    t6[i] = T
            busy3 += T - s3_start
            s3_end = HUGE
            if q3_head < q3_tail:
                head_u = u3[<Py_ssize_t>q3[q3_head]]
                s3_poll = head_u if head_u > T else T
        if mo_end == T:
            i = mo_pkt
            q3[q3_tail] = i
            u3[i] = T + pcie_base
            q3_tail += 1
            if s3_end == HUGE and s3_poll == HUGE:
                s3_poll = u3[i]
            if qmo_head < qmo_tail:
                i = <Py_ssize_t>qmo[qmo_head]
                qmo_head += 1
                start = mu[i] if mu[i] > T else T
                mo_end = start + serm[i]
                mo_pkt = i
            else:
                mo_end = HUGE
                mo_pkt = -1
        for s in range(n_shards):
            if cend[s] == T:
                # after core: memory hop or straight to host-out
                i = <Py_ssize_t>cpkt[s]
                if use_mem:
                    if mo_end == HUGE and qmo_head == qmo_tail:
                        mo_end = T + mem_base + serm[i]
                        mo_pkt = i
                    else:
                        qmo[qmo_tail] = i
                        mu[i] = T + mem_base
                        qmo_tail += 1
                else:
                    q3[q3_tail] = i
                    u3[i] = T + pcie_base
                    q3_tail += 1
                    if s3_end == HUGE and s3_poll == HUGE:
                        s3_poll = u3[i]
                if chead[s] != -1:
                    i = <Py_ssize_t>chead[s]
                    chead[s] = nxt[i]
                    if chead[s] == -1:
                        ctail[s] = -1
                    cend[s] = T + servicev[i]
                    cpkt[s] = i
                else:
                    cend[s] = HUGE
                    cpkt[s] = -1
        if mi_end == T:
            i = mi_pkt
            s = <Py_ssize_t>shardv[i]
            if cend[s] == HUGE and chead[s] == -1:
                cend[s] = T + servicev[i]
                cpkt[s] = i
            elif chead[s] == -1:
                chead[s] = i
                ctail[s] = i
            else:
                nxt[<Py_ssize_t>ctail[s]] = i
                ctail[s] = i
            if qmi_head < qmi_tail:
                i = <Py_ssize_t>qmi[qmi_head]
                qmi_head += 1
                start = mu[i] if mu[i] > T else T
                mi_end = start + serm[i]
                mi_pkt = i
            else:
                mi_end = HUGE
                mi_pkt = -1
        if s1_end == T:
            for i in range(s1_b0, s1_b1):
                if use_mem:
                    if mi_end == HUGE and qmi_head == qmi_tail:
                        mi_end = T + mem_base + serm[i]
                        mi_pkt = i
                    else:
                        qmi[qmi_tail] = i
                        mu[i] = T + mem_base
                        qmi_tail += 1
                else:
                    s = <Py_ssize_t>shardv[i]
                    if cend[s] == HUGE and chead[s] == -1:
                        cend[s] = T + servicev[i]
                        cpkt[s] = i
                    elif chead[s] == -1:
                        chead[s] = i
                        ctail[s] = i
                    else:
                        nxt[<Py_ssize_t>ctail[s]] = i
                        ctail[s] = i
            busy1 += T - s1_start
            s1_end = HUGE
            if s1_head < sliced_ptr:
                head_u = u1[s1_head]
                s1_poll = head_u if head_u > T else T

        # Phase b: arrivals (ingress slice) at T, in schedule order.
        while arr_ptr < n and t1v[arr_ptr] == T:
            i = arr_ptr
            arr_ptr += 1
            delay = 0
            if streamv[i] == 0 and candv[i] > 0:
                s = <Py_ssize_t>shardv[i]
                cur = <Py_ssize_t>cursorv[s]
                slot = s * n_entries + cur
                if ttlv[slot] > 0:
                    ttlv[slot] -= 1
                    codev[i] = 2  # CODE_OCCUPIED
                else:
                    genv[slot] += 1
                    ttlv[slot] = ttl_init
                    slot_bytesv[slot] = storedv[i]
                    codev[i] = 1  # CODE_SLICED
                    slot_idx[i] = slot
                    slot_gen[i] = genv[slot]
                    delay = hw_ns
                cursorv[s] = cur + 1 if cur + 1 < n_entries else 0
            if codev[i] == 1:
                pcie_size[i] = candv[i]
                ser1[i] = sps[i]
                serm[i] = sms[i]
            else:
                pcie_size[i] = wirev[i]
                ser1[i] = spf[i]
                serm[i] = smf[i]
            u1[i] = T + delay + pcie_base
            sliced_ptr = arr_ptr
            if s1_end == HUGE and s1_poll == HUGE:
                s1_poll = u1[i]
            next_arrival = t1v[arr_ptr] if arr_ptr < n else HUGE

        # Phase c: batch polls at T, downstream first.
        if s3_poll == T:
            pos = q3_head
            dur = pcie_overhead
            while (pos < q3_tail and pos - q3_head < pcie_batch_max
                   and u3[<Py_ssize_t>q3[pos]] <= T):
                dur += ser1[<Py_ssize_t>q3[pos]]
                pos += 1
            s3_b0 = q3_head
            s3_b1 = pos
            q3_head = pos
            s3_start = T
            s3_end = T + dur
            s3_poll = HUGE
        if s1_poll == T:
            j = s1_head
            dur = pcie_overhead
            while (j < sliced_ptr and j - s1_head < pcie_batch_max
                   and u1[j] <= T):
                dur += ser1[j]
                j += 1
            s1_b0 = s1_head
            s1_b1 = j
            s1_head = j
            s1_start = T
            s1_end = T + dur
            s1_poll = HUGE

    return (pcie_size_arr, slot_idx_arr, d5_arr, t6_arr, drop_arr,
            out_size_arr, code_arr,
            np.array([busy1, busy3], dtype=np.int64))
