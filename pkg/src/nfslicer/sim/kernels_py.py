"""Pure-Python simulation kernels.

The compiled extension (``_kernels``) implements the same functions
with the same integer-only arithmetic; either backend must produce
bit-identical results.  All times are int64 nanoseconds and every
float-to-int conversion happens in the driver before a kernel runs.

Station model
-------------
A station is one server with a FIFO queue.  A packet becomes eligible
``base`` ns after entering (link propagation), service moves its bytes
at the station bandwidth.  With ``batch_max`` 1 and zero overhead the
departure law is

    dep = max(arrival + base, previous departure) + serialization

A batch station (``batch_max`` > 1) models polled DMA: whenever the
server is free it takes every eligible queued packet up to the cap,
spends ``overhead`` plus the sum of their serialization times, and
completes them all at the batch end.

Tie rules at one instant: completions fire downstream-first, then
packet arrivals in schedule order, then batch polls.  A server freed
at T can start work arriving at T.
"""

from __future__ import annotations

import numpy as np

HUGE = 1 << 62


def station_pass(t, ser, base, overhead, batch_max):
    """Run one station over packets sorted by arrival time.

    ``t`` and ``ser`` are int64 arrays; returns int64 departures in the
    same order (non-decreasing).
    """
    n = len(t)
    out = [0] * n
    tl = t.tolist()
    sl = ser.tolist()
    prev_end = -HUGE
    i = 0
    while i < n:
        start = tl[i] + base
        if prev_end > start:
            start = prev_end
        j = i
        dur = overhead
        while j < n and j - i < batch_max and tl[j] + base <= start:
            dur += sl[j]
            j += 1
        end = start + dur
        for k in range(i, j):
            out[k] = end
        prev_end = end
        i = j
    return np.array(out, dtype=np.int64)


def core_pass(t, ser, shard, n_shards):
    """Per-shard single-server queues (one core per shard)."""
    n = len(t)
    out = [0] * n
    tl = t.tolist()
    sl = ser.tolist()
    sh = shard.tolist()
    free = [-HUGE] * n_shards
    for i in range(n):
        s = sh[i]
        start = tl[i]
        if free[s] > start:
            start = free[s]
        end = start + sl[i]
        free[s] = end
        out[i] = end
    return np.array(out, dtype=np.int64)


# Slice outcome codes.  0/3/4 are preset by the driver; the kernel
# assigns 1/2 to packets that engage the tables.
CODE_BYPASS = 0
CODE_SLICED = 1
CODE_OCCUPIED = 2
CODE_BELOW_THRESHOLD = 3
CODE_EMPTY_SLICE = 4


def path_pass(t1, stream, wire, cand, stored, code, shard, service,
              ser_pcie_full, ser_pcie_sliced, ser_mem_full, ser_mem_sliced,
              gen, ttl, slot_bytes, cursor,
              n_entries, ttl_init, n_shards,
              pcie_base, pcie_overhead, pcie_batch_max,
              use_mem, mem_base, hw_ns):
    """NIC-to-NIC path: slice, host transfer, core, transfer back, splice.

    Packets arrive (sorted, ties in array order) at ``t1``; each is
    sliced against the shard tables on arrival, crosses the host DMA
    station (plus a memory station per direction when ``use_mem``),
    queues on its shard's core for ``service`` ns, crosses back, and is
    spliced at the batch end of the return DMA.  Slice and splice
    events interleave in simulated time, so a table slot freed by a
    splice is visible to every later slice, exactly as on the NIC.

    Returns (pcie_size, slot_idx, d5, t6, drop, out_size, busy) where
    ``d5`` is the return-DMA departure, ``t6`` adds the optional table
    access latency, ``drop`` marks failed splices and ``busy`` holds
    the [host-in, host-out] station busy times.
    """
    n = len(t1)
    t1 = t1.tolist()
    stream_l = stream.tolist()
    wire_l = wire.tolist()
    cand_l = cand.tolist()
    stored_l = stored.tolist()
    code_l = code.tolist()
    shard_l = shard.tolist()
    service_l = service.tolist()
    spf = ser_pcie_full.tolist()
    sps = ser_pcie_sliced.tolist()
    smf = ser_mem_full.tolist()
    sms = ser_mem_sliced.tolist()
    gen_l = gen.tolist()
    ttl_l = ttl.tolist()
    slot_bytes_l = slot_bytes.tolist()
    cursor_l = cursor.tolist()

    pcie_size = [0] * n
    slot_idx = [-1] * n
    slot_gen = [0] * n
    ser1 = [0] * n      # host-bound serialization per packet
    serm = [0] * n      # memory-hop serialization per packet
    u1 = [0] * n        # eligibility time at the host-in station
    d5 = [0] * n
    t6 = [0] * n
    drop = [0] * n
    out_size = [0] * n

    # Host-in station: queue is the packet order itself.
    arr_ptr = 0          # next packet to slice
    s1_head = 0          # first queued, s1_head..sliced_ptr are waiting
    sliced_ptr = 0
    s1_poll = HUGE
    s1_end = HUGE
    s1_b0 = s1_b1 = 0
    s1_start = 0
    busy1 = 0

    # Memory stations (FIFO, batch 1).
    qmi = [0] * n
    qmi_head = qmi_tail = 0
    mi_end = HUGE
    mi_pkt = -1
    mi_u = [0] * n
    qmo = [0] * n
    qmo_head = qmo_tail = 0
    mo_end = HUGE
    mo_pkt = -1
    mo_u = [0] * n

    # Cores: one linked-list queue per shard.
    nxt = [-1] * n
    chead = [-1] * n_shards
    ctail = [-1] * n_shards
    cend = [HUGE] * n_shards
    cpkt = [-1] * n_shards

    # Host-out station: explicit ring in insertion order.
    q3 = [0] * n
    u3 = [0] * n
    q3_head = q3_tail = 0
    s3_poll = HUGE
    s3_end = HUGE
    s3_b0 = s3_b1 = 0
    s3_start = 0
    busy3 = 0

    def core_enqueue(i, now):
        s = shard_l[i]
        if cend[s] == HUGE and chead[s] == -1:
            cend[s] = now + service_l[i]
            cpkt[s] = i
        elif chead[s] == -1:
            chead[s] = ctail[s] = i
        else:
            nxt[ctail[s]] = i
            ctail[s] = i

    def s3_enqueue(i, now):
        nonlocal q3_tail, s3_poll
        q3[q3_tail] = i
        u3[i] = now + pcie_base
        q3_tail += 1
        if s3_end == HUGE and s3_poll == HUGE:
            s3_poll = u3[i]

    def after_core(i, now):
        nonlocal qmo_tail, mo_end, mo_pkt
        if use_mem:
            if mo_end == HUGE and qmo_head == qmo_tail:
                start = now + mem_base
                mo_end = start + serm[i]
                mo_pkt = i
            else:
                qmo[qmo_tail] = i
                mo_u[i] = now + mem_base
                qmo_tail += 1
        else:
            s3_enqueue(i, now)

    def after_s1(i, now):
        nonlocal qmi_tail, mi_end, mi_pkt
        if use_mem:
            if mi_end == HUGE and qmi_head == qmi_tail:
                start = now + mem_base
                mi_end = start + serm[i]
                mi_pkt = i
            else:
                qmi[qmi_tail] = i
                mi_u[i] = now + mem_base
                qmi_tail += 1
        else:
            core_enqueue(i, now)

    next_arrival = t1[0] if n else HUGE
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
                i = q3[pos]
                d5[i] = T
                if code_l[i] == CODE_SLICED:
                    slot = slot_idx[i]
                    if ttl_l[slot] > 0 and gen_l[slot] == slot_gen[i]:
                        ttl_l[slot] = 0
                        out_size[i] = wire_l[i]
                    else:
                        drop[i] = 1
                    t6[i] = T + hw_ns
                else:
                    out_size[i] = pcie_size[i]
                    t6[i] = T
            busy3 += T - s3_start
            s3_end = HUGE
            if q3_head < q3_tail:
                head_u = u3[q3[q3_head]]
                s3_poll = head_u if head_u > T else T
        if mo_end == T:
            s3_enqueue(mo_pkt, T)
            if qmo_head < qmo_tail:
                i = qmo[qmo_head]
                qmo_head += 1
                start = mo_u[i] if mo_u[i] > T else T
                mo_end = start + serm[i]
                mo_pkt = i
            else:
                mo_end = HUGE
                mo_pkt = -1
        for s in range(n_shards):
            if cend[s] == T:
                after_core(cpkt[s], T)
                if chead[s] != -1:
                    i = chead[s]
                    chead[s] = nxt[i]
                    if chead[s] == -1:
                        ctail[s] = -1
                    cend[s] = T + service_l[i]
                    cpkt[s] = i
                else:
                    cend[s] = HUGE
                    cpkt[s] = -1
        if mi_end == T:
            core_enqueue(mi_pkt, T)
            if qmi_head < qmi_tail:
                i = qmi[qmi_head]
                qmi_head += 1
                start = mi_u[i] if mi_u[i] > T else T
                mi_end = start + serm[i]
                mi_pkt = i
            else:
                mi_end = HUGE
                mi_pkt = -1
        if s1_end == T:
            for i in range(s1_b0, s1_b1):
                after_s1(i, T)
            busy1 += T - s1_start
            s1_end = HUGE
            if s1_head < sliced_ptr:
                head_u = u1[s1_head]
                s1_poll = head_u if head_u > T else T

        # Phase b: arrivals (ingress slice) at T, in schedule order.
        while arr_ptr < n and t1[arr_ptr] == T:
            i = arr_ptr
            arr_ptr += 1
            delay = 0
            if stream_l[i] == 0 and cand_l[i] > 0:
                s = shard_l[i]
                cur = cursor_l[s]
                slot = s * n_entries + cur
                if ttl_l[slot] > 0:
                    ttl_l[slot] -= 1
                    code_l[i] = CODE_OCCUPIED
                else:
                    gen_l[slot] += 1
                    ttl_l[slot] = ttl_init
                    slot_bytes_l[slot] = stored_l[i]
                    code_l[i] = CODE_SLICED
                    slot_idx[i] = slot
                    slot_gen[i] = gen_l[slot]
                    delay = hw_ns
                cursor_l[s] = cur + 1 if cur + 1 < n_entries else 0
            if code_l[i] == CODE_SLICED:
                pcie_size[i] = cand_l[i]
                ser1[i] = sps[i]
                serm[i] = sms[i]
            else:
                pcie_size[i] = wire_l[i]
                ser1[i] = spf[i]
                serm[i] = smf[i]
            u1[i] = T + delay + pcie_base
            sliced_ptr = arr_ptr
            if s1_end == HUGE and s1_poll == HUGE:
                s1_poll = u1[i]
            next_arrival = t1[arr_ptr] if arr_ptr < n else HUGE

        # Phase c: batch polls at T, downstream first.
        if s3_poll == T:
            pos = q3_head
            dur = pcie_overhead
            while (pos < q3_tail and pos - q3_head < pcie_batch_max
                   and u3[q3[pos]] <= T):
                dur += ser1[q3[pos]]
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

    np.copyto(gen, np.array(gen_l, dtype=np.int64))
    np.copyto(ttl, np.array(ttl_l, dtype=np.int64))
    np.copyto(slot_bytes, np.array(slot_bytes_l, dtype=np.int64))
    np.copyto(cursor, np.array(cursor_l, dtype=np.int64))
    return (np.array(pcie_size, dtype=np.int64),
            np.array(slot_idx, dtype=np.int64),
            np.array(d5, dtype=np.int64),
            np.array(t6, dtype=np.int64),
            np.array(drop, dtype=np.int8),
            np.array(out_size, dtype=np.int64),
            np.array(code_l, dtype=np.int8),
            np.array([busy1, busy3], dtype=np.int64))
