"""Pure-Python window kernel; the reference for ``_kernel.pyx``.

Both implementations perform the same floating-point operations in the same
order, so their outputs are bit-identical.

Within a slice, the airtime is shared equally among the flows whose head
packet has arrived (fluid round-robin): with ``k`` such flows each one
transmits at ``rate / k``. Time advances from event to event: a packet
completion, an arrival at an idle head, or the end of the slot.
"""


def run_window(members, member_offsets, rate_bps, inst_rate, arr_times, arr_offsets,
               q_arr, q_rem, q_head, q_len, window_start, slot_duration, n_slots,
               packet_bits, literal, bits_out, completed_out, dropped_out, lat_out,
               slot_bits, slot_qlen):
    n = len(rate_bps)
    cap = q_arr.shape[1]
    members = members.tolist()
    moff = member_offsets.tolist()
    rate = rate_bps.tolist()
    inst = inst_rate.tolist()
    times = arr_times.tolist()
    aoff = arr_offsets.tolist()
    qa = q_arr.tolist()
    qr = q_rem.tolist()
    head = q_head.tolist()
    qlen = q_len.tolist()
    bits = [0.0] * n
    done = [0] * n
    drop = [0] * n
    lat = [-1.0] * n
    sbits = [[0.0] * n for _ in range(n_slots)]
    sqlen = [[0] * n for _ in range(n_slots)]
    ptr = aoff[:n]
    tol = 1e-9 * packet_bits

    for s in range(n_slots):
        slot_start = window_start + s * slot_duration
        slot_end = slot_start + slot_duration
        for f in range(n):
            end = aoff[f + 1]
            p = ptr[f]
            while p < end and times[p] < slot_end:
                if qlen[f] < cap:
                    tail = (head[f] + qlen[f]) % cap
                    qa[f][tail] = times[p]
                    qr[f][tail] = packet_bits
                    qlen[f] += 1
                else:
                    drop[f] += 1
                p += 1
            ptr[f] = p
            sqlen[s][f] = qlen[f]

        for m in range(3):
            lo = moff[m]
            hi = moff[m + 1]
            clock = slot_start
            while clock < slot_end:
                active = 0
                next_arr = slot_end
                for j in range(lo, hi):
                    f = members[j]
                    if qlen[f] > 0 and rate[f] > 0.0:
                        a = qa[f][head[f]]
                        if a <= clock:
                            active += 1
                        elif a < next_arr:
                            next_arr = a
                if active == 0:
                    if next_arr < slot_end:
                        clock = next_arr
                        continue
                    break
                dt = next_arr - clock
                for j in range(lo, hi):
                    f = members[j]
                    if qlen[f] > 0 and rate[f] > 0.0 and qa[f][head[f]] <= clock:
                        need = qr[f][head[f]] * active / rate[f]
                        if need < dt:
                            dt = need
                if clock + dt >= next_arr:
                    new_clock = next_arr
                else:
                    new_clock = clock + dt
                for j in range(lo, hi):
                    f = members[j]
                    if qlen[f] > 0 and rate[f] > 0.0:
                        h = head[f]
                        if qa[f][h] > clock:
                            continue
                        served = dt * rate[f] / active
                        if qr[f][h] - served <= tol:
                            served = qr[f][h]
                            qr[f][h] = 0.0
                            bits[f] += served
                            sbits[s][f] += served
                            # Sojourn time; the literal form splits it into a
                            # wait plus one full-rate packet transmission.
                            if literal:
                                wait = new_clock - packet_bits / rate[f] - qa[f][h]
                                if wait < 0.0:
                                    wait = 0.0
                                ell = wait * 1000.0 / packet_bits + 1.0 / (inst[f] * packet_bits)
                            else:
                                ell = (new_clock - qa[f][h]) * 1000.0
                            if ell > lat[f]:
                                lat[f] = ell
                            done[f] += 1
                            head[f] = (h + 1) % cap
                            qlen[f] -= 1
                        else:
                            qr[f][h] -= served
                            bits[f] += served
                            sbits[s][f] += served
                clock = new_clock

    q_arr[:] = qa
    q_rem[:] = qr
    q_head[:] = head
    q_len[:] = qlen
    bits_out[:] = bits
    completed_out[:] = done
    dropped_out[:] = drop
    lat_out[:] = lat
    slot_bits[:] = sbits
    slot_qlen[:] = sqlen
