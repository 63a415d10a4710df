# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled window kernel. Mirrors ``_kernel_py.run_window`` operation for operation."""


def run_window(const long long[::1] members, const long long[::1] member_offsets,
               const double[::1] rate_bps, const double[::1] inst_rate,
               const double[::1] arr_times, const long long[::1] arr_offsets,
               double[:, ::1] q_arr, double[:, ::1] q_rem,
               long long[::1] q_head, long long[::1] q_len,
               double window_start, double slot_duration, Py_ssize_t n_slots,
               double packet_bits, bint literal,
               double[::1] bits_out, long long[::1] completed_out,
               long long[::1] dropped_out, double[::1] lat_out,
               double[:, ::1] slot_bits, long long[:, ::1] slot_qlen):
    cdef Py_ssize_t n = rate_bps.shape[0]
    cdef Py_ssize_t cap = q_arr.shape[1]
    cdef Py_ssize_t s, f, m, j, lo, hi, p, end, tail, h
    cdef long long active
    cdef double slot_start, slot_end, clock, next_arr, a, need, served, ell
    cdef double dt, new_clock, wait
    cdef double tol = 1e-9 * packet_bits
    cdef long long[:] ptr

    with nogil:
        for f in range(n):
            bits_out[f] = 0.0
            completed_out[f] = 0
            dropped_out[f] = 0
            lat_out[f] = -1.0
    ptr = arr_offsets.copy()[:n] if n > 0 else arr_offsets.copy()

    with nogil:
        for s in range(n_slots):
            slot_start = window_start + s * slot_duration
            slot_end = slot_start + slot_duration
            for f in range(n):
                slot_bits[s, f] = 0.0
                end = arr_offsets[f + 1]
                p = ptr[f]
                while p < end and arr_times[p] < slot_end:
                    if q_len[f] < cap:
                        tail = (q_head[f] + q_len[f]) % cap
                        q_arr[f, tail] = arr_times[p]
                        q_rem[f, tail] = packet_bits
                        q_len[f] += 1
                    else:
                        dropped_out[f] += 1
                    p += 1
                ptr[f] = p
                slot_qlen[s, f] = q_len[f]

            for m in range(3):
                lo = member_offsets[m]
                hi = member_offsets[m + 1]
                clock = slot_start
                while clock < slot_end:
                    active = 0
                    next_arr = slot_end
                    for j in range(lo, hi):
                        f = members[j]
                        if q_len[f] > 0 and rate_bps[f] > 0.0:
                            a = q_arr[f, q_head[f]]
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
                        if q_len[f] > 0 and rate_bps[f] > 0.0 and q_arr[f, q_head[f]] <= clock:
                            need = q_rem[f, q_head[f]] * active / rate_bps[f]
                            if need < dt:
                                dt = need
                    if clock + dt >= next_arr:
                        new_clock = next_arr
                    else:
                        new_clock = clock + dt
                    for j in range(lo, hi):
                        f = members[j]
                        if q_len[f] > 0 and rate_bps[f] > 0.0:
                            h = q_head[f]
                            if q_arr[f, h] > clock:
                                continue
                            served = dt * rate_bps[f] / active
                            if q_rem[f, h] - served <= tol:
                                served = q_rem[f, h]
                                q_rem[f, h] = 0.0
                                bits_out[f] += served
                                slot_bits[s, f] += served
                                if literal:
                                    wait = new_clock - packet_bits / rate_bps[f] - q_arr[f, h]
                                    if wait < 0.0:
                                        wait = 0.0
                                    ell = wait * 1000.0 / packet_bits + 1.0 / (inst_rate[f] * packet_bits)
                                else:
                                    ell = (new_clock - q_arr[f, h]) * 1000.0
                                if ell > lat_out[f]:
                                    lat_out[f] = ell
                                completed_out[f] += 1
                                q_head[f] = (h + 1) % cap
                                q_len[f] -= 1
                            else:
                                q_rem[f, h] -= served
                                bits_out[f] += served
                                slot_bits[s, f] += served
                    clock = new_clock
