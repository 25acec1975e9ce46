# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernel.

Line-for-line transcription of ``pykernel.py`` into C.  Any semantic change
there must be mirrored here: the backend-parity tests require bit-identical
trajectories, which holds as long as both sides perform the same double-
precision operations in the same order with the same splitmix64 streams
(the extension is built with -ffp-contract=off to rule out FMA
contraction).

``step_range`` releases the GIL, so disjoint batch slices can be stepped by
multiple threads with bitwise-reproducible results.
"""

from libc.math cimport exp
from libc.stdint cimport int8_t, int64_t, uint64_t


cdef uint64_t _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t _KEY_INIT = 0x8C2F9D1B6E4A5533ULL
cdef double _INV_2_53 = 1.0 / 9007199254740992.0
cdef double _POISSON_CHUNK = 32.0

cdef int64_t _PHASE_RESET = 0
cdef int64_t _PHASE_ARRIVALS = 1


cdef inline uint64_t _mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t _key4(uint64_t a, uint64_t b, uint64_t c, uint64_t d) noexcept nogil:
    cdef uint64_t k = _KEY_INIT
    k = _mix64((k + _GOLDEN) ^ a)
    k = _mix64((k + _GOLDEN) ^ b)
    k = _mix64((k + _GOLDEN) ^ c)
    k = _mix64((k + _GOLDEN) ^ d)
    return k


cdef inline double _uniform(uint64_t* s) noexcept nogil:
    s[0] = s[0] + _GOLDEN
    return <double>(_mix64(s[0]) >> 11) * _INV_2_53


cdef inline int64_t _randint(uint64_t* s, int64_t n) noexcept nogil:
    cdef int64_t k = <int64_t>(_uniform(s) * n)
    if k >= n:
        k = n - 1
    return k


cdef inline int64_t _poisson_knuth(uint64_t* s, double lam) noexcept nogil:
    cdef double threshold = exp(-lam)
    cdef int64_t k = 0
    cdef double p = 1.0
    while True:
        p *= _uniform(s)
        if p <= threshold:
            return k
        k += 1


cdef inline int64_t _poisson(uint64_t* s, double lam) noexcept nogil:
    if lam <= 0.0:
        return 0
    cdef int64_t total = 0
    while lam > _POISSON_CHUNK:
        total += _poisson_knuth(s, _POISSON_CHUNK)
        lam -= _POISSON_CHUNK
    return total + _poisson_knuth(s, lam)


cdef inline double _climit(double soc, double tau, double rbar) noexcept nogil:
    if soc <= tau:
        return rbar
    return (1.0 - soc) * rbar / (1.0 - tau)


cdef class CySimCore:
    """Operates on the engine's state/output arrays in place."""

    # tables
    cdef Py_ssize_t n_ports, n_slots, n_nodes, n_cat
    cdef double[::1] volt, imax_c, imax_d, eta_c, eta_d, i_denom
    cdef int64_t[::1] kind, order
    cdef double[::1] node_cap, node_eta
    cdef int64_t[::1] node_ptr, node_leaf, node_order
    cdef int64_t max_passes
    cdef bint battery_enabled, allow_discharge, has_moer, has_dgrid
    cdef double b_volt, b_cap, b_rmax, b_tau, b_eta_c, b_eta_d, b_init_soc, b_imax, b_idenom
    cdef int64_t k, episode_steps, steps_per_day, dt_min, horizon, n_days, lam_len
    cdef double dt_h, p_sell, c_dt, beta, wk_scale, we_scale
    cdef double[::1] alphas, buy, sellg, lam, moer, dgrid, sin_t, cos_t
    cdef int8_t[::1] weekday
    cdef double[::1] cat_cum, cat_cap, cat_rac, cat_rdc, cat_tau
    cdef int64_t stay_lo, stay_hi
    cdef double soc_lo, soc_hi, frac_lo, frac_hi, p_charge
    # states
    cdef int8_t[:, ::1] occ, pref
    cdef double[:, ::1] i_drawn, soc, de, cap, rbar, tau, rhat
    cdef int64_t[:, ::1] dtrem
    cdef double[::1] b_i, b_soc, b_rhat
    cdef int64_t[::1] step_no, day, episode
    cdef uint64_t[::1] env_seed
    cdef double[::1] ep_profit, ep_reward, ep_missing, ep_energy
    cdef int64_t[::1] ep_overtime, ep_declined, ep_departures
    # outputs
    cdef double[:, ::1] obs, breakdown, flows, dep_missing, dep_cap, dep_soc
    cdef double[:, ::1] i_att, i_used, delivered, scratch
    cdef double[:, ::1] ep_stats
    cdef double[::1] reward, b_delivered
    cdef int8_t[::1] done
    cdef int64_t[::1] declined, arrivals_m, dep_n, term_overtime
    cdef int64_t[:, ::1] dep_port, dep_overtime, dep_early, dep_pref

    name = "compiled"

    def __init__(self, tables, states, outs):
        t, s, o = tables, states, outs
        self.n_ports = t.n_ports
        self.n_slots = t.n_slots
        self.n_nodes = t.n_nodes
        self.n_cat = t.n_cat
        self.volt = t.volt
        self.imax_c = t.imax_c
        self.imax_d = t.imax_d
        self.eta_c = t.eta_c
        self.eta_d = t.eta_d
        self.i_denom = t.i_denom
        self.kind = t.kind
        self.order = t.order
        self.node_cap = t.node_cap
        self.node_eta = t.node_eta
        self.node_ptr = t.node_ptr
        self.node_leaf = t.node_leaf
        self.node_order = t.node_order
        self.max_passes = t.max_passes
        self.battery_enabled = t.battery_enabled
        self.allow_discharge = t.allow_discharge
        self.has_moer = t.has_moer
        self.has_dgrid = t.has_dgrid
        self.b_volt = t.b_volt
        self.b_cap = t.b_cap
        self.b_rmax = t.b_rmax
        self.b_tau = t.b_tau
        self.b_eta_c = t.b_eta_c
        self.b_eta_d = t.b_eta_d
        self.b_init_soc = t.b_init_soc
        self.b_imax = t.b_imax
        self.b_idenom = t.b_idenom
        self.k = t.k
        self.episode_steps = t.episode_steps
        self.steps_per_day = t.steps_per_day
        self.dt_min = t.dt_min
        self.horizon = t.horizon
        self.n_days = t.n_days
        self.lam_len = t.lam_len
        self.dt_h = t.dt_h
        self.p_sell = t.p_sell
        self.c_dt = t.c_dt
        self.beta = t.beta
        self.wk_scale = t.wk_scale
        self.we_scale = t.we_scale
        self.alphas = t.alphas
        self.buy = t.buy
        self.sellg = t.sellg
        self.lam = t.lam
        self.moer = t.moer
        self.dgrid = t.dgrid
        self.sin_t = t.sin_t
        self.cos_t = t.cos_t
        self.weekday = t.weekday
        self.cat_cum = t.cat_cum
        self.cat_cap = t.cat_cap
        self.cat_rac = t.cat_rac
        self.cat_rdc = t.cat_rdc
        self.cat_tau = t.cat_tau
        self.stay_lo = t.stay_lo
        self.stay_hi = t.stay_hi
        self.soc_lo = t.soc_lo
        self.soc_hi = t.soc_hi
        self.frac_lo = t.frac_lo
        self.frac_hi = t.frac_hi
        self.p_charge = t.p_charge

        self.occ = s.occ
        self.pref = s.pref
        self.i_drawn = s.i_drawn
        self.soc = s.soc
        self.de = s.de
        self.cap = s.cap
        self.rbar = s.rbar
        self.tau = s.tau
        self.rhat = s.rhat
        self.dtrem = s.dtrem
        self.b_i = s.b_i
        self.b_soc = s.b_soc
        self.b_rhat = s.b_rhat
        self.step_no = s.step
        self.day = s.day
        self.episode = s.episode
        self.env_seed = s.env_seed
        self.ep_profit = s.ep_profit
        self.ep_reward = s.ep_reward
        self.ep_missing = s.ep_missing
        self.ep_energy = s.ep_energy
        self.ep_overtime = s.ep_overtime
        self.ep_declined = s.ep_declined
        self.ep_departures = s.ep_departures

        self.obs = o.obs
        self.breakdown = o.breakdown
        self.flows = o.flows
        self.dep_missing = o.dep_missing
        self.dep_cap = o.dep_cap
        self.dep_soc = o.dep_soc
        self.i_att = o.i_att
        self.i_used = o.i_used
        self.delivered = o.delivered
        self.scratch = o.scratch
        self.ep_stats = o.ep_stats
        self.reward = o.reward
        self.b_delivered = o.b_delivered
        self.done = o.done
        self.declined = o.declined
        self.arrivals_m = o.arrivals_m
        self.dep_n = o.dep_n
        self.term_overtime = o.term_overtime
        self.dep_port = o.dep_port
        self.dep_overtime = o.dep_overtime
        self.dep_early = o.dep_early
        self.dep_pref = o.dep_pref

    # -- lifecycle -------------------------------------------------------------

    def reset_env(self, Py_ssize_t b, int64_t episode):
        cdef uint64_t st = _key4(self.env_seed[b], <uint64_t>episode, <uint64_t>_PHASE_RESET, 0)
        cdef Py_ssize_t i
        self.day[b] = _randint(&st, self.n_days)
        self.step_no[b] = 0
        self.episode[b] = episode
        for i in range(self.n_ports):
            self._clear_port(b, i)
        if self.battery_enabled:
            self.b_soc[b] = self.b_init_soc
            self.b_rhat[b] = _climit(self.b_init_soc, self.b_tau, self.b_rmax)
        else:
            self.b_soc[b] = 0.0
            self.b_rhat[b] = 0.0
        self.b_i[b] = 0.0
        self.ep_profit[b] = 0.0
        self.ep_reward[b] = 0.0
        self.ep_missing[b] = 0.0
        self.ep_energy[b] = 0.0
        self.ep_overtime[b] = 0
        self.ep_declined[b] = 0
        self.ep_departures[b] = 0
        self._write_obs(b)

    cdef void _clear_port(self, Py_ssize_t b, Py_ssize_t i) noexcept nogil:
        self.occ[b, i] = 0
        self.i_drawn[b, i] = 0.0
        self.soc[b, i] = 0.0
        self.de[b, i] = 0.0
        self.dtrem[b, i] = 0
        self.cap[b, i] = 0.0
        self.rbar[b, i] = 0.0
        self.tau[b, i] = 0.0
        self.pref[b, i] = 0
        self.rhat[b, i] = 0.0

    def step_range(self, Py_ssize_t b0, Py_ssize_t b1, int64_t[:, ::1] actions):
        cdef Py_ssize_t b
        with nogil:
            for b in range(b0, b1):
                self._step(b, actions)

    # -- one environment step -----------------------------------------------------

    cdef void _step(self, Py_ssize_t b, int64_t[:, ::1] actions) noexcept nogil:
        cdef Py_ssize_t n = self.n_ports
        cdef double k_levels = <double>self.k
        cdef int64_t tstep = self.step_no[b]
        cdef int64_t day = self.day[b]

        cdef int64_t minutes = tstep * self.dt_min
        cdef int64_t eff_day = (day + minutes / 1440) % self.n_days
        cdef int64_t hour_idx = eff_day * 24 + (minutes / 60) % 24
        cdef double p_buy = self.buy[hour_idx]
        cdef double p_sell_grid = self.sellg[hour_idx]
        cdef double day_scale = self.wk_scale if self.weekday[eff_day] else self.we_scale
        cdef double lam = self.lam[tstep % self.lam_len] * day_scale

        # --- phase 1: apply actions ---
        cdef double[:] cur = self.scratch[b]
        cdef Py_ssize_t i, j
        cdef double delta, target, lim, v, r_dis
        for i in range(n):
            if self.occ[b, i] == 0:
                cur[i] = 0.0
                continue
            delta = ((<double>(actions[b, i] - self.k)) / k_levels) * self.imax_c[i]
            target = self.i_drawn[b, i] + delta
            if (not self.allow_discharge) and target < 0.0:
                target = 0.0
            if target >= 0.0:
                lim = 1000.0 * self.rhat[b, i] / self.volt[i]
                v = target
                if lim < v:
                    v = lim
                if self.imax_c[i] < v:
                    v = self.imax_c[i]
                cur[i] = v
            else:
                r_dis = _climit(1.0 - self.soc[b, i], self.tau[b, i], self.rbar[b, i])
                lim = 1000.0 * r_dis / self.volt[i]
                v = -target
                if lim < v:
                    v = lim
                if self.imax_d[i] < v:
                    v = self.imax_d[i]
                cur[i] = -v
        if self.battery_enabled:
            delta = ((<double>(actions[b, n] - self.k)) / k_levels) * self.b_imax
            target = self.b_i[b] + delta
            if target >= 0.0:
                lim = 1000.0 * self.b_rhat[b] / self.b_volt
                v = target
                if lim < v:
                    v = lim
                if self.b_imax < v:
                    v = self.b_imax
                cur[n] = v
            else:
                r_dis = _climit(1.0 - self.b_soc[b], self.b_tau, self.b_rmax)
                lim = 1000.0 * r_dis / self.b_volt
                v = -target
                if lim < v:
                    v = lim
                if self.b_imax < v:
                    v = self.b_imax
                cur[n] = -v

        for j in range(self.n_slots):
            self.i_att[b, j] = cur[j]
        cdef double excess = self._tree_excess(cur)
        self._rescale(cur)
        for j in range(self.n_slots):
            self.i_used[b, j] = cur[j]
        for i in range(n):
            self.i_drawn[b, i] = cur[i]
        if self.battery_enabled:
            self.b_i[b] = cur[n]

        # --- phase 2: charge ---
        cdef double e_net = 0.0
        cdef double e_in = 0.0
        cdef double e_out = 0.0
        cdef double delivered, raw, room, floor_, soc, de
        for i in range(n):
            delivered = 0.0
            if self.occ[b, i]:
                raw = self.dt_h * self.volt[i] * self.i_drawn[b, i] / 1000.0
                if raw >= 0.0:
                    delivered = raw
                    if self.de[b, i] < delivered:
                        delivered = self.de[b, i]
                    room = self.cap[b, i] * (1.0 - self.soc[b, i])
                    if room < delivered:
                        delivered = room
                else:
                    delivered = raw
                    floor_ = -self.cap[b, i] * self.soc[b, i]
                    if delivered < floor_:
                        delivered = floor_
                soc = self.soc[b, i] + delivered / self.cap[b, i]
                if soc < 0.0:
                    soc = 0.0
                elif soc > 1.0:
                    soc = 1.0
                self.soc[b, i] = soc
                de = self.de[b, i] - delivered
                if de < 0.0:
                    de = 0.0
                self.de[b, i] = de
                self.rhat[b, i] = _climit(soc, self.tau[b, i], self.rbar[b, i])
                e_net += delivered
                if delivered > 0.0:
                    e_in += delivered / self.eta_c[i]
                elif delivered < 0.0:
                    e_out += delivered * self.eta_d[i]
            self.delivered[b, i] = delivered

        cdef double e_b = 0.0
        cdef double b_deliv = 0.0
        if self.battery_enabled:
            raw = self.dt_h * self.b_volt * self.b_i[b] / 1000.0
            b_deliv = raw
            if b_deliv >= 0.0:
                room = self.b_cap * (1.0 - self.b_soc[b])
                if room < b_deliv:
                    b_deliv = room
            else:
                floor_ = -self.b_cap * self.b_soc[b]
                if b_deliv < floor_:
                    b_deliv = floor_
            soc = self.b_soc[b] + b_deliv / self.b_cap
            if soc < 0.0:
                soc = 0.0
            elif soc > 1.0:
                soc = 1.0
            self.b_soc[b] = soc
            self.b_rhat[b] = _climit(soc, self.b_tau, self.b_rmax)
            e_b = b_deliv / self.b_eta_c if b_deliv > 0.0 else b_deliv * self.b_eta_d
        self.b_delivered[b] = b_deliv

        for i in range(n):
            if self.occ[b, i]:
                self.dtrem[b, i] -= 1

        cdef double e_grid_net = e_in + e_out + e_b

        # --- phase 3: departures ---
        cdef Py_ssize_t ndep = 0
        cdef double sat0 = 0.0
        cdef double sat1 = 0.0
        cdef int8_t p
        cdef double missing
        cdef int64_t overtime, early
        for i in range(n):
            if self.occ[b, i] == 0:
                continue
            p = self.pref[b, i]
            if not ((p == 0 and self.dtrem[b, i] <= 0) or (p == 1 and self.de[b, i] == 0.0)):
                continue
            missing = self.de[b, i]
            overtime = -self.dtrem[b, i] if self.dtrem[b, i] < 0 else 0
            early = self.dtrem[b, i] if self.dtrem[b, i] > 0 else 0
            self.dep_port[b, ndep] = i
            self.dep_missing[b, ndep] = missing
            self.dep_overtime[b, ndep] = overtime
            self.dep_early[b, ndep] = early
            self.dep_pref[b, ndep] = p
            self.dep_cap[b, ndep] = self.cap[b, i]
            self.dep_soc[b, ndep] = self.soc[b, i]
            if p == 0:
                sat0 += missing
            else:
                sat1 += (<double>overtime) - self.beta * (<double>early)
            self.ep_missing[b] += missing
            self.ep_overtime[b] += overtime
            self.ep_departures[b] += 1
            self._clear_port(b, i)
            ndep += 1
        self.dep_n[b] = ndep

        # --- phase 4: arrivals ---
        cdef uint64_t st = _key4(
            self.env_seed[b], <uint64_t>self.episode[b], <uint64_t>_PHASE_ARRIVALS, <uint64_t>tstep
        )
        cdef int64_t m = _poisson(&st, lam)
        cdef int64_t free = 0
        for i in range(n):
            if self.occ[b, i] == 0:
                free += 1
        cdef int64_t admitted = m if m < free else free
        cdef int64_t declined = m - admitted
        cdef int64_t placed = 0
        cdef int64_t jj, stay, prefj
        cdef Py_ssize_t kcar, e, oi
        cdef Py_ssize_t port
        cdef double u, soc0, frac, rb
        for jj in range(m):
            # profile draws happen for every sampled car, admitted or not,
            # so the draw sequence is independent of station occupancy
            u = _uniform(&st)
            kcar = self.n_cat - 1
            for e in range(self.n_cat - 1):
                if u < self.cat_cum[e]:
                    kcar = e
                    break
            stay = self.stay_lo + _randint(&st, self.stay_hi - self.stay_lo + 1)
            soc0 = self.soc_lo + _uniform(&st) * (self.soc_hi - self.soc_lo)
            frac = self.frac_lo + _uniform(&st) * (self.frac_hi - self.frac_lo)
            prefj = 1 if _uniform(&st) < self.p_charge else 0
            if placed < admitted:
                port = -1
                for oi in range(n):
                    if self.occ[b, self.order[oi]] == 0:
                        port = self.order[oi]
                        break
                self.occ[b, port] = 1
                self.i_drawn[b, port] = 0.0
                self.soc[b, port] = soc0
                self.cap[b, port] = self.cat_cap[kcar]
                rb = self.cat_rdc[kcar] if self.kind[port] == 1 else self.cat_rac[kcar]
                self.rbar[b, port] = rb
                self.tau[b, port] = self.cat_tau[kcar]
                self.de[b, port] = frac * self.cat_cap[kcar] * (1.0 - soc0)
                self.dtrem[b, port] = stay
                self.pref[b, port] = <int8_t>prefj
                self.rhat[b, port] = _climit(soc0, self.cat_tau[kcar], rb)
                placed += 1
        self.arrivals_m[b] = m
        self.declined[b] = declined
        self.ep_declined[b] += declined

        # --- rewards ---
        cdef double profit
        if e_grid_net > 0.0:
            profit = self.p_sell * e_net - p_buy * e_grid_net - self.c_dt
        else:
            profit = self.p_sell * e_net - p_sell_grid * e_grid_net - self.c_dt
        cdef double c_sustain = self.moer[hour_idx] * e_grid_net if self.has_moer else 0.0
        cdef double c_degb = -e_b if e_b < 0.0 else 0.0
        cdef double c_degc = -e_out if e_out < 0.0 else 0.0
        cdef double c_grid, diff
        if self.has_dgrid:
            diff = e_net - self.dgrid[hour_idx]
            c_grid = diff if diff >= 0.0 else -diff
        else:
            c_grid = 0.0

        self.breakdown[b, 0] = profit
        self.breakdown[b, 1] = excess
        self.breakdown[b, 2] = sat0
        self.breakdown[b, 3] = sat1
        self.breakdown[b, 4] = c_sustain
        self.breakdown[b, 5] = <double>declined
        self.breakdown[b, 6] = c_degb
        self.breakdown[b, 7] = c_degc
        self.breakdown[b, 8] = c_grid
        cdef double reward = profit
        cdef Py_ssize_t ci
        for ci in range(8):
            reward -= self.alphas[ci] * self.breakdown[b, 1 + ci]
        self.breakdown[b, 9] = reward
        self.reward[b] = reward

        self.flows[b, 0] = e_net
        self.flows[b, 1] = e_in
        self.flows[b, 2] = e_out
        self.flows[b, 3] = e_b
        self.flows[b, 4] = e_grid_net

        self.ep_profit[b] += profit
        self.ep_reward[b] += reward
        self.ep_energy[b] += e_net

        # --- advance ---
        self.step_no[b] = tstep + 1
        cdef bint done = tstep + 1 == self.episode_steps
        self.done[b] = 1 if done else 0
        cdef int64_t term_over = 0
        if done:
            for i in range(n):
                if self.occ[b, i] and self.pref[b, i] == 1 and self.dtrem[b, i] < 0:
                    term_over += -self.dtrem[b, i]
            self.ep_stats[b, 0] = self.ep_profit[b]
            self.ep_stats[b, 1] = self.ep_reward[b]
            self.ep_stats[b, 2] = self.ep_missing[b]
            self.ep_stats[b, 3] = <double>self.ep_overtime[b]
            self.ep_stats[b, 4] = <double>self.ep_declined[b]
            self.ep_stats[b, 5] = self.ep_energy[b]
            self.ep_stats[b, 6] = <double>self.ep_departures[b]
            self.ep_stats[b, 7] = <double>term_over
        self.term_overtime[b] = term_over
        self._write_obs(b)

    # -- observation ----------------------------------------------------------------

    cdef void _write_obs(self, Py_ssize_t b) noexcept nogil:
        cdef Py_ssize_t n = self.n_ports
        cdef int64_t tstep = self.step_no[b]
        cdef int64_t day = self.day[b]
        cdef int64_t minutes = tstep * self.dt_min
        cdef int64_t eff_day = (day + minutes / 1440) % self.n_days
        cdef int64_t hour_idx = eff_day * 24 + (minutes / 60) % 24
        cdef int64_t sod = tstep % self.steps_per_day
        cdef Py_ssize_t i, base, g, h
        cdef int64_t fmin, fday
        for i in range(n):
            base = 6 * i
            self.obs[b, base] = <double>self.occ[b, i]
            self.obs[b, base + 1] = self.i_drawn[b, i] / self.i_denom[i]
            self.obs[b, base + 2] = self.soc[b, i]
            self.obs[b, base + 3] = self.de[b, i] / self.cap[b, i] if self.occ[b, i] else 0.0
            self.obs[b, base + 4] = (<double>self.dtrem[b, i]) / (<double>self.episode_steps)
            self.obs[b, base + 5] = <double>self.pref[b, i]
        base = 6 * n
        self.obs[b, base] = self.b_soc[b]
        self.obs[b, base + 1] = self.b_i[b] / self.b_idenom
        g = base + 2
        self.obs[b, g] = self.buy[hour_idx]
        self.obs[b, g + 1] = self.sellg[hour_idx]
        self.obs[b, g + 2] = self.p_sell
        self.obs[b, g + 3] = self.sin_t[sod]
        self.obs[b, g + 4] = self.cos_t[sod]
        self.obs[b, g + 5] = <double>self.weekday[eff_day]
        self.obs[b, g + 6] = (<double>eff_day) / 365.0
        for h in range(self.horizon):
            fmin = (tstep + 1 + h) * self.dt_min
            fday = (day + fmin / 1440) % self.n_days
            self.obs[b, g + 7 + h] = self.buy[fday * 24 + (fmin / 60) % 24]

    # -- tree constraints --------------------------------------------------------------

    cdef double _tree_excess(self, double[:] cur) noexcept nogil:
        cdef double worst = 0.0
        cdef double sacc, load, over
        cdef Py_ssize_t m
        cdef int64_t a
        for m in range(self.n_nodes):
            sacc = 0.0
            for a in range(self.node_ptr[m], self.node_ptr[m + 1]):
                sacc += cur[self.node_leaf[a]]
            load = sacc / self.node_eta[m] if sacc > 0.0 else sacc * self.node_eta[m]
            over = (load if load >= 0.0 else -load) - self.node_cap[m]
            if over > worst:
                worst = over
        return worst

    cdef void _rescale(self, double[:] cur) noexcept nogil:
        cdef Py_ssize_t it, kk, m
        cdef int64_t a, j
        cdef double sacc, load, mag, f, scaled
        cdef bint changed
        for it in range(self.max_passes):
            changed = False
            for kk in range(self.n_nodes):
                m = self.node_order[kk]
                sacc = 0.0
                for a in range(self.node_ptr[m], self.node_ptr[m + 1]):
                    sacc += cur[self.node_leaf[a]]
                load = sacc / self.node_eta[m] if sacc > 0.0 else sacc * self.node_eta[m]
                mag = load if load >= 0.0 else -load
                if mag > self.node_cap[m]:
                    f = self.node_cap[m] / mag
                    for a in range(self.node_ptr[m], self.node_ptr[m + 1]):
                        j = self.node_leaf[a]
                        scaled = cur[j] * f
                        if scaled != cur[j]:
                            cur[j] = scaled
                            changed = True
            if not changed:
                return
