"""Pure-Python stepping kernel.

Reference implementation of the per-environment transition.  The compiled
kernel in ``_kernel.pyx`` is a line-for-line transcription of this module
into C; the two must stay bit-identical (same expressions, same order, same
RNG), which the backend-parity tests enforce.

One step runs the four transition phases in order — apply actions, charge,
departures, arrivals — then the profit/penalty accounting, then writes the
next observation.  All state lives in flat numpy arrays owned by the engine.
"""

from __future__ import annotations

from ..rng import PHASE_ARRIVALS, PHASE_RESET, Stream, stream_key


class PySimCore:
    """Operates on the engine's state/output arrays in place."""

    name = "python"

    def __init__(self, tables, states, outs):
        self.t = tables
        self.s = states
        self.o = outs

    # -- lifecycle -----------------------------------------------------------

    def reset_env(self, b: int, episode: int) -> None:
        t, s = self.t, self.s
        stream = Stream(stream_key(int(s.env_seed[b]), episode, PHASE_RESET, 0))
        s.day[b] = stream.randint(t.n_days)
        s.step[b] = 0
        s.episode[b] = episode
        for i in range(t.n_ports):
            self._clear_port(b, i)
        if t.battery_enabled:
            s.b_soc[b] = t.b_init_soc
            s.b_rhat[b] = _charge_limit(t.b_init_soc, t.b_tau, t.b_rmax)
        else:
            s.b_soc[b] = 0.0
            s.b_rhat[b] = 0.0
        s.b_i[b] = 0.0
        s.ep_profit[b] = 0.0
        s.ep_reward[b] = 0.0
        s.ep_missing[b] = 0.0
        s.ep_energy[b] = 0.0
        s.ep_overtime[b] = 0
        s.ep_declined[b] = 0
        s.ep_departures[b] = 0
        self.write_obs(b)

    def _clear_port(self, b: int, i: int) -> None:
        s = self.s
        s.occ[b, i] = 0
        s.i_drawn[b, i] = 0.0
        s.soc[b, i] = 0.0
        s.de[b, i] = 0.0
        s.dtrem[b, i] = 0
        s.cap[b, i] = 0.0
        s.rbar[b, i] = 0.0
        s.tau[b, i] = 0.0
        s.pref[b, i] = 0
        s.rhat[b, i] = 0.0

    def step_range(self, b0: int, b1: int, actions) -> None:
        for b in range(b0, b1):
            self._step(b, actions)

    # -- one environment step --------------------------------------------------

    def _step(self, b: int, actions) -> None:
        t, s, o = self.t, self.s, self.o
        n = t.n_ports
        k_levels = float(t.k)
        tstep = int(s.step[b])
        day = int(s.day[b])

        # exogenous frame
        minutes = tstep * t.dt_min
        eff_day = (day + minutes // 1440) % t.n_days
        hour_idx = eff_day * 24 + (minutes // 60) % 24
        p_buy = t.buy[hour_idx]
        p_sell_grid = t.sellg[hour_idx]
        day_scale = t.wk_scale if t.weekday[eff_day] else t.we_scale
        lam = t.lam[tstep % t.lam_len] * day_scale

        # --- phase 1: apply actions (per-port clipping, then tree rescale) ---
        cur = o.scratch[b]
        for i in range(n):
            if not s.occ[b, i]:
                cur[i] = 0.0
                continue
            delta = ((actions[b, i] - t.k) / k_levels) * t.imax_c[i]
            target = s.i_drawn[b, i] + delta
            if not t.allow_discharge and target < 0.0:
                target = 0.0
            if target >= 0.0:
                lim = 1000.0 * s.rhat[b, i] / t.volt[i]
                v = target
                if lim < v:
                    v = lim
                if t.imax_c[i] < v:
                    v = t.imax_c[i]
                cur[i] = v
            else:
                r_dis = _charge_limit(1.0 - s.soc[b, i], s.tau[b, i], s.rbar[b, i])
                lim = 1000.0 * r_dis / t.volt[i]
                v = -target
                if lim < v:
                    v = lim
                if t.imax_d[i] < v:
                    v = t.imax_d[i]
                cur[i] = -v
        if t.battery_enabled:
            delta = ((actions[b, n] - t.k) / k_levels) * t.b_imax
            target = s.b_i[b] + delta
            if target >= 0.0:
                lim = 1000.0 * s.b_rhat[b] / t.b_volt
                v = target
                if lim < v:
                    v = lim
                if t.b_imax < v:
                    v = t.b_imax
                cur[n] = v
            else:
                r_dis = _charge_limit(1.0 - s.b_soc[b], t.b_tau, t.b_rmax)
                lim = 1000.0 * r_dis / t.b_volt
                v = -target
                if lim < v:
                    v = lim
                if t.b_imax < v:
                    v = t.b_imax
                cur[n] = -v

        for j in range(t.n_slots):
            o.i_att[b, j] = cur[j]
        excess = _tree_excess(t, cur)
        _rescale(t, cur)
        for j in range(t.n_slots):
            o.i_used[b, j] = cur[j]
        for i in range(n):
            s.i_drawn[b, i] = cur[i]
        if t.battery_enabled:
            s.b_i[b] = cur[n]

        # --- phase 2: charge over the interval -------------------------------
        e_net = 0.0
        e_in = 0.0
        e_out = 0.0
        for i in range(n):
            delivered = 0.0
            if s.occ[b, i]:
                raw = t.dt_h * t.volt[i] * s.i_drawn[b, i] / 1000.0
                if raw >= 0.0:
                    delivered = raw
                    if s.de[b, i] < delivered:
                        delivered = s.de[b, i]
                    room = s.cap[b, i] * (1.0 - s.soc[b, i])
                    if room < delivered:
                        delivered = room
                else:
                    delivered = raw
                    floor = -s.cap[b, i] * s.soc[b, i]
                    if delivered < floor:
                        delivered = floor
                soc = s.soc[b, i] + delivered / s.cap[b, i]
                if soc < 0.0:
                    soc = 0.0
                elif soc > 1.0:
                    soc = 1.0
                s.soc[b, i] = soc
                de = s.de[b, i] - delivered
                if de < 0.0:
                    de = 0.0
                s.de[b, i] = de
                s.rhat[b, i] = _charge_limit(soc, s.tau[b, i], s.rbar[b, i])
                e_net += delivered
                if delivered > 0.0:
                    e_in += delivered / t.eta_c[i]
                elif delivered < 0.0:
                    e_out += delivered * t.eta_d[i]
            o.delivered[b, i] = delivered

        e_b = 0.0
        b_deliv = 0.0
        if t.battery_enabled:
            raw = t.dt_h * t.b_volt * s.b_i[b] / 1000.0
            b_deliv = raw
            if b_deliv >= 0.0:
                room = t.b_cap * (1.0 - s.b_soc[b])
                if room < b_deliv:
                    b_deliv = room
            else:
                floor = -t.b_cap * s.b_soc[b]
                if b_deliv < floor:
                    b_deliv = floor
            soc = s.b_soc[b] + b_deliv / t.b_cap
            if soc < 0.0:
                soc = 0.0
            elif soc > 1.0:
                soc = 1.0
            s.b_soc[b] = soc
            s.b_rhat[b] = _charge_limit(soc, t.b_tau, t.b_rmax)
            e_b = b_deliv / t.b_eta_c if b_deliv > 0.0 else b_deliv * t.b_eta_d
        o.b_delivered[b] = b_deliv

        for i in range(n):
            if s.occ[b, i]:
                s.dtrem[b, i] -= 1

        e_grid_net = e_in + e_out + e_b

        # --- phase 3: departures ---------------------------------------------
        ndep = 0
        sat0 = 0.0
        sat1 = 0.0
        for i in range(n):
            if not s.occ[b, i]:
                continue
            p = s.pref[b, i]
            if not ((p == 0 and s.dtrem[b, i] <= 0) or (p == 1 and s.de[b, i] == 0.0)):
                continue
            missing = s.de[b, i]
            overtime = -s.dtrem[b, i] if s.dtrem[b, i] < 0 else 0
            early = s.dtrem[b, i] if s.dtrem[b, i] > 0 else 0
            o.dep_port[b, ndep] = i
            o.dep_missing[b, ndep] = missing
            o.dep_overtime[b, ndep] = overtime
            o.dep_early[b, ndep] = early
            o.dep_pref[b, ndep] = p
            o.dep_cap[b, ndep] = s.cap[b, i]
            o.dep_soc[b, ndep] = s.soc[b, i]
            if p == 0:
                sat0 += missing
            else:
                sat1 += overtime - t.beta * early
            s.ep_missing[b] += missing
            s.ep_overtime[b] += overtime
            s.ep_departures[b] += 1
            self._clear_port(b, i)
            ndep += 1
        o.dep_n[b] = ndep

        # --- phase 4: arrivals -------------------------------------------------
        stream = Stream(stream_key(int(s.env_seed[b]), int(s.episode[b]), PHASE_ARRIVALS, tstep))
        m = stream.poisson(lam)
        free = 0
        for i in range(n):
            if not s.occ[b, i]:
                free += 1
        admitted = m if m < free else free
        declined = m - admitted
        placed = 0
        for _ in range(m):
            # profile draws happen for every sampled car, admitted or not,
            # so the draw sequence is independent of station occupancy
            u = stream.uniform()
            kcar = t.n_cat - 1
            for e in range(t.n_cat - 1):
                if u < t.cat_cum[e]:
                    kcar = e
                    break
            stay = t.stay_lo + stream.randint(t.stay_hi - t.stay_lo + 1)
            soc0 = t.soc_lo + stream.uniform() * (t.soc_hi - t.soc_lo)
            frac = t.frac_lo + stream.uniform() * (t.frac_hi - t.frac_lo)
            pref = 1 if stream.uniform() < t.p_charge else 0
            if placed < admitted:
                port = -1
                for oi in range(n):
                    cand = t.order[oi]
                    if not s.occ[b, cand]:
                        port = cand
                        break
                s.occ[b, port] = 1
                s.i_drawn[b, port] = 0.0
                s.soc[b, port] = soc0
                s.cap[b, port] = t.cat_cap[kcar]
                rb = t.cat_rdc[kcar] if t.kind[port] == 1 else t.cat_rac[kcar]
                s.rbar[b, port] = rb
                s.tau[b, port] = t.cat_tau[kcar]
                s.de[b, port] = frac * t.cat_cap[kcar] * (1.0 - soc0)
                s.dtrem[b, port] = stay
                s.pref[b, port] = pref
                s.rhat[b, port] = _charge_limit(soc0, t.cat_tau[kcar], rb)
                placed += 1
        o.arrivals_m[b] = m
        o.declined[b] = declined
        s.ep_declined[b] += declined

        # --- rewards -----------------------------------------------------------
        if e_grid_net > 0.0:
            profit = t.p_sell * e_net - p_buy * e_grid_net - t.c_dt
        else:
            profit = t.p_sell * e_net - p_sell_grid * e_grid_net - t.c_dt
        c_sustain = t.moer[hour_idx] * e_grid_net if t.has_moer else 0.0
        c_degb = -e_b if e_b < 0.0 else 0.0
        c_degc = -e_out if e_out < 0.0 else 0.0
        if t.has_dgrid:
            diff = e_net - t.dgrid[hour_idx]
            c_grid = diff if diff >= 0.0 else -diff
        else:
            c_grid = 0.0

        br = o.breakdown[b]
        br[0] = profit
        br[1] = excess
        br[2] = sat0
        br[3] = sat1
        br[4] = c_sustain
        br[5] = float(declined)
        br[6] = c_degb
        br[7] = c_degc
        br[8] = c_grid
        reward = profit
        for ci in range(8):
            reward -= t.alphas[ci] * br[1 + ci]
        br[9] = reward
        o.reward[b] = reward

        fl = o.flows[b]
        fl[0] = e_net
        fl[1] = e_in
        fl[2] = e_out
        fl[3] = e_b
        fl[4] = e_grid_net

        s.ep_profit[b] += profit
        s.ep_reward[b] += reward
        s.ep_energy[b] += e_net

        # --- advance ------------------------------------------------------------
        s.step[b] = tstep + 1
        done = tstep + 1 == t.episode_steps
        o.done[b] = 1 if done else 0
        term_over = 0
        if done:
            for i in range(n):
                if s.occ[b, i] and s.pref[b, i] == 1 and s.dtrem[b, i] < 0:
                    term_over += -s.dtrem[b, i]
            es = o.ep_stats[b]
            es[0] = s.ep_profit[b]
            es[1] = s.ep_reward[b]
            es[2] = s.ep_missing[b]
            es[3] = float(s.ep_overtime[b])
            es[4] = float(s.ep_declined[b])
            es[5] = s.ep_energy[b]
            es[6] = float(s.ep_departures[b])
            es[7] = float(term_over)
        o.term_overtime[b] = term_over
        self.write_obs(b)

    # -- observation -------------------------------------------------------------

    def write_obs(self, b: int) -> None:
        t, s = self.t, self.s
        obs = self.o.obs[b]
        n = t.n_ports
        tstep = int(s.step[b])
        day = int(s.day[b])
        minutes = tstep * t.dt_min
        eff_day = (day + minutes // 1440) % t.n_days
        hour_idx = eff_day * 24 + (minutes // 60) % 24
        sod = tstep % t.steps_per_day
        for i in range(n):
            base = 6 * i
            obs[base] = float(s.occ[b, i])
            obs[base + 1] = s.i_drawn[b, i] / t.i_denom[i]
            obs[base + 2] = s.soc[b, i]
            obs[base + 3] = s.de[b, i] / s.cap[b, i] if s.occ[b, i] else 0.0
            obs[base + 4] = s.dtrem[b, i] / t.episode_steps
            obs[base + 5] = float(s.pref[b, i])
        base = 6 * n
        obs[base] = s.b_soc[b]
        obs[base + 1] = s.b_i[b] / t.b_idenom
        g = base + 2
        obs[g] = t.buy[hour_idx]
        obs[g + 1] = t.sellg[hour_idx]
        obs[g + 2] = t.p_sell
        obs[g + 3] = t.sin_t[sod]
        obs[g + 4] = t.cos_t[sod]
        obs[g + 5] = float(t.weekday[eff_day])
        obs[g + 6] = eff_day / 365.0
        for h in range(t.horizon):
            fmin = (tstep + 1 + h) * t.dt_min
            fday = (day + fmin // 1440) % t.n_days
            obs[g + 7 + h] = t.buy[fday * 24 + (fmin // 60) % 24]


def _charge_limit(soc: float, tau: float, r_bar: float) -> float:
    if soc <= tau:
        return r_bar
    return (1.0 - soc) * r_bar / (1.0 - tau)


def _tree_excess(t, cur) -> float:
    worst = 0.0
    for m in range(t.n_nodes):
        sacc = 0.0
        for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
            sacc += cur[t.node_leaf[a]]
        load = sacc / t.node_eta[m] if sacc > 0.0 else sacc * t.node_eta[m]
        over = (load if load >= 0.0 else -load) - t.node_cap[m]
        if over > worst:
            worst = over
    return worst


def _rescale(t, cur) -> None:
    for _ in range(t.max_passes):
        changed = False
        for kk in range(t.n_nodes):
            m = t.node_order[kk]
            sacc = 0.0
            for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
                sacc += cur[t.node_leaf[a]]
            load = sacc / t.node_eta[m] if sacc > 0.0 else sacc * t.node_eta[m]
            mag = load if load >= 0.0 else -load
            if mag > t.node_cap[m]:
                f = t.node_cap[m] / mag
                for a in range(t.node_ptr[m], t.node_ptr[m + 1]):
                    j = t.node_leaf[a]
                    scaled = cur[j] * f
                    if scaled != cur[j]:
                        cur[j] = scaled
                        changed = True
        if not changed:
            return
