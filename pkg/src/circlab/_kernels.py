"""Compiled inner loops: Euler-Maruyama stepping with online cycle detection."""

import numpy as np
from numba import njit

# return codes of advance()
BLOCK_DONE = 0
STOPPED = 1
HORIZON = 2
BUFFER_FULL = 3
NONFINITE = 4

# istate slots
STEP = 0
ZPOS = 1
NEVENTS = 2
# fstate slots
X = 0
REF = 1
STRAT = 2


@njit(cache=True, nogil=True)
def lookup(tab, x):
    n = tab.size - 1
    if n == 0:
        return tab[0]
    y = (x - np.floor(x)) * n
    i = int(y)
    if i >= n:
        i = n - 1
    w = y - i
    return tab[i] + w * (tab[i + 1] - tab[i])


@njit(cache=True, nogil=True)
def advance(
    z,
    u,
    istate,
    fstate,
    dt,
    t_origin,
    k_origin,
    max_step,
    stop_after_event,
    min_stop_step,
    b_tab,
    s_tab,
    f_tab,
    ev_t,
    ev_s,
    rec,
):
    """Advance one path over the increments ``z[istate[ZPOS]:]``.

    Steps are numbered globally; step k runs from ``t_origin + (k - k_origin) dt``
    to the next grid time. Crossings of ``ref +- 1`` are interpolated linearly
    and reset the reference level. ``u`` (same length as ``z``, or empty)
    enables the Brownian-bridge crossing check. ``f_tab`` (or empty) turns on
    midpoint accumulation of ``int f(X) o dX``. ``rec`` (or empty) receives the
    position after every step at index k + 1.
    """
    sqdt = np.sqrt(dt)
    bridge = u.size > 0
    strat = f_tab.size > 0
    record = rec.size > 0
    cap = ev_t.size
    x = fstate[X]
    ref = fstate[REF]
    acc = fstate[STRAT]
    k = istate[STEP]
    pos = istate[ZPOS]
    nev = istate[NEVENTS]
    code = BLOCK_DONE
    while pos < z.size:
        if k >= max_step:
            code = HORIZON
            break
        if nev + 4 > cap:
            code = BUFFER_FULL
            break
        b = lookup(b_tab, x)
        s = lookup(s_tab, x)
        x1 = x + b * dt + s * sqdt * z[pos]
        if not np.isfinite(x1):
            code = NONFINITE
            break
        t0 = t_origin + (k - k_origin) * dt
        t1 = t_origin + (k + 1 - k_origin) * dt
        if strat:
            acc += lookup(f_tab, 0.5 * (x + x1)) * (x1 - x)
        crossed = False
        tc = t0
        xc = x
        while True:
            if x1 >= ref + 1.0:
                level = ref + 1.0
                sign = 1
            elif x1 <= ref - 1.0:
                level = ref - 1.0
                sign = -1
            else:
                break
            tc = tc + (level - xc) / (x1 - xc) * (t1 - tc)
            xc = level
            ev_t[nev] = tc
            ev_s[nev] = sign
            nev += 1
            ref = level
            crossed = True
        if bridge and not crossed:
            v = s * s * dt
            p_up = np.exp(-2.0 * (ref + 1.0 - x) * (ref + 1.0 - x1) / v)
            p_dn = np.exp(-2.0 * (x - ref + 1.0) * (x1 - ref + 1.0) / v)
            if u[pos] < p_up:
                ev_t[nev] = 0.5 * (t0 + t1)
                ev_s[nev] = 1
                nev += 1
                ref = ref + 1.0
                crossed = True
            elif u[pos] < p_up + p_dn:
                ev_t[nev] = 0.5 * (t0 + t1)
                ev_s[nev] = -1
                nev += 1
                ref = ref - 1.0
                crossed = True
        x = x1
        k += 1
        pos += 1
        if record:
            rec[k] = x
        if stop_after_event and nev > 0 and k >= min_stop_step:
            code = STOPPED
            break
    fstate[X] = x
    fstate[REF] = ref
    fstate[STRAT] = acc
    istate[STEP] = k
    istate[ZPOS] = pos
    istate[NEVENTS] = nev
    return code


@njit(cache=True, nogil=True)
def ring_gillespie(p, q, start, horizon, expo, unif, ev_t, ev_s):
    """Continuous-time nearest-neighbour ring walk up to ``horizon``.

    Cycle events fire when the lifted displacement from the last forming
    level reaches +-n. Returns ``(n_events, n_used, finished, offset)``.
    ``finished`` is False when the random buffers ran out; the caller then
    redraws longer buffers from the same streams and runs again.
    """
    n = p.size
    site = start
    offset = 0
    t = 0.0
    nev = 0
    used = 0
    while used < expo.size:
        rate = p[site] + q[site]
        t += expo[used] / rate
        if t > horizon:
            return nev, used, True, offset
        if unif[used] * rate < p[site]:
            site = (site + 1) % n
            offset += 1
        else:
            site = (site - 1) % n
            offset -= 1
        used += 1
        if offset == n or offset == -n:
            if nev < ev_t.size:
                ev_t[nev] = t
                ev_s[nev] = 1 if offset > 0 else -1
            nev += 1
            offset = 0
    return nev, used, False, offset
