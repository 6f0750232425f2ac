"""Pure numpy implementation of the presentation kernel.

Mirrors ``_kernel.pyx`` operation for operation (same summation order, same
rounding) so both backends give bit-identical spike counts and state.
"""
import numpy as np


def _grid(x, grid):
    on, scale, lo, hi = grid
    if not on:
        return x
    return np.clip(np.rint(x * scale) / scale, lo, hi)


def _advance(v, vth, theta, refrac, current, consts, adapt, grid):
    v_rest, v_reset, decay, theta_decay, theta_plus, refrac_steps, v_min = consts
    theta *= theta_decay
    refractory = refrac > 0
    v_new = v_rest + (v - v_rest) * decay + current
    np.maximum(v_new, v_min, out=v_new)
    spiked = ~refractory & (v_new >= vth + theta)
    v_new[refractory | spiked] = v_reset
    refrac[refractory] -= 1
    refrac[spiked] = refrac_steps
    if adapt:
        theta[spiked] += theta_plus
    v[:] = _grid(v_new, grid)
    theta[:] = _grid(theta, grid)
    return spiked


def _relax(v, theta, refrac, consts, grid):
    v_rest, v_reset, decay, theta_decay = consts[:4]
    theta *= theta_decay
    refractory = refrac > 0
    v_new = v_rest + (v - v_rest) * decay
    v_new[refractory] = v_reset
    refrac[refractory] -= 1
    v[:] = _grid(v_new, grid)
    theta[:] = _grid(theta, grid)


def run_presentation(w, ptr, idx, n_rest,
                     ev, evth, etheta, erefrac, econsts,
                     iv, ivth, itheta, irefrac, iconsts,
                     baseline, inh_strength, exc_to_inh, syn_gain, adapt, grid,
                     learn, x_pre, x_post, pre_decay, post_decay, pot, dep,
                     exc_counts, inh_counts):
    n_exc = w.shape[1]
    v_min = econsts[6]
    n_steps = len(ptr) - 1
    for t in range(n_steps):
        if learn:
            x_pre *= pre_decay
            x_post *= post_decay
        cur = np.zeros(n_exc)
        active = idx[ptr[t]:ptr[t + 1]]
        for i in active:
            cur += w[i]
        if learn and len(active):
            dep[active] += x_post
            x_pre[active] = 1.0
        spiked = _advance(ev, evth, etheta, erefrac, syn_gain * cur, econsts, adapt, grid)
        n_spk = int(spiked.sum())
        if baseline:
            ispk = _advance(iv, ivth, itheta, irefrac, exc_to_inh * spiked.astype(np.float64),
                            iconsts, adapt, grid)
            n_inh = int(ispk.sum())
            if n_inh:
                inhib = inh_strength * (n_inh - ispk.astype(np.float64))
                ev[:] = _grid(np.maximum(ev - inhib, v_min), grid)
            inh_counts += ispk
        elif n_spk:
            quiet = ~spiked
            ev[quiet] = _grid(np.maximum(ev[quiet] - inh_strength, v_min), grid)
        if learn and n_spk:
            pot[:, spiked] += x_pre[:, None]
            x_post[spiked] = 1.0
        exc_counts += spiked
    for _ in range(n_rest):
        _relax(ev, etheta, erefrac, econsts, grid)
        if baseline:
            _relax(iv, itheta, irefrac, iconsts, grid)
