# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled presentation kernel. Must stay in lockstep with _reference.py."""
from libc.math cimport rint
from libc.stdlib cimport malloc, free

import numpy as np


cdef inline double _grid(double x, int on, double scale, double lo, double hi) noexcept nogil:
    if not on:
        return x
    x = rint(x * scale) / scale
    if x < lo:
        return lo
    if x > hi:
        return hi
    return x


cdef int _advance(double[::1] v, double[::1] vth, double[::1] theta, long long[::1] refrac,
                  const double* current, char* spiked, int n,
                  double v_rest, double v_reset, double decay, double theta_decay,
                  double theta_plus, long long refrac_steps, double v_min,
                  int adapt, int gon, double gscale, double glo, double ghi) noexcept nogil:
    cdef int j, count = 0
    cdef double vn
    for j in range(n):
        theta[j] = theta[j] * theta_decay
        spiked[j] = 0
        if refrac[j] > 0:
            vn = v_reset
            refrac[j] -= 1
        else:
            vn = v_rest + (v[j] - v_rest) * decay + current[j]
            if vn < v_min:
                vn = v_min
            if vn >= vth[j] + theta[j]:
                spiked[j] = 1
                count += 1
                vn = v_reset
                refrac[j] = refrac_steps
                if adapt:
                    theta[j] = theta[j] + theta_plus
        v[j] = _grid(vn, gon, gscale, glo, ghi)
        theta[j] = _grid(theta[j], gon, gscale, glo, ghi)
    return count


cdef void _relax(double[::1] v, double[::1] theta, long long[::1] refrac, int n,
                 double v_rest, double v_reset, double decay, double theta_decay,
                 int gon, double gscale, double glo, double ghi) noexcept nogil:
    cdef int j
    cdef double vn
    for j in range(n):
        theta[j] = theta[j] * theta_decay
        if refrac[j] > 0:
            vn = v_reset
            refrac[j] -= 1
        else:
            vn = v_rest + (v[j] - v_rest) * decay
        v[j] = _grid(vn, gon, gscale, glo, ghi)
        theta[j] = _grid(theta[j], gon, gscale, glo, ghi)


def run_presentation(const double[:, ::1] w, const long long[::1] ptr, const long long[::1] idx,
                     int n_rest,
                     double[::1] ev, double[::1] evth, double[::1] etheta, long long[::1] erefrac,
                     tuple econsts,
                     double[::1] iv, double[::1] ivth, double[::1] itheta, long long[::1] irefrac,
                     tuple iconsts,
                     int baseline, double inh_strength, double exc_to_inh, double syn_gain,
                     int adapt, tuple grid,
                     int learn, double[::1] x_pre, double[::1] x_post,
                     double pre_decay, double post_decay,
                     double[:, ::1] pot, double[:, ::1] dep,
                     long long[::1] exc_counts, long long[::1] inh_counts):
    cdef int n_in = w.shape[0]
    cdef int n_exc = w.shape[1]
    cdef int n_steps = ptr.shape[0] - 1
    cdef double e_rest = econsts[0], e_reset = econsts[1], e_decay = econsts[2]
    cdef double e_tdecay = econsts[3], e_tplus = econsts[4], e_vmin = econsts[6]
    cdef long long e_refrac = econsts[5]
    cdef double i_rest = iconsts[0], i_reset = iconsts[1], i_decay = iconsts[2]
    cdef double i_tdecay = iconsts[3], i_tplus = iconsts[4], i_vmin = iconsts[6]
    cdef long long i_refrac = iconsts[5]
    cdef int gon = grid[0]
    cdef double gscale = grid[1], glo = grid[2], ghi = grid[3]
    cdef int t, j, i, k, n_spk, n_inh
    cdef double vn
    cdef double* cur = <double*> malloc(n_exc * sizeof(double))
    cdef double* icur = <double*> malloc(n_exc * sizeof(double))
    cdef char* spk = <char*> malloc(n_exc * sizeof(char))
    cdef char* ispk = <char*> malloc(n_exc * sizeof(char))
    if cur == NULL or icur == NULL or spk == NULL or ispk == NULL:
        free(cur); free(icur); free(spk); free(ispk)
        raise MemoryError()
    try:
        with nogil:
            for t in range(n_steps):
                if learn:
                    for i in range(n_in):
                        x_pre[i] = x_pre[i] * pre_decay
                    for j in range(n_exc):
                        x_post[j] = x_post[j] * post_decay
                for j in range(n_exc):
                    cur[j] = 0.0
                for k in range(ptr[t], ptr[t + 1]):
                    i = idx[k]
                    for j in range(n_exc):
                        cur[j] += w[i, j]
                    if learn:
                        for j in range(n_exc):
                            dep[i, j] += x_post[j]
                        x_pre[i] = 1.0
                for j in range(n_exc):
                    cur[j] = syn_gain * cur[j]
                n_spk = _advance(ev, evth, etheta, erefrac, cur, spk, n_exc,
                                 e_rest, e_reset, e_decay, e_tdecay, e_tplus, e_refrac, e_vmin,
                                 adapt, gon, gscale, glo, ghi)
                if baseline:
                    for j in range(n_exc):
                        icur[j] = exc_to_inh * (<double> spk[j])
                    n_inh = _advance(iv, ivth, itheta, irefrac, icur, ispk, n_exc,
                                     i_rest, i_reset, i_decay, i_tdecay, i_tplus, i_refrac, i_vmin,
                                     adapt, gon, gscale, glo, ghi)
                    if n_inh:
                        for j in range(n_exc):
                            vn = ev[j] - inh_strength * (<double> (n_inh - ispk[j]))
                            if vn < e_vmin:
                                vn = e_vmin
                            ev[j] = _grid(vn, gon, gscale, glo, ghi)
                    for j in range(n_exc):
                        inh_counts[j] += ispk[j]
                elif n_spk:
                    for j in range(n_exc):
                        if not spk[j]:
                            vn = ev[j] - inh_strength
                            if vn < e_vmin:
                                vn = e_vmin
                            ev[j] = _grid(vn, gon, gscale, glo, ghi)
                if learn and n_spk:
                    for j in range(n_exc):
                        if spk[j]:
                            for i in range(n_in):
                                pot[i, j] += x_pre[i]
                            x_post[j] = 1.0
                for j in range(n_exc):
                    exc_counts[j] += spk[j]
            for t in range(n_rest):
                _relax(ev, etheta, erefrac, n_exc, e_rest, e_reset, e_decay, e_tdecay,
                       gon, gscale, glo, ghi)
                if baseline:
                    _relax(iv, itheta, irefrac, n_exc, i_rest, i_reset, i_decay, i_tdecay,
                           gon, gscale, glo, ghi)
    finally:
        free(cur); free(icur); free(spk); free(ispk)
