# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled market recurrence; see ``_kernels_py`` for the reference version."""

from libc.math cimport fabs

cdef enum:
    MODE_PRICE = 0


def simulate_kernel(
    const double[::1] shocks,
    const double[::1] thetas,
    const double[::1] masses,
    const unsigned char[::1] is_rational,
    int mode,
    double beta,
    int use_cost,
    double cost,
    double gamma_sigma2,
    double v0,
    double[::1] v_out,
    double[::1] p_out,
    unsigned char[:, ::1] trades,
    double[::1] expect,
    double[::1] d_prev,
):
    cdef Py_ssize_t n_steps = shocks.shape[0]
    cdef Py_ssize_t n_types = thetas.shape[0]
    cdef Py_ssize_t t, i
    cdef double v, v_prev, p1, p2, trend = 0.0, num, den, pstar, p, ei, gap, dd
    with nogil:
        v_out[0] = v0
        p_out[0] = v0
        for t in range(1, n_steps + 1):
            v_prev = v_out[t - 1]
            v = v_prev + shocks[t - 1]
            v_out[t] = v
            p1 = p_out[t - 1]
            if t >= 2:
                p2 = p_out[t - 2]
            else:
                p2 = v0
            trend = (p1 - p2) + beta * trend
            num = 0.0
            den = 0.0
            for i in range(n_types):
                if is_rational[i]:
                    ei = v
                elif mode == MODE_PRICE:
                    ei = p1 + thetas[i] * trend
                else:
                    ei = v + thetas[i] * (v - v_prev)
                expect[i] = ei
                num += masses[i] * ei
                den += masses[i]
            pstar = num / den
            if use_cost:
                num = 0.0
                den = 0.0
                for i in range(n_types):
                    gap = expect[i] - pstar
                    dd = gap / gamma_sigma2 - d_prev[i]
                    if gap * dd > cost * fabs(dd):
                        trades[t, i] = 1
                        num += masses[i] * expect[i]
                        den += masses[i]
                    else:
                        trades[t, i] = 0
                if den > 0.0:
                    p = num / den
                else:
                    p = p1
                for i in range(n_types):
                    if trades[t, i]:
                        d_prev[i] = (expect[i] - p) / gamma_sigma2
            else:
                p = pstar
            p_out[t] = p
