"""Pure-Python market recurrence.

Mirrors ``_kernels.pyx`` operation for operation so both backends give
bit-identical output.
"""

from __future__ import annotations

MODE_PRICE = 0
MODE_FUNDAMENTAL = 1


def simulate_kernel(
    shocks,
    thetas,
    masses,
    is_rational,
    mode: int,
    beta: float,
    use_cost: int,
    cost: float,
    gamma_sigma2: float,
    v0: float,
    v_out,
    p_out,
    trades,
    expect,
    d_prev,
) -> None:
    """Run the recurrence for ``len(shocks)`` periods.

    ``v_out``/``p_out`` have one more entry than ``shocks`` (index 0 is the
    initial state); ``trades`` is ``(periods + 1, n_types)``; ``expect`` and
    ``d_prev`` are per-type work buffers (``d_prev`` holds starting positions).
    """
    n_steps = len(shocks)
    n_types = len(thetas)
    sh = [float(x) for x in shocks]
    th = [float(x) for x in thetas]
    ms = [float(x) for x in masses]
    rat = [bool(x) for x in is_rational]
    e = [0.0] * n_types
    dp = [float(x) for x in d_prev]
    vs = [0.0] * (n_steps + 1)
    ps = [0.0] * (n_steps + 1)
    tr = [[0] * n_types for _ in range(n_steps + 1)]
    vs[0] = v0
    ps[0] = v0
    trend = 0.0
    for t in range(1, n_steps + 1):
        v_prev = vs[t - 1]
        v = v_prev + sh[t - 1]
        vs[t] = v
        p1 = ps[t - 1]
        p2 = ps[t - 2] if t >= 2 else v0
        trend = (p1 - p2) + beta * trend
        num = 0.0
        den = 0.0
        for i in range(n_types):
            if rat[i]:
                ei = v
            elif mode == MODE_PRICE:
                ei = p1 + th[i] * trend
            else:
                ei = v + th[i] * (v - v_prev)
            e[i] = ei
            num += ms[i] * ei
            den += ms[i]
        pstar = num / den
        if use_cost:
            num = 0.0
            den = 0.0
            row = tr[t]
            for i in range(n_types):
                gap = e[i] - pstar
                dd = gap / gamma_sigma2 - dp[i]
                if gap * dd > cost * abs(dd):
                    row[i] = 1
                    num += ms[i] * e[i]
                    den += ms[i]
            p = num / den if den > 0.0 else p1
            for i in range(n_types):
                if row[i]:
                    dp[i] = (e[i] - p) / gamma_sigma2
        else:
            p = pstar
        ps[t] = p
    for t in range(n_steps + 1):
        v_out[t] = vs[t]
        p_out[t] = ps[t]
        if use_cost:
            for i in range(n_types):
                trades[t, i] = tr[t][i]
    for i in range(n_types):
        expect[i] = e[i]
        d_prev[i] = dp[i]
