"""Optional numba-accelerated growth kernel.

The kernel mirrors the pure-Python stepping loop in ``grower`` exactly
(same Fenwick layout, same float64 operation order), so both paths produce
bit-identical trees from the same pre-drawn uniforms and weights.  Falls
back cleanly when numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except Exception:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(f):
            return f
        return deco if not (args and callable(args[0])) else args[0]


S_POWER = 0
S_LOGSTRETCHED = 1
S_POLYLOG = 2
S_TABLE = 3


@njit(cache=True)
def _s_value(d, s_kind, s_par, s_table, s_tail_p, s_tail_c):
    if s_kind == S_POWER:
        return (d + 1.0) ** s_par
    elif s_kind == S_LOGSTRETCHED:
        x = d + 1.0
        return x * np.exp(np.log(x) ** s_par)
    elif s_kind == S_POLYLOG:
        x = d + 2.0
        return x * np.log(x) ** s_par
    else:
        if d < s_table.shape[0]:
            return s_table[d]
        return s_tail_c * (d + 1.0) ** s_tail_p


@njit(cache=True)
def grow_block(tree, size, fitness, outdeg, parent, gfit, hfit,
               s_kind, s_par, s_table, s_tail_p, s_tail_c, s0,
               us, new_g, new_h, start, total,
               hub_node, hub_deg, hub_steps, hub_nodes, hub_degs):
    """Advance the tree by ``len(us)`` nodes.  Returns updated scalars.

    ``hub_*`` output arrays receive one row per argmax change; the number
    of rows written is returned.
    """
    count = us.shape[0]
    nrec = 0
    for k in range(count):
        m = start + k
        x = us[k] * total
        # Fenwick prefix descent for the attachment target.
        idx = 0
        bit = size
        while bit:
            nxt = idx + bit
            if nxt <= size and tree[nxt] <= x:
                x -= tree[nxt]
                idx = nxt
            bit >>= 1
        j = idx if idx < m else m - 1
        d = outdeg[j] + 1
        outdeg[j] = d
        newf = gfit[j] * _s_value(d, s_kind, s_par, s_table, s_tail_p, s_tail_c) + hfit[j]
        delta = newf - fitness[j]
        fitness[j] = newf
        i = j + 1
        while i <= size:
            tree[i] += delta
            i += i & (-i)
        parent[m] = j
        gfit[m] = new_g[k]
        hfit[m] = new_h[k]
        f_new = new_g[k] * s0 + new_h[k]
        fitness[m] = f_new
        outdeg[m] = 0
        i = m + 1
        while i <= size:
            tree[i] += f_new
            i += i & (-i)
        total += delta + f_new
        if d > hub_deg or (d == hub_deg and j < hub_node):
            hub_deg = d
            if j != hub_node:
                hub_node = j
                hub_steps[nrec] = m + 1
                hub_nodes[nrec] = j
                hub_degs[nrec] = d
                nrec += 1
    return total, hub_node, hub_deg, nrec
