"""Pure-numpy twisted-marginal kernel, used when the extension is missing.

Computes, for every output node ``(a, b)``,

    Q+(a, b) = 1/(2 pi) * sum_ij W_i W_j Q(a/2 + x_i, b/2 + x_j,
                                         a/2 - x_i, x_j - b/2)

where ``(x_i, W_i)`` is a plain rule for ``int f(x) dx``. The state enters
through its compressed form

    Q(alpha1, alpha2) = sum_t pops[t] |sum_kl core[t, k, l] u_k(alpha1) v_l(alpha2)|^2
    u_k(alpha) = exp(-|alpha|^2 / 2) sum_n coef1[k, n] conj(alpha)**n

and likewise ``v_l`` with ``coef2``. ``deg1``/``deg2`` give the highest
non-zero power per row.
"""

import numpy as np

INV_SQRT2 = 1.0 / np.sqrt(2.0)


def _horner(coef, deg, z):
    acc = np.full(z.shape, coef[deg], dtype=complex)
    for n in range(deg - 1, -1, -1):
        acc *= z
        acc += coef[n]
    return acc


def twisted_marginal(a_vals, b_vals, nodes, node_weights, coef1, deg1, coef2, deg2, core, pops):
    a = np.asarray(a_vals, dtype=float)
    b = np.asarray(b_vals, dtype=float)
    x = np.asarray(nodes, dtype=float)
    wx = np.asarray(node_weights, dtype=float)
    e1 = np.exp(-((a[:, None] / 2 + x) ** 2) / 4)
    e2 = np.exp(-((a[:, None] / 2 - x) ** 2) / 4)
    f1 = np.exp(-((b[:, None] / 2 + x) ** 2) / 4)
    f2 = np.exp(-((x - b[:, None] / 2) ** 2) / 4)

    out = np.zeros((a.size, b.size))
    for i in range(x.size):
        rr1 = (a / 2 + x[i])[:, None]
        rr2 = (a / 2 - x[i])[:, None]
        for j in range(x.size):
            ss1 = (b / 2 + x[j])[None, :]
            ss2 = (x[j] - b / 2)[None, :]
            z1 = (rr1 - 1j * ss1) * INV_SQRT2
            z2 = (rr2 - 1j * ss2) * INV_SQRT2
            g1 = e1[:, i, None] * f1[None, :, j]
            g2 = e2[:, i, None] * f2[None, :, j]
            p1 = [_horner(coef1[k], deg1[k], z1) * g1 for k in range(len(deg1))]
            p2 = [_horner(coef2[l], deg2[l], z2) * g2 for l in range(len(deg2))]
            q = np.zeros_like(out)
            for t in range(core.shape[0]):
                amp = np.zeros(out.shape, dtype=complex)
                for k in range(len(p1)):
                    inner = np.zeros(out.shape, dtype=complex)
                    for l in range(len(p2)):
                        inner += core[t, k, l] * p2[l]
                    amp += p1[k] * inner
                q += pops[t] * (amp.real ** 2 + amp.imag ** 2)
            out += (wx[i] * wx[j]) * q
    return out / (2 * np.pi)
