"""Number-theoretic transform references by direct evaluation.

Full negacyclic NTT of size n over Z_q (ψ a primitive 2n-th root of unity):

    out[j] = sum_i a[i] * ψ^((2j+1) * i)      for j in 0..n-1

i.e. evaluation of the polynomial at the odd powers of ψ, in natural order.

Incomplete (seven-stage, Kyber-style) NTT of size n with ζ a primitive
n-th root: coefficients split by parity into n/2-point transforms,

    out[2j]   = sum_i a[2i]   * ζ^((2j+1) * i)    for j in 0..n/2-1
    out[2j+1] = sum_i a[2i+1] * ζ^((2j+1) * i)

which is f mod (X^2 - ζ^(2j+1)) per output pair.

Both are O(n^2) on purpose: no butterflies, no shared structure with the
in-array kernels they validate.
"""

from __future__ import annotations


def find_root(q: int, order: int) -> int:
    """Smallest primitive `order`-th root of unity mod prime q."""
    if (q - 1) % order:
        raise ValueError(f"no {order}-th roots of unity mod {q}")
    for g in range(2, q):
        w = pow(g, (q - 1) // order, q)
        # primitive iff w^(order/p) != 1 for every prime p | order; order is
        # a power of two here so the single check at order/2 suffices
        if order % 2 == 0 and pow(w, order // 2, q) == 1:
            continue
        if w != 1:
            return w
    raise ValueError("no root found")


def ntt_full(a: list[int], q: int, psi: int | None = None) -> list[int]:
    n = len(a)
    if psi is None:
        psi = find_root(q, 2 * n)
    if pow(psi, n, q) != q - 1:
        raise ValueError("psi is not a primitive 2n-th root")
    return [
        sum(a[i] * pow(psi, (2 * j + 1) * i, q) for i in range(n)) % q
        for j in range(n)
    ]


def intt_full(ah: list[int], q: int, psi: int | None = None) -> list[int]:
    n = len(ah)
    if psi is None:
        psi = find_root(q, 2 * n)
    ninv = pow(n, -1, q)
    psiinv = pow(psi, -1, q)
    return [
        ninv
        * sum(ah[j] * pow(psiinv, (2 * j + 1) * i, q) for j in range(n))
        % q
        for i in range(n)
    ]


def ntt_incomplete(a: list[int], q: int, zeta: int | None = None) -> list[int]:
    n = len(a)
    h = n // 2
    if zeta is None:
        zeta = find_root(q, n)
    if pow(zeta, h, q) != q - 1:
        raise ValueError("zeta is not a primitive n-th root")
    out = [0] * n
    for j in range(h):
        w = [pow(zeta, (2 * j + 1) * i, q) for i in range(h)]
        out[2 * j] = sum(a[2 * i] * w[i] for i in range(h)) % q
        out[2 * j + 1] = sum(a[2 * i + 1] * w[i] for i in range(h)) % q
    return out


def intt_incomplete(ah: list[int], q: int, zeta: int | None = None) -> list[int]:
    n = len(ah)
    h = n // 2
    if zeta is None:
        zeta = find_root(q, n)
    hinv = pow(h, -1, q)
    zinv = pow(zeta, -1, q)
    out = [0] * n
    for i in range(h):
        w = [pow(zinv, (2 * j + 1) * i, q) for j in range(h)]
        out[2 * i] = hinv * sum(ah[2 * j] * w[j] for j in range(h)) % q
        out[2 * i + 1] = hinv * sum(ah[2 * j + 1] * w[j] for j in range(h)) % q
    return out


def negacyclic_mul(a: list[int], b: list[int], q: int) -> list[int]:
    """Schoolbook product mod X^n + 1, for checking the NTT convolution law."""
    n = len(a)
    out = [0] * n
    for i in range(n):
        for j in range(n):
            k = i + j
            if k < n:
                out[k] = (out[k] + a[i] * b[j]) % q
            else:
                out[k - n] = (out[k - n] - a[i] * b[j]) % q
    return out
