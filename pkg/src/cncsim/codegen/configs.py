"""Computing Block geometry registry.

A Computing Block (CB) is the logical n-row x m-column partition of the
array that one kernel lane occupies.  CBs in different tiles share wordlines
and therefore execute in parallel.  The registry records the recommended
geometry per algorithm; note the NTT256 row lists 16 tiles even though
512/16 columns would give 32: the transform only drives 16 of them with
data and the idle tiles carry twiddle replicas, so the generic
tiles == 512//m_cols relation is not enforced against the registry.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CbConfig:
    n_rows: int
    m_cols: int
    tiles: int
    parallel_cbs: int
    data_width_bits: int


CB_REGISTRY = {
    "AES128": CbConfig(4, 32, 16, 16, 128),
    "AES256": CbConfig(4, 32, 16, 16, 256),
    "Keccak1600": CbConfig(64, 25, 20, 1, 1600),
    "NTT128": CbConfig(128, 16, 32, 2, 2048),
    "NTT256": CbConfig(256, 16, 16, 1, 4096),
    "Kyber512-poly": CbConfig(256, 16, 16, 1, 4096),
    "Dilithium2-poly": CbConfig(256, 32, 16, 1, 8192),
    "GHASH": CbConfig(8, 128, 4, 1, 128),
}

# 5-bit algorithm identifiers used by ALG_CNC (space for 32 variants).
ALG_IDS = {
    "aes128": 0,
    "keccak": 1,
    "mmult16": 2,
    "mmult32": 3,
    "ntt8": 4,
    "ntt128": 5,
    "ntt256": 6,
    "kyber_ntt": 7,
    "dilithium_ntt": 8,
    "ghash": 9,
    "intt8": 10,
    "intt128": 11,
    "intt256": 12,
    "kyber_intt": 13,
    "dilithium_intt": 14,
}


def layout_for(alg: str) -> CbConfig:
    """Registry lookup by algorithm name."""
    try:
        return CB_REGISTRY[alg]
    except KeyError:
        raise KeyError(f"no Computing Block configuration for {alg!r}") from None
