"""Kernel program generators.

Each generator lowers one algorithm onto the array: it plans the data
layout, emits the command program through the Builder, and wraps the result
in a KernelProgram carrying the host-side contract (staging rows, result
map, algorithm id).  Kernel modules import lazily; generating a program is
real work and most callers want a single kernel.
"""

from __future__ import annotations

import importlib

from .builder import Builder, DataLayout, InfeasibleLayout, plan_implicit_shift
from .configs import ALG_IDS, CB_REGISTRY, CbConfig, layout_for

# kernel name -> (module, generator attr, fixed args, fixed kwargs)
_GEN_SPECS = {
    "aes128": ("aes", "gen_aes128", (), {}),
    "keccak": ("keccak", "gen_keccak", (), {}),
    "mmult16": ("mmult", "gen_mmult", (16,), {}),
    "mmult32": ("mmult", "gen_mmult", (32,), {}),
    "ntt8": ("ntt", "gen_ntt", (8, 257, 16), {}),
    "ntt128": ("ntt", "gen_ntt", (128, 3329, 16), {}),
    "ntt256": ("ntt", "gen_ntt", (256, 12289, 16), {}),
    "kyber_ntt": ("ntt", "gen_kyber_ntt", (), {}),
    "dilithium_ntt": ("ntt", "gen_dilithium_ntt", (), {}),
    "ghash": ("ghash", "gen_ghash", (), {}),
    "intt8": ("ntt", "gen_ntt", (8, 257, 16), {"inverse": True}),
    "intt128": ("ntt", "gen_ntt", (128, 3329, 16), {"inverse": True}),
    "intt256": ("ntt", "gen_ntt", (256, 12289, 16), {"inverse": True}),
    "kyber_intt": ("ntt", "gen_kyber_ntt", (), {"inverse": True}),
    "dilithium_intt": ("ntt", "gen_dilithium_ntt", (), {"inverse": True}),
}

KERNEL_NAMES = tuple(_GEN_SPECS)


def generate(name: str, **kwargs):
    """Build the named kernel's program (see KERNEL_NAMES)."""
    try:
        mod_name, attr, args, fixed = _GEN_SPECS[name]
    except KeyError:
        raise KeyError(f"unknown kernel {name!r}; know {sorted(_GEN_SPECS)}")
    mod = importlib.import_module(f".{mod_name}", __name__)
    return getattr(mod, attr)(*args, **{**fixed, **kwargs})


__all__ = [
    "ALG_IDS",
    "CB_REGISTRY",
    "Builder",
    "CbConfig",
    "DataLayout",
    "InfeasibleLayout",
    "KERNEL_NAMES",
    "generate",
    "layout_for",
    "plan_implicit_shift",
]
