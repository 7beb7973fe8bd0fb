"""Independent reference implementations used to check the array programs.

Everything in here is on purpose written against the mathematical definition
of each primitive (finite-field algebra, permutation walks, direct
transform evaluation) rather than sharing any structure with the command
generators, so a bug in the array model or a kernel cannot cancel out.
"""

from .aes import aes128_encrypt_block, expand_key, SBOX
from .keccak import keccak_f1600
from .mont import mont_mul, mont_factor
from .ntt import ntt_full, ntt_incomplete, intt_full, intt_incomplete, find_root
from .ghash import ghash, gf128_mul
