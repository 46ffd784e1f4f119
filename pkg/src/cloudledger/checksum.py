"""FNV-1a 64-bit hash over block payloads.

See http://isthe.com/chongo/tech/comp/fnv/ for the algorithm family.
FNV-1a XORs each input byte into the running hash before multiplying by
the prime; all arithmetic wraps at 64 bits. Chosen for the manifest
checksum because it is bit-exact everywhere and has no dependencies; it
is not collision resistant and is not meant to be.
"""

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3

_MASK64 = (1 << 64) - 1


def fnv1a64(payload: bytes) -> int:
    """Return the FNV-1a 64-bit digest of ``payload`` (empty input allowed)."""
    h = FNV64_OFFSET_BASIS
    prime = FNV64_PRIME
    mask = _MASK64
    for byte in payload:
        h = ((h ^ byte) * prime) & mask
    return h


def checksum_hex(digest: int) -> str:
    """Render a 64-bit digest as the canonical 16 lowercase hex digits."""
    return format(digest, "016x")
