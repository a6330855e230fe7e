"""Deterministic per-stream seed derivation."""

_GOLDEN = 0x9E3779B97F4A7C15
_MASK = (1 << 64) - 1


def _splitmix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master, stream_id):
    """Collision-free 64-bit seed for one work stream of a master seed.

    The stream counter advances by the odd golden-ratio constant, so the
    pre-mix values are distinct for distinct streams, and the splitmix64
    finalizer is a bijection: seeds never collide for a fixed master.
    Pure and stable: same inputs always give the same seed.
    """
    if not 0 <= master < 1 << 64:
        raise ValueError("master must be a 64-bit unsigned integer")
    if stream_id < 0:
        raise ValueError("stream_id must be nonnegative")
    z = (master + (stream_id + 1) * _GOLDEN) & _MASK
    return _splitmix64(z)
