"""Named random substreams derived from one master seed.

Every consumer (game generation, weight init, epsilon draws, replay and pair
sampling, k-means, ...) gets its own stream keyed by name, so adding a new
consumer never perturbs the draws of existing ones.
"""

from __future__ import annotations

import numpy as np


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def substream(master_seed: int, name: str) -> np.random.Generator:
    """Deterministic generator for (master_seed, name)."""
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, _fnv1a64(name)])
    return np.random.Generator(np.random.PCG64(seq))


def generator_state(rng: np.random.Generator) -> dict:
    """JSON-safe snapshot of a PCG64 generator."""
    st = rng.bit_generator.state
    return {
        "bit_generator": st["bit_generator"],
        "state": str(st["state"]["state"]),
        "inc": str(st["state"]["inc"]),
        "has_uint32": st["has_uint32"],
        "uinteger": st["uinteger"],
    }


def restore_generator(snapshot: dict) -> np.random.Generator:
    rng = np.random.Generator(np.random.PCG64())
    rng.bit_generator.state = {
        "bit_generator": snapshot["bit_generator"],
        "state": {"state": int(snapshot["state"]), "inc": int(snapshot["inc"])},
        "has_uint32": snapshot["has_uint32"],
        "uinteger": snapshot["uinteger"],
    }
    return rng
