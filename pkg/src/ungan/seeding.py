"""Deterministic seed derivation.

Every random stream in the package is keyed by a 64-bit seed derived
from a master seed and a component name:

    seed = first 8 bytes (little-endian) of SHA-256(b"<master>/<name>")

The rule is order-free: adding a new named component never perturbs the
seeds of existing ones, which keeps old artifacts byte-reproducible as
the pipeline grows.
"""

import hashlib


def derive_seed(master_seed: int, name: str) -> int:
    """Derive the 64-bit sub-seed for ``name`` from ``master_seed``."""
    payload = f"{master_seed}/{name}".encode("utf-8")
    digest = hashlib.sha256(payload).digest()
    return int.from_bytes(digest[:8], "little")
