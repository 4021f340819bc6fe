"""Writer for the NSRD residual dataset format.

Layout (little-endian): magic "NSRD", version u16 (=1), dim u32, count
u64, then count records of (a u32, b u32, float32 x dim). This mirrors
the reader in the probe-training package; the binary layout is the
interface between the two.
"""

import struct

import numpy as np

from .errors import ExtractorError

MAGIC = b"NSRD"
VERSION = 1
_HEADER = struct.Struct("<4sHIQ")


def write_nsrd(path, pairs, vectors):
    pairs = np.ascontiguousarray(pairs, dtype=np.uint32)
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    if pairs.ndim != 2 or pairs.shape[1] != 2:
        raise ExtractorError(f"pairs must be (n, 2), got {pairs.shape}")
    if vectors.ndim != 2 or vectors.shape[0] != pairs.shape[0]:
        raise ExtractorError(
            f"vectors shape {vectors.shape} does not match {pairs.shape[0]} pair(s)"
        )
    n, dim = vectors.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, n))
        for k in range(n):
            fh.write(struct.pack("<II", int(pairs[k, 0]), int(pairs[k, 1])))
            fh.write(vectors[k].tobytes())
