"""Parameter checkpoints: named float64 tensors in a simple binary container.

Layout::

    b"LOGOCKPT\\n"
    b"<count>\\n"
    repeated <count> times:
        b"<name>\\t<dim0>,<dim1>,...\\n"      (empty dims for a scalar)
        prod(dims) little-endian float64 values, row-major

An optional trailing JSON object (after ``b"META\\n"``) carries metadata.
"""

import json

import numpy as np

MAGIC = b"LOGOCKPT\n"


def save_checkpoint(path, tensors, meta=None):
    items = sorted(tensors.items())
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(items)}\n".encode())
        for name, arr in items:
            arr = np.asarray(getattr(arr, "data", arr), dtype="<f8")
            if "\t" in name or "\n" in name:
                raise ValueError(f"invalid tensor name {name!r}")
            dims = ",".join(str(n) for n in arr.shape)
            fh.write(f"{name}\t{dims}\n".encode())
            fh.write(np.ascontiguousarray(arr).tobytes())
        if meta is not None:
            fh.write(b"META\n")
            fh.write(json.dumps(meta, sort_keys=True).encode())


def load_checkpoint(path):
    """Return ``(tensors, meta)`` where tensors maps name -> ndarray."""
    with open(path, "rb") as fh:
        if fh.readline() != MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        count = int(fh.readline())
        tensors = {}
        for _ in range(count):
            name, dims = fh.readline().decode().rstrip("\n").split("\t")
            shape = tuple(int(n) for n in dims.split(",")) if dims else ()
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ValueError(f"{path}: truncated payload for {name}")
            tensors[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(np.float64)
        meta = None
        if fh.readline() == b"META\n":
            meta = json.loads(fh.read().decode())
    return tensors, meta
