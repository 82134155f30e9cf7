"""Embedding matrix, document metadata and cluster assignment files."""

import struct

import numpy as np

from ..errors import MalformedLine

_HEADER = struct.Struct("<QQ")


def save_embeddings(path, matrix):
    """Header ``(N, D)`` as two little-endian uint64, then N*D little-endian float64."""
    matrix = np.ascontiguousarray(matrix, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*matrix.shape))
        fh.write(matrix.tobytes())


def load_embeddings(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise ValueError(f"{path}: missing (N, D) header")
        n, d = _HEADER.unpack(head)
        payload = fh.read()
    if len(payload) != 8 * n * d:
        raise ValueError(f"{path}: expected {n}x{d} float64 payload, got {len(payload)} bytes")
    return np.frombuffer(payload, dtype="<f8").reshape(n, d).astype(np.float64)


def save_doc_meta(path, doc_ids, days):
    with open(path, "w", encoding="utf-8") as fh:
        for d, t in zip(doc_ids, days):
            fh.write(f"{d}\t{int(t)}\n")


def load_doc_meta(path):
    ids, days = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise MalformedLine(path, lineno, "expected 'doc_id\\tday_index'")
            try:
                day = int(parts[1])
            except ValueError:
                raise MalformedLine(path, lineno, f"non-integer day {parts[1]!r}") from None
            ids.append(parts[0])
            days.append(day)
    return ids, np.asarray(days, dtype=np.int64)


def save_assignment(path, doc_ids, labels):
    with open(path, "w", encoding="utf-8") as fh:
        for d, c in zip(doc_ids, labels):
            fh.write(f"{d}\t{int(c)}\n")


def load_assignment(path):
    return load_doc_meta(path)


def save_doc_events(path, doc_events):
    with open(path, "w", encoding="utf-8") as fh:
        for row in doc_events:
            fh.write("\t".join(row) + "\n")


def load_doc_events(path):
    """``doc_id\\tsubject\\trelation\\tobject`` lines."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise MalformedLine(path, lineno, "expected 'doc_id\\tsubject\\trelation\\tobject'")
            rows.append(tuple(parts))
    return rows
