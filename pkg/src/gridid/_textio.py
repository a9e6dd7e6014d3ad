"""Versioned text container: one JSON header line followed by CSV blocks.

::

    #gridid <kind>
    {"format": 1, ...}
    [name rows cols]
    v,v,v
    ...

Floats are written with 17 significant digits so a round trip is exact.
"""
from __future__ import annotations

import json

import numpy as np

FORMAT = 1


class SchemaError(ValueError):
    """File does not match the expected kind, version or declared shapes."""


def write_blocks(path, kind, header, blocks):
    header = {"format": FORMAT, "kind": kind, **header}
    with open(path, "w") as fh:
        fh.write(f"#gridid {kind}\n")
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for name, arr in blocks.items():
            arr = np.atleast_2d(np.asarray(arr, dtype=float))
            if arr.size == 0:
                arr = arr.reshape(arr.shape[0] if arr.ndim == 2 else 0, -1)
            fh.write(f"[{name} {arr.shape[0]} {arr.shape[1]}]\n")
            for row in arr:
                fh.write(",".join("%.17g" % v for v in row) + "\n")


def read_blocks(path, kind):
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not a text file") from exc
    if len(lines) < 2 or lines[0].strip() != f"#gridid {kind}":
        raise SchemaError(f"{path}: not a gridid {kind} file")
    try:
        header = json.loads(lines[1])
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: bad header: {exc}") from exc
    if header.get("format") != FORMAT or header.get("kind") != kind:
        raise SchemaError(
            f"{path}: unsupported format {header.get('format')!r} / kind {header.get('kind')!r}"
        )
    blocks, i = {}, 2
    while i < len(lines):
        tag = lines[i].strip()
        if not tag:
            i += 1
            continue
        if not (tag.startswith("[") and tag.endswith("]")):
            raise SchemaError(f"{path}:{i + 1}: expected a block tag, got {tag[:40]!r}")
        try:
            name, rows, cols = tag[1:-1].split()
            rows, cols = int(rows), int(cols)
        except ValueError as exc:
            raise SchemaError(f"{path}:{i + 1}: malformed block tag {tag!r}") from exc
        body = lines[i + 1:i + 1 + rows]
        if len(body) != rows:
            raise SchemaError(f"{path}: block {name} declares {rows} rows, found {len(body)}")
        arr = np.empty((rows, cols))
        for r, text in enumerate(body):
            vals = text.split(",") if cols else []
            if len(vals) != cols:
                raise SchemaError(f"{path}: block {name} row {r} has {len(vals)} values, expected {cols}")
            try:
                arr[r] = [float(v) for v in vals]
            except ValueError as exc:
                raise SchemaError(f"{path}: block {name} row {r}: {exc}") from exc
        blocks[name] = arr
        i += 1 + rows
    return header, blocks


def require_shape(blocks, name, shape, path=""):
    if name not in blocks:
        raise SchemaError(f"{path}: missing block {name}")
    if blocks[name].shape != tuple(shape):
        raise SchemaError(
            f"{path}: block {name} has shape {blocks[name].shape}, header implies {tuple(shape)}"
        )
    return blocks[name]
