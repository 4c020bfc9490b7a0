"""Binary table cache.

Layout (little endian): b"NTMC", u32 format version, u8 kind tag
(0 = d, 1 = r, 2 = tau), u64 limit, then ``limit`` signed 64-bit values
for n = 1..limit. Files are named by kind, limit and version, so a cache
written for one configuration is never rewritten by another.
"""

from __future__ import annotations

import logging
import os
import re
import struct
from pathlib import Path

import numpy as np

from .arith_tables import ArithTable, Kind, build_table
from .errors import CacheInvalidError, ResourceLimitError

log = logging.getLogger(__name__)

MAGIC = b"NTMC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIBQ")
CACHE_ENV = "DIVZETA_CACHE_DIR"
_INT64_MAX = 2**63 - 1


def default_cache_dir():
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "divzeta"))


def cache_path(cache_dir, kind, limit, version=FORMAT_VERSION):
    kind = Kind.parse(kind)
    return Path(cache_dir) / f"{kind.name.lower()}-{int(limit)}-v{version}.ntmc"


def encode_table(table, version=FORMAT_VERSION):
    vals = table.values[1:]
    if table.exact:
        if any(v > _INT64_MAX or v < -_INT64_MAX - 1 for v in vals):
            raise ResourceLimitError("table values do not fit the 64-bit cache format")
        vals = np.array([int(v) for v in vals], dtype=np.int64)
    header = _HEADER.pack(MAGIC, version, table.kind.value, table.limit)
    return header + np.ascontiguousarray(vals, dtype="<i8").tobytes()


def decode_table(blob, kind=None, limit=None):
    if len(blob) < _HEADER.size:
        raise CacheInvalidError("cache file shorter than its header")
    magic, version, tag, n = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CacheInvalidError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CacheInvalidError(f"cache version {version}, expected {FORMAT_VERSION}")
    try:
        file_kind = Kind(tag)
    except ValueError:
        raise CacheInvalidError(f"unknown kind tag {tag}") from None
    if kind is not None and file_kind is not Kind.parse(kind):
        raise CacheInvalidError(f"cache holds {file_kind.name}, wanted {Kind.parse(kind).name}")
    if limit is not None and n != int(limit):
        raise CacheInvalidError(f"cache limit {n}, wanted {limit}")
    body = blob[_HEADER.size:]
    if len(body) != 8 * n:
        raise CacheInvalidError(f"cache body has {len(body)} bytes, expected {8 * n}")
    raw = np.frombuffer(body, dtype="<i8").astype(np.int64)
    if file_kind is Kind.RAMANUJAN_TAU:
        values = np.empty(n + 1, dtype=object)
        values[0] = 0
        values[1:] = [int(v) for v in raw]
    else:
        values = np.empty(n + 1, dtype=np.int64)
        values[0] = 0
        values[1:] = raw
    return ArithTable(file_kind, int(n), values)


def write_table(table, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + f".{os.getpid()}.tmp")
    tmp.write_bytes(encode_table(table))
    os.replace(tmp, path)
    return path


def read_table(path, kind=None, limit=None):
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CacheInvalidError(str(exc)) from exc
    return decode_table(blob, kind, limit)


def cache_roundtrip(table, cache_dir):
    """Write ``table`` to the cache and read it back."""
    path = write_table(table, cache_path(cache_dir, table.kind, table.limit))
    return read_table(path, table.kind, table.limit)


def _larger_cached(cache_dir, kind, limit):
    pattern = re.compile(rf"{kind.name.lower()}-(\d+)-v{FORMAT_VERSION}\.ntmc$")
    best = None
    for p in Path(cache_dir).glob(f"{kind.name.lower()}-*-v{FORMAT_VERSION}.ntmc"):
        m = pattern.match(p.name)
        if m and int(m.group(1)) >= limit and (best is None or int(m.group(1)) < best[0]):
            best = (int(m.group(1)), p)
    return best


def _truncate(table, limit):
    vals = table.values[:limit + 1].copy()
    return ArithTable(table.kind, limit, vals)


def load_or_build(kind, limit, cache_dir=None):
    """Return (table, source) where source is "cache" or "built".

    A cached table with a larger limit is sliced. Invalid files are
    rebuilt and overwritten.
    """
    kind = Kind.parse(kind)
    limit = int(limit)
    if cache_dir is None:
        return build_table(kind, limit), "built"
    cache_dir = Path(cache_dir)
    path = cache_path(cache_dir, kind, limit)
    if path.exists():
        try:
            return read_table(path, kind, limit), "cache"
        except CacheInvalidError as exc:
            log.warning("rebuilding %s: %s", path, exc)
    else:
        found = _larger_cached(cache_dir, kind, limit) if cache_dir.exists() else None
        if found is not None:
            try:
                return _truncate(read_table(found[1], kind, found[0]), limit), "cache"
            except CacheInvalidError as exc:
                log.warning("ignoring %s: %s", found[1], exc)
    table = build_table(kind, limit)
    try:
        write_table(table, path)
    except ResourceLimitError as exc:
        log.info("not caching %s table: %s", kind.name, exc)
    return table, "built"
