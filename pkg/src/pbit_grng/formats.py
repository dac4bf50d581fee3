"""On-disk sample formats.

Binary layout (little endian)::

    offset  size  field
    0       4     magic b"PGRN"
    4       2     version (u16) = 1
    6       2     n_bits (u16)
    8       1     mode (u8: 0 sequential, 1 random-scan, 2 ct-autonomous)
    9       1     flags (u8: bit 0 = config trailer present)
    10      2     reserved (u16, zero)
    12      8     mu (f64)
    20      8     sigma (f64)
    28      8     seed (u64)
    36      8     count (u64)
    44      8*n   readouts G (u64 each)

An optional trailer follows the payload: b"PCFG", a u32 byte length, then the
resolved experiment config as UTF-8 ``key = value`` text.

CSV: optional ``#`` comment lines carrying the config, then the header
``index,G,X`` and one row per sample with X printed to 17 significant digits.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .coupling import GrngSpec, Mode
from .errors import FormatError

MAGIC = b"PGRN"
VERSION = 1
TRAILER_MAGIC = b"PCFG"
FLAG_CONFIG = 0x01
_HEADER = struct.Struct("<4sHHBBHddQQ")
HEADER_SIZE = _HEADER.size
CSV_HEADER = "index,G,X"


@dataclass
class SampleFile:
    n_bits: int
    mode: Mode
    mu: float
    sigma: float
    seed: int
    values: np.ndarray
    config_text: str | None = None
    version: int = VERSION

    @property
    def g0(self) -> int:
        return (1 << self.n_bits) - 1


def encode_binary(values, n_bits: int, mode: Mode, mu: float, sigma: float, seed: int,
                  config_text: str | None = None) -> bytes:
    values = np.ascontiguousarray(values, dtype="<u8")
    flags = FLAG_CONFIG if config_text is not None else 0
    header = _HEADER.pack(MAGIC, VERSION, n_bits, Mode(mode).code, flags, 0,
                          float(mu), float(sigma), int(seed), values.shape[0])
    parts = [header, values.tobytes()]
    if config_text is not None:
        blob = config_text.encode("utf-8")
        parts += [TRAILER_MAGIC, struct.pack("<I", len(blob)), blob]
    return b"".join(parts)


def decode_binary(data: bytes) -> SampleFile:
    if len(data) == 0:
        raise FormatError("empty sample file", offset=0)
    if len(data) < 4 or data[:4] != MAGIC:
        raise FormatError(f"bad magic {bytes(data[:4])!r}, expected {MAGIC!r}", offset=0)
    if len(data) < HEADER_SIZE:
        raise FormatError(f"header truncated: {len(data)} of {HEADER_SIZE} bytes", offset=len(data))
    magic, version, n_bits, mode_code, flags, reserved, mu, sigma, seed, count = _HEADER.unpack_from(data)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if not 1 <= n_bits <= 64:
        raise FormatError(f"n_bits={n_bits} out of range", offset=6)
    try:
        mode = Mode.from_code(mode_code)
    except Exception:
        raise FormatError(f"unknown mode code {mode_code}", offset=8) from None
    if flags & ~FLAG_CONFIG:
        raise FormatError(f"unknown flags 0x{flags:02x}", offset=9)
    if reserved != 0:
        raise FormatError("reserved field is not zero", offset=10)
    payload_end = HEADER_SIZE + 8 * count
    if len(data) < payload_end:
        have = (len(data) - HEADER_SIZE) // 8
        raise FormatError(
            f"payload truncated: header declares {count} samples, file holds {have}",
            offset=HEADER_SIZE + 8 * have,
        )
    values = np.frombuffer(data, dtype="<u8", count=count, offset=HEADER_SIZE).astype(np.uint64)
    if n_bits < 64 and count:
        over = np.nonzero(values > np.uint64((1 << n_bits) - 1))[0]
        if over.size:
            k = int(over[0])
            raise FormatError(f"sample {k} exceeds G0 for n_bits={n_bits}", offset=HEADER_SIZE + 8 * k)
    config_text = None
    rest = data[payload_end:]
    if flags & FLAG_CONFIG:
        if len(rest) < 8 or rest[:4] != TRAILER_MAGIC:
            raise FormatError("config trailer missing or malformed", offset=payload_end)
        (length,) = struct.unpack_from("<I", rest, 4)
        if len(rest) != 8 + length:
            raise FormatError(f"config trailer declares {length} bytes, found {len(rest) - 8}",
                              offset=payload_end + 4)
        try:
            config_text = bytes(rest[8:]).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError("config trailer is not UTF-8", offset=payload_end + 8 + exc.start) from None
    elif rest:
        raise FormatError(f"{len(rest)} unexpected bytes after payload", offset=payload_end)
    return SampleFile(n_bits, mode, mu, sigma, int(seed), values, config_text, version)


def write_binary(path, stream, config_text: str | None = None) -> None:
    spec = stream.meta.spec
    Path(path).write_bytes(encode_binary(stream.values, spec.n_bits, spec.mode, spec.mu,
                                         spec.sigma, stream.meta.seed, config_text))


def read_binary(path) -> SampleFile:
    return decode_binary(Path(path).read_bytes())


def format_csv(values, spec: GrngSpec, config_text: str | None = None) -> str:
    values = np.asarray(values, dtype=np.uint64)
    g0 = float(spec.g0)
    buf = io.StringIO()
    if config_text:
        for line in config_text.splitlines():
            buf.write(f"# {line}\n")
    buf.write(CSV_HEADER + "\n")
    for k, g in enumerate(values.tolist()):
        x = (float(g) / g0 - spec.mu) / spec.sigma
        buf.write(f"{k},{g},{x:.17g}\n")
    return buf.getvalue()


def write_csv(path, stream, config_text: str | None = None) -> None:
    Path(path).write_text(format_csv(stream.values, stream.meta.spec, config_text))


def parse_csv(text: str) -> tuple[np.ndarray, np.ndarray, str | None]:
    """Return ``(G values, X values, config text)`` from CSV text."""
    comments, g, x = [], [], []
    header_seen = False
    offset = 0
    for raw in text.splitlines(keepends=True):
        line = raw.strip()
        if not header_seen:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            elif line == CSV_HEADER:
                header_seen = True
            elif line:
                raise FormatError(f"expected CSV header {CSV_HEADER!r}, got {line!r}", offset=offset)
        elif line:
            parts = line.split(",")
            if len(parts) != 3:
                raise FormatError(f"malformed CSV row {line!r}", offset=offset)
            try:
                idx, gv, xv = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise FormatError(f"malformed CSV row {line!r}", offset=offset) from None
            if idx != len(g):
                raise FormatError(f"row index {idx} out of sequence", offset=offset)
            g.append(gv)
            x.append(xv)
        offset += len(raw.encode("utf-8"))
    if not header_seen:
        raise FormatError("CSV header not found", offset=offset)
    # Lines come back newline-terminated, matching the echo stored in binaries.
    config = "".join(c + "\n" for c in comments) if comments else None
    return np.array(g, dtype=np.uint64), np.array(x, dtype=np.float64), config


def read_csv(path):
    return parse_csv(Path(path).read_text())


def write_table_csv(path, header, rows, config_text: str | None = None) -> None:
    """Generic CSV with a commented config preamble."""
    buf = io.StringIO()
    if config_text:
        for line in config_text.splitlines():
            buf.write(f"# {line}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_cell(v) for v in row) + "\n")
    Path(path).write_text(buf.getvalue())


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)
