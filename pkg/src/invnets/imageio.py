"""File exchange formats: PGM images and CSV matrices.

PGM (P2 ASCII or P5 binary, 8- or 16-bit) is used for viewable images;
float data is quantized over an explicit or data-derived range.  Exact
float matrices travel as RFC-4180-style CSV with a header row; values use
``repr`` and parse back bit-identically.
"""

import csv
from array import array

from invnets.errors import ConfigError, ShapeError
from invnets.tensor import Tensor


def write_pgm(path, img, maxval=255, lo=None, hi=None, binary=True):
    """Quantize a 2-D tensor to [0, maxval] and write a PGM file.

    The source range [lo, hi] defaults to the data range (constant images
    map to 0).  maxval up to 255 writes one byte per pixel, above that two
    (big-endian), per the format.
    """
    if img.ndim != 2:
        raise ShapeError("PGM output needs a 2-D tensor")
    if not 1 <= maxval <= 65535:
        raise ConfigError(f"maxval must be in [1, 65535], got {maxval}")
    data = img.data
    lo = min(data) if lo is None else float(lo)
    hi = max(data) if hi is None else float(hi)
    span = hi - lo
    pixels = []
    for v in data:
        if span <= 0.0:
            q = 0
        else:
            q = int(round((v - lo) / span * maxval))
        pixels.append(min(max(q, 0), maxval))
    hh, ww = img.shape
    if binary:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{ww} {hh}\n{maxval}\n".encode("ascii"))
            if maxval < 256:
                fh.write(bytes(pixels))
            else:
                out = bytearray()
                for q in pixels:
                    out.append(q >> 8)
                    out.append(q & 0xFF)
                fh.write(bytes(out))
        return
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{ww} {hh}\n{maxval}\n")
        for i in range(hh):
            fh.write(" ".join(str(p) for p in pixels[i * ww : (i + 1) * ww]) + "\n")


def read_pgm(path):
    """Read P2/P5 into (Tensor of raw integer levels, maxval)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    tokens = []
    i = 0
    # header: magic, width, height, maxval, with '#' comments
    while len(tokens) < 4:
        while i < len(blob) and blob[i : i + 1].isspace():
            i += 1
        if i < len(blob) and blob[i : i + 1] == b"#":
            while i < len(blob) and blob[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(blob) and not blob[j : j + 1].isspace():
            j += 1
        tokens.append(blob[i:j])
        i = j
    magic = tokens[0].decode("ascii")
    ww, hh, maxval = (int(t) for t in tokens[1:4])
    if magic == "P5":
        i += 1  # single whitespace after maxval
        data = array("d")
        if maxval < 256:
            raw = blob[i : i + ww * hh]
            data.extend(float(b) for b in raw)
        else:
            raw = blob[i : i + 2 * ww * hh]
            for p in range(0, len(raw), 2):
                data.append(float((raw[p] << 8) | raw[p + 1]))
    elif magic == "P2":
        vals = blob[i:].split()
        data = array("d", (float(int(v)) for v in vals[: ww * hh]))
    else:
        raise ConfigError(f"unsupported PGM magic {magic!r}")
    if len(data) != ww * hh:
        raise ConfigError(f"PGM payload truncated: {len(data)} of {ww * hh} pixels")
    return Tensor((hh, ww), data), maxval


def write_csv_matrix(path, tensor, header=None):
    """Write a tensor as CSV with exact repr floats; scalars/vectors get one row."""
    if tensor.ndim == 2:
        rows = tensor.tolist()
    elif tensor.ndim == 1:
        rows = [tensor.tolist()]
    else:
        rows = [[tensor.item()]]
    ncol = len(rows[0])
    if header is None:
        header = [f"c{j}" for j in range(ncol)]
    with open(path, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) for v in row])


def read_csv_matrix(path):
    """Read a CSV matrix written by write_csv_matrix (header skipped)."""
    with open(path, "r", encoding="ascii", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path}: empty CSV")
    body = rows[1:]
    if not body:
        raise ConfigError(f"{path}: CSV has a header but no data")
    ncol = len(body[0])
    data = array("d")
    for r, row in enumerate(body):
        if len(row) != ncol:
            raise ConfigError(f"{path}: ragged CSV at data row {r}")
        data.extend(float(v) for v in row)
    return Tensor((len(body), ncol), data)


def write_csv_table(path, header, rows):
    """Generic CSV table; floats via repr, everything else via str."""
    with open(path, "w", encoding="ascii", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else str(v) for v in row])
