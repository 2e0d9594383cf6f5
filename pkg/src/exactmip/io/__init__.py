"""Exact readers and writers for MPS and LP files."""

from __future__ import annotations

import enum
from pathlib import Path

from ..model import Instance
from .errors import FormatError
from . import lpfile, mps

__all__ = ["FormatTag", "FormatError", "read_instance", "write_instance", "read_file",
           "infer_format"]


class FormatTag(str, enum.Enum):
    MPS = "mps"
    LP = "lp"


def _text(content) -> str:
    if isinstance(content, bytes):
        content = content.decode("latin-1")
    return content.replace("\r\n", "\n").replace("\r", "\n")


def read_instance(content: bytes | str, fmt: FormatTag | str) -> Instance:
    fmt = FormatTag(fmt)
    text = _text(content)
    if fmt is FormatTag.MPS:
        return mps.read(text)
    return lpfile.read(text)


def write_instance(instance: Instance, fmt: FormatTag | str) -> bytes:
    fmt = FormatTag(fmt)
    if fmt is FormatTag.MPS:
        text = mps.write(instance)
    else:
        text = lpfile.write(instance)
    return text.encode("ascii")


def infer_format(path: str | Path) -> FormatTag:
    suffix = Path(path).suffix.lower()
    if suffix == ".mps":
        return FormatTag.MPS
    if suffix == ".lp":
        return FormatTag.LP
    raise FormatError(f"cannot infer format from {str(path)!r}; use --format")


def read_file(path: str | Path, fmt: FormatTag | str | None = None) -> Instance:
    fmt = FormatTag(fmt) if fmt else infer_format(path)
    return read_instance(Path(path).read_bytes(), fmt)
