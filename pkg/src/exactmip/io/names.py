from __future__ import annotations

import re

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_.\[\]]*\Z")
RESERVED = {
    "min", "max", "minimize", "maximize", "minimise", "maximise", "minimum", "maximum",
    "st", "s.t.", "subject", "such", "bounds", "bound", "general", "generals", "gen",
    "integer", "integers", "binary", "binaries", "bin", "end", "free", "inf", "infinity",
}


def _valid(name: str) -> bool:
    return bool(_NAME.match(name)) and name.lower() not in RESERVED and not (
        name[0] in "eE" and name[1:].isdigit())


def writable_names(names: list[str], prefix: str) -> list[str]:
    """Keep the names if all are usable and distinct, else ``prefix0, prefix1, ...``."""
    if len(set(names)) == len(names) and all(_valid(n) for n in names):
        return list(names)
    return [f"{prefix}{i}" for i in range(len(names))]
