"""Shared output helpers: round-trip float formatting and atomic file writes."""
import os
import tempfile
from pathlib import Path


def fmt(x) -> str:
    """17 significant digits, enough for an exact float64 round trip."""
    return format(float(x), ".17g")


def atomic_write(path, data, mode="w"):
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, mode, **({} if "b" in mode else {"newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
