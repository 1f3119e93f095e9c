"""Line-oriented key=value records.

One record is a block of ``key=value`` lines. Blank lines and lines
starting with ``#`` are ignored. This dialect is shared by RIR metadata
sidecars, verification reports, dataset metadata files, manifests and
the CLI config file.
"""

from __future__ import annotations


def kv_str(value) -> str:
    """Render a value for a key=value line (deterministic across runs)."""
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


def dump_kv(record: dict) -> str:
    lines = [f"{key}={kv_str(value)}" for key, value in record.items()]
    return "\n".join(lines) + "\n"


def parse_kv(text: str) -> dict[str, str]:
    record: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"not a key=value line: {line!r}")
        key, _, value = line.partition("=")
        record[key.strip()] = value.strip()
    return record


def load_kv(path) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv(fh.read())


def save_kv(record: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_kv(record))
