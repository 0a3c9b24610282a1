"""CSV artifacts with provenance headers.

Every file starts with '#'-prefixed comment lines (the effective merged
configuration and run identity), then one fixed column-header row, then data
rows.  Floats are written with shortest round-trip representation so reruns
with identical inputs are byte-identical.
"""

from __future__ import annotations

import io


def format_value(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(comments, columns, rows, footer_comments=()) -> str:
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_value(v) for v in row) + "\n")
    for line in footer_comments:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def write_csv(path, comments, columns, rows, footer_comments=()) -> None:
    text = render_csv(comments, columns, rows, footer_comments)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def read_csv(path):
    """Read a package CSV back: (comments, columns, rows, footer_comments).

    Data values are parsed as float where possible, else kept as strings.
    """
    comments, columns, rows, footer = [], None, [], []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                (footer if columns is not None else comments).append(line[1:].strip())
                continue
            parts = line.split(",")
            if columns is None:
                columns = parts
                continue
            parsed = []
            for p in parts:
                try:
                    parsed.append(float(p))
                except ValueError:
                    parsed.append(p)
            rows.append(parsed)
    if columns is None:
        raise ValueError(f"{path}: no header row found")
    return comments, columns, rows, footer


def config_comments(cfg, extra=()) -> list:
    """Provenance comment lines: the serialized effective config plus extras."""
    lines = ["effective-config:"]
    lines += ["  " + ln for ln in cfg.serialize().rstrip("\n").split("\n")]
    lines += list(extra)
    return lines
