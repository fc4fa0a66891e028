"""Line-oriented key=value report format shared by the pipeline stages."""

from __future__ import annotations

from typing import Mapping


def format_value(value: object) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def kv_lines(mapping: Mapping[str, object]) -> str:
    return "".join(f"{k}={format_value(v)}\n" for k, v in mapping.items())


def parse_kv(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"line {lineno}: expected 'key=value', got {line!r}")
        out[key] = value
    return out
