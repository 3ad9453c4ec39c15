"""Sectioned ``key = value`` configuration files.

Grammar (one construct per LF-terminated line)::

    # comment
    [section]
    key = value

Keys live inside a section, a key appears at most once per section and a
section header at most once per file. Values are kept as strings; typed
accessors convert them and report the line of the offending entry.
Sections unknown to a consumer are preserved untouched.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from ..errors import ConfigError

_SECTION = re.compile(r"\[([A-Za-z0-9_.\-]+)\]\Z")
_KEY = re.compile(r"[A-Za-z0-9_.\-]+\Z")
_NUMBER = re.compile(r"[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?\Z")


@dataclass
class Config:
    sections: dict[str, dict[str, str]] = field(default_factory=dict)
    lines: dict[tuple[str, str], int] = field(default_factory=dict, compare=False, repr=False)

    def has(self, section: str, key: str) -> bool:
        return key in self.sections.get(section, {})

    def section(self, name: str) -> dict[str, str]:
        return dict(self.sections.get(name, {}))

    def line_of(self, section: str, key: str) -> int | None:
        return self.lines.get((section, key))

    def _fail(self, section, key, msg):
        raise ConfigError(f"[{section}] {key}: {msg}", self.line_of(section, key))

    def get_str(self, section: str, key: str, default: str | None = None) -> str | None:
        return self.sections.get(section, {}).get(key, default)

    def get_float(self, section: str, key: str, default: float | None = None) -> float | None:
        raw = self.get_str(section, key)
        if raw is None:
            return default
        if not _NUMBER.match(raw):
            self._fail(section, key, f"expected a number, got {raw!r}")
        value = float(raw)
        if not math.isfinite(value):
            self._fail(section, key, f"expected a finite number, got {raw!r}")
        return value

    def get_int(self, section: str, key: str, default: int | None = None) -> int | None:
        raw = self.get_str(section, key)
        if raw is None:
            return default
        if not re.fullmatch(r"[+-]?[0-9]+", raw):
            self._fail(section, key, f"expected an integer, got {raw!r}")
        return int(raw)

    def get_bool(self, section: str, key: str, default: bool | None = None) -> bool | None:
        raw = self.get_str(section, key)
        if raw is None:
            return default
        low = raw.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        self._fail(section, key, f"expected a boolean, got {raw!r}")


def parse_config(raw: bytes | str) -> Config:
    if isinstance(raw, bytes):
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ConfigError("invalid UTF-8", raw[: exc.start].count(b"\n") + 1) from None
    else:
        text = raw
    cfg = Config()
    current: str | None = None
    for lineno, line in enumerate(text.split("\n"), start=1):
        if "\r" in line:
            raise ConfigError("carriage return not allowed (LF line endings only)", lineno)
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("["):
            m = _SECTION.match(stripped)
            if not m:
                raise ConfigError(f"malformed section header {stripped!r}", lineno)
            current = m.group(1)
            if current in cfg.sections:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            cfg.sections[current] = {}
            continue
        if "=" not in stripped:
            raise ConfigError(f"expected 'key = value', got {stripped!r}", lineno)
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"invalid key {key!r}", lineno)
        if current is None:
            raise ConfigError(f"key {key!r} outside of any section", lineno)
        if key in cfg.sections[current]:
            raise ConfigError(f"duplicate key {key!r} in section [{current}]", lineno)
        cfg.sections[current][key] = value
        cfg.lines[(current, key)] = lineno
    return cfg


def emit_config(cfg: Config) -> bytes:
    out = []
    for name, entries in cfg.sections.items():
        if out:
            out.append("")
        out.append(f"[{name}]")
        out.extend(f"{k} = {v}" for k, v in entries.items())
    return ("\n".join(out) + "\n").encode("utf-8") if out else b""
