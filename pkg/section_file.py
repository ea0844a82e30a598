"""
Tactile Toolkit - Section file grammar
Line-oriented `[section]` / `key = value` text shared by calibration profiles
and simulator scenarios

    # comment
    [section]
    key = value
    list_key = 1.5, 2.5, 3.5

Numbers are written with 17 significant digits so floats survive a round trip.
"""

import math
import os
import tempfile
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from errors import ProfileParseError


def fmt_float(value: float) -> str:
    return format(float(value), ".17g")


def fmt_floats(values: Iterable[float]) -> str:
    return ", ".join(fmt_float(v) for v in values)


class Section:
    """Entries of one [section] with the line each came from"""

    def __init__(self, name: str, line: int):
        self.name = name
        self.line = line
        self.entries: Dict[str, Tuple[str, int]] = {}

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def keys(self) -> List[str]:
        return list(self.entries)

    def raw(self, key: str) -> Tuple[str, int]:
        if key not in self.entries:
            raise ProfileParseError(f"Missing key in [{self.name}]", self.line, key)
        return self.entries[key]

    def get_str(self, key: str, default: Optional[str] = None) -> str:
        if default is not None and key not in self.entries:
            return default
        return self.raw(key)[0]

    def get_float(self, key: str, default: Optional[float] = None) -> float:
        if default is not None and key not in self.entries:
            return default
        text, line = self.raw(key)
        try:
            value = float(text)
        except ValueError:
            raise ProfileParseError(f"Not a number: '{text}'", line, key) from None
        if not math.isfinite(value):
            raise ProfileParseError(f"Non-finite value '{text}'", line, key)
        return value

    def get_int(self, key: str, default: Optional[int] = None) -> int:
        if default is not None and key not in self.entries:
            return default
        text, line = self.raw(key)
        try:
            return int(text)
        except ValueError:
            raise ProfileParseError(f"Not an integer: '{text}'", line, key) from None

    def get_bool(self, key: str, default: Optional[bool] = None) -> bool:
        if default is not None and key not in self.entries:
            return default
        text, line = self.raw(key)
        lowered = text.lower()
        if lowered in ("true", "yes", "1"):
            return True
        if lowered in ("false", "no", "0"):
            return False
        raise ProfileParseError(f"Not a boolean: '{text}'", line, key)

    def get_floats(self, key: str, default: Optional[Sequence[float]] = None) -> Tuple[float, ...]:
        if default is not None and key not in self.entries:
            return tuple(default)
        text, line = self.raw(key)
        if not text.strip():
            return ()
        values = []
        for part in text.split(","):
            try:
                value = float(part)
            except ValueError:
                raise ProfileParseError(f"Not a number: '{part.strip()}'", line, key) from None
            if not math.isfinite(value):
                raise ProfileParseError(f"Non-finite value '{part.strip()}'", line, key)
            values.append(value)
        return tuple(values)


def parse_sections(text: str) -> Dict[str, Section]:
    """Parse section text; duplicate sections or keys are errors"""
    sections: Dict[str, Section] = {}
    current: Optional[Section] = None
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ProfileParseError(f"Malformed section header '{line}'", number)
            name = line[1:-1].strip()
            if name in sections:
                raise ProfileParseError(f"Duplicate section [{name}]", number)
            current = Section(name, number)
            sections[name] = current
            continue
        if "=" not in line:
            raise ProfileParseError(f"Expected 'key = value', got '{line}'", number)
        if current is None:
            raise ProfileParseError("Entry before any [section] header", number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ProfileParseError("Empty key", number)
        if key in current.entries:
            raise ProfileParseError(f"Duplicate key in [{current.name}]", number, key)
        current.entries[key] = (value, number)
    return sections


def format_sections(sections: Sequence[Tuple[str, Sequence[Tuple[str, str]]]],
                    header: Optional[str] = None) -> str:
    lines = []
    if header:
        lines.extend(f"# {h}" for h in header.splitlines())
        lines.append("")
    for name, entries in sections:
        lines.append(f"[{name}]")
        lines.extend(f"{key} = {value}" for key, value in entries)
        lines.append("")
    return "\n".join(lines)


def write_atomic(path, text: str):
    """Write to a temporary file beside path, then rename over it"""
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def read_sections(path) -> Dict[str, Section]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ProfileParseError(f"{path} is not UTF-8 text: {e.reason} at byte {e.start}") from None
    except OSError as e:
        raise ProfileParseError(f"Cannot read {path}: {e}") from None
    return parse_sections(text)
