"""Flat ``key=value`` run-config files.

Blank lines and lines starting with ``#`` are ignored. The echo form lists
every field that applies to the run, defaults included, sorted by key, so
``parse_config_text(echo_config(run)) == run``.
"""

from enum import Enum
from pathlib import Path

from pydantic import ValidationError

from ..models.configs import RunConfig
from ..utils.exceptions import ConfigurationException


def parse_config_text(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigurationException(f"{source}:{number}: expected key=value, got {raw!r}")
        if key not in RunConfig.model_fields:
            raise ConfigurationException(f"{source}:{number}: unknown key {key!r}")
        if key in values:
            raise ConfigurationException(f"{source}:{number}: duplicate key {key!r}")
        values[key] = value

    try:
        return RunConfig(**values)  # type: ignore[arg-type]
    except ValidationError as exc:
        problems = []
        for error in exc.errors():
            field = ".".join(str(part) for part in error["loc"]) or "config"
            if error["type"] == "missing":
                problems.append(f"missing required key {field}")
            else:
                message = error["msg"].removeprefix("Value error, ")
                problems.append(message if field == "config" else f"{field}: {message}")
        raise ConfigurationException(f"{source}: " + "; ".join(problems)) from exc


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationException(f"{path}: cannot read config: {exc}") from exc
    return parse_config_text(text, str(path))


def _format(value: object) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def echo_config(run: RunConfig) -> str:
    fields = run.model_dump()
    return "".join(
        f"{key}={_format(fields[key])}\n" for key in sorted(fields) if fields[key] is not None
    )
