"""Flat key-value run configuration and the run manifest.

Config files are ``key = value`` lines with ``#`` comments.  Precedence is
CLI flag over config file over built-in default; the fully resolved set is
frozen into ``manifest.txt`` before any computation, and a manifest is
itself a valid config file, so rerunning with ``--config manifest.txt``
reproduces a run bit for bit.
"""

from .errors import ConfigError


def parse_config_file(path):
    """Parse ``key = value`` lines into an ordered dict of strings."""
    values = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not key:
                raise ConfigError(f"{path}:{lineno}: empty key")
            values[key] = value
    return values


class Resolver:
    """Layered lookup (overrides > file > defaults) with typed accessors.

    Every key that is read gets recorded with its resolved value, which is
    exactly what the manifest freezes.
    """

    def __init__(self, file_values=None, overrides=None):
        self.file_values = dict(file_values or {})
        self.overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
        self.resolved = {}

    def _raw(self, key, default):
        if key in self.overrides:
            return str(self.overrides[key])
        if key in self.file_values:
            return self.file_values[key]
        return default

    def _record(self, key, value):
        self.resolved[key] = value
        return value

    def get_str(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None:
            return self._record(key, None)
        return self._record(key, str(raw))

    def get_int(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or raw == "":
            return self._record(key, None)
        try:
            value = int(str(raw))
        except ValueError:
            raise ConfigError(f"config key {key}: expected integer, got {raw!r}") from None
        return self._record(key, value)

    def get_float(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or raw == "":
            return self._record(key, None)
        try:
            value = float(str(raw))
        except ValueError:
            raise ConfigError(f"config key {key}: expected number, got {raw!r}") from None
        return self._record(key, value)

    def get_float_list(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or raw == "":
            return self._record(key, None)
        if isinstance(raw, (list, tuple)):
            values = [float(v) for v in raw]
        else:
            try:
                values = [float(part) for part in str(raw).split(",") if part.strip()]
            except ValueError:
                raise ConfigError(
                    f"config key {key}: expected comma-separated numbers, got {raw!r}"
                ) from None
        if not values:
            raise ConfigError(f"config key {key}: empty list")
        return self._record(key, values)

    def require(self, key, getter, message=None):
        value = getter(key)
        if value is None:
            raise ConfigError(message or f"config key {key} is required")
        return value


def manifest_lines(subcommand, resolved):
    """Manifest body: the subcommand plus every resolved key, sorted."""
    lines = [
        "# run manifest: rerun with `chaintest "
        f"{subcommand} --config <this file>` for bit-identical outputs",
        f"subcommand = {subcommand}",
    ]
    for key in sorted(resolved):
        value = resolved[key]
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            rendered = ",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                                for v in value)
        elif isinstance(value, float):
            rendered = f"{value:.17g}"
        else:
            rendered = str(value)
        lines.append(f"{key} = {rendered}")
    return "\n".join(lines) + "\n"


def write_manifest(path, subcommand, resolved):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(manifest_lines(subcommand, resolved))
