"""Server configuration: where the checkpoints live and how to serve them.

Settings come from an optional JSON config file plus keyword overrides
(command-line flags); overrides win. The file holds the same keys as the
dataclass fields.
"""

import dataclasses
import json

_REQUIRED = ("victim_checkpoint", "masked_lm_checkpoint")


@dataclasses.dataclass(frozen=True)
class ServerConfig:
    """Checkpoint locations plus serving limits."""

    victim_checkpoint: str
    masked_lm_checkpoint: str
    device: str = "cpu"
    max_length: int = 128
    host: str = "127.0.0.1"
    port: int = 9009

    def validate(self):
        """Raise ValueError on nonsense values; return self for chaining."""
        for field in _REQUIRED:
            if not getattr(self, field):
                raise ValueError(f"{field} is required")
        if not (self.device == "cpu" or self.device == "cuda"
                or self.device.startswith("cuda:")):
            raise ValueError(f"unsupported device {self.device!r}")
        if self.max_length < 8:
            raise ValueError("max_length must be at least 8")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port {self.port} out of range")
        return self


def load_config(path=None, **overrides):
    """Build a ServerConfig from an optional JSON file plus overrides.

    `path` may be None (flags only). Override values of None mean "not
    given" and fall back to the file value or the field default.
    """
    values = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as handle:
            loaded = json.load(handle)
        if not isinstance(loaded, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        known = {field.name for field in dataclasses.fields(ServerConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise ValueError(f"{path}: unknown config keys {sorted(unknown)}")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if v is not None})
    missing = [field for field in _REQUIRED if not values.get(field)]
    if missing:
        raise ValueError(f"missing config values: {missing}")
    return ServerConfig(**values).validate()
