"""Configuration management module."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from dotenv import load_dotenv

from .errors import ConfigError


@dataclass
class Config:
    """Runtime settings."""

    out_dir: Path = field(default_factory=lambda: Path("results"))
    samples: int = 500
    dt_max: float = 1e-3
    log_level: str = "WARNING"

    # Reconstruction solver
    newton_tol: float = 1e-10
    newton_max_iter: int = 200
    divergence_factor: float = 1e3

    # Thermodynamic reports
    temperature: float = 298.15

    @classmethod
    def load(cls) -> Config:
        """Load configuration from environment variables and .env file."""
        env_path = Path.cwd() / ".env"
        if env_path.exists():
            load_dotenv(env_path)

        config = cls(
            out_dir=Path(os.getenv("LOGQUOTIENT_OUT_DIR", "results")),
            samples=_env_number("LOGQUOTIENT_SAMPLES", "500", int),
            dt_max=_env_number("LOGQUOTIENT_DT_MAX", "1e-3", float),
            log_level=os.getenv("LOGQUOTIENT_LOG_LEVEL", "WARNING").upper(),
            newton_tol=_env_number("LOGQUOTIENT_NEWTON_TOL", "1e-10", float),
            newton_max_iter=_env_number("LOGQUOTIENT_NEWTON_MAX_ITER", "200", int),
            divergence_factor=_env_number("LOGQUOTIENT_DIVERGENCE_FACTOR", "1e3", float),
            temperature=_env_number("LOGQUOTIENT_TEMPERATURE", "298.15", float),
        )
        config.validate()
        return config

    def validate(self) -> None:
        """Reject settings no operation can run with."""
        if self.samples < 1:
            raise ConfigError(f"samples must be >= 1, got {self.samples}")
        if not self.dt_max > 0:
            raise ConfigError(f"dt_max must be positive, got {self.dt_max}")
        if not self.newton_tol > 0:
            raise ConfigError(f"newton_tol must be positive, got {self.newton_tol}")
        if self.newton_max_iter < 1:
            raise ConfigError(f"newton_max_iter must be >= 1, got {self.newton_max_iter}")
        if not self.divergence_factor > 0:
            raise ConfigError(f"divergence_factor must be positive, got {self.divergence_factor}")
        if not self.temperature > 0:
            raise ConfigError(f"temperature must be positive, got {self.temperature}")
        if self.log_level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ConfigError(f"unknown log level: {self.log_level}")


def _env_number(name: str, default: str, kind: type):
    raw = os.getenv(name, default)
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not a valid {kind.__name__}") from None
