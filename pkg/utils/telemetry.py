import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict


class TelemetryLogger:
    """Run-level event log (command start/finish, headline metrics) in a rotating file."""

    def __init__(self, log_dir: str = "./logs"):
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        self.log_path = Path(log_dir) / "telemetry.log"
        self.logger = logging.getLogger("trboost_telemetry")
        self.logger.setLevel(logging.INFO)
        self.logger.propagate = False

        # One handler per target file
        if not any(
            isinstance(h, RotatingFileHandler) and Path(h.baseFilename) == self.log_path.resolve()
            for h in self.logger.handlers
        ):
            handler = RotatingFileHandler(
                str(self.log_path),
                maxBytes=1024 * 1024,  # 1MB
                backupCount=3,
            )
            formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
            handler.setFormatter(formatter)
            self.logger.addHandler(handler)

    def log_event(self, event_type: str, metrics: Dict[str, Any]):
        """
        Logs a structured event.
        Array payloads are dropped; only scalars and short strings are kept.
        """
        safe_metrics = {
            k: v for k, v in metrics.items()
            if isinstance(v, (str, int, float, bool)) or v is None
        }
        self.logger.info(f"EVENT: {event_type} - {safe_metrics}")

    def log_error(self, error_type: str, message: str):
        self.logger.error(f"ERROR: {error_type} - {message}")

    def close(self):
        for handler in list(self.logger.handlers):
            if isinstance(handler, RotatingFileHandler) and Path(handler.baseFilename) == self.log_path.resolve():
                handler.close()
                self.logger.removeHandler(handler)


# Simple module-level logger factory
_logger_cache: Dict[str, logging.Logger] = {}
_level = logging.WARNING


def get_logger(name: str) -> logging.Logger:
    """Get or create a logger for the given module name."""
    if name not in _logger_cache:
        logger = logging.getLogger(name)
        # Only add handler if not already configured
        if not logger.handlers:
            handler = logging.StreamHandler()
            handler.setLevel(_level)
            formatter = logging.Formatter('%(name)s - %(levelname)s - %(message)s')
            handler.setFormatter(formatter)
            logger.addHandler(handler)
            logger.setLevel(_level)
        _logger_cache[name] = logger
    return _logger_cache[name]


def set_verbosity(verbose: bool):
    """Switch every cached logger (and future ones) between WARNING and INFO."""
    global _level
    _level = logging.INFO if verbose else logging.WARNING
    for logger in _logger_cache.values():
        logger.setLevel(_level)
        for handler in logger.handlers:
            handler.setLevel(_level)
