from __future__ import annotations

import json
import logging
import os
import sys
import time
from logging.config import dictConfig, fileConfig
from typing import Any, IO, Mapping, Optional, TYPE_CHECKING, Union

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


if TYPE_CHECKING:
    from .config import Config
    from .typing import SweepRow


def _create_logger(
    name: str,
    target: Union[logging.Logger, str, None],
    level: Optional[str],
    sys_default: IO,
    *,
    propagate: bool = True,
) -> Optional[logging.Logger]:
    if isinstance(target, logging.Logger):
        return target

    if target:
        logger = logging.getLogger(name)
        logger.handlers = [
            logging.StreamHandler(sys_default) if target == "-" else logging.FileHandler(target)  # type: ignore # noqa: E501
        ]
        logger.propagate = propagate
        formatter = logging.Formatter(
            "%(asctime)s [%(process)d] [%(levelname)s] %(message)s",
            "[%Y-%m-%d %H:%M:%S %z]",
        )
        logger.handlers[0].setFormatter(formatter)
        if level is not None:
            logger.setLevel(logging.getLevelName(level.upper()))
        return logger
    else:
        return None


class Logger:
    """Error logger for the package plus a progress logger for sweeps.

    The error logger is the parent ``optoarray`` logger, so that messages
    from the library modules reach the same handlers.
    """

    def __init__(self, config: "Config") -> None:
        self.progress_log_format = config.progress_log_format

        self.progress_logger = _create_logger(
            "optoarray.progress",
            config.progresslog,
            config.loglevel,
            sys.stdout,
            propagate=False,
        )
        self.error_logger = _create_logger(
            "optoarray", config.errorlog, config.loglevel, sys.stderr
        )

        if config.logconfig is not None:
            if config.logconfig.startswith("json:"):
                with open(config.logconfig[5:]) as file_:
                    dictConfig(json.load(file_))
            elif config.logconfig.startswith("toml:"):
                with open(config.logconfig[5:], "rb") as file_:
                    dictConfig(tomllib.load(file_))
            else:
                log_config = {
                    "__file__": config.logconfig,
                    "here": os.path.dirname(config.logconfig),
                }
                fileConfig(config.logconfig, defaults=log_config, disable_existing_loggers=False)
        else:
            if config.logconfig_dict is not None:
                dictConfig(config.logconfig_dict)

    def progress(self, row: "SweepRow") -> None:
        if self.progress_logger is not None:
            self.progress_logger.info(self.progress_log_format, self.atoms(row))

    def _emit(self, level: int, message: str, *args: Any, **kwargs: Any) -> None:
        if self.error_logger is not None:
            self.error_logger.log(level, message, *args, **kwargs)

    def error(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit(logging.ERROR, message, *args, **kwargs)

    def warning(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit(logging.WARNING, message, *args, **kwargs)

    def info(self, message: str, *args: Any, **kwargs: Any) -> None:
        self._emit(logging.INFO, message, *args, **kwargs)

    def atoms(self, row: "SweepRow") -> Mapping[str, str]:
        """Map progress format keys to the values of one sweep row, override to add keys."""
        return ProgressLogAtoms(row)

    def __getattr__(self, name: str) -> Any:
        return getattr(self.error_logger, name)


def _format(value: Any) -> str:
    if value is None:
        return "-"
    elif isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


class ProgressLogAtoms(dict):
    def __init__(self, row: "SweepRow") -> None:
        for name, value in row.items():
            self[f"{{{name}}}r"] = _format(value)
        wall_time = row.get("wall_time")
        self.update(
            {
                "axis": _format(row.get("axis")),
                "v": _format(row.get("value")),
                "s": _format(row.get("state")),
                "n": _format(row.get("n_m")),
                "f": _format(row.get("raw_fidelity")),
                "F": _format(row.get("corrected_fidelity")),
                "M": _format(row.get("max_phase_fidelity")),
                "tau": _format(row.get("tau")),
                "T": "-" if wall_time is None else f"{wall_time:.3f}",
                "e": "" if row.get("error") is None else f"error={row['error']}",
                "p": f"<{os.getpid()}>",
                "t": time.strftime("[%d/%b/%Y:%H:%M:%S %z]"),
            }
        )

    def __getitem__(self, key: str) -> str:
        try:
            return super().__getitem__(key)
        except KeyError:
            return "-"
