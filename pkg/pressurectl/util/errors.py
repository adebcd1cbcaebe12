import logging
import math
from typing import Optional, Tuple

import jinja2

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DESIGN_GATE = 3
EXIT_SIM_ABORT = 4


class PressureCtlError(Exception):
	"""Base class for all errors raised by pressurectl."""


class ContractViolation(PressureCtlError, ValueError):
	"""A documented precondition of an operation was broken by the caller."""


class FitError(PressureCtlError, ValueError):
	"""Identification could not produce a trustworthy fit from the data."""


class ConfigError(PressureCtlError):
	"""Malformed or inconsistent configuration; `line` is 1-based when known."""

	def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None) -> None:
		self.line = line
		self.path = path
		where = ""
		if path and line:
			where = f"{path}:{line}: "
		elif path:
			where = f"{path}: "
		elif line:
			where = f"line {line}: "
		super().__init__(f"{where}{message}")


class DesignGateError(PressureCtlError):
	"""Controller design produced a configuration that must not be simulated."""


class SprGateError(DesignGateError):
	"""Error transfer function failed the strictly-positive-real check."""

	def __init__(self, message: str, frequency: float = math.nan) -> None:
		self.frequency = frequency
		if math.isnan(frequency):
			super().__init__(message)
		else:
			super().__init__(f"{message} (violating frequency {frequency:.6g} rad/s)")


class SimulationAbort(PressureCtlError):
	"""Plant or controller left its valid domain; `diagnostic` says where."""

	def __init__(self, diagnostic: str) -> None:
		self.diagnostic = diagnostic
		super().__init__(diagnostic)


class ExceptionManager:
	"""
	Centralized exception-to-user-message mapping and logging policy.
	Keep user-facing messages concise; keep details in logs.
	"""

	@staticmethod
	def map_exception(exc: Exception) -> Tuple[str, int, int]:
		"""Return (user_message, log_level, exit_code) for a given exception."""
		if isinstance(exc, ConfigError):
			return (f"Invalid configuration: {exc}", logging.WARNING, EXIT_CONFIG)
		if isinstance(exc, SprGateError):
			return (f"Design rejected by SPR gate: {exc}", logging.ERROR, EXIT_DESIGN_GATE)
		if isinstance(exc, DesignGateError):
			return (f"Design rejected: {exc}", logging.ERROR, EXIT_DESIGN_GATE)
		if isinstance(exc, SimulationAbort):
			return (f"Simulation aborted: {exc.diagnostic}", logging.ERROR, EXIT_SIM_ABORT)
		if isinstance(exc, FitError):
			return (f"Fit failed: {exc}", logging.ERROR, EXIT_CONFIG)
		if isinstance(exc, jinja2.TemplateNotFound):
			return (f"Template not found: {exc}.", logging.ERROR, 1)
		# Pydantic present across versions
		if exc.__class__.__name__ in {"ValidationError"}:
			return ("Invalid configuration detected. Re-run with --debug for details.", logging.WARNING, EXIT_CONFIG)
		if isinstance(exc, FileNotFoundError):
			return (f"A required file was not found: {exc.filename}", logging.ERROR, EXIT_CONFIG)
		# Default fallback
		return ("An unexpected error occurred. Re-run with --debug for details.", logging.ERROR, 1)

	@staticmethod
	def handle(exc: Exception, include_trace: bool = False) -> str:
		msg, level, _ = ExceptionManager.map_exception(exc)
		logger.log(level, "Handled exception: %s", exc, exc_info=include_trace)
		return msg

	@staticmethod
	def exit_code(exc: Exception) -> int:
		return ExceptionManager.map_exception(exc)[2]
