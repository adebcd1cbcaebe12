import logging
from typing import Any, Iterable, Optional, Sequence

import pandas as pd
import yaml
from ruamel.yaml import YAML

from pressurectl.util.errors import ConfigError

logger = logging.getLogger(__name__)


def read_yaml(path: str):
	"""Read a YAML file with a debug log of the access."""
	logger.debug("Reading YAML file: %s", path)
	try:
		with open(path, "r") as f:
			return yaml.safe_load(f) or {}
	except yaml.MarkedYAMLError as exc:
		line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
		raise ConfigError(str(exc.problem or exc), line=line, path=path) from exc


def roundtrip_yaml() -> YAML:
	"""ruamel loader/dumper that keeps comments and key order."""
	ry = YAML()
	ry.preserve_quotes = True
	ry.indent(mapping=2, sequence=4, offset=2)
	return ry


def load_roundtrip(path: str):
	logger.debug("Reading YAML file (round-trip): %s", path)
	with open(path, "r") as f:
		return roundtrip_yaml().load(f) or {}


def dump_roundtrip(data: Any, path: str) -> None:
	logger.debug("Writing YAML file (round-trip): %s", path)
	with open(path, "w") as f:
		roundtrip_yaml().dump(data, f)


def line_of(path: str, loc: Sequence[Any]) -> Optional[int]:
	"""
	Best-effort 1-based line of the key addressed by `loc` (a pydantic error
	location) inside the YAML file at `path`. Returns the line of the deepest
	key that still exists.
	"""
	try:
		node = load_roundtrip(path)
	except Exception:
		return None
	line: Optional[int] = None
	for key in loc:
		lc = getattr(node, "lc", None)
		if lc is None:
			break
		try:
			if isinstance(key, int) and isinstance(node, list):
				line = lc.item(key)[0] + 1
				node = node[key]
			elif key in node:
				line = lc.key(key)[0] + 1
				node = node[key]
			else:
				break
		except (KeyError, IndexError, TypeError):
			break
	return line


def read_csv_columns(path: str, columns: Iterable[str]) -> pd.DataFrame:
	"""Read a measurement CSV and check that the expected columns are present."""
	logger.debug("Reading CSV file: %s", path)
	frame = pd.read_csv(path)
	frame.columns = [str(c).strip() for c in frame.columns]
	missing = [c for c in columns if c not in frame.columns]
	if missing:
		raise ConfigError(f"missing column(s) {', '.join(missing)}", path=path)
	return frame
