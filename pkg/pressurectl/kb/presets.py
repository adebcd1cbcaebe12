import logging
import os
import shutil
from typing import List, Optional

from pressurectl.config import RunConfig, load_run_config
from pressurectl.util.errors import ConfigError

logger = logging.getLogger(__name__)

_REPO_KB = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), "knowledge_base")


def default_kb_dir() -> str:
	"""$PRESSURECTL_KB, else ./knowledge_base, else the one shipped next to the package."""
	env = os.environ.get("PRESSURECTL_KB")
	if env:
		return env
	if os.path.isdir(os.path.join("knowledge_base", "presets")):
		return "knowledge_base"
	return _REPO_KB


class PresetService:
	"""Named scenario presets stored as run configs under knowledge_base/presets."""

	def __init__(self, base_dir: Optional[str] = None) -> None:
		self.base_dir = base_dir or default_kb_dir()

	@property
	def presets_dir(self) -> str:
		return os.path.join(self.base_dir, "presets")

	def path_for(self, name: str) -> str:
		return os.path.join(self.presets_dir, f"{name}.yaml")

	def list(self) -> List[str]:
		if not os.path.isdir(self.presets_dir):
			return []
		return sorted(os.path.splitext(f)[0] for f in os.listdir(self.presets_dir) if f.endswith(".yaml"))

	def exists(self, name: str) -> bool:
		return os.path.exists(self.path_for(name))

	def load(self, name: str) -> RunConfig:
		path = self.path_for(name)
		if not os.path.exists(path):
			raise ConfigError(f"unknown preset '{name}' (known: {', '.join(self.list()) or 'none'})")
		logger.debug("KB_LOAD kind=preset path=%s name=%s", path, name)
		return load_run_config(path)

	def resolve(self, ref: str) -> RunConfig:
		"""A path to a run config, or the name of a preset."""
		if os.path.exists(ref):
			logger.debug("KB_LOAD kind=file path=%s", ref)
			return load_run_config(ref)
		return self.load(ref)

	def export(self, name: str, dest: str) -> str:
		"""Copy a preset verbatim (comments included) so it can be edited."""
		src = self.path_for(name)
		if not os.path.exists(src):
			raise ConfigError(f"unknown preset '{name}'")
		if os.path.isdir(dest):
			dest = os.path.join(dest, f"{name}.yaml")
		shutil.copyfile(src, dest)
		logger.info("KB_EXPORT name=%s dest=%s", name, dest)
		return dest
