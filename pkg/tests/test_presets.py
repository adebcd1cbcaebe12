import logging
import os

import pytest
import yaml

from pressurectl.controllers.design import crm_error_transfer
from pressurectl.kb.presets import PresetService, default_kb_dir
from pressurectl.lintools.transfer import is_spr
from pressurectl.plant.factory import build_plant
from pressurectl.sim.runner import design_for
from pressurectl.sim.scenario import Scenario
from pressurectl.util.errors import ConfigError

KB_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "knowledge_base")
SHIPPED = ["demanding-trajectory", "long-duration", "nominal-drcrm", "three-operating-points"]


@pytest.fixture
def service():
    return PresetService(KB_DIR)


def test_list_shipped_presets(service):
    assert service.list() == SHIPPED


@pytest.mark.parametrize("name", SHIPPED)
def test_every_shipped_preset_builds(service, name):
    run = service.load(name)
    assert run.name == name
    scenario = Scenario(run.scenario, name)
    assert scenario.ticks > 0
    plant = build_plant(run.plant)
    assert plant.nominal().b_p != 0


def test_three_operating_points_windows(service):
    windows = Scenario(service.load("three-operating-points").scenario).step_windows()
    assert [w.label for w in windows] == ["low", "middle", "high"]


def test_unknown_preset_names_the_known_ones(service):
    with pytest.raises(ConfigError) as excinfo:
        service.load("does-not-exist")
    assert "nominal-drcrm" in str(excinfo.value)


def test_resolve_accepts_path_or_name(service, tmp_path):
    path = service.export("nominal-drcrm", str(tmp_path))
    assert service.resolve(path).name == "nominal-drcrm"
    assert service.resolve("long-duration").scenario.noise.seed == 7


def test_export_copies_verbatim(service, tmp_path, caplog):
    dest = tmp_path / "mine.yaml"
    with caplog.at_level(logging.INFO):
        written = service.export("three-operating-points", str(dest))
    assert written == str(dest)
    text = dest.read_text()
    assert text.startswith("# Three operating points")
    assert yaml.safe_load(text)["design"]["mode"] == "drcrm"
    assert "KB_EXPORT" in caplog.text
    with pytest.raises(ConfigError):
        service.export("nope", str(tmp_path))


def test_default_kb_dir_prefers_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("PRESSURECTL_KB", str(tmp_path))
    assert default_kb_dir() == str(tmp_path)
    assert PresetService().list() == []


@pytest.mark.parametrize("name", [n for n in SHIPPED if n != "long-duration"])
def test_shipped_crm_designs_pass_spr_gate(service, name):
    run = service.load(name)
    plant = build_plant(run.plant)
    cfg = design_for(run, plant, run.design.mode)
    assert cfg.mode in ("crm", "drcrm")
    assert is_spr(crm_error_transfer(cfg.reference.a_m, cfg.reference.ell))
