from pressurectl.kb.presets import PresetService, default_kb_dir
