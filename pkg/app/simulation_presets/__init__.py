"""
Bundled simulation presets (JSON files mirroring SimulationConfig fields)
"""
