"""
Synthetic scenarios and brute-force oracles for validating the statistics.
"""

from hotspot_cli.synth.oracles import oracle_stat
from hotspot_cli.synth.scenario import PRESETS, Blob, PoiLayer, Scenario, gen_counts, gen_points, gen_pois, preset

__all__ = [
    "PRESETS", "Blob", "PoiLayer", "Scenario", "gen_counts", "gen_points", "gen_pois", "oracle_stat", "preset",
]
