"""
hotspot-cli - Spatial statistics for accident hotspots and crash/near-miss concordance.
"""

__version__ = "0.1.0"
