"""lotrank: weakly-supervised pairwise ranking of parking-lot occupancy.

Pipeline: OSM-style POI/lot ingestion and matching (geodata, spatial), chip
quality control (imaging, chipstore), Saturday/Sunday weak labels and splits
(weakpairs), a from-scratch pairwise comparison model (pairnet), evaluation
and date ranking (evalrank), and a synthetic benchmark generator (synthscene).
"""

__version__ = "0.1.0"
