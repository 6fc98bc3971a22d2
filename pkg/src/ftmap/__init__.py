"""Map building attributes from crowdsourced street photos.

The pipeline filters photo metadata and content, matches each photo to an
OpenStreetMap building footprint along its compass sight line, cleans up
recognized facade texts, and aggregates/exports per-building attributes.
"""

__version__ = "0.1.0"
