"""Batch toolkit for conservation/infrastructure news monitoring.

Classifies news articles for conservation and infrastructure relevance
with a feature-fusion model (text vector + sentiment + topics) trained
under noise-robust losses, selects articles for annotation by prediction
confidence, and post-processes relevant articles into keywords, event
chains, and geolocated GIS/social-media outputs.
"""

__version__ = "0.1.0"
