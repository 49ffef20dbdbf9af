"""sarseg: dual-pol SAR land cover segmentation benchmark.

End-to-end pipeline: raster ingestion, channel composition, geographic
imagelet sampling, online augmentation, a seven-architecture segmentation
model zoo with a training harness, confusion-matrix accuracy assessment and
full-scene map prediction.
"""

__version__ = "0.1.0"
