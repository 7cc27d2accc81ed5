"""Quality-aware dynamic memory engine for mask-propagation video object segmentation."""

__version__ = "0.1.0"
