"""Scene-localized frame grouping for long-video question answering."""

__version__ = "0.1.0"
