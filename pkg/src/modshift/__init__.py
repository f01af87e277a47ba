"""Analytics for hate-content dynamics around a moderation-policy change."""

__version__ = "0.1.0"
