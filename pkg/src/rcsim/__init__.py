"""rcsim: trace-driven SSD simulator with restricted-copyback data migration."""

__version__ = "0.1.0"
