"""Text detection/recognition sidecar speaking JSON lines over stdio."""

__version__ = "0.1.0"
