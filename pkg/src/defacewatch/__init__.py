"""defacewatch: monitor websites for illegal-online-gambling defacement."""

__version__ = "0.1.0"
