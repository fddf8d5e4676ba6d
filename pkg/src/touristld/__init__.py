"""Schema.org JSON-LD annotations for touristic content.

Declarative XML-to-JSON-LD mapping constrained by domain specifications,
an incrementally synchronized annotation repository, a validator, and an
HTML embedder.
"""

__version__ = "0.1.0"
