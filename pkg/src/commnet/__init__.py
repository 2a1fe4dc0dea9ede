"""Communication nets: parse, flatten, check weak bisimilarity, replay rewrite proofs."""

__version__ = "0.1.0"
