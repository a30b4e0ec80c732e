"""Diversity-optimized sampling and dataset tooling for organism/natural-product relation extraction."""

__version__ = "0.1.0"

from divsample.corpus import Corpus, Document, Entity, EntityKind, Relation

__all__ = ["Corpus", "Document", "Entity", "EntityKind", "Relation", "__version__"]
