"""Business plan authoring toolkit: drafting, suggestions, revisions, export."""

from .sections import CANONICAL_ORDER, SectionId

__all__ = ["CANONICAL_ORDER", "SectionId"]

__version__ = "0.1.0"
