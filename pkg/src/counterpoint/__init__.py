"""Reading support for opinion articles: claim highlighting, counter-argument
generation, background context, grounded Q&A, an opposite-side debate agent,
and interaction analytics, behind one HTTP service and CLI."""

from .annotate import AnnotatedDocument, ClaimSpan, CounterArgument, annotate
from .core import Document, Lean, Span, ingest_document
from .gateway import Gateway, MockProvider, TemplateId, gateway_from_env
from .matching import AlignedRegion, MatchKind, NoMatch, align_claim

__version__ = "0.1.0"

__all__ = [
    "AlignedRegion",
    "AnnotatedDocument",
    "ClaimSpan",
    "CounterArgument",
    "Document",
    "Gateway",
    "Lean",
    "MatchKind",
    "MockProvider",
    "NoMatch",
    "Span",
    "TemplateId",
    "align_claim",
    "annotate",
    "gateway_from_env",
    "ingest_document",
    "__version__",
]
