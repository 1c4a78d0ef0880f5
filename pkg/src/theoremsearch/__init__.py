"""Semantic search over formal theorem libraries.

The pipeline pairs formal statements with generated natural-language
renditions, embeds the bilingual documents behind instruction templates, and
answers queries from a hand-built HNSW index. Heavy interface layers (the
click CLI, the FastAPI service) are imported from their own modules so that
importing the package stays cheap.
"""

from .corpus import TheoremRecord, load_corpus_file
from .embedding import DEFAULT_PRESET, PRESETS, EmbeddingCache, embed_batch
from .hnsw import HnswIndex, HnswParams, brute_force_search
# The bare informalize() function stays in its submodule: re-exporting it
# here would shadow the theoremsearch.informalize module itself.
from .informalize import InformalPair, informalize_corpus, load_pairs_file
from .pipeline import AugmentedQuery, SearchEngine, SearchOutcome, augment_query
from .providers import EmbeddingProvider, ProviderError, TextGenerationProvider

__version__ = "0.1.0"

__all__ = [
    "AugmentedQuery",
    "DEFAULT_PRESET",
    "EmbeddingCache",
    "EmbeddingProvider",
    "HnswIndex",
    "HnswParams",
    "InformalPair",
    "PRESETS",
    "ProviderError",
    "SearchEngine",
    "SearchOutcome",
    "TextGenerationProvider",
    "TheoremRecord",
    "augment_query",
    "brute_force_search",
    "embed_batch",
    "informalize_corpus",
    "load_corpus_file",
    "load_pairs_file",
    "__version__",
]
