from .backends import (
    CompletionClient,
    HttpCompletionClient,
    MockCompletionClient,
    extract_baseline,
    prompt_fingerprint,
)
from .embedder import DEFAULT_DIMENSION, cosine, embed_text
from .pipeline import (
    SummaryConfig,
    SummaryPipeline,
    build_query,
    decide_and_summarize,
    fuse_context,
    retrieve_per_alert,
)
from .reports import (
    MAX_REPORT_ALERTS,
    ActionabilityDecision,
    NonActionable,
    ParsedCompletion,
    SummaryReport,
    parse_report,
    render_report,
)
from .store import (
    KnowledgeChunk,
    ScoredChunk,
    SourceKind,
    SystemContextCache,
    VectorStore,
    load_knowledge_dir,
)

__all__ = [
    "ActionabilityDecision",
    "CompletionClient",
    "DEFAULT_DIMENSION",
    "HttpCompletionClient",
    "KnowledgeChunk",
    "MAX_REPORT_ALERTS",
    "MockCompletionClient",
    "NonActionable",
    "ParsedCompletion",
    "ScoredChunk",
    "SourceKind",
    "SummaryConfig",
    "SummaryPipeline",
    "SummaryReport",
    "SystemContextCache",
    "VectorStore",
    "build_query",
    "cosine",
    "decide_and_summarize",
    "embed_text",
    "extract_baseline",
    "fuse_context",
    "load_knowledge_dir",
    "parse_report",
    "prompt_fingerprint",
    "render_report",
    "retrieve_per_alert",
]
