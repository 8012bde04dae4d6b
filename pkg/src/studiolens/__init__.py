"""studiolens: situated design-creativity analytics for studio courses.

Computes five independent analytics over versioned design documents
(fluency, flexibility, visual consistency, multiscale organization, legible
contrast), explains each score by pointing at the concrete elements behind
it, tracks instructor feedback across iterations, and captures human
verdicts on the analytics as labeled data.
"""

from .config import ANALYTIC_KINDS, EngineConfig
from .consistency import ConsistencyConfig, consistency, consistency_per_scale
from .contrast import ContrastConfig, contrast_ratio, legible_contrast, rasterize_blocks
from .feedback import (
    Annotation,
    AnnotationStore,
    ContestRecord,
    ContestStore,
    StatusAction,
    diff,
    export_labels,
    feedback_graph,
    record_contest,
    update_statuses,
)
from .ideas import Idea, IdeaConfig, extract_ideas, fluency
from .model import (
    BBox,
    Canvas,
    Color,
    Content,
    DesignDocument,
    Element,
    ProcessEvent,
    Style,
    parse_document,
    parse_process_log,
    serialize_document,
    validate_version_chain,
)
from .report import analyze, report_bytes, resolve_explanation, rollup, validate_report
from .semantics import EmbeddingTable, flexibility, load_embeddings, semantic_distance
from .spatial import (
    ClusterTree,
    SpatialPoint,
    amoeba_cluster,
    assign_scales,
    build_cluster_tree,
    multiscale,
    whitespace,
)

__version__ = "0.1.0"
