"""Template Bayesian networks over relational databases: closed-form
transformation to dependency networks, count-weighted Gibbs conditionals,
sampling, evaluation, and a consistency auditor.
"""

from .bayesnet import TemplateBN, estimate_parameters, learn_structure
from .consistency import (
    AuditReport,
    ConsistencyWitness,
    CrossRatioResidual,
    DivergentEdge,
    audit,
    check_nonredundancy,
    closed_form_residual,
    construct_witness,
    cross_ratio_residual,
    find_divergent_edges,
)
from .counting import count_groundings, enumerate_groundings, family_config_counts
from .database import (
    DatabaseView,
    Geometry,
    RelationalDatabase,
    load_database,
    load_evidence,
)
from .errors import (
    DataError,
    EstimationError,
    GroundingError,
    ModelError,
    QueryError,
    ReldnError,
    SamplerDeadlockError,
    SchemaError,
    ScoreError,
    WitnessError,
)
from .evaluation import (
    FoldSpec,
    MetricReport,
    assign_folds,
    auc_pr,
    conditional_log_likelihood,
    evaluate,
    generate_synthetic,
    restrict_database,
    score_facts,
    subgraph_split,
)
from .inference import (
    GroundGraph,
    JointTable,
    MutableState,
    SampleChain,
    exact_joint,
    gibbs_sample,
    ground_template,
)
from .rdn import RdnTemplate, markov_blanket, moralize_to_rdn
from .schema import (
    ATTRIBUTE,
    RELATIONSHIP,
    Conjunction,
    FunctorDecl,
    Grounding,
    PRV,
    Schema,
    Var,
    load_schema,
    parse_ground_atom,
    parse_prv,
)
from .scoring import (
    FamilyScoreRow,
    GibbsQuery,
    TargetScore,
    format_atom,
    gibbs_log_score,
    gibbs_probability,
    relevant_family_count,
    resolve_target,
    score_target,
    write_trace_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ATTRIBUTE",
    "RELATIONSHIP",
    "AuditReport",
    "Conjunction",
    "ConsistencyWitness",
    "CrossRatioResidual",
    "DataError",
    "DatabaseView",
    "DivergentEdge",
    "EstimationError",
    "FamilyScoreRow",
    "FoldSpec",
    "FunctorDecl",
    "Geometry",
    "GibbsQuery",
    "GroundGraph",
    "Grounding",
    "GroundingError",
    "JointTable",
    "MetricReport",
    "ModelError",
    "MutableState",
    "PRV",
    "QueryError",
    "RdnTemplate",
    "RelationalDatabase",
    "ReldnError",
    "SampleChain",
    "SamplerDeadlockError",
    "Schema",
    "SchemaError",
    "ScoreError",
    "TargetScore",
    "TemplateBN",
    "Var",
    "WitnessError",
    "assign_folds",
    "auc_pr",
    "audit",
    "check_nonredundancy",
    "closed_form_residual",
    "conditional_log_likelihood",
    "construct_witness",
    "count_groundings",
    "cross_ratio_residual",
    "enumerate_groundings",
    "estimate_parameters",
    "evaluate",
    "exact_joint",
    "family_config_counts",
    "find_divergent_edges",
    "format_atom",
    "generate_synthetic",
    "gibbs_log_score",
    "gibbs_probability",
    "gibbs_sample",
    "ground_template",
    "learn_structure",
    "load_database",
    "load_evidence",
    "load_schema",
    "markov_blanket",
    "moralize_to_rdn",
    "parse_ground_atom",
    "parse_prv",
    "relevant_family_count",
    "resolve_target",
    "restrict_database",
    "score_facts",
    "score_target",
    "subgraph_split",
    "write_trace_csv",
]
