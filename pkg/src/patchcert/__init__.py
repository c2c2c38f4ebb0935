"""Patch-robustness certification engine.

Certifies classifier behavior against single-patch attacks by composing a
masking-based and a voting-based recovery defender, cross-checking their
worst-case analyses, and (at desk scale) validating every issued
certificate against the exhaustively enumerated attacker.
"""

from .core import (
    BinaryRegion,
    BudgetExceededError,
    ConfigError,
    DimensionMismatchError,
    FormatError,
    GeometryError,
    Label,
    PatchCertError,
    Sample,
    apply_region,
    load_dataset,
    load_sample,
    overwrite_patch,
    region_add,
    region_contains,
    region_mul,
    region_sub,
    save_sample,
)
from .geometry import (
    AblationSet,
    MaskSet,
    PatchSet,
    build_ablation_set,
    build_mask_set,
    build_patch_set,
    compute_delta,
    verify_covering,
)
from .classifier import (
    CachedClassifier,
    Classifier,
    ExternalClassifier,
    QueryCache,
    SyntheticClassifier,
    TableClassifier,
    load_table_classifier,
    make_external_classifier,
    make_synthetic_classifier,
    make_table_classifier,
    save_table_classifier,
)
from .voting import (
    VoteTally,
    VotingContext,
    voting_certify,
    voting_predict,
    voting_tally,
    voting_warn,
)
from .masking import (
    MaskingContext,
    MaskingOutcome,
    double_mask_agreement,
    double_masked_votes,
    predict_original,
    predict_revised,
)
from .attack_analysis import (
    AttackConfiguration,
    AttackSet,
    DefenderSetup,
    att_intersection_ok,
    build_att_set,
    masking_attack_condition,
    voting_attack_condition,
)
from .cross_check import (
    CertificateRecord,
    Overrides,
    cc_base_certify,
    cc_base_predict,
    cc_certify,
    cc_predict,
)
from .oracle import (
    Violation,
    attack_count,
    default_alphabet,
    differential_report,
    enumerate_attacks,
    validate_certificates,
    validate_nac_necessity,
)
from .harness import (
    AccuracyReport,
    RunConfig,
    compute_metrics,
    format_fraction,
    run_certify,
    run_oracle,
)

__version__ = "0.1.0"
