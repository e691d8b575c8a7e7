"""Shell chains, probe maps, deviation audits and the linear obstruction."""

from .decomposition import (
    ImpossibilityCertificate,
    LinearDecomposition,
    comparator_distortion,
    decompose_linear,
    linear_impossibility_certificate,
)
from .deviation import (
    LipGraphApprox,
    ReverseReport,
    ThicknessTable,
    lipschitz_deviation_estimate,
    lipschitz_graph_approx,
    reverse_constants,
    reverse_projection_check,
    thickness_estimate,
)
from .probes import (
    EmbedAuditResult,
    ProbeMap,
    SmallBallEstimate,
    chain_for,
    embed_and_audit,
    make_rng,
    metric_pipeline,
    sample_probe_map,
    smallball_exact,
    smallball_probability_mc,
    zeta_weights,
    uniform_ball,
)
from .report import DistortionReport, distortion_report, holder_exponent_fit
from .subspaces import (
    ChainError,
    QuarterReport,
    SubspaceChain,
    banach_quarter_check,
    build_chain,
    shell_ratios,
    shell_subspaces,
)

__all__ = [name for name in dir() if not name.startswith("_")]
