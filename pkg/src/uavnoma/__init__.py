"""Link-level Monte-Carlo simulator for downlink cooperative NOMA over a
UAV amplify-and-forward relay: rate formulas, user-pairing strategies, and
outage / ergodic-sum-rate experiments with reproducible parallel execution."""

from .channel import (
    ChannelSnapshot,
    FadingKind,
    FadingSpec,
    NetworkGeometry,
    af_effective_snr,
    los_coefficient,
    mean_power_gains,
    sample_gain,
    sample_snapshot,
)
from .pairing import (
    FixedPower,
    Pairing,
    PairingStrategy,
    assign_power,
    build_pairing,
    enumerate_pairings,
    pair_near_far,
    pair_near_near,
    random_pairing,
    rank_by_gain,
)
from .schemes import (
    PowerSplit,
    RateReport,
    SchemeFamily,
    SchemeId,
    SnrPoint,
    coop_far_rate,
    direct_slot_rates,
    effective_user_gains,
    noncoop_far_rate,
    oma_far_rate,
    pair_rates,
    relay_slot_rate,
    scheme_rates,
)
from .sim import (
    CurveResult,
    MonteCarloConfig,
    OutageEstimate,
    OutageMode,
    OutageSpec,
    SnrGrid,
    derive_trial_stream,
    estimate_ergodic_sum_rate,
    estimate_outage,
    estimate_outage_curve,
)
from .cli import (
    ScenarioConfig,
    ScenarioError,
    emit_csv,
    emit_plot,
    format_scenario,
    parse_scenario,
    render_csv,
    run_experiment,
)

__version__ = "0.1.0"
