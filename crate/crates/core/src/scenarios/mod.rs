//! Scripted end-to-end experiments: science-phase attitude comparison,
//! relative-position formation, Monte-Carlo tuning campaigns, the AUV
//! leader–follower run and the supervised mission replay.

mod auv;
mod campaign;
mod mission;
mod relpos;
mod report;
mod science;

pub use auv::{run_auv_formation, AuvFormationReport, AuvScenario};
pub use campaign::{
    run_science_campaign, run_transient_campaign, CampaignResult, CampaignSummary, ScienceCampaign, TransientCampaign,
    MIN_CAMPAIGN_SCENARIOS,
};
pub use mission::{run_supervised_mission, target_attitude, MissionReport, MissionRun, PhaseRecord};
pub use relpos::{run_relpos_formation, RelPosController, RelPosScenario};
pub use report::{Metrics, RunReport, Series, REQUIRED_COLUMNS, SETTLING_FRACTION, STEADY_STATE_WINDOW};
pub use science::{
    attitude_run, law_label, run_science_attitude_comparison, ScienceComparison, ScienceScenario, REFERENCE_PD_GAINS,
    REFERENCE_SMC_GAINS,
};
