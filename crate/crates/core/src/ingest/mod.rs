//! Match event-log parsing, synthetic match generation and the binary
//! state-table format.

mod json;
mod statefile;
mod synth;

pub use json::{parse_match, parse_match_unchecked, to_json, to_json_pretty, ParseError};
pub use synth::{generate_synthetic, GroundTruth, MapSpec, SyntheticConfig, SyntheticData, SKILL_GAP_LOGIT};
pub use statefile::{
    read_states, read_states_from, write_states, write_states_to, StateFileError, STATE_FORMAT_VERSION,
};
