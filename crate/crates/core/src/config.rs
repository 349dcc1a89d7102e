//! JSON scheme description:
//!
//! ```json
//! { "snr_db": 2.0, "k_bits": 16, "increments": [32, 8, 8],
//!   "radius_assumption": { "kind": "minkowski", "c": 1.0 } }
//! ```
//!
//! Unknown keys are ignored, so a report that embeds these keys at its top
//! level can be read back as a config.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::{radii, ChannelConfig, DecodingRadii, MessageSet, RadiusAssumption, TransmissionSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub snr_db: f64,
    pub k_bits: u32,
    pub increments: Vec<u32>,
    #[serde(default)]
    pub radius_assumption: RadiusAssumption,
}

/// Validated form of a [`SchemeConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    pub channel: ChannelConfig,
    pub messages: MessageSet,
    pub schedule: TransmissionSchedule,
    pub assumption: RadiusAssumption,
}

impl Scheme {
    pub fn radii(&self) -> Result<DecodingRadii> {
        radii(&self.channel, self.messages, &self.schedule, self.assumption)
    }
}

impl SchemeConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn build(&self) -> Result<Scheme> {
        self.radius_assumption.validate()?;
        Ok(Scheme {
            channel: ChannelConfig::from_snr_db(self.snr_db)?,
            messages: MessageSet::new(self.k_bits)?,
            schedule: TransmissionSchedule::new(self.increments.clone())?,
            assumption: self.radius_assumption,
        })
    }
}
