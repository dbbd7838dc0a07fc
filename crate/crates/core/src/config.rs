//! JSON airport configuration: layout, model parameters and observation levels.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::policies::{ObservationScheme, SpotField};
use crate::topology::{AirportTopology, Cell, FairnessMode, MergeTiebreak, ModelParams, Ramp, Site, TaxiMotion};

/// A cell successor: another cell id, or `"buffer"` for the runway queue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteRef {
    Cell(u32),
    Named(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RampSpec {
    pub name: String,
    /// Cell id the spot feeds; `null` feeds the buffer directly.
    pub entry_cell: Option<u32>,
    /// Steps from the spot to the buffer, checked against the layout when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_length: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub id: u32,
    pub successor: SiteRef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservationLevelSpec {
    pub name: String,
    /// Observed zones as lists of cell ids.
    #[serde(default)]
    pub zones: Vec<Vec<u32>>,
    /// Ramp names whose spot is reported free or taken; `"turn"` stands for
    /// the ramp to be served next under alternation.
    #[serde(default)]
    pub spot_cells: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AirportConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub ramps: Vec<RampSpec>,
    pub cells: Vec<CellSpec>,
    pub buffer_capacity: u32,
    pub params: ModelParams,
    pub fairness_mode: FairnessMode,
    #[serde(default)]
    pub merge_tiebreak: MergeTiebreak,
    #[serde(default)]
    pub motion: TaxiMotion,
    #[serde(default)]
    pub observation_levels: Vec<ObservationLevelSpec>,
}

/// A validated configuration with its topology and content hash.
#[derive(Clone, Debug)]
pub struct Airport {
    pub config: AirportConfig,
    pub topology: AirportTopology,
    pub params: ModelParams,
    hash: [u8; 32],
}

fn resolve(site: &SiteRef, ids: &[u32]) -> Result<Site> {
    match site {
        SiteRef::Named(s) if s == "buffer" || s == "runway" => Ok(Site::Buffer),
        SiteRef::Named(s) => Err(Error::Topology(format!("unknown successor `{s}`"))),
        SiteRef::Cell(id) => ids
            .iter()
            .position(|c| c == id)
            .map(Site::Cell)
            .ok_or_else(|| Error::Topology(format!("successor refers to unknown cell {id}"))),
    }
}

impl Airport {
    pub fn load(path: &Path) -> Result<Airport> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Airport::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Airport> {
        let config: AirportConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Airport::new(config)
    }

    pub fn new(config: AirportConfig) -> Result<Airport> {
        config.params.validate()?;
        let ids: Vec<u32> = config.cells.iter().map(|c| c.id).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Topology("duplicate cell id".into()));
        }
        let cells = config
            .cells
            .iter()
            .map(|c| Ok(Cell { id: c.id, successor: resolve(&c.successor, &ids)? }))
            .collect::<Result<Vec<_>>>()?;
        let ramps = config
            .ramps
            .iter()
            .map(|r| {
                let entry = match r.entry_cell {
                    None => Site::Buffer,
                    Some(id) => resolve(&SiteRef::Cell(id), &ids)?,
                };
                Ok(Ramp { name: r.name.clone(), entry })
            })
            .collect::<Result<Vec<_>>>()?;
        let topology = AirportTopology::new(ramps, cells, config.buffer_capacity, config.fairness_mode, config.merge_tiebreak)?
            .with_motion(config.motion);
        for (r, spec) in config.ramps.iter().enumerate() {
            if let Some(n) = spec.path_length {
                if n != topology.path_length(r) {
                    return Err(Error::Topology(format!(
                        "ramp `{}` declares path length {n}, layout gives {}",
                        spec.name,
                        topology.path_length(r)
                    )));
                }
            }
        }
        let canonical = serde_json::to_vec(&config).map_err(|e| Error::Parse(e.to_string()))?;
        let hash = Sha256::digest(&canonical).into();
        let params = config.params;
        let airport = Airport { config, topology, params, hash };
        for level in &airport.config.observation_levels {
            airport.observation_scheme(&level.name, &airport.topology)?;
        }
        Ok(airport)
    }

    pub fn name(&self) -> &str {
        self.config.name.as_deref().unwrap_or("airport")
    }

    pub fn hash_bytes(&self) -> &[u8; 32] {
        &self.hash
    }

    /// Hex SHA-256 of the canonical JSON form of the configuration.
    pub fn config_hash(&self) -> String {
        hex::encode(self.hash)
    }

    pub fn ramp_names(&self) -> Vec<String> {
        self.config.ramps.iter().map(|r| r.name.clone()).collect()
    }

    /// Layout under another fairness mode; statistical fairness and none
    /// share the same state coding.
    pub fn topology_for(&self, fairness: FairnessMode) -> AirportTopology {
        self.topology.with_fairness(fairness)
    }

    /// Observation scheme of the named level, resolved against `t`.
    pub fn observation_scheme(&self, name: &str, t: &AirportTopology) -> Result<ObservationScheme> {
        let level = self
            .config
            .observation_levels
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| Error::Parameter(format!("no observation level `{name}`")))?;
        let zones = level
            .zones
            .iter()
            .map(|z| {
                z.iter()
                    .map(|&id| {
                        t.cell_position(id)
                            .ok_or_else(|| Error::Topology(format!("level {name}: unknown cell {id}")))
                    })
                    .collect::<Result<Vec<usize>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let spots = level
            .spot_cells
            .iter()
            .map(|s| match s.as_str() {
                "turn" => Ok(SpotField::Turn),
                ramp => t
                    .ramp_position(ramp)
                    .map(SpotField::Ramp)
                    .ok_or_else(|| Error::Topology(format!("level {name}: unknown ramp `{ramp}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        ObservationScheme::new(t, name, zones, spots)
    }

    pub fn observation_level_names(&self) -> Vec<&str> {
        self.config.observation_levels.iter().map(|l| l.name.as_str()).collect()
    }
}
