//! Airport surface layout, model parameters and the binary state coding.
//!
//! A state is the concatenation, most significant field first, of
//!
//! ```text
//! [turn] [spot bits, ramp 0 first] [cell bits, cell 0 first] [buffer count]
//! ```
//!
//! The turn field only exists under ramp alternation and is `ceil(log2 R)`
//! bits wide. The buffer count uses `ceil(log2(B + 1))` bits; codes above `B`
//! are not valid states. Without alternation, a two-ramp airport with eight
//! taxiway cells and `B = 7` therefore has 13-bit states, e.g.
//! `1101110110011 = 7091`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoded state identification number.
pub type StateIndex = u64;

/// Largest number of ramps a topology may have (decision masks are `u32`).
pub const MAX_RAMPS: usize = 16;
/// Largest number of taxiway cells (cell occupancy is a `u64` bitmask).
pub const MAX_CELLS: usize = 64;

/// Time and motion parameters of the surface model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Taxiway length represented by one spatial sample, in meters.
    #[serde(rename = "L_s")]
    pub ls_meters: f64,
    /// Sampling time, in seconds.
    #[serde(rename = "T_s")]
    pub ts_seconds: f64,
    /// Probability that an unblocked aircraft moves forward in one step.
    pub m: f64,
    /// Take-off clearances per step are `Bern(c1) + Bern(c2)`.
    pub c1: f64,
    pub c2: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("c1", self.c1), ("c2", self.c2)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} = {v} is not in [0, 1]")));
            }
        }
        if !(self.ls_meters > 0.0) || !(self.ts_seconds > 0.0) {
            return Err(Error::Parameter(format!(
                "L_s = {} and T_s = {} must both be positive",
                self.ls_meters, self.ts_seconds
            )));
        }
        Ok(())
    }

    /// Sampling time in minutes.
    pub fn ts_minutes(&self) -> f64 {
        self.ts_seconds / 60.0
    }

    /// Probabilities of 0, 1 and 2 take-off clearances in one step.
    pub fn clearance_distribution(&self) -> [f64; 3] {
        let (a, b) = (self.c1, self.c2);
        [(1.0 - a) * (1.0 - b), a * (1.0 - b) + b * (1.0 - a), a * b]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FairnessMode {
    #[default]
    None,
    /// Ramps are served strictly in turn; adds a turn field to the state.
    Alternation,
    /// Equal average release rates are imposed as a constraint on the optimizer.
    Statistical,
}

impl std::str::FromStr for FairnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(FairnessMode::None),
            "alternation" => Ok(FairnessMode::Alternation),
            "statistical" => Ok(FairnessMode::Statistical),
            other => Err(Error::Parse(format!("unknown fairness mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for FairnessMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FairnessMode::None => "none",
            FairnessMode::Alternation => "alternation",
            FairnessMode::Statistical => "statistical",
        })
    }
}

/// How a free cell is assigned when a taxiway aircraft and a spot aircraft
/// both try to enter it in the same step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeTiebreak {
    /// Contenders are served in priority order: taxiway aircraft before spot aircraft.
    #[default]
    MainPriority,
    /// Every contender tries independently; the cell goes to a uniformly chosen one.
    CoinFlip,
}

/// Whether a taxiway cell emptied during a step can be entered in that same step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaxiMotion {
    /// Aircraft behind a moving aircraft may follow it within the step.
    #[default]
    Convoy,
    /// Only cells free at the start of the step accept an aircraft.
    Blocking,
}

/// Where an aircraft goes next: another taxiway cell or the runway buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Cell(usize),
    Buffer,
}

/// An aircraft position that can try to enter a site during a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Contender {
    Cell(usize),
    Spot(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ramp {
    pub name: String,
    /// First site entered by an aircraft leaving this ramp's spot.
    pub entry: Site,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Identifier used in configuration files.
    pub id: u32,
    pub successor: Site,
}

/// Sites processed within a step, nearest to the runway first, with the
/// positions that may move into each of them in priority order.
#[derive(Clone, Debug)]
pub(crate) struct MoveStage {
    pub site: Site,
    pub contenders: Vec<Contender>,
}

/// Aircraft-level state of the surface.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateVector {
    /// Bit `r` set when ramp `r`'s spot holds a cleared aircraft.
    pub spots: u32,
    /// Bit `c` set when taxiway cell `c` is occupied.
    pub cells: u64,
    /// Aircraft in the runway buffer.
    pub buffer: u32,
    /// Ramp whose turn it is to release (always 0 without alternation).
    pub turn: u32,
}

impl StateVector {
    pub fn spot_occupied(&self, ramp: usize) -> bool {
        self.spots >> ramp & 1 == 1
    }

    pub fn cell_occupied(&self, cell: usize) -> bool {
        self.cells >> cell & 1 == 1
    }
}

/// Set of ramps cleared to release an aircraft onto their spot this step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Decision(u32);

impl Decision {
    pub const NONE: Decision = Decision(0);

    pub fn from_mask(mask: u32) -> Self {
        Decision(mask)
    }

    pub fn single(ramp: usize) -> Self {
        Decision(1 << ramp)
    }

    pub fn mask(self) -> u32 {
        self.0
    }

    pub fn releases(self, ramp: usize) -> bool {
        self.0 >> ramp & 1 == 1
    }

    pub fn release_count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

/// Number of aircraft with engines running: spots, taxiway cells and buffer.
pub fn count_taxiing(s: &StateVector) -> u32 {
    s.spots.count_ones() + s.cells.count_ones() + s.buffer
}

/// 1 when the runway buffer is empty.
pub fn runway_idle_indicator(s: &StateVector) -> u32 {
    u32::from(s.buffer == 0)
}

fn bits_for(max_value: u64) -> u32 {
    u64::BITS - max_value.leading_zeros()
}

#[derive(Clone, Debug)]
pub struct AirportTopology {
    ramps: Vec<Ramp>,
    cells: Vec<Cell>,
    buffer_capacity: u32,
    fairness: FairnessMode,
    merge_tiebreak: MergeTiebreak,
    motion: TaxiMotion,
    buffer_bits: u32,
    turn_bits: u32,
    path_lengths: Vec<u32>,
    merge_points: Vec<usize>,
    stages: Vec<MoveStage>,
}

impl AirportTopology {
    pub fn new(
        ramps: Vec<Ramp>,
        cells: Vec<Cell>,
        buffer_capacity: u32,
        fairness: FairnessMode,
        merge_tiebreak: MergeTiebreak,
    ) -> Result<Self> {
        if ramps.is_empty() || ramps.len() > MAX_RAMPS {
            return Err(Error::Topology(format!(
                "need between 1 and {MAX_RAMPS} ramps, got {}",
                ramps.len()
            )));
        }
        if cells.len() > MAX_CELLS {
            return Err(Error::Topology(format!(
                "at most {MAX_CELLS} taxiway cells are supported, got {}",
                cells.len()
            )));
        }
        if buffer_capacity < 1 {
            return Err(Error::Topology("runway buffer capacity must be at least 1".into()));
        }
        let n = cells.len();
        let in_range = |site: Site| match site {
            Site::Cell(c) => c < n,
            Site::Buffer => true,
        };
        for (i, cell) in cells.iter().enumerate() {
            if !in_range(cell.successor) || cell.successor == Site::Cell(i) {
                return Err(Error::Topology(format!("cell {} has an invalid successor", cell.id)));
            }
        }
        for ramp in &ramps {
            if !in_range(ramp.entry) {
                return Err(Error::Topology(format!("ramp `{}` has an invalid entry cell", ramp.name)));
            }
        }

        // Distance (in moves) from each cell to the buffer; detects cycles.
        let mut dist: Vec<Option<u32>> = vec![None; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            let d = loop {
                if let Some(d) = dist[cur] {
                    break d;
                }
                if path.contains(&cur) {
                    return Err(Error::Topology(format!(
                        "taxiway graph has a cycle through cell {}",
                        cells[cur].id
                    )));
                }
                path.push(cur);
                match cells[cur].successor {
                    Site::Buffer => break 0,
                    Site::Cell(next) => cur = next,
                }
            };
            for (k, &c) in path.iter().rev().enumerate() {
                dist[c] = Some(d + 1 + k as u32);
            }
        }
        let dist: Vec<u32> = dist.into_iter().map(|d| d.unwrap_or(0)).collect();

        let site_dist = |site: Site| match site {
            Site::Cell(c) => dist[c],
            Site::Buffer => 0,
        };
        let path_lengths = ramps.iter().map(|r| 1 + site_dist(r.entry)).collect();

        let mut predecessors: Vec<Vec<Contender>> = vec![Vec::new(); n + 1];
        let slot = |site: Site| match site {
            Site::Cell(c) => c,
            Site::Buffer => n,
        };
        for (i, cell) in cells.iter().enumerate() {
            predecessors[slot(cell.successor)].push(Contender::Cell(i));
        }
        for (r, ramp) in ramps.iter().enumerate() {
            predecessors[slot(ramp.entry)].push(Contender::Spot(r));
        }
        let merge_points = (0..n).filter(|&c| predecessors[c].len() > 1).collect();

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&c| (dist[c], c));
        let mut stages = vec![MoveStage {
            site: Site::Buffer,
            contenders: predecessors[n].clone(),
        }];
        stages.extend(order.into_iter().map(|c| MoveStage {
            site: Site::Cell(c),
            contenders: predecessors[c].clone(),
        }));

        let turn_bits = match fairness {
            FairnessMode::Alternation => bits_for(ramps.len() as u64 - 1),
            _ => 0,
        };
        let buffer_bits = bits_for(u64::from(buffer_capacity));
        Ok(AirportTopology {
            ramps,
            cells,
            buffer_capacity,
            fairness,
            merge_tiebreak,
            motion: TaxiMotion::Convoy,
            buffer_bits,
            turn_bits,
            path_lengths,
            merge_points,
            stages,
        })
    }

    /// Single taxiway line of `n_cells` cells feeding the buffer, with each ramp
    /// entering at the given cell position (`None` for the buffer itself).
    pub fn main_line(
        n_cells: usize,
        ramp_entries: &[Option<usize>],
        buffer_capacity: u32,
        fairness: FairnessMode,
    ) -> Result<Self> {
        let cells = (0..n_cells)
            .map(|c| Cell {
                id: c as u32,
                successor: if c + 1 < n_cells { Site::Cell(c + 1) } else { Site::Buffer },
            })
            .collect();
        let ramps = ramp_entries
            .iter()
            .enumerate()
            .map(|(r, e)| Ramp {
                name: format!("ramp{}", r + 1),
                entry: e.map_or(Site::Buffer, Site::Cell),
            })
            .collect();
        AirportTopology::new(ramps, cells, buffer_capacity, fairness, MergeTiebreak::MainPriority)
    }

    /// Same layout with a different fairness mode (and hence state coding).
    pub fn with_fairness(&self, fairness: FairnessMode) -> Self {
        AirportTopology::new(
            self.ramps.clone(),
            self.cells.clone(),
            self.buffer_capacity,
            fairness,
            self.merge_tiebreak,
        )
        .expect("layout already validated")
        .with_motion(self.motion)
    }

    pub fn with_merge_tiebreak(mut self, tiebreak: MergeTiebreak) -> Self {
        self.merge_tiebreak = tiebreak;
        self
    }

    pub fn with_motion(mut self, motion: TaxiMotion) -> Self {
        self.motion = motion;
        self
    }

    pub fn ramps(&self) -> &[Ramp] {
        &self.ramps
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_ramps(&self) -> usize {
        self.ramps.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn buffer_capacity(&self) -> u32 {
        self.buffer_capacity
    }

    pub fn buffer_bits(&self) -> u32 {
        self.buffer_bits
    }

    pub fn fairness(&self) -> FairnessMode {
        self.fairness
    }

    pub fn merge_tiebreak(&self) -> MergeTiebreak {
        self.merge_tiebreak
    }

    pub fn motion(&self) -> TaxiMotion {
        self.motion
    }

    pub fn has_turn(&self) -> bool {
        self.fairness == FairnessMode::Alternation
    }

    /// Moves from a ramp's spot to the runway buffer.
    pub fn path_length(&self, ramp: usize) -> u32 {
        self.path_lengths[ramp]
    }

    /// Cells entered from more than one position.
    pub fn merge_points(&self) -> &[usize] {
        &self.merge_points
    }

    pub(crate) fn stages(&self) -> &[MoveStage] {
        &self.stages
    }

    pub fn cell_position(&self, id: u32) -> Option<usize> {
        self.cells.iter().position(|c| c.id == id)
    }

    pub fn ramp_position(&self, name: &str) -> Option<usize> {
        self.ramps.iter().position(|r| r.name == name)
    }

    /// Size of the decision space, `2^R`.
    pub fn num_decisions(&self) -> usize {
        1 << self.ramps.len()
    }

    pub fn index_bits(&self) -> u32 {
        self.turn_bits + self.ramps.len() as u32 + self.cells.len() as u32 + self.buffer_bits
    }

    /// Number of structurally valid states.
    pub fn state_count(&self) -> u128 {
        let turns = if self.has_turn() { self.ramps.len() as u128 } else { 1 };
        turns
            * (1u128 << self.ramps.len())
            * (1u128 << self.cells.len())
            * (u128::from(self.buffer_capacity) + 1)
    }

    pub fn empty_state(&self) -> StateVector {
        StateVector::default()
    }

    /// Largest valid state: every field at its maximum.
    pub fn full_state(&self) -> StateVector {
        StateVector {
            spots: ((1u64 << self.ramps.len()) - 1) as u32,
            cells: if self.cells.len() == 64 { u64::MAX } else { (1u64 << self.cells.len()) - 1 },
            buffer: self.buffer_capacity,
            turn: if self.has_turn() { self.ramps.len() as u32 - 1 } else { 0 },
        }
    }

    /// Checks that every field of `s` fits this topology.
    pub fn check_state(&self, s: &StateVector) -> Result<()> {
        let r = self.ramps.len();
        let c = self.cells.len();
        if u64::from(s.spots) >> r != 0 {
            return Err(Error::Structural(format!("spot bits {:#b} exceed {r} ramps", s.spots)));
        }
        if c < 64 && s.cells >> c != 0 {
            return Err(Error::Structural(format!("cell bits {:#b} exceed {c} cells", s.cells)));
        }
        if s.buffer > self.buffer_capacity {
            return Err(Error::Structural(format!(
                "buffer count {} exceeds capacity {}",
                s.buffer, self.buffer_capacity
            )));
        }
        let turns = if self.has_turn() { r as u32 } else { 1 };
        if s.turn >= turns {
            return Err(Error::Structural(format!("turn {} with {turns} turn values", s.turn)));
        }
        Ok(())
    }

    pub fn encode_state(&self, s: &StateVector) -> Result<StateIndex> {
        self.check_state(s)?;
        Ok(self.encode_unchecked(s))
    }

    pub(crate) fn encode_unchecked(&self, s: &StateVector) -> StateIndex {
        let mut idx = u64::from(s.turn);
        for r in 0..self.ramps.len() {
            idx = idx << 1 | u64::from(s.spot_occupied(r));
        }
        for c in 0..self.cells.len() {
            idx = idx << 1 | u64::from(s.cell_occupied(c));
        }
        idx << self.buffer_bits | u64::from(s.buffer)
    }

    pub fn decode_state(&self, index: StateIndex) -> Result<StateVector> {
        let bits = self.index_bits();
        if bits < 64 && index >> bits != 0 {
            return Err(Error::OutOfRange {
                what: "state index",
                value: index,
                limit: (1u64 << bits) - 1,
            });
        }
        let mut rest = index;
        let buffer = (rest & ((1u64 << self.buffer_bits) - 1)) as u32;
        rest >>= self.buffer_bits;
        let mut cells = 0u64;
        for c in (0..self.cells.len()).rev() {
            cells |= (rest & 1) << c;
            rest >>= 1;
        }
        let mut spots = 0u32;
        for r in (0..self.ramps.len()).rev() {
            spots |= ((rest & 1) as u32) << r;
            rest >>= 1;
        }
        let s = StateVector {
            spots,
            cells,
            buffer,
            turn: rest as u32,
        };
        self.check_state(&s).map_err(|_| Error::OutOfRange {
            what: "state index (invalid field code)",
            value: index,
            limit: (1u64 << bits) - 1,
        })?;
        Ok(s)
    }

    /// Whether `k` may be applied in `s`: every released ramp has a free spot,
    /// and under alternation only the turn ramp may release.
    pub fn is_feasible(&self, s: &StateVector, k: Decision) -> bool {
        if u64::from(k.mask()) >> self.ramps.len() != 0 || k.mask() & s.spots != 0 {
            return false;
        }
        if self.has_turn() {
            return k.mask() & !(1 << s.turn) == 0;
        }
        true
    }

    pub fn feasible_decisions(&self, s: &StateVector) -> Vec<Decision> {
        if self.has_turn() {
            let mut out = vec![Decision::NONE];
            if !s.spot_occupied(s.turn as usize) {
                out.push(Decision::single(s.turn as usize));
            }
            return out;
        }
        let free = !s.spots & (((1u64 << self.ramps.len()) - 1) as u32);
        // Submasks of the free-spot mask, ascending.
        let mut out = Vec::with_capacity(1 << free.count_ones());
        let mut sub = 0u32;
        loop {
            out.push(Decision(sub));
            if sub == free {
                break;
            }
            sub = (sub.wrapping_sub(free)) & free;
        }
        out
    }

    /// Turn after applying `k`: advances round-robin when the turn ramp released.
    pub(crate) fn next_turn(&self, s: &StateVector, k: Decision) -> u32 {
        if self.has_turn() && k.releases(s.turn as usize) {
            (s.turn + 1) % self.ramps.len() as u32
        } else {
            s.turn
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laguardia_like(fairness: FairnessMode) -> AirportTopology {
        AirportTopology::main_line(8, &[Some(0), Some(6)], 7, fairness).unwrap()
    }

    #[test]
    fn thirteen_bit_example_layout() {
        let t = laguardia_like(FairnessMode::None);
        assert_eq!(t.index_bits(), 13);
        let s = t.decode_state(0b1101110110011).unwrap();
        assert_eq!(s.spots, 0b11);
        // Cell 0 is the most significant cell bit.
        let occupied: Vec<bool> = (0..8).map(|c| s.cell_occupied(c)).collect();
        assert_eq!(occupied, [false, true, true, true, false, true, true, false]);
        assert_eq!(s.buffer, 3);
        assert_eq!(t.encode_state(&s).unwrap(), 7091);
    }

    #[test]
    fn small_indices() {
        let t = laguardia_like(FairnessMode::None);
        assert_eq!(t.encode_state(&t.empty_state()).unwrap(), 0);
        let one = StateVector { buffer: 1, ..Default::default() };
        assert_eq!(t.encode_state(&one).unwrap(), 1);
        assert_eq!(t.decode_state(0).unwrap(), t.empty_state());
        let full = t.full_state();
        assert_eq!(t.decode_state(t.encode_state(&full).unwrap()).unwrap(), full);
        assert_eq!(t.encode_state(&full).unwrap(), (1 << 13) - 1);
    }

    #[test]
    fn decode_rejects_out_of_range_and_invalid_codes() {
        let t = laguardia_like(FairnessMode::None);
        assert!(matches!(t.decode_state(1 << 13), Err(Error::OutOfRange { .. })));
        // B = 6 leaves buffer code 7 unused.
        let t6 = AirportTopology::main_line(2, &[Some(0)], 6, FairnessMode::None).unwrap();
        assert!(t6.decode_state(7).is_err());
        assert!(t6.decode_state(6).is_ok());
    }

    #[test]
    fn encode_rejects_width_mismatch() {
        let t = laguardia_like(FairnessMode::None);
        let bad = StateVector { spots: 0b100, ..Default::default() };
        assert!(matches!(t.encode_state(&bad), Err(Error::Structural(_))));
        let bad = StateVector { buffer: 8, ..Default::default() };
        assert!(t.encode_state(&bad).is_err());
        let bad = StateVector { turn: 1, ..Default::default() };
        assert!(t.encode_state(&bad).is_err());
    }

    #[test]
    fn path_lengths_and_merges() {
        let t = laguardia_like(FairnessMode::None);
        assert_eq!(t.path_length(0), 9);
        assert_eq!(t.path_length(1), 3);
        assert_eq!(t.merge_points(), &[6]);
    }

    #[test]
    fn rejects_cycles() {
        let cells = vec![
            Cell { id: 0, successor: Site::Cell(1) },
            Cell { id: 1, successor: Site::Cell(0) },
        ];
        let ramps = vec![Ramp { name: "r".into(), entry: Site::Cell(0) }];
        let err = AirportTopology::new(ramps, cells, 1, FairnessMode::None, MergeTiebreak::MainPriority);
        assert!(matches!(err, Err(Error::Topology(_))));
    }

    #[test]
    fn taxiing_count_and_idle_indicator() {
        let s = StateVector { cells: 0b101, buffer: 3, ..Default::default() };
        assert_eq!(count_taxiing(&s), 5);
        assert_eq!(runway_idle_indicator(&s), 0);
        assert_eq!(count_taxiing(&StateVector::default()), 0);
        assert_eq!(runway_idle_indicator(&StateVector::default()), 1);
        let spots = StateVector { spots: 0b111, ..Default::default() };
        assert_eq!(count_taxiing(&spots), 3);
        let t = laguardia_like(FairnessMode::None);
        assert_eq!(runway_idle_indicator(&StateVector { buffer: t.buffer_capacity(), ..Default::default() }), 0);
    }

    #[test]
    fn feasible_decisions_without_fairness() {
        let t = laguardia_like(FairnessMode::None);
        let masks: Vec<u32> = t.feasible_decisions(&t.empty_state()).iter().map(|d| d.mask()).collect();
        assert_eq!(masks, vec![0b00, 0b01, 0b10, 0b11]);
        let s = StateVector { spots: 0b01, ..Default::default() };
        let masks: Vec<u32> = t.feasible_decisions(&s).iter().map(|d| d.mask()).collect();
        assert_eq!(masks, vec![0b00, 0b10]);
    }

    #[test]
    fn feasible_decisions_under_alternation() {
        let t = laguardia_like(FairnessMode::Alternation);
        let s = StateVector { turn: 1, ..Default::default() };
        let masks: Vec<u32> = t.feasible_decisions(&s).iter().map(|d| d.mask()).collect();
        assert_eq!(masks, vec![0b00, 0b10]);
        let blocked = StateVector { turn: 1, spots: 0b10, ..Default::default() };
        assert_eq!(t.feasible_decisions(&blocked), vec![Decision::NONE]);
        assert!(!t.is_feasible(&s, Decision::single(0)));
        assert_eq!(t.next_turn(&s, Decision::single(1)), 0);
        assert_eq!(t.next_turn(&s, Decision::NONE), 1);
    }

    #[test]
    fn exhaustive_bijection_small_topology() {
        for fairness in [FairnessMode::None, FairnessMode::Alternation] {
            let t = AirportTopology::main_line(3, &[Some(0), Some(1), Some(2)], 2, fairness).unwrap();
            let mut valid = 0u128;
            for idx in 0..(1u64 << t.index_bits()) {
                if let Ok(s) = t.decode_state(idx) {
                    valid += 1;
                    assert_eq!(t.encode_state(&s).unwrap(), idx);
                    assert!(t.feasible_decisions(&s).contains(&Decision::NONE));
                }
            }
            assert_eq!(valid, t.state_count());
        }
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(spots in 0u32..4, cells in 0u64..256, buffer in 0u32..=7, turn in 0u32..2) {
            let t = laguardia_like(FairnessMode::Alternation);
            let s = StateVector { spots, cells, buffer, turn };
            let idx = t.encode_state(&s).unwrap();
            prop_assert_eq!(t.decode_state(idx).unwrap(), s);
        }
    }
}
