use std::collections::HashMap;

use crate::dynamics::{StateId, TransitionModel};
use crate::error::{Error, Result};
use crate::topology::{count_taxiing, AirportTopology, StateVector};

/// A control-point bit reported by a scheme: 1 when the spot is free.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpotField {
    Ramp(usize),
    /// The spot of the ramp whose turn it is under alternation.
    Turn,
}

/// What a partially informed controller sees: one aggregate count of every
/// taxiing aircraft outside the zones, one free bit per listed spot, and one
/// count per zone, in that order.
#[derive(Clone, Debug)]
pub struct ObservationScheme {
    name: String,
    zones: Vec<Vec<usize>>,
    spots: Vec<SpotField>,
    maxima: Vec<u32>,
    widths: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation(pub Vec<u32>);

fn width(max: u32) -> u32 {
    u32::BITS - max.leading_zeros()
}

impl ObservationScheme {
    /// `zones` hold cell positions; cells outside every zone form the aggregate.
    pub fn new(t: &AirportTopology, name: &str, zones: Vec<Vec<usize>>, spots: Vec<SpotField>) -> Result<Self> {
        let mut seen = vec![false; t.num_cells()];
        for zone in &zones {
            if zone.is_empty() {
                return Err(Error::Structural(format!("scheme {name}: empty zone")));
            }
            for &c in zone {
                if c >= t.num_cells() {
                    return Err(Error::Structural(format!("scheme {name}: cell position {c} out of range")));
                }
                if std::mem::replace(&mut seen[c], true) {
                    return Err(Error::Structural(format!("scheme {name}: cell position {c} is in two zones")));
                }
            }
        }
        for s in &spots {
            match *s {
                SpotField::Ramp(r) if r >= t.num_ramps() => {
                    return Err(Error::Structural(format!("scheme {name}: ramp {r} out of range")));
                }
                SpotField::Turn if !t.has_turn() && t.num_ramps() > 1 => {
                    return Err(Error::Structural(format!(
                        "scheme {name}: turn spot needs alternation fairness"
                    )));
                }
                _ => {}
            }
        }
        let zoned: usize = zones.iter().map(Vec::len).sum();
        let aggregate = t.num_ramps() + t.num_cells() - zoned + t.buffer_capacity() as usize;
        let mut maxima = vec![aggregate as u32];
        maxima.extend(spots.iter().map(|_| 1));
        maxima.extend(zones.iter().map(|z| z.len() as u32));
        let widths = maxima.iter().map(|&m| width(m)).collect();
        Ok(ObservationScheme {
            name: name.to_string(),
            zones,
            spots,
            maxima,
            widths,
        })
    }

    /// Total taxiing count plus whether the ramp to be served can release.
    pub fn count_and_ramp_free(t: &AirportTopology) -> Result<Self> {
        ObservationScheme::new(t, "count_and_ramp_free", Vec::new(), vec![SpotField::Turn])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_fields(&self) -> usize {
        self.maxima.len()
    }

    pub fn maxima(&self) -> &[u32] {
        &self.maxima
    }

    pub fn widths(&self) -> &[u32] {
        &self.widths
    }

    pub fn index_bits(&self) -> u32 {
        self.widths.iter().sum()
    }
}

pub fn observe(s: &StateVector, scheme: &ObservationScheme) -> Observation {
    let zone_counts: Vec<u32> = scheme
        .zones
        .iter()
        .map(|z| z.iter().filter(|&&c| s.cell_occupied(c)).count() as u32)
        .collect();
    let mut fields = vec![count_taxiing(s) - zone_counts.iter().sum::<u32>()];
    fields.extend(scheme.spots.iter().map(|f| {
        let r = match *f {
            SpotField::Ramp(r) => r,
            SpotField::Turn => s.turn as usize,
        };
        u32::from(!s.spot_occupied(r))
    }));
    fields.extend(zone_counts);
    Observation(fields)
}

/// Concatenates the binary fields, first field most significant.
pub fn observation_index(o: &Observation, scheme: &ObservationScheme) -> Result<u64> {
    if o.0.len() != scheme.num_fields() {
        return Err(Error::Structural(format!(
            "observation has {} fields, scheme {} has {}",
            o.0.len(),
            scheme.name,
            scheme.num_fields()
        )));
    }
    let mut idx = 0u64;
    for ((&v, &max), &w) in o.0.iter().zip(&scheme.maxima).zip(&scheme.widths) {
        if v > max {
            return Err(Error::OutOfRange {
                what: "observation field",
                value: u64::from(v),
                limit: u64::from(max),
            });
        }
        idx = idx << w | u64::from(v);
    }
    Ok(idx)
}

/// Observation index of every model state and the states behind each index.
#[derive(Clone, Debug)]
pub struct Observer {
    scheme: ObservationScheme,
    index: Vec<u64>,
    classes: HashMap<u64, Vec<StateId>>,
}

impl Observer {
    pub fn new(model: &TransitionModel, scheme: ObservationScheme) -> Result<Self> {
        let mut index = Vec::with_capacity(model.num_states());
        let mut classes: HashMap<u64, Vec<StateId>> = HashMap::new();
        for id in 0..model.num_states() as StateId {
            let o = observation_index(&observe(&model.state_vector(id), &scheme), &scheme)?;
            index.push(o);
            classes.entry(o).or_default().push(id);
        }
        Ok(Observer { scheme, index, classes })
    }

    pub fn scheme(&self) -> &ObservationScheme {
        &self.scheme
    }

    pub fn index_of(&self, id: StateId) -> u64 {
        self.index[id as usize]
    }

    /// States producing observation index `o`, in increasing id order.
    pub fn consistent(&self, o: u64) -> &[StateId] {
        self.classes.get(&o).map_or(&[], Vec::as_slice)
    }

    pub fn num_observations(&self) -> usize {
        self.classes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::FairnessMode;

    fn laguardia() -> AirportTopology {
        AirportTopology::main_line(8, &[Some(0), Some(6)], 7, FairnessMode::Alternation).unwrap()
    }

    #[test]
    fn empty_state_observes_zero_counts() {
        let t = laguardia();
        let scheme = ObservationScheme::new(&t, "z", vec![vec![0, 1], vec![6]], vec![SpotField::Ramp(0)]).unwrap();
        assert_eq!(observe(&t.empty_state(), &scheme), Observation(vec![0, 1, 0, 0]));
    }

    #[test]
    fn count_and_free_ramp() {
        let t = laguardia();
        let scheme = ObservationScheme::count_and_ramp_free(&t).unwrap();
        let s = StateVector { spots: 0b10, cells: 0b1010, buffer: 2, turn: 0 };
        assert_eq!(observe(&s, &scheme), Observation(vec![5, 1]));
        assert_eq!(scheme.widths(), &[5, 1]);
        let turned = StateVector { turn: 1, ..s };
        assert_eq!(observe(&turned, &scheme), Observation(vec![5, 0]));
    }

    #[test]
    fn four_bit_count_index() {
        // One ramp, 12 cells, B = 2: counts up to 15 fit in four bits.
        let t = AirportTopology::main_line(12, &[Some(0)], 2, FairnessMode::None).unwrap();
        let scheme = ObservationScheme::count_and_ramp_free(&t).unwrap();
        assert_eq!(scheme.widths(), &[4, 1]);
        assert_eq!(observation_index(&Observation(vec![5, 1]), &scheme).unwrap(), 0b01011);
        assert_eq!(observation_index(&Observation(vec![0, 0]), &scheme).unwrap(), 0);
        assert!(observation_index(&Observation(vec![16, 0]), &scheme).is_err());
    }

    #[test]
    fn zone_aggregation_hides_positions() {
        let t = laguardia();
        let scheme = ObservationScheme::new(&t, "z", vec![vec![0, 1]], vec![]).unwrap();
        let a = StateVector { cells: 0b01, ..Default::default() };
        let b = StateVector { cells: 0b10, ..Default::default() };
        assert_eq!(observe(&a, &scheme), observe(&b, &scheme));
    }

    #[test]
    fn index_is_injective_on_small_scheme() {
        let t = AirportTopology::main_line(4, &[Some(0), Some(2)], 2, FairnessMode::None).unwrap();
        let scheme = ObservationScheme::new(&t, "z", vec![vec![0], vec![2, 3]], vec![SpotField::Ramp(0), SpotField::Ramp(1)]).unwrap();
        let mut seen: HashMap<u64, Observation> = HashMap::new();
        for idx in 0..t.state_count() as u64 {
            let Ok(s) = t.decode_state(idx) else { continue };
            let o = observe(&s, &scheme);
            let n = observation_index(&o, &scheme).unwrap();
            if let Some(prev) = seen.insert(n, o.clone()) {
                assert_eq!(prev, o);
            }
        }
    }

    #[test]
    fn overlapping_zones_are_rejected() {
        let t = laguardia();
        assert!(ObservationScheme::new(&t, "z", vec![vec![0, 1], vec![1]], vec![]).is_err());
        let free = t.with_fairness(FairnessMode::None);
        assert!(ObservationScheme::count_and_ramp_free(&free).is_err());
    }
}
