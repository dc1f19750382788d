use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::{analyze, BusIndicators, Disturbance, StrengthError};
use crate::devices::BlockForm;
use crate::simulator::PowerSystem;

pub const ORDER_NAMES: [&str; 3] = ["zero", "first", "second"];

pub const INDICATOR_NAMES: [[&str; 4]; 3] = [
    ["S_vip", "S_viq", "S_thetaip", "S_thetaiq"],
    ["S_rhoip", "S_rhoiq", "S_omegaip", "S_omegaiq"],
    ["S_sigmaip", "S_sigmaiq", "S_gammaip", "S_gammaiq"],
];

/// Below this largest magnitude an order is reported as identically zero.
const ZERO_ORDER_TOL: f64 = 1e-12;

/// Indicators at every bus, each computed for a step `i_pq` at that bus.
pub fn sweep(sys: &PowerSystem, i_pq: Complex64, form: BlockForm) -> Result<Vec<BusIndicators>, StrengthError> {
    (0..sys.n())
        .into_par_iter()
        .map(|k| {
            let a = analyze(sys, Disturbance { bus: k, i_pq }, form)?;
            Ok(a.result.indicators(k))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderTable {
    pub order: &'static str,
    pub names: [&'static str; 4],
    /// Largest `|value|` over all buses and the four indicators.
    pub max_abs: f64,
    /// Every indicator of this order vanishes.
    pub infinitely_strong: bool,
    /// `|value| / max_abs` per bus, in bus order; zeros when infinitely strong.
    pub normalized: Vec<[f64; 4]>,
    /// Per indicator, bus ids sorted from largest to smallest `|value|`
    /// (weakest first). Ties keep bus order.
    pub ranking: [Vec<u32>; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedReport {
    pub bus_ids: Vec<u32>,
    pub orders: Vec<OrderTable>,
}

impl NormalizedReport {
    /// Weakest bus for indicator `idx` (0..4) of `order`, if the order is not identically zero.
    pub fn weakest(&self, order: usize, idx: usize) -> Option<u32> {
        let t = &self.orders[order];
        if t.infinitely_strong {
            None
        } else {
            t.ranking[idx].first().copied()
        }
    }
}

/// Normalizes each order by its largest indicator magnitude and ranks buses.
pub fn normalize_report(ind: &[BusIndicators]) -> NormalizedReport {
    let bus_ids: Vec<u32> = ind.iter().map(|b| b.bus).collect();
    let orders = (0..3)
        .map(|o| {
            let vals: Vec<[f64; 4]> = ind.iter().map(|b| b.order(o).map(f64::abs)).collect();
            let max_abs = vals.iter().flatten().fold(0.0f64, |m, x| m.max(*x));
            let infinitely_strong = !(max_abs > ZERO_ORDER_TOL);
            let normalized = vals
                .iter()
                .map(|r| if infinitely_strong { [0.0; 4] } else { r.map(|x| x / max_abs) })
                .collect();
            let ranking = std::array::from_fn(|c| {
                let mut idx: Vec<usize> = (0..vals.len()).collect();
                idx.sort_by(|&a, &b| vals[b][c].total_cmp(&vals[a][c]));
                idx.into_iter().map(|k| bus_ids[k]).collect()
            });
            OrderTable {
                order: ORDER_NAMES[o],
                names: INDICATOR_NAMES[o],
                max_abs,
                infinitely_strong,
                normalized,
                ranking,
            }
        })
        .collect();
    NormalizedReport { bus_ids, orders }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Mat2;

    fn ind(bus: u32, z: f64, s: f64) -> BusIndicators {
        BusIndicators {
            bus,
            zero: Mat2::new(z, 0.0, 0.0, 0.0),
            first: Mat2::zero(),
            second: Mat2::new(0.0, 0.0, s, 0.0),
        }
    }

    #[test]
    fn single_bus_normalizes_to_one() {
        let r = normalize_report(&[ind(7, -0.3, 2.0)]);
        assert_eq!(r.orders[0].normalized[0][0], 1.0);
        assert!(r.orders[1].infinitely_strong);
        assert_eq!(r.weakest(1, 0), None);
        assert_eq!(r.weakest(2, 2), Some(7));
    }

    #[test]
    fn ranking_follows_magnitude() {
        let r = normalize_report(&[ind(1, 0.1, -5.0), ind(2, -0.4, 1.0), ind(3, 0.2, 3.0)]);
        assert_eq!(r.orders[0].ranking[0], vec![2, 3, 1]);
        assert_eq!(r.orders[2].ranking[2], vec![1, 3, 2]);
        assert!((r.orders[2].normalized[2][2] - 0.6).abs() < 1e-15);
    }
}
