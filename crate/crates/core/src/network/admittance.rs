use num_complex::Complex64;

use super::case::SystemCase;
use super::NetworkError;
use crate::algebra::{AlgebraError, BlockMatrix};

/// Dense bus admittance matrix in complex form, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Admittance {
    pub n: usize,
    pub y: Vec<Complex64>,
}

impl Admittance {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.y[i * self.n + j]
    }

    pub fn add_shunt(&mut self, bus: usize, y: Complex64) {
        self.y[bus * self.n + bus] += y;
    }

    /// `Y v` for a complex voltage vector.
    pub fn currents(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| {
                self.y[i * self.n..(i + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn to_block(&self) -> BlockMatrix<f64> {
        BlockMatrix::from_complex(self.n, &self.y).expect("square admittance")
    }
}

/// Builds the bus admittance matrix: pi-model branches with off-nominal taps
/// and phase shifts on the `from` side, plus bus shunts. Loads are not included.
pub fn admittance_matrix(case: &SystemCase) -> Admittance {
    let n = case.n_buses();
    let mut y = vec![Complex64::new(0.0, 0.0); n * n];
    let idx = |id| case.bus_index(id).expect("validated branch endpoint");
    for br in &case.branches {
        let (f, t) = (idx(br.from), idx(br.to));
        let ys = Complex64::new(br.r, br.x).inv();
        let bc = Complex64::new(0.0, br.b / 2.0);
        let tap = Complex64::from_polar(br.ratio(), br.shift);
        y[f * n + f] += (ys + bc) / tap.norm_sqr();
        y[t * n + t] += ys + bc;
        y[f * n + t] -= ys / tap.conj();
        y[t * n + f] -= ys / tap;
    }
    for (k, b) in case.buses.iter().enumerate() {
        y[k * n + k] += Complex64::new(b.g_shunt, b.b_shunt);
    }
    Admittance { n, y }
}

/// Block form of [`admittance_matrix`].
pub fn build_admittance(case: &SystemCase) -> BlockMatrix<f64> {
    admittance_matrix(case).to_block()
}

/// `Z = Y^-1`.
pub fn impedance(y: &BlockMatrix<f64>) -> Result<BlockMatrix<f64>, NetworkError> {
    match y.inverse() {
        Ok(z) => Ok(z),
        Err(AlgebraError::SingularMatrix { condition_estimate }) => Err(NetworkError::SingularNetwork {
            condition_estimate,
        }),
        Err(e) => Err(NetworkError::Algebra(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::mat2_of_complex;
    use crate::network::case::parse_case;
    use num_complex::Complex;

    fn case(branches: &str, shunt: &str) -> SystemCase {
        parse_case(&format!(
            r#"{{"base": {{"mva": 100, "f0": 60}},
            "buses": [{{"id": 1, "kind": "slack"}}, {{"id": 2, "kind": "pq" {shunt}}}],
            "branches": [{branches}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn single_reactance() {
        let y = build_admittance(&case(r#"{"from":1,"to":2,"r":0,"x":0.1}"#, ""));
        assert!((y.block(0, 1) - mat2_of_complex(Complex::new(0.0, 10.0))).max_abs() < 1e-12);
        assert!((y.block(0, 0) - mat2_of_complex(Complex::new(0.0, -10.0))).max_abs() < 1e-12);
    }

    #[test]
    fn line_charging_on_diagonal() {
        let c = case(r#"{"from":1,"to":2,"r":0,"x":0.1,"b":0.4}"#, "");
        let y = admittance_matrix(&c);
        assert!((y.get(0, 0) - Complex::new(0.0, -10.0 + 0.2)).norm() < 1e-12);
        assert!((y.get(1, 1) - Complex::new(0.0, -10.0 + 0.2)).norm() < 1e-12);
    }

    #[test]
    fn charging_free_rows_sum_to_zero() {
        let c = case(
            r#"{"from":1,"to":2,"r":0.01,"x":0.1},{"from":1,"to":2,"r":0.02,"x":0.3}"#,
            "",
        );
        let y = admittance_matrix(&c);
        for i in 0..2 {
            let s: Complex64 = (0..2).map(|j| y.get(i, j)).sum();
            assert!(s.norm() < 1e-12);
        }
        assert!(matches!(
            impedance(&y.to_block()),
            Err(NetworkError::SingularNetwork { .. })
        ));
    }

    #[test]
    fn one_bus_shunt_inverse() {
        let y = BlockMatrix::block_diag(&[mat2_of_complex(Complex::new(0.0, -10.0))]);
        let z = impedance(&y).unwrap();
        assert!((z.block(0, 0) - mat2_of_complex(Complex::new(0.0, 0.1))).max_abs() < 1e-14);
    }

    #[test]
    fn two_bus_inverse_matches_complex_formula() {
        let c = case(r#"{"from":1,"to":2,"r":0.02,"x":0.1,"b":0.2}"#, r#", "g_shunt": 0.5, "b_shunt": 0.1"#);
        let y = admittance_matrix(&c);
        let (a, b, cc, d) = (y.get(0, 0), y.get(0, 1), y.get(1, 0), y.get(1, 1));
        let det = a * d - b * cc;
        let expect = [d / det, -b / det, -cc / det, a / det];
        let z = impedance(&y.to_block()).unwrap();
        for (k, e) in expect.iter().enumerate() {
            let blk = z.block(k / 2, k % 2);
            assert!((blk - mat2_of_complex(*e)).max_abs() < 1e-12);
        }
        assert!(y.to_block().inverse_residual(&z) < 1e-10);
    }

    #[test]
    fn tap_convention() {
        let c = case(r#"{"from":1,"to":2,"r":0,"x":0.1,"tap":1.05,"shift":0.1}"#, "");
        let y = admittance_matrix(&c);
        let ys = Complex64::new(0.0, -10.0);
        let t = Complex64::from_polar(1.05, 0.1);
        assert!((y.get(0, 0) - ys / (1.05 * 1.05)).norm() < 1e-12);
        assert!((y.get(0, 1) + ys / t.conj()).norm() < 1e-12);
        assert!((y.get(1, 0) + ys / t).norm() < 1e-12);
    }
}
