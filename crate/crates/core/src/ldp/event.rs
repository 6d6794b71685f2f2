//! Closed events on the product of the spin simplex and the bond-measure
//! space, described as conjunctions of non-strict linear inequalities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{BondMeasure, SpinMeasure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Rho,
    Nu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Ge,
    Le,
}

/// One non-strict linear inequality on rho (coeffs of length q) or on the
/// nu entries (coeffs of length q*q, row-major). A box constraint is the
/// special case of a single nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub target: Target,
    pub coeffs: Vec<f64>,
    pub bound: f64,
    pub sense: Sense,
}

impl Constraint {
    pub fn rho_ge(coeffs: Vec<f64>, bound: f64) -> Self {
        Constraint {
            target: Target::Rho,
            coeffs,
            bound,
            sense: Sense::Ge,
        }
    }

    pub fn nu_ge(coeffs: Vec<f64>, bound: f64) -> Self {
        Constraint {
            target: Target::Nu,
            coeffs,
            bound,
            sense: Sense::Ge,
        }
    }

    fn holds(&self, value: f64) -> bool {
        match self.sense {
            Sense::Ge => value >= self.bound,
            Sense::Le => value <= self.bound,
        }
    }
}

/// A conjunction of [`Constraint`]s; the empty conjunction is the
/// always-true event. Serializes as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventSpec {
    pub constraints: Vec<Constraint>,
}

impl EventSpec {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        EventSpec { constraints }
    }

    pub fn always_true() -> Self {
        EventSpec::default()
    }

    /// Checks coefficient lengths and finiteness against a given q.
    pub fn validate(&self, q: usize) -> Result<()> {
        for (k, c) in self.constraints.iter().enumerate() {
            let want = match c.target {
                Target::Rho => q,
                Target::Nu => q * q,
            };
            if c.coeffs.len() != want {
                return Err(Error::usage(format!(
                    "event constraint {k}: expected {want} coefficients, got {}",
                    c.coeffs.len()
                )));
            }
            if c.coeffs.iter().any(|x| !x.is_finite()) || !c.bound.is_finite() {
                return Err(Error::usage(format!(
                    "event constraint {k}: coefficients and bound must be finite"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, rho: &SpinMeasure, nu: &BondMeasure) -> bool {
        self.constraints.iter().all(|c| {
            let value = match c.target {
                Target::Rho => c.coeffs.iter().zip(rho.mass()).map(|(a, x)| a * x).sum(),
                Target::Nu => c.coeffs.iter().zip(nu.flat()).map(|(a, x)| a * x).sum(),
            };
            c.holds(value)
        })
    }

    pub fn constrains_rho_only(&self) -> bool {
        self.constraints.iter().all(|c| c.target == Target::Rho)
    }

    /// Constraints as `a . x <= b` halfspaces on the rho vector.
    /// Only valid when [`constrains_rho_only`](Self::constrains_rho_only).
    pub(crate) fn rho_halfspaces(&self) -> Vec<(Vec<f64>, f64)> {
        self.constraints
            .iter()
            .map(|c| normalize_le(&c.coeffs, c.bound, c.sense))
            .collect()
    }

    /// Constraints as `a . z <= b` halfspaces on the upper-triangle
    /// parametrization of nu (z entries for i <= j; the off-diagonal entry
    /// z_ij stands for both nu_ij and nu_ji, and rho_i = sum_j nu_ij).
    pub(crate) fn triangle_halfspaces(&self, q: usize) -> Vec<(Vec<f64>, f64)> {
        let dim = q * (q + 1) / 2;
        self.constraints
            .iter()
            .map(|c| {
                let mut a = vec![0.0; dim];
                match c.target {
                    Target::Rho => {
                        for i in 0..q {
                            for j in 0..q {
                                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                                a[triangle_index(q, lo, hi)] += c.coeffs[i];
                            }
                        }
                    }
                    Target::Nu => {
                        for i in 0..q {
                            for j in 0..q {
                                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                                a[triangle_index(q, lo, hi)] += c.coeffs[i * q + j];
                            }
                        }
                    }
                }
                let (a, b) = normalize_le(&a, c.bound, c.sense);
                (a, b)
            })
            .collect()
    }
}

/// Linear index of the upper-triangle entry (i, j), i <= j, rows packed
/// in order: row i starts at `i*q - i(i-1)/2`.
pub(crate) fn triangle_index(q: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < q);
    i * q - i * i.saturating_sub(1) / 2 + (j - i)
}

fn normalize_le(coeffs: &[f64], bound: f64, sense: Sense) -> (Vec<f64>, f64) {
    match sense {
        Sense::Le => (coeffs.to_vec(), bound),
        Sense::Ge => (coeffs.iter().map(|x| -x).collect(), -bound),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{BondMeasure, SpinMeasure};

    #[test]
    fn parses_from_json_array() {
        let json = r#"[{"target":"rho","coeffs":[1.0,0.0],"bound":0.75,"sense":"ge"}]"#;
        let e: EventSpec = serde_json::from_str(json).unwrap();
        assert_eq!(e.constraints.len(), 1);
        assert!(e.constrains_rho_only());
        e.validate(2).unwrap();
        assert!(e.validate(3).is_err());
    }

    #[test]
    fn membership_is_non_strict() {
        let e = EventSpec::new(vec![Constraint::rho_ge(vec![1.0, 0.0], 0.75)]);
        let rho = SpinMeasure::new(vec![0.75, 0.25]).unwrap();
        let nu = BondMeasure::product(&rho);
        assert!(e.contains(&rho, &nu));
        let rho2 = SpinMeasure::new(vec![0.7, 0.3]).unwrap();
        assert!(!e.contains(&rho2, &BondMeasure::product(&rho2)));
        assert!(EventSpec::always_true().contains(&rho, &nu));
    }
}
