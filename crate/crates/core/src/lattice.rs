//! Integer-resolution types: the finite lattice of pairs `(n rho, nd nu)`
//! realizable by some pairing-plus-spin configuration at size `(n, d, q)`.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{AdmissiblePair, BondMeasure, SpinMeasure};

/// One cell of the type lattice: integer spin counts `c_i` summing to `n`
/// and a symmetric matrix of bond counts `m_ij` with row sums `d * c_i` and
/// even diagonal.
///
/// `m_ij` (i != j) counts edges between spin classes i and j; `m_ii` counts
/// endpoint incidences within class i, i.e. twice the number of
/// within-class pairs, which is why it must be even.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "LatticeTypeRepr", into = "LatticeTypeRepr")]
pub struct LatticeType {
    n: u64,
    d: u64,
    spin_counts: Vec<u64>,
    bond_counts: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct LatticeTypeRepr {
    n: u64,
    d: u64,
    q: usize,
    spin_counts: Vec<u64>,
    bond_counts: Vec<Vec<u64>>,
}

impl TryFrom<LatticeTypeRepr> for LatticeType {
    type Error = Error;
    fn try_from(r: LatticeTypeRepr) -> Result<Self> {
        if r.spin_counts.len() != r.q {
            return Err(Error::usage("LatticeType: q does not match spin_counts"));
        }
        LatticeType::new(r.n, r.d, r.spin_counts, r.bond_counts)
    }
}

impl From<LatticeType> for LatticeTypeRepr {
    fn from(t: LatticeType) -> Self {
        LatticeTypeRepr {
            n: t.n,
            d: t.d,
            q: t.spin_counts.len(),
            spin_counts: t.spin_counts,
            bond_counts: t.bond_counts,
        }
    }
}

impl LatticeType {
    /// Builds a type after validating the full set of invariants.
    pub fn new(n: u64, d: u64, spin_counts: Vec<u64>, bond_counts: Vec<Vec<u64>>) -> Result<Self> {
        let t = LatticeType {
            n,
            d,
            spin_counts,
            bond_counts,
        };
        t.check_shape()?;
        if !t.is_feasible() {
            return Err(Error::usage(
                "LatticeType: counts violate the type invariants",
            ));
        }
        Ok(t)
    }

    /// Builds a type checking only structural shape (square symmetric
    /// matrix, matching q, positive n and d). Count-level feasibility is
    /// left to [`is_feasible`](Self::is_feasible); infeasible shapes carry
    /// probability zero rather than being usage errors.
    pub fn new_unchecked_counts(
        n: u64,
        d: u64,
        spin_counts: Vec<u64>,
        bond_counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let t = LatticeType {
            n,
            d,
            spin_counts,
            bond_counts,
        };
        t.check_shape()?;
        Ok(t)
    }

    fn check_shape(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::usage("LatticeType: n and d must be positive"));
        }
        let q = self.spin_counts.len();
        if q == 0 {
            return Err(Error::usage("LatticeType: q must be >= 1"));
        }
        if self.bond_counts.len() != q || self.bond_counts.iter().any(|r| r.len() != q) {
            return Err(Error::usage("LatticeType: bond_counts must be q x q"));
        }
        for i in 0..q {
            for j in (i + 1)..q {
                if self.bond_counts[i][j] != self.bond_counts[j][i] {
                    return Err(Error::usage("LatticeType: bond_counts must be symmetric"));
                }
            }
        }
        Ok(())
    }

    /// Count-level invariants: spin counts sum to n, row sums equal
    /// `d * c_i`, even diagonal.
    pub fn is_feasible(&self) -> bool {
        if self.spin_counts.iter().sum::<u64>() != self.n {
            return false;
        }
        for (i, row) in self.bond_counts.iter().enumerate() {
            if row.iter().sum::<u64>() != self.d * self.spin_counts[i] {
                return false;
            }
            if self.bond_counts[i][i] % 2 != 0 {
                return false;
            }
        }
        true
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn q(&self) -> usize {
        self.spin_counts.len()
    }

    pub fn spin_counts(&self) -> &[u64] {
        &self.spin_counts
    }

    pub fn bond_counts(&self) -> &[Vec<u64>] {
        &self.bond_counts
    }

    /// The real-valued pair `(spin_counts / n, bond_counts / nd)`.
    pub fn to_measures(&self) -> Result<AdmissiblePair> {
        if !self.is_feasible() {
            return Err(Error::usage("LatticeType: invariants violated"));
        }
        let n = self.n as f64;
        let nd = (self.n * self.d) as f64;
        let rho = SpinMeasure::new(self.spin_counts.iter().map(|&c| c as f64 / n).collect())?;
        let nu = BondMeasure::from_rows(
            self.bond_counts
                .iter()
                .map(|row| row.iter().map(|&m| m as f64 / nd).collect())
                .collect(),
        )?;
        AdmissiblePair::new(rho, nu)
    }
}

/// `(n+1)^{q(q+1)}`, the polynomial bound on the lattice cardinality.
/// Saturates at `u128::MAX`.
pub fn cardinality_bound(n: u64, q: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..q * (q + 1) {
        acc = acc.saturating_mul(n as u128 + 1);
    }
    acc
}

/// Walks every realizable type at `(n, d, q)` without materializing the
/// whole list; the visitor may stop early by returning `Break`.
fn for_each_type<F>(n: u64, d: u64, q: usize, visit: &mut F) -> Result<()>
where
    F: FnMut(&[u64], &[Vec<u64>]) -> ControlFlow<()>,
{
    if n == 0 || d == 0 || q == 0 {
        return Err(Error::usage("enumerate_types: n, d, q must be positive"));
    }
    if (n * d) % 2 != 0 {
        return Err(Error::usage(
            "enumerate_types: nd must be even (no perfect matching of nd points otherwise)",
        ));
    }
    // Off-diagonal index pairs in lexicographic order; rem[i] finalizes
    // into the diagonal entry after the last pair of row i.
    let pairs: Vec<(usize, usize)> = (0..q)
        .flat_map(|i| ((i + 1)..q).map(move |j| (i, j)))
        .collect();
    let mut spin_counts = vec![0u64; q];
    let mut bond = vec![vec![0u64; q]; q];
    let mut rem = vec![0u64; q];

    fn fill_offdiag<F>(
        k: usize,
        pairs: &[(usize, usize)],
        q: usize,
        rem: &mut [u64],
        bond: &mut [Vec<u64>],
        spin_counts: &[u64],
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u64], &[Vec<u64>]) -> ControlFlow<()>,
    {
        if k == pairs.len() {
            if rem.iter().any(|&r| r % 2 != 0) {
                return ControlFlow::Continue(());
            }
            for i in 0..q {
                bond[i][i] = rem[i];
            }
            return visit(spin_counts, bond);
        }
        let (i, j) = pairs[k];
        let cap = rem[i].min(rem[j]);
        // Finishing row i pins the parity of m_ij; on the very last pair
        // row j's parity must agree too.
        let (start, step) = if j == q - 1 {
            let pi = rem[i] % 2;
            if k == pairs.len() - 1 && i == q - 2 && rem[j] % 2 != pi {
                return ControlFlow::Continue(());
            }
            (pi, 2)
        } else {
            (0, 1)
        };
        let mut v = start;
        while v <= cap {
            bond[i][j] = v;
            bond[j][i] = v;
            rem[i] -= v;
            rem[j] -= v;
            let flow = fill_offdiag(k + 1, pairs, q, rem, bond, spin_counts, visit);
            rem[i] += v;
            rem[j] += v;
            if flow.is_break() {
                return flow;
            }
            v += step;
        }
        bond[i][j] = 0;
        bond[j][i] = 0;
        ControlFlow::Continue(())
    }

    fn fill_spins<F>(
        i: usize,
        left: u64,
        n: u64,
        d: u64,
        q: usize,
        pairs: &[(usize, usize)],
        spin_counts: &mut [u64],
        rem: &mut [u64],
        bond: &mut [Vec<u64>],
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u64], &[Vec<u64>]) -> ControlFlow<()>,
    {
        if i == q - 1 {
            spin_counts[i] = left;
            for (s, r) in spin_counts.iter().zip(rem.iter_mut()) {
                *r = d * s;
            }
            let _ = n;
            return fill_offdiag(0, pairs, q, rem, bond, spin_counts, visit);
        }
        for c in 0..=left {
            spin_counts[i] = c;
            let flow = fill_spins(
                i + 1,
                left - c,
                n,
                d,
                q,
                pairs,
                spin_counts,
                rem,
                bond,
                visit,
            );
            if flow.is_break() {
                return flow;
            }
        }
        ControlFlow::Continue(())
    }

    let _ = fill_spins(
        0,
        n,
        n,
        d,
        q,
        &pairs,
        &mut spin_counts,
        &mut rem,
        &mut bond,
        visit,
    );
    Ok(())
}

/// All realizable lattice types at `(n, d, q)`.
///
/// Integer feasibility (marginals plus even diagonal) is exactly
/// realizability: half-edges within a spin class are interchangeable, so
/// designate `m_ij` of class i's points to class j and match across, and
/// pair the even leftover `m_ii` within class i. The brute-force oracle
/// confirms this equivalence for all nd <= 12.
pub fn enumerate_types(n: u64, d: u64, q: usize) -> Result<Vec<LatticeType>> {
    let mut out = Vec::new();
    for_each_type(n, d, q, &mut |spins, bond| {
        out.push(LatticeType {
            n,
            d,
            spin_counts: spins.to_vec(),
            bond_counts: bond.to_vec(),
        });
        ControlFlow::Continue(())
    })?;
    Ok(out)
}

/// Like [`enumerate_types`] but gives up (returning `None`) as soon as more
/// than `cap` types exist.
pub fn enumerate_types_capped(n: u64, d: u64, q: usize, cap: usize) -> Result<Option<Vec<LatticeType>>> {
    let mut out = Vec::new();
    let mut overflow = false;
    for_each_type(n, d, q, &mut |spins, bond| {
        if out.len() >= cap {
            overflow = true;
            return ControlFlow::Break(());
        }
        out.push(LatticeType {
            n,
            d,
            spin_counts: spins.to_vec(),
            bond_counts: bond.to_vec(),
        });
        ControlFlow::Continue(())
    })?;
    Ok(if overflow { None } else { Some(out) })
}

/// `|K_n|` without materializing the list.
pub fn count_types(n: u64, d: u64, q: usize) -> Result<u128> {
    let mut count: u128 = 0;
    for_each_type(n, d, q, &mut |_, _| {
        count += 1;
        ControlFlow::Continue(())
    })?;
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::is_admissible;

    #[test]
    fn enumerate_n2_d2_q2_gives_four_types() {
        let types = enumerate_types(2, 2, 2).unwrap();
        assert_eq!(types.len(), 4);
        let expect = [
            (vec![2, 0], vec![vec![4, 0], vec![0, 0]]),
            (vec![0, 2], vec![vec![0, 0], vec![0, 4]]),
            (vec![1, 1], vec![vec![2, 0], vec![0, 2]]),
            (vec![1, 1], vec![vec![0, 2], vec![2, 0]]),
        ];
        for (c, m) in &expect {
            assert!(
                types
                    .iter()
                    .any(|t| t.spin_counts() == c.as_slice() && t.bond_counts() == m.as_slice()),
                "missing type {c:?} {m:?}"
            );
        }
    }

    #[test]
    fn enumerate_single_loop() {
        let types = enumerate_types(1, 2, 1).unwrap();
        assert_eq!(types.len(), 1);
        assert_eq!(types[0].spin_counts(), &[1]);
        assert_eq!(types[0].bond_counts(), &[vec![2]]);
    }

    #[test]
    fn enumerate_rejects_odd_nd() {
        assert!(enumerate_types(3, 3, 2).is_err());
    }

    #[test]
    fn enumerated_types_pass_invariants_and_bound() {
        for (n, d, q) in [(4u64, 2u64, 2usize), (6, 3, 2), (4, 2, 3), (5, 2, 3)] {
            let types = enumerate_types(n, d, q).unwrap();
            assert!((types.len() as u128) <= cardinality_bound(n, q));
            for t in &types {
                assert!(t.is_feasible());
                let pair = t.to_measures().unwrap();
                assert!(is_admissible(pair.rho(), pair.nu(), 1e-12).unwrap());
            }
            assert_eq!(count_types(n, d, q).unwrap(), types.len() as u128);
        }
    }

    #[test]
    fn to_measures_examples() {
        let t = LatticeType::new(2, 2, vec![1, 1], vec![vec![0, 2], vec![2, 0]]).unwrap();
        let pair = t.to_measures().unwrap();
        assert_eq!(pair.rho().mass(), &[0.5, 0.5]);
        assert_eq!(pair.nu().get(0, 1), 0.5);
        assert_eq!(pair.nu().get(0, 0), 0.0);

        let t = LatticeType::new(1, 2, vec![1], vec![vec![2]]).unwrap();
        let pair = t.to_measures().unwrap();
        assert_eq!(pair.rho().mass(), &[1.0]);
        assert_eq!(pair.nu().get(0, 0), 1.0);

        let t = LatticeType::new(4, 3, vec![4, 0], vec![vec![12, 0], vec![0, 0]]).unwrap();
        let pair = t.to_measures().unwrap();
        assert_eq!(pair.rho().mass(), &[1.0, 0.0]);
        assert_eq!(pair.nu().get(0, 0), 1.0);
    }

    #[test]
    fn invalid_types_are_rejected() {
        // odd diagonal
        assert!(LatticeType::new(2, 2, vec![1, 1], vec![vec![1, 1], vec![1, 1]]).is_err());
        // asymmetric is a shape error even unchecked
        assert!(LatticeType::new_unchecked_counts(2, 2, vec![1, 1], vec![vec![0, 2], vec![1, 0]])
            .is_err());
        // wrong row sum passes shape but fails feasibility
        let t = LatticeType::new_unchecked_counts(2, 2, vec![1, 1], vec![vec![0, 1], vec![1, 0]])
            .unwrap();
        assert!(!t.is_feasible());
    }

    #[test]
    fn json_round_trip_carries_q() {
        let t = LatticeType::new(2, 2, vec![1, 1], vec![vec![0, 2], vec![2, 0]]).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"q\":2"), "{s}");
        let back: LatticeType = serde_json::from_str(&s).unwrap();
        assert_eq!(t, back);
    }
}
