//! Uniform pairing-model sampling: d labeled half-edge points per vertex,
//! a uniform perfect matching of all nd points, i.i.d. spins from the spin
//! law, and empirical measure extraction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeType;
use crate::measures::{BondMeasure, SpinLaw, SpinMeasure};

/// Reproducible generator for sample `index` of a run keyed by `seed`.
///
/// Stream splitting rule: the ChaCha stream id is the sample index, so each
/// sample owns an independent stream and parallel runs are reproducible
/// independent of worker count.
pub fn stream_rng(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A perfect matching of the nd half-edge points; point p belongs to vertex
/// `p / d`. Loops and multi-edges are allowed.
///
/// Canonical form: each pair is stored `(lo, hi)` and pairs are sorted by
/// their first coordinate. The sampler produces this form directly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pairing {
    n: u64,
    d: u64,
    pairs: Vec<(u32, u32)>,
}

impl Pairing {
    pub fn new(n: u64, d: u64, mut pairs: Vec<(u32, u32)>) -> Result<Self> {
        let nd = n * d;
        if n == 0 || d == 0 || nd % 2 != 0 {
            return Err(Error::usage("Pairing: need n, d >= 1 and nd even"));
        }
        if pairs.len() as u64 != nd / 2 {
            return Err(Error::usage(format!(
                "Pairing: expected {} pairs, got {}",
                nd / 2,
                pairs.len()
            )));
        }
        for p in pairs.iter_mut() {
            if p.0 > p.1 {
                *p = (p.1, p.0);
            }
        }
        pairs.sort_unstable();
        let mut seen = vec![false; nd as usize];
        for &(a, b) in &pairs {
            for p in [a, b] {
                if p as u64 >= nd || seen[p as usize] {
                    return Err(Error::usage("Pairing: not a perfect matching"));
                }
                seen[p as usize] = true;
            }
        }
        Ok(Pairing { n, d, pairs })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    #[inline]
    pub fn vertex_of(&self, point: u32) -> u64 {
        point as u64 / self.d
    }

    /// No loops and no two pairs joining the same unordered vertex couple.
    pub fn is_simple(&self) -> bool {
        let mut edges: Vec<(u64, u64)> = Vec::with_capacity(self.pairs.len());
        for &(a, b) in &self.pairs {
            let (u, v) = (self.vertex_of(a), self.vertex_of(b));
            if u == v {
                return false;
            }
            edges.push(if u <= v { (u, v) } else { (v, u) });
        }
        edges.sort_unstable();
        edges.windows(2).all(|w| w[0] != w[1])
    }
}

/// Samples a pairing from `rng`, uniform over all (nd-1)!! matchings:
/// the lowest-indexed unmatched point is paired with a uniformly random
/// other unmatched point, repeatedly.
pub fn sample_pairing_with(n: u64, d: u64, rng: &mut impl Rng) -> Result<Pairing> {
    let nd = n * d;
    if n == 0 || d == 0 || nd % 2 != 0 || nd < 2 {
        return Err(Error::usage("sample_pairing: need n, d >= 1 and nd even"));
    }
    let nd = nd as usize;
    // avail/pos implement O(1) uniform removal; the lowest unmatched point
    // is found by scanning v upward, which is O(nd) overall.
    let mut avail: Vec<u32> = (0..nd as u32).collect();
    let mut pos: Vec<usize> = (0..nd).collect();
    let mut matched = vec![false; nd];
    let mut pairs = Vec::with_capacity(nd / 2);
    let remove = |avail: &mut Vec<u32>, pos: &mut Vec<usize>, idx: usize| {
        let last = avail.len() - 1;
        avail.swap(idx, last);
        pos[avail[idx] as usize] = idx;
        avail.pop();
    };
    for v in 0..nd as u32 {
        if matched[v as usize] {
            continue;
        }
        let idx_v = pos[v as usize];
        remove(&mut avail, &mut pos, idx_v);
        let k = rng.gen_range(0..avail.len());
        let partner = avail[k];
        remove(&mut avail, &mut pos, k);
        matched[v as usize] = true;
        matched[partner as usize] = true;
        pairs.push((v, partner));
    }
    // v scans upward and partner is always > v, so pairs are canonical.
    Ok(Pairing { n, d, pairs })
}

/// Deterministic uniform pairing for `(n, d, seed)`.
pub fn sample_pairing(n: u64, d: u64, seed: u64) -> Result<Pairing> {
    sample_pairing_with(n, d, &mut ChaCha12Rng::seed_from_u64(seed))
}

/// A spin assignment `eta: [n] -> [q]`, spins stored 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinConfig {
    q: usize,
    spins: Vec<u32>,
}

impl SpinConfig {
    pub fn new(q: usize, spins: Vec<u32>) -> Result<Self> {
        if q == 0 || spins.is_empty() {
            return Err(Error::usage("SpinConfig: need q >= 1 and n >= 1"));
        }
        if spins.iter().any(|&s| s == 0 || s as usize > q) {
            return Err(Error::usage("SpinConfig: spins must lie in 1..=q"));
        }
        Ok(SpinConfig { q, spins })
    }

    pub fn n(&self) -> u64 {
        self.spins.len() as u64
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn spins(&self) -> &[u32] {
        &self.spins
    }

    /// 0-based spin of vertex v.
    #[inline]
    pub fn class_of(&self, v: u64) -> usize {
        self.spins[v as usize] as usize - 1
    }
}

/// n independent draws from `mu`, via inverse CDF on a uniform variate.
pub fn assign_spins_with(n: u64, mu: &SpinLaw, rng: &mut impl Rng) -> Result<SpinConfig> {
    if n == 0 {
        return Err(Error::usage("assign_spins: n must be >= 1"));
    }
    let q = mu.q();
    let mut spins = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut spin = q as u32;
        for (i, &w) in mu.weights().iter().enumerate() {
            acc += w;
            if u < acc {
                spin = i as u32 + 1;
                break;
            }
        }
        spins.push(spin);
    }
    Ok(SpinConfig { q, spins })
}

/// Deterministic spin assignment for `(n, mu, seed)`.
pub fn assign_spins(n: u64, mu: &SpinLaw, seed: u64) -> Result<SpinConfig> {
    assign_spins_with(n, mu, &mut ChaCha12Rng::seed_from_u64(seed))
}

/// The integer type of a sampled configuration: spin counts and bond
/// counts at lattice resolution. Each pair contributes both orientations,
/// so a loop at spin a adds 2 to `m_aa`.
pub fn empirical_type(pairing: &Pairing, spins: &SpinConfig) -> Result<LatticeType> {
    if pairing.n() != spins.n() {
        return Err(Error::usage(format!(
            "empirical_type: pairing has n={} but spins have n={}",
            pairing.n(),
            spins.n()
        )));
    }
    let q = spins.q();
    let mut spin_counts = vec![0u64; q];
    for v in 0..spins.n() {
        spin_counts[spins.class_of(v)] += 1;
    }
    let mut bond_counts = vec![vec![0u64; q]; q];
    for &(p1, p2) in pairing.pairs() {
        let a = spins.class_of(pairing.vertex_of(p1));
        let b = spins.class_of(pairing.vertex_of(p2));
        bond_counts[a][b] += 1;
        bond_counts[b][a] += 1;
    }
    LatticeType::new(pairing.n(), pairing.d(), spin_counts, bond_counts)
}

/// Empirical spin measure `L1 = counts / n` and bond measure
/// `L2 = bond counts / nd` (symmetric, total mass exactly 1).
pub fn empirical_measures(
    pairing: &Pairing,
    spins: &SpinConfig,
) -> Result<(SpinMeasure, BondMeasure)> {
    let t = empirical_type(pairing, spins)?;
    let pair = t.to_measures()?;
    let (rho, nu) = pair.into_parts();
    Ok((rho, nu))
}

/// One sample of the pairing-plus-spin model together with its empirical
/// measures. Streams as JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub pairing: Pairing,
    pub spins: SpinConfig,
    pub l1: SpinMeasure,
    pub l2: BondMeasure,
    pub simple: bool,
}

/// Draws sample `index` of the run keyed by `seed`: a pairing, then spins,
/// from that sample's own stream.
pub fn sample_record(n: u64, d: u64, mu: &SpinLaw, seed: u64, index: u64) -> Result<SampleRecord> {
    let mut rng = stream_rng(seed, index);
    let pairing = sample_pairing_with(n, d, &mut rng)?;
    let spins = assign_spins_with(n, mu, &mut rng)?;
    let (l1, l2) = empirical_measures(&pairing, &spins)?;
    let simple = pairing.is_simple();
    Ok(SampleRecord {
        pairing,
        spins,
        l1,
        l2,
        simple,
    })
}

/// Result of rejection sampling to a simple graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleSample {
    pub pairing: Pairing,
    pub attempts: u64,
}

/// Rejection-samples pairings until one is simple; uniform over simple
/// d-regular graphs. Fails with the attempt count when `max_attempts` is
/// exhausted (d too large relative to n, or bad luck).
pub fn sample_simple_graph(n: u64, d: u64, seed: u64, max_attempts: u64) -> Result<SimpleSample> {
    sample_simple_graph_with(n, d, &mut ChaCha12Rng::seed_from_u64(seed), max_attempts)
}

pub fn sample_simple_graph_with(
    n: u64,
    d: u64,
    rng: &mut impl Rng,
    max_attempts: u64,
) -> Result<SimpleSample> {
    if max_attempts == 0 {
        return Err(Error::usage("sample_simple_graph: max_attempts must be >= 1"));
    }
    for attempt in 1..=max_attempts {
        let pairing = sample_pairing_with(n, d, rng)?;
        if pairing.is_simple() {
            return Ok(SimpleSample {
                pairing,
                attempts: attempt,
            });
        }
    }
    Err(Error::RejectionCap {
        attempts: max_attempts,
    })
}
