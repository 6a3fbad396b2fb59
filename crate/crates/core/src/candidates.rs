//! Candidate model sets: ordered collections of index subsets of the basis.
//!
//! Four constructions are provided: all-nested prefixes, weakly geometric
//! group blocks, univariate singletons, and (capacity-guarded) all subsets.
//! A weight vector over the models induces a per-coordinate shrinkage
//! profile `gamma_j = sum over models containing j of w_m`, which is how
//! every averaged fit is ultimately applied to the spectral coefficients.
//!
//! Indices are 0-based in memory; the text serialization in `io` is 1-based.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateKind {
    AllNested,
    GroupBlocks,
    Univariate,
    AllSubsets,
    Custom,
}

/// Ordered candidate models over coordinates `0..p`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    models: Vec<Vec<usize>>,
    /// Bitmask per model when `p <= 64`, for O(1) membership tests.
    masks: Option<Vec<u64>>,
    p: usize,
    kind: CandidateKind,
}

impl CandidateSet {
    /// Wrap explicit index sets. Each model must hold sorted, duplicate-free
    /// indices in `0..p`.
    pub fn custom(models: Vec<Vec<usize>>, p: usize) -> Result<Self> {
        Self::build(models, p, CandidateKind::Custom)
    }

    fn build(models: Vec<Vec<usize>>, p: usize, kind: CandidateKind) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidArgument("p must be positive".into()));
        }
        if models.is_empty() {
            return Err(Error::InvalidArgument("candidate set must be non-empty".into()));
        }
        for (m, idx) in models.iter().enumerate() {
            for window in idx.windows(2) {
                if window[0] >= window[1] {
                    return Err(Error::InvalidArgument(format!(
                        "model {m} indices must be strictly increasing"
                    )));
                }
            }
            if let Some(&last) = idx.last() {
                if last >= p {
                    return Err(Error::InvalidArgument(format!(
                        "model {m} has index {last} outside 0..{p}"
                    )));
                }
            }
        }
        let masks = if p <= 64 {
            Some(
                models
                    .iter()
                    .map(|idx| idx.iter().fold(0u64, |acc, &j| acc | (1 << j)))
                    .collect(),
            )
        } else {
            None
        };
        Ok(Self { models, masks, p, kind })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn kind(&self) -> CandidateKind {
        self.kind
    }

    pub fn models(&self) -> &[Vec<usize>] {
        &self.models
    }

    pub fn model(&self, m: usize) -> &[usize] {
        &self.models[m]
    }

    /// Model dimension `k_m = |I_m|`.
    pub fn dim(&self, m: usize) -> usize {
        self.models[m].len()
    }

    pub fn max_dim(&self) -> usize {
        self.models.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Nested-by-construction sets have prefix models `{0..boundary}`.
    pub fn is_prefix_nested(&self) -> bool {
        matches!(self.kind, CandidateKind::AllNested | CandidateKind::GroupBlocks)
    }

    /// `|I_l ∩ I_m|`.
    pub fn intersection_size(&self, l: usize, m: usize) -> usize {
        if let Some(masks) = &self.masks {
            return (masks[l] & masks[m]).count_ones() as usize;
        }
        if self.is_prefix_nested() {
            return self.models[l].len().min(self.models[m].len());
        }
        let (a, b) = (&self.models[l], &self.models[m]);
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Sum of `values[j]` over `j` in `I_l ∩ I_m`.
    pub fn intersection_sum(&self, l: usize, m: usize, values: &[f64]) -> f64 {
        if self.is_prefix_nested() {
            let k = self.models[l].len().min(self.models[m].len());
            return self.models[l][..k].iter().map(|&j| values[j]).sum();
        }
        let (a, b) = (&self.models[l], &self.models[m]);
        let (mut i, mut j, mut sum) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += values[a[i]];
                    i += 1;
                    j += 1;
                }
            }
        }
        sum
    }
}

/// Per-coordinate shrinkage factors in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageProfile {
    gamma: Vec<f64>,
}

impl ShrinkageProfile {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        for (j, &g) in gamma.iter().enumerate() {
            if !((-1e-12..=1.0 + 1e-12).contains(&g)) {
                return Err(Error::InvalidArgument(format!(
                    "shrinkage factor gamma[{j}] = {g} outside [0, 1]"
                )));
            }
        }
        Ok(Self { gamma })
    }

    pub fn p(&self) -> usize {
        self.gamma.len()
    }

    pub fn factors(&self) -> &[f64] {
        &self.gamma
    }
}

/// Nested prefixes `{1}, {1,2}, ..., {1..p}` (1-based description).
pub fn build_all_nested(p: usize) -> Result<CandidateSet> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be >= 1".into()));
    }
    let models = (1..=p).map(|m| (0..m).collect()).collect();
    CandidateSet::build(models, p, CandidateKind::AllNested)
}

/// Nested prefixes with weakly geometrically increasing block boundaries.
///
/// With `rho = 1/log p` and `j_1 = ceil(log p)`, boundaries grow by
/// `floor(j_1 (1+rho)^{t-1})` per step until they reach `p`; the final
/// boundary is clamped to exactly `p`. Requires `p >= 2`; `p = 2` is below
/// the range where the geometric recursion is meaningful (`log p < 1`) and
/// yields the single block `{1, 2}`.
pub fn build_group_blocks(p: usize) -> Result<CandidateSet> {
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "group blocks need p >= 2, got {p}"
        )));
    }
    let boundaries = group_block_boundaries(p);
    let models = boundaries.iter().map(|&b| (0..b).collect()).collect();
    CandidateSet::build(models, p, CandidateKind::GroupBlocks)
}

/// 1-based prefix boundaries `j_1 < j_2 < ... = p` for [`build_group_blocks`].
pub fn group_block_boundaries(p: usize) -> Vec<usize> {
    assert!(p >= 2);
    if p == 2 {
        return vec![2];
    }
    let log_p = (p as f64).ln();
    let rho = 1.0 / log_p;
    let j1 = log_p.ceil() as usize;
    if j1 >= p {
        return vec![p];
    }
    let mut boundaries = vec![j1];
    let mut t = 2usize;
    loop {
        let step = (j1 as f64 * (1.0 + rho).powi(t as i32 - 1)).floor() as usize;
        let next = boundaries.last().unwrap() + step.max(1);
        if next >= p {
            boundaries.push(p);
            return boundaries;
        }
        boundaries.push(next);
        t += 1;
    }
}

/// Singleton models `{1}, {2}, ..., {p}` (1-based description).
pub fn build_univariate(p: usize) -> Result<CandidateSet> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be >= 1".into()));
    }
    let models = (0..p).map(|j| vec![j]).collect();
    CandidateSet::build(models, p, CandidateKind::Univariate)
}

/// All `2^p` index subsets in ascending-bitmask order (bit `j` means
/// coordinate `j` is in the model). Guarded at `p <= 20`.
pub fn enumerate_all_subsets(p: usize, include_empty: bool) -> Result<CandidateSet> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be >= 1".into()));
    }
    if p > 20 {
        return Err(Error::CapacityExceeded(format!(
            "all-subset enumeration needs 2^{p} models; limit is p <= 20"
        )));
    }
    let start = if include_empty { 0u32 } else { 1u32 };
    let models = (start..(1u32 << p))
        .map(|mask| (0..p).filter(|&j| mask & (1 << j) != 0).collect())
        .collect();
    CandidateSet::build(models, p, CandidateKind::AllSubsets)
}

/// `gamma_j = sum over models containing j of w[m]`.
///
/// For nested sets with simplex weights this is the non-increasing tail-sum
/// profile with `gamma_1 = 1`; for univariate sets it is the identity map.
pub fn shrinkage_profile(set: &CandidateSet, w: &[f64]) -> Result<ShrinkageProfile> {
    if w.len() != set.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} models",
            w.len(),
            set.len()
        )));
    }
    if let Some((m, &bad)) = w.iter().enumerate().find(|&(_, &v)| v < -1e-12) {
        return Err(Error::InvalidArgument(format!("negative weight w[{m}] = {bad}")));
    }
    let mut gamma = vec![0.0; set.p()];
    for (m, idx) in set.models().iter().enumerate() {
        let wm = w[m].max(0.0);
        if wm == 0.0 {
            continue;
        }
        for &j in idx {
            gamma[j] += wm;
        }
    }
    // Simplex weights can only overshoot 1 by accumulated rounding.
    for g in &mut gamma {
        if *g > 1.0 && *g <= 1.0 + 1e-9 {
            *g = 1.0;
        }
    }
    ShrinkageProfile::new(gamma)
}
