use serde::{Deserialize, Serialize};
use std::fmt;

/// Relative merge distance: values closer than `MERGE_TOL·max(1, |λ|)` are
/// treated as one eigenvalue of higher multiplicity.
pub const MERGE_TOL: f64 = 1e-8;

pub fn merge_distance(lambda: f64) -> f64 {
    MERGE_TOL * lambda.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SpectralTag {
    #[serde(rename = "branch+")]
    BranchPlus,
    #[serde(rename = "branch-")]
    BranchMinus,
    #[serde(rename = "essential-limit")]
    EssentialLimit,
    #[serde(rename = "essential-limit-cluster")]
    EssentialLimitCluster,
}

impl SpectralTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectralTag::BranchPlus => "branch+",
            SpectralTag::BranchMinus => "branch-",
            SpectralTag::EssentialLimit => "essential-limit",
            SpectralTag::EssentialLimitCluster => "essential-limit-cluster",
        }
    }
}

impl fmt::Display for SpectralTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ascending list of distinct eigenvalues with multiplicities.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    values: Vec<f64>,
    multiplicities: Vec<usize>,
    tags: Vec<Vec<SpectralTag>>,
    residuals: Vec<f64>,
}

impl Spectrum {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a spectrum from eigenvalues repeated according to multiplicity,
    /// merging near-coincident values (cluster mean, summed multiplicity,
    /// worst residual).
    pub fn from_values(mut values: Vec<(f64, f64)>) -> Self {
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Self::empty();
        let mut sum = 0.0;
        for (v, res) in values {
            match out.values.last() {
                Some(&last) if (v - last).abs() <= merge_distance(last) => {
                    let i = out.values.len() - 1;
                    let m = out.multiplicities[i];
                    sum += v;
                    out.multiplicities[i] = m + 1;
                    out.values[i] = sum / (m + 1) as f64;
                    out.residuals[i] = out.residuals[i].max(res);
                }
                _ => {
                    sum = v;
                    out.values.push(v);
                    out.multiplicities.push(1);
                    out.tags.push(Vec::new());
                    out.residuals.push(res);
                }
            }
        }
        out
    }

    pub fn from_exact(values: impl IntoIterator<Item = f64>) -> Self {
        Self::from_values(values.into_iter().map(|v| (v, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn tags(&self) -> &[Vec<SpectralTag>] {
        &self.tags
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Sum of multiplicities.
    pub fn total_count(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Values repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &m)| std::iter::repeat_n(v, m))
            .collect()
    }

    /// Adds one eigenvalue with a tag. A coincident value has its
    /// multiplicity raised and keeps both tag sets.
    pub fn insert_tagged(&mut self, value: f64, tag: Option<SpectralTag>, residual: f64) {
        let pos = self.values.partition_point(|&v| v < value);
        for i in [pos.wrapping_sub(1), pos] {
            if i < self.values.len() && (self.values[i] - value).abs() <= merge_distance(self.values[i]) {
                self.multiplicities[i] += 1;
                if let Some(t) = tag {
                    if !self.tags[i].contains(&t) {
                        self.tags[i].push(t);
                        self.tags[i].sort();
                    }
                }
                self.residuals[i] = self.residuals[i].max(residual);
                return;
            }
        }
        self.values.insert(pos, value);
        self.multiplicities.insert(pos, 1);
        self.tags.insert(pos, tag.into_iter().collect());
        self.residuals.insert(pos, residual);
    }

    pub fn add_tag(&mut self, index: usize, tag: SpectralTag) {
        if !self.tags[index].contains(&tag) {
            self.tags[index].push(tag);
            self.tags[index].sort();
        }
    }

    pub fn has_tag(&self, index: usize, tag: SpectralTag) -> bool {
        self.tags[index].contains(&tag)
    }

    /// Values inside the closed interval `[lo, hi]`.
    pub fn truncated(&self, lo: f64, hi: f64) -> Spectrum {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.values[i] >= lo && self.values[i] <= hi).collect();
        Spectrum {
            values: keep.iter().map(|&i| self.values[i]).collect(),
            multiplicities: keep.iter().map(|&i| self.multiplicities[i]).collect(),
            tags: keep.iter().map(|&i| self.tags[i].clone()).collect(),
            residuals: keep.iter().map(|&i| self.residuals[i]).collect(),
        }
    }

    /// Distinct values whose tags do not include `tag`.
    pub fn values_without(&self, tag: SpectralTag) -> Vec<f64> {
        (0..self.len()).filter(|&i| !self.has_tag(i, tag)).map(|i| self.values[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_coincident_values_merge() {
        let s = Spectrum::from_exact([9.869604401089358, 0.0, 9.869604401089358 * (1.0 + 1e-11), 19.7]);
        assert_eq!(s.values().len(), 3);
        assert_eq!(s.multiplicities(), &[1, 2, 1]);
        assert_eq!(s.total_count(), 4);
        assert_eq!(s.expanded().len(), 4);
    }

    #[test]
    fn insert_tagged_merges_and_keeps_tags() {
        let mut s = Spectrum::from_exact([0.0, 1.6, 9.87]);
        s.add_tag(1, SpectralTag::BranchPlus);
        s.insert_tagged(1.6, Some(SpectralTag::EssentialLimit), 0.0);
        assert_eq!(s.multiplicities(), &[1, 2, 1]);
        assert_eq!(s.tags()[1], vec![SpectralTag::BranchPlus, SpectralTag::EssentialLimit]);
        s.insert_tagged(5.0, None, 0.0);
        assert_eq!(s.values(), &[0.0, 1.6, 5.0, 9.87]);
    }

    #[test]
    fn truncation_is_closed() {
        let s = Spectrum::from_exact([0.0, 1.0, 2.0, 3.0]);
        assert_eq!(s.truncated(1.0, 2.0).values(), &[1.0, 2.0]);
    }
}
