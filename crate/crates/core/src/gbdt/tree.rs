use serde::{Deserialize, Serialize};

/// One level of an oblivious tree: rows with `x[feature] > threshold` go right.
/// `bin` is the same test in bin space (`bin(x) > bin`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub bin: u8,
    pub threshold: f64,
}

/// Symmetric tree: every node of a level applies the same split, so a row's
/// leaf is the number formed by its split outcomes, first level as the most
/// significant bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousTree {
    pub levels: Vec<Split>,
    /// Log-odds increment per leaf, length 2^levels.
    pub leaf_values: Vec<f64>,
}

impl ObliviousTree {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    #[inline]
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        self.levels.iter().fold(0, |idx, s| (idx << 1) | usize::from(row[s.feature] > s.threshold))
    }

    #[inline]
    pub fn value(&self, row: &[f64]) -> f64 {
        self.leaf_values[self.leaf_index(row)]
    }
}
