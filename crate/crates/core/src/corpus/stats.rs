use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::{CorpusError, LabelKind, PublicationRecord};

/// Publication-to-first-citation delay distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub count: usize,
    pub mean_years: f64,
    /// Population standard deviation.
    pub std_years: f64,
    /// `(delay in whole years, count)`, ascending by delay.
    pub histogram: Vec<(i32, usize)>,
}

pub fn delay_stats(records: &[PublicationRecord], kind: LabelKind) -> Result<DelayStats, CorpusError> {
    let delays: Vec<i32> = records
        .iter()
        .filter_map(|r| kind.first_citation_year(r).map(|y| y - r.year))
        .collect();
    if delays.is_empty() {
        return Err(CorpusError::EmptyInput(format!("no record has a first {kind} citation year")));
    }
    let mut hist = BTreeMap::new();
    for &d in &delays {
        *hist.entry(d).or_insert(0usize) += 1;
    }
    // Moments from the histogram so they agree exactly with a recomputation from it.
    let n = delays.len() as f64;
    let mean = hist.iter().map(|(&d, &c)| f64::from(d) * c as f64).sum::<f64>() / n;
    let var = hist.iter().map(|(&d, &c)| (f64::from(d) - mean).powi(2) * c as f64).sum::<f64>() / n;
    Ok(DelayStats {
        count: delays.len(),
        mean_years: mean,
        std_years: var.sqrt(),
        histogram: hist.into_iter().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

fn mean_and_sample_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Two-sample unequal-variance t-test with Welch–Satterthwaite degrees of freedom.
pub fn citation_gap_welch_t(group_a: &[f64], group_b: &[f64]) -> Result<WelchTest, CorpusError> {
    if group_a.len() < 2 || group_b.len() < 2 {
        return Err(CorpusError::DegenerateInput("each group needs at least 2 values".into()));
    }
    if group_a.iter().chain(group_b).any(|v| !v.is_finite()) {
        return Err(CorpusError::DegenerateInput("non-finite value".into()));
    }
    let (ma, va) = mean_and_sample_var(group_a);
    let (mb, vb) = mean_and_sample_var(group_b);
    if va == 0.0 && vb == 0.0 {
        return Err(CorpusError::DegenerateInput("both groups have zero variance".into()));
    }
    let (na, nb) = (group_a.len() as f64, group_b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df)
        .map_err(|e| CorpusError::DegenerateInput(format!("t distribution: {e}")))?;
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(WelchTest { t, df, p_two_sided: p, mean_a: ma, mean_b: mb })
}
