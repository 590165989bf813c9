//! Quantile binning. Edges are actual data values and bins are
//! upper-inclusive: `bin(x)` is the number of edges strictly below `x`, so a
//! split "bin > b" is the same test as "x > edges[b]".

/// At most `max_bins - 1` strictly increasing edges for one column.
pub(crate) fn compute_edges(values: &[f64], max_bins: usize) -> Vec<f64> {
    // `+ 0.0` folds -0.0 into 0.0 so equal values share a bin.
    let mut v: Vec<f64> = values.iter().map(|x| x + 0.0).collect();
    v.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for x in v {
        match distinct.last_mut() {
            Some((last, c)) if *last == x => *c += 1,
            _ => distinct.push((x, 1)),
        }
    }
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= max_bins {
        return distinct[..distinct.len() - 1].iter().map(|d| d.0).collect();
    }
    let n = values.len() as f64;
    let mut edges = Vec::with_capacity(max_bins - 1);
    let mut cum = 0usize;
    for &(x, c) in &distinct[..distinct.len() - 1] {
        cum += c;
        let target = (edges.len() + 1) as f64 * n / max_bins as f64;
        if cum as f64 >= target {
            edges.push(x);
            if edges.len() == max_bins - 1 {
                break;
            }
        }
    }
    edges
}

#[inline]
pub(crate) fn bin_of(edges: &[f64], x: f64) -> u8 {
    edges.partition_point(|&e| e < x) as u8
}
