use super::EvalError;

/// Groups of tied scores, highest score first: (positives, negatives) per group.
fn tie_groups(labels: &[u8], scores: &[f64]) -> Result<Vec<(u64, u64)>, EvalError> {
    if labels.len() != scores.len() {
        return Err(EvalError::LengthMismatch(labels.len(), scores.len()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut groups: Vec<(u64, u64)> = Vec::new();
    let mut last: Option<f64> = None;
    for i in order {
        let y = labels[i];
        if y > 1 {
            return Err(EvalError::InvalidLabel(y));
        }
        if last != Some(scores[i]) {
            groups.push((0, 0));
            last = Some(scores[i]);
        }
        let g = groups.last_mut().expect("pushed above");
        if y == 1 {
            g.0 += 1;
        } else {
            g.1 += 1;
        }
    }
    Ok(groups)
}

/// ROC curve over all distinct thresholds, descending, from (0, 0) to (1, 1),
/// and its trapezoidal area. Tied scores move along a diagonal segment, which
/// gives them half credit, so the area equals the Mann–Whitney statistic.
pub fn roc_auc(labels: &[u8], scores: &[f64]) -> Result<(f64, Vec<(f64, f64)>), EvalError> {
    let groups = tie_groups(labels, scores)?;
    let p: u64 = groups.iter().map(|g| g.0).sum();
    let n: u64 = groups.iter().map(|g| g.1).sum();
    if p == 0 || n == 0 {
        return Err(EvalError::SingleClassError);
    }
    let mut points = vec![(0.0, 0.0)];
    // Twice the area in units of one positive-negative pair, kept exact.
    let mut twice_area: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    for (gp, gn) in groups {
        twice_area += u128::from(gn) * u128::from(2 * tp + gp);
        tp += gp;
        fp += gn;
        points.push((fp as f64 / n as f64, tp as f64 / p as f64));
    }
    let auc = twice_area as f64 / (2.0 * p as f64 * n as f64);
    Ok((auc, points))
}

/// (recall, precision) after each distinct threshold, descending. The curve
/// ends at the first threshold reaching full recall; lower thresholds only add
/// negatives.
pub fn pr_curve(labels: &[u8], scores: &[f64]) -> Result<Vec<(f64, f64)>, EvalError> {
    let groups = tie_groups(labels, scores)?;
    let p: u64 = groups.iter().map(|g| g.0).sum();
    if p == 0 {
        return Err(EvalError::NoPositives);
    }
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut points = Vec::new();
    for (gp, gn) in groups {
        tp += gp;
        fp += gn;
        points.push((tp as f64 / p as f64, tp as f64 / (tp + fp) as f64));
        if tp == p {
            break;
        }
    }
    Ok(points)
}
