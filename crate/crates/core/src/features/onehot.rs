use std::collections::HashMap;

use super::vocab::{CategoricalField, VocabSpec, OTHER};
use super::FeatureError;
use crate::corpus::PublicationRecord;
use crate::matrix::DenseMatrix;

/// Indicator block for `field`, one column per vocabulary category.
///
/// Out-of-vocabulary values of a scalar field land in its `⟨other⟩` column;
/// for list fields they contribute nothing. An empty value gives a zero row.
pub fn one_hot(
    records: &[PublicationRecord],
    vocab: &VocabSpec,
    field: CategoricalField,
) -> Result<DenseMatrix, FeatureError> {
    let cats = vocab.categories(field).ok_or_else(|| FeatureError::UnknownField(field.as_str().to_string()))?;
    let index: HashMap<&str, usize> = cats.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let other = if field.is_scalar() { index.get(OTHER).copied() } else { None };
    let mut m = DenseMatrix::zeros(records.len(), cats.len());
    for (i, r) in records.iter().enumerate() {
        let row = m.row_mut(i);
        for v in field.values(r) {
            if let Some(j) = index.get(v).copied().or(other) {
                row[j] = 1.0;
            }
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::corpus::{synth_corpus, Concept, OpenAccess, SynthConfig};
    use crate::features::{build_vocab, Thresholds};

    fn spec(field: CategoricalField, cats: &[&str]) -> VocabSpec {
        VocabSpec {
            vocab: BTreeMap::from([(field, cats.iter().map(|s| s.to_string()).collect())]),
            thresholds: Thresholds::default(),
        }
    }

    #[test]
    fn list_field_sets_every_match() {
        let mut r = PublicationRecord::new("a", 2000, OpenAccess::Gold);
        r.concepts = vec![Concept { term: "amyloid".into(), importance: 0.5 }, Concept { term: "tau".into(), importance: 0.5 }];
        let empty = PublicationRecord::new("b", 2000, OpenAccess::Gold);
        let m = one_hot(&[r, empty], &spec(CategoricalField::Concepts, &["amyloid", "prion", "tau"]), CategoricalField::Concepts).unwrap();
        assert_eq!(m.row(0), [1.0, 0.0, 1.0]);
        assert_eq!(m.row(1), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn scalar_out_of_vocab_goes_to_other() {
        let mut a = PublicationRecord::new("a", 2000, OpenAccess::Gold);
        a.journal_title = "Rare".into();
        let mut b = a.clone();
        b.journal_title = "Common".into();
        let mut c = a.clone();
        c.journal_title.clear();
        let m = one_hot(&[a, b, c], &spec(CategoricalField::JournalTitle, &["Common", OTHER]), CategoricalField::JournalTitle).unwrap();
        assert_eq!(m.row(0), [0.0, 1.0]);
        assert_eq!(m.row(1), [1.0, 0.0]);
        assert_eq!(m.row(2), [0.0, 0.0]);
    }

    #[test]
    fn scalar_rows_sum_to_one() {
        let recs = synth_corpus(&SynthConfig { n: 400, seed: 3, ..Default::default() }).unwrap();
        let vocab = build_vocab(&recs[..300], &Thresholds::default());
        for field in CategoricalField::ALL.into_iter().filter(|f| f.is_scalar()) {
            let m = one_hot(&recs, &vocab, field).unwrap();
            for i in 0..m.rows() {
                assert_eq!(m.row(i).iter().sum::<f64>(), 1.0, "{field} row {i}");
            }
        }
    }

    #[test]
    fn missing_field_is_unknown() {
        let err = one_hot(&[], &spec(CategoricalField::Funders, &[]), CategoricalField::Concepts).unwrap_err();
        assert!(matches!(err, FeatureError::UnknownField(f) if f == "concepts"));
    }
}
