//! Planted-signal corpus generator.
//!
//! Each record carries three independent latent contributions to the label
//! log-odds, each observable only through one feature tier:
//!
//! * metadata: the journal and funders the record is drawn with,
//! * concepts: a research theme that determines most of the concept terms,
//! * abstract: a writing style whose signature words are mixed into the text.
//!
//! The log-odds are `b + signal_strength * SCALE * (m + c + a)`. The intercept
//! `b` is solved per corpus so the mean probability equals the configured
//! base rate; with `signal_strength = 0` it is simply `logit(base_rate)`.

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Concept, CorpusError, LeakageFields, OpenAccess, PublicationRecord};
use crate::util;

const SCALE: f64 = 1.6;

const N_JOURNALS: usize = 60;
const N_FUNDERS: usize = 30;
const N_AUTHORS: usize = 4000;
const N_ORGS: usize = 150;
const GENERIC_CONCEPTS: usize = 120;
const CONCEPTS_PER_THEME: usize = 25;

const THEME_WEIGHTS: [f64; 8] = [-1.5, -1.0, -0.5, 0.0, 0.0, 0.5, 1.0, 1.5];
const THEME_STEMS: [&str; 8] =
    ["caregiver", "epidemiology", "imaging", "cognition", "vascular", "genetic", "amyloid", "therapeutic"];
const STYLE_WEIGHTS: [f64; 6] = [-1.5, -0.75, 0.0, 0.0, 0.75, 1.5];
const STYLE_WORDS: [[&str; 12]; 6] = [
    ["interview", "qualitative", "carers", "experiences", "themes", "participants", "narrative", "lived", "support", "community", "perspectives", "wellbeing"],
    ["survey", "prevalence", "census", "registry", "population", "incidence", "rates", "trends", "deprivation", "regional", "estimates", "burden"],
    ["scan", "volumetric", "atrophy", "hippocampal", "cortical", "thickness", "segmentation", "voxel", "tractography", "diffusion", "morphometry", "resolution"],
    ["recall", "memory", "attention", "executive", "battery", "scores", "decline", "verbal", "fluency", "processing", "speed", "tasks"],
    ["mice", "transgenic", "assay", "knockout", "expression", "phosphorylation", "neurons", "culture", "western", "blot", "staining", "hippocampus"],
    ["inhibitor", "compound", "dose", "efficacy", "binding", "antibody", "candidate", "pharmacokinetic", "selective", "potency", "formulation", "target"],
];
const FILLER: [&str; 64] = [
    "the", "of", "and", "in", "to", "we", "a", "with", "for", "was", "were", "that", "this", "study",
    "results", "data", "analysis", "associated", "using", "between", "patients", "dementia", "disease",
    "alzheimer", "risk", "findings", "suggest", "showed", "significant", "increased", "reduced",
    "compared", "group", "groups", "controls", "years", "age", "older", "adults", "clinical", "evidence",
    "methods", "based", "model", "effect", "effects", "role", "may", "these", "our", "from", "by", "on",
    "is", "are", "as", "also", "which", "novel", "potential", "factors", "outcomes", "cohort", "early",
];
const NOUNS: [&str; 25] = [
    "protein", "pathway", "receptor", "marker", "network", "signal", "variant", "cohort", "score",
    "index", "response", "load", "density", "level", "function", "profile", "deficit", "process",
    "model", "factor", "measure", "activity", "status", "burden", "change",
];
const COUNTRIES: [&str; 12] = [
    "United Kingdom", "United States", "Germany", "France", "Netherlands", "Sweden", "Canada",
    "Australia", "Italy", "Spain", "Switzerland", "Japan",
];
const FIRST_NAMES: [&str; 40] = [
    "Alice", "Ben", "Chloe", "David", "Emma", "Farid", "Grace", "Hugo", "Isla", "James", "Kate",
    "Liam", "Maya", "Noah", "Olivia", "Priya", "Quentin", "Rosa", "Sam", "Tara", "Umar", "Vera",
    "Will", "Xin", "Yusuf", "Zoe", "Amir", "Beth", "Carlos", "Dina", "Eli", "Fiona", "Gita", "Hana",
    "Ivan", "Jade", "Kofi", "Lena", "Marco", "Nina",
];
const LAST_NAMES: [&str; 100] = [
    "Smith", "Jones", "Taylor", "Brown", "Williams", "Wilson", "Johnson", "Davies", "Patel", "Wright",
    "Robinson", "Thompson", "Evans", "Walker", "White", "Roberts", "Green", "Hall", "Wood", "Jackson",
    "Clarke", "Khan", "Lewis", "Harris", "Martin", "Cooper", "King", "Lee", "Baker", "Harrison",
    "Morgan", "Allen", "James", "Scott", "Ward", "Moore", "Parker", "Price", "Bennett", "Young",
    "Griffiths", "Mitchell", "Kelly", "Cook", "Carter", "Richardson", "Bailey", "Collins", "Bell",
    "Shaw", "Murphy", "Miller", "Cox", "Richards", "Khan", "Marshall", "Anderson", "Simpson",
    "Ellis", "Adams", "Singh", "Begum", "Wilkinson", "Foster", "Chapman", "Powell", "Webb", "Rogers",
    "Gray", "Mason", "Ali", "Hunt", "Hussain", "Campbell", "Matthews", "Owen", "Palmer", "Holmes",
    "Mills", "Barnes", "Knight", "Lloyd", "Butler", "Russell", "Barker", "Fisher", "Stevens",
    "Jenkins", "Murray", "Dixon", "Harvey", "Graham", "Pearson", "Ahmed", "Fletcher", "Walsh",
    "Kaur", "Gibson", "Howard", "Andrews",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub year_min: i32,
    pub year_max: i32,
    /// Scales all planted effects; 0 gives labels independent of every feature.
    pub signal_strength: f64,
    pub patent_base_rate: f64,
    pub trial_base_rate: f64,
    /// Fraction of records whose abstract is dropped (exercises the filter).
    pub missing_abstract_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 20_000,
            year_min: 1990,
            year_max: 2017,
            signal_strength: 0.8,
            // Ratios of the labelled dementia counts: 2647/20864 and 660/20864.
            patent_base_rate: 0.127,
            trial_base_rate: 0.032,
            missing_abstract_rate: 0.0,
            seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.n == 0 {
            return Err(CorpusError::ConfigError("n must be at least 1".into()));
        }
        if self.year_min > self.year_max {
            return Err(CorpusError::ConfigError(format!(
                "empty year range {}..={}",
                self.year_min, self.year_max
            )));
        }
        if !(0.0..=1.0).contains(&self.signal_strength) {
            return Err(CorpusError::ConfigError("signal_strength must lie in [0,1]".into()));
        }
        for (name, r) in [("patent_base_rate", self.patent_base_rate), ("trial_base_rate", self.trial_base_rate)] {
            if !(r > 0.0 && r < 1.0) {
                return Err(CorpusError::ConfigError(format!("{name} must lie in (0,1)")));
            }
        }
        if !(0.0..=1.0).contains(&self.missing_abstract_rate) {
            return Err(CorpusError::ConfigError("missing_abstract_rate must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// The generator's own view of one record, used by tests as an oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PlantedSignal {
    pub metadata: f64,
    pub concepts: f64,
    pub abstract_style: f64,
    pub patent_probability: f64,
}

pub fn synth_corpus(config: &SynthConfig) -> Result<Vec<PublicationRecord>, CorpusError> {
    Ok(synth_with_signal(config)?.into_iter().map(|(r, _)| r).collect())
}

pub(crate) fn synth_with_signal(
    config: &SynthConfig,
) -> Result<Vec<(PublicationRecord, PlantedSignal)>, CorpusError> {
    config.validate()?;
    let mut rng = util::rng(config.seed, 0x5e_ed);
    let theme_concepts: Vec<Vec<String>> = THEME_STEMS
        .iter()
        .map(|stem| NOUNS.iter().map(|n| format!("{stem} {n}")).collect())
        .collect();
    let generic_concepts: Vec<String> =
        (0..GENERIC_CONCEPTS).map(|i| format!("{} {}", NOUNS[i % NOUNS.len()], i / NOUNS.len() + 1)).collect();
    let width = (config.n as f64).log10().ceil().max(1.0) as usize + 1;

    let mut out = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let year = rng.random_range(config.year_min..=config.year_max);
        let mut r = PublicationRecord::new(format!("pub.{i:0width$}"), year, OpenAccess::ALL[rng.random_range(0..5)]);

        // Metadata tier.
        let journal = rng.random_range(0..N_JOURNALS);
        r.journal_id = format!("jour.{journal:04}");
        r.journal_title = format!("Journal of {} Studies {}", cap(NOUNS[journal % NOUNS.len()]), journal);
        let mut meta = journal_weight(journal);
        let n_funders = rng.random_range(1..=3);
        let mut funders: Vec<usize> = index::sample(&mut rng, N_FUNDERS, n_funders).into_vec();
        funders.sort_unstable();
        for &f in &funders {
            meta += funder_weight(f);
            r.funders.push(format!("Funder {}", f + 1));
            let c = COUNTRIES[f % COUNTRIES.len()].to_string();
            if !r.funder_countries.contains(&c) {
                r.funder_countries.push(c);
            }
        }
        let author = skewed(&mut rng, N_AUTHORS);
        r.first_author_id = format!("ur.{author:05}");
        r.first_author_name = format!(
            "{} {}",
            FIRST_NAMES[author % FIRST_NAMES.len()],
            LAST_NAMES[(author / FIRST_NAMES.len()) % LAST_NAMES.len()]
        );
        let org = skewed(&mut rng, N_ORGS);
        r.first_author_affiliation_id = format!("grid.{org:04}");
        r.first_author_affiliation_name = org_name(org);
        r.first_author_affiliation_country = org_country(org).to_string();
        let mut orgs = vec![org];
        let n_orgs = rng.random_range(1..=3);
        for o in index::sample(&mut rng, N_ORGS, n_orgs).into_iter() {
            if !orgs.contains(&o) {
                orgs.push(o);
            }
        }
        r.research_org_names = orgs.iter().map(|&o| org_name(o)).collect();
        for &o in &orgs {
            let c = org_country(o).to_string();
            if !r.research_org_country_names.contains(&c) {
                r.research_org_country_names.push(c);
            }
        }
        r.research_org_names_count = Some(r.research_org_names.len() as u32);
        r.research_org_country_names_count = Some(r.research_org_country_names.len() as u32);
        r.authors_count = rng.random_range(1..=20);
        r.reference_ids_count = rng.random_range(5..=90);
        r.category_rcdc = draw_labels(&mut rng, 40, 1, 4, |k| format!("RCDC {}", k + 1));
        r.category_hra = draw_labels(&mut rng, 6, 1, 2, |k| format!("HRA {}", k + 1));
        r.category_hracs_rac = draw_labels(&mut rng, 25, 1, 2, |k| format!("RAC {}.{}", k / 5 + 1, k % 5 + 1));

        // Concept tier.
        let theme = rng.random_range(0..THEME_WEIGHTS.len());
        let concept_signal = THEME_WEIGHTS[theme];
        let n_theme = rng.random_range(4..=8);
        for k in index::sample(&mut rng, CONCEPTS_PER_THEME, n_theme).into_iter() {
            let importance = round3(rng.random_range(0.3..1.0));
            r.concepts.push(Concept { term: theme_concepts[theme][k].clone(), importance });
        }
        let n_generic = rng.random_range(2..=4);
        for k in index::sample(&mut rng, GENERIC_CONCEPTS, n_generic).into_iter() {
            let importance = round3(rng.random::<f64>());
            r.concepts.push(Concept { term: generic_concepts[k].clone(), importance });
        }

        // Abstract tier.
        let style = rng.random_range(0..STYLE_WEIGHTS.len());
        let abstract_signal = STYLE_WEIGHTS[style];
        let n_filler = rng.random_range(40..=80);
        let n_style = rng.random_range(10..=16);
        let mut words: Vec<&str> = (0..n_filler).map(|_| FILLER[rng.random_range(0..FILLER.len())]).collect();
        for _ in 0..n_style {
            let at = rng.random_range(0..=words.len());
            words.insert(at, STYLE_WORDS[style][rng.random_range(0..12)]);
        }
        let text = sentence_case(&words);
        r.r#abstract = if rng.random::<f64>() < config.missing_abstract_rate { None } else { Some(text) };

        out.push((r, [meta, concept_signal, abstract_signal]));
    }

    let s = config.signal_strength * SCALE;
    let patent_z: Vec<f64> = out.iter().map(|(_, [m, c, a])| s * (m + c + a)).collect();
    let trial_z: Vec<f64> = out.iter().map(|(_, [m, c, a])| s * (0.5 * m + c + a)).collect();
    let patent_b = calibrate_intercept(&patent_z, config.patent_base_rate);
    let trial_b = calibrate_intercept(&trial_z, config.trial_base_rate);

    let mut rng = util::rng(config.seed, 0x0c7c_0e);
    let mut rows = Vec::with_capacity(out.len());
    for (i, (mut r, [meta, concepts, abstract_style])) in out.into_iter().enumerate() {
        let year = r.year;
        let p_patent = sigmoid(patent_b + patent_z[i]);
        let p_trial = sigmoid(trial_b + trial_z[i]);
        let patent = rng.random::<f64>() < p_patent;
        let trial = rng.random::<f64>() < p_trial;
        if patent {
            r.patent_citation_count = 1 + geometric(&mut rng, 0.5);
            r.first_patent_citation_year = Some(year + geometric(&mut rng, 0.2).min(20) as i32);
        }
        if trial {
            r.trial_citation_count = 1 + geometric(&mut rng, 0.6);
            r.first_trial_citation_year = Some(year + geometric(&mut rng, 0.14).min(25) as i32);
        }
        let cited = if patent || trial { 200.0 } else { 30.0 };
        let times_cited = (cited * (0.2 + 1.6 * rng.random::<f64>())).round() as u64;
        r.leakage = LeakageFields {
            recent_citations: Some(times_cited / 5),
            altmetric: Some(round3(times_cited as f64 * rng.random_range(0.01..0.2))),
            relative_citation_ratio: Some(round3(times_cited as f64 / 40.0)),
            times_cited: Some(times_cited),
        };
        rows.push((r, PlantedSignal { metadata: meta, concepts, abstract_style, patent_probability: p_patent }));
    }
    Ok(rows)
}

/// Intercept `b` with mean(sigmoid(b + z)) = `rate`, by bisection. The mean
/// is increasing in `b`, so the root is unique.
fn calibrate_intercept(z: &[f64], rate: f64) -> f64 {
    let mean = |b: f64| z.iter().map(|&x| sigmoid(b + x)).sum::<f64>() / z.len() as f64;
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn journal_weight(j: usize) -> f64 {
    match j % 5 {
        0 => 1.0,
        1 => -1.0,
        _ => 0.0,
    }
}

fn funder_weight(f: usize) -> f64 {
    match f % 6 {
        0 => 0.8,
        1 => -0.8,
        _ => 0.0,
    }
}

fn org_name(o: usize) -> String {
    format!("Institute {} of {}", o + 1, COUNTRIES[o % COUNTRIES.len()])
}

fn org_country(o: usize) -> &'static str {
    COUNTRIES[o % COUNTRIES.len()]
}

/// Index in `0..n` with a heavy head, so some values recur often.
fn skewed(rng: &mut ChaCha8Rng, n: usize) -> usize {
    let u: f64 = rng.random();
    ((u * u * n as f64) as usize).min(n - 1)
}

fn draw_labels(
    rng: &mut ChaCha8Rng,
    pool: usize,
    lo: usize,
    hi: usize,
    name: impl Fn(usize) -> String,
) -> Vec<String> {
    let k = rng.random_range(lo..=hi);
    let mut idx = index::sample(rng, pool, k).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(name).collect()
}

fn geometric(rng: &mut ChaCha8Rng, p: f64) -> u32 {
    let mut k = 0;
    while rng.random::<f64>() >= p && k < 1000 {
        k += 1;
    }
    k
}

fn sentence_case(words: &[&str]) -> String {
    let mut s = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            s.push(if i % 13 == 0 { '.' } else { ' ' });
            if i % 13 == 0 {
                s.push(' ');
            }
        }
        if i % 13 == 0 {
            s.push_str(&cap(w));
        } else {
            s.push_str(w);
        }
    }
    s.push('.');
    s
}

fn cap(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

#[cfg(test)]
fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}
