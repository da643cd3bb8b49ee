//! Annotated evaluation lexicon: concreteness and age-of-acquisition
//! ratings, part of speech, semantic domain and corpus frequency, joined on
//! the lowercased word.
//!
//! Column names are never hard-coded; every source is read through a
//! [`ColumnSpec`]. The evaluation vocabulary is the inner join of the
//! concreteness, part-of-speech and domain sources. Age of acquisition is
//! optional per word and frequency defaults to zero.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("{path}: row {row}: cannot parse {value:?} in column {column:?}")]
    Parse {
        path: PathBuf,
        row: u64,
        column: String,
        value: String,
    },
    #[error("{word:?}: {what} {value} is out of range")]
    OutOfRange {
        word: String,
        what: &'static str,
        value: f64,
    },
    #[error("the annotation sources share no words")]
    EmptyJoin,
    #[error("lexicon is empty")]
    Empty,
}

/// Where to find the word and value columns of a delimited annotation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub path: PathBuf,
    pub word_column: String,
    pub value_column: String,
    /// Field delimiter; defaults to `,` for `.csv` files and tab otherwise.
    #[serde(default)]
    pub delimiter: Option<char>,
    /// Cell values treated as missing (row skipped).
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "NA".into(), "#N/A".into(), "NaN".into()]
}

impl ColumnSpec {
    pub fn new(path: impl Into<PathBuf>, word_column: &str, value_column: &str) -> Self {
        ColumnSpec {
            path: path.into(),
            word_column: word_column.into(),
            value_column: value_column.into(),
            delimiter: None,
            missing: default_missing(),
        }
    }

    fn delimiter(&self) -> u8 {
        match self.delimiter {
            Some(c) => c as u8,
            None if self
                .path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("csv")) =>
            {
                b','
            }
            None => b'\t',
        }
    }
}

/// A parsed annotation column with the number of duplicate words seen.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Annotations<T> {
    pub values: HashMap<String, T>,
    /// Rows whose word had already been seen; the last occurrence wins.
    pub duplicates: usize,
}

impl<T> Annotations<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&T> {
        self.values.get(word)
    }
}

impl<T> FromIterator<(String, T)> for Annotations<T> {
    fn from_iter<I: IntoIterator<Item = (String, T)>>(iter: I) -> Self {
        let mut out = Annotations {
            values: HashMap::new(),
            duplicates: 0,
        };
        for (w, v) in iter {
            if out.values.insert(w.to_lowercase(), v).is_some() {
                out.duplicates += 1;
            }
        }
        out
    }
}

fn load_column<T, F>(spec: &ColumnSpec, mut parse: F) -> Result<Annotations<T>, LexiconError>
where
    F: FnMut(&str) -> Option<T>,
{
    let path = &spec.path;
    let file = File::open(path).map_err(|source| LexiconError::Io {
        path: path.clone(),
        source,
    })?;
    let csv_err = |source| LexiconError::Csv {
        path: path.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(spec.delimiter())
        .flexible(true)
        .quoting(spec.delimiter() == b',')
        .from_reader(file);
    let headers = reader.headers().map_err(csv_err)?.clone();
    // an empty file has no header row and no data
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Ok(Annotations {
            values: HashMap::new(),
            duplicates: 0,
        });
    }
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| LexiconError::MissingColumn {
                path: path.clone(),
                column: name.to_string(),
            })
    };
    let word_col = column(&spec.word_column)?;
    let value_col = column(&spec.value_column)?;

    let mut out = Annotations {
        values: HashMap::new(),
        duplicates: 0,
    };
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let row = record.position().map_or(0, |p| p.line());
        let word = record.get(word_col).unwrap_or("").trim();
        let raw = record.get(value_col).unwrap_or("").trim();
        if word.is_empty() || spec.missing.iter().any(|m| m == raw) {
            continue;
        }
        let value = parse(raw).ok_or_else(|| LexiconError::Parse {
            path: path.clone(),
            row,
            column: spec.value_column.clone(),
            value: raw.to_string(),
        })?;
        if out.values.insert(word.to_lowercase(), value).is_some() {
            out.duplicates += 1;
        }
    }
    Ok(out)
}

/// Reads a numeric rating column (concreteness, age of acquisition).
pub fn load_ratings(spec: &ColumnSpec) -> Result<Annotations<f64>, LexiconError> {
    load_column(spec, |s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
}

pub fn load_pos(spec: &ColumnSpec) -> Result<Annotations<Pos>, LexiconError> {
    load_column(spec, |s| Some(Pos::from_label(s)))
}

pub fn load_domains(spec: &ColumnSpec) -> Result<Annotations<Domain>, LexiconError> {
    load_column(spec, |s| s.parse().ok())
}

/// Part-of-speech classes of the evaluation lexicon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    Adjective,
    Adverb,
    Name,
    Noun,
    Verb,
    Function,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 7] = [
        Pos::Adjective,
        Pos::Adverb,
        Pos::Name,
        Pos::Noun,
        Pos::Verb,
        Pos::Function,
        Pos::Other,
    ];

    /// Maps a dominant-POS label to a class. Closed-class labels become
    /// `Function`; anything unrecognised becomes `Other`.
    pub fn from_label(label: &str) -> Pos {
        match label.trim().to_ascii_lowercase().as_str() {
            "adjective" | "adj" | "a" => Pos::Adjective,
            "adverb" | "adv" | "r" => Pos::Adverb,
            "name" | "proper noun" | "propn" => Pos::Name,
            "noun" | "n" => Pos::Noun,
            "verb" | "v" => Pos::Verb,
            "function" | "article" | "conjunction" | "determiner" | "preposition" | "pronoun"
            | "to" | "not" | "ex" => Pos::Function,
            _ => Pos::Other,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pos::Adjective => "Adjective",
            Pos::Adverb => "Adverb",
            Pos::Name => "Name",
            Pos::Noun => "Noun",
            Pos::Verb => "Verb",
            Pos::Function => "Function",
            Pos::Other => "Other",
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The 21 top-level semantic fields of the USAS tagset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    GeneralAbstract,
    BodyIndividual,
    ArtsCrafts,
    Emotion,
    FoodFarming,
    GovernmentPublic,
    HousingHome,
    MoneyCommerce,
    Entertainment,
    LifeLivingThings,
    MovementTravel,
    NumbersMeasures,
    MaterialsObjects,
    Education,
    Communication,
    SocialActions,
    Time,
    WorldEnvironment,
    Psychological,
    ScienceTech,
    NamesGrammar,
}

impl Domain {
    pub const ALL: [Domain; 21] = [
        Domain::GeneralAbstract,
        Domain::BodyIndividual,
        Domain::ArtsCrafts,
        Domain::Emotion,
        Domain::FoodFarming,
        Domain::GovernmentPublic,
        Domain::HousingHome,
        Domain::MoneyCommerce,
        Domain::Entertainment,
        Domain::LifeLivingThings,
        Domain::MovementTravel,
        Domain::NumbersMeasures,
        Domain::MaterialsObjects,
        Domain::Education,
        Domain::Communication,
        Domain::SocialActions,
        Domain::Time,
        Domain::WorldEnvironment,
        Domain::Psychological,
        Domain::ScienceTech,
        Domain::NamesGrammar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Domain::GeneralAbstract => "General & Abstract",
            Domain::BodyIndividual => "Body & Individual",
            Domain::ArtsCrafts => "Arts & Crafts",
            Domain::Emotion => "Emotion",
            Domain::FoodFarming => "Food & Farming",
            Domain::GovernmentPublic => "Government & Public",
            Domain::HousingHome => "Housing & Home",
            Domain::MoneyCommerce => "Money & Commerce",
            Domain::Entertainment => "Entertainment",
            Domain::LifeLivingThings => "Life & Living Things",
            Domain::MovementTravel => "Movement & Travel",
            Domain::NumbersMeasures => "Numbers & Measures",
            Domain::MaterialsObjects => "Materials & Objects",
            Domain::Education => "Education",
            Domain::Communication => "Communication",
            Domain::SocialActions => "Social Actions",
            Domain::Time => "Time",
            Domain::WorldEnvironment => "World & Environment",
            Domain::Psychological => "Psychological",
            Domain::ScienceTech => "Science & Tech",
            Domain::NamesGrammar => "Names & Grammar",
        }
    }

    /// USAS top-level letter.
    pub fn code(self) -> char {
        const CODES: [char; 21] = [
            'A', 'B', 'C', 'E', 'F', 'G', 'H', 'I', 'K', 'L', 'M', 'N', 'O', 'P', 'Q', 'S', 'T',
            'W', 'X', 'Y', 'Z',
        ];
        CODES[self as usize]
    }

    fn from_code(c: char) -> Option<Domain> {
        Domain::ALL
            .into_iter()
            .find(|d| d.code() == c.to_ascii_uppercase())
    }
}

fn squash(s: &str) -> String {
    s.to_ascii_lowercase()
        .replace(" and ", " & ")
        .replace("environ.", "environment")
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '&')
        .collect()
}

impl FromStr for Domain {
    type Err = String;

    /// Accepts a domain name (`Food & Farming`, `food and farming`) or a
    /// USAS tag whose first letter names the field (`F`, `F1`, `F1/A5`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let key = squash(s);
        if let Some(d) = Domain::ALL.into_iter().find(|d| squash(d.name()) == key) {
            return Ok(d);
        }
        let mut chars = s.chars();
        if let Some(first) = chars.next() {
            let rest = chars.as_str();
            let tag_like = rest.is_empty() || rest.starts_with(|c: char| c.is_ascii_digit());
            if first.is_ascii_alphabetic() && tag_like {
                if let Some(d) = Domain::from_code(first) {
                    return Ok(d);
                }
            }
        }
        Err(format!("unknown semantic domain {s:?}"))
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Concreteness rating bands `[1,2)`, `[2,3)`, `[3,4)`, `[4,5]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConcretenessBin {
    OneToTwo,
    TwoToThree,
    ThreeToFour,
    FourToFive,
}

impl ConcretenessBin {
    pub const ALL: [ConcretenessBin; 4] = [
        ConcretenessBin::OneToTwo,
        ConcretenessBin::TwoToThree,
        ConcretenessBin::ThreeToFour,
        ConcretenessBin::FourToFive,
    ];

    pub fn of(concreteness: f64) -> Option<Self> {
        match concreteness {
            c if (1.0..2.0).contains(&c) => Some(ConcretenessBin::OneToTwo),
            c if (2.0..3.0).contains(&c) => Some(ConcretenessBin::TwoToThree),
            c if (3.0..4.0).contains(&c) => Some(ConcretenessBin::ThreeToFour),
            c if (4.0..=5.0).contains(&c) => Some(ConcretenessBin::FourToFive),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ConcretenessBin::OneToTwo => "[1,2)",
            ConcretenessBin::TwoToThree => "[2,3)",
            ConcretenessBin::ThreeToFour => "[3,4)",
            ConcretenessBin::FourToFive => "[4,5]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexiconEntry {
    pub word: String,
    pub concreteness: f64,
    pub aoa: Option<f64>,
    pub pos: Pos,
    pub domain: Domain,
    pub per_million: f64,
    pub bin: ConcretenessBin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedLexicon {
    entries: Vec<LexiconEntry>,
    index: HashMap<String, usize>,
    counts_by_domain: BTreeMap<Domain, usize>,
    counts_by_pos: BTreeMap<Pos, usize>,
    counts_by_bin: BTreeMap<ConcretenessBin, usize>,
}

impl AnnotatedLexicon {
    /// Sorts entries by word and recomputes category counts. Duplicate
    /// words keep their last entry.
    pub fn from_entries(entries: Vec<LexiconEntry>) -> Result<Self, LexiconError> {
        let mut by_word: BTreeMap<String, LexiconEntry> = BTreeMap::new();
        for e in entries {
            validate(&e)?;
            by_word.insert(e.word.clone(), e);
        }
        let entries: Vec<LexiconEntry> = by_word.into_values().collect();
        let mut lex = AnnotatedLexicon {
            index: entries
                .iter()
                .enumerate()
                .map(|(i, e)| (e.word.clone(), i))
                .collect(),
            entries,
            counts_by_domain: BTreeMap::new(),
            counts_by_pos: BTreeMap::new(),
            counts_by_bin: BTreeMap::new(),
        };
        for e in &lex.entries {
            *lex.counts_by_domain.entry(e.domain).or_default() += 1;
            *lex.counts_by_pos.entry(e.pos).or_default() += 1;
            *lex.counts_by_bin.entry(e.bin).or_default() += 1;
        }
        Ok(lex)
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn get(&self, word: &str) -> Option<&LexiconEntry> {
        self.index.get(word).map(|&i| &self.entries[i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.word.as_str())
    }

    pub fn counts_by_domain(&self) -> &BTreeMap<Domain, usize> {
        &self.counts_by_domain
    }

    pub fn counts_by_pos(&self) -> &BTreeMap<Pos, usize> {
        &self.counts_by_pos
    }

    pub fn counts_by_bin(&self) -> &BTreeMap<ConcretenessBin, usize> {
        &self.counts_by_bin
    }

    /// TSV with header `word conc aoa pos domain per_million bin`; missing
    /// age of acquisition is written as `NA`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "word\tconc\taoa\tpos\tdomain\tper_million\tbin")?;
        for e in &self.entries {
            let aoa = e.aoa.map_or_else(|| "NA".to_string(), |a| format!("{a}"));
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.word,
                e.concreteness,
                aoa,
                e.pos,
                e.domain,
                e.per_million,
                e.bin.label()
            )?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<(), LexiconError> {
        let path = path.as_ref();
        let io_err = |source| LexiconError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = io::BufWriter::new(File::create(path).map_err(io_err)?);
        self.write_tsv(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    /// Reads a lexicon written by [`AnnotatedLexicon::write_tsv`].
    pub fn load_tsv(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .quoting(false)
            .from_path(path)
            .map_err(|source| LexiconError::Csv {
                path: path.to_path_buf(),
                source,
            })?;
        let mut entries = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|source| LexiconError::Csv {
                path: path.to_path_buf(),
                source,
            })?;
            let row = record.position().map_or(0, |p| p.line());
            let bad = |column: &str, value: &str| LexiconError::Parse {
                path: path.to_path_buf(),
                row,
                column: column.to_string(),
                value: value.to_string(),
            };
            let field = |i: usize| record.get(i).unwrap_or("");
            let concreteness: f64 = field(1).parse().map_err(|_| bad("conc", field(1)))?;
            let aoa = match field(2) {
                "NA" | "" => None,
                s => Some(s.parse().map_err(|_| bad("aoa", s))?),
            };
            let domain = field(4).parse().map_err(|_| bad("domain", field(4)))?;
            let per_million = field(5).parse().map_err(|_| bad("per_million", field(5)))?;
            let bin = ConcretenessBin::of(concreteness).ok_or_else(|| bad("conc", field(1)))?;
            entries.push(LexiconEntry {
                word: field(0).to_string(),
                concreteness,
                aoa,
                pos: Pos::from_label(field(3)),
                domain,
                per_million,
                bin,
            });
        }
        Self::from_entries(entries)
    }
}

fn validate(e: &LexiconEntry) -> Result<(), LexiconError> {
    let out = |what, value| LexiconError::OutOfRange {
        word: e.word.clone(),
        what,
        value,
    };
    if !(1.0..=5.0).contains(&e.concreteness) {
        return Err(out("concreteness", e.concreteness));
    }
    if let Some(a) = e.aoa {
        if !(a > 0.0 && a.is_finite()) {
            return Err(out("age of acquisition", a));
        }
    }
    if !(e.per_million >= 0.0 && e.per_million.is_finite()) {
        return Err(out("per-million frequency", e.per_million));
    }
    if ConcretenessBin::of(e.concreteness) != Some(e.bin) {
        return Err(out("concreteness bin for", e.concreteness));
    }
    Ok(())
}

/// Inner join of concreteness, POS and domain annotations.
pub fn join(
    concreteness: &Annotations<f64>,
    aoa: Option<&Annotations<f64>>,
    pos: &Annotations<Pos>,
    domains: &Annotations<Domain>,
    frequency: Option<&FrequencyTable>,
) -> Result<AnnotatedLexicon, LexiconError> {
    let mut entries = Vec::new();
    for (word, &conc) in &concreteness.values {
        let (Some(&p), Some(&d)) = (pos.get(word), domains.get(word)) else {
            continue;
        };
        let bin = ConcretenessBin::of(conc).ok_or_else(|| LexiconError::OutOfRange {
            word: word.clone(),
            what: "concreteness",
            value: conc,
        })?;
        entries.push(LexiconEntry {
            word: word.clone(),
            concreteness: conc,
            aoa: aoa.and_then(|a| a.get(word).copied()),
            pos: p,
            domain: d,
            per_million: frequency.map_or(0.0, |f| f.per_million(word)),
            bin,
        });
    }
    if entries.is_empty() {
        return Err(LexiconError::EmptyJoin);
    }
    AnnotatedLexicon::from_entries(entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSummary {
    pub domain: Domain,
    pub count: usize,
    pub mean_concreteness: f64,
    /// Mean over entries that have an age of acquisition.
    pub mean_aoa: Option<f64>,
}

/// Per-domain counts and mean ratings, in domain order, for domains present.
pub fn summarize(lexicon: &AnnotatedLexicon) -> Result<Vec<DomainSummary>, LexiconError> {
    if lexicon.is_empty() {
        return Err(LexiconError::Empty);
    }
    let mut acc: BTreeMap<Domain, (usize, f64, f64, usize)> = BTreeMap::new();
    for e in lexicon.entries() {
        let slot = acc.entry(e.domain).or_default();
        slot.0 += 1;
        slot.1 += e.concreteness;
        if let Some(a) = e.aoa {
            slot.2 += a;
            slot.3 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(domain, (n, conc, aoa, n_aoa))| DomainSummary {
            domain,
            count: n,
            mean_concreteness: conc / n as f64,
            mean_aoa: (n_aoa > 0).then(|| aoa / n_aoa as f64),
        })
        .collect())
}

pub fn write_summary_tsv<W: Write>(rows: &[DomainSummary], mut out: W) -> io::Result<()> {
    writeln!(out, "domain\tcount\tmean_conc\tmean_aoa")?;
    for r in rows {
        let aoa = r
            .mean_aoa
            .map_or_else(|| "NA".into(), |a| format!("{a:.4}"));
        writeln!(
            out,
            "{}\t{}\t{:.4}\t{}",
            r.domain, r.count, r.mean_concreteness, aoa
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tsv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".tsv").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn ann<T: Clone>(pairs: &[(&str, T)]) -> Annotations<T> {
        pairs
            .iter()
            .map(|(w, v)| (w.to_string(), v.clone()))
            .collect()
    }

    #[test]
    fn ratings_parse_belief() {
        let f = tsv("Word\tConc.M\nbelief\t1.19\n");
        let r = load_ratings(&ColumnSpec::new(f.path(), "Word", "Conc.M")).unwrap();
        assert_eq!(r.get("belief"), Some(&1.19));
        assert_eq!(ConcretenessBin::of(1.19), Some(ConcretenessBin::OneToTwo));
    }

    #[test]
    fn ratings_empty_file() {
        let f = tsv("");
        let r = load_ratings(&ColumnSpec::new(f.path(), "Word", "Conc.M")).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn ratings_non_numeric_reports_row() {
        let f = tsv("Word\tConc.M\ncat\t4.9\ndog\thigh\n");
        match load_ratings(&ColumnSpec::new(f.path(), "Word", "Conc.M")) {
            Err(LexiconError::Parse { row, value, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(value, "high");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ratings_missing_column() {
        let f = tsv("Word\tRating\ncat\t4.9\n");
        assert!(matches!(
            load_ratings(&ColumnSpec::new(f.path(), "Word", "Conc.M")),
            Err(LexiconError::MissingColumn { .. })
        ));
    }

    #[test]
    fn ratings_duplicates_last_wins_and_lowercases() {
        let f = tsv("Word\tAoA\nCat\t3.0\ncat\t4.0\nDog\tNA\n");
        let r = load_ratings(&ColumnSpec::new(f.path(), "Word", "AoA")).unwrap();
        assert_eq!(r.get("cat"), Some(&4.0));
        assert_eq!(r.duplicates, 1);
        assert_eq!(r.get("dog"), None);
    }

    #[test]
    fn csv_extension_uses_comma() {
        let mut f = tempfile::Builder::new().suffix(".csv").tempfile().unwrap();
        f.write_all(b"w,v\n\"apple\",4.5\n").unwrap();
        let r = load_ratings(&ColumnSpec::new(f.path(), "w", "v")).unwrap();
        assert_eq!(r.get("apple"), Some(&4.5));
    }

    #[test]
    fn domain_parsing() {
        assert_eq!("Food & Farming".parse::<Domain>(), Ok(Domain::FoodFarming));
        assert_eq!(
            "food and farming".parse::<Domain>(),
            Ok(Domain::FoodFarming)
        );
        assert_eq!(
            "World & Environ.".parse::<Domain>(),
            Ok(Domain::WorldEnvironment)
        );
        assert_eq!("F1".parse::<Domain>(), Ok(Domain::FoodFarming));
        assert_eq!("X2.1/A5".parse::<Domain>(), Ok(Domain::Psychological));
        assert_eq!("Z99".parse::<Domain>(), Ok(Domain::NamesGrammar));
        assert!("D".parse::<Domain>().is_err());
        assert!("Gardening".parse::<Domain>().is_err());
        for d in Domain::ALL {
            assert_eq!(d.name().parse::<Domain>(), Ok(d));
            assert_eq!(d.code().to_string().parse::<Domain>(), Ok(d));
        }
    }

    #[test]
    fn pos_mapping() {
        assert_eq!(Pos::from_label("Noun"), Pos::Noun);
        assert_eq!(Pos::from_label("Determiner"), Pos::Function);
        assert_eq!(Pos::from_label("Interjection"), Pos::Other);
        assert_eq!(Pos::from_label("Name"), Pos::Name);
    }

    #[test]
    fn bins() {
        assert_eq!(ConcretenessBin::of(1.0), Some(ConcretenessBin::OneToTwo));
        assert_eq!(ConcretenessBin::of(2.0), Some(ConcretenessBin::TwoToThree));
        assert_eq!(
            ConcretenessBin::of(3.999),
            Some(ConcretenessBin::ThreeToFour)
        );
        assert_eq!(ConcretenessBin::of(5.0), Some(ConcretenessBin::FourToFive));
        assert_eq!(ConcretenessBin::of(0.5), None);
        assert_eq!(ConcretenessBin::of(5.01), None);
    }

    #[test]
    fn join_three_words() {
        let conc = ann(&[("cat", 4.9), ("belief", 1.19), ("run", 4.0), ("idea", 1.6)]);
        let aoa = ann(&[("cat", 3.0), ("belief", 9.0)]);
        let pos = ann(&[
            ("cat", Pos::Noun),
            ("belief", Pos::Noun),
            ("run", Pos::Verb),
            ("idea", Pos::Noun),
        ]);
        let dom = ann(&[
            ("cat", Domain::LifeLivingThings),
            ("belief", Domain::Psychological),
            ("run", Domain::MovementTravel),
        ]);
        let lex = join(&conc, Some(&aoa), &pos, &dom, None).unwrap();
        assert_eq!(lex.len(), 3);
        assert!(lex.get("idea").is_none());
        assert_eq!(lex.get("run").unwrap().aoa, None);
        assert_eq!(lex.get("cat").unwrap().per_million, 0.0);
        assert_eq!(lex.counts_by_domain().values().sum::<usize>(), 3);
        assert_eq!(lex.counts_by_pos().values().sum::<usize>(), 3);
        assert_eq!(lex.counts_by_bin().values().sum::<usize>(), 3);
        assert_eq!(
            lex.words().collect::<Vec<_>>(),
            vec!["belief", "cat", "run"]
        );
    }

    #[test]
    fn join_uses_frequency_table() {
        use crate::corpus::{count_frequencies, Corpus};
        let c = Corpus::from_text_lines("x", ["cat cat dog", "cat"]);
        let f = count_frequencies(&c).unwrap();
        let lex = join(
            &ann(&[("cat", 5.0)]),
            None,
            &ann(&[("cat", Pos::Noun)]),
            &ann(&[("cat", Domain::LifeLivingThings)]),
            Some(&f),
        )
        .unwrap();
        assert_eq!(lex.get("cat").unwrap().per_million, 750_000.0);
    }

    #[test]
    fn join_empty_intersection() {
        let err = join(
            &ann(&[("cat", 4.0)]),
            None,
            &ann(&[("dog", Pos::Noun)]),
            &ann(&[("cat", Domain::Time)]),
            None,
        );
        assert!(matches!(err, Err(LexiconError::EmptyJoin)));
    }

    #[test]
    fn join_rejects_out_of_range_concreteness() {
        let err = join(
            &ann(&[("cat", 7.0)]),
            None,
            &ann(&[("cat", Pos::Noun)]),
            &ann(&[("cat", Domain::Time)]),
            None,
        );
        assert!(matches!(err, Err(LexiconError::OutOfRange { .. })));
    }

    #[test]
    fn summarize_means() {
        let entry = |w: &str, c: f64, a: Option<f64>| LexiconEntry {
            word: w.into(),
            concreteness: c,
            aoa: a,
            pos: Pos::Noun,
            domain: Domain::FoodFarming,
            per_million: 1.0,
            bin: ConcretenessBin::of(c).unwrap(),
        };
        let one = AnnotatedLexicon::from_entries(vec![entry("a", 4.2, Some(8.6))]).unwrap();
        let s = summarize(&one).unwrap();
        assert_eq!(s[0].count, 1);
        assert_eq!(s[0].mean_concreteness, 4.2);
        assert_eq!(s[0].mean_aoa, Some(8.6));

        let two =
            AnnotatedLexicon::from_entries(vec![entry("a", 2.0, None), entry("b", 4.0, Some(6.0))])
                .unwrap();
        let s = summarize(&two).unwrap();
        assert_eq!(s[0].mean_concreteness, 3.0);
        assert_eq!(s[0].mean_aoa, Some(6.0));
    }

    #[test]
    fn tsv_round_trip() {
        let lex = join(
            &ann(&[("cat", 4.9), ("belief", 1.19)]),
            Some(&ann(&[("cat", 3.5)])),
            &ann(&[("cat", Pos::Noun), ("belief", Pos::Noun)]),
            &ann(&[
                ("cat", Domain::LifeLivingThings),
                ("belief", Domain::Psychological),
            ]),
            None,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lex.tsv");
        lex.save_tsv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("word\tconc\taoa\tpos\tdomain\tper_million\tbin\n"));
        assert!(text.contains("belief\t1.19\tNA\tNoun\tPsychological\t0\t[1,2)"));
        assert_eq!(AnnotatedLexicon::load_tsv(&p).unwrap(), lex);
    }
}
