//! Tweet corpora: JSONL ingestion, weak labeling from influential accounts,
//! batch de-duplication, stratified splits and a seeded synthetic generator.

mod io;
mod labeling;
mod split;
mod synthetic;

use std::collections::HashSet;

use chrono::{DateTime, Utc};

use crate::{Error, Result, Stance};

pub use io::{ingest_corpus, parse_corpus, read_stance_list, write_corpus};
pub use labeling::{apply_influential_labels, dedup_batches, normalize_handle, StanceList};
pub use split::split_train_val;
pub use synthetic::{generate_synthetic, RegionSpec, SyntheticConfig, SyntheticCorpus, SyntheticEvent};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoCoord {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub id: String,
    pub user: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub geo: Option<GeoCoord>,
    pub city: Option<String>,
    pub event: Option<String>,
    pub label: Option<Stance>,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, user: impl Into<String>, created_at: DateTime<Utc>, text: impl Into<String>) -> Self {
        TweetRecord {
            id: id.into(),
            user: user.into(),
            created_at,
            text: text.into(),
            geo: None,
            city: None,
            event: None,
            label: None,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.id.is_empty() {
            return Err("id must be non-empty".into());
        }
        if let Some(g) = self.geo {
            if !(-90.0..=90.0).contains(&g.lat) {
                return Err(format!("lat must be within [-90, 90], got {}", g.lat));
            }
            if !(-180.0..=180.0).contains(&g.lon) {
                return Err(format!("lon must be within [-180, 180], got {}", g.lon));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Influential,
    EventRelated,
    Synthetic,
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "influential" => Ok(Provenance::Influential),
            "event_related" | "event-related" => Ok(Provenance::EventRelated),
            "synthetic" => Ok(Provenance::Synthetic),
            other => Err(Error::invalid(format!("unknown provenance {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<TweetRecord>,
    provenance: Provenance,
}

impl Corpus {
    /// Builds a corpus after checking every record invariant and id uniqueness.
    pub fn new(records: Vec<TweetRecord>, provenance: Provenance) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            r.validate().map_err(|m| Error::invalid(format!("record {:?}: {m}", r.id)))?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
        }
        Ok(Corpus { records, provenance })
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<TweetRecord> {
        self.records
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Labels of all records, or an error naming the first unlabeled one.
    pub fn labels(&self) -> Result<Vec<Stance>> {
        self.records
            .iter()
            .map(|r| {
                r.label
                    .ok_or_else(|| Error::invalid(format!("record {:?} has no label", r.id)))
            })
            .collect()
    }

    /// Same records with labels replaced, e.g. by model predictions.
    pub fn with_labels(&self, labels: &[Stance]) -> Result<Corpus> {
        if labels.len() != self.records.len() {
            return Err(Error::invalid(format!(
                "{} labels for {} records",
                labels.len(),
                self.records.len()
            )));
        }
        let records = self
            .records
            .iter()
            .zip(labels)
            .map(|(r, &l)| TweetRecord {
                label: Some(l),
                ..r.clone()
            })
            .collect();
        Ok(Corpus {
            records,
            provenance: self.provenance,
        })
    }

    pub(crate) fn from_validated(records: Vec<TweetRecord>, provenance: Provenance) -> Self {
        Corpus { records, provenance }
    }
}
