use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Timelike, Utc};
use serde::{Deserialize, Serialize};

use super::{Corpus, GeoCoord, Provenance, StanceList, TweetRecord};
use crate::{Error, Result, Stance};

/// On-disk shape of one corpus line. Field order here is the order written.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    user: String,
    created_at: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    city: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    event: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<i64>,
}

impl RawRecord {
    fn into_record(self) -> std::result::Result<TweetRecord, String> {
        let created_at = DateTime::parse_from_rfc3339(&self.created_at)
            .map_err(|e| format!("created_at is not RFC 3339 ({e})"))?
            .with_timezone(&Utc);
        let created_at = created_at.with_nanosecond(0).unwrap_or(created_at);
        let geo = match (self.lat, self.lon) {
            (Some(lat), Some(lon)) => Some(GeoCoord { lat, lon }),
            (None, None) => None,
            (Some(_), None) => return Err("lat present without lon".into()),
            (None, Some(_)) => return Err("lon present without lat".into()),
        };
        let label = match self.label {
            None => None,
            Some(v) => Some(Stance::from_i64(v).ok_or("label must be -1 or 1")?),
        };
        let record = TweetRecord {
            id: self.id,
            user: self.user,
            created_at,
            text: self.text,
            geo,
            city: self.city,
            event: self.event,
            label,
        };
        record.validate()?;
        Ok(record)
    }

    fn from_record(r: &TweetRecord) -> Self {
        RawRecord {
            id: r.id.clone(),
            user: r.user.clone(),
            created_at: r.created_at.to_rfc3339_opts(SecondsFormat::Secs, true),
            text: r.text.clone(),
            lat: r.geo.map(|g| g.lat),
            lon: r.geo.map(|g| g.lon),
            city: r.city.clone(),
            event: r.event.clone(),
            label: r.label.map(|s| i64::from(s.as_i8())),
        }
    }
}

/// Reads a JSONL corpus. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus<R: BufRead>(reader: R, provenance: Provenance) -> Result<Corpus> {
    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, strip_position(&e)))?;
        let record = raw.into_record().map_err(|m| Error::parse(lineno, m))?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId(record.id));
        }
        records.push(record);
    }
    Ok(Corpus::from_validated(records, provenance))
}

pub fn ingest_corpus(path: impl AsRef<Path>, provenance: Provenance) -> Result<Corpus> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file), provenance)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> Result<()> {
    for r in corpus.records() {
        serde_json::to_writer(&mut out, &RawRecord::from_record(r))?;
        out.write_all(b"\n").map_err(|e| Error::io("<corpus output>", e))?;
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStance {
    handle: String,
    stance: i64,
}

pub fn read_stance_list(path: impl AsRef<Path>) -> Result<StanceList> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawStance = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, strip_position(&e)))?;
        let stance = Stance::from_i64(raw.stance).ok_or_else(|| Error::parse(lineno, "stance must be -1 or 1"))?;
        entries.push((raw.handle, stance));
    }
    StanceList::new(entries)
}

// serde_json appends "at line 1 column N"; the caller already knows the line.
fn strip_position(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    match msg.rfind(" at line ") {
        Some(idx) => msg[..idx].to_string(),
        None => msg,
    }
}
