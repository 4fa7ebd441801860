use std::collections::{HashMap, HashSet};

use super::{Corpus, Provenance, TweetRecord};
use crate::{Error, Result, Stance};

/// Known stance of influential accounts, keyed by normalized handle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StanceList {
    entries: HashMap<String, Stance>,
}

/// Lowercases and strips any leading `@`.
pub fn normalize_handle(handle: &str) -> String {
    handle.trim().trim_start_matches('@').to_lowercase()
}

impl StanceList {
    pub fn new<I, S>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Stance)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (handle, stance) in entries {
            let key = normalize_handle(handle.as_ref());
            if key.is_empty() {
                return Err(Error::invalid("empty handle in stance list"));
            }
            if map.insert(key.clone(), stance).is_some() {
                return Err(Error::invalid(format!("handle {key:?} listed twice")));
            }
        }
        Ok(StanceList { entries: map })
    }

    pub fn get(&self, handle: &str) -> Option<Stance> {
        self.entries.get(&normalize_handle(handle)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, stance: Stance) -> usize {
        self.entries.values().filter(|&&s| s == stance).count()
    }
}

/// Bulk-labels every tweet of a listed account with the account's stance and
/// drops tweets by unlisted accounts.
pub fn apply_influential_labels(corpus: &Corpus, stances: &StanceList) -> Result<Corpus> {
    if stances.is_empty() {
        return Err(Error::invalid("stance list is empty"));
    }
    if corpus.provenance() != Provenance::Influential {
        return Err(Error::invalid(format!(
            "influential labeling needs an influential corpus, got {:?}",
            corpus.provenance()
        )));
    }
    let records = corpus
        .records()
        .iter()
        .filter_map(|r| {
            stances.get(&r.user).map(|s| TweetRecord {
                label: Some(s),
                ..r.clone()
            })
        })
        .collect();
    Ok(Corpus::from_validated(records, Provenance::Influential))
}

fn content_key(r: &TweetRecord) -> (String, i64, String) {
    let text = r.text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    (r.user.clone(), r.created_at.timestamp(), text)
}

/// Removes from `event_related` every record that also appears in
/// `influential`, either by id or by (user, timestamp, normalized text).
pub fn dedup_batches(influential: &Corpus, event_related: &Corpus) -> Corpus {
    let ids: HashSet<&str> = influential.records().iter().map(|r| r.id.as_str()).collect();
    let keys: HashSet<_> = influential.records().iter().map(content_key).collect();
    let records = event_related
        .records()
        .iter()
        .filter(|r| !ids.contains(r.id.as_str()) && !keys.contains(&content_key(r)))
        .cloned()
        .collect();
    Corpus::from_validated(records, event_related.provenance())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn tweet(id: &str, user: &str, text: &str) -> TweetRecord {
        TweetRecord::new(id, user, Utc.with_ymd_and_hms(2018, 1, 1, 12, 0, 0).unwrap(), text)
    }

    fn influential(records: Vec<TweetRecord>) -> Corpus {
        Corpus::new(records, Provenance::Influential).unwrap()
    }

    #[test]
    fn unlisted_handles_dropped() {
        let stances = StanceList::new([("gore", Stance::Positive)]).unwrap();
        let c = influential(vec![tweet("1", "gore", "x"), tweet("2", "nobody", "y"), tweet("3", "gore", "z")]);
        let out = apply_influential_labels(&c, &stances).unwrap();
        assert_eq!(out.len(), 2);
        assert!(out.records().iter().all(|r| r.label == Some(Stance::Positive)));
    }

    #[test]
    fn labels_follow_handles() {
        let stances = StanceList::new([("a", Stance::Positive), ("b", Stance::Negative)]).unwrap();
        let c = influential(vec![tweet("1", "a", "x"), tweet("2", "b", "y"), tweet("3", "b", "z")]);
        let out = apply_influential_labels(&c, &stances).unwrap();
        assert_eq!(out.labels().unwrap(), vec![Stance::Positive, Stance::Negative, Stance::Negative]);
    }

    #[test]
    fn handle_match_ignores_case_and_at() {
        let stances = StanceList::new([("@ClimateHiJinx", Stance::Negative)]).unwrap();
        assert_eq!(stances.get("climatehijinx"), Some(Stance::Negative));
        assert_eq!(stances.get("@CLIMATEHIJINX"), Some(Stance::Negative));
        assert!(StanceList::new([("@A", Stance::Positive), ("a", Stance::Negative)]).is_err());
    }

    #[test]
    fn empty_stance_list_is_error() {
        let stances = StanceList::new(Vec::<(String, Stance)>::new()).unwrap();
        let c = influential(vec![tweet("1", "a", "x")]);
        assert!(apply_influential_labels(&c, &stances).is_err());
    }

    #[test]
    fn wrong_provenance_is_error() {
        let stances = StanceList::new([("a", Stance::Positive)]).unwrap();
        let c = Corpus::new(vec![tweet("1", "a", "x")], Provenance::EventRelated).unwrap();
        assert!(apply_influential_labels(&c, &stances).is_err());
    }

    #[test]
    fn dedup_by_id() {
        let inf = influential(vec![tweet("1", "a", "x")]);
        let ev = Corpus::new(vec![tweet("1", "q", "other"), tweet("2", "b", "y")], Provenance::EventRelated).unwrap();
        let out = dedup_batches(&inf, &ev);
        assert_eq!(out.len(), 1);
        assert_eq!(out.records()[0].id, "2");
    }

    #[test]
    fn dedup_without_overlap_is_identity() {
        let inf = influential(vec![tweet("1", "a", "x")]);
        let ev = Corpus::new(vec![tweet("3", "b", "y"), tweet("2", "c", "z")], Provenance::EventRelated).unwrap();
        assert_eq!(dedup_batches(&inf, &ev), ev);
    }

    #[test]
    fn dedup_by_content_triple_matches_brute_force() {
        let inf = influential(vec![tweet("1", "a", "Climate  is\tWARMING"), tweet("2", "b", "hoax")]);
        let ev = Corpus::new(
            vec![
                tweet("10", "a", "climate is warming"),
                tweet("11", "c", "climate is warming"),
                tweet("12", "b", "HOAX "),
                tweet("13", "b", "hoax!"),
            ],
            Provenance::EventRelated,
        )
        .unwrap();
        let out = dedup_batches(&inf, &ev);
        // brute force: compare every pair on the triple
        let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        let expected: Vec<_> = ev
            .records()
            .iter()
            .filter(|e| {
                !inf.records().iter().any(|i| {
                    i.id == e.id || (i.user == e.user && i.created_at == e.created_at && norm(&i.text) == norm(&e.text))
                })
            })
            .map(|r| r.id.clone())
            .collect();
        let got: Vec<_> = out.records().iter().map(|r| r.id.clone()).collect();
        assert_eq!(got, expected);
        assert_eq!(got, ["11", "13"]);
    }
}
