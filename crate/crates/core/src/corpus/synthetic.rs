use chrono::{Duration, NaiveDate, TimeZone, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Corpus, GeoCoord, Provenance, TweetRecord};
use crate::{Error, Result, Stance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub center_lat: f64,
    pub center_lon: f64,
    pub std_degrees: f64,
    pub positive_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEvent {
    pub name: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_tweets: usize,
    pub positive_lexicon_size: usize,
    pub negative_lexicon_size: usize,
    pub neutral_lexicon_size: usize,
    /// Inclusive (min, max) token count per tweet.
    pub tokens_per_tweet: (usize, usize),
    pub class_token_prob: f64,
    pub label_noise: f64,
    pub regions: Vec<RegionSpec>,
    pub events: Vec<SyntheticEvent>,
    pub seed: u64,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

fn region(center_lat: f64, center_lon: f64, positive_fraction: f64) -> RegionSpec {
    RegionSpec {
        center_lat,
        center_lon,
        std_degrees: 2.0,
        positive_fraction,
    }
}

impl Default for SyntheticConfig {
    /// Four US-like regions and the five 2018 disasters.
    fn default() -> Self {
        let event = |name: &str, start, end| SyntheticEvent {
            name: name.into(),
            start,
            end,
        };
        SyntheticConfig {
            n_users: 300,
            n_tweets: 2000,
            positive_lexicon_size: 60,
            negative_lexicon_size: 60,
            neutral_lexicon_size: 300,
            tokens_per_tweet: (8, 20),
            class_token_prob: 0.4,
            label_noise: 0.1,
            regions: vec![
                region(42.0, -73.0, 0.55),
                region(32.0, -84.0, 0.40),
                region(41.0, -90.0, 0.45),
                region(37.0, -121.0, 0.60),
            ],
            events: vec![
                event("bomb_cyclone", date(2018, 1, 2), date(2018, 1, 6)),
                event("mendocino_wildfire", date(2018, 7, 27), date(2018, 9, 18)),
                event("hurricane_florence", date(2018, 8, 31), date(2018, 9, 19)),
                event("hurricane_michael", date(2018, 10, 7), date(2018, 10, 16)),
                event("camp_fire", date(2018, 11, 8), date(2018, 11, 25)),
            ],
            seed: 42,
        }
    }
}

/// Margin (days) around each event inside which synthetic timestamps fall.
const WINDOW_MARGIN_DAYS: i64 = 14;

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_users == 0 || self.n_tweets == 0 {
            return bad("n_users and n_tweets must be positive".into());
        }
        for (name, p) in [("class_token_prob", self.class_token_prob), ("label_noise", self.label_noise)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if self.class_token_prob > 0.0 && (self.positive_lexicon_size == 0 || self.negative_lexicon_size == 0) {
            return bad("class lexicons must be non-empty when class_token_prob > 0".into());
        }
        if self.class_token_prob < 1.0 && self.neutral_lexicon_size == 0 {
            return bad("neutral lexicon must be non-empty when class_token_prob < 1".into());
        }
        let (lo, hi) = self.tokens_per_tweet;
        if lo == 0 || lo > hi {
            return bad(format!("tokens_per_tweet must be a non-empty range of positive counts, got {lo}..={hi}"));
        }
        if self.regions.is_empty() {
            return bad("at least one region is required".into());
        }
        for r in &self.regions {
            if !(0.0..=1.0).contains(&r.positive_fraction) || !(r.std_degrees >= 0.0) {
                return bad(format!("invalid region {r:?}"));
            }
            if !(-90.0..=90.0).contains(&r.center_lat) || !(-180.0..=180.0).contains(&r.center_lon) {
                return bad(format!("region center out of range: {r:?}"));
            }
        }
        if self.events.is_empty() {
            return bad("at least one event is required".into());
        }
        for e in &self.events {
            if e.start > e.end {
                return bad(format!("event {} starts after it ends", e.name));
            }
        }
        Ok(())
    }

    pub fn positive_word(i: usize) -> String {
        format!("pos{i}")
    }

    pub fn negative_word(i: usize) -> String {
        format!("neg{i}")
    }

    pub fn neutral_word(i: usize) -> String {
        format!("word{i}")
    }

    /// Every word the generator can emit.
    pub fn lexicon(&self) -> Vec<String> {
        (0..self.positive_lexicon_size)
            .map(Self::positive_word)
            .chain((0..self.negative_lexicon_size).map(Self::negative_word))
            .chain((0..self.neutral_lexicon_size).map(Self::neutral_word))
            .collect()
    }

    /// Stand-in pretrained word vectors, in the text format read by
    /// [`crate::neural::load_embeddings`] once written out. Like real
    /// pretrained vectors they carry meaning: every word of a class lexicon
    /// is a noisy copy of that class's prototype direction, while neutral
    /// words are isotropic noise. Entries have variance about `1/dim`.
    pub fn embeddings(&self, dim: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (dim.max(1) as f64).sqrt();
        let gaussian = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..dim)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * scale
                })
                .collect()
        };
        let prototypes = [gaussian(&mut rng), gaussian(&mut rng)];
        let share = EMBEDDING_CLASS_SHARE;
        let keep = (1.0 - share * share).sqrt();
        let class_words = (0..self.positive_lexicon_size)
            .map(|i| (Self::positive_word(i), Some(0)))
            .chain((0..self.negative_lexicon_size).map(|i| (Self::negative_word(i), Some(1))));
        let neutral_words = (0..self.neutral_lexicon_size).map(|i| (Self::neutral_word(i), None));
        class_words
            .chain(neutral_words)
            .map(|(w, class)| {
                let noise = gaussian(&mut rng);
                let v = match class {
                    Some(c) => prototypes[c].iter().zip(&noise).map(|(p, z)| share * p + keep * z).collect(),
                    None => noise,
                };
                (w, v)
            })
            .collect()
    }
}

/// Weight of the class prototype in a class word's embedding.
pub const EMBEDDING_CLASS_SHARE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    /// Records carry the (possibly flipped) observed label.
    pub corpus: Corpus,
    /// Stance each tweet was generated from, before label noise.
    pub true_stance: Vec<Stance>,
    /// Region index of each tweet's author.
    pub region: Vec<usize>,
}

pub fn generate_synthetic(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let user_region: Vec<usize> = (0..config.n_users).map(|_| rng.random_range(0..config.regions.len())).collect();
    let user_city: Vec<String> = (0..config.n_users)
        .map(|u| format!("region{}-city{}", user_region[u], rng.random_range(0..3)))
        .collect();

    let mut records = Vec::with_capacity(config.n_tweets);
    let mut true_stance = Vec::with_capacity(config.n_tweets);
    let mut regions = Vec::with_capacity(config.n_tweets);
    for i in 0..config.n_tweets {
        let user = rng.random_range(0..config.n_users);
        let reg = &config.regions[user_region[user]];
        let (lat, lon) = if reg.std_degrees > 0.0 {
            let n = Normal::new(0.0, reg.std_degrees).expect("std checked");
            (reg.center_lat + n.sample(&mut rng), reg.center_lon + n.sample(&mut rng))
        } else {
            (reg.center_lat, reg.center_lon)
        };
        let stance = if rng.random_bool(reg.positive_fraction) {
            Stance::Positive
        } else {
            Stance::Negative
        };
        let n_tokens = rng.random_range(config.tokens_per_tweet.0..=config.tokens_per_tweet.1);
        let words: Vec<String> = (0..n_tokens)
            .map(|_| {
                if rng.random_bool(config.class_token_prob) {
                    match stance {
                        Stance::Positive => SyntheticConfig::positive_word(rng.random_range(0..config.positive_lexicon_size)),
                        Stance::Negative => SyntheticConfig::negative_word(rng.random_range(0..config.negative_lexicon_size)),
                    }
                } else {
                    SyntheticConfig::neutral_word(rng.random_range(0..config.neutral_lexicon_size))
                }
            })
            .collect();
        let label = if rng.random_bool(config.label_noise) {
            stance.flipped()
        } else {
            stance
        };
        let event = &config.events[rng.random_range(0..config.events.len())];
        let from = Utc.from_utc_datetime(&event.start.and_hms_opt(0, 0, 0).expect("midnight"))
            - Duration::days(WINDOW_MARGIN_DAYS);
        let to = Utc.from_utc_datetime(&event.end.and_hms_opt(0, 0, 0).expect("midnight"))
            + Duration::days(WINDOW_MARGIN_DAYS + 1);
        let span = (to - from).num_seconds();
        let created_at = from + Duration::seconds(rng.random_range(0..span));

        records.push(TweetRecord {
            id: format!("s{}-{i:06}", config.seed),
            user: format!("user{user:04}"),
            created_at,
            text: words.join(" "),
            geo: Some(GeoCoord {
                lat: lat.clamp(-90.0, 90.0),
                lon: lon.clamp(-180.0, 180.0),
            }),
            city: Some(user_city[user].clone()),
            event: Some(event.name.clone()),
            label: Some(label),
        });
        true_stance.push(stance);
        regions.push(user_region[user]);
    }
    Ok(SyntheticCorpus {
        corpus: Corpus::new(records, Provenance::Synthetic)?,
        true_stance,
        region: regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::write_corpus;

    fn small(seed: u64) -> SyntheticConfig {
        SyntheticConfig {
            n_tweets: 100,
            seed,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn byte_identical_for_same_seed() {
        let bytes = |c: &SyntheticConfig| {
            let mut out = Vec::new();
            write_corpus(&generate_synthetic(c).unwrap().corpus, &mut out).unwrap();
            out
        };
        assert_eq!(bytes(&small(42)), bytes(&small(42)));
        assert_ne!(bytes(&small(42)), bytes(&small(43)));
    }

    #[test]
    fn degenerate_config_uses_only_own_class_tokens() {
        let cfg = SyntheticConfig {
            class_token_prob: 1.0,
            label_noise: 0.0,
            ..small(1)
        };
        let s = generate_synthetic(&cfg).unwrap();
        for (r, &truth) in s.corpus.records().iter().zip(&s.true_stance) {
            assert_eq!(r.label, Some(truth));
            let prefix = if truth == Stance::Positive { "pos" } else { "neg" };
            assert!(r.text.split(' ').all(|w| w.starts_with(prefix)), "{}", r.text);
        }
    }

    #[test]
    fn flip_rate_concentrates() {
        let cfg = SyntheticConfig {
            n_tweets: 10_000,
            label_noise: 0.1,
            ..small(42)
        };
        let s = generate_synthetic(&cfg).unwrap();
        let flips = s
            .corpus
            .records()
            .iter()
            .zip(&s.true_stance)
            .filter(|(r, &t)| r.label != Some(t))
            .count();
        let rate = flips as f64 / 10_000.0;
        assert!((0.08..=0.12).contains(&rate), "flip rate {rate}");
    }

    #[test]
    fn timestamps_inside_event_windows() {
        let cfg = small(5);
        let s = generate_synthetic(&cfg).unwrap();
        for r in s.corpus.records() {
            let ev = cfg.events.iter().find(|e| Some(&e.name) == r.event.as_ref()).unwrap();
            let d = r.created_at.date_naive();
            assert!(d >= ev.start - Duration::days(14) && d <= ev.end + Duration::days(14));
        }
    }

    #[test]
    fn infeasible_configs_rejected() {
        let zero_lex = SyntheticConfig {
            positive_lexicon_size: 0,
            negative_lexicon_size: 0,
            neutral_lexicon_size: 0,
            ..small(1)
        };
        assert!(generate_synthetic(&zero_lex).is_err());
        let bad_prob = SyntheticConfig {
            label_noise: 1.5,
            ..small(1)
        };
        assert!(generate_synthetic(&bad_prob).is_err());
        let bad_range = SyntheticConfig {
            tokens_per_tweet: (5, 3),
            ..small(1)
        };
        assert!(generate_synthetic(&bad_range).is_err());
    }

    #[test]
    fn lexicons_are_disjoint() {
        let lex = small(1).lexicon();
        let set: std::collections::HashSet<_> = lex.iter().collect();
        assert_eq!(set.len(), lex.len());
    }
}
