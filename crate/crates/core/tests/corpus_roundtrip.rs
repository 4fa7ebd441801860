use chrono::{TimeZone, Utc};
use climate_stance::corpus::{parse_corpus, split_train_val, write_corpus, Corpus, GeoCoord, Provenance, TweetRecord};
use climate_stance::Stance;
use proptest::prelude::*;

fn record_strategy() -> impl Strategy<Value = TweetRecord> {
    (
        "[a-z0-9]{1,8}",
        0i64..2_000_000_000,
        any::<String>(),
        proptest::option::of((-90.0f64..=90.0, -180.0f64..=180.0)),
        proptest::option::of("[A-Za-z ]{0,12}"),
        proptest::option::of("[a-z_]{1,10}"),
        proptest::option::of(prop_oneof![Just(Stance::Positive), Just(Stance::Negative)]),
    )
        .prop_map(|(user, secs, text, geo, city, event, label)| {
            let mut r = TweetRecord::new("", user, Utc.timestamp_opt(secs, 0).unwrap(), text);
            r.geo = geo.map(|(lat, lon)| GeoCoord { lat, lon });
            r.city = city;
            r.event = event;
            r.label = label;
            r
        })
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    proptest::collection::vec(record_strategy(), 0..30).prop_map(|mut records| {
        for (i, r) in records.iter_mut().enumerate() {
            r.id = format!("id{i}");
        }
        Corpus::new(records, Provenance::EventRelated).unwrap()
    })
}

proptest! {
    #[test]
    fn write_then_parse_is_identity(corpus in corpus_strategy()) {
        let mut first = Vec::new();
        write_corpus(&corpus, &mut first).unwrap();
        let back = parse_corpus(first.as_slice(), Provenance::EventRelated).unwrap();
        prop_assert_eq!(back.records(), corpus.records());
        let mut second = Vec::new();
        write_corpus(&back, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }

    #[test]
    fn split_is_an_exact_stratified_partition(n_pos in 2usize..60, n_neg in 2usize..60, seed in any::<u64>(), f in 0.05f64..0.95) {
        let records: Vec<TweetRecord> = (0..n_pos + n_neg)
            .map(|i| {
                let mut r = TweetRecord::new(format!("t{i}"), "u", Utc.timestamp_opt(i as i64, 0).unwrap(), "x");
                r.label = Some(if i < n_pos { Stance::Positive } else { Stance::Negative });
                r
            })
            .collect();
        let corpus = Corpus::new(records, Provenance::Influential).unwrap();
        let (train, val) = split_train_val(&corpus, f, seed).unwrap();
        prop_assert_eq!(train.len() + val.len(), corpus.len());
        let pos_train = train.records().iter().filter(|r| r.label == Some(Stance::Positive)).count();
        prop_assert_eq!(pos_train, (f * n_pos as f64).floor() as usize);
        let mut ids: Vec<&str> = train.records().iter().chain(val.records()).map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), corpus.len());
    }
}
