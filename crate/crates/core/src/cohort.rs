//! Event windows and the pre/post comparison of mean predicted sentiment,
//! over all tweets and over the cohort of users who tweeted in both windows.

use std::collections::BTreeSet;
use std::io::Write;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, TweetRecord};
use crate::stats::{students_t_test, NotApplicable, TTest};
use crate::{Error, Result, Stance};

pub const DEFAULT_MARGIN_DAYS: u32 = 14;
pub const SIGNIFICANCE_LEVEL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSpec {
    pub name: String,
    pub start: NaiveDate,
    /// Inclusive last day of the event.
    pub end: NaiveDate,
    pub margin_days: u32,
}

impl EventSpec {
    pub fn new(name: impl Into<String>, start: NaiveDate, end: NaiveDate) -> Result<Self> {
        let spec = EventSpec {
            name: name.into(),
            start,
            end,
            margin_days: DEFAULT_MARGIN_DAYS,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.start > self.end {
            return Err(Error::invalid(format!("event {} starts after it ends", self.name)));
        }
        if self.margin_days == 0 {
            return Err(Error::invalid(format!("event {} needs a margin of at least one day", self.name)));
        }
        Ok(())
    }

    fn midnight(d: NaiveDate) -> DateTime<Utc> {
        Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight exists"))
    }

    /// Window of `at`: pre is `[start - margin, start)`, post is
    /// `[start, end + margin]` with the last day included whole.
    pub fn window_of(&self, at: DateTime<Utc>) -> Option<Window> {
        let margin = Duration::days(i64::from(self.margin_days));
        let onset = Self::midnight(self.start);
        let pre_from = onset - margin;
        let post_until = Self::midnight(self.end) + margin + Duration::days(1);
        if at >= pre_from && at < onset {
            Some(Window::Pre)
        } else if at >= onset && at < post_until {
            Some(Window::Post)
        } else {
            None
        }
    }
}

impl std::str::FromStr for EventSpec {
    type Err = Error;

    /// `NAME:START:END` with ISO dates, e.g. `florence:2018-08-31:2018-09-19`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, start, end] = parts.as_slice() else {
            return Err(Error::invalid(format!("event must be NAME:START:END, got {s:?}")));
        };
        let date = |d: &str| {
            NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|e| Error::invalid(format!("bad date {d:?} in event {s:?}: {e}")))
        };
        if name.is_empty() {
            return Err(Error::invalid(format!("event name missing in {s:?}")));
        }
        EventSpec::new(*name, date(start)?, date(end)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Pre,
    Post,
}

impl Window {
    pub fn as_str(self) -> &'static str {
        match self {
            Window::Pre => "pre",
            Window::Post => "post",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowedTweet {
    pub record: TweetRecord,
    pub predicted: Stance,
    pub window: Window,
}

/// Assigns each tweet of `event` to its window. Records tagged with a
/// different event, and tweets outside both windows, are dropped.
/// `predictions` runs parallel to the corpus records.
pub fn label_windows(corpus: &Corpus, predictions: &[Stance], event: &EventSpec) -> Result<Vec<WindowedTweet>> {
    if predictions.len() != corpus.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} records",
            predictions.len(),
            corpus.len()
        )));
    }
    Ok(corpus
        .records()
        .iter()
        .zip(predictions)
        .filter(|(r, _)| r.event.as_ref().is_none_or(|e| *e == event.name))
        .filter_map(|(r, &p)| {
            event.window_of(r.created_at).map(|window| WindowedTweet {
                record: r.clone(),
                predicted: p,
                window,
            })
        })
        .collect())
}

/// Tweets by users active in both windows.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort<'a> {
    pub pre: Vec<&'a WindowedTweet>,
    pub post: Vec<&'a WindowedTweet>,
    pub users: BTreeSet<String>,
}

pub fn extract_cohort(windowed: &[WindowedTweet]) -> Cohort<'_> {
    let users_in = |w: Window| -> BTreeSet<&str> {
        windowed
            .iter()
            .filter(|t| t.window == w)
            .map(|t| t.record.user.as_str())
            .collect()
    };
    let users: BTreeSet<String> = users_in(Window::Pre)
        .intersection(&users_in(Window::Post))
        .map(|u| u.to_string())
        .collect();
    let pick = |w: Window| {
        windowed
            .iter()
            .filter(|t| t.window == w && users.contains(&t.record.user))
            .collect()
    };
    Cohort {
        pre: pick(Window::Pre),
        post: pick(Window::Post),
        users,
    }
}

/// Mean of ±1 values with `positive` of `n` positive: `(2·positive − n) / n`,
/// which is `2·(positive fraction) − 1`.
pub fn stance_mean(positive: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| (2 * positive as i64 - n as i64) as f64 / n as f64)
}

pub fn mean_from_positive_fraction(fraction: f64) -> f64 {
    2.0 * fraction - 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockResult {
    pub pre_mean: Option<f64>,
    pub post_mean: Option<f64>,
    /// post_mean − pre_mean.
    pub diff: Option<f64>,
    pub n_pre: usize,
    pub n_post: usize,
    pub pre_positive: usize,
    pub post_positive: usize,
    /// Test of post against pre, so `t` has the sign of `diff`.
    pub test: std::result::Result<TTest, NotApplicable>,
}

impl BlockResult {
    fn compute<'a>(pre: impl IntoIterator<Item = &'a WindowedTweet>, post: impl IntoIterator<Item = &'a WindowedTweet>) -> Self {
        let values = |it: &mut dyn Iterator<Item = &'a WindowedTweet>| -> Vec<f64> { it.map(|t| t.predicted.as_f64()).collect() };
        let pre = values(&mut pre.into_iter());
        let post = values(&mut post.into_iter());
        let positives = |v: &[f64]| v.iter().filter(|&&x| x > 0.0).count();
        let (pre_positive, post_positive) = (positives(&pre), positives(&post));
        let pre_mean = stance_mean(pre_positive, pre.len());
        let post_mean = stance_mean(post_positive, post.len());
        BlockResult {
            pre_mean,
            post_mean,
            diff: pre_mean.zip(post_mean).map(|(a, b)| b - a),
            n_pre: pre.len(),
            n_post: post.len(),
            pre_positive,
            post_positive,
            test: students_t_test(&post, &pre),
        }
    }

    pub fn significant(&self) -> Option<bool> {
        self.test.as_ref().ok().map(|t| t.p < SIGNIFICANCE_LEVEL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortReport {
    pub event: String,
    pub overall: BlockResult,
    pub within_cohort: BlockResult,
    pub cohort_user_count: usize,
}

/// Overall and within-cohort pre/post comparison for one event.
pub fn compare_means(event: &str, windowed: &[WindowedTweet]) -> Result<CohortReport> {
    if windowed.is_empty() {
        return Err(Error::invalid(format!("no tweets in the windows of event {event}")));
    }
    let by = |w: Window| windowed.iter().filter(move |t| t.window == w);
    let cohort = extract_cohort(windowed);
    Ok(CohortReport {
        event: event.to_string(),
        overall: BlockResult::compute(by(Window::Pre), by(Window::Post)),
        within_cohort: BlockResult::compute(cohort.pre.iter().copied(), cohort.post.iter().copied()),
        cohort_user_count: cohort.users.len(),
    })
}

/// Per-event structural counts: total, per window, cohort size and the
/// cohort's tweets per window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub total: usize,
    pub pre: usize,
    pub post: usize,
    pub cohort_users: usize,
    pub cohort_pre: usize,
    pub cohort_post: usize,
}

pub fn event_counts(windowed: &[WindowedTweet]) -> EventCounts {
    let cohort = extract_cohort(windowed);
    EventCounts {
        total: windowed.len(),
        pre: windowed.iter().filter(|t| t.window == Window::Pre).count(),
        post: windowed.iter().filter(|t| t.window == Window::Post).count(),
        cohort_users: cohort.users.len(),
        cohort_pre: cohort.pre.len(),
        cohort_post: cohort.post.len(),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub const COHORT_CSV_HEADER: &str = "event,block,pre_mean,post_mean,diff,n_pre,n_post,t,df,p,sig_1pct";

pub fn write_cohort_csv<W: Write>(reports: &[CohortReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{COHORT_CSV_HEADER}")?;
    for r in reports {
        for (name, b) in [("overall", &r.overall), ("within_cohort", &r.within_cohort)] {
            let test = b.test.as_ref().ok();
            writeln!(
                out,
                "{},{name},{},{},{},{},{},{},{},{},{}",
                r.event,
                opt(b.pre_mean),
                opt(b.post_mean),
                opt(b.diff),
                b.n_pre,
                b.n_post,
                opt(test.map(|t| t.t)),
                opt(test.map(|t| t.df)),
                opt(test.map(|t| t.p)),
                b.significant().map_or("NA", |s| if s { "true" } else { "false" }),
            )?;
        }
    }
    Ok(())
}

/// Human-readable summary line with differences at two decimals.
pub fn summary_line(r: &CohortReport) -> String {
    let block = |b: &BlockResult| match (b.diff, b.significant()) {
        (Some(d), Some(sig)) => format!("{d:+.2}{}", if sig { " (p<0.01)" } else { "" }),
        (Some(d), None) => format!("{d:+.2} (test n/a)"),
        _ => "n/a".to_string(),
    };
    format!(
        "{}: overall {} | within-cohort {} [{} users]",
        r.event,
        block(&r.overall),
        block(&r.within_cohort),
        r.cohort_user_count
    )
}
