//! Geographic sentiment analysis: k-means over (sentiment, latitude,
//! longitude) and per-city aggregation, with CSV output for plotting.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cohort::{Window, WindowedTweet};
use crate::kmeans::{kmeans, KMeansConfig};
use crate::{Error, Result, Stance};

#[derive(Debug, Clone, PartialEq)]
pub struct GeoPoint {
    pub sentiment: Stance,
    pub lat: f64,
    pub lon: f64,
    pub window: Window,
    pub city: Option<String>,
}

impl GeoPoint {
    /// Point for a windowed tweet that carries coordinates.
    pub fn from_windowed(t: &WindowedTweet) -> Option<Self> {
        t.record.geo.map(|g| GeoPoint {
            sentiment: t.predicted,
            lat: g.lat,
            lon: g.lon,
            window: t.window,
            city: t.record.city.clone(),
        })
    }

    fn triple(&self) -> [f64; 3] {
        [self.sentiment.as_f64(), self.lat, self.lon]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoClusterReport {
    pub k: usize,
    pub assignments: Vec<usize>,
    /// (sentiment, lat, lon) per cluster.
    pub centroids: Vec<[f64; 3]>,
    /// Sum of member sentiments, kept exact as an integer.
    pub sentiment_sum: Vec<i64>,
    /// sentiment_sum / size; 0 for an empty cluster.
    pub mean_sentiment: Vec<f64>,
    pub sizes: Vec<usize>,
    pub wcss_history: Vec<f64>,
}

/// k-means++ / Lloyd (100 iterations, tol 1e-6) on raw, unscaled
/// (sentiment, lat, lon) triples.
pub fn cluster_geo_sentiment(points: &[GeoPoint], k: usize, seed: u64) -> Result<GeoClusterReport> {
    for p in points {
        if !(-90.0..=90.0).contains(&p.lat) || !(-180.0..=180.0).contains(&p.lon) {
            return Err(Error::invalid(format!("coordinates out of range: ({}, {})", p.lat, p.lon)));
        }
    }
    let triples: Vec<[f64; 3]> = points.iter().map(GeoPoint::triple).collect();
    let fit = kmeans(&triples, 3, &KMeansConfig::new(k, seed))?;
    let mut sizes = vec![0usize; k];
    let mut sentiment_sum = vec![0i64; k];
    for (p, &a) in points.iter().zip(&fit.assignments) {
        sizes[a] += 1;
        sentiment_sum[a] += i64::from(p.sentiment.as_i8());
    }
    let mean_sentiment = sentiment_sum
        .iter()
        .zip(&sizes)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s as f64 / n as f64 })
        .collect();
    Ok(GeoClusterReport {
        k,
        assignments: fit.assignments,
        centroids: fit.centroids.iter().map(|c| [c[0], c[1], c[2]]).collect(),
        sentiment_sum,
        mean_sentiment,
        sizes,
        wcss_history: fit.wcss_history,
    })
}

pub const CLUSTER_CSV_HEADER: &str = "cluster,lat,lon,size,mean_sentiment";

pub fn write_cluster_csv<W: Write>(report: &GeoClusterReport, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CLUSTER_CSV_HEADER}")?;
    for j in 0..report.k {
        let c = report.centroids[j];
        writeln!(out, "{j},{},{},{},{}", c[1], c[2], report.sizes[j], report.mean_sentiment[j])?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CityStats {
    pub pre_mean: Option<f64>,
    pub post_mean: Option<f64>,
    pub pre_count: usize,
    pub post_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CityAggregates {
    /// Keyed by normalized (trimmed, lowercased) city name.
    pub cities: BTreeMap<String, CityStats>,
    /// Points without a city.
    pub skipped: usize,
}

pub fn normalize_city(city: &str) -> String {
    city.trim().to_lowercase()
}

/// Tweet-level mean sentiment per city and window.
pub fn aggregate_by_city(points: &[GeoPoint]) -> CityAggregates {
    let mut sums: BTreeMap<String, [(i64, usize); 2]> = BTreeMap::new();
    let mut skipped = 0;
    for p in points {
        let Some(city) = p.city.as_deref().map(normalize_city).filter(|c| !c.is_empty()) else {
            skipped += 1;
            continue;
        };
        let slot = &mut sums.entry(city).or_default()[usize::from(p.window == Window::Post)];
        slot.0 += i64::from(p.sentiment.as_i8());
        slot.1 += 1;
    }
    let mean = |(s, n): (i64, usize)| (n > 0).then(|| s as f64 / n as f64);
    let cities = sums
        .into_iter()
        .map(|(city, [pre, post])| {
            (
                city,
                CityStats {
                    pre_mean: mean(pre),
                    post_mean: mean(post),
                    pre_count: pre.1,
                    post_count: post.1,
                },
            )
        })
        .collect();
    CityAggregates { cities, skipped }
}

pub const CITY_CSV_HEADER: &str = "city,window,mean,count";

/// One row per city and non-empty window.
pub fn write_city_csv<W: Write>(agg: &CityAggregates, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CITY_CSV_HEADER}")?;
    for (city, s) in &agg.cities {
        for (w, m, n) in [(Window::Pre, s.pre_mean, s.pre_count), (Window::Post, s.post_mean, s.post_count)] {
            if let Some(m) = m {
                writeln!(out, "{city},{},{m},{n}", w.as_str())?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(s: Stance, lat: f64, lon: f64, window: Window, city: Option<&str>) -> GeoPoint {
        GeoPoint {
            sentiment: s,
            lat,
            lon,
            window,
            city: city.map(String::from),
        }
    }

    use Stance::{Negative as N, Positive as P};

    #[test]
    fn k_one_centroid_is_mean() {
        let pts = vec![
            pt(P, 10.0, 20.0, Window::Pre, None),
            pt(N, 12.0, 24.0, Window::Post, None),
            pt(P, 14.0, 22.0, Window::Post, None),
        ];
        let r = cluster_geo_sentiment(&pts, 1, 0).unwrap();
        let c = r.centroids[0];
        assert!((c[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((c[1] - 12.0).abs() < 1e-12 && (c[2] - 22.0).abs() < 1e-12);
        assert_eq!(r.sizes, vec![3]);
        assert_eq!(r.sentiment_sum, vec![1]);
    }

    #[test]
    fn too_few_distinct_triples() {
        let pts = vec![pt(P, 1.0, 1.0, Window::Pre, None); 4];
        assert!(cluster_geo_sentiment(&pts, 2, 0).is_err());
    }

    #[test]
    fn city_means() {
        let pts = vec![
            pt(P, 30.0, -97.0, Window::Post, Some("Austin")),
            pt(P, 30.0, -97.0, Window::Post, Some(" austin ")),
            pt(P, 40.0, -75.0, Window::Pre, Some("Philadelphia")),
            pt(N, 40.0, -75.0, Window::Pre, Some("philadelphia")),
            pt(N, 40.0, -75.0, Window::Pre, None),
        ];
        let agg = aggregate_by_city(&pts);
        let austin = agg.cities["austin"];
        assert_eq!((austin.post_mean, austin.post_count), (Some(1.0), 2));
        assert_eq!((austin.pre_mean, austin.pre_count), (None, 0));
        assert_eq!(agg.cities["philadelphia"].pre_mean, Some(0.0));
        assert_eq!(agg.skipped, 1);
        let counted: usize = agg.cities.values().map(|s| s.pre_count + s.post_count).sum();
        assert_eq!(counted + agg.skipped, pts.len());

        let mut out = Vec::new();
        write_city_csv(&agg, &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "city,window,mean,count\naustin,post,1,2\nphiladelphia,pre,0,2\n"
        );
    }

    #[test]
    fn cluster_csv_layout() {
        let pts = vec![pt(P, 10.0, 20.0, Window::Pre, None), pt(N, -10.0, -20.0, Window::Pre, None)];
        let r = cluster_geo_sentiment(&pts, 2, 3).unwrap();
        let mut out = Vec::new();
        write_cluster_csv(&r, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next(), Some(CLUSTER_CSV_HEADER));
        assert_eq!(text.lines().count(), 3);
    }
}
