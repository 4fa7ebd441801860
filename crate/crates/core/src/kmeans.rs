//! Lloyd's k-means with k-means++ seeding, shared by the k-means classifier
//! and the geographic clustering.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::SparseVector;
use crate::{Error, Result};

/// A point that can be measured against dense centroids.
pub trait KPoint {
    fn dim(&self) -> usize;

    /// Squared Euclidean distance to `centroid`, whose squared norm is
    /// `centroid_norm2`.
    fn sq_dist(&self, centroid: &[f64], centroid_norm2: f64) -> f64;

    fn add_to(&self, acc: &mut [f64]);

    /// Bit-exact identity used to count distinct points.
    fn key(&self) -> Vec<u64>;

    fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut v = vec![0.0; dim];
        self.add_to(&mut v);
        v
    }
}

fn bits(x: f64) -> u64 {
    // -0.0 and 0.0 are the same point
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

impl KPoint for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn sq_dist(&self, centroid: &[f64], _centroid_norm2: f64) -> f64 {
        self.iter().zip(centroid).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    fn add_to(&self, acc: &mut [f64]) {
        for (a, x) in acc.iter_mut().zip(self) {
            *a += x;
        }
    }

    fn key(&self) -> Vec<u64> {
        self.iter().map(|&x| bits(x)).collect()
    }
}

impl KPoint for Vec<f64> {
    fn dim(&self) -> usize {
        self.len()
    }

    fn sq_dist(&self, centroid: &[f64], centroid_norm2: f64) -> f64 {
        self.as_slice().sq_dist(centroid, centroid_norm2)
    }

    fn add_to(&self, acc: &mut [f64]) {
        self.as_slice().add_to(acc)
    }

    fn key(&self) -> Vec<u64> {
        self.as_slice().key()
    }
}

impl KPoint for [f64; 3] {
    fn dim(&self) -> usize {
        3
    }

    fn sq_dist(&self, centroid: &[f64], centroid_norm2: f64) -> f64 {
        self.as_slice().sq_dist(centroid, centroid_norm2)
    }

    fn add_to(&self, acc: &mut [f64]) {
        self.as_slice().add_to(acc)
    }

    fn key(&self) -> Vec<u64> {
        self.as_slice().key()
    }
}

impl KPoint for SparseVector {
    fn dim(&self) -> usize {
        self.max_id().map_or(0, |i| i + 1)
    }

    fn sq_dist(&self, centroid: &[f64], centroid_norm2: f64) -> f64 {
        let d = self
            .iter()
            .fold(centroid_norm2, |acc, (i, x)| acc + (x - centroid[i]) * (x - centroid[i]) - centroid[i] * centroid[i]);
        d.max(0.0)
    }

    fn add_to(&self, acc: &mut [f64]) {
        for (i, x) in self.iter() {
            acc[i] += x;
        }
    }

    fn key(&self) -> Vec<u64> {
        self.iter().flat_map(|(i, x)| [i as u64, bits(x)]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iter: 100,
            tol: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step, ending with
    /// the assignment to the final centroids.
    pub wcss_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn norm2(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest<P: KPoint + ?Sized>(point: &P, centroids: &[Vec<f64>], norms: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, (c, &n)) in centroids.iter().zip(norms).enumerate() {
        let d = point.sq_dist(c, n);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub fn count_distinct<P: KPoint>(points: &[P]) -> usize {
    points.iter().map(KPoint::key).collect::<HashSet<_>>().len()
}

fn plus_plus_init<P: KPoint>(points: &[P], dim: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].to_dense(dim)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| p.sq_dist(&centroids[0], norm2(&centroids[0])))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 {
                pick = Some(i);
                if target < d {
                    break;
                }
                target -= d;
            }
        }
        let c = points[pick.expect("a point at positive distance exists")].to_dense(dim);
        let n = norm2(&c);
        for (di, p) in d2.iter_mut().zip(points) {
            *di = di.min(p.sq_dist(&c, n));
        }
        centroids.push(c);
    }
    centroids
}

/// Clusters `points` into `config.k` groups.
///
/// Seeding is k-means++; Lloyd iterations stop once no centroid moves by
/// `tol` or more, or after `max_iter` updates. A cluster left empty by an
/// update is re-seeded at the point farthest from its own centroid.
pub fn kmeans<P: KPoint>(points: &[P], dim: usize, config: &KMeansConfig) -> Result<KMeansFit> {
    let k = config.k;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if let Some(p) = points.iter().find(|p| p.dim() > dim) {
        return Err(Error::invalid(format!("point of dimension {} exceeds {dim}", p.dim())));
    }
    let distinct = count_distinct(points);
    if distinct < k {
        return Err(Error::invalid(format!("k-means needs at least {k} distinct points, got {distinct}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = plus_plus_init(points, dim, k, &mut rng);
    let mut assignments = vec![0usize; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    let assign = |centroids: &[Vec<f64>], assignments: &mut [usize]| -> (f64, Vec<f64>) {
        let norms: Vec<f64> = centroids.iter().map(|c| norm2(c)).collect();
        let mut wcss = 0.0;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (j, d) = nearest(p, centroids, &norms);
            *a = j;
            wcss += d;
        }
        (wcss, norms)
    };

    while iterations < config.max_iter {
        let (wcss, _) = assign(&centroids, &mut assignments);
        history.push(wcss);
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut sizes = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            p.add_to(&mut sums[a]);
            sizes[a] += 1;
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&sizes)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|x| x / n as f64).collect()
                }
            })
            .collect();
        if sizes.contains(&0) {
            let norms: Vec<f64> = next.iter().map(|c| norm2(c)).collect();
            let mut dist: Vec<f64> = points
                .iter()
                .zip(&assignments)
                .map(|(p, &a)| p.sq_dist(&next[a], norms[a]))
                .collect();
            for j in (0..k).filter(|&j| sizes[j] == 0) {
                let far = (0..points.len())
                    .fold(0, |best, i| if dist[i] > dist[best] { i } else { best });
                next[j] = points[far].to_dense(dim);
                dist[far] = 0.0;
                assignments[far] = j;
            }
        }
        let shift = centroids
            .iter()
            .zip(&next)
            .map(|(a, b)| a.as_slice().sq_dist(b, 0.0).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < config.tol {
            converged = true;
            break;
        }
    }
    let (wcss, _) = assign(&centroids, &mut assignments);
    history.push(wcss);
    Ok(KMeansFit {
        centroids,
        assignments,
        wcss_history: history,
        iterations,
        converged,
    })
}
