//! Lloyd's algorithm with k-means++ seeding.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the final partition.
    pub wcss: f64,
    /// WCSS after each iteration; non-increasing.
    pub history: Vec<f64>,
    pub iterations: usize,
}

fn d2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid, lowest index on ties.
fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = d2(p, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| d2(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(i);
                    if u < d {
                        break;
                    }
                    u -= d;
                }
            }
            pick.unwrap()
        } else {
            // Remaining points coincide with centroids: take any unchosen one.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            dist[i] = dist[i].min(d2(p, &points[pick]));
        }
    }
    centroids
}

/// Clusters `points` into `k` groups. Deterministic for a given `rng` state.
/// An empty cluster is re-seeded with the point farthest from its centroid.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R, max_iters: usize) -> Result<KMeans> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(Error::param(format!("k = {k} must be between 1 and the {n} points")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::param("points differ in dimension"));
    }
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        iterations += 1;
        // update step, with empty-cluster repair
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[assignments[i]] > 1)
                    .max_by(|&a, &b| {
                        d2(&points[a], &centroids[assignments[a]])
                            .total_cmp(&d2(&points[b], &centroids[assignments[b]]))
                            .then(b.cmp(&a))
                    })
                    .expect("k <= n leaves a cluster with two points");
                counts[assignments[far]] -= 1;
                assignments[far] = c;
                counts[c] = 1;
                centroids[c] = points[far].clone();
            }
        }
        let wcss: f64 = points.iter().zip(&assignments).map(|(p, &a)| d2(p, &centroids[a])).sum();
        history.push(wcss);
        // assignment step
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    let wcss = points.iter().zip(&assignments).map(|(p, &a)| d2(p, &centroids[a])).sum();
    Ok(KMeans {
        assignments,
        centroids,
        wcss,
        history,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn k_equals_n_is_exact() {
        let pts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans(&pts, 7, &mut seeded(3), 50).unwrap();
        assert_eq!(r.wcss, 0.0);
        let mut a = r.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 7);
    }

    #[test]
    fn separated_blobs_recovered() {
        let mut rng = seeded(11);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let pts: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let c = if i < 50 { -10.0 } else { 10.0 };
                vec![c + noise.sample(&mut rng), noise.sample(&mut rng)]
            })
            .collect();
        let r = kmeans(&pts, 2, &mut seeded(5), 100).unwrap();
        let first = r.assignments[0];
        assert!(r.assignments[..50].iter().all(|&a| a == first));
        assert!(r.assignments[50..].iter().all(|&a| a != first));
    }

    #[test]
    fn wcss_never_increases() {
        let mut rng = seeded(2);
        let pts: Vec<Vec<f64>> = (0..300).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
        let r = kmeans(&pts, 10, &mut seeded(9), 100).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{:?}", r.history);
        }
        assert!((r.wcss - r.history.last().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn duplicates_and_errors() {
        let pts = vec![vec![1.0]; 5];
        let r = kmeans(&pts, 3, &mut seeded(1), 10).unwrap();
        assert_eq!(r.wcss, 0.0);
        assert!(kmeans(&pts, 6, &mut seeded(1), 10).is_err());
        assert!(kmeans(&pts, 0, &mut seeded(1), 10).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = seeded(4);
        let pts: Vec<Vec<f64>> = (0..80).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
        let a = kmeans(&pts, 5, &mut seeded(8), 100).unwrap();
        let b = kmeans(&pts, 5, &mut seeded(8), 100).unwrap();
        assert_eq!(a, b);
    }
}
