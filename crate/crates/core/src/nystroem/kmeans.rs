use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// D² seeding: first center uniform, then each next center with
/// probability proportional to its squared distance to the chosen ones.
fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let m = points.len();
    let mut centers = vec![points[rng.random_range(0..m)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < n {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = m - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // every point coincides with a center; keep the lowest index
            0
        };
        let c = points[idx].clone();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Stops when no center moves by more than `tol` (Euclidean) or after
/// `max_iter` rounds. A cluster that loses all its points is re-seeded at the
/// point farthest from its current center.
pub fn kmeans_pp<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    n: usize,
    rng: &mut R,
    max_iter: usize,
    tol: f64,
) -> Result<KMeansResult> {
    let m = points.len();
    if n == 0 || n > m {
        return Err(Error::invalid(format!("cannot form {n} clusters from {m} points")));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("points have different dimensions"));
    }
    let mut centers = seed_plus_plus(points, n, rng);
    let mut assignments = vec![0usize; m];
    let mut dists = vec![0.0; m];
    let mut history = Vec::new();

    for _ in 0..max_iter.max(1) {
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            assignments[i] = j;
            dists[i] = d;
            inertia += d;
        }
        history.push(inertia);

        let mut sums = vec![vec![0.0; dim]; n];
        let mut counts = vec![0usize; n];
        for (p, &j) in points.iter().zip(&assignments) {
            counts[j] += 1;
            for (s, v) in sums[j].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut shift: f64 = 0.0;
        let mut taken = vec![false; m];
        for j in 0..n {
            let new_center = if counts[j] > 0 {
                sums[j].iter().map(|s| s / counts[j] as f64).collect()
            } else {
                let far = (0..m)
                    .filter(|&i| !taken[i])
                    .fold(None, |best: Option<usize>, i| match best {
                        Some(b) if dists[b] >= dists[i] => Some(b),
                        _ => Some(i),
                    })
                    .unwrap_or(0);
                taken[far] = true;
                dists[far] = 0.0;
                points[far].clone()
            };
            shift = shift.max(sq_dist(&centers[j], &new_center).sqrt());
            centers[j] = new_center;
        }
        if shift < tol {
            break;
        }
    }

    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (j, d) = nearest(p, &centers);
        assignments[i] = j;
        inertia += d;
    }
    history.push(inertia);
    Ok(KMeansResult {
        centers,
        assignments,
        inertia_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn n_equals_m_recovers_points() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans_pp(&pts, 6, &mut seeded(1, 0), 50, 1e-9).unwrap();
        let mut got = r.centers.clone();
        got.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(got, pts);
        assert_eq!(*r.inertia_history.last().unwrap(), 0.0);
    }

    #[test]
    fn separated_blobs() {
        let mut rng = seeded(2, 0);
        let sigma = 0.3;
        let mut pts = Vec::new();
        for i in 0..400 {
            let (cx, cy) = if i % 2 == 0 { (0.0, 0.0) } else { (10.0, 10.0) };
            let gx: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
            let gy: f64 = (0..12).map(|_| rng.random::<f64>()).sum::<f64>() - 6.0;
            pts.push(vec![cx + sigma * gx, cy + sigma * gy]);
        }
        let r = kmeans_pp(&pts, 2, &mut seeded(3, 0), 100, 1e-9).unwrap();
        let mut c = r.centers.clone();
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!(c[0].iter().all(|v| v.abs() < 3.0 * sigma));
        assert!(c[1].iter().all(|v| (v - 10.0).abs() < 3.0 * sigma));
    }

    #[test]
    fn inertia_is_monotone() {
        let mut rng = seeded(4, 0);
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
            .collect();
        for seed in 0..5 {
            let r = kmeans_pp(&pts, 12, &mut seeded(seed, 1), 100, 0.0).unwrap();
            for w in r.inertia_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", r.inertia_history);
            }
        }
    }

    #[test]
    fn rejects_too_many_clusters() {
        let pts = vec![vec![0.0], vec![1.0]];
        assert!(kmeans_pp(&pts, 3, &mut seeded(0, 0), 10, 0.0).is_err());
        assert!(kmeans_pp(&pts, 0, &mut seeded(0, 0), 10, 0.0).is_err());
    }

    #[test]
    fn duplicate_points_do_not_panic() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let r = kmeans_pp(&pts, 3, &mut seeded(0, 0), 10, 0.0).unwrap();
        assert_eq!(r.centers.len(), 3);
    }
}
