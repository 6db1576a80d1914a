use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GeoPoint;
use crate::rng::{stream, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iterations: usize,
    /// Convergence threshold on the largest centroid shift, in degrees.
    pub tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iterations: 300,
            tolerance: 1e-6,
        }
    }
}

/// One k-means cluster: its centroid and the indices of its member sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiteCluster {
    pub centroid: GeoPoint,
    pub members: Vec<usize>,
}

/// Partitions `sites` into `k` non-empty clusters with Lloyd's algorithm and
/// k-means++ seeding. Deterministic for a given seed.
pub fn cluster_cells(sites: &[GeoPoint], k: usize, seed: u64) -> Result<Vec<SiteCluster>> {
    cluster_cells_with(sites, k, seed, KMeansConfig::default())
}

pub fn cluster_cells_with(sites: &[GeoPoint], k: usize, seed: u64, config: KMeansConfig) -> Result<Vec<SiteCluster>> {
    if k == 0 {
        return Err(Error::Config("k-means needs k >= 1".into()));
    }
    if k > sites.len() {
        return Err(Error::Config(format!(
            "k-means with k = {k} exceeds the {} available sites",
            sites.len()
        )));
    }

    let mut rng = stream(seed, "kmeans");
    let mut centroids = plus_plus_seeds(sites, k, &mut rng);
    let mut assignment = vec![0usize; sites.len()];

    for _ in 0..config.max_iterations {
        assign(sites, &centroids, &mut assignment);
        repair_empty(sites, &centroids, &mut assignment, k);
        let updated = means(sites, &assignment, k);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| a.dist2(b).sqrt())
            .fold(0.0, f64::max);
        centroids = updated;
        if shift < config.tolerance {
            break;
        }
    }
    assign(sites, &centroids, &mut assignment);
    repair_empty(sites, &centroids, &mut assignment, k);
    let centroids = means(sites, &assignment, k);

    let mut clusters: Vec<SiteCluster> = centroids
        .into_iter()
        .map(|centroid| SiteCluster {
            centroid,
            members: Vec::new(),
        })
        .collect();
    for (site, &cluster) in assignment.iter().enumerate() {
        clusters[cluster].members.push(site);
    }
    Ok(clusters)
}

fn plus_plus_seeds(sites: &[GeoPoint], k: usize, rng: &mut SimRng) -> Vec<GeoPoint> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(sites[rng.random_range(0..sites.len())]);
    let mut nearest: Vec<f64> = sites.iter().map(|s| s.dist2(&centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = sites.len() - 1;
            for (i, d) in nearest.iter().enumerate() {
                if target < *d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            // all remaining sites coincide with a chosen centroid
            rng.random_range(0..sites.len())
        };
        let c = sites[pick];
        for (d, s) in nearest.iter_mut().zip(sites) {
            *d = d.min(s.dist2(&c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(sites: &[GeoPoint], centroids: &[GeoPoint], assignment: &mut [usize]) {
    for (site, slot) in sites.iter().zip(assignment.iter_mut()) {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (j, c) in centroids.iter().enumerate() {
            let d = site.dist2(c);
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        *slot = best;
    }
}

/// Moves the site farthest from its centroid into each empty cluster, taking
/// only from clusters with more than one member.
fn repair_empty(sites: &[GeoPoint], centroids: &[GeoPoint], assignment: &mut [usize], k: usize) {
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignment.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let donor = (0..sites.len())
            .filter(|&i| counts[assignment[i]] > 1)
            .max_by(|&a, &b| {
                let da = sites[a].dist2(&centroids[assignment[a]]);
                let db = sites[b].dist2(&centroids[assignment[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n guarantees a cluster with spare members");
        assignment[donor] = empty;
    }
}

fn means(sites: &[GeoPoint], assignment: &[usize], k: usize) -> Vec<GeoPoint> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (s, &a) in sites.iter().zip(assignment) {
        sums[a].0 += s.lat;
        sums[a].1 += s.lon;
        sums[a].2 += 1;
    }
    sums.into_iter()
        .map(|(lat, lon, n)| {
            let n = n.max(1) as f64;
            GeoPoint::new(lat / n, lon / n)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition_of(clusters: &[SiteCluster]) -> Vec<Vec<usize>> {
        let mut parts: Vec<Vec<usize>> = clusters.iter().map(|c| c.members.clone()).collect();
        parts.sort();
        parts
    }

    #[test]
    fn square_corners_become_singletons() {
        let sites = [
            GeoPoint::new(0.0, 0.0),
            GeoPoint::new(0.0, 1.0),
            GeoPoint::new(1.0, 0.0),
            GeoPoint::new(1.0, 1.0),
        ];
        let clusters = cluster_cells(&sites, 4, 3).unwrap();
        assert_eq!(partition_of(&clusters), vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn k_larger_than_sites_is_rejected() {
        let sites = [GeoPoint::new(0.0, 0.0)];
        assert!(matches!(cluster_cells(&sites, 2, 0), Err(Error::Config(_))));
        assert!(matches!(cluster_cells(&sites, 0, 0), Err(Error::Config(_))));
    }

    #[test]
    fn duplicate_sites_still_fill_every_cluster() {
        let sites = vec![GeoPoint::new(1.0, 1.0); 5];
        let clusters = cluster_cells(&sites, 3, 9).unwrap();
        assert!(clusters.iter().all(|c| !c.members.is_empty()));
        assert_eq!(clusters.iter().map(|c| c.members.len()).sum::<usize>(), 5);
    }

    #[test]
    fn same_seed_same_clusters() {
        let sites: Vec<_> = (0..200)
            .map(|i| GeoPoint::new(f64::from(i % 17) * 0.1, f64::from(i % 23) * 0.07))
            .collect();
        assert_eq!(
            cluster_cells(&sites, 7, 42).unwrap(),
            cluster_cells(&sites, 7, 42).unwrap()
        );
    }
}
