//! Greedy dispersion (farthest-point traversal) over instance features.

use super::{GenerateError, InstanceFeatures};

pub const FEATURE_NAMES: [&str; 6] = [
    "n_robots",
    "density",
    "n_clusters",
    "n_clustered_robots",
    "volume",
    "free_area",
];

pub fn feature_vector(f: &InstanceFeatures) -> [f64; 6] {
    [
        f.n_robots as f64,
        f.density,
        f.n_clusters as f64,
        f.n_clustered_robots as f64,
        f.volume as f64,
        f.free_area as f64,
    ]
}

/// [`select_diverse_weighted`] with unit weights.
pub fn select_diverse(candidates: &[InstanceFeatures], k: usize) -> Result<Vec<usize>, GenerateError> {
    select_diverse_weighted(candidates, k, &[1.0; 6])
}

/// Picks `k` candidate indices in selection order.
///
/// Features are min-max normalized per dimension (constant dimensions
/// dropped) and scaled by `weights`; distance is Euclidean. The first pick
/// is the candidate with the most robots, every further pick maximizes the
/// minimum distance to the picks so far. Ties go to the lowest index.
pub fn select_diverse_weighted(
    candidates: &[InstanceFeatures],
    k: usize,
    weights: &[f64; 6],
) -> Result<Vec<usize>, GenerateError> {
    if candidates.is_empty() {
        return Err(GenerateError::NoCandidates);
    }
    if k > candidates.len() {
        return Err(GenerateError::SelectTooMany {
            k,
            available: candidates.len(),
        });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let points = normalize(candidates, weights);

    let first = candidates
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.n_robots.cmp(&b.n_robots).then(j.cmp(i)))
        .map(|(i, _)| i)
        .unwrap();
    let mut selected = Vec::with_capacity(k);
    let mut chosen = vec![false; candidates.len()];
    let mut nearest = vec![f64::INFINITY; candidates.len()];
    let mut current = first;
    loop {
        selected.push(current);
        chosen[current] = true;
        if selected.len() == k {
            break;
        }
        for (i, p) in points.iter().enumerate() {
            let d = distance(p, &points[current]);
            if d < nearest[i] {
                nearest[i] = d;
            }
        }
        let mut next = None;
        let mut best = f64::NEG_INFINITY;
        for (i, &d) in nearest.iter().enumerate() {
            if !chosen[i] && d > best {
                best = d;
                next = Some(i);
            }
        }
        current = next.expect("k <= candidates");
    }
    Ok(selected)
}

fn normalize(candidates: &[InstanceFeatures], weights: &[f64; 6]) -> Vec<Vec<f64>> {
    let raw: Vec<[f64; 6]> = candidates.iter().map(feature_vector).collect();
    let mut lo = [f64::INFINITY; 6];
    let mut hi = [f64::NEG_INFINITY; 6];
    for v in &raw {
        for d in 0..6 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let dims: Vec<usize> = (0..6).filter(|&d| hi[d] > lo[d]).collect();
    raw.iter()
        .map(|v| {
            dims.iter()
                .map(|&d| weights[d] * (v[d] - lo[d]) / (hi[d] - lo[d]))
                .collect()
        })
        .collect()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Normalized points as used by the selection, for diagnostics and tests.
pub fn normalized_points(candidates: &[InstanceFeatures]) -> Vec<Vec<f64>> {
    normalize(candidates, &[1.0; 6])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(n: u32, density: f64) -> InstanceFeatures {
        InstanceFeatures {
            n_robots: n,
            density,
            n_clusters: 0,
            n_clustered_robots: 0,
            volume: 100,
            free_area: 100,
            external: false,
        }
    }

    #[test]
    fn all_when_k_equals_len() {
        let c: Vec<_> = (0..5).map(|i| feat(i, 0.1 * i as f64)).collect();
        let mut s = select_diverse(&c, 5).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn collinear_extremes() {
        // a (most robots), b and c on a line.
        let c = vec![feat(30, 0.3), feat(20, 0.2), feat(10, 0.1)];
        assert_eq!(select_diverse(&c, 2).unwrap(), vec![0, 2]);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let c = vec![feat(5, 0.5), feat(5, 0.5), feat(5, 0.5)];
        assert_eq!(select_diverse(&c, 3).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn errors() {
        assert!(matches!(select_diverse(&[], 0), Err(GenerateError::NoCandidates)));
        assert!(matches!(
            select_diverse(&[feat(1, 0.1)], 2),
            Err(GenerateError::SelectTooMany { k: 2, available: 1 })
        ));
        assert!(select_diverse(&[feat(1, 0.1)], 0).unwrap().is_empty());
    }
}
