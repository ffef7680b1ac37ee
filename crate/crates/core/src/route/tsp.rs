//! Open-tour TSP over ROI centers from a fixed start.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{dist, LocalPoint};

/// Largest instance solved exactly.
pub const EXACT_LIMIT: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TourMethod {
    Exact,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TourSolution {
    /// Visit order as indices into the center list.
    pub order: Vec<usize>,
    /// Start to first center plus consecutive center distances.
    pub length: f64,
    pub method: TourMethod,
}

/// Length of the open path `start -> centers[order[0]] -> ...`.
pub fn tour_length(centers: &[LocalPoint], start: LocalPoint, order: &[usize]) -> f64 {
    let mut prev = start;
    let mut total = 0.0;
    for &i in order {
        total += dist(prev, centers[i]);
        prev = centers[i];
    }
    total
}

/// Exact for up to [`EXACT_LIMIT`] centers, nearest neighbour + 2-opt beyond.
pub fn tsp_order(centers: &[LocalPoint], start: LocalPoint) -> Result<TourSolution> {
    if centers.is_empty() {
        return Err(Error::domain("TSP needs at least one center"));
    }
    if centers.len() <= EXACT_LIMIT {
        held_karp(centers, start)
    } else {
        let nn = nearest_neighbor(centers, start)?;
        Ok(two_opt(centers, start, nn.order))
    }
}

/// Held-Karp dynamic program over subsets, O(2^n n^2).
pub fn held_karp(centers: &[LocalPoint], start: LocalPoint) -> Result<TourSolution> {
    let n = centers.len();
    if n == 0 {
        return Err(Error::domain("TSP needs at least one center"));
    }
    if n > 20 {
        return Err(Error::domain(format!("{n} centers is too many for the exact solver")));
    }
    let full = 1usize << n;
    // cost[mask * n + j]: shortest path from start covering `mask`, ending at j.
    let mut cost = vec![f64::INFINITY; full * n];
    let mut parent = vec![usize::MAX; full * n];
    for j in 0..n {
        cost[(1 << j) * n + j] = dist(start, centers[j]);
    }
    for mask in 1..full {
        for j in 0..n {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * n + j];
            if !here.is_finite() {
                continue;
            }
            for k in 0..n {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let cand = here + dist(centers[j], centers[k]);
                if cand < cost[next * n + k] {
                    cost[next * n + k] = cand;
                    parent[next * n + k] = j;
                }
            }
        }
    }
    let last_mask = full - 1;
    let mut end = 0;
    for j in 1..n {
        if cost[last_mask * n + j] < cost[last_mask * n + end] {
            end = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut j = end;
    while j != usize::MAX {
        order.push(j);
        let p = parent[mask * n + j];
        mask &= !(1 << j);
        j = p;
    }
    order.reverse();
    let length = tour_length(centers, start, &order);
    Ok(TourSolution { order, length, method: TourMethod::Exact })
}

/// Greedy construction: always go to the closest unvisited center.
pub fn nearest_neighbor(centers: &[LocalPoint], start: LocalPoint) -> Result<TourSolution> {
    if centers.is_empty() {
        return Err(Error::domain("TSP needs at least one center"));
    }
    let mut visited = vec![false; centers.len()];
    let mut order = Vec::with_capacity(centers.len());
    let mut here = start;
    for _ in 0..centers.len() {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (i, c) in centers.iter().enumerate() {
            let d = dist(here, *c);
            if !visited[i] && d < best_d {
                best = i;
                best_d = d;
            }
        }
        visited[best] = true;
        order.push(best);
        here = centers[best];
    }
    let length = tour_length(centers, start, &order);
    Ok(TourSolution { order, length, method: TourMethod::Heuristic })
}

/// Segment-reversal local search on an open path with a fixed start.
pub fn two_opt(centers: &[LocalPoint], start: LocalPoint, mut order: Vec<usize>) -> TourSolution {
    let n = order.len();
    let at = |order: &[usize], i: usize| centers[order[i]];
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            let prev = if i == 0 { start } else { at(&order, i - 1) };
            for j in i + 1..n {
                let removed = dist(prev, at(&order, i))
                    + if j + 1 < n { dist(at(&order, j), at(&order, j + 1)) } else { 0.0 };
                let added = dist(prev, at(&order, j))
                    + if j + 1 < n { dist(at(&order, i), at(&order, j + 1)) } else { 0.0 };
                if added < removed - 1e-12 {
                    order[i..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    let length = tour_length(centers, start, &order);
    TourSolution { order, length, method: TourMethod::Heuristic }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_force(centers: &[LocalPoint], start: LocalPoint) -> f64 {
        fn rec(centers: &[LocalPoint], here: LocalPoint, left: &mut Vec<usize>, acc: f64, best: &mut f64) {
            if left.is_empty() {
                *best = best.min(acc);
                return;
            }
            for k in 0..left.len() {
                let i = left.remove(k);
                rec(centers, centers[i], left, acc + dist(here, centers[i]), best);
                left.insert(k, i);
            }
        }
        let mut best = f64::INFINITY;
        rec(centers, start, &mut (0..centers.len()).collect(), 0.0, &mut best);
        best
    }

    fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Vec<LocalPoint> {
        (0..n).map(|_| LocalPoint::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0))).collect()
    }

    #[test]
    fn single_center() {
        let c = [LocalPoint::new(3.0, 4.0)];
        let t = tsp_order(&c, LocalPoint::ORIGIN).unwrap();
        assert_eq!(t.order, vec![0]);
        assert_eq!(t.length, 5.0);
        assert!(tsp_order(&[], LocalPoint::ORIGIN).is_err());
    }

    #[test]
    fn collinear_visits_in_spatial_order() {
        let c = [LocalPoint::new(30.0, 0.0), LocalPoint::new(10.0, 0.0), LocalPoint::new(20.0, 0.0)];
        let t = tsp_order(&c, LocalPoint::ORIGIN).unwrap();
        assert_eq!(t.order, vec![1, 2, 0]);
        assert!((t.length - 30.0).abs() < 1e-12);
    }

    #[test]
    fn eight_centers_match_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let c = random_instance(&mut rng, 8);
            let s = LocalPoint::new(rng.random_range(0.0..500.0), 0.0);
            let t = held_karp(&c, s).unwrap();
            assert!((t.length - brute_force(&c, s)).abs() < 1e-9);
            assert!((t.length - tour_length(&c, s, &t.order)).abs() < 1e-12);
        }
    }

    #[test]
    fn heuristic_never_worse_than_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 5, 14, 25] {
            let c = random_instance(&mut rng, n);
            let nn = nearest_neighbor(&c, LocalPoint::ORIGIN).unwrap();
            let opt = two_opt(&c, LocalPoint::ORIGIN, nn.order.clone());
            assert!(opt.length <= nn.length + 1e-9);
            let mut sorted = opt.order.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
        let big = random_instance(&mut rng, 20);
        assert_eq!(tsp_order(&big, LocalPoint::ORIGIN).unwrap().method, TourMethod::Heuristic);
    }
}
