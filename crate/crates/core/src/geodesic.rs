//! Approximate distances `d_lambda(a, b)` by shortest paths on a grid graph.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::density::Density;
use crate::domain::Rect;
use crate::error::{MetricError, Result};
use crate::path::{path_length, PathPolyline};

/// Largest number of graph nodes a single search may allocate.
pub const MAX_GRAPH_NODES: usize = 40_000_000;

/// Result of a grid shortest-path search.
#[derive(Debug, Clone)]
pub struct GeodesicResult {
    /// `lambda`-length of the smoothed polyline: an upper bound for the distance.
    pub distance: f64,
    /// Length of the raw graph path with midpoint edge weights.
    pub graph_length: f64,
    /// The smoothed polyline from `a` to `b`.
    pub path: PathPolyline,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    cost: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

const NEIGHBORS: [(i64, i64); 8] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

/// Upper approximation of the distance between `a` and `b`; see [`geodesic_path`].
pub fn geodesic_distance(d: &Density, a: Complex64, b: Complex64, resolution: f64) -> Result<f64> {
    Ok(geodesic_path(d, a, b, resolution)?.distance)
}

/// Shortest path on the 8-connected grid of the given spacing (edge weight
/// `lambda(midpoint) * |edge|`), followed by one straightening pass that
/// replaces runs of vertices by a chord whenever the chord is no longer.
///
/// The grid has `a` as a node; `b` is joined to its nearest node by a straight
/// connector. The search covers the domain's bounding box, or for unbounded
/// domains a box around `a` and `b`.
pub fn geodesic_path(d: &Density, a: Complex64, b: Complex64, resolution: f64) -> Result<GeodesicResult> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(MetricError::InvalidParameters(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    for z in [a, b] {
        if !d.domain().contains(z) {
            return Err(MetricError::PointOutsideDomain(z));
        }
    }
    if a == b {
        return Ok(GeodesicResult {
            distance: 0.0,
            graph_length: 0.0,
            path: PathPolyline::new(vec![a, a + resolution])
                .expect("distinct vertices"),
        });
    }
    let bbox = d.domain().bounding_box().unwrap_or_else(|| {
        let half = 2.0 * (a - b).norm() + 1.0;
        Rect::around(0.5 * (a + b), half)
    });
    let h = resolution;
    // node (i, j) sits at a + h (i - ia, j - ja)
    let ia = ((a.re - bbox.x_min) / h).ceil().max(0.0) as i64;
    let ja = ((a.im - bbox.y_min) / h).ceil().max(0.0) as i64;
    let nx = ia + ((bbox.x_max - a.re) / h).ceil().max(0.0) as i64 + 1;
    let ny = ja + ((bbox.y_max - a.im) / h).ceil().max(0.0) as i64 + 1;
    let n_nodes = (nx * ny) as usize;
    if n_nodes > MAX_GRAPH_NODES {
        return Err(MetricError::InvalidParameters(format!(
            "resolution {h} needs {n_nodes} graph nodes"
        )));
    }
    let node_point = |k: usize| -> Complex64 {
        let i = (k as i64 % nx) - ia;
        let j = (k as i64 / nx) - ja;
        a + Complex64::new(i as f64 * h, j as f64 * h)
    };
    let start = (ja * nx + ia) as usize;
    let bi = (ia as f64 + ((b.re - a.re) / h).round()).clamp(0.0, (nx - 1) as f64) as i64;
    let bj = (ja as f64 + ((b.im - a.im) / h).round()).clamp(0.0, (ny - 1) as f64) as i64;
    let target = (bj * nx + bi) as usize;
    let target_point = node_point(target);
    if !d.domain().contains(target_point) {
        return Err(MetricError::PointsNotConnected(h));
    }

    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut prev = vec![usize::MAX; n_nodes];
    let mut heap = BinaryHeap::new();
    dist[start] = 0.0;
    heap.push(Entry { cost: 0.0, node: start });
    while let Some(Entry { cost, node }) = heap.pop() {
        if node == target {
            break;
        }
        if cost > dist[node] {
            continue;
        }
        let z = node_point(node);
        let (i, j) = (node as i64 % nx, node as i64 / nx);
        for (di, dj) in NEIGHBORS {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= nx || nj >= ny {
                continue;
            }
            let next = (nj * nx + ni) as usize;
            let w = node_point(next);
            if !d.domain().contains(w) {
                continue;
            }
            let Ok(lambda) = d.eval(0.5 * (z + w)) else {
                continue;
            };
            let candidate = cost + lambda * (w - z).norm();
            if candidate < dist[next] {
                dist[next] = candidate;
                prev[next] = node;
                heap.push(Entry {
                    cost: candidate,
                    node: next,
                });
            }
        }
    }
    if !dist[target].is_finite() {
        return Err(MetricError::PointsNotConnected(h));
    }

    let mut vertices = vec![];
    let mut k = target;
    while k != usize::MAX {
        vertices.push(node_point(k));
        k = prev[k];
    }
    vertices.reverse();
    vertices[0] = a;
    let mut graph_length = dist[target];
    if target_point != b {
        let connector = PathPolyline::segment(target_point, b)?;
        graph_length += path_length(d, &connector)?;
        vertices.push(b);
    }
    if vertices.len() < 2 {
        vertices.push(b);
    }
    let raw = PathPolyline::new(vertices)?;
    let path = straighten(d, &raw)?;
    let distance = path_length(d, &path)?;
    Ok(GeodesicResult {
        distance,
        graph_length,
        path,
    })
}

/// One pass of chord shortcuts: from each anchor, extend the chord forward as
/// long as it stays inside the domain and is no longer than the polyline it
/// replaces.
fn straighten(d: &Density, p: &PathPolyline) -> Result<PathPolyline> {
    let v = p.vertices();
    let mut prefix = Vec::with_capacity(v.len());
    prefix.push(0.0);
    for pair in v.windows(2) {
        let l = path_length(d, &PathPolyline::segment(pair[0], pair[1])?)?;
        prefix.push(prefix[prefix.len() - 1] + l);
    }
    let mut out = vec![v[0]];
    let mut anchor = 0;
    while anchor < v.len() - 1 {
        let mut best = anchor + 1;
        let mut j = anchor + 2;
        while j < v.len() {
            let chord = match PathPolyline::segment(v[anchor], v[j]).and_then(|s| path_length(d, &s)) {
                Ok(l) => l,
                Err(_) => break,
            };
            if chord <= prefix[j] - prefix[anchor] {
                best = j;
                j += 1;
            } else {
                break;
            }
        }
        out.push(v[best]);
        anchor = best;
    }
    PathPolyline::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::hyperbolic_disk;
    use crate::domain::DomainSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euclidean_distance_in_convex_domain() {
        let flat = Density::constant(DomainSpec::unit_disk(), 1.0);
        let (a, b) = (c(-0.3, 0.1), c(0.4, -0.35));
        let dist = geodesic_distance(&flat, a, b, 1.0 / 200.0).unwrap();
        assert!((dist - (a - b).norm()).abs() < 2e-3);
    }

    #[test]
    fn radial_disk_distance() {
        let dist = geodesic_distance(&hyperbolic_disk(), c(0.0, 0.0), c(0.5, 0.0), 1.0 / 100.0).unwrap();
        assert!((dist - 3f64.ln()).abs() < 2e-3);
    }

    #[test]
    fn disconnected_points_are_reported() {
        let annulus = Density::constant(
            DomainSpec::Annulus {
                center: c(0.0, 0.0),
                inner: 0.5,
                outer: 0.52,
            },
            1.0,
        );
        let err = geodesic_distance(&annulus, c(0.51, 0.0), c(-0.51, 0.0), 0.1).unwrap_err();
        assert_eq!(err, MetricError::PointsNotConnected(0.1));
    }
}
