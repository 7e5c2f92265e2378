//! Small 3D k-d tree for nearest-neighbor voxel assignment.
//!
//! Payload indices double as the tie-break: among equidistant points the
//! lowest index wins, so queries are deterministic and comparable against a
//! brute-force scan.

use crate::geometry::CartesianPoint;

#[derive(Debug, Clone, Copy)]
struct Entry {
    point: CartesianPoint,
    index: usize,
}

/// Static k-d tree over points with associated indices.
#[derive(Debug, Clone)]
pub struct KdTree {
    // Flattened median-split tree: node i splits `entries[mid]` on axis
    // depth % 3, left/right halves are contiguous subslices.
    entries: Vec<Entry>,
}

impl KdTree {
    /// Build from `points`; index i refers to `points[i]`.
    pub fn build(points: &[CartesianPoint]) -> Self {
        let mut entries: Vec<Entry> = points
            .iter()
            .enumerate()
            .map(|(index, &point)| Entry { point, index })
            .collect();
        build_recursive(&mut entries, 0);
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nearest point to `query`: (squared distance, point index).
    ///
    /// Ties on distance resolve to the lowest index. Returns `None` for an
    /// empty tree.
    pub fn nearest(&self, query: CartesianPoint) -> Option<(f64, usize)> {
        if self.entries.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        nearest_recursive(&self.entries, 0, query, &mut best);
        Some(best)
    }
}

fn axis_value(p: &CartesianPoint, axis: usize) -> f64 {
    match axis {
        0 => p.x,
        1 => p.y,
        _ => p.z,
    }
}

fn build_recursive(entries: &mut [Entry], depth: usize) {
    if entries.len() <= 1 {
        return;
    }
    let axis = depth % 3;
    let mid = entries.len() / 2;
    entries.select_nth_unstable_by(mid, |a, b| {
        axis_value(&a.point, axis)
            .total_cmp(&axis_value(&b.point, axis))
            .then(a.index.cmp(&b.index))
    });
    let (left, right) = entries.split_at_mut(mid);
    build_recursive(left, depth + 1);
    build_recursive(&mut right[1..], depth + 1);
}

fn nearest_recursive(entries: &[Entry], depth: usize, query: CartesianPoint, best: &mut (f64, usize)) {
    if entries.is_empty() {
        return;
    }
    let axis = depth % 3;
    let mid = entries.len() / 2;
    let node = &entries[mid];

    let d2 = {
        let dx = query.x - node.point.x;
        let dy = query.y - node.point.y;
        let dz = query.z - node.point.z;
        dx * dx + dy * dy + dz * dz
    };
    if d2 < best.0 || (d2 == best.0 && node.index < best.1) {
        *best = (d2, node.index);
    }

    let delta = axis_value(&query, axis) - axis_value(&node.point, axis);
    let (near, far) = if delta <= 0.0 {
        (&entries[..mid], &entries[mid + 1..])
    } else {
        (&entries[mid + 1..], &entries[..mid])
    };
    nearest_recursive(near, depth + 1, query, best);
    // Visit the far side whenever it could hold an equal-or-closer point,
    // so distance ties are still resolved by lowest index.
    if delta * delta <= best.0 {
        nearest_recursive(far, depth + 1, query, best);
    }
}
