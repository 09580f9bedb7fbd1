//! Planar geometry and nearest-neighbor graph construction.
//!
//! A [`MarkedPointSet`] holds 2-D locations with class labels and an
//! observation window. [`build_nn_graph`] assigns every point its (unique)
//! Euclidean nearest neighbor and derives the NN-structure scalars `Q`
//! (ordered pairs of points sharing a nearest neighbor) and `R` (twice the
//! number of reflexive pairs), which drive the contingency-table moments.
//!
//! Equidistant neighbors are resolved deterministically in favor of the
//! lowest point index, so results are reproducible across platforms even for
//! degenerate inputs such as duplicated coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Squared Euclidean distance to `other`.
    pub fn dist_sq(&self, other: &Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        self.dist_sq(other).sqrt()
    }
}

/// Axis-aligned rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectWindow {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl RectWindow {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin)
            || !xmin.is_finite()
            || !xmax.is_finite()
            || !ymin.is_finite()
            || !ymax.is_finite()
        {
            return Err(Error::InvalidWindow {
                xmin,
                xmax,
                ymin,
                ymax,
            });
        }
        Ok(Self {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    /// The unit square `(0,1) x (0,1)`.
    pub fn unit_square() -> Self {
        Self {
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn shorter_side(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn contains(&self, p: &Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    /// Smallest window containing all points.
    pub fn bounding_box(points: &[Point2]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::TooFewPoints {
                required: 1,
                got: 0,
            });
        }
        let mut xmin = f64::INFINITY;
        let mut xmax = f64::NEG_INFINITY;
        let mut ymin = f64::INFINITY;
        let mut ymax = f64::NEG_INFINITY;
        for p in points {
            xmin = xmin.min(p.x);
            xmax = xmax.max(p.x);
            ymin = ymin.min(p.y);
            ymax = ymax.max(p.y);
        }
        // Degenerate (collinear) data still needs a usable window.
        if xmax <= xmin {
            xmax = xmin + 1.0;
        }
        if ymax <= ymin {
            ymax = ymin + 1.0;
        }
        RectWindow::new(xmin, xmax, ymin, ymax)
    }
}

/// A marked point pattern: locations, class labels, and a window.
///
/// Class labels are integers in `0..num_classes`. Points are not required to
/// lie inside the window (offspring of association alternatives may fall
/// outside); the window matters only for windowed operations such as
/// second-order estimators and CSR simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPointSet {
    points: Vec<Point2>,
    labels: Vec<usize>,
    window: RectWindow,
    class_sizes: Vec<usize>,
}

impl MarkedPointSet {
    /// Builds a pattern with `num_classes` inferred as `max(label) + 1`
    /// (at least 2).
    pub fn new(points: Vec<Point2>, labels: Vec<usize>, window: RectWindow) -> Result<Self> {
        let q = labels.iter().copied().max().map_or(0, |m| m + 1).max(2);
        Self::with_classes(points, labels, q, window)
    }

    /// Builds a pattern with an explicit class count, allowing empty classes.
    pub fn with_classes(
        points: Vec<Point2>,
        labels: Vec<usize>,
        num_classes: usize,
        window: RectWindow,
    ) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: labels.len(),
                context: "points vs labels",
            });
        }
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                required: 2,
                got: points.len(),
            });
        }
        if num_classes < 2 {
            return Err(Error::TooFewClasses { got: num_classes });
        }
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::NonFinitePoint { index: i });
            }
        }
        let mut class_sizes = vec![0usize; num_classes];
        for &l in &labels {
            if l >= num_classes {
                return Err(Error::ClassOutOfRange {
                    label: l,
                    num_classes,
                });
            }
            class_sizes[l] += 1;
        }
        Ok(Self {
            points,
            labels,
            window,
            class_sizes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn window(&self) -> &RectWindow {
        &self.window
    }

    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    /// Locations of one class.
    pub fn class_points(&self, class: usize) -> Vec<Point2> {
        self.points
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == class)
            .map(|(p, _)| *p)
            .collect()
    }

    /// Returns a copy with the given label vector (lengths must match).
    /// Locations are untouched, so the NN graph of the copy is unchanged.
    pub fn relabeled(&self, labels: Vec<usize>) -> Result<Self> {
        Self::with_classes(
            self.points.clone(),
            labels,
            self.class_sizes.len(),
            self.window,
        )
    }
}

/// Nearest-neighbor graph of a point set: each point's NN index and distance,
/// in-degrees, and the derived scalars `Q` and `R`.
#[derive(Debug, Clone, PartialEq)]
pub struct NnGraph {
    /// `nn_index[i]` is the index of the nearest neighbor of point `i`.
    pub nn_index: Vec<usize>,
    /// `nn_dist[i]` is the distance from point `i` to its nearest neighbor.
    pub nn_dist: Vec<f64>,
    /// `indeg[i]` counts how many points have `i` as their nearest neighbor.
    pub indeg: Vec<usize>,
    /// Number of ordered pairs of distinct points that share a nearest
    /// neighbor: `sum_p indeg(p) * (indeg(p) - 1)`.
    pub q: u64,
    /// Twice the number of reflexive (mutual-NN) pairs.
    pub r: u64,
    /// `indegree_histogram[k]` is the number of points serving as NN to
    /// exactly `k` other points (`Q_k`); open-ended in `k`.
    pub indegree_histogram: Vec<usize>,
}

impl NnGraph {
    pub fn len(&self) -> usize {
        self.nn_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nn_index.is_empty()
    }

    /// Mean nearest-neighbor distance.
    pub fn mean_nn_distance(&self) -> f64 {
        self.nn_dist.iter().sum::<f64>() / self.nn_dist.len() as f64
    }
}

fn graph_from_nn(points: &[Point2], nn_index: Vec<usize>) -> NnGraph {
    let n = points.len();
    let nn_dist: Vec<f64> = (0..n).map(|i| points[i].dist(&points[nn_index[i]])).collect();
    let mut indeg = vec![0usize; n];
    for &t in &nn_index {
        indeg[t] += 1;
    }
    let q: u64 = indeg.iter().map(|&d| (d as u64) * (d as u64).saturating_sub(1)).sum();
    let r: u64 = (0..n).filter(|&i| nn_index[nn_index[i]] == i).count() as u64;
    let max_deg = indeg.iter().copied().max().unwrap_or(0);
    let mut indegree_histogram = vec![0usize; max_deg + 1];
    for &d in &indeg {
        indegree_histogram[d] += 1;
    }
    // Cross-check the in-degree route against the histogram route
    // 2*(C(2,2)-style) expansion: sum_k k(k-1) Q_k.
    let q_hist: u64 = indegree_histogram
        .iter()
        .enumerate()
        .map(|(k, &cnt)| (k as u64) * (k as u64).saturating_sub(1) * cnt as u64)
        .sum();
    debug_assert_eq!(q, q_hist);
    NnGraph {
        nn_index,
        nn_dist,
        indeg,
        q,
        r,
        indegree_histogram,
    }
}

/// Nearest neighbor of point `i` by exhaustive scan, lowest index winning
/// ties. Returns `(index, squared distance)`.
fn nn_scan(points: &[Point2], i: usize) -> (usize, f64) {
    let mut best = usize::MAX;
    let mut best_d2 = f64::INFINITY;
    for (j, p) in points.iter().enumerate() {
        if j == i {
            continue;
        }
        let d2 = points[i].dist_sq(p);
        if d2 < best_d2 || (d2 == best_d2 && j < best) {
            best_d2 = d2;
            best = j;
        }
    }
    (best, best_d2)
}

/// Brute-force `O(n^2)` NN graph. Reference implementation used as the
/// oracle for the grid-accelerated path; both apply the same
/// lowest-index tie-break.
pub fn build_nn_graph_naive(pts: &MarkedPointSet) -> NnGraph {
    let points = pts.points();
    let nn_index = (0..points.len()).map(|i| nn_scan(points, i).0).collect();
    graph_from_nn(points, nn_index)
}

/// Uniform grid over the bounding box of the points, used to prune NN
/// candidates. Worst case degenerates to the full scan but stays exact.
struct Grid {
    cells: Vec<Vec<u32>>,
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    inv_cell: f64,
    cell: f64,
}

impl Grid {
    fn build(points: &[Point2]) -> Self {
        let n = points.len();
        let bb = RectWindow::bounding_box(points).expect("non-empty");
        // Aim for about one point per cell.
        let target = (n as f64).sqrt().ceil().max(1.0);
        let span = bb.width().max(bb.height());
        let cell = (span / target).max(f64::MIN_POSITIVE);
        let nx = ((bb.width() / cell).ceil() as usize + 1).max(1);
        let ny = ((bb.height() / cell).ceil() as usize + 1).max(1);
        let mut cells = vec![Vec::new(); nx * ny];
        let inv_cell = 1.0 / cell;
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x - bb.xmin) * inv_cell) as usize).min(nx - 1);
            let cy = (((p.y - bb.ymin) * inv_cell) as usize).min(ny - 1);
            cells[cy * nx + cx].push(i as u32);
        }
        Self {
            cells,
            nx,
            ny,
            x0: bb.xmin,
            y0: bb.ymin,
            inv_cell,
            cell,
        }
    }

    /// Nearest neighbor of point `i`, scanning grid cells in expanding
    /// square rings until no closer candidate can exist.
    fn nn(&self, points: &[Point2], i: usize) -> usize {
        let p = points[i];
        let cx = (((p.x - self.x0) * self.inv_cell) as usize).min(self.nx - 1) as isize;
        let cy = (((p.y - self.y0) * self.inv_cell) as usize).min(self.ny - 1) as isize;
        let mut best = usize::MAX;
        let mut best_d2 = f64::INFINITY;
        let max_ring = self.nx.max(self.ny) as isize;
        for ring in 0..=max_ring {
            // Once a neighbor is known, stop when every cell of this ring is
            // farther than the current best.
            if best != usize::MAX {
                let ring_min = (ring - 1) as f64 * self.cell;
                if ring >= 1 && ring_min * ring_min > best_d2 {
                    break;
                }
            }
            let (lo_x, hi_x) = (cx - ring, cx + ring);
            let (lo_y, hi_y) = (cy - ring, cy + ring);
            for gy in lo_y..=hi_y {
                if gy < 0 || gy >= self.ny as isize {
                    continue;
                }
                for gx in lo_x..=hi_x {
                    // Ring boundary only (interior already visited).
                    if ring > 0 && gx != lo_x && gx != hi_x && gy != lo_y && gy != hi_y {
                        continue;
                    }
                    if gx < 0 || gx >= self.nx as isize {
                        continue;
                    }
                    for &jj in &self.cells[gy as usize * self.nx + gx as usize] {
                        let j = jj as usize;
                        if j == i {
                            continue;
                        }
                        let d2 = p.dist_sq(&points[j]);
                        if d2 < best_d2 || (d2 == best_d2 && j < best) {
                            best_d2 = d2;
                            best = j;
                        }
                    }
                }
            }
        }
        best
    }
}

/// Builds the nearest-neighbor graph of a marked point set.
///
/// Every point is assigned exactly one NN under Euclidean distance, with
/// equidistant candidates resolved to the lowest index. `Q` is computed both
/// from in-degrees and from the in-degree histogram (the two must agree);
/// `R` is twice the number of mutual-NN pairs.
pub fn build_nn_graph(pts: &MarkedPointSet) -> NnGraph {
    let points = pts.points();
    let n = points.len();
    if n <= 64 {
        return build_nn_graph_naive(pts);
    }
    let grid = Grid::build(points);
    let nn_index: Vec<usize> = (0..n).map(|i| grid.nn(points, i)).collect();
    graph_from_nn(points, nn_index)
}

/// Nearest neighbor of a single point: `(index, distance)`, same tie-break
/// as [`build_nn_graph`].
pub fn pairwise_nn_query(pts: &MarkedPointSet, i: usize) -> Result<(usize, f64)> {
    if i >= pts.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: pts.len(),
        });
    }
    let (j, d2) = nn_scan(pts.points(), i);
    Ok((j, d2.sqrt()))
}
