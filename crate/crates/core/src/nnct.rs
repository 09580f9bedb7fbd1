//! Nearest-neighbor contingency tables.
//!
//! Cell `(i, j)` of an NNCT counts the points of class `i` whose nearest
//! neighbor belongs to class `j`. Row sums equal the (fixed) class sizes;
//! column sums count how often each class serves as a nearest neighbor and
//! are random under relabeling.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geom::{MarkedPointSet, NnGraph};

/// A `q x q` nearest-neighbor contingency table.
#[derive(Debug, Clone, PartialEq)]
pub struct Nnct {
    counts: Vec<u64>,
    num_classes: usize,
}

impl Nnct {
    /// Builds a table directly from cell counts (row-major `q x q`).
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let q = counts.len();
        if q < 2 {
            return Err(Error::TooFewClasses { got: q });
        }
        let mut flat = Vec::with_capacity(q * q);
        for row in &counts {
            if row.len() != q {
                return Err(Error::LengthMismatch {
                    left: row.len(),
                    right: q,
                    context: "NNCT row length vs class count",
                });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            counts: flat,
            num_classes: q,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn count(&self, base: usize, nn: usize) -> u64 {
        self.counts[base * self.num_classes + nn]
    }

    /// Row sums: the class sizes `n_i`.
    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.num_classes)
            .map(|i| (0..self.num_classes).map(|j| self.count(i, j)).sum())
            .collect()
    }

    /// Column sums: how often each class serves as a nearest neighbor.
    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.num_classes)
            .map(|j| (0..self.num_classes).map(|i| self.count(i, j)).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Cell counts as a dense matrix of `f64`.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_classes, self.num_classes, |i, j| {
            self.count(i, j) as f64
        })
    }
}

/// Assembles the NNCT of a marked point set from its NN graph.
pub fn build_nnct(pts: &MarkedPointSet, graph: &NnGraph) -> Result<Nnct> {
    if graph.len() != pts.len() {
        return Err(Error::LengthMismatch {
            left: graph.len(),
            right: pts.len(),
            context: "graph vs point set",
        });
    }
    build_nnct_from_labels(pts.labels(), &graph.nn_index, pts.num_classes())
}

/// Assembles an NNCT directly from labels and NN indices. The hot path of
/// randomization inference, where the NN graph is fixed and only labels
/// change.
pub fn build_nnct_from_labels(
    labels: &[usize],
    nn_index: &[usize],
    num_classes: usize,
) -> Result<Nnct> {
    if labels.len() != nn_index.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: nn_index.len(),
            context: "labels vs NN indices",
        });
    }
    if num_classes < 2 {
        return Err(Error::TooFewClasses { got: num_classes });
    }
    let q = num_classes;
    let mut counts = vec![0u64; q * q];
    for (p, &nn) in nn_index.iter().enumerate() {
        counts[labels[p] * q + labels[nn]] += 1;
    }
    Ok(Nnct {
        counts,
        num_classes: q,
    })
}

/// Expected NNCT cell counts under random labeling:
/// `n_i (n_i - 1) / (n - 1)` on the diagonal, `n_i n_j / (n - 1)` off it.
/// Row `i` sums to `n_i` exactly.
pub fn expected_counts(class_sizes: &[usize], n: usize) -> Result<DMatrix<f64>> {
    let total: usize = class_sizes.iter().sum();
    if total != n {
        return Err(Error::LengthMismatch {
            left: total,
            right: n,
            context: "sum of class sizes vs n",
        });
    }
    if n < 2 {
        return Err(Error::TooFewPoints {
            required: 2,
            got: n,
        });
    }
    let q = class_sizes.len();
    let denom = (n - 1) as f64;
    Ok(DMatrix::from_fn(q, q, |i, j| {
        let ni = class_sizes[i] as f64;
        if i == j {
            ni * (ni - 1.0) / denom
        } else {
            ni * class_sizes[j] as f64 / denom
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_nn_graph, Point2, RectWindow};

    fn mps(points: Vec<(f64, f64)>, labels: Vec<usize>) -> MarkedPointSet {
        let pts = points.into_iter().map(|(x, y)| Point2::new(x, y)).collect();
        MarkedPointSet::new(pts, labels, RectWindow::unit_square()).unwrap()
    }

    #[test]
    fn mutual_pair_cross_labels() {
        let p = mps(vec![(0.0, 0.0), (1.0, 0.0)], vec![0, 1]);
        let g = build_nn_graph(&p);
        let t = build_nnct(&p, &g).unwrap();
        assert_eq!(t.count(0, 0), 0);
        assert_eq!(t.count(0, 1), 1);
        assert_eq!(t.count(1, 0), 1);
        assert_eq!(t.count(1, 1), 0);
    }

    #[test]
    fn collinear_trace() {
        let p = mps(vec![(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)], vec![0, 0, 1]);
        let g = build_nn_graph(&p);
        let t = build_nnct(&p, &g).unwrap();
        assert_eq!(t.count(0, 0), 2);
        assert_eq!(t.count(0, 1), 0);
        assert_eq!(t.count(1, 0), 1);
        assert_eq!(t.count(1, 1), 0);
        assert_eq!(t.row_sums(), vec![2, 1]);
        assert_eq!(t.col_sums(), vec![3, 0]);
    }

    #[test]
    fn single_class_concentrates_on_diagonal() {
        let p = MarkedPointSet::with_classes(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(0.1, 0.0),
                Point2::new(0.5, 0.5),
            ],
            vec![0, 0, 0],
            2,
            RectWindow::unit_square(),
        )
        .unwrap();
        let g = build_nn_graph(&p);
        let t = build_nnct(&p, &g).unwrap();
        assert_eq!(t.count(0, 0), 3);
        assert_eq!(t.total(), 3);
    }

    #[test]
    fn expected_counts_examples() {
        let e = expected_counts(&[10, 10], 20).unwrap();
        assert!((e[(0, 0)] - 90.0 / 19.0).abs() < 1e-12);
        assert!((e[(0, 1)] - 100.0 / 19.0).abs() < 1e-12);

        let e = expected_counts(&[215, 205, 156, 98, 60], 734).unwrap();
        assert!((e[(0, 0)] - 215.0 * 214.0 / 733.0).abs() < 1e-9);

        // empty class: zero row and column
        let e = expected_counts(&[5, 0], 5).unwrap();
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(e[(1, 0)], 0.0);
        assert_eq!(e[(1, 1)], 0.0);

        assert!(expected_counts(&[1, 0], 1).is_err());
        assert!(expected_counts(&[2, 2], 5).is_err());
    }

    #[test]
    fn expected_rows_sum_to_class_sizes() {
        let sizes = [7usize, 3, 12, 1];
        let e = expected_counts(&sizes, 23).unwrap();
        for (i, &ni) in sizes.iter().enumerate() {
            let row: f64 = (0..4).map(|j| e[(i, j)]).sum();
            assert!((row - ni as f64).abs() < 1e-12);
        }
    }
}
