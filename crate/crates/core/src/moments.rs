//! First and second moments of NNCT cell counts under random labeling,
//! conditional on the NN-structure scalars `Q` and `R`.
//!
//! Every cell count is a sum over the n directed NN edges of a label
//! indicator, so its moments reduce to counting how pairs of edges overlap:
//! a pair of distinct edges either forms a reflexive pair (R of them),
//! shares a target (Q), chains head-to-tail (n - R each direction), or is
//! vertex-disjoint (n^2 - 3n - Q + R). Combining those counts with falling
//! factorial label probabilities gives closed forms for every variance and
//! covariance. The same quantities are recomputable by brute-force
//! enumeration over all labelings ([`enumerate_label_moments`]), which is
//! the oracle used to verify the closed forms, and by a linear fit of the
//! overlap-class coefficients ([`fit_moment_coefficients`]).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geom::{MarkedPointSet, NnGraph, Point2, RectWindow};
use crate::linalg::{symmetric_rank, DEFAULT_RANK_TOL};
use crate::nnct::expected_counts;

/// Probability that a fixed tuple of distinct points carries the given
/// multiset of labels under random labeling: a ratio of falling factorials.
fn label_tuple_prob(labels: &[usize], class_sizes: &[usize], n: usize) -> f64 {
    let mut used = vec![0usize; class_sizes.len()];
    let mut prob = 1.0;
    for (m, &c) in labels.iter().enumerate() {
        let available = class_sizes[c] as f64 - used[c] as f64;
        // A depleted class zeroes the whole product; bail out before the
        // denominator can also hit zero (m = n only happens then).
        if available <= 0.0 {
            return 0.0;
        }
        prob *= available / (n as f64 - m as f64);
        used[c] += 1;
    }
    prob
}

/// Raw second moment `E[N_ij N_kl]` summed over the five edge-pair overlap
/// classes.
fn raw_second_moment(
    (i, j): (usize, usize),
    (k, l): (usize, usize),
    class_sizes: &[usize],
    n: usize,
    q_shared: u64,
    r_reflexive: u64,
) -> f64 {
    let nf = n as f64;
    let q = q_shared as f64;
    let r = r_reflexive as f64;
    let mut m2 = 0.0;
    if i == k && j == l {
        m2 += nf * label_tuple_prob(&[i, j], class_sizes, n);
    }
    if i == l && j == k {
        m2 += r * label_tuple_prob(&[i, j], class_sizes, n);
    }
    if j == l {
        m2 += q * label_tuple_prob(&[i, k, j], class_sizes, n);
    }
    if i == l {
        m2 += (nf - r) * label_tuple_prob(&[k, i, j], class_sizes, n);
    }
    if j == k {
        m2 += (nf - r) * label_tuple_prob(&[i, j, l], class_sizes, n);
    }
    m2 += (nf * nf - 3.0 * nf - q + r) * label_tuple_prob(&[i, j, k, l], class_sizes, n);
    m2
}

/// Expected cell counts and the `q^2 x q^2` cell-count covariance matrix
/// under random labeling, conditional on `(Q, R)`.
///
/// The covariance matrix is indexed row-major: entry `(i*q + j, k*q + l)`
/// is `Cov[N_ij, N_kl]`.
#[derive(Debug, Clone)]
pub struct MomentModel {
    class_sizes: Vec<usize>,
    n: usize,
    q_shared: u64,
    r_reflexive: u64,
    expected: DMatrix<f64>,
    sigma: DMatrix<f64>,
}

impl MomentModel {
    pub fn num_classes(&self) -> usize {
        self.class_sizes.len()
    }

    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The shared-NN pair count `Q` the model was conditioned on.
    pub fn q_shared(&self) -> u64 {
        self.q_shared
    }

    /// The reflexive count `R` the model was conditioned on.
    pub fn r_reflexive(&self) -> u64 {
        self.r_reflexive
    }

    /// Expected cell counts (`q x q`).
    pub fn expected(&self) -> &DMatrix<f64> {
        &self.expected
    }

    /// Cell-count covariance matrix (`q^2 x q^2`, row-major cell order).
    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    /// Covariance submatrix of row `i` of the NNCT.
    pub fn row_sigma(&self, i: usize) -> DMatrix<f64> {
        let q = self.num_classes();
        DMatrix::from_fn(q, q, |a, b| self.sigma[(i * q + a, i * q + b)])
    }

    /// Covariance submatrix of column `j` of the NNCT.
    pub fn col_sigma(&self, j: usize) -> DMatrix<f64> {
        let q = self.num_classes();
        DMatrix::from_fn(q, q, |a, b| self.sigma[(a * q + j, b * q + j)])
    }

    /// Builds the model from a point set and its NN graph.
    pub fn from_graph(pts: &MarkedPointSet, graph: &NnGraph) -> Result<Self> {
        cell_moments(pts.class_sizes(), pts.len(), graph.q, graph.r)
    }
}

/// Closed-form conditional moments for the given class sizes and NN scalars.
///
/// Emits a warning when the covariance rank falls short of the expected
/// `q(q-1)` (degenerate class sizes).
pub fn cell_moments(
    class_sizes: &[usize],
    n: usize,
    q_shared: u64,
    r_reflexive: u64,
) -> Result<MomentModel> {
    let expected = expected_counts(class_sizes, n)?;
    let q = class_sizes.len();
    let mut sigma = DMatrix::zeros(q * q, q * q);
    for i in 0..q {
        for j in 0..q {
            for k in 0..q {
                for l in 0..q {
                    let row = i * q + j;
                    let col = k * q + l;
                    if col < row {
                        continue;
                    }
                    let cov = raw_second_moment((i, j), (k, l), class_sizes, n, q_shared, r_reflexive)
                        - expected[(i, j)] * expected[(k, l)];
                    sigma[(row, col)] = cov;
                    sigma[(col, row)] = cov;
                }
            }
        }
    }
    let rank = symmetric_rank(&sigma, DEFAULT_RANK_TOL)?;
    if rank < q * (q - 1) {
        log::warn!(
            "cell-count covariance rank {} below expected {} (degenerate class sizes {:?})",
            rank,
            q * (q - 1),
            class_sizes
        );
    }
    Ok(MomentModel {
        class_sizes: class_sizes.to_vec(),
        n,
        q_shared,
        r_reflexive,
        expected,
        sigma,
    })
}

/// Exact cell-count moments by enumeration over every distinct labeling of
/// the fixed NN graph: the oracle against which [`cell_moments`] is checked.
#[derive(Debug, Clone)]
pub struct EnumeratedMoments {
    pub expected: DMatrix<f64>,
    pub sigma: DMatrix<f64>,
    /// Raw second moments `E[N_ij N_kl]`, same indexing as `sigma`.
    pub raw_second: DMatrix<f64>,
    pub labelings: u64,
}

fn multinomial(n: usize, sizes: &[usize]) -> u128 {
    let mut result: u128 = 1;
    let mut used = 0usize;
    for &s in sizes {
        for k in 1..=s {
            used += 1;
            result = result * used as u128 / k as u128;
        }
    }
    debug_assert_eq!(used, n);
    result
}

/// Enumerates all distinct label assignments over the fixed NN structure
/// and accumulates first and second moments of the NNCT cells. Intended for
/// small `n` (the labeling count is capped at 10^7).
pub fn enumerate_label_moments(
    nn_index: &[usize],
    class_sizes: &[usize],
) -> Result<EnumeratedMoments> {
    let n = nn_index.len();
    let total: usize = class_sizes.iter().sum();
    if total != n {
        return Err(Error::LengthMismatch {
            left: total,
            right: n,
            context: "class sizes vs graph size",
        });
    }
    let count = multinomial(n, class_sizes);
    if count > 10_000_000 {
        return Err(Error::InvalidParameter {
            name: "class_sizes",
            message: format!("{count} labelings exceed the enumeration cap"),
        });
    }
    let q = class_sizes.len();
    let cells = q * q;
    let mut sum = vec![0.0f64; cells];
    let mut sum2 = vec![0.0f64; cells * cells];
    let mut labels = vec![0usize; n];
    let mut remaining = class_sizes.to_vec();
    let mut table = vec![0u32; cells];
    let mut labelings = 0u64;

    fn recurse(
        pos: usize,
        n: usize,
        q: usize,
        nn_index: &[usize],
        labels: &mut Vec<usize>,
        remaining: &mut Vec<usize>,
        table: &mut Vec<u32>,
        sum: &mut [f64],
        sum2: &mut [f64],
        labelings: &mut u64,
    ) {
        if pos == n {
            table.iter_mut().for_each(|c| *c = 0);
            for p in 0..n {
                table[labels[p] * q + labels[nn_index[p]]] += 1;
            }
            *labelings += 1;
            let nonzero: Vec<(usize, f64)> = table
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(idx, &c)| (idx, c as f64))
                .collect();
            for &(idx, c) in &nonzero {
                sum[idx] += c;
                for &(idx2, c2) in &nonzero {
                    sum2[idx * table.len() + idx2] += c * c2;
                }
            }
            return;
        }
        for c in 0..q {
            if remaining[c] > 0 {
                remaining[c] -= 1;
                labels[pos] = c;
                recurse(
                    pos + 1,
                    n,
                    q,
                    nn_index,
                    labels,
                    remaining,
                    table,
                    sum,
                    sum2,
                    labelings,
                );
                remaining[c] += 1;
            }
        }
    }

    recurse(
        0,
        n,
        q,
        nn_index,
        &mut labels,
        &mut remaining,
        &mut table,
        &mut sum,
        &mut sum2,
        &mut labelings,
    );

    let m = labelings as f64;
    let expected = DMatrix::from_fn(q, q, |i, j| sum[i * q + j] / m);
    let raw_second = DMatrix::from_fn(cells, cells, |a, b| sum2[a * cells + b] / m);
    let mean = DVector::from_fn(cells, |a, _| sum[a] / m);
    let sigma = &raw_second - &mean * mean.transpose();
    Ok(EnumeratedMoments {
        expected,
        sigma,
        raw_second,
        labelings,
    })
}

// ---------------------------------------------------------------------------
// Coefficient fitting: recover the overlap-class coefficients of every
// covariance case directly from enumeration, independent of the closed form.
// ---------------------------------------------------------------------------

/// Canonical shape of an ordered cell pair `(N_ij, N_kl)`, classified by
/// which of the four class indices coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexPattern {
    /// `(ii, ii)`: variance of a diagonal cell.
    DiagVar,
    /// `(ij, ij)`, `i != j`: variance of an off-diagonal cell.
    OffdiagVar,
    /// `(ii, jj)`: two distinct diagonal cells.
    DiagDiag,
    /// `(ii, ij)`: diagonal with an off-diagonal cell in the same row.
    DiagSameRow,
    /// `(ii, ji)`: diagonal with an off-diagonal cell in the same column.
    DiagSameCol,
    /// `(ii, jk)`: diagonal with an off-diagonal cell sharing no class.
    DiagDisjoint,
    /// `(ij, ji)`: an off-diagonal cell and its transpose.
    OffdiagTranspose,
    /// `(ij, ik)`: two off-diagonal cells in the same row.
    OffdiagSameRow,
    /// `(ij, kj)`: two off-diagonal cells in the same column.
    OffdiagSameCol,
    /// `(ij, jk)`: NN class of the first is the base class of the second.
    OffdiagChain,
    /// `(ij, ki)`: base class of the first is the NN class of the second.
    OffdiagChainBack,
    /// `(ij, kl)`: four distinct classes.
    Disjoint,
}

impl IndexPattern {
    /// All twelve patterns.
    pub fn all() -> [IndexPattern; 12] {
        use IndexPattern::*;
        [
            DiagVar,
            OffdiagVar,
            DiagDiag,
            DiagSameRow,
            DiagSameCol,
            DiagDisjoint,
            OffdiagTranspose,
            OffdiagSameRow,
            OffdiagSameCol,
            OffdiagChain,
            OffdiagChainBack,
            Disjoint,
        ]
    }

    /// Classifies a concrete ordered cell pair.
    pub fn of(i: usize, j: usize, k: usize, l: usize) -> IndexPattern {
        use IndexPattern::*;
        match (i == j, k == l) {
            (true, true) => {
                if i == k {
                    DiagVar
                } else {
                    DiagDiag
                }
            }
            (true, false) => {
                if i == k {
                    DiagSameRow
                } else if i == l {
                    DiagSameCol
                } else {
                    DiagDisjoint
                }
            }
            (false, true) => {
                // Covariance is symmetric; reuse the diagonal-first cases.
                if k == i {
                    DiagSameCol
                } else if k == j {
                    DiagSameRow
                } else {
                    DiagDisjoint
                }
            }
            (false, false) => {
                if i == k && j == l {
                    OffdiagVar
                } else if i == l && j == k {
                    OffdiagTranspose
                } else if i == k {
                    OffdiagSameRow
                } else if j == l {
                    OffdiagSameCol
                } else if j == k {
                    OffdiagChain
                } else if i == l {
                    OffdiagChainBack
                } else {
                    Disjoint
                }
            }
        }
    }

    /// Number of distinct class symbols the pattern involves.
    pub fn distinct_classes(&self) -> usize {
        use IndexPattern::*;
        match self {
            DiagVar | OffdiagVar | DiagDiag | DiagSameRow | DiagSameCol | OffdiagTranspose => 2,
            DiagDisjoint | OffdiagSameRow | OffdiagSameCol | OffdiagChain | OffdiagChainBack => 3,
            Disjoint => 4,
        }
    }

    /// A representative `(i, j, k, l)` instance using the lowest class ids.
    fn representative(&self) -> (usize, usize, usize, usize) {
        use IndexPattern::*;
        match self {
            DiagVar => (0, 0, 0, 0),
            OffdiagVar => (0, 1, 0, 1),
            DiagDiag => (0, 0, 1, 1),
            DiagSameRow => (0, 0, 0, 1),
            DiagSameCol => (0, 0, 1, 0),
            DiagDisjoint => (0, 0, 1, 2),
            OffdiagTranspose => (0, 1, 1, 0),
            OffdiagSameRow => (0, 1, 0, 2),
            OffdiagSameCol => (0, 1, 2, 1),
            OffdiagChain => (0, 1, 1, 2),
            OffdiagChainBack => (0, 1, 2, 0),
            Disjoint => (0, 1, 2, 3),
        }
    }

    /// Every concrete instance of this pattern over `q` classes.
    pub fn instances(&self, q: usize) -> Vec<(usize, usize, usize, usize)> {
        let mut out = Vec::new();
        for i in 0..q {
            for j in 0..q {
                for k in 0..q {
                    for l in 0..q {
                        if IndexPattern::of(i, j, k, l) == *self && (i == j || k != l) {
                            // Skip mirrored diagonal-second forms so each
                            // unordered case appears once per orientation.
                            out.push((i, j, k, l));
                        }
                    }
                }
            }
        }
        out
    }

    /// The three probability basis terms for an instance of this pattern:
    /// the shared-two-vertices term, the shared-one-vertex term(s), and the
    /// disjoint term.
    fn basis_multisets(
        &self,
        (i, j, k, l): (usize, usize, usize, usize),
    ) -> (Vec<usize>, Vec<Vec<usize>>, Vec<usize>) {
        use IndexPattern::*;
        let p2 = vec![i, j];
        let p4 = vec![i, j, k, l];
        let p3: Vec<Vec<usize>> = match self {
            DiagVar => vec![vec![i, i, i]],
            OffdiagVar => vec![vec![i, i, j]],
            OffdiagTranspose => vec![vec![i, i, j], vec![i, j, j]],
            DiagSameRow | DiagSameCol | DiagDiag => vec![vec![i, i, l.max(k)]],
            DiagDisjoint => vec![vec![i, k, l]],
            OffdiagSameRow | OffdiagSameCol | OffdiagChain | OffdiagChainBack | Disjoint => {
                let mut seen = vec![i, j];
                for s in [k, l] {
                    if !seen.contains(&s) {
                        seen.push(s);
                    }
                }
                seen.truncate(3);
                vec![seen]
            }
        };
        (p2, p3, p4)
    }
}

/// A coefficient expressed as an affine-plus-quadratic function of the
/// sample size and the NN scalars: `c0 + c1*n + c2*n^2 + c3*Q + c4*R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarPoly {
    pub constant: f64,
    pub n: f64,
    pub n_squared: f64,
    pub q: f64,
    pub r: f64,
}

impl ScalarPoly {
    pub fn eval(&self, n: f64, q: f64, r: f64) -> f64 {
        self.constant + self.n * n + self.n_squared * n * n + self.q * q + self.r * r
    }

    fn from_slice(s: &[f64]) -> Self {
        Self {
            constant: s[0],
            n: s[1],
            n_squared: s[2],
            q: s[3],
            r: s[4],
        }
    }
}

/// Result of fitting the overlap-class coefficients of one covariance case.
#[derive(Debug, Clone)]
pub struct FittedCoefficients {
    pub pattern: IndexPattern,
    /// Coefficient of the two-shared-vertices probability term.
    pub shared_pair: ScalarPoly,
    /// Coefficient of the one-shared-vertex probability term(s).
    pub shared_single: ScalarPoly,
    /// Coefficient of the vertex-disjoint probability term.
    pub disjoint: ScalarPoly,
    /// Largest residual on the held-out configuration set.
    pub max_residual: f64,
}

/// One fixed NN structure used by the fitting procedure.
struct FitConfig {
    nn_index: Vec<usize>,
    n: usize,
    q_shared: u64,
    r_reflexive: u64,
}

fn graph_of(points: Vec<Point2>) -> FitConfig {
    let n = points.len();
    let labels = vec![0usize; n];
    let pts = MarkedPointSet::with_classes(points, labels, 2, RectWindow::unit_square())
        .expect("valid fit configuration");
    let g = crate::geom::build_nn_graph_naive(&pts);
    FitConfig {
        nn_index: g.nn_index,
        n,
        q_shared: g.q,
        r_reflexive: g.r,
    }
}

/// Deterministic library of small point configurations with varied
/// `(n, Q, R)`: uniform scatters, tight pairs (reflexive-heavy), chains,
/// and stars (shared-NN-heavy).
fn config_library(seed_offset: u64) -> Vec<FitConfig> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut configs = Vec::new();
    for n in 4..=8usize {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(900 + seed_offset * 31 + n as u64);
        // two independent uniform scatters
        for _ in 0..2 {
            let pts: Vec<Point2> = (0..n)
                .map(|_| Point2::new(rng.gen::<f64>(), rng.gen::<f64>()))
                .collect();
            configs.push(graph_of(pts));
        }
        // tight pairs: R close to n
        let mut pts = Vec::new();
        for k in 0..n {
            let cx = (k / 2) as f64 * 10.0;
            let off = (k % 2) as f64 * 0.1 + seed_offset as f64 * 0.013;
            pts.push(Point2::new(cx + off, 0.0));
        }
        configs.push(graph_of(pts));
        // star: everyone's NN is the center
        let mut pts = vec![Point2::new(0.0, 0.0)];
        for k in 1..n {
            let angle = k as f64 * std::f64::consts::TAU / (n - 1) as f64
                + seed_offset as f64 * 0.1;
            pts.push(Point2::new(angle.cos(), angle.sin()));
        }
        configs.push(graph_of(pts));
    }
    configs
}

/// All positive compositions of `n` into `parts` summands.
fn compositions(n: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, parts: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            if n >= 1 {
                acc.push(n);
                out.push(acc.clone());
                acc.pop();
            }
            return;
        }
        for first in 1..=(n + 1 - parts) {
            acc.push(first);
            rec(n - first, parts - 1, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if n >= parts {
        rec(n, parts, &mut Vec::new(), &mut out);
    }
    out
}

fn build_equations(
    pattern: IndexPattern,
    configs: &[FitConfig],
) -> Result<(Vec<[f64; 15]>, Vec<f64>)> {
    let needed = pattern.distinct_classes();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    // Splits with one extra class beyond the pattern's symbols are needed
    // for identifiability: with exactly two classes, for example, the
    // transpose pattern has p3 identically equal to p2 because the two
    // class sizes sum to n.
    for q in [needed, needed + 1] {
        for cfg in configs {
            if cfg.n < q {
                continue;
            }
            for sizes in compositions(cfg.n, q) {
                let enumerated = enumerate_label_moments(&cfg.nn_index, &sizes)?;
                let nf = cfg.n as f64;
                let qs = cfg.q_shared as f64;
                let rf = cfg.r_reflexive as f64;
                let scal = [1.0, nf, nf * nf, qs, rf];
                let (i, j, k, l) = pattern.representative();
                let (p2m, p3ms, p4m) = pattern.basis_multisets((i, j, k, l));
                let p2 = label_tuple_prob(&p2m, &sizes, cfg.n);
                let p3: f64 = p3ms
                    .iter()
                    .map(|m| label_tuple_prob(m, &sizes, cfg.n))
                    .sum();
                let p4 = label_tuple_prob(&p4m, &sizes, cfg.n);
                let y = enumerated.raw_second[(i * q + j, k * q + l)];
                let mut row = [0.0f64; 15];
                for (t, &s) in scal.iter().enumerate() {
                    row[t] = p2 * s;
                    row[5 + t] = p3 * s;
                    row[10 + t] = p4 * s;
                }
                rows.push(row);
                rhs.push(y);
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::SingularFit("no usable configurations".into()));
    }
    Ok((rows, rhs))
}

/// Fits the coefficients of the two-, three-, and four-distinct-vertex
/// probability terms for the given covariance case, each as a polynomial in
/// `(n, Q, R)`, by least squares against exhaustive-enumeration moments on a
/// built-in library of small configurations. The fit is validated on a
/// disjoint held-out library; `max_residual` reports the worst held-out
/// error.
pub fn fit_moment_coefficients(pattern: IndexPattern) -> Result<FittedCoefficients> {
    let (rows, rhs) = build_equations(pattern, &config_library(0))?;
    let m = rows.len();
    let a = DMatrix::from_fn(m, 15, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let theta = svd
        .solve(&b, 1e-10 * max_sv)
        .map_err(|e| Error::SingularFit(e.to_string()))?;
    // Guard against an underdetermined system: the minimum-norm solution of
    // a rank-deficient fit would silently misattribute coefficients.
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * max_sv)
        .count();
    if rank < 15 {
        return Err(Error::SingularFit(format!(
            "design rank {rank} < 15; add configurations"
        )));
    }
    let fitted = FittedCoefficients {
        pattern,
        shared_pair: ScalarPoly::from_slice(&theta.as_slice()[0..5]),
        shared_single: ScalarPoly::from_slice(&theta.as_slice()[5..10]),
        disjoint: ScalarPoly::from_slice(&theta.as_slice()[10..15]),
        max_residual: 0.0,
    };
    // held-out validation
    let (rows_h, rhs_h) = build_equations(pattern, &config_library(1))?;
    let mut max_residual = 0.0f64;
    for (row, y) in rows_h.iter().zip(&rhs_h) {
        let pred: f64 = row.iter().zip(theta.iter()).map(|(a, t)| a * t).sum();
        max_residual = max_residual.max((pred - y).abs());
    }
    Ok(FittedCoefficients {
        max_residual,
        ..fitted
    })
}
