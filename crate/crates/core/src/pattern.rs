//! Reproducible generators for the null and alternative point patterns:
//! CSR independence, random-labeling location layouts, shifted-square
//! segregation, and radial-offset association.
//!
//! All randomness flows through a seedable counter-based generator with one
//! substream per replicate, so a pattern is a pure function of
//! `(spec, replicate index)` no matter how replicates are scheduled.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{MarkedPointSet, Point2, RectWindow};

/// Independent RNG substream for one replicate of a seeded experiment.
pub fn substream(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Location layouts for the random-labeling null cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RlLayout {
    /// Two classes, all locations uniform on the unit square.
    TwoClassUniform,
    /// Two classes on overlapping squares `U((0,2/3)^2)` and `U((1/3,1)^2)`.
    TwoClassOverlapping,
    /// Two classes on disjoint strips `U((0,1)x(0,1))` and `U((2,3)x(0,1))`.
    TwoClassDisjoint,
    /// Three classes, all locations uniform on the unit square.
    ThreeClassUniform,
    /// Three classes on `U((0,1)^2)`, `U((2,3)x(0,1))`, `U((1,2)x(2,3))`.
    ThreeClassSeparate,
}

impl RlLayout {
    pub fn num_classes(&self) -> usize {
        match self {
            RlLayout::TwoClassUniform | RlLayout::TwoClassOverlapping | RlLayout::TwoClassDisjoint => 2,
            RlLayout::ThreeClassUniform | RlLayout::ThreeClassSeparate => 3,
        }
    }

    fn component_windows(&self) -> Vec<RectWindow> {
        let w = |a, b, c, d| RectWindow::new(a, b, c, d).expect("static window");
        match self {
            RlLayout::TwoClassUniform => vec![w(0.0, 1.0, 0.0, 1.0); 2],
            RlLayout::TwoClassOverlapping => vec![
                w(0.0, 2.0 / 3.0, 0.0, 2.0 / 3.0),
                w(1.0 / 3.0, 1.0, 1.0 / 3.0, 1.0),
            ],
            RlLayout::TwoClassDisjoint => vec![w(0.0, 1.0, 0.0, 1.0), w(2.0, 3.0, 0.0, 1.0)],
            RlLayout::ThreeClassUniform => vec![w(0.0, 1.0, 0.0, 1.0); 3],
            RlLayout::ThreeClassSeparate => vec![
                w(0.0, 1.0, 0.0, 1.0),
                w(2.0, 3.0, 0.0, 1.0),
                w(1.0, 2.0, 2.0, 3.0),
            ],
        }
    }

    /// Overall window containing every component.
    pub fn window(&self) -> RectWindow {
        let parts = self.component_windows();
        let xmin = parts.iter().map(|w| w.xmin).fold(f64::INFINITY, f64::min);
        let xmax = parts.iter().map(|w| w.xmax).fold(f64::NEG_INFINITY, f64::max);
        let ymin = parts.iter().map(|w| w.ymin).fold(f64::INFINITY, f64::min);
        let ymax = parts.iter().map(|w| w.ymax).fold(f64::NEG_INFINITY, f64::max);
        RectWindow::new(xmin, xmax, ymin, ymax).expect("static window")
    }
}

/// The distributional family of a generated pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PatternKind {
    /// Each class iid uniform on the window, classes independent.
    Csr,
    /// Random labeling over a fixed location layout.
    RlCase(RlLayout),
    /// Two-class segregation: class 0 on `(0,1-s)^2`, class 1 on `(s,1)^2`.
    Segregation2 { s: f64 },
    /// Three-class segregation: classes on `(0,1-2s)^2`, `(2s,1)^2`,
    /// `(s,1-s)^2`.
    Segregation3 { s: f64 },
    /// Two-class association: class 1 points offset from random class 0
    /// parents at radius `U(0,r)`.
    Association2 { r: f64 },
    /// Three-class association: classes 1 and 2 offset from class 0
    /// parents at radii `U(0,r_y)` and `U(0,r_z)`.
    Association3 { r_y: f64, r_z: f64 },
}

impl PatternKind {
    pub fn num_classes(&self) -> Option<usize> {
        match self {
            PatternKind::Csr => None,
            PatternKind::RlCase(layout) => Some(layout.num_classes()),
            PatternKind::Segregation2 { .. } | PatternKind::Association2 { .. } => Some(2),
            PatternKind::Segregation3 { .. } | PatternKind::Association3 { .. } => Some(3),
        }
    }

    /// True for the null families usable in size experiments.
    pub fn is_null(&self) -> bool {
        matches!(self, PatternKind::Csr | PatternKind::RlCase(_))
    }
}

impl std::fmt::Display for PatternKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PatternKind::Csr => write!(f, "csr"),
            PatternKind::RlCase(RlLayout::TwoClassUniform) => write!(f, "rl1"),
            PatternKind::RlCase(RlLayout::TwoClassOverlapping) => write!(f, "rl2"),
            PatternKind::RlCase(RlLayout::TwoClassDisjoint) => write!(f, "rl3"),
            PatternKind::RlCase(RlLayout::ThreeClassUniform) => write!(f, "rl1-3c"),
            PatternKind::RlCase(RlLayout::ThreeClassSeparate) => write!(f, "rl2-3c"),
            PatternKind::Segregation2 { s } => write!(f, "segregation2:s={s}"),
            PatternKind::Segregation3 { s } => write!(f, "segregation3:s={s}"),
            PatternKind::Association2 { r } => write!(f, "association2:r={r}"),
            PatternKind::Association3 { r_y, r_z } => {
                write!(f, "association3:ry={r_y},rz={r_z}")
            }
        }
    }
}

impl std::str::FromStr for PatternKind {
    type Err = Error;

    /// Parses the flat config grammar: `csr`, `rl1`..`rl3`, `rl1-3c`,
    /// `rl2-3c`, `segregation2:s=V`, `segregation3:s=V`,
    /// `association2:r=V`, `association3:ry=V,rz=V`.
    fn from_str(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidParameter {
            name: "pattern",
            message: msg,
        };
        let (head, params) = match text.split_once(':') {
            Some((h, p)) => (h.trim(), Some(p.trim())),
            None => (text.trim(), None),
        };
        let parse_params = |p: Option<&str>| -> Result<Vec<(String, f64)>> {
            let Some(p) = p else {
                return Err(bad(format!("`{head}` needs parameters")));
            };
            p.split(',')
                .map(|kv| {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
                    let value: f64 = v
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("`{v}` is not a number")))?;
                    Ok((k.trim().to_string(), value))
                })
                .collect()
        };
        let single = |p: Option<&str>, key: &str| -> Result<f64> {
            let params = parse_params(p)?;
            match params.as_slice() {
                [(k, v)] if k == key => Ok(*v),
                _ => Err(bad(format!("`{head}` takes exactly one parameter `{key}`"))),
            }
        };
        match head {
            "csr" => Ok(PatternKind::Csr),
            "rl1" => Ok(PatternKind::RlCase(RlLayout::TwoClassUniform)),
            "rl2" => Ok(PatternKind::RlCase(RlLayout::TwoClassOverlapping)),
            "rl3" => Ok(PatternKind::RlCase(RlLayout::TwoClassDisjoint)),
            "rl1-3c" => Ok(PatternKind::RlCase(RlLayout::ThreeClassUniform)),
            "rl2-3c" => Ok(PatternKind::RlCase(RlLayout::ThreeClassSeparate)),
            "segregation2" => Ok(PatternKind::Segregation2 {
                s: single(params, "s")?,
            }),
            "segregation3" => Ok(PatternKind::Segregation3 {
                s: single(params, "s")?,
            }),
            "association2" => Ok(PatternKind::Association2 {
                r: single(params, "r")?,
            }),
            "association3" => {
                let params = parse_params(params)?;
                let get = |key: &str| -> Result<f64> {
                    params
                        .iter()
                        .find(|(k, _)| k == key)
                        .map(|&(_, v)| v)
                        .ok_or_else(|| bad(format!("association3 needs `{key}`")))
                };
                if params.len() != 2 {
                    return Err(bad("association3 takes `ry` and `rz`".into()));
                }
                Ok(PatternKind::Association3 {
                    r_y: get("ry")?,
                    r_z: get("rz")?,
                })
            }
            other => Err(bad(format!("unknown pattern family `{other}`"))),
        }
    }
}

/// A full description of one random pattern: family, class sizes, window,
/// and master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub class_sizes: Vec<usize>,
    pub window: RectWindow,
    pub seed: u64,
}

impl PatternSpec {
    pub fn csr(class_sizes: Vec<usize>, window: RectWindow, seed: u64) -> Self {
        Self {
            kind: PatternKind::Csr,
            class_sizes,
            window,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.class_sizes.len() < 2 {
            return Err(Error::TooFewClasses {
                got: self.class_sizes.len(),
            });
        }
        if let Some(q) = self.kind.num_classes() {
            if q != self.class_sizes.len() {
                return Err(Error::LengthMismatch {
                    left: self.class_sizes.len(),
                    right: q,
                    context: "class sizes vs pattern family",
                });
            }
        }
        if self.window.area() <= 0.0 {
            return Err(Error::InvalidWindow {
                xmin: self.window.xmin,
                xmax: self.window.xmax,
                ymin: self.window.ymin,
                ymax: self.window.ymax,
            });
        }
        let check_unit = |name: &'static str, v: f64, hi: f64| -> Result<()> {
            if !(0.0..hi).contains(&v) {
                return Err(Error::InvalidParameter {
                    name,
                    message: format!("must be in [0, {hi}), got {v}"),
                });
            }
            Ok(())
        };
        match &self.kind {
            PatternKind::Segregation2 { s } => check_unit("s", *s, 1.0)?,
            PatternKind::Segregation3 { s } => check_unit("s", *s, 0.5)?,
            PatternKind::Association2 { r } => {
                if !(0.0 < *r && *r < 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "r",
                        message: format!("must be in (0,1), got {r}"),
                    });
                }
                if self.class_sizes[0] == 0 && self.class_sizes[1] > 0 {
                    return Err(Error::InvalidParameter {
                        name: "class_sizes",
                        message: "offspring requested with no parent points".into(),
                    });
                }
            }
            PatternKind::Association3 { r_y, r_z } => {
                for (name, v) in [("r_y", *r_y), ("r_z", *r_z)] {
                    if !(0.0 < v && v < 1.0) {
                        return Err(Error::InvalidParameter {
                            name,
                            message: format!("must be in (0,1), got {v}"),
                        });
                    }
                }
                if self.class_sizes[0] == 0 && (self.class_sizes[1] > 0 || self.class_sizes[2] > 0)
                {
                    return Err(Error::InvalidParameter {
                        name: "class_sizes",
                        message: "offspring requested with no parent points".into(),
                    });
                }
            }
            PatternKind::Csr | PatternKind::RlCase(_) => {}
        }
        Ok(())
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, w: &RectWindow) -> Point2 {
    let x = w.xmin + rng.gen::<f64>() * w.width();
    let y = w.ymin + rng.gen::<f64>() * w.height();
    Point2::new(x, y)
}

fn class_blocks(class_sizes: &[usize]) -> Vec<usize> {
    let mut labels = Vec::with_capacity(class_sizes.iter().sum());
    for (c, &s) in class_sizes.iter().enumerate() {
        labels.extend(std::iter::repeat(c).take(s));
    }
    labels
}

/// Class-by-class sampling on per-class windows; shared by CSR and the
/// segregation families so a zero shift reproduces CSR draw-for-draw.
fn sample_per_class(
    rng: &mut ChaCha8Rng,
    class_sizes: &[usize],
    windows: &[RectWindow],
) -> Vec<Point2> {
    let mut points = Vec::with_capacity(class_sizes.iter().sum());
    for (c, &s) in class_sizes.iter().enumerate() {
        for _ in 0..s {
            points.push(uniform_in(rng, &windows[c]));
        }
    }
    points
}

/// Generates replicate `replicate` of the pattern described by `spec`.
/// Identical arguments give bitwise-identical output.
pub fn generate_replicate(spec: &PatternSpec, replicate: u64) -> Result<MarkedPointSet> {
    spec.validate()?;
    let mut rng = substream(spec.seed, replicate);
    let sizes = &spec.class_sizes;
    let q = sizes.len();
    match &spec.kind {
        PatternKind::Csr => {
            let windows = vec![spec.window; q];
            let points = sample_per_class(&mut rng, sizes, &windows);
            MarkedPointSet::with_classes(points, class_blocks(sizes), q, spec.window)
        }
        PatternKind::RlCase(layout) => {
            let locations = rl_locations(*layout, sizes, &mut rng);
            gen_rl(&locations, sizes, layout.window(), &mut rng)
        }
        PatternKind::Segregation2 { s } => {
            let w = |a, b, c, d| RectWindow::new(a, b, c, d);
            let windows = vec![w(0.0, 1.0 - s, 0.0, 1.0 - s)?, w(*s, 1.0, *s, 1.0)?];
            let points = sample_per_class(&mut rng, sizes, &windows);
            MarkedPointSet::with_classes(points, class_blocks(sizes), q, spec.window)
        }
        PatternKind::Segregation3 { s } => {
            let w = |a, b, c, d| RectWindow::new(a, b, c, d);
            let windows = vec![
                w(0.0, 1.0 - 2.0 * s, 0.0, 1.0 - 2.0 * s)?,
                w(2.0 * s, 1.0, 2.0 * s, 1.0)?,
                w(*s, 1.0 - s, *s, 1.0 - s)?,
            ];
            let points = sample_per_class(&mut rng, sizes, &windows);
            MarkedPointSet::with_classes(points, class_blocks(sizes), q, spec.window)
        }
        PatternKind::Association2 { r } => {
            let points = gen_association(&mut rng, sizes, &[*r], &spec.window);
            MarkedPointSet::with_classes(points, class_blocks(sizes), q, spec.window)
        }
        PatternKind::Association3 { r_y, r_z } => {
            let points = gen_association(&mut rng, sizes, &[*r_y, *r_z], &spec.window);
            MarkedPointSet::with_classes(points, class_blocks(sizes), q, spec.window)
        }
    }
}

/// Replicate 0 of the pattern.
pub fn generate(spec: &PatternSpec) -> Result<MarkedPointSet> {
    generate_replicate(spec, 0)
}

/// Fixed locations for one of the RL layouts.
pub fn rl_locations(layout: RlLayout, class_sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<Point2> {
    let windows = layout.component_windows();
    let mut points = Vec::with_capacity(class_sizes.iter().sum());
    for (w, &s) in windows.iter().zip(class_sizes) {
        for _ in 0..s {
            points.push(uniform_in(rng, w));
        }
    }
    points
}

/// Randomly labels a fixed set of locations: `class_sizes[c]` points get
/// label `c`, assigned by sampling without replacement.
pub fn gen_rl(
    locations: &[Point2],
    class_sizes: &[usize],
    window: RectWindow,
    rng: &mut ChaCha8Rng,
) -> Result<MarkedPointSet> {
    let n: usize = class_sizes.iter().sum();
    if n > locations.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: locations.len(),
            context: "class sizes vs available locations",
        });
    }
    let labels = permuted_labels(class_sizes, rng);
    MarkedPointSet::with_classes(
        locations[..n].to_vec(),
        labels,
        class_sizes.len(),
        window,
    )
}

/// A uniformly random permutation of the label multiset (Fisher-Yates).
pub fn permuted_labels(class_sizes: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels = class_blocks(class_sizes);
    let n = labels.len();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

/// Parent points uniform on the window; each offspring class `c >= 1`
/// attaches to a uniformly chosen parent (with replacement) at radius
/// `U(0, radii[c-1])` and angle `U(0, 2 pi)`. Offspring may land outside
/// the window; they are kept as-is.
fn gen_association(
    rng: &mut ChaCha8Rng,
    class_sizes: &[usize],
    radii: &[f64],
    window: &RectWindow,
) -> Vec<Point2> {
    let n_parents = class_sizes[0];
    let mut points = Vec::with_capacity(class_sizes.iter().sum());
    for _ in 0..n_parents {
        points.push(uniform_in(rng, window));
    }
    for (c, &count) in class_sizes.iter().enumerate().skip(1) {
        let r_max = radii[c - 1];
        for _ in 0..count {
            let parent = points[rng.gen_range(0..n_parents)];
            let radius = rng.gen::<f64>() * r_max;
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            points.push(Point2::new(
                parent.x + radius * angle.cos(),
                parent.y + radius * angle.sin(),
            ));
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::build_nn_graph;
    use crate::nnct::expected_counts;

    fn unit() -> RectWindow {
        RectWindow::unit_square()
    }

    #[test]
    fn csr_respects_bounds_and_determinism() {
        let spec = PatternSpec::csr(vec![10, 10], unit(), 99);
        let pts = generate(&spec).unwrap();
        assert_eq!(pts.len(), 20);
        for p in pts.points() {
            assert!(pts.window().contains(p));
        }
        let again = generate(&spec).unwrap();
        assert_eq!(pts, again);
        let other = generate_replicate(&spec, 1).unwrap();
        assert_ne!(pts, other);
    }

    #[test]
    fn csr_mean_cell_counts_match_expectation() {
        // Monte Carlo check of the expected-count formula at (30,30).
        let spec = PatternSpec::csr(vec![30, 30], unit(), 5150);
        let reps = 10_000u64;
        let mut sums = [0.0f64; 4];
        for rep in 0..reps {
            let pts = generate_replicate(&spec, rep).unwrap();
            let g = build_nn_graph(&pts);
            let t = crate::nnct::build_nnct(&pts, &g).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    sums[i * 2 + j] += t.count(i, j) as f64;
                }
            }
        }
        let e = expected_counts(&[30, 30], 60).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mean = sums[i * 2 + j] / reps as f64;
                // 3 standard errors; cell sd is a few counts
                let se = 3.0 * 3.0 / (reps as f64).sqrt();
                assert!(
                    (mean - e[(i, j)]).abs() < se.max(0.15),
                    "cell ({i},{j}): mean {mean} vs expected {}",
                    e[(i, j)]
                );
            }
        }
    }

    #[test]
    fn rl_labels_are_a_permutation_and_locations_fixed() {
        let spec = PatternSpec {
            kind: PatternKind::RlCase(RlLayout::TwoClassDisjoint),
            class_sizes: vec![100, 100],
            window: RlLayout::TwoClassDisjoint.window(),
            seed: 4,
        };
        let pts = generate(&spec).unwrap();
        assert_eq!(pts.class_sizes(), &[100, 100]);
        // strip layout: x in [0,1] or [2,3]
        for p in pts.points() {
            assert!((0.0..=1.0).contains(&p.x) || (2.0..=3.0).contains(&p.x));
            assert!((0.0..=1.0).contains(&p.y));
        }
        // relabeling leaves the NN graph alone
        let g = build_nn_graph(&pts);
        let mut rng = substream(11, 0);
        let relab = pts
            .relabeled(permuted_labels(pts.class_sizes(), &mut rng))
            .unwrap();
        let g2 = build_nn_graph(&relab);
        assert_eq!(g.nn_index, g2.nn_index);
        assert_eq!(g.q, g2.q);
        assert_eq!(g.r, g2.r);
    }

    #[test]
    fn segregation_zero_shift_reproduces_csr() {
        let seg = PatternSpec {
            kind: PatternKind::Segregation2 { s: 0.0 },
            class_sizes: vec![12, 8],
            window: unit(),
            seed: 31,
        };
        let csr = PatternSpec::csr(vec![12, 8], unit(), 31);
        assert_eq!(generate(&seg).unwrap(), generate(&csr).unwrap());
    }

    #[test]
    fn segregation_bounds() {
        let spec = PatternSpec {
            kind: PatternKind::Segregation2 { s: 1.0 / 3.0 },
            class_sizes: vec![30, 30],
            window: unit(),
            seed: 8,
        };
        let pts = generate(&spec).unwrap();
        for (p, &l) in pts.points().iter().zip(pts.labels()) {
            if l == 0 {
                assert!(p.x <= 2.0 / 3.0 + 1e-12 && p.y <= 2.0 / 3.0 + 1e-12);
            } else {
                assert!(p.x >= 1.0 / 3.0 - 1e-12 && p.y >= 1.0 / 3.0 - 1e-12);
            }
        }
        let bad = PatternSpec {
            kind: PatternKind::Segregation2 { s: 1.5 },
            class_sizes: vec![5, 5],
            window: unit(),
            seed: 0,
        };
        assert!(generate(&bad).is_err());
    }

    #[test]
    fn three_class_segregation_bounds() {
        let s = 1.0 / 6.0;
        let spec = PatternSpec {
            kind: PatternKind::Segregation3 { s },
            class_sizes: vec![10, 10, 10],
            window: unit(),
            seed: 3,
        };
        let pts = generate(&spec).unwrap();
        for (p, &l) in pts.points().iter().zip(pts.labels()) {
            match l {
                0 => assert!(p.x <= 1.0 - 2.0 * s && p.y <= 1.0 - 2.0 * s),
                1 => assert!(p.x >= 2.0 * s && p.y >= 2.0 * s),
                _ => assert!(p.x >= s && p.x <= 1.0 - s && p.y >= s && p.y <= 1.0 - s),
            }
        }
    }

    #[test]
    fn association_offspring_near_some_parent() {
        let r = 0.1;
        let spec = PatternSpec {
            kind: PatternKind::Association2 { r },
            class_sizes: vec![20, 40],
            window: unit(),
            seed: 17,
        };
        let pts = generate(&spec).unwrap();
        let parents: Vec<Point2> = pts.class_points(0);
        for (p, &l) in pts.points().iter().zip(pts.labels()) {
            if l == 1 {
                let min_d = parents
                    .iter()
                    .map(|q| q.dist(p))
                    .fold(f64::INFINITY, f64::min);
                assert!(min_d <= r + 1e-12);
            }
        }
    }

    #[test]
    fn association_tiny_radius_coincides_with_parent() {
        let spec = PatternSpec {
            kind: PatternKind::Association2 { r: 1e-9 },
            class_sizes: vec![5, 10],
            window: unit(),
            seed: 2,
        };
        let pts = generate(&spec).unwrap();
        let parents = pts.class_points(0);
        for p in pts.class_points(1) {
            let min_d = parents
                .iter()
                .map(|q| q.dist(&p))
                .fold(f64::INFINITY, f64::min);
            assert!(min_d <= 1e-9);
        }
    }

    #[test]
    fn association_without_parents_is_rejected() {
        let spec = PatternSpec {
            kind: PatternKind::Association2 { r: 0.1 },
            class_sizes: vec![0, 10],
            window: unit(),
            seed: 2,
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn pattern_grammar_round_trips() {
        let cases = [
            "csr",
            "rl1",
            "rl2",
            "rl3",
            "rl1-3c",
            "rl2-3c",
            "segregation2:s=0.25",
            "segregation3:s=0.125",
            "association2:r=0.1",
            "association3:ry=0.1,rz=0.05",
        ];
        for text in cases {
            let kind: PatternKind = text.parse().unwrap();
            let shown = kind.to_string();
            let reparsed: PatternKind = shown.parse().unwrap();
            assert_eq!(kind, reparsed, "{text} -> {shown}");
        }
        assert!("seg:s=1".parse::<PatternKind>().is_err());
        assert!("segregation2".parse::<PatternKind>().is_err());
        assert!("association3:ry=0.1".parse::<PatternKind>().is_err());
        assert!("segregation2:s=abc".parse::<PatternKind>().is_err());
    }

    #[test]
    fn csr_coordinates_pass_uniformity_check() {
        // Kolmogorov-Smirnov on 10^4 pooled draws at the 1% level.
        let spec = PatternSpec::csr(vec![5000, 5000], unit(), 77);
        let pts = generate(&spec).unwrap();
        for extract in [|p: &Point2| p.x, |p: &Point2| p.y] {
            let mut xs: Vec<f64> = pts.points().iter().map(extract).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = xs.len() as f64;
            let mut d = 0.0f64;
            for (k, &x) in xs.iter().enumerate() {
                let ecdf_hi = (k + 1) as f64 / n;
                let ecdf_lo = k as f64 / n;
                d = d.max((ecdf_hi - x).abs()).max((x - ecdf_lo).abs());
            }
            let critical = 1.6276 / n.sqrt();
            assert!(d < critical, "KS statistic {d} above 1% critical {critical}");
        }
    }
}
