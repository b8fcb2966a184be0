//! Subset statistics, their aggregation over all `k`-subsets, scaling
//! sequences and the combined one-sided test.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::moments::{self, MomentId};
use crate::ranks::{
    build_kernel_table, check_index_set, compute_ranks, Dataset, KernelTerms, PairKernelTable,
    RankMatrix, TiePolicy,
};

/// Default cap on the number of subsets the naive path will enumerate.
pub const DEFAULT_SUBSET_BUDGET: u128 = 1_000_000;

/// How the aggregated statistics are standardized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingMode {
    /// Finite-sample null standard deviation for every order.
    #[default]
    #[serde(rename = "exact", alias = "exact-finite")]
    ExactFinite,
    /// Limiting variance `2 / 90^k`.
    Asymptotic,
    /// Finite-sample scale for `k <= 3`, limiting scale above.
    Paper,
}

impl ScalingMode {
    /// Whether order `k` uses the finite-sample variance.
    pub fn uses_exact(self, k: usize) -> bool {
        match self {
            ScalingMode::ExactFinite => true,
            ScalingMode::Asymptotic => false,
            ScalingMode::Paper => k <= 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScalingMode::ExactFinite => "exact",
            ScalingMode::Asymptotic => "asymptotic",
            ScalingMode::Paper => "paper",
        }
    }
}

impl fmt::Display for ScalingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScalingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" | "exact-finite" => Ok(ScalingMode::ExactFinite),
            "asymptotic" => Ok(ScalingMode::Asymptotic),
            "paper" => Ok(ScalingMode::Paper),
            other => Err(Error::InvalidArgument(format!("unknown scaling {other:?}"))),
        }
    }
}

/// Centering and scale of `T_n(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub nu: f64,
    pub delta: f64,
}

/// Per-order entries of a [`TestReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    pub k: usize,
    pub t: f64,
    pub nu: f64,
    pub scale: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub orders: Vec<OrderReport>,
    pub t_bar: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub scaling: ScalingMode,
    pub ties_broken: bool,
    pub seed: Option<u64>,
}

fn require_raw(table: &PairKernelTable) -> Result<()> {
    if table.is_centered() {
        Err(Error::InvalidArgument(
            "statistics need the raw kernel table".into(),
        ))
    } else {
        Ok(())
    }
}

fn check_order_range(m: usize, d: usize) -> Result<()> {
    if m < 2 || m > d {
        Err(Error::InvalidOrder(format!("order {m} outside 2..={d}")))
    } else {
        Ok(())
    }
}

/// Fixed-shape pairwise summation; the result depends only on the input order.
pub fn tree_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        len => {
            let (lo, hi) = values.split_at(len / 2);
            tree_sum(lo) + tree_sum(hi)
        }
    }
}

/// `S_{n,A} = (1/n) sum_{i,j} prod_{p in A} I(i, j, p)` over ordered pairs.
pub fn subset_statistic(table: &PairKernelTable, set: &[usize]) -> Result<f64> {
    require_raw(table)?;
    check_index_set(set, table.d())?;
    let n = table.n();
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        let prod = |j: usize| {
            let vals = table.pair(i, j);
            set.iter().map(|&p| vals[p]).product::<f64>()
        };
        diag += prod(i);
        for j in i + 1..n {
            off += prod(j);
        }
    }
    Ok((diag + 2.0 * off) / n as f64)
}

/// `T_n(k)` by summing [`subset_statistic`] over every `k`-subset.
pub fn t_statistic_naive(table: &PairKernelTable, k: usize) -> Result<f64> {
    t_statistic_naive_with_budget(table, k, DEFAULT_SUBSET_BUDGET)
}

pub fn t_statistic_naive_with_budget(
    table: &PairKernelTable,
    k: usize,
    budget: u128,
) -> Result<f64> {
    require_raw(table)?;
    check_order_range(k, table.d())?;
    let count = binomial_exact(table.d(), k).unwrap_or(u128::MAX);
    if count > budget {
        return Err(Error::SubsetBudgetExceeded { count, budget });
    }
    let mut total = 0.0;
    for set in (0..table.d()).combinations(k) {
        total += subset_statistic(table, &set)?;
    }
    Ok(total)
}

/// Adds `weight * e_k(values)` for `k = 2..=m` into `acc[k - 2]`.
#[inline]
fn accumulate_pair(values: &[f64], weight: f64, e: &mut [f64], acc: &mut [f64]) {
    let m = e.len() - 1;
    e.fill(0.0);
    e[0] = 1.0;
    for (idx, &x) in values.iter().enumerate() {
        for k in (1..=m.min(idx + 1)).rev() {
            e[k] += e[k - 1] * x;
        }
    }
    for k in 2..=m {
        acc[k - 2] += weight * e[k];
    }
}

fn reduce_rows(rows: Vec<Vec<f64>>, m: usize, n: usize) -> Vec<f64> {
    (2..=m)
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k - 2]).collect();
            tree_sum(&column) / n as f64
        })
        .collect()
}

/// `[T_n(2), ..., T_n(m)]` through elementary symmetric polynomials of the
/// kernel values of each pair.
pub fn t_statistic_fast(table: &PairKernelTable, m: usize) -> Result<Vec<f64>> {
    require_raw(table)?;
    check_order_range(m, table.d())?;
    let n = table.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut e = vec![0.0; m + 1];
            let mut acc = vec![0.0; m - 1];
            accumulate_pair(table.pair(i, i), 1.0, &mut e, &mut acc);
            for j in i + 1..n {
                accumulate_pair(table.pair(i, j), 2.0, &mut e, &mut acc);
            }
            acc
        })
        .collect();
    Ok(reduce_rows(rows, m, n))
}

/// Same as [`t_statistic_fast`] but recomputes kernels on the fly instead of
/// reading a table; results are bit-identical.
pub fn t_statistic_streaming(ranks: &RankMatrix, m: usize) -> Result<Vec<f64>> {
    let (n, d) = (ranks.n(), ranks.d());
    check_order_range(m, d)?;
    let terms = KernelTerms::new(n);
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut e = vec![0.0; m + 1];
            let mut acc = vec![0.0; m - 1];
            let mut vals = vec![0.0; d];
            let row_i: Vec<usize> = (0..d).map(|p| ranks.rank(i, p)).collect();
            for j in i..n {
                for (p, v) in vals.iter_mut().enumerate() {
                    *v = terms.raw(row_i[p], ranks.rank(j, p));
                }
                let weight = if j == i { 1.0 } else { 2.0 };
                accumulate_pair(&vals, weight, &mut e, &mut acc);
            }
            acc
        })
        .collect();
    Ok(reduce_rows(rows, m, n))
}

/// Null mean of a single subset statistic with `|A| = k`.
pub fn mu_n(n: usize, k: usize) -> f64 {
    moments::to_f64(&moments::mu_exact(n, k))
}

/// Null variance of a single subset statistic with `|A| = k`.
pub fn sigma2_exact(n: usize, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidOrder(format!("order must be >= 2, got {k}")));
    }
    if n < 2 {
        return Err(Error::DegenerateVariance { n, k });
    }
    let exact = moments::moment_closed_form(MomentId::Sigma2(k), n)?;
    let value = moments::to_f64(&exact);
    if value <= 1e-300 || !value.is_finite() {
        return Err(Error::DegenerateVariance { n, k });
    }
    Ok(value)
}

/// Exact `C(d, k)` when it fits in 128 bits.
pub fn binomial_exact(d: usize, k: usize) -> Option<u128> {
    if k > d {
        return Some(0);
    }
    let k = k.min(d - k);
    let mut acc: u128 = 1;
    for i in 0..k as u128 {
        // acc * (d - i) is divisible by (i + 1) after multiplication
        acc = acc.checked_mul(d as u128 - i)? / (i + 1);
    }
    Some(acc)
}

/// `C(d, k)` as a float: exact integer arithmetic while the value fits in 64
/// bits, log-gamma beyond.
pub fn binomial(d: usize, k: usize) -> f64 {
    if let Some(c) = binomial_exact(d, k).filter(|&c| c <= u64::MAX as u128) {
        return c as f64;
    }
    if k > d {
        return 0.0;
    }
    statrs::function::factorial::ln_binomial(d as u64, k as u64).exp()
}

/// Centering `C(d, k) mu_n(k)` and the scale selected by `mode`.
pub fn scaling(n: usize, d: usize, k: usize, mode: ScalingMode) -> Result<Scaling> {
    check_order_range(k, d)?;
    let count = binomial(d, k);
    let nu = count * mu_n(n, k);
    let variance = if mode.uses_exact(k) {
        sigma2_exact(n, k)?
    } else {
        2.0 / 90f64.powi(k as i32)
    };
    Ok(Scaling {
        nu,
        delta: (variance * count).sqrt(),
    })
}

/// `(m - 1)^{-1/2} sum_k z_k`, where `z` holds `z_2, ..., z_m`.
pub fn combined_statistic(z: &[f64]) -> f64 {
    z.iter().sum::<f64>() / (z.len() as f64).sqrt()
}

/// Upper-tail standard normal probability `1 - Phi(z)`.
pub fn p_value(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Rejects when `z` strictly exceeds the upper `alpha` quantile.
pub fn decide(z: f64, alpha: f64) -> bool {
    z > normal_quantile(1.0 - alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

/// Scales for orders `2..=m`; degenerate variances become `InsufficientSample`.
pub fn scale_table(n: usize, d: usize, m: usize, mode: ScalingMode) -> Result<Vec<Scaling>> {
    check_order_range(m, d)?;
    if n < 3 {
        return Err(Error::InsufficientSample { n, k: 2 });
    }
    (2..=m)
        .map(|k| {
            scaling(n, d, k, mode).map_err(|e| match e {
                Error::DegenerateVariance { n, k } => Error::InsufficientSample { n, k },
                other => other,
            })
        })
        .collect()
}

/// Aggregated statistics for a rank matrix, using a kernel table when it fits
/// in the default budget and on-the-fly kernels otherwise.
pub fn t_statistics(ranks: &RankMatrix, m: usize) -> Result<Vec<f64>> {
    match build_kernel_table(ranks, false) {
        Ok(table) => t_statistic_fast(&table, m),
        Err(Error::CapacityExceeded { .. }) => t_statistic_streaming(ranks, m),
        Err(e) => Err(e),
    }
}

/// Assembles a report from raw statistics and precomputed scales.
pub fn report_from_statistics(
    n: usize,
    d: usize,
    t: &[f64],
    scales: &[Scaling],
    mode: ScalingMode,
    alpha: f64,
) -> TestReport {
    let orders: Vec<OrderReport> = t
        .iter()
        .zip(scales)
        .enumerate()
        .map(|(idx, (&t, s))| OrderReport {
            k: idx + 2,
            t,
            nu: s.nu,
            scale: s.delta,
            z: (t - s.nu) / s.delta,
        })
        .collect();
    let z: Vec<f64> = orders.iter().map(|o| o.z).collect();
    let t_bar = combined_statistic(&z);
    TestReport {
        n,
        d,
        m: t.len() + 1,
        orders,
        t_bar,
        p_value: p_value(t_bar),
        alpha,
        reject: decide(t_bar, alpha),
        scaling: mode,
        ties_broken: false,
        seed: None,
    }
}

/// Ranks the data, aggregates orders `2..=m`, standardizes and decides.
pub fn run_test(
    data: &Dataset,
    m: usize,
    mode: ScalingMode,
    alpha: f64,
    tie_policy: TiePolicy,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let scales = scale_table(data.n(), data.d(), m, mode)?;
    let ranks = compute_ranks(data, tie_policy)?;
    let t = t_statistics(&ranks, m)?;
    let mut report = report_from_statistics(data.n(), data.d(), &t, &scales, mode, alpha);
    report.ties_broken = ranks.any_ties();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranks::build_kernel_table;
    use proptest::prelude::*;

    fn table_from(columns: &[Vec<usize>]) -> PairKernelTable {
        build_kernel_table(&RankMatrix::from_columns(columns).unwrap(), false).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn subset_statistic_examples() {
        for cols in [vec![vec![1, 2], vec![1, 2]], vec![vec![1, 2], vec![2, 1]]] {
            let t = table_from(&cols);
            assert!((subset_statistic(&t, &[0, 1]).unwrap() - 1.0 / 72.0).abs() < 1e-15);
        }
        let t = table_from(&[vec![1, 2, 3], vec![1, 2, 3]]);
        assert!((subset_statistic(&t, &[0, 1]).unwrap() - 5.0 / 216.0).abs() < 1e-15);
        assert!(matches!(
            subset_statistic(&t, &[0, 2]),
            Err(Error::BadIndexSet(_))
        ));
        assert!(matches!(
            subset_statistic(&t, &[0]),
            Err(Error::BadIndexSet(_))
        ));
    }

    #[test]
    fn centered_table_is_rejected() {
        let ranks = RankMatrix::from_columns(&[vec![1, 2, 3], vec![3, 1, 2]]).unwrap();
        let t = build_kernel_table(&ranks, true).unwrap();
        assert!(subset_statistic(&t, &[0, 1]).is_err());
        assert!(t_statistic_fast(&t, 2).is_err());
    }

    #[test]
    fn naive_examples() {
        let t = table_from(&[vec![1, 2], vec![2, 1], vec![1, 2]]);
        assert!((t_statistic_naive(&t, 2).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(
            t_statistic_naive(&t, 3).unwrap(),
            subset_statistic(&t, &[0, 1, 2]).unwrap()
        );
        assert!(matches!(
            t_statistic_naive_with_budget(&t, 2, 2),
            Err(Error::SubsetBudgetExceeded {
                count: 3,
                budget: 2
            })
        ));
    }

    #[test]
    fn fast_examples() {
        let t = table_from(&[vec![1, 2], vec![2, 1], vec![1, 2]]);
        let fast = t_statistic_fast(&t, 2).unwrap();
        assert_eq!(fast.len(), 1);
        assert!((fast[0] - 1.0 / 24.0).abs() < 1e-15);
        let t = table_from(&[vec![3, 1, 2, 4], vec![2, 4, 1, 3]]);
        let s = subset_statistic(&t, &[0, 1]).unwrap();
        assert!(close(t_statistic_fast(&t, 2).unwrap()[0], s, 1e-14));
        assert!(t_statistic_fast(&t, 3).is_err());
    }

    #[test]
    fn mean_and_variance_examples() {
        assert!((mu_n(2, 2) - 1.0 / 72.0).abs() < 1e-16);
        assert!((mu_n(4, 2) - 1.0 / 48.0).abs() < 1e-16);
        assert!((mu_n(3, 3) - 1.0 / 972.0).abs() < 1e-16);
        assert!(matches!(
            sigma2_exact(2, 2),
            Err(Error::DegenerateVariance { .. })
        ));
        assert!((sigma2_exact(4, 2).unwrap() - 396.0 / 12_960_000.0).abs() < 1e-18);
        assert!((sigma2_exact(4, 3).unwrap() - 2.0120e-7).abs() < 1e-10);
    }

    #[test]
    fn scaling_examples() {
        for mode in [
            ScalingMode::ExactFinite,
            ScalingMode::Asymptotic,
            ScalingMode::Paper,
        ] {
            assert!((scaling(4, 4, 2, mode).unwrap().nu - 0.125).abs() < 1e-15);
        }
        let s = scaling(4, 4, 2, ScalingMode::Asymptotic).unwrap();
        assert!((s.delta - (12.0f64 / 8100.0).sqrt()).abs() < 1e-15);
        assert!((s.delta - 0.0384900).abs() < 1e-7);
        assert!(matches!(
            scaling(2, 3, 2, ScalingMode::ExactFinite),
            Err(Error::DegenerateVariance { .. })
        ));
        let paper = scaling(20, 6, 4, ScalingMode::Paper).unwrap();
        let asym = scaling(20, 6, 4, ScalingMode::Asymptotic).unwrap();
        assert_eq!(paper, asym);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial_exact(4, 2), Some(6));
        assert_eq!(binomial_exact(256, 4), Some(174_792_640));
        assert_eq!(binomial(3, 5), 0.0);
        let big = binomial(5000, 3);
        assert!(close(big, 5000.0 * 4999.0 * 4998.0 / 6.0, 1e-12));
    }

    #[test]
    fn combined_examples() {
        assert_eq!(combined_statistic(&[1.3]), 1.3);
        assert!((combined_statistic(&[1.0, 1.0]) - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert_eq!(combined_statistic(&[0.7, -0.7]), 0.0);
    }

    #[test]
    fn p_value_and_decision_examples() {
        assert_eq!(p_value(0.0), 0.5);
        assert!((p_value(1.645) - 0.04998).abs() < 1e-5);
        assert!(decide(1.645, 0.05));
        assert!((normal_quantile(0.95) - 1.6448536).abs() < 1e-7);
        assert!((p_value(-3.0) - 0.998_650_101_968_369_9).abs() < 1e-12);
        assert!(!decide(-3.0, 0.05));
        let tail = p_value(3.0);
        assert!(
            (tail - 0.001_349_898_031_630_093_3).abs() < 1e-12,
            "{tail:e}"
        );
        assert!(close(
            binomial(400, 20),
            statrs::function::factorial::binomial(400, 20),
            1e-10
        ));
    }

    fn dataset(columns: Vec<Vec<f64>>) -> Dataset {
        Dataset::from_columns(columns).unwrap()
    }

    #[test]
    fn run_test_examples() {
        let data = dataset(vec![
            vec![0.1, 0.4, 0.3, 0.9, 0.5],
            vec![0.2, 0.1, 0.8, 0.6, 0.7],
        ]);
        let r = run_test(&data, 2, ScalingMode::ExactFinite, 0.05, TiePolicy::Error).unwrap();
        assert_eq!(r.t_bar, r.orders[0].z);
        let tiny = dataset(vec![vec![0.1, 0.2], vec![0.3, 0.1]]);
        for mode in [ScalingMode::ExactFinite, ScalingMode::Asymptotic] {
            assert!(matches!(
                run_test(&tiny, 2, mode, 0.05, TiePolicy::Error),
                Err(Error::InsufficientSample { .. })
            ));
        }
        let x: Vec<f64> = (0..64).map(|i| ((i * 37) % 64) as f64).collect();
        let same = dataset(vec![x.clone(), x]);
        let r = run_test(&same, 2, ScalingMode::ExactFinite, 0.05, TiePolicy::Error).unwrap();
        assert!(r.reject);
        assert!(r.orders[0].z > 10.0);
    }

    #[test]
    fn run_test_validates_arguments() {
        let data = dataset(vec![vec![0.1, 0.4, 0.3], vec![0.2, 0.1, 0.8]]);
        assert!(run_test(&data, 3, ScalingMode::ExactFinite, 0.05, TiePolicy::Error).is_err());
        assert!(run_test(&data, 2, ScalingMode::ExactFinite, 1.5, TiePolicy::Error).is_err());
    }

    #[test]
    fn asymptotic_variance_ratio() {
        let n = 10_000;
        let r2 = sigma2_exact(n, 2).unwrap() * 90f64.powi(2) / 2.0;
        assert!((r2 - 1.0).abs() < 1e-3);
    }

    fn ranks_strategy(max_n: usize, max_d: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
        (3..=max_n, 2..=max_d).prop_flat_map(|(n, d)| {
            let column = Just((1..=n).collect::<Vec<usize>>()).prop_shuffle();
            proptest::collection::vec(column, d)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn fast_matches_naive(cols in ranks_strategy(20, 8), m in 2usize..=4) {
            let table = table_from(&cols);
            let m = m.min(cols.len());
            let fast = t_statistic_fast(&table, m).unwrap();
            for k in 2..=m {
                let naive = t_statistic_naive(&table, k).unwrap();
                prop_assert!(close(fast[k - 2], naive, 1e-10), "k={} fast={} naive={}", k, fast[k - 2], naive);
            }
        }

        #[test]
        fn streaming_is_bit_identical(cols in ranks_strategy(20, 8), m in 2usize..=4) {
            let ranks = RankMatrix::from_columns(&cols).unwrap();
            let m = m.min(cols.len());
            let table = build_kernel_table(&ranks, false).unwrap();
            prop_assert_eq!(t_statistic_fast(&table, m).unwrap(), t_statistic_streaming(&ranks, m).unwrap());
        }

        #[test]
        fn subset_statistic_is_nonnegative(cols in ranks_strategy(16, 4)) {
            let table = table_from(&cols);
            let set: Vec<usize> = (0..cols.len()).collect();
            prop_assert!(subset_statistic(&table, &set).unwrap() >= -1e-12);
            prop_assert!(subset_statistic(&table, &set[..2]).unwrap() >= -1e-12);
        }

        #[test]
        fn decision_agrees_with_p_value(z in -6.0f64..6.0, alpha in 0.001f64..0.5) {
            let p = p_value(z);
            prop_assume!((p - alpha).abs() > 1e-12);
            prop_assert_eq!(decide(z, alpha), p < alpha);
        }

        #[test]
        fn row_and_column_permutations_leave_statistics_unchanged(
            cols in ranks_strategy(16, 6),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = cols[0].len();
            let d = cols.len();
            let m = d.min(4);
            let base = t_statistic_fast(&table_from(&cols), m).unwrap();

            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut rng);
            let permuted_rows: Vec<Vec<usize>> =
                cols.iter().map(|c| rows.iter().map(|&i| c[i]).collect()).collect();
            let by_rows = t_statistic_fast(&table_from(&permuted_rows), m).unwrap();

            let mut permuted_cols = cols.clone();
            permuted_cols.shuffle(&mut rng);
            let by_cols = t_statistic_fast(&table_from(&permuted_cols), m).unwrap();

            for k in 0..base.len() {
                prop_assert!((base[k] - by_rows[k]).abs() <= 1e-12 * base[k].abs().max(1.0));
                prop_assert!((base[k] - by_cols[k]).abs() <= 1e-12 * base[k].abs().max(1.0));
            }
        }

        #[test]
        fn monotone_transforms_leave_report_identical(
            cols in ranks_strategy(12, 4),
        ) {
            let raw: Vec<Vec<f64>> = cols.iter().map(|c| c.iter().map(|&r| r as f64 / 7.0).collect()).collect();
            let warped: Vec<Vec<f64>> = raw
                .iter()
                .enumerate()
                .map(|(p, c)| c.iter().map(|&x| if p % 2 == 0 { x.exp() } else { 3.0 * x.powi(3) - 1.0 }).collect())
                .collect();
            let m = cols.len().min(3);
            let a = run_test(&dataset(raw), m, ScalingMode::ExactFinite, 0.05, TiePolicy::Error).unwrap();
            let b = run_test(&dataset(warped), m, ScalingMode::ExactFinite, 0.05, TiePolicy::Error).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
