//! Column-wise max-ranks and the pairwise kernels every statistic is built from.
//!
//! For a column of ranks `R_1, ..., R_n` the raw kernel is
//!
//! ```text
//! I(i, j) = (2n+1)/(6n) + R_i(R_i-1)/(2n(n+1)) + R_j(R_j-1)/(2n(n+1)) - max(R_i, R_j)/(n+1)
//! ```
//!
//! and the centered kernel subtracts its expectation under a uniformly random
//! permutation: `1/6 - 1/(6n)` on the diagonal and `-1/(6n)` off it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default memory cap for a [`PairKernelTable`]: 2 GiB.
pub const DEFAULT_KERNEL_BUDGET_BYTES: u128 = 2 << 30;

/// An `n x d` matrix of finite observations; rows are samples, columns variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    /// column-major, `values[p * n + i]`
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from column-major storage.
    pub fn from_column_major(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || d < 2 {
            return Err(Error::InvalidDataset(format!(
                "need n >= 2 and d >= 2, got n = {n}, d = {d}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "expected {} values, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % n,
                col: pos / n,
            });
        }
        Ok(Self { n, d, values })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidDataset("ragged columns".into()));
        }
        Self::from_column_major(n, d, columns.concat())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidDataset("ragged rows".into()));
        }
        let mut values = vec![0.0; n * d];
        for (i, row) in rows.iter().enumerate() {
            for (p, &v) in row.iter().enumerate() {
                values[p * n + i] = v;
            }
        }
        Self::from_column_major(n, d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn column(&self, p: usize) -> &[f64] {
        &self.values[p * self.n..(p + 1) * self.n]
    }

    pub fn get(&self, i: usize, p: usize) -> f64 {
        self.values[p * self.n + i]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.d).map(|p| self.get(i, p)).collect()
    }

    /// New dataset with columns reordered so that column `q` of the result is
    /// column `order[q]` of `self`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Self> {
        let cols = order.iter().map(|&p| self.column(p).to_vec()).collect();
        Self::from_columns(cols)
    }

    /// New dataset with rows reordered so that row `r` of the result is row
    /// `order[r]` of `self`.
    pub fn permute_rows(&self, order: &[usize]) -> Result<Self> {
        let cols = (0..self.d)
            .map(|p| order.iter().map(|&i| self.get(i, p)).collect())
            .collect();
        Self::from_columns(cols)
    }
}

/// How ties inside a column are handled when ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// Refuse columns with duplicated values.
    #[default]
    Error,
    /// Break ties by assigning increasing ranks in increasing row order.
    ByRowIndex,
}

/// Column-wise ranks; every column is a permutation of `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankMatrix {
    n: usize,
    d: usize,
    ranks: Vec<u32>,
    tie_flags: Vec<bool>,
}

impl RankMatrix {
    /// Builds a rank matrix from columns of 1-based ranks, checking that each
    /// column is a permutation of `1..=n`.
    pub fn from_columns(columns: &[Vec<usize>]) -> Result<Self> {
        let d = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        if n < 2 || d < 1 {
            return Err(Error::InvalidDataset(format!(
                "rank matrix needs n >= 2 and d >= 1, got n = {n}, d = {d}"
            )));
        }
        let mut ranks = Vec::with_capacity(n * d);
        for col in columns {
            if col.len() != n {
                return Err(Error::InvalidDataset("ragged rank columns".into()));
            }
            let mut seen = vec![false; n];
            for &r in col {
                if r == 0 || r > n {
                    return Err(Error::InvalidRank { rank: r, n });
                }
                if std::mem::replace(&mut seen[r - 1], true) {
                    return Err(Error::InvalidDataset(format!(
                        "rank {r} repeated within a column"
                    )));
                }
                ranks.push(r as u32);
            }
        }
        Ok(Self {
            n,
            d,
            ranks,
            tie_flags: vec![false; d],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// 1-based rank of observation `i` in column `p` (both 0-based).
    #[inline]
    pub fn rank(&self, i: usize, p: usize) -> usize {
        self.ranks[p * self.n + i] as usize
    }

    pub fn column(&self, p: usize) -> &[u32] {
        &self.ranks[p * self.n..(p + 1) * self.n]
    }

    pub fn tie_flags(&self) -> &[bool] {
        &self.tie_flags
    }

    pub fn any_ties(&self) -> bool {
        self.tie_flags.iter().any(|&t| t)
    }

    /// Pseudo-observation `R_ip / (n + 1)`.
    pub fn pseudo_observation(&self, i: usize, p: usize) -> f64 {
        self.rank(i, p) as f64 / (self.n + 1) as f64
    }
}

/// Max-ranks `R_ip = #{j : X_jp <= X_ip}` of every column.
pub fn compute_ranks(data: &Dataset, tie_policy: TiePolicy) -> Result<RankMatrix> {
    let n = data.n();
    let d = data.d();
    let mut ranks = vec![0u32; n * d];
    let mut tie_flags = vec![false; d];
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for p in 0..d {
        let col = data.column(p);
        order.clear();
        order.extend(0..n);
        // stable: equal values keep row order
        order.sort_by(|&a, &b| col[a].partial_cmp(&col[b]).expect("finite values"));
        let tied = order.windows(2).any(|w| col[w[0]] == col[w[1]]);
        if tied {
            match tie_policy {
                TiePolicy::Error => return Err(Error::TiesPresent { column: p }),
                TiePolicy::ByRowIndex => tie_flags[p] = true,
            }
        }
        let out = &mut ranks[p * n..(p + 1) * n];
        for (pos, &i) in order.iter().enumerate() {
            out[i] = (pos + 1) as u32;
        }
    }
    Ok(RankMatrix {
        n,
        d,
        ranks,
        tie_flags,
    })
}

/// Expected value of the raw kernel under a uniformly random permutation.
#[inline]
pub fn kernel_mean(n: usize, diagonal: bool) -> f64 {
    let nf = n as f64;
    if diagonal {
        1.0 / 6.0 - 1.0 / (6.0 * nf)
    } else {
        -1.0 / (6.0 * nf)
    }
}

#[inline]
pub(crate) fn kernel_raw_unchecked(ri: usize, rj: usize, n: usize) -> f64 {
    let nf = n as f64;
    let half = 2.0 * nf * (nf + 1.0);
    let quad = |r: f64| r * (r - 1.0) / half;
    // fixed operand order keeps the value bitwise symmetric
    let (lo, hi) = (ri.min(rj) as f64, ri.max(rj) as f64);
    (2.0 * nf + 1.0) / (6.0 * nf) + quad(lo) + quad(hi) - hi / (nf + 1.0)
}

/// Per-rank pieces of the raw kernel, tabulated once per sample size.
///
/// `raw(a, b)` performs the same floating-point operations in the same order
/// as [`kernel_raw`], so both give bit-identical values.
#[derive(Debug, Clone)]
pub(crate) struct KernelTerms {
    constant: f64,
    quad: Vec<f64>,
    lin: Vec<f64>,
}

impl KernelTerms {
    pub(crate) fn new(n: usize) -> Self {
        let nf = n as f64;
        let half = 2.0 * nf * (nf + 1.0);
        let quad = (0..=n)
            .map(|r| {
                let r = r as f64;
                r * (r - 1.0) / half
            })
            .collect();
        let lin = (0..=n).map(|r| r as f64 / (nf + 1.0)).collect();
        KernelTerms {
            constant: (2.0 * nf + 1.0) / (6.0 * nf),
            quad,
            lin,
        }
    }

    #[inline]
    pub(crate) fn raw(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        self.constant + self.quad[lo] + self.quad[hi] - self.lin[hi]
    }
}

fn check_rank(r: usize, n: usize) -> Result<()> {
    if r == 0 || r > n {
        Err(Error::InvalidRank { rank: r, n })
    } else {
        Ok(())
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidArgument(format!(
            "sample size must be >= 2, got {n}"
        )))
    } else {
        Ok(())
    }
}

/// Raw Cramér-von Mises kernel for two ranks of the same column.
pub fn kernel_raw(ri: usize, rj: usize, n: usize) -> Result<f64> {
    check_n(n)?;
    check_rank(ri, n)?;
    check_rank(rj, n)?;
    Ok(kernel_raw_unchecked(ri, rj, n))
}

/// Raw kernel minus its null expectation; `diagonal` tells whether `i == j`.
pub fn kernel_centered(ri: usize, rj: usize, n: usize, diagonal: bool) -> Result<f64> {
    Ok(kernel_raw(ri, rj, n)? - kernel_mean(n, diagonal))
}

/// Index of the unordered pair `i <= j` in row-major upper-triangular order.
#[inline]
pub(crate) fn pair_index(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows 0..i hold n, n-1, ..., n-i+1 entries
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// Precomputed kernel values for all pairs `i <= j` and every column.
///
/// Storage is pair-major: the `d` values belonging to one pair are contiguous,
/// which is the access pattern of the subset sums.
#[derive(Debug, Clone, PartialEq)]
pub struct PairKernelTable {
    n: usize,
    d: usize,
    centered: bool,
    values: Vec<f64>,
}

impl PairKernelTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Kernel value of column `p` at the pair `(i, j)` (0-based, any order).
    pub fn get(&self, i: usize, j: usize, p: usize) -> f64 {
        self.values[pair_index(i, j, self.n) * self.d + p]
    }

    /// All `d` kernel values of the pair `(i, j)`.
    pub fn pair(&self, i: usize, j: usize) -> &[f64] {
        let k = pair_index(i, j, self.n) * self.d;
        &self.values[k..k + self.d]
    }

    pub fn memory_bytes(&self) -> usize {
        self.values.len() * std::mem::size_of::<f64>()
    }
}

/// Bytes needed by a kernel table for `n` observations and `d` columns.
pub fn kernel_table_bytes(n: usize, d: usize) -> u128 {
    let pairs = n as u128 * (n as u128 + 1) / 2;
    pairs * d as u128 * std::mem::size_of::<f64>() as u128
}

pub fn build_kernel_table(ranks: &RankMatrix, centered: bool) -> Result<PairKernelTable> {
    build_kernel_table_with_budget(ranks, centered, DEFAULT_KERNEL_BUDGET_BYTES)
}

/// Builds the kernel table, refusing when it would exceed `budget_bytes`.
pub fn build_kernel_table_with_budget(
    ranks: &RankMatrix,
    centered: bool,
    budget_bytes: u128,
) -> Result<PairKernelTable> {
    let n = ranks.n();
    let d = ranks.d();
    let required = kernel_table_bytes(n, d);
    if required > budget_bytes {
        return Err(Error::CapacityExceeded {
            required,
            budget: budget_bytes,
        });
    }
    let mean_diag = kernel_mean(n, true);
    let mean_off = kernel_mean(n, false);
    let terms = KernelTerms::new(n);
    let mut values = Vec::with_capacity(n * (n + 1) / 2 * d);
    for i in 0..n {
        for j in i..n {
            for p in 0..d {
                let v = terms.raw(ranks.rank(i, p), ranks.rank(j, p));
                values.push(match (centered, i == j) {
                    (false, _) => v,
                    (true, true) => v - mean_diag,
                    (true, false) => v - mean_off,
                });
            }
        }
    }
    Ok(PairKernelTable {
        n,
        d,
        centered,
        values,
    })
}

/// Grid cdf `U_n(t) = min(floor((n+1) t) / n, 1)` of the uniform law on
/// `{1/(n+1), ..., n/(n+1)}`.
pub fn grid_cdf(n: usize, t: f64) -> f64 {
    let steps = ((n + 1) as f64 * t).floor();
    (steps / n as f64).min(1.0)
}

/// Moebius-transformed empirical copula process, centered under independence,
/// evaluated at `u` for the column set `set` (0-based column indices).
pub fn moebius_process_eval(ranks: &RankMatrix, set: &[usize], u: &[f64]) -> Result<f64> {
    check_index_set(set, ranks.d())?;
    if u.len() != set.len() {
        return Err(Error::InvalidArgument(format!(
            "point has {} coordinates, index set has {}",
            u.len(),
            set.len()
        )));
    }
    if u.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::InvalidArgument("point must lie in [0, 1]".into()));
    }
    let n = ranks.n();
    // 1{R/(n+1) <= u} <=> R <= floor((n+1) u) for integer R
    let thresholds: Vec<f64> = u.iter().map(|&t| ((n + 1) as f64 * t).floor()).collect();
    let centers: Vec<f64> = u.iter().map(|&t| grid_cdf(n, t)).collect();
    let mut total = 0.0;
    for i in 0..n {
        let mut prod = 1.0;
        for (q, &p) in set.iter().enumerate() {
            let ind = if (ranks.rank(i, p) as f64) <= thresholds[q] {
                1.0
            } else {
                0.0
            };
            prod *= ind - centers[q];
        }
        total += prod;
    }
    Ok(total / (n as f64).sqrt())
}

/// Checks that `set` holds at least two distinct column indices below `d`.
pub(crate) fn check_index_set(set: &[usize], d: usize) -> Result<()> {
    if set.len() < 2 {
        return Err(Error::BadIndexSet(format!(
            "index set needs at least two columns, got {}",
            set.len()
        )));
    }
    if let Some(&p) = set.iter().find(|&&p| p >= d) {
        return Err(Error::BadIndexSet(format!(
            "column {p} out of range 0..{d}"
        )));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadIndexSet("repeated column index".into()));
    }
    Ok(())
}
