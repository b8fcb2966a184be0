//! Exact moments of rank kernels under independence, and an exhaustive
//! enumeration oracle that checks them.
//!
//! Everything here is computed in exact rational arithmetic. Closed forms are
//! rational functions of `n`; the oracle averages the defining expression over
//! every permutation of the ranks (or every joint configuration of several
//! independent columns) so that "equal" means equal.
//!
//! Notation for the `B` family (all ranks from one column, `q(r) = r(r-1)/(n(n+1))`,
//! `m(a, b) = max(a, b)/(n+1)`, `u(r) = r/(n+1)`):
//!
//! | id       | expectation            |
//! |----------|------------------------|
//! | `B1`     | `q(R1)`                |
//! | `B12`    | `m(R1, R2)`            |
//! | `B11`    | `u(R1)`                |
//! | `B11_up` | `q(R1)^2`              |
//! | `B12_up` | `q(R1) q(R2)`          |
//! | `B1_23`  | `q(R1) m(R2, R3)`      |
//! | `B1_11`  | `q(R1) u(R1)`          |
//! | `B1_12`  | `q(R1) m(R1, R2)`      |
//! | `B1_22`  | `q(R1) u(R2)`          |
//! | `B11_11` | `u(R1)^2`              |
//! | `B11_12` | `u(R1) m(R1, R2)`      |
//! | `B11_22` | `u(R1) u(R2)`          |
//! | `B11_23` | `u(R1) m(R2, R3)`      |
//! | `B12_12` | `m(R1, R2)^2`          |
//! | `B12_34` | `m(R1, R2) m(R3, R4)`  |
//! | `B12_23` | `m(R1, R2) m(R2, R3)`  |
//!
//! `Ctilde_abcd` is `E[I(a, b) I(c, d)]` for the raw kernel, `Phi2_*` the
//! covariances of the centered kernel, `Mu(k)` and `Sigma2(k)` the mean and
//! variance of the subset statistic for `|A| = k` independent columns.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact rational in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Largest `n` for single-column enumeration (`n!` permutations).
pub const MAX_SINGLE_COLUMN_N: usize = 6;

/// Largest number of joint configurations `(n!)^k` the oracle enumerates.
pub const MAX_JOINT_CONFIGURATIONS: u128 = 1_000;

fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Decimal approximation of an exact rational.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Patterns of index coincidence for second moments of the centered kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phi2Pattern {
    /// `Cov(I~(1,2), I~(3,4))`
    FourDistinct,
    /// `Cov(I~(1,2), I~(2,3))`
    ThreeDistinct,
    /// `Var(I~(1,2))`
    TwoDistinct,
    /// `Var(I~(1,1))`
    DiagEqual,
    /// `Cov(I~(1,1), I~(2,2))`
    DiagDistinct,
}

impl Phi2Pattern {
    pub fn required_indices(self) -> usize {
        match self {
            Phi2Pattern::FourDistinct => 4,
            Phi2Pattern::ThreeDistinct => 3,
            Phi2Pattern::TwoDistinct | Phi2Pattern::DiagDistinct => 2,
            Phi2Pattern::DiagEqual => 1,
        }
    }
}

/// Every moment the catalog knows a closed form for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MomentId {
    B1,
    B12,
    B11,
    B11Up,
    B12Up,
    B1_23,
    B1_11,
    B1_12,
    B1_22,
    B11_11,
    B11_12,
    B11_22,
    B11_23,
    B12_12,
    B12_34,
    B12_23,
    Ctilde1234,
    Ctilde1123,
    Ctilde1223,
    Ctilde1122,
    Ctilde1212,
    Ctilde1112,
    Ctilde1111,
    Phi2(Phi2Pattern),
    MeanIDiag,
    MeanIOffdiag,
    Mu(usize),
    Sigma2(usize),
}

impl MomentId {
    /// All single-column ids, in catalog order.
    pub const SINGLE_COLUMN: [MomentId; 30] = [
        MomentId::B1,
        MomentId::B12,
        MomentId::B11,
        MomentId::B11Up,
        MomentId::B12Up,
        MomentId::B1_23,
        MomentId::B1_11,
        MomentId::B1_12,
        MomentId::B1_22,
        MomentId::B11_11,
        MomentId::B11_12,
        MomentId::B11_22,
        MomentId::B11_23,
        MomentId::B12_12,
        MomentId::B12_34,
        MomentId::B12_23,
        MomentId::Ctilde1234,
        MomentId::Ctilde1123,
        MomentId::Ctilde1223,
        MomentId::Ctilde1122,
        MomentId::Ctilde1212,
        MomentId::Ctilde1112,
        MomentId::Ctilde1111,
        MomentId::Phi2(Phi2Pattern::FourDistinct),
        MomentId::Phi2(Phi2Pattern::ThreeDistinct),
        MomentId::Phi2(Phi2Pattern::TwoDistinct),
        MomentId::Phi2(Phi2Pattern::DiagEqual),
        MomentId::Phi2(Phi2Pattern::DiagDistinct),
        MomentId::MeanIDiag,
        MomentId::MeanIOffdiag,
    ];

    /// Number of distinct observation indices the defining expectation involves.
    pub fn required_indices(&self) -> usize {
        use MomentId::*;
        match self {
            B1 | B11 | B11Up | B1_11 | B11_11 | Ctilde1111 | MeanIDiag => 1,
            B12 | B12Up | B1_12 | B1_22 | B11_12 | B11_22 | B12_12 | Ctilde1122 | Ctilde1212
            | Ctilde1112 | MeanIOffdiag => 2,
            B1_23 | B11_23 | B12_23 | Ctilde1123 | Ctilde1223 => 3,
            B12_34 | Ctilde1234 => 4,
            Phi2(p) => p.required_indices(),
            Mu(_) | Sigma2(_) => 2,
        }
    }

    /// Number of independent columns the moment involves.
    pub fn columns(&self) -> usize {
        match self {
            MomentId::Mu(k) | MomentId::Sigma2(k) => *k,
            _ => 1,
        }
    }

    pub fn name(&self) -> String {
        use MomentId::*;
        match self {
            B1 => "B1".into(),
            B12 => "B12".into(),
            B11 => "B11".into(),
            B11Up => "B11_up".into(),
            B12Up => "B12_up".into(),
            B1_23 => "B1_23".into(),
            B1_11 => "B1_11".into(),
            B1_12 => "B1_12".into(),
            B1_22 => "B1_22".into(),
            B11_11 => "B11_11".into(),
            B11_12 => "B11_12".into(),
            B11_22 => "B11_22".into(),
            B11_23 => "B11_23".into(),
            B12_12 => "B12_12".into(),
            B12_34 => "B12_34".into(),
            B12_23 => "B12_23".into(),
            Ctilde1234 => "Ctilde_1234".into(),
            Ctilde1123 => "Ctilde_1123".into(),
            Ctilde1223 => "Ctilde_1223".into(),
            Ctilde1122 => "Ctilde_1122".into(),
            Ctilde1212 => "Ctilde_1212".into(),
            Ctilde1112 => "Ctilde_1112".into(),
            Ctilde1111 => "Ctilde_1111".into(),
            Phi2(Phi2Pattern::FourDistinct) => "Phi2_size4".into(),
            Phi2(Phi2Pattern::ThreeDistinct) => "Phi2_size3".into(),
            Phi2(Phi2Pattern::TwoDistinct) => "Phi2_size2".into(),
            Phi2(Phi2Pattern::DiagEqual) => "Phi2_diag_eq".into(),
            Phi2(Phi2Pattern::DiagDistinct) => "Phi2_diag_ne".into(),
            MeanIDiag => "MeanI_diag".into(),
            MeanIOffdiag => "MeanI_offdiag".into(),
            Mu(k) => format!("Mu({k})"),
            Sigma2(k) => format!("Sigma2({k})"),
        }
    }

    /// Parses a catalog name; `Mu` and `Sigma2` need the order `k`.
    pub fn parse(name: &str, k: Option<usize>) -> Result<Self> {
        let need_k = |k: Option<usize>| {
            k.filter(|&k| k >= 2)
                .ok_or_else(|| Error::InvalidArgument(format!("{name} needs an order k >= 2")))
        };
        match name {
            "Mu" => Ok(MomentId::Mu(need_k(k)?)),
            "Sigma2" => Ok(MomentId::Sigma2(need_k(k)?)),
            other => other.parse(),
        }
    }
}

impl fmt::Display for MomentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for MomentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(id) = MomentId::SINGLE_COLUMN.iter().find(|id| id.name() == s) {
            return Ok(*id);
        }
        let order = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?.strip_suffix(')')?.parse().ok()
        };
        if let Some(k) = order("Mu(").filter(|&k| k >= 2) {
            return Ok(MomentId::Mu(k));
        }
        if let Some(k) = order("Sigma2(").filter(|&k| k >= 2) {
            return Ok(MomentId::Sigma2(k));
        }
        Err(Error::InvalidArgument(format!("unknown moment id {s:?}")))
    }
}

/// `E[I(i, j)]` under a uniformly random permutation.
pub fn kernel_mean_exact(n: usize, diagonal: bool) -> Rational {
    let n = n as i64;
    if diagonal {
        rat(1, 6) - rat(1, 6 * n)
    } else {
        rat(-1, 6 * n)
    }
}

/// `mu_n(k) = (1/6 - 1/(6n))^k + (n-1)(-1/(6n))^k`.
pub fn mu_exact(n: usize, k: usize) -> Rational {
    let diag = kernel_mean_exact(n, true);
    let off = kernel_mean_exact(n, false);
    pow(&diag, k) + int(n as i64 - 1) * pow(&off, k)
}

fn pow(r: &Rational, k: usize) -> Rational {
    num_traits::pow(r.clone(), k)
}

/// `E[I(i1, i2) I(i3, i4)]` for the seven index-coincidence patterns.
fn ctilde(id: MomentId, n: i64) -> Rational {
    let den = 180 * n * n * (n + 1);
    match id {
        MomentId::Ctilde1234 => rat(1, 20 * n * n),
        MomentId::Ctilde1123 => rat(-(5 * n * n - 2 * n - 9), den),
        MomentId::Ctilde1223 => rat(-(2 * n * n - 8 * n - 9), den),
        MomentId::Ctilde1122 => rat(5 * n * n * n - 6 * n * n - 5 * n + 9, den),
        MomentId::Ctilde1212 => rat(2 * n * n * n - 6 * n * n + 7 * n + 9, den),
        MomentId::Ctilde1112 => rat(-(2 * n * n - 3), 60 * n * n * (n + 1)),
        MomentId::Ctilde1111 => rat((n - 1) * (2 * n * n - 3), 60 * n * n * (n + 1)),
        _ => unreachable!("not a Ctilde id"),
    }
}

/// Variance of the subset statistic for `|A| = k`, assembled from the
/// covariances of kernel products over the five index-coincidence classes of
/// quadruples `(i1, i2, i3, i4)`.
pub fn sigma2_decomposition(n: usize, k: usize) -> Rational {
    let nn = n as i64;
    let bd = kernel_mean_exact(n, true);
    let bo = kernel_mean_exact(n, false);
    let cov = |id: MomentId, b1: &Rational, b2: &Rational| -> Rational {
        pow(&ctilde(id, nn), k) - pow(b1, k) * pow(b2, k)
    };
    let c1234 = cov(MomentId::Ctilde1234, &bo, &bo);
    let c1123 = cov(MomentId::Ctilde1123, &bd, &bo);
    let c1223 = cov(MomentId::Ctilde1223, &bo, &bo);
    let c1112 = cov(MomentId::Ctilde1112, &bd, &bo);
    let c1122 = cov(MomentId::Ctilde1122, &bd, &bd);
    let c1212 = cov(MomentId::Ctilde1212, &bo, &bo);
    let c1111 = cov(MomentId::Ctilde1111, &bd, &bd);

    let four = int(nn * (nn - 1) * (nn - 2) * (nn - 3));
    let three = int(nn * (nn - 1) * (nn - 2));
    let two = int(nn * (nn - 1));
    let total = four * c1234
        + three * (int(2) * c1123 + int(4) * c1223)
        + two * (int(4) * c1112 + c1122 + int(2) * c1212)
        + int(nn) * c1111;
    total / int(nn * nn)
}

/// The two closed-form variance polynomials available for `k = 2` and `k = 3`.
pub fn sigma2_polynomial(n: usize, k: usize) -> Option<Rational> {
    let n = BigInt::from(n);
    let one = BigInt::one();
    let two = BigInt::from(2);
    match k {
        2 => {
            let num = (&n - &two).pow(2) * (&n - &one) * (BigInt::from(8) * &n + &one);
            let den = BigInt::from(32400) * n.pow(2) * (&n + &one).pow(2);
            Some(Rational::new(num, den))
        }
        3 => {
            let poly = BigInt::from(16) * n.pow(5) - BigInt::from(96) * n.pow(4)
                + BigInt::from(359) * n.pow(3)
                - BigInt::from(269) * n.pow(2)
                - BigInt::from(963) * &n
                - BigInt::from(370);
            let num = (&n - &two) * (&n - &one) * poly;
            let den = BigInt::from(5_832_000) * n.pow(4) * (&n + &one).pow(3);
            Some(Rational::new(num, den))
        }
        _ => None,
    }
}

/// Closed-form second moment of the centered kernel for one pattern.
pub fn phi2(pattern: Phi2Pattern, n: usize) -> Result<Rational> {
    if n < pattern.required_indices().max(2) {
        return Err(Error::PatternInfeasible {
            id: MomentId::Phi2(pattern).name(),
            required: pattern.required_indices(),
            n,
        });
    }
    Ok(phi2_formula(pattern, n as i64))
}

fn phi2_formula(pattern: Phi2Pattern, n: i64) -> Rational {
    match pattern {
        Phi2Pattern::FourDistinct => rat(1, 45 * n * n),
        Phi2Pattern::ThreeDistinct => rat(-(2 * n * n - 3 * n - 4), 180 * n * n * (n + 1)),
        Phi2Pattern::TwoDistinct => rat((n - 2) * (n * n - n - 1), 90 * n * n * (n + 1)),
        Phi2Pattern::DiagEqual => rat((n - 2) * (n - 1) * (n + 2), 180 * n * n * (n + 1)),
        Phi2Pattern::DiagDistinct => rat(-(n - 2) * (n + 2), 180 * n * n * (n + 1)),
    }
}

/// Exact closed form of a catalog entry.
///
/// Formulas are rational functions of `n` and are evaluated for every `n >= 2`
/// that leaves at most one required index without a distinct value; the
/// enumeration oracle only checks fully feasible `n`.
pub fn moment_closed_form(id: MomentId, n: usize) -> Result<Rational> {
    let required = id.required_indices();
    if n < 2 || n + 1 < required {
        return Err(Error::PatternInfeasible {
            id: id.name(),
            required,
            n,
        });
    }
    let nn = n as i64;
    use MomentId::*;
    let value = match id {
        B1 => rat(nn - 1, 3 * nn),
        B12 => rat(2, 3),
        B11 => rat(1, 2),
        B11Up => rat((nn - 1) * (3 * nn * nn - 2), 15 * nn * nn * (nn + 1)),
        B12Up => rat((nn - 2) * (5 * nn * nn + nn - 3), 45 * nn * nn * (nn + 1)),
        B1_23 => rat(20 * nn * nn - 8 * nn - 21, 90 * nn * (nn + 1)),
        B1_11 => rat((nn - 1) * (3 * nn + 2), 12 * nn * (nn + 1)),
        B1_12 => rat(16 * nn * nn - 5 * nn - 14, 60 * nn * (nn + 1)),
        B1_22 => rat(2 * nn * nn - nn - 2, 12 * nn * (nn + 1)),
        B11_11 => rat(2 * nn + 1, 6 * (nn + 1)),
        B11_12 => rat(3 * nn + 2, 8 * (nn + 1)),
        B11_22 => rat(3 * nn + 2, 12 * (nn + 1)),
        B11_23 => rat(4 * nn + 3, 12 * (nn + 1)),
        B12_12 => rat(3 * nn + 2, 6 * (nn + 1)),
        B12_34 => rat(4 * (5 * nn + 4), 45 * (nn + 1)),
        B12_23 => rat(7 * (4 * nn + 3), 60 * (nn + 1)),
        Ctilde1234 | Ctilde1123 | Ctilde1223 | Ctilde1122 | Ctilde1212 | Ctilde1112
        | Ctilde1111 => ctilde(id, nn),
        Phi2(p) => phi2_formula(p, nn),
        MeanIDiag => kernel_mean_exact(n, true),
        MeanIOffdiag => kernel_mean_exact(n, false),
        Mu(k) => {
            check_order(k)?;
            mu_exact(n, k)
        }
        Sigma2(k) => {
            check_order(k)?;
            sigma2_polynomial(n, k).unwrap_or_else(|| sigma2_decomposition(n, k))
        }
    };
    Ok(value)
}

fn check_order(k: usize) -> Result<()> {
    if k < 2 {
        Err(Error::InvalidOrder(format!("order must be >= 2, got {k}")))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Enumeration oracle
// ---------------------------------------------------------------------------

/// All permutations of `1..=n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (1..=n).collect();
    let mut out = vec![current.clone()];
    // next lexicographic permutation
    while let Some(i) = (0..n.saturating_sub(1))
        .rev()
        .find(|&i| current[i] < current[i + 1])
    {
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
        out.push(current.clone());
    }
    out
}

/// Exact raw kernel `I(a, b)` for ranks `a, b` of a sample of size `n`.
pub fn kernel_exact(a: usize, b: usize, n: usize) -> Rational {
    let (a, b, n) = (a as i64, b as i64, n as i64);
    rat(2 * n + 1, 6 * n) + rat(a * (a - 1) + b * (b - 1), 2 * n * (n + 1)) - rat(a.max(b), n + 1)
}

/// Exact centered kernel.
pub fn kernel_centered_exact(a: usize, b: usize, n: usize, diagonal: bool) -> Rational {
    kernel_exact(a, b, n) - kernel_mean_exact(n, diagonal)
}

/// Expectation of `f(ranks)` when `ranks` is a uniformly random permutation of
/// `1..=n`; `f` receives the rank vector (index 0 is observation 1).
pub fn expect_single_column<F>(n: usize, f: F) -> Result<Rational>
where
    F: Fn(&[usize]) -> Rational,
{
    if n > MAX_SINGLE_COLUMN_N {
        return Err(Error::EnumerationTooLarge {
            configurations: factorial(n),
        });
    }
    let perms = permutations(n);
    let count = perms.len();
    let total = perms
        .iter()
        .fold(Rational::zero(), |acc, perm| acc + f(perm));
    Ok(total / int(count as i64))
}

fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Exact mean and variance of the subset statistic with `k` independent
/// columns, by enumerating all `(n!)^k` joint rank configurations.
pub fn subset_statistic_moments(n: usize, k: usize) -> Result<(Rational, Rational)> {
    check_order(k)?;
    let configurations = factorial(n).checked_pow(k as u32).unwrap_or(u128::MAX);
    if configurations > MAX_JOINT_CONFIGURATIONS {
        return Err(Error::EnumerationTooLarge { configurations });
    }
    let perms = permutations(n);
    // kernel matrix of each single-column configuration
    let kernels: Vec<Vec<Rational>> = perms
        .iter()
        .map(|perm| {
            let mut m = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    m.push(kernel_exact(perm[i], perm[j], n));
                }
            }
            m
        })
        .collect();
    let np = perms.len();
    let mut sum = Rational::zero();
    let mut sum_sq = Rational::zero();
    let mut idx = vec![0usize; k];
    let n_inv = rat(1, n as i64);
    loop {
        let mut s = Rational::zero();
        #[allow(clippy::needless_range_loop)] // indexes several kernels per cell
        for cell in 0..n * n {
            s += idx
                .iter()
                .fold(Rational::one(), |p, &c| p * &kernels[c][cell]);
        }
        s *= &n_inv;
        sum_sq += &s * &s;
        sum += s;
        // odometer over the k columns
        let mut pos = 0;
        while pos < k {
            idx[pos] += 1;
            if idx[pos] < np {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    let count = int(configurations as i64);
    let mean = sum / &count;
    let var = sum_sq / &count - &mean * &mean;
    Ok((mean, var))
}

/// Exact value of a catalog moment obtained by exhaustive enumeration of its
/// defining expectation; independent of [`moment_closed_form`].
pub fn brute_force_moment(id: MomentId, n: usize) -> Result<Rational> {
    let required = id.required_indices();
    if n < required.max(2) {
        return Err(Error::PatternInfeasible {
            id: id.name(),
            required,
            n,
        });
    }
    let nn = n as i64;
    let q = |r: usize| rat((r * (r - 1)) as i64, nn * (nn + 1));
    let u = |r: usize| rat(r as i64, nn + 1);
    let m = |a: usize, b: usize| rat(a.max(b) as i64, nn + 1);
    let raw = |a: usize, b: usize| kernel_exact(a, b, n);
    let cen = |a: usize, b: usize, diag: bool| kernel_centered_exact(a, b, n, diag);
    use MomentId::*;
    match id {
        B1 => expect_single_column(n, |r| q(r[0])),
        B12 => expect_single_column(n, |r| m(r[0], r[1])),
        B11 => expect_single_column(n, |r| u(r[0])),
        B11Up => expect_single_column(n, |r| q(r[0]) * q(r[0])),
        B12Up => expect_single_column(n, |r| q(r[0]) * q(r[1])),
        B1_23 => expect_single_column(n, |r| q(r[0]) * m(r[1], r[2])),
        B1_11 => expect_single_column(n, |r| q(r[0]) * u(r[0])),
        B1_12 => expect_single_column(n, |r| q(r[0]) * m(r[0], r[1])),
        B1_22 => expect_single_column(n, |r| q(r[0]) * u(r[1])),
        B11_11 => expect_single_column(n, |r| u(r[0]) * u(r[0])),
        B11_12 => expect_single_column(n, |r| u(r[0]) * m(r[0], r[1])),
        B11_22 => expect_single_column(n, |r| u(r[0]) * u(r[1])),
        B11_23 => expect_single_column(n, |r| u(r[0]) * m(r[1], r[2])),
        B12_12 => expect_single_column(n, |r| m(r[0], r[1]) * m(r[0], r[1])),
        B12_34 => expect_single_column(n, |r| m(r[0], r[1]) * m(r[2], r[3])),
        B12_23 => expect_single_column(n, |r| m(r[0], r[1]) * m(r[1], r[2])),
        Ctilde1234 => expect_single_column(n, |r| raw(r[0], r[1]) * raw(r[2], r[3])),
        Ctilde1123 => expect_single_column(n, |r| raw(r[0], r[0]) * raw(r[1], r[2])),
        Ctilde1223 => expect_single_column(n, |r| raw(r[0], r[1]) * raw(r[1], r[2])),
        Ctilde1122 => expect_single_column(n, |r| raw(r[0], r[0]) * raw(r[1], r[1])),
        Ctilde1212 => expect_single_column(n, |r| raw(r[0], r[1]) * raw(r[0], r[1])),
        Ctilde1112 => expect_single_column(n, |r| raw(r[0], r[0]) * raw(r[0], r[1])),
        Ctilde1111 => expect_single_column(n, |r| raw(r[0], r[0]) * raw(r[0], r[0])),
        // centered kernels have mean zero, so the covariance is E[product]
        Phi2(Phi2Pattern::FourDistinct) => {
            expect_single_column(n, |r| cen(r[0], r[1], false) * cen(r[2], r[3], false))
        }
        Phi2(Phi2Pattern::ThreeDistinct) => {
            expect_single_column(n, |r| cen(r[0], r[1], false) * cen(r[1], r[2], false))
        }
        Phi2(Phi2Pattern::TwoDistinct) => {
            expect_single_column(n, |r| cen(r[0], r[1], false) * cen(r[0], r[1], false))
        }
        Phi2(Phi2Pattern::DiagEqual) => {
            expect_single_column(n, |r| cen(r[0], r[0], true) * cen(r[0], r[0], true))
        }
        Phi2(Phi2Pattern::DiagDistinct) => {
            expect_single_column(n, |r| cen(r[0], r[0], true) * cen(r[1], r[1], true))
        }
        MeanIDiag => expect_single_column(n, |r| raw(r[0], r[0])),
        MeanIOffdiag => expect_single_column(n, |r| raw(r[0], r[1])),
        Mu(k) => subset_statistic_moments(n, k).map(|(mean, _)| mean),
        Sigma2(k) => subset_statistic_moments(n, k).map(|(_, var)| var),
    }
}

/// One identity confirmed by [`verify_catalog`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckedIdentity {
    pub id: String,
    pub n: usize,
    pub value: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CatalogReport {
    pub checked: Vec<CheckedIdentity>,
    /// `(id, n)` combinations outside the oracle's reach.
    pub skipped: Vec<(String, usize)>,
}

/// Ids checked by [`verify_catalog`]: the single-column catalog plus the
/// subset-statistic mean and variance for `k = 2, 3`.
pub fn catalog_ids() -> Vec<MomentId> {
    let mut ids = MomentId::SINGLE_COLUMN.to_vec();
    ids.extend([
        MomentId::Mu(2),
        MomentId::Sigma2(2),
        MomentId::Mu(3),
        MomentId::Sigma2(3),
    ]);
    ids
}

fn within_oracle_reach(id: MomentId, n: usize) -> bool {
    if n < id.required_indices().max(2) {
        return false;
    }
    match id {
        MomentId::Mu(k) | MomentId::Sigma2(k) => factorial(n)
            .checked_pow(k as u32)
            .is_some_and(|c| c <= MAX_JOINT_CONFIGURATIONS),
        _ => n <= MAX_SINGLE_COLUMN_N,
    }
}

/// Checks every catalog closed form against enumeration at each `n` in
/// `n_range` where the oracle is feasible.
pub fn verify_catalog(n_range: &[usize]) -> Result<CatalogReport> {
    verify_catalog_with(n_range, &catalog_ids(), moment_closed_form)
}

/// [`verify_catalog`] with an explicit id list and closed-form provider.
pub fn verify_catalog_with<F>(
    n_range: &[usize],
    ids: &[MomentId],
    closed_form: F,
) -> Result<CatalogReport>
where
    F: Fn(MomentId, usize) -> Result<Rational>,
{
    let mut report = CatalogReport::default();
    for &n in n_range {
        for &id in ids {
            if !within_oracle_reach(id, n) {
                report.skipped.push((id.name(), n));
                continue;
            }
            let expected = closed_form(id, n)?;
            let enumerated = brute_force_moment(id, n)?;
            if expected != enumerated {
                return Err(Error::MismatchFound {
                    id: id.name(),
                    n,
                    closed_form: expected.to_string(),
                    brute_force: enumerated.to_string(),
                });
            }
            report.checked.push(CheckedIdentity {
                id: id.name(),
                n,
                value: expected.to_string(),
            });
        }
    }
    Ok(report)
}

/// `true` when `r` is in lowest terms with a positive denominator.
pub fn is_normalized(r: &Rational) -> bool {
    use num_integer::Integer;
    r.denom().is_positive() && r.numer().gcd(r.denom()).is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> Rational {
        rat(num, den)
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(moment_closed_form(MomentId::B1, 3).unwrap(), r(2, 9));
        for n in [2, 7, 40] {
            assert_eq!(moment_closed_form(MomentId::B12, n).unwrap(), r(2, 3));
        }
        assert_eq!(
            moment_closed_form(MomentId::Ctilde1234, 10).unwrap(),
            r(1, 2000)
        );
        assert_eq!(moment_closed_form(MomentId::Mu(2), 4).unwrap(), r(1, 48));
        assert_eq!(
            moment_closed_form(MomentId::Phi2(Phi2Pattern::FourDistinct), 3).unwrap(),
            r(1, 405)
        );
    }

    #[test]
    fn closed_form_rejects_infeasible_patterns() {
        assert!(matches!(
            moment_closed_form(MomentId::Ctilde1234, 2),
            Err(Error::PatternInfeasible { required: 4, .. })
        ));
        assert!(moment_closed_form(MomentId::B1, 1).is_err());
    }

    #[test]
    fn phi2_examples() {
        assert_eq!(phi2(Phi2Pattern::FourDistinct, 4).unwrap(), r(1, 720));
        assert_eq!(phi2(Phi2Pattern::TwoDistinct, 3).unwrap(), r(5, 3240));
        assert_eq!(phi2(Phi2Pattern::DiagEqual, 3).unwrap(), r(1, 648));
        assert!(matches!(
            phi2(Phi2Pattern::FourDistinct, 3),
            Err(Error::PatternInfeasible { .. })
        ));
        assert!(phi2(Phi2Pattern::ThreeDistinct, 2).is_err());
    }

    #[test]
    fn phi2_three_distinct_is_negative() {
        for n in 3..200 {
            assert!(phi2(Phi2Pattern::ThreeDistinct, n).unwrap().is_negative());
        }
    }

    #[test]
    fn phi2_matches_ctilde_minus_squared_mean() {
        for n in 4..30 {
            let bo = kernel_mean_exact(n, false);
            let bd = kernel_mean_exact(n, true);
            let c = |id| moment_closed_form(id, n).unwrap();
            assert_eq!(
                phi2(Phi2Pattern::FourDistinct, n).unwrap(),
                c(MomentId::Ctilde1234) - &bo * &bo
            );
            assert_eq!(
                phi2(Phi2Pattern::ThreeDistinct, n).unwrap(),
                c(MomentId::Ctilde1223) - &bo * &bo
            );
            assert_eq!(
                phi2(Phi2Pattern::TwoDistinct, n).unwrap(),
                c(MomentId::Ctilde1212) - &bo * &bo
            );
            assert_eq!(
                phi2(Phi2Pattern::DiagEqual, n).unwrap(),
                c(MomentId::Ctilde1111) - &bd * &bd
            );
            assert_eq!(
                phi2(Phi2Pattern::DiagDistinct, n).unwrap(),
                c(MomentId::Ctilde1122) - &bd * &bd
            );
        }
    }

    #[test]
    fn brute_force_examples() {
        assert_eq!(brute_force_moment(MomentId::B1, 3).unwrap(), r(2, 9));
        assert_eq!(brute_force_moment(MomentId::Mu(2), 3).unwrap(), r(1, 54));
        assert_eq!(
            brute_force_moment(MomentId::Sigma2(2), 4).unwrap(),
            r(396, 12_960_000)
        );
        let centered_mean =
            expect_single_column(4, |r| kernel_centered_exact(r[0], r[1], 4, false)).unwrap();
        assert!(centered_mean.is_zero());
    }

    #[test]
    fn enumeration_limits() {
        assert!(matches!(
            expect_single_column(7, |_| Rational::zero()),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(matches!(
            brute_force_moment(MomentId::Sigma2(2), 5),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn permutations_are_lexicographic_and_complete() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        assert_eq!(p[0], vec![1, 2, 3, 4]);
        assert_eq!(p[23], vec![4, 3, 2, 1]);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn decomposition_matches_polynomials() {
        for n in 3..=50 {
            assert_eq!(sigma2_decomposition(n, 2), sigma2_polynomial(n, 2).unwrap());
            assert_eq!(sigma2_decomposition(n, 3), sigma2_polynomial(n, 3).unwrap());
        }
    }

    #[test]
    fn sigma2_vanishes_at_two_observations() {
        for k in 2..6 {
            assert!(sigma2_decomposition(2, k).is_zero());
        }
    }

    #[test]
    fn moment_id_names_round_trip() {
        for id in catalog_ids() {
            assert_eq!(id.name().parse::<MomentId>().unwrap(), id);
        }
        assert_eq!(MomentId::parse("Mu", Some(3)).unwrap(), MomentId::Mu(3));
        assert!(MomentId::parse("Sigma2", None).is_err());
        assert!("B99".parse::<MomentId>().is_err());
    }

    #[test]
    fn corrupted_formula_is_reported() {
        let corrupted = |id: MomentId, n: usize| {
            let v = moment_closed_form(id, n)?;
            Ok(if id == MomentId::B12_23 {
                v + r(1, 1000)
            } else {
                v
            })
        };
        let err =
            verify_catalog_with(&[3], &[MomentId::B1, MomentId::B12_23], corrupted).unwrap_err();
        match err {
            Error::MismatchFound { id, n, .. } => {
                assert_eq!(id, "B12_23");
                assert_eq!(n, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn returned_rationals_are_normalized() {
        for n in 4..12 {
            for id in catalog_ids() {
                assert!(is_normalized(&moment_closed_form(id, n).unwrap()));
            }
        }
    }
}
