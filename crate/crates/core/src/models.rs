//! The five data-generating processes of the simulation study.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ranks::Dataset;

/// Geisser-Mantel grid: requested `d`, resolved `d`, and `p`.
pub const GEISSER_MANTEL_GRID: [(usize, usize, usize); 7] = [
    (4, 3, 3),
    (8, 6, 4),
    (16, 10, 5),
    (32, 28, 8),
    (64, 55, 11),
    (128, 120, 16),
    (256, 231, 22),
];

/// A reproducible random stream identified by a seed and a stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        RngStream { seed, stream_index }
    }

    /// ChaCha8 keyed by the SHA-256 of the seed, positioned on `stream_index`.
    pub fn rng(&self) -> ChaCha8Rng {
        let key: [u8; 32] = Sha256::digest(self.seed.to_le_bytes()).into();
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum Model {
    Independent,
    GaussianEquicorr { tau_norm2: f64 },
    Inductive,
    GeisserMantel,
    RomanoSiegel,
}

impl Model {
    /// Short label used as a table key.
    pub fn label(&self) -> String {
        match self {
            Model::Independent => "M1-independent".into(),
            Model::GaussianEquicorr { tau_norm2 } => format!("M2-gaussian-tau{tau_norm2}"),
            Model::Inductive => "M3-inductive".into(),
            Model::GeisserMantel => "M4-geisser-mantel".into(),
            Model::RomanoSiegel => "M5-romano-siegel".into(),
        }
    }

    /// Dimension actually generated for a requested `d`.
    pub fn resolve_dimension(&self, d_requested: usize) -> Result<usize> {
        match self {
            Model::Independent | Model::GaussianEquicorr { .. } if d_requested >= 2 => {
                Ok(d_requested)
            }
            Model::Inductive if d_requested >= 3 => Ok(d_requested),
            Model::GeisserMantel => geisser_mantel_shape(d_requested).map(|(d, _, _)| d),
            Model::RomanoSiegel if d_requested >= 3 => Ok(d_requested - d_requested % 3),
            _ => Err(Error::UnsupportedDimension(d_requested)),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// A model together with the sample size and requested dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub model: Model,
    pub n: usize,
    pub d_requested: usize,
}

impl ModelSpec {
    pub fn new(model: Model, n: usize, d_requested: usize) -> Self {
        ModelSpec {
            model,
            n,
            d_requested,
        }
    }

    pub fn d_actual(&self) -> Result<usize> {
        self.model.resolve_dimension(self.d_requested)
    }

    /// Draws one dataset from `stream`.
    pub fn generate(&self, stream: RngStream) -> Result<Dataset> {
        let mut rng = stream.rng();
        self.generate_with(&mut rng)
    }

    pub fn generate_with<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Dataset> {
        let (n, d) = (self.n, self.d_requested);
        match self.model {
            Model::Independent => gen_independent(n, d, rng),
            Model::GaussianEquicorr { tau_norm2 } => gen_gaussian_equicorr(n, d, tau_norm2, rng),
            Model::Inductive => gen_inductive(n, d, rng),
            Model::GeisserMantel => gen_geisser_mantel(n, d, rng).map(|g| g.data),
            Model::RomanoSiegel => gen_romano_siegel(n, d, rng).map(|(data, _)| data),
        }
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

/// `n x d` i.i.d. uniform entries on the open unit interval.
pub fn gen_independent<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Dataset> {
    check_n(n)?;
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let values: Vec<f64> = (0..n * d).map(|_| rng.sample::<f64, _>(Open01)).collect();
    Dataset::from_column_major(n, d, values)
}

/// Equicorrelation giving squared Kendall-tau norm `tau_norm2` in dimension `d`.
pub fn equicorr_rho(d: usize, tau_norm2: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if !tau_norm2.is_finite() || tau_norm2 <= 0.0 {
        return Err(Error::OutOfRange(format!(
            "tau_norm2 must be positive, got {tau_norm2}"
        )));
    }
    let tau = (2.0 * tau_norm2 / (d as f64 * (d as f64 - 1.0))).sqrt();
    if tau > 1.0 {
        return Err(Error::OutOfRange(format!(
            "pairwise tau {tau} exceeds 1 for d = {d}, tau_norm2 = {tau_norm2}"
        )));
    }
    Ok((std::f64::consts::FRAC_PI_2 * tau).sin())
}

/// Gaussian rows with unit variances and common correlation, through one
/// shared factor per row.
pub fn gen_gaussian_equicorr<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    tau_norm2: f64,
    rng: &mut R,
) -> Result<Dataset> {
    check_n(n)?;
    let rho = equicorr_rho(d, tau_norm2)?;
    let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut values = vec![0.0; n * d];
    for i in 0..n {
        let z0: f64 = rng.sample(StandardNormal);
        for p in 0..d {
            let zp: f64 = rng.sample(StandardNormal);
            values[p * n + i] = a * z0 + b * zp;
        }
    }
    Dataset::from_column_major(n, d, values)
}

/// Next coordinate of the inductive model: `(x + y) mod 1`.
#[inline]
pub fn inductive_step(x: f64, y: f64) -> f64 {
    let s = x + y;
    if s >= 1.0 {
        s - 1.0
    } else {
        s
    }
}

/// Two uniform columns followed by fractional parts of running pair sums.
pub fn gen_inductive<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Dataset> {
    check_n(n)?;
    if d < 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    let mut values = vec![0.0; n * d];
    for i in 0..n {
        let mut prev2: f64 = rng.sample(Open01);
        let mut prev1: f64 = rng.sample(Open01);
        values[i] = prev2;
        values[n + i] = prev1;
        for p in 2..d {
            let next = inductive_step(prev2, prev1);
            values[p * n + i] = next;
            prev2 = prev1;
            prev1 = next;
        }
    }
    Dataset::from_column_major(n, d, values)
}

/// `(d_actual, p, m)` for a requested Geisser-Mantel dimension.
pub fn geisser_mantel_shape(d_requested: usize) -> Result<(usize, usize, usize)> {
    GEISSER_MANTEL_GRID
        .iter()
        .find(|(req, _, _)| *req == d_requested)
        .map(|&(_, d, p)| (d, p, p / 2))
        .ok_or(Error::UnsupportedDimension(d_requested))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeisserMantelSample {
    pub data: Dataset,
    pub d_actual: usize,
    pub p: usize,
    pub m: usize,
}

/// Strict upper triangle (row-major) of the sample correlation matrix of the
/// rows of `sample` (`count` vectors of length `p`, stored row by row).
pub fn correlation_upper_triangle(sample: &[f64], count: usize, p: usize) -> Vec<f64> {
    let mut means = vec![0.0; p];
    for r in 0..count {
        for (q, mean) in means.iter_mut().enumerate() {
            *mean += sample[r * p + q];
        }
    }
    means.iter_mut().for_each(|m| *m /= count as f64);
    let mut cov = vec![0.0; p * p];
    for r in 0..count {
        let row = &sample[r * p..(r + 1) * p];
        for a in 0..p {
            let da = row[a] - means[a];
            for b in a..p {
                cov[a * p + b] += da * (row[b] - means[b]);
            }
        }
    }
    let mut out = Vec::with_capacity(p * (p - 1) / 2);
    for a in 0..p {
        for b in a + 1..p {
            let r = cov[a * p + b] / (cov[a * p + a] * cov[b * p + b]).sqrt();
            out.push(r.clamp(-1.0, 1.0));
        }
    }
    out
}

/// Each row holds the pairwise sample correlations of `p + m` independent
/// standard normal `p`-vectors.
pub fn gen_geisser_mantel<R: Rng + ?Sized>(
    n: usize,
    d_requested: usize,
    rng: &mut R,
) -> Result<GeisserMantelSample> {
    check_n(n)?;
    let (d_actual, p, m) = geisser_mantel_shape(d_requested)?;
    let count = p + m;
    let mut values = vec![0.0; n * d_actual];
    let mut sample = vec![0.0; count * p];
    for i in 0..n {
        sample
            .iter_mut()
            .for_each(|x| *x = rng.sample(StandardNormal));
        for (q, r) in correlation_upper_triangle(&sample, count, p)
            .into_iter()
            .enumerate()
        {
            values[q * n + i] = r;
        }
    }
    Ok(GeisserMantelSample {
        data: Dataset::from_column_major(n, d_actual, values)?,
        d_actual,
        p,
        m,
    })
}

/// One block `(|z1| sign(z2 z3), z2, z3)`.
#[inline]
pub fn romano_siegel_block(z1: f64, z2: f64, z3: f64) -> [f64; 3] {
    let sign = if z2 * z3 < 0.0 { -1.0 } else { 1.0 };
    [z1.abs() * sign, z2, z3]
}

/// Independent blocks of three pairwise independent, jointly dependent
/// coordinates; `d_actual` is the largest multiple of three below `d_requested`.
pub fn gen_romano_siegel<R: Rng + ?Sized>(
    n: usize,
    d_requested: usize,
    rng: &mut R,
) -> Result<(Dataset, usize)> {
    check_n(n)?;
    let d = Model::RomanoSiegel.resolve_dimension(d_requested)?;
    let mut values = vec![0.0; n * d];
    for i in 0..n {
        for block in 0..d / 3 {
            let z: [f64; 3] = [
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
                rng.sample(StandardNormal),
            ];
            let x = romano_siegel_block(z[0], z[1], z[2]);
            for (q, v) in x.into_iter().enumerate() {
                values[(3 * block + q) * n + i] = v;
            }
        }
    }
    Ok((Dataset::from_column_major(n, d, values)?, d))
}

/// Sample Kendall tau of two tie-free columns, `O(n^2)`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let a = (x[i] - x[j]) * (y[i] - y[j]);
            s += if a > 0.0 {
                1
            } else if a < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    2.0 * s as f64 / (n as f64 * (n as f64 - 1.0))
}
