//! Where test matrices come from.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{matmul, Matrix, OpCounter};
use crate::mmio;

/// A matrix description as accepted on the command line:
///
/// * `identity:N`
/// * `diag:d1,d2,...`
/// * `random-spd:N,COND,SEED`
/// * `mm:PATH` or a bare path to a MatrixMarket file
#[derive(Clone, Debug, PartialEq)]
pub enum MatrixSource {
    MmFile(PathBuf),
    RandomSpd { n: usize, cond_target: f64, seed: u64 },
    Diag(Vec<f64>),
    Identity(usize),
}

impl MatrixSource {
    pub fn load(&self) -> Result<Matrix> {
        match self {
            MatrixSource::MmFile(path) => mmio::read_matrix_market(path),
            MatrixSource::RandomSpd {
                n,
                cond_target,
                seed,
            } => Ok(gen_random_spd(*n, *cond_target, *seed)),
            MatrixSource::Diag(d) => Ok(Matrix::from_diag(d)),
            MatrixSource::Identity(n) => Ok(Matrix::identity(*n)),
        }
    }
}

impl fmt::Display for MatrixSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixSource::MmFile(p) => write!(f, "mm:{}", p.display()),
            MatrixSource::RandomSpd {
                n,
                cond_target,
                seed,
            } => write!(f, "random-spd:{n},{cond_target},{seed}"),
            MatrixSource::Diag(d) => {
                let parts: Vec<String> = d.iter().map(|v| v.to_string()).collect();
                write!(f, "diag:{}", parts.join(","))
            }
            MatrixSource::Identity(n) => write!(f, "identity:{n}"),
        }
    }
}

impl FromStr for MatrixSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidArgument(format!("matrix source `{s}`: {why}"));
        let Some((kind, rest)) = s.split_once(':') else {
            return Ok(MatrixSource::MmFile(PathBuf::from(s)));
        };
        let list = |rest: &str| -> Vec<String> {
            rest.split(',').map(|t| t.trim().to_string()).collect()
        };
        match kind {
            "identity" | "eye" => {
                let n: usize = rest.trim().parse().map_err(|_| bad("expected identity:N"))?;
                if n == 0 {
                    return Err(bad("size must be positive"));
                }
                Ok(MatrixSource::Identity(n))
            }
            "diag" => {
                let d = list(rest)
                    .iter()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad("expected diag:d1,d2,..."))?;
                if d.is_empty() {
                    return Err(bad("no diagonal entries"));
                }
                Ok(MatrixSource::Diag(d))
            }
            "random-spd" | "spd" => {
                let parts = list(rest);
                if parts.len() != 3 {
                    return Err(bad("expected random-spd:N,COND,SEED"));
                }
                let n: usize = parts[0].parse().map_err(|_| bad("bad N"))?;
                let cond_target: f64 = parts[1].parse().map_err(|_| bad("bad COND"))?;
                let seed: u64 = parts[2].parse().map_err(|_| bad("bad SEED"))?;
                if n == 0 || cond_target.is_nan() || cond_target < 1.0 {
                    return Err(bad("need N >= 1 and COND >= 1"));
                }
                Ok(MatrixSource::RandomSpd {
                    n,
                    cond_target,
                    seed,
                })
            }
            "mm" | "file" => Ok(MatrixSource::MmFile(PathBuf::from(rest))),
            // Windows drive letters and similar: treat as a plain path.
            _ => Ok(MatrixSource::MmFile(PathBuf::from(s))),
        }
    }
}

/// `Q D Q^T` with `Q` the orthogonal factor of a seeded Gaussian matrix and
/// `D` log-uniform on `[1/cond_target, 1]`. Both endpoints are pinned, so the
/// 2-norm condition number equals `cond_target` up to roundoff.
pub fn gen_random_spd(n: usize, cond_target: f64, seed: u64) -> Matrix {
    assert!(n >= 1 && cond_target >= 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = orthonormal_columns(&g);
    let log_min = -cond_target.ln();
    let diag: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            1 => 1.0 / cond_target,
            _ => (log_min * rng.gen::<f64>()).exp(),
        })
        .collect();
    let qd = Matrix::from_fn(n, n, |i, j| q[(i, j)] * diag[j]);
    let mut counter = OpCounter::new();
    let m = matmul(&qd, &q.transpose(), &mut counter).expect("square");
    Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

/// Modified Gram-Schmidt with one reorthogonalization pass, column-wise.
fn orthonormal_columns(g: &Matrix) -> Matrix {
    let n = g.rows();
    let mut cols: Vec<Vec<f64>> = (0..g.cols()).map(|j| (0..n).map(|i| g[(i, j)]).collect()).collect();
    for j in 0..cols.len() {
        for _ in 0..2 {
            for k in 0..j {
                let dot: f64 = cols[j].iter().zip(&cols[k]).map(|(a, b)| a * b).sum();
                let (head, tail) = cols.split_at_mut(j);
                for (v, q) in tail[0].iter_mut().zip(&head[k]) {
                    *v -= dot * q;
                }
            }
        }
        let norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut cols[j] {
            *v /= norm;
        }
    }
    Matrix::from_fn(n, g.cols(), |i, j| cols[j][i])
}
