//! Measurement operators y = A z: construction of the ensemble families,
//! forward/adjoint application, coherence and isotropy diagnostics, and a
//! replayable on-disk format.

mod dense;
mod gabor;
mod mimo;

pub use dense::{dirichlet, GaussianDense, OrthogonalFamily, Sors, SubsampledOrthogonal, TimeSamples};
pub use gabor::{freq_shift, tf_shift, time_shift, GaborRadar};
pub use mimo::MimoRadar;

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_operator_norm};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// One of the five measurement ensemble families, with a uniform
/// forward/adjoint interface.
#[derive(Debug, Clone)]
pub enum MeasurementOperator {
    Subsampled(SubsampledOrthogonal),
    TimeSamples(TimeSamples),
    Gaussian(GaussianDense),
    Sors(Sors),
    Gabor(GaborRadar),
    Mimo(MimoRadar),
}

impl MeasurementOperator {
    pub fn rows(&self) -> usize {
        match self {
            Self::Subsampled(op) => op.rows(),
            Self::TimeSamples(op) => op.rows(),
            Self::Gaussian(op) => op.rows,
            Self::Sors(op) => op.rows(),
            Self::Gabor(op) => op.rows(),
            Self::Mimo(op) => op.rows(),
        }
    }

    pub fn ambient(&self) -> usize {
        match self {
            Self::Subsampled(op) => op.ambient,
            Self::TimeSamples(op) => op.ambient(),
            Self::Gaussian(op) => op.ambient,
            Self::Sors(op) => op.n,
            Self::Gabor(op) => op.ambient(),
            Self::Mimo(op) => op.ambient(),
        }
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(z.len(), self.ambient());
        match self {
            Self::Subsampled(op) => op.apply(z),
            Self::TimeSamples(op) => op.apply(z),
            Self::Gaussian(op) => op.apply(z),
            Self::Sors(op) => op.apply(z),
            Self::Gabor(op) => op.apply(z),
            Self::Mimo(op) => op.apply(z),
        }
    }

    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(y.len(), self.rows());
        match self {
            Self::Subsampled(op) => op.adjoint(y),
            Self::TimeSamples(op) => op.adjoint(y),
            Self::Gaussian(op) => op.adjoint(y),
            Self::Sors(op) => op.adjoint(y),
            Self::Gabor(op) => op.adjoint(y),
            Self::Mimo(op) => op.adjoint(y),
        }
    }

    pub fn ensemble(&self) -> &'static str {
        match self {
            Self::Subsampled(op) => match op.family {
                OrthogonalFamily::Identity => "subsampled-identity",
                OrthogonalFamily::Fourier => "subsampled-fourier",
            },
            Self::TimeSamples(_) => "time-samples",
            Self::Gaussian(_) => "gaussian",
            Self::Sors(_) => "sors",
            Self::Gabor(_) => "gabor",
            Self::Mimo(_) => "mimo",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::Subsampled(op) => op.seed,
            Self::TimeSamples(op) => op.seed,
            Self::Gaussian(op) => op.seed,
            Self::Sors(op) => op.seed,
            Self::Gabor(op) => op.seed,
            Self::Mimo(op) => op.seed,
        }
    }

    /// Scalar s with E[(sA)^H (sA)] = I; certificates use the rescaled
    /// operator.
    pub fn isotropy_scale(&self) -> f64 {
        match self {
            Self::Subsampled(_) | Self::TimeSamples(_) | Self::Gaussian(_) => 1.0,
            Self::Sors(op) => (op.n as f64 / op.rows() as f64).sqrt(),
            Self::Gabor(op) => op.l() as f64,
            Self::Mimo(op) => ((op.l() * op.l() * op.n_t) as f64).sqrt(),
        }
    }

    /// Row r of A as a vector (so `inner(z, row)` is not it: the row acts
    /// by y_r = sum_j A[r,j] z_j). Materialized through the adjoint.
    pub fn row_vector(&self, r: usize) -> Vec<Complex64> {
        let mut e = vec![Complex64::default(); self.rows()];
        e[r] = Complex64::new(1.0, 0.0);
        self.adjoint(&e).iter().map(|v| v.conj()).collect()
    }

    /// Dense row-major materialization; intended for diagnostics and
    /// small problems.
    pub fn dense_rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.rows()).map(|r| self.row_vector(r)).collect()
    }
}

/// Empirical coherence and isotropy diagnostics.
///
/// `mu_hat` is (M / ambient) max_r ||a_r||_1^2; `isotropy_residual` is the
/// operator-norm distance between the empirical row second moment
/// (1/M) A^H A and I/M, i.e. ||A^H A - I|| / M.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub ensemble: String,
    pub rows: usize,
    pub ambient: usize,
    pub mu_hat: f64,
    pub isotropy_residual: f64,
}

pub fn empirical_coherence(op: &MeasurementOperator) -> CoherenceReport {
    let m = op.rows();
    let ambient = op.ambient();
    let mut max_l1 = 0.0f64;
    for r in 0..m {
        let row = op.row_vector(r);
        let l1: f64 = row.iter().map(|v| v.norm()).sum();
        max_l1 = max_l1.max(l1);
    }
    let mu_hat = m as f64 / ambient as f64 * max_l1 * max_l1;
    let residual = hermitian_operator_norm(
        ambient,
        |v| {
            let mut w = op.adjoint(&op.apply(v));
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi;
            }
            w
        },
        60,
        op.seed() ^ 0xc0ffee,
    ) / m as f64;
    CoherenceReport {
        ensemble: op.ensemble().to_string(),
        rows: m,
        ambient,
        mu_hat,
        isotropy_residual: residual,
    }
}

/// Adjoint-consistency residual max over probes of
/// |<Ax, y> - <x, A^H y>| / (||x|| ||y||).
pub fn adjoint_residual(op: &MeasurementOperator, probes: usize, seed: u64) -> f64 {
    let mut rng = crate::rng::substream(seed, crate::rng::Domain::Diagnostics, 1);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let x: Vec<Complex64> = (0..op.ambient())
            .map(|_| crate::rng::complex_gaussian(&mut rng))
            .collect();
        let y: Vec<Complex64> = (0..op.rows())
            .map(|_| crate::rng::complex_gaussian(&mut rng))
            .collect();
        let lhs = linalg::inner(&op.apply(&x), &y);
        let rhs = linalg::inner(&x, &op.adjoint(&y));
        worst = worst.max((lhs - rhs).norm() / (linalg::norm2(&x) * linalg::norm2(&y)));
    }
    worst
}

// --- on-disk format -------------------------------------------------------
//
// magic "LSOP", u32 version, u64 json header length, JSON header,
// raw little-endian complex64 payload (f64 re, f64 im per entry). The
// header stores every scalar field; the payload stores the heavy arrays
// in a fixed documented order per ensemble, so a load replays the
// operator bit-exactly without re-running any RNG.

const MAGIC: &[u8; 4] = b"LSOP";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct OperatorHeader {
    schema_version: u32,
    ensemble: String,
    seed: u64,
    rows: usize,
    ambient: usize,
    #[serde(default)]
    family: Option<OrthogonalFamily>,
    #[serde(default)]
    half: Option<usize>,
    #[serde(default)]
    n_t: Option<usize>,
    #[serde(default)]
    n_r: Option<usize>,
    #[serde(default)]
    transform_size: Option<usize>,
    #[serde(default)]
    indices: Option<Vec<usize>>,
    #[serde(default)]
    signs: Option<Vec<i8>>,
    payload_len: usize,
}

fn payload_of(op: &MeasurementOperator) -> Vec<Complex64> {
    match op {
        MeasurementOperator::Subsampled(_) | MeasurementOperator::Sors(_) => Vec::new(),
        MeasurementOperator::TimeSamples(o) => o
            .sample_times
            .iter()
            .map(|&t| Complex64::new(t, 0.0))
            .collect(),
        MeasurementOperator::Gaussian(o) => {
            o.entries.iter().map(|&e| Complex64::new(e, 0.0)).collect()
        }
        MeasurementOperator::Gabor(o) => o.probe.clone(),
        MeasurementOperator::Mimo(o) => o.probes.iter().flatten().copied().collect(),
    }
}

impl MeasurementOperator {
    pub fn save(&self, path: &Path) -> Result<()> {
        let payload = payload_of(self);
        let header = OperatorHeader {
            schema_version: VERSION,
            ensemble: self.ensemble().to_string(),
            seed: self.seed(),
            rows: self.rows(),
            ambient: self.ambient(),
            family: match self {
                Self::Subsampled(o) => Some(o.family),
                _ => None,
            },
            half: match self {
                Self::TimeSamples(o) => Some(o.half),
                Self::Gabor(o) => Some(o.half),
                Self::Mimo(o) => Some(o.half),
                _ => None,
            },
            n_t: match self {
                Self::Mimo(o) => Some(o.n_t),
                _ => None,
            },
            n_r: match self {
                Self::Mimo(o) => Some(o.n_r),
                _ => None,
            },
            transform_size: match self {
                Self::Sors(o) => Some(o.n),
                _ => None,
            },
            indices: match self {
                Self::Subsampled(o) => Some(o.indices.clone()),
                Self::Sors(o) => Some(o.indices.clone()),
                _ => None,
            },
            signs: match self {
                Self::Sors(o) => Some(o.signs.clone()),
                _ => None,
            },
            payload_len: payload.len(),
        };
        let json = serde_json::to_vec(&header)?;
        let mut f = std::fs::File::create(path)?;
        f.write_all(MAGIC)?;
        f.write_all(&VERSION.to_le_bytes())?;
        f.write_all(&(json.len() as u64).to_le_bytes())?;
        f.write_all(&json)?;
        for v in &payload {
            f.write_all(&v.re.to_le_bytes())?;
            f.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path)?;
        let mut magic = [0u8; 4];
        f.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::MalformedOperatorFile("bad magic".into()));
        }
        let mut v4 = [0u8; 4];
        f.read_exact(&mut v4)?;
        if u32::from_le_bytes(v4) != VERSION {
            return Err(Error::MalformedOperatorFile("unsupported version".into()));
        }
        let mut v8 = [0u8; 8];
        f.read_exact(&mut v8)?;
        let json_len = u64::from_le_bytes(v8) as usize;
        let mut json = vec![0u8; json_len];
        f.read_exact(&mut json)?;
        let header: OperatorHeader = serde_json::from_slice(&json)?;
        let mut payload = Vec::with_capacity(header.payload_len);
        for _ in 0..header.payload_len {
            let mut re = [0u8; 8];
            let mut im = [0u8; 8];
            f.read_exact(&mut re)?;
            f.read_exact(&mut im)?;
            payload.push(Complex64::new(f64::from_le_bytes(re), f64::from_le_bytes(im)));
        }
        let missing = |what: &str| Error::MalformedOperatorFile(format!("missing field {what}"));
        match header.ensemble.as_str() {
            "subsampled-identity" | "subsampled-fourier" => Ok(Self::Subsampled(SubsampledOrthogonal {
                family: header.family.ok_or_else(|| missing("family"))?,
                ambient: header.ambient,
                indices: header.indices.ok_or_else(|| missing("indices"))?,
                seed: header.seed,
            })),
            "time-samples" => Ok(Self::TimeSamples(TimeSamples {
                half: header.half.ok_or_else(|| missing("half"))?,
                sample_times: payload.iter().map(|v| v.re).collect(),
                seed: header.seed,
            })),
            "gaussian" => Ok(Self::Gaussian(GaussianDense {
                rows: header.rows,
                ambient: header.ambient,
                entries: payload.iter().map(|v| v.re).collect(),
                seed: header.seed,
            })),
            "sors" => Ok(Self::Sors(Sors {
                n: header.transform_size.ok_or_else(|| missing("transform_size"))?,
                indices: header.indices.ok_or_else(|| missing("indices"))?,
                signs: header.signs.ok_or_else(|| missing("signs"))?,
                seed: header.seed,
            })),
            "gabor" => {
                let half = header.half.ok_or_else(|| missing("half"))?;
                Ok(Self::Gabor(GaborRadar::with_probe(half, payload, header.seed)?))
            }
            "mimo" => {
                let half = header.half.ok_or_else(|| missing("half"))?;
                let n_t = header.n_t.ok_or_else(|| missing("n_t"))?;
                let n_r = header.n_r.ok_or_else(|| missing("n_r"))?;
                let l = 2 * half + 1;
                if payload.len() != n_t * l {
                    return Err(Error::MalformedOperatorFile("payload length".into()));
                }
                let probes = payload.chunks(l).map(|c| c.to_vec()).collect();
                Ok(Self::Mimo(MimoRadar::with_probes(half, n_t, n_r, probes, header.seed)?))
            }
            other => Err(Error::MalformedOperatorFile(format!("unknown ensemble {other}"))),
        }
    }
}
