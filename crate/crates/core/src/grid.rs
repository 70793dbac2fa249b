//! The fine-grid dictionary B = A F_grid whose columns are measured
//! steering vectors at the grid nodes n/K.

use crate::error::{Error, Result};
use crate::ft::PartialFourier;
use crate::sensing::MeasurementOperator;
use crate::spectral::{steering_vector, Bandwidth, FrequencyPoint};
use num_complex::Complex64;
use once_cell_polyfill::OnceBox;

// tiny lazy-init helper; std OnceCell is not Sync-free friendly here and
// the dictionary is used single-threaded per solve
mod once_cell_polyfill {
    use std::cell::RefCell;

    #[derive(Debug, Default)]
    pub struct OnceBox<T>(RefCell<Option<std::sync::Arc<T>>>);

    impl<T> OnceBox<T> {
        pub fn new() -> Self {
            Self(RefCell::new(None))
        }

        pub fn get_or_init<F: FnOnce() -> T>(&self, f: F) -> std::sync::Arc<T> {
            let mut slot = self.0.borrow_mut();
            if slot.is_none() {
                *slot = Some(std::sync::Arc::new(f()));
            }
            slot.as_ref().expect("just initialized").clone()
        }
    }
}

/// Per-dimension grid sizes K_l >= L_l.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    k: Vec<usize>,
}

impl GridSpec {
    pub fn new(k: Vec<usize>, band: &Bandwidth) -> Result<Self> {
        if k.len() != band.dim() {
            return Err(Error::LengthMismatch {
                what: "grid dimension",
                expected: band.dim(),
                got: k.len(),
            });
        }
        for (axis, &ka) in k.iter().enumerate() {
            if ka < band.len(axis) {
                return Err(Error::GridTooCoarse {
                    axis,
                    got: ka,
                    ambient: band.len(axis),
                });
            }
        }
        Ok(Self { k })
    }

    /// Grid with every axis SRF times denser than the base sizes.
    pub fn oversampled(base: &[usize], srf: usize, band: &Bandwidth) -> Result<Self> {
        Self::new(base.iter().map(|&b| b * srf).collect(), band)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.k
    }

    pub fn dim(&self) -> usize {
        self.k.len()
    }

    pub fn cells(&self) -> usize {
        self.k.iter().product()
    }

    /// Super-resolution factors K_l / L_l.
    pub fn srf(&self, band: &Bandwidth) -> Vec<f64> {
        self.k
            .iter()
            .enumerate()
            .map(|(a, &ka)| ka as f64 / band.len(a) as f64)
            .collect()
    }

    pub fn flat_index(&self, cell: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &c) in cell.iter().enumerate() {
            idx = idx * self.k[a] + c;
        }
        idx
    }

    pub fn cell_of(&self, mut flat: usize) -> Vec<usize> {
        let mut cell = vec![0usize; self.k.len()];
        for a in (0..self.k.len()).rev() {
            cell[a] = flat % self.k[a];
            flat /= self.k[a];
        }
        cell
    }

    pub fn location(&self, cell: &[usize]) -> FrequencyPoint {
        FrequencyPoint::new(
            &cell
                .iter()
                .enumerate()
                .map(|(a, &c)| c as f64 / self.k[a] as f64)
                .collect::<Vec<_>>(),
        )
        .expect("grid dimension validated at construction")
    }
}

/// Measured dictionary over the grid, with fast forward/adjoint built on
/// per-axis partial DFTs and a cached M x M Gram matrix.
pub struct GridDictionary {
    pub op: MeasurementOperator,
    pub band: Bandwidth,
    pub spec: GridSpec,
    ft: PartialFourier,
    gram: OnceBox<nalgebra::DMatrix<Complex64>>,
}

impl GridDictionary {
    pub fn new(op: MeasurementOperator, band: Bandwidth, spec: GridSpec) -> Result<Self> {
        if spec.dim() != band.dim() {
            return Err(Error::LengthMismatch {
                what: "grid dimension",
                expected: band.dim(),
                got: spec.dim(),
            });
        }
        if op.ambient() < band.ambient() {
            return Err(Error::LengthMismatch {
                what: "operator ambient dimension",
                expected: band.ambient(),
                got: op.ambient(),
            });
        }
        Ok(Self {
            op,
            band,
            spec,
            ft: PartialFourier::new(),
            gram: OnceBox::new(),
        })
    }

    pub fn rows(&self) -> usize {
        self.op.rows()
    }

    pub fn cells(&self) -> usize {
        self.spec.cells()
    }

    /// Zero-pad a band vector into the operator's ambient space (only the
    /// structured-transform ensemble has a larger ambient).
    fn embed(&self, z: Vec<Complex64>) -> Vec<Complex64> {
        if z.len() == self.op.ambient() {
            z
        } else {
            let mut out = vec![Complex64::default(); self.op.ambient()];
            out[..z.len()].copy_from_slice(&z);
            out
        }
    }

    fn restrict(&self, z: Vec<Complex64>) -> Vec<Complex64> {
        if z.len() == self.band.ambient() {
            z
        } else {
            z[..self.band.ambient()].to_vec()
        }
    }

    /// F_grid s: synthesize the band-limited vector from grid coefficients.
    pub fn fgrid_apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        self.ft.grid_to_band(s, self.spec.sizes(), &self.band)
    }

    /// Adjoint of [`Self::fgrid_apply`].
    pub fn fgrid_adjoint(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.ft.band_to_grid_adjoint(z, &self.band, self.spec.sizes())
    }

    /// y = A F_grid s.
    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        self.op.apply(&self.embed(self.fgrid_apply(s)))
    }

    /// s = F_grid^H A^H y.
    pub fn adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.fgrid_adjoint(&self.restrict(self.op.adjoint(y)))
    }

    /// Single dictionary column A f(n/K).
    pub fn column(&self, cell: &[usize]) -> Vec<Complex64> {
        let f = steering_vector(&self.spec.location(cell), &self.band)
            .expect("grid location is in range");
        self.op.apply(&self.embed(f))
    }

    /// Cached Gram matrix B B^H. The grid transform satisfies
    /// F_grid F_grid^H = (prod K) I because every K_l >= L_l, so the Gram
    /// reduces to (prod K) A A^H and costs M operator applies.
    pub fn gram(&self) -> std::sync::Arc<nalgebra::DMatrix<Complex64>> {
        self.gram.get_or_init(|| {
            let m = self.rows();
            let scale = self.cells() as f64;
            let mut g = nalgebra::DMatrix::zeros(m, m);
            let mut e = vec![Complex64::default(); m];
            for c in 0..m {
                e[c] = Complex64::new(1.0, 0.0);
                let col = self.op.apply(&self.op.adjoint(&e));
                e[c] = Complex64::default();
                for (r, &v) in col.iter().enumerate() {
                    g[(r, c)] = v * scale;
                }
            }
            // enforce exact Hermitian symmetry against round-off
            for r in 0..m {
                for c in 0..r {
                    let avg = (g[(r, c)] + g[(c, r)].conj()) * 0.5;
                    g[(r, c)] = avg;
                    g[(c, r)] = avg.conj();
                }
                let d = g[(r, r)];
                g[(r, r)] = Complex64::new(d.re, 0.0);
            }
            g
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{inner, norm2};
    use crate::sensing::{OrthogonalFamily, SubsampledOrthogonal};

    fn small_dict() -> GridDictionary {
        let band = Bandwidth::isotropic(1, 4).unwrap();
        let op = MeasurementOperator::Subsampled(SubsampledOrthogonal::draw(
            OrthogonalFamily::Identity,
            9,
            6,
            5,
        ));
        let spec = GridSpec::new(vec![18], &band).unwrap();
        GridDictionary::new(op, band, spec).unwrap()
    }

    #[test]
    fn rejects_grid_below_ambient() {
        let band = Bandwidth::isotropic(2, 4).unwrap();
        assert!(matches!(
            GridSpec::new(vec![9, 8], &band),
            Err(Error::GridTooCoarse { axis: 1, .. })
        ));
    }

    #[test]
    fn one_hot_equals_column() {
        let dict = small_dict();
        let mut s = vec![Complex64::default(); dict.cells()];
        s[7] = Complex64::new(1.0, 0.0);
        let via_apply = dict.apply(&s);
        let via_column = dict.column(&[7]);
        for (a, b) in via_apply.iter().zip(&via_column) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn dictionary_adjoint_consistency() {
        let dict = small_dict();
        let mut rng = crate::rng::seeded(11);
        let s: Vec<Complex64> = (0..dict.cells())
            .map(|_| crate::rng::complex_gaussian(&mut rng))
            .collect();
        let y: Vec<Complex64> = (0..dict.rows())
            .map(|_| crate::rng::complex_gaussian(&mut rng))
            .collect();
        let lhs = inner(&dict.apply(&s), &y);
        let rhs = inner(&s, &dict.adjoint(&y));
        assert!((lhs - rhs).norm() <= 1e-10 * norm2(&s) * norm2(&y));
    }

    #[test]
    fn gram_matches_direct_product() {
        let dict = small_dict();
        let g = dict.gram();
        // direct: columns of B^H are rows of B
        let m = dict.rows();
        for r in 0..m {
            let mut er = vec![Complex64::default(); m];
            er[r] = Complex64::new(1.0, 0.0);
            let brow = dict.adjoint(&er);
            for c in 0..m {
                let mut ec = vec![Complex64::default(); m];
                ec[c] = Complex64::new(1.0, 0.0);
                let bcol = dict.adjoint(&ec);
                let want = inner(&bcol, &brow);
                assert!((g[(r, c)] - want).norm() < 1e-9);
            }
        }
    }
}
