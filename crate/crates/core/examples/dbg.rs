use linespec_core::grid::*;
use linespec_core::sensing::*;
use linespec_core::spectral::*;
use num_complex::Complex64;
use std::time::Instant;

fn main() {
    for srf in [3usize, 6] {
        let band = Bandwidth::new(vec![4, 20, 20]).unwrap();
        let op = MeasurementOperator::Mimo(MimoRadar::draw(20, 3, 3, 7).unwrap());
        let spec = GridSpec::new(vec![9*srf, 41*srf, 41*srf], &band).unwrap();
        let dict = GridDictionary::new(op, band, spec).unwrap();
        let mut s = vec![Complex64::default(); dict.cells()];
        s[5] = Complex64::new(1.0, 0.0);
        let t0 = Instant::now();
        let reps = 10;
        let mut y = Vec::new();
        for _ in 0..reps { y = dict.apply(&s); }
        let ta = t0.elapsed() / reps;
        let t0 = Instant::now();
        for _ in 0..reps { let _ = dict.adjoint(&y); }
        let tb = t0.elapsed() / reps;
        println!("srf {srf}: cells {} apply {:?} adjoint {:?}", dict.cells(), ta, tb);
    }
}
