use rand::Rng;

use crate::numerics::CMatrix;
use crate::random::complex_gaussian_matrix;

pub fn random_cmatrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    complex_gaussian_matrix(rng, rows, cols)
}
