use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::topology::MixingMatrix;

/// Gossip averaging `Z ↦ Z Wᵀ`: column `m` becomes `Σ_j W_mj z_j`.
pub fn gossip_step(z: &DMatrix<f64>, w: &MixingMatrix) -> Result<DMatrix<f64>> {
    if z.ncols() != w.k() {
        return Err(Error::InvalidShape(format!(
            "parameter matrix has {} columns, mixing matrix is {}x{}",
            z.ncols(),
            w.k(),
            w.k()
        )));
    }
    let d = z.nrows();
    let mut out = DMatrix::zeros(d, w.k());
    mix_into(z.as_slice(), d, |m| w.row(m), out.as_mut_slice());
    Ok(out)
}

/// Column-major mixing kernel. `row(m)` yields the nonzero `(j, W_mj)` of row
/// `m` in ascending `j`; terms are accumulated in that order.
pub(crate) fn mix_into<'r, F>(y: &[f64], d: usize, row: F, out: &mut [f64])
where
    F: Fn(usize) -> &'r [(usize, f64)],
{
    for (m, col) in out.chunks_exact_mut(d).enumerate() {
        col.iter_mut().for_each(|v| *v = 0.0);
        for &(j, w) in row(m) {
            let src = &y[j * d..(j + 1) * d];
            for (o, s) in col.iter_mut().zip(src) {
                *o += w * s;
            }
        }
    }
}
