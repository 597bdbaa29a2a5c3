//! Frequency-domain cross-check: `(K + iωC − ω²M) v = iω g` for a
//! unit-amplitude incoming wave, reusing the transient system matrices.

use num_complex::Complex64;

use crate::assembly::SystemMatrices;
use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::problem::Problem;

/// Complex outlet integral at `freq_hz`.
pub fn outlet_response(sys: &SystemMatrices, weights: &[(usize, f64)], freq_hz: f64) -> Result<Complex64> {
    let w = 2.0 * std::f64::consts::PI * freq_hz;
    if sys.k.values().len() != sys.m.values().len() || sys.k.values().len() != sys.c.values().len() {
        return Err(Error::Dimension {
            what: "harmonic operator expects M, C, K on one sparsity pattern",
            expected: sys.k.nnz(),
            got: sys.m.nnz(),
        });
    }
    let mut a: CsrMatrix<Complex64> = sys.k.map(|v| Complex64::new(v, 0.0));
    for (i, z) in a.values_mut().iter_mut().enumerate() {
        *z = Complex64::new(sys.k.values()[i] - w * w * sys.m.values()[i], w * sys.c.values()[i]);
    }
    for (d, &fixed) in sys.clamped.iter().enumerate() {
        if fixed {
            if let Some(p) = a.position(d, d) {
                a.values_mut()[p] = Complex64::new(1.0, 0.0);
            }
        }
    }
    let lu = BandedLu::factor(&a)?;
    let rhs: Vec<Complex64> = sys.source.iter().map(|&g| Complex64::new(0.0, w * g)).collect();
    let v = lu.solve(&rhs);
    Ok(weights.iter().map(|&(d, wt)| v[d] * wt).sum())
}

/// `S_harm(f)` of `level_set` against the empty duct; `None` marks a
/// frequency whose operator was singular.
pub fn harmonic_transmission(problem: &Problem, level_set: &[f64], freqs: &[f64]) -> Result<Vec<Option<f64>>> {
    let design = problem.assemble(level_set)?;
    let empty = problem.assemble(&problem.param.empty_field())?;
    let weights = &problem.weights;
    let out = problem.exec.map(freqs, |&f| {
        let pair = outlet_response(&design, weights, f).and_then(|p| Ok((p, outlet_response(&empty, weights, f)?)));
        match pair {
            Ok((p, p0)) => Ok(Some(p.norm() / p0.norm())),
            Err(Error::SingularMatrix { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    out.into_iter().collect()
}

/// Mean `|a − b|` over the entries where both are present.
pub fn mean_abs_difference(a: &[f64], b: &[Option<f64>]) -> f64 {
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| y.map(|y| (x - y).abs()))
        .collect();
    d.iter().sum::<f64>() / d.len().max(1) as f64
}
