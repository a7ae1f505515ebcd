//! Clamped B-spline bases.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Clamped knot vector on `[0, 1]` giving `bases` functions of `degree`,
/// with equally spaced interior knots.
pub fn clamped_knots(bases: usize, degree: usize) -> Result<Vec<f64>> {
    if bases <= degree {
        return Err(Error::InvalidKnots(format!("{bases} bases cannot carry degree {degree}")));
    }
    let interior = bases - degree - 1;
    let mut knots = vec![0.0; degree + 1];
    knots.extend((1..=interior).map(|i| i as f64 / (interior + 1) as f64));
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    Ok(knots)
}

fn validate(knots: &[f64], degree: usize) -> Result<()> {
    if knots.len() < 2 * (degree + 1) {
        return Err(Error::InvalidKnots(format!("{} knots are too few for degree {degree}", knots.len())));
    }
    if knots.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidKnots("knots must be non-decreasing".into()));
    }
    if knots[0] == knots[knots.len() - 1] {
        return Err(Error::InvalidKnots("knot span is empty".into()));
    }
    Ok(())
}

/// Index `s` with `knots[s] ≤ t < knots[s+1]`; the right end maps to the last nonempty span.
fn find_span(knots: &[f64], degree: usize, t: f64) -> usize {
    let bases = knots.len() - degree - 1;
    if t >= knots[bases] {
        return bases - 1;
    }
    let mut s = degree;
    while s + 1 < bases && knots[s + 1] <= t {
        s += 1;
    }
    s
}

/// `B_s(t_k)` as a `len(t) × bases` matrix.
///
/// Only the `degree + 1` functions supported on the span of `t` are evaluated;
/// the rest are exact zeros.
pub fn bspline_basis(t_grid: &[f64], knots: &[f64], degree: usize) -> Result<DMatrix<f64>> {
    validate(knots, degree)?;
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    let bases = knots.len() - degree - 1;
    let mut out = DMatrix::zeros(t_grid.len(), bases);
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    let mut vals = vec![0.0; degree + 1];
    for (row, &t) in t_grid.iter().enumerate() {
        if !(lo..=hi).contains(&t) {
            return Err(Error::InvalidKnots(format!("t = {t} lies outside [{lo}, {hi}]")));
        }
        let span = find_span(knots, degree, t);
        vals[0] = 1.0;
        for j in 1..=degree {
            left[j] = t - knots[span + 1 - j];
            right[j] = knots[span + j] - t;
            let mut saved = 0.0;
            for r in 0..j {
                let tmp = vals[r] / (right[r + 1] + left[j - r]);
                vals[r] = saved + right[r + 1] * tmp;
                saved = left[j - r] * tmp;
            }
            vals[j] = saved;
        }
        for (r, v) in vals.iter().enumerate() {
            out[(row, span - degree + r)] = *v;
        }
    }
    Ok(out)
}
