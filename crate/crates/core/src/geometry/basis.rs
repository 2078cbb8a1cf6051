//! Cox-de Boor B-spline basis evaluation.
//!
//! Knot spans are half-open `[u_i, u_{i+1})` except at the upper end of the
//! domain, which maps onto the last non-degenerate span so that clamped
//! curves evaluate to their final control point.

use super::GeometryError;

/// Locate the knot span containing `u`.
///
/// `n` is the index of the last control point and `p` the degree, so the
/// knot vector holds `n + p + 2` entries. Parameters outside `[u_p, u_{n+1}]`
/// are clamped onto the first or last span.
pub fn find_span(n: usize, p: usize, u: f64, knots: &[f64]) -> usize {
    if u >= knots[n + 1] {
        // Skip trailing zero-length spans.
        let mut span = n;
        while span > p && knots[span] >= knots[n + 1] {
            span -= 1;
        }
        return span;
    }
    if u <= knots[p] {
        let mut span = p;
        while span < n && knots[span + 1] <= u {
            span += 1;
        }
        return span;
    }
    let (mut lo, mut hi) = (p, n + 1);
    let mut mid = (lo + hi) / 2;
    while u < knots[mid] || u >= knots[mid + 1] {
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
        mid = (lo + hi) / 2;
    }
    mid
}

fn check_domain(u: f64, knots: &[f64]) -> Result<(), GeometryError> {
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    if !u.is_finite() || u < lo || u > hi {
        return Err(GeometryError::ParameterOutOfRange { u, lo, hi });
    }
    Ok(())
}

/// The `p + 1` basis functions `N_{span-p,p}(u) .. N_{span,p}(u)` that do
/// not vanish at `u`.
///
/// Uses the triangular Cox-de Boor scheme; a zero denominator (repeated
/// knots) contributes zero, which is the usual 0/0 := 0 convention.
pub fn basis_functions(u: f64, span: usize, p: usize, knots: &[f64]) -> Result<Vec<f64>, GeometryError> {
    check_domain(u, knots)?;
    if span < p || span + 1 >= knots.len() {
        return Err(GeometryError::InvalidSpan { span, degree: p });
    }
    let mut n = vec![0.0; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    n[0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom == 0.0 { 0.0 } else { n[r] / denom };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    Ok(n)
}

/// Basis functions and their derivatives up to order `order`.
///
/// Returns `ders[k][j]`, the k-th derivative of `N_{span-p+j,p}` at `u`.
/// Orders above `p` are identically zero and are returned as such.
pub fn basis_derivatives(
    u: f64,
    span: usize,
    p: usize,
    order: usize,
    knots: &[f64],
) -> Result<Vec<Vec<f64>>, GeometryError> {
    check_domain(u, knots)?;
    if span < p || span + 1 >= knots.len() {
        return Err(GeometryError::InvalidSpan { span, degree: p });
    }
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            // lower triangle keeps knot differences
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = if ndu[j][r] == 0.0 { 0.0 } else { ndu[r][j - 1] / ndu[j][r] };
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    let mut ders = vec![vec![0.0; p + 1]; order + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let top = order.min(p);
    let mut a = vec![vec![0.0; p + 1]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=top {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if rk >= 0 {
                let denom = ndu[pk + 1][rk as usize];
                a[s2][0] = if denom == 0.0 { 0.0 } else { a[s1][0] / denom };
                d = a[s2][0] * ndu[rk as usize][pk];
            }
            let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2 = if (r as isize - 1) <= pk as isize { k - 1 } else { p - r };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                let denom = ndu[pk + 1][idx];
                a[s2][j] = if denom == 0.0 { 0.0 } else { (a[s1][j] - a[s1][j - 1]) / denom };
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                let denom = ndu[pk + 1][r];
                a[s2][k] = if denom == 0.0 { 0.0 } else { -a[s1][k - 1] / denom };
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=top {
        for v in ders[k].iter_mut() {
            *v *= factor;
        }
        factor *= (p - k) as f64;
    }
    Ok(ders)
}
