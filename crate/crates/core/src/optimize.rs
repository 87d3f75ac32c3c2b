//! Derivative-free one-dimensional maximization.

use crate::error::Result;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub iterations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `tol` or after `max_iter`
/// shrink steps. Errors from `f` abort the search.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut iterations = 0;
    while (b - a) > tol && iterations < max_iter {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2)?;
        }
        iterations += 1;
    }
    Ok(if f1 >= f2 {
        Maximum { x: x1, value: f1, iterations }
    } else {
        Maximum { x: x2, value: f2, iterations }
    })
}

/// Scans `points + 1` equally spaced values of `[a, b]`, then refines the best
/// one with golden-section search inside its neighbouring grid cells.
///
/// Returns the best of the refined point and the grid, so a maximum on an
/// endpoint is reported exactly.
pub fn bracketed_max<F>(mut f: F, a: f64, b: f64, points: usize, tol: f64, max_iter: usize) -> Result<Maximum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let points = points.max(2);
    let step = (b - a) / points as f64;
    let grid: Vec<f64> = (0..=points)
        .map(|i| if i == points { b } else { a + step * i as f64 })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for &x in &grid {
        values.push(f(x)?);
    }
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(points)];
    let refined = golden_section_max(&mut f, lo, hi, tol, max_iter)?;
    Ok(if refined.value >= values[best] {
        refined
    } else {
        Maximum {
            x: grid[best],
            value: values[best],
            iterations: refined.iterations,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum() {
        let m = golden_section_max(|x| Ok(-(x - 0.3).powi(2)), -1.0, 1.0, 1e-10, 200).unwrap();
        assert!((m.x - 0.3).abs() < 1e-8);
    }

    #[test]
    fn respects_iteration_cap() {
        let m = golden_section_max(|x| Ok(-x * x), -1.0, 1.0, 0.0, 5).unwrap();
        assert_eq!(m.iterations, 5);
    }

    #[test]
    fn bracketing_handles_bimodal_and_endpoints() {
        // local max near -0.5, global near 0.7
        let f = |x: f64| Ok((-(x + 0.5).powi(2) * 50.0).exp() + 2.0 * (-(x - 0.7).powi(2) * 50.0).exp());
        let m = bracketed_max(f, -1.0, 1.0, 20, 1e-10, 200).unwrap();
        assert!((m.x - 0.7).abs() < 1e-6);
        let m = bracketed_max(|x| Ok(x), -1.0, 1.0, 20, 1e-10, 200).unwrap();
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn errors_propagate() {
        use crate::error::Error;
        let r = golden_section_max(|_| Err(Error::Domain("boom".into())), 0.0, 1.0, 1e-6, 10);
        assert!(r.is_err());
    }
}
