//! Adaptive Simpson quadrature over a fixed panel layout, for vector-valued
//! integrands (several integrals sharing one set of function evaluations).

use crate::{Error, Result};

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy)]
pub struct Simpson<const K: usize> {
    /// Absolute error target per component, per unit of interval length.
    pub tolerance_density: [f64; K],
    /// Upper bound on the width of the initial panels.
    pub max_panel_width: f64,
}

fn add<const K: usize>(a: [f64; K], b: [f64; K]) -> [f64; K] {
    std::array::from_fn(|i| a[i] + b[i])
}

fn rule<const K: usize>(fa: &[f64; K], fm: &[f64; K], fb: &[f64; K], h: f64) -> [f64; K] {
    std::array::from_fn(|i| h / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i]))
}

impl<const K: usize> Simpson<K> {
    pub fn integrate(&self, f: &impl Fn(f64) -> [f64; K], a: f64, b: f64) -> Result<[f64; K]> {
        if b <= a {
            return Ok([0.0; K]);
        }
        let panels = ((b - a) / self.max_panel_width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        let mut total = [0.0; K];
        let mut left = f(a);
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let hi = if p + 1 == panels {
                b
            } else {
                a + (p + 1) as f64 * h
            };
            let mid = 0.5 * (lo + hi);
            let (fm, fb) = (f(mid), f(hi));
            let whole = rule(&left, &fm, &fb, hi - lo);
            let tol = self.tolerance_density.map(|d| d * (hi - lo));
            total = add(
                total,
                self.refine(f, lo, hi, left, fm, fb, whole, tol, MAX_DEPTH)?,
            );
            left = fb;
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        f: &impl Fn(f64) -> [f64; K],
        a: f64,
        b: f64,
        fa: [f64; K],
        fm: [f64; K],
        fb: [f64; K],
        whole: [f64; K],
        tol: [f64; K],
        depth: u32,
    ) -> Result<[f64; K]> {
        let m = 0.5 * (a + b);
        let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
        let left = rule(&fa, &flm, &fm, m - a);
        let right = rule(&fm, &frm, &fb, b - m);
        let delta: [f64; K] = std::array::from_fn(|i| left[i] + right[i] - whole[i]);
        if (0..K).all(|i| delta[i].abs() <= 15.0 * tol[i]) {
            return Ok(std::array::from_fn(|i| {
                left[i] + right[i] + delta[i] / 15.0
            }));
        }
        if depth == 0 {
            let worst = (0..K)
                .max_by(|&i, &j| (delta[i].abs() / tol[i]).total_cmp(&(delta[j].abs() / tol[j])))
                .unwrap_or(0);
            return Err(Error::Quadrature {
                a,
                b,
                error: delta[worst].abs() / 15.0,
                tolerance: tol[worst],
            });
        }
        let half = tol.map(|t| 0.5 * t);
        let l = self.refine(f, a, m, fa, flm, fm, left, half, depth - 1)?;
        let r = self.refine(f, m, b, fm, frm, fb, right, half, depth - 1)?;
        Ok(add(l, r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_exactly() {
        let q = Simpson {
            tolerance_density: [1e-14],
            max_panel_width: 1.0,
        };
        let v = q.integrate(&|x| [x * x * x], 0.0, 2.0).unwrap();
        assert!((v[0] - 4.0).abs() < 1e-13);
    }

    #[test]
    fn integrates_oscillatory_pair() {
        let q = Simpson {
            tolerance_density: [1e-13, 1e-13],
            max_panel_width: 0.1,
        };
        let v = q
            .integrate(&|x| [x.sin(), (3.0 * x).cos().powi(2)], 0.0, 10.0)
            .unwrap();
        assert!((v[0] - (1.0 - 10f64.cos())).abs() < 1e-11);
        let exact = 5.0 + (60f64).sin() / 12.0;
        assert!((v[1] - exact).abs() < 1e-11);
    }

    #[test]
    fn empty_interval() {
        let q = Simpson {
            tolerance_density: [1.0],
            max_panel_width: 1.0,
        };
        assert_eq!(q.integrate(&|_| [1.0], 3.0, 3.0).unwrap(), [0.0]);
    }

    #[test]
    fn reports_non_convergence() {
        let q = Simpson {
            tolerance_density: [1e-30],
            max_panel_width: 1.0,
        };
        let err = q
            .integrate(&|x: f64| [x.abs().sqrt()], -1.0, 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
