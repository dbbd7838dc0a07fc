//! Two-phase revised simplex with Bland's rule for small dense programs
//! `min c'x  s.t.  A x = b, x >= 0`. The basis is refactorised every pivot.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-9;
const FEAS_EPS: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Dual prices of the equality rows, so that `c_j - duals'A_j >= 0`.
    pub duals: Vec<f64>,
    pub objective: f64,
}

struct Problem {
    /// Columns of `[A | I]` after sign normalisation of `b`.
    cols: Vec<DVector<f64>>,
    b: DVector<f64>,
    basis: Vec<usize>,
    m: usize,
    n: usize,
}

struct Factor {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_t: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl Problem {
    fn factor(&self) -> Result<Factor> {
        let mut bm = DMatrix::<f64>::zeros(self.m, self.m);
        for (r, &j) in self.basis.iter().enumerate() {
            bm.set_column(r, &self.cols[j]);
        }
        let lu_t = bm.transpose().lu();
        let lu = bm.lu();
        if !lu.is_invertible() {
            return Err(Error::SolverFailure {
                reason: "singular simplex basis".into(),
                residual: f64::NAN,
            });
        }
        Ok(Factor { lu, lu_t })
    }

    fn solve(f: &Factor, v: &DVector<f64>) -> DVector<f64> {
        f.lu.solve(v).expect("basis is invertible")
    }

    fn duals(&self, f: &Factor, cost: &[f64]) -> DVector<f64> {
        let cb = DVector::from_iterator(self.m, self.basis.iter().map(|&j| cost[j]));
        f.lu_t.solve(&cb).expect("basis is invertible")
    }

    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let scale = 1.0 + cost.iter().map(|c| c.abs()).fold(0.0, f64::max);
        let limit = 50 * (self.n + self.m) + 1000;
        for _ in 0..limit {
            let f = self.factor()?;
            let y = self.duals(&f, cost);
            let enter = (0..allowed).find(|&j| !self.basis.contains(&j) && cost[j] - y.dot(&self.cols[j]) < -1e-10 * scale);
            let Some(enter) = enter else {
                return Ok(());
            };
            let xb = Problem::solve(&f, &self.b);
            let w = Problem::solve(&f, &self.cols[enter]);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if w[r] > PIVOT_EPS {
                    let ratio = xb[r].max(0.0) / w[r];
                    let better = match leave {
                        None => true,
                        Some((lr, lv)) => ratio < lv - 1e-12 || (ratio <= lv + 1e-12 && self.basis[r] < self.basis[lr]),
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::SolverFailure {
                    reason: "linear program is unbounded".into(),
                    residual: f64::INFINITY,
                });
            };
            self.basis[r] = enter;
        }
        Err(Error::SolverFailure {
            reason: "simplex iteration limit reached".into(),
            residual: f64::NAN,
        })
    }
}

/// Solves `min c'x` subject to `A x = b`, `x >= 0`; `a` is row-major.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution> {
    let (m, n) = (a.len(), c.len());
    let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut cols: Vec<DVector<f64>> = (0..n)
        .map(|j| DVector::from_iterator(m, (0..m).map(|r| sign[r] * a[r][j])))
        .collect();
    for r in 0..m {
        let mut e = DVector::zeros(m);
        e[r] = 1.0;
        cols.push(e);
    }
    let bv = DVector::from_iterator(m, (0..m).map(|r| sign[r] * b[r]));
    let mut p = Problem { cols, b: bv, basis: (n..n + m).collect(), m, n };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    p.optimize(&phase1, n + m)?;
    let f = p.factor()?;
    let xb = Problem::solve(&f, &p.b);
    let infeasibility: f64 = (0..m).filter(|&r| p.basis[r] >= n).map(|r| xb[r].abs()).sum();
    let scale = 1.0 + b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if infeasibility > FEAS_EPS * scale {
        return Err(Error::LpInfeasible(format!("equality constraints violated by {infeasibility:.3e}")));
    }
    // Swap zero-level artificials out of the basis where a structural column can replace them.
    for r in 0..m {
        if p.basis[r] < n {
            continue;
        }
        let f = p.factor()?;
        let mut er = DVector::zeros(m);
        er[r] = 1.0;
        let row = f.lu_t.solve(&er).expect("basis is invertible");
        if let Some(j) = (0..n).find(|&j| !p.basis.contains(&j) && row.dot(&p.cols[j]).abs() > 1e-7) {
            p.basis[r] = j;
        }
    }

    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat_n(0.0, m));
    p.optimize(&phase2, n)?;

    let f = p.factor()?;
    let xb = Problem::solve(&f, &p.b);
    let mut x = vec![0.0; n];
    for (r, &j) in p.basis.iter().enumerate() {
        if j < n {
            x[j] = xb[r].max(0.0);
        }
    }
    let y = p.duals(&f, &phase2);
    let duals = (0..m).map(|r| sign[r] * y[r]).collect();
    let objective = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Ok(LpSolution { x, duals, objective })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min -x - 2y  s.t. x + y + s1 = 4, x + 3y + s2 = 6.
        let c = [-1.0, -2.0, 0.0, 0.0];
        let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]];
        let sol = minimize(&c, &a, &[4.0, 6.0]).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-12 && (sol.x[1] - 1.0).abs() < 1e-12);
        assert!((sol.objective + 5.0).abs() < 1e-12);
        // Dual feasibility and complementary slackness.
        for j in 0..4 {
            let rc = c[j] - sol.duals[0] * a[0][j] - sol.duals[1] * a[1][j];
            assert!(rc > -1e-12);
            if sol.x[j] > 1e-12 {
                assert!(rc.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // -x - y = -1 twice, min x + 2y.
        let a = vec![vec![-1.0, -1.0], vec![-1.0, -1.0]];
        let sol = minimize(&[1.0, 2.0], &a, &[-1.0, -1.0]).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
        let bound: f64 = -sol.duals[0] - sol.duals[1];
        assert!((bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_program_is_reported() {
        let a = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(minimize(&[1.0, 1.0], &a, &[1.0, 2.0]), Err(Error::LpInfeasible(_))));
    }
}
