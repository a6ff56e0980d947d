//! Dense primal simplex specialized to the three equality rows of the moment
//! problem (total mass, mean, second moment). Basic feasible solutions have
//! at most three atoms, which is exactly the support structure the optimal
//! laws are known to have.
//!
//! The caller provides atoms in normalized coordinates `u = t/zeta` in
//! `[-1, 1]` and objective values scaled to `[0, 1]`, so fixed absolute
//! tolerances are meaningful. Pivoting is deterministic: largest reduced
//! cost with smallest-index tie-breaks, falling back to Bland's rule after a
//! run of degenerate pivots.

use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

const TOL_OPT: f64 = 1e-11;
const TOL_PIV: f64 = 1e-11;
const TOL_DEGENERATE: f64 = 1e-14;
const STALL_LIMIT: usize = 50;

#[derive(Debug)]
pub(super) struct SimplexOutcome<F> {
    pub basis: [usize; 3],
    pub weights: [F; 3],
    /// Dual multipliers `(y0, y1, y2)`: the majorant is `y0 + y1 u + y2 u^2`.
    pub dual: [F; 3],
}

/// Maximize `sum_j p_j costs[j]` subject to `sum p = 1`, `sum p u = 0`,
/// `sum p u^2 = second_moment`, `p >= 0`, starting from the feasible basis
/// `start` (indices into `atoms`).
pub(super) fn maximize<F: Scalar>(
    atoms: &[F],
    costs: &[F],
    second_moment: F,
    start: [usize; 3],
) -> Result<SimplexOutcome<F>> {
    let n = atoms.len();
    debug_assert_eq!(costs.len(), n);
    let rhs = [F::one(), F::zero(), second_moment];
    let tol_opt = real::<F>(TOL_OPT);
    let tol_piv = real::<F>(TOL_PIV);
    let tol_degen = real::<F>(TOL_DEGENERATE);

    let mut basis = start;
    let mut bland = false;
    let mut stall = 0usize;
    let max_iter = 40 * n + 400;

    for _ in 0..max_iter {
        let m = basis_matrix(atoms, &basis);
        let weights = m
            .solve_refined(&rhs)
            .ok_or_else(|| singular(&basis, atoms))?;
        let cost_basis = [costs[basis[0]], costs[basis[1]], costs[basis[2]]];
        let dual = m
            .transposed()
            .solve_refined(&cost_basis)
            .ok_or_else(|| singular(&basis, atoms))?;

        // price out nonbasic columns
        let mut entering: Option<usize> = None;
        let mut best = tol_opt;
        for j in 0..n {
            if basis.contains(&j) {
                continue;
            }
            let u = atoms[j];
            let reduced = costs[j] - (dual[0] + dual[1] * u + dual[2] * u * u);
            if bland {
                if reduced > tol_opt {
                    entering = Some(j);
                    break;
                }
            } else if reduced > best {
                best = reduced;
                entering = Some(j);
            }
        }

        let Some(e) = entering else {
            return Ok(SimplexOutcome {
                basis,
                weights,
                dual,
            });
        };

        let ue = atoms[e];
        let direction = m
            .solve_refined(&[F::one(), ue, ue * ue])
            .ok_or_else(|| singular(&basis, atoms))?;

        // ratio test; ties go to the smallest variable index (Bland-safe)
        let mut leave: Option<usize> = None;
        let mut theta = F::infinity();
        for i in 0..3 {
            if direction[i] > tol_piv {
                let ratio = weights[i].max(F::zero()) / direction[i];
                match leave {
                    None => {
                        theta = ratio;
                        leave = Some(i);
                    }
                    Some(l) => {
                        let tie = (ratio - theta).abs() <= real::<F>(1e-12) * (F::one() + theta);
                        if tie {
                            if basis[i] < basis[l] {
                                leave = Some(i);
                            }
                        } else if ratio < theta {
                            theta = ratio;
                            leave = Some(i);
                        }
                    }
                }
            }
        }
        let Some(leave) = leave else {
            return Err(Error::Solver(format!(
                "moment simplex detected an unbounded direction on a bounded feasible set: basis {:?} weights {:?} direction {:?} entering {} atom {}",
                basis, weights, direction, e, atoms[e]
            )));
        };

        if theta <= tol_degen {
            stall += 1;
            if stall > STALL_LIMIT {
                bland = true;
            }
        } else {
            stall = 0;
        }
        basis[leave] = e;
    }

    Err(Error::Solver(format!(
        "moment simplex failed to converge in {max_iter} iterations"
    )))
}

fn singular<F: Scalar>(basis: &[usize; 3], atoms: &[F]) -> Error {
    Error::Solver(format!(
        "singular basis {{{}, {}, {}}} in moment simplex",
        atoms[basis[0]], atoms[basis[1]], atoms[basis[2]]
    ))
}

fn basis_matrix<F: Scalar>(atoms: &[F], basis: &[usize; 3]) -> Mat3<F> {
    let u = [atoms[basis[0]], atoms[basis[1]], atoms[basis[2]]];
    Mat3([
        [F::one(), F::one(), F::one()],
        [u[0], u[1], u[2]],
        [u[0] * u[0], u[1] * u[1], u[2] * u[2]],
    ])
}

/// Row-major 3x3 matrix with a partial-pivot solve and one step of iterative
/// refinement.
#[derive(Clone, Copy)]
struct Mat3<F>([[F; 3]; 3]);

impl<F: Scalar> Mat3<F> {
    fn transposed(&self) -> Self {
        let a = &self.0;
        Mat3([
            [a[0][0], a[1][0], a[2][0]],
            [a[0][1], a[1][1], a[2][1]],
            [a[0][2], a[1][2], a[2][2]],
        ])
    }

    fn mul(&self, x: &[F; 3]) -> [F; 3] {
        let a = &self.0;
        [
            a[0][0] * x[0] + a[0][1] * x[1] + a[0][2] * x[2],
            a[1][0] * x[0] + a[1][1] * x[1] + a[1][2] * x[2],
            a[2][0] * x[0] + a[2][1] * x[1] + a[2][2] * x[2],
        ]
    }

    fn solve(&self, b: &[F; 3]) -> Option<[F; 3]> {
        let mut a = self.0;
        let mut rhs = *b;
        for col in 0..3 {
            let mut piv = col;
            for row in col + 1..3 {
                if a[row][col].abs() > a[piv][col].abs() {
                    piv = row;
                }
            }
            if a[piv][col].abs() < real::<F>(1e-300) {
                return None;
            }
            a.swap(col, piv);
            rhs.swap(col, piv);
            for row in col + 1..3 {
                let factor = a[row][col] / a[col][col];
                for k in col..3 {
                    a[row][k] = a[row][k] - factor * a[col][k];
                }
                rhs[row] = rhs[row] - factor * rhs[col];
            }
        }
        let mut x = [F::zero(); 3];
        for row in (0..3).rev() {
            let mut s = rhs[row];
            for k in row + 1..3 {
                s = s - a[row][k] * x[k];
            }
            x[row] = s / a[row][row];
        }
        Some(x)
    }

    fn solve_refined(&self, b: &[F; 3]) -> Option<[F; 3]> {
        let x = self.solve(b)?;
        let ax = self.mul(&x);
        let residual = [b[0] - ax[0], b[1] - ax[1], b[2] - ax[2]];
        let dx = self.solve(&residual)?;
        Some([x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]])
    }
}
