use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{CsrMatrix, LinearOperator, Preconditioner};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum StationaryKind {
    Jacobi,
    /// Symmetric SOR with relaxation `omega ∈ (0, 2)`.
    Ssor { omega: f64 },
    /// `degree` Chebyshev steps on the Jacobi-scaled operator.
    Chebyshev { degree: usize },
}

impl Default for StationaryKind {
    fn default() -> Self {
        StationaryKind::Ssor { omega: 1.0 }
    }
}

/// Symmetric positive definite stationary preconditioners.
#[derive(Debug, Clone)]
pub enum StationaryPrecond {
    Jacobi {
        inv_diag: Vec<f64>,
    },
    Ssor {
        a: CsrMatrix,
        diag: Vec<f64>,
        omega: f64,
    },
    Chebyshev {
        a: CsrMatrix,
        inv_diag: Vec<f64>,
        degree: usize,
        lambda_min: f64,
        lambda_max: f64,
    },
}

pub fn stationary_precond(a: &CsrMatrix, kind: StationaryKind) -> Result<StationaryPrecond> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("preconditioner needs a square matrix"));
    }
    let diag = a.diagonal();
    if let Some(i) = diag.iter().position(|&d| !(d > 0.0)) {
        return Err(Error::invalid(format!(
            "diagonal entry {i} is {} (must be positive)",
            diag[i]
        )));
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    Ok(match kind {
        StationaryKind::Jacobi => StationaryPrecond::Jacobi { inv_diag },
        StationaryKind::Ssor { omega } => {
            if !(omega > 0.0 && omega < 2.0) {
                return Err(Error::invalid(format!("SSOR relaxation {omega} outside (0, 2)")));
            }
            StationaryPrecond::Ssor {
                a: a.clone(),
                diag,
                omega,
            }
        }
        StationaryKind::Chebyshev { degree } => {
            if degree == 0 {
                return Err(Error::invalid("Chebyshev degree must be at least 1"));
            }
            let lambda_max = 1.1 * jacobi_spectral_radius(a, &inv_diag);
            StationaryPrecond::Chebyshev {
                a: a.clone(),
                inv_diag,
                degree,
                lambda_min: lambda_max / 30.0,
                lambda_max,
            }
        }
    })
}

/// Power-iteration estimate of the largest eigenvalue of `D⁻¹A`.
fn jacobi_spectral_radius(a: &CsrMatrix, inv_diag: &[f64]) -> f64 {
    let n = a.nrows();
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 / 7.0).collect();
    let mut y = vec![0.0; n];
    let mut lambda = 1.0;
    for _ in 0..30 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        a.apply(&x, &mut y);
        for (yi, di) in y.iter_mut().zip(inv_diag) {
            *yi *= di;
        }
        lambda = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        std::mem::swap(&mut x, &mut y);
    }
    lambda
}

impl Preconditioner for StationaryPrecond {
    fn precondition(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        match self {
            StationaryPrecond::Jacobi { inv_diag } => {
                for ((zi, ri), di) in z.iter_mut().zip(r).zip(inv_diag) {
                    *zi = ri * di;
                }
            }
            StationaryPrecond::Ssor { a, diag, omega } => ssor_apply(a, diag, *omega, r, z),
            StationaryPrecond::Chebyshev {
                a,
                inv_diag,
                degree,
                lambda_min,
                lambda_max,
            } => chebyshev_apply(a, inv_diag, *degree, *lambda_min, *lambda_max, r, z),
        }
        Ok(())
    }
}

/// `z = (2−ω)/ω · (D/ω + U)⁻¹ (D/ω) (D/ω + L)⁻¹ r`.
fn ssor_apply(a: &CsrMatrix, diag: &[f64], omega: f64, r: &[f64], z: &mut [f64]) {
    let n = r.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        let mut s = r[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j < i {
                s -= v * y[j];
            }
        }
        y[i] = s * omega / diag[i];
    }
    for i in 0..n {
        y[i] *= diag[i] / omega;
    }
    for i in (0..n).rev() {
        let (cols, vals) = a.row(i);
        let mut s = y[i];
        for (&j, &v) in cols.iter().zip(vals) {
            if j > i {
                s -= v * z[j];
            }
        }
        z[i] = s * omega / diag[i];
    }
    let scale = (2.0 - omega) / omega;
    z.iter_mut().for_each(|v| *v *= scale);
}

fn chebyshev_apply(
    a: &CsrMatrix,
    inv_diag: &[f64],
    degree: usize,
    lmin: f64,
    lmax: f64,
    r: &[f64],
    z: &mut [f64],
) {
    let n = r.len();
    let theta = 0.5 * (lmax + lmin);
    let delta = 0.5 * (lmax - lmin);
    let sigma = theta / delta;
    let mut rho = 1.0 / sigma;
    let mut res: Vec<f64> = r.iter().zip(inv_diag).map(|(ri, di)| ri * di).collect();
    let mut d: Vec<f64> = res.iter().map(|v| v / theta).collect();
    let mut ad = vec![0.0; n];
    z.iter_mut().for_each(|v| *v = 0.0);
    for k in 0..degree {
        for (zi, di) in z.iter_mut().zip(&d) {
            *zi += di;
        }
        if k + 1 == degree {
            break;
        }
        a.apply(&d, &mut ad);
        for i in 0..n {
            res[i] -= inv_diag[i] * ad[i];
        }
        let rho_new = 1.0 / (2.0 * sigma - rho);
        for (di, ri) in d.iter_mut().zip(&res) {
            *di = rho_new * rho * *di + 2.0 * rho_new / delta * ri;
        }
        rho = rho_new;
    }
}
