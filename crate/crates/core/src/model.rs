//! Constitutive choices: the degradation function `a(α) = (1-α)² + k_ℓ`, the
//! linear dissipation `w(α) = α`, isotropic elasticity and the closed-form
//! critical loads that follow from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric 2x2 tensor stored by its independent components.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Sym2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl Sym2 {
    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Sym2 { xx, yy, xy }
    }

    pub const fn identity() -> Self {
        Sym2::new(1.0, 1.0, 0.0)
    }

    pub fn scaled(self, s: f64) -> Self {
        Sym2::new(s * self.xx, s * self.yy, s * self.xy)
    }

    pub fn trace(self) -> f64 {
        self.xx + self.yy
    }

    /// Double contraction `self : other`.
    pub fn ddot(self, other: Sym2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }
}

impl std::ops::Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx + o.xx, self.yy + o.yy, self.xy + o.xy)
    }
}

impl std::ops::Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.xx - o.xx, self.yy - o.yy, self.xy - o.xy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    PlaneStress,
    PlaneStrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Material {
    /// Young's modulus.
    pub young: f64,
    pub poisson: f64,
    /// Fracture toughness `G_c`.
    pub toughness: f64,
    /// Internal length `ℓ`.
    pub ell: f64,
    /// Residual stiffness `k_ℓ`.
    pub k_ell: f64,
    /// Thermal expansion coefficient.
    pub expansion: f64,
    pub regime: Regime,
}

impl Default for Material {
    fn default() -> Self {
        Material {
            young: 1.0,
            poisson: 0.3,
            toughness: 1.0,
            ell: 0.1,
            k_ell: 1e-6,
            expansion: 1.0,
            regime: Regime::PlaneStress,
        }
    }
}

impl Material {
    pub fn with_ell(ell: f64) -> Self {
        Material {
            ell,
            ..Material::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.young > 0.0) {
            return Err(Error::invalid("Young's modulus must be positive"));
        }
        if !(self.poisson > -1.0 && self.poisson < 0.5) {
            return Err(Error::invalid("Poisson ratio must lie in (-1, 0.5)"));
        }
        if !(self.toughness > 0.0) {
            return Err(Error::invalid("fracture toughness must be positive"));
        }
        if !(self.ell > 0.0) {
            return Err(Error::invalid("internal length must be positive"));
        }
        if !(self.k_ell > 0.0 && self.k_ell < 1.0) {
            return Err(Error::invalid("residual stiffness must lie in (0, 1)"));
        }
        if !(self.expansion >= 0.0) {
            return Err(Error::invalid("thermal expansion must be nonnegative"));
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// First Lamé-type coefficient of the 2D law `σ = λ tr(ε) I + 2μ ε`.
    pub fn lambda_2d(&self) -> f64 {
        let (e, nu) = (self.young, self.poisson);
        match self.regime {
            Regime::PlaneStress => e * nu / (1.0 - nu * nu),
            Regime::PlaneStrain => e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
        }
    }

    /// Undamaged stress `A0 ε`.
    pub fn stress(&self, strain: Sym2) -> Sym2 {
        let lambda = self.lambda_2d();
        let two_mu = 2.0 * self.shear_modulus();
        let tr = strain.trace();
        Sym2::new(
            lambda * tr + two_mu * strain.xx,
            lambda * tr + two_mu * strain.yy,
            two_mu * strain.xy,
        )
    }

    /// `A0 ε : ε`, twice the undamaged elastic energy density.
    pub fn energy_density2(&self, strain: Sym2) -> f64 {
        self.stress(strain).ddot(strain)
    }

    /// `G_c / c_w`, the prefactor of the dissipated energy.
    pub fn dissipation_scale(&self) -> f64 {
        self.toughness / DamageModel::C_W
    }

    pub fn critical_traction(&self) -> f64 {
        critical_traction(self)
    }
}

/// The fixed damage model `w(α) = α`, `a(α) = (1-α)² + k_ℓ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamageModel {
    pub k_ell: f64,
}

impl DamageModel {
    /// `4 ∫₀¹ √α dα`.
    pub const C_W: f64 = 8.0 / 3.0;

    pub fn new(k_ell: f64) -> Self {
        DamageModel { k_ell }
    }

    /// `(a, a', a'')`.
    #[inline]
    pub fn a(&self, alpha: f64) -> (f64, f64, f64) {
        let s = 1.0 - alpha;
        (s * s + self.k_ell, -2.0 * s, 2.0)
    }

    /// `(w, w', w'')`.
    #[inline]
    pub fn w(&self, alpha: f64) -> (f64, f64, f64) {
        (alpha, 1.0, 0.0)
    }

    pub fn c_w(&self) -> f64 {
        Self::C_W
    }
}

/// Applies the stiffness tensor of `material` to `strain`.
pub fn stiffness_tensor(material: &Material, strain: Sym2) -> Sym2 {
    material.stress(strain)
}

/// Traction at which the homogeneous elastic state of a bar loses stability,
/// `t_c = sqrt(3 G_c / (8 E ℓ))`.
pub fn critical_traction(material: &Material) -> f64 {
    (3.0 * material.toughness / (8.0 * material.young * material.ell)).sqrt()
}

/// Critical thermal shock amplitude `sqrt(8 E ℓ / (3 β² G_c))`.
pub fn critical_shock(material: &Material) -> Result<f64> {
    let beta = material.expansion;
    if !(beta > 0.0) {
        return Err(Error::invalid("thermal expansion must be positive"));
    }
    Ok((8.0 * material.young * material.ell / (3.0 * beta * beta * material.toughness)).sqrt())
}

/// Internal length matching a critical stress, `ℓ = 3 G_c E / (8 σ_c²)`.
pub fn internal_length(toughness: f64, young: f64, critical_stress: f64) -> Result<f64> {
    if !(critical_stress > 0.0) {
        return Err(Error::invalid("critical stress must be positive"));
    }
    Ok(3.0 * toughness * young / (8.0 * critical_stress * critical_stress))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const K: f64 = 1e-6;

    #[test]
    fn degradation_values() {
        let m = DamageModel::new(K);
        assert_eq!(m.a(0.0), (1.0 + K, -2.0, 2.0));
        assert_eq!(m.a(1.0), (K, 0.0, 2.0));
        assert_eq!(m.a(0.5), (0.25 + K, -1.0, 2.0));
    }

    #[test]
    fn dissipation_values() {
        let m = DamageModel::new(K);
        assert_eq!(m.w(0.0), (0.0, 1.0, 0.0));
        assert_eq!(m.w(1.0), (1.0, 1.0, 0.0));
        // midpoint rule on 4 sqrt(α) converges to 8/3
        let n = 200_000;
        let integral: f64 = (0..n)
            .map(|i| 4.0 * ((i as f64 + 0.5) / n as f64).sqrt() / n as f64)
            .sum();
        assert!((integral - DamageModel::C_W).abs() < 1e-6);
    }

    #[test]
    fn plane_stress_law() {
        let mut mat = Material {
            poisson: 0.0,
            ..Material::default()
        };
        let s = stiffness_tensor(&mat, Sym2::identity());
        assert!((s.xx - 1.0).abs() < 1e-15 && (s.yy - 1.0).abs() < 1e-15 && s.xy == 0.0);

        mat.poisson = 0.3;
        let s = stiffness_tensor(&mat, Sym2::identity());
        // E/(1-ν²) (1-ν+2ν) = 1.3/0.91
        assert!((s.xx - 1.3 / 0.91).abs() < 1e-14);
        assert!((s.xx - 1.428_571_428_571).abs() < 1e-11);

        let shear = stiffness_tensor(&mat, Sym2::new(0.0, 0.0, 0.01));
        assert!((shear.xy - 2.0 * mat.shear_modulus() * 0.01).abs() < 1e-16);
        assert_eq!(shear.xx, 0.0);
    }

    #[test]
    fn critical_quantities() {
        let mat = Material::with_ell(0.1);
        assert!((critical_traction(&mat) - 3.75f64.sqrt()).abs() < 1e-14);
        assert!((critical_traction(&mat) - 1.936_492).abs() < 1e-6);

        let tough = Material {
            toughness: 4.0,
            ..mat
        };
        assert!((critical_traction(&tough) - 2.0 * critical_traction(&mat)).abs() < 1e-14);
        assert!((critical_traction(&Material::with_ell(3.0 / 8.0)) - 1.0).abs() < 1e-15);

        let unit = Material::with_ell(1.0);
        let dtc = critical_shock(&unit).unwrap();
        assert!((dtc - 1.632_993).abs() < 1e-6);
        assert!((dtc - 1.0 / critical_traction(&unit)).abs() < 1e-14);
        let doubled = Material {
            expansion: 2.0,
            ..unit
        };
        assert!((critical_shock(&doubled).unwrap() - 0.5 * dtc).abs() < 1e-14);
        assert!(critical_shock(&Material {
            expansion: 0.0,
            ..unit
        })
        .is_err());
    }

    #[test]
    fn internal_length_relation() {
        assert!((internal_length(1.0, 1.0, 1.0).unwrap() - 0.375).abs() < 1e-15);
        assert!(
            (internal_length(1.0, 1.0, 2.0).unwrap() - 0.375 / 4.0).abs() < 1e-15
        );
        // with ℓ chosen from σ_c, the bar critical strain is σ_c / E
        let (gc, e, sc) = (2.0, 3.0, 1.7);
        let ell = internal_length(gc, e, sc).unwrap();
        let mat = Material {
            young: e,
            toughness: gc,
            ell,
            ..Material::default()
        };
        assert!((critical_traction(&mat) - sc / e).abs() < 1e-14);
        assert!(internal_length(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(Material::default().validate().is_ok());
        for bad in [
            Material { young: 0.0, ..Material::default() },
            Material { poisson: 0.5, ..Material::default() },
            Material { k_ell: 0.0, ..Material::default() },
            Material { ell: -1.0, ..Material::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    fn sym() -> impl Strategy<Value = Sym2> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b, c)| Sym2::new(a, b, c))
    }

    proptest! {
        #[test]
        fn second_derivatives_match_fd(alpha in 0.0..1.0f64) {
            let m = DamageModel::new(K);
            let h = 1e-6;
            let fd_a = (m.a(alpha + h).1 - m.a(alpha - h).1) / (2.0 * h);
            let fd_w = (m.w(alpha + h).1 - m.w(alpha - h).1) / (2.0 * h);
            prop_assert!((fd_a - m.a(alpha).2).abs() < 1e-6);
            prop_assert!((fd_w - m.w(alpha).2).abs() < 1e-6);
            prop_assert!(m.a(alpha).1 <= 0.0);
        }

        #[test]
        fn stiffness_symmetric(e1 in sym(), e2 in sym()) {
            let mat = Material::default();
            let lhs = stiffness_tensor(&mat, e1).ddot(e2);
            let rhs = stiffness_tensor(&mat, e2).ddot(e1);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn stiffness_positive(e in sym()) {
            let mat = Material::default();
            let norm = e.ddot(e);
            prop_assume!(norm > 1e-12);
            prop_assert!(stiffness_tensor(&mat, e).ddot(e) > 0.0);
        }
    }
}
