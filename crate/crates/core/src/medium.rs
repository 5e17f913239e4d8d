//! Dielectric model of a frequency-dispersive medium with a single gap
//! `(omega_perp, omega_par)`.
//!
//! The permeability is `eps(w) = (w^2 - omega_par^2) / (w^2 - omega_perp^2)`.
//! It is positive on the lower branch `(0, omega_perp)` and the upper branch
//! `(omega_par, inf)` and negative inside the gap, where the refractive index
//! becomes imaginary: `n(xi +/- i0) = +/- i nu(xi)` with `nu = sqrt|eps|`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_c() -> f64 {
    1.0
}

fn default_exclusion() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumParams {
    /// Lower gap edge.
    pub omega_perp: f64,
    /// Upper gap edge.
    pub omega_par: f64,
    /// Vacuum speed of light.
    #[serde(default = "default_c")]
    pub c: f64,
    /// Exclusion radius around `0`, `omega_perp` and `omega_par`, relative to `omega_perp`.
    #[serde(default = "default_exclusion")]
    pub edge_exclusion: f64,
}

/// Which half of the complex frequency plane a branch of `n(w)` is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    UpperHalfPlane,
    LowerHalfPlane,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::UpperHalfPlane => 1.0,
            Side::LowerHalfPlane => -1.0,
        }
    }

    /// Side selected by the sign of an imaginary part; zero counts as upper.
    pub fn of(im: f64) -> Self {
        if im < 0.0 {
            Side::LowerHalfPlane
        } else {
            Side::UpperHalfPlane
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// `(0, omega_perp)`
    LowerBranch,
    /// `(omega_perp, omega_par)`
    Gap,
    /// `(omega_par, inf)`
    UpperBranch,
}

impl Band {
    pub fn name(self) -> &'static str {
        match self {
            Band::LowerBranch => "lower",
            Band::Gap => "gap",
            Band::UpperBranch => "upper",
        }
    }
}

impl MediumParams {
    pub fn new(omega_perp: f64, omega_par: f64, c: f64) -> Result<Self> {
        let m = Self {
            omega_perp,
            omega_par,
            c,
            edge_exclusion: default_exclusion(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_edge_exclusion(mut self, rel: f64) -> Self {
        self.edge_exclusion = rel;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_perp.is_finite() && self.omega_perp > 0.0) {
            return Err(Error::invalid("medium.omega_perp", "must be positive"));
        }
        if !(self.omega_par.is_finite() && self.omega_par > self.omega_perp) {
            return Err(Error::invalid(
                "medium.omega_par",
                "must exceed medium.omega_perp",
            ));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::invalid("medium.c", "must be positive"));
        }
        if !(self.edge_exclusion.is_finite() && self.edge_exclusion > 0.0) {
            return Err(Error::invalid("medium.edge_exclusion", "must be positive"));
        }
        Ok(())
    }

    pub fn exclusion_radius(&self) -> f64 {
        self.edge_exclusion * self.omega_perp
    }

    /// Open-interval test `omega_perp < x < omega_par`.
    pub fn in_gap(&self, x: f64) -> bool {
        x > self.omega_perp && x < self.omega_par
    }

    pub fn permeability(&self, omega: Complex64) -> Result<Complex64> {
        let r = self.exclusion_radius();
        for pole in [self.omega_perp, -self.omega_perp] {
            if (omega - pole).norm() < r {
                return Err(Error::Pole {
                    omega: omega.re,
                    pole,
                });
            }
        }
        let w2 = omega * omega;
        Ok((w2 - self.omega_par * self.omega_par) / (w2 - self.omega_perp * self.omega_perp))
    }

    /// `d eps / d xi` on the real axis.
    pub fn permeability_derivative(&self, xi: f64) -> Result<f64> {
        self.permeability(Complex64::new(xi, 0.0))?;
        let (a, b) = (self.omega_par.powi(2), self.omega_perp.powi(2));
        let d = xi * xi - b;
        Ok(2.0 * xi * (a - b) / (d * d))
    }

    /// Refractive index `n(w) = sqrt(eps(w))` on the sheet attached to `side`.
    ///
    /// On the real axis outside the gap the positive root is returned; inside
    /// the gap `n(xi +/- i0) = +/- i nu(xi)`. Off the axis, a point in the
    /// half-plane named by `side` gets the principal root. A point in the
    /// opposite half-plane is reached by continuing across the real axis: across
    /// the gap this flips the sign of the root, across an allowed band it does
    /// not.
    pub fn refractive_index(&self, omega: Complex64, side: Side) -> Result<Complex64> {
        let eps = self.permeability(omega)?;
        if omega.im == 0.0 {
            let e = eps.re;
            return Ok(if e >= 0.0 {
                Complex64::new(e.sqrt(), 0.0)
            } else {
                Complex64::new(0.0, side.sign() * (-e).sqrt())
            });
        }
        let principal = eps.sqrt();
        let on_side = Side::of(omega.im) == side;
        if on_side || !self.in_gap(omega.re.abs()) {
            Ok(principal)
        } else {
            Ok(-principal)
        }
    }

    /// `nu(xi) = sqrt|eps(xi)|` for `xi` inside the gap.
    pub fn nu(&self, xi: f64) -> Result<f64> {
        self.check_gap(xi)?;
        let eps = self.permeability(Complex64::new(xi, 0.0))?.re;
        Ok(eps.abs().sqrt())
    }

    /// Wavenumber `k = w n(w) / c` on the sheet attached to `side`.
    pub fn wavenumber(&self, omega: Complex64, side: Side) -> Result<Complex64> {
        Ok(omega * self.refractive_index(omega, side)? / self.c)
    }

    /// Gap decay constant `kappa = xi nu(xi) / c`.
    pub fn kappa(&self, xi: f64) -> Result<f64> {
        Ok(xi * self.nu(xi)? / self.c)
    }

    /// `d kappa / d xi`, analytic. Refused within the exclusion radius of the
    /// upper gap edge where it diverges.
    pub fn kappa_prime(&self, xi: f64) -> Result<f64> {
        self.check_gap(xi)?;
        if self.omega_par - xi < self.exclusion_radius() {
            return Err(Error::DerivativeOverflow {
                xi,
                edge: self.omega_par,
            });
        }
        let eps = self.permeability(Complex64::new(xi, 0.0))?.re;
        let deps = self.permeability_derivative(xi)?;
        let nu = eps.abs().sqrt();
        Ok(nu * (1.0 + xi * deps / (2.0 * eps)) / self.c)
    }

    /// Atomic form factor `z(w) = w n^3(w) / omega12` on the allowed bands.
    pub fn form_factor(&self, omega: f64, omega12: f64) -> Result<f64> {
        if self.in_gap(omega) {
            return Err(Error::OutOfBand {
                xi: omega,
                reason: "form factor is defined on the propagating bands only",
            });
        }
        let n = self.refractive_index(Complex64::new(omega, 0.0), Side::UpperHalfPlane)?;
        Ok(omega * n.re.powi(3) / omega12)
    }

    pub fn classify(&self, xi: f64) -> Result<Band> {
        let r = self.exclusion_radius();
        if !(xi.is_finite() && xi > 0.0) {
            return Err(Error::Range {
                value: xi,
                reason: "frequency must be positive".into(),
            });
        }
        for edge in [0.0, self.omega_perp, self.omega_par] {
            if (xi - edge).abs() < r {
                return Err(Error::Edge { xi, edge });
            }
        }
        Ok(if xi < self.omega_perp {
            Band::LowerBranch
        } else if xi < self.omega_par {
            Band::Gap
        } else {
            Band::UpperBranch
        })
    }

    fn check_gap(&self, xi: f64) -> Result<()> {
        let out = Error::OutOfGap {
            xi,
            lower: self.omega_perp,
            upper: self.omega_par,
        };
        if !self.in_gap(xi) || xi - self.omega_perp < self.exclusion_radius() {
            return Err(out);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{fd_derivative, linspace};
    use approx::assert_relative_eq;

    fn reference() -> MediumParams {
        MediumParams::new(1.0, 2.0, 1.0).unwrap()
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn permeability_fixtures() {
        let m = reference();
        assert_relative_eq!(m.permeability(re(0.5)).unwrap().re, 5.0, epsilon = 1e-14);
        assert_eq!(m.permeability(re(2.0)).unwrap().re, 0.0);
        assert_relative_eq!(m.permeability(re(1.5)).unwrap().re, -1.4, epsilon = 1e-14);
    }

    #[test]
    fn permeability_pole_is_refused() {
        let m = reference();
        assert!(matches!(
            m.permeability(re(1.0 + 1e-12)),
            Err(Error::Pole { .. })
        ));
        assert!(m.permeability(re(1.0 + 1e-6)).is_ok());
    }

    #[test]
    fn refractive_index_fixtures() {
        let m = reference();
        let n = m.refractive_index(re(0.5), Side::UpperHalfPlane).unwrap();
        assert_relative_eq!(n.re, 5f64.sqrt(), epsilon = 1e-14);
        assert_eq!(n.im, 0.0);

        let n = m.refractive_index(re(1.5), Side::UpperHalfPlane).unwrap();
        assert_eq!(n.re, 0.0);
        assert_relative_eq!(n.im, 1.1832160, epsilon = 1e-7);
        let n = m.refractive_index(re(1.5), Side::LowerHalfPlane).unwrap();
        assert_relative_eq!(n.im, -1.1832160, epsilon = 1e-7);

        let n = m.refractive_index(re(1e6), Side::UpperHalfPlane).unwrap();
        assert_relative_eq!(n.re, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn nu_and_kappa_fixtures() {
        let m = reference();
        assert_relative_eq!(m.nu(1.5).unwrap(), 1.4f64.sqrt(), epsilon = 1e-15);
        assert!(m.nu(2.0 - 1e-12).unwrap() < 1e-5);
        assert!(matches!(m.nu(1.0 + 1e-12), Err(Error::OutOfGap { .. })));
        assert!(matches!(m.nu(0.5), Err(Error::OutOfGap { .. })));
        assert_relative_eq!(m.kappa(1.5).unwrap(), 1.7748239, epsilon = 1e-7);
        assert!(m.kappa(2.0 - 1e-14).unwrap() < 1e-6);
    }

    #[test]
    fn wavenumber_fixtures() {
        let m = reference();
        let k = m.wavenumber(re(0.5), Side::UpperHalfPlane).unwrap();
        assert_relative_eq!(k.re, 1.1180340, epsilon = 1e-7);
        let k = m.wavenumber(re(3.0), Side::UpperHalfPlane).unwrap();
        assert!(k.re > 0.0 && k.im == 0.0);
        let k = m.wavenumber(re(1.5), Side::UpperHalfPlane).unwrap();
        assert_eq!(k.re, 0.0);
        assert_relative_eq!(k.im, 1.7748239, epsilon = 1e-7);
    }

    #[test]
    fn wavenumber_carries_inverse_c() {
        let m = MediumParams::new(1.0, 2.0, 2.0).unwrap();
        let k = m.wavenumber(re(0.5), Side::UpperHalfPlane).unwrap();
        assert_relative_eq!(k.re, 0.5 * 5f64.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn kappa_prime_matches_finite_difference() {
        let m = reference();
        for xi in linspace(1.01, 1.99, 60) {
            let analytic = m.kappa_prime(xi).unwrap();
            let fd = fd_derivative(|x| m.kappa(x), xi, 1e-6).unwrap();
            assert_relative_eq!(analytic, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn kappa_decreasing_above_transition() {
        let m = reference();
        let grid = linspace(1.5, 1.999, 1000);
        for w in grid.windows(2) {
            assert!(m.kappa(w[1]).unwrap() < m.kappa(w[0]).unwrap());
        }
        for xi in grid {
            assert!(m.kappa_prime(xi).unwrap() < 0.0);
        }
    }

    #[test]
    fn kappa_prime_overflows_at_upper_edge() {
        let m = reference();
        assert!(matches!(
            m.kappa_prime(2.0 - 1e-12),
            Err(Error::DerivativeOverflow { .. })
        ));
    }

    #[test]
    fn form_factor_fixtures() {
        let m = reference();
        assert_relative_eq!(m.form_factor(0.5, 1.5).unwrap(), 3.7267800, epsilon = 1e-7);
        assert!(m.form_factor(2.0 + 1e-8, 1.5).unwrap() < 1e-10);
        assert!(matches!(
            m.form_factor(1.5, 1.5),
            Err(Error::OutOfBand { .. })
        ));
        // vacuum-like medium at the transition frequency
        let far = MediumParams::new(1e6, 1e6 + 1.0, 1.0).unwrap();
        assert_relative_eq!(far.form_factor(1.5, 1.5).unwrap(), 1.0, epsilon = 1e-5);
    }

    #[test]
    fn classify_bands() {
        let m = reference();
        assert_eq!(m.classify(0.5).unwrap(), Band::LowerBranch);
        assert_eq!(m.classify(1.5).unwrap(), Band::Gap);
        assert_eq!(m.classify(3.0).unwrap(), Band::UpperBranch);
        assert!(matches!(m.classify(1.0), Err(Error::Edge { .. })));
        assert!(matches!(m.classify(2.0 + 1e-12), Err(Error::Edge { .. })));
        assert!(matches!(m.classify(1e-12), Err(Error::Edge { .. })));
        assert!(m.classify(-1.0).is_err());
    }

    #[test]
    fn negative_exactly_in_gap() {
        let m = reference();
        for xi in linspace(1e-3, 6.0, 1000) {
            if (xi - 1.0).abs() < 1e-6 {
                continue;
            }
            let eps = m.permeability(re(xi)).unwrap().re;
            assert_eq!(eps < 0.0, m.in_gap(xi), "xi = {xi}");
        }
    }

    #[test]
    fn branch_limit_from_above() {
        let m = reference();
        for xi in linspace(1.05, 1.95, 19) {
            let nu = m.nu(xi).unwrap();
            let eps = m.permeability(re(xi)).unwrap().re;
            let dnu = nu * m.permeability_derivative(xi).unwrap() / (2.0 * eps);
            for eta in [1e-4, 1e-5, 1e-6] {
                let n = m
                    .refractive_index(Complex64::new(xi, eta), Side::UpperHalfPlane)
                    .unwrap();
                let err = (n - Complex64::new(0.0, nu)).norm();
                assert!(err < 1.01 * dnu.abs() * eta, "xi {xi} eta {eta} err {err}");
            }
        }
    }

    #[test]
    fn schwarz_symmetry() {
        let m = reference();
        for (x, y) in [(0.5, 0.1), (1.5, 0.2), (1.5, -0.3), (3.0, 0.05), (1.9, 1.0)] {
            let w = Complex64::new(x, y);
            let up = m.refractive_index(w, Side::UpperHalfPlane).unwrap();
            let down = m.refractive_index(w.conj(), Side::LowerHalfPlane).unwrap();
            assert_relative_eq!(down.re, up.conj().re, epsilon = 1e-14);
            assert_relative_eq!(down.im, up.conj().im, epsilon = 1e-14);
        }
    }

    #[test]
    fn upper_sheet_continues_through_the_gap() {
        let m = reference();
        let xi = 1.5;
        let side = Side::UpperHalfPlane;
        let above = m.refractive_index(Complex64::new(xi, 1e-7), side).unwrap();
        let below = m.refractive_index(Complex64::new(xi, -1e-7), side).unwrap();
        assert!((above - below).norm() < 1e-5);
        // across an allowed band the principal root is already continuous
        let above = m.refractive_index(Complex64::new(0.5, 1e-7), side).unwrap();
        let below = m
            .refractive_index(Complex64::new(0.5, -1e-7), side)
            .unwrap();
        assert!((above - below).norm() < 1e-5);
    }

    #[test]
    fn vacuum_degeneration() {
        let m = MediumParams::new(1e6, 1e6 + 1.0, 1.0).unwrap();
        for w in [0.3, 1.0, 7.5] {
            let eps = m.permeability(re(w)).unwrap();
            assert!((eps.re - 1.0).abs() < 1e-5);
            let k = m.wavenumber(re(w), Side::UpperHalfPlane).unwrap();
            assert_relative_eq!(k.re, w, max_relative = 1e-5);
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(MediumParams::new(2.0, 1.0, 1.0).is_err());
        assert!(MediumParams::new(0.0, 1.0, 1.0).is_err());
        assert!(MediumParams::new(1.0, 2.0, -1.0).is_err());
    }
}
