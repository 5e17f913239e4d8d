//! The rapidity map `h(w) = (w - omega12) / (w n^3(w))`, its gap
//! continuation, and the auxiliary function `phi(xi) = 1 / (xi nu^3(xi))`
//! whose Taylor coefficients at the transition frequency set the gap-soliton
//! band parameters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{Band, MediumParams, Side};
use crate::numerics::{bisect_then_newton, fd_derivative, newton2d, SolverConfig};

/// Parameters of the chain of two-level atoms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAtomChain", into = "RawAtomChain")]
pub struct AtomChainParams {
    /// Atomic transition frequency.
    pub omega12: f64,
    /// Spacing of string rapidities.
    pub beta: f64,
    /// Vacuum coupling; enters only the vacuum soliton formulas.
    pub gamma: f64,
    /// Linear atom density.
    pub rho: f64,
    /// System length.
    pub length: f64,
    /// Atom count, `round(rho * length)`.
    pub m_atoms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtomChain {
    omega12: f64,
    beta: f64,
    gamma: f64,
    rho: f64,
    length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    m_atoms: Option<u64>,
}

impl TryFrom<RawAtomChain> for AtomChainParams {
    type Error = Error;

    fn try_from(raw: RawAtomChain) -> Result<Self> {
        let p = AtomChainParams::new(raw.omega12, raw.beta, raw.gamma, raw.rho, raw.length)?;
        if let Some(m) = raw.m_atoms {
            if m != p.m_atoms {
                return Err(Error::invalid(
                    "atoms.m_atoms",
                    format!(
                        "{m} is inconsistent with rho * length = {}",
                        p.rho * p.length
                    ),
                ));
            }
        }
        Ok(p)
    }
}

impl From<AtomChainParams> for RawAtomChain {
    fn from(p: AtomChainParams) -> Self {
        RawAtomChain {
            omega12: p.omega12,
            beta: p.beta,
            gamma: p.gamma,
            rho: p.rho,
            length: p.length,
            m_atoms: Some(p.m_atoms),
        }
    }
}

impl AtomChainParams {
    pub fn new(omega12: f64, beta: f64, gamma: f64, rho: f64, length: f64) -> Result<Self> {
        let positive = [
            ("atoms.omega12", omega12),
            ("atoms.beta", beta),
            ("atoms.gamma", gamma),
            ("atoms.length", length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(rho.is_finite() && rho >= 0.0) {
            return Err(Error::invalid("atoms.rho", "must be non-negative"));
        }
        Ok(Self {
            omega12,
            beta,
            gamma,
            rho,
            length,
            m_atoms: (rho * length).round() as u64,
        })
    }
}

/// How the rapidity is computed from a frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RapidityMode {
    /// `h = (w - omega12) / (w n^3)` with the dispersive medium.
    #[default]
    #[serde(alias = "FGM")]
    Fgm,
    /// Empty space: `h = (w - omega12) / omega12` and `k = w / c`.
    #[serde(alias = "VACUUM")]
    Vacuum,
}

/// Linear Taylor coefficients of `phi` at the transition frequency:
/// `phi(xi) ~ a + b (xi - omega12)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaylorAB {
    pub a: f64,
    pub b: f64,
}

/// `phi(xi) = 1 / (xi nu^3(xi))` inside the gap.
pub fn phi(xi: f64, m: &MediumParams) -> Result<f64> {
    if m.in_gap(xi) && m.omega_par - xi < m.exclusion_radius() {
        return Err(Error::DerivativeOverflow {
            xi,
            edge: m.omega_par,
        });
    }
    let nu = m.nu(xi)?;
    Ok(1.0 / (xi * nu.powi(3)))
}

/// `d phi / d xi = -phi (1/xi + 3 eps' / (2 eps))`.
pub fn phi_prime(xi: f64, m: &MediumParams) -> Result<f64> {
    let p = phi(xi, m)?;
    let eps = m.permeability(Complex64::new(xi, 0.0))?.re;
    let deps = m.permeability_derivative(xi)?;
    Ok(-p * (1.0 / xi + 1.5 * deps / eps))
}

/// Medium, atoms and rapidity convention bundled together; every
/// frequency-to-rapidity or frequency-to-momentum map goes through here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub medium: MediumParams,
    pub atoms: AtomChainParams,
    pub mode: RapidityMode,
}

impl Model {
    pub fn new(medium: MediumParams, atoms: AtomChainParams, mode: RapidityMode) -> Self {
        Self {
            medium,
            atoms,
            mode,
        }
    }

    pub fn fgm(medium: MediumParams, atoms: AtomChainParams) -> Self {
        Self::new(medium, atoms, RapidityMode::Fgm)
    }

    pub fn vacuum(medium: MediumParams, atoms: AtomChainParams) -> Self {
        Self::new(medium, atoms, RapidityMode::Vacuum)
    }

    pub fn c(&self) -> f64 {
        self.medium.c
    }

    pub fn omega12(&self) -> f64 {
        self.atoms.omega12
    }

    pub fn rapidity(&self, omega: Complex64, side: Side) -> Result<Complex64> {
        let w12 = self.atoms.omega12;
        match self.mode {
            RapidityMode::Vacuum => Ok((omega - w12) / w12),
            RapidityMode::Fgm => {
                if omega.norm() < self.medium.exclusion_radius() {
                    return Err(Error::Edge {
                        xi: omega.re,
                        edge: 0.0,
                    });
                }
                let n = self.medium.refractive_index(omega, side)?;
                Ok((omega - w12) / (omega * n * n * n))
            }
        }
    }

    /// Rapidity of a real frequency on an allowed band.
    pub fn rapidity_real(&self, xi: f64) -> Result<f64> {
        self.require_allowed(xi)?;
        Ok(self
            .rapidity(Complex64::new(xi, 0.0), Side::UpperHalfPlane)?
            .re)
    }

    /// `dh / d xi` on an allowed band.
    pub fn rapidity_derivative(&self, xi: f64) -> Result<f64> {
        let w12 = self.atoms.omega12;
        match self.mode {
            RapidityMode::Vacuum => Ok(1.0 / w12),
            RapidityMode::Fgm => {
                self.require_allowed(xi)?;
                let m = &self.medium;
                let eps = m.permeability(Complex64::new(xi, 0.0))?.re;
                let deps = m.permeability_derivative(xi)?;
                let n3 = eps.powf(1.5);
                Ok((1.0 - (xi - w12) * (1.0 / xi + 1.5 * deps / eps)) / (xi * n3))
            }
        }
    }

    pub fn wavenumber(&self, omega: Complex64, side: Side) -> Result<Complex64> {
        match self.mode {
            RapidityMode::Vacuum => Ok(omega / self.medium.c),
            RapidityMode::Fgm => self.medium.wavenumber(omega, side),
        }
    }

    pub fn wavenumber_real(&self, xi: f64) -> Result<f64> {
        self.require_allowed(xi)?;
        Ok(self
            .wavenumber(Complex64::new(xi, 0.0), Side::UpperHalfPlane)?
            .re)
    }

    /// `dk / d xi` on an allowed band, the inverse group velocity outside the atoms.
    pub fn wavenumber_derivative(&self, xi: f64) -> Result<f64> {
        let c = self.medium.c;
        match self.mode {
            RapidityMode::Vacuum => Ok(1.0 / c),
            RapidityMode::Fgm => {
                self.require_allowed(xi)?;
                let m = &self.medium;
                let eps = m.permeability(Complex64::new(xi, 0.0))?.re;
                let deps = m.permeability_derivative(xi)?;
                let n = eps.sqrt();
                Ok(n * (1.0 + xi * deps / (2.0 * eps)) / c)
            }
        }
    }

    /// Taylor coefficients of `phi` at `omega12`. The analytic slope is
    /// checked against a centered difference (step `1e-6 omega12`); a
    /// relative mismatch above `1e-6` is an error.
    pub fn taylor_ab(&self) -> Result<TaylorAB> {
        let m = &self.medium;
        let w12 = self.atoms.omega12;
        if !m.in_gap(w12) {
            return Err(Error::OutOfGap {
                xi: w12,
                lower: m.omega_perp,
                upper: m.omega_par,
            });
        }
        let a = phi(w12, m)?;
        let b = phi_prime(w12, m)?;
        let fd = fd_derivative(|x| phi(x, m), w12, 1e-6 * w12)?;
        if (b - fd).abs() > 1e-6 * b.abs().max(a) {
            return Err(Error::CrossCheck {
                what: "d phi / d xi at omega12",
                analytic: b,
                numeric: fd,
            });
        }
        Ok(TaylorAB { a, b })
    }

    /// Real frequency on `band` whose rapidity is `target`.
    ///
    /// On the lower branch `h` rises monotonically from `-inf` to `0`. On the
    /// upper branch `h` falls from `+inf` to a minimum and then creeps back
    /// up; only the falling segment next to the gap edge is searched. In
    /// vacuum mode the map is linear and inverted exactly.
    pub fn invert_rapidity(&self, target: f64, band: Band, cfg: &SolverConfig) -> Result<f64> {
        let w12 = self.atoms.omega12;
        if self.mode == RapidityMode::Vacuum {
            return Ok(w12 * (1.0 + target));
        }
        let m = &self.medium;
        let r = m.exclusion_radius();
        let scale = target.abs().max(1.0);
        let h = |x: f64| self.rapidity_real(x);
        let range = |reason: String| Error::Range {
            value: target,
            reason,
        };

        let (lo, hi) = match band {
            Band::Gap => {
                return Err(range(
                    "real rapidities have no real preimage inside the gap".into(),
                ))
            }
            Band::LowerBranch => {
                let hi = m.omega_perp - 2.0 * r;
                let h_hi = h(hi)?;
                let mut lo = 0.5 * m.omega_perp;
                let mut h_lo = h(lo)?;
                let increasing = h_hi > h_lo;
                let mut tries = 0;
                while (h_lo - target) * (h_hi - target) > 0.0 && tries < 60 {
                    if lo / 2.0 < 2.0 * r {
                        break;
                    }
                    lo /= 2.0;
                    h_lo = h(lo)?;
                    tries += 1;
                }
                if (h_lo - target) * (h_hi - target) > 0.0 {
                    return Err(range(format!(
                        "outside h(lower branch) = ({}, {}), {}",
                        h_lo.min(h_hi),
                        h_lo.max(h_hi),
                        if increasing {
                            "increasing"
                        } else {
                            "decreasing"
                        }
                    )));
                }
                (lo, hi)
            }
            Band::UpperBranch => {
                let lo = m.omega_par + 2.0 * r;
                let hi = self.upper_turning_point(cfg)?;
                let (h_lo, h_hi) = (h(lo)?, h(hi)?);
                if (h_lo - target) * (h_hi - target) > 0.0 {
                    return Err(range(format!(
                        "outside h(upper branch, falling segment) = [{}, {})",
                        h_hi.min(h_lo),
                        h_hi.max(h_lo)
                    )));
                }
                (lo, hi)
            }
        };
        let root = bisect_then_newton(|x| Ok((h(x)? - target) / scale), (lo, hi), cfg)?;
        Ok(root)
    }

    /// End of the falling segment of `h` on the upper branch: the first zero
    /// of `dh/dxi` above the gap, or a large cutoff when none is found.
    pub fn upper_turning_point(&self, cfg: &SolverConfig) -> Result<f64> {
        let m = &self.medium;
        let lo = m.omega_par * (1.0 + 4.0 * m.edge_exclusion);
        let mut hi = 2.0 * m.omega_par;
        let cutoff = 1e6 * m.omega_par;
        while self.rapidity_derivative(hi)? < 0.0 {
            hi *= 2.0;
            if hi > cutoff {
                return Ok(cutoff);
            }
        }
        let tol = SolverConfig {
            abs_tol: 1e-14,
            ..*cfg
        };
        bisect_then_newton(|x| self.rapidity_derivative(x), (lo, hi), &tol)
    }

    /// Complex frequency with `h(w) = target` on the sheet attached to
    /// `side`, by 2D Newton on `(Re w, Im w)` from `seed`.
    pub fn solve_rapidity(
        &self,
        target: Complex64,
        seed: Complex64,
        side: Side,
        cfg: &SolverConfig,
    ) -> Result<Complex64> {
        if self.mode == RapidityMode::Vacuum {
            return Ok(self.atoms.omega12 * (1.0 + target));
        }
        let sol = newton2d(
            |[x, y]| {
                let d = self.rapidity(Complex64::new(x, y), side)? - target;
                Ok([d.re, d.im])
            },
            [seed.re, seed.im],
            cfg,
        )?;
        Ok(Complex64::new(sol.x[0], sol.x[1]))
    }

    fn require_allowed(&self, xi: f64) -> Result<()> {
        if self.mode == RapidityMode::Vacuum {
            return Ok(());
        }
        match self.medium.classify(xi)? {
            Band::Gap => Err(Error::OutOfBand {
                xi,
                reason: "inside the gap",
            }),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model() -> Model {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.5, 0.01, 0.015, 1.0, 100.0).unwrap();
        Model::fgm(medium, atoms)
    }

    fn re(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    // Centered-difference slope of phi at omega12 = 1.5 for the reference
    // medium, h = 1e-6; frozen before the analytic path existed.
    const B_FD_ORACLE: f64 = 2.215415687900;

    #[test]
    fn rapidity_fixtures() {
        let m = model();
        let h = m.rapidity(re(0.5), Side::UpperHalfPlane).unwrap();
        assert_relative_eq!(h.re, -0.1788854, epsilon = 1e-7);
        assert_eq!(h.im, 0.0);
        let h = m.rapidity(re(3.0), Side::UpperHalfPlane).unwrap();
        assert_relative_eq!(h.re, 1.0119288, epsilon = 1e-7);
    }

    #[test]
    fn rapidity_vanishes_at_transition_on_a_band() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(0.5, 0.01, 0.015, 1.0, 100.0).unwrap();
        let m = Model::fgm(medium, atoms);
        assert_eq!(m.rapidity_real(0.5).unwrap(), 0.0);
    }

    #[test]
    fn gap_continuation_is_imaginary_on_the_axis() {
        let m = model();
        for xi in linspace(1.1, 1.9, 9) {
            let nu = m.medium.nu(xi).unwrap();
            let expected = (xi - 1.5) / (xi * nu.powi(3));
            let up = m.rapidity(re(xi), Side::UpperHalfPlane).unwrap();
            let down = m.rapidity(re(xi), Side::LowerHalfPlane).unwrap();
            assert!(up.re.abs() < 1e-15);
            assert_relative_eq!(up.im, expected, epsilon = 1e-14);
            assert_relative_eq!(down.im, -expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let m = model();
        let grid = linspace(0.05, 0.98, 40)
            .into_iter()
            .chain(linspace(2.02, 8.0, 40));
        for xi in grid {
            let analytic = m.rapidity_derivative(xi).unwrap();
            let fd = fd_derivative(|x| m.rapidity_real(x), xi, 1e-6 * xi).unwrap();
            assert_relative_eq!(analytic, fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn derivative_signs() {
        let m = model();
        for xi in linspace(0.01, 0.999, 1000) {
            assert!(m.rapidity_derivative(xi).unwrap() > 0.0, "xi = {xi}");
        }
        assert!(m.rapidity_derivative(3.0).unwrap() < 0.0);
        assert!(matches!(
            m.rapidity_derivative(1.5),
            Err(Error::OutOfBand { .. })
        ));
        let v = Model::vacuum(m.medium, m.atoms);
        assert_eq!(v.rapidity_derivative(1.5).unwrap(), 1.0 / 1.5);
    }

    #[test]
    fn monotone_and_signed_on_the_branches() {
        let m = model();
        let lower = linspace(0.001, 0.999, 1000);
        let values: Vec<f64> = lower.iter().map(|&x| m.rapidity_real(x).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert!(values.iter().all(|&h| h < 0.0));
        for xi in linspace(2.001, 50.0, 1000) {
            assert!(m.rapidity_real(xi).unwrap() > 0.0);
        }
    }

    #[test]
    fn small_eta_linearization() {
        let m = model();
        let eta = 1e-6;
        for xi in [0.3, 0.7, 2.5, 3.0] {
            let h = m
                .rapidity(Complex64::new(xi, eta), Side::UpperHalfPlane)
                .unwrap();
            let slope = m.rapidity_derivative(xi).unwrap();
            assert!((h.im - eta * slope).abs() < 1e-9 * slope.abs().max(1.0));
        }
    }

    #[test]
    fn phi_fixtures() {
        let m = model().medium;
        assert_relative_eq!(phi(1.5, &m).unwrap(), 0.4024544, epsilon = 1e-7);
        for xi in linspace(1.05, 1.95, 30) {
            let nu = m.nu(xi).unwrap();
            assert_relative_eq!(phi(xi, &m).unwrap() * xi * nu.powi(3), 1.0, epsilon = 1e-14);
        }
        assert!(matches!(
            phi(2.0 - 1e-12, &m),
            Err(Error::DerivativeOverflow { .. })
        ));
        assert!(phi(0.5, &m).is_err());
    }

    #[test]
    fn taylor_coefficients() {
        let ab = model().taylor_ab().unwrap();
        assert_relative_eq!(ab.a, 0.4024544, epsilon = 1e-7);
        assert_relative_eq!(ab.b, B_FD_ORACLE, max_relative = 1e-6);
    }

    #[test]
    fn taylor_slope_positive_across_gaps() {
        // 3 xi^2 (A - B) > (xi^2 - B)(A - xi^2) on every gap, so phi never turns
        for (lo, hi) in [(1.0, 2.0), (1.0, 10.0), (1.0, 1.3)] {
            let medium = MediumParams::new(lo, hi, 1.0).unwrap();
            for w12 in linspace(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo), 50) {
                let atoms = AtomChainParams::new(w12, 0.01, 0.01, 1.0, 10.0).unwrap();
                let ab = Model::fgm(medium, atoms).taylor_ab().unwrap();
                assert!(ab.a > 0.0 && ab.b > 0.0, "gap ({lo}, {hi}) omega12 {w12}");
            }
        }
    }

    #[test]
    fn taylor_requires_transition_in_gap() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(0.5, 0.01, 0.01, 1.0, 10.0).unwrap();
        assert!(matches!(
            Model::fgm(medium, atoms).taylor_ab(),
            Err(Error::OutOfGap { .. })
        ));
    }

    #[test]
    fn invert_lower_branch_fixture() {
        let m = model();
        let cfg = SolverConfig::default();
        let xi = m
            .invert_rapidity(-0.1788854, Band::LowerBranch, &cfg)
            .unwrap();
        assert_relative_eq!(xi, 0.5, epsilon = 1e-6);
        let xi = m.invert_rapidity(-1e-10, Band::LowerBranch, &cfg).unwrap();
        assert!(1.0 - xi < 1e-2 && xi < 1.0);
        assert!(matches!(
            m.invert_rapidity(0.2, Band::LowerBranch, &cfg),
            Err(Error::Range { .. })
        ));
        assert!(matches!(
            m.invert_rapidity(-0.2, Band::Gap, &cfg),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn invert_upper_branch() {
        let m = model();
        let cfg = SolverConfig::default();
        let turning = m.upper_turning_point(&cfg).unwrap();
        assert!(turning > 5.0 && turning < 5.5, "turning point {turning}");
        assert!(m.rapidity_derivative(turning).unwrap().abs() < 1e-12);
        let target = m.rapidity_real(3.0).unwrap();
        let xi = m.invert_rapidity(target, Band::UpperBranch, &cfg).unwrap();
        assert_relative_eq!(xi, 3.0, epsilon = 1e-10);
        assert!(m.invert_rapidity(0.5, Band::UpperBranch, &cfg).is_err());
    }

    #[test]
    fn vacuum_inversion_is_exact() {
        let m = model();
        let v = Model::vacuum(m.medium, m.atoms);
        let cfg = SolverConfig::default();
        for h in [-0.3, 0.0, 0.25] {
            let w = v.invert_rapidity(h, Band::LowerBranch, &cfg).unwrap();
            assert_eq!(w, 1.5 * (1.0 + h));
        }
    }

    #[test]
    fn complex_inversion_round_trip() {
        let m = model();
        let cfg = SolverConfig::default();
        let w0 = Complex64::new(0.5, 0.003);
        let target = m.rapidity(w0, Side::UpperHalfPlane).unwrap();
        let w = m
            .solve_rapidity(target, re(0.5), Side::UpperHalfPlane, &cfg)
            .unwrap();
        assert!((w - w0).norm() < 1e-10);
    }

    #[test]
    fn atom_count_consistency() {
        let p = AtomChainParams::new(1.5, 0.01, 0.01, 0.3, 10.0).unwrap();
        assert_eq!(p.m_atoms, 3);
        let raw = |m_atoms| RawAtomChain {
            omega12: 1.5,
            beta: 0.01,
            gamma: 0.01,
            rho: 0.3,
            length: 10.0,
            m_atoms,
        };
        assert!(AtomChainParams::try_from(raw(Some(4))).is_err());
        assert_eq!(AtomChainParams::try_from(raw(Some(3))).unwrap(), p);
        assert_eq!(AtomChainParams::try_from(raw(None)).unwrap(), p);
    }

    proptest! {
        #[test]
        fn inversion_round_trip(target in -10.0f64..-1e-3) {
            let m = model();
            let cfg = SolverConfig::default();
            let xi = m.invert_rapidity(target, Band::LowerBranch, &cfg).unwrap();
            let back = m.rapidity_real(xi).unwrap();
            prop_assert!((back - target).abs() < 1e-12 * target.abs().max(1.0));
        }
    }
}
