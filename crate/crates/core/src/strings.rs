//! Bethe strings and their images in frequency/momentum space.
//!
//! A string of `n` rapidities shares a real part `H` and has imaginary parts
//! `(beta/2)(n + 1 - 2j)`, `j = 1..n`. Mapping each rapidity back through
//! `h(w)` gives the soliton's frequencies; which real interval the images sit
//! on decides whether the string is an ordinary soliton (lower branch), a gap
//! soliton (pairs inside the gap), or neither.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{Band, Side};
use crate::numerics::{newton, newton2d, SolverConfig};
use crate::rapidity::{AtomChainParams, Model, RapidityMode, TaylorAB};

/// Rapidities with `|Im h|` below this are treated as real.
pub const REAL_RAPIDITY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetheString {
    /// Carrying rapidity `H`.
    pub carrying: f64,
    pub n: usize,
    pub beta: f64,
    pub rapidities: Vec<Complex64>,
}

impl BetheString {
    /// Imaginary part of member `j` (1-based): `(beta/2)(n + 1 - 2j)`.
    pub fn offset(n: usize, j: usize, beta: f64) -> f64 {
        0.5 * beta * (n as f64 + 1.0 - 2.0 * j as f64)
    }
}

pub fn build_string(carrying: f64, n: usize, beta: f64) -> Result<BetheString> {
    if n == 0 {
        return Err(Error::invalid("n", "a string holds at least one particle"));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    if !carrying.is_finite() {
        return Err(Error::invalid("H", "must be finite"));
    }
    let rapidities = (1..=n)
        .map(|j| Complex64::new(carrying, BetheString::offset(n, j, beta)))
        .collect();
    Ok(BetheString {
        carrying,
        n,
        beta,
        rapidities,
    })
}

/// Scattering factor `(h_j - h_l - i beta) / (h_j - h_l + i beta)`.
pub fn two_particle_phase(hj: Complex64, hl: Complex64, beta: f64) -> Result<Complex64> {
    let d = hj - hl;
    let ib = Complex64::new(0.0, beta);
    let den = d + ib;
    if den.norm() <= 1e-12 * beta {
        return Err(Error::PhasePole);
    }
    Ok((d - ib) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonKind {
    SinglePolariton,
    OrdinarySoliton,
    GapSoliton,
    CompositeSoliton,
}

impl SolitonKind {
    pub fn name(self) -> &'static str {
        match self {
            SolitonKind::SinglePolariton => "single_polariton",
            SolitonKind::OrdinarySoliton => "ordinary_soliton",
            SolitonKind::GapSoliton => "gap_soliton",
            SolitonKind::CompositeSoliton => "composite_soliton",
        }
    }
}

/// One member of a string together with its frequency and momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Particle {
    pub rapidity: Complex64,
    pub frequency: Complex64,
    pub momentum: Complex64,
    /// Sheet on which `n(w)` was evaluated for this particle.
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolitonImage {
    pub kind: SolitonKind,
    pub particles: Vec<Particle>,
    pub string: BetheString,
}

impl SolitonImage {
    pub fn frequencies(&self) -> Vec<Complex64> {
        self.particles.iter().map(|p| p.frequency).collect()
    }

    pub fn momenta(&self) -> Vec<Complex64> {
        self.particles.iter().map(|p| p.momentum).collect()
    }

    pub fn rapidities(&self) -> Vec<Complex64> {
        self.particles.iter().map(|p| p.rapidity).collect()
    }

    /// `sum_j w_j`; real up to rounding for conjugation-closed images.
    pub fn energy(&self) -> Complex64 {
        self.particles.iter().map(|p| p.frequency).sum()
    }

    pub fn eigenenergy(&self) -> f64 {
        self.energy().re
    }

    pub fn total_momentum(&self) -> Complex64 {
        self.particles.iter().map(|p| p.momentum).sum()
    }

    /// Largest `|h(w_j) - h_j|` over the particles.
    pub fn mapping_residual(&self, model: &Model) -> Result<f64> {
        self.particles.iter().try_fold(0.0_f64, |m, p| {
            let h = model.rapidity(p.frequency, p.side)?;
            Ok(m.max((h - p.rapidity).norm()))
        })
    }
}

pub(crate) fn particle(
    model: &Model,
    rapidity: Complex64,
    frequency: Complex64,
    side: Side,
) -> Result<Particle> {
    Ok(Particle {
        rapidity,
        frequency,
        momentum: model.wavenumber(frequency, side)?,
        side,
    })
}

/// Image of a rapidity on an allowed band, seeded from the real carrier
/// frequency `carrier` (where `h(carrier) = Re h`).
pub(crate) fn map_on_band(
    model: &Model,
    rapidity: Complex64,
    carrier: f64,
    band: Band,
    index: usize,
    cfg: &SolverConfig,
) -> Result<Particle> {
    let side = Side::of(rapidity.im);
    if rapidity.im.abs() < REAL_RAPIDITY_TOL {
        return particle(model, rapidity, Complex64::new(carrier, 0.0), side);
    }
    let slope = model.rapidity_derivative(carrier)?;
    let seed = Complex64::new(carrier, rapidity.im / slope);
    let omega = model
        .solve_rapidity(rapidity, seed, side, cfg)
        .map_err(|e| Error::Mapping {
            index,
            reason: format!("no image on the {} band: {e}", band.name()),
        })?;
    if model.mode == RapidityMode::Fgm {
        let landed = model.medium.classify(omega.re).ok();
        if landed != Some(band) {
            return Err(Error::Mapping {
                index,
                reason: format!("image {omega} left the {} band", band.name()),
            });
        }
    }
    particle(model, rapidity, omega, side)
}

/// Gap-continued solution of `h(xi + i eta) = target` with `Im target > 0`,
/// on the sheet with `n(xi + i0) = i nu(xi)`. Seeded from the linearized
/// solution `xi = omega12 + Im(target)/a`, `eta = -Re(target)/a`.
pub fn solve_gap_rapidity(
    target: Complex64,
    model: &Model,
    ab: &TaylorAB,
    cfg: &SolverConfig,
) -> Result<(Complex64, f64)> {
    let m = &model.medium;
    let w12 = model.atoms.omega12;
    if target.im <= 0.0 {
        return Err(Error::invalid(
            "target",
            "gap pairs are solved for the member with positive imaginary rapidity",
        ));
    }
    let escaped = |xi: f64| Error::OutOfGap {
        xi,
        lower: m.omega_perp,
        upper: m.omega_par,
    };
    let seed = [w12 + target.im / ab.a, -target.re / ab.a];
    let sol = newton2d(
        |[x, y]| {
            if !m.in_gap(x) {
                return Err(escaped(x));
            }
            let d = model.rapidity(Complex64::new(x, y), Side::UpperHalfPlane)? - target;
            Ok([d.re, d.im])
        },
        seed,
        cfg,
    )?;
    let [xi, eta] = sol.x;
    if !(xi > w12 && xi < m.omega_par) {
        return Err(Error::OutOfGap {
            xi,
            lower: w12,
            upper: m.omega_par,
        });
    }
    Ok((Complex64::new(xi, eta), sol.residual))
}

/// Solution `(xi_j, eta_j)` of the pair equations for pair `j` of an
/// `l`-pair gap soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairParams {
    pub l: usize,
    pub j: usize,
    pub xi: f64,
    pub eta: f64,
    /// Newton residual; `None` for the closed-form approximation.
    pub residual: Option<f64>,
}

fn check_pair_index(l: usize, j: usize) -> Result<()> {
    if l == 0 {
        return Err(Error::invalid("l", "at least one pair"));
    }
    if j == 0 || j > l {
        return Err(Error::invalid("j", format!("must lie in 1..={l}, got {j}")));
    }
    Ok(())
}

/// `Re h(xi_j, eta_j) = H`, `Im h(xi_j, eta_j) = beta (l + 1/2 - j)`, solved
/// by 2D Newton seeded from [`approx_pair_params`] (with `eta` signed as `-H/a`).
pub fn solve_pair_params(
    carrying: f64,
    l: usize,
    j: usize,
    model: &Model,
    cfg: &SolverConfig,
) -> Result<PairParams> {
    check_pair_index(l, j)?;
    let ab = model.taylor_ab()?;
    let beta = model.atoms.beta;
    let target = Complex64::new(carrying, beta * (l as f64 + 0.5 - j as f64));
    let (omega, residual) = solve_gap_rapidity(target, model, &ab, cfg)?;
    Ok(PairParams {
        l,
        j,
        xi: omega.re,
        eta: omega.im,
        residual: Some(residual),
    })
}

/// `xi_j = omega12 + (beta/a)(l + 1/2 - j)`, `eta = |H|/a`.
pub fn approx_pair_params(
    carrying: f64,
    l: usize,
    j: usize,
    ab: &TaylorAB,
    atoms: &AtomChainParams,
) -> Result<PairParams> {
    check_pair_index(l, j)?;
    Ok(PairParams {
        l,
        j,
        xi: atoms.omega12 + (atoms.beta / ab.a) * (l as f64 + 0.5 - j as f64),
        eta: carrying.abs() / ab.a,
        residual: None,
    })
}

/// Maps every rapidity of `string` onto `band`.
///
/// Lower/upper branch: the carrier frequency is `h^{-1}(H)` on that band and
/// each member is found by complex Newton from the first-order seed
/// `carrier + i Im(h_j)/h'(carrier)`. Gap: `n` must be even; member `j` and
/// its conjugate `n + 1 - j` form one gap pair. Vacuum mode maps linearly and
/// ignores `band`.
pub fn map_string(
    string: &BetheString,
    band: Band,
    model: &Model,
    cfg: &SolverConfig,
) -> Result<SolitonImage> {
    let single_or_ordinary = if string.n == 1 {
        SolitonKind::SinglePolariton
    } else {
        SolitonKind::OrdinarySoliton
    };
    if model.mode == RapidityMode::Vacuum {
        let particles = string
            .rapidities
            .iter()
            .map(|&h| {
                let w = model.atoms.omega12 * (1.0 + h);
                particle(model, h, w, Side::of(h.im))
            })
            .collect::<Result<_>>()?;
        return Ok(SolitonImage {
            kind: single_or_ordinary,
            particles,
            string: string.clone(),
        });
    }

    match band {
        Band::LowerBranch | Band::UpperBranch => {
            let carrier = model
                .invert_rapidity(string.carrying, band, cfg)
                .map_err(|e| Error::Mapping {
                    index: 1,
                    reason: format!("carrying rapidity has no {} image: {e}", band.name()),
                })?;
            let particles = string
                .rapidities
                .iter()
                .enumerate()
                .map(|(i, &h)| map_on_band(model, h, carrier, band, i + 1, cfg))
                .collect::<Result<_>>()?;
            Ok(SolitonImage {
                kind: single_or_ordinary,
                particles,
                string: string.clone(),
            })
        }
        Band::Gap => {
            if string.n % 2 == 1 {
                return Err(Error::Mapping {
                    index: string.n / 2 + 1,
                    reason: "a real rapidity has no image inside the gap".into(),
                });
            }
            let ab = model.taylor_ab()?;
            let pairs = map_gap_pairs(string, string.n / 2, model, &ab, cfg)?;
            let particles = assemble(string.n, &pairs, &[]);
            Ok(SolitonImage {
                kind: SolitonKind::GapSoliton,
                particles,
                string: string.clone(),
            })
        }
    }
}

/// Upper/lower particle for each of the outermost `count` conjugate pairs of
/// `string`, mapped into the gap.
pub(crate) fn map_gap_pairs(
    string: &BetheString,
    count: usize,
    model: &Model,
    ab: &TaylorAB,
    cfg: &SolverConfig,
) -> Result<Vec<(Particle, Particle)>> {
    (1..=count)
        .map(|j| {
            let upper = string.rapidities[j - 1];
            let omega = solve_gap_rapidity(upper, model, ab, cfg)
                .map(|(w, _)| w)
                .map_err(|e| Error::Mapping {
                    index: j,
                    reason: format!("no gap image: {e}"),
                })?;
            let top = particle(model, upper, omega, Side::UpperHalfPlane)?;
            let bottom = particle(model, upper.conj(), omega.conj(), Side::LowerHalfPlane)?;
            Ok((top, bottom))
        })
        .collect()
}

/// Puts gap pairs (outermost members) and inner particles back into string order.
pub(crate) fn assemble(
    n: usize,
    pairs: &[(Particle, Particle)],
    inner: &[Particle],
) -> Vec<Particle> {
    let mut out = Vec::with_capacity(n);
    out.extend(pairs.iter().map(|p| p.0));
    out.extend_from_slice(inner);
    out.extend(pairs.iter().rev().map(|p| p.1));
    out
}

fn check_m_atoms(m: u64) -> Result<u32> {
    u32::try_from(m).map_err(|_| Error::invalid("atoms.m_atoms", "too large for the residual"))
}

fn atomic_factor(h: Complex64, beta: f64, m_atoms: u32) -> Result<Complex64> {
    let half = Complex64::new(0.0, 0.5 * beta);
    let den = h + half;
    if den.norm() <= 1e-12 * beta {
        return Err(Error::Resonance {
            what: "h_j + i beta/2",
            value: den.norm(),
        });
    }
    Ok(((h - half) / den).powu(m_atoms))
}

/// Residuals of the Bethe ansatz equations, one per particle:
///
/// `exp(i k_j L) ((h_j - i beta/2)/(h_j + i beta/2))^M - prod_{l != j} (h_j - h_l - i beta)/(h_j - h_l + i beta)`.
///
/// The `l = j` factor of the full product is `-1` and cancels the explicit
/// minus sign of the equations. Exact strings put a pole in the lower member
/// of each adjacent pair; see [`refine_string`] for the finite-size solution.
pub fn bae_residual(image: &SolitonImage, model: &Model) -> Result<Vec<Complex64>> {
    (0..image.particles.len())
        .map(|j| bae_residual_of(image, j, model))
        .collect()
}

/// Residual of the equation for particle `j` (0-based) alone.
pub fn bae_residual_of(image: &SolitonImage, j: usize, model: &Model) -> Result<Complex64> {
    let AtomChainParams {
        beta,
        length,
        m_atoms,
        ..
    } = model.atoms;
    let m_atoms = check_m_atoms(m_atoms)?;
    let p = image
        .particles
        .get(j)
        .ok_or_else(|| Error::invalid("j", format!("no particle {j}")))?;
    let lhs =
        (Complex64::i() * p.momentum * length).exp() * atomic_factor(p.rapidity, beta, m_atoms)?;
    let rhs = image
        .particles
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != j)
        .try_fold(Complex64::new(1.0, 0.0), |acc, (_, q)| {
            Ok::<_, Error>(acc * two_particle_phase(p.rapidity, q.rapidity, beta)?)
        })?;
    Ok(lhs - rhs)
}

/// Pole-free form of the equations, each side multiplied by
/// `prod_{l != j} (h_j - h_l + i beta) / beta`, then divided by
/// `1 + |exp(i k_j L) r_j^M|` to keep the residual on a relative scale.
fn bae_balanced(hs: &[Complex64], ks: &[Complex64], model: &Model) -> Result<Vec<Complex64>> {
    let AtomChainParams {
        beta,
        length,
        m_atoms,
        ..
    } = model.atoms;
    let m_atoms = check_m_atoms(m_atoms)?;
    let ib = Complex64::new(0.0, beta);
    hs.iter()
        .zip(ks)
        .enumerate()
        .map(|(j, (&hj, &kj))| {
            let (mut plus, mut minus) = (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
            for (l, &hl) in hs.iter().enumerate() {
                if l != j {
                    plus *= (hj - hl + ib) / beta;
                    minus *= (hj - hl - ib) / beta;
                }
            }
            let lhs = (Complex64::i() * kj * length).exp() * atomic_factor(hj, beta, m_atoms)?;
            Ok((lhs * plus - minus) / (1.0 + lhs.norm()))
        })
        .collect()
}

/// Finite-size solution of the Bethe ansatz equations near `image`.
///
/// At finite `L` the members of a string deviate from the exact spacing by
/// amounts exponentially small in `L`; exact strings therefore satisfy the
/// equations only in product form. This solves the pole-free form of all `n`
/// equations for the frequencies by Newton, starting from the exact image,
/// and keeps each particle on its original sheet. The carrying rapidity must
/// already satisfy the product of all equations; a refined rapidity that moves
/// more than `beta/2` from its string member is rejected.
pub fn refine_string(
    image: &SolitonImage,
    model: &Model,
    cfg: &SolverConfig,
) -> Result<SolitonImage> {
    let sides: Vec<Side> = image.particles.iter().map(|p| p.side).collect();
    let seed: Vec<f64> = image
        .particles
        .iter()
        .flat_map(|p| [p.frequency.re, p.frequency.im])
        .collect();
    let eval = |x: &[f64]| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let mut hs = Vec::with_capacity(sides.len());
        let mut ks = Vec::with_capacity(sides.len());
        for (w, &side) in x.chunks(2).zip(&sides) {
            let w = Complex64::new(w[0], w[1]);
            hs.push(model.rapidity(w, side)?);
            ks.push(model.wavenumber(w, side)?);
        }
        Ok((hs, ks))
    };
    let sol = newton(
        |x| {
            let (hs, ks) = eval(x)?;
            Ok(bae_balanced(&hs, &ks, model)?
                .into_iter()
                .flat_map(|r| [r.re, r.im])
                .collect())
        },
        seed,
        cfg,
    )?;
    let (hs, ks) = eval(&sol.x)?;
    for (i, (h, p)) in hs.iter().zip(&image.particles).enumerate() {
        let drift = (h - p.rapidity).norm();
        if drift.is_nan() || drift > 0.5 * model.atoms.beta {
            return Err(Error::Mapping {
                index: i + 1,
                reason: format!(
                    "refined rapidity {h} drifted {drift:e} from the string member {}",
                    p.rapidity
                ),
            });
        }
    }
    let particles = sol
        .x
        .chunks(2)
        .zip(hs.into_iter().zip(ks))
        .zip(&sides)
        .map(|((w, (h, k)), &side)| Particle {
            rapidity: h,
            frequency: Complex64::new(w[0], w[1]),
            momentum: k,
            side,
        })
        .collect();
    Ok(SolitonImage {
        kind: image.kind,
        particles,
        string: image.string.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NcEntry {
    pub index: usize,
    pub sign_h: i8,
    pub sign_k: i8,
    /// Real rapidity; the condition does not apply.
    pub exempt: bool,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NcReport {
    pub holds: bool,
    pub entries: Vec<NcEntry>,
}

impl NcReport {
    pub fn violating(&self) -> Vec<usize> {
        self.entries
            .iter()
            .filter(|e| !e.satisfied)
            .map(|e| e.index)
            .collect()
    }

    pub fn into_result(self) -> Result<Self> {
        if self.holds {
            Ok(self)
        } else {
            Err(Error::NcViolation {
                violating: self.violating(),
            })
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// `sgn(Im h_j) = sgn(Im k_j)` for every particle with a complex rapidity.
pub fn check_nc(image: &SolitonImage) -> NcReport {
    let entries: Vec<NcEntry> = image
        .particles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let exempt = p.rapidity.im.abs() < REAL_RAPIDITY_TOL;
            let (sign_h, sign_k) = (sign(p.rapidity.im), sign(p.momentum.im));
            NcEntry {
                index: i + 1,
                sign_h,
                sign_k,
                exempt,
                satisfied: exempt || sign_h == sign_k,
            }
        })
        .collect();
    NcReport {
        holds: entries.iter().all(|e| e.satisfied),
        entries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::MediumParams;
    use crate::numerics::linspace;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model() -> Model {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.5, 0.01, 0.015, 1.0, 100.0).unwrap();
        Model::fgm(medium, atoms)
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn string_fixtures() {
        assert_eq!(
            build_string(0.3, 1, 0.01).unwrap().rapidities,
            vec![c(0.3, 0.0)]
        );
        assert_eq!(
            build_string(0.0, 2, 0.01).unwrap().rapidities,
            vec![c(0.0, 0.005), c(0.0, -0.005)]
        );
        assert_eq!(
            build_string(-0.05, 3, 0.01).unwrap().rapidities,
            vec![c(-0.05, 0.01), c(-0.05, 0.0), c(-0.05, -0.01)]
        );
        assert!(build_string(0.0, 0, 0.01).is_err());
        assert!(build_string(0.0, 2, 0.0).is_err());
    }

    #[test]
    fn string_is_conjugation_closed() {
        for n in 1..9 {
            let s = build_string(-0.2, n, 0.03).unwrap();
            let im: f64 = s.rapidities.iter().map(|h| h.im).sum();
            assert!(im.abs() < 1e-15);
            for j in 0..n {
                assert_eq!(s.rapidities[j], s.rapidities[n - 1 - j].conj());
            }
        }
    }

    #[test]
    fn phase_fixtures() {
        let beta = 0.01;
        assert_eq!(
            two_particle_phase(c(0.2, 0.0), c(0.2, 0.0), beta).unwrap(),
            c(-1.0, 0.0)
        );
        let p = two_particle_phase(c(beta, 0.0), c(0.0, 0.0), beta).unwrap();
        assert_relative_eq!(p.re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(p.im, -1.0, epsilon = 1e-15);
        assert!(matches!(
            two_particle_phase(c(0.0, 0.0), c(0.0, 0.01), beta),
            Err(Error::PhasePole)
        ));
    }

    proptest! {
        #[test]
        fn phase_is_unimodular_for_real_rapidities(a in -5.0f64..5.0, b in -5.0f64..5.0, beta in 1e-3f64..1.0) {
            let p = two_particle_phase(c(a, 0.0), c(b, 0.0), beta).unwrap();
            prop_assert!((p.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_particle_free_quantization() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.5, 0.01, 0.015, 0.0, 10.0).unwrap();
        let m = Model::vacuum(medium, atoms);
        let cfg = SolverConfig::default();
        // k L = 2 pi * 3 with k = w / c, w = omega12 (1 + H)
        let w = 2.0 * std::f64::consts::PI * 3.0 / 10.0;
        let s = build_string(w / 1.5 - 1.0, 1, 0.01).unwrap();
        let img = map_string(&s, Band::LowerBranch, &m, &cfg).unwrap();
        let r = bae_residual(&img, &m).unwrap();
        assert!(r[0].norm() < 1e-13);
        let s = build_string((w + 0.1) / 1.5 - 1.0, 1, 0.01).unwrap();
        let img = map_string(&s, Band::LowerBranch, &m, &cfg).unwrap();
        assert!(bae_residual(&img, &m).unwrap()[0].norm() > 0.1);
    }

    #[test]
    fn nc_on_lower_and_upper_branches() {
        let m = model();
        let cfg = SolverConfig::default();
        let h_low = m.rapidity_real(0.5).unwrap();
        let s = build_string(h_low, 2, 0.01).unwrap();
        let img = map_string(&s, Band::LowerBranch, &m, &cfg).unwrap();
        assert!(img.mapping_residual(&m).unwrap() < 1e-12);
        assert!(check_nc(&img).holds);

        let h_up = m.rapidity_real(3.0).unwrap();
        let s = build_string(h_up, 2, 0.01).unwrap();
        let img = map_string(&s, Band::UpperBranch, &m, &cfg).unwrap();
        let report = check_nc(&img);
        assert!(!report.holds);
        assert_eq!(report.violating(), vec![1, 2]);
        assert!(matches!(
            report.into_result(),
            Err(Error::NcViolation { .. })
        ));

        let s = build_string(h_up, 1, 0.01).unwrap();
        let img = map_string(&s, Band::UpperBranch, &m, &cfg).unwrap();
        assert_eq!(img.kind, SolitonKind::SinglePolariton);
        let report = check_nc(&img);
        assert!(report.holds && report.entries[0].exempt);
    }

    #[test]
    fn nc_matches_first_order_sign_rule() {
        let m = model();
        let eta = 1e-4;
        let lower = linspace(0.05, 0.95, 50);
        let upper = linspace(2.05, 5.0, 50);
        for xi in lower.into_iter().chain(upper) {
            let w = c(xi, eta);
            let h = m.rapidity(w, Side::UpperHalfPlane).unwrap();
            let k = m.wavenumber(w, Side::UpperHalfPlane).unwrap();
            let exact = sign(h.im) == sign(k.im);
            let dh = m.rapidity_derivative(xi).unwrap();
            let dk = m.wavenumber_derivative(xi).unwrap();
            assert_eq!(exact, sign(dh) == sign(dk), "xi = {xi}");
        }
    }

    #[test]
    fn images_have_real_energy() {
        let m = model();
        let cfg = SolverConfig::default();
        for n in 1..6 {
            let s = build_string(-0.3, n, 0.01).unwrap();
            let img = map_string(&s, Band::LowerBranch, &m, &cfg).unwrap();
            assert_eq!(img.frequencies().len(), n);
            assert_eq!(img.momenta().len(), n);
            assert!(img.energy().im.abs() < 1e-10);
        }
        let s = build_string(-0.01, 4, 0.01).unwrap();
        let img = map_string(&s, Band::Gap, &m, &cfg).unwrap();
        assert_eq!(img.kind, SolitonKind::GapSoliton);
        assert!(img.energy().im.abs() < 1e-10);
        assert!(check_nc(&img).holds);
        assert!(img.mapping_residual(&m).unwrap() < 1e-10);
    }

    #[test]
    fn odd_string_cannot_live_in_the_gap() {
        let m = model();
        let s = build_string(-0.01, 3, 0.01).unwrap();
        let err = map_string(&s, Band::Gap, &m, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Mapping { index: 2, .. }));
    }

    #[test]
    fn approx_pair_fixtures() {
        let m = model();
        let ab = m.taylor_ab().unwrap();
        let p = approx_pair_params(0.0, 1, 1, &ab, &m.atoms).unwrap();
        assert_relative_eq!(p.xi, 1.5124238, epsilon = 1e-7);
        assert_eq!(p.eta, 0.0);
        let p1 = approx_pair_params(-0.1, 2, 1, &ab, &m.atoms).unwrap();
        let p2 = approx_pair_params(-0.1, 2, 2, &ab, &m.atoms).unwrap();
        assert_relative_eq!(p1.xi - p2.xi, 0.01 / ab.a, epsilon = 1e-15);
        assert_relative_eq!(0.5 * (p1.xi + p2.xi), 1.5 + (0.01 / ab.a), epsilon = 1e-15);
        assert_relative_eq!(p1.eta, 0.1 / ab.a);
        assert!(approx_pair_params(0.0, 2, 3, &ab, &m.atoms).is_err());
    }

    #[test]
    fn pair_solution_reproduces_target() {
        let m = model();
        let cfg = SolverConfig::default();
        for &h in &[0.0, -0.01, 0.01] {
            for l in 1..=3 {
                for j in 1..=l {
                    let p = solve_pair_params(h, l, j, &m, &cfg).unwrap();
                    assert!(p.residual.unwrap() < 1e-10);
                    assert!(p.xi > 1.5 && p.xi < 2.0);
                    let back = m.rapidity(c(p.xi, p.eta), Side::UpperHalfPlane).unwrap();
                    assert!((back.re - h).abs() < 1e-10);
                    assert!((back.im - 0.01 * (l as f64 + 0.5 - j as f64)).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn pair_solution_at_zero_carrying_rapidity_is_on_the_axis() {
        let m = model();
        let p = solve_pair_params(0.0, 1, 1, &m, &SolverConfig::default()).unwrap();
        assert!(p.eta.abs() < 1e-12);
    }

    #[test]
    fn pair_solution_approaches_closed_form_for_small_beta() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.5, 1e-6, 1.5e-6, 1.0, 100.0).unwrap();
        let m = Model::fgm(medium, atoms);
        let ab = m.taylor_ab().unwrap();
        let cfg = SolverConfig::default();
        for l in 1..=3 {
            for j in 1..=l {
                let exact = solve_pair_params(0.0, l, j, &m, &cfg).unwrap();
                let approx = approx_pair_params(0.0, l, j, &ab, &m.atoms).unwrap();
                assert!((exact.xi - approx.xi).abs() < 1e-9);
            }
        }
    }

    /// Carrying rapidity nearest `near` whose vacuum string satisfies the
    /// product of all the equations.
    fn quantized_vacuum_carrying(m: &Model, n: usize, near: f64) -> f64 {
        let (w12, beta, l, mm) = (
            m.atoms.omega12,
            m.atoms.beta,
            m.atoms.length,
            m.atoms.m_atoms,
        );
        let phase = |h: f64| {
            n as f64 * w12 * (1.0 + h) * l - 2.0 * mm as f64 * (0.5 * n as f64 * beta).atan2(h)
        };
        let two_pi = 2.0 * std::f64::consts::PI;
        let target = (phase(near) / two_pi).round() * two_pi;
        crate::numerics::bisect_then_newton(
            |h| Ok(phase(h) - target),
            (near - 0.01, near + 0.01),
            &SolverConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn refinement_solves_the_equations_near_the_exact_string() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let cfg = SolverConfig::default();
        // The lower member's equation amplifies rounding by roughly
        // exp(|Im k| L) / |h_j - h_l + i beta|, so longer strings get shorter chains.
        for (n, length) in [(2, 1000.0), (3, 400.0)] {
            let atoms = AtomChainParams::new(1.0, 0.01, 0.01, 0.01, length).unwrap();
            let m = Model::vacuum(medium, atoms);
            let s = build_string(quantized_vacuum_carrying(&m, n, 0.05), n, 0.01).unwrap();
            let exact = map_string(&s, Band::LowerBranch, &m, &cfg).unwrap();
            let refined = refine_string(&exact, &m, &cfg).unwrap();
            for (r, (a, b)) in bae_residual(&refined, &m)
                .unwrap()
                .iter()
                .zip(exact.particles.iter().zip(&refined.particles))
            {
                assert!(r.norm() < 1e-8, "n = {n}: residual {r}");
                assert!((a.rapidity - b.rapidity).norm() < 0.1 * 0.01);
            }
            assert!(refined.energy().im.abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_rejects_unquantized_strings() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.0, 0.01, 0.01, 0.01, 1000.0).unwrap();
        let m = Model::vacuum(medium, atoms);
        let cfg = SolverConfig::default();
        let h = quantized_vacuum_carrying(&m, 2, 0.05);
        // Half-way between two quantized values.
        let s = build_string(h + 0.5 * std::f64::consts::PI / 1000.0, 2, 0.01).unwrap();
        let exact = map_string(&s, Band::LowerBranch, &m, &cfg).unwrap();
        assert!(refine_string(&exact, &m, &cfg).is_err());
    }

    #[test]
    fn residual_invariant_under_relabeling() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.0, 0.01, 0.01, 0.01, 1000.0).unwrap();
        let m = Model::vacuum(medium, atoms);
        let cfg = SolverConfig::default();
        let s = build_string(quantized_vacuum_carrying(&m, 3, 0.05), 3, 0.01).unwrap();
        let img = refine_string(
            &map_string(&s, Band::LowerBranch, &m, &cfg).unwrap(),
            &m,
            &cfg,
        )
        .unwrap();
        let r = bae_residual(&img, &m).unwrap();
        let mut perm = img.clone();
        perm.particles.reverse();
        let rp = bae_residual(&perm, &m).unwrap();
        for (a, b) in r.iter().zip(rp.iter().rev()) {
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn exact_string_hits_the_phase_pole() {
        let medium = MediumParams::new(1.0, 2.0, 1.0).unwrap();
        let atoms = AtomChainParams::new(1.0, 0.01, 0.01, 0.01, 1000.0).unwrap();
        let m = Model::vacuum(medium, atoms);
        let s = build_string(0.05, 2, 0.01).unwrap();
        let img = map_string(&s, Band::LowerBranch, &m, &SolverConfig::default()).unwrap();
        assert!(matches!(bae_residual(&img, &m), Err(Error::PhasePole)));
    }
}
