//! Dispersion relations, velocities and sizes of the bound states: vacuum
//! solitons, ordinary solitons on the lower branch, gap-soliton bands and
//! composite solitons.
//!
//! All arctangents take the principal branch. Each dispersion relation jumps
//! by a multiple of pi where the arctangent's denominator changes sign, so
//! inputs within `RESONANCE_EXCLUSION` of such a point are refused.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::medium::{Band, MediumParams, Side};
use crate::numerics::{bisect_then_newton, SolverConfig};
use crate::rapidity::{AtomChainParams, Model, RapidityMode, TaylorAB};
use crate::strings::{
    assemble, build_string, check_nc, map_gap_pairs, map_on_band, BetheString, NcReport,
    PairParams, Particle, SolitonImage, SolitonKind,
};

/// Relative exclusion radius around arctangent poles.
pub const RESONANCE_EXCLUSION: f64 = 1e-9;

/// A point on a dispersion curve with both inverse velocities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DispersionPoint {
    /// Frequency-like coordinate.
    pub frequency: f64,
    /// Momentum inside the atomic system.
    pub momentum: f64,
    /// Inverse group velocity inside the atomic system.
    pub inv_velocity_inside: f64,
    /// Inverse group velocity without atoms.
    pub inv_velocity_outside: f64,
}

fn check_count(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "a soliton holds at least one particle"));
    }
    Ok(n as f64)
}

/// `Q = K - (2 rho / n) atan(n gamma / (2 (W - omega12)))`.
pub fn vacuum_dispersion(omega: f64, k: f64, n: usize, atoms: &AtomChainParams) -> Result<f64> {
    let nf = check_count(n)?;
    let detuning = omega - atoms.omega12;
    if detuning.abs() < RESONANCE_EXCLUSION * atoms.omega12 {
        return Err(Error::Resonance {
            what: "W - omega12",
            value: detuning.abs(),
        });
    }
    Ok(k - (2.0 * atoms.rho / nf) * (nf * atoms.gamma / (2.0 * detuning)).atan())
}

/// `1/V = 1/c + gamma rho / ((W - omega12)^2 + (n gamma / 2)^2)`.
pub fn vacuum_inverse_velocity(
    omega: f64,
    n: usize,
    atoms: &AtomChainParams,
    c: f64,
) -> Result<f64> {
    let nf = check_count(n)?;
    let detuning = omega - atoms.omega12;
    let half_width = 0.5 * nf * atoms.gamma;
    Ok(1.0 / c + atoms.gamma * atoms.rho / (detuning * detuning + half_width * half_width))
}

/// Spatial extent `1 / (gamma n)` of a vacuum soliton.
pub fn vacuum_soliton_size(n: usize, atoms: &AtomChainParams) -> Result<f64> {
    Ok(1.0 / (atoms.gamma * check_count(n)?))
}

pub fn vacuum_point(
    omega: f64,
    n: usize,
    atoms: &AtomChainParams,
    c: f64,
) -> Result<DispersionPoint> {
    Ok(DispersionPoint {
        frequency: omega,
        momentum: vacuum_dispersion(omega, omega / c, n, atoms)?,
        inv_velocity_inside: vacuum_inverse_velocity(omega, n, atoms, c)?,
        inv_velocity_outside: 1.0 / c,
    })
}

/// Total phase `sum_j k_j L + M sum_j arg r_j` of an `n`-string in vacuum,
/// where `r_j = (h_j - i beta/2) / (h_j + i beta/2)`.
pub fn vacuum_string_phase(carrying: f64, n: usize, model: &Model) -> Result<f64> {
    let nf = check_count(n)?;
    let a = &model.atoms;
    let momentum = nf * a.omega12 * (1.0 + carrying) / model.c();
    Ok(momentum * a.length - 2.0 * a.m_atoms as f64 * (0.5 * nf * a.beta).atan2(carrying))
}

/// Carrying rapidity closest to `near` for which the product of all the Bethe
/// ansatz equations of a vacuum `n`-string holds: the total phase is a
/// multiple of `2 pi`.
pub fn quantized_vacuum_carrying(
    model: &Model,
    n: usize,
    near: f64,
    cfg: &SolverConfig,
) -> Result<f64> {
    if model.mode != RapidityMode::Vacuum {
        return Err(Error::invalid(
            "rapidity_mode",
            "quantized strings are built in vacuum mode",
        ));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let target = (vacuum_string_phase(near, n, model)? / two_pi).round() * two_pi;
    // The phase grows at least as fast as its momentum term.
    let a = &model.atoms;
    let reach = two_pi * model.c() / (n as f64 * a.omega12 * a.length);
    bisect_then_newton(
        |h| Ok(vacuum_string_phase(h, n, model)? - target),
        (near - reach, near + reach),
        cfg,
    )
}

fn require_lower_branch(xi: f64, model: &Model) -> Result<()> {
    if model.mode == RapidityMode::Fgm {
        match model.medium.classify(xi) {
            Ok(Band::LowerBranch) => {}
            Ok(_) => {
                return Err(Error::OutOfBand {
                    xi,
                    reason: "ordinary solitons live on the lower branch",
                })
            }
            Err(e) => return Err(e),
        }
    } else if !(xi.is_finite() && xi > 0.0) {
        return Err(Error::Range {
            value: xi,
            reason: "frequency must be positive".into(),
        });
    }
    Ok(())
}

fn rapidity_off_resonance(xi: f64, model: &Model) -> Result<f64> {
    let h = model.rapidity_real(xi)?;
    if h.abs() < RESONANCE_EXCLUSION {
        return Err(Error::Resonance {
            what: "h(xi)",
            value: h.abs(),
        });
    }
    Ok(h)
}

/// `q = k(xi) - (2 rho / n) atan(beta n / (2 h(xi)))` on the lower branch.
pub fn ordinary_dispersion(xi: f64, n: usize, model: &Model) -> Result<f64> {
    let nf = check_count(n)?;
    require_lower_branch(xi, model)?;
    let h = rapidity_off_resonance(xi, model)?;
    let a = &model.atoms;
    Ok(model.wavenumber_real(xi)? - (2.0 * a.rho / nf) * (a.beta * nf / (2.0 * h)).atan())
}

/// `(1/V, 1/v)` with `1/v = dk/dxi` and
/// `1/V = 1/v + rho beta h'(xi) / (h^2 + (beta n / 2)^2)`.
pub fn ordinary_inverse_velocity(xi: f64, n: usize, model: &Model) -> Result<(f64, f64)> {
    let nf = check_count(n)?;
    require_lower_branch(xi, model)?;
    let h = rapidity_off_resonance(xi, model)?;
    let a = &model.atoms;
    let outside = model.wavenumber_derivative(xi)?;
    let half_width = 0.5 * a.beta * nf;
    let inside = outside
        + a.rho * a.beta * model.rapidity_derivative(xi)? / (h * h + half_width * half_width);
    Ok((inside, outside))
}

pub fn ordinary_point(xi: f64, n: usize, model: &Model) -> Result<DispersionPoint> {
    let (inside, outside) = ordinary_inverse_velocity(xi, n, model)?;
    Ok(DispersionPoint {
        frequency: xi,
        momentum: ordinary_dispersion(xi, n, model)?,
        inv_velocity_inside: inside,
        inv_velocity_outside: outside,
    })
}

/// Band of `l`-pair gap solitons in the effective-mass approximation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapBand {
    pub l: usize,
    /// `omega12 + (beta/a) l`.
    pub center: f64,
    /// `(1/l) sum_j xi_j^(0)`, which evaluates to `omega12 + (beta/a) l/2`.
    pub center_summed: f64,
    /// `b beta^2 (4 l^2 - 1) / (12 a^3)`; signed like `b`.
    pub width: f64,
    /// `(a / 2b) S^2`; signed like `b`.
    pub mass: f64,
    /// `S = (1/l) sum_j |kappa'(xi_j^(0))|`.
    pub kappa_prime_mean: f64,
    /// `xi_j^(0) = omega12 + (beta/a)(l + 1/2 - j)`, `j = 1..l`.
    pub xi0: Vec<f64>,
    /// `1 / kappa(xi_j^(0))` for each pair.
    pub pair_sizes: Vec<f64>,
    pub ab: TaylorAB,
    pub beta: f64,
}

impl GapBand {
    /// `center - width`, the energy per pair at `q = 0`.
    pub fn bottom(&self) -> f64 {
        self.center - self.width
    }

    /// Size of the soliton: the largest pair, which is the outermost one.
    pub fn size(&self) -> f64 {
        self.pair_sizes.iter().copied().fold(0.0, f64::max)
    }

    /// Momentum per pair tied to the carrying rapidity: `|H| S / a`.
    pub fn momentum_of(&self, carrying: f64) -> f64 {
        carrying.abs() * self.kappa_prime_mean / self.ab.a
    }

    /// Inverse of [`GapBand::momentum_of`] on the `H <= 0` side.
    pub fn carrying_of(&self, q: f64) -> f64 {
        -self.ab.a * q.abs() / self.kappa_prime_mean
    }
}

pub fn gap_xi0(l: usize, j: usize, ab: &TaylorAB, atoms: &AtomChainParams) -> f64 {
    atoms.omega12 + (atoms.beta / ab.a) * (l as f64 + 0.5 - j as f64)
}

/// Largest `l` whose outermost `xi_1^(0)` stays inside the gap, clear of the
/// exclusion radius at its upper edge.
pub fn max_pairs(ab: &TaylorAB, medium: &MediumParams, atoms: &AtomChainParams) -> usize {
    let limit = medium.omega_par - medium.exclusion_radius();
    let mut l = 0;
    while gap_xi0(l + 1, 1, ab, atoms) < limit {
        l += 1;
    }
    l
}

pub fn gap_band(l: usize, ab: &TaylorAB, model: &Model) -> Result<GapBand> {
    if l == 0 {
        return Err(Error::invalid("l", "at least one pair"));
    }
    if model.mode != RapidityMode::Fgm {
        return Err(Error::invalid(
            "rapidity_mode",
            "gap solitons need the gap medium",
        ));
    }
    let (medium, atoms) = (&model.medium, &model.atoms);
    if !medium.in_gap(atoms.omega12) {
        return Err(Error::invalid(
            "atoms.omega12",
            "transition frequency must lie in the gap",
        ));
    }
    if ab.a <= 0.0 || ab.b == 0.0 {
        return Err(Error::invalid("taylor_ab", "need a > 0 and b != 0"));
    }
    let max_l = max_pairs(ab, medium, atoms);
    if l > max_l {
        return Err(Error::BandEscape { l, max_l });
    }
    let xi0: Vec<f64> = (1..=l).map(|j| gap_xi0(l, j, ab, atoms)).collect();
    let lf = l as f64;
    let s = xi0
        .iter()
        .map(|&x| medium.kappa_prime(x).map(f64::abs))
        .sum::<Result<f64>>()?
        / lf;
    let pair_sizes = xi0
        .iter()
        .map(|&x| pair_size(x, medium))
        .collect::<Result<_>>()?;
    let beta = atoms.beta;
    let width = ab.b * beta * beta * (4.0 * lf * lf - 1.0) / (12.0 * ab.a.powi(3));
    let mass = ab.a / (2.0 * ab.b) * s * s;
    if !(width.abs() > 0.0 && mass.abs() > 0.0 && mass.is_finite()) {
        return Err(Error::invalid(
            "taylor_ab",
            "band width and mass must be nonzero",
        ));
    }
    Ok(GapBand {
        l,
        center: atoms.omega12 + (beta / ab.a) * lf,
        center_summed: xi0.iter().sum::<f64>() / lf,
        width,
        mass,
        kappa_prime_mean: s,
        xi0,
        pair_sizes,
        ab: *ab,
        beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapEnergy {
    pub energy: f64,
    /// False once `q^2 / 2m` exceeds the band width.
    pub effective_mass_valid: bool,
}

/// `eps_l = center - width + q^2 / (2 m)`.
pub fn gap_energy(q: f64, band: &GapBand) -> GapEnergy {
    let kinetic = q * q / (2.0 * band.mass);
    GapEnergy {
        energy: band.center - band.width + kinetic,
        effective_mass_valid: kinetic.abs() <= band.width.abs(),
    }
}

/// `q(eps) = sqrt(2 m (eps - center + width))`, non-negative.
pub fn gap_momentum(eps: f64, band: &GapBand) -> Result<f64> {
    let q2 = 2.0 * band.mass * (eps - band.center + band.width);
    if q2 < 0.0 {
        return Err(Error::Range {
            value: eps,
            reason: format!(
                "below the bottom {} of the {}-pair band",
                band.bottom(),
                band.l
            ),
        });
    }
    Ok(q2.sqrt())
}

fn check_carrying(carrying: f64) -> Result<()> {
    if carrying.abs() < RESONANCE_EXCLUSION {
        return Err(Error::Resonance {
            what: "H",
            value: carrying.abs(),
        });
    }
    Ok(())
}

/// `Q = q(eps) - (rho / l) atan(beta l / H)` at a given carrying rapidity.
pub fn gap_dispersion_inside(
    eps: f64,
    carrying: f64,
    band: &GapBand,
    atoms: &AtomChainParams,
) -> Result<f64> {
    check_carrying(carrying)?;
    let lf = band.l as f64;
    Ok(gap_momentum(eps, band)? - (atoms.rho / lf) * (atoms.beta * lf / carrying).atan())
}

/// [`gap_dispersion_inside`] with the carrying rapidity tied to the momentum,
/// `H = -a q / S`.
pub fn gap_dispersion_linked(eps: f64, band: &GapBand, atoms: &AtomChainParams) -> Result<f64> {
    let q = gap_momentum(eps, band)?;
    gap_dispersion_inside(eps, band.carrying_of(q), band, atoms)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapVelocity {
    pub inv_velocity_inside: f64,
    pub inv_velocity_outside: f64,
    /// `1 - (a / S) rho beta / (H^2 + beta^2 l^2)`.
    pub bracket: f64,
    /// The bracket is not positive: the formula is outside its validity.
    pub superluminal: bool,
}

/// Inverse velocities of an `l`-pair gap soliton whose momentum per pair is
/// `q = |H| S / a`.
pub fn gap_velocity_ratio(
    carrying: f64,
    band: &GapBand,
    atoms: &AtomChainParams,
) -> Result<GapVelocity> {
    let q = band.momentum_of(carrying);
    if q == 0.0 {
        return Err(Error::ZeroVelocity);
    }
    let lf = band.l as f64;
    let beta = atoms.beta;
    let outside = band.mass / q;
    let bracket = 1.0
        - band.ab.a / band.kappa_prime_mean * atoms.rho * beta
            / (carrying * carrying + beta * beta * lf * lf);
    Ok(GapVelocity {
        inv_velocity_inside: bracket * outside,
        inv_velocity_outside: outside,
        bracket,
        superluminal: bracket <= 0.0,
    })
}

/// Size `1 / kappa(xi)` of a confined pair at gap frequency `xi`.
pub fn pair_size(xi: f64, medium: &MediumParams) -> Result<f64> {
    if !medium.in_gap(xi) {
        return Err(Error::OutOfGap {
            xi,
            lower: medium.omega_perp,
            upper: medium.omega_par,
        });
    }
    if medium.omega_par - xi < medium.exclusion_radius() {
        return Err(Error::Edge {
            xi,
            edge: medium.omega_par,
        });
    }
    Ok(1.0 / medium.kappa(xi)?)
}

/// A gap pair of a composite soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositePair {
    pub params: PairParams,
    /// Closed-form `xi`, `eta` for comparison.
    pub approx: PairParams,
    /// `q + i kappa(xi)` with `q = eta |kappa'(xi)|`; the lower member carries
    /// the conjugate.
    pub linear_momentum: Complex64,
    pub upper: Particle,
    pub lower: Particle,
}

/// A lower-branch member of a composite soliton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompositeMember {
    /// Real frequency with `h(xi_minus) = H`.
    pub xi_minus: f64,
    /// `k(xi_minus)`.
    pub momentum: f64,
    pub particle: Particle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositeSoliton {
    pub carrying: f64,
    pub gap_part: Vec<CompositePair>,
    pub ordinary_part: Vec<CompositeMember>,
    pub image: SolitonImage,
    pub nc: NcReport,
}

impl CompositeSoliton {
    pub fn source(&self) -> &BetheString {
        &self.image.string
    }
}

/// Splits an `n`-string into `n_gap_pairs` gap pairs (its outermost conjugate
/// members) and lower-branch polaritons (the rest).
pub fn build_composite(
    carrying: f64,
    n: usize,
    n_gap_pairs: usize,
    model: &Model,
    cfg: &SolverConfig,
) -> Result<CompositeSoliton> {
    if n_gap_pairs == 0 {
        return Err(Error::invalid("n_gap_pairs", "at least one gap pair"));
    }
    if 2 * n_gap_pairs > n {
        return Err(Error::invalid(
            "n_gap_pairs",
            format!(
                "{n_gap_pairs} pairs need at least {} particles, got {n}",
                2 * n_gap_pairs
            ),
        ));
    }
    let ordinary_count = n - 2 * n_gap_pairs;
    if carrying > 0.0 || (carrying == 0.0 && ordinary_count > 0) || !carrying.is_finite() {
        return Err(Error::Range {
            value: carrying,
            reason: "a composite soliton needs a negative carrying rapidity".into(),
        });
    }
    if model.mode != RapidityMode::Fgm {
        return Err(Error::invalid(
            "rapidity_mode",
            "composite solitons need the gap medium",
        ));
    }
    let ab = model.taylor_ab()?;
    let string = build_string(carrying, n, model.atoms.beta)?;
    let pairs = map_gap_pairs(&string, n_gap_pairs, model, &ab, cfg)?;
    let l = n / 2;
    let gap_part = pairs
        .iter()
        .enumerate()
        .map(|(i, &(upper, lower))| {
            let j = i + 1;
            let (xi, eta) = (upper.frequency.re, upper.frequency.im);
            let residual =
                (model.rapidity(upper.frequency, Side::UpperHalfPlane)? - upper.rapidity).norm();
            let params = PairParams {
                l,
                j,
                xi,
                eta,
                residual: Some(residual),
            };
            let mut approx = crate::strings::approx_pair_params(carrying, l, j, &ab, &model.atoms)?;
            // The string member of pair j has Im h = beta (n + 1 - 2j) / 2.
            approx.xi = model.atoms.omega12 + upper.rapidity.im / ab.a;
            let q = eta * model.medium.kappa_prime(xi)?.abs();
            Ok(CompositePair {
                params,
                approx,
                linear_momentum: Complex64::new(q, model.medium.kappa(xi)?),
                upper,
                lower,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut ordinary_part = Vec::with_capacity(ordinary_count);
    if ordinary_count > 0 {
        let xi_minus = model
            .invert_rapidity(carrying, Band::LowerBranch, cfg)
            .map_err(|e| Error::Mapping {
                index: n_gap_pairs + 1,
                reason: format!("carrying rapidity has no lower-branch image: {e}"),
            })?;
        let momentum = model.wavenumber_real(xi_minus)?;
        for idx in n_gap_pairs..n - n_gap_pairs {
            let particle = map_on_band(
                model,
                string.rapidities[idx],
                xi_minus,
                Band::LowerBranch,
                idx + 1,
                cfg,
            )?;
            ordinary_part.push(CompositeMember {
                xi_minus,
                momentum,
                particle,
            });
        }
    }

    let inner: Vec<Particle> = ordinary_part.iter().map(|m| m.particle).collect();
    let image = SolitonImage {
        kind: if ordinary_count == 0 {
            SolitonKind::GapSoliton
        } else {
            SolitonKind::CompositeSoliton
        },
        particles: assemble(n, &pairs, &inner),
        string,
    };
    let nc = check_nc(&image).into_result()?;
    Ok(CompositeSoliton {
        carrying,
        gap_part,
        ordinary_part,
        image,
        nc,
    })
}
