//! Browser bindings. Each export takes plain numbers and returns a JSON
//! string of curves for the page in `www/` to draw.

use gapsit::medium::Band;
use gapsit::numerics::linspace;
use gapsit::solitons::{
    gap_band, gap_energy, max_pairs, ordinary_dispersion, ordinary_inverse_velocity,
};
use gapsit::{AtomChainParams, MediumParams, Model};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const OMEGA_PERP: f64 = 1.0;

fn model(omega_par: f64, omega12: f64, beta: f64, rho: f64) -> gapsit::Result<Model> {
    let medium = MediumParams::new(OMEGA_PERP, omega_par, 1.0)?;
    let atoms = AtomChainParams::new(omega12, beta, beta * omega12, rho, 100.0)?;
    Ok(Model::fgm(medium, atoms))
}

#[derive(Debug, Serialize)]
pub struct RapidityCurve {
    pub band: &'static str,
    pub xi: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub h: Vec<f64>,
}

/// Permeability and real rapidity on both allowed branches.
pub fn rapidity_curves(
    omega_par: f64,
    omega12: f64,
    points: usize,
) -> gapsit::Result<Vec<RapidityCurve>> {
    let m = model(omega_par, omega12, 0.01, 1.0)?;
    let pad = 1e-3;
    let ranges = [
        (Band::LowerBranch, 0.02, OMEGA_PERP - pad),
        (Band::UpperBranch, omega_par + pad, 3.0 * omega_par),
    ];
    ranges
        .iter()
        .map(|&(band, lo, hi)| {
            let xi = linspace(lo, hi, points);
            let epsilon = xi
                .iter()
                .map(|&x| m.medium.permeability(x.into()).map(|e| e.re))
                .collect::<gapsit::Result<_>>()?;
            let h = xi
                .iter()
                .map(|&x| m.rapidity_real(x))
                .collect::<gapsit::Result<_>>()?;
            Ok(RapidityCurve {
                band: band.name(),
                xi,
                epsilon,
                h,
            })
        })
        .collect()
}

#[derive(Debug, Serialize)]
pub struct OrdinaryCurve {
    pub xi: Vec<f64>,
    pub q: Vec<f64>,
    pub inv_velocity_inside: Vec<f64>,
    pub inv_velocity_outside: Vec<f64>,
}

/// Ordinary n-soliton dispersion and velocities across the lower branch.
pub fn ordinary_curve(
    rho: f64,
    beta: f64,
    n: usize,
    points: usize,
) -> gapsit::Result<OrdinaryCurve> {
    let m = model(2.0, 1.5, beta, rho)?;
    let xi = linspace(0.05, 0.95, points);
    let mut out = OrdinaryCurve {
        xi: Vec::with_capacity(points),
        q: Vec::with_capacity(points),
        inv_velocity_inside: Vec::with_capacity(points),
        inv_velocity_outside: Vec::with_capacity(points),
    };
    for x in xi {
        let q = ordinary_dispersion(x, n, &m)?;
        let (inside, outside) = ordinary_inverse_velocity(x, n, &m)?;
        out.xi.push(x);
        out.q.push(q);
        out.inv_velocity_inside.push(inside);
        out.inv_velocity_outside.push(outside);
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
pub struct GapSpectrum {
    pub max_l: usize,
    pub bands: Vec<GapBandCurve>,
}

#[derive(Debug, Serialize)]
pub struct GapBandCurve {
    pub l: usize,
    pub bottom: f64,
    pub mass: f64,
    pub size: f64,
    pub q: Vec<f64>,
    pub energy: Vec<f64>,
}

/// Gap-soliton bands `l = 1..=l_max`, each sampled for `|q| <= q_max`.
pub fn gap_spectrum(
    omega12: f64,
    beta: f64,
    l_max: usize,
    q_max: f64,
    points: usize,
) -> gapsit::Result<GapSpectrum> {
    let m = model(2.0, omega12, beta, 1.0)?;
    let ab = m.taylor_ab()?;
    let max_l = max_pairs(&ab, &m.medium, &m.atoms);
    let bands = (1..=l_max.min(max_l))
        .map(|l| {
            let band = gap_band(l, &ab, &m)?;
            let q = linspace(-q_max, q_max, points);
            let energy = q.iter().map(|&k| gap_energy(k, &band).energy).collect();
            Ok(GapBandCurve {
                l,
                bottom: band.bottom(),
                mass: band.mass,
                size: band.size(),
                q,
                energy,
            })
        })
        .collect::<gapsit::Result<_>>()?;
    Ok(GapSpectrum { max_l, bands })
}

fn to_js<T: Serialize>(r: gapsit::Result<T>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = rapidityCurves)]
pub fn rapidity_curves_js(omega_par: f64, omega12: f64, points: usize) -> Result<String, JsError> {
    to_js(rapidity_curves(omega_par, omega12, points))
}

#[wasm_bindgen(js_name = ordinaryCurve)]
pub fn ordinary_curve_js(rho: f64, beta: f64, n: usize, points: usize) -> Result<String, JsError> {
    to_js(ordinary_curve(rho, beta, n, points))
}

#[wasm_bindgen(js_name = gapSpectrum)]
pub fn gap_spectrum_js(
    omega12: f64,
    beta: f64,
    l_max: usize,
    q_max: f64,
    points: usize,
) -> Result<String, JsError> {
    to_js(gap_spectrum(omega12, beta, l_max, q_max, points))
}
