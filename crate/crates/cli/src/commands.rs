//! The subcommands. Each builds a [`Report`]; per-row failures are recorded in
//! a `status` column instead of aborting the scan.

use gapsit::medium::Band;
use gapsit::solitons::{
    build_composite, gap_band, gap_velocity_ratio, max_pairs, ordinary_point, vacuum_dispersion,
    vacuum_inverse_velocity, vacuum_soliton_size,
};
use gapsit::strings::{
    bae_residual_of, build_string, check_nc, map_string, refine_string, solve_pair_params,
    SolitonImage,
};
use gapsit::{Error, RapidityMode, Side};
use num_complex::Complex64;

use crate::config::{Grid, RunConfig};
use crate::table::{Cell, Report, Table};
use crate::CliError;

/// A report and the exit status it should produce.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Outcome {
            report,
            exit_code: 0,
        }
    }
}

const OK: &str = "ok";

fn status(e: &Error) -> Cell {
    Cell::text(e.code())
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::UpperHalfPlane => "upper",
        Side::LowerHalfPlane => "lower",
    }
}

pub fn medium(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let m = &cfg.medium;
    let grid = cfg.grid_or(Grid::linspace(0.1 * m.omega_perp, 2.0 * m.omega_par, 50))?;
    let mut t = Table::new(
        "medium",
        &["xi", "band", "epsilon", "n", "k", "nu", "kappa", "status"],
    );
    for xi in grid {
        let row = (|| -> gapsit::Result<Vec<Cell>> {
            let band = m.classify(xi)?;
            let eps = m.permeability(Complex64::new(xi, 0.0))?.re;
            let mut row = vec![Cell::num(xi), Cell::text(band.name()), Cell::num(eps)];
            if band == Band::Gap {
                row.extend([
                    Cell::Missing,
                    Cell::Missing,
                    Cell::num(m.nu(xi)?),
                    Cell::num(m.kappa(xi)?),
                ]);
            } else {
                let n = m
                    .refractive_index(Complex64::new(xi, 0.0), Side::UpperHalfPlane)?
                    .re;
                row.extend([
                    Cell::num(n),
                    Cell::num(xi * n / m.c),
                    Cell::Missing,
                    Cell::Missing,
                ]);
            }
            row.push(Cell::text(OK));
            Ok(row)
        })();
        t.push(row.unwrap_or_else(|e| {
            let mut r = vec![Cell::num(xi)];
            r.extend(std::iter::repeat_n(Cell::Missing, 6));
            r.push(status(&e));
            r
        }));
    }
    let mut r = Report::new("medium");
    r.tables.push(t);
    Ok(r.into())
}

fn image_table(name: &str, img: &SolitonImage) -> Table {
    let mut t = Table::new(
        name,
        &[
            "j", "re_h", "im_h", "re_omega", "im_omega", "re_k", "im_k", "side",
        ],
    );
    for (j, p) in img.particles.iter().enumerate() {
        t.push(vec![
            Cell::int(j + 1),
            Cell::num(p.rapidity.re),
            Cell::num(p.rapidity.im),
            Cell::num(p.frequency.re),
            Cell::num(p.frequency.im),
            Cell::num(p.momentum.re),
            Cell::num(p.momentum.im),
            Cell::text(side_name(p.side)),
        ]);
    }
    t
}

pub fn string(cfg: &RunConfig, carrying: f64, n: usize, band: Band) -> Result<Outcome, CliError> {
    let model = cfg.model();
    let s = build_string(carrying, n, cfg.atoms.beta)?;
    let img = map_string(&s, band, &model, &cfg.solver)?;
    let nc = check_nc(&img);
    let refined = refine_string(&img, &model, &cfg.solver);

    let mut rap = Table::new("rapidities", &["j", "re_h", "im_h"]);
    for (j, h) in s.rapidities.iter().enumerate() {
        rap.push(vec![Cell::int(j + 1), Cell::num(h.re), Cell::num(h.im)]);
    }

    let mut nct = Table::new(
        "nc",
        &["j", "sign_im_h", "sign_im_k", "exempt", "satisfied"],
    );
    for e in &nc.entries {
        nct.push(vec![
            Cell::int(e.index),
            Cell::int(e.sign_h),
            Cell::int(e.sign_k),
            Cell::flag(e.exempt),
            Cell::flag(e.satisfied),
        ]);
    }

    let mut bae = Table::new(
        "bae",
        &[
            "j",
            "residual_exact",
            "status_exact",
            "residual_refined",
            "status_refined",
        ],
    );
    for j in 0..n {
        let cell = |r: gapsit::Result<Complex64>| match r {
            Ok(z) => (Cell::num(z.norm()), Cell::text(OK)),
            Err(e) => (Cell::Missing, status(&e)),
        };
        let (ex, ex_status) = cell(bae_residual_of(&img, j, &model));
        let (rf, rf_status) = match &refined {
            Ok(r) => cell(bae_residual_of(r, j, &model)),
            Err(e) => (Cell::Missing, status(e)),
        };
        bae.push(vec![Cell::int(j + 1), ex, ex_status, rf, rf_status]);
    }

    let mut summary = Table::new(
        "summary",
        &[
            "kind",
            "carrying",
            "n",
            "band",
            "re_energy",
            "im_energy",
            "mapping_residual",
            "nc_holds",
        ],
    );
    summary.push(vec![
        Cell::text(img.kind.name()),
        Cell::num(carrying),
        Cell::int(n),
        Cell::text(band.name()),
        Cell::num(img.energy().re),
        Cell::num(img.energy().im),
        Cell::num(img.mapping_residual(&model)?),
        Cell::flag(nc.holds),
    ]);

    let mut r = Report::new("string");
    r.tables
        .extend([summary, rap, image_table("image", &img), nct, bae]);
    if let Ok(refined) = &refined {
        r.tables.push(image_table("image_refined", refined));
    }
    Ok(Outcome {
        report: r,
        exit_code: if nc.holds { 0 } else { 3 },
    })
}

pub fn ordinary(cfg: &RunConfig, n: usize) -> Result<Outcome, CliError> {
    let model = cfg.model();
    let w = cfg.medium.omega_perp;
    let grid = cfg.grid_or(Grid::linspace(0.05 * w, 0.95 * w, 50))?;
    let mut t = Table::new(
        "ordinary",
        &["xi", "q", "inv_v", "inv_V", "atomic_fraction", "status"],
    );
    for xi in grid {
        t.push(match ordinary_point(xi, n, &model) {
            Ok(p) => vec![
                Cell::num(xi),
                Cell::num(p.momentum),
                Cell::num(p.inv_velocity_outside),
                Cell::num(p.inv_velocity_inside),
                Cell::num(
                    (p.inv_velocity_inside - p.inv_velocity_outside) / p.inv_velocity_outside,
                ),
                Cell::text(OK),
            ],
            Err(e) => vec![
                Cell::num(xi),
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
                Cell::Missing,
                status(&e),
            ],
        });
    }
    let mut r = Report::new("ordinary");
    r.tables.push(t);
    Ok(r.into())
}

pub fn gap(cfg: &RunConfig, l_max: usize, carrying: f64) -> Result<Outcome, CliError> {
    if l_max == 0 {
        return Err(CliError::Config("--l-max must be at least 1".into()));
    }
    if cfg.rapidity_mode != RapidityMode::Fgm {
        return Err(CliError::Config(
            "gap solitons need rapidity_mode = fgm".into(),
        ));
    }
    let model = cfg.model();
    let ab = model.taylor_ab()?;
    let max_l = max_pairs(&ab, &cfg.medium, &cfg.atoms);
    if l_max > max_l {
        return Err(Error::BandEscape { l: l_max, max_l }.into());
    }

    let mut taylor = Table::new("taylor", &["a", "b", "max_l"]);
    taylor.push(vec![Cell::num(ab.a), Cell::num(ab.b), Cell::int(max_l)]);

    let mut bands = Table::new(
        "bands",
        &[
            "l",
            "center",
            "center_summed",
            "width",
            "mass",
            "bottom",
            "size",
            "bracket",
            "inv_V",
            "inv_v",
            "superluminal",
            "max_pair_residual",
            "status",
        ],
    );
    let mut pairs = Table::new(
        "pairs",
        &[
            "l",
            "j",
            "xi0",
            "xi",
            "eta",
            "eta_approx",
            "residual",
            "status",
        ],
    );
    for l in 1..=l_max {
        let band = gap_band(l, &ab, &model)?;
        let mut worst: Option<f64> = Some(0.0);
        for j in 1..=l {
            let xi0 = band.xi0[j - 1];
            let eta_approx = carrying.abs() / ab.a;
            pairs.push(
                match solve_pair_params(carrying, l, j, &model, &cfg.solver) {
                    Ok(p) => {
                        let res = p.residual.unwrap_or(f64::NAN);
                        worst = worst.map(|w| w.max(res));
                        vec![
                            Cell::int(l),
                            Cell::int(j),
                            Cell::num(xi0),
                            Cell::num(p.xi),
                            Cell::num(p.eta),
                            Cell::num(eta_approx),
                            Cell::num(res),
                            Cell::text(OK),
                        ]
                    }
                    Err(e) => {
                        worst = None;
                        vec![
                            Cell::int(l),
                            Cell::int(j),
                            Cell::num(xi0),
                            Cell::Missing,
                            Cell::Missing,
                            Cell::num(eta_approx),
                            Cell::Missing,
                            status(&e),
                        ]
                    }
                },
            );
        }
        let mut row = vec![
            Cell::int(l),
            Cell::num(band.center),
            Cell::num(band.center_summed),
            Cell::num(band.width),
            Cell::num(band.mass),
            Cell::num(band.bottom()),
            Cell::num(band.size()),
        ];
        match gap_velocity_ratio(carrying, &band, &cfg.atoms) {
            Ok(v) => {
                row.extend([
                    Cell::num(v.bracket),
                    Cell::num(v.inv_velocity_inside),
                    Cell::num(v.inv_velocity_outside),
                    Cell::flag(v.superluminal),
                    Cell::opt(worst),
                    Cell::text(OK),
                ]);
            }
            Err(e) => {
                row.extend([
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::opt(worst),
                    status(&e),
                ]);
            }
        }
        bands.push(row);
    }
    let mut r = Report::new("gap");
    r.tables.extend([taylor, bands, pairs]);
    Ok(r.into())
}

pub fn composite(
    cfg: &RunConfig,
    carrying: f64,
    n: usize,
    n_gap_pairs: usize,
) -> Result<Outcome, CliError> {
    let model = cfg.model();
    let c = build_composite(carrying, n, n_gap_pairs, &model, &cfg.solver)?;

    let mut gap = Table::new(
        "gap_part",
        &[
            "j",
            "xi",
            "eta",
            "xi_approx",
            "eta_approx",
            "q",
            "kappa",
            "residual",
        ],
    );
    for p in &c.gap_part {
        gap.push(vec![
            Cell::int(p.params.j),
            Cell::num(p.params.xi),
            Cell::num(p.params.eta),
            Cell::num(p.approx.xi),
            Cell::num(p.approx.eta),
            Cell::num(p.linear_momentum.re),
            Cell::num(p.linear_momentum.im),
            Cell::opt(p.params.residual),
        ]);
    }
    let mut ord = Table::new(
        "ordinary_part",
        &[
            "j",
            "xi_minus",
            "k_minus",
            "h_residual",
            "re_omega",
            "im_omega",
            "re_k",
            "im_k",
        ],
    );
    for (i, m) in c.ordinary_part.iter().enumerate() {
        let h_res = (model.rapidity_real(m.xi_minus)? - carrying).abs();
        ord.push(vec![
            Cell::int(n_gap_pairs + i + 1),
            Cell::num(m.xi_minus),
            Cell::num(m.momentum),
            Cell::num(h_res),
            Cell::num(m.particle.frequency.re),
            Cell::num(m.particle.frequency.im),
            Cell::num(m.particle.momentum.re),
            Cell::num(m.particle.momentum.im),
        ]);
    }
    let mut summary = Table::new(
        "summary",
        &[
            "kind",
            "carrying",
            "n",
            "n_gap_pairs",
            "re_energy",
            "im_energy",
            "mapping_residual",
            "nc_holds",
        ],
    );
    summary.push(vec![
        Cell::text(c.image.kind.name()),
        Cell::num(carrying),
        Cell::int(n),
        Cell::int(n_gap_pairs),
        Cell::num(c.image.energy().re),
        Cell::num(c.image.energy().im),
        Cell::num(c.image.mapping_residual(&model)?),
        Cell::flag(c.nc.holds),
    ]);
    let mut r = Report::new("composite");
    r.tables
        .extend([summary, gap, ord, image_table("image", &c.image)]);
    Ok(r.into())
}

pub fn vacuum(cfg: &RunConfig, n: usize) -> Result<Outcome, CliError> {
    if cfg.rapidity_mode != RapidityMode::Vacuum {
        return Err(CliError::Config(
            "the vacuum table needs rapidity_mode = vacuum".into(),
        ));
    }
    let a = &cfg.atoms;
    let c = cfg.medium.c;
    let grid = cfg.grid_or(Grid::linspace(0.5 * a.omega12, 1.5 * a.omega12, 50))?;
    let size = vacuum_soliton_size(n, a)?;
    let columns = ["omega", "Q", "inv_V", "V", "size", "status"];
    let row = |w: f64| -> gapsit::Result<Vec<Cell>> {
        let inv = vacuum_inverse_velocity(w, n, a, c)?;
        let (q, st) = match vacuum_dispersion(w, w / c, n, a) {
            Ok(q) => (Cell::num(q), Cell::text(OK)),
            Err(e) => (Cell::Missing, status(&e)),
        };
        Ok(vec![
            Cell::num(w),
            q,
            Cell::num(inv),
            Cell::num(1.0 / inv),
            Cell::num(size),
            st,
        ])
    };
    let mut t = Table::new("vacuum", &columns);
    for w in grid {
        t.push(row(w)?);
    }
    let mut res = Table::new("resonance", &columns);
    res.push(row(a.omega12)?);
    let mut r = Report::new("vacuum");
    r.tables.extend([t, res]);
    Ok(r.into())
}
