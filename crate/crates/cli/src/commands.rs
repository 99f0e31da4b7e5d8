//! One function per subcommand; each returns its tables and warnings without touching disk.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use spp_core::channel::{fidelity_vs_distance, ChannelSpec, Reference};
use spp_core::constants::{hz_to_omega, wavelength_to_omega, C0};
use spp_core::coupling::CouplerSpec;
use spp_core::dispersion::{propagation_length, solve_mode};
use spp_core::material::{self, sigma_min, TAU_INTRA_0K, TAU_INTRA_300K};
use spp_core::prism::{self, PrismGeometry, RESONANCE_THRESHOLD};
use spp_core::qec::{self, InputSet, QecRunConfig};
use spp_core::{Complex64, ConductivityModel, GrapheneParams, Polarization};

use crate::args::*;
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

/// Tables produced by a command: the main one plus named side outputs (file suffix, table).
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub main: Table,
    pub extra: Vec<(&'static str, Table)>,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(main: Table) -> Self {
        Self { main, extra: Vec::new(), warnings: Vec::new() }
    }
}

pub fn material(a: &MaterialArgs) -> Result<GrapheneParams> {
    let tau = a.tau_intra.unwrap_or(if a.temperature == 0.0 { TAU_INTRA_0K } else { TAU_INTRA_300K });
    if !(tau > 0.0) || !(a.tau_inter > 0.0) {
        return Err(CliError::usage("relaxation times must be positive"));
    }
    Ok(GrapheneParams::new(a.mu_c, a.temperature, 1.0 / tau, 1.0 / a.tau_inter, a.eps_r, a.layers)?)
}

pub fn model(m: ModelArg) -> ConductivityModel {
    match m {
        ModelArg::Auto => ConductivityModel::Auto,
        ModelArg::Full => ConductivityModel::FullT,
        ModelArg::Lowt => ConductivityModel::LowT,
    }
}

/// `points` samples on `[lo, hi]`; a single point is allowed only as `lo`.
pub fn grid(lo: f64, hi: f64, points: usize, log: bool, what: &str) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(CliError::usage(format!("{what}: need at least one point")));
    }
    if !(lo.is_finite() && hi.is_finite()) || (log && lo <= 0.0) {
        return Err(CliError::usage(format!("{what}: bounds must be finite{}", if log { " and positive" } else { "" })));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    if !(hi > lo) {
        return Err(CliError::usage(format!("{what}: empty range [{lo}, {hi}]")));
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let t = i as f64 / n;
            if log {
                lo * (hi / lo).powf(t)
            } else {
                lo + (hi - lo) * t
            }
        })
        .collect())
}

fn freq_grid(g: &FrequencyGrid) -> Result<Vec<f64>> {
    grid(g.f_min, g.f_max, g.points, !g.linear, "frequency")
}

pub fn sigma(a: &SigmaArgs) -> Result<Report> {
    let params = material(&a.material)?;
    let m = model(a.material.model);
    let smin = sigma_min();
    let freqs = freq_grid(&a.grid)?;
    let values = freqs
        .par_iter()
        .map(|&f| material::conductivity(&params, hz_to_omega(f), m))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut t = Table::new(vec!["freq_hz", "sigma_re_S", "sigma_im_S", "sigma_re_over_min", "sigma_im_over_min"]);
    for (f, s) in freqs.iter().zip(values) {
        t.push(vec![(*f).into(), s.re().into(), s.im().into(), (s.re() / smin).into(), (s.im() / smin).into()]);
    }
    Ok(Report::new(t))
}

pub fn dispersion(a: &DispersionArgs) -> Result<Report> {
    let params = material(&a.material)?;
    let m = model(a.material.model);
    let mut freqs = freq_grid(&a.grid)?;
    for &l in &a.wavelengths {
        if !(l > 0.0) {
            return Err(CliError::usage("wavelengths must be positive"));
        }
        freqs.push(C0 / l);
    }
    let pols: Vec<Polarization> = match a.pol {
        PolChoice::Tm => vec![Polarization::TM],
        PolChoice::Te => vec![Polarization::TE],
        PolChoice::Both => vec![Polarization::TM, Polarization::TE],
    };
    let jobs: Vec<(f64, Polarization)> = freqs.iter().flat_map(|&f| pols.iter().map(move |&p| (f, p))).collect();
    let modes = jobs
        .par_iter()
        .map(|&(f, p)| solve_mode(&params, hz_to_omega(f), p, m))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut t = Table::new(vec![
        "freq_hz", "pol", "kappa_re", "kappa_im", "q0_re_per_m", "vg_m_s", "lambda_eff_m", "L_prop_m", "supported",
    ]);
    let mut unsupported = 0;
    for ((f, p), mode) in jobs.iter().zip(modes) {
        unsupported += usize::from(!mode.supported);
        t.push(vec![
            (*f).into(),
            Cell::Text(p.to_string()),
            mode.kappa.re.into(),
            mode.kappa.im.into(),
            mode.q0.re.into(),
            mode.v_g.unwrap_or(f64::NAN).into(),
            mode.lambda_eff().into(),
            propagation_length(&mode).into(),
            mode.supported.into(),
        ]);
    }
    let mut r = Report::new(t);
    if unsupported > 0 {
        r.warnings.push(format!("{unsupported} rows describe modes the sheet does not bind (supported = false)"));
    }
    Ok(r)
}

pub fn reflectance_map(a: &ReflectanceMapArgs) -> Result<Report> {
    let params = material(&a.material)?;
    let freqs = grid(a.f_min, a.f_max, a.f_points, false, "frequency")?;
    let thetas = grid(a.theta_min_deg, a.theta_max_deg, a.theta_points, false, "angle")?;
    let base = PrismGeometry::new(a.eps1, a.d, thetas[0].to_radians(), a.pol.into())?;
    let omegas: Vec<f64> = freqs.iter().map(|&f| hz_to_omega(f)).collect();
    let rad: Vec<f64> = thetas.iter().map(|t| t.to_radians()).collect();
    let map = prism::reflectance_map(&base, &params, &omegas, &rad)?;
    let mut t = Table::new(vec!["freq_hz", "theta_deg", "reflectance"]);
    for (i, f) in freqs.iter().enumerate() {
        for (j, th) in thetas.iter().enumerate() {
            t.push(vec![(*f).into(), (*th).into(), map.get(i, j).into()]);
        }
    }
    Ok(Report::new(t))
}

pub fn beta_sweep(a: &BetaSweepArgs) -> Result<Report> {
    let params = material(&a.material)?;
    let pol: Polarization = a.pol.into();
    let theta = a.theta_deg.to_radians();
    let ds = grid(a.d_min, a.d_max, a.d_points, true, "spacing")?;
    let base = PrismGeometry::new(a.eps1, ds[0], theta, pol)?;
    if theta <= prism::critical_angle(a.eps1 / params.eps_r()) {
        return Err(spp_core::Error::NotResonant { threshold: RESONANCE_THRESHOLD, best: f64::NAN }.into());
    }
    let window = match (a.window_min_hz, a.window_max_hz) {
        (Some(lo), Some(hi)) => (hz_to_omega(lo), hz_to_omega(hi)),
        (None, None) => prism::default_window(pol, &params),
        _ => return Err(CliError::usage("give both window_min_hz and window_max_hz or neither")),
    };
    let rows = ds
        .par_iter()
        .map(|&d| {
            let geom = base.with_d(d)?;
            let omega = match a.tune {
                Tune::Fixed => hz_to_omega(a.f_hz),
                Tune::Matched => match prism::resonance_frequency(&geom, &params, window) {
                    Ok(w) => w,
                    // No dip at this spacing; the row is kept as NaN so the d grid stays intact.
                    Err(spp_core::Error::NotResonant { .. }) => return Ok((d, None)),
                    Err(e) => return Err(e),
                },
            };
            Ok((d, Some((omega, prism::overlap_beta(&geom, &params, omega)?))))
        })
        .collect::<std::result::Result<Vec<_>, spp_core::Error>>()?;
    let mut t = Table::new(vec![
        "d_m",
        "freq_hz",
        "r_abs",
        "beta_abs",
        "beta_re",
        "beta_im",
        "g_abs",
        "shape_overlap",
        "prism_energy_ratio",
        "validity_warning",
    ]);
    let (mut flagged, mut missing) = (0, 0);
    for (d, hit) in rows {
        let Some((omega, b)) = hit else {
            missing += 1;
            let mut row: Vec<Cell> = vec![d.into()];
            row.extend(std::iter::repeat_with(|| f64::NAN.into()).take(8));
            row.push(false.into());
            t.push(row);
            continue;
        };
        flagged += usize::from(b.validity_warning);
        t.push(vec![
            d.into(),
            (omega / std::f64::consts::TAU).into(),
            b.r_abs.into(),
            b.beta.norm().into(),
            b.beta.re.into(),
            b.beta.im.into(),
            b.g().norm().into(),
            b.shape_overlap.into(),
            b.prism_energy_ratio.into(),
            b.validity_warning.into(),
        ]);
    }
    let mut r = Report::new(t);
    if flagged > 0 {
        r.warnings.push(format!("{flagged} spacings carry non-negligible prism-side energy (validity_warning)"));
    }
    if missing > 0 {
        r.warnings.push(format!("{missing} spacings show no reflectance dip in the tuning window (NaN rows)"));
    }
    Ok(r)
}

pub fn propagate(a: &PropagateArgs) -> Result<Report> {
    if !(a.loss_max > 0.0) {
        return Err(CliError::usage("loss_max must be positive"));
    }
    let ys = grid(0.0, a.loss_max, a.points, false, "loss")?;
    let alpha = Complex64::new(a.alpha, 0.0);
    let mut t = Table::new(vec!["beta", "g", "k0kappa2_x", "F_initial", "F_matched"]);
    for &beta in &a.beta {
        let coupler = CouplerSpec::from_beta(Complex64::new(beta, 0.0))?;
        let fi = fidelity_vs_distance(alpha, &coupler, &ys, Reference::Initial)?;
        let fm = fidelity_vs_distance(alpha, &coupler, &ys, Reference::AmplitudeMatched)?;
        for ((y, a), b) in ys.iter().zip(fi).zip(fm) {
            t.push(vec![beta.into(), coupler.g().re.into(), (*y).into(), a.into(), b.into()]);
        }
    }
    Ok(Report::new(t))
}

pub fn parse_inputs(s: &str) -> Result<InputSet> {
    match s.trim() {
        "six" => Ok(InputSet::SixCardinal),
        other => other
            .strip_prefix("haar:")
            .and_then(|m| m.parse().ok())
            .filter(|&m: &usize| m > 0)
            .map(InputSet::Haar)
            .ok_or_else(|| CliError::usage(format!("inputs must be `six` or `haar:M`, got `{other}`"))),
    }
}

/// Base QEC configuration (first `p`) and the effective wavelength used for the distance axis.
pub fn qec_config(a: &QecArgs) -> Result<(QecRunConfig, f64)> {
    if a.p.is_empty() {
        return Err(CliError::usage("at least one parity-check probability is needed"));
    }
    if !(a.loss_max > 0.0) {
        return Err(CliError::usage("loss_max must be positive"));
    }
    let params = material(&a.material)?;
    let pol: Polarization = a.pol.into();
    let mode = solve_mode(&params, wavelength_to_omega(a.wavelength), pol, model(a.material.model))?;
    if !mode.supported {
        return Err(spp_core::Error::UnsupportedMode(format!("{pol} is not bound at {} m", a.wavelength)).into());
    }
    let k = mode.attenuation();
    if !(k > 0.0) {
        return Err(CliError::usage("the chosen mode is lossless; no distance scale"));
    }
    let channel = ChannelSpec::from_mode(&mode, a.loss_max / k)?;
    let coupler = CouplerSpec::real(a.g_factor * FRAC_PI_2)?;
    let mut cfg = QecRunConfig::new(Complex64::new(a.alpha, 0.0), coupler, channel, a.seed)
        .with_p(a.p[0])
        .with_trajectories(a.trajectories)
        .with_inputs(parse_inputs(&a.inputs)?)
        .with_checkpoints(a.checkpoints)
        .with_step_probability(a.step_probability);
    if let Some(d) = a.dim {
        cfg = cfg.with_dim(d);
    }
    cfg.validate()?;
    Ok((cfg, mode.lambda_eff()))
}

pub fn qec(a: &QecArgs) -> Result<Report> {
    let (base, leff) = qec_config(a)?;
    let mut t = Table::new(vec!["x_over_leff", "k0kappa2_x", "p", "F_bar", "std_err", "F0"]);
    let mut warnings = 0;
    // Every p reuses the same random streams, which also sharpens comparisons between curves.
    for &p in &a.p {
        let res = qec::average_fidelity(&base.clone().with_p(p))?;
        warnings += res.warnings;
        for j in 0..res.distances.len() {
            t.push(vec![
                (res.distances[j] / leff).into(),
                res.losses[j].into(),
                p.into(),
                res.f_bar[j].into(),
                res.std_err[j].into(),
                res.f0.into(),
            ]);
        }
    }
    let orth = qec::orthogonality_monitor(&base)?;
    let k = base.channel.k0_kappa2();
    let mut o = Table::new(vec!["x_over_leff", "k0kappa2_x", "overlap_abs"]);
    for (y, v) in orth.losses.iter().zip(&orth.overlaps) {
        o.push(vec![(y / k / leff).into(), (*y).into(), (*v).into()]);
    }
    let mut r = Report::new(t);
    r.extra.push(("orth.csv", o));
    if warnings > 0 {
        r.warnings.push(format!("{warnings} trajectories ended outside the subspace their parity record indicates (unrecorded jumps, expected for p < 1)"));
    }
    if !orth.within_bound {
        r.warnings.push(format!(
            "code-word overlap reaches {:.3e}, above {:.0e}",
            orth.max,
            qec::ORTHOGONALITY_BOUND
        ));
    }
    Ok(r)
}
