use std::path::Path;

use rpsquash::control::{is_stable, open_loop_gain, required_loop_gain_for};
use rpsquash::model::steady_state;
use rpsquash::oracle::{compare_psd, estimate_psd, simulate, Channel};
use rpsquash::spectra::{
    coherent_limit, compare_squeezing_vs_feedback, highgain_limit, intracavity_amplitude_spectrum,
    intracavity_amplitude_spectrum_fb, reflected_phase_spectrum, suppression_ratio, NoiseSource,
    SpectraError,
};
use rpsquash::{
    CavityParams, DetectorParams, FrequencyGrid, LoopFilter, MechanicalResponse, NoiseBudget,
};

use crate::config::{Scenario, ScenarioConfig};
use crate::error::CliError;
use crate::table::{format_value, with_suffix, Table};

/// Output scaling for `--kappa-normalized`: frequencies in units of κ and
/// amplitude spectra multiplied by κ. Phase spectra are already
/// dimensionless.
#[derive(Debug, Clone, Copy)]
pub struct Units {
    kappa: Option<f64>,
}

impl Units {
    pub fn new(cavity: &CavityParams, normalized: bool) -> Self {
        Self {
            kappa: normalized.then(|| cavity.kappa()),
        }
    }

    fn omega_header(self) -> &'static str {
        if self.kappa.is_some() {
            "omega_over_kappa"
        } else {
            "omega_rad_s"
        }
    }

    fn omega(self) -> f64 {
        self.kappa.map_or(1.0, f64::recip)
    }

    fn amplitude(self) -> f64 {
        self.kappa.unwrap_or(1.0)
    }
}

fn require_stable(s: &Scenario, k: &LoopFilter) -> Result<(), CliError> {
    let report = is_stable(&s.cavity, &s.det, k)?;
    if report.stable {
        Ok(())
    } else {
        eprintln!(
            "closed loop has {} unstable pole(s); see `rpsquash stability`",
            report.unstable_pole_count
        );
        Err(CliError::Unstable)
    }
}

fn amplitude_budget(
    s: &Scenario,
    det: &DetectorParams,
    filter: Option<&LoopFilter>,
    grid: &FrequencyGrid,
) -> Result<NoiseBudget, SpectraError> {
    match filter {
        Some(k) => intracavity_amplitude_spectrum_fb(&s.cavity, &s.drive, det, k, grid),
        None => intracavity_amplitude_spectrum(&s.cavity, &s.drive, grid),
    }
}

fn dc_level(s: &Scenario, filter: Option<&LoopFilter>) -> Result<f64, CliError> {
    let dc = FrequencyGrid::single(0.0)?;
    Ok(amplitude_budget(s, &s.det, filter, &dc)?.total()[0])
}

pub fn spectrum(s: &Scenario, feedback: bool, output: &Path, normalized: bool) -> Result<(), CliError> {
    let units = Units::new(&s.cavity, normalized);
    let filter = if feedback {
        let k = s.filter("spectrum --feedback")?;
        require_stable(s, k)?;
        Some(k)
    } else {
        None
    };
    let budget = amplitude_budget(s, &s.det, filter, &s.grid)?;
    let table = Table::from_budget(&budget, units.omega_header(), units.omega(), units.amplitude());
    table.write(output)?;

    println!("dc: {}", format_value(dc_level(s, filter)? * units.amplitude()));
    println!(
        "coherent_limit: {}",
        format_value(coherent_limit(&s.cavity) * units.amplitude())
    );
    match highgain_limit(&s.cavity, &s.det) {
        Ok(v) => println!("highgain_limit: {}", format_value(v * units.amplitude())),
        Err(SpectraError::ZeroOutputCoupling) => println!("highgain_limit: none"),
        Err(e) => return Err(e.into()),
    }
    match suppression_ratio(&s.cavity, &s.det) {
        Ok(r) => println!("suppression: {:.4} ({:.2} dB)", r.linear, r.db),
        Err(SpectraError::ZeroOutputCoupling) => println!("suppression: none"),
        Err(e) => return Err(e.into()),
    }
    println!("wrote {} ({} rows)", output.display(), table.len());

    if let Some(mech) = &s.mech {
        let steady = steady_state(&s.cavity, &s.drive);
        let fb = filter.map(|k| (&s.det, k));
        let phase = reflected_phase_spectrum(&s.cavity, &s.drive, &steady, mech, &s.grid, fb)?;
        let path = with_suffix(output, "phase");
        let table = Table::from_budget(&phase, units.omega_header(), units.omega(), 1.0);
        table.write(&path)?;
        println!("wrote {} ({} rows)", path.display(), table.len());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Eta,
    KappaOut,
    KappaLoss,
    FilterGain,
}

impl SweepParam {
    pub fn parse(name: &str) -> Result<Self, CliError> {
        match name {
            "eta" => Ok(SweepParam::Eta),
            "kappa_out" => Ok(SweepParam::KappaOut),
            "kappa_loss" => Ok(SweepParam::KappaLoss),
            "filter.gain" => Ok(SweepParam::FilterGain),
            other => Err(CliError::UnknownParameter(other.to_string())),
        }
    }

    fn label(self) -> &'static str {
        match self {
            SweepParam::Eta => "eta",
            SweepParam::KappaOut => "kappa_out",
            SweepParam::KappaLoss => "kappa_loss",
            SweepParam::FilterGain => "filter.gain",
        }
    }

    fn apply(self, cfg: &mut ScenarioConfig, value: f64) -> Result<(), CliError> {
        match self {
            SweepParam::Eta => cfg.detector.eta = value,
            SweepParam::KappaOut => cfg.cavity.kappa_out = value,
            SweepParam::KappaLoss => cfg.cavity.kappa_loss = value,
            SweepParam::FilterGain => {
                cfg.filter
                    .as_mut()
                    .ok_or(CliError::MissingFilter("sweep --param filter.gain"))?
                    .gain = value
            }
        }
        Ok(())
    }
}

pub struct SweepRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
    pub log: bool,
}

impl SweepRange {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        if self.points < 2 {
            return Err(CliError::InvalidArgument("--points must be at least 2".into()));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(CliError::InvalidArgument("sweep bounds must be finite".into()));
        }
        if self.log && !(self.from > 0.0 && self.to > 0.0) {
            return Err(CliError::InvalidArgument("--log needs positive bounds".into()));
        }
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let t = i as f64 / last;
                if self.log {
                    self.from * (self.to / self.from).powf(t)
                } else {
                    self.from + (self.to - self.from) * t
                }
            })
            .collect())
    }
}

/// One row per value: the parameter, DC amplitude noise (closed loop when a
/// filter is configured) and the high-gain suppression in dB.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: &str,
    range: &SweepRange,
    output: &Path,
    normalized: bool,
) -> Result<(), CliError> {
    let param = SweepParam::parse(param)?;
    let mut table = Table::new([param.label(), "dc_total", "suppression_db"]);
    for value in range.values()? {
        let mut point = cfg.clone();
        param.apply(&mut point, value)?;
        let s = point.build()?;
        if let Some(k) = &s.filter {
            if !is_stable(&s.cavity, &s.det, k)?.stable {
                eprintln!("warning: {} = {} gives an unstable loop", param.label(), value);
            }
        }
        let dc = dc_level(&s, s.filter.as_ref())? * Units::new(&s.cavity, normalized).amplitude();
        let db = suppression_ratio(&s.cavity, &s.det)?.db;
        table.push(vec![value, dc, db]);
    }
    table.write(output)?;
    println!("wrote {} ({} rows)", output.display(), table.len());
    Ok(())
}

fn format_db(db: f64) -> String {
    if db.is_infinite() {
        if db > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{db:.2} dB")
    }
}

pub struct Requirement {
    pub classical_db: f64,
    pub residual: f64,
}

pub fn stability(s: &Scenario, requirement: Option<Requirement>) -> Result<(), CliError> {
    let k = s.filter("stability")?;
    let r = is_stable(&s.cavity, &s.det, k)?;
    println!("stable: {}", r.stable);
    println!("gain_margin: {}", format_db(r.gain_margin_db));
    match r.phase_margin_deg {
        Some(pm) => println!("phase_margin: {pm:.2} deg"),
        None => println!("phase_margin: none"),
    }
    println!("unstable_pole_count: {}", r.unstable_pole_count);
    println!("method: {}", r.method);
    if !r.closed_loop_poles.is_empty() {
        let poles: Vec<String> = r.closed_loop_poles.iter().map(|p| format!("{p:.6e}")).collect();
        println!("closed_loop_poles: {}", poles.join(" "));
    }
    let l0 = open_loop_gain(&s.cavity, &s.det, k, 0.0).norm();
    println!("loop_gain_dc: {} ({})", format_value(l0), format_db(20.0 * l0.log10()));
    if let Some(req) = requirement {
        let g = required_loop_gain_for(&s.cavity, &s.det, req.classical_db, req.residual)?;
        println!(
            "required_loop_gain: {} (20log10: {:.2} dB, 10log10: {:.2} dB)",
            format_value(g.magnitude),
            g.amplitude_db,
            g.power_db
        );
    }
    if r.stable {
        Ok(())
    } else {
        Err(CliError::Unstable)
    }
}

pub struct OracleOptions {
    pub tolerance: f64,
    pub band: (Option<f64>, Option<f64>),
    pub analytic_eta: Option<f64>,
    pub break_correlation: bool,
}

/// Simulates the scenario, estimates the PSD of each recorded channel and
/// compares it with the closed form over the band (default `[0, κ/2]`).
pub fn oracle(s: &Scenario, opts: &OracleOptions, output: &Path, normalized: bool) -> Result<(), CliError> {
    let units = Units::new(&s.cavity, normalized);
    let mut cfg = s.sim.clone().ok_or(CliError::MissingSimulation("oracle"))?;
    let mut channels = vec![Channel::Amplitude];
    if s.mech.is_some() {
        channels.push(Channel::ReflectedPhase);
    }
    cfg.channels = Some(channels.clone());
    cfg.break_output_correlation = opts.break_correlation;
    let analytic_det = match opts.analytic_eta {
        Some(eta) => DetectorParams::new(eta).map_err(|e| CliError::InvalidArgument(format!("--analytic-eta: {e}")))?,
        None => s.det,
    };
    let band = (
        opts.band.0.unwrap_or(0.0),
        opts.band.1.unwrap_or(0.5 * s.cavity.kappa()),
    );

    let steady = steady_state(&s.cavity, &s.drive);
    let ts = simulate(&s.cavity, &s.drive, &steady, s.mech.as_ref(), &s.det, s.filter.as_ref(), &cfg)?;
    println!("simulated {} samples at {} s spacing", ts.len(), format_value(ts.dt()));
    if let Some(dc) = s.filter.as_ref().map(|k| dc_level(s, Some(k))).transpose()? {
        println!("analytic closed-loop dc: {}", format_value(dc * units.amplitude()));
    }

    let mut header = vec![units.omega_header().to_string()];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut omegas = Vec::new();
    let mut failures = Vec::new();
    for ch in channels {
        let est = estimate_psd(&ts, ch, &cfg)?;
        let (budget, scale) = match ch {
            Channel::ReflectedPhase => {
                let mech = s.mech.as_ref().expect("phase channel needs mechanics");
                let fb = s.filter.as_ref().map(|k| (&analytic_det, k));
                let b = reflected_phase_spectrum(&s.cavity, &s.drive, &steady, mech, est.grid(), fb)?;
                (b, 1.0)
            }
            _ => (
                amplitude_budget(s, &analytic_det, s.filter.as_ref(), est.grid())?,
                units.amplitude(),
            ),
        };
        let r = compare_psd(&est, &budget, Some(band), opts.tolerance)?;
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!(
            "{}: rms {:.2}%, max {:.2}% at omega {}, {} bins, {} segments, tolerance {:.2}% -> {verdict}",
            ch.label(),
            100.0 * r.rms_deviation,
            100.0 * r.max_relative_deviation,
            format_value(r.max_deviation_omega * units.omega()),
            r.bins,
            est.segments(),
            100.0 * opts.tolerance
        );
        if !r.passed {
            failures.push(format!("{} rms deviation {:.2}%", ch.label(), 100.0 * r.rms_deviation));
        }
        omegas = est.grid().omegas().to_vec();
        header.push(format!("{}_estimate", ch.label()));
        header.push(format!("{}_analytic", ch.label()));
        columns.push(est.values().iter().map(|v| v * scale).collect());
        columns.push(budget.total().iter().map(|v| v * scale).collect());
    }

    let mut table = Table::new(header);
    for (i, &w) in omegas.iter().enumerate() {
        let mut row = vec![w * units.omega()];
        row.extend(columns.iter().map(|c| c[i]));
        table.push(row);
    }
    table.write(output)?;
    println!("wrote {} ({} rows)", output.display(), table.len());

    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::ComparisonFailed(failures.join("; ")))
    }
}

/// Reflected-phase budgets with the loop closed and with an
/// amplitude-squeezed drive instead, plus a summary of their difference.
pub fn compare(s: &Scenario, squeeze: f64, output: &Path, normalized: bool) -> Result<(), CliError> {
    if !(squeeze > 0.0 && squeeze < 1.0) {
        return Err(CliError::InvalidSqueezeFactor(squeeze));
    }
    let units = Units::new(&s.cavity, normalized);
    let k = s.filter("compare")?;
    require_stable(s, k)?;
    let mech = s.mech.clone().unwrap_or_else(MechanicalResponse::decoupled);
    let steady = steady_state(&s.cavity, &s.drive);
    let cmp = compare_squeezing_vs_feedback(
        &s.cavity, &s.drive, &steady, &mech, &s.grid, &s.det, k, squeeze,
    )?;

    for (budget, suffix) in [(&cmp.feedback, "feedback"), (&cmp.squeezed, "squeezed")] {
        let path = with_suffix(output, suffix);
        let table = Table::from_budget(budget, units.omega_header(), units.omega(), 1.0);
        table.write(&path)?;
        println!("wrote {} ({} rows)", path.display(), table.len());
    }

    let omegas = s.grid.omegas();
    let delta: Vec<f64> = cmp
        .squeezed
        .total()
        .iter()
        .zip(cmp.feedback.total())
        .map(|(q, f)| q - f)
        .collect();
    let (i_max, d_max) = delta
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let (i_min, d_min) = delta
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let w = |i: usize| format_value(omegas[i] * units.omega());
    println!(
        "at omega {}: feedback {}, squeezed {}",
        w(0),
        format_value(cmp.feedback.total()[0]),
        format_value(cmp.squeezed.total()[0])
    );
    let penalty = cmp
        .squeezed
        .contribution(NoiseSource::InputPhase)
        .map_or(0.0, |v| v[0]);
    println!("squeezed input-phase term at omega {}: {}", w(0), format_value(penalty));
    println!("max delta (squeezed - feedback): {} at omega {}", format_value(d_max), w(i_max));
    println!("min delta (squeezed - feedback): {} at omega {}", format_value(d_min), w(i_min));
    Ok(())
}
