use std::io::Write;

use fblmimo_core::{
    avg_rate_bound, db_to_linear, dispersion_mean, dispersion_mean_highsnr, dispersion_variance, estimate,
    estimate_batch, highsnr_rate_bound, linear_to_db, log2_1p, min_blocklength, AntennaConfig, DispersionStats,
    EmendationParams, Functional, LinkParams, McRun, Probability, SquarePolicy, Validity,
};

use crate::args::{
    Antennas, BlocklengthArgs, DispersionArgs, McArgs, MethodArg, MonteCarlo, QInvArgs, RateArgs, RateMethodArg, Snr,
    Source, Stat,
};
use crate::output::Line;
use crate::{CliError, Result};

impl Snr {
    pub fn rho(&self) -> f64 {
        match (self.snr_db, self.snr_linear) {
            (Some(db), _) => db_to_linear(db),
            (None, Some(rho)) => rho,
            (None, None) => unreachable!("clap requires one SNR flag"),
        }
    }
}

impl Antennas {
    pub fn config(&self) -> Result<AntennaConfig> {
        Ok(AntennaConfig::new(self.tx, self.rx)?)
    }
}

impl MonteCarlo {
    pub fn run(&self) -> Result<McRun> {
        let workers = match self.workers {
            Some(0) => return Err(CliError::Usage("--workers must be at least 1".into())),
            Some(w) => w,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(McRun::new(self.trials, self.seed).with_workers(workers))
    }
}

pub(crate) fn probability(epsilon: f64) -> Result<Probability> {
    Ok(Probability::new(epsilon)?)
}

pub(crate) fn policy(square_convention: bool) -> SquarePolicy {
    if square_convention {
        SquarePolicy::AddTransmitAntenna
    } else {
        SquarePolicy::Reject
    }
}

/// Explicit `(ψ, ξ)` if given, else the calibrated defaults at 5 or 7 dB.
pub(crate) fn emendation(psi: Option<f64>, xi: Option<f64>, rho: f64) -> Result<EmendationParams> {
    match (psi, xi) {
        (Some(psi), Some(xi)) => Ok(EmendationParams::new(psi, xi)?),
        _ => EmendationParams::calibrated_for_linear(rho).ok_or_else(|| {
            CliError::Usage(format!(
                "no calibrated emendation parameters at {:.4} dB (defaults exist at 5 dB and 7 dB only); pass --psi and --xi",
                linear_to_db(rho)
            ))
        }),
    }
}

pub(crate) fn validity_text(v: &Validity) -> &'static str {
    if v.is_valid() {
        "valid"
    } else {
        "flagged"
    }
}

fn warn(err: &mut dyn Write, v: &Validity) {
    if let Validity::Flagged(reason) = v {
        let _ = writeln!(err, "warning: {reason}");
    }
}

pub fn q_inv(a: &QInvArgs) -> Result<String> {
    let x = fblmimo_core::q_inv(probability(a.epsilon)?);
    Ok(Line::new().num("x", x).finish())
}

pub fn dispersion(a: &DispersionArgs, err: &mut dyn Write) -> Result<String> {
    let cfg = a.antennas.config()?;
    let rho = a.snr.rho();
    let closed = || -> Result<DispersionStats> {
        Ok(match a.stat {
            Stat::Mean => dispersion_mean(cfg, rho, policy(a.square_convention))?,
            Stat::Var => dispersion_variance(cfg, rho, emendation(a.psi, a.xi, rho)?)?,
        })
    };
    let monte_carlo = || -> Result<DispersionStats> {
        let est = estimate(Functional::Dispersion, cfg, rho, &a.mc.run()?)?;
        Ok(DispersionStats::from_estimate(&est)?)
    };
    let key = match a.stat {
        Stat::Mean => "mean",
        Stat::Var => "variance",
    };
    let value = |s: &DispersionStats| match a.stat {
        Stat::Mean => s.mean,
        Stat::Var => s.variance.expect("variance requested"),
    };

    let mut line = Line::new();
    let stats = match a.method {
        MethodArg::Closed => {
            let s = closed()?;
            line = line.num(key, value(&s)).text("method", s.method);
            if let Some(t) = s.terms {
                line = line.num("g1", t.g1).num("g2", t.g2).num("g3", t.g3).num("g4", t.g4);
            }
            s
        }
        MethodArg::HighSnr => {
            if a.stat == Stat::Var {
                return Err(CliError::Usage(
                    "there is no high-SNR form of the dispersion variance".into(),
                ));
            }
            let s = dispersion_mean_highsnr(cfg, rho)?;
            line = line.num(key, s.mean).text("method", s.method);
            s
        }
        MethodArg::Mc => {
            let s = monte_carlo()?;
            line = line.num(key, value(&s)).text("method", s.method);
            if a.stat == Stat::Mean {
                line = line.num(
                    "std_error",
                    s.variance.unwrap_or(0.0).sqrt() / (a.mc.trials as f64).sqrt(),
                );
            }
            line = line.text("trials", a.mc.trials).text("seed", a.mc.seed);
            s
        }
        MethodArg::Both => {
            let c = closed()?;
            let m = monte_carlo()?;
            line = line
                .num(&format!("{key}_closed"), value(&c))
                .num(&format!("{key}_mc"), value(&m));
            if a.stat == Stat::Mean {
                line = line.num(
                    "mc_std_error",
                    m.variance.unwrap_or(0.0).sqrt() / (a.mc.trials as f64).sqrt(),
                );
            }
            line = line.text("trials", a.mc.trials).text("seed", a.mc.seed);
            warn(err, &m.validity);
            c
        }
    };
    warn(err, &stats.validity);
    Ok(line.text("validity", validity_text(&stats.validity)).finish())
}

pub fn rate(a: &RateArgs, err: &mut dyn Write) -> Result<String> {
    let cfg = a.antennas.config()?;
    let link = LinkParams::new(a.snr.rho(), probability(a.epsilon)?, a.n)?;
    match a.method {
        RateMethodArg::HighSnr => {
            let b = highsnr_rate_bound(cfg, &link);
            Ok(Line::new()
                .num("r_bar", b.r_bar)
                .num("normalized", b.normalized)
                .text("method", b.method)
                .finish())
        }
        RateMethodArg::Normal => {
            let run = a.mc.run()?;
            let rho = link.rho();
            let est = estimate_batch(cfg, &[(Functional::Capacity, rho), (Functional::Dispersion, rho)], &run)?;
            let disp = match a.dispersion {
                Source::Closed => dispersion_mean(cfg, rho, policy(a.square_convention))?,
                Source::Mc => DispersionStats::from_estimate(&est[1])?,
            };
            warn(err, &disp.validity);
            let b = avg_rate_bound(cfg, &link, &disp, est[0].mean());
            Ok(Line::new()
                .num("r_bar", b.r_bar)
                .num("normalized", b.normalized)
                .text("method", b.method)
                .num("capacity_mean", est[0].mean())
                .num("capacity_std_error", est[0].std_error())
                .num("dispersion_mean", disp.mean)
                .text("dispersion_method", disp.method)
                .text("validity", validity_text(&disp.validity))
                .text("trials", run.trials)
                .text("seed", run.seed)
                .finish())
        }
    }
}

pub fn blocklength(a: &BlocklengthArgs) -> Result<String> {
    let rho = a.snr.rho();
    let r_bar = match (a.target.rate, a.target.rate_fraction) {
        (Some(r), _) => r,
        (None, Some(f)) => f * a.m as f64 * log2_1p(rho),
        (None, None) => unreachable!("clap requires one target flag"),
    };
    let b = min_blocklength(a.m, rho, probability(a.epsilon)?, r_bar)?;
    Ok(Line::new()
        .text("n", b.n)
        .num("n_real", b.n_real)
        .num("r_bar", r_bar)
        .finish())
}

pub fn mc(a: &McArgs, err: &mut dyn Write) -> Result<String> {
    let cfg = a.antennas.config()?;
    let run = a.mc.run()?;
    let est = estimate(a.target, cfg, a.snr.rho(), &run)?;
    if est.heavy_tailed() {
        let _ = writeln!(
            err,
            "warning: {} has no finite mean for M = N; the estimate is unreliable",
            a.target
        );
    } else if !est.is_valid() {
        let _ = writeln!(
            err,
            "warning: rejection rate {} exceeds the 1% limit",
            crate::output::num(est.rejection_rate())
        );
    }
    Ok(Line::new()
        .text("target", est.target)
        .num("mean", est.mean())
        .num("std_error", est.std_error())
        .num("variance", est.variance())
        .text("trials", est.trials())
        .text("rejected", est.rejected)
        .text("valid", est.is_valid())
        .text("heavy_tailed", est.heavy_tailed())
        .text("seed", est.seed)
        .finish())
}
