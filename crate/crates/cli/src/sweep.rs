//! Parameter sweeps and the figure presets, written as CSV.
//!
//! Output layout: `#` comment lines with the full parameterization and seed,
//! one header row, then one row per sweep point in sweep order. Rows whose
//! closed form does not apply are kept, with empty cells and
//! `validity=invalid`.

use std::collections::HashMap;
use std::io::Write;

use clap::ValueEnum;
use fblmimo_core::{
    db_to_linear, dispersion_mean, dispersion_mean_first_order, dispersion_mean_highsnr, dispersion_variance,
    estimate_batch, highsnr_rate_bound, inv_eigen_sum_mean, linear_to_db, log2_1p, min_blocklength, mp_stieltjes_mean,
    q_inv, AntennaConfig, DispersionStats, Functional, LinkParams, McEstimate, McRun, SquarePolicy,
};

use crate::args::{MethodArg, Quantity, SweepArgs, SweepVar};
use crate::commands::{emendation, policy, probability};
use crate::output::num;
use crate::{CliError, Result};

const MAX_ROWS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Eval {
    Closed,
    HighSnr,
    Mc,
}

impl Eval {
    fn id(self) -> &'static str {
        match self {
            Eval::Closed => "closed",
            Eval::HighSnr => "high_snr",
            Eval::Mc => "mc",
        }
    }
}

fn quantity_id(q: Quantity) -> String {
    q.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

fn var_id(v: SweepVar) -> String {
    v.to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string()
}

/// The analytic method of a quantity, used for `--method both` and as the default.
fn analytic(q: Quantity) -> Eval {
    match q {
        Quantity::Capacity | Quantity::RateBound => Eval::HighSnr,
        _ => Eval::Closed,
    }
}

fn supports(q: Quantity, e: Eval) -> bool {
    match e {
        Eval::Closed => !matches!(q, Quantity::Capacity | Quantity::RateBound),
        Eval::HighSnr => matches!(q, Quantity::DispersionMean | Quantity::Capacity | Quantity::RateBound),
        Eval::Mc => q != Quantity::Blocklength,
    }
}

fn functionals(q: Quantity) -> &'static [Functional] {
    match q {
        Quantity::ShiftedInvSum => &[Functional::ShiftedInvSum],
        Quantity::InvEigenSum => &[Functional::InvEigenSum],
        Quantity::DispersionMean | Quantity::DispersionMeanFirstOrder | Quantity::DispersionVar => {
            &[Functional::Dispersion]
        }
        Quantity::Capacity => &[Functional::Capacity],
        Quantity::RateBound => &[Functional::Capacity, Functional::Dispersion],
        Quantity::Blocklength => &[],
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Series {
    tx: Option<usize>,
    rx: Option<usize>,
    rho: Option<f64>,
}

impl Series {
    fn new(tx: usize, rx: usize) -> Self {
        Self {
            tx: Some(tx),
            rx: Some(rx),
            rho: None,
        }
    }

    fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(tx) = self.tx {
            parts.push(format!("M={tx}"));
        }
        if let Some(rx) = self.rx {
            parts.push(format!("N={rx}"));
        }
        if let Some(rho) = self.rho {
            parts.push(format!("snr_db={}", num(linear_to_db(rho))));
        }
        parts.join(" ")
    }
}

struct Range {
    from: f64,
    to: f64,
    step: f64,
}

struct Plan {
    figure: Option<u8>,
    quantity: Quantity,
    methods: Vec<Eval>,
    var: SweepVar,
    range: Range,
    series: Vec<Series>,
    epsilon: f64,
    n: Option<u64>,
    rate_fraction: f64,
    psi: Option<f64>,
    xi: Option<f64>,
    policy: SquarePolicy,
    run: McRun,
    notes: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Row {
    value: f64,
    cfg: AntennaConfig,
    rho: f64,
    n: Option<u64>,
}

/// One evaluated method for one row.
enum Cells {
    Values { values: Vec<f64>, std_error: Option<f64> },
    Invalid(String),
}

pub fn run(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let plan = Plan::from_args(a)?;
    let rows = plan.rows()?;
    let csv = plan.render(&rows, err)?;
    match &a.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            writeln!(out, "rows={} out={}", rows.len(), path.display()).map_err(stdout_error)
        }
        None => out.write_all(csv.as_bytes()).map_err(stdout_error),
    }
}

fn stdout_error(source: std::io::Error) -> CliError {
    CliError::Io {
        path: "<stdout>".into(),
        source,
    }
}

fn preset(figure: u8) -> (Quantity, MethodArg, SweepVar, Range, Vec<Series>, &'static str) {
    let snr_axis = Range {
        from: 0.0,
        to: 30.0,
        step: 2.0,
    };
    let wide = vec![Series::new(4, 8), Series::new(8, 16), Series::new(16, 32)];
    let tall = vec![Series::new(8, 4), Series::new(16, 8), Series::new(32, 16)];
    let snr_note = "axis choice: rho_db from 0 to 30 step 2";
    match figure {
        1 => (
            Quantity::ShiftedInvSum,
            MethodArg::Both,
            SweepVar::RhoDb,
            snr_axis,
            wide,
            snr_note,
        ),
        2 => (
            Quantity::ShiftedInvSum,
            MethodArg::Both,
            SweepVar::RhoDb,
            snr_axis,
            tall,
            snr_note,
        ),
        3 => {
            let series = vec![
                Series::new(4, 8),
                Series::new(8, 4),
                Series::new(16, 32),
                Series::new(32, 16),
            ];
            (
                Quantity::DispersionMeanFirstOrder,
                MethodArg::Both,
                SweepVar::RhoDb,
                snr_axis,
                series,
                snr_note,
            )
        }
        4 => (
            Quantity::DispersionMean,
            MethodArg::Both,
            SweepVar::RhoDb,
            snr_axis,
            wide,
            snr_note,
        ),
        5 => (
            Quantity::DispersionMean,
            MethodArg::Both,
            SweepVar::RhoDb,
            snr_axis,
            tall,
            snr_note,
        ),
        6 => {
            let at = |db: f64| Series {
                tx: None,
                rx: Some(4),
                rho: Some(db_to_linear(db)),
            };
            let range = Range {
                from: 6.0,
                to: 32.0,
                step: 2.0,
            };
            let note = "axis choice: M from 6 to 32 step 2 with N = 4, at the calibrated 5 dB and 7 dB";
            (
                Quantity::DispersionVar,
                MethodArg::Both,
                SweepVar::Tx,
                range,
                vec![at(5.0), at(7.0)],
                note,
            )
        }
        7 => {
            let series = vec![Series {
                rho: Some(db_to_linear(15.0)),
                ..Series::default()
            }];
            let range = Range {
                from: 1.0,
                to: 64.0,
                step: 1.0,
            };
            let note = "axis choice: m from 1 to 64 with M = N = m";
            (
                Quantity::Blocklength,
                MethodArg::Closed,
                SweepVar::Dof,
                range,
                series,
                note,
            )
        }
        _ => unreachable!("clap restricts --figure to 1..=7"),
    }
}

fn methods_for(q: Quantity, m: MethodArg) -> Result<Vec<Eval>> {
    let methods = match m {
        MethodArg::Closed => vec![Eval::Closed],
        MethodArg::HighSnr => vec![Eval::HighSnr],
        MethodArg::Mc => vec![Eval::Mc],
        MethodArg::Both => vec![analytic(q), Eval::Mc],
    };
    for &e in &methods {
        if !supports(q, e) {
            return Err(CliError::Usage(format!(
                "quantity {} has no {} method",
                quantity_id(q),
                e.id()
            )));
        }
    }
    Ok(methods)
}

impl Plan {
    fn from_args(a: &SweepArgs) -> Result<Self> {
        let run = a.mc.run()?;
        let (quantity, default_method, var, range, series, note) = match a.figure {
            Some(f) => preset(f),
            None => {
                let quantity = a.quantity.expect("clap requires --quantity with --var");
                let range = Range {
                    from: a.from.expect("clap requires --from"),
                    to: a.to.expect("clap requires --to"),
                    step: a.step.expect("clap requires --step"),
                };
                let rho = match (a.snr_db, a.snr_linear) {
                    (Some(db), _) => Some(db_to_linear(db)),
                    (None, linear) => linear,
                };
                let series = vec![Series {
                    tx: a.tx,
                    rx: a.rx,
                    rho,
                }];
                let method = match analytic(quantity) {
                    Eval::HighSnr => MethodArg::HighSnr,
                    _ => MethodArg::Closed,
                };
                (quantity, method, a.var.expect("clap requires --var"), range, series, "")
            }
        };
        let methods = methods_for(quantity, a.method.unwrap_or(default_method))?;
        if var == SweepVar::Blocklength && quantity != Quantity::RateBound {
            return Err(CliError::Usage(
                "sweeping n only applies to --quantity rate-bound".into(),
            ));
        }
        let notes = if note.is_empty() {
            Vec::new()
        } else {
            vec![note.to_string()]
        };
        Ok(Self {
            figure: a.figure,
            quantity,
            methods,
            var,
            range,
            series,
            epsilon: a.epsilon,
            n: a.n,
            rate_fraction: a.rate_fraction,
            psi: a.psi,
            xi: a.xi,
            policy: policy(a.square_convention),
            run,
            notes,
        })
    }

    fn values(&self) -> Result<Vec<f64>> {
        let Range { from, to, step } = self.range;
        if !(from.is_finite() && to.is_finite() && step.is_finite()) {
            return Err(CliError::Usage("sweep bounds and step must be finite".into()));
        }
        if step <= 0.0 {
            return Err(CliError::Usage(format!("sweep step must be positive, got {step}")));
        }
        if from > to {
            return Err(CliError::Usage(format!(
                "empty sweep range: from {from} is above to {to}"
            )));
        }
        let count = ((to - from) / step + 1e-9).floor() as usize + 1;
        if count > MAX_ROWS {
            return Err(CliError::Usage(format!(
                "sweep would produce {count} rows (limit {MAX_ROWS})"
            )));
        }
        let integral = self.var != SweepVar::RhoDb;
        (0..count)
            .map(|k| {
                let v = from + k as f64 * step;
                if !integral {
                    return Ok(v);
                }
                let r = v.round();
                if (v - r).abs() > 1e-9 || r < 1.0 {
                    return Err(CliError::Usage(format!(
                        "{} takes positive integer values, the sweep reaches {v}",
                        var_id(self.var)
                    )));
                }
                Ok(r)
            })
            .collect()
    }

    fn rows(&self) -> Result<Vec<Row>> {
        let values = self.values()?;
        let needs_n = self.quantity == Quantity::RateBound;
        let mut rows = Vec::with_capacity(values.len() * self.series.len());
        for s in &self.series {
            for &v in &values {
                let pick = |own: SweepVar, fixed: Option<usize>, flag: &str| -> Result<usize> {
                    if self.var == own || self.var == SweepVar::Dof {
                        return Ok(v as usize);
                    }
                    fixed.ok_or_else(|| {
                        CliError::Usage(format!("{flag} is required when sweeping {}", var_id(self.var)))
                    })
                };
                let tx = pick(SweepVar::Tx, s.tx, "--M")?;
                let rx = pick(SweepVar::Rx, s.rx, "--N")?;
                let rho = if self.var == SweepVar::RhoDb {
                    db_to_linear(v)
                } else {
                    s.rho
                        .ok_or_else(|| CliError::Usage("--snr-db or --snr-linear is required".into()))?
                };
                let n = if self.var == SweepVar::Blocklength {
                    Some(v as u64)
                } else if needs_n {
                    Some(
                        self.n
                            .ok_or_else(|| CliError::Usage("--n is required for rate-bound".into()))?,
                    )
                } else {
                    None
                };
                rows.push(Row {
                    value: v,
                    cfg: AntennaConfig::new(tx, rx)?,
                    rho,
                    n,
                });
            }
        }
        // Reject global domain problems up front rather than per row.
        probability(self.epsilon)?;
        for r in &rows {
            if !(r.rho > 0.0 && r.rho.is_finite()) {
                return Err(CliError::Usage(format!(
                    "SNR must be positive and finite, got rho={}",
                    r.rho
                )));
            }
        }
        Ok(rows)
    }

    fn context_columns(&self) -> Vec<&'static str> {
        let mut cols = Vec::new();
        if self.var != SweepVar::Tx {
            cols.push("M");
        }
        if self.var != SweepVar::Rx {
            cols.push("N");
        }
        if self.var != SweepVar::RhoDb {
            cols.push("snr_db");
        }
        if self.quantity == Quantity::RateBound && self.var != SweepVar::Blocklength {
            cols.push("n");
        }
        cols
    }

    fn value_columns(&self, e: Eval) -> Vec<String> {
        if self.quantity == Quantity::Blocklength {
            return vec!["n".into(), "n_real".into()];
        }
        vec![format!("{}_{}", quantity_id(self.quantity).replace('-', "_"), e.id())]
    }

    fn header(&self) -> Vec<String> {
        let mut h = vec![var_id(self.var)];
        h.extend(self.context_columns().into_iter().map(String::from));
        for &e in &self.methods {
            h.extend(self.value_columns(e));
        }
        if self.methods.contains(&Eval::Mc) {
            h.push("mc_std_error".into());
        }
        h.push("validity".into());
        h.push("seed".into());
        h
    }

    fn comments(&self) -> Vec<String> {
        let mut c = vec!["fblmimo sweep".to_string()];
        if let Some(f) = self.figure {
            c.push(format!("figure={f}"));
        }
        let methods: Vec<&str> = self.methods.iter().map(|e| e.id()).collect();
        c.push(format!(
            "quantity={} methods={}",
            quantity_id(self.quantity),
            methods.join(",")
        ));
        c.push(format!(
            "var={} from={} to={} step={}",
            var_id(self.var),
            num(self.range.from),
            num(self.range.to),
            num(self.range.step)
        ));
        for (i, s) in self.series.iter().enumerate() {
            c.push(format!("series={} {}", i + 1, s.describe()).trim_end().to_string());
        }
        match self.quantity {
            Quantity::Blocklength => c.push(format!(
                "epsilon={} rate_fraction={}",
                num(self.epsilon),
                num(self.rate_fraction)
            )),
            Quantity::RateBound => c.push(format!("epsilon={}", num(self.epsilon))),
            Quantity::DispersionVar => c.push(match (self.psi, self.xi) {
                (Some(p), Some(x)) => format!("psi={} xi={}", num(p), num(x)),
                _ => "psi,xi=calibrated defaults (5 dB: 1.41,0.5; 7 dB: 1.29,0.6)".into(),
            }),
            _ => {}
        }
        if self.policy == SquarePolicy::AddTransmitAntenna {
            c.push("square_convention=extra-transmit-antenna".into());
        }
        if self.methods.contains(&Eval::Mc) {
            c.push(format!("trials={} seed={}", self.run.trials, self.run.seed));
        } else {
            c.push(format!("seed={}", self.run.seed));
        }
        c.extend(self.notes.iter().cloned());
        c
    }

    fn closed(&self, e: Eval, row: &Row) -> std::result::Result<Vec<f64>, fblmimo_core::Error> {
        let stats_value = |s: DispersionStats, v: f64| {
            if s.is_valid() {
                Ok(vec![v])
            } else {
                Err(fblmimo_core::Error::Validity(format!("{:?}", s.validity)))
            }
        };
        match (self.quantity, e) {
            (Quantity::ShiftedInvSum, _) => Ok(vec![mp_stieltjes_mean(row.cfg, row.rho)?]),
            (Quantity::InvEigenSum, _) => Ok(vec![inv_eigen_sum_mean(row.cfg, self.policy)?]),
            (Quantity::DispersionMean, Eval::HighSnr) => {
                let s = dispersion_mean_highsnr(row.cfg, row.rho)?;
                let v = s.mean;
                stats_value(s, v)
            }
            (Quantity::DispersionMean, _) => {
                let s = dispersion_mean(row.cfg, row.rho, self.policy)?;
                let v = s.mean;
                stats_value(s, v)
            }
            (Quantity::DispersionMeanFirstOrder, _) => {
                let s = dispersion_mean_first_order(row.cfg, row.rho, self.policy)?;
                let v = s.mean;
                stats_value(s, v)
            }
            (Quantity::DispersionVar, _) => {
                let em =
                    emendation(self.psi, self.xi, row.rho).map_err(|e| fblmimo_core::Error::Validity(e.to_string()))?;
                let s = dispersion_variance(row.cfg, row.rho, em)?;
                let v = s.variance.expect("variance is set");
                stats_value(s, v)
            }
            (Quantity::Capacity, _) => Ok(vec![row.cfg.dof() as f64 * log2_1p(row.rho)]),
            (Quantity::RateBound, _) => {
                let link = LinkParams::new(
                    row.rho,
                    probability(self.epsilon).expect("checked"),
                    row.n.expect("set"),
                )?;
                Ok(vec![highsnr_rate_bound(row.cfg, &link).r_bar])
            }
            (Quantity::Blocklength, _) => {
                let dof = row.cfg.dof();
                let r_bar = self.rate_fraction * dof as f64 * log2_1p(row.rho);
                let b = min_blocklength(dof, row.rho, probability(self.epsilon).expect("checked"), r_bar)?;
                Ok(vec![b.n as f64, b.n_real])
            }
        }
    }

    fn monte_carlo(&self, row: &Row, found: &McResults) -> Cells {
        let get = |f: Functional| found.get(&(row.cfg, f, row.rho.to_bits())).expect("estimated");
        let check = |est: &McEstimate| -> std::result::Result<(), String> {
            if est.is_valid() {
                Ok(())
            } else if est.heavy_tailed() {
                Err(format!("{} has no finite mean for M = N", est.target))
            } else {
                Err(format!(
                    "Monte-Carlo rejection rate {} above 1%",
                    num(est.rejection_rate())
                ))
            }
        };
        let (value, se, ests): (f64, Option<f64>, Vec<&McEstimate>) = match self.quantity {
            Quantity::DispersionVar => {
                let d = get(Functional::Dispersion);
                (d.variance(), None, vec![d])
            }
            Quantity::RateBound => {
                let (c, d) = (get(Functional::Capacity), get(Functional::Dispersion));
                let q = q_inv(probability(self.epsilon).expect("checked"));
                let v = c.mean() - (d.mean().max(0.0) / row.n.expect("set") as f64).sqrt() * q;
                (v, Some(c.std_error()), vec![c, d])
            }
            q => {
                let est = get(functionals(q)[0]);
                (est.mean(), Some(est.std_error()), vec![est])
            }
        };
        for est in ests {
            if let Err(reason) = check(est) {
                return Cells::Invalid(reason);
            }
        }
        Cells::Values {
            values: vec![value],
            std_error: se,
        }
    }

    fn estimate_all(&self, rows: &[Row]) -> Result<McResults> {
        let mut results = McResults::new();
        if !self.methods.contains(&Eval::Mc) {
            return Ok(results);
        }
        let mut groups: Vec<(AntennaConfig, Vec<(Functional, f64)>)> = Vec::new();
        for row in rows {
            let idx = match groups.iter().position(|(c, _)| *c == row.cfg) {
                Some(i) => i,
                None => {
                    groups.push((row.cfg, Vec::new()));
                    groups.len() - 1
                }
            };
            for &f in functionals(self.quantity) {
                let q = (f, row.rho);
                let queries = &mut groups[idx].1;
                if !queries.iter().any(|&(g, r)| g == f && r.to_bits() == row.rho.to_bits()) {
                    queries.push(q);
                }
            }
        }
        for (cfg, queries) in groups {
            for est in estimate_batch(cfg, &queries, &self.run)? {
                results.insert((cfg, est.target, est.rho.to_bits()), est);
            }
        }
        Ok(results)
    }

    fn render(&self, rows: &[Row], err: &mut dyn Write) -> Result<String> {
        let found = self.estimate_all(rows)?;
        let mut text = String::new();
        for line in self.comments() {
            text.push_str("# ");
            text.push_str(&line);
            text.push('\n');
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(self.header()).map_err(csv_error)?;
        let context = self.context_columns();
        for row in rows {
            let mut rec: Vec<String> = Vec::new();
            rec.push(if self.var == SweepVar::RhoDb {
                num(row.value)
            } else {
                format!("{}", row.value as u64)
            });
            for col in &context {
                rec.push(match *col {
                    "M" => row.cfg.tx().to_string(),
                    "N" => row.cfg.rx().to_string(),
                    "snr_db" => num(linear_to_db(row.rho)),
                    "n" => row.n.map(|n| n.to_string()).unwrap_or_default(),
                    _ => unreachable!(),
                });
            }
            let mut valid = true;
            let mut mc_se = String::new();
            for &e in &self.methods {
                let cells = match e {
                    Eval::Mc => self.monte_carlo(row, &found),
                    _ => match self.closed(e, row) {
                        Ok(values) => Cells::Values {
                            values,
                            std_error: None,
                        },
                        Err(reason) => Cells::Invalid(reason.to_string()),
                    },
                };
                let width = self.value_columns(e).len();
                match cells {
                    Cells::Values { values, std_error } => {
                        rec.extend(values.into_iter().map(num));
                        if let Some(se) = std_error {
                            mc_se = num(se);
                        }
                    }
                    Cells::Invalid(reason) => {
                        valid = false;
                        let _ = writeln!(
                            err,
                            "warning: {}={} ({}, snr_db={}) {}: {reason}",
                            var_id(self.var),
                            num(row.value),
                            row.cfg,
                            num(linear_to_db(row.rho)),
                            e.id()
                        );
                        rec.extend(std::iter::repeat_n(String::new(), width));
                    }
                }
            }
            if self.methods.contains(&Eval::Mc) {
                rec.push(mc_se);
            }
            rec.push(if valid { "valid" } else { "invalid" }.into());
            rec.push(self.run.seed.to_string());
            w.write_record(&rec).map_err(csv_error)?;
        }
        let body = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
        text.push_str(&String::from_utf8(body).expect("CSV cells are UTF-8"));
        Ok(text)
    }
}

type McResults = HashMap<(AntennaConfig, Functional, u64), McEstimate>;

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io {
        path: "<csv buffer>".into(),
        source: std::io::Error::other(e),
    }
}
