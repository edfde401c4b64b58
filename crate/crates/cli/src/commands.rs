use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path;

use chrono::NaiveDate;
use debt_inflation::econometrics::{
    debt_inflation_iv, debt_inflation_regression, did, event_study, fama_macbeth_returns, long_difference,
    portfolio_sort, AnnualLevels, Control, DidSpec, EconError, EventSpec, LongDiffSpec, RegressionResult,
    ShockRegressionSpec, SortObs, TimeEffects, DID_TERM,
};
use debt_inflation::model::{self, ModelParams, SweepMode};
use debt_inflation::numerics::{sample_sd, spearman};
use debt_inflation::panel::{
    load_panel, load_returns, simulate_panel, simulate_returns, stylized_price_levels, write_panel, write_returns,
    PanelConfig, ReturnsConfig,
};
use debt_inflation::shocks::{
    cross_section_summary, debt_inflation_series, duration_since_last_increase, inflation_duration_pairs,
    read_balance_sheets, simulate_sticky_prices, write_series_csv, year_end_levels, Frequency, LeverageBase,
    PricePath, StickyPriceConfig,
};
use debt_inflation::fmt_sig17;

use crate::output::{write_atomic, Manifest};
use crate::{
    CliError, DebtShockArgs, DefaultCurveArgs, DurationArgs, Effects, EqSweepArgs, EstimateArgs, EstimateSpec,
    FmbArgs, GridArgs, Mode, SimulateArgs, SimulateKind, SortArgs, Spacing, value_name,
};

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn estimation(e: EconError) -> CliError {
    CliError::Estimation(e.to_string())
}

fn price_grid(g: &GridArgs) -> Result<Vec<f64>, CliError> {
    if g.points == 0 {
        return Err(usage("--points must be at least 1"));
    }
    if !(g.pmin > 0.0 && g.pmax >= g.pmin && g.pmax.is_finite()) {
        return Err(usage(format!("need 0 < pmin <= pmax, got pmin={} pmax={}", g.pmin, g.pmax)));
    }
    if g.points == 1 {
        return Ok(vec![g.pmin]);
    }
    let step = |i: usize| i as f64 / (g.points - 1) as f64;
    Ok((0..g.points)
        .map(|i| match g.spacing {
            Spacing::Linear => g.pmin + (g.pmax - g.pmin) * step(i),
            Spacing::Log => (g.pmin.ln() + (g.pmax.ln() - g.pmin.ln()) * step(i)).exp(),
        })
        .collect())
}

fn record_grid(m: &mut Manifest, g: &GridArgs) {
    m.set("arg.pmin", g.pmin);
    m.set("arg.pmax", g.pmax);
    m.set("arg.points", g.points);
    m.set("arg.spacing", value_name(&g.spacing));
}

fn load_params(config: Option<&Path>, m: &mut Manifest) -> Result<ModelParams, CliError> {
    match config {
        Some(path) => {
            m.input("config", path)?;
            ModelParams::from_config_file(path).map_err(|e| usage(format!("{}: {e}", path.display())))
        }
        None => {
            m.set("config", "builtin-default");
            Ok(ModelParams::default_calibration())
        }
    }
}

pub fn eq_sweep(a: &EqSweepArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("eq-sweep", &a.out);
    let params = load_params(a.config.as_deref(), &mut m)?;
    record_grid(&mut m, &a.grid);
    let grid = price_grid(&a.grid)?;
    let mode = match a.mode {
        Mode::Flexible => SweepMode::Flexible,
        Mode::MenuCost => SweepMode::MenuCost,
    };
    m.set("arg.mode", value_name(&a.mode));
    m.seed(None);
    let rows = model::sweep(&grid, &params, mode).map_err(usage)?;
    write_atomic(&a.out, |w| model::write_sweep_csv(&rows, w).map_err(io))?;
    m.write(&a.out)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    println!("eq-sweep: {} points, {} unsolved", rows.len(), failed);
    Ok(())
}

/// Divided second differences of `y` against an uneven grid `x`.
fn second_differences(x: &[f64], y: &[f64]) -> Vec<Option<f64>> {
    (0..x.len())
        .map(|i| {
            if i == 0 || i + 1 == x.len() {
                return None;
            }
            let right = (y[i + 1] - y[i]) / (x[i + 1] - x[i]);
            let left = (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
            Some(2.0 * (right - left) / (x[i + 1] - x[i - 1]))
        })
        .collect()
}

pub const DEFAULT_CURVE_HEADER: [&str; 5] = ["P", "log_inflation", "default_share", "default_count", "second_difference"];

pub fn default_curve(a: &DefaultCurveArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("default-curve", &a.out);
    let params = load_params(a.config.as_deref(), &mut m)?;
    record_grid(&mut m, &a.grid);
    if !(a.firm_mass > 0.0 && a.firm_mass.is_finite()) {
        return Err(usage("--firm-mass must be positive"));
    }
    m.set("arg.firm_mass", a.firm_mass);
    m.seed(None);
    let grid = price_grid(&a.grid)?;
    let points = model::default_curve(&grid, &params).map_err(usage)?;
    let x: Vec<f64> = points.iter().map(|p| p.log_inflation).collect();
    let counts: Vec<f64> = points.iter().map(|p| p.default_share * a.firm_mass).collect();
    let d2 = second_differences(&x, &counts);
    write_atomic(&a.out, |w| {
        writeln!(w, "{}", DEFAULT_CURVE_HEADER.join(",")).map_err(io)?;
        for (i, p) in points.iter().enumerate() {
            let d = d2[i].map(fmt_sig17).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_sig17(p.price_level),
                fmt_sig17(p.log_inflation),
                fmt_sig17(p.default_share),
                fmt_sig17(counts[i]),
                d
            )
            .map_err(io)?;
        }
        Ok(())
    })?;
    m.write(&a.out)?;
    let negative = d2.iter().flatten().filter(|&&v| v < 0.0).count();
    println!("default-curve: {} points, {} negative second differences", points.len(), negative);
    Ok(())
}

fn read_config_text(path: Option<&Path>, m: &mut Manifest) -> Result<String, CliError> {
    match path {
        Some(p) => {
            m.input("config", p)?;
            std::fs::read_to_string(p).map_err(|e| usage(format!("cannot read {}: {e}", p.display())))
        }
        None => {
            m.set("config", "builtin-default");
            Ok(String::new())
        }
    }
}

fn december(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date")
}

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("simulate", &a.out);
    let text = read_config_text(a.panel_config.as_deref(), &mut m)?;
    m.set("arg.kind", value_name(&a.kind));
    m.seed(Some(a.seed));
    match a.kind {
        SimulateKind::Panel => {
            let cfg = PanelConfig::parse(&text, a.seed).map_err(usage)?;
            let rows = simulate_panel(&cfg).map_err(usage)?;
            write_atomic(&a.out, |w| write_panel(&rows, w).map_err(io))?;
            if let Some(path) = &a.prices_out {
                let levels = stylized_price_levels(cfg.first_year - 1, cfg.last_year);
                let points = levels.iter().map(|(&y, &l)| (december(y), l)).collect();
                let path_data = PricePath::new(Frequency::Annual, points).map_err(io)?;
                write_atomic(path, |w| path_data.write_csv(w).map_err(io))?;
                m.set("prices_output", path.display());
            }
            println!("simulate: {} firm-years", rows.len());
        }
        SimulateKind::Returns => {
            if a.prices_out.is_some() {
                return Err(usage("--prices-out applies to --kind panel only"));
            }
            let cfg = ReturnsConfig::parse(&text, a.seed).map_err(usage)?;
            let rows = simulate_returns(&cfg).map_err(usage)?;
            write_atomic(&a.out, |w| write_returns(&rows, w).map_err(io))?;
            println!("simulate: {} firm-periods", rows.len());
        }
    }
    m.write(&a.out)
}

fn read_price_path(path: &Path) -> Result<PricePath, CliError> {
    let file = File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    PricePath::read_csv(file, None).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn annual_levels(a: &EstimateArgs, m: &mut Manifest) -> Result<AnnualLevels, CliError> {
    let path = a.prices.as_deref().ok_or_else(|| usage("--prices is required for --spec shock and --spec iv"))?;
    m.input("prices", path)?;
    Ok(year_end_levels(&read_price_path(path)?))
}

fn write_regression(r: &RegressionResult, a: &EstimateArgs) -> Result<(), CliError> {
    write_atomic(&a.out, |w| r.write_csv(w).map_err(io))?;
    if let Some(path) = &a.report {
        write_atomic(path, |w| r.write_report(w).map_err(io))?;
    }
    Ok(())
}

fn summarize(r: &RegressionResult, term: &str) {
    if let Some(i) = r.index(term) {
        println!("{term} = {} (se {}, p {})", r.coefficients[i], r.se(i), r.p_value(i));
    }
}

pub fn estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("estimate", &a.out);
    m.input("panel", &a.input)?;
    m.seed(None);
    let panel = load_panel(&a.input).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let controls: Vec<Control> = a
        .controls
        .iter()
        .filter(|c| !c.trim().is_empty())
        .map(|c| Control::parse(c).ok_or_else(|| usage(format!("unknown control {c:?}"))))
        .collect::<Result<_, _>>()?;
    let effects = match a.effects {
        Effects::Year => TimeEffects::Year,
        Effects::IndustryYear => TimeEffects::IndustryYear,
    };
    m.set("arg.spec", value_name(&a.spec));
    m.set("arg.controls", controls.iter().map(|c| c.name()).collect::<Vec<_>>().join(","));
    m.set("arg.effects", value_name(&a.effects));
    match a.spec {
        EstimateSpec::Did => {
            m.set("arg.post_year", a.post_year);
            let r = did(&panel, &DidSpec { post_year: a.post_year, controls, effects }).map_err(estimation)?;
            write_regression(&r, a)?;
            summarize(&r, DID_TERM);
            let mut by_firm = BTreeMap::new();
            for row in &panel {
                by_firm.insert(row.firm_id, row.leverage_1917);
            }
            let sd = sample_sd(&by_firm.into_values().collect::<Vec<_>>());
            println!("one-sd leverage effect = {} (leverage sd {sd})", r.coefficients[0] * sd);
        }
        EstimateSpec::Event => {
            let base_year = a.base_year.unwrap_or(1918);
            m.set("arg.base_year", base_year);
            let study = event_study(&panel, &EventSpec { base_year, controls, effects }).map_err(estimation)?;
            write_atomic(&a.out, |w| study.write_csv(w).map_err(io))?;
            if let Some(path) = &a.report {
                write_atomic(path, |w| study.regression.write_report(w).map_err(io))?;
            }
            println!("event study: {} coefficients, base year {base_year}", study.path.len());
        }
        EstimateSpec::Shock | EstimateSpec::Iv => {
            let levels = annual_levels(a, &mut m)?;
            let base_year = a.base_year.unwrap_or(1917);
            m.set("arg.base_year", base_year);
            m.set("arg.lags", a.lags);
            let spec = ShockRegressionSpec { base_year, lags: a.lags, controls, effects };
            if matches!(a.spec, EstimateSpec::Shock) {
                let r = debt_inflation_regression(&panel, &levels, &spec).map_err(estimation)?;
                write_regression(&r, a)?;
                for name in &r.names[..=a.lags] {
                    summarize(&r, name);
                }
                if let Some(t) = &r.joint_test {
                    println!("joint test F = {} p = {}", t.f_stat, t.p_value);
                }
            } else {
                let r = debt_inflation_iv(&panel, &levels, &spec).map_err(estimation)?;
                write_regression(&r, a)?;
                summarize(&r, &r.names[0]);
                for s in &r.first_stage {
                    println!("first stage {} F = {} weak = {}", s.endogenous, s.f_stat, s.weak);
                }
            }
        }
        EstimateSpec::Longdiff => {
            m.set("arg.from", a.from);
            m.set("arg.to", a.to);
            m.set("arg.lagged_from", a.lagged_from.map(|y| y.to_string()).unwrap_or_else(|| "none".into()));
            let spec = LongDiffSpec { from: a.from, to: a.to, controls, lagged_from: a.lagged_from };
            let ld = long_difference(&panel, &spec).map_err(estimation)?;
            write_regression(&ld.regression, a)?;
            summarize(&ld.regression, "leverage");
            println!("dropped firms = {}", ld.dropped_firms);
        }
    }
    m.write(&a.out)
}

fn load_returns_input(path: &Path, m: &mut Manifest) -> Result<Vec<debt_inflation::panel::ReturnObs>, CliError> {
    m.input("returns", path)?;
    load_returns(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn fmb(a: &FmbArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("fmb", &a.out);
    let returns = load_returns_input(&a.input, &mut m)?;
    m.set("arg.market_beta", a.market_beta);
    m.seed(None);
    let r = fama_macbeth_returns(&returns, a.market_beta).map_err(estimation)?;
    write_atomic(&a.out, |w| r.write_csv(w).map_err(io))?;
    m.set("periods_used", r.periods_used);
    m.set("periods_skipped", r.periods_skipped.len());
    m.write(&a.out)?;
    println!("fmb: leverage_lag = {} (se {}), {} periods, {} skipped", r.coefficients[1], r.se[1], r.periods_used, r.periods_skipped.len());
    Ok(())
}

pub fn sort(a: &SortArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("sort", &a.out);
    let returns = load_returns_input(&a.input, &mut m)?;
    m.set("arg.buckets", a.buckets);
    m.seed(None);
    let obs: Vec<SortObs> = returns.iter().map(SortObs::from).collect();
    let r = portfolio_sort(&obs, a.buckets).map_err(estimation)?;
    write_atomic(&a.out, |w| r.write_csv(w).map_err(io))?;
    m.write(&a.out)?;
    println!("sort: HML = {} (se {}) per period over {} periods", r.hml_mean, r.hml_se, r.n_periods);
    Ok(())
}

pub const DURATION_PAIRS_HEADER: [&str; 3] = ["date", "inflation", "mean_duration"];

pub fn duration(a: &DurationArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("duration", &a.out);
    if !a.simulate {
        let path = a.input.as_deref().expect("clap requires --in without --simulate");
        m.input("prices", path)?;
        m.seed(a.seed);
        let series = duration_since_last_increase(&read_price_path(path)?).map_err(usage)?;
        write_atomic(&a.out, |w| write_series_csv(&series, w).map_err(io))?;
        println!("duration: {} observations", series.len());
        return m.write(&a.out);
    }
    let seed = a.seed.ok_or_else(|| usage("--simulate requires an explicit --seed"))?;
    m.seed(Some(seed));
    m.set("arg.setters", a.setters);
    m.set("arg.years", a.years);
    let config = StickyPriceConfig { n_setters: a.setters, years: a.years, ..StickyPriceConfig::new(seed) };
    let sim = simulate_sticky_prices(&config).map_err(usage)?;
    let pairs = inflation_duration_pairs(&sim).map_err(|e| CliError::Estimation(e.to_string()))?;
    write_atomic(&a.out, |w| {
        writeln!(w, "{}", DURATION_PAIRS_HEADER.join(",")).map_err(io)?;
        for p in &pairs {
            writeln!(w, "{},{},{}", p.date.format("%Y-%m-%d"), fmt_sig17(p.inflation), fmt_sig17(p.mean_duration)).map_err(io)?;
        }
        Ok(())
    })?;
    m.write(&a.out)?;
    let x: Vec<f64> = pairs.iter().map(|p| p.inflation).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.mean_duration).collect();
    if let Some(s) = spearman(&x, &y) {
        println!("duration: {} months, spearman rho = {} p = {}", s.n, s.rho, s.p_value);
    }
    Ok(())
}

pub const CROSS_SECTION_HEADER: [&str; 4] = ["date", "mean", "p10", "p90"];

pub fn debt_shock(a: &DebtShockArgs) -> Result<(), CliError> {
    let mut m = Manifest::new("debt-shock", &a.out);
    m.input("prices", &a.prices)?;
    m.set("arg.base_year", a.base_year);
    m.seed(None);
    let prices = read_price_path(&a.prices)?;
    if let Some(lev) = a.leverage {
        m.set("arg.leverage", lev);
        if !(0.0..=1.0).contains(&lev) {
            return Err(usage(format!("--leverage must lie in [0, 1], got {lev}")));
        }
        let base = LeverageBase { firm_id: "input".into(), liabilities: lev, equity: 1.0 - lev, base_year: a.base_year };
        let series = debt_inflation_series(&base, &prices).map_err(usage)?;
        write_atomic(&a.out, |w| write_series_csv(&series, w).map_err(io))?;
        println!("debt-shock: {} dates", series.len());
    } else {
        let path = a.balance_sheets.as_deref().expect("clap requires one source");
        m.input("balance_sheets", path)?;
        let file = File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        let firms = read_balance_sheets(file, a.base_year).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let summary = cross_section_summary(&firms, &prices).map_err(usage)?;
        write_atomic(&a.out, |w| {
            writeln!(w, "{}", CROSS_SECTION_HEADER.join(",")).map_err(io)?;
            for p in &summary {
                writeln!(w, "{},{},{},{}", p.date.format("%Y-%m-%d"), fmt_sig17(p.mean), fmt_sig17(p.p10), fmt_sig17(p.p90))
                    .map_err(io)?;
            }
            Ok(())
        })?;
        println!("debt-shock: {} firms, {} dates", firms.len(), summary.len());
    }
    m.write(&a.out)
}
