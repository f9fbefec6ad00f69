//! Row production for the four subcommands.
//!
//! Every row carries the error against the best available reference: the
//! closed-form price for the four European payoffs, a 20000-step binomial
//! lattice for the Bermudan put at maturity, nothing otherwise (the error
//! fields stay empty rather than inventing a reference).

use mol_pricer::grid::{build_mesh, GridSpec, Mesh};
use mol_pricer::{greeks_surface, oracles, solve_bermudan, value_at, MarketParams, OptionSpec};
use rayon::prelude::*;
use serde::Serialize;
use std::error::Error;
use std::time::Instant;

use crate::config::{PayoffKind, RunConfig};

const LATTICE_STEPS: usize = 20000;

#[derive(Debug, Serialize)]
pub struct PriceRow {
    pub n: usize,
    pub c: f64,
    pub tau: f64,
    pub spot: f64,
    pub price: f64,
    pub abs_error: Option<f64>,
    pub log_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct GreekRow {
    pub n: usize,
    pub tau: f64,
    pub greek: &'static str,
    pub value: f64,
    pub log_error: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ConvergeRow {
    pub n: usize,
    pub c: f64,
    pub price: f64,
    pub abs_error: Option<f64>,
    pub log_error: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct CsweepRow {
    pub n: usize,
    pub c: f64,
    pub price: f64,
    pub abs_error: Option<f64>,
    pub log_error: Option<f64>,
}

fn market(config: &RunConfig) -> MarketParams {
    MarketParams {
        sigma: config.sigma,
        rate: config.rate,
        spot: config.spot,
    }
}

fn mesh_for(config: &RunConfig, n: usize, c: f64) -> mol_pricer::Result<Mesh> {
    let spec = GridSpec {
        n_interior: n,
        c,
        d: config.d,
        eta_tail: config.eta_tail,
        eval_points: vec![config.spot],
    };
    build_mesh(&spec)
}

/// Natural log of the absolute error; empty when there is no reference or
/// the error is exactly zero.
fn error_columns(price: f64, reference: Option<f64>) -> (Option<f64>, Option<f64>) {
    match reference {
        Some(want) => {
            let abs = (price - want).abs();
            let log = if abs > 0.0 { Some(abs.ln()) } else { None };
            (Some(abs), log)
        }
        None => (None, None),
    }
}

/// Reference price with `tau` years left to expiry, when one exists.
fn price_reference(config: &RunConfig, tau: f64) -> mol_pricer::Result<Option<f64>> {
    if config.is_bermudan() {
        // the lattice values the whole contract, so it only pins the
        // full-maturity report; intermediate times have no reference
        if config.payoff != PayoffKind::Put || tau != config.maturity {
            return Ok(None);
        }
        let spec = config.option_spec()?;
        let value = oracles::binomial_bermudan_put(
            config.spot,
            config.strike,
            config.sigma,
            config.rate,
            config.maturity,
            &spec.exercise_dates,
            LATTICE_STEPS,
        )?;
        return Ok(Some(value));
    }
    if tau == 0.0 {
        return Ok(Some(config.payoff().value(config.spot)));
    }
    let value = match config.payoff {
        PayoffKind::Call => {
            oracles::bs_call(config.spot, config.strike, config.sigma, config.rate, tau)?.price
        }
        PayoffKind::Put => {
            oracles::bs_put(config.spot, config.strike, config.sigma, config.rate, tau)?.price
        }
        PayoffKind::Powered => oracles::powered_price(
            config.spot,
            config.strike,
            config.sigma,
            config.rate,
            tau,
            config.power,
        )?,
        PayoffKind::Cash => {
            oracles::cash_or_nothing(
                config.spot,
                config.strike,
                config.cash_amount,
                config.sigma,
                config.rate,
                tau,
            )?
            .price
        }
    };
    Ok(Some(value))
}

/// Closed-form Greeks with `tau` years left, for European contracts only.
fn greeks_reference(config: &RunConfig, tau: f64) -> mol_pricer::Result<Option<oracles::AnalyticResult>> {
    if config.is_bermudan() || tau == 0.0 {
        return Ok(None);
    }
    let result = match config.payoff {
        PayoffKind::Call => {
            oracles::bs_call(config.spot, config.strike, config.sigma, config.rate, tau)?
        }
        PayoffKind::Put => {
            oracles::bs_put(config.spot, config.strike, config.sigma, config.rate, tau)?
        }
        PayoffKind::Powered => oracles::powered_greeks(
            config.spot,
            config.strike,
            config.sigma,
            config.rate,
            tau,
            config.power,
        )?,
        PayoffKind::Cash => oracles::cash_or_nothing(
            config.spot,
            config.strike,
            config.cash_amount,
            config.sigma,
            config.rate,
            tau,
        )?,
    };
    Ok(Some(result))
}

fn solve_at(
    spec: &OptionSpec,
    config: &RunConfig,
    n: usize,
    c: f64,
) -> Result<Vec<(f64, f64)>, Box<dyn Error>> {
    let mesh = mesh_for(config, n, c)?;
    let surface = solve_bermudan(spec, &market(config), &mesh, &config.tau)?;
    config
        .tau
        .iter()
        .map(|&tau| Ok((tau, value_at(&surface, config.spot, tau)?)))
        .collect()
}

pub fn price_rows(config: &RunConfig) -> Result<Vec<PriceRow>, Box<dyn Error>> {
    let spec = config.option_spec()?;
    let (n, c) = single_grid(config)?;
    let mut rows = Vec::new();
    for (tau, price) in solve_at(&spec, config, n, c)? {
        let (abs_error, log_error) = error_columns(price, price_reference(config, tau)?);
        rows.push(PriceRow {
            n,
            c,
            tau,
            spot: config.spot,
            price,
            abs_error,
            log_error,
        });
    }
    Ok(rows)
}

pub fn greek_rows(config: &RunConfig) -> Result<Vec<GreekRow>, Box<dyn Error>> {
    let spec = config.option_spec()?;
    let (n, c) = single_grid(config)?;
    let mesh = mesh_for(config, n, c)?;
    let params = market(config);
    let mut rows = Vec::new();
    for &tau in &config.tau {
        let surface = greeks_surface(&spec, &params, &mesh, tau)?;
        let at_spot = surface
            .at_eval_point(config.spot)
            .ok_or("spot fell on a boundary node")?;
        let reference = greeks_reference(config, tau)?;
        let named: [(&'static str, f64, Option<f64>); 5] = [
            ("delta", at_spot.delta, reference.as_ref().map(|r| r.delta)),
            ("gamma", at_spot.gamma, reference.as_ref().map(|r| r.gamma)),
            ("theta", at_spot.theta, reference.as_ref().map(|r| r.theta)),
            ("vega", at_spot.vega, reference.as_ref().map(|r| r.vega)),
            ("rho", at_spot.rho, reference.as_ref().map(|r| r.rho)),
        ];
        for (greek, value, want) in named {
            let (_, log_error) = error_columns(value, want);
            rows.push(GreekRow {
                n,
                tau,
                greek,
                value,
                log_error,
            });
        }
    }
    Ok(rows)
}

/// One timed solve per grid size, sequentially: rows time honestly only
/// when nothing else competes for the cores.
pub fn converge_rows(config: &RunConfig) -> Result<Vec<ConvergeRow>, Box<dyn Error>> {
    let spec = config.option_spec()?;
    let c = single_c(config)?;
    if config.tau != [config.maturity] {
        return Err("converge reports at maturity; drop --tau".into());
    }
    let reference = price_reference(config, config.maturity)?;
    let mut rows = Vec::new();
    for &n in &config.n {
        let start = Instant::now();
        let mesh = mesh_for(config, n, c)?;
        let surface = solve_bermudan(&spec, &market(config), &mesh, &[config.maturity])?;
        let price = value_at(&surface, config.spot, config.maturity)?;
        let seconds = start.elapsed().as_secs_f64();
        let (abs_error, log_error) = error_columns(price, reference);
        rows.push(ConvergeRow {
            n,
            c,
            price,
            abs_error,
            log_error,
            seconds,
        });
    }
    Ok(rows)
}

/// One solve per mesh parameter, in parallel; rows come back in input
/// order regardless of completion order.
pub fn csweep_rows(config: &RunConfig) -> Result<Vec<CsweepRow>, Box<dyn Error>> {
    let spec = config.option_spec()?;
    let n = single_n(config)?;
    if config.tau != [config.maturity] {
        return Err("csweep reports at maturity; drop --tau".into());
    }
    let reference = price_reference(config, config.maturity)?;
    let results: Vec<Result<CsweepRow, String>> = config
        .c
        .par_iter()
        .map(|&c| {
            let mesh = mesh_for(config, n, c).map_err(|e| e.to_string())?;
            let surface = solve_bermudan(&spec, &market(config), &mesh, &[config.maturity])
                .map_err(|e| e.to_string())?;
            let price =
                value_at(&surface, config.spot, config.maturity).map_err(|e| e.to_string())?;
            let (abs_error, log_error) = error_columns(price, reference);
            Ok(CsweepRow {
                n,
                c,
                price,
                abs_error,
                log_error,
            })
        })
        .collect();
    results
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(Into::into)
}

fn single_grid(config: &RunConfig) -> Result<(usize, f64), Box<dyn Error>> {
    Ok((single_n(config)?, single_c(config)?))
}

fn single_n(config: &RunConfig) -> Result<usize, Box<dyn Error>> {
    match config.n[..] {
        [n] => Ok(n),
        _ => Err("this subcommand takes exactly one n".into()),
    }
}

fn single_c(config: &RunConfig) -> Result<f64, Box<dyn Error>> {
    match config.c[..] {
        [c] => Ok(c),
        _ => Err("this subcommand takes exactly one c".into()),
    }
}
