//! Independent reference values: closed forms for the European payoffs and
//! a binomial lattice for the Bermudan put.
//!
//! Nothing here touches the mesh, the operators, or the exponential; these
//! routines exist so the PDE engine can be checked against a second route.

use crate::{Error, Result};

/// Price and first-order sensitivities of a European contract.
///
/// `theta` is the calendar derivative `∂V/∂t` (value decays as the clock
/// advances), not `∂V/∂τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticResult {
    pub price: f64,
    pub delta: f64,
    pub gamma: f64,
    pub theta: f64,
    pub vega: f64,
    pub rho: f64,
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn validate_market(spot: f64, strike: f64, sigma: f64, rate: f64, tau: f64) -> Result<()> {
    if !(spot > 0.0 && spot.is_finite()) {
        return Err(Error::Oracle(format!("spot must be positive, got {spot}")));
    }
    if !(strike > 0.0 && strike.is_finite()) {
        return Err(Error::Oracle(format!(
            "strike must be positive, got {strike}"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Oracle(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if !rate.is_finite() {
        return Err(Error::Oracle(format!("rate must be finite, got {rate}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Oracle(format!(
            "time to expiry must be positive, got {tau}"
        )));
    }
    Ok(())
}

/// Black-Scholes call: price and all five sensitivities in closed form.
pub fn bs_call(spot: f64, strike: f64, sigma: f64, rate: f64, tau: f64) -> Result<AnalyticResult> {
    validate_market(spot, strike, sigma, rate, tau)?;
    let sqrt_tau = tau.sqrt();
    let d1 = ((spot / strike).ln() + (rate + 0.5 * sigma * sigma) * tau) / (sigma * sqrt_tau);
    let d2 = d1 - sigma * sqrt_tau;
    let disc = (-rate * tau).exp();
    let nd1 = normal_cdf(d1);
    let nd2 = normal_cdf(d2);
    let pdf1 = normal_pdf(d1);

    Ok(AnalyticResult {
        price: spot * nd1 - strike * disc * nd2,
        delta: nd1,
        gamma: pdf1 / (spot * sigma * sqrt_tau),
        theta: -spot * pdf1 * sigma / (2.0 * sqrt_tau) - rate * strike * disc * nd2,
        vega: spot * pdf1 * sqrt_tau,
        rho: tau * strike * disc * nd2,
    })
}

/// Black-Scholes put through put-call parity `P = C − S + K·e^{−rτ}`.
pub fn bs_put(spot: f64, strike: f64, sigma: f64, rate: f64, tau: f64) -> Result<AnalyticResult> {
    let call = bs_call(spot, strike, sigma, rate, tau)?;
    let disc = (-rate * tau).exp();
    Ok(AnalyticResult {
        price: call.price - spot + strike * disc,
        delta: call.delta - 1.0,
        gamma: call.gamma,
        // τ = T − t, so d(K·e^{−rτ})/dt = +r·K·e^{−rτ}
        theta: call.theta + rate * strike * disc,
        vega: call.vega,
        rho: call.rho - tau * strike * disc,
    })
}

/// Largest admissible exponent for the powered payoff `max(x − K, 0)^p`.
pub const MAX_POWER: u32 = 32;

fn binomial_coefficient(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Closed-form price of the powered call `max(x − K, 0)^p`:
/// expand the payoff binomially and price each moment term
/// `E[S_T^j · 1(S_T > K)]` in closed form.
pub fn powered_price(
    spot: f64,
    strike: f64,
    sigma: f64,
    rate: f64,
    tau: f64,
    power: u32,
) -> Result<f64> {
    validate_market(spot, strike, sigma, rate, tau)?;
    if power == 0 || power > MAX_POWER {
        return Err(Error::Oracle(format!(
            "power must lie in 1..={MAX_POWER}, got {power}"
        )));
    }
    let sqrt_tau = tau.sqrt();
    let sig_sqrt = sigma * sqrt_tau;
    let d2 = ((spot / strike).ln() + (rate - 0.5 * sigma * sigma) * tau) / sig_sqrt;

    let mut sum = 0.0;
    for j in 0..=power {
        let jf = j as f64;
        // E[S_T^j · 1(S_T > K)] = S^j · e^{j(r − σ²/2)τ + j²σ²τ/2} · N(d2 + jσ√τ)
        let growth =
            (jf * (rate - 0.5 * sigma * sigma) * tau + 0.5 * jf * jf * sigma * sigma * tau).exp();
        let moment = spot.powi(j as i32) * growth * normal_cdf(d2 + jf * sig_sqrt);
        let sign = if (power - j) % 2 == 0 { 1.0 } else { -1.0 };
        sum += binomial_coefficient(power, j) * sign * strike.powi((power - j) as i32) * moment;
    }
    Ok((-rate * tau).exp() * sum)
}

/// Powered-call sensitivities by central differences of the closed-form
/// price. Relative bump 1e−5; second difference for Gamma uses 1e−4 to
/// keep roundoff below truncation.
pub fn powered_greeks(
    spot: f64,
    strike: f64,
    sigma: f64,
    rate: f64,
    tau: f64,
    power: u32,
) -> Result<AnalyticResult> {
    let price = powered_price(spot, strike, sigma, rate, tau, power)?;
    let p = |s: f64, sig: f64, r: f64, t: f64| powered_price(s, strike, sig, r, t, power);

    let hs = 1e-5 * spot;
    let delta = (p(spot + hs, sigma, rate, tau)? - p(spot - hs, sigma, rate, tau)?) / (2.0 * hs);
    let hg = 1e-4 * spot;
    let gamma = (p(spot + hg, sigma, rate, tau)? - 2.0 * price
        + p(spot - hg, sigma, rate, tau)?)
        / (hg * hg);
    let hv = 1e-5 * sigma;
    let vega = (p(spot, sigma + hv, rate, tau)? - p(spot, sigma - hv, rate, tau)?) / (2.0 * hv);
    let hr = 1e-5 * rate.abs().max(1e-4);
    let rho = (p(spot, sigma, rate + hr, tau)? - p(spot, sigma, rate - hr, tau)?) / (2.0 * hr);
    // ∂V/∂t = −∂V/∂τ
    let ht = 1e-5 * tau;
    let theta = -(p(spot, sigma, rate, tau + ht)? - p(spot, sigma, rate, tau - ht)?) / (2.0 * ht);

    Ok(AnalyticResult {
        price,
        delta,
        gamma,
        theta,
        vega,
        rho,
    })
}

/// Cash-or-nothing call paying `C · 1(S_T > K)`: closed form throughout,
/// including the exact calendar Theta.
pub fn cash_or_nothing(
    spot: f64,
    strike: f64,
    cash: f64,
    sigma: f64,
    rate: f64,
    tau: f64,
) -> Result<AnalyticResult> {
    validate_market(spot, strike, sigma, rate, tau)?;
    if !(cash > 0.0 && cash.is_finite()) {
        return Err(Error::Oracle(format!(
            "cash amount must be positive, got {cash}"
        )));
    }
    let sqrt_tau = tau.sqrt();
    let sig_sqrt = sigma * sqrt_tau;
    let d2 = ((spot / strike).ln() + (rate - 0.5 * sigma * sigma) * tau) / sig_sqrt;
    let d1 = d2 + sig_sqrt;
    let disc = (-rate * tau).exp();
    let nd2 = normal_cdf(d2);
    let pdf2 = normal_pdf(d2);

    // ∂d2/∂τ feeds the exact Theta: d2 = ln(S/K)/(σ√τ) + (r − σ²/2)√τ/σ
    let dd2_dtau = -(spot / strike).ln() / (2.0 * sigma * tau * sqrt_tau)
        + (rate - 0.5 * sigma * sigma) / (2.0 * sigma * sqrt_tau);

    Ok(AnalyticResult {
        price: cash * disc * nd2,
        delta: cash * disc * pdf2 / (spot * sig_sqrt),
        gamma: -cash * disc * pdf2 * d1 / (spot * spot * sigma * sigma * tau),
        theta: cash * disc * (rate * nd2 - pdf2 * dd2_dtau),
        vega: -cash * disc * pdf2 * d1 / sigma,
        rho: cash * disc * (-tau * nd2 + pdf2 * sqrt_tau / sigma),
    })
}

/// Bermudan put on a Cox-Ross-Rubinstein lattice.
///
/// Exercise dates are snapped to the nearest lattice step; the last date
/// must coincide with expiry. Convergence is `O(1/steps)`, so this is a
/// cross-check oracle, not a production pricer.
pub fn binomial_bermudan_put(
    spot: f64,
    strike: f64,
    sigma: f64,
    rate: f64,
    maturity: f64,
    exercise_dates: &[f64],
    steps: usize,
) -> Result<f64> {
    validate_market(spot, strike, sigma, rate, maturity)?;
    if steps == 0 {
        return Err(Error::Oracle("lattice needs at least one step".into()));
    }
    if exercise_dates.is_empty() {
        return Err(Error::Oracle("no exercise dates given".into()));
    }
    let snap = 1e-9 * maturity;
    let mut sorted = exercise_dates.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted[0] <= 0.0 || sorted[sorted.len() - 1] > maturity + snap {
        return Err(Error::Oracle(format!(
            "exercise dates must lie in (0, {maturity}]"
        )));
    }
    if (sorted[sorted.len() - 1] - maturity).abs() > snap {
        return Err(Error::Oracle(
            "the last exercise date must be the expiry".into(),
        ));
    }

    let dt = maturity / steps as f64;
    let up = (sigma * dt.sqrt()).exp();
    let down = 1.0 / up;
    let growth = (rate * dt).exp();
    let prob_up = (growth - down) / (up - down);
    if !(prob_up > 0.0 && prob_up < 1.0) {
        return Err(Error::Oracle(format!(
            "risk-neutral up-probability {prob_up} outside (0, 1); \
             the lattice needs sigma > |r|·sqrt(dt)"
        )));
    }
    let disc = 1.0 / growth;

    let mut exercise_step = vec![false; steps + 1];
    for &t in &sorted {
        let idx = (t / dt).round() as usize;
        exercise_step[idx.clamp(1, steps)] = true;
    }

    // terminal payoff, then roll back with a max-reset at exercise steps
    let mut values: Vec<f64> = (0..=steps)
        .map(|j| {
            let s = spot * up.powi(2 * j as i32 - steps as i32);
            (strike - s).max(0.0)
        })
        .collect();
    for i in (0..steps).rev() {
        for j in 0..=i {
            values[j] = disc * (prob_up * values[j + 1] + (1.0 - prob_up) * values[j]);
        }
        values.truncate(i + 1);
        if exercise_step[i] {
            let mut s = spot * down.powi(i as i32);
            let up2 = up * up;
            for v in values.iter_mut() {
                *v = v.max(strike - s);
                s *= up2;
            }
        }
    }
    Ok(values[0])
}
