//! End-to-end acceptance checks, one test per criterion. Every reference
//! value and tolerance is pinned here; each test prints a verdict line so
//! a `--nocapture` run reads as a checklist.
//!
//! Error bounds follow the convention of the frozen reference tables:
//! "log error" is the natural log of the absolute error, and each bound
//! allows 2x the error implied by the reference log-error column.

use mol_pricer::discretization::build_system;
use mol_pricer::grid::{build_mesh, GridSpec};
use mol_pricer::linalg::expm;
use mol_pricer::oracles;
use mol_pricer::{
    greeks_surface, payoff_vector, solve_bermudan, value_at, MarketParams, OptionSpec, Payoff,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::time::Instant;

/// European call reference point: S0 = K = 100, sigma = 0.3, r = 0.03,
/// T = 1, mesh parameter c = 110.
fn call_setup() -> (OptionSpec, MarketParams) {
    (
        OptionSpec::european(Payoff::Call { strike: 100.0 }, 1.0).unwrap(),
        MarketParams {
            sigma: 0.3,
            rate: 0.03,
            spot: 100.0,
        },
    )
}

/// Bermudan put reference point: S0 = 40, K = 44, sigma = 0.3, r = 0.06,
/// T = 1, ten equally spaced exercise dates, mesh parameter c = 80.
fn bermudan_setup() -> (OptionSpec, MarketParams) {
    (
        OptionSpec::bermudan(Payoff::Put { strike: 44.0 }, 1.0, 10).unwrap(),
        MarketParams {
            sigma: 0.3,
            rate: 0.06,
            spot: 40.0,
        },
    )
}

/// Reference value of the Bermudan put above (independent Fourier-method
/// computation, frozen as a constant).
const BERMUDAN_REF: f64 = 6.04590214;

fn price_at_spot(spec: &OptionSpec, params: &MarketParams, n: usize, c: f64) -> f64 {
    let mesh = build_mesh(&GridSpec::new(n, c).with_eval_point(params.spot)).unwrap();
    let surface = solve_bermudan(spec, params, &mesh, &[spec.maturity]).unwrap();
    value_at(&surface, params.spot, spec.maturity).unwrap()
}

fn verdict(label: &str, pass: bool, detail: &str) -> bool {
    println!(
        "criterion {label}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    pass
}

#[test]
fn criterion_1_call_price_convergence() {
    let (spec, params) = call_setup();
    let exact = oracles::bs_call(100.0, 100.0, 0.3, 0.03, 1.0).unwrap().price;
    let targets = [(100usize, -3.7), (200, -5.3), (400, -6.7), (800, -8.1)];
    let mut ok = true;
    for (n, target) in targets {
        let start = Instant::now();
        let price = price_at_spot(&spec, &params, n, 110.0);
        let secs = start.elapsed().as_secs_f64();
        let log_err = (price - exact).abs().ln();
        let pass = (log_err - target).abs() <= 0.5 && secs <= 30.0;
        ok &= verdict(
            "1",
            pass,
            &format!("call N={n}: log error {log_err:.2} (target {target} ± 0.5), {secs:.1}s (≤ 30s)"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_2_call_greeks_at_n800() {
    let (spec, params) = call_setup();
    let mesh = build_mesh(&GridSpec::new(800, 110.0).with_eval_point(100.0)).unwrap();
    let surface = greeks_surface(&spec, &params, &mesh, 1.0).unwrap();
    let g = surface.at_eval_point(100.0).unwrap();
    let exact = oracles::bs_call(100.0, 100.0, 0.3, 0.03, 1.0).unwrap();
    let checks: [(&str, f64, f64, f64); 5] = [
        ("delta", g.delta, exact.delta, -5.4),
        ("gamma", g.gamma, exact.gamma, -10.4),
        ("theta", g.theta, exact.theta, -8.8),
        ("vega", g.vega, exact.vega, -7.0),
        ("rho", g.rho, exact.rho, -7.5),
    ];
    let mut ok = true;
    for (name, got, want, log_bound) in checks {
        let err = (got - want).abs();
        let bound = 2.0 * log_bound.exp();
        ok &= verdict(
            "2",
            err <= bound,
            &format!("call {name} N=800: |error| {err:.2e} (≤ {bound:.2e})"),
        );
    }
    assert!(ok);
}

#[test]
fn criterion_3_powered_option() {
    let spec = OptionSpec::european(
        Payoff::Powered {
            strike: 100.0,
            power: 2,
        },
        1.0,
    )
    .unwrap();
    let params = MarketParams {
        sigma: 0.3,
        rate: 0.03,
        spot: 100.0,
    };

    let price = price_at_spot(&spec, &params, 800, 123.0);
    let price_err = (price - 676.758).abs();
    let price_bound = 2.0 * (-4.6f64).exp();
    let price_ok = verdict(
        "3",
        price_err <= price_bound,
        &format!("powered price N=800: |error| {price_err:.2e} (≤ {price_bound:.2e})"),
    );

    let mesh = build_mesh(&GridSpec::new(400, 123.0).with_eval_point(100.0)).unwrap();
    let surface = greeks_surface(&spec, &params, &mesh, 1.0).unwrap();
    let vega = surface.at_eval_point(100.0).unwrap().vega;
    let vega_err = (vega - 4795.291).abs();
    let vega_bound = 2.0 * (-6.3f64).exp();
    // This bound sits well below the scheme's real discretization error at
    // N = 400 (measured ~3e-2, tracking the price error as the exact
    // sigma-derivative of the solution must; Richardson extrapolation of
    // the vega sequence lands on the 4795.291 reference). The reference
    // table's N = 400 row is not reachable by a derivative consistent with
    // its own price column, so this check documents the gap rather than
    // widening the bound.
    let vega_ok = verdict(
        "3",
        vega_err <= vega_bound,
        &format!("powered vega N=400: |error| {vega_err:.2e} (≤ {vega_bound:.2e})"),
    );
    assert!(price_ok && vega_ok);
}

#[test]
fn criterion_4_cash_or_nothing_price() {
    let spec = OptionSpec::european(
        Payoff::CashOrNothing {
            strike: 100.0,
            amount: 100.0,
        },
        1.0,
    )
    .unwrap();
    let params = MarketParams {
        sigma: 0.3,
        rate: 0.03,
        spot: 100.0,
    };
    let price = price_at_spot(&spec, &params, 1600, 89.0);
    let err = (price - 46.587).abs();
    let bound = 2.0 * (-1.9f64).exp();
    let ok = verdict(
        "4",
        err <= bound,
        &format!("cash-or-nothing price N=1600: |error| {err:.2e} (≤ {bound:.2e})"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_bermudan_put() {
    let (spec, params) = bermudan_setup();
    let targets = [(250usize, -7.6), (500, -8.1), (1000, -9.8)];
    let mut ok = true;
    let mut n1000_secs = 0.0;
    for (n, log_bound) in targets {
        let start = Instant::now();
        let price = price_at_spot(&spec, &params, n, 80.0);
        let secs = start.elapsed().as_secs_f64();
        if n == 1000 {
            n1000_secs = secs;
        }
        let err = (price - BERMUDAN_REF).abs();
        let bound = 2.0 * f64::exp(log_bound);
        ok &= verdict(
            "5",
            err <= bound,
            &format!("bermudan N={n}: |error| {err:.2e} (≤ {bound:.2e}), {secs:.2}s"),
        );
    }

    let dates: Vec<f64> = (1..=10).map(|e| e as f64 / 10.0).collect();
    let lattice = oracles::binomial_bermudan_put(40.0, 44.0, 0.3, 0.06, 1.0, &dates, 20000).unwrap();
    let lattice_err = (lattice - BERMUDAN_REF).abs();
    ok &= verdict(
        "5",
        lattice_err <= 5e-3,
        &format!("binomial oracle at 20000 steps: |error| {lattice_err:.2e} (≤ 5e-3)"),
    );

    // hardware-dependent trend check: no more than an order of magnitude
    // slower than the 10.83s reference measurement
    ok &= verdict(
        "5",
        n1000_secs <= 108.3,
        &format!("bermudan N=1000 runtime {n1000_secs:.2}s (≤ 108.3s)"),
    );
    assert!(ok);
}

#[test]
fn criterion_6_property_suite() {
    let mut ok = true;

    // matrix exponential vs an independent 30-term Taylor sum, columnwise
    let mut rng = StdRng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let n = 6;
        let mut band = |len: usize| {
            (0..len)
                .map(|_| rng.gen_range(-0.5..0.5))
                .collect::<Vec<f64>>()
        };
        let m = mol_pricer::TridiagonalMatrix::new(band(n - 1), band(n), band(n - 1)).unwrap();
        let tau = 0.7;
        let e = expm(&m, tau).unwrap();
        for j in 0..n {
            let mut v = vec![0.0; n];
            v[j] = 1.0;
            let mut sum = v.clone();
            for k in 1..=30 {
                v = m.apply(&v);
                for x in &mut v {
                    *x *= tau / k as f64;
                }
                for (s, &x) in sum.iter_mut().zip(&v) {
                    *s += x;
                }
            }
            for i in 0..n {
                worst = worst.max((e.get(i, j) - sum[i]).abs());
            }
        }
    }
    ok &= verdict("6", worst <= 1e-12, &format!("expm vs Taylor: {worst:.2e} (≤ 1e-12)"));

    // semigroup identity e^{(s+t)ζ} = e^{sζ}e^{tζ} on a real generator
    let mesh = build_mesh(&GridSpec::new(60, 110.0).with_eval_point(100.0)).unwrap();
    let sys = build_system(&mesh, 0.3, 0.03).unwrap();
    let whole = expm(&sys.generator, 0.9).unwrap();
    let split = expm(&sys.generator, 0.4)
        .unwrap()
        .matmul(&expm(&sys.generator, 0.5).unwrap());
    let mut gap = 0.0f64;
    for i in 0..whole.dim() {
        for j in 0..whole.dim() {
            gap = gap.max((whole.get(i, j) - split.get(i, j)).abs());
        }
    }
    ok &= verdict("6", gap <= 1e-9, &format!("semigroup identity: {gap:.2e} (≤ 1e-9)"));

    // second-difference stencil exact on quadratics (interior-complete rows)
    let quad: Vec<f64> = mesh.interior_nodes().iter().map(|&x| x * x).collect();
    let curv = sys.second_diff.apply(&quad);
    let m = curv.len();
    let stencil_gap = curv[1..m - 1]
        .iter()
        .map(|v| (v - 2.0).abs())
        .fold(0.0f64, f64::max);
    ok &= verdict(
        "6",
        stencil_gap <= 1e-8,
        &format!("quadratic stencil exactness: {stencil_gap:.2e} (≤ 1e-8)"),
    );

    // dynamic-programming reset leaves no node below the payoff
    let (berm_spec, berm_params) = bermudan_setup();
    let berm_mesh = build_mesh(&GridSpec::new(120, 80.0).with_eval_point(40.0)).unwrap();
    let kink = 0.5; // maturity minus the fifth exercise date
    let surface = solve_bermudan(&berm_spec, &berm_params, &berm_mesh, &[kink, 1.0]).unwrap();
    let (phi, ..) = payoff_vector(&berm_spec, &berm_mesh);
    let reset_ok = surface.values(0).iter().zip(&phi).all(|(&u, &p)| u >= p);
    ok &= verdict("6", reset_ok, "reset keeps u ≥ payoff at an exercise time: exact");

    // early exercise never destroys value relative to the European put
    let euro_spec = OptionSpec::european(Payoff::Put { strike: 44.0 }, 1.0).unwrap();
    let euro = solve_bermudan(&euro_spec, &berm_params, &berm_mesh, &[1.0]).unwrap();
    let worst_gap = surface
        .values(1)
        .iter()
        .zip(euro.values(0))
        .map(|(b, e)| e - b)
        .fold(f64::MIN, f64::max);
    ok &= verdict(
        "6",
        worst_gap <= 1e-10,
        &format!("bermudan ≥ european put nodewise: worst gap {worst_gap:.2e} (≤ 1e-10)"),
    );

    // theta against a central difference of the solution in maturity
    let (call_spec, call_params) = call_setup();
    let call_mesh = build_mesh(&GridSpec::new(200, 110.0).with_eval_point(100.0)).unwrap();
    let g = greeks_surface(&call_spec, &call_params, &call_mesh, 1.0)
        .unwrap()
        .at_eval_point(100.0)
        .unwrap();
    let eps = 1e-5;
    let solve_tau = |tau: f64| -> f64 {
        let spec = OptionSpec::european(Payoff::Call { strike: 100.0 }, tau).unwrap();
        let surface = solve_bermudan(&spec, &call_params, &call_mesh, &[tau]).unwrap();
        value_at(&surface, 100.0, tau).unwrap()
    };
    let theta_bump = -(solve_tau(1.0 + eps) - solve_tau(1.0 - eps)) / (2.0 * eps);
    let theta_gap = (g.theta - theta_bump).abs() / theta_bump.abs();
    ok &= verdict(
        "6",
        theta_gap <= 1e-4,
        &format!("theta vs maturity bump: {theta_gap:.2e} relative (≤ 1e-4)"),
    );

    // vega and rho against bump-and-revalue of the full solve
    let solve_with = |sigma: f64, rate: f64| -> f64 {
        let params = MarketParams {
            sigma,
            rate,
            spot: 100.0,
        };
        let surface = solve_bermudan(&call_spec, &params, &call_mesh, &[1.0]).unwrap();
        value_at(&surface, 100.0, 1.0).unwrap()
    };
    let h = 1e-4;
    let vega_bump = (solve_with(0.3 + h, 0.03) - solve_with(0.3 - h, 0.03)) / (2.0 * h);
    let vega_gap = (g.vega - vega_bump).abs() / vega_bump.abs();
    ok &= verdict(
        "6",
        vega_gap <= 1e-2,
        &format!("vega vs bump-and-revalue: {vega_gap:.2e} relative (≤ 1e-2)"),
    );
    let h = 1e-5;
    let rho_bump = (solve_with(0.3, 0.03 + h) - solve_with(0.3, 0.03 - h)) / (2.0 * h);
    let rho_gap = (g.rho - rho_bump).abs() / rho_bump.abs();
    ok &= verdict(
        "6",
        rho_gap <= 1e-2,
        &format!("rho vs bump-and-revalue: {rho_gap:.2e} relative (≤ 1e-2)"),
    );

    assert!(ok);
}

#[test]
fn criterion_7_bermudan_complexity() {
    let (spec, params) = bermudan_setup();
    // warm-up so first-touch allocation cost stays out of the smallest size
    let _ = price_at_spot(&spec, &params, 250, 80.0);
    let mut times = Vec::new();
    for n in [250usize, 500, 1000] {
        // best of two runs damps scheduler noise without hiding the trend
        let mut best = f64::INFINITY;
        for _ in 0..2 {
            let start = Instant::now();
            let _ = price_at_spot(&spec, &params, n, 80.0);
            best = best.min(start.elapsed().as_secs_f64());
        }
        times.push((n as f64, best));
    }
    let slope = (times[2].1 / times[0].1).ln() / (times[2].0 / times[0].0).ln();
    let ok = verdict(
        "7",
        slope <= 3.5,
        &format!(
            "wall-time slope over N=250..1000: {slope:.2} (≤ 3.5; {:.2}s → {:.2}s → {:.2}s)",
            times[0].1, times[1].1, times[2].1
        ),
    );
    assert!(ok);
}
