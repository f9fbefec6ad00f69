//! Interval solution and the Bermudan backward recursion.
//!
//! All internal time is τ = T − t. Each exercise interval is solved exactly:
//!
//! ```text
//! U(τ_{e−1} + Δτ) = e^{ζΔτ}·U(τ_{e−1}) + ζ^{−1}(e^{ζΔτ} − I)·F
//! ```
//!
//! with the boundary values (hence `F`) frozen per interval. Early exercise
//! enters between intervals as the nodewise reset `u ← max(φ, u)`. There is
//! no time discretization anywhere; a report time inside an interval is
//! reached with the exponential of the partial width.

use crate::discretization::{build_boundary_vector, build_system, SystemMatrices};
use crate::grid::Mesh;
use crate::linalg::{expm, solve_banded, DenseMatrix};
use crate::{Error, Result};

/// Relative tolerance (against maturity) for snapping report times onto
/// exercise kinks and for recognizing equal interval widths. Equally spaced
/// dates computed in floating point differ by ulps; snapping lets one
/// exponential serve all equal-width intervals.
pub(crate) const TIME_SNAP_RTOL: f64 = 1e-12;

/// Terminal payoff φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Payoff {
    /// `max(x − K, 0)`
    Call { strike: f64 },
    /// `max(K − x, 0)`
    Put { strike: f64 },
    /// `max(x − K, 0)^p`
    Powered { strike: f64, power: u32 },
    /// `C · 1(x > K)`
    CashOrNothing { strike: f64, amount: f64 },
}

impl Payoff {
    /// Payoff value at asset level `x`.
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Payoff::Call { strike } => (x - strike).max(0.0),
            Payoff::Put { strike } => (strike - x).max(0.0),
            Payoff::Powered { strike, power } => (x - strike).max(0.0).powi(power as i32),
            Payoff::CashOrNothing { strike, amount } => {
                if x > strike {
                    amount
                } else {
                    0.0
                }
            }
        }
    }

    pub fn strike(&self) -> f64 {
        match *self {
            Payoff::Call { strike }
            | Payoff::Put { strike }
            | Payoff::Powered { strike, .. }
            | Payoff::CashOrNothing { strike, .. } => strike,
        }
    }

    fn validate(&self) -> Result<()> {
        let strike = self.strike();
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(Error::Solver(format!(
                "strike must be positive, got {strike}"
            )));
        }
        match *self {
            Payoff::Powered { power, .. } if power == 0 || power > crate::oracles::MAX_POWER => {
                Err(Error::Solver(format!(
                    "power must lie in 1..={}, got {power}",
                    crate::oracles::MAX_POWER
                )))
            }
            Payoff::CashOrNothing { amount, .. } if !(amount > 0.0 && amount.is_finite()) => Err(
                Error::Solver(format!("cash amount must be positive, got {amount}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Market environment. `spot` is carried for reporting; the PDE itself only
/// needs `sigma` and `rate`.
#[derive(Debug, Clone, Copy)]
pub struct MarketParams {
    pub sigma: f64,
    pub rate: f64,
    pub spot: f64,
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Solver(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.spot > 0.0 && self.spot.is_finite()) {
            return Err(Error::Solver(format!(
                "spot must be positive, got {}",
                self.spot
            )));
        }
        if !self.rate.is_finite() {
            return Err(Error::Solver(format!(
                "rate must be finite, got {}",
                self.rate
            )));
        }
        Ok(())
    }
}

/// Contract: payoff, maturity, and the exercise dates (in calendar time,
/// strictly increasing, the last one equal to maturity).
#[derive(Debug, Clone)]
pub struct OptionSpec {
    pub payoff: Payoff,
    pub maturity: f64,
    pub exercise_dates: Vec<f64>,
}

impl OptionSpec {
    /// European contract: exercisable at maturity only.
    pub fn european(payoff: Payoff, maturity: f64) -> Result<Self> {
        Self::with_dates(payoff, maturity, vec![maturity])
    }

    /// Bermudan contract with `count` equally spaced exercise dates
    /// `T·e/count`, `e = 1..=count`.
    pub fn bermudan(payoff: Payoff, maturity: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::Solver("need at least one exercise date".into()));
        }
        let dates = (1..=count)
            .map(|e| maturity * (e as f64 / count as f64))
            .collect();
        Self::with_dates(payoff, maturity, dates)
    }

    /// Explicit exercise dates.
    pub fn with_dates(payoff: Payoff, maturity: f64, mut dates: Vec<f64>) -> Result<Self> {
        payoff.validate()?;
        if !(maturity > 0.0 && maturity.is_finite()) {
            return Err(Error::Solver(format!(
                "maturity must be positive, got {maturity}"
            )));
        }
        if dates.is_empty() {
            return Err(Error::Solver("need at least one exercise date".into()));
        }
        let snap = TIME_SNAP_RTOL * maturity;
        if !dates.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Solver(
                "exercise dates must be strictly increasing".into(),
            ));
        }
        if dates[0] <= 0.0 {
            return Err(Error::Solver(
                "exercise dates must be strictly positive".into(),
            ));
        }
        let last = *dates.last().unwrap();
        if (last - maturity).abs() > snap {
            return Err(Error::Solver(format!(
                "the last exercise date ({last}) must equal maturity ({maturity})"
            )));
        }
        *dates.last_mut().unwrap() = maturity;
        Ok(Self {
            payoff,
            maturity,
            exercise_dates: dates,
        })
    }

    /// Exercise kinks on the τ axis: `0 = τ_0 < τ_1 < … < τ_E = T` with
    /// `τ_e = T − t_{E−e}`.
    pub(crate) fn tau_kinks(&self) -> Vec<f64> {
        let mut kinks: Vec<f64> = std::iter::once(0.0)
            .chain(self.exercise_dates.iter().rev().map(|t| self.maturity - t))
            .collect();
        kinks.push(self.maturity);
        // t_E = T maps to τ = 0 which is already present
        kinks.remove(1);
        kinks
    }
}

/// Solved values at the requested report times, on the mesh they were
/// computed on. Boundary values are the per-interval frozen ones.
#[derive(Debug, Clone)]
pub struct ValueSurface {
    mesh: Mesh,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    boundaries: Vec<(f64, f64)>,
}

impl ValueSurface {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Interior values at the i-th report time.
    pub fn values(&self, time_index: usize) -> &[f64] {
        &self.values[time_index]
    }

    /// Frozen `(u(0), u(L))` of the interval containing the i-th time.
    pub fn boundary(&self, time_index: usize) -> (f64, f64) {
        self.boundaries[time_index]
    }
}

/// φ at every interior node, plus `φ(0)` and `φ(L)` for boundary freezing.
pub fn payoff_vector(spec: &OptionSpec, mesh: &Mesh) -> (Vec<f64>, f64, f64) {
    let interior = mesh
        .interior_nodes()
        .iter()
        .map(|&x| spec.payoff.value(x))
        .collect();
    let left = spec.payoff.value(0.0);
    let right = spec.payoff.value(mesh.truncation());
    (interior, left, right)
}

/// One exact step: `E·u0 + y` with `ζ·y = (E − I)·F`.
pub(crate) fn propagate(
    u0: &[f64],
    f_dense: &[f64],
    e: &DenseMatrix,
    sys: &SystemMatrices,
) -> Result<Vec<f64>> {
    let ef = e.apply(f_dense);
    let rhs: Vec<f64> = ef.iter().zip(f_dense).map(|(a, b)| a - b).collect();
    let y = solve_banded(&sys.generator, &rhs)?;
    let mut out = e.apply(u0);
    for (o, yi) in out.iter_mut().zip(&y) {
        *o += yi;
    }
    Ok(out)
}

/// Solves one interval of width `dtau` exactly and returns the new value
/// vector together with the propagator `e^{ζ·dtau}` for reuse.
pub fn solve_interval(
    u_init: &[f64],
    u_left: f64,
    u_right: f64,
    dtau: f64,
    sys: &SystemMatrices,
) -> Result<(Vec<f64>, DenseMatrix)> {
    if u_init.len() != sys.generator.dim() {
        return Err(Error::Solver(format!(
            "initial vector length {} does not match system dimension {}",
            u_init.len(),
            sys.generator.dim()
        )));
    }
    let e = expm(&sys.generator, dtau)?;
    let f = build_boundary_vector(sys, u_left, u_right).dense();
    let u = propagate(u_init, &f, &e, sys)?;
    Ok((u, e))
}

/// Exponential cache keyed on interval width (snapped). Equal-width
/// exercise intervals share one propagator.
struct ExpmCache<'a> {
    sys: &'a SystemMatrices,
    snap: f64,
    widths: Vec<f64>,
    mats: Vec<DenseMatrix>,
}

impl<'a> ExpmCache<'a> {
    fn new(sys: &'a SystemMatrices, snap: f64) -> Self {
        Self {
            sys,
            snap,
            widths: Vec::new(),
            mats: Vec::new(),
        }
    }

    fn get(&mut self, dtau: f64) -> Result<&DenseMatrix> {
        let hit = self.widths.iter().position(|&w| (w - dtau).abs() <= self.snap);
        let idx = match hit {
            Some(i) => i,
            None => {
                self.mats.push(expm(&self.sys.generator, dtau)?);
                self.widths.push(dtau);
                self.mats.len() - 1
            }
        };
        Ok(&self.mats[idx])
    }
}

/// Initial condition and frozen boundaries of one exercise interval,
/// together with the offset of a report time inside it.
pub(crate) struct IntervalState {
    pub u0: Vec<f64>,
    pub u_left: f64,
    pub u_right: f64,
    pub tau_rel: f64,
}

/// Post-reset initial conditions and frozen boundaries of every interval.
struct Decomposition {
    kinks: Vec<f64>,
    starts: Vec<Vec<f64>>,
    boundaries: Vec<(f64, f64)>,
}

/// Marches the backward recursion across all intervals. The terminal
/// condition is `max(φ, 0)`; at each interior kink the value resets to
/// `max(φ, u)` nodewise and the frozen boundaries chain through the same
/// max (for far-field-dominant payoffs this re-freezes to φ, otherwise it
/// keeps the previous frozen value; the two readings coincide at large L).
fn decompose(
    spec: &OptionSpec,
    mesh: &Mesh,
    sys: &SystemMatrices,
    cache: &mut ExpmCache,
) -> Result<Decomposition> {
    let kinks = spec.tau_kinks();
    let intervals = kinks.len() - 1;
    let (phi, phi_left, phi_right) = payoff_vector(spec, mesh);

    let mut u: Vec<f64> = phi.iter().map(|&v| v.max(0.0)).collect();
    let mut u_left = phi_left.max(0.0);
    let mut u_right = phi_right.max(0.0);

    let mut starts = Vec::with_capacity(intervals);
    let mut boundaries = Vec::with_capacity(intervals);
    for i in 1..=intervals {
        if i > 1 {
            for (v, &p) in u.iter_mut().zip(&phi) {
                *v = v.max(p);
            }
            u_left = u_left.max(phi_left);
            u_right = u_right.max(phi_right);
        }
        starts.push(u.clone());
        boundaries.push((u_left, u_right));

        let width = kinks[i] - kinks[i - 1];
        let f = build_boundary_vector(sys, u_left, u_right).dense();
        let e = cache.get(width)?;
        u = propagate(&u, &f, e, sys)?;
    }

    Ok(Decomposition {
        kinks,
        starts,
        boundaries,
    })
}

/// Locates the interval a report time falls in. A time within snapping
/// distance of a kink reports the post-reset value at that kink.
fn locate(kinks: &[f64], tau: f64, snap: f64) -> (usize, f64) {
    let intervals = kinks.len() - 1;
    let mut idx = intervals;
    for i in 1..=intervals {
        if tau < kinks[i] - snap {
            idx = i;
            break;
        }
    }
    let width = kinks[idx] - kinks[idx - 1];
    let mut tau_rel = (tau - kinks[idx - 1]).max(0.0);
    if tau_rel <= snap {
        tau_rel = 0.0;
    } else if (tau_rel - width).abs() <= snap {
        tau_rel = width;
    }
    (idx, tau_rel)
}

/// Prices the contract and reports the value vector at each requested τ.
pub fn solve_bermudan(
    spec: &OptionSpec,
    params: &MarketParams,
    mesh: &Mesh,
    report_times: &[f64],
) -> Result<ValueSurface> {
    params.validate()?;
    let maturity = spec.maturity;
    let snap = TIME_SNAP_RTOL * maturity;
    for &t in report_times {
        if !(t >= -snap && t <= maturity + snap) {
            return Err(Error::Solver(format!(
                "report time {t} outside [0, {maturity}]"
            )));
        }
    }

    let sys = build_system(mesh, params.sigma, params.rate)?;
    let mut cache = ExpmCache::new(&sys, snap);
    let decomp = decompose(spec, mesh, &sys, &mut cache)?;

    let mut values = Vec::with_capacity(report_times.len());
    let mut boundaries = Vec::with_capacity(report_times.len());
    for &t in report_times {
        let (idx, tau_rel) = locate(&decomp.kinks, t, snap);
        let u0 = &decomp.starts[idx - 1];
        let (u_left, u_right) = decomp.boundaries[idx - 1];
        let u = if tau_rel == 0.0 {
            u0.clone()
        } else {
            let f = build_boundary_vector(&sys, u_left, u_right).dense();
            let e = cache.get(tau_rel)?;
            propagate(u0, &f, e, &sys)?
        };
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!(
                "non-finite value in the solution at τ = {t}"
            )));
        }
        values.push(u);
        boundaries.push((u_left, u_right));
    }

    Ok(ValueSurface {
        mesh: mesh.clone(),
        times: report_times.to_vec(),
        values,
        boundaries,
    })
}

/// Initial condition, frozen boundaries, and offset of the interval
/// containing `tau`. The sensitivities are formed within this interval.
pub(crate) fn interval_state(
    spec: &OptionSpec,
    mesh: &Mesh,
    sys: &SystemMatrices,
    tau: f64,
) -> Result<IntervalState> {
    let snap = TIME_SNAP_RTOL * spec.maturity;
    if !(tau >= -snap && tau <= spec.maturity + snap) {
        return Err(Error::Solver(format!(
            "report time {tau} outside [0, {}]",
            spec.maturity
        )));
    }
    let mut cache = ExpmCache::new(sys, snap);
    let decomp = decompose(spec, mesh, sys, &mut cache)?;
    let (idx, tau_rel) = locate(&decomp.kinks, tau, snap);
    let (u_left, u_right) = decomp.boundaries[idx - 1];
    Ok(IntervalState {
        u0: decomp.starts[idx - 1].clone(),
        u_left,
        u_right,
        tau_rel,
    })
}

/// Value at spot `s` and report time `tau`: exact at nodes, piecewise
/// linear in between. `tau` must be one of the surface's computed times.
pub fn value_at(surface: &ValueSurface, s: f64, tau: f64) -> Result<f64> {
    let snap_t = surface
        .times
        .iter()
        .fold(f64::INFINITY, |m, &t| m.min(t.abs()))
        .max(1.0)
        * TIME_SNAP_RTOL;
    let time_index = surface
        .times
        .iter()
        .position(|&t| (t - tau).abs() <= snap_t.max(TIME_SNAP_RTOL * tau.abs()))
        .ok_or_else(|| Error::Solver(format!("τ = {tau} was not among the computed times")))?;

    let mesh = &surface.mesh;
    let nodes = mesh.nodes();
    let l = mesh.truncation();
    if !(0.0..=l).contains(&s) {
        return Err(Error::Solver(format!("spot {s} outside the domain [0, {l}]")));
    }

    let (u_left, u_right) = surface.boundaries[time_index];
    let interior = &surface.values[time_index];
    let value_of = |node_index: usize| -> f64 {
        if node_index == 0 {
            u_left
        } else if node_index == nodes.len() - 1 {
            u_right
        } else {
            interior[node_index - 1]
        }
    };

    // exact node hit first, then the bracketing segment
    let pos = nodes.partition_point(|&x| x < s);
    for idx in [pos.saturating_sub(1), pos.min(nodes.len() - 1)] {
        if (nodes[idx] - s).abs() <= 1e-12 * nodes[idx].abs().max(s.abs()) {
            return Ok(value_of(idx));
        }
    }
    let (lo, hi) = (pos - 1, pos);
    let weight = (s - nodes[lo]) / (nodes[hi] - nodes[lo]);
    Ok(value_of(lo) * (1.0 - weight) + value_of(hi) * weight)
}
