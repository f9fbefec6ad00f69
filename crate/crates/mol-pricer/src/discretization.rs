//! Space discretisation: tridiagonal operators on the interior nodes and
//! the boundary forcing vector.
//!
//! On the mesh `x_0 < x_1 < … < x_M < x_{M+1}` with spacings
//! `h_i = x_i − x_{i−1}`, the Black-Scholes generator splits as
//! `ζ = A + B + C`:
//!
//! - `A` carries `½σ²x²·∂²/∂x²` through the non-uniform central second
//!   difference (exact on quadratics),
//! - `B` carries `r·x·∂/∂x` through the wide central first difference
//!   `(u_{j+1} − u_{j−1})/(h_j + h_{j+1})` (exact on linears),
//! - `C = −r·I` discounts.
//!
//! Rows 1 and `M` couple to the boundary nodes; those couplings are not part
//! of the operators (which act on interior vectors only) and instead feed
//! the affine term `F` of `dU/dτ = ζU + F`.

use crate::grid::Mesh;
use crate::{Error, Result};

/// Compact tridiagonal operator on interior vectors.
///
/// `lower[i]` couples row `i+1` to column `i`, `upper[i]` couples row `i` to
/// column `i+1`; couplings into the boundary columns are dropped.
#[derive(Debug, Clone)]
pub struct TridiagonalMatrix {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalMatrix {
    /// Builds from the three bands. `lower` and `upper` must be one shorter
    /// than `diag`.
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Discretization("empty diagonal".into()));
        }
        if lower.len() + 1 != diag.len() || upper.len() + 1 != diag.len() {
            return Err(Error::Discretization(format!(
                "band lengths {}/{}/{} are not (n-1, n, n-1)",
                lower.len(),
                diag.len(),
                upper.len()
            )));
        }
        Ok(Self { lower, diag, upper })
    }

    /// `value · I`.
    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self {
            lower: vec![0.0; dim - 1],
            diag: vec![value; dim],
            upper: vec![0.0; dim - 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Matrix-vector product on an interior vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(x.len(), n, "operator dim {} vs vector {}", n, x.len());
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Bandwise sum. Dimensions must agree.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Discretization(format!(
                "dimension mismatch {} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        let zip_sum =
            |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();
        Ok(Self {
            lower: zip_sum(&self.lower, &other.lower),
            diag: zip_sum(&self.diag, &other.diag),
            upper: zip_sum(&self.upper, &other.upper),
        })
    }

    /// Bandwise scalar multiple.
    pub fn scale(&self, factor: f64) -> Self {
        let mul = |v: &[f64]| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        Self {
            lower: mul(&self.lower),
            diag: mul(&self.diag),
            upper: mul(&self.upper),
        }
    }
}

/// The assembled space operators for one `(σ, r)` parameter point.
///
/// `generator` drives the ODE system; `first_diff`/`second_diff` are the
/// reporting stencils that read Delta and Gamma off a value vector. The
/// dropped boundary couplings of rows 1 and `M` are kept as scalars so the
/// forcing vector (and its parameter derivatives) can be formed without
/// touching the mesh again.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub sigma: f64,
    pub rate: f64,
    /// `A`: `½σ²x²·∂²/∂x²` on the non-uniform stencil.
    pub diffusion: TridiagonalMatrix,
    /// `B`: `r·x·∂/∂x` on the wide central stencil.
    pub convection: TridiagonalMatrix,
    /// `C = −r·I`.
    pub discount: TridiagonalMatrix,
    /// `ζ = A + B + C`.
    pub generator: TridiagonalMatrix,
    /// `D`: wide central first difference, `±1/(h_j + h_{j+1})`.
    pub first_diff: TridiagonalMatrix,
    /// `D2`: non-uniform central second difference.
    pub second_diff: TridiagonalMatrix,
    /// `B/r` formed analytically (entries `±x_j/(h_j + h_{j+1})`), so the
    /// rate sensitivity never divides by `r`.
    pub convection_per_rate: TridiagonalMatrix,
    /// Diffusion coupling of row 1 into the left boundary column.
    pub alpha_left: f64,
    /// Diffusion coupling of row `M` into the right boundary column.
    pub alpha_right: f64,
    /// Convection coupling of row 1 into the left column, per unit rate.
    pub convection_unit_left: f64,
    /// Convection coupling of row `M` into the right column, per unit rate.
    pub convection_unit_right: f64,
}

/// Assembles all operators for the given volatility and short rate.
pub fn build_system(mesh: &Mesh, sigma: f64, rate: f64) -> Result<SystemMatrices> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Discretization(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    if !rate.is_finite() {
        return Err(Error::Discretization(format!("rate must be finite, got {rate}")));
    }
    let m = mesh.interior_count();
    let x = mesh.interior_nodes();
    let h = mesh.spacings();

    let mut a_lower = vec![0.0; m - 1];
    let mut a_diag = vec![0.0; m];
    let mut a_upper = vec![0.0; m - 1];
    let mut cpr_lower = vec![0.0; m - 1];
    let mut cpr_upper = vec![0.0; m - 1];
    let mut d_lower = vec![0.0; m - 1];
    let mut d_upper = vec![0.0; m - 1];
    let mut d2_lower = vec![0.0; m - 1];
    let mut d2_diag = vec![0.0; m];
    let mut d2_upper = vec![0.0; m - 1];

    let sig2 = sigma * sigma;
    for j in 0..m {
        // row j holds interior node x_{j+1}; its spacings are h[j], h[j+1]
        let (hl, hr) = (h[j], h[j + 1]);
        let span = hl + hr;
        let xx = x[j] * x[j];

        a_diag[j] = -sig2 * xx / (hl * hr);
        d2_diag[j] = -2.0 / (hl * hr);
        if j > 0 {
            a_lower[j - 1] = sig2 * xx / (span * hl);
            cpr_lower[j - 1] = -x[j] / span;
            d_lower[j - 1] = -1.0 / span;
            d2_lower[j - 1] = 2.0 / (span * hl);
        }
        if j + 1 < m {
            a_upper[j] = sig2 * xx / (span * hr);
            cpr_upper[j] = x[j] / span;
            d_upper[j] = 1.0 / span;
            d2_upper[j] = 2.0 / (span * hr);
        }
    }

    let diffusion = TridiagonalMatrix::new(a_lower, a_diag, a_upper)?;
    let convection_per_rate =
        TridiagonalMatrix::new(cpr_lower, vec![0.0; m], cpr_upper)?;
    let convection = convection_per_rate.scale(rate);
    let discount = TridiagonalMatrix::scaled_identity(m, -rate);
    let generator = diffusion.add(&convection)?.add(&discount)?;
    let first_diff = TridiagonalMatrix::new(d_lower, vec![0.0; m], d_upper)?;
    let second_diff = TridiagonalMatrix::new(d2_lower, d2_diag, d2_upper)?;

    // dropped couplings: row 1 into x_0, row M into x_{M+1}
    let span_first = h[0] + h[1];
    let span_last = h[m - 1] + h[m];
    let alpha_left = sig2 * x[0] * x[0] / (span_first * h[0]);
    let alpha_right = sig2 * x[m - 1] * x[m - 1] / (span_last * h[m]);
    let convection_unit_left = x[0] / span_first;
    let convection_unit_right = x[m - 1] / span_last;

    Ok(SystemMatrices {
        sigma,
        rate,
        diffusion,
        convection,
        discount,
        generator,
        first_diff,
        second_diff,
        convection_per_rate,
        alpha_left,
        alpha_right,
        convection_unit_left,
        convection_unit_right,
    })
}

/// The affine term `F` of `dU/dτ = ζU + F`.
///
/// Only the first and last entries are nonzero: they carry the couplings of
/// rows 1 and `M` into the frozen boundary values. Stored in factored form
/// so that the `σ` and `r` derivatives of `F` are exact, not re-differenced.
#[derive(Debug, Clone)]
pub struct BoundaryVector {
    pub dim: usize,
    pub sigma: f64,
    pub rate: f64,
    pub alpha_left: f64,
    pub alpha_right: f64,
    pub convection_unit_left: f64,
    pub convection_unit_right: f64,
    pub u_left: f64,
    pub u_right: f64,
}

impl BoundaryVector {
    /// First entry: `(α_{−1} − b_1)·u(0)` with `b_1 = r·x_1/(h_1 + h_2)`.
    pub fn first_entry(&self) -> f64 {
        (self.alpha_left - self.rate * self.convection_unit_left) * self.u_left
    }

    /// Last entry: `(α_M + b_M)·u(L)`.
    pub fn last_entry(&self) -> f64 {
        (self.alpha_right + self.rate * self.convection_unit_right) * self.u_right
    }

    /// `F` as a dense vector.
    pub fn dense(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.dim];
        f[0] = self.first_entry();
        let last = self.dim - 1;
        f[last] += self.last_entry();
        f
    }

    /// `∂F/∂σ = (2/σ)·(diffusion part of F)`, dense.
    pub fn sigma_derivative_dense(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.dim];
        let scale = 2.0 / self.sigma;
        f[0] = scale * self.alpha_left * self.u_left;
        let last = self.dim - 1;
        f[last] += scale * self.alpha_right * self.u_right;
        f
    }

    /// `∂F/∂r`, dense: only the convection couplings depend on `r`.
    pub fn rate_derivative_dense(&self) -> Vec<f64> {
        let mut f = vec![0.0; self.dim];
        f[0] = -self.convection_unit_left * self.u_left;
        let last = self.dim - 1;
        f[last] += self.convection_unit_right * self.u_right;
        f
    }

    /// Same couplings, new frozen boundary values.
    pub fn with_boundary_values(&self, u_left: f64, u_right: f64) -> Self {
        Self {
            u_left,
            u_right,
            ..self.clone()
        }
    }
}

/// Forms `F` from the dropped couplings of an assembled system and the
/// frozen boundary values.
pub fn build_boundary_vector(sys: &SystemMatrices, u_left: f64, u_right: f64) -> BoundaryVector {
    BoundaryVector {
        dim: sys.generator.dim(),
        sigma: sys.sigma,
        rate: sys.rate,
        alpha_left: sys.alpha_left,
        alpha_right: sys.alpha_right,
        convection_unit_left: sys.convection_unit_left,
        convection_unit_right: sys.convection_unit_right,
        u_left,
        u_right,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_mesh, GridSpec, Mesh};

    fn uniform_mesh(x_max: f64, cells: usize) -> Mesh {
        let h = x_max / cells as f64;
        Mesh::from_nodes((0..=cells).map(|i| i as f64 * h).collect()).unwrap()
    }

    /// Full-stencil apply: folds the dropped boundary couplings back into
    /// rows 1 and M so the result equals the textbook stencil on the whole
    /// node set. `u` is sampled on all M+2 nodes.
    fn apply_generator_folded(sys: &SystemMatrices, u: &[f64]) -> Vec<f64> {
        let m = sys.generator.dim();
        let interior = &u[1..=m];
        let mut y = sys.generator.apply(interior);
        y[0] += (sys.alpha_left - sys.rate * sys.convection_unit_left) * u[0];
        y[m - 1] += (sys.alpha_right + sys.rate * sys.convection_unit_right) * u[m + 1];
        y
    }

    #[test]
    fn uniform_limit_recovers_central_differences() {
        // h = 1 around x = 100: γ = −σ²x²/h² = −900, α = σ²x²/(2h²) = 450
        let mesh = uniform_mesh(200.0, 200);
        let sys = build_system(&mesh, 0.3, 0.03).unwrap();
        let j = 99; // row of x = 100
        assert!((sys.diffusion.diag()[j] + 900.0).abs() < 1e-9);
        assert!((sys.diffusion.upper()[j] - 450.0).abs() < 1e-9);
        assert!((sys.diffusion.lower()[j - 1] - 450.0).abs() < 1e-9);
        // B: ±r·x/(2h) = ±1.5 at x = 100
        assert!((sys.convection.upper()[j] - 1.5).abs() < 1e-12);
        assert!((sys.convection.lower()[j - 1] + 1.5).abs() < 1e-12);
        assert!((sys.discount.diag()[j] + 0.03).abs() < 1e-15);
        // D, D2 at the same row
        assert!((sys.first_diff.upper()[j] - 0.5).abs() < 1e-15);
        assert!((sys.second_diff.diag()[j] + 2.0).abs() < 1e-12);
        assert!((sys.second_diff.upper()[j] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diffusion_exact_on_quadratics() {
        let mesh = build_mesh(&GridSpec::new(60, 110.0).with_eval_point(100.0)).unwrap();
        let sys = build_system(&mesh, 0.3, 0.03).unwrap();
        let m = sys.diffusion.dim();
        let u: Vec<f64> = mesh.nodes().iter().map(|&x| 3.0 * x * x).collect();
        let mut y = sys.diffusion.apply(&u[1..=m]);
        y[0] += sys.alpha_left * u[0];
        y[m - 1] += sys.alpha_right * u[m + 1];
        // ½σ²x²·u'' = ½σ²x²·6 = 3σ²x²
        for (j, &x) in mesh.interior_nodes().iter().enumerate() {
            let exact = 3.0 * 0.09 * x * x;
            assert!(
                (y[j] - exact).abs() <= 1e-8 * exact.abs().max(1.0),
                "row {j}: {} vs {exact}",
                y[j]
            );
        }
    }

    #[test]
    fn convection_exact_on_linears() {
        let mesh = build_mesh(&GridSpec::new(60, 110.0)).unwrap();
        let sys = build_system(&mesh, 0.3, 0.03).unwrap();
        let m = sys.convection.dim();
        let u: Vec<f64> = mesh.nodes().iter().map(|&x| 5.0 * x - 2.0).collect();
        let mut y = sys.convection.apply(&u[1..=m]);
        y[0] += -sys.rate * sys.convection_unit_left * u[0];
        y[m - 1] += sys.rate * sys.convection_unit_right * u[m + 1];
        // r·x·u' = 0.03·x·5
        for (j, &x) in mesh.interior_nodes().iter().enumerate() {
            let exact = 0.03 * x * 5.0;
            assert!(
                (y[j] - exact).abs() <= 1e-9 * exact.abs().max(1.0),
                "row {j}: {} vs {exact}",
                y[j]
            );
        }
    }

    #[test]
    fn generator_on_constants_discounts() {
        // full stencil rows sum to zero for A and B, so ζ·1 + F(1,1) = −r·1
        let mesh = build_mesh(&GridSpec::new(80, 110.0).with_eval_point(100.0)).unwrap();
        let sys = build_system(&mesh, 0.3, 0.03).unwrap();
        let u = vec![1.0; mesh.nodes().len()];
        let y = apply_generator_folded(&sys, &u);
        for (j, &v) in y.iter().enumerate() {
            assert!((v + 0.03).abs() <= 1e-10, "row {j}: {v}");
        }
    }

    #[test]
    fn boundary_vector_call_and_put_shapes() {
        let mesh = build_mesh(&GridSpec::new(50, 110.0)).unwrap();
        let sys = build_system(&mesh, 0.3, 0.03).unwrap();
        let l = mesh.truncation();
        assert!((l - 1210.0).abs() < 1e-9);

        // call, K = 100: u(0) = 0, u(L) = L − K
        let f_call = build_boundary_vector(&sys, 0.0, l - 100.0);
        let dense = f_call.dense();
        assert_eq!(dense[0], 0.0);
        let expected_last =
            (sys.alpha_right + sys.rate * sys.convection_unit_right) * 1110.0;
        assert!((dense[dense.len() - 1] - expected_last).abs() <= 1e-12 * expected_last.abs());
        assert!(dense[1..dense.len() - 1].iter().all(|&v| v == 0.0));

        // put, K = 44: u(0) = 44, u(L) = 0
        let f_put = build_boundary_vector(&sys, 44.0, 0.0);
        let dense = f_put.dense();
        let expected_first = (sys.alpha_left - sys.rate * sys.convection_unit_left) * 44.0;
        assert!((dense[0] - expected_first).abs() <= 1e-12 * expected_first.abs());
        assert_eq!(dense[dense.len() - 1], 0.0);
    }

    #[test]
    fn boundary_vector_derivatives_match_bumps() {
        let mesh = build_mesh(&GridSpec::new(40, 110.0)).unwrap();
        let (sigma, rate) = (0.3, 0.03);
        let sys = build_system(&mesh, sigma, rate).unwrap();
        let f = build_boundary_vector(&sys, 7.0, 1110.0);

        // A ∝ σ² and B ∝ r, so central bumps are exact up to roundoff
        let h = 1e-6;
        let up = build_boundary_vector(&build_system(&mesh, sigma + h, rate).unwrap(), 7.0, 1110.0);
        let dn = build_boundary_vector(&build_system(&mesh, sigma - h, rate).unwrap(), 7.0, 1110.0);
        let dsig = f.sigma_derivative_dense();
        let bump_first = (up.first_entry() - dn.first_entry()) / (2.0 * h);
        let bump_last = (up.last_entry() - dn.last_entry()) / (2.0 * h);
        assert!((dsig[0] - bump_first).abs() <= 1e-4 * bump_first.abs().max(1.0));
        let last = dsig.len() - 1;
        assert!((dsig[last] - bump_last).abs() <= 1e-4 * bump_last.abs().max(1.0));

        let up = build_boundary_vector(&build_system(&mesh, sigma, rate + h).unwrap(), 7.0, 1110.0);
        let dn = build_boundary_vector(&build_system(&mesh, sigma, rate - h).unwrap(), 7.0, 1110.0);
        let drate = f.rate_derivative_dense();
        let bump_first = (up.first_entry() - dn.first_entry()) / (2.0 * h);
        let bump_last = (up.last_entry() - dn.last_entry()) / (2.0 * h);
        assert!((drate[0] - bump_first).abs() <= 1e-6 * bump_first.abs().max(1.0));
        assert!((drate[last] - bump_last).abs() <= 1e-6 * bump_last.abs().max(1.0));
    }

    #[test]
    fn sigma_scaling_of_diffusion_is_quadratic() {
        // dA/dσ = (2/σ)·A entrywise
        let mesh = build_mesh(&GridSpec::new(30, 110.0)).unwrap();
        let sigma = 0.3;
        let sys = build_system(&mesh, sigma, 0.03).unwrap();
        let h = 1e-6;
        let up = build_system(&mesh, sigma + h, 0.03).unwrap();
        let dn = build_system(&mesh, sigma - h, 0.03).unwrap();
        let analytic = sys.diffusion.scale(2.0 / sigma);
        for j in 0..sys.diffusion.dim() {
            let bump = (up.diffusion.diag()[j] - dn.diffusion.diag()[j]) / (2.0 * h);
            assert!((analytic.diag()[j] - bump).abs() <= 1e-4 * bump.abs().max(1.0));
        }
    }

    #[test]
    fn convection_per_rate_times_rate_is_convection() {
        let mesh = build_mesh(&GridSpec::new(30, 110.0)).unwrap();
        let sys = build_system(&mesh, 0.3, 0.03).unwrap();
        let scaled = sys.convection_per_rate.scale(0.03);
        for j in 0..sys.convection.dim() - 1 {
            assert!((scaled.upper()[j] - sys.convection.upper()[j]).abs() <= 1e-15);
            assert!((scaled.lower()[j] - sys.convection.lower()[j]).abs() <= 1e-15);
        }
    }

    #[test]
    fn zero_rate_system_builds() {
        let mesh = build_mesh(&GridSpec::new(30, 110.0)).unwrap();
        let sys = build_system(&mesh, 0.3, 0.0).unwrap();
        assert!(sys.convection.upper().iter().all(|&v| v == 0.0));
        assert!(sys.discount.diag().iter().all(|&v| v == 0.0));
        // convection_per_rate stays nonzero: the rate sensitivity needs it
        assert!(sys.convection_per_rate.upper().iter().any(|&v| v != 0.0));
    }

    #[test]
    fn invalid_inputs_rejected() {
        let mesh = build_mesh(&GridSpec::new(10, 110.0)).unwrap();
        assert!(build_system(&mesh, 0.0, 0.03).is_err());
        assert!(build_system(&mesh, -0.3, 0.03).is_err());
        assert!(build_system(&mesh, f64::NAN, 0.03).is_err());
        assert!(build_system(&mesh, 0.3, f64::INFINITY).is_err());
        assert!(TridiagonalMatrix::new(vec![1.0], vec![1.0], vec![]).is_err());
    }
}
