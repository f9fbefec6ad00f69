//! Dense matrix exponential and banded solves.
//!
//! The interval propagator `E = e^{ζτ}` is dense even though `ζ` is
//! tridiagonal, so it is formed once per interval by scaling and squaring
//! with a degree-13 diagonal Padé approximant. Everything multiplied by
//! `ζ^{−1}` goes through the Thomas algorithm instead; the inverse is never
//! formed.

use ndarray::{s, Array2, ArrayView2};

use crate::discretization::TridiagonalMatrix;
use crate::{Error, Result};

/// Largest system dimension the dense exponential will accept. Above this
/// the working set (a handful of `M×M` doubles) stops fitting comfortably
/// in memory.
pub const EXPM_DIM_BUDGET: usize = 4096;

/// Scaling threshold for the degree-13 Padé approximant: no scaling is
/// needed while `‖τζ‖₁` stays below it.
const THETA_13: f64 = 5.371920351148152;

/// Numerator coefficients of the degree-13 diagonal Padé approximant.
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Dense square matrix, row-major. Thin wrapper so call sites speak in
/// propagators rather than raw arrays.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    data: Array2<f64>,
}

impl DenseMatrix {
    pub fn identity(dim: usize) -> Self {
        Self {
            data: Array2::eye(dim),
        }
    }

    pub fn from_tridiagonal(m: &TridiagonalMatrix) -> Self {
        let n = m.dim();
        let mut data = Array2::zeros((n, n));
        for i in 0..n {
            data[[i, i]] = m.diag()[i];
            if i > 0 {
                data[[i, i - 1]] = m.lower()[i - 1];
            }
            if i + 1 < n {
                data[[i, i + 1]] = m.upper()[i];
            }
        }
        Self { data }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim());
        let v = ndarray::ArrayView1::from(x);
        self.data.dot(&v).to_vec()
    }

    /// Matrix-matrix product.
    pub fn matmul(&self, other: &Self) -> Self {
        Self {
            data: self.data.dot(&other.data),
        }
    }
}

fn one_norm(a: &ArrayView2<f64>) -> f64 {
    let mut best = 0.0f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|v| v.abs()).sum();
        if !s.is_finite() {
            return s; // NaN/overflow must reach the caller's finiteness check
        }
        if s > best {
            best = s;
        }
    }
    best
}

/// `e^{τm}` by scaling and squaring with the degree-13 Padé approximant.
///
/// `τ` must be finite and nonnegative; `τ = 0` returns the exact identity.
pub fn expm(m: &TridiagonalMatrix, tau: f64) -> Result<DenseMatrix> {
    check_interval(tau)?;
    let n = m.dim();
    if n > EXPM_DIM_BUDGET {
        return Err(Error::Linalg(format!(
            "dimension {n} exceeds the dense-exponential budget {EXPM_DIM_BUDGET}"
        )));
    }

    let mut a = DenseMatrix::from_tridiagonal(m).data;
    a.mapv_inplace(|v| v * tau);
    Ok(DenseMatrix { data: expm_core(a)? })
}

/// `e^{τm}` together with its exact directional derivative
/// `∂/∂ε e^{τ(m + ε·p)}` at `ε = 0`.
///
/// Both blocks come out of one exponential of `[[τm, τp], [0, τm]]`: the
/// diagonal blocks are `e^{τm}` and the top-right block is the derivative.
/// Nothing is assumed about `m` and `p` commuting; the product-rule
/// shortcut `τ·e^{τm}·p` is only valid when they do.
pub fn expm_frechet(
    m: &TridiagonalMatrix,
    p: &TridiagonalMatrix,
    tau: f64,
) -> Result<(DenseMatrix, DenseMatrix)> {
    check_interval(tau)?;
    let n = m.dim();
    if p.dim() != n {
        return Err(Error::Linalg(format!(
            "direction dimension {} does not match matrix dimension {n}",
            p.dim()
        )));
    }
    if 2 * n > EXPM_DIM_BUDGET {
        return Err(Error::Linalg(format!(
            "coupled dimension {} exceeds the dense-exponential budget {EXPM_DIM_BUDGET}",
            2 * n
        )));
    }

    let mut a = Array2::zeros((2 * n, 2 * n));
    let mut place = |row: usize, col: usize, band: &TridiagonalMatrix| {
        for i in 0..n {
            a[[row + i, col + i]] = band.diag()[i] * tau;
            if i > 0 {
                a[[row + i, col + i - 1]] = band.lower()[i - 1] * tau;
            }
            if i + 1 < n {
                a[[row + i, col + i + 1]] = band.upper()[i] * tau;
            }
        }
    };
    place(0, 0, m);
    place(0, n, p);
    place(n, n, m);

    let x = expm_core(a)?;
    let e = x.slice(s![..n, ..n]).to_owned();
    let de = x.slice(s![..n, n..]).to_owned();
    Ok((DenseMatrix { data: e }, DenseMatrix { data: de }))
}

fn check_interval(tau: f64) -> Result<()> {
    if !tau.is_finite() || tau < 0.0 {
        return Err(Error::Linalg(format!(
            "expm needs a finite nonnegative interval, got {tau}"
        )));
    }
    Ok(())
}

/// Padé evaluation of `e^a` for a pre-scaled dense operand.
fn expm_core(mut a: Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let norm = one_norm(&a.view());
    if !norm.is_finite() {
        return Err(Error::Linalg(format!(
            "matrix 1-norm is not finite ({norm}); generator entries overflow or are NaN"
        )));
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    if squarings > 0 {
        let scale = (2.0f64).powi(squarings as i32).recip();
        a.mapv_inplace(|v| v * scale);
    }

    let b = &PADE_13;
    let eye: Array2<f64> = Array2::eye(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);

    // U = A·(A6·(b13·A6 + b11·A4 + b9·A2) + b7·A6 + b5·A4 + b3·A2 + b1·I)
    let w1 = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let w = a6.dot(&w1) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &eye * b[1];
    let u = a.dot(&w);
    // V = A6·(b12·A6 + b10·A4 + b8·A2) + b6·A6 + b4·A4 + b2·A2 + b0·I
    let z1 = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = a6.dot(&z1) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &eye * b[0];

    // (V − U)·X = (V + U)
    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut x = solve_dense(lhs, rhs)?;

    for _ in 0..squarings {
        x = x.dot(&x);
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Linalg(
            "matrix exponential overflowed during squaring".into(),
        ));
    }
    Ok(x)
}

/// Solves `A·X = B` for square dense `A` by Gaussian elimination with
/// partial pivoting. Consumes both operands; returns `X`.
fn solve_dense(a: Array2<f64>, b: Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let w = b.ncols();
    // both operands come out of elementwise arithmetic, so they are in
    // standard row-major layout and into_raw_vec preserves index order
    let mut a = a.into_raw_vec();
    let mut b = b.into_raw_vec();

    for k in 0..n {
        // partial pivot on column k
        let mut pivot_row = k;
        let mut pivot_mag = a[k * n + k].abs();
        for i in k + 1..n {
            let mag = a[i * n + k].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag <= 1e-300 {
            return Err(Error::Linalg(format!(
                "singular matrix in dense solve (pivot {pivot_mag:.3e} at column {k})"
            )));
        }
        if pivot_row != k {
            for j in 0..n {
                a.swap(k * n + j, pivot_row * n + j);
            }
            for j in 0..w {
                b.swap(k * w + j, pivot_row * w + j);
            }
        }
        let pivot = a[k * n + k];
        for i in k + 1..n {
            let factor = a[i * n + k] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[i * n + k] = 0.0;
            let (head, tail) = a.split_at_mut(i * n);
            let pivot_row_a = &head[k * n + k + 1..k * n + n];
            let row_i = &mut tail[k + 1..n];
            for (t, &p) in row_i.iter_mut().zip(pivot_row_a) {
                *t -= factor * p;
            }
            let (head, tail) = b.split_at_mut(i * w);
            let pivot_row_b = &head[k * w..k * w + w];
            let row_i = &mut tail[..w];
            for (t, &p) in row_i.iter_mut().zip(pivot_row_b) {
                *t -= factor * p;
            }
        }
    }

    // back substitution across all right-hand sides
    for i in (0..n).rev() {
        for j in i + 1..n {
            let factor = a[i * n + j];
            if factor == 0.0 {
                continue;
            }
            let (head, tail) = b.split_at_mut(j * w);
            let row_i = &mut head[i * w..i * w + w];
            let row_j = &tail[..w];
            for (t, &p) in row_i.iter_mut().zip(row_j) {
                *t -= factor * p;
            }
        }
        // divide rather than multiply by the reciprocal: keeps e^{0} = I exact
        let pivot = a[i * n + i];
        for t in &mut b[i * w..i * w + w] {
            *t /= pivot;
        }
    }

    Array2::from_shape_vec((n, w), b)
        .map_err(|e| Error::Linalg(format!("dense solve reshape: {e}")))
}

/// Solves the tridiagonal system `m·x = rhs` by the Thomas algorithm.
///
/// No pivoting: the generator is strictly diagonally dominated by its
/// diffusion diagonal on any admissible mesh. A vanishing pivot still
/// surfaces as an error rather than an NaN cascade.
pub fn solve_banded(m: &TridiagonalMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = m.dim();
    if rhs.len() != n {
        return Err(Error::Linalg(format!(
            "rhs length {} does not match dimension {n}",
            rhs.len()
        )));
    }
    let lower = m.lower();
    let diag = m.diag();
    let upper = m.upper();

    let mut c = vec![0.0; n]; // modified superdiagonal
    let mut d = vec![0.0; n]; // modified rhs

    let mut pivot = diag[0];
    if pivot.abs() <= 1e-300 {
        return Err(Error::Linalg("zero pivot in banded solve (row 0)".into()));
    }
    c[0] = if n > 1 { upper[0] / pivot } else { 0.0 };
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot.abs() <= 1e-300 {
            return Err(Error::Linalg(format!(
                "zero pivot in banded solve (row {i})"
            )));
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }

    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] -= c[i] * next;
    }
    Ok(x)
}
