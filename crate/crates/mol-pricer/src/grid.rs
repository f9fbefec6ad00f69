//! Truncated quasi-uniform spatial mesh.
//!
//! A uniform mesh `η_n = n/N` on `[0, 1]` is pushed through the map
//! `x = c·η/(d − η)`, which concentrates nodes near the origin and spreads
//! them toward the far field. The domain is truncated at
//! `L = c·η_tail/(d − η_tail)` by appending one extra point `η_tail`.
//! Evaluation points (e.g. the spot) are inserted as exact nodes so no
//! interpolation error enters at the reporting point.

use crate::{Error, Result};

/// Relative tolerance under which an eval point reuses an existing node.
///
/// Keeps spacings bounded away from zero; a duplicated node would make the
/// difference-stencil coefficients singular.
pub const NODE_MERGE_RTOL: f64 = 1e-12;

/// Parameters of the two-parameter grid map plus the truncation point.
#[derive(Debug, Clone)]
pub struct GridSpec {
    /// Number of interior map nodes `N` (before eval-point insertion).
    pub n_interior: usize,
    /// Map parameter `c > 0`; larger `c` pushes resolution outward.
    pub c: f64,
    /// Map parameter `d > 1`.
    pub d: f64,
    /// Tail coordinate `η_tail` with `1 < η_tail < d`; fixes the truncation
    /// `L = c·η_tail/(d − η_tail)`.
    pub eta_tail: f64,
    /// Points to insert as exact nodes, each strictly inside `(0, L)`.
    pub eval_points: Vec<f64>,
}

impl GridSpec {
    /// Spec with the customary map constants `d = 1.2`, `η_tail = 1.1`.
    pub fn new(n_interior: usize, c: f64) -> Self {
        Self {
            n_interior,
            c,
            d: 1.2,
            eta_tail: 1.1,
            eval_points: Vec::new(),
        }
    }

    /// Adds an evaluation point to insert into the mesh.
    pub fn with_eval_point(mut self, point: f64) -> Self {
        self.eval_points.push(point);
        self
    }

    /// Truncation boundary `L = c·η_tail/(d − η_tail)`.
    pub fn truncation(&self) -> f64 {
        self.c * self.eta_tail / (self.d - self.eta_tail)
    }

    fn validate(&self) -> Result<()> {
        if self.n_interior == 0 {
            return Err(Error::Grid("n_interior must be positive".into()));
        }
        if !(self.c > 0.0) {
            return Err(Error::Grid(format!("c must be positive, got {}", self.c)));
        }
        if !(self.d > 1.0) {
            return Err(Error::Grid(format!("d must exceed 1, got {}", self.d)));
        }
        if !(self.eta_tail > 1.0 && self.eta_tail < self.d) {
            return Err(Error::Grid(format!(
                "eta_tail must lie in (1, d) = (1, {}), got {}",
                self.d, self.eta_tail
            )));
        }
        let l = self.truncation();
        for &p in &self.eval_points {
            // a point within merge distance of L would land on the boundary
            // node, where no interior value exists
            if !(p > 0.0 && p < l) || nearly_equal(p, l) {
                return Err(Error::Grid(format!(
                    "eval point {p} outside the open domain (0, {l})"
                )));
            }
        }
        Ok(())
    }
}

/// The assembled mesh: nodes `x_0 = 0 < x_1 < … < x_M < x_{M+1} = L`.
///
/// The interior nodes `x_1 … x_M` carry the ODE system; the endpoints hold
/// the frozen boundary values. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<f64>,
    spacings: Vec<f64>,
    eval_indices: Vec<(f64, usize)>,
}

impl Mesh {
    /// All nodes including both endpoints (`M + 2` values).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Spacings `h_i = x_i − x_{i−1}` for `i = 1 … M+1`.
    pub fn spacings(&self) -> &[f64] {
        &self.spacings
    }

    /// Number of interior nodes `M` (the ODE system dimension).
    pub fn interior_count(&self) -> usize {
        self.nodes.len() - 2
    }

    /// The interior nodes `x_1 … x_M`.
    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }

    /// Truncation boundary `L`.
    pub fn truncation(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Node index of a requested eval point, if one was registered.
    pub fn eval_index(&self, point: f64) -> Option<usize> {
        self.eval_indices
            .iter()
            .find(|(p, _)| nearly_equal(*p, point))
            .map(|&(_, idx)| idx)
    }

    /// Registered `(eval point, node index)` pairs in request order.
    pub fn eval_indices(&self) -> &[(f64, usize)] {
        &self.eval_indices
    }

    /// Builds a mesh from explicit nodes. Diagnostic hook: substituting a
    /// uniform node set makes every spacing equal, under which the
    /// difference stencils reduce to the classical central differences.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Mesh> {
        if nodes.len() < 3 {
            return Err(Error::Grid(
                "a mesh needs at least one interior node".into(),
            ));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Grid("the first node must be x = 0".into()));
        }
        if !nodes.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Grid("nodes must be strictly increasing".into()));
        }
        let spacings = spacings_of(&nodes);
        Ok(Mesh {
            nodes,
            spacings,
            eval_indices: Vec::new(),
        })
    }
}

fn nearly_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= NODE_MERGE_RTOL * a.abs().max(b.abs())
}

fn spacings_of(nodes: &[f64]) -> Vec<f64> {
    nodes.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Builds the quasi-uniform mesh: map nodes `x_n = c·η_n/(d − η_n)` for
/// `η_n = n/N`, the truncation node `L`, and every requested eval point
/// inserted at its sorted position (or merged onto a node closer than
/// [`NODE_MERGE_RTOL`] relative).
pub fn build_mesh(spec: &GridSpec) -> Result<Mesh> {
    spec.validate()?;
    let n = spec.n_interior;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|i| {
            let eta = i as f64 / n as f64;
            spec.c * eta / (spec.d - eta)
        })
        .collect();
    nodes.push(spec.truncation());

    for &p in &spec.eval_points {
        let pos = nodes.partition_point(|&x| x < p);
        let merges_left = pos > 0 && nearly_equal(nodes[pos - 1], p);
        let merges_right = pos < nodes.len() && nearly_equal(nodes[pos], p);
        if !merges_left && !merges_right {
            nodes.insert(pos, p);
        }
    }

    let eval_indices = spec
        .eval_points
        .iter()
        .map(|&p| {
            let idx = nodes
                .iter()
                .position(|&x| nearly_equal(x, p))
                .expect("every eval point has a node after insertion");
            (p, idx)
        })
        .collect();

    let spacings = spacings_of(&nodes);
    debug_assert!(spacings.iter().all(|&h| h > 0.0));
    let l = *nodes.last().unwrap();
    debug_assert!((spacings.iter().sum::<f64>() - l).abs() <= 1e-12 * l);

    Ok(Mesh {
        nodes,
        spacings,
        eval_indices,
    })
}
