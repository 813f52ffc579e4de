//! Graded radial meshes, three-point stencils on nonuniform nodes, and the
//! small quadrature helpers shared by the rest of the crate.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const DEFAULT_EPS0: f64 = 1e-8;
pub const DEFAULT_RATIO: f64 = 1.05;

/// Mesh on `[eps0, 1]` with `nodes` points: geometric with ratio `ratio` near
/// the origin until the cell size matches the uniform spacing of the rest.
///
/// When `nodes` is too small for the requested ratio the ratio is raised so
/// that the geometric part uses at most half of the cells.
pub fn graded_mesh(nodes: usize, eps0: f64, ratio: f64) -> Result<Vec<f64>> {
    if nodes < 3 {
        return Err(Error::InvalidMesh(format!("need at least 3 nodes, got {nodes}")));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::InvalidMesh(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    if !(ratio > 1.0 && ratio.is_finite()) {
        return Err(Error::InvalidMesh(format!("grading ratio must be > 1, got {ratio}")));
    }
    let cells = nodes - 1;
    let mut q = ratio;
    if geometric_cells(cells, eps0, q) > cells / 2 {
        let (mut lo, mut hi) = (ratio, 1e4);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if geometric_cells(cells, eps0, mid) > cells / 2 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        q = hi;
    }
    let g = geometric_cells(cells, eps0, q);
    let mut mesh = Vec::with_capacity(nodes);
    let mut radius = eps0;
    for _ in 0..=g {
        mesh.push(radius);
        radius *= q;
    }
    let start = mesh[g];
    let rest = cells - g;
    let step = (1.0 - start) / rest as f64;
    for k in 1..rest {
        mesh.push(start + k as f64 * step);
    }
    mesh.push(1.0);
    debug_assert_eq!(mesh.len(), nodes);
    Ok(mesh)
}

/// `[0] ∪ graded_mesh(nodes - 1, eps0, ratio)`.
pub fn graded_mesh_with_origin(nodes: usize, eps0: f64, ratio: f64) -> Result<Vec<f64>> {
    if nodes < 4 {
        return Err(Error::InvalidMesh(format!("need at least 4 nodes, got {nodes}")));
    }
    let mut mesh = Vec::with_capacity(nodes);
    mesh.push(0.0);
    mesh.extend(graded_mesh(nodes - 1, eps0, ratio)?);
    Ok(mesh)
}

fn geometric_cells(cells: usize, eps0: f64, q: f64) -> usize {
    let mut g = 0;
    let mut radius = eps0;
    while g + 1 < cells {
        let next = radius * (q - 1.0);
        let uniform = (1.0 - radius) / (cells - g) as f64;
        if next >= uniform {
            break;
        }
        radius *= q;
        g += 1;
    }
    g
}

pub fn check_mesh(mesh: &[f64]) -> Result<()> {
    if mesh.len() < 2 {
        return Err(Error::InvalidMesh("fewer than two nodes".into()));
    }
    if !mesh.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidMesh("non-finite node".into()));
    }
    if mesh[0] < 0.0 {
        return Err(Error::InvalidMesh(format!("first node {} is negative", mesh[0])));
    }
    if let Some(k) = mesh.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidMesh(format!(
            "nodes not strictly increasing at index {}: {} then {}",
            k + 1,
            mesh[k],
            mesh[k + 1]
        )));
    }
    Ok(())
}

/// Weights of the derivative at `at` of the quadratic interpolating `xs`.
pub fn lagrange_first_weights(at: f64, xs: [f64; 3]) -> [f64; 3] {
    let [a, b, c] = xs;
    [
        ((at - b) + (at - c)) / ((a - b) * (a - c)),
        ((at - a) + (at - c)) / ((b - a) * (b - c)),
        ((at - a) + (at - b)) / ((c - a) * (c - b)),
    ]
}

/// Weights of the (constant) second derivative of the quadratic through `xs`.
pub fn lagrange_second_weights(xs: [f64; 3]) -> [f64; 3] {
    let [a, b, c] = xs;
    [
        2.0 / ((a - b) * (a - c)),
        2.0 / ((b - a) * (b - c)),
        2.0 / ((c - a) * (c - b)),
    ]
}

fn stencil(n: usize, i: usize) -> [usize; 3] {
    if i == 0 {
        [0, 1, 2]
    } else if i + 1 == n {
        [n - 3, n - 2, n - 1]
    } else {
        [i - 1, i, i + 1]
    }
}

/// Three-point first derivative at node `i`; one-sided at the two ends.
pub fn first_derivative_at(x: &[f64], y: &[f64], i: usize) -> f64 {
    let idx = stencil(x.len(), i);
    let w = lagrange_first_weights(x[i], idx.map(|k| x[k]));
    // weights sum to zero; differences keep constants exact on tiny cells
    w[0] * (y[idx[0]] - y[idx[1]]) + w[2] * (y[idx[2]] - y[idx[1]])
}

pub fn second_derivative_at(x: &[f64], y: &[f64], i: usize) -> f64 {
    let idx = stencil(x.len(), i);
    let w = lagrange_second_weights(idx.map(|k| x[k]));
    w[0] * (y[idx[0]] - y[idx[1]]) + w[2] * (y[idx[2]] - y[idx[1]])
}

pub fn first_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert!(x.len() >= 3 && x.len() == y.len());
    (0..x.len()).map(|i| first_derivative_at(x, y, i)).collect()
}

pub fn second_derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    assert!(x.len() >= 3 && x.len() == y.len());
    (0..x.len()).map(|i| second_derivative_at(x, y, i)).collect()
}

/// Value at `0` of the quadratic through three samples.
pub fn extrapolate_to_zero(xs: [f64; 3], ys: [f64; 3]) -> f64 {
    let [a, b, c] = xs;
    ys[0] * (b * c) / ((a - b) * (a - c))
        + ys[1] * (a * c) / ((b - a) * (b - c))
        + ys[2] * (a * b) / ((c - a) * (c - b))
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xw, yw)| 0.5 * (xw[1] - xw[0]) * (yw[0] + yw[1]))
        .sum()
}

/// Piecewise-linear interpolation; constant extension outside `[x₀, xₙ]`.
pub fn interpolate_linear(x: &[f64], y: &[f64], at: f64) -> f64 {
    let n = x.len();
    if at <= x[0] {
        return y[0];
    }
    if at >= x[n - 1] {
        return y[n - 1];
    }
    let k = x.partition_point(|&v| v <= at) - 1;
    let t = (at - x[k]) / (x[k + 1] - x[k]);
    y[k] + t * (y[k + 1] - y[k])
}

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, dp)
}

/// Cached rule for small orders.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Vec<OnceLock<GaussLegendre>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=64).map(|_| OnceLock::new()).collect());
    assert!((1..=64).contains(&n), "Gauss-Legendre order {n} not cached");
    cache[n].get_or_init(|| GaussLegendre::new(n))
}
