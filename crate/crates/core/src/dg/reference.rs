use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 15;

/// Legendre polynomials `P_{n-1}(x)` and `P_n(x)` by the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return (0.0, 1.0);
    }
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// Legendre–Gauss–Lobatto nodes (ascending) and weights for order `n`.
///
/// Nodes are the roots of `(1 - x²) P_n'(x)`, found by Newton iteration on
/// `x P_n - P_{n-1}` from Chebyshev–Gauss–Lobatto starting points; weights
/// are `2 / (n (n + 1) P_n(x)²)`.
pub fn lgl_nodes_weights(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(Error::UnsupportedOrder(n));
    }
    let nf = n as f64;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|j| -(std::f64::consts::PI * j as f64 / nf).cos())
        .collect();
    for x in nodes.iter_mut().take(n).skip(1) {
        for _ in 0..100 {
            let (pm1, p) = legendre_pair(n, *x);
            let step = (*x * p - pm1) / ((nf + 1.0) * p);
            *x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }
    // Enforce exact symmetry about zero.
    for j in 0..=n / 2 {
        let s = 0.5 * (nodes[n - j] - nodes[j]);
        nodes[j] = -s;
        nodes[n - j] = s;
    }
    if n % 2 == 0 {
        nodes[n / 2] = 0.0;
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (_, p) = legendre_pair(n, x);
            2.0 / (nf * (nf + 1.0) * p * p)
        })
        .collect();
    Ok((nodes, weights))
}

/// Lagrange basis polynomial `l_m` through `nodes`, evaluated at `x`.
pub fn lagrange(nodes: &[f64], m: usize, x: f64) -> f64 {
    nodes
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != m)
        .map(|(_, &xk)| (x - xk) / (nodes[m] - xk))
        .product()
}

/// Collocation differentiation matrix `D[l][m] = l_m'(x_l)`, row-major,
/// from barycentric weights. Diagonals are negative row sums so `D 1 = 0`
/// holds to rounding.
pub fn differentiation_matrix(nodes: &[f64]) -> Vec<f64> {
    let m = nodes.len();
    let bary: Vec<f64> = (0..m)
        .map(|j| {
            1.0 / (0..m)
                .filter(|&k| k != j)
                .map(|k| nodes[j] - nodes[k])
                .product::<f64>()
        })
        .collect();
    let mut d = vec![0.0; m * m];
    for l in 0..m {
        let mut diag = 0.0;
        for j in 0..m {
            if j != l {
                let v = bary[j] / bary[l] / (nodes[l] - nodes[j]);
                d[l * m + j] = v;
                diag -= v;
            }
        }
        d[l * m + l] = diag;
    }
    d
}

/// Order-`N` hexahedral reference element on `[-1, 1]³` with LGL
/// collocation. Volume nodes are numbered `i + M (j + M k)` with `M = N + 1`
/// and `i` running along r1.
#[derive(Clone, Debug)]
pub struct ReferenceElement {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Row-major `M × M` differentiation matrix.
    pub diff: Vec<f64>,
    /// Volume node indices of each face's `M²` nodes. On faces normal to
    /// axis `a`, the two remaining axes are enumerated in increasing axis
    /// order, lower axis fastest.
    pub face_nodes: [Vec<usize>; 6],
}

impl ReferenceElement {
    pub fn new(order: usize) -> Result<Self> {
        let (nodes, weights) = lgl_nodes_weights(order)?;
        let diff = differentiation_matrix(&nodes);
        let m = order + 1;
        let face_nodes = std::array::from_fn(|face| {
            let axis = face / 2;
            let fixed = if face % 2 == 1 { order } else { 0 };
            let mut ids = Vec::with_capacity(m * m);
            for b in 0..m {
                for a in 0..m {
                    let idx = match axis {
                        0 => [fixed, a, b],
                        1 => [a, fixed, b],
                        _ => [a, b, fixed],
                    };
                    ids.push(idx[0] + m * (idx[1] + m * idx[2]));
                }
            }
            ids
        });
        Ok(Self { order, nodes, weights, diff, face_nodes })
    }

    /// Nodes per direction, `N + 1`.
    pub fn m(&self) -> usize {
        self.order + 1
    }

    pub fn volume_nodes(&self) -> usize {
        self.m().pow(3)
    }

    pub fn face_node_count(&self) -> usize {
        self.m().pow(2)
    }

    /// Reference coordinates of volume node `idx`.
    pub fn node_coords(&self, idx: usize) -> [f64; 3] {
        let m = self.m();
        [self.nodes[idx % m], self.nodes[(idx / m) % m], self.nodes[idx / (m * m)]]
    }

    /// Tensor quadrature weight of volume node `idx`.
    pub fn volume_weight(&self, idx: usize) -> f64 {
        let m = self.m();
        self.weights[idx % m] * self.weights[(idx / m) % m] * self.weights[idx / (m * m)]
    }

    /// Quadrature weight of face node `p` (product of the two in-face weights).
    pub fn face_weight(&self, p: usize) -> f64 {
        let m = self.m();
        self.weights[p % m] * self.weights[p / m]
    }
}
