//! Gauss quadrature on segments and triangles, and polynomial bases on
//! physical triangles (orthonormal) and oriented edges (Legendre).

use faer::{Mat, Side};

use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Segment,
    Triangle,
}

/// Quadrature rule on a reference cell.
///
/// Segment rules live on `[-1, 1]` (stored in `points[i][0]`); triangle rules
/// on `{x, y >= 0, x + y <= 1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub degree: usize,
    pub kind: RuleKind,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Physical points and weights on triangle `(v0, v1, v2)`.
    pub fn on_triangle(&self, tri: &[Point; 3]) -> (Vec<Point>, Vec<f64>) {
        debug_assert_eq!(self.kind, RuleKind::Triangle);
        let e1 = [tri[1][0] - tri[0][0], tri[1][1] - tri[0][1]];
        let e2 = [tri[2][0] - tri[0][0], tri[2][1] - tri[0][1]];
        let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
        let pts = self
            .points
            .iter()
            .map(|r| [tri[0][0] + r[0] * e1[0] + r[1] * e2[0], tri[0][1] + r[0] * e1[1] + r[1] * e2[1]])
            .collect();
        (pts, self.weights.iter().map(|w| w * jac).collect())
    }

    /// Physical points and weights on segment `a -> b`, with the reference coordinates.
    pub fn on_segment(&self, a: Point, b: Point) -> (Vec<Point>, Vec<f64>) {
        debug_assert_eq!(self.kind, RuleKind::Segment);
        let half = 0.5 * (b[0] - a[0]).hypot(b[1] - a[1]);
        let pts = self
            .points
            .iter()
            .map(|r| {
                let s = 0.5 * (r[0] + 1.0);
                [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]
            })
            .collect();
        (pts, self.weights.iter().map(|w| w * half).collect())
    }
}

/// Gauss-Jacobi nodes and weights for weight `(1-t)^alpha (1+t)^beta` on `[-1, 1]`.
///
/// Golub-Welsch eigen-solve followed by Newton polishing on the orthonormal
/// three-term recurrence; weights are Christoffel numbers.
pub fn gauss_jacobi(n: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let ab = alpha + beta;
    let a_coef = |j: usize| -> f64 {
        let j = j as f64;
        if j == 0.0 {
            (beta - alpha) / (ab + 2.0)
        } else {
            (beta * beta - alpha * alpha) / ((2.0 * j + ab) * (2.0 * j + ab + 2.0))
        }
    };
    let b_coef = |j: usize| -> f64 {
        let j = j as f64;
        let s = 2.0 * j + ab;
        (4.0 * j * (j + alpha) * (j + beta) * (j + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
    };
    let mu0 = 2f64.powf(ab + 1.0) * gamma(alpha + 1.0) * gamma(beta + 1.0) / gamma(ab + 2.0);

    let jm = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            a_coef(i)
        } else if i + 1 == j {
            b_coef(j)
        } else if j + 1 == i {
            b_coef(i)
        } else {
            0.0
        }
    });
    let mut nodes = jm.self_adjoint_eigenvalues(Side::Lower).expect("Jacobi matrix eigen-solve");

    // orthonormal p_0..p_n and derivative of p_n at x
    let eval = |x: f64| -> (Vec<f64>, f64) {
        let mut p = vec![0.0; n + 1];
        let mut dp = vec![0.0; n + 1];
        p[0] = 1.0 / mu0.sqrt();
        for j in 0..n {
            let prev = if j > 0 { p[j - 1] } else { 0.0 };
            let dprev = if j > 0 { dp[j - 1] } else { 0.0 };
            let bj = if j > 0 { b_coef(j) } else { 0.0 };
            let bn = b_coef(j + 1);
            p[j + 1] = ((x - a_coef(j)) * p[j] - bj * prev) / bn;
            dp[j + 1] = (p[j] + (x - a_coef(j)) * dp[j] - bj * dprev) / bn;
        }
        let d = dp[n];
        (p, d)
    };
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, d) = eval(*x);
            if d != 0.0 {
                *x -= p[n] / d;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (p, _) = eval(x);
            1.0 / p[..n].iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    (nodes, weights)
}

fn gamma(x: f64) -> f64 {
    // only integer and half-integer arguments >= 1 occur here
    if (x - x.round()).abs() < 1e-14 {
        (1..x.round() as u64).map(|i| i as f64).product()
    } else {
        let mut v = std::f64::consts::PI.sqrt();
        let mut t = 0.5;
        while t < x - 0.25 {
            v *= t;
            t += 1.0;
        }
        v
    }
}

/// Gauss-Legendre rule exact to degree `d` on `[-1, 1]`, with `ceil((d+1)/2)` points.
pub fn segment_rule(d: usize) -> QuadRule {
    let n = (d + 2) / 2;
    let (x, w) = gauss_jacobi(n, 0.0, 0.0);
    QuadRule { points: x.into_iter().map(|t| [t, 0.0]).collect(), weights: w, degree: d, kind: RuleKind::Segment }
}

/// Collapsed (Duffy) Gauss rule exact to degree `d` on the reference triangle.
///
/// Gauss-Legendre in the collapsed coordinate and Gauss-Jacobi(1,0) in the
/// other, so all weights are positive; `d <= 1` gives the centroid rule.
pub fn triangle_rule(d: usize) -> QuadRule {
    let n = (d + 2) / 2;
    let (xu, wu) = gauss_jacobi(n, 0.0, 0.0);
    let (xv, wv) = gauss_jacobi(n, 1.0, 0.0);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (tv, wv) in xv.iter().zip(&wv) {
        let v = 0.5 * (tv + 1.0);
        for (tu, wu) in xu.iter().zip(&wu) {
            let u = 0.5 * (tu + 1.0);
            points.push([u * (1.0 - v), v]);
            // du = dt/2, (1-v) dv = (1-t)/2 * dt/2
            weights.push(0.5 * wu * 0.25 * wv);
        }
    }
    QuadRule { points, weights, degree: d, kind: RuleKind::Triangle }
}

/// Legendre polynomials `L_0..L_k` at `xi`.
pub fn legendre(k: usize, xi: f64) -> Vec<f64> {
    let mut l = Vec::with_capacity(k + 1);
    l.push(1.0);
    if k >= 1 {
        l.push(xi);
    }
    for j in 1..k {
        let j_f = j as f64;
        l.push(((2.0 * j_f + 1.0) * xi * l[j] - j_f * l[j - 1]) / (j_f + 1.0));
    }
    l
}

/// Legendre basis of `P_k(e)` on an oriented edge, parameterized by
/// `xi in [-1, 1]` running from the edge's start to its end vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeBasis {
    pub start: Point,
    pub end: Point,
    pub degree: usize,
}

impl EdgeBasis {
    pub fn new(start: Point, end: Point, degree: usize) -> Self {
        Self { start, end, degree }
    }

    /// Arc-length coordinate of a point on the edge.
    pub fn xi(&self, p: Point) -> f64 {
        let d = [self.end[0] - self.start[0], self.end[1] - self.start[1]];
        let s = ((p[0] - self.start[0]) * d[0] + (p[1] - self.start[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1]);
        2.0 * s - 1.0
    }

    pub fn eval(&self, p: Point) -> Vec<f64> {
        legendre(self.degree, self.xi(p))
    }
}

/// Number of monomials of total degree `<= k` in two variables.
pub const fn dim_p(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponents of the scaled monomials, graded by total degree.
pub fn monomial_exponents(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim_p(k));
    for deg in 0..=k {
        for b in 0..=deg {
            out.push((deg - b, b));
        }
    }
    out
}

/// Orthonormal basis of `P_k(τ)` on a physical triangle, expressed in scaled
/// and centred monomials `((x - c_x)/l)^a ((y - c_y)/l)^b`.
///
/// Built by twice-repeated modified Gram-Schmidt in graded order, so the first
/// `dim_p(j)` members span `P_j(τ)` for every `j <= k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleBasis {
    pub degree: usize,
    pub center: Point,
    pub scale: f64,
    exps: Vec<(usize, usize)>,
    /// `coef[i][m]`: coefficient of monomial `m` in basis member `i`
    coef: Vec<Vec<f64>>,
}

impl TriangleBasis {
    pub fn new(tri: &[Point; 3], degree: usize) -> Self {
        let center = [(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0];
        let scale = crate::mesh::geometry::diameter(tri);
        let exps = monomial_exponents(degree);
        let m = exps.len();
        let mut basis = TriangleBasis { degree, center, scale, exps, coef: Vec::new() };

        let (pts, wts) = triangle_rule(2 * degree).on_triangle(tri);
        let mono: Vec<Vec<f64>> = pts.iter().map(|&p| basis.monomials(p)).collect();
        let mut gram = vec![vec![0.0; m]; m];
        for (mv, w) in mono.iter().zip(&wts) {
            for i in 0..m {
                for j in 0..m {
                    gram[i][j] += w * mv[i] * mv[j];
                }
            }
        }
        let inner = |u: &[f64], v: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..m {
                if u[i] == 0.0 {
                    continue;
                }
                for j in 0..m {
                    s += u[i] * gram[i][j] * v[j];
                }
            }
            s
        };
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
        for j in 0..m {
            let mut v = vec![0.0; m];
            v[j] = 1.0;
            for _ in 0..2 {
                for qi in &q {
                    let c = inner(&v, qi);
                    for (vv, qq) in v.iter_mut().zip(qi) {
                        *vv -= c * qq;
                    }
                }
            }
            let nrm = inner(&v, &v).sqrt();
            v.iter_mut().for_each(|x| *x /= nrm);
            q.push(v);
        }
        basis.coef = q;
        basis
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    fn monomials(&self, p: Point) -> Vec<f64> {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        self.exps.iter().map(|&(a, b)| x.powi(a as i32) * y.powi(b as i32)).collect()
    }

    /// Values `φ_i(p)`.
    pub fn values(&self, p: Point) -> Vec<f64> {
        let mono = self.monomials(p);
        self.coef.iter().map(|c| c.iter().zip(&mono).map(|(a, b)| a * b).sum()).collect()
    }

    /// Values and gradients `(φ_i(p), ∇φ_i(p))`.
    pub fn values_and_gradients(&self, p: Point) -> (Vec<f64>, Vec<Point>) {
        let x = (p[0] - self.center[0]) / self.scale;
        let y = (p[1] - self.center[1]) / self.scale;
        let pw = |t: f64, e: usize| if e == 0 { 1.0 } else { t.powi(e as i32) };
        let m = self.exps.len();
        let mut mv = vec![0.0; m];
        let mut mx = vec![0.0; m];
        let mut my = vec![0.0; m];
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            mv[i] = pw(x, a) * pw(y, b);
            mx[i] = if a > 0 { a as f64 * pw(x, a - 1) * pw(y, b) / self.scale } else { 0.0 };
            my[i] = if b > 0 { b as f64 * pw(x, a) * pw(y, b - 1) / self.scale } else { 0.0 };
        }
        let mut vals = vec![0.0; m];
        let mut grads = vec![[0.0; 2]; m];
        for (i, c) in self.coef.iter().enumerate() {
            for j in 0..m {
                vals[i] += c[j] * mv[j];
                grads[i][0] += c[j] * mx[j];
                grads[i][1] += c[j] * my[j];
            }
        }
        (vals, grads)
    }

    /// Value matrix `V[i][j] = φ_j(p_i)`.
    pub fn eval_matrix(&self, points: &[Point]) -> Vec<Vec<f64>> {
        points.iter().map(|&p| self.values(p)).collect()
    }
}
