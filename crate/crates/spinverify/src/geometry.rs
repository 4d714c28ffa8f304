//! Coordinate charts with metrics, orthonormal frames, Levi-Civita data,
//! curvature, and numerical exterior / Lie calculus.
//!
//! Derivatives default to central differences (O(h^2)); every built-in metric
//! also carries a closed-form Christoffel oracle so formula errors can be
//! separated from discretization error.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{comb_count, comb_rank, combinations};

pub type C64 = Complex64;

pub type MetricFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ChristoffelFn = Arc<dyn Fn(&[f64]) -> Christoffels + Send + Sync>;
pub type RiemannFn = Arc<dyn Fn(&[f64]) -> Riemann + Send + Sync>;
pub type VectorFieldFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ScalarFieldFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A scalar function of one variable with its derivative, used for warping
/// and conformal factors whose closed-form derivatives are known.
#[derive(Clone)]
pub struct Scalar1D {
    pub f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Scalar1D {
    pub fn new(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Scalar1D { f: Arc::new(f), df: Arc::new(df) }
    }

    pub fn constant(v: f64) -> Self {
        Scalar1D::new(move |_| v, |_| 0.0)
    }
}

/// Per-axis coordinate box. Evaluations outside (minus the stencil margin)
/// raise rather than clamp.
#[derive(Clone, Debug)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Domain { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64], margin: f64) -> bool {
        p.len() == self.lo.len()
            && p.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&x, (&lo, &hi))| x >= lo + margin && x <= hi - margin)
    }

    pub fn require(&self, p: &[f64], margin: f64) -> Result<()> {
        if self.contains(p, margin) {
            Ok(())
        } else {
            Err(Error::OutOfDomain { point: p.to_vec(), margin })
        }
    }
}

/// Christoffel symbols G^k_{ij}; index order (k, i, j).
#[derive(Clone, Debug)]
pub struct Christoffels {
    pub n: usize,
    data: Vec<f64>,
}

impl Christoffels {
    pub fn zeros(n: usize) -> Self {
        Christoffels { n, data: vec![0.0; n * n * n] }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.n + i) * self.n + j] = v;
    }
}

/// Curvature tensor R^l_{ijk}, convention R(d_i, d_j) d_k = R^l_{ijk} d_l.
#[derive(Clone, Debug)]
pub struct Riemann {
    pub n: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(n: usize) -> Self {
        Riemann { n, data: vec![0.0; n * n * n * n] }
    }

    #[inline]
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        self.data[((l * self.n + i) * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, l: usize, i: usize, j: usize, k: usize, v: f64) {
        self.data[((l * self.n + i) * self.n + j) * self.n + k] = v;
    }

    /// R(x, y) z as a coordinate vector.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for l in 0..n {
            let mut acc = 0.0;
            for i in 0..n {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    if y[j] == 0.0 {
                        continue;
                    }
                    for k in 0..n {
                        acc += self.get(l, i, j, k) * x[i] * y[j] * z[k];
                    }
                }
            }
            out[l] = acc;
        }
        out
    }
}

/// A coordinate chart with a smooth metric evaluator and optional closed-form
/// connection / curvature oracles.
#[derive(Clone)]
pub struct MetricChart {
    pub n: usize,
    pub domain: Domain,
    pub metric_at: MetricFn,
    pub christoffels_at: Option<ChristoffelFn>,
    pub riemann_at: Option<RiemannFn>,
}

pub fn shifted(p: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[axis] += delta;
    q
}

impl MetricChart {
    pub fn metric(&self, p: &[f64]) -> DMatrix<f64> {
        (self.metric_at)(p)
    }

    pub fn metric_inverse(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.metric(p)
            .try_inverse()
            .ok_or_else(|| Error::NumericalDegeneracy(format!("metric singular at {p:?}")))
    }

    /// Christoffel symbols, from the oracle when present, otherwise by central
    /// differences of the metric.
    pub fn christoffels(&self, p: &[f64], h: f64) -> Result<Christoffels> {
        if let Some(oracle) = &self.christoffels_at {
            self.domain.require(p, 0.0)?;
            return Ok(oracle(p));
        }
        self.domain.require(p, h)?;
        let n = self.n;
        let ginv = self.metric_inverse(p)?;
        // dg[a] = partial_a g
        let mut dg = Vec::with_capacity(n);
        for a in 0..n {
            let gp = self.metric(&shifted(p, a, h));
            let gm = self.metric(&shifted(p, a, -h));
            dg.push((gp - gm) / (2.0 * h));
        }
        let mut out = Christoffels::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0.0;
                    for l in 0..n {
                        acc += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    out.set(k, i, j, 0.5 * acc);
                }
            }
        }
        Ok(out)
    }

    /// Riemann, Ricci and scalar curvature at `p`, from central differences of
    /// the Christoffel symbols (which themselves use the oracle when present).
    pub fn curvature(&self, p: &[f64], h: f64) -> Result<(Riemann, DMatrix<f64>, f64)> {
        let n = self.n;
        self.domain.require(p, 2.0 * h)?;
        let gamma = self.christoffels(p, h)?;
        let mut dgamma = Vec::with_capacity(n);
        for a in 0..n {
            let gp = self.christoffels(&shifted(p, a, h), h)?;
            let gm = self.christoffels(&shifted(p, a, -h), h)?;
            let mut d = Christoffels::zeros(n);
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        d.set(k, i, j, (gp.get(k, i, j) - gm.get(k, i, j)) / (2.0 * h));
                    }
                }
            }
            dgamma.push(d);
        }
        let mut riem = Riemann::zeros(n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut v = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                        for m in 0..n {
                            v += gamma.get(l, i, m) * gamma.get(m, j, k)
                                - gamma.get(l, j, m) * gamma.get(m, i, k);
                        }
                        riem.set(l, i, j, k, v);
                    }
                }
            }
        }
        let mut ricci = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += riem.get(i, i, j, k);
                }
                ricci[(j, k)] = acc;
            }
        }
        let ginv = self.metric_inverse(p)?;
        let mut scalar = 0.0;
        for j in 0..n {
            for k in 0..n {
                scalar += ginv[(j, k)] * ricci[(j, k)];
            }
        }
        Ok((riem, ricci, scalar))
    }

    /// Sectional curvature of the plane spanned by coordinate vectors x, y.
    pub fn sectional(&self, p: &[f64], x: &[f64], y: &[f64], h: f64) -> Result<f64> {
        let (riem, _, _) = self.curvature(p, h)?;
        let g = self.metric(p);
        let rxyy = riem.apply(x, y, y);
        let num: f64 = (0..self.n)
            .map(|a| (0..self.n).map(|b| g[(a, b)] * rxyy[a] * x[b]).sum::<f64>())
            .sum();
        let gxx = quad(&g, x, x);
        let gyy = quad(&g, y, y);
        let gxy = quad(&g, x, y);
        let denom = gxx * gyy - gxy * gxy;
        if denom.abs() < 1e-14 {
            return Err(Error::NumericalDegeneracy("degenerate plane for sectional curvature".into()));
        }
        Ok(num / denom)
    }
}

pub fn quad(g: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
    let n = g.nrows();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += g[(a, b)] * x[a] * y[b];
        }
    }
    acc
}

/// Built-in metric families.
pub enum MetricSpec {
    Flat { n: usize, domain: Domain },
    /// k(t)^2 h + dt^2 with flat fiber h on R^(n-1); t is the last coordinate.
    Warped { fiber_dim: usize, k: Scalar1D, domain: Domain },
    /// a(x)^(-2) (dx^2 + dy^2), so that {a d_x, a d_y} is orthonormal.
    Conformal2D { a: Scalar1D, domain: Domain },
    /// Warped with k = e^(2 mu t); constant sectional curvature -4 mu^2.
    Hyperbolic { n: usize, mu: f64, domain: Domain },
}

fn check_positive_1d(f: &Scalar1D, lo: f64, hi: f64, what: &str) -> Result<()> {
    let samples = 64;
    for i in 0..=samples {
        let x = lo + (hi - lo) * (i as f64) / (samples as f64);
        if (f.f)(x) <= 0.0 {
            return Err(Error::InvalidMetric(format!("{what} is nonpositive at {x}")));
        }
    }
    Ok(())
}

fn warped_chart(fiber_dim: usize, k: Scalar1D, domain: Domain) -> Result<MetricChart> {
    let n = fiber_dim + 1;
    if domain.dim() != n {
        return Err(Error::InvalidMetric(format!(
            "domain dimension {} != {} for warped metric",
            domain.dim(),
            n
        )));
    }
    check_positive_1d(&k, domain.lo[n - 1], domain.hi[n - 1], "warping function k")?;
    let kf = k.clone();
    let metric: MetricFn = Arc::new(move |p: &[f64]| {
        let kv = (kf.f)(p[n - 1]);
        let mut g = DMatrix::<f64>::identity(n, n);
        for i in 0..n - 1 {
            g[(i, i)] = kv * kv;
        }
        g
    });
    let kc = k.clone();
    let christoffels: ChristoffelFn = Arc::new(move |p: &[f64]| {
        let t = p[n - 1];
        let kv = (kc.f)(t);
        let dk = (kc.df)(t);
        let mut c = Christoffels::zeros(n);
        for i in 0..n - 1 {
            c.set(n - 1, i, i, -kv * dk);
            c.set(i, n - 1, i, dk / kv);
            c.set(i, i, n - 1, dk / kv);
        }
        c
    });
    Ok(MetricChart {
        n,
        domain,
        metric_at: metric,
        christoffels_at: Some(christoffels),
        riemann_at: None,
    })
}

pub fn make_metric(spec: MetricSpec) -> Result<MetricChart> {
    match spec {
        MetricSpec::Flat { n, domain } => {
            if domain.dim() != n {
                return Err(Error::InvalidMetric("domain dimension mismatch".into()));
            }
            Ok(MetricChart {
                n,
                domain,
                metric_at: Arc::new(move |_| DMatrix::<f64>::identity(n, n)),
                christoffels_at: Some(Arc::new(move |_| Christoffels::zeros(n))),
                riemann_at: Some(Arc::new(move |_| Riemann::zeros(n))),
            })
        }
        MetricSpec::Warped { fiber_dim, k, domain } => warped_chart(fiber_dim, k, domain),
        MetricSpec::Conformal2D { a, domain } => {
            if domain.dim() != 2 {
                return Err(Error::InvalidMetric("conformal2d needs a 2d domain".into()));
            }
            check_positive_1d(&a, domain.lo[0], domain.hi[0], "conformal factor a")?;
            let af = a.clone();
            let metric: MetricFn = Arc::new(move |p: &[f64]| {
                let av = (af.f)(p[0]);
                DMatrix::<f64>::identity(2, 2) / (av * av)
            });
            let ac = a.clone();
            let christoffels: ChristoffelFn = Arc::new(move |p: &[f64]| {
                let av = (ac.f)(p[0]);
                let da = (ac.df)(p[0]);
                let r = da / av;
                let mut c = Christoffels::zeros(2);
                c.set(0, 0, 0, -r);
                c.set(0, 1, 1, r);
                c.set(1, 0, 1, -r);
                c.set(1, 1, 0, -r);
                c
            });
            Ok(MetricChart {
                n: 2,
                domain,
                metric_at: metric,
                christoffels_at: Some(christoffels),
                riemann_at: None,
            })
        }
        MetricSpec::Hyperbolic { n, mu, domain } => {
            let k = Scalar1D::new(move |t| (2.0 * mu * t).exp(), move |t| 2.0 * mu * (2.0 * mu * t).exp());
            let mut chart = warped_chart(n - 1, k, domain)?;
            let metric = chart.metric_at.clone();
            let kappa = -4.0 * mu * mu;
            chart.riemann_at = Some(Arc::new(move |p: &[f64]| {
                // Constant curvature: R(x, y) z = kappa (g(y, z) x - g(x, z) y).
                let g = metric(p);
                let mut r = Riemann::zeros(n);
                for l in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                let mut v = 0.0;
                                if l == i {
                                    v += kappa * g[(j, k)];
                                }
                                if l == j {
                                    v -= kappa * g[(i, k)];
                                }
                                if v != 0.0 {
                                    r.set(l, i, j, k, v);
                                }
                            }
                        }
                    }
                }
                r
            }));
            Ok(chart)
        }
    }
}

pub type FrameFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;
/// Derivative oracle: (point, axis) -> coordinate derivative of each frame vector.
pub type FrameDerivFn = Arc<dyn Fn(&[f64], usize) -> Vec<Vec<f64>> + Send + Sync>;

/// An orthonormal frame field over a chart.
#[derive(Clone)]
pub struct FrameField {
    pub chart: Arc<MetricChart>,
    pub frame_at: FrameFn,
    /// Exact coordinate derivatives of the frame vectors, when known.
    pub frame_deriv_at: Option<FrameDerivFn>,
    pub oriented: bool,
}

/// Gram-Schmidt on the coordinate basis in fixed index order. Deterministic;
/// positively oriented because the change-of-basis matrix is triangular with
/// positive diagonal.
pub fn orthonormal_frame(chart: Arc<MetricChart>) -> FrameField {
    let n = chart.n;
    let metric = chart.metric_at.clone();
    let frame_at: FrameFn = Arc::new(move |p: &[f64]| {
        let g = metric(p);
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            for e in &frame {
                let proj = quad(&g, &v, e);
                for (vb, eb) in v.iter_mut().zip(e) {
                    *vb -= proj * eb;
                }
            }
            let norm2 = quad(&g, &v, &v);
            assert!(norm2 > 1e-14, "degenerate metric in Gram-Schmidt at {p:?}");
            let inv = 1.0 / norm2.sqrt();
            for vb in &mut v {
                *vb *= inv;
            }
            frame.push(v);
        }
        frame
    });
    FrameField { chart, frame_at, frame_deriv_at: None, oriented: true }
}

impl FrameField {
    pub fn frame(&self, p: &[f64]) -> Vec<Vec<f64>> {
        (self.frame_at)(p)
    }

    fn frame_derivative(&self, p: &[f64], axis: usize, h: f64) -> Result<Vec<Vec<f64>>> {
        if let Some(oracle) = &self.frame_deriv_at {
            return Ok(oracle(p, axis));
        }
        self.chart.domain.require(p, h)?;
        let ep = self.frame(&shifted(p, axis, h));
        let em = self.frame(&shifted(p, axis, -h));
        Ok(ep
            .into_iter()
            .zip(em)
            .map(|(a, b)| a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
            .collect())
    }

    /// Converts a coordinate vector to frame components g(x, e_i).
    pub fn to_frame_components(&self, p: &[f64], x: &[f64]) -> Vec<f64> {
        let g = self.chart.metric(p);
        self.frame(p).iter().map(|e| quad(&g, x, e)).collect()
    }

    /// Converts frame components back to a coordinate vector.
    pub fn from_frame_components(&self, p: &[f64], xf: &[f64]) -> Vec<f64> {
        let frame = self.frame(p);
        let mut out = vec![0.0; self.chart.n];
        for (c, e) in xf.iter().zip(&frame) {
            for (o, eb) in out.iter_mut().zip(e) {
                *o += c * eb;
            }
        }
        out
    }
}

/// Connection coefficients c_{kij} = g(nabla_{e_k} e_i, e_j), index (k, i, j).
pub fn frame_connection(frame: &FrameField, p: &[f64], h: f64) -> Result<Vec<f64>> {
    let chart = &frame.chart;
    let n = chart.n;
    chart.domain.require(p, h)?;
    let e = frame.frame(p);
    let g = chart.metric(p);
    let gamma = chart.christoffels(p, h)?;
    let mut de = Vec::with_capacity(n);
    for a in 0..n {
        de.push(frame.frame_derivative(p, a, h)?);
    }
    let mut c = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            // nabla_{e_k} e_i in coordinates
            let mut cov = vec![0.0; n];
            for a in 0..n {
                let eka = e[k][a];
                if eka == 0.0 {
                    continue;
                }
                for b in 0..n {
                    let mut v = de[a][i][b];
                    for cc in 0..n {
                        v += gamma.get(b, a, cc) * e[i][cc];
                    }
                    cov[b] += eka * v;
                }
            }
            for j in 0..n {
                c[(k * n + i) * n + j] = quad(&g, &cov, &e[j]);
            }
        }
    }
    Ok(c)
}

pub type FormValueFn = Arc<dyn Fn(&[f64]) -> Vec<C64> + Send + Sync>;

/// A p-form field; values are antisymmetric coefficients on strictly
/// increasing coordinate index tuples, lexicographic order.
#[derive(Clone)]
pub struct FormField {
    pub n: usize,
    pub degree: usize,
    pub value_at: FormValueFn,
}

impl FormField {
    pub fn zero(n: usize, degree: usize) -> Self {
        let len = comb_count(n, degree);
        FormField { n, degree, value_at: Arc::new(move |_| vec![C64::new(0.0, 0.0); len]) }
    }

    pub fn value(&self, p: &[f64]) -> Vec<C64> {
        (self.value_at)(p)
    }

    /// Evaluates the form on coordinate 1-form components of a vector
    /// (degree 1 only).
    pub fn pair_vector(&self, p: &[f64], x: &[f64]) -> C64 {
        assert_eq!(self.degree, 1);
        self.value(p).iter().zip(x).map(|(c, &xi)| c * xi).sum()
    }
}

/// Exterior derivative by central differences: O(h^2) for smooth forms.
pub fn exterior_derivative(form: &FormField, domain: &Domain, p: &[f64], h: f64) -> Result<Vec<C64>> {
    domain.require(p, h)?;
    let n = form.n;
    let p_deg = form.degree;
    if p_deg >= n {
        return Ok(vec![]);
    }
    let tuples = combinations(n, p_deg + 1);
    let vp: Vec<Vec<C64>> = (0..n).map(|a| (form.value_at)(&shifted(p, a, h))).collect();
    let vm: Vec<Vec<C64>> = (0..n).map(|a| (form.value_at)(&shifted(p, a, -h))).collect();
    let mut out = Vec::with_capacity(tuples.len());
    for tuple in &tuples {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &axis) in tuple.iter().enumerate() {
            let rest: Vec<usize> =
                tuple.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &t)| t).collect();
            let idx = comb_rank(n, &rest);
            let d = (vp[axis][idx] - vm[axis][idx]) / (2.0 * h);
            if k % 2 == 0 {
                acc += d;
            } else {
                acc -= d;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Wedge of a (real-coefficient) 1-form with a p-form, both in coordinate
/// coefficients on increasing tuples.
pub fn wedge_1form(n: usize, one: &[C64], p_deg: usize, omega: &[C64]) -> Vec<C64> {
    let tuples = combinations(n, p_deg + 1);
    let mut out = Vec::with_capacity(tuples.len());
    for tuple in &tuples {
        let mut acc = C64::new(0.0, 0.0);
        for (k, &axis) in tuple.iter().enumerate() {
            let rest: Vec<usize> =
                tuple.iter().enumerate().filter(|&(m, _)| m != k).map(|(_, &t)| t).collect();
            let idx = comb_rank(n, &rest);
            let term = one[axis] * omega[idx];
            if k % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        out.push(acc);
    }
    out
}

/// (L_V g)_{ab} = V^c d_c g_{ab} + g_{cb} d_a V^c + g_{ac} d_b V^c.
pub fn lie_derivative_metric(
    chart: &MetricChart,
    v: &VectorFieldFn,
    p: &[f64],
    h: f64,
) -> Result<DMatrix<f64>> {
    chart.domain.require(p, h)?;
    let n = chart.n;
    let g = chart.metric(p);
    let vp = v(p);
    let mut dg = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    for a in 0..n {
        let pp = shifted(p, a, h);
        let pm = shifted(p, a, -h);
        dg.push((chart.metric(&pp) - chart.metric(&pm)) / (2.0 * h));
        let vpp = v(&pp);
        let vpm = v(&pm);
        dv.push(
            vpp.iter().zip(&vpm).map(|(x, y)| (x - y) / (2.0 * h)).collect::<Vec<f64>>(),
        );
    }
    let mut out = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let mut acc = 0.0;
            for c in 0..n {
                acc += vp[c] * dg[c][(a, b)] + g[(c, b)] * dv[a][c] + g[(a, c)] * dv[b][c];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Metric-raised differential of f.
pub fn gradient(chart: &MetricChart, f: &ScalarFieldFn, p: &[f64], h: f64) -> Result<Vec<f64>> {
    chart.domain.require(p, h)?;
    let n = chart.n;
    let df: Vec<f64> = (0..n)
        .map(|a| (f(&shifted(p, a, h)) - f(&shifted(p, a, -h))) / (2.0 * h))
        .collect();
    let ginv = chart.metric_inverse(p)?;
    Ok((0..n).map(|a| (0..n).map(|b| ginv[(a, b)] * df[b]).sum()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(n: usize) -> Arc<MetricChart> {
        Arc::new(make_metric(MetricSpec::Flat { n, domain: Domain::cube(n, -1.0, 1.0) }).unwrap())
    }

    #[test]
    fn flat_metric_and_frame() {
        let chart = flat(3);
        let p = [0.2, -0.3, 0.1];
        assert_eq!(chart.metric(&p), DMatrix::<f64>::identity(3, 3));
        let frame = orthonormal_frame(chart.clone());
        let e = frame.frame(&p);
        for (i, ei) in e.iter().enumerate() {
            for (j, &v) in ei.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-14);
            }
        }
        let c = frame_connection(&frame, &p, 1e-3).unwrap();
        assert!(c.iter().all(|&x| x.abs() <= 1e-12));
        let (_, ricci, s) = chart.curvature(&p, 1e-3).unwrap();
        assert!(ricci.iter().all(|&x| x.abs() <= 1e-9));
        assert!(s.abs() <= 1e-9);
    }

    #[test]
    fn warped_unit_k_is_product_metric() {
        let chart = make_metric(MetricSpec::Warped {
            fiber_dim: 2,
            k: Scalar1D::constant(1.0),
            domain: Domain::cube(3, -1.0, 1.0),
        })
        .unwrap();
        let g = chart.metric(&[0.1, 0.2, 0.3]);
        assert_eq!(g, DMatrix::<f64>::identity(3, 3));
    }

    #[test]
    fn warped_slice_mean_curvature_pattern() {
        // g(nabla_{e_i} e_i, d_t) = -k'/k for fiber directions e_i.
        let k = Scalar1D::new(|t| 2.0 + t.sin(), |t| t.cos());
        let chart = Arc::new(
            make_metric(MetricSpec::Warped { fiber_dim: 2, k: k.clone(), domain: Domain::cube(3, -1.0, 1.0) })
                .unwrap(),
        );
        let frame = orthonormal_frame(chart.clone());
        let p = [0.3, -0.2, 0.4];
        let c = frame_connection(&frame, &p, 1e-3).unwrap();
        let n = 3;
        let expect = -(k.df)(p[2]) / (k.f)(p[2]);
        for i in 0..2 {
            let got = c[(i * n + i) * n + 2]; // c_{i i t}, with e_t = d_t
            assert!((got - expect).abs() <= 1e-6, "got {got}, expect {expect}");
        }
        // d_t is a frame vector of the block metric, exactly.
        let e = frame.frame(&p);
        assert!((e[2][2] - 1.0).abs() <= 1e-14 && e[2][0].abs() <= 1e-14);
    }

    #[test]
    fn conformal2d_frame_and_connection() {
        let a = Scalar1D::new(|x| 1.5 + 0.3 * x.sin(), |x| 0.3 * x.cos());
        let chart = Arc::new(
            make_metric(MetricSpec::Conformal2D { a: a.clone(), domain: Domain::cube(2, -1.0, 1.0) })
                .unwrap(),
        );
        let frame = orthonormal_frame(chart.clone());
        let p = [0.4, -0.1];
        let av = (a.f)(p[0]);
        let e = frame.frame(&p);
        assert!((e[0][0] - av).abs() <= 1e-12 && e[0][1].abs() <= 1e-14);
        assert!((e[1][1] - av).abs() <= 1e-12 && e[1][0].abs() <= 1e-14);
        // g(nabla_{e_2} e_1, e_2) = -a'(x)
        let c = frame_connection(&frame, &p, 1e-3).unwrap();
        let n = 2;
        let got = c[(1 * n + 0) * n + 1];
        assert!((got + (a.df)(p[0])).abs() <= 1e-6, "got {got}");
        // antisymmetry in the last two slots
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let s = c[(k * n + i) * n + j] + c[(k * n + j) * n + i];
                    assert!(s.abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn hyperbolic_curvature_constants() {
        let n = 3;
        let mu = 0.3;
        let chart = Arc::new(
            make_metric(MetricSpec::Hyperbolic { n, mu, domain: Domain::cube(n, -1.0, 1.0) }).unwrap(),
        );
        let points = [[0.0, 0.0, 0.0], [0.3, -0.2, 0.1], [-0.5, 0.4, -0.3], [0.2, 0.2, 0.5], [-0.1, -0.4, -0.2]];
        for p in &points {
            // sectional curvature -4 mu^2 on coordinate planes
            for (i, j) in [(0usize, 1usize), (0, 2), (1, 2)] {
                let mut x = vec![0.0; n];
                x[i] = 1.0;
                let mut y = vec![0.0; n];
                y[j] = 1.0;
                let sec = chart.sectional(p, &x, &y, 1e-3).unwrap();
                let expect = -4.0 * mu * mu;
                assert!(((sec - expect) / expect).abs() <= 1e-4, "sec {sec} at {p:?}");
            }
            let (_, ricci, s) = chart.curvature(p, 1e-3).unwrap();
            let g = chart.metric(p);
            let expect_ric = -4.0 * (n as f64 - 1.0) * mu * mu;
            for a in 0..n {
                for b in 0..n {
                    let want = expect_ric * g[(a, b)];
                    let got = ricci[(a, b)];
                    if want.abs() > 1e-12 {
                        assert!(((got - want) / want).abs() <= 1e-4);
                    } else {
                        assert!(got.abs() <= 1e-6);
                    }
                }
            }
            let expect_s = -4.0 * (n as f64) * (n as f64 - 1.0) * mu * mu;
            assert!(((s - expect_s) / expect_s).abs() <= 1e-4);
        }
    }

    #[test]
    fn riemann_oracle_matches_fd() {
        let n = 3;
        let mu = 0.25;
        let chart = Arc::new(
            make_metric(MetricSpec::Hyperbolic { n, mu, domain: Domain::cube(n, -1.0, 1.0) }).unwrap(),
        );
        let p = [0.1, -0.2, 0.3];
        let oracle = chart.riemann_at.as_ref().unwrap()(&p);
        let mut errs = Vec::new();
        for &h in &[2e-3, 1e-3] {
            let (fd, _, _) = chart.curvature(&p, h).unwrap();
            let mut maxe = 0.0f64;
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            maxe = maxe.max((fd.get(l, i, j, k) - oracle.get(l, i, j, k)).abs());
                        }
                    }
                }
            }
            errs.push(maxe);
        }
        let order = (errs[0] / errs[1]).log2();
        assert!(order >= 1.9, "order {order}, errs {errs:?}");
    }

    #[test]
    fn exterior_derivative_basics() {
        let domain = Domain::cube(2, -1.0, 1.0);
        // constant 1-form
        let constant = FormField {
            n: 2,
            degree: 1,
            value_at: Arc::new(|_| vec![C64::new(1.0, 0.0), C64::new(-2.0, 0.0)]),
        };
        let d = exterior_derivative(&constant, &domain, &[0.1, 0.2], 1e-3).unwrap();
        assert!(d[0].norm() <= 1e-10);
        // f = x^2: df = 2x dx, FD exact for quadratics
        let f = FormField {
            n: 2,
            degree: 0,
            value_at: Arc::new(|p: &[f64]| vec![C64::new(p[0] * p[0], 0.0)]),
        };
        let df = exterior_derivative(&f, &domain, &[0.3, 0.0], 1e-3).unwrap();
        assert!((df[0] - C64::new(0.6, 0.0)).norm() <= 1e-10 && df[1].norm() <= 1e-12);
        // d(df) = 0 for f = sin(x)cos(y), at O(h^2)
        let df_field = FormField {
            n: 2,
            degree: 1,
            value_at: Arc::new(|p: &[f64]| {
                vec![
                    C64::new(p[0].cos() * p[1].cos(), 0.0),
                    C64::new(-p[0].sin() * p[1].sin(), 0.0),
                ]
            }),
        };
        let ddf = exterior_derivative(&df_field, &domain, &[0.2, -0.3], 1e-3).unwrap();
        assert!(ddf[0].norm() <= 1e-6);
    }

    #[test]
    fn lie_derivative_and_gradient_basics() {
        let chart = flat(2);
        let p = [0.3, -0.4];
        // constant field
        let v: VectorFieldFn = Arc::new(|_| vec![0.7, -0.2]);
        let l = lie_derivative_metric(&chart, &v, &p, 1e-3).unwrap();
        assert!(l.iter().all(|&x| x.abs() <= 1e-12));
        // Euler field: L_V g = 2 g
        let euler: VectorFieldFn = Arc::new(|p: &[f64]| p.to_vec());
        let l2 = lie_derivative_metric(&chart, &euler, &p, 1e-3).unwrap();
        assert!((l2 - DMatrix::<f64>::identity(2, 2) * 2.0).iter().all(|&x| x.abs() <= 1e-10));
        // gradient of a linear function
        let f: ScalarFieldFn = Arc::new(|p: &[f64]| 3.0 * p[0] - 2.0 * p[1]);
        let grad = gradient(&chart, &f, &p, 1e-3).unwrap();
        assert!((grad[0] - 3.0).abs() <= 1e-10 && (grad[1] + 2.0).abs() <= 1e-10);
    }

    #[test]
    fn gradient_of_t_on_warped_chart_is_unit_normal() {
        let chart = Arc::new(
            make_metric(MetricSpec::Warped {
                fiber_dim: 2,
                k: Scalar1D::new(|t| 2.0 + t.sin(), |t| t.cos()),
                domain: Domain::cube(3, -1.0, 1.0),
            })
            .unwrap(),
        );
        let f: ScalarFieldFn = Arc::new(|p: &[f64]| p[2]);
        let grad = gradient(&chart, &f, &[0.1, 0.2, -0.3], 1e-3).unwrap();
        assert!(grad[0].abs() <= 1e-10 && grad[1].abs() <= 1e-10 && (grad[2] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn metric_positivity_is_enforced() {
        let bad = make_metric(MetricSpec::Warped {
            fiber_dim: 1,
            k: Scalar1D::new(|t| t, |_| 1.0), // vanishes at t = 0
            domain: Domain::cube(2, -1.0, 1.0),
        });
        assert!(matches!(bad, Err(Error::InvalidMetric(_))));
    }

    #[test]
    fn out_of_domain_is_an_error() {
        let chart = flat(2);
        let r = chart.christoffels(&[0.9999, 0.0], 1e-3);
        // christoffel oracle present for flat, so use curvature which needs a stencil
        assert!(r.is_ok());
        let f: ScalarFieldFn = Arc::new(|p: &[f64]| p[0]);
        assert!(matches!(
            gradient(&chart, &f, &[1.0, 0.0], 1e-3),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn fd_christoffels_match_oracle() {
        // strip the oracle and compare
        let a = Scalar1D::new(|x| 1.5 + 0.3 * x.sin(), |x| 0.3 * x.cos());
        let with = make_metric(MetricSpec::Conformal2D { a, domain: Domain::cube(2, -1.0, 1.0) }).unwrap();
        let mut without = with.clone();
        without.christoffels_at = None;
        let p = [0.3, 0.1];
        let co = with.christoffels(&p, 1e-3).unwrap();
        let mut errs = Vec::new();
        for &h in &[2e-3, 1e-3] {
            let cf = without.christoffels(&p, h).unwrap();
            let mut maxe = 0.0f64;
            for k in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        maxe = maxe.max((co.get(k, i, j) - cf.get(k, i, j)).abs());
                        // torsion-freeness of the FD path
                        assert!((cf.get(k, i, j) - cf.get(k, j, i)).abs() <= 1e-12);
                    }
                }
            }
            errs.push(maxe);
        }
        assert!((errs[0] / errs[1]).log2() >= 1.9, "errs {errs:?}");
    }
}
