//! The Spin^c covariant derivative with auxiliary connection, the Dirac
//! operator, the connection Laplacian, and the two curvature identities as
//! residual evaluators.
//!
//! In a local trivialization the covariant derivative is
//!   nabla_X psi = X(psi) + 1/4 sum_j e_j . (nabla_X e_j) . psi + (i/2) alpha(X) psi,
//! where alpha is the (real) connection 1-form of the auxiliary line bundle
//! and its curvature 2-form is Omega = d alpha.

use std::sync::Arc;

use num_complex::Complex64;

use crate::clifford::{SpinorRep, Spinor};
use crate::error::Result;
use crate::forms::{comb_rank, combinations};
use crate::geometry::{
    exterior_derivative, frame_connection, shifted, FormField, FrameField, MetricChart,
};

pub type C64 = Complex64;

/// Local Spin^c data: chart + orthonormal frame + representation + auxiliary
/// connection 1-form (the bundle connection is A = i alpha).
pub struct SpincData {
    pub chart: Arc<MetricChart>,
    pub frame: FrameField,
    pub rep: Arc<SpinorRep>,
    /// Real 1-form in coordinate components.
    pub alpha: FormField,
}

impl SpincData {
    /// Auxiliary curvature Omega = d alpha, coordinate 2-form coefficients.
    pub fn omega_at(&self, p: &[f64], h: f64) -> Result<Vec<C64>> {
        exterior_derivative(&self.alpha, &self.chart.domain, p, h)
    }

    /// Omega in frame components on increasing frame index pairs.
    pub fn omega_frame(&self, p: &[f64], h: f64) -> Result<Vec<C64>> {
        let n = self.chart.n;
        let coord = self.omega_at(p, h)?;
        let e = self.frame.frame(p);
        let pairs = combinations(n, 2);
        let mut out = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            let (i, j) = (pair[0], pair[1]);
            let mut acc = C64::new(0.0, 0.0);
            for (r, ab) in pairs.iter().enumerate() {
                let (a, b) = (ab[0], ab[1]);
                acc += coord[r] * (e[i][a] * e[j][b] - e[i][b] * e[j][a]);
            }
            out.push(acc);
        }
        Ok(out)
    }
}

type SpinorValueFn = Arc<dyn Fn(&[f64]) -> Spinor + Send + Sync>;
type SpinorDerivFn = Arc<dyn Fn(&[f64], usize) -> Spinor + Send + Sync>;

/// A smooth spinor field over a chart; coefficients are taken with respect to
/// the frame's trivialization. Fields built analytically carry exact
/// coordinate-derivative evaluators; derived fields fall back to central
/// differences.
#[derive(Clone)]
pub struct SpinorField {
    pub spinc: Arc<SpincData>,
    pub value_at: SpinorValueFn,
    pub exact_dir_deriv: Option<SpinorDerivFn>,
}

impl SpinorField {
    pub fn new(spinc: Arc<SpincData>, value_at: SpinorValueFn) -> Self {
        SpinorField { spinc, value_at, exact_dir_deriv: None }
    }

    pub fn value(&self, p: &[f64]) -> Spinor {
        (self.value_at)(p)
    }

    /// Coordinate partial derivative of the coefficient functions.
    pub fn partial(&self, p: &[f64], axis: usize, h: f64) -> Result<Spinor> {
        if let Some(exact) = &self.exact_dir_deriv {
            return Ok(exact(p, axis));
        }
        self.spinc.chart.domain.require(p, h)?;
        let a = self.value(&shifted(p, axis, h));
        let b = self.value(&shifted(p, axis, -h));
        Ok((a - b) / C64::new(2.0 * h, 0.0))
    }

    /// A field with the exact-derivative path disabled (used by tests and
    /// convergence studies of the finite-difference path).
    pub fn without_exact_derivatives(&self) -> Self {
        SpinorField { spinc: self.spinc.clone(), value_at: self.value_at.clone(), exact_dir_deriv: None }
    }
}

/// nabla_X psi at `p`, with X in coordinate components.
pub fn covariant_derivative(field: &SpinorField, x: &[f64], p: &[f64], h: f64) -> Result<Spinor> {
    let spinc = &field.spinc;
    let rep = &spinc.rep;
    let n = spinc.chart.n;
    let psi = field.value(p);

    // X(psi): directional derivative of the coefficients.
    let mut out = Spinor::zeros(rep.dim_sigma);
    for (a, &xa) in x.iter().enumerate() {
        if xa != 0.0 {
            out += field.partial(p, a, h)? * C64::new(xa, 0.0);
        }
    }

    // 1/4 sum_j e_j . (nabla_X e_j) . psi using c_{kij} = g(nabla_{e_k} e_i, e_j).
    let c = frame_connection(&spinc.frame, p, h)?;
    let xf = spinc.frame.to_frame_components(p, x);
    for j in 0..n {
        let mut w = vec![0.0; n];
        for i in 0..n {
            for (k, &xfk) in xf.iter().enumerate() {
                w[i] += xfk * c[(k * n + j) * n + i];
            }
        }
        let inner = rep.apply_vector(&w, &psi)?;
        out += rep.apply_vector_frame_axis(j, &inner) * C64::new(0.25, 0.0);
    }

    // (i/2) alpha(X) psi
    let alpha_x = spinc.alpha.pair_vector(p, x);
    out += psi * (C64::new(0.0, 0.5) * alpha_x);
    Ok(out)
}

impl SpinorRep {
    /// gamma_j applied to psi (frame basis vector action), panic-free helper.
    pub fn apply_vector_frame_axis(&self, j: usize, psi: &Spinor) -> Spinor {
        &self.gammas[j] * psi
    }
}

/// D psi = sum_j e_j . nabla_{e_j} psi.
pub fn dirac(field: &SpinorField, p: &[f64], h: f64) -> Result<Spinor> {
    let spinc = &field.spinc;
    let e = spinc.frame.frame(p);
    let mut out = Spinor::zeros(spinc.rep.dim_sigma);
    for (j, ej) in e.iter().enumerate() {
        let cd = covariant_derivative(field, ej, p, h)?;
        out += spinc.rep.apply_vector_frame_axis(j, &cd);
    }
    Ok(out)
}

fn derived_field(base: &SpinorField, f: impl Fn(&[f64]) -> Spinor + Send + Sync + 'static) -> SpinorField {
    SpinorField::new(base.spinc.clone(), Arc::new(f))
}

/// nabla* nabla psi = - sum_j (nabla_{e_j} nabla_{e_j} psi - nabla_{nabla_{e_j} e_j} psi).
pub fn connection_laplacian(field: &SpinorField, p: &[f64], h: f64) -> Result<Spinor> {
    let spinc = field.spinc.clone();
    let n = spinc.chart.n;
    let mut out = Spinor::zeros(spinc.rep.dim_sigma);
    let c = frame_connection(&spinc.frame, p, h)?;
    let e = spinc.frame.frame(p);
    for j in 0..n {
        // field q -> nabla_{e_j(q)} psi(q)
        let inner_field = {
            let f = field.clone();
            derived_field(field, move |q| {
                let ejq = f.spinc.frame.frame(q)[j].clone();
                covariant_derivative(&f, &ejq, q, h).expect("inner covariant derivative")
            })
        };
        let second = covariant_derivative(&inner_field, &e[j], p, h)?;
        // nabla_{e_j} e_j in coordinates, via frame components c_{jji}
        let zf: Vec<f64> = (0..n).map(|i| c[(j * n + j) * n + i]).collect();
        let z = spinc.frame.from_frame_components(p, &zf);
        let corr = covariant_derivative(field, &z, p, h)?;
        out += corr - second;
    }
    Ok(out)
}

/// Residual of D^2 psi = nabla* nabla psi + (S/4) psi + (i/2) Omega . psi.
pub fn sl_residual(field: &SpinorField, p: &[f64], h: f64) -> Result<Spinor> {
    let spinc = field.spinc.clone();
    let d_field = {
        let f = field.clone();
        derived_field(field, move |q| dirac(&f, q, h).expect("inner Dirac"))
    };
    let d2 = dirac(&d_field, p, h)?;
    let lap = connection_laplacian(field, p, h)?;
    let (_, _, s) = spinc.chart.curvature(p, h)?;
    let psi = field.value(p);
    let omega = spinc.omega_frame(p, h)?;
    let omega_psi = spinc.rep.apply_form(2, &omega, &psi)?;
    Ok(d2 - lap - psi * C64::new(0.25 * s, 0.0) - omega_psi * C64::new(0.0, 0.5))
}

/// Spinor curvature R(x, y) psi as the commutator of covariant derivatives in
/// coordinate directions (coordinate fields commute, so no bracket term).
pub fn spinor_curvature(field: &SpinorField, a: usize, b: usize, p: &[f64], h: f64) -> Result<Spinor> {
    let n = field.spinc.chart.n;
    let mk_axis = |axis: usize| {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        v
    };
    let ea = mk_axis(a);
    let eb = mk_axis(b);
    let f1 = {
        let f = field.clone();
        let eb = eb.clone();
        derived_field(field, move |q| covariant_derivative(&f, &eb, q, h).expect("nabla_b psi"))
    };
    let f2 = {
        let f = field.clone();
        let ea = ea.clone();
        derived_field(field, move |q| covariant_derivative(&f, &ea, q, h).expect("nabla_a psi"))
    };
    let ab = covariant_derivative(&f1, &ea, p, h)?;
    let ba = covariant_derivative(&f2, &eb, p, h)?;
    Ok(ab - ba)
}

/// Residual of the Ricci identity
///   sum_j e_j . R(e_j, X) psi - 1/2 Ric(X) . psi + (i/2) (X -| Omega) . psi.
pub fn ricci_identity_residual(field: &SpinorField, x: &[f64], p: &[f64], h: f64) -> Result<Spinor> {
    let spinc = field.spinc.clone();
    let n = spinc.chart.n;
    let rep = &spinc.rep;
    let e = spinc.frame.frame(p);

    // Curvature action on coordinate pairs, then contract with (e_j, X).
    let pairs = combinations(n, 2);
    let mut t = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        t.push(spinor_curvature(field, pair[0], pair[1], p, h)?);
    }
    let mut sum = Spinor::zeros(rep.dim_sigma);
    for j in 0..n {
        let mut r_ejx = Spinor::zeros(rep.dim_sigma);
        for (r, pair) in pairs.iter().enumerate() {
            let (a, b) = (pair[0], pair[1]);
            let coeff = e[j][a] * x[b] - e[j][b] * x[a];
            if coeff != 0.0 {
                r_ejx += &t[r] * C64::new(coeff, 0.0);
            }
        }
        sum += rep.apply_vector_frame_axis(j, &r_ejx);
    }

    let psi = field.value(p);

    // Ric(X) as a frame vector.
    let (_, ricci, _) = spinc.chart.curvature(p, h)?;
    let ginv = spinc.chart.metric_inverse(p)?;
    let mut ric_x = vec![0.0; n];
    for a in 0..n {
        for b in 0..n {
            for cidx in 0..n {
                ric_x[a] += ginv[(a, b)] * ricci[(b, cidx)] * x[cidx];
            }
        }
    }
    let ric_xf = spinc.frame.to_frame_components(p, &ric_x);
    let ric_term = rep.apply_vector(&ric_xf, &psi)?;

    // (X -| Omega) in frame components.
    let omega = spinc.omega_frame(p, h)?;
    let xf = spinc.frame.to_frame_components(p, x);
    let mut contraction = vec![C64::new(0.0, 0.0); n];
    for (r, pair) in combinations(n, 2).iter().enumerate() {
        let (i, j) = (pair[0], pair[1]);
        contraction[j] += omega[r] * xf[i];
        contraction[i] -= omega[r] * xf[j];
    }
    let contr_term = rep.apply_vector_c(&contraction, &psi)?;

    Ok(sum - ric_term * C64::new(0.5, 0.0) + contr_term * C64::new(0.0, 0.5))
}

/// Interior product of a frame vector (frame components) with a frame 2-form.
pub fn contract_2form(n: usize, omega: &[C64], xf: &[f64]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (r, pair) in combinations(n, 2).iter().enumerate() {
        let (i, j) = (pair[0], pair[1]);
        out[j] += omega[r] * xf[i];
        out[i] -= omega[r] * xf[j];
    }
    debug_assert_eq!(comb_rank(n, &[0, 1]), 0);
    out
}
