//! The generalized Killing equation nabla_X psi = K X . psi, its associated
//! p-forms, the vector field V, the invariant q = f^2 - |V|^2, type
//! classification, and residual evaluators for the related identities.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::clifford::{inner, Spinor};
use crate::error::{Error, Result};
use crate::forms::combinations;
use crate::geometry::{
    exterior_derivative, gradient, lie_derivative_metric, shifted, FormField, ScalarFieldFn,
    VectorFieldFn,
};
use crate::spinc::{covariant_derivative, SpinorField};

pub type C64 = Complex64;

/// K = a + i b as a pair of real scalar fields.
#[derive(Clone)]
pub struct KillingFunction {
    pub a: ScalarFieldFn,
    pub b: ScalarFieldFn,
}

impl KillingFunction {
    pub fn zero() -> Self {
        KillingFunction { a: Arc::new(|_| 0.0), b: Arc::new(|_| 0.0) }
    }

    pub fn imaginary(b: ScalarFieldFn) -> Self {
        KillingFunction { a: Arc::new(|_| 0.0), b }
    }

    pub fn value(&self, p: &[f64]) -> C64 {
        C64::new((self.a)(p), (self.b)(p))
    }
}

/// A spinor field paired with its claimed Killing function.
#[derive(Clone)]
pub struct KillingCandidate {
    pub field: SpinorField,
    pub kf: KillingFunction,
}

/// nabla_X psi - K X . psi at `p`, with X in coordinate components.
pub fn killing_residual(cand: &KillingCandidate, x: &[f64], p: &[f64], h: f64) -> Result<Spinor> {
    let cd = covariant_derivative(&cand.field, x, p, h)?;
    let spinc = &cand.field.spinc;
    let xf = spinc.frame.to_frame_components(p, x);
    let xpsi = spinc.rep.apply_vector(&xf, &cand.field.value(p))?;
    Ok(cd - xpsi * cand.kf.value(p))
}

/// Per-direction Killing-function fit K_j = <nabla_{e_j} psi, e_j . psi> / |e_j . psi|^2.
pub struct KillingFit {
    pub per_direction: Vec<C64>,
    pub mean: C64,
    /// Maximum pairwise deviation between directions; near zero for a genuine
    /// Killing field.
    pub max_deviation: f64,
}

pub fn fit_killing_function(field: &SpinorField, p: &[f64], h: f64) -> Result<KillingFit> {
    let spinc = &field.spinc;
    let psi = field.value(p);
    if psi.norm() <= 1e-14 {
        return Err(Error::ZeroSpinor(p.to_vec()));
    }
    let e = spinc.frame.frame(p);
    let mut per = Vec::with_capacity(spinc.chart.n);
    for (j, ej) in e.iter().enumerate() {
        let cd = covariant_derivative(field, ej, p, h)?;
        let ejpsi = spinc.rep.apply_vector_frame_axis(j, &psi);
        let denom = ejpsi.norm_squared();
        per.push(inner(&cd, &ejpsi)? / C64::new(denom, 0.0));
    }
    let mean = per.iter().sum::<C64>() / C64::new(per.len() as f64, 0.0);
    let mut max_dev = 0.0f64;
    for i in 0..per.len() {
        for j in i + 1..per.len() {
            max_dev = max_dev.max((per[i] - per[j]).norm());
        }
    }
    Ok(KillingFit { per_direction: per, mean, max_deviation: max_dev })
}

/// omega_p(X_1..X_p) = <(X_1 ^ ... ^ X_p) . psi, psi>, or the bar variant
/// <X_1 . ... . X_p . psi, bar(psi)> (n even). Vectors in coordinate components.
pub fn p_form(
    field: &SpinorField,
    p_deg: usize,
    use_bar: bool,
    vectors: &[Vec<f64>],
    p: &[f64],
) -> Result<C64> {
    let spinc = &field.spinc;
    let rep = &spinc.rep;
    let n = spinc.chart.n;
    if p_deg > n {
        return Err(Error::ShapeMismatch(format!("form degree {p_deg} exceeds dimension {n}")));
    }
    if vectors.len() != p_deg {
        return Err(Error::ShapeMismatch(format!(
            "expected {} vectors for a {}-form, got {}",
            p_deg,
            p_deg,
            vectors.len()
        )));
    }
    let psi = field.value(p);
    let rhs = if use_bar { rep.bar(&psi)? } else { psi.clone() };
    if p_deg == 0 {
        return inner(&psi, &rhs);
    }
    let vf: Vec<Vec<f64>> =
        vectors.iter().map(|v| spinc.frame.to_frame_components(p, v)).collect();
    // Antisymmetric frame coefficients: coeff on (i_1 < ... < i_p) is
    // det [ vf[c][i_r] ]_{r, c}.
    let tuples = combinations(n, p_deg);
    let mut coeffs = Vec::with_capacity(tuples.len());
    for tuple in &tuples {
        let m = DMatrix::<f64>::from_fn(p_deg, p_deg, |r, c| vf[c][tuple[r]]);
        coeffs.push(C64::new(m.determinant(), 0.0));
    }
    inner(&rep.apply_form(p_deg, &coeffs, &psi)?, &rhs)
}

/// omega_p as a coordinate p-form field (coefficients on increasing
/// coordinate tuples), suitable for the exterior-derivative machinery.
pub fn p_form_field(field: &SpinorField, p_deg: usize, use_bar: bool) -> FormField {
    let n = field.spinc.chart.n;
    let f = field.clone();
    FormField {
        n,
        degree: p_deg,
        value_at: Arc::new(move |q: &[f64]| {
            combinations(n, p_deg)
                .iter()
                .map(|tuple| {
                    let vectors: Vec<Vec<f64>> = tuple
                        .iter()
                        .map(|&a| {
                            let mut v = vec![0.0; n];
                            v[a] = 1.0;
                            v
                        })
                        .collect();
                    p_form(&f, p_deg, use_bar, &vectors, q).expect("p-form evaluation")
                })
                .collect()
        }),
    }
}

/// Residual of d omega_p = (K (-1)^p - conj K) omega_{p+1}
/// (bar variant: d bar-omega_p = (K (-1)^p + conj K) bar-omega_{p+1}).
/// Returns the coordinate coefficients of the residual (p+1)-form.
pub fn p_form_recurrence_residual(
    cand: &KillingCandidate,
    p_deg: usize,
    use_bar: bool,
    p: &[f64],
    h: f64,
) -> Result<Vec<C64>> {
    let spinc = &cand.field.spinc;
    if use_bar && spinc.chart.n % 2 != 0 {
        return Err(Error::UnsupportedChirality(spinc.chart.n));
    }
    let omega_p = p_form_field(&cand.field, p_deg, use_bar);
    let domega = exterior_derivative(&omega_p, &spinc.chart.domain, p, h)?;
    let omega_next = p_form_field(&cand.field, p_deg + 1, use_bar).value(p);
    let k = cand.kf.value(p);
    let sign = if p_deg % 2 == 0 { 1.0 } else { -1.0 };
    let factor = if use_bar { k * sign + k.conj() } else { k * sign - k.conj() };
    Ok(domega
        .iter()
        .zip(&omega_next)
        .map(|(d, w)| d - factor * w)
        .collect())
}

/// f = |psi|^2, V with g(V, X) = i<X . psi, psi>, and q = f^2 - |V|^2,
/// evaluated over a set of points.
pub struct AssociatedData {
    pub f: Vec<f64>,
    /// V in frame components at each point.
    pub v_frame: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    pub q_spread: f64,
    pub max_f: f64,
}

/// V at a single point, in frame components. Errors if the computed
/// components have an imaginary part above 1e-10 (V must be real).
pub fn v_frame_at(field: &SpinorField, p: &[f64]) -> Result<Vec<f64>> {
    let spinc = &field.spinc;
    let psi = field.value(p);
    let mut out = Vec::with_capacity(spinc.chart.n);
    for j in 0..spinc.chart.n {
        let val = inner(&spinc.rep.apply_vector_frame_axis(j, &psi), &psi)? * C64::new(0.0, 1.0);
        if val.im.abs() > 1e-10 * (1.0 + psi.norm_squared()) {
            return Err(Error::InvariantViolation(format!(
                "V has imaginary component {} at {p:?}",
                val.im
            )));
        }
        out.push(val.re);
    }
    Ok(out)
}

/// V as a coordinate vector field.
pub fn v_field(field: &SpinorField) -> VectorFieldFn {
    let f = field.clone();
    Arc::new(move |q: &[f64]| {
        let vf = v_frame_at(&f, q).expect("V evaluation");
        f.spinc.frame.from_frame_components(q, &vf)
    })
}

pub fn associated_data(cand: &KillingCandidate, points: &[Vec<f64>]) -> Result<AssociatedData> {
    let mut f = Vec::with_capacity(points.len());
    let mut v_frame = Vec::with_capacity(points.len());
    let mut q = Vec::with_capacity(points.len());
    for p in points {
        let psi = cand.field.value(p);
        if psi.norm() <= 1e-14 {
            return Err(Error::ZeroSpinor(p.clone()));
        }
        let fv = psi.norm_squared();
        let vf = v_frame_at(&cand.field, p)?;
        let v2: f64 = vf.iter().map(|x| x * x).sum();
        f.push(fv);
        q.push(fv * fv - v2);
        v_frame.push(vf);
    }
    let qmax = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let qmin = q.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_f = f.iter().cloned().fold(0.0, f64::max);
    Ok(AssociatedData { f, v_frame, q, q_spread: qmax - qmin, max_f })
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpinorType {
    /// q = 0; additionally reports max |(1/f) V . psi + i psi| over the points.
    TypeI { type_relation_residual: f64 },
    TypeII { q_mean: f64 },
}

pub fn classify_type(
    cand: &KillingCandidate,
    points: &[Vec<f64>],
    tol: f64,
) -> Result<SpinorType> {
    let data = associated_data(cand, points)?;
    let scale = data.max_f * data.max_f;
    let q_mean = data.q.iter().sum::<f64>() / data.q.len() as f64;
    if q_mean < -tol * scale {
        return Err(Error::InvariantViolation(format!(
            "q = {q_mean} is negative beyond tolerance; q must be non-negative"
        )));
    }
    if q_mean.abs() <= tol * scale {
        // Type I: verify (1/f) V . psi = -i psi.
        let mut worst = 0.0f64;
        for (p, (fv, vf)) in points.iter().zip(data.f.iter().zip(&data.v_frame)) {
            let psi = cand.field.value(p);
            let vpsi = cand.field.spinc.rep.apply_vector(vf, &psi)?;
            let res = (vpsi / C64::new(*fv, 0.0) + &psi * C64::new(0.0, 1.0)).norm();
            worst = worst.max(res / psi.norm());
        }
        Ok(SpinorType::TypeI { type_relation_residual: worst })
    } else {
        Ok(SpinorType::TypeII { q_mean })
    }
}

/// Residual norms of nabla f = 2 b V, nabla_X V = 2 b f X (max over frame
/// directions), and L_V g = 4 b f g.
pub fn conformal_killing_residuals(
    cand: &KillingCandidate,
    p: &[f64],
    h: f64,
) -> Result<[f64; 3]> {
    let spinc = &cand.field.spinc;
    let chart = &spinc.chart;
    let n = chart.n;
    let g = chart.metric(p);
    let b = (cand.kf.b)(p);
    let fld = cand.field.clone();
    let f_at: ScalarFieldFn = Arc::new(move |q: &[f64]| fld.value(q).norm_squared());
    let fv = cand.field.value(p).norm_squared();
    let vfun = v_field(&cand.field);
    let vp = vfun(p);

    // nabla f - 2 b V
    let grad_f = gradient(chart, &f_at, p, h)?;
    let r1: Vec<f64> = grad_f.iter().zip(&vp).map(|(gf, v)| gf - 2.0 * b * v).collect();
    let res1 = crate::geometry::quad(&g, &r1, &r1).sqrt();

    // nabla_X V - 2 b f X for X in all frame directions
    let gamma = chart.christoffels(p, h)?;
    let mut dv = Vec::with_capacity(n);
    for a in 0..n {
        let vpp = vfun(&shifted(p, a, h));
        let vpm = vfun(&shifted(p, a, -h));
        dv.push(vpp.iter().zip(&vpm).map(|(x, y)| (x - y) / (2.0 * h)).collect::<Vec<f64>>());
    }
    let e = spinc.frame.frame(p);
    let mut res2 = 0.0f64;
    for x in &e {
        let mut cov = vec![0.0; n];
        for a in 0..n {
            if x[a] == 0.0 {
                continue;
            }
            for cidx in 0..n {
                let mut v = dv[a][cidx];
                for bidx in 0..n {
                    v += gamma.get(cidx, a, bidx) * vp[bidx];
                }
                cov[cidx] += x[a] * v;
            }
        }
        let r: Vec<f64> = cov.iter().zip(x).map(|(cv, xa)| cv - 2.0 * b * fv * xa).collect();
        res2 = res2.max(crate::geometry::quad(&g, &r, &r).sqrt());
    }

    // L_V g - 4 b f g
    let lie = lie_derivative_metric(chart, &vfun, p, h)?;
    let res3 = (lie - g * (4.0 * b * fv)).iter().map(|x| x.abs()).fold(0.0, f64::max);

    Ok([res1, res2, res3])
}

/// Directional derivatives of a scalar field along the frame, by central
/// differences.
fn frame_differential(field: &SpinorField, s: &ScalarFieldFn, p: &[f64], h: f64) -> Vec<f64> {
    let spinc = &field.spinc;
    let n = spinc.chart.n;
    let ds: Vec<f64> =
        (0..n).map(|a| (s(&shifted(p, a, h)) - s(&shifted(p, a, -h))) / (2.0 * h)).collect();
    let e = spinc.frame.frame(p);
    e.iter().map(|ei| ei.iter().zip(&ds).map(|(c, d)| c * d).sum()).collect()
}

/// Named pointwise residuals:
/// - "lichnerowicz": n(n-1) K^2 psi - (n-1) dK . psi - (S/4) psi - (i/2) Omega . psi
/// - "pairing_da": <da . psi, psi> - 2 n a b i |psi|^2
/// - "ricci_killing": 1/2 (Ric(X) - i X -| Omega) . psi - grad K . X . psi
///   - n X(K) psi - 2(n-1) K^2 X . psi, max over frame directions
/// - "eq6": d b ^ omega_1 - 2 a b omega_2 (coefficient norm)
/// - "orthogonality_grad_b": max |<X . psi, psi>| over unit X orthogonal to
///   grad b; present only where |grad b| > 1e-8
pub fn pointwise_identity_checks(
    cand: &KillingCandidate,
    p: &[f64],
    h: f64,
) -> Result<BTreeMap<String, f64>> {
    let spinc = &cand.field.spinc;
    let chart = &spinc.chart;
    let rep = &spinc.rep;
    let n = chart.n;
    let nf = n as f64;
    let psi = cand.field.value(p);
    let k = cand.kf.value(p);
    let a_val = (cand.kf.a)(p);
    let b_val = (cand.kf.b)(p);
    let mut out = BTreeMap::new();

    let da = frame_differential(&cand.field, &cand.kf.a, p, h);
    let db = frame_differential(&cand.field, &cand.kf.b, p, h);
    let dk: Vec<C64> = da.iter().zip(&db).map(|(&x, &y)| C64::new(x, y)).collect();

    // Lichnerowicz-type identity
    let (_, ricci, s) = chart.curvature(p, h)?;
    let omega = spinc.omega_frame(p, h)?;
    let dk_psi = rep.apply_vector_c(&dk, &psi)?;
    let omega_psi = rep.apply_form(2, &omega, &psi)?;
    let lich = &psi * (k * k * C64::new(nf * (nf - 1.0), 0.0))
        - dk_psi * C64::new(nf - 1.0, 0.0)
        - &psi * C64::new(0.25 * s, 0.0)
        - omega_psi * C64::new(0.0, 0.5);
    out.insert("lichnerowicz".into(), lich.norm());

    // <da . psi, psi> = 2 n a b i |psi|^2
    let da_psi = rep.apply_vector(&da, &psi)?;
    let lhs = inner(&da_psi, &psi)?;
    let rhs = C64::new(0.0, 2.0 * nf * a_val * b_val * psi.norm_squared());
    out.insert("pairing_da".into(), (lhs - rhs).norm());

    // Ricci identity contracted with the Killing equation
    let ginv = chart.metric_inverse(p)?;
    let e = spinc.frame.frame(p);
    let mut worst = 0.0f64;
    for x in &e {
        let xf = spinc.frame.to_frame_components(p, x);
        let mut ric_x = vec![0.0; n];
        for ai in 0..n {
            for bi in 0..n {
                for ci in 0..n {
                    ric_x[ai] += ginv[(ai, bi)] * ricci[(bi, ci)] * x[ci];
                }
            }
        }
        let ric_xf = spinc.frame.to_frame_components(p, &ric_x);
        let contr = crate::spinc::contract_2form(n, &omega, &xf);
        let mixed: Vec<C64> = ric_xf
            .iter()
            .zip(&contr)
            .map(|(&r, &c)| C64::new(r, 0.0) - C64::new(0.0, 1.0) * c)
            .collect();
        let lhs = rep.apply_vector_c(&mixed, &psi)? * C64::new(0.5, 0.0);
        let xpsi = rep.apply_vector(&xf, &psi)?;
        let grad_k_x_psi = rep.apply_vector_c(&dk, &xpsi)?;
        let xk: C64 = dk.iter().zip(&xf).map(|(d, &c)| d * c).sum();
        let rhs = grad_k_x_psi + &psi * (xk * nf) + xpsi * (k * k * C64::new(2.0 * (nf - 1.0), 0.0));
        worst = worst.max((lhs - rhs).norm());
    }
    out.insert("ricci_killing".into(), worst);

    // d b ^ omega_1 - 2 a b omega_2 (k = 0 case of the wedge identity)
    let db_coord: Vec<C64> = (0..n)
        .map(|ax| {
            C64::new(
                ((cand.kf.b)(&shifted(p, ax, h)) - (cand.kf.b)(&shifted(p, ax, -h))) / (2.0 * h),
                0.0,
            )
        })
        .collect();
    let omega1 = p_form_field(&cand.field, 1, false).value(p);
    let omega2 = p_form_field(&cand.field, 2, false).value(p);
    let wedge = crate::geometry::wedge_1form(n, &db_coord, 1, &omega1);
    let eq6: f64 = wedge
        .iter()
        .zip(&omega2)
        .map(|(w, o)| (w - o * C64::new(2.0 * a_val * b_val, 0.0)).norm())
        .fold(0.0, f64::max);
    out.insert("eq6".into(), eq6);

    // Orthogonality <X . psi, psi> = 0 for X orthogonal to grad b
    let grad_b = gradient(chart, &cand.kf.b, p, h)?;
    let grad_bf = spinc.frame.to_frame_components(p, &grad_b);
    let grad_norm = grad_bf.iter().map(|x| x * x).sum::<f64>().sqrt();
    if grad_norm > 1e-8 {
        let u: Vec<f64> = grad_bf.iter().map(|x| x / grad_norm).collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut xf = vec![0.0; n];
            xf[i] = 1.0;
            let dot: f64 = xf.iter().zip(&u).map(|(a, b)| a * b).sum();
            for (xc, uc) in xf.iter_mut().zip(&u) {
                *xc -= dot * uc;
            }
            let norm = xf.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-8 {
                continue;
            }
            for xc in &mut xf {
                *xc /= norm;
            }
            let val = inner(&rep.apply_vector(&xf, &psi)?, &psi)?;
            worst = worst.max(val.norm());
        }
        out.insert("orthogonality_grad_b".into(), worst);
    }

    Ok(out)
}
