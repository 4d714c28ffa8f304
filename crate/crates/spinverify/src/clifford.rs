//! Concrete complex representations of the Clifford algebras Cl_n.
//!
//! The generators act on C^(2^floor(n/2)) and satisfy
//! `g_i g_j + g_j g_i = -2 delta_ij` with each generator skew-adjoint for the
//! standard Hermitian product, so `v.v.psi = -|v|^2 psi`. The construction is
//! the usual recursive tensor-product one and is deterministic: the same `n`
//! always yields identical matrices.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms;

pub type C64 = Complex64;
/// Pointwise spinor value: a complex coefficient vector in a fixed trivialization.
pub type Spinor = DVector<C64>;

pub struct SpinorRep {
    pub n: usize,
    pub dim_sigma: usize,
    /// Clifford action of the orthonormal frame vectors e_1..e_n.
    pub gammas: Vec<DMatrix<C64>>,
    /// Action of the complexified volume element i^floor((n+1)/2) e_1...e_n.
    pub vol: DMatrix<C64>,
}

fn pauli() -> [DMatrix<C64>; 3] {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}

/// Hermitian generators G_i with G_i G_j + G_j G_i = 2 delta_ij.
fn hermitian_generators(n: usize) -> Vec<DMatrix<C64>> {
    let [s1, s2, s3] = pauli();
    if n == 2 {
        return vec![s1, s2];
    }
    if n % 2 == 0 {
        let prev = hermitian_generators(n - 2);
        let dim = prev[0].nrows();
        let mut out: Vec<_> = prev.iter().map(|g| g.kronecker(&s3)).collect();
        let id = DMatrix::<C64>::identity(dim, dim);
        out.push(id.kronecker(&s1));
        out.push(id.kronecker(&s2));
        out
    } else {
        // Odd n = 2m + 1: append the chirality operator of the even part,
        // with the sign fixed so the complexified volume element acts as +1.
        let mut out = hermitian_generators(n - 1);
        let m = (n - 1) / 2;
        let dim = out[0].nrows();
        let mut prod = DMatrix::<C64>::identity(dim, dim);
        for g in &out {
            prod = &prod * g;
        }
        let phase = -C64::new(0.0, -1.0).powu(m as u32);
        out.push(prod * phase);
        out
    }
}

pub fn build_representation(n: usize) -> Result<SpinorRep> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let herm = hermitian_generators(n);
    let i = C64::new(0.0, 1.0);
    let gammas: Vec<_> = herm.into_iter().map(|g| g * i).collect();
    let dim_sigma = gammas[0].nrows();

    let mut vol = DMatrix::<C64>::identity(dim_sigma, dim_sigma);
    for g in &gammas {
        vol = &vol * g;
    }
    vol *= i.powu(((n + 1) / 2) as u32);

    Ok(SpinorRep { n, dim_sigma, gammas, vol })
}

impl SpinorRep {
    fn check_len(&self, psi: &Spinor) -> Result<()> {
        if psi.len() != self.dim_sigma {
            return Err(Error::ShapeMismatch(format!(
                "spinor length {} != representation dimension {}",
                psi.len(),
                self.dim_sigma
            )));
        }
        Ok(())
    }

    /// Clifford multiplication by a vector given in frame components.
    pub fn apply_vector(&self, v: &[f64], psi: &Spinor) -> Result<Spinor> {
        let vc: Vec<C64> = v.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.apply_vector_c(&vc, psi)
    }

    /// Same as `apply_vector` but with complex components (used for dK-type
    /// 1-forms whose coefficients are complex).
    pub fn apply_vector_c(&self, v: &[C64], psi: &Spinor) -> Result<Spinor> {
        if v.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "vector length {} != dimension {}",
                v.len(),
                self.n
            )));
        }
        self.check_len(psi)?;
        let mut out = Spinor::zeros(self.dim_sigma);
        for (vi, g) in v.iter().zip(&self.gammas) {
            if vi.norm_sqr() != 0.0 {
                out += g * psi * *vi;
            }
        }
        Ok(out)
    }

    /// Clifford multiplication by a p-form given as coefficients on strictly
    /// increasing frame index tuples (lexicographic order).
    pub fn apply_form(&self, p: usize, coeffs: &[C64], psi: &Spinor) -> Result<Spinor> {
        if p > self.n {
            return Err(Error::ShapeMismatch(format!(
                "form degree {} exceeds dimension {}",
                p, self.n
            )));
        }
        let expect = forms::comb_count(self.n, p);
        if coeffs.len() != expect {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients for a {}-form in dimension {}, got {}",
                expect,
                p,
                self.n,
                coeffs.len()
            )));
        }
        self.check_len(psi)?;
        if p == 0 {
            return Ok(psi * coeffs[0]);
        }
        let mut out = Spinor::zeros(self.dim_sigma);
        for (tuple, &c) in forms::combinations(self.n, p).iter().zip(coeffs) {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let mut tmp = psi.clone();
            for &idx in tuple.iter().rev() {
                tmp = &self.gammas[idx] * tmp;
            }
            out += tmp * c;
        }
        Ok(out)
    }

    /// Splits psi into its +1 / -1 volume-element eigenparts (n even).
    pub fn chirality_split(&self, psi: &Spinor) -> Result<(Spinor, Spinor)> {
        if self.n % 2 != 0 {
            return Err(Error::UnsupportedChirality(self.n));
        }
        self.check_len(psi)?;
        let v = &self.vol * psi;
        let plus = (psi + &v) * C64::new(0.5, 0.0);
        let minus = (psi - &v) * C64::new(0.5, 0.0);
        Ok((plus, minus))
    }

    /// psi_+ - psi_-, i.e. the volume element applied to psi (n even).
    pub fn bar(&self, psi: &Spinor) -> Result<Spinor> {
        if self.n % 2 != 0 {
            return Err(Error::UnsupportedChirality(self.n));
        }
        self.check_len(psi)?;
        Ok(&self.vol * psi)
    }
}

/// Hermitian product, anti-linear in the second argument.
pub fn inner(psi: &Spinor, phi: &Spinor) -> Result<C64> {
    if psi.len() != phi.len() {
        return Err(Error::ShapeMismatch(format!(
            "spinor lengths differ: {} vs {}",
            psi.len(),
            phi.len()
        )));
    }
    Ok(phi.dotc(psi))
}

pub fn norm(psi: &Spinor) -> f64 {
    psi.norm()
}
