//! Small dense complex matrices: 2x2, 4x4 and the 16x16 superoperators
//! acting on vectorized 4x4 density matrices.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cr, Real, C};

/// Complex 2x2 matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T: Real>(pub [[C<T>; 2]; 2]);

impl<T: Real> Mat2<T> {
    pub fn zeros() -> Self {
        Mat2([[C::zero(); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        m.0[0][0] = C::one();
        m.0[1][1] = C::one();
        m
    }

    pub fn from_rows(rows: [[C<T>; 2]; 2]) -> Self {
        Mat2(rows)
    }

    pub fn scale(&self, s: C<T>) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// `exp(i * angle * n.sigma)` for a unit (or zero) 3-vector `n`.
    pub fn su2_rotation(angle: T, n: [T; 3]) -> Self {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if norm == T::zero() {
            return Self::identity();
        }
        let (nx, ny, nz) = (n[0] / norm, n[1] / norm, n[2] / norm);
        let (s, c) = angle.sin_cos();
        let i = Complex::<T>::i();
        Mat2([
            [cr(c) + i * cr(s * nz), i * cr(s) * Complex::new(nx, -ny)],
            [i * cr(s) * Complex::new(nx, ny), cr(c) - i * cr(s * nz)],
        ])
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for r in 0..2 {
            for c in 0..2 {
                out.0[r][c] = self.0[r][0] * rhs.0[0][c] + self.0[r][1] * rhs.0[1][c];
            }
        }
        out
    }
}

/// Complex 4x4 matrix, row-major, in the two-qubit standard basis
/// `|up,up>, |up,down>, |down,up>, |down,down>` (qubit 1 is the major index).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CMat4<T: Real>(pub [[C<T>; 4]; 4]);

impl<T: Real> Default for CMat4<T> {
    fn default() -> Self {
        Self::zeros()
    }
}

impl<T: Real> Index<(usize, usize)> for CMat4<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C<T> {
        &self.0[r][c]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMat4<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C<T> {
        &mut self.0[r][c]
    }
}

impl<T: Real> CMat4<T> {
    pub fn zeros() -> Self {
        CMat4([[C::zero(); 4]; 4])
    }

    pub fn identity() -> Self {
        Self::diag([C::one(); 4])
    }

    pub fn diag(d: [C<T>; 4]) -> Self {
        let mut m = Self::zeros();
        for (i, x) in d.into_iter().enumerate() {
            m.0[i][i] = x;
        }
        m
    }

    pub fn from_real(rows: [[f64; 4]; 4]) -> Self {
        let mut m = Self::zeros();
        for r in 0..4 {
            for c in 0..4 {
                m.0[r][c] = cr(T::lit(rows[r][c]));
            }
        }
        m
    }

    /// Permutation matrix sending basis state `j` to `perm[j]`.
    pub fn permutation(perm: [usize; 4]) -> Self {
        let mut m = Self::zeros();
        for (j, &i) in perm.iter().enumerate() {
            m.0[i][j] = C::one();
        }
        m
    }

    pub fn kron(a: &Mat2<T>, b: &Mat2<T>) -> Self {
        let mut m = Self::zeros();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m.0[2 * i + k][2 * j + l] = a.0[i][j] * b.0[k][l];
                    }
                }
            }
        }
        m
    }

    pub fn column(&self, c: usize) -> [C<T>; 4] {
        [self.0[0][c], self.0[1][c], self.0[2][c], self.0[3][c]]
    }

    pub fn set_column(&mut self, c: usize, v: &[C<T>; 4]) {
        for r in 0..4 {
            self.0[r][c] = v[r];
        }
    }

    pub fn map(&self, f: impl Fn(C<T>) -> C<T>) -> Self {
        let mut out = *self;
        for row in out.0.iter_mut() {
            for x in row.iter_mut() {
                *x = f(*x);
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn scale_c(&self, s: C<T>) -> Self {
        self.map(|x| x * s)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros();
        for r in 0..4 {
            for c in 0..4 {
                out.0[r][c] = self.0[c][r].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros();
        for r in 0..4 {
            for c in 0..4 {
                out.0[r][c] = self.0[c][r];
            }
        }
        out
    }

    pub fn trace(&self) -> C<T> {
        (0..4).fold(C::zero(), |acc, i| acc + self.0[i][i])
    }

    pub fn frobenius_norm(&self) -> T {
        self.0.iter().flat_map(|row| row.iter()).map(|x| x.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> T {
        self.0.iter().flat_map(|row| row.iter()).fold(T::zero(), |acc, x| acc.max(x.norm()))
    }

    pub fn hermiticity_error(&self) -> T {
        (*self - self.adjoint()).max_abs()
    }

    pub fn unitarity_error(&self) -> T {
        (self.adjoint() * *self - Self::identity()).max_abs()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> C<T> {
        let mut a = self.0;
        let mut det = C::<T>::one();
        for col in 0..4 {
            let pivot = (col..4)
                .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap_or(std::cmp::Ordering::Equal))
                .unwrap();
            if a[pivot][col].norm() == T::zero() {
                return C::zero();
            }
            if pivot != col {
                a.swap(pivot, col);
                det = -det;
            }
            det = det * a[col][col];
            for r in (col + 1)..4 {
                let f = a[r][col] / a[col][col];
                for c in col..4 {
                    let v = a[col][c];
                    a[r][c] = a[r][c] - f * v;
                }
            }
        }
        det
    }

    pub fn mul_vec(&self, v: &[C<T>; 4]) -> [C<T>; 4] {
        let mut out = [C::zero(); 4];
        for (r, o) in out.iter_mut().enumerate() {
            *o = (0..4).fold(C::zero(), |acc, c| acc + self.0[r][c] * v[c]);
        }
        out
    }

    /// `V^dag * self * V`.
    pub fn to_basis(&self, v: &CMat4<T>) -> Self {
        v.adjoint() * *self * *v
    }

    /// `V * self * V^dag`.
    pub fn from_basis(&self, v: &CMat4<T>) -> Self {
        *v * *self * v.adjoint()
    }

    /// Row-major flattening, index `4*r + c`.
    pub fn to_vec16(&self) -> [C<T>; 16] {
        let mut out = [C::zero(); 16];
        for r in 0..4 {
            for c in 0..4 {
                out[4 * r + c] = self.0[r][c];
            }
        }
        out
    }

    pub fn from_vec16(v: &[C<T>; 16]) -> Self {
        let mut m = Self::zeros();
        for r in 0..4 {
            for c in 0..4 {
                m.0[r][c] = v[4 * r + c];
            }
        }
        m
    }
}

impl<T: Real> Add for CMat4<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for r in 0..4 {
            for c in 0..4 {
                out.0[r][c] = out.0[r][c] + rhs.0[r][c];
            }
        }
        out
    }
}

impl<T: Real> Sub for CMat4<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for r in 0..4 {
            for c in 0..4 {
                out.0[r][c] = out.0[r][c] - rhs.0[r][c];
            }
        }
        out
    }
}

impl<T: Real> Neg for CMat4<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|x| -x)
    }
}

impl<T: Real> Mul for CMat4<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zeros();
        for r in 0..4 {
            for c in 0..4 {
                let mut acc = C::zero();
                for k in 0..4 {
                    acc = acc + self.0[r][k] * rhs.0[k][c];
                }
                out.0[r][c] = acc;
            }
        }
        out
    }
}

/// Raw Hermitian eigendecomposition `h = V diag(w) V^dag` by cyclic complex
/// Jacobi rotations. Eigenvalues come back unsorted; no phase convention is
/// applied (see [`crate::spectrum::eigensystem`] for the canonical form).
pub fn hermitian_eigen<T: Real>(h: &CMat4<T>) -> ([T; 4], CMat4<T>) {
    let mut a = *h;
    let mut v = CMat4::<T>::identity();
    let scale = a.frobenius_norm();
    if scale == T::zero() {
        return ([T::zero(); 4], v);
    }
    let thresh = T::epsilon() * scale * T::lit(0.5);
    for _sweep in 0..64 {
        let off: T = (0..4)
            .flat_map(|r| (0..4).filter(move |&c| c != r).map(move |c| (r, c)))
            .map(|(r, c)| a.0[r][c].norm_sqr())
            .sum::<T>()
            .sqrt();
        if off <= thresh {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a.0[p][q];
                let r = apq.norm();
                if r <= T::min_positive_value() {
                    continue;
                }
                // Phase that makes the (p,q) element real and positive, then a
                // real symmetric Jacobi rotation.
                let phase = apq / cr(r);
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                let theta = (aqq - app) / (T::lit(2.0) * r);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (T::one() + theta * theta).sqrt())
                } else {
                    -T::one() / (-theta + (T::one() + theta * theta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // J = P R with P = diag(.., conj(phase) at q, ..):
                // J_pp = c, J_pq = s, J_qp = -s conj(phase), J_qq = c conj(phase)
                let pc = phase.conj();
                let jpp = cr(c);
                let jpq = cr(s);
                let jqp = -pc * s;
                let jqq = pc * c;
                // A <- A J (columns p, q)
                for k in 0..4 {
                    let akp = a.0[k][p];
                    let akq = a.0[k][q];
                    a.0[k][p] = akp * jpp + akq * jqp;
                    a.0[k][q] = akp * jpq + akq * jqq;
                }
                // A <- J^dag A (rows p, q)
                for k in 0..4 {
                    let apk = a.0[p][k];
                    let aqk = a.0[q][k];
                    a.0[p][k] = jpp.conj() * apk + jqp.conj() * aqk;
                    a.0[q][k] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a.0[p][q] = C::zero();
                a.0[q][p] = C::zero();
                a.0[p][p] = cr(a.0[p][p].re);
                a.0[q][q] = cr(a.0[q][q].re);
                for k in 0..4 {
                    let vkp = v.0[k][p];
                    let vkq = v.0[k][q];
                    v.0[k][p] = vkp * jpp + vkq * jqp;
                    v.0[k][q] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }
    ([a.0[0][0].re, a.0[1][1].re, a.0[2][2].re, a.0[3][3].re], v)
}

/// `exp(-i * t * h)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_hermitian<T: Real>(h: &CMat4<T>, t: T) -> CMat4<T> {
    let (w, v) = hermitian_eigen(h);
    let d = w.map(|e| Complex::from_polar(T::one(), -e * t));
    v * CMat4::diag(d) * v.adjoint()
}

/// Linear map on vectorized 4x4 matrices (row-major index `4*r + c`).
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOp<T: Real> {
    pub m: Box<[[C<T>; 16]; 16]>,
}

impl<T: Real> SuperOp<T> {
    pub fn zeros() -> Self {
        SuperOp { m: Box::new([[C::zero(); 16]; 16]) }
    }

    pub fn identity() -> Self {
        let mut s = Self::zeros();
        for i in 0..16 {
            s.m[i][i] = C::one();
        }
        s
    }

    pub fn apply(&self, v: &[C<T>; 16]) -> [C<T>; 16] {
        let mut out = [C::zero(); 16];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.m[r];
            let mut acc = C::zero();
            for c in 0..16 {
                acc = acc + row[c] * v[c];
            }
            *o = acc;
        }
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut out = Self::zeros();
        for r in 0..16 {
            for k in 0..16 {
                let a = self.m[r][k];
                if a == C::zero() {
                    continue;
                }
                for c in 0..16 {
                    out.m[r][c] = out.m[r][c] + a * rhs.m[k][c];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for row in out.m.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for r in 0..16 {
            for c in 0..16 {
                out.m[r][c] = out.m[r][c] + rhs.m[r][c];
            }
        }
        out
    }

    /// One classical Runge-Kutta step `I + hG + (hG)^2/2 + (hG)^3/6 + (hG)^4/24`
    /// for the linear system `dx/dt = G x`.
    pub fn rk4_step(&self, h: T) -> Self {
        let hg = self.scale(h);
        let mut term = SuperOp::identity();
        let mut acc = SuperOp::identity();
        for k in 1..=4 {
            term = term.matmul(&hg).scale(T::one() / T::lit(k as f64));
            acc = acc.add(&term);
        }
        acc
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Self {
        let mut base = self.clone();
        let mut acc = SuperOp::identity();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.matmul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.matmul(&base);
            }
        }
        acc
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().flat_map(|r| r.iter()).fold(T::zero(), |acc, x| acc.max(x.norm()))
    }
}

pub(crate) fn require_hermitian<T: Real>(h: &CMat4<T>, tol: T) -> Result<()> {
    let err = h.hermiticity_error();
    if err > tol * (T::one() + h.max_abs()) {
        return Err(Error::NotHermitian(err.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

pub(crate) fn require_unitary<T: Real>(u: &CMat4<T>, tol: T) -> Result<()> {
    let err = u.unitarity_error();
    if err > tol {
        return Err(Error::NotUnitary(err.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::clit;

    fn random_hermitian(seed: u64) -> CMat4<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMat4::zeros();
        for r in 0..4 {
            m.0[r][r] = cr(rng.gen_range(-2.0..2.0));
            for c in (r + 1)..4 {
                let z = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                m.0[r][c] = z;
                m.0[c][r] = z.conj();
            }
        }
        m
    }

    #[test]
    fn jacobi_reconstructs_random_hermitian() {
        for seed in 0..50 {
            let h = random_hermitian(seed);
            let (w, v) = hermitian_eigen(&h);
            let recon = v * CMat4::diag(w.map(cr)) * v.adjoint();
            assert!((recon - h).max_abs() < 1e-12, "seed {seed}");
            assert!(v.unitarity_error() < 1e-12);
        }
    }

    #[test]
    fn jacobi_handles_degenerate_and_diagonal() {
        let h = CMat4::<f64>::diag([cr(2.0), cr(2.0), cr(-1.0), cr(5.0)]);
        let (mut w, _) = hermitian_eigen(&h);
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(w, [-1.0, 2.0, 2.0, 5.0]);
        let (w0, v0) = hermitian_eigen(&CMat4::<f64>::zeros());
        assert_eq!(w0, [0.0; 4]);
        assert_eq!(v0, CMat4::identity());
    }

    #[test]
    fn determinant_of_permutations_and_products() {
        let swap = CMat4::<f64>::permutation([0, 2, 1, 3]);
        assert!((swap.det() - cr(-1.0)).norm() < 1e-15);
        let a = random_hermitian(3);
        let b = random_hermitian(4);
        let lhs = (a * b).det();
        let rhs = a.det() * b.det();
        assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
    }

    #[test]
    fn expm_of_pauli_is_rotation() {
        let x = Mat2([[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]]);
        let h = CMat4::kron(&x, &Mat2::identity());
        let u = expm_hermitian(&h, std::f64::consts::FRAC_PI_2);
        // exp(-i pi/2 X) = -i X
        let expected = h.scale_c(clit(0.0, -1.0));
        assert!((u - expected).max_abs() < 1e-14);
    }

    #[test]
    fn rk4_step_matches_exponential_for_small_steps() {
        let mut g = SuperOp::<f64>::zeros();
        g.m[0][0] = cr(-1.0);
        let step = g.rk4_step(0.01);
        assert!((step.m[0][0].re - (-0.01f64).exp()).abs() < 1e-11);
        assert_eq!(step.m[1][1], cr(1.0));
    }
}
