//! Canonical eigensystems and spectral-degeneracy diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{hermitian_eigen, require_hermitian, CMat4};
use crate::scalar::{cr, Real, C};
use num_traits::Zero;

/// Default tolerance for calling two levels degenerate (units `pi/tau`).
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Eigenvalues in ascending order and orthonormal eigenvectors (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem<T: Real> {
    pub energies: [T; 4],
    pub vectors: CMat4<T>,
}

impl<T: Real> EigenSystem<T> {
    /// Transition frequency `E_n - E_m`.
    #[inline]
    pub fn gap(&self, n: usize, m: usize) -> T {
        self.energies[n] - self.energies[m]
    }

    /// All twelve ordered gaps `((n, m), E_n - E_m)`, `n != m`.
    pub fn gaps(&self) -> Vec<((usize, usize), T)> {
        (0..4)
            .flat_map(|n| (0..4).filter(move |&m| m != n).map(move |m| (n, m)))
            .map(|(n, m)| ((n, m), self.gap(n, m)))
            .collect()
    }

    /// Matrix elements of `op` in this eigenbasis, `V^dag op V`.
    pub fn in_eigenbasis(&self, op: &CMat4<T>) -> CMat4<T> {
        op.to_basis(&self.vectors)
    }

    /// `V diag(E) V^dag`.
    pub fn reconstruct(&self) -> CMat4<T> {
        CMat4::diag(self.energies.map(cr)).from_basis(&self.vectors)
    }
}

/// Eigensystem of a Hermitian matrix with a deterministic gauge:
/// eigenvalues ascending; inside each degenerate cluster (adjacent gaps below
/// `tol`) the basis is rebuilt by projecting `e_1..e_4` in index order and
/// orthonormalizing; every eigenvector then has its largest-magnitude
/// component real and positive.
pub fn eigensystem<T: Real>(h: &CMat4<T>, tol: T) -> Result<EigenSystem<T>> {
    require_hermitian(h, T::lit(1e-10).max(T::epsilon() * T::lit(64.0)))?;
    let (w, v) = hermitian_eigen(h);
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap_or(std::cmp::Ordering::Equal));
    let energies = order.map(|i| w[i]);
    let mut vectors = CMat4::zeros();
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &v.column(i));
    }

    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && energies[end] - energies[end - 1] < tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut vectors, start, end);
        }
        start = end;
    }
    for k in 0..4 {
        let col = fix_phase(vectors.column(k));
        vectors.set_column(k, &col);
    }
    Ok(EigenSystem { energies, vectors })
}

fn dot<T: Real>(a: &[C<T>; 4], b: &[C<T>; 4]) -> C<T> {
    (0..4).fold(C::zero(), |acc, i| acc + a[i].conj() * b[i])
}

fn norm<T: Real>(a: &[C<T>; 4]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

fn canonicalize_cluster<T: Real>(vectors: &mut CMat4<T>, start: usize, end: usize) {
    let span: Vec<[C<T>; 4]> = (start..end).map(|k| vectors.column(k)).collect();
    let mut basis: Vec<[C<T>; 4]> = Vec::with_capacity(span.len());
    let accept = T::lit(1e-6).max(T::epsilon().sqrt());
    for e in 0..4 {
        if basis.len() == span.len() {
            break;
        }
        // Projection of e_e onto the cluster subspace.
        let mut p = [C::zero(); 4];
        for s in &span {
            let coeff = s[e].conj();
            for i in 0..4 {
                p[i] = p[i] + coeff * s[i];
            }
        }
        for b in &basis {
            let c = dot(b, &p);
            for i in 0..4 {
                p[i] = p[i] - c * b[i];
            }
        }
        let n = norm(&p);
        if n > accept {
            basis.push(p.map(|x| x / n));
        }
    }
    if basis.len() == span.len() {
        for (k, b) in basis.iter().enumerate() {
            vectors.set_column(start + k, b);
        }
    }
}

fn fix_phase<T: Real>(v: [C<T>; 4]) -> [C<T>; 4] {
    let max = v.iter().fold(T::zero(), |m, x| m.max(x.norm()));
    if max == T::zero() {
        return v;
    }
    let cut = max * (T::one() - T::epsilon().sqrt());
    let pivot = v.iter().position(|x| x.norm() >= cut).unwrap();
    let phase = v[pivot].conj() / cr(v[pivot].norm());
    v.map(|x| x * phase)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Degeneracy {
    None,
    Single,
    Double,
    /// Three- or four-fold cluster.
    Higher,
}

impl Degeneracy {
    pub fn as_str(self) -> &'static str {
        match self {
            Degeneracy::None => "none",
            Degeneracy::Single => "single",
            Degeneracy::Double => "double",
            Degeneracy::Higher => "higher",
        }
    }
}

impl std::fmt::Display for Degeneracy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    /// Smallest `|E_i - E_j|`, `i != j`.
    pub min_gap: f64,
    /// `E_2 - E_1` (lowest pair).
    pub lower_pair_gap: f64,
    /// `E_4 - E_3` (upper pair).
    pub upper_pair_gap: f64,
    pub classification: Degeneracy,
    pub tolerance: f64,
}

impl DegeneracyReport {
    /// `(E_2 - E_1)^2 + (E_4 - E_3)^2`, zero exactly at a double degeneracy.
    pub fn double_gap_measure(&self) -> f64 {
        self.lower_pair_gap.powi(2) + self.upper_pair_gap.powi(2)
    }

    /// Squared smallest gap, zero exactly at any degeneracy.
    pub fn single_gap_measure(&self) -> f64 {
        self.min_gap.powi(2)
    }
}

/// Classifies sorted energies. Double means the spectrum splits into two
/// internally degenerate pairs; single means exactly one adjacent pair is
/// degenerate.
pub fn classify_energies<T: Real>(energies: &[T; 4], tol: T) -> DegeneracyReport {
    let mut e = *energies;
    e.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let gaps = [e[1] - e[0], e[2] - e[1], e[3] - e[2]];
    let degenerate = gaps.map(|g| g < tol);
    let n = degenerate.iter().filter(|&&d| d).count();
    let classification = match (n, degenerate) {
        (0, _) => Degeneracy::None,
        (1, _) => Degeneracy::Single,
        (2, [true, false, true]) => Degeneracy::Double,
        _ => Degeneracy::Higher,
    };
    let f = |x: T| x.to_f64().unwrap();
    DegeneracyReport {
        min_gap: f(gaps.iter().fold(T::infinity(), |m, &g| m.min(g))),
        lower_pair_gap: f(gaps[0]),
        upper_pair_gap: f(gaps[2]),
        classification,
        tolerance: f(tol),
    }
}

pub fn classify_degeneracy<T: Real>(es: &EigenSystem<T>, tol: T) -> DegeneracyReport {
    classify_energies(&es.energies, tol)
}
