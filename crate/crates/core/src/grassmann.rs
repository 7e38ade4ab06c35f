//! Subspaces and their invariants under `G2`, `Spin(7)` and `SU(n)`.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{standard, AlternatingForm};
use crate::linalg::{complement, orthonormalize};

const FRAME_TOL: f64 = 1e-12;

/// A linear subspace of `R^n` held as an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    /// Wrap an already orthonormal `n x k` frame.
    pub fn from_orthonormal(frame: DMatrix<f64>) -> Result<Self> {
        let k = frame.ncols();
        let residual = (frame.transpose() * &frame - DMatrix::identity(k, k)).amax();
        if !(residual < FRAME_TOL) {
            return Err(Error::InvalidSubspace(format!(
                "frame not orthonormal (residual {residual:.2e})"
            )));
        }
        Ok(Self { frame })
    }

    /// Orthonormalize a spanning set given as columns.
    pub fn from_spanning(columns: &DMatrix<f64>) -> Result<Self> {
        let frame = orthonormalize(columns)
            .ok_or_else(|| Error::InvalidSubspace("spanning columns are dependent".into()))?;
        Ok(Self { frame })
    }

    /// Span of coordinate axes.
    pub fn coordinate(n: usize, axes: &[usize]) -> Result<Self> {
        if let Some(&bad) = axes.iter().find(|&&a| a >= n) {
            return Err(Error::InvalidSubspace(format!("axis {bad} out of range for R^{n}")));
        }
        let mut m = DMatrix::zeros(n, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            m[(a, j)] = 1.0;
        }
        Self::from_spanning(&m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.frame * self.frame.transpose()
    }

    /// Orthogonal complement.
    pub fn perp(&self) -> Subspace {
        Subspace {
            frame: complement(&self.frame),
        }
    }

    /// Image under a linear map (orthogonal maps keep the frame orthonormal).
    pub fn mapped(&self, g: &DMatrix<f64>) -> Result<Subspace> {
        if g.ncols() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: g.ncols(),
            });
        }
        Subspace::from_spanning(&(g * &self.frame))
    }

    /// Same subspace, frame right-multiplied by a `k x k` orthogonal matrix.
    pub fn reframed(&self, q: &DMatrix<f64>) -> Subspace {
        Subspace {
            frame: &self.frame * q,
        }
    }

    /// Frobenius distance of projection matrices.
    pub fn distance(&self, other: &Subspace) -> f64 {
        if self.ambient_dim() != other.ambient_dim() {
            return f64::INFINITY;
        }
        (self.projector() - other.projector()).norm()
    }

    pub fn same_span(&self, other: &Subspace) -> bool {
        self.dim() == other.dim() && self.distance(other) < 1e-9
    }

    pub fn orthonormality_residual(&self) -> f64 {
        let k = self.dim();
        (self.frame.transpose() * &self.frame - DMatrix::identity(k, k)).amax()
    }

    pub fn to_json(&self) -> SubspaceJson {
        let (n, k) = self.frame.shape();
        let mut frame = Vec::with_capacity(n * k);
        for i in 0..n {
            for j in 0..k {
                frame.push(self.frame[(i, j)]);
            }
        }
        SubspaceJson { n, k, frame }
    }

    pub fn from_json(j: &SubspaceJson) -> Result<Self> {
        if j.n == 0 || j.n > 64 || j.k > j.n {
            return Err(Error::InvalidSubspace(format!("bad shape n={} k={}", j.n, j.k)));
        }
        if j.frame.len() != j.n * j.k {
            return Err(Error::InvalidSubspace(format!(
                "frame has {} entries, expected {}",
                j.frame.len(),
                j.n * j.k
            )));
        }
        if j.frame.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSubspace("non-finite frame entry".into()));
        }
        Self::from_orthonormal(DMatrix::from_row_slice(j.n, j.k, &j.frame))
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let j: SubspaceJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }
}

/// `{n, k, frame}` with the frame stored row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SubspaceJson {
    pub n: usize,
    pub k: usize,
    pub frame: Vec<f64>,
}

/// Uniformly distributed random subspace (orthonormalized Gaussian frame).
pub fn random_subspace<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Subspace> {
    if k == 0 || k > n {
        return Err(Error::InvalidSubspace(format!("need 0 < k <= n, got k={k}, n={n}")));
    }
    loop {
        let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
        if let Some(frame) = orthonormalize(&g) {
            return Ok(Subspace { frame });
        }
    }
}

pub fn random_subspace_seeded(n: usize, k: usize, seed: u64) -> Result<Subspace> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    random_subspace(n, k, &mut rng)
}

/// Value `form(w_1..w_k)` on the frame of `w`; its square is frame independent.
pub fn form_on_subspace(form: &AlternatingForm, w: &Subspace) -> Result<f64> {
    if form.degree() != w.dim() {
        return Err(Error::DegreeMismatch {
            expected: form.degree(),
            got: w.dim(),
        });
    }
    form.eval_columns(w.frame())
}

/// `phi(W)^2` for a 3-plane in `R^7`.
pub fn phi_sq(w: &Subspace) -> Result<f64> {
    check_shape(w, 7, 3)?;
    let v = form_on_subspace(&standard().phi, w)?;
    Ok(v * v)
}

/// `Phi(W)^2` for a 4-plane in `R^8` (Cayley form).
pub fn cayley_sq(w: &Subspace) -> Result<f64> {
    check_shape(w, 8, 4)?;
    let v = form_on_subspace(&standard().cayley, w)?;
    Ok(v * v)
}

fn check_shape(w: &Subspace, n: usize, k: usize) -> Result<()> {
    if w.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.ambient_dim(),
        });
    }
    if w.dim() != k {
        return Err(Error::DegreeMismatch {
            expected: k,
            got: w.dim(),
        });
    }
    Ok(())
}

/// A complex structure on a subspace `E` of `R^n`, recorded as a unitary
/// frame `(f_1, J f_1, .., f_m, J f_m)` plus the phase of the complex volume
/// form: `Theta` is `phase * det` of complex coordinates.
#[derive(Debug, Clone)]
pub struct HermitianStructure {
    basis: DMatrix<f64>,
    phase: Complex<f64>,
}

impl HermitianStructure {
    /// `C^m = R^{2m}` with coordinates `(x_1, y_1, .., x_m, y_m)`, `J x_j = y_j`.
    pub fn standard(m: usize) -> Self {
        Self {
            basis: DMatrix::identity(2 * m, 2 * m),
            phase: Complex::new(1.0, 0.0),
        }
    }

    pub fn complex_dim(&self) -> usize {
        self.basis.ncols() / 2
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn phase(&self) -> Complex<f64> {
        self.phase
    }

    /// The real subspace carrying the complex structure.
    pub fn support(&self) -> Subspace {
        Subspace {
            frame: self.basis.clone(),
        }
    }

    /// `J` as an `n x n` matrix (zero on the complement of the support).
    pub fn j_matrix(&self) -> DMatrix<f64> {
        let n = self.ambient_dim();
        let mut j = DMatrix::zeros(n, n);
        for c in 0..self.complex_dim() {
            let f = self.basis.column(2 * c);
            let jf = self.basis.column(2 * c + 1);
            // J f = jf, J jf = -f
            j += jf * f.transpose() - f * jf.transpose();
        }
        j
    }

    /// Real coordinates of the frame of `w` in the unitary basis; errors if
    /// `w` is not contained in the support.
    fn coordinates(&self, w: &Subspace) -> Result<DMatrix<f64>> {
        if w.ambient_dim() != self.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim(),
                got: w.ambient_dim(),
            });
        }
        let c = self.basis.transpose() * w.frame();
        let residual = (&self.basis * &c - w.frame()).amax();
        if residual > 1e-9 {
            return Err(Error::InvalidSubspace(format!(
                "subspace leaves the complex support (residual {residual:.2e})"
            )));
        }
        Ok(c)
    }

    /// Skew matrix `A_ij = Omega(w_i, w_j)`.
    fn omega_matrix(coords: &DMatrix<f64>) -> DMatrix<f64> {
        let k = coords.ncols();
        let m = coords.nrows() / 2;
        DMatrix::from_fn(k, k, |a, b| {
            (0..m)
                .map(|j| {
                    coords[(2 * j, a)] * coords[(2 * j + 1, b)]
                        - coords[(2 * j + 1, a)] * coords[(2 * j, b)]
                })
                .sum()
        })
    }
}

/// Multiple Kaehler angle `0 <= theta_1 <= .. <= theta_p <= pi/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaehlerAngles {
    pub thetas: Vec<f64>,
}

impl KaehlerAngles {
    pub fn cosines(&self) -> Vec<f64> {
        self.thetas.iter().map(|t| t.cos()).collect()
    }

    pub fn sines(&self) -> Vec<f64> {
        self.thetas.iter().map(|t| t.sin()).collect()
    }
}

/// Cosines of the Kaehler angles, descending (i.e. angles ascending).
fn kaehler_cosines(coords: &DMatrix<f64>) -> Vec<f64> {
    let k = coords.ncols();
    let p = k / 2;
    if p == 0 {
        return Vec::new();
    }
    let a = HermitianStructure::omega_matrix(coords);
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    // singular values of a skew matrix come in equal pairs
    (0..p).map(|i| sv[2 * i].clamp(0.0, 1.0)).collect()
}

pub fn kaehler_angles(w: &Subspace, hs: &HermitianStructure) -> Result<KaehlerAngles> {
    let coords = hs.coordinates(w)?;
    Ok(KaehlerAngles {
        thetas: kaehler_cosines(&coords).into_iter().map(f64::acos).collect(),
    })
}

/// `Theta(W)` for a real `m`-plane in `C^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaInvariant {
    pub value: Complex<f64>,
    /// False when `Omega|_W` is degenerate and the sign of `value` is arbitrary.
    pub sign_determined: bool,
}

impl ThetaInvariant {
    pub fn squared(&self) -> Complex<f64> {
        self.value * self.value
    }

    pub fn modulus(&self) -> f64 {
        self.value.norm()
    }
}

/// Pfaffian of a skew matrix of even size (expansion along the first row).
pub fn pfaffian(a: &DMatrix<f64>) -> f64 {
    let k = a.nrows();
    if k == 0 {
        return 1.0;
    }
    if k % 2 == 1 {
        return 0.0;
    }
    if k == 2 {
        return a[(0, 1)];
    }
    let mut total = 0.0;
    for j in 1..k {
        let keep: Vec<usize> = (1..k).filter(|&i| i != j).collect();
        let minor = DMatrix::from_fn(k - 2, k - 2, |r, c| a[(keep[r], keep[c])]);
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * a[(0, j)] * pfaffian(&minor);
    }
    total
}

const PFAFFIAN_DEGENERATE: f64 = 1e-12;

pub fn theta(w: &Subspace, hs: &HermitianStructure) -> Result<ThetaInvariant> {
    let m = hs.complex_dim();
    if w.dim() != m {
        return Err(Error::DegreeMismatch {
            expected: m,
            got: w.dim(),
        });
    }
    let coords = hs.coordinates(w)?;
    let omega = HermitianStructure::omega_matrix(&coords);
    let pf = if m.is_multiple_of(2) { pfaffian(&omega) } else { 0.0 };
    let sign_determined = pf.abs() > PFAFFIAN_DEGENERATE;
    let z = DMatrix::from_fn(m, m, |j, c| {
        Complex::new(coords[(2 * j, c)], coords[(2 * j + 1, c)])
    });
    let mut det = z.determinant();
    if sign_determined && pf < 0.0 {
        // flipping the last frame vector makes the frame positively oriented for Omega
        det = -det;
    }
    Ok(ThetaInvariant {
        value: hs.phase * det,
        sign_determined,
    })
}

/// Elementary symmetric functions of the squared Kaehler cosines.
pub fn sigma_cos_sq(angles: &KaehlerAngles) -> Vec<f64> {
    let sq: Vec<f64> = angles.cosines().iter().map(|c| c * c).collect();
    crate::linalg::elementary_symmetric(&sq)
}

/// `1/2 s0 - 1/2 s1 + 3/2 s2 + Re(1/2 Theta^2 + 2 cos t1 cos t2 Theta)`,
/// the `SU(4)` expression for `Phi(W)^2` of a 4-plane in `C^4`.
pub fn klain_eta(w: &Subspace) -> Result<f64> {
    check_shape(w, 8, 4)?;
    let hs = HermitianStructure::standard(4);
    let angles = kaehler_angles(w, &hs)?;
    let th = theta(w, &hs)?;
    let s = sigma_cos_sq(&angles);
    let c = angles.cosines();
    let cross = th.value * (2.0 * c[0] * c[1]);
    Ok(0.5 * s[0] - 0.5 * s[1] + 1.5 * s[2] + (th.squared() * 0.5 + cross).re)
}

/// The almost complex structure on `x^perp` determined by
/// `<v, w> = (i_x phi)(J v, w)`.
#[derive(Debug, Clone)]
pub struct ComplexStructure {
    pub x: DVector<f64>,
    /// Orthonormal basis of `x^perp` (columns).
    pub basis: DMatrix<f64>,
    /// `J` as an `n x n` matrix, zero on `x`.
    pub j: DMatrix<f64>,
}

impl ComplexStructure {
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.j * v
    }

    /// Unitary frame adapted to `J`, with the volume phase chosen so that
    /// `Re(Theta)` restricts `phi` on `x^perp`.
    pub fn hermitian_structure(&self, phi: &AlternatingForm) -> Result<HermitianStructure> {
        let n = self.basis.nrows();
        let m = self.basis.ncols() / 2;
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(2 * m);
        for cand in 0..self.basis.ncols() {
            if cols.len() == 2 * m {
                break;
            }
            let mut f = self.basis.column(cand).clone_owned();
            for _ in 0..2 {
                for c in &cols {
                    let p = c.dot(&f);
                    f.axpy(-p, c, 1.0);
                }
            }
            let norm = f.norm();
            if norm < 1e-6 {
                continue;
            }
            let f = f / norm;
            let jf = &self.j * &f;
            cols.push(f);
            cols.push(jf);
        }
        if cols.len() != 2 * m {
            return Err(Error::Degenerate("could not build a unitary frame".into()));
        }
        let basis = DMatrix::from_columns(&cols);
        let mut hs = HermitianStructure {
            basis,
            phase: Complex::new(1.0, 0.0),
        };
        if phi.degree() == m && phi.dim() == n {
            // Re(c dz) = phi on the support: c = phi(f1..fm) - i phi(Jf1, f2..fm)
            let fs: Vec<DVector<f64>> = (0..m).map(|j| cols[2 * j].clone()).collect();
            let mut with_j = fs.clone();
            with_j[0] = cols[1].clone();
            let ev = |vs: &[DVector<f64>]| {
                let sl: Vec<&[f64]> = vs.iter().map(|v| v.as_slice()).collect();
                phi.eval(&sl)
            };
            let c = Complex::new(ev(&fs)?, -ev(&with_j)?);
            if (c.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Degenerate(format!(
                    "restricted form is not a unit complex volume form (|c| = {})",
                    c.norm()
                )));
            }
            hs.phase = c;
        }
        Ok(hs)
    }
}

pub fn complex_structure_from_phi(phi: &AlternatingForm, x: &DVector<f64>) -> Result<ComplexStructure> {
    let n = phi.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    if (x.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Degenerate(format!("|x| = {} is not 1", x.norm())));
    }
    let xm = DMatrix::from_column_slice(n, 1, x.as_slice());
    let basis = complement(&xm);
    let ix = phi.interior(x.as_slice())?;
    let d = basis.ncols();
    let omega = DMatrix::from_fn(d, d, |a, b| {
        ix.eval(&[
            basis.column(a).as_slice(),
            basis.column(b).as_slice(),
        ])
        .unwrap_or(0.0)
    });
    let inv = omega
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate("i_x phi is degenerate on x^perp".into()))?;
    if !(inv.amax().is_finite()) || omega.determinant().abs() < 1e-12 {
        return Err(Error::Degenerate("i_x phi is degenerate on x^perp".into()));
    }
    let j_local = -inv;
    let j = &basis * j_local * basis.transpose();
    Ok(ComplexStructure {
        x: x.clone(),
        basis,
        j,
    })
}

/// Hermitian structure on `x^perp` induced by the standard `phi`, with the
/// phase chosen so that `phi|_{x^perp} = Re(Theta)`.
pub fn hyperplane_structure(x: &DVector<f64>) -> Result<HermitianStructure> {
    let phi = &standard().phi;
    complex_structure_from_phi(phi, x)?.hermitian_structure(phi)
}

/// Random `k`-plane inside the support of `hs`.
pub fn random_subspace_in<R: Rng + ?Sized>(
    hs: &HermitianStructure,
    k: usize,
    rng: &mut R,
) -> Result<Subspace> {
    let local = random_subspace(hs.basis().ncols(), k, rng)?;
    Subspace::from_spanning(&(hs.basis() * local.frame()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::standard_phi;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_orthogonal(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        random_subspace(k, k, rng).unwrap().frame().clone()
    }

    #[test]
    fn phi_sq_cases() {
        assert!((phi_sq(&Subspace::coordinate(7, &[0, 1, 2]).unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(phi_sq(&Subspace::coordinate(7, &[0, 1, 3]).unwrap()).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w = random_subspace(7, 3, &mut rng).unwrap();
        let q = random_orthogonal(3, &mut rng);
        assert!((phi_sq(&w).unwrap() - phi_sq(&w.reframed(&q)).unwrap()).abs() < 1e-12);
        assert!(phi_sq(&Subspace::coordinate(7, &[0, 1]).unwrap()).is_err());
    }

    #[test]
    fn cayley_sq_cases() {
        let real = Subspace::coordinate(8, &[0, 2, 4, 6]).unwrap();
        assert!((cayley_sq(&real).unwrap() - 1.0).abs() < 1e-15);
        let cx = Subspace::coordinate(8, &[0, 1, 2, 3]).unwrap();
        assert!((cayley_sq(&cx).unwrap() - 1.0).abs() < 1e-15);
    }

    /// Brute-force search for a 4-plane with `Phi(W)^2 = 0`: along the path
    /// x1, y1, x2, cos(t) y2 + sin(t) x3 the value moves from 1 to -1, so
    /// bisection on the evaluation oracle finds a zero.
    #[test]
    fn cayley_sq_zero_by_bisection() {
        let w_at = |t: f64| {
            let mut m = DMatrix::zeros(8, 4);
            m[(0, 0)] = 1.0;
            m[(1, 1)] = 1.0;
            m[(2, 2)] = 1.0;
            m[(3, 3)] = t.cos();
            m[(4, 3)] = t.sin();
            Subspace::from_spanning(&m).unwrap()
        };
        let val = |t: f64| form_on_subspace(&standard().cayley, &w_at(t)).unwrap();
        let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
        assert!(val(lo) * val(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if val(lo) * val(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let w = w_at(0.5 * (lo + hi));
        assert!(cayley_sq(&w).unwrap() < 1e-20);
        // contains the complex line span(x1, y1)
        assert!(kaehler_angles(&w, &HermitianStructure::standard(4)).unwrap().thetas[0].abs() < 1e-7);
    }

    #[test]
    fn kaehler_angle_cases() {
        let hs = HermitianStructure::standard(4);
        let line = Subspace::coordinate(8, &[0, 1]).unwrap();
        assert!(kaehler_angles(&line, &hs).unwrap().thetas[0].abs() < 1e-7);
        let totally_real = Subspace::coordinate(8, &[0, 2]).unwrap();
        let t = kaehler_angles(&totally_real, &hs).unwrap().thetas;
        assert!((t[0] - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        let c2 = Subspace::coordinate(8, &[0, 1, 2, 3]).unwrap();
        let t = kaehler_angles(&c2, &hs).unwrap().thetas;
        assert_eq!(t.len(), 2);
        assert!(t.iter().all(|x| x.abs() < 1e-7));
        let odd = Subspace::coordinate(8, &[0, 1, 2]).unwrap();
        assert_eq!(kaehler_angles(&odd, &hs).unwrap().thetas.len(), 1);
    }

    #[test]
    fn theta_cases() {
        let hs = HermitianStructure::standard(4);
        let real = Subspace::coordinate(8, &[0, 2, 4, 6]).unwrap();
        let th = theta(&real, &hs).unwrap();
        assert!((th.squared() - Complex::new(1.0, 0.0)).norm() < 1e-15);
        assert!(!th.sign_determined);
        let c2 = Subspace::coordinate(8, &[0, 1, 2, 3]).unwrap();
        let th = theta(&c2, &hs).unwrap();
        assert!(th.modulus() < 1e-15);
        assert!(th.sign_determined);
        assert!(theta(&Subspace::coordinate(8, &[0, 1, 2]).unwrap(), &hs).is_err());
    }

    #[test]
    fn theta_norm_matches_sines() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in [3, 4] {
            let hs = HermitianStructure::standard(m);
            for _ in 0..500 {
                let w = random_subspace(2 * m, m, &mut rng).unwrap();
                let th = theta(&w, &hs).unwrap();
                let prod: f64 = kaehler_angles(&w, &hs).unwrap().sines().iter().product();
                assert!((th.modulus() - prod).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn perp_cases() {
        let w = Subspace::coordinate(7, &[0, 1, 2]).unwrap();
        let p = w.perp();
        assert!(p.same_span(&Subspace::coordinate(7, &[3, 4, 5, 6]).unwrap()));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random_subspace(8, 3, &mut rng).unwrap();
        let rp = r.perp();
        assert_eq!(rp.dim(), 5);
        assert!(rp.perp().same_span(&r));
        let stacked = DMatrix::from_columns(
            &r.frame()
                .column_iter()
                .chain(rp.frame().column_iter())
                .map(|c| c.clone_owned())
                .collect::<Vec<_>>(),
        );
        assert!(stacked.determinant().abs() > 1.0 - 1e-12);
    }

    #[test]
    fn complex_structure_at_e1() {
        let phi = standard_phi();
        let mut x = DVector::zeros(7);
        x[0] = 1.0;
        let cs = complex_structure_from_phi(&phi, &x).unwrap();
        let e = |i: usize| {
            let mut v = DVector::zeros(7);
            v[i] = 1.0;
            v
        };
        assert!((cs.apply(&e(2)) - e(1)).norm() < 1e-12);
        assert!((cs.apply(&e(1)) + e(2)).norm() < 1e-12);
    }

    #[test]
    fn complex_structure_properties() {
        let phi = standard_phi();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let x = random_subspace(7, 1, &mut rng).unwrap().frame().column(0).clone_owned();
            let cs = complex_structure_from_phi(&phi, &x).unwrap();
            let ix = phi.interior(x.as_slice()).unwrap();
            let proj = DMatrix::identity(7, 7) - &x * x.transpose();
            for _ in 0..5 {
                let v = &proj * DVector::from_fn(7, |_, _| rng.sample::<f64, _>(StandardNormal));
                let w = &proj * DVector::from_fn(7, |_, _| rng.sample::<f64, _>(StandardNormal));
                let jv = cs.apply(&v);
                assert!((cs.apply(&jv) + &v).norm() < 1e-12);
                let lhs = v.dot(&w);
                let rhs = ix.eval(&[jv.as_slice(), w.as_slice()]).unwrap();
                assert!((lhs - rhs).abs() < 1e-12);
                assert!((jv.dot(&cs.apply(&w)) - v.dot(&w)).abs() < 1e-12);
            }
        }
        let mut bad = DVector::zeros(7);
        bad[0] = 2.0;
        assert!(complex_structure_from_phi(&phi, &bad).is_err());
    }

    #[test]
    fn klain_eta_cases() {
        let real = Subspace::coordinate(8, &[0, 2, 4, 6]).unwrap();
        assert!((klain_eta(&real).unwrap() - 1.0).abs() < 1e-14);
        let c2 = Subspace::coordinate(8, &[0, 1, 2, 3]).unwrap();
        assert!((klain_eta(&c2).unwrap() - 1.0).abs() < 1e-14);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let w = random_subspace(8, 4, &mut rng).unwrap();
            assert!((klain_eta(&w).unwrap() - cayley_sq(&w).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn random_subspace_properties() {
        let a = random_subspace_seeded(7, 3, 42).unwrap();
        let b = random_subspace_seeded(7, 3, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.orthonormality_residual() < 1e-12);
        assert!(random_subspace_seeded(7, 0, 1).is_err());
        assert!(random_subspace_seeded(7, 8, 1).is_err());
    }

    /// Statistical oracle: E[P_W] = (k/n) I for a uniform k-plane.
    #[test]
    fn random_subspace_projector_mean() {
        let (n, k, samples) = (7, 3, 100_000);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut sum = DMatrix::<f64>::zeros(n, n);
        let mut sum_sq = DMatrix::<f64>::zeros(n, n);
        for _ in 0..samples {
            let p = random_subspace(n, k, &mut rng).unwrap().projector();
            sum_sq += p.component_mul(&p);
            sum += p;
        }
        let s = samples as f64;
        let mean = &sum / s;
        let target = k as f64 / n as f64;
        for i in 0..n {
            for j in 0..n {
                let var = sum_sq[(i, j)] / s - mean[(i, j)].powi(2);
                let se = (var / s).sqrt();
                let expected = if i == j { target } else { 0.0 };
                assert!((mean[(i, j)] - expected).abs() < 3.0 * se + 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let w = random_subspace_seeded(8, 4, 1).unwrap();
        let text = serde_json::to_string(&w.to_json()).unwrap();
        assert_eq!(Subspace::parse_json(&text).unwrap(), w);
        assert!(Subspace::parse_json(r#"{"n":2,"k":1,"frame":[1.0,1.0]}"#).is_err());
        assert!(Subspace::parse_json(r#"{"n":2,"k":1,"frame":[1.0]}"#).is_err());
    }

    fn e0() -> DVector<f64> {
        let mut x = DVector::zeros(7);
        x[0] = 1.0;
        x
    }

    #[test]
    fn associative_restriction() {
        let hs = hyperplane_structure(&e0()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut worst: f64 = 0.0;
        for _ in 0..2000 {
            let w = random_subspace_in(&hs, 3, &mut rng).unwrap();
            let th = theta(&w, &hs).unwrap();
            let c = kaehler_angles(&w, &hs).unwrap().cosines()[0];
            let rhs = 0.5 * (th.squared() + Complex::new(1.0 - c * c, 0.0)).re;
            worst = worst.max((phi_sq(&w).unwrap() - rhs).abs());
            let direct = form_on_subspace(&standard().phi, &w).unwrap();
            assert!((direct.abs() - th.value.re.abs()).abs() < 1e-10);
        }
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn coassociative_restriction() {
        let hs = hyperplane_structure(&e0()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..2000 {
            let w = random_subspace_in(&hs, 4, &mut rng).unwrap();
            let angles = kaehler_angles(&w, &hs).unwrap();
            assert!(angles.thetas[0].abs() < 1e-6);
            let c2 = angles.cosines()[1];
            assert!((phi_sq(&w.perp()).unwrap() - c2 * c2).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperplane_structure_at_e0_is_coordinate() {
        let hs = hyperplane_structure(&e0()).unwrap();
        assert!((hs.phase() - Complex::new(1.0, 0.0)).norm() < 1e-12);
        let v0 = Subspace::coordinate(7, &[1, 2, 3, 4, 5, 6]).unwrap();
        assert!(hs.support().same_span(&v0));
    }
}
