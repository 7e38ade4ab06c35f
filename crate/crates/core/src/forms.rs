//! Dense exterior algebra over `R^n` for `n <= 8`.
//!
//! A degree-`k` form is stored as one coefficient per strictly increasing
//! index tuple, in lexicographic order, so at most `C(8,4) = 70` entries.
//! Indices are 0-based: `e_0 .. e_{n-1}` and dual basis `w_0 .. w_{n-1}`.
//! Evaluation uses the determinant convention `w_I(v_1..v_k) = det(v_j[I_i])`,
//! under which `w_0 ^ w_1 = w_01`.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::det_in_place;

pub const MAX_DIM: usize = 8;

/// Lookup tables for one ambient dimension.
struct DimTable {
    /// `subsets[k]` lists the bitmasks of all k-subsets in lexicographic order.
    subsets: Vec<Vec<u16>>,
    /// Position of each mask inside its `subsets[popcount]` list.
    position: Vec<u16>,
}

fn lex_subsets(n: usize, k: usize) -> Vec<u16> {
    fn rec(start: usize, n: usize, left: usize, mask: u16, out: &mut Vec<u16>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        for i in start..=n - left {
            rec(i + 1, n, left - 1, mask | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, 0, &mut out);
    out
}

fn table(n: usize) -> &'static DimTable {
    static TABLES: OnceLock<Vec<DimTable>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_DIM)
            .map(|n| {
                let subsets: Vec<Vec<u16>> = (0..=n).map(|k| lex_subsets(n, k)).collect();
                let mut position = vec![0u16; 1 << n];
                for list in &subsets {
                    for (p, &m) in list.iter().enumerate() {
                        position[m as usize] = p as u16;
                    }
                }
                DimTable { subsets, position }
            })
            .collect()
    });
    &tables[n]
}

fn mask_indices(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

/// Sign of the shuffle that merges the sorted sets `a` and `b` (disjoint).
fn merge_sign(a: u16, b: u16) -> f64 {
    let mut inversions = 0u32;
    for i in mask_indices(a) {
        // elements of b smaller than i must jump over i
        inversions += (b & ((1u16 << i) - 1)).count_ones();
    }
    if inversions.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Sort `idx` in place, returning the permutation sign, or `None` on a repeat.
fn sort_with_sign(idx: &mut [usize]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..idx.len() {
        let mut j = i;
        while j > 0 && idx[j - 1] > idx[j] {
            idx.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if idx.windows(2).any(|w| w[0] == w[1]) {
        None
    } else {
        Some(sign)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// A degree-`k` alternating multilinear form on `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm {
    dim: usize,
    degree: usize,
    coeffs: Vec<f64>,
}

impl AlternatingForm {
    pub fn zero(dim: usize, degree: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if degree > dim {
            return Err(Error::DegreeOverflow {
                left: degree,
                right: 0,
                dim,
            });
        }
        let len = table(dim).subsets[degree].len();
        Ok(Self {
            dim,
            degree,
            coeffs: vec![0.0; len],
        })
    }

    /// The constant 0-form `c`.
    pub fn scalar(dim: usize, c: f64) -> Result<Self> {
        let mut f = Self::zero(dim, 0)?;
        f.coeffs[0] = c;
        Ok(f)
    }

    /// Build from `(indices, value)` terms; indices may be in any order.
    pub fn from_terms(dim: usize, degree: usize, terms: &[(&[usize], f64)]) -> Result<Self> {
        let mut f = Self::zero(dim, degree)?;
        for (idx, value) in terms {
            f.add_term(idx, *value)?;
        }
        Ok(f)
    }

    /// The monomial `w_{i_1} ^ ... ^ w_{i_k}`.
    pub fn monomial(dim: usize, idx: &[usize]) -> Result<Self> {
        Self::from_terms(dim, idx.len(), &[(idx, 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn check_indices(&self, idx: &[usize]) -> Result<()> {
        if idx.len() != self.degree {
            return Err(Error::Arity {
                expected: self.degree,
                got: idx.len(),
            });
        }
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: bad + 1,
            });
        }
        Ok(())
    }

    fn mask_of(idx: &[usize]) -> u16 {
        idx.iter().fold(0u16, |m, &i| m | (1 << i))
    }

    fn slot(&self, mask: u16) -> usize {
        table(self.dim).position[mask as usize] as usize
    }

    /// Coefficient at an arbitrary index order: the stored value times the
    /// permutation sign, or 0 for a repeated index.
    pub fn coeff(&self, idx: &[usize]) -> Result<f64> {
        self.check_indices(idx)?;
        let mut sorted = idx.to_vec();
        Ok(match sort_with_sign(&mut sorted) {
            Some(sign) => sign * self.coeffs[self.slot(Self::mask_of(&sorted))],
            None => 0.0,
        })
    }

    pub fn add_term(&mut self, idx: &[usize], value: f64) -> Result<()> {
        self.check_indices(idx)?;
        let mut sorted = idx.to_vec();
        if let Some(sign) = sort_with_sign(&mut sorted) {
            let slot = self.slot(Self::mask_of(&sorted));
            self.coeffs[slot] += sign * value;
        }
        Ok(())
    }

    /// Iterate `(sorted indices, coefficient)` over all basis monomials.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        table(self.dim).subsets[self.degree]
            .iter()
            .zip(&self.coeffs)
            .map(|(&m, &c)| (mask_indices(m).collect(), c))
    }

    fn masks(&self) -> &'static [u16] {
        &table(self.dim).subsets[self.degree]
    }

    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.coeffs.iter().filter(|c| c.abs() > tol).count()
    }

    /// Euclidean inner product (monomials orthonormal).
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum())
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Largest absolute coefficient difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DegreeMismatch {
                expected: self.degree,
                got: other.degree,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        if self.degree + other.degree > self.dim {
            return Err(Error::DegreeOverflow {
                left: self.degree,
                right: other.degree,
                dim: self.dim,
            });
        }
        let mut out = Self::zero(self.dim, self.degree + other.degree)?;
        for (&ma, &a) in self.masks().iter().zip(&self.coeffs) {
            if a == 0.0 {
                continue;
            }
            for (&mb, &b) in other.masks().iter().zip(&other.coeffs) {
                if b == 0.0 || ma & mb != 0 {
                    continue;
                }
                let slot = out.slot(ma | mb);
                out.coeffs[slot] += merge_sign(ma, mb) * a * b;
            }
        }
        Ok(out)
    }

    /// Interior product `i_x`.
    pub fn interior(&self, x: &[f64]) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::ZeroDegree);
        }
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = Self::zero(self.dim, self.degree - 1)?;
        for (&m, &c) in self.masks().iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            for (s, i) in mask_indices(m).enumerate() {
                if x[i] == 0.0 {
                    continue;
                }
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                let slot = out.slot(m & !(1 << i));
                out.coeffs[slot] += sign * x[i] * c;
            }
        }
        Ok(out)
    }

    /// Evaluate on `k` vectors.
    pub fn eval(&self, vectors: &[&[f64]]) -> Result<f64> {
        if vectors.len() != self.degree {
            return Err(Error::Arity {
                expected: self.degree,
                got: vectors.len(),
            });
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok(self.eval_unchecked(vectors))
    }

    /// Evaluate on the columns of an `n x k` matrix.
    pub fn eval_columns(&self, m: &DMatrix<f64>) -> Result<f64> {
        if m.nrows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: m.nrows(),
            });
        }
        if m.ncols() != self.degree {
            return Err(Error::Arity {
                expected: self.degree,
                got: m.ncols(),
            });
        }
        let cols: Vec<&[f64]> = (0..m.ncols())
            .map(|j| {
                let start = j * m.nrows();
                &m.as_slice()[start..start + m.nrows()]
            })
            .collect();
        Ok(self.eval_unchecked(&cols))
    }

    fn eval_unchecked(&self, vectors: &[&[f64]]) -> f64 {
        let k = self.degree;
        let mut buf = [0.0f64; MAX_DIM * MAX_DIM];
        let mut total = 0.0;
        for (&m, &c) in self.masks().iter().zip(&self.coeffs) {
            if c == 0.0 {
                continue;
            }
            for (r, i) in mask_indices(m).enumerate() {
                for (col, v) in vectors.iter().enumerate() {
                    buf[r * k + col] = v[i];
                }
            }
            total += c * det_in_place(k, &mut buf[..k * k]);
        }
        total
    }

    /// Pullback `(g^* w)(v_1..v_k) = w(g v_1, .., g v_k)`.
    pub fn pullback(&self, g: &DMatrix<f64>) -> Result<Self> {
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: g.nrows(),
            });
        }
        let k = self.degree;
        let mut out = Self::zero(self.dim, k)?;
        let mut buf = [0.0f64; MAX_DIM * MAX_DIM];
        let nonzero: Vec<(u16, f64)> = self
            .masks()
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&m, &c)| (m, c))
            .collect();
        for (slot, &target) in out.masks().iter().enumerate() {
            let mut cols = [0usize; MAX_DIM];
            for (c, j) in mask_indices(target).enumerate() {
                cols[c] = j;
            }
            let cols = &cols[..k];
            let mut acc = 0.0;
            for &(m, c) in &nonzero {
                for (r, i) in mask_indices(m).enumerate() {
                    for (ci, &j) in cols.iter().enumerate() {
                        buf[r * k + ci] = g[(i, j)];
                    }
                }
                acc += c * det_in_place(k, &mut buf[..k * k]);
            }
            out.coeffs[slot] = acc;
        }
        Ok(out)
    }

    /// Derivation action `(L_X w)(v_1..v_k) = -sum_s w(.., X v_s, ..)`.
    /// `L_X w = 0` exactly when `w` is invariant under `exp(tX)`.
    pub fn derivation(&self, x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.nrows(),
            });
        }
        let mut out = Self::zero(self.dim, self.degree)?;
        for (slot, &target) in self.masks().iter().enumerate() {
            let idx: Vec<usize> = mask_indices(target).collect();
            let mut acc = 0.0;
            for s in 0..idx.len() {
                for m in 0..self.dim {
                    let xm = x[(m, idx[s])];
                    if xm == 0.0 {
                        continue;
                    }
                    let mut replaced = idx.clone();
                    replaced[s] = m;
                    let mut sorted = replaced;
                    if let Some(sign) = sort_with_sign(&mut sorted) {
                        acc += xm * sign * self.coeffs[self.slot(Self::mask_of(&sorted))];
                    }
                }
            }
            out.coeffs[slot] = -acc;
        }
        Ok(out)
    }

    /// Hodge star with respect to a positive definite Gram form and orientation.
    pub fn hodge_star(&self, gram: &GramForm, orientation: Orientation) -> Result<Self> {
        if gram.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: gram.dim(),
            });
        }
        let basis = gram.orthonormal_basis()?;
        // coefficients in the orthonormal frame
        let in_frame = self.pullback(&basis)?;
        let n = self.dim;
        let full: u16 = ((1u32 << n) - 1) as u16;
        let mut star = Self::zero(n, n - self.degree)?;
        for (&m, &c) in in_frame.masks().iter().zip(&in_frame.coeffs) {
            if c == 0.0 {
                continue;
            }
            let comp = full & !m;
            let slot = star.slot(comp);
            star.coeffs[slot] += merge_sign(m, comp) * c;
        }
        let star = star.scaled(orientation.sign());
        let inv = basis
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite)?;
        star.pullback(&inv)
    }

    /// Coefficient of the coordinate top form (requires degree = dim).
    pub fn top_coefficient(&self) -> Result<f64> {
        if self.degree != self.dim {
            return Err(Error::DegreeMismatch {
                expected: self.dim,
                got: self.degree,
            });
        }
        Ok(self.coeffs[0])
    }

    pub fn to_json(&self) -> FormJson {
        FormJson {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.terms().filter(|(_, c)| *c != 0.0).collect(),
        }
    }

    pub fn from_json(j: &FormJson) -> Result<Self> {
        let mut f = Self::zero(j.dim, j.degree)?;
        for (idx, value) in &j.coeffs {
            f.check_indices(idx)?;
            if !idx.windows(2).all(|w| w[0] < w[1]) {
                return Err(Error::InvalidValuation(format!(
                    "form keys must be strictly increasing, got {idx:?}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::InvalidValuation("non-finite coefficient".into()));
            }
            let slot = f.slot(Self::mask_of(idx));
            if f.coeffs[slot] != 0.0 {
                return Err(Error::InvalidValuation(format!("duplicate key {idx:?}")));
            }
            f.coeffs[slot] = *value;
        }
        Ok(f)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let j: FormJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }
}

impl Add for &AlternatingForm {
    type Output = AlternatingForm;
    fn add(self, rhs: Self) -> AlternatingForm {
        assert!(self.dim == rhs.dim && self.degree == rhs.degree, "shape mismatch");
        AlternatingForm {
            dim: self.dim,
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &AlternatingForm {
    type Output = AlternatingForm;
    fn sub(self, rhs: Self) -> AlternatingForm {
        self + &(-rhs)
    }
}

impl Neg for &AlternatingForm {
    type Output = AlternatingForm;
    fn neg(self) -> AlternatingForm {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &AlternatingForm {
    type Output = AlternatingForm;
    fn mul(self, s: f64) -> AlternatingForm {
        self.scaled(s)
    }
}

/// JSON fixture shape: `{dim, degree, coeffs: [[indices...], value]}`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FormJson {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<(Vec<usize>, f64)>,
}

/// Value assigned to the coordinate top form `w_0 ^ .. ^ w_{n-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeScale {
    tau: f64,
}

impl VolumeScale {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Self { tau })
        } else {
            Err(Error::Degenerate(format!("volume scale must be positive, got {tau}")))
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Symmetric bilinear form in coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GramForm {
    entries: DMatrix<f64>,
}

impl GramForm {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let asym = (&entries - entries.transpose()).amax();
        if asym > 1e-12 * entries.amax().max(1.0) {
            return Err(Error::Degenerate(format!("gram not symmetric ({asym:.2e})")));
        }
        Ok(Self { entries })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn is_positive_definite(&self) -> bool {
        self.entries.clone().cholesky().is_some()
    }

    /// Columns form a positively oriented basis orthonormal for this form:
    /// `B^T G B = I` with `B = L^{-T}`, `G = L L^T`.
    pub fn orthonormal_basis(&self) -> Result<DMatrix<f64>> {
        let chol = self
            .entries
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let linv = l.try_inverse().ok_or(Error::NotPositiveDefinite)?;
        Ok(linv.transpose())
    }
}

/// The associated symmetric form: entry `(i,j)` is `tau` applied to the top
/// form `(1/6) i_{e_i} phi ^ i_{e_j} phi ^ phi`.
pub fn bilinear_from_phi(phi: &AlternatingForm, scale: VolumeScale) -> Result<GramForm> {
    if phi.dim() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 7,
            got: phi.dim(),
        });
    }
    if phi.degree() != 3 {
        return Err(Error::DegreeMismatch {
            expected: 3,
            got: phi.degree(),
        });
    }
    let contractions: Vec<AlternatingForm> = (0..7)
        .map(|i| {
            let mut e = [0.0; 7];
            e[i] = 1.0;
            phi.interior(&e)
        })
        .collect::<Result<_>>()?;
    let mut g = DMatrix::zeros(7, 7);
    for i in 0..7 {
        for j in i..7 {
            let top = contractions[i].wedge(&contractions[j])?.wedge(phi)?;
            let v = scale.tau() * top.top_coefficient()? / 6.0;
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    GramForm::new(g)
}

/// Result of fixing the scalar product induced by a positive 3-form.
#[derive(Debug, Clone)]
pub struct MetricNormalization {
    pub gram: GramForm,
    pub scale: VolumeScale,
    /// Orientation of the coordinate frame relative to the one making `b(x,x) > 0`.
    pub orientation: Orientation,
    /// `|tau' - tau|` where `tau'` is induced by the returned scalar product.
    pub fixed_point_residual: f64,
}

/// Induced volume scale: value of the coordinate top form on a positively
/// oriented orthonormal basis of `gram`.
pub fn induced_scale(gram: &GramForm, orientation: Orientation) -> Result<f64> {
    let b = gram.orthonormal_basis()?;
    Ok(orientation.sign() * b.determinant())
}

/// The unique volume scale whose induced scalar product reproduces it.
pub fn normalize_metric(phi: &AlternatingForm) -> Result<MetricNormalization> {
    let trial = bilinear_from_phi(phi, VolumeScale::new(1.0)?)?;
    let (orientation, g0) = if trial.is_positive_definite() {
        (Orientation::Positive, trial.entries().clone())
    } else {
        let flipped = -trial.entries();
        if flipped.clone().cholesky().is_none() {
            return Err(Error::NotPositive);
        }
        // b(x,x) > 0 fixes the opposite orientation of the coordinate frame.
        (Orientation::Negative, flipped)
    };
    let det0 = g0.determinant();
    // tau -> t^2 tau scales tau' by t^-7; fixed point at t = det^{-1/18}.
    let t = det0.powf(-1.0 / 18.0);
    let tau = t * t;
    let gram = GramForm::new(g0 * tau)?;
    let induced = induced_scale(&gram, Orientation::Positive)?;
    Ok(MetricNormalization {
        gram,
        scale: VolumeScale::new(tau)?,
        orientation,
        fixed_point_residual: (induced - tau).abs(),
    })
}

/// The standard positive 3-form on `R^7`
/// `w123 + w145 + w167 + w246 - w257 - w347 - w356` (1-based labels).
pub fn standard_phi() -> AlternatingForm {
    const TERMS: [([usize; 3], f64); 7] = [
        ([0, 1, 2], 1.0),
        ([0, 3, 4], 1.0),
        ([0, 5, 6], 1.0),
        ([1, 3, 5], 1.0),
        ([1, 4, 6], -1.0),
        ([2, 3, 6], -1.0),
        ([2, 4, 5], -1.0),
    ];
    let terms: Vec<(&[usize], f64)> = TERMS.iter().map(|(i, c)| (&i[..], *c)).collect();
    AlternatingForm::from_terms(7, 3, &terms).expect("static shape")
}

/// Kaehler form `sum_j dx_j ^ dy_j` on `C^n = R^{2n}` with coordinates
/// ordered `(x_1, y_1, .., x_n, y_n)`.
pub fn kaehler_form(n_complex: usize) -> Result<AlternatingForm> {
    let mut f = AlternatingForm::zero(2 * n_complex, 2)?;
    for j in 0..n_complex {
        f.add_term(&[2 * j, 2 * j + 1], 1.0)?;
    }
    Ok(f)
}

/// Real and imaginary parts of `dz_1 ^ .. ^ dz_n`.
pub fn complex_volume_form(n_complex: usize) -> Result<(AlternatingForm, AlternatingForm)> {
    let n = 2 * n_complex;
    let mut re = AlternatingForm::zero(n, n_complex)?;
    let mut im = AlternatingForm::zero(n, n_complex)?;
    for ys in 0u32..(1 << n_complex) {
        let idx: Vec<usize> = (0..n_complex)
            .map(|j| 2 * j + ((ys >> j) & 1) as usize)
            .collect();
        let count = ys.count_ones();
        // i^count
        let (r, i) = match count % 4 {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        re.add_term(&idx, r)?;
        im.add_term(&idx, i)?;
    }
    Ok((re, im))
}

/// The Cayley form `1/2 Omega ^ Omega + Re dz_1^..^dz_4` on `R^8 = C^4`.
pub fn standard_cayley() -> AlternatingForm {
    let omega = kaehler_form(4).expect("static shape");
    let (beta, _) = complex_volume_form(4).expect("static shape");
    let half_sq = omega.wedge(&omega).expect("static shape").scaled(0.5);
    &half_sq + &beta
}

/// Shared immutable copies of the standard structures.
pub struct Standard {
    pub phi: AlternatingForm,
    pub star_phi: AlternatingForm,
    pub cayley: AlternatingForm,
    pub omega4: AlternatingForm,
    pub beta4: AlternatingForm,
    pub beta4_im: AlternatingForm,
    pub omega3: AlternatingForm,
    pub beta3: AlternatingForm,
    pub beta3_im: AlternatingForm,
}

pub fn standard() -> &'static Standard {
    static S: OnceLock<Standard> = OnceLock::new();
    S.get_or_init(|| {
        let phi = standard_phi();
        let star_phi = phi
            .hodge_star(&GramForm::identity(7), Orientation::Positive)
            .expect("identity gram");
        let (beta4, beta4_im) = complex_volume_form(4).expect("static");
        let (beta3, beta3_im) = complex_volume_form(3).expect("static");
        Standard {
            phi,
            star_phi,
            cayley: standard_cayley(),
            omega4: kaehler_form(4).expect("static"),
            beta4,
            beta4_im,
            omega3: kaehler_form(3).expect("static"),
            beta3,
            beta3_im,
        }
    })
}

/// Orthonormal (Frobenius) basis of the Lie algebra annihilating a set of forms.
#[derive(Debug, Clone)]
pub struct AnnihilatorBasis {
    pub elements: Vec<DMatrix<f64>>,
    /// Singular values of the linear map `X -> (L_X form)`, descending.
    pub singular_values: Vec<f64>,
    /// Smallest retained singular value over the largest discarded one.
    pub gap: f64,
}

impl AnnihilatorBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// Largest residual of `[X_a, X_b]` after projection onto the span.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for a in &self.elements {
            for b in &self.elements {
                let c = a * b - b * a;
                let mut r = c.clone();
                for e in &self.elements {
                    let coef = e.dot(&c);
                    r -= e * coef;
                }
                worst = worst.max(r.norm());
            }
        }
        worst
    }
}

/// Basis of `{X in so(n, g) : L_X form = 0 for every form}`.
pub fn annihilator_algebra(forms: &[&AlternatingForm], gram: &GramForm) -> Result<AnnihilatorBasis> {
    let n = gram.dim();
    if forms.is_empty() {
        return Err(Error::Degenerate("no forms given".into()));
    }
    for f in forms {
        if f.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.dim(),
            });
        }
    }
    let ginv = gram
        .entries()
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite)?;
    // X = G^{-1} S with S ranging over a basis of skew matrices.
    let mut generators = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let mut s = DMatrix::zeros(n, n);
            s[(a, b)] = -std::f64::consts::FRAC_1_SQRT_2;
            s[(b, a)] = std::f64::consts::FRAC_1_SQRT_2;
            generators.push(&ginv * s);
        }
    }
    let rows: usize = forms.iter().map(|f| f.coeffs().len()).sum();
    let mut map = DMatrix::zeros(rows.max(generators.len()), generators.len());
    for (col, x) in generators.iter().enumerate() {
        let mut r = 0;
        for f in forms {
            let d = f.derivation(x)?;
            for &c in d.coeffs() {
                map[(r, col)] = c;
                r += 1;
            }
        }
    }
    let svd = map.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let top = sv.first().copied().unwrap_or(0.0).max(1e-300);
    let threshold = 1e-8 * top;
    let null: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&i| svd.singular_values[i] <= threshold)
        .collect();
    let kept_min = sv.iter().copied().filter(|&s| s > threshold).fold(f64::INFINITY, f64::min);
    let null_max = sv.iter().copied().filter(|&s| s <= threshold).fold(0.0, f64::max);
    let gap = if null.is_empty() {
        f64::INFINITY
    } else {
        kept_min / null_max.max(1e-300)
    };
    let mut elements: Vec<DMatrix<f64>> = Vec::new();
    for &i in &null {
        let row = v_t.row(i);
        let mut x = DMatrix::zeros(n, n);
        for (c, g) in row.iter().zip(&generators) {
            x += g * *c;
        }
        // Frobenius Gram-Schmidt (only matters for a non-identity gram)
        for e in &elements {
            let p = e.dot(&x);
            x -= e * p;
        }
        let norm = x.norm();
        if norm > 1e-12 {
            elements.push(x / norm);
        }
    }
    Ok(AnnihilatorBasis {
        elements,
        singular_values: sv,
        gap,
    })
}

/// Convert a slice to a vector (helper for callers holding `DVector`s).
pub fn as_slice(v: &DVector<f64>) -> &[f64] {
    v.as_slice()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    /// Direct multilinear oracle: sum over permutations of the coefficient
    /// tensor, independent of the determinant path used by `eval`.
    fn brute_eval(f: &AlternatingForm, vs: &[Vec<f64>]) -> f64 {
        let n = f.dim();
        let k = vs.len();
        let mut total = 0.0;
        let mut idx = vec![0usize; k];
        loop {
            let c = f.coeff(&idx).unwrap();
            if c != 0.0 {
                let mut prod = c;
                for (s, &i) in idx.iter().enumerate() {
                    prod *= vs[s][i];
                }
                // sum over all index tuples of c_{i1..ik} v1_i1 .. vk_ik
                total += prod;
            }
            let mut p = 0;
            loop {
                if p == k {
                    return total;
                }
                idx[p] += 1;
                if idx[p] < n {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
    }

    #[test]
    fn wedge_basis_cases() {
        let w1 = AlternatingForm::monomial(7, &[0]).unwrap();
        let w2 = AlternatingForm::monomial(7, &[1]).unwrap();
        let w12 = w1.wedge(&w2).unwrap();
        assert_eq!(w12.coeff(&[0, 1]).unwrap(), 1.0);
        assert_eq!(w12.nonzero_count(0.0), 1);
        assert_eq!(w12.wedge(&w12).unwrap().norm(), 0.0);
        let w23 = AlternatingForm::monomial(7, &[1, 2]).unwrap();
        let w45 = AlternatingForm::monomial(7, &[3, 4]).unwrap();
        let w2345 = w23.wedge(&w45).unwrap();
        assert_eq!(w2345.coeff(&[1, 2, 3, 4]).unwrap(), 1.0);
        assert_eq!(w2345.nonzero_count(0.0), 1);
    }

    #[test]
    fn wedge_errors() {
        let a = AlternatingForm::monomial(7, &[0, 1, 2, 3]).unwrap();
        assert!(matches!(a.wedge(&a), Err(Error::DegreeOverflow { .. })));
        let b = AlternatingForm::monomial(8, &[0]).unwrap();
        assert!(matches!(a.wedge(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn graded_anticommutativity_and_associativity() {
        let a = AlternatingForm::from_terms(7, 2, &[(&[0, 3], 1.5), (&[2, 5], -0.5)]).unwrap();
        let b = AlternatingForm::from_terms(7, 1, &[(&[1], 2.0), (&[6], 1.0)]).unwrap();
        let c = standard_phi();
        let ab = a.wedge(&b).unwrap();
        let ba = b.wedge(&a).unwrap();
        assert!(ab.max_abs_diff(&ba).unwrap() < 1e-15); // (-1)^{2*1} = +1
        let bb = b.wedge(&AlternatingForm::monomial(7, &[4]).unwrap()).unwrap();
        let bb_rev = AlternatingForm::monomial(7, &[4]).unwrap().wedge(&b).unwrap();
        assert!(bb.max_abs_diff(&-&bb_rev).unwrap() < 1e-15);
        let left = ab.wedge(&AlternatingForm::monomial(7, &[4]).unwrap()).unwrap();
        let right = a
            .wedge(&b.wedge(&AlternatingForm::monomial(7, &[4]).unwrap()).unwrap())
            .unwrap();
        assert!(left.max_abs_diff(&right).unwrap() < 1e-15);
        let _ = c;
    }

    #[test]
    fn interior_cases() {
        let w123 = AlternatingForm::monomial(7, &[0, 1, 2]).unwrap();
        let r = w123.interior(&e(7, 0)).unwrap();
        assert_eq!(r.coeff(&[1, 2]).unwrap(), 1.0);
        let w13 = AlternatingForm::monomial(7, &[0, 2]).unwrap();
        assert_eq!(w13.interior(&e(7, 1)).unwrap().norm(), 0.0);
        let r3 = w123.interior(&e(7, 2)).unwrap();
        assert_eq!(r3.coeff(&[0, 1]).unwrap(), 1.0);
        // oracle: (i_{e3} w123)(e1, e2) = w123(e3, e1, e2) evaluated by brute force
        let direct = brute_eval(&w123, &[e(7, 2), e(7, 0), e(7, 1)]);
        assert_eq!(direct, 1.0);
        assert!(matches!(
            AlternatingForm::scalar(7, 1.0).unwrap().interior(&e(7, 0)),
            Err(Error::ZeroDegree)
        ));
    }

    #[test]
    fn interior_squares_to_zero_and_leibniz() {
        let phi = standard_phi();
        let x = [0.3, -1.0, 0.2, 0.5, 0.0, 1.1, -0.4];
        let ii = phi.interior(&x).unwrap().interior(&x).unwrap();
        assert!(ii.norm() < 1e-15);
        // i_x (a ^ b) = i_x a ^ b + (-1)^deg a  a ^ i_x b
        let a = AlternatingForm::from_terms(7, 2, &[(&[0, 1], 1.0), (&[3, 6], 2.0)]).unwrap();
        let lhs = a.wedge(&phi).unwrap().interior(&x).unwrap();
        let rhs = &a.interior(&x).unwrap().wedge(&phi).unwrap()
            + &a.wedge(&phi.interior(&x).unwrap()).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-14);
    }

    #[test]
    fn eval_standard_phi() {
        let phi = standard_phi();
        let ev = |i: usize, j: usize, k: usize| {
            phi.eval(&[&e(7, i), &e(7, j), &e(7, k)]).unwrap()
        };
        assert_eq!(ev(0, 1, 2), 1.0);
        assert_eq!(ev(2, 4, 5), -1.0);
        assert_eq!(ev(0, 1, 3), 0.0);
        assert!(matches!(phi.eval(&[&e(7, 0)]), Err(Error::Arity { .. })));
    }

    #[test]
    fn eval_matches_brute_force_and_is_alternating() {
        let phi = standard_phi();
        let v1 = vec![0.3, -0.1, 0.7, 1.0, 0.2, -0.5, 0.9];
        let v2 = vec![-1.0, 0.4, 0.1, 0.0, 0.6, 0.3, -0.2];
        let v3 = vec![0.5, 0.5, -0.5, 0.25, -1.0, 0.0, 0.8];
        let a = phi.eval(&[&v1, &v2, &v3]).unwrap();
        let b = brute_eval(&phi, &[v1.clone(), v2.clone(), v3.clone()]);
        assert!((a - b).abs() < 1e-14);
        assert!(phi.eval(&[&v1, &v2, &v1]).unwrap().abs() < 1e-15);
        let swapped = phi.eval(&[&v2, &v1, &v3]).unwrap();
        assert!((a + swapped).abs() < 1e-14);
    }

    #[test]
    fn standard_phi_coefficients() {
        let phi = standard_phi();
        assert_eq!(phi.coeff(&[1, 3, 5]).unwrap(), 1.0);
        assert_eq!(phi.coeff(&[1, 4, 6]).unwrap(), -1.0);
        assert_eq!(phi.nonzero_count(0.0), 7);
        assert_eq!(phi.coeff(&[3, 1, 5]).unwrap(), -1.0);
    }

    #[test]
    fn hodge_star_cases() {
        let g = GramForm::identity(7);
        let w123 = AlternatingForm::monomial(7, &[0, 1, 2]).unwrap();
        let s = w123.hodge_star(&g, Orientation::Positive).unwrap();
        assert!((s.coeff(&[3, 4, 5, 6]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(s.nonzero_count(1e-15), 1);
        let ss = s.hodge_star(&g, Orientation::Positive).unwrap();
        assert!(ss.max_abs_diff(&w123).unwrap() < 1e-15);
        let top = AlternatingForm::monomial(7, &[0, 1, 2, 3, 4, 5, 6]).unwrap();
        let st = top.hodge_star(&g, Orientation::Positive).unwrap();
        assert_eq!(st.degree(), 0);
        assert!((st.coeffs()[0] - 1.0).abs() < 1e-15);
        let bad = GramForm::new(DMatrix::from_diagonal_element(7, 7, -1.0)).unwrap();
        assert!(matches!(
            w123.hodge_star(&bad, Orientation::Positive),
            Err(Error::NotPositiveDefinite)
        ));
    }

    #[test]
    fn hodge_star_non_euclidean_gram() {
        // alpha ^ *beta = <alpha, beta>_G vol_G for a diagonal metric
        let d = [1.0, 4.0, 9.0, 1.0, 0.25, 2.0, 1.0];
        let g = GramForm::new(DMatrix::from_diagonal(&DVector::from_row_slice(&d))).unwrap();
        let a = AlternatingForm::monomial(7, &[0, 1]).unwrap();
        let sa = a.hodge_star(&g, Orientation::Positive).unwrap();
        let top = a.wedge(&sa).unwrap().top_coefficient().unwrap();
        // |w0^w1|_G^2 = 1/(g00 g11); vol_G = sqrt(det G) w_top
        let expected = (1.0 / (d[0] * d[1])) * d.iter().product::<f64>().sqrt();
        assert!((top - expected).abs() < 1e-12);
        let ss = sa.hodge_star(&g, Orientation::Positive).unwrap();
        // (-1)^{2*5} = +1
        assert!(ss.max_abs_diff(&a).unwrap() < 1e-12);
    }

    #[test]
    fn gram_of_standard_phi_is_identity() {
        let g = bilinear_from_phi(&standard_phi(), VolumeScale::new(1.0).unwrap()).unwrap();
        assert!((g.entries() - DMatrix::identity(7, 7)).amax() < 1e-14);
        let degenerate =
            bilinear_from_phi(&AlternatingForm::monomial(7, &[0, 1, 2]).unwrap(), VolumeScale::new(1.0).unwrap())
                .unwrap();
        assert_eq!(degenerate.entries().amax(), 0.0);
        assert!(matches!(
            bilinear_from_phi(&kaehler_form(3).unwrap(), VolumeScale::new(1.0).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn normalization_fixed_point() {
        let n = normalize_metric(&standard_phi()).unwrap();
        assert!((n.gram.entries() - DMatrix::identity(7, 7)).amax() < 1e-12);
        assert!((n.scale.tau() - 1.0).abs() < 1e-12);
        assert!(n.fixed_point_residual < 1e-12);
        for c in [0.5, 2.0, 3.7] {
            let m = normalize_metric(&standard_phi().scaled(c)).unwrap();
            assert!(m.gram.is_positive_definite());
            assert!(m.fixed_point_residual < 1e-12, "c={c}");
        }
        // -phi flips the orientation but is still positive
        let neg = normalize_metric(&standard_phi().scaled(-1.0)).unwrap();
        assert_eq!(neg.orientation, Orientation::Negative);
        assert!(matches!(
            normalize_metric(&AlternatingForm::monomial(7, &[0, 1, 2]).unwrap()),
            Err(Error::NotPositive)
        ));
    }

    #[test]
    fn cayley_evaluations() {
        let cay = standard_cayley();
        // complex 2-plane spanned by x1, y1, x2, y2
        let v = cay.eval(&[&e(8, 0), &e(8, 1), &e(8, 2), &e(8, 3)]).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
        // real 4-plane x1..x4
        let r = cay.eval(&[&e(8, 0), &e(8, 2), &e(8, 4), &e(8, 6)]).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        let a = vec![1.0, 0.5, 0.0, 0.0, 0.2, 0.0, 0.0, 0.0];
        let dep: Vec<f64> = a.iter().zip(e(8, 2)).map(|(x, y)| x + 2.0 * y).collect();
        let z = cay.eval(&[&a, &e(8, 2), &dep, &e(8, 5)]).unwrap();
        assert!(z.abs() < 1e-15);
        // 14 monomials: 6 from Omega^2/2 and 8 from Re det
        assert_eq!(cay.nonzero_count(1e-15), 14);
    }

    #[test]
    fn annihilator_dimensions() {
        let s = standard();
        let g2 = annihilator_algebra(&[&s.phi], &GramForm::identity(7)).unwrap();
        assert_eq!(g2.dim(), 14);
        assert!(g2.gap > 1e6);
        assert!(g2.closure_residual() < 1e-9);
        let spin7 = annihilator_algebra(&[&s.cayley], &GramForm::identity(8)).unwrap();
        assert_eq!(spin7.dim(), 21);
        assert!(spin7.gap > 1e6);
        let su4 =
            annihilator_algebra(&[&s.omega4, &s.beta4, &s.beta4_im], &GramForm::identity(8)).unwrap();
        assert_eq!(su4.dim(), 15);
        for x in &g2.elements {
            assert!((x + x.transpose()).amax() < 1e-12);
            assert!(s.phi.derivation(x).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn pullback_matches_eval() {
        let phi = standard_phi();
        let g = DMatrix::from_fn(7, 7, |i, j| ((i * 3 + j * 5) % 7) as f64 * 0.1 - 0.2);
        let pb = phi.pullback(&g).unwrap();
        let v = pb.eval(&[&e(7, 0), &e(7, 3), &e(7, 6)]).unwrap();
        let cols: Vec<Vec<f64>> = [0, 3, 6].iter().map(|&j| g.column(j).iter().copied().collect()).collect();
        let w = phi.eval(&[&cols[0], &cols[1], &cols[2]]).unwrap();
        assert!((v - w).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_rejects_bad_keys() {
        let phi = standard_phi();
        let text = serde_json::to_string(&phi.to_json()).unwrap();
        assert_eq!(AlternatingForm::parse_json(&text).unwrap(), phi);
        assert!(AlternatingForm::parse_json(r#"{"dim":7,"degree":2,"coeffs":[[[1,0],1.0]]}"#).is_err());
        assert!(AlternatingForm::parse_json(r#"{"dim":7,"degree":2,"coeffs":[[[0,1],1.0],[[0,1],2.0]]}"#).is_err());
        assert!(AlternatingForm::parse_json(r#"{"dim":9,"degree":2,"coeffs":[]}"#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn form(dim: usize, degree: usize) -> impl Strategy<Value = AlternatingForm> {
            let len = crate::linalg::binomial(dim, degree) as usize;
            proptest::collection::vec(-2.0f64..2.0, len).prop_map(move |c| {
                let mut f = AlternatingForm::zero(dim, degree).unwrap();
                f.coeffs.copy_from_slice(&c);
                f
            })
        }

        proptest! {
            #[test]
            fn hodge_is_isometry(a in form(7, 3), b in form(7, 3)) {
                let g = GramForm::identity(7);
                let sa = a.hodge_star(&g, Orientation::Positive).unwrap();
                let sb = b.hodge_star(&g, Orientation::Positive).unwrap();
                prop_assert!((sa.inner(&sb).unwrap() - a.inner(&b).unwrap()).abs() < 1e-12);
            }

            #[test]
            fn double_star_sign(a in form(8, 3)) {
                let g = GramForm::identity(8);
                let ss = a.hodge_star(&g, Orientation::Positive).unwrap()
                    .hodge_star(&g, Orientation::Positive).unwrap();
                // (-1)^{3*5} = -1
                prop_assert!(ss.max_abs_diff(&-&a).unwrap() < 1e-12);
            }

            #[test]
            fn repeated_vector_gives_zero(v in proptest::collection::vec(-1.0f64..1.0, 7),
                                          w in proptest::collection::vec(-1.0f64..1.0, 7)) {
                let phi = standard_phi();
                prop_assert!(phi.eval(&[&v, &w, &v]).unwrap().abs() < 1e-14);
            }

            #[test]
            fn json_round_trip(a in form(8, 4)) {
                let text = serde_json::to_string(&a.to_json()).unwrap();
                prop_assert_eq!(AlternatingForm::parse_json(&text).unwrap(), a);
            }
        }
    }
}
