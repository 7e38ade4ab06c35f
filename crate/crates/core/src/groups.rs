//! Seeded Haar samplers for `SO(n)`, `SU(n)`, `G2` and `Spin(7)`.
//!
//! Seeds split into independent streams by `(seed, stream)`: the child
//! generator is `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `stream`. Work that is chunked by stream index is therefore reproducible
//! regardless of how chunks are distributed over threads.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{Complex, DMatrix, SMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{annihilator_algebra, standard, AlternatingForm, GramForm};

pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const FORM_TOL: f64 = 1e-9;
pub const MIN_WALK_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GroupTag {
    SO7,
    SO8,
    SU3,
    SU4,
    G2,
    #[serde(rename = "SPIN7")]
    Spin7,
}

impl GroupTag {
    /// Size of the real matrices representing the group.
    pub fn dim(self) -> usize {
        match self {
            GroupTag::SO7 | GroupTag::G2 => 7,
            GroupTag::SU3 => 6,
            GroupTag::SO8 | GroupTag::SU4 | GroupTag::Spin7 => 8,
        }
    }

    pub fn is_exceptional(self) -> bool {
        matches!(self, GroupTag::G2 | GroupTag::Spin7)
    }

    pub fn name(self) -> &'static str {
        match self {
            GroupTag::SO7 => "SO7",
            GroupTag::SO8 => "SO8",
            GroupTag::SU3 => "SU3",
            GroupTag::SU4 => "SU4",
            GroupTag::G2 => "G2",
            GroupTag::Spin7 => "SPIN7",
        }
    }

    pub const ALL: [GroupTag; 6] = [
        GroupTag::SO7,
        GroupTag::SO8,
        GroupTag::SU3,
        GroupTag::SU4,
        GroupTag::G2,
        GroupTag::Spin7,
    ];
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupTag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown group '{s}'")))
    }
}

/// An orthogonal matrix certified to lie in the group named by its tag.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    matrix: DMatrix<f64>,
    tag: GroupTag,
}

/// Largest residuals found while certifying an element.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Residuals {
    pub orthogonality: f64,
    pub determinant: f64,
    pub form: f64,
    pub complex: f64,
}

impl GroupElement {
    /// Check all invariants of `tag` and wrap the matrix.
    pub fn certify(matrix: DMatrix<f64>, tag: GroupTag) -> Result<Self> {
        let r = residuals(&matrix, tag)?;
        let fail = |what, residual, tolerance| {
            Err(Error::Certification {
                group: tag.name().into(),
                what,
                residual,
                tolerance,
            })
        };
        if !(r.orthogonality < ORTHOGONALITY_TOL) {
            return fail("orthogonality", r.orthogonality, ORTHOGONALITY_TOL);
        }
        if !(r.determinant < ORTHOGONALITY_TOL) {
            return fail("determinant", r.determinant, ORTHOGONALITY_TOL);
        }
        if !(r.complex < ORTHOGONALITY_TOL) {
            return fail("complex structure", r.complex, ORTHOGONALITY_TOL);
        }
        if !(r.form < FORM_TOL) {
            return fail("defining form", r.form, FORM_TOL);
        }
        Ok(Self { matrix, tag })
    }

    pub fn identity(tag: GroupTag) -> Self {
        let n = tag.dim();
        Self {
            matrix: DMatrix::identity(n, n),
            tag,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    pub fn residuals(&self) -> Residuals {
        residuals(&self.matrix, self.tag).expect("shape checked at construction")
    }

    pub fn to_json(&self) -> GroupElementJson {
        let n = self.matrix.nrows();
        let mut matrix = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                matrix.push(self.matrix[(i, j)]);
            }
        }
        GroupElementJson {
            group: self.tag,
            n,
            matrix,
        }
    }

    pub fn from_json(j: &GroupElementJson) -> Result<Self> {
        if j.n != j.group.dim() {
            return Err(Error::DimensionMismatch {
                expected: j.group.dim(),
                got: j.n,
            });
        }
        if j.matrix.len() != j.n * j.n {
            return Err(Error::DimensionMismatch {
                expected: j.n * j.n,
                got: j.matrix.len(),
            });
        }
        if j.matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("non-finite matrix entry".into()));
        }
        Self::certify(DMatrix::from_row_slice(j.n, j.n, &j.matrix), j.group)
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let j: GroupElementJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }
}

/// `{group, n, matrix}` with the matrix row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroupElementJson {
    pub group: GroupTag,
    pub n: usize,
    pub matrix: Vec<f64>,
}

fn residuals(m: &DMatrix<f64>, tag: GroupTag) -> Result<Residuals> {
    let n = tag.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.nrows(),
        });
    }
    let mut r = Residuals {
        orthogonality: (m.transpose() * m - DMatrix::identity(n, n)).amax(),
        determinant: (m.determinant() - 1.0).abs(),
        ..Residuals::default()
    };
    if !r.orthogonality.is_finite() {
        r.orthogonality = f64::INFINITY;
        return Ok(r);
    }
    let s = standard();
    let form_residual = |f: &AlternatingForm| -> Result<f64> { f.pullback(m)?.max_abs_diff(f) };
    match tag {
        GroupTag::SO7 | GroupTag::SO8 => {}
        GroupTag::G2 => r.form = form_residual(&s.phi)?,
        GroupTag::Spin7 => r.form = form_residual(&s.cayley)?,
        GroupTag::SU3 | GroupTag::SU4 => {
            let j = complex_structure_matrix(n / 2);
            r.complex = (m * &j - &j * m).amax();
            let (re, im) = if n == 6 {
                (&s.beta3, &s.beta3_im)
            } else {
                (&s.beta4, &s.beta4_im)
            };
            r.form = form_residual(re)?.max(form_residual(im)?);
        }
    }
    Ok(r)
}

/// `J` on `R^{2m}` with `J x_j = y_j` in coordinates `(x_1, y_1, ..)`.
pub fn complex_structure_matrix(m: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * m, 2 * m);
    for c in 0..m {
        j[(2 * c + 1, 2 * c)] = 1.0;
        j[(2 * c, 2 * c + 1)] = -1.0;
    }
    j
}

/// Real `2n x 2n` matrix of a complex `n x n` matrix.
pub fn realify(u: &DMatrix<Complex<f64>>) -> DMatrix<f64> {
    let n = u.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = u[(r / 2, c / 2)];
        match (r % 2, c % 2) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    })
}

fn check_skew(x: &DMatrix<f64>) -> Result<()> {
    if x.nrows() != x.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: x.ncols(),
        });
    }
    let r = (x + x.transpose()).amax();
    if !(r < 1e-12) {
        return Err(Error::NotSkew(r));
    }
    Ok(())
}

/// Matrix exponential of a skew matrix (scaling and squaring with Taylor).
pub fn exp_skew(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_skew(x)?;
    let n = x.nrows();
    let (s, scaled) = scale_down(x.norm(), x);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for i in 1..=30 {
        term = &term * &scaled / i as f64;
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    Ok(result)
}

fn scale_down<M>(norm: f64, x: &M) -> (u32, M)
where
    M: Clone + std::ops::Mul<f64, Output = M>,
{
    let mut s = 0u32;
    let mut v = norm;
    while v > 0.25 {
        v *= 0.5;
        s += 1;
    }
    (s, x.clone() * 0.5f64.powi(s as i32))
}

fn exp_fixed<const N: usize>(x: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    let (s, scaled) = scale_down(x.norm(), x);
    let mut result = SMatrix::<f64, N, N>::identity();
    let mut term = SMatrix::<f64, N, N>::identity();
    for i in 1..=30 {
        term = term * scaled / i as f64;
        result += term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = result * result;
    }
    result
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Haar-distributed element of `SO(n)`, `n` in {7, 8}.
pub fn sample_so<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GroupElement> {
    let tag = match n {
        7 => GroupTag::SO7,
        8 => GroupTag::SO8,
        _ => return Err(Error::UnsupportedDimension(n)),
    };
    let q = loop {
        if let Some(q) = crate::linalg::orthonormalize(&gaussian_matrix(n, n, rng)) {
            break q;
        }
    };
    let mut q = q;
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    GroupElement::certify(q, tag)
}

/// Haar-distributed element of `SU(n)`, `n` in {3, 4}, as a real `2n x 2n` matrix.
pub fn sample_su<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<GroupElement> {
    let tag = match n {
        3 => GroupTag::SU3,
        4 => GroupTag::SU4,
        _ => return Err(Error::UnsupportedDimension(n)),
    };
    let u = loop {
        let z = DMatrix::from_fn(n, n, |_, _| {
            Complex::new(
                rng.sample::<f64, _>(StandardNormal),
                rng.sample::<f64, _>(StandardNormal),
            )
        });
        if let Some(u) = complex_orthonormalize(&z) {
            break u;
        }
    };
    let mut u = u;
    let det = u.determinant();
    let fix = det.conj() / det.norm();
    for z in u.column_mut(n - 1).iter_mut() {
        *z *= fix;
    }
    GroupElement::certify(realify(&u), tag)
}

fn complex_orthonormalize(z: &DMatrix<Complex<f64>>) -> Option<DMatrix<Complex<f64>>> {
    let k = z.ncols();
    let mut q = z.clone();
    for j in 0..k {
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dotc(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &qi, Complex::new(1.0, 0.0));
            }
        }
        let norm = q.column(j).norm();
        if norm < 1e-10 {
            return None;
        }
        q.column_mut(j).unscale_mut(norm);
    }
    Some(q)
}

/// Frobenius-orthonormal Lie algebra basis of `G2` (14) or `Spin(7)` (21).
pub fn lie_algebra(tag: GroupTag) -> Result<&'static [DMatrix<f64>]> {
    static G2: OnceLock<Vec<DMatrix<f64>>> = OnceLock::new();
    static SPIN7: OnceLock<Vec<DMatrix<f64>>> = OnceLock::new();
    let build = |form: &AlternatingForm| {
        annihilator_algebra(&[form], &GramForm::identity(form.dim()))
            .expect("standard forms are valid")
            .elements
    };
    match tag {
        GroupTag::G2 => Ok(G2.get_or_init(|| build(&standard().phi))),
        GroupTag::Spin7 => Ok(SPIN7.get_or_init(|| build(&standard().cayley))),
        other => Err(Error::Config(format!("{other} has no random-walk sampler"))),
    }
}

/// Random walk parameters for the exceptional groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub walk_steps: usize,
    pub stride: usize,
    pub step_scale: f64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walk_steps: MIN_WALK_STEPS,
            stride: 20,
            step_scale: 0.5,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_steps < MIN_WALK_STEPS {
            return Err(Error::Config(format!(
                "walk_steps {} below minimum {MIN_WALK_STEPS}",
                self.walk_steps
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be positive".into()));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(Error::Config("step_scale must be positive".into()));
        }
        Ok(())
    }
}

struct Walk<const N: usize> {
    g: SMatrix<f64, N, N>,
    basis: Vec<SMatrix<f64, N, N>>,
}

impl<const N: usize> Walk<N> {
    fn new(basis: &[DMatrix<f64>]) -> Self {
        Self {
            g: SMatrix::identity(),
            basis: basis
                .iter()
                .map(|b| SMatrix::from_iterator(b.iter().copied()))
                .collect(),
        }
    }

    fn advance<R: Rng + ?Sized>(&mut self, steps: usize, scale: f64, rng: &mut R) {
        for _ in 0..steps {
            let mut xi = SMatrix::<f64, N, N>::zeros();
            for b in &self.basis {
                let z: f64 = rng.sample(StandardNormal);
                xi += b * (scale * z);
            }
            self.g = exp_fixed(&xi) * self.g;
        }
    }

    fn current(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(N, N, self.g.iter().copied())
    }
}

enum WalkState {
    G2(Walk<7>),
    Spin7(Walk<8>),
}

/// Seeded sampler for one group. Not shared across threads: fork a child
/// stream per worker or chunk.
pub struct HaarSampler {
    tag: GroupTag,
    seed: u64,
    stream: u64,
    config: WalkConfig,
    rng: ChaCha8Rng,
    walk: Option<WalkState>,
}

impl HaarSampler {
    pub fn new(tag: GroupTag, seed: u64) -> Self {
        Self::with_config(tag, seed, WalkConfig::default()).expect("default config is valid")
    }

    pub fn with_config(tag: GroupTag, seed: u64, config: WalkConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            tag,
            seed,
            stream: 0,
            config,
            rng: stream_rng(seed, 0),
            walk: None,
        })
    }

    /// Independent sampler on stream `stream` of the same seed (fresh walk).
    pub fn fork(&self, stream: u64) -> HaarSampler {
        HaarSampler {
            tag: self.tag,
            seed: self.seed,
            stream,
            config: self.config,
            rng: stream_rng(self.seed, stream),
            walk: None,
        }
    }

    pub fn tag(&self) -> GroupTag {
        self.tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn config(&self) -> WalkConfig {
        self.config
    }

    /// Next certified sample.
    pub fn sample(&mut self) -> Result<GroupElement> {
        match self.tag {
            GroupTag::SO7 => sample_so(7, &mut self.rng),
            GroupTag::SO8 => sample_so(8, &mut self.rng),
            GroupTag::SU3 => sample_su(3, &mut self.rng),
            GroupTag::SU4 => sample_su(4, &mut self.rng),
            GroupTag::G2 | GroupTag::Spin7 => self.sample_exceptional(),
        }
    }

    /// Burn-in on first use, then `stride` steps per emitted element.
    fn sample_exceptional(&mut self) -> Result<GroupElement> {
        let WalkConfig {
            walk_steps,
            stride,
            step_scale,
        } = self.config;
        let steps = if self.walk.is_none() {
            self.walk = Some(match self.tag {
                GroupTag::G2 => WalkState::G2(Walk::new(lie_algebra(GroupTag::G2)?)),
                _ => WalkState::Spin7(Walk::new(lie_algebra(GroupTag::Spin7)?)),
            });
            walk_steps
        } else {
            stride
        };
        let m = match self.walk.as_mut().expect("initialized above") {
            WalkState::G2(w) => {
                w.advance(steps, step_scale, &mut self.rng);
                w.current()
            }
            WalkState::Spin7(w) => {
                w.advance(steps, step_scale, &mut self.rng);
                w.current()
            }
        };
        GroupElement::certify(m, self.tag)
    }

    pub fn sample_many(&mut self, count: usize) -> Result<Vec<GroupElement>> {
        (0..count).map(|_| self.sample()).collect()
    }
}

/// Child generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples drawn in fixed-size chunks, chunk `c` on stream `c`; the result
/// does not depend on `workers`.
pub fn sample_chunked(
    tag: GroupTag,
    seed: u64,
    config: WalkConfig,
    count: usize,
    chunk: usize,
    workers: usize,
) -> Result<Vec<GroupElement>> {
    let base = HaarSampler::with_config(tag, seed, config)?;
    let chunk = chunk.max(1);
    let n_chunks = count.div_ceil(chunk);
    let run = |c: usize| -> Result<Vec<GroupElement>> {
        let len = chunk.min(count - c * chunk);
        base.fork(c as u64).sample_many(len)
    };
    let results: Vec<Result<Vec<GroupElement>>> = crate::parallel::map_indexed(n_chunks, workers, run);
    let mut out = Vec::with_capacity(count);
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

/// `SU(3)` acting on `R^7 = R e_0 + C^3` as the stabilizer of `e_0` in `G2`.
/// The unitary frame of `e_0^perp` is `(e_1, -e_2, e_3, -e_4, e_5, -e_6)`.
pub fn embed_su3_in_r7(g: &GroupElement) -> Result<DMatrix<f64>> {
    if g.tag() != GroupTag::SU3 {
        return Err(Error::Config(format!("expected SU3, got {}", g.tag())));
    }
    let mut b = DMatrix::zeros(7, 6);
    for c in 0..6 {
        b[(c + 1, c)] = if c % 2 == 0 { 1.0 } else { -1.0 };
    }
    let mut out = &b * g.matrix() * b.transpose();
    out[(0, 0)] = 1.0;
    Ok(out)
}

/// `G2` acting on `R^8 = R e_0 + R^7` as the stabilizer of `e_0` in `Spin(7)`.
pub fn embed_g2_in_r8(g: &GroupElement) -> Result<DMatrix<f64>> {
    if g.tag() != GroupTag::G2 {
        return Err(Error::Config(format!("expected G2, got {}", g.tag())));
    }
    let mut out = DMatrix::zeros(8, 8);
    out[(0, 0)] = 1.0;
    out.view_mut((1, 1), (7, 7)).copy_from(g.matrix());
    Ok(out)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Critical value of the two-sample KS statistic at the 1% level.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Per-component sphere-uniformity check of `g v` for unit `v`: returns the
/// largest deviation of the mean from 0 and of the covariance from `I/n`,
/// each in units of its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SphereMoments {
    pub max_mean_z: f64,
    pub max_cov_z: f64,
}

pub fn sphere_moments(samples: &[GroupElement], v: &[f64]) -> SphereMoments {
    use crate::linalg::MeanVar;
    let n = v.len();
    let mut first = vec![MeanVar::default(); n];
    let mut second = vec![MeanVar::default(); n * n];
    for g in samples {
        let w = g.matrix() * nalgebra::DVector::from_column_slice(v);
        for i in 0..n {
            first[i].push(w[i]);
            for j in 0..n {
                second[i * n + j].push(w[i] * w[j]);
            }
        }
    }
    let z = |mv: &MeanVar, target: f64| (mv.mean() - target).abs() / mv.std_error().max(1e-300);
    let max_mean_z = first.iter().map(|m| z(m, 0.0)).fold(0.0, f64::max);
    let mut max_cov_z = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 / n as f64 } else { 0.0 };
            max_cov_z = max_cov_z.max(z(&second[i * n + j], target));
        }
    }
    SphereMoments {
        max_mean_z,
        max_cov_z,
    }
}
