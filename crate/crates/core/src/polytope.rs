//! Convex polytopes from closed-form families.
//!
//! Outer angles are Gaussian measures of normal cones inside the full
//! orthogonal complement of the face. A normal cone is stored as the
//! constraint directions `d_j` (edges leaving the face, projected to
//! `W_F^perp`); its measure is the Gaussian orthant probability
//! `P(<Z, d_j> <= 0 for all j)`. The correlation matrix of the `d_j` splits
//! into independent blocks; blocks of size at most 3 have closed forms,
//! larger ones are sampled.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::Subspace;
use crate::groups::{stream_rng, GroupElement};
use crate::intersect::{Body, MinkowskiDifference, MAXN};
use crate::linalg::{complement, orthonormalize, MeanVar};

const FRAME_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `center + frame * [-h, h]`, frame columns orthonormal.
    Box {
        center: DVector<f64>,
        frame: DMatrix<f64>,
        half_lengths: Vec<f64>,
    },
    /// Affinely independent vertices (stored on the polytope).
    Simplex,
    /// `rotation * (left x right) + offset` with `left` in `R^a`, `right` in `R^b`.
    Product {
        left: Box<Polytope>,
        right: Box<Polytope>,
        rotation: DMatrix<f64>,
        offset: DVector<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    n: usize,
    family: Family,
    vertices: Vec<DVector<f64>>,
}

/// Normal cone `{u in W_F^perp : <u, d_j> <= 0}` given by unit constraint
/// directions. For a box these are the signed fixed axes, for a simplex the
/// projected edges to the vertices outside the face.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalCone {
    pub constraints: Vec<DVector<f64>>,
}

impl NormalCone {
    pub fn contains(&self, u: &DVector<f64>) -> bool {
        self.constraints.iter().all(|d| d.dot(u) <= 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    pub dim: usize,
    /// Sorted indices into the polytope's vertex list.
    pub vertices: Vec<usize>,
    pub tangent: Subspace,
    /// `dim`-dimensional volume.
    pub volume: f64,
    pub cone: NormalCone,
    pub centroid: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AngleMethod {
    Analytic,
    GaussianMc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterAngle {
    pub value: f64,
    pub method: AngleMethod,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuterAngleOptions {
    pub samples: usize,
    pub seed: u64,
}

impl Default for OuterAngleOptions {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 0x5eed,
        }
    }
}

/// Gaussian orthant probability for an identity correlation block of size `m`
/// is `2^-m`; these closed forms cover blocks of size up to 3.
fn orthant_probability(r: &DMatrix<f64>) -> Option<f64> {
    match r.nrows() {
        0 => Some(1.0),
        1 => Some(0.5),
        2 => Some(0.25 + r[(0, 1)].clamp(-1.0, 1.0).asin() / (2.0 * PI)),
        3 => {
            let s: f64 = [(0, 1), (0, 2), (1, 2)]
                .iter()
                .map(|&(i, j)| r[(i, j)].clamp(-1.0, 1.0).asin())
                .sum();
            Some(0.125 + s / (4.0 * PI))
        }
        _ => None,
    }
}

/// Connected components of the nonzero pattern of a correlation matrix.
fn correlation_blocks(r: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let m = r.nrows();
    let mut seen = vec![false; m];
    let mut blocks = Vec::new();
    for start in 0..m {
        if seen[start] {
            continue;
        }
        let mut block = vec![start];
        seen[start] = true;
        let mut i = 0;
        while i < block.len() {
            let a = block[i];
            for b in 0..m {
                if !seen[b] && r[(a, b)].abs() > 1e-12 {
                    seen[b] = true;
                    block.push(b);
                }
            }
            i += 1;
        }
        block.sort_unstable();
        blocks.push(block);
    }
    blocks
}

fn mc_orthant(r: &DMatrix<f64>, samples: usize, seed: u64, stream: u64) -> Result<(f64, f64)> {
    let m = r.nrows();
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Degenerate("normal cone constraints are dependent".into()))?;
    let l = chol.l();
    let mut rng = stream_rng(seed, stream);
    let mut z = vec![0.0; m];
    let mut hits = 0u64;
    for _ in 0..samples {
        for v in z.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let inside = (0..m).all(|i| {
            let mut y = 0.0;
            for j in 0..=i {
                y += l[(i, j)] * z[j];
            }
            y <= 0.0
        });
        if inside {
            hits += 1;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((p, (p * (1.0 - p) / samples as f64).sqrt()))
}

/// Gaussian measure of the cone cut out by unit constraints `d_j`.
pub fn cone_measure(constraints: &[DVector<f64>], opts: &OuterAngleOptions, stream: u64) -> Result<OuterAngle> {
    let m = constraints.len();
    let r = DMatrix::from_fn(m, m, |i, j| constraints[i].dot(&constraints[j]));
    let mut value = 1.0;
    let mut rel_var = 0.0;
    let mut method = AngleMethod::Analytic;
    for (b, block) in correlation_blocks(&r).into_iter().enumerate() {
        let sub = DMatrix::from_fn(block.len(), block.len(), |i, j| r[(block[i], block[j])]);
        match orthant_probability(&sub) {
            Some(p) => value *= p,
            None => {
                method = AngleMethod::GaussianMc;
                let (p, se) = mc_orthant(&sub, opts.samples, opts.seed, stream.wrapping_mul(31).wrapping_add(b as u64))?;
                if p == 0.0 {
                    value = 0.0;
                } else {
                    rel_var += (se / p).powi(2);
                    value *= p;
                }
            }
        }
    }
    Ok(OuterAngle {
        value,
        method,
        std_error: value * rel_var.sqrt(),
    })
}

fn fnv(indices: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &i in indices {
        h ^= i as u64 + 1;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Polytope {
    /// Box `center + frame * [-h, h]`. Axes with zero half-length are dropped.
    pub fn cuboid(center: DVector<f64>, frame: DMatrix<f64>, half_lengths: Vec<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 || n > MAXN {
            return Err(Error::UnsupportedDimension(n));
        }
        if frame.nrows() != n || frame.ncols() != half_lengths.len() {
            return Err(Error::InvalidPolytope(format!(
                "frame is {}x{} but expected {n}x{}",
                frame.nrows(),
                frame.ncols(),
                half_lengths.len()
            )));
        }
        if let Some(h) = half_lengths.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
            return Err(Error::InvalidPolytope(format!("half-length {h} must be finite and >= 0")));
        }
        if center.iter().chain(frame.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolytope("non-finite box parameter".into()));
        }
        let keep: Vec<usize> = (0..half_lengths.len()).filter(|&i| half_lengths[i] > 0.0).collect();
        let frame = DMatrix::from_fn(n, keep.len(), |r, c| frame[(r, keep[c])]);
        let half: Vec<f64> = keep.iter().map(|&i| half_lengths[i]).collect();
        let k = half.len();
        let residual = (frame.transpose() * &frame - DMatrix::identity(k, k)).amax();
        if !(residual < FRAME_TOL) {
            return Err(Error::InvalidPolytope(format!("box frame not orthonormal ({residual:.2e})")));
        }
        let vertices = (0..1usize << k)
            .map(|mask| {
                let mut v = center.clone();
                for (a, &h) in half.iter().enumerate() {
                    let s = if mask >> a & 1 == 1 { h } else { -h };
                    v.axpy(s, &frame.column(a), 1.0);
                }
                v
            })
            .collect();
        Ok(Self {
            n,
            family: Family::Box {
                center,
                frame,
                half_lengths: half,
            },
            vertices,
        })
    }

    /// Axis-parallel box over coordinate `axes` with the given side lengths, centered at 0.
    pub fn coordinate_box(n: usize, axes: &[usize], sides: &[f64]) -> Result<Self> {
        if axes.len() != sides.len() {
            return Err(Error::InvalidPolytope("axes and sides differ in length".into()));
        }
        let frame = Subspace::coordinate(n, axes)?.frame().clone();
        Self::cuboid(DVector::zeros(n), frame, sides.iter().map(|s| s / 2.0).collect())
    }

    /// Unit cube `[-1/2, 1/2]^n`.
    pub fn unit_cube(n: usize) -> Result<Self> {
        let axes: Vec<usize> = (0..n).collect();
        Self::coordinate_box(n, &axes, &vec![1.0; n])
    }

    /// Centered box spanned by an orthonormal frame with unit sides.
    pub fn unit_box_on(subspace: &Subspace) -> Result<Self> {
        let k = subspace.dim();
        Self::cuboid(DVector::zeros(subspace.ambient_dim()), subspace.frame().clone(), vec![0.5; k])
    }

    pub fn point(x: DVector<f64>) -> Result<Self> {
        let n = x.len();
        Self::cuboid(x, DMatrix::zeros(n, 0), Vec::new())
    }

    pub fn simplex(vertices: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return Err(Error::InvalidPolytope("simplex needs at least one vertex".into()));
        };
        let n = first.len();
        if n == 0 || n > MAXN {
            return Err(Error::UnsupportedDimension(n));
        }
        if vertices.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidPolytope("vertices of different dimension".into()));
        }
        if vertices.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::InvalidPolytope("non-finite vertex".into()));
        }
        if vertices.len() > n + 1 {
            return Err(Error::InvalidPolytope(format!(
                "{} vertices cannot be affinely independent in R^{n}",
                vertices.len()
            )));
        }
        let k = vertices.len() - 1;
        if k > 0 {
            let e = DMatrix::from_fn(n, k, |r, c| vertices[c + 1][r] - vertices[0][r]);
            let sv = e.singular_values();
            let max = sv.max();
            if !(sv.min() > 1e-10 * max.max(1e-300)) {
                return Err(Error::InvalidPolytope("simplex vertices are affinely dependent".into()));
            }
        }
        Ok(Self {
            n,
            family: Family::Simplex,
            vertices,
        })
    }

    /// `rotation * (left x right) + offset`.
    pub fn product(left: Polytope, right: Polytope, rotation: DMatrix<f64>, offset: DVector<f64>) -> Result<Self> {
        let n = left.n + right.n;
        if n > MAXN {
            return Err(Error::UnsupportedDimension(n));
        }
        if rotation.nrows() != n || rotation.ncols() != n || offset.len() != n {
            return Err(Error::InvalidPolytope(format!("product needs {n}x{n} rotation and length-{n} offset")));
        }
        if rotation.iter().chain(offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidPolytope("non-finite product parameter".into()));
        }
        let residual = (rotation.transpose() * &rotation - DMatrix::identity(n, n)).amax();
        if !(residual < FRAME_TOL) {
            return Err(Error::InvalidPolytope(format!("product rotation not orthogonal ({residual:.2e})")));
        }
        let mut vertices = Vec::with_capacity(left.vertices.len() * right.vertices.len());
        for a in &left.vertices {
            for b in &right.vertices {
                let stacked = DVector::from_iterator(n, a.iter().chain(b.iter()).copied());
                vertices.push(&rotation * stacked + &offset);
            }
        }
        Ok(Self {
            n,
            family: Family::Product {
                left: Box::new(left),
                right: Box::new(right),
                rotation,
                offset,
            },
            vertices,
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Box { .. } => "BOX",
            Family::Simplex => "SIMPLEX",
            Family::Product { .. } => "PRODUCT",
        }
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    /// Dimension of the affine hull.
    pub fn dim(&self) -> usize {
        match &self.family {
            Family::Box { half_lengths, .. } => half_lengths.len(),
            Family::Simplex => self.vertices.len() - 1,
            Family::Product { left, right, .. } => left.dim() + right.dim(),
        }
    }

    pub fn centroid(&self) -> DVector<f64> {
        let mut c = DVector::zeros(self.n);
        for v in &self.vertices {
            c += v;
        }
        c / self.vertices.len() as f64
    }

    /// Volume in the affine hull.
    pub fn volume(&self) -> f64 {
        self.faces(self.dim()).map(|f| f[0].volume).unwrap_or(0.0)
    }

    /// Largest vertex distance from the centroid.
    pub fn bounding_radius(&self) -> f64 {
        let c = self.centroid();
        self.vertices.iter().map(|v| (v - &c).norm()).fold(0.0, f64::max)
    }

    pub fn support_value(&self, d: &DVector<f64>) -> f64 {
        self.body().support_value(d.as_slice())
    }

    /// Support-function representation for intersection tests.
    pub fn body(&self) -> Body {
        match &self.family {
            Family::Box {
                center,
                frame,
                half_lengths,
            } => {
                let gens: Vec<Vec<f64>> = half_lengths
                    .iter()
                    .enumerate()
                    .map(|(a, &h)| (frame.column(a) * h).iter().copied().collect())
                    .collect();
                Body::new(center.as_slice(), &gens, &[])
            }
            Family::Simplex => {
                let pts: Vec<Vec<f64>> = self.vertices.iter().map(|v| v.iter().copied().collect()).collect();
                Body::new(&vec![0.0; self.n], &[], &pts)
            }
            Family::Product {
                left,
                right,
                rotation,
                offset,
            } => {
                let (a, b) = (left.n, right.n);
                let (bl, br) = (left.body(), right.body());
                let lift = |v: &[f64], first: bool| -> Vec<f64> {
                    let mut s = DVector::zeros(a + b);
                    if first {
                        s.rows_mut(0, a).copy_from_slice(v);
                    } else {
                        s.rows_mut(a, b).copy_from_slice(v);
                    }
                    (rotation * s).iter().copied().collect()
                };
                let mut center: Vec<f64> = lift(bl.center(), true);
                for (c, x) in center.iter_mut().zip(lift(br.center(), false)) {
                    *c += x;
                }
                for (c, o) in center.iter_mut().zip(offset.iter()) {
                    *c += o;
                }
                let gens: Vec<Vec<f64>> = bl
                    .generators()
                    .map(|g| lift(g, true))
                    .chain(br.generators().map(|g| lift(g, false)))
                    .collect();
                let pl: Vec<Vec<f64>> = bl.points().map(|p| lift(p, true)).collect();
                let pr: Vec<Vec<f64>> = br.points().map(|p| lift(p, false)).collect();
                let points = match (pl.is_empty(), pr.is_empty()) {
                    (true, _) => pr,
                    (_, true) => pl,
                    _ => pl
                        .iter()
                        .flat_map(|p| pr.iter().map(move |q| p.iter().zip(q).map(|(x, y)| x + y).collect()))
                        .collect(),
                };
                Body::new(&center, &gens, &points)
            }
        }
    }

    /// All closed faces of dimension `k`.
    pub fn faces(&self, k: usize) -> Result<Vec<Face>> {
        if k > self.dim() {
            return Err(Error::InvalidPolytope(format!("no faces of dimension {k} above {}", self.dim())));
        }
        match &self.family {
            Family::Box {
                frame, half_lengths, ..
            } => Ok(self.box_faces(frame, half_lengths, k)),
            Family::Simplex => self.simplex_faces(k),
            Family::Product {
                left,
                right,
                rotation,
                ..
            } => self.product_faces(left, right, rotation, k),
        }
    }

    fn face_centroid(&self, idx: &[usize]) -> DVector<f64> {
        let mut c = DVector::zeros(self.n);
        for &i in idx {
            c += &self.vertices[i];
        }
        c / idx.len() as f64
    }

    fn box_faces(&self, frame: &DMatrix<f64>, half: &[f64], k: usize) -> Vec<Face> {
        let dim = half.len();
        let full = (1usize << dim) - 1;
        let mut out = Vec::new();
        for free in 0..=full {
            if (free as u32).count_ones() as usize != k {
                continue;
            }
            let fixed = full & !free;
            // enumerate sign patterns on the fixed axes as submasks
            let mut signs = fixed;
            loop {
                let vertices: Vec<usize> = (0..=full).filter(|v| v & fixed == signs).collect();
                let free_axes: Vec<usize> = (0..dim).filter(|a| free >> a & 1 == 1).collect();
                let tangent = Subspace::from_orthonormal(DMatrix::from_fn(self.n, k, |r, c| frame[(r, free_axes[c])]))
                    .expect("box frame is orthonormal");
                let volume: f64 = free_axes.iter().map(|&a| 2.0 * half[a]).product();
                let constraints = (0..dim)
                    .filter(|a| fixed >> a & 1 == 1)
                    .map(|a| {
                        let s = if signs >> a & 1 == 1 { -1.0 } else { 1.0 };
                        frame.column(a) * s
                    })
                    .collect();
                out.push(Face {
                    dim: k,
                    centroid: self.face_centroid(&vertices),
                    vertices,
                    tangent,
                    volume,
                    cone: NormalCone { constraints },
                });
                if signs == 0 {
                    break;
                }
                signs = (signs - 1) & fixed;
            }
        }
        out
    }

    fn simplex_faces(&self, k: usize) -> Result<Vec<Face>> {
        let m = self.vertices.len();
        let mut out = Vec::new();
        for mask in 0usize..1 << m {
            if (mask as u32).count_ones() as usize != k + 1 {
                continue;
            }
            let idx: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
            let p0 = &self.vertices[idx[0]];
            let e = DMatrix::from_fn(self.n, k, |r, c| self.vertices[idx[c + 1]][r] - p0[r]);
            let tangent = if k == 0 {
                Subspace::from_orthonormal(DMatrix::zeros(self.n, 0))?
            } else {
                Subspace::from_spanning(&e)?
            };
            let volume = (e.transpose() * &e).determinant().max(0.0).sqrt() / factorial(k);
            let proj = DMatrix::identity(self.n, self.n) - tangent.projector();
            let constraints = (0..m)
                .filter(|i| mask >> i & 1 == 0)
                .map(|j| {
                    let d = &proj * (&self.vertices[j] - p0);
                    let norm = d.norm();
                    d / norm
                })
                .collect();
            out.push(Face {
                dim: k,
                centroid: self.face_centroid(&idx),
                vertices: idx,
                tangent,
                volume,
                cone: NormalCone { constraints },
            });
        }
        Ok(out)
    }

    fn product_faces(&self, left: &Polytope, right: &Polytope, rotation: &DMatrix<f64>, k: usize) -> Result<Vec<Face>> {
        let (a, b) = (left.n, right.n);
        let nb = right.vertices.len();
        let lift = |v: &DVector<f64>, first: bool| {
            let mut s = DVector::zeros(a + b);
            if first {
                s.rows_mut(0, a).copy_from(v);
            } else {
                s.rows_mut(a, b).copy_from(v);
            }
            rotation * s
        };
        let mut out = Vec::new();
        for i in 0..=k.min(left.dim()) {
            let j = k - i;
            if j > right.dim() {
                continue;
            }
            let fl = left.faces(i)?;
            let fr = right.faces(j)?;
            for f in &fl {
                for g in &fr {
                    let cols: Vec<DVector<f64>> = f
                        .tangent
                        .frame()
                        .column_iter()
                        .map(|c| lift(&c.clone_owned(), true))
                        .chain(g.tangent.frame().column_iter().map(|c| lift(&c.clone_owned(), false)))
                        .collect();
                    let frame = if cols.is_empty() {
                        DMatrix::zeros(self.n, 0)
                    } else {
                        DMatrix::from_columns(&cols)
                    };
                    let tangent = Subspace::from_orthonormal(frame).or_else(|_| Subspace::from_orthonormal(DMatrix::zeros(self.n, 0)))?;
                    let mut vertices: Vec<usize> = f
                        .vertices
                        .iter()
                        .flat_map(|&p| g.vertices.iter().map(move |&q| p * nb + q))
                        .collect();
                    vertices.sort_unstable();
                    let constraints = f
                        .cone
                        .constraints
                        .iter()
                        .map(|d| lift(d, true))
                        .chain(g.cone.constraints.iter().map(|d| lift(d, false)))
                        .collect();
                    out.push(Face {
                        dim: k,
                        centroid: self.face_centroid(&vertices),
                        vertices,
                        tangent,
                        volume: f.volume * g.volume,
                        cone: NormalCone { constraints },
                    });
                }
            }
        }
        Ok(out)
    }

    /// Outer angle of a face of this polytope.
    pub fn outer_angle(&self, face: &Face, opts: &OuterAngleOptions) -> Result<OuterAngle> {
        if face.dim > self.dim() || !self.faces(face.dim)?.iter().any(|f| f.vertices == face.vertices) {
            return Err(Error::NotAFace);
        }
        face_outer_angle(face, opts)
    }

    /// Intrinsic volumes `mu_0..mu_n` with standard errors.
    pub fn intrinsic_volumes(&self, opts: &OuterAngleOptions) -> Result<IntrinsicVolumes> {
        let mut values = vec![0.0; self.n + 1];
        let mut std_errors = vec![0.0; self.n + 1];
        for k in 0..=self.dim() {
            let mut var = 0.0;
            for f in self.faces(k)? {
                let g = face_outer_angle(&f, opts)?;
                values[k] += g.value * f.volume;
                var += (g.std_error * f.volume).powi(2);
            }
            std_errors[k] = var.sqrt();
        }
        Ok(IntrinsicVolumes { values, std_errors })
    }

    /// Rigid motion `x -> g x + t` (any orthogonal `g`).
    pub fn transform(&self, g: &DMatrix<f64>, t: &DVector<f64>) -> Result<Polytope> {
        let n = self.n;
        if g.nrows() != n || g.ncols() != n || t.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: g.nrows() });
        }
        let residual = (g.transpose() * g - DMatrix::identity(n, n)).amax();
        if !(residual < 1e-9) {
            return Err(Error::InvalidPolytope(format!("motion is not orthogonal ({residual:.2e})")));
        }
        Ok(self.map_affine(g, t))
    }

    pub fn transformed_by(&self, g: &GroupElement, t: &DVector<f64>) -> Result<Polytope> {
        self.transform(g.matrix(), t)
    }

    /// `-P`.
    pub fn negated(&self) -> Polytope {
        let n = self.n;
        self.map_affine(&(-DMatrix::identity(n, n)), &DVector::zeros(n))
    }

    /// `s P` for `s >= 0`.
    pub fn scaled(&self, s: f64) -> Result<Polytope> {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(Error::InvalidPolytope(format!("scale {s} must be finite and >= 0")));
        }
        match &self.family {
            Family::Box {
                center,
                frame,
                half_lengths,
            } => Polytope::cuboid(center * s, frame.clone(), half_lengths.iter().map(|h| h * s).collect()),
            Family::Simplex => {
                if s == 0.0 {
                    return Polytope::point(DVector::zeros(self.n));
                }
                Polytope::simplex(self.vertices.iter().map(|v| v * s).collect())
            }
            Family::Product {
                left,
                right,
                rotation,
                offset,
            } => Polytope::product(left.scaled(s)?, right.scaled(s)?, rotation.clone(), offset * s),
        }
    }

    /// Orthogonal-map image; checked by callers.
    fn map_affine(&self, g: &DMatrix<f64>, t: &DVector<f64>) -> Polytope {
        let family = match &self.family {
            Family::Box {
                center,
                frame,
                half_lengths,
            } => Family::Box {
                center: g * center + t,
                frame: g * frame,
                half_lengths: half_lengths.clone(),
            },
            Family::Simplex => Family::Simplex,
            Family::Product {
                left,
                right,
                rotation,
                offset,
            } => Family::Product {
                left: left.clone(),
                right: right.clone(),
                rotation: g * rotation,
                offset: g * offset + t,
            },
        };
        Polytope {
            n: self.n,
            family,
            vertices: self.vertices.iter().map(|v| g * v + t).collect(),
        }
    }

    /// Whether `self` and `other` share a point (touching within 1e-9 counts).
    pub fn intersects(&self, other: &Polytope) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(MinkowskiDifference::new(&self.body(), &other.body()).contains(&vec![0.0; self.n]))
    }

    pub fn to_json(&self) -> PolytopeJson {
        let row_major = |m: &DMatrix<f64>| {
            let mut out = Vec::with_capacity(m.len());
            for i in 0..m.nrows() {
                for j in 0..m.ncols() {
                    out.push(m[(i, j)]);
                }
            }
            out
        };
        match &self.family {
            Family::Box {
                center,
                frame,
                half_lengths,
            } => PolytopeJson::Box {
                n: self.n,
                center: center.iter().copied().collect(),
                frame: row_major(frame),
                half_lengths: half_lengths.clone(),
            },
            Family::Simplex => PolytopeJson::Simplex {
                n: self.n,
                vertices: self.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
            },
            Family::Product {
                left,
                right,
                rotation,
                offset,
            } => PolytopeJson::Product {
                left: Box::new(left.to_json()),
                right: Box::new(right.to_json()),
                rotation: Some(row_major(rotation)),
                offset: Some(offset.iter().copied().collect()),
            },
        }
    }

    pub fn from_json(j: &PolytopeJson) -> Result<Self> {
        match j {
            PolytopeJson::Box {
                n,
                center,
                frame,
                half_lengths,
            } => {
                let n = *n;
                let k = half_lengths.len();
                if n == 0 || n > MAXN {
                    return Err(Error::UnsupportedDimension(n));
                }
                if center.len() != n || frame.len() != n * k {
                    return Err(Error::InvalidPolytope(format!(
                        "box needs a length-{n} center and {n}x{k} frame"
                    )));
                }
                Polytope::cuboid(
                    DVector::from_column_slice(center),
                    DMatrix::from_row_slice(n, k, frame),
                    half_lengths.clone(),
                )
            }
            PolytopeJson::Simplex { n, vertices } => {
                if vertices.iter().any(|v| v.len() != *n) {
                    return Err(Error::InvalidPolytope(format!("simplex vertices must have length {n}")));
                }
                Polytope::simplex(vertices.iter().map(|v| DVector::from_column_slice(v)).collect())
            }
            PolytopeJson::Product {
                left,
                right,
                rotation,
                offset,
            } => {
                let left = Polytope::from_json(left)?;
                let right = Polytope::from_json(right)?;
                let n = left.n + right.n;
                if n > MAXN {
                    return Err(Error::UnsupportedDimension(n));
                }
                let rotation = match rotation {
                    Some(r) if r.len() == n * n => DMatrix::from_row_slice(n, n, r),
                    Some(_) => return Err(Error::InvalidPolytope(format!("rotation must have {} entries", n * n))),
                    None => DMatrix::identity(n, n),
                };
                let offset = match offset {
                    Some(o) if o.len() == n => DVector::from_column_slice(o),
                    Some(_) => return Err(Error::InvalidPolytope(format!("offset must have {n} entries"))),
                    None => DVector::zeros(n),
                };
                Polytope::product(left, right, rotation, offset)
            }
        }
    }

    pub fn parse_json(text: &str) -> Result<Self> {
        let j: PolytopeJson = serde_json::from_str(text)?;
        Self::from_json(&j)
    }
}

/// Outer angle from the face's stored normal cone.
pub fn face_outer_angle(face: &Face, opts: &OuterAngleOptions) -> Result<OuterAngle> {
    cone_measure(&face.cone.constraints, opts, fnv(&face.vertices))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicVolumes {
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
}

/// `{"family": "BOX" | "SIMPLEX" | "PRODUCT", ...}`; matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "SCREAMING_SNAKE_CASE", deny_unknown_fields)]
pub enum PolytopeJson {
    Box {
        n: usize,
        center: Vec<f64>,
        frame: Vec<f64>,
        half_lengths: Vec<f64>,
    },
    Simplex {
        n: usize,
        vertices: Vec<Vec<f64>>,
    },
    Product {
        left: Box<PolytopeJson>,
        right: Box<PolytopeJson>,
        #[serde(default)]
        rotation: Option<Vec<f64>>,
        #[serde(default)]
        offset: Option<Vec<f64>>,
    },
}

/// Orthonormal frame adapted to the generators of `K - L`: directions of
/// `K` first, then of `L`, completed by coordinate axes.
pub fn adapted_frame(k: &Body, l: &Body) -> DMatrix<f64> {
    let n = k.dim();
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    for body in [k, l] {
        dirs.extend(body.generators().map(DVector::from_column_slice));
        let pts: Vec<DVector<f64>> = body.points().map(DVector::from_column_slice).collect();
        if let Some(p0) = pts.first() {
            dirs.extend(pts.iter().skip(1).map(|p| p - p0));
        }
    }
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for d in dirs {
        if cols.len() == n {
            break;
        }
        let scale = d.norm();
        if scale == 0.0 {
            continue;
        }
        let mut v = d.clone();
        for _ in 0..2 {
            for c in &cols {
                let p = c.dot(&v);
                v.axpy(-p, c, 1.0);
            }
        }
        let r = v.norm();
        if r > 1e-9 * scale {
            cols.push(v / r);
        }
    }
    if cols.is_empty() {
        return DMatrix::identity(n, n);
    }
    let partial = DMatrix::from_columns(&cols);
    if cols.len() == n {
        return partial;
    }
    let rest = complement(&partial);
    DMatrix::from_columns(&cols.into_iter().chain(rest.column_iter().map(|c| c.clone_owned())).collect::<Vec<_>>())
}

/// Orthonormal basis of the span of the columns, if independent.
pub fn frame_of(columns: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    orthonormalize(columns)
}

/// Monte Carlo estimate of the Gaussian measure of a cone given as a
/// membership predicate on `W_F^perp` (used by tests as an oracle).
pub fn gaussian_cone_mc<F: Fn(&DVector<f64>) -> bool>(
    perp: &DMatrix<f64>,
    inside: F,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = stream_rng(seed, 0);
    let d = perp.ncols();
    let mut mv = MeanVar::default();
    for _ in 0..samples {
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        mv.push(if inside(&(perp * z)) { 1.0 } else { 0.0 });
    }
    (mv.mean(), mv.std_error())
}
