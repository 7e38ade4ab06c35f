//! Convex intersection tests via support functions.
//!
//! Every supported body is `c + conv(points) + sum_j [-1, 1] g_j`, the sum
//! of a point hull and a zonotope. `K ∩ L` is nonempty iff the origin lies
//! in `K - L`, which has the same shape, so a single membership test covers
//! both `intersects` and the kinematic integrand `x ∈ K - gL`.
//!
//! Membership is decided by GJK on the support function, with a
//! phase-1 simplex LP when GJK stalls near the tolerance band. Pairs whose
//! difference is a nondegenerate parallelotope use a direct inverse test.

use nalgebra::DMatrix;

pub const MAXN: usize = 8;
/// Distances below this count as touching.
pub const INTERSECTION_TOL: f64 = 1e-9;

pub type Vn = [f64; MAXN];

#[inline]
fn dot(n: usize, a: &Vn, b: &Vn) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += a[i] * b[i];
    }
    s
}

fn to_vn(v: &[f64]) -> Vn {
    let mut out = [0.0; MAXN];
    out[..v.len()].copy_from_slice(v);
    out
}

/// `c + conv(points) + zonotope(generators)` in `R^n`, `n <= 8`.
#[derive(Debug, Clone, PartialEq)]
pub struct Body {
    n: usize,
    center: Vn,
    generators: Vec<Vn>,
    points: Vec<Vn>,
}

impl Body {
    pub fn new(center: &[f64], generators: &[Vec<f64>], points: &[Vec<f64>]) -> Self {
        let n = center.len();
        assert!(n <= MAXN, "dimension {n} above {MAXN}");
        Self {
            n,
            center: to_vn(center),
            generators: generators.iter().map(|g| to_vn(g)).collect(),
            points: points.iter().map(|p| to_vn(p)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn center(&self) -> &[f64] {
        &self.center[..self.n]
    }

    pub fn generators(&self) -> impl Iterator<Item = &[f64]> {
        self.generators.iter().map(move |g| &g[..self.n])
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(move |p| &p[..self.n])
    }

    /// `x -> g x + t`.
    pub fn transformed(&self, g: &DMatrix<f64>, t: &[f64]) -> Body {
        let n = self.n;
        let map = |v: &Vn, shift: bool| {
            let mut out = [0.0; MAXN];
            for i in 0..n {
                let mut s = if shift { t[i] } else { 0.0 };
                for j in 0..n {
                    s += g[(i, j)] * v[j];
                }
                out[i] = s;
            }
            out
        };
        Body {
            n,
            center: map(&self.center, true),
            generators: self.generators.iter().map(|v| map(v, false)).collect(),
            points: self.points.iter().map(|v| map(v, false)).collect(),
        }
    }

    /// `max <y, d>` over the body.
    pub fn support_value(&self, d: &[f64]) -> f64 {
        let d = to_vn(d);
        let mut out = [0.0; MAXN];
        support_parts(self.n, &self.center, &self.generators, &self.points, &[], &d, &mut out);
        dot(self.n, &out, &d)
    }
}

/// Argmax of `<y, d>` over `c + conv(pk) + conv(-pl) + zonotope(gens)`.
fn support_parts(
    n: usize,
    center: &Vn,
    gens: &[Vn],
    pk: &[Vn],
    pl: &[Vn],
    d: &Vn,
    out: &mut Vn,
) {
    *out = *center;
    for g in gens {
        let s = dot(n, g, d);
        let sign = if s >= 0.0 { 1.0 } else { -1.0 };
        for i in 0..n {
            out[i] += sign * g[i];
        }
    }
    if let Some(best) = pk.iter().max_by(|a, b| dot(n, a, d).total_cmp(&dot(n, b, d))) {
        for i in 0..n {
            out[i] += best[i];
        }
    }
    // maximize <-q, d>, i.e. minimize <q, d>
    if let Some(best) = pl.iter().min_by(|a, b| dot(n, a, d).total_cmp(&dot(n, b, d))) {
        for i in 0..n {
            out[i] -= best[i];
        }
    }
}

/// Which test settled a membership query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Parallelotope,
    Gjk,
    LinearProgram,
}

/// The set `K - L` prepared for repeated membership queries.
#[derive(Debug, Clone)]
pub struct MinkowskiDifference {
    n: usize,
    center: Vn,
    gens: Vec<Vn>,
    pk: Vec<Vn>,
    pl: Vec<Vn>,
    parallelotope: Option<Parallelotope>,
}

#[derive(Debug, Clone)]
struct Parallelotope {
    inverse: [Vn; MAXN],
    row_tol: Vn,
    abs_det: f64,
}

impl MinkowskiDifference {
    pub fn new(k: &Body, l: &Body) -> Self {
        assert_eq!(k.n, l.n, "bodies live in different dimensions");
        let n = k.n;
        let mut center = [0.0; MAXN];
        for i in 0..n {
            center[i] = k.center[i] - l.center[i];
        }
        // single points are just translations
        let (mut pk, mut pl) = (k.points.clone(), l.points.clone());
        if pk.len() == 1 {
            for i in 0..n {
                center[i] += pk[0][i];
            }
            pk.clear();
        }
        if pl.len() == 1 {
            for i in 0..n {
                center[i] -= pl[0][i];
            }
            pl.clear();
        }
        let gens: Vec<Vn> = k.generators.iter().chain(&l.generators).copied().collect();
        let parallelotope = if pk.is_empty() && pl.is_empty() && gens.len() == n {
            Parallelotope::new(n, &gens)
        } else {
            None
        };
        Self {
            n,
            center,
            gens,
            pk,
            pl,
            parallelotope,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_parallelotope(&self) -> bool {
        self.parallelotope.is_some()
    }

    /// Exact volume when the difference is a nondegenerate parallelotope.
    pub fn parallelotope_volume(&self) -> Option<f64> {
        self.parallelotope.as_ref().map(|p| p.abs_det * 2f64.powi(self.n as i32))
    }

    /// `max <y, d>` over the difference.
    pub fn support_value(&self, d: &[f64]) -> f64 {
        let d = to_vn(d);
        let mut out = [0.0; MAXN];
        self.support(&d, &mut out);
        dot(self.n, &out, &d)
    }

    fn support(&self, d: &Vn, out: &mut Vn) {
        support_parts(self.n, &self.center, &self.gens, &self.pk, &self.pl, d, out);
    }

    /// Some point of the difference.
    pub fn interior_point(&self) -> Vn {
        let mut p = self.center;
        let n = self.n;
        if !self.pk.is_empty() {
            for q in &self.pk {
                for i in 0..n {
                    p[i] += q[i] / self.pk.len() as f64;
                }
            }
        }
        if !self.pl.is_empty() {
            for q in &self.pl {
                for i in 0..n {
                    p[i] -= q[i] / self.pl.len() as f64;
                }
            }
        }
        p
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.contains_with_method(x).0
    }

    /// Membership of `x` together with the method that decided it.
    pub fn contains_with_method(&self, x: &[f64]) -> (bool, Method) {
        let x = to_vn(x);
        if let Some(p) = &self.parallelotope {
            return (p.contains(self.n, &self.center, &x), Method::Parallelotope);
        }
        match self.gjk(&x) {
            Some(hit) => (hit, Method::Gjk),
            None => (self.lp_contains(&x), Method::LinearProgram),
        }
    }

    /// GJK on `C = D - x`; `None` when undecided.
    fn gjk(&self, x: &Vn) -> Option<bool> {
        let n = self.n;
        let tol = INTERSECTION_TOL;
        let mut v = self.interior_point();
        for i in 0..n {
            v[i] -= x[i];
        }
        let mut simplex = Simplex::new(n);
        let mut w = [0.0; MAXN];
        let mut neg = [0.0; MAXN];
        for _ in 0..128 {
            let vv = dot(n, &v, &v);
            if vv <= tol * tol {
                return Some(true);
            }
            for i in 0..n {
                neg[i] = -v[i];
            }
            self.support(&neg, &mut w);
            for i in 0..n {
                w[i] -= x[i];
            }
            let vw = dot(n, &v, &w);
            let vnorm = vv.sqrt();
            if vw > tol * vnorm {
                return Some(false);
            }
            if vv - vw <= 1e-13 * vv || simplex.contains_point(&w) {
                // converged with distance in the tolerance band
                return None;
            }
            if !simplex.push(w) {
                return None;
            }
            {
                let p = simplex.closest()?;
                v = p
            }
        }
        None
    }

    /// Phase-1 simplex feasibility of
    /// `c + sum l_i p_i - sum m_j q_j + sum (2 s_j - 1) g_j = x`.
    fn lp_contains(&self, x: &Vn) -> bool {
        let n = self.n;
        let (nk, nl, ng) = (self.pk.len(), self.pl.len(), self.gens.len());
        // columns: l (nk), m (nl), s (ng), r (ng); rows: n + [1] + [1] + ng
        let ncols = nk + nl + 2 * ng;
        let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
        for i in 0..n {
            let mut a = vec![0.0; ncols];
            for (c, p) in self.pk.iter().enumerate() {
                a[c] = p[i];
            }
            for (c, q) in self.pl.iter().enumerate() {
                a[nk + c] = -q[i];
            }
            let mut rhs = x[i] - self.center[i];
            for (c, g) in self.gens.iter().enumerate() {
                a[nk + nl + c] = 2.0 * g[i];
                rhs += g[i];
            }
            rows.push((a, rhs));
        }
        if nk > 0 {
            let mut a = vec![0.0; ncols];
            a[..nk].iter_mut().for_each(|v| *v = 1.0);
            rows.push((a, 1.0));
        }
        if nl > 0 {
            let mut a = vec![0.0; ncols];
            a[nk..nk + nl].iter_mut().for_each(|v| *v = 1.0);
            rows.push((a, 1.0));
        }
        for c in 0..ng {
            let mut a = vec![0.0; ncols];
            a[nk + nl + c] = 1.0;
            a[nk + nl + ng + c] = 1.0;
            rows.push((a, 1.0));
        }
        let scale = 1.0
            + self.center[..n].iter().chain(&x[..n]).fold(0.0f64, |m, v| m.max(v.abs()))
            + self.gens.iter().chain(&self.pk).chain(&self.pl).fold(0.0f64, |m, g| {
                m.max(g[..n].iter().fold(0.0f64, |a, b| a.max(b.abs())))
            });
        phase_one_infeasibility(rows, ncols) <= INTERSECTION_TOL * scale
    }
}

impl Parallelotope {
    fn new(n: usize, gens: &[Vn]) -> Option<Self> {
        let m = DMatrix::from_fn(n, n, |i, j| gens[j][i]);
        let scale: f64 = gens.iter().map(|g| dot(n, g, g).sqrt()).product();
        let det = m.determinant();
        if !(det.abs() > 1e-10 * scale) {
            return None;
        }
        let inv = m.try_inverse()?;
        let mut inverse = [[0.0; MAXN]; MAXN];
        let mut row_tol = [0.0; MAXN];
        for i in 0..n {
            let mut norm = 0.0;
            for j in 0..n {
                inverse[i][j] = inv[(i, j)];
                norm += inv[(i, j)] * inv[(i, j)];
            }
            row_tol[i] = 1.0 + INTERSECTION_TOL * norm.sqrt();
        }
        Some(Self {
            inverse,
            row_tol,
            abs_det: det.abs(),
        })
    }

    fn contains(&self, n: usize, center: &Vn, x: &Vn) -> bool {
        let mut y = [0.0; MAXN];
        for i in 0..n {
            y[i] = x[i] - center[i];
        }
        (0..n).all(|i| dot(n, &self.inverse[i], &y).abs() <= self.row_tol[i])
    }
}

/// Working simplex of GJK with a min-norm-point solver.
struct Simplex {
    n: usize,
    pts: [Vn; MAXN + 1],
    len: usize,
}

impl Simplex {
    fn new(n: usize) -> Self {
        Self {
            n,
            pts: [[0.0; MAXN]; MAXN + 1],
            len: 0,
        }
    }

    fn contains_point(&self, w: &Vn) -> bool {
        self.pts[..self.len]
            .iter()
            .any(|p| (0..self.n).all(|i| (p[i] - w[i]).abs() <= 1e-14 * (1.0 + w[i].abs())))
    }

    fn push(&mut self, w: Vn) -> bool {
        if self.len > self.n {
            return false;
        }
        self.pts[self.len] = w;
        self.len += 1;
        true
    }

    /// Min-norm point of the hull by an active-set method; drops vertices
    /// with zero weight. `None` on a degenerate affine system.
    fn closest(&mut self) -> Option<Vn> {
        let n = self.n;
        let k = self.len;
        let mut active = [true; MAXN + 1];
        for _ in 0..4 * (MAXN + 1) {
            let idx: Vec<usize> = (0..k).filter(|&i| active[i]).collect();
            let mu = affine_min_norm(n, &self.pts, &idx)?;
            if let Some((pos, _)) = mu
                .iter()
                .enumerate()
                .filter(|(_, &m)| m < -1e-14)
                .min_by(|a, b| a.1.total_cmp(b.1))
            {
                // step towards the feasible set: drop the most negative weight
                active[idx[pos]] = false;
                continue;
            }
            let mut v = [0.0; MAXN];
            let mut lambda = [0.0; MAXN + 1];
            for (j, &i) in idx.iter().enumerate() {
                lambda[i] = mu[j].max(0.0);
            }
            let total: f64 = lambda[..k].iter().sum();
            for i in 0..k {
                lambda[i] /= total;
                for c in 0..n {
                    v[c] += lambda[i] * self.pts[i][c];
                }
            }
            // optimality: <v, p - v> >= 0 for all vertices
            let vv = dot(n, &v, &v);
            let violator = (0..k)
                .filter(|&i| !active[i])
                .map(|i| (i, dot(n, &v, &self.pts[i]) - vv))
                .filter(|&(_, g)| g < -1e-12 * (1.0 + vv))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match violator {
                Some((i, _)) => active[i] = true,
                None => {
                    let mut kept = 0;
                    for i in 0..k {
                        if active[i] && lambda[i] > 0.0 {
                            self.pts[kept] = self.pts[i];
                            kept += 1;
                        }
                    }
                    self.len = kept;
                    return Some(v);
                }
            }
        }
        None
    }
}

/// Weights `mu` (summing to 1) of the min-norm point of the affine hull of
/// `pts[idx]`.
fn affine_min_norm(n: usize, pts: &[Vn], idx: &[usize]) -> Option<Vec<f64>> {
    let m = idx.len();
    if m == 0 {
        return None;
    }
    if m == 1 {
        return Some(vec![1.0]);
    }
    let p0 = &pts[idx[0]];
    let e: Vec<Vn> = idx[1..]
        .iter()
        .map(|&i| {
            let mut d = [0.0; MAXN];
            for c in 0..n {
                d[c] = pts[i][c] - p0[c];
            }
            d
        })
        .collect();
    let r = m - 1;
    let mut a = vec![0.0; r * r];
    let mut b = vec![0.0; r];
    for i in 0..r {
        for j in 0..r {
            a[i * r + j] = dot(n, &e[i], &e[j]);
        }
        b[i] = -dot(n, &e[i], p0);
    }
    let alpha = cholesky_solve(r, &mut a, &mut b)?;
    let mut mu = vec![0.0; m];
    mu[0] = 1.0 - alpha.iter().sum::<f64>();
    mu[1..].copy_from_slice(&alpha);
    Some(mu)
}

fn cholesky_solve(r: usize, a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    let trace: f64 = (0..r).map(|i| a[i * r + i]).sum();
    for j in 0..r {
        let mut d = a[j * r + j];
        for k in 0..j {
            d -= a[j * r + k] * a[j * r + k];
        }
        if d <= 1e-14 * trace.max(1e-300) {
            return None;
        }
        let d = d.sqrt();
        a[j * r + j] = d;
        for i in j + 1..r {
            let mut s = a[i * r + j];
            for k in 0..j {
                s -= a[i * r + k] * a[j * r + k];
            }
            a[i * r + j] = s / d;
        }
    }
    for i in 0..r {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * r + k] * b[k];
        }
        b[i] = s / a[i * r + i];
    }
    for i in (0..r).rev() {
        let mut s = b[i];
        for k in i + 1..r {
            s -= a[k * r + i] * b[k];
        }
        b[i] = s / a[i * r + i];
    }
    Some(b.to_vec())
}

/// Minimal total artificial slack of `A y = b, y >= 0` (0 iff feasible),
/// dense tableau with Bland's rule.
pub fn phase_one_infeasibility(mut rows: Vec<(Vec<f64>, f64)>, ncols: usize) -> f64 {
    let m = rows.len();
    for (a, b) in rows.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
        }
    }
    // tableau columns: original, artificial (m), rhs
    let width = ncols + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    for (i, (a, b)) in rows.iter().enumerate() {
        t[i * width..i * width + ncols].copy_from_slice(a);
        t[i * width + ncols + i] = 1.0;
        t[i * width + width - 1] = *b;
        basis.push(ncols + i);
    }
    // objective row: minimize sum of artificials, expressed in nonbasics
    let obj = m * width;
    for i in 0..m {
        for c in 0..ncols {
            t[obj + c] -= t[i * width + c];
        }
        t[obj + width - 1] -= t[i * width + width - 1];
    }
    let eps = 1e-12;
    for _ in 0..10_000 {
        let Some(enter) = (0..ncols + m).find(|&c| t[obj + c] < -eps) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = t[i * width + enter];
            if a > eps {
                let ratio = t[i * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some((li, lr)) => ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            break;
        };
        let piv = t[r * width + enter];
        for c in 0..width {
            t[r * width + c] /= piv;
        }
        for i in 0..=m {
            if i == r {
                continue;
            }
            let f = t[i * width + enter];
            if f != 0.0 {
                for c in 0..width {
                    t[i * width + c] -= f * t[r * width + c];
                }
            }
        }
        basis[r] = enter;
    }
    (-t[obj + width - 1]).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube(n: usize, center: &[f64], half: f64) -> Body {
        let gens: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut g = vec![0.0; n];
                g[i] = half;
                g
            })
            .collect();
        Body::new(center, &gens, &[])
    }

    fn rotation(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        crate::groups::sample_so(n.max(7), rng)
            .map(|g| g.into_matrix())
            .map(|m| m.view((0, 0), (n, n)).clone_owned())
            .unwrap()
    }

    #[test]
    fn cubes_along_axis() {
        let a = cube(3, &[0.0; 3], 0.5);
        let near = cube(3, &[0.5, 0.0, 0.0], 0.5);
        let far = cube(3, &[3.0, 0.0, 0.0], 0.5);
        assert!(MinkowskiDifference::new(&a, &near).contains(&[0.0; 3]));
        assert!(!MinkowskiDifference::new(&a, &far).contains(&[0.0; 3]));
        let touching = cube(3, &[1.0, 0.0, 0.0], 0.5);
        assert!(MinkowskiDifference::new(&a, &touching).contains(&[0.0; 3]));
    }

    #[test]
    fn complementary_boxes_share_origin() {
        let mut g1 = Vec::new();
        let mut g2 = Vec::new();
        for i in 0..7 {
            let mut g = vec![0.0; 7];
            g[i] = 0.5;
            if i < 3 {
                g1.push(g);
            } else {
                g2.push(g);
            }
        }
        let k = Body::new(&[0.0; 7], &g1, &[]);
        let l = Body::new(&[0.0; 7], &g2, &[]);
        let d = MinkowskiDifference::new(&k, &l);
        assert!(d.is_parallelotope());
        assert!(d.contains(&[0.0; 7]));
        assert!(!d.contains(&[0.0, 0.0, 0.0, 0.6, 0.0, 0.0, 0.0]));
    }

    /// Membership oracle: brute-force LP versus GJK versus parallelotope.
    #[test]
    fn methods_agree_on_random_queries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for trial in 0..20 {
            let n = 7;
            let g = rotation(n, &mut rng);
            let k = cube(n, &[0.0; 7], 0.5);
            let l = cube(n, &[0.0; 7], 0.5).transformed(&g, &[0.0; 7]);
            let d = MinkowskiDifference::new(&k, &l);
            for _ in 0..50 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.6..1.6)).collect();
                let xv = to_vn(&x);
                let lp = d.lp_contains(&xv);
                if let Some(gjk) = d.gjk(&xv) {
                    assert_eq!(gjk, lp, "trial {trial} x {x:?}");
                }
            }
        }
        // parallelotope: 3 + 4 generators
        for _ in 0..20 {
            let g = rotation(7, &mut rng);
            let mut gk = Vec::new();
            let mut gl = Vec::new();
            for i in 0..7 {
                let mut e = vec![0.0; 7];
                e[i] = 0.5;
                if i < 3 {
                    gk.push(e);
                } else {
                    gl.push(e);
                }
            }
            let k = Body::new(&[0.0; 7], &gk, &[]);
            let l = Body::new(&[0.0; 7], &gl, &[]).transformed(&g, &[0.0; 7]);
            let d = MinkowskiDifference::new(&k, &l);
            assert!(d.is_parallelotope());
            for _ in 0..50 {
                let x: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let xv = to_vn(&x);
                let fast = d.contains(&x);
                assert_eq!(fast, d.lp_contains(&xv));
                if let Some(gjk) = d.gjk(&xv) {
                    assert_eq!(fast, gjk);
                }
            }
        }
    }

    #[test]
    fn simplex_point_sets() {
        // triangle vs a point just outside and inside
        let tri = Body::new(&[0.0, 0.0], &[], &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]);
        let p_in = Body::new(&[0.2, 0.2], &[], &[]);
        let p_out = Body::new(&[0.6, 0.6], &[], &[]);
        assert!(MinkowskiDifference::new(&tri, &p_in).contains(&[0.0, 0.0]));
        assert!(!MinkowskiDifference::new(&tri, &p_out).contains(&[0.0, 0.0]));
    }

    #[test]
    fn symmetric_and_translation_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let g = rotation(7, &mut rng);
            let k = cube(7, &[0.0; 7], 0.5);
            let shift: Vec<f64> = (0..7).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let l = cube(7, &[0.0; 7], 0.5).transformed(&g, &shift);
            let kl = MinkowskiDifference::new(&k, &l).contains(&[0.0; 7]);
            let lk = MinkowskiDifference::new(&l, &k).contains(&[0.0; 7]);
            assert_eq!(kl, lk);
        }
    }

    #[test]
    fn phase_one_detects_infeasible() {
        // y1 + y2 = 1, y1 - y2 = 3 with y >= 0 is infeasible
        let rows = vec![(vec![1.0, 1.0], 1.0), (vec![1.0, -1.0], 3.0)];
        assert!(phase_one_infeasibility(rows, 2) > 0.5);
        let rows = vec![(vec![1.0, 1.0], 1.0), (vec![1.0, -1.0], 0.0)];
        assert!(phase_one_infeasibility(rows, 2) < 1e-12);
    }
}
