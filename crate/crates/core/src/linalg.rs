//! Small dense helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

/// Determinant of a `k x k` row-major matrix held in a scratch buffer.
/// The buffer is overwritten (partial-pivot LU in place).
pub fn det_in_place(k: usize, a: &mut [f64]) -> f64 {
    match k {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        4 => {
            // Laplace expansion along the first two rows
            let m = |r: usize, c0: usize, c1: usize| a[r * 4 + c0] * a[(r + 1) * 4 + c1] - a[r * 4 + c1] * a[(r + 1) * 4 + c0];
            m(0, 0, 1) * m(2, 2, 3) - m(0, 0, 2) * m(2, 1, 3) + m(0, 0, 3) * m(2, 1, 2) + m(0, 1, 2) * m(2, 0, 3)
                - m(0, 1, 3) * m(2, 0, 2)
                + m(0, 2, 3) * m(2, 0, 1)
        }
        _ => {
            let mut det = 1.0;
            for col in 0..k {
                let mut piv = col;
                let mut best = a[col * k + col].abs();
                for row in col + 1..k {
                    let v = a[row * k + col].abs();
                    if v > best {
                        best = v;
                        piv = row;
                    }
                }
                if best == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    for c in 0..k {
                        a.swap(col * k + c, piv * k + c);
                    }
                    det = -det;
                }
                let d = a[col * k + col];
                det *= d;
                for row in col + 1..k {
                    let f = a[row * k + col] / d;
                    if f != 0.0 {
                        for c in col + 1..k {
                            a[row * k + c] -= f * a[col * k + c];
                        }
                    }
                }
            }
            det
        }
    }
}

/// Orthonormalize the columns of `m` (modified Gram-Schmidt, two passes).
/// Returns `None` if the columns are numerically dependent.
pub fn orthonormalize(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let (n, k) = m.shape();
    let mut q = m.clone();
    for j in 0..k {
        let scale = m.column(j).norm().max(1.0);
        for _ in 0..2 {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
        }
        let norm = q.column(j).norm();
        if norm <= 1e-10 * scale {
            return None;
        }
        q.column_mut(j).scale_mut(1.0 / norm);
    }
    debug_assert_eq!(q.nrows(), n);
    Some(q)
}

/// Orthonormal basis of the orthogonal complement of the column span of an
/// orthonormal `n x k` frame.
pub fn complement(frame: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, k) = frame.shape();
    let mut cols: Vec<DVector<f64>> = (0..k).map(|j| frame.column(j).clone_owned()).collect();
    // Greedily add the coordinate axis with the largest residual.
    while cols.len() < n {
        let mut best: Option<(f64, DVector<f64>)> = None;
        for axis in 0..n {
            let mut v = DVector::zeros(n);
            v[axis] = 1.0;
            for _ in 0..2 {
                for c in &cols {
                    let p = c.dot(&v);
                    v.axpy(-p, c, 1.0);
                }
            }
            let r = v.norm();
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, v));
            }
        }
        let (r, v) = best.expect("n > 0");
        cols.push(v / r);
    }
    DMatrix::from_columns(&cols[k..])
}

/// Compensated (Neumaier) summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Running mean / variance with compensated sums.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanVar {
    n: u64,
    sum: NeumaierSum,
    sum_sq: NeumaierSum,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum.add(x);
        self.sum_sq.add(x * x);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum.value() / self.n as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        let m = self.mean();
        ((self.sum_sq.value() - n * m * m) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    // omega_k = pi^{k/2} / Gamma(k/2 + 1), via the two-step recurrence.
    let mut even = 1.0; // omega_0
    let mut odd = 2.0; // omega_1
    if k == 0 {
        return even;
    }
    if k == 1 {
        return odd;
    }
    let pi = std::f64::consts::PI;
    let mut j = 2;
    loop {
        if j % 2 == 0 {
            even *= 2.0 * pi / j as f64;
            if j == k {
                return even;
            }
        } else {
            odd *= 2.0 * pi / j as f64;
            if j == k {
                return odd;
            }
        }
        j += 1;
    }
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Elementary symmetric polynomials `e_0..=e_len` of `xs`.
pub fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (i, &x) in xs.iter().enumerate() {
        for j in (1..=i + 1).rev() {
            e[j] += e[j - 1] * x;
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_determinants_match_nalgebra() {
        let m = DMatrix::from_row_slice(
            5,
            5,
            &[
                2.0, -1.0, 0.5, 3.0, 1.0, 0.0, 4.0, 1.0, -2.0, 0.3, 1.0, 1.0, 1.0, 1.0, 1.0, -3.0,
                0.2, 5.0, 0.0, 2.0, 0.7, 0.1, -1.0, 2.0, -4.0,
            ],
        );
        for k in 1..=5 {
            let sub = m.view((0, 0), (k, k)).clone_owned();
            let mut buf: Vec<f64> = (0..k * k).map(|i| sub[(i / k, i % k)]).collect();
            let d = det_in_place(k, &mut buf);
            assert!((d - sub.determinant()).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((unit_ball_volume(2) - pi).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(4) - pi * pi / 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(7) - 16.0 * pi.powi(3) / 105.0).abs() < 1e-12);
    }

    #[test]
    fn complement_is_orthogonal() {
        let w = orthonormalize(&DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0]))
            .unwrap();
        let c = complement(&w);
        assert_eq!(c.shape(), (4, 2));
        assert!((w.transpose() * &c).norm() < 1e-14);
        assert!((c.transpose() * &c - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn elementary_symmetric_small() {
        let e = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
    }

    #[test]
    fn neumaier_recovers_small_terms() {
        let s: NeumaierSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }
}
