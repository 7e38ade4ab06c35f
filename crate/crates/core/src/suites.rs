//! Named checks with tolerances, grouped into suites for the CLI.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::Result;
use crate::forms::{annihilator_algebra, normalize_metric, standard, GramForm};
use crate::grassmann::{
    cayley_sq, hyperplane_structure, kaehler_angles, klain_eta, phi_sq, random_subspace,
    random_subspace_in, theta, HermitianStructure,
};
use crate::groups::{
    ks_critical_1pct, ks_statistic, sample_chunked, stream_rng, GroupElement, GroupTag, WalkConfig,
};
use crate::linalg::{binomial, elementary_symmetric, MeanVar};
use crate::polytope::{OuterAngleOptions, Polytope};
use crate::valuations::{
    eta_decomposition_residual_with, evaluate_with, fourier_residual, hadwiger_rank_check, Ambient, ValuationId,
    ValuationKind,
};

/// One machine-readable check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Pass threshold on `value` (upper bound unless `expected` is set).
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    pub passed: bool,
}

impl Check {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            expected: None,
            std_error: None,
            passed: value < tolerance,
        }
    }

    /// Passes when `|value - expected| <= tolerance`.
    pub fn equals(name: impl Into<String>, value: f64, expected: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            expected: Some(expected),
            std_error: None,
            passed: (value - expected).abs() <= tolerance,
        }
    }

    /// Passes when `|value - expected| <= sigmas * std_error`.
    pub fn within_sigma(name: impl Into<String>, value: f64, std_error: f64, expected: f64, sigmas: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: sigmas * std_error,
            expected: Some(expected),
            std_error: Some(std_error),
            passed: (value - expected).abs() <= sigmas * std_error,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Algebraic identities.
    pub identity: f64,
    /// Group certification.
    pub form: f64,
    /// Metric normalization fixed point.
    pub metric: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-10,
            form: 1e-9,
            metric: 1e-12,
        }
    }
}

/// Structure a suite runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Context {
    G2,
    Spin7,
    Su,
    So,
}

impl std::str::FromStr for Context {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "G2" => Ok(Context::G2),
            "SPIN7" => Ok(Context::Spin7),
            "SU" => Ok(Context::Su),
            "SO" => Ok(Context::So),
            _ => Err(crate::Error::Config(format!("unknown context '{s}' (G2, SPIN7, SU, SO)"))),
        }
    }
}

fn e0() -> DVector<f64> {
    let mut x = DVector::zeros(7);
    x[0] = 1.0;
    x
}

/// `max |Phi(W)^2 - klain_eta(W)|` over random 4-planes.
pub fn eta_klain_residual(samples: usize, seed: u64) -> Result<f64> {
    let mut rng = stream_rng(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let w = random_subspace(8, 4, &mut rng)?;
        worst = worst.max((cayley_sq(&w)? - klain_eta(&w)?).abs());
    }
    Ok(worst)
}

/// `max ||Theta(W)| - prod sin theta_i(W)|` over random `m`-planes of `C^m`.
pub fn theta_norm_residual(m: usize, samples: usize, seed: u64) -> Result<f64> {
    let hs = HermitianStructure::standard(m);
    let mut rng = stream_rng(seed, 2 + m as u64);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let w = random_subspace(2 * m, m, &mut rng)?;
        let prod: f64 = kaehler_angles(&w, &hs)?.sines().iter().product();
        worst = worst.max((theta(&w, &hs)?.modulus() - prod).abs());
    }
    Ok(worst)
}

/// Residuals of `phi(W)^2 = 1/2 Re(Theta^2 + 1 - cos^2 theta)` on 3-planes
/// and `phi(W^perp)^2 = cos^2 theta_2` on 4-planes of `e_0^perp`.
pub fn restriction_residuals(samples: usize, seed: u64) -> Result<(f64, f64)> {
    let hs = hyperplane_structure(&e0())?;
    let mut rng = stream_rng(seed, 7);
    let (mut assoc, mut coassoc) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let w = random_subspace_in(&hs, 3, &mut rng)?;
        let c = kaehler_angles(&w, &hs)?.cosines()[0];
        let rhs = 0.5 * (theta(&w, &hs)?.squared() + Complex::new(1.0 - c * c, 0.0)).re;
        assoc = assoc.max((phi_sq(&w)? - rhs).abs());
        let u = random_subspace_in(&hs, 4, &mut rng)?;
        let c2 = kaehler_angles(&u, &hs)?.cosines()[1];
        coassoc = coassoc.max((phi_sq(&u.perp())? - c2 * c2).abs());
    }
    Ok((assoc, coassoc))
}

fn lie_dim_checks(name: &str, forms: &[&crate::forms::AlternatingForm], expected: usize) -> Result<Vec<Check>> {
    let n = forms[0].dim();
    let basis = annihilator_algebra(forms, &GramForm::identity(n))?;
    Ok(vec![
        Check::equals(format!("{name}_dimension"), basis.dim() as f64, expected as f64, 0.0),
        Check {
            passed: basis.gap > 1e6,
            ..Check::below(format!("{name}_inverse_gap"), 1.0 / basis.gap, 1e-6)
        },
    ])
}

/// Identity suite of a context.
pub fn identity_suite(context: Context, samples: usize, seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let s = standard();
    let mut out = Vec::new();
    match context {
        Context::Spin7 => {
            out.push(Check::below("eta_klain_identity", eta_klain_residual(samples, seed)?, tol.identity));
            out.push(Check::below("theta_norm_c4", theta_norm_residual(4, samples, seed)?, tol.identity));
            let mut rng = stream_rng(seed, 11);
            let opts = OuterAngleOptions {
                samples: 10_000,
                seed,
            };
            let mut worst = 0.0f64;
            for _ in 0..samples.clamp(1, 50) {
                let w = random_subspace(8, 4, &mut rng)?;
                worst = worst.max(eta_decomposition_residual_with(&Polytope::unit_box_on(&w)?, &opts)?);
            }
            out.push(Check::below("eta_decomposition", worst, tol.identity));
            out.extend(lie_dim_checks("spin7_algebra", &[&s.cayley], 21)?);
        }
        Context::G2 => {
            let (a, c) = restriction_residuals(samples, seed)?;
            out.push(Check::below("restriction_associative", a, tol.identity));
            out.push(Check::below("restriction_coassociative", c, tol.identity));
            let g = Ambient::G2;
            let nu3 = ValuationId::new(ValuationKind::Nu3, g)?;
            let nu4 = ValuationId::new(ValuationKind::Nu4, g)?;
            out.push(Check::below("fourier_nu3_nu4", fourier_residual(&nu3, &nu4, samples, seed)?, tol.identity));
            out.extend(lie_dim_checks("g2_algebra", &[&s.phi], 14)?);
            let m = normalize_metric(&s.phi)?;
            out.push(Check::below("metric_fixed_point", m.fixed_point_residual, tol.metric));
            let gram_dev = (m.gram.entries() - DMatrix::identity(7, 7)).amax();
            out.push(Check::below("metric_gram_identity", gram_dev, tol.metric));
        }
        Context::Su => {
            out.push(Check::below("theta_norm_c3", theta_norm_residual(3, samples, seed)?, tol.identity));
            out.push(Check::below("theta_norm_c4", theta_norm_residual(4, samples, seed)?, tol.identity));
            out.extend(lie_dim_checks("su4_algebra", &[&s.omega4, &s.beta4, &s.beta4_im], 15)?);
        }
        Context::So => {
            let mut rng = stream_rng(seed, 13);
            let opts = OuterAngleOptions::default();
            let mut worst = 0.0f64;
            for _ in 0..samples.clamp(1, 100) {
                let sides: Vec<f64> = (0..7).map(|_| rand::Rng::gen_range(&mut rng, 0.1..2.0)).collect();
                let frame = random_subspace(7, 7, &mut rng)?.frame().clone();
                let b = Polytope::cuboid(DVector::zeros(7), frame, sides.iter().map(|x| x / 2.0).collect())?;
                let mu = b.intrinsic_volumes(&opts)?.values;
                let e = elementary_symmetric(&sides);
                for k in 0..=7 {
                    worst = worst.max((mu[k] - e[k]).abs() / (1.0 + e[k]));
                }
            }
            out.push(Check::below("steiner_boxes", worst, tol.identity));
            let cube = Polytope::unit_cube(8)?.intrinsic_volumes(&opts)?.values;
            let dev = (0..=8).map(|k| (cube[k] - binomial(8, k)).abs()).fold(0.0, f64::max);
            out.push(Check::below("unit_cube_intrinsic_volumes", dev, tol.identity));
        }
    }
    Ok(out)
}

/// Certification, sphere moments and (for walks) a mixing check.
#[derive(Debug, Clone, Serialize)]
pub struct SamplerDiagnostics {
    pub group: GroupTag,
    pub samples: usize,
    pub max_orthogonality: f64,
    pub max_determinant: f64,
    pub max_form: f64,
    pub max_mean_z: f64,
    pub max_cov_z: f64,
    pub ks: Option<MixingKs>,
    pub checks: Vec<Check>,
}

/// Mean and covariance `z` scores of `g v` with batch-means errors over
/// consecutive chunks (walk samples are correlated within a chunk).
pub fn batched_sphere_moments(samples: &[GroupElement], v: &[f64], chunk: usize) -> (f64, f64) {
    let n = v.len();
    let v = DVector::from_column_slice(v);
    let unique: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut first = vec![MeanVar::default(); n];
    let mut second = vec![MeanVar::default(); unique.len()];
    for batch in samples.chunks(chunk.max(1)) {
        let mut f = vec![0.0; n];
        let mut s = vec![0.0; unique.len()];
        for g in batch {
            let w = g.matrix() * &v;
            for i in 0..n {
                f[i] += w[i];
            }
            for (idx, &(i, j)) in unique.iter().enumerate() {
                s[idx] += w[i] * w[j];
            }
        }
        let len = batch.len() as f64;
        for i in 0..n {
            first[i].push(f[i] / len);
        }
        for idx in 0..unique.len() {
            second[idx].push(s[idx] / len);
        }
    }
    let z = |m: &MeanVar, target: f64| (m.mean() - target).abs() / m.std_error().max(1e-300);
    let mean_z = first.iter().map(|m| z(m, 0.0)).fold(0.0, f64::max);
    let cov_z = unique
        .iter()
        .zip(&second)
        .map(|(&(i, j), m)| z(m, if i == j { 1.0 / n as f64 } else { 0.0 }))
        .fold(0.0, f64::max);
    (mean_z, cov_z)
}

/// Batch size used for moment errors.
pub const MOMENT_BATCH: usize = 25;

pub fn sampler_diagnostics(
    group: GroupTag,
    samples: usize,
    seed: u64,
    walk: WalkConfig,
    workers: usize,
    tol: &Tolerances,
) -> Result<SamplerDiagnostics> {
    let elements = sample_chunked(group, seed, walk, samples, MOMENT_BATCH * 8, workers)?;
    let (mut orth, mut det, mut form) = (0.0f64, 0.0f64, 0.0f64);
    for g in &elements {
        let r = g.residuals();
        orth = orth.max(r.orthogonality);
        det = det.max(r.determinant);
        form = form.max(r.form.max(r.complex));
    }
    let n = group.dim();
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    let (mean_z, cov_z) = batched_sphere_moments(&elements, &v, MOMENT_BATCH);
    let mut checks = vec![
        Check::below("orthogonality", orth, tol.form),
        Check::below("determinant", det, tol.form),
        Check::below("defining_form", form, tol.form),
        Check::below("sphere_mean_max_z", mean_z, 3.0),
        Check::below("sphere_cov_max_z", cov_z, 3.0),
    ];
    let ks = if group.is_exceptional() {
        let m = mixing_ks(group, samples, seed, walk, workers)?;
        checks.push(Check::below("walk_mixing_ks_corner", m.corner, m.critical));
        checks.push(Check::below("walk_mixing_ks_trace", m.trace, m.critical));
        Some(m)
    } else {
        None
    };
    Ok(SamplerDiagnostics {
        group,
        samples,
        max_orthogonality: orth,
        max_determinant: det,
        max_form: form,
        max_mean_z: mean_z,
        max_cov_z: cov_z,
        ks,
        checks,
    })
}

/// Two-sample KS statistics between walks with `walk_steps` and
/// `2 walk_steps` burn-in, for `<e_0, g e_0>` and `trace(g) / n`, with the
/// 1% critical value. Each sample comes from its own walk, so samples are iid.
pub fn mixing_ks(group: GroupTag, samples: usize, seed: u64, walk: WalkConfig, workers: usize) -> Result<MixingKs> {
    let doubled = WalkConfig {
        walk_steps: 2 * walk.walk_steps,
        ..walk
    };
    let count = samples.max(2);
    let a = sample_chunked(group, seed ^ 0xa5a5, walk, count, 1, workers)?;
    let b = sample_chunked(group, seed ^ 0x5a5a, doubled, count, 1, workers)?;
    let stat = |xs: &[GroupElement], f: fn(&DMatrix<f64>) -> f64| xs.iter().map(|g| f(g.matrix())).collect::<Vec<_>>();
    let corner: fn(&DMatrix<f64>) -> f64 = |m| m[(0, 0)];
    let trace: fn(&DMatrix<f64>) -> f64 = |m| m.trace() / m.nrows() as f64;
    Ok(MixingKs {
        corner: ks_statistic(&stat(&a, corner), &stat(&b, corner)),
        trace: ks_statistic(&stat(&a, trace), &stat(&b, trace)),
        critical: ks_critical_1pct(count, count),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixingKs {
    pub corner: f64,
    pub trace: f64,
    pub critical: f64,
}

/// Valuation axioms: additivity, homogeneity, evenness, invariance.
pub fn axiom_suite(seed: u64, tol: &Tolerances) -> Result<Vec<Check>> {
    let opts = OuterAngleOptions {
        samples: 10_000,
        seed,
    };
    let g2 = Ambient::G2;
    let s7 = Ambient::Spin7;
    let ids7: Vec<ValuationId> = [ValuationKind::Nu3, ValuationKind::Nu4]
        .into_iter()
        .chain((0..=7).map(ValuationKind::Mu))
        .map(|k| ValuationId::new(k, g2))
        .collect::<Result<_>>()?;
    let eta = ValuationId::new(ValuationKind::Eta, s7)?;
    let mut rng = stream_rng(seed, 21);
    let mut checks = Vec::new();

    // additivity under splitting a box along one of its own axes
    let split = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Result<[Polytope; 4]> {
        let frame = random_subspace(n, n, rng)?.frame().clone();
        let sides: Vec<f64> = (0..n).map(|_| rand::Rng::gen_range(rng, 0.5..1.5)).collect();
        let t: f64 = rand::Rng::gen_range(rng, 0.1..0.9);
        let half: Vec<f64> = sides.iter().map(|s| s / 2.0).collect();
        let whole = Polytope::cuboid(DVector::zeros(n), frame.clone(), half.clone())?;
        let axis = frame.column(0).clone_owned();
        let cut = -half[0] + t * sides[0];
        let part = |lo: f64, hi: f64| -> Result<Polytope> {
            let mut h = half.clone();
            h[0] = (hi - lo) / 2.0;
            Polytope::cuboid(&axis * ((lo + hi) / 2.0), frame.clone(), h)
        };
        Ok([whole, part(-half[0], cut)?, part(cut, half[0])?, part(cut, cut)?])
    };
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let [q, q1, q2, q12] = split(7, &mut rng)?;
        for id in &ids7 {
            let v = |p: &Polytope| evaluate_with(id, p, &opts).map(|v| v.re);
            worst = worst.max((v(&q1)? + v(&q2)? - v(&q12)? - v(&q)?).abs());
        }
    }
    for _ in 0..2 {
        let [q, q1, q2, q12] = split(8, &mut rng)?;
        let v = |p: &Polytope| evaluate_with(&eta, p, &opts).map(|v| v.re);
        worst = worst.max((v(&q1)? + v(&q2)? - v(&q12)? - v(&q)?).abs());
    }
    checks.push(Check::below("additivity", worst, 1e-9));

    // homogeneity and evenness on generic full boxes and simplices
    let mut homog = 0.0f64;
    let mut even = 0.0f64;
    let frame = random_subspace(7, 7, &mut rng)?.frame().clone();
    let bx = Polytope::cuboid(
        DVector::from_fn(7, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0)),
        frame,
        vec![0.3, 0.5, 0.7, 0.4, 0.6, 0.2, 0.8],
    )?;
    let simplex = Polytope::simplex(
        (0..5)
            .map(|_| DVector::from_fn(7, |_, _| rand::Rng::gen_range(&mut rng, -1.0..1.0)))
            .collect(),
    )?;
    for p in [&bx, &simplex] {
        for id in &ids7 {
            let base = evaluate_with(id, p, &opts)?.re;
            for t in [0.5, 2.0] {
                let scaled = evaluate_with(id, &p.scaled(t)?, &opts)?.re;
                homog = homog.max((scaled - t.powi(id.degree() as i32) * base).abs() / (1.0 + base.abs()));
            }
            even = even.max((evaluate_with(id, &p.negated(), &opts)?.re - base).abs());
        }
    }
    checks.push(Check::below("homogeneity", homog, tol.identity));
    checks.push(Check::below("evenness", even, tol.identity));

    // invariance under the structure group, and a witness under SO
    let assoc = Polytope::coordinate_box(7, &[0, 1, 2], &[1.0; 3])?;
    let real4 = Polytope::coordinate_box(8, &[0, 2, 4, 6], &[1.0; 4])?;
    let nu3 = ValuationId::new(ValuationKind::Nu3, g2)?;
    let walk = WalkConfig::default();
    let mut inv = 0.0f64;
    let mut witness = f64::INFINITY;
    for (group, so, body, id) in [(GroupTag::G2, GroupTag::SO7, &assoc, &nu3), (GroupTag::Spin7, GroupTag::SO8, &real4, &eta)] {
        let n = group.dim();
        let base = evaluate_with(id, body, &opts)?.re;
        let z = DVector::zeros(n);
        let mut so_dev = 0.0f64;
        for (gs, ss) in sample_chunked(group, seed, walk, 10, 10, 1)?
            .iter()
            .zip(sample_chunked(so, seed, walk, 10, 10, 1)?.iter())
        {
            inv = inv.max((evaluate_with(id, &body.transformed_by(gs, &z)?, &opts)?.re - base).abs());
            so_dev = so_dev.max((evaluate_with(id, &body.transformed_by(ss, &z)?, &opts)?.re - base).abs());
        }
        witness = witness.min(so_dev);
    }
    checks.push(Check::below("structure_group_invariance", inv, tol.form));
    checks.push(Check {
        passed: witness > 1e-3,
        ..Check::below("so_non_invariance_witness", witness, 1e-3)
    });
    Ok(checks)
}

/// Rank checks for both exceptional contexts.
pub fn rank_suite(ambient: Ambient, samples: usize, seed: u64) -> Result<Vec<Check>> {
    let r = hadwiger_rank_check(ambient, samples, seed)?;
    Ok(vec![
        Check::equals(format!("{}_rank", r.context.to_lowercase()), r.total as f64, 10.0, 0.0),
        Check {
            passed: r.min_gap > 1e3,
            ..Check::below(format!("{}_inverse_gap", r.context.to_lowercase()), 1.0 / r.min_gap, 1e-3)
        },
    ])
}
