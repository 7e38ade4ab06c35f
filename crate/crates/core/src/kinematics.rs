//! Principal kinematic integrals `int chi(K cap (gL + x)) dx dg` by
//! stratified Monte Carlo, and their closed-form right-hand sides.
//!
//! For each group sample `g` the translation integral is the volume of
//! `K - gL`, estimated by uniform points in a box that contains it. Group
//! samples are drawn in fixed chunks (chunk `c` on stream `c`), so results
//! do not depend on the worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::{stream_rng, GroupTag, HaarSampler, WalkConfig};
use crate::intersect::{Body, MinkowskiDifference};
use crate::linalg::{binomial, unit_ball_volume, MeanVar, NeumaierSum};
use crate::polytope::{adapted_frame, OuterAngleOptions, Polytope};
use crate::valuations::{evaluate_with, Ambient, ValuationId, ValuationKind};

/// `1/2^9`, the constant of the exceptional `G2` terms.
pub const G2_CONSTANT: f64 = 1.0 / 512.0;
/// `3/7!`, the constant of the exceptional `Spin(7)` term.
pub const SPIN7_CONSTANT: f64 = 3.0 / 5040.0;

const TRANSLATION_SALT: u64 = 0x7472_616e_736c_6174;

/// Region the translations are drawn from for each group sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TranslationDomain {
    /// Cube of side `2(r_K + r_L) + margin` around `c_K - g c_L`.
    Global,
    /// Bounding box of `K - gL` in a frame adapted to both bodies,
    /// widened by `margin / 2` on each side.
    SupportBox,
}

#[derive(Debug, Clone)]
pub struct KinematicExperiment {
    pub group: GroupTag,
    pub k: Polytope,
    pub l: Polytope,
    pub n_group: usize,
    pub n_translation: usize,
    pub master_seed: u64,
    pub box_margin: f64,
    pub domain: TranslationDomain,
    pub walk: WalkConfig,
    /// Group samples per stream.
    pub chunk: usize,
    pub workers: usize,
    pub angle_samples: usize,
}

impl KinematicExperiment {
    pub fn new(group: GroupTag, k: Polytope, l: Polytope) -> Self {
        Self {
            group,
            k,
            l,
            n_group: 2000,
            n_translation: 2000,
            master_seed: 0,
            box_margin: 0.0,
            domain: TranslationDomain::SupportBox,
            walk: WalkConfig::default(),
            chunk: 256,
            workers: 1,
            angle_samples: OuterAngleOptions::default().samples,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.group.dim();
        let bad = |why: String| Err(Error::InvalidExperiment(why));
        if self.k.ambient_dim() != n || self.l.ambient_dim() != n {
            return bad(format!(
                "bodies live in R^{} and R^{} but {} acts on R^{n}",
                self.k.ambient_dim(),
                self.l.ambient_dim(),
                self.group
            ));
        }
        if self.n_group < 2 || self.n_translation < 1 {
            return bad("need n_group >= 2 and n_translation >= 1".into());
        }
        if !(self.box_margin >= 0.0 && self.box_margin.is_finite()) {
            return bad(format!("box_margin {} must be finite and >= 0", self.box_margin));
        }
        if self.chunk == 0 || self.workers == 0 {
            return bad("chunk and workers must be positive".into());
        }
        self.walk.validate()
    }

    fn outer_angle_options(&self) -> OuterAngleOptions {
        OuterAngleOptions {
            samples: self.angle_samples,
            seed: self.master_seed,
        }
    }
}

/// Mean of one stratum chunk.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumMean {
    pub chunk: usize,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LhsEstimate {
    pub estimate: f64,
    /// The larger of the independent-sample and chunk batch-means errors.
    pub std_error: f64,
    pub iid_std_error: f64,
    pub batch_std_error: f64,
    /// Variance of the per-group translation integrals.
    pub between_variance: f64,
    /// Mean binomial variance of the inner estimates.
    pub within_variance: f64,
    pub hit_rate: f64,
    pub strata: Vec<StratumMean>,
}

struct GroupDraw {
    y: f64,
    within: f64,
    hits: u64,
}

fn translation_box(
    exp: &KinematicExperiment,
    kb: &Body,
    lb: &Body,
    diff: &MinkowskiDifference,
    g: &DMatrix<f64>,
    r: f64,
) -> (DMatrix<f64>, Vec<f64>, Vec<f64>) {
    let n = exp.group.dim();
    match exp.domain {
        TranslationDomain::Global => {
            let c = exp.k.centroid() - g * exp.l.centroid();
            let half = r + exp.box_margin / 2.0;
            (
                DMatrix::identity(n, n),
                c.iter().map(|v| v - half).collect(),
                c.iter().map(|v| v + half).collect(),
            )
        }
        TranslationDomain::SupportBox => {
            let q = adapted_frame(kb, lb);
            let mut lo = Vec::with_capacity(n);
            let mut hi = Vec::with_capacity(n);
            for col in q.column_iter() {
                let d: Vec<f64> = col.iter().copied().collect();
                let neg: Vec<f64> = d.iter().map(|v| -v).collect();
                lo.push(-diff.support_value(&neg) - exp.box_margin / 2.0);
                hi.push(diff.support_value(&d) + exp.box_margin / 2.0);
            }
            (q, lo, hi)
        }
    }
}

fn draw_translations(
    exp: &KinematicExperiment,
    kb: &Body,
    g: &DMatrix<f64>,
    r: f64,
    rng: &mut impl Rng,
) -> GroupDraw {
    let n = exp.group.dim();
    let lb = exp.l.body().transformed(g, &vec![0.0; n]);
    let diff = MinkowskiDifference::new(kb, &lb);
    let (q, lo, hi) = translation_box(exp, kb, &lb, &diff, g, r);
    let vol: f64 = lo.iter().zip(&hi).map(|(a, b)| (b - a).max(0.0)).product();
    let mut hits = 0u64;
    let mut u = DVector::zeros(n);
    for _ in 0..exp.n_translation {
        for i in 0..n {
            u[i] = lo[i] + rng.gen::<f64>() * (hi[i] - lo[i]);
        }
        let x = &q * &u;
        if diff.contains(x.as_slice()) {
            hits += 1;
        }
    }
    let nt = exp.n_translation as f64;
    let p = hits as f64 / nt;
    GroupDraw {
        y: vol * p,
        within: vol * vol * p * (1.0 - p) / nt,
        hits,
    }
}

/// Stratified estimate of the kinematic integral.
pub fn pkf_lhs(exp: &KinematicExperiment) -> Result<LhsEstimate> {
    exp.validate()?;
    let kb = exp.k.body();
    let r = exp.k.bounding_radius() + exp.l.bounding_radius();
    let base = HaarSampler::with_config(exp.group, exp.master_seed, exp.walk)?;
    let n_chunks = exp.n_group.div_ceil(exp.chunk);
    let run = |c: usize| -> Result<Vec<GroupDraw>> {
        let len = exp.chunk.min(exp.n_group - c * exp.chunk);
        let mut sampler = base.fork(c as u64);
        let mut rng = stream_rng(exp.master_seed ^ TRANSLATION_SALT, c as u64);
        (0..len)
            .map(|_| {
                let g = sampler.sample()?;
                Ok(draw_translations(exp, &kb, g.matrix(), r, &mut rng))
            })
            .collect()
    };
    let chunks = crate::parallel::map_indexed(n_chunks, exp.workers, run);
    let mut all = MeanVar::default();
    let mut batches = MeanVar::default();
    let mut within = NeumaierSum::default();
    let mut hits = 0u64;
    let mut strata = Vec::with_capacity(n_chunks);
    for (c, draws) in chunks.into_iter().enumerate() {
        let draws = draws?;
        let mut mv = MeanVar::default();
        for d in &draws {
            all.push(d.y);
            mv.push(d.y);
            within.add(d.within);
            hits += d.hits;
        }
        if draws.len() == exp.chunk {
            batches.push(mv.mean());
        }
        strata.push(StratumMean {
            chunk: c,
            count: draws.len(),
            mean: mv.mean(),
            variance: if draws.len() > 1 { mv.variance() } else { 0.0 },
        });
    }
    let ng = exp.n_group as f64;
    let iid = all.std_error();
    let batch = if batches.count() >= 10 {
        batches.std_error()
    } else {
        0.0
    };
    let within = within.value() / ng;
    Ok(LhsEstimate {
        estimate: all.mean(),
        std_error: iid.max(batch),
        iid_std_error: iid,
        batch_std_error: batch,
        between_variance: (all.variance() - within).max(0.0),
        within_variance: within,
        hit_rate: hits as f64 / (ng * exp.n_translation as f64),
        strata,
    })
}

/// `E_g vol(K - gL)` with exact volumes when `K - gL` is a parallelotope and
/// direct membership sampling in the global cube otherwise.
pub fn pkf_lhs_minkowski(exp: &KinematicExperiment) -> Result<(f64, f64)> {
    exp.validate()?;
    let n = exp.group.dim();
    let kb = exp.k.body();
    let r = exp.k.bounding_radius() + exp.l.bounding_radius();
    let mut sampler = HaarSampler::with_config(exp.group, exp.master_seed ^ 0x5ec0, exp.walk)?;
    let mut rng = stream_rng(exp.master_seed ^ 0x5ec0, 1);
    let global = KinematicExperiment {
        domain: TranslationDomain::Global,
        ..exp.clone()
    };
    let mut mv = MeanVar::default();
    for _ in 0..exp.n_group {
        let g = sampler.sample()?;
        let lb = exp.l.body().transformed(g.matrix(), &vec![0.0; n]);
        let diff = MinkowskiDifference::new(&kb, &lb);
        let y = match diff.parallelotope_volume() {
            Some(v) => v,
            None => draw_translations(&global, &kb, g.matrix(), r, &mut rng).y,
        };
        mv.push(y);
    }
    Ok((mv.mean(), mv.std_error()))
}

/// Named right-hand-side terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhsTerms {
    pub terms: BTreeMap<String, f64>,
    pub total: f64,
    pub std_error: f64,
}

impl RhsTerms {
    pub fn classical_total(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| k.starts_with("classical_"))
            .map(|(_, v)| v)
            .sum()
    }

    pub fn exceptional_total(&self) -> f64 {
        self.total - self.classical_total()
    }
}

/// `binom(n,k)^-1 omega_k omega_{n-k} / omega_n`.
pub fn classical_constant(n: usize, k: usize) -> f64 {
    unit_ball_volume(k) * unit_ball_volume(n - k) / (binomial(n, k) * unit_ball_volume(n))
}

fn mu(p: &Polytope, opts: &OuterAngleOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let iv = p.intrinsic_volumes(opts)?;
    Ok((iv.values, iv.std_errors))
}

fn classical_terms(n: usize, k: &Polytope, l: &Polytope, opts: &OuterAngleOptions) -> Result<(BTreeMap<String, f64>, f64)> {
    if k.ambient_dim() != n || l.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if k.ambient_dim() != n { k.ambient_dim() } else { l.ambient_dim() },
        });
    }
    let (mk, sk) = mu(k, opts)?;
    let (ml, sl) = mu(l, opts)?;
    let mut terms = BTreeMap::new();
    let mut var = 0.0;
    for j in 0..=n {
        let c = classical_constant(n, j);
        terms.insert(format!("classical_{j}"), c * mk[j] * ml[n - j]);
        var += (c * sk[j] * ml[n - j]).powi(2) + (c * mk[j] * sl[n - j]).powi(2);
    }
    Ok((terms, var))
}

fn finish(terms: BTreeMap<String, f64>, var: f64) -> RhsTerms {
    let total = terms.values().copied().collect::<NeumaierSum>().value();
    RhsTerms {
        terms,
        total,
        std_error: var.sqrt(),
    }
}

pub fn pkf_rhs_classical(n: usize, k: &Polytope, l: &Polytope) -> Result<RhsTerms> {
    pkf_rhs_classical_with(n, k, l, &OuterAngleOptions::default())
}

pub fn pkf_rhs_classical_with(n: usize, k: &Polytope, l: &Polytope, opts: &OuterAngleOptions) -> Result<RhsTerms> {
    let (terms, var) = classical_terms(n, k, l, opts)?;
    Ok(finish(terms, var))
}

fn primed(kind: ValuationKind, ambient: Ambient, p: &Polytope, opts: &OuterAngleOptions) -> Result<(f64, f64)> {
    let v = evaluate_with(&ValuationId::new(kind, ambient)?, p, opts)?;
    Ok((v.re, v.std_error))
}

fn product_var(a: (f64, f64), b: (f64, f64), c: f64) -> f64 {
    (c * a.1 * b.0).powi(2) + (c * a.0 * b.1).powi(2)
}

pub fn pkf_rhs_g2(k: &Polytope, l: &Polytope) -> Result<RhsTerms> {
    pkf_rhs_g2_with(k, l, &OuterAngleOptions::default())
}

pub fn pkf_rhs_g2_with(k: &Polytope, l: &Polytope, opts: &OuterAngleOptions) -> Result<RhsTerms> {
    let (mut terms, mut var) = classical_terms(7, k, l, opts)?;
    let a = Ambient::G2;
    let k3 = primed(ValuationKind::Nu3Prime, a, k, opts)?;
    let k4 = primed(ValuationKind::Nu4Prime, a, k, opts)?;
    let l3 = primed(ValuationKind::Nu3Prime, a, l, opts)?;
    let l4 = primed(ValuationKind::Nu4Prime, a, l, opts)?;
    terms.insert("g2_nu3p_k_nu4p_l".into(), G2_CONSTANT * k3.0 * l4.0);
    terms.insert("g2_nu4p_k_nu3p_l".into(), G2_CONSTANT * k4.0 * l3.0);
    var += product_var(k3, l4, G2_CONSTANT) + product_var(k4, l3, G2_CONSTANT);
    Ok(finish(terms, var))
}

pub fn pkf_rhs_spin7(k: &Polytope, l: &Polytope) -> Result<RhsTerms> {
    pkf_rhs_spin7_with(k, l, &OuterAngleOptions::default())
}

pub fn pkf_rhs_spin7_with(k: &Polytope, l: &Polytope, opts: &OuterAngleOptions) -> Result<RhsTerms> {
    let (mut terms, mut var) = classical_terms(8, k, l, opts)?;
    let a = Ambient::Spin7;
    let ek = primed(ValuationKind::EtaPrime, a, k, opts)?;
    let el = primed(ValuationKind::EtaPrime, a, l, opts)?;
    terms.insert("spin7_etap_k_etap_l".into(), SPIN7_CONSTANT * ek.0 * el.0);
    var += product_var(ek, el, SPIN7_CONSTANT);
    Ok(finish(terms, var))
}

/// Right-hand side for the experiment's group.
pub fn pkf_rhs(group: GroupTag, k: &Polytope, l: &Polytope, opts: &OuterAngleOptions) -> Result<RhsTerms> {
    match group {
        GroupTag::SO7 | GroupTag::SO8 => pkf_rhs_classical_with(group.dim(), k, l, opts),
        GroupTag::G2 => pkf_rhs_g2_with(k, l, opts),
        GroupTag::Spin7 => pkf_rhs_spin7_with(k, l, opts),
        GroupTag::SU3 | GroupTag::SU4 => Err(Error::InvalidExperiment(format!(
            "no closed-form kinematic formula for {group}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KinematicReport {
    pub group: GroupTag,
    pub n_group: usize,
    pub n_translation: usize,
    pub master_seed: u64,
    pub domain: TranslationDomain,
    pub lhs_estimate: f64,
    pub lhs_std_error: f64,
    pub lhs: LhsEstimate,
    pub rhs_terms: BTreeMap<String, f64>,
    pub rhs_total: f64,
    pub rhs_std_error: f64,
    pub z_score: f64,
    /// `lhs - classical`.
    pub exceptional_observed: f64,
    pub exceptional_predicted: f64,
    /// `|observed - predicted| / |predicted|`; zero prediction gives `null`.
    pub exceptional_relative_error: Option<f64>,
    pub relative_error: f64,
}

pub fn run_experiment(exp: &KinematicExperiment) -> Result<KinematicReport> {
    let lhs = pkf_lhs(exp)?;
    let rhs = pkf_rhs(exp.group, &exp.k, &exp.l, &exp.outer_angle_options())?;
    let se = (lhs.std_error.powi(2) + rhs.std_error.powi(2)).sqrt();
    let observed = lhs.estimate - rhs.classical_total();
    let predicted = rhs.exceptional_total();
    Ok(KinematicReport {
        group: exp.group,
        n_group: exp.n_group,
        n_translation: exp.n_translation,
        master_seed: exp.master_seed,
        domain: exp.domain,
        lhs_estimate: lhs.estimate,
        lhs_std_error: lhs.std_error,
        z_score: (lhs.estimate - rhs.total) / se,
        exceptional_observed: observed,
        exceptional_predicted: predicted,
        exceptional_relative_error: (predicted != 0.0).then(|| (observed - predicted).abs() / predicted.abs()),
        relative_error: (lhs.estimate - rhs.total).abs() / rhs.total.abs(),
        rhs_terms: rhs.terms,
        rhs_total: rhs.total,
        rhs_std_error: rhs.std_error,
        lhs,
    })
}

impl KinematicReport {
    /// Per-stratum means as CSV.
    pub fn strata_csv(&self) -> String {
        let mut out = String::from("chunk,count,mean,variance\n");
        for s in &self.lhs.strata {
            let _ = writeln!(out, "{},{},{:e},{:e}", s.chunk, s.count, s.mean, s.variance);
        }
        out
    }
}

/// Named body pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Unit cubes in the group's dimension.
    CubePair,
    /// Unit 3-box on `(e0,e1,e2)` and unit 4-box on `(e3,..,e6)` in `R^7`.
    AssociativeCoassociative,
    /// Associative unit 3-box and a unit 4-box with `phi(U^perp) = 0`.
    AssociativeNull,
    /// Unit 4-boxes on the real 4-plane `(x1,..,x4)` of `C^4`.
    Real4Plane,
    /// Unit 4-boxes on the complex 2-plane `(x1,y1,x2,y2)` of `C^4`.
    Complex2Plane,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::CubePair,
        Preset::AssociativeCoassociative,
        Preset::AssociativeNull,
        Preset::Real4Plane,
        Preset::Complex2Plane,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::CubePair => "cube-pair",
            Preset::AssociativeCoassociative => "associative-coassociative",
            Preset::AssociativeNull => "associative-null",
            Preset::Real4Plane => "real-4-plane",
            Preset::Complex2Plane => "complex-2-plane",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown preset '{s}'")))
    }

    /// `(K, L)` in the ambient space of `group`.
    pub fn bodies(self, group: GroupTag) -> Result<(Polytope, Polytope)> {
        let n = group.dim();
        let need = |d: usize| {
            if n == d {
                Ok(())
            } else {
                Err(Error::Config(format!("preset {} needs R^{d}, {group} acts on R^{n}", self.name())))
            }
        };
        let unit = |axes: &[usize]| Polytope::coordinate_box(n, axes, &vec![1.0; axes.len()]);
        match self {
            Preset::CubePair => Ok((Polytope::unit_cube(n)?, Polytope::unit_cube(n)?)),
            Preset::AssociativeCoassociative => {
                need(7)?;
                Ok((unit(&[0, 1, 2])?, unit(&[3, 4, 5, 6])?))
            }
            Preset::AssociativeNull => {
                need(7)?;
                Ok((unit(&[0, 1, 2])?, unit(&[2, 4, 5, 6])?))
            }
            Preset::Real4Plane => {
                need(8)?;
                Ok((unit(&[0, 2, 4, 6])?, unit(&[0, 2, 4, 6])?))
            }
            Preset::Complex2Plane => {
                need(8)?;
                Ok((unit(&[0, 1, 2, 3])?, unit(&[0, 1, 2, 3])?))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::{cayley_sq, phi_sq, Subspace};
    use std::f64::consts::PI;

    fn small(group: GroupTag, k: Polytope, l: Polytope, ng: usize, nt: usize, seed: u64) -> KinematicExperiment {
        KinematicExperiment {
            n_group: ng,
            n_translation: nt,
            master_seed: seed,
            chunk: 32,
            ..KinematicExperiment::new(group, k, l)
        }
    }

    #[test]
    fn classical_constants() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((classical_constant(7, 3) * 8.0 - 1.0).abs() < 1e-14);
        assert!((classical_constant(8, 4) - 6.0 / 70.0).abs() < 1e-14);
        for n in [7, 8] {
            assert!((classical_constant(n, 0) - 1.0).abs() < 1e-14);
            for k in 0..=n {
                assert!((classical_constant(n, k) - classical_constant(n, n - k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rhs_examples() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::G2).unwrap();
        let c = pkf_rhs_classical(7, &k, &l).unwrap();
        let nonzero: Vec<_> = c.terms.iter().filter(|(_, v)| **v != 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert!((c.terms["classical_3"] - 0.125).abs() < 1e-14);
        let g2 = pkf_rhs_g2(&k, &l).unwrap();
        assert!((g2.exceptional_total() - 16.0 / 512.0).abs() < 1e-13);
        let (k, l) = Preset::AssociativeNull.bodies(GroupTag::G2).unwrap();
        let u_perp = Subspace::coordinate(7, &[2, 4, 5, 6]).unwrap().perp();
        assert!(phi_sq(&u_perp).unwrap() < 1e-15);
        assert!((pkf_rhs_g2(&k, &l).unwrap().exceptional_total() + 4.0 / 512.0).abs() < 1e-13);
        for p in [Preset::Real4Plane, Preset::Complex2Plane] {
            let (k, l) = p.bodies(GroupTag::Spin7).unwrap();
            assert!((cayley_sq(&Subspace::coordinate(8, &[0, 2, 4, 6]).unwrap()).unwrap() - 1.0).abs() < 1e-13);
            let s = pkf_rhs_spin7(&k, &l).unwrap();
            assert!((s.exceptional_total() - 48.0 / 5040.0).abs() < 1e-13, "{p:?}");
            assert!((s.classical_total() - 6.0 / 70.0).abs() < 1e-13);
        }
        let pt = Polytope::point(DVector::zeros(7)).unwrap();
        assert_eq!(pkf_rhs_classical(7, &pt, &pt).unwrap().total, 0.0);
        assert!(Preset::Real4Plane.bodies(GroupTag::G2).is_err());
    }

    #[test]
    fn point_body_gives_volume_of_l() {
        let k = Polytope::point(DVector::zeros(7)).unwrap();
        let l = Polytope::coordinate_box(7, &[0, 1, 2, 3, 4, 5, 6], &[1.0, 2.0, 0.5, 1.0, 1.0, 1.5, 1.0]).unwrap();
        let exp = small(GroupTag::SO7, k, l, 64, 2000, 1);
        // the support box of -gL is -gL itself, so every translation hits
        let e = pkf_lhs(&exp).unwrap();
        assert_eq!(e.hit_rate, 1.0);
        assert!((e.estimate - 1.5).abs() < 1e-12, "{e:?}");
        let global = KinematicExperiment {
            domain: TranslationDomain::Global,
            ..exp
        };
        let e = pkf_lhs(&global).unwrap();
        assert!((e.estimate - 1.5).abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn margin_does_not_change_estimate() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::SO7).unwrap();
        let a = pkf_lhs(&small(GroupTag::SO7, k.clone(), l.clone(), 400, 200, 2)).unwrap();
        let mut wide = small(GroupTag::SO7, k, l, 400, 200, 3);
        wide.box_margin = 1.0;
        let b = pkf_lhs(&wide).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.estimate - b.estimate).abs() < 3.0 * se);
        assert!(b.hit_rate < a.hit_rate);
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::G2).unwrap();
        let one = small(GroupTag::G2, k.clone(), l.clone(), 100, 20, 4);
        let three = KinematicExperiment { workers: 3, ..one.clone() };
        let a = run_experiment(&one).unwrap();
        let b = run_experiment(&three).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn reduction_identity_against_exact_volumes() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::SO7).unwrap();
        let exp = small(GroupTag::SO7, k, l, 2000, 100, 5);
        let a = pkf_lhs(&exp).unwrap();
        let b = pkf_lhs_minkowski(&exp).unwrap();
        let se = (a.std_error.powi(2) + b.1.powi(2)).sqrt();
        assert!((a.estimate - b.0).abs() < 3.0 * se, "{} vs {}", a.estimate, b.0);
    }

    #[test]
    fn scaling_l_increases_lhs() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::SO7).unwrap();
        let a = pkf_lhs(&small(GroupTag::SO7, k.clone(), l.clone(), 300, 100, 6)).unwrap();
        let b = pkf_lhs(&small(GroupTag::SO7, k, l.scaled(1.5).unwrap(), 300, 100, 6)).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!(b.estimate - a.estimate > 3.0 * se);
    }

    #[test]
    fn invalid_experiments_are_rejected() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::G2).unwrap();
        let mut exp = KinematicExperiment::new(GroupTag::Spin7, k.clone(), l.clone());
        assert!(matches!(pkf_lhs(&exp), Err(Error::InvalidExperiment(_))));
        exp.group = GroupTag::G2;
        exp.box_margin = -1.0;
        assert!(exp.validate().is_err());
        exp.box_margin = 0.0;
        exp.n_group = 1;
        assert!(exp.validate().is_err());
        assert!(pkf_rhs(GroupTag::SU3, &k, &l, &OuterAngleOptions::default()).is_err());
        assert!(Preset::parse("nope").is_err());
        assert_eq!(Preset::parse("real-4-plane").unwrap(), Preset::Real4Plane);
    }

    #[test]
    fn strata_csv_has_one_row_per_chunk() {
        let (k, l) = Preset::AssociativeCoassociative.bodies(GroupTag::SO7).unwrap();
        let r = run_experiment(&small(GroupTag::SO7, k, l, 70, 10, 7)).unwrap();
        let csv = r.strata_csv();
        assert_eq!(csv.lines().count(), 1 + 3);
        assert!(csv.starts_with("chunk,count,mean,variance"));
    }
}
