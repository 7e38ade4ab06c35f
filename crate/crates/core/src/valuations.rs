//! Invariant valuations as face sums `sum_F gamma(F) vol(F) w(W_F)` over
//! faces of the valuation's degree, where `w` is the Klain weight.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::standard;
use crate::grassmann::{
    cayley_sq, form_on_subspace, kaehler_angles, phi_sq, random_subspace, sigma_cos_sq, theta, HermitianStructure,
    Subspace,
};
use crate::groups::{stream_rng, GroupTag};
use crate::linalg::{complement, unit_ball_volume, NeumaierSum};
use crate::polytope::{face_outer_angle, OuterAngleOptions, Polytope};

/// Ambient space and structure group a valuation is invariant under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ambient {
    /// `R^7` with the standard positive 3-form.
    G2,
    /// `R^8 = C^4` with the Cayley form.
    Spin7,
    /// `C^m` with the standard Hermitian structure.
    Su(usize),
    /// `R^n`, rigid motions only.
    Euclidean(usize),
}

impl Ambient {
    pub fn dim(self) -> usize {
        match self {
            Ambient::G2 => 7,
            Ambient::Spin7 => 8,
            Ambient::Su(m) => 2 * m,
            Ambient::Euclidean(n) => n,
        }
    }

    pub fn group(self) -> Option<GroupTag> {
        match self {
            Ambient::G2 => Some(GroupTag::G2),
            Ambient::Spin7 => Some(GroupTag::Spin7),
            Ambient::Su(3) => Some(GroupTag::SU3),
            Ambient::Su(4) => Some(GroupTag::SU4),
            Ambient::Euclidean(7) => Some(GroupTag::SO7),
            Ambient::Euclidean(8) => Some(GroupTag::SO8),
            _ => None,
        }
    }

    fn hermitian(self) -> Option<HermitianStructure> {
        match self {
            Ambient::Spin7 => Some(HermitianStructure::standard(4)),
            Ambient::Su(m) => Some(HermitianStructure::standard(m)),
            _ => None,
        }
    }
}

impl fmt::Display for Ambient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ambient::G2 => write!(f, "G2"),
            Ambient::Spin7 => write!(f, "SPIN7"),
            Ambient::Su(m) => write!(f, "SU({m})"),
            Ambient::Euclidean(n) => write!(f, "SO({n})"),
        }
    }
}

impl FromStr for Ambient {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.trim().to_ascii_uppercase();
        match u.as_str() {
            "G2" => return Ok(Ambient::G2),
            "SPIN7" => return Ok(Ambient::Spin7),
            _ => {}
        }
        let (head, args) = split_call(&u)?;
        let m = match args.as_slice() {
            [m] => *m,
            _ => return Err(Error::InvalidValuation(format!("bad ambient '{s}'"))),
        };
        match head {
            "SU" if (1..=4).contains(&m) => Ok(Ambient::Su(m)),
            "SO" if (1..=8).contains(&m) => Ok(Ambient::Euclidean(m)),
            _ => Err(Error::InvalidValuation(format!("unknown ambient '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValuationKind {
    Mu(usize),
    Nu3,
    Nu4,
    Eta,
    Tasaki(usize, usize),
    PhiN2(usize),
    PhiN1(usize),
    Nu3Prime,
    Nu4Prime,
    EtaPrime,
}

impl ValuationKind {
    pub fn degree(self) -> usize {
        match self {
            ValuationKind::Mu(k) | ValuationKind::Tasaki(k, _) | ValuationKind::PhiN2(k) | ValuationKind::PhiN1(k) => k,
            ValuationKind::Nu3 | ValuationKind::Nu3Prime => 3,
            ValuationKind::Nu4 | ValuationKind::Nu4Prime | ValuationKind::Eta | ValuationKind::EtaPrime => 4,
        }
    }

    pub fn is_complex(self) -> bool {
        matches!(self, ValuationKind::PhiN1(_) | ValuationKind::PhiN2(_))
    }
}

impl fmt::Display for ValuationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValuationKind::Mu(k) => write!(f, "MU({k})"),
            ValuationKind::Nu3 => write!(f, "NU3"),
            ValuationKind::Nu4 => write!(f, "NU4"),
            ValuationKind::Eta => write!(f, "ETA"),
            ValuationKind::Tasaki(k, q) => write!(f, "TASAKI({k},{q})"),
            ValuationKind::PhiN2(n) => write!(f, "PHI_N2({n})"),
            ValuationKind::PhiN1(n) => write!(f, "PHI_N1({n})"),
            ValuationKind::Nu3Prime => write!(f, "NU3_PRIME"),
            ValuationKind::Nu4Prime => write!(f, "NU4_PRIME"),
            ValuationKind::EtaPrime => write!(f, "ETA_PRIME"),
        }
    }
}

fn split_call(s: &str) -> Result<(&str, Vec<usize>)> {
    let bad = || Error::InvalidValuation(format!("cannot parse '{s}'"));
    let open = s.find('(').ok_or_else(bad)?;
    let inner = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
    let args = inner
        .split(',')
        .map(|a| a.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>>>()?;
    Ok((s[..open].trim(), args))
}

impl FromStr for ValuationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let u = s.trim().to_ascii_uppercase();
        let plain = match u.as_str() {
            "NU3" => Some(ValuationKind::Nu3),
            "NU4" => Some(ValuationKind::Nu4),
            "ETA" => Some(ValuationKind::Eta),
            "NU3_PRIME" => Some(ValuationKind::Nu3Prime),
            "NU4_PRIME" => Some(ValuationKind::Nu4Prime),
            "ETA_PRIME" => Some(ValuationKind::EtaPrime),
            _ => None,
        };
        if let Some(k) = plain {
            return Ok(k);
        }
        let (head, args) = split_call(&u)?;
        match (head, args.as_slice()) {
            ("MU", [k]) => Ok(ValuationKind::Mu(*k)),
            ("TASAKI", [k, q]) => Ok(ValuationKind::Tasaki(*k, *q)),
            ("PHI_N2", [n]) => Ok(ValuationKind::PhiN2(*n)),
            ("PHI_N1", [n]) => Ok(ValuationKind::PhiN1(*n)),
            _ => Err(Error::InvalidValuation(format!("unknown valuation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ValuationId {
    pub kind: ValuationKind,
    pub ambient: Ambient,
}

impl ValuationId {
    /// Checked constructor.
    pub fn new(kind: ValuationKind, ambient: Ambient) -> Result<Self> {
        let n = ambient.dim();
        let bad = |why: &str| Err(Error::InvalidValuation(format!("{kind} on {ambient}: {why}")));
        match kind {
            ValuationKind::Mu(k) if k > n => return bad("degree exceeds dimension"),
            ValuationKind::Nu3 | ValuationKind::Nu4 | ValuationKind::Nu3Prime | ValuationKind::Nu4Prime
                if ambient != Ambient::G2 =>
            {
                return bad("needs the G2 ambient")
            }
            ValuationKind::Eta | ValuationKind::EtaPrime if ambient != Ambient::Spin7 => {
                return bad("needs the SPIN7 ambient")
            }
            ValuationKind::Tasaki(k, q) => {
                if ambient.hermitian().is_none() {
                    return bad("needs a complex ambient");
                }
                if k > n || q > k / 2 {
                    return bad("requires k <= n and q <= k/2");
                }
            }
            ValuationKind::PhiN1(m) | ValuationKind::PhiN2(m) => match ambient.hermitian() {
                Some(h) if h.complex_dim() == m => {}
                _ => return bad("degree must equal the complex dimension"),
            },
            _ => {}
        }
        Ok(Self { kind, ambient })
    }

    pub fn parse(kind: &str, ambient: Ambient) -> Result<Self> {
        Self::new(kind.parse()?, ambient)
    }

    pub fn degree(&self) -> usize {
        self.kind.degree()
    }
}

impl fmt::Display for ValuationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.kind, self.ambient)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValuationValue {
    pub re: f64,
    pub im: f64,
    pub std_error: f64,
}

impl ValuationValue {
    pub fn value(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }

    pub fn zero() -> Self {
        Self {
            re: 0.0,
            im: 0.0,
            std_error: 0.0,
        }
    }
}

/// Klain weight of `id` on a subspace of its degree.
pub fn klain_weight(id: &ValuationId, w: &Subspace) -> Result<Complex<f64>> {
    let n = id.ambient.dim();
    if w.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: w.ambient_dim(),
        });
    }
    if w.dim() != id.degree() {
        return Err(Error::DegreeMismatch {
            expected: id.degree(),
            got: w.dim(),
        });
    }
    let real = |x: f64| Ok(Complex::new(x, 0.0));
    let prime = |x: f64| Ok(Complex::new(5.0 * x - 1.0, 0.0));
    match id.kind {
        ValuationKind::Mu(_) => real(1.0),
        ValuationKind::Nu3 => real(phi_sq(w)?),
        ValuationKind::Nu4 => real(phi_sq(&w.perp())?),
        ValuationKind::Eta => real(cayley_sq(w)?),
        ValuationKind::Nu3Prime => prime(phi_sq(w)?),
        ValuationKind::Nu4Prime => prime(phi_sq(&w.perp())?),
        ValuationKind::EtaPrime => prime(cayley_sq(w)?),
        ValuationKind::Tasaki(_, q) => {
            let hs = id.ambient.hermitian().expect("checked in ValuationId::new");
            let s = sigma_cos_sq(&kaehler_angles(w, &hs)?);
            real(s.get(q).copied().unwrap_or(0.0))
        }
        ValuationKind::PhiN2(_) => {
            let hs = id.ambient.hermitian().expect("checked in ValuationId::new");
            Ok(theta(w, &hs)?.squared())
        }
        ValuationKind::PhiN1(_) => {
            let hs = id.ambient.hermitian().expect("checked in ValuationId::new");
            let c: f64 = kaehler_angles(w, &hs)?.cosines().iter().product();
            Ok(theta(w, &hs)?.value * c)
        }
    }
}

/// Face-sum evaluation with outer angles from `opts`.
pub fn evaluate_with(id: &ValuationId, p: &Polytope, opts: &OuterAngleOptions) -> Result<ValuationValue> {
    let n = id.ambient.dim();
    if p.ambient_dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.ambient_dim(),
        });
    }
    let k = id.degree();
    if k > p.dim() {
        return Ok(ValuationValue::zero());
    }
    let (mut re, mut im) = (NeumaierSum::default(), NeumaierSum::default());
    let mut var = 0.0;
    for face in p.faces(k)? {
        let gamma = face_outer_angle(&face, opts)?;
        if gamma.value == 0.0 && gamma.std_error == 0.0 {
            continue;
        }
        let w = klain_weight(id, &face.tangent)?;
        let scale = gamma.value * face.volume;
        re.add(scale * w.re);
        im.add(scale * w.im);
        var += (gamma.std_error * face.volume * w.norm()).powi(2);
    }
    let mut im = im.value();
    if !id.kind.is_complex() {
        debug_assert!(im.abs() < 1e-10);
        im = 0.0;
    }
    Ok(ValuationValue {
        re: re.value(),
        im,
        std_error: var.sqrt(),
    })
}

pub fn evaluate(id: &ValuationId, p: &Polytope) -> Result<ValuationValue> {
    evaluate_with(id, p, &OuterAngleOptions::default())
}

/// `|eta(P) - (1/2 tau_40 - 1/2 tau_41 + 3/2 tau_42 + 1/2 Re phi_42 + 2 Re phi_41)(P)|`.
pub fn eta_decomposition_residual(p: &Polytope) -> Result<f64> {
    eta_decomposition_residual_with(p, &OuterAngleOptions::default())
}

pub fn eta_decomposition_residual_with(p: &Polytope, opts: &OuterAngleOptions) -> Result<f64> {
    let a = Ambient::Spin7;
    let ev = |kind| evaluate_with(&ValuationId::new(kind, a)?, p, opts);
    let eta = ev(ValuationKind::Eta)?.re;
    let combo = 0.5 * ev(ValuationKind::Tasaki(4, 0))?.re - 0.5 * ev(ValuationKind::Tasaki(4, 1))?.re
        + 1.5 * ev(ValuationKind::Tasaki(4, 2))?.re
        + 0.5 * ev(ValuationKind::PhiN2(4))?.re
        + 2.0 * ev(ValuationKind::PhiN1(4))?.re;
    Ok((eta - combo).abs())
}

/// Result of the disk-bundle integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiskBundle {
    /// `sum_F phi(W_F) vol(F) I(F)` with `I(F)` the integral of `*phi`
    /// over the solid normal-cone patch `N(F) cap B^4`.
    pub raw: f64,
    pub raw_std_error: f64,
    /// `raw / omega_4`, comparable with the face-sum `nu_3`.
    pub value: ValuationValue,
}

/// Disk-bundle representation of `nu_3` for a polytope in `R^7`, with the
/// solid cone volumes estimated by rejection sampling in `[-1, 1]^4`.
pub fn nu3_disk_bundle(p: &Polytope, mc_samples: usize, seed: u64) -> Result<DiskBundle> {
    if p.ambient_dim() != 7 {
        return Err(Error::DimensionMismatch {
            expected: 7,
            got: p.ambient_dim(),
        });
    }
    if mc_samples == 0 {
        return Err(Error::InvalidValuation("mc_samples must be positive".into()));
    }
    let zero = DiskBundle {
        raw: 0.0,
        raw_std_error: 0.0,
        value: ValuationValue::zero(),
    };
    if p.dim() < 3 {
        return Ok(zero);
    }
    let s = standard();
    let mut raw = NeumaierSum::default();
    let mut var = 0.0;
    for (idx, face) in p.faces(3)?.into_iter().enumerate() {
        let wf = face.tangent.frame().clone();
        let mut u = complement(&wf);
        let full = DMatrix::from_columns(&wf.column_iter().chain(u.column_iter()).collect::<Vec<_>>());
        if full.determinant() < 0.0 {
            let mut c = u.column_mut(0);
            c.neg_mut();
        }
        let phi_w = form_on_subspace(&s.phi, &face.tangent)?;
        let star_u = s.star_phi.eval_columns(&u)?;
        // constraint directions in U-coordinates
        let dirs: Vec<DVector<f64>> = face.cone.constraints.iter().map(|d| u.tr_mul(d)).collect();
        let mut rng = stream_rng(seed, idx as u64);
        let mut hits = 0u64;
        let mut z = DVector::zeros(4);
        for _ in 0..mc_samples {
            for v in z.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            if z.norm_squared() <= 1.0 && dirs.iter().all(|d| d.dot(&z) <= 0.0) {
                hits += 1;
            }
        }
        let frac = hits as f64 / mc_samples as f64;
        let vol = 16.0 * frac;
        let vol_se = 16.0 * (frac * (1.0 - frac) / mc_samples as f64).sqrt();
        let c = phi_w * star_u * face.volume;
        raw.add(c * vol);
        var += (c * vol_se).powi(2);
    }
    let omega4 = unit_ball_volume(4);
    let raw = raw.value();
    let raw_se = var.sqrt();
    Ok(DiskBundle {
        raw,
        raw_std_error: raw_se,
        value: ValuationValue {
            re: raw / omega4,
            im: 0.0,
            std_error: raw_se / omega4,
        },
    })
}

/// The constant written in front of the disk-bundle integral, `1/(2 pi^2)`.
pub const DISK_BUNDLE_PREFACTOR: f64 = 1.0 / (2.0 * PI * PI);

/// `max_W |w_A(W) - w_B(W^perp)|` over random `W` of degree `deg A`.
pub fn fourier_residual(a: &ValuationId, b: &ValuationId, samples: usize, seed: u64) -> Result<f64> {
    let n = a.ambient.dim();
    if b.ambient.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.ambient.dim(),
        });
    }
    if a.degree() + b.degree() != n {
        return Err(Error::DegreeMismatch {
            expected: n - a.degree().min(n),
            got: b.degree(),
        });
    }
    let mut rng = stream_rng(seed, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let w = random_subspace(n, a.degree(), &mut rng)?;
        let d = (klain_weight(a, &w)? - klain_weight(b, &w.perp())?).norm();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Per-degree numerical rank of Klain-function samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    pub context: String,
    pub per_degree: Vec<usize>,
    pub total: usize,
    /// Smallest ratio between the last retained singular value and the
    /// first discarded one (or machine-precision floor).
    pub min_gap: f64,
}

/// Candidate basis of each degree for the given context.
pub fn basis_candidates(ambient: Ambient) -> Result<Vec<Vec<ValuationId>>> {
    let n = ambient.dim();
    (0..=n)
        .map(|k| {
            let mut ids = vec![ValuationId::new(ValuationKind::Mu(k), ambient)?];
            match (ambient, k) {
                (Ambient::G2, 3) => ids.push(ValuationId::new(ValuationKind::Nu3, ambient)?),
                (Ambient::G2, 4) => ids.push(ValuationId::new(ValuationKind::Nu4, ambient)?),
                (Ambient::Spin7, 4) => ids.push(ValuationId::new(ValuationKind::Eta, ambient)?),
                _ => {}
            }
            Ok(ids)
        })
        .collect()
}

const RANK_RTOL: f64 = 1e-9;

/// Numerical rank of a sample matrix and its singular-value gap.
pub fn numerical_rank(m: &DMatrix<f64>) -> (usize, f64) {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return (0, f64::INFINITY);
    }
    let rank = sv.iter().filter(|&&s| s > RANK_RTOL * top).count();
    let floor = sv.get(rank).copied().unwrap_or(0.0).max(f64::EPSILON * top);
    (rank, sv[rank - 1] / floor)
}

pub fn hadwiger_rank_check(ambient: Ambient, samples: usize, seed: u64) -> Result<RankReport> {
    let n = ambient.dim();
    let mut per_degree = Vec::with_capacity(n + 1);
    let mut min_gap = f64::INFINITY;
    for (k, ids) in basis_candidates(ambient)?.into_iter().enumerate() {
        let mut rng = stream_rng(seed, k as u64);
        let rows = samples.max(ids.len());
        let mut m = DMatrix::zeros(rows, ids.len());
        for r in 0..rows {
            let w = if k == 0 {
                Subspace::from_orthonormal(DMatrix::zeros(n, 0))?
            } else {
                random_subspace(n, k, &mut rng)?
            };
            for (c, id) in ids.iter().enumerate() {
                m[(r, c)] = klain_weight(id, &w)?.re;
            }
        }
        let (rank, gap) = numerical_rank(&m);
        min_gap = min_gap.min(gap);
        per_degree.push(rank);
    }
    Ok(RankReport {
        context: ambient.to_string(),
        total: per_degree.iter().sum(),
        per_degree,
        min_gap,
    })
}
