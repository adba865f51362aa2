//! Seeded Monte Carlo comparison of e-process variants on i.i.d. Gaussian
//! streams.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    default_symmetric_mixture, likelihood_ratio_ui, numeraire_process, one_sided_lr_process, sequential_tost,
    symmetric_t_process, symmetric_t_tost_process, symmetric_z_process, EProcess,
};
use crate::curves::format_sig12;
use crate::error::{Error, Result};
use crate::models::{MarginPair, MixtureAlternative, ParametricModel};
use crate::optimal::boundary::{calibrate_log, BoundaryMixtureEValue};
use crate::optimal::tost::default_null_grid;

/// Replications processed per parallel batch before the ordered reduction.
const BATCH: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Likelihood-ratio product against the upper margin.
    OneSidedLr,
    /// Minimum of the likelihood-ratio products against both margins.
    Tost,
    ProductOfNumeraires,
    UniversalInference,
    /// `x̄²` statistic ratio; margins must be symmetric.
    SymmetricZ,
    /// `n x̄²/s²` statistic ratio on the effect-size scale.
    SymmetricT,
    /// One-sided t statistic ratios on the effect-size scale, combined by
    /// their minimum.
    SymmetricTTost,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::OneSidedLr => "one_sided_lr",
            Variant::Tost => "tost",
            Variant::ProductOfNumeraires => "product_of_numeraires",
            Variant::UniversalInference => "universal_inference",
            Variant::SymmetricZ => "symmetric_z",
            Variant::SymmetricT => "symmetric_t",
            Variant::SymmetricTTost => "symmetric_t_tost",
        }
    }

    fn is_symmetric(&self) -> bool {
        matches!(self, Variant::SymmetricZ | Variant::SymmetricT | Variant::SymmetricTTost)
    }
}

fn default_sigma() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.05
}

fn default_ui_points() -> usize {
    50
}

/// A simulation campaign: `replications` streams of `horizon` observations
/// `N(mu_true, sigma²)`, each turned into every requested process.
///
/// The symmetric t variants read `margins.upper` as an effect-size margin
/// and use `symmetric_mixture` (over the squared effect size, default 16
/// equally weighted points on `[0, Δ_S²)`); the other variants use
/// `alternative` on the mean scale with the single-observation z model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimCampaign {
    pub margins: MarginPair,
    pub alternative: MixtureAlternative,
    #[serde(default)]
    pub symmetric_mixture: Option<MixtureAlternative>,
    pub mu_true: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub variants: Vec<Variant>,
    #[serde(default = "default_ui_points")]
    pub ui_grid_points: usize,
}

impl SimCampaign {
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        self.margins.validate()?;
        if self.replications < 1 {
            return cfg("replications must be at least 1".into());
        }
        if self.horizon < 2 {
            return cfg("horizon must be at least 2".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return cfg(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return cfg(format!("sigma {} must be positive", self.sigma));
        }
        if !self.mu_true.is_finite() {
            return cfg("mu_true must be finite".into());
        }
        if self.variants.is_empty() {
            return cfg("no process variants requested".into());
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].contains(v) {
                return cfg(format!("variant {} listed twice", v.name()));
            }
            if v.is_symmetric() && self.margins.lower != -self.margins.upper {
                return cfg(format!("variant {} needs symmetric margins", v.name()));
            }
            if matches!(v, Variant::Tost | Variant::ProductOfNumeraires | Variant::UniversalInference)
                && self.margins.is_one_sided()
            {
                return cfg(format!("variant {} needs two-sided margins", v.name()));
            }
        }
        if self.variants.iter().any(|v| !v.is_symmetric()) {
            self.alternative.check_inside(&self.margins)?;
        }
        if self.ui_grid_points < 2 {
            return cfg("ui_grid_points must be at least 2".into());
        }
        Ok(())
    }
}

/// Per-variant, per-time summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub variant: Variant,
    pub n: usize,
    #[serde(with = "crate::curves::serde_f64")]
    pub mean_e: f64,
    #[serde(with = "crate::curves::serde_f64")]
    pub se_e: f64,
    pub reject_prob: f64,
    pub se_reject: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResults {
    pub rows: Vec<CampaignRow>,
}

impl CampaignResults {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["variant", "n", "mean_e", "se_e", "reject_prob", "se_reject"])?;
        for r in &self.rows {
            w.write_record([
                r.variant.name().to_string(),
                r.n.to_string(),
                format_sig12(r.mean_e),
                format_sig12(r.se_e),
                format_sig12(r.reject_prob),
                format_sig12(r.se_reject),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Rows of one variant, ordered by `n`.
    pub fn variant(&self, v: Variant) -> Vec<&CampaignRow> {
        self.rows.iter().filter(|r| r.variant == v).collect()
    }
}

/// Fixed per-campaign state shared by all replications.
struct Prepared {
    single: ParametricModel,
    numeraire: Option<BoundaryMixtureEValue<ParametricModel>>,
    ui_grid: Vec<f64>,
    symmetric: MixtureAlternative,
}

fn prepare(c: &SimCampaign) -> Result<Prepared> {
    let single = ParametricModel::z_test(c.sigma, 1)?;
    let numeraire = if c.variants.contains(&Variant::ProductOfNumeraires) {
        Some(calibrate_log(&single, c.margins, &c.alternative)?.0)
    } else {
        None
    };
    let ui_grid = if c.variants.contains(&Variant::UniversalInference) {
        default_null_grid(c.margins, c.sigma, c.ui_grid_points)?
    } else {
        Vec::new()
    };
    let symmetric = c
        .symmetric_mixture
        .clone()
        .unwrap_or_else(|| default_symmetric_mixture(c.margins.upper));
    Ok(Prepared {
        single,
        numeraire,
        ui_grid,
        symmetric,
    })
}

fn process(c: &SimCampaign, p: &Prepared, v: Variant, obs: &[f64]) -> Result<EProcess> {
    match v {
        Variant::OneSidedLr => one_sided_lr_process(&p.single, c.margins.upper, &c.alternative, obs),
        Variant::Tost => {
            let l = one_sided_lr_process(&p.single, c.margins.lower, &c.alternative, obs)?;
            let r = one_sided_lr_process(&p.single, c.margins.upper, &c.alternative, obs)?;
            sequential_tost(&l, &r)
        }
        Variant::ProductOfNumeraires => Ok(numeraire_process(p.numeraire.as_ref().expect("calibrated"), obs)),
        Variant::UniversalInference => likelihood_ratio_ui(&p.single, &c.alternative, &p.ui_grid, obs),
        Variant::SymmetricZ => {
            let scaled: Vec<f64> = obs.iter().map(|x| x / c.sigma).collect();
            let ds = c.margins.upper / c.sigma;
            let mix = match &c.symmetric_mixture {
                Some(m) => m.clone(),
                None => default_symmetric_mixture(ds),
            };
            symmetric_z_process(&scaled, ds, &mix)
        }
        Variant::SymmetricT => symmetric_t_process(obs, c.margins.upper, &p.symmetric),
        Variant::SymmetricTTost => symmetric_t_tost_process(obs, c.margins.upper, &p.symmetric),
    }
}

/// The observation stream of replication `rep`.
pub fn replication_stream(c: &SimCampaign, rep: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    rng.set_stream(rep as u64);
    (0..c.horizon)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            c.mu_true + c.sigma * z
        })
        .collect()
}

/// All requested processes for replication `rep`, in variant order.
pub fn replication_processes(c: &SimCampaign, rep: usize) -> Result<Vec<EProcess>> {
    let p = prepare(c)?;
    let obs = replication_stream(c, rep);
    c.variants.iter().map(|&v| process(c, &p, v, &obs)).collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    count: usize,
    mean: f64,
    m2: f64,
    hits: usize,
}

/// Run the campaign. Replications run in parallel; the reduction is in
/// replication order, so results are bitwise reproducible for a fixed seed.
pub fn run_campaign(c: &SimCampaign) -> Result<CampaignResults> {
    c.validate()?;
    let prepared = prepare(c)?;
    let threshold = 1.0 / c.alpha;
    let nv = c.variants.len();
    let t = c.horizon;
    let mut acc = vec![Acc::default(); nv * t];
    let mut start = 0;
    while start < c.replications {
        let end = (start + BATCH).min(c.replications);
        let batch: Vec<Vec<EProcess>> = (start..end)
            .into_par_iter()
            .map(|rep| {
                let obs = replication_stream(c, rep);
                c.variants.iter().map(|&v| process(c, &prepared, v, &obs)).collect()
            })
            .collect::<Result<_>>()?;
        for procs in &batch {
            for (vi, proc_) in procs.iter().enumerate() {
                let mut crossed = false;
                for (ti, &e) in proc_.values.iter().enumerate() {
                    crossed |= e >= threshold;
                    let a = &mut acc[vi * t + ti];
                    a.count += 1;
                    let d = e - a.mean;
                    a.mean += d / a.count as f64;
                    a.m2 += d * (e - a.mean);
                    a.hits += crossed as usize;
                }
            }
        }
        start = end;
    }
    let m = c.replications as f64;
    let mut rows = Vec::with_capacity(nv * t);
    for (vi, &variant) in c.variants.iter().enumerate() {
        for ti in 0..t {
            let a = acc[vi * t + ti];
            let se_e = if c.replications > 1 {
                (a.m2 / (m - 1.0) / m).sqrt()
            } else {
                f64::NAN
            };
            let p = a.hits as f64 / m;
            rows.push(CampaignRow {
                variant,
                n: ti + 1,
                mean_e: a.mean,
                se_e,
                reject_prob: p,
                se_reject: (p * (1.0 - p) / m).sqrt(),
            });
        }
    }
    Ok(CampaignResults { rows })
}
