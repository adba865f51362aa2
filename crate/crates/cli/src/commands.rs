//! One adapter per subcommand: load the config, delegate to the library,
//! write the artifacts.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use evequiv::curves::{format_sig12, invert_ecurve, margin_frontier, merge_average, merge_product, ECurve, EquivalenceCurve};
use evequiv::decisions::{evidence_weighted_minimax, loss_spectrum, minimax_decision, SpectrumEntry};
use evequiv::optimal::methods::{margin_surface, symmetric_ecurve};
use evequiv::optimal::stp::{counterexample_kernel, StpVerdict};
use evequiv::optimal::tost::model_null_grid;
use evequiv::optimal::validity::SweepMethod;
use evequiv::optimal::{
    calibrate_log, calibrate_utility, simplex_region, validity_sweep, DiscreteKernel, EValue, SimplexRegion,
    TostE, UniversalInference, UtilitySpec,
};
use evequiv::sequential::campaign::{run_campaign, SimCampaign};
use serde::Serialize;

use crate::config::{
    load, resolve, AnyFamily, DataSpec, CalibrateConfig, Combine, CurveConfig, DecideConfig, EValueSpec, FrontierConfig,
    KernelSpec, MergeConfig, StpConfig, ValidityConfig,
};
use crate::{CliError, Context, Format};

fn create(ctx: &Context, name: &str) -> Result<BufWriter<File>, CliError> {
    let path = ctx.out.join(name);
    let f = File::create(&path).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize + ?Sized>(ctx: &Context, name: &str, value: &T) -> Result<(), CliError> {
    let mut w = create(ctx, name)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(evequiv::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_text(ctx: &Context, name: &str, text: &str) -> Result<(), CliError> {
    let mut w = create(ctx, name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn write_curves(ctx: &Context, stem: &str, curve: &ECurve, eq: &EquivalenceCurve) -> Result<(), CliError> {
    let mut w = create(ctx, &format!("{stem}_ecurve.csv"))?;
    curve.write_csv(&mut w)?;
    w.flush()?;
    let mut w = create(ctx, &format!("{stem}_equivalence.csv"))?;
    eq.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn data_of(statistic: Option<f64>, sample: &Option<Vec<f64>>) -> DataSpec {
    DataSpec {
        statistic,
        sample: sample.clone(),
    }
}

fn read_ecurve(path: &Path) -> Result<ECurve, CliError> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    ECurve::read_csv(f).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_equivalence(path: &Path) -> Result<EquivalenceCurve, CliError> {
    let f = File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    EquivalenceCurve::read_csv(f).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct CurveRecord<'a> {
    method: &'static str,
    ecurve: &'a ECurve,
    equivalence: &'a EquivalenceCurve,
}

pub fn curve(ctx: &Context) -> Result<(), CliError> {
    let cfg: CurveConfig = load(&ctx.config)?;
    let model = cfg.family.model()?;
    let x = data_of(cfg.statistic, &cfg.sample).statistic(&model)?;
    let deltas = cfg.margins.linear()?;
    let levels = cfg.levels.logarithmic()?;
    if cfg.methods.is_empty() {
        return Err(CliError::Config("no methods requested".into()));
    }
    for (i, m) in cfg.methods.iter().enumerate() {
        if cfg.methods[..i].iter().any(|p| p.name() == m.name()) {
            return Err(CliError::Config(format!("method {} listed twice", m.name())));
        }
    }
    let mut out = Vec::new();
    for &method in &cfg.methods {
        let curve = symmetric_ecurve(&model, x, &deltas, &cfg.alternative, method, cfg.ui_grid_points)?;
        let eq = invert_ecurve(&curve, &levels)?;
        out.push((method.name(), curve, eq));
    }
    match ctx.format {
        Format::Csv => {
            for (name, curve, eq) in &out {
                write_curves(ctx, name, curve, eq)?;
            }
        }
        Format::Json => {
            let records: Vec<CurveRecord> = out
                .iter()
                .map(|(method, ecurve, equivalence)| CurveRecord { method, ecurve, equivalence })
                .collect();
            write_json(ctx, "curves.json", &records)?;
        }
    }
    Ok(())
}

pub fn calibrate(ctx: &Context) -> Result<(), CliError> {
    let cfg: CalibrateConfig = load(&ctx.config)?;
    let family = cfg.family.build()?;
    let (_, report) = match cfg.utility {
        UtilitySpec::Log => calibrate_log(&family, cfg.margins, &cfg.alternative)?,
        u => calibrate_utility(&family, cfg.margins, &cfg.alternative, u)?,
    };
    println!("c = {}, lambda = {}", format_sig12(report.c), format_sig12(report.lambda));
    match ctx.format {
        Format::Json => write_json(ctx, "calibration.json", &report),
        Format::Csv => {
            let text = format!(
                "c,lambda,expectation_lower,expectation_upper,c_iterations,lambda_iterations\n{},{},{},{},{},{}\n",
                format_sig12(report.c),
                format_sig12(report.lambda),
                format_sig12(report.expectation_lower),
                format_sig12(report.expectation_upper),
                report.c_iterations,
                report.lambda_iterations
            );
            write_text(ctx, "calibration.csv", &text)
        }
    }
}

fn build_evalue(cfg: &ValidityConfig, family: &AnyFamily) -> Result<Box<dyn EValue>, CliError> {
    let f = family.clone();
    Ok(match &cfg.evalue {
        EValueSpec::LogOptimal => Box::new(calibrate_log(family, cfg.margins, &cfg.alternative)?.0),
        EValueSpec::UtilityOptimal { utility } => Box::new(calibrate_utility(family, cfg.margins, &cfg.alternative, *utility)?.0),
        EValueSpec::TostE => Box::new(TostE::log(f, cfg.margins, &cfg.alternative)?),
        EValueSpec::UniversalInference => {
            let grid = match (&cfg.null_grid, family) {
                (Some(g), _) => g.clone(),
                (None, AnyFamily::Model(m)) => model_null_grid(m, cfg.margins, cfg.ui_grid_points)?,
                (None, AnyFamily::Kernel(_)) => {
                    return Err(CliError::Config("universal inference on a kernel needs an explicit null_grid".into()))
                }
            };
            Box::new(UniversalInference::new(f, &cfg.alternative, grid)?)
        }
    })
}

pub fn validity(ctx: &Context) -> Result<(), CliError> {
    let cfg: ValidityConfig = load(&ctx.config)?;
    let family = cfg.family.build()?;
    let ev = build_evalue(&cfg, &family)?;
    let grid = match (&cfg.null_grid, &family) {
        (Some(g), _) if g.is_empty() => return Err(CliError::Config("null_grid is empty".into())),
        (Some(g), _) => g.clone(),
        (None, AnyFamily::Model(m)) => model_null_grid(m, cfg.margins, cfg.null_grid_points)?,
        (None, AnyFamily::Kernel(_)) => return Err(CliError::Config("a kernel family needs an explicit null_grid".into())),
    };
    let method = match (cfg.method, ctx.seed) {
        (SweepMethod::MonteCarlo { replications, .. }, Some(seed)) => SweepMethod::MonteCarlo { replications, seed },
        (m, _) => m,
    };
    let report = validity_sweep(&ev, &family, &grid, method)?;
    println!(
        "max expectation {} at {}",
        format_sig12(report.max_expectation),
        format_sig12(report.argmax)
    );
    match ctx.format {
        Format::Json => write_json(ctx, "validity.json", &report),
        Format::Csv => {
            let mut text = String::from("param,expectation,error\n");
            for p in &report.points {
                let _ = writeln!(
                    text,
                    "{},{},{}",
                    format_sig12(p.param),
                    format_sig12(p.expectation),
                    format_sig12(p.error)
                );
            }
            write_text(ctx, "validity.csv", &text)
        }
    }
}

pub fn frontier(ctx: &Context) -> Result<(), CliError> {
    let cfg: FrontierConfig = load(&ctx.config)?;
    let model = cfg.family.model()?;
    let x = data_of(cfg.statistic, &cfg.sample).statistic(&model)?;
    let surface = margin_surface(
        &model,
        x,
        cfg.lower.linear()?,
        cfg.upper.linear()?,
        &cfg.alternative,
        cfg.method,
        cfg.ui_grid_points,
    )?;
    let front = margin_frontier(&surface, cfg.alpha)?;
    println!("{} frontier pairs at level {}", front.pairs.len(), format_sig12(cfg.alpha));
    match ctx.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                surface: &'a evequiv::curves::MarginSurface,
                frontier: &'a evequiv::curves::MarginFrontier,
            }
            write_json(ctx, "frontier.json", &Out { surface: &surface, frontier: &front })
        }
        Format::Csv => {
            let mut text = String::from("lower,upper\n");
            for &(l, u) in &front.pairs {
                let _ = writeln!(text, "{},{}", format_sig12(l), format_sig12(u));
            }
            write_text(ctx, "frontier.csv", &text)
        }
    }
}

pub fn merge(ctx: &Context) -> Result<(), CliError> {
    let cfg: MergeConfig = load(&ctx.config)?;
    let a = read_ecurve(&resolve(&ctx.config, &cfg.curves[0]))?;
    let b = read_ecurve(&resolve(&ctx.config, &cfg.curves[1]))?;
    let merged = match cfg.combine {
        Combine::Average { weight } => merge_average(&a, &b, weight)?,
        Combine::Product => merge_product(&a, &b),
    };
    let eq = invert_ecurve(&merged, &cfg.levels.logarithmic()?)?;
    match ctx.format {
        Format::Csv => write_curves(ctx, "merged", &merged, &eq),
        Format::Json => write_json(
            ctx,
            "merged.json",
            &CurveRecord {
                method: "merged",
                ecurve: &merged,
                equivalence: &eq,
            },
        ),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    replications: usize,
    horizon: usize,
    variants: Vec<&'static str>,
    wall_time_seconds: f64,
    campaign: &'a SimCampaign,
}

pub fn campaign(ctx: &Context) -> Result<(), CliError> {
    let mut cfg: SimCampaign = load(&ctx.config)?;
    if let Some(seed) = ctx.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let start = Instant::now();
    let results = run_campaign(&cfg)?;
    let wall = start.elapsed().as_secs_f64();
    match ctx.format {
        Format::Csv => {
            let mut w = create(ctx, "campaign.csv")?;
            results.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(ctx, "campaign.json", &results)?,
    }
    let manifest = Manifest {
        seed: cfg.seed,
        replications: cfg.replications,
        horizon: cfg.horizon,
        variants: cfg.variants.iter().map(|v| v.name()).collect(),
        wall_time_seconds: wall,
        campaign: &cfg,
    };
    write_json(ctx, "manifest.json", &manifest)?;
    println!("{} rows in {:.3} s", results.rows.len(), wall);
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow<'a> {
    #[serde(flatten)]
    entry: SpectrumEntry,
    label: &'a str,
}

#[derive(Serialize)]
struct Choice<'a> {
    decision: usize,
    label: &'a str,
    objective: f64,
}

#[derive(Serialize, Default)]
struct DecideOut<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<Vec<SpectrumRow<'a>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at_margin: Option<Choice<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    evidence_weighted: Option<Choice<'a>>,
}

pub fn decide(ctx: &Context) -> Result<(), CliError> {
    let cfg: DecideConfig = load(&ctx.config)?;
    cfg.loss.validate()?;
    if cfg.equivalence_curve.is_none() && cfg.margin.is_none() && cfg.ecurve.is_none() {
        return Err(CliError::Config("give an equivalence_curve, a margin or an ecurve".into()));
    }
    let labels = &cfg.loss.decisions;
    let mut out = DecideOut::default();
    if let Some(p) = &cfg.equivalence_curve {
        let eq = read_equivalence(&resolve(&ctx.config, p))?;
        let rows = loss_spectrum(&cfg.loss, &eq)?
            .into_iter()
            .map(|entry| SpectrumRow {
                label: &labels[entry.decision],
                entry,
            })
            .collect();
        out.spectrum = Some(rows);
    }
    if let Some(m) = cfg.margin {
        let (d, bound) = minimax_decision(&cfg.loss, m)?;
        println!("margin {}: {} (bound {})", format_sig12(m), labels[d], format_sig12(bound));
        out.at_margin = Some(Choice {
            decision: d,
            label: &labels[d],
            objective: bound,
        });
    }
    if let Some(p) = &cfg.ecurve {
        let curve = read_ecurve(&resolve(&ctx.config, p))?;
        let (d, obj) = evidence_weighted_minimax(&cfg.loss, &curve)?;
        println!("evidence-weighted: {} (objective {})", labels[d], format_sig12(obj));
        out.evidence_weighted = Some(Choice {
            decision: d,
            label: &labels[d],
            objective: obj,
        });
    }
    match ctx.format {
        Format::Json => write_json(ctx, "decision.json", &out),
        Format::Csv => {
            if let Some(rows) = &out.spectrum {
                let mut text = String::from("alpha,margin_hat,decision,bound\n");
                for r in rows {
                    let _ = writeln!(
                        text,
                        "{},{},{},{}",
                        format_sig12(r.entry.alpha),
                        format_sig12(r.entry.margin),
                        r.label,
                        format_sig12(r.entry.bound)
                    );
                }
                write_text(ctx, "spectrum.csv", &text)?;
            }
            let mut text = String::from("rule,decision,objective\n");
            if let Some(c) = &out.at_margin {
                let _ = writeln!(text, "margin,{},{}", c.label, format_sig12(c.objective));
            }
            if let Some(c) = &out.evidence_weighted {
                let _ = writeln!(text, "evidence_weighted,{},{}", c.label, format_sig12(c.objective));
            }
            write_text(ctx, "decision.csv", &text)
        }
    }
}

#[derive(Serialize)]
struct StpOut {
    order: usize,
    #[serde(flatten)]
    verdict: StpVerdict,
}

#[derive(Serialize)]
struct StpReport {
    checks: Vec<StpOut>,
    simplex: Vec<SimplexRegion>,
}

pub fn stp_check(ctx: &Context) -> Result<(), CliError> {
    let cfg: StpConfig = load(&ctx.config)?;
    let kernel = match cfg.kernel {
        KernelSpec::Counterexample => counterexample_kernel(),
        KernelSpec::Matrix { params, points, rows } => DiscreteKernel::new(params, points, rows)?,
    };
    if cfg.orders.is_empty() {
        return Err(CliError::Config("no orders requested".into()));
    }
    let mut checks = Vec::new();
    for &order in &cfg.orders {
        let verdict = evequiv::optimal::stp_check(&kernel, order)?;
        match &verdict {
            StpVerdict::StrictPass => println!("order {order}: strict pass"),
            StpVerdict::Fail(w) => println!(
                "order {order}: fail, rows {:?} cols {:?} minor {}",
                w.rows,
                w.cols,
                format_sig12(w.minor)
            ),
        }
        checks.push(StpOut { order, verdict });
    }
    let simplex = cfg
        .simplex
        .iter()
        .map(|s| simplex_region(s.p, s.p1, s.p2))
        .collect::<evequiv::Result<Vec<_>>>()?;
    let report = StpReport { checks, simplex };
    match ctx.format {
        Format::Json => write_json(ctx, "stp.json", &report),
        Format::Csv => {
            let mut text = String::from("order,verdict,rows,cols,minor\n");
            for c in &report.checks {
                match &c.verdict {
                    StpVerdict::StrictPass => {
                        let _ = writeln!(text, "{},strict_pass,,,", c.order);
                    }
                    StpVerdict::Fail(w) => {
                        let join = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
                        let _ = writeln!(
                            text,
                            "{},fail,{},{},{}",
                            c.order,
                            join(&w.rows),
                            join(&w.cols),
                            format_sig12(w.minor)
                        );
                    }
                }
            }
            write_text(ctx, "stp.csv", &text)?;
            if !report.simplex.is_empty() {
                write_json(ctx, "simplex.json", &report.simplex)?;
            }
            Ok(())
        }
    }
}
