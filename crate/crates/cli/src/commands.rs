use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context as _, Result};
use xfmr_aging::anfis::{self, AnfisConfig};
use xfmr_aging::baselines;
use xfmr_aging::dataset::{
    self, HourlySeries, IngestOptions, LabeledDataset, PreprocessReport, SplitSpec, TIMESTAMP_FORMAT,
};
use xfmr_aging::fcm;
use xfmr_aging::metrics::{self, EvalReport};
use xfmr_aging::thermal::{self, LolRecord};
use xfmr_aging::{format_float as num, model_io, Regressor};

use crate::config::{load_params, parse_synthetic, RbfConfig, RunConfig};
use crate::{GlobalArgs, Method, TrainArgs, UsageError};

/// RBF growth target in `compare`, as a multiple of the ANFIS test MSE.
pub const RBF_GOAL_FACTOR: f64 = 1.4;

pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub timing: bool,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self> {
        let mut config = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &global.params {
            config.transformer = load_params(path)?;
        }
        if let Some(path) = &global.input {
            config.dataset.csv = Some(path.clone());
            config.dataset.synthetic = None;
        }
        if let Some(arg) = &global.synthetic {
            config.dataset.synthetic = Some(parse_synthetic(arg)?);
            config.dataset.csv = None;
        }
        if let Some(hours) = global.hours {
            config.dataset.hours = hours;
        }
        if global.no_preprocess {
            config.preprocess.enabled = false;
        }
        if config.dataset.csv.is_some() && config.dataset.synthetic.is_some() {
            return Err(UsageError("dataset must name either a csv file or a synthetic profile, not both".into()).into());
        }
        config.transformer.validate()?;

        let seed = global.seed.or(config.seed).unwrap_or(0);
        let out_dir = global
            .out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        fs::create_dir_all(&out_dir)
            .map_err(|e| UsageError(format!("cannot create output directory {}: {e}", out_dir.display())))?;
        Ok(Self {
            config,
            seed,
            out_dir,
            timing: global.timing,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn series(&self) -> Result<(HourlySeries, Option<PreprocessReport>)> {
        let dataset = &self.config.dataset;
        let raw = match &dataset.csv {
            Some(path) => dataset::ingest_csv(path, &IngestOptions::default())?,
            None => {
                let spec = dataset.synthetic.clone().unwrap_or_default();
                dataset::synthesize(&spec, dataset.hours, self.seed)?
            }
        };
        if !self.config.preprocess.enabled {
            return Ok((raw, None));
        }
        let (clean, report) = dataset::preprocess(&raw, &self.config.preprocess.policy())?;
        Ok((clean, Some(report)))
    }

    fn labeled(&self) -> Result<(LabeledDataset, Vec<LolRecord>, Option<PreprocessReport>)> {
        let (series, report) = self.series()?;
        let (data, records) = dataset::label(&series, &self.config.transformer, &self.config.thermal)?;
        Ok((data, records, report))
    }

    fn split(&self, data: &LabeledDataset, test_fraction: Option<f64>) -> Result<(LabeledDataset, LabeledDataset)> {
        let spec = SplitSpec {
            test_fraction: test_fraction.unwrap_or(self.config.split.test_fraction),
            seed: self.seed,
            ..self.config.split
        };
        Ok(dataset::split(data, &spec)?)
    }

    fn anfis_config(&self, args: &TrainArgs) -> AnfisConfig {
        let base = &self.config.anfis;
        AnfisConfig {
            clusters: args.clusters.unwrap_or(base.clusters),
            epochs: args.epochs.unwrap_or(base.epochs),
            learning_rate: args.learning_rate.unwrap_or(base.learning_rate),
            seed: self.seed,
            ..base.clone()
        }
    }
}

fn report_line(ctx: &Context, name: &str) {
    println!("wrote {}", ctx.path(name).display());
}

pub fn compute_lol(ctx: &Context) -> Result<()> {
    let (data, records, repairs) = ctx.labeled()?;
    let dt = 1.0;
    let summary = thermal::summarize(&records, dt, &ctx.config.transformer)?;

    let mut rows = String::from(
        "timestamp,ambient_temp_c,load_ratio,topoil_rise_c,hotspot_rise_c,hotspot_temp_c,aging_factor,lol_percent\n",
    );
    for (t, r) in data.timestamps.iter().zip(&records) {
        let _ = writeln!(
            rows,
            "{},{},{},{},{},{},{},{}",
            t.format(TIMESTAMP_FORMAT),
            num(r.ambient_temp),
            num(r.load_ratio),
            num(r.topoil_rise),
            num(r.hotspot_rise),
            num(r.hotspot_temp),
            num(r.aging_factor),
            num(r.lol_percent)
        );
    }
    ctx.write("lol_records.csv", &rows)?;

    let summary_csv = format!(
        "metric,value\nintervals,{}\ntotal_hours,{}\nequivalent_aging,{}\ntotal_lol_percent,{}\npeak_hotspot_temp_c,{}\n",
        summary.intervals,
        num(summary.total_hours),
        num(summary.equivalent_aging),
        num(summary.total_lol_percent),
        num(summary.peak_hotspot_temp)
    );
    ctx.write("lol_summary.csv", &summary_csv)?;

    let mut repair_csv = String::from("row,column,original,replacement\n");
    for r in repairs.iter().flat_map(|r| &r.repairs) {
        let column = match r.column {
            dataset::Column::AmbientTemp => "ambient_temp_c",
            dataset::Column::LoadRatio => "load_ratio",
        };
        let _ = writeln!(repair_csv, "{},{column},{},{}", r.index + 1, num(r.original), num(r.replacement));
    }
    ctx.write("repairs.csv", &repair_csv)?;

    println!(
        "{} hours, equivalent aging {:.6}, loss of life {:.6e} %, peak hot spot {:.2} °C",
        summary.intervals, summary.equivalent_aging, summary.total_lol_percent, summary.peak_hotspot_temp
    );
    if let Some(report) = repairs {
        println!("{} value(s) repaired in {} row(s)", report.repairs.len(), report.flagged_rows);
    }
    for name in ["lol_records.csv", "lol_summary.csv", "repairs.csv"] {
        report_line(ctx, name);
    }
    Ok(())
}

pub fn cluster_sweep(ctx: &Context, c_min: Option<usize>, c_max: Option<usize>, threshold: Option<f64>) -> Result<()> {
    let sweep = &ctx.config.sweep;
    let (c_min, c_max) = (c_min.unwrap_or(sweep.c_min), c_max.unwrap_or(sweep.c_max));
    let threshold = threshold.unwrap_or(sweep.threshold);
    if c_min > c_max {
        return Err(UsageError(format!("--c-min {c_min} exceeds --c-max {c_max}")).into());
    }
    let (data, _, _) = ctx.labeled()?;
    let (train, test) = ctx.split(&data, None)?;
    let base = AnfisConfig {
        seed: ctx.seed,
        ..ctx.config.anfis.clone()
    };
    let table = fcm::cluster_sweep(&train, &test, c_min..=c_max, &base, threshold)?;
    ctx.write("cluster_sweep.csv", &table.to_csv())?;
    ctx.write("cluster_sweep_summary.csv", &format!("recommended_clusters\n{}\n", table.recommended))?;

    println!("{:>4} {:>14} {:>14}", "c", "train MSE", "test MSE");
    for row in &table.rows {
        println!("{:>4} {:>14.4e} {:>14.4e}", row.clusters, row.train_mse, row.test_mse);
    }
    println!("recommended clusters: {}", table.recommended);
    report_line(ctx, "cluster_sweep.csv");
    Ok(())
}

/// A trained estimator plus everything written about it.
struct Trained {
    model: Box<dyn Regressor + Send>,
    model_json: String,
    trace_csv: String,
    config: String,
    seconds: f64,
}

fn fit(ctx: &Context, method: Method, args: &TrainArgs, train: &LabeledDataset, test: Option<&LabeledDataset>, rbf_goal: f64) -> Result<Trained> {
    let start = Instant::now();
    let trained = match method {
        Method::Anfis => {
            let config = ctx.anfis_config(args);
            let fitted = anfis::fit(train, test, &config)?;
            let mut trace = String::from("epoch,train_mse,train_mse_after_premise,test_mse\n");
            for e in &fitted.outcome.trace {
                let test_mse = e.validation_mse.map(num).unwrap_or_default();
                let _ = writeln!(trace, "{},{},{},{test_mse}", e.epoch, num(e.train_mse), num(e.train_mse_after_premise));
            }
            let model = fitted.outcome.model;
            Trained {
                model_json: model_io::to_string(&model)?,
                model: Box::new(model),
                trace_csv: trace,
                config: format!("clusters={};epochs={};lr={}", config.clusters, config.epochs, config.learning_rate),
                seconds: 0.0,
            }
        }
        Method::Mlp => {
            let epochs = args.epochs.unwrap_or(ctx.config.mlp.epochs);
            let lr = args.learning_rate.unwrap_or(ctx.config.mlp.learning_rate);
            let out = baselines::train_mlp(train, epochs, lr, ctx.seed)?;
            let mut trace = String::from("epoch,train_mse\n");
            for (i, mse) in out.trace.iter().enumerate() {
                let _ = writeln!(trace, "{},{}", i + 1, num(*mse));
            }
            Trained {
                model_json: model_io::to_string(&out.model)?,
                model: Box::new(out.model),
                trace_csv: trace,
                config: format!("hidden=2;epochs={epochs};lr={lr}"),
                seconds: 0.0,
            }
        }
        Method::Rbf => {
            let max_neurons = args.max_neurons.unwrap_or(ctx.config.rbf.max_neurons);
            let out = baselines::train_rbf(train, rbf_goal, max_neurons, ctx.seed)?;
            let mut trace = String::from("neurons,width,train_mse,kept_previous_width\n");
            for s in &out.trace {
                let _ = writeln!(trace, "{},{},{},{}", s.neurons, num(s.width), num(s.train_mse), s.kept_previous_width);
            }
            if !out.goal_met {
                eprintln!("warning: RBF stopped at {max_neurons} neurons without reaching MSE goal {rbf_goal:e}");
            }
            Trained {
                config: format!("neurons={};goal={rbf_goal:e};goal_met={}", out.model.neurons(), out.goal_met),
                model_json: model_io::to_string(&out.model)?,
                model: Box::new(out.model),
                trace_csv: trace,
                seconds: 0.0,
            }
        }
    };
    Ok(Trained {
        seconds: start.elapsed().as_secs_f64(),
        ..trained
    })
}

fn rbf_goal(ctx: &Context, args: &TrainArgs, train: &LabeledDataset) -> f64 {
    args.mse_goal
        .or(ctx.config.rbf.mse_goal)
        .unwrap_or_else(|| RbfConfig::DEFAULT_GOAL_FRACTION * train.target_variance())
}

fn evaluate(method: Method, trained: &Trained, test: &LabeledDataset) -> Result<EvalReport> {
    let predicted = trained.model.predict_all(&test.inputs);
    Ok(EvalReport::new(
        method.label(),
        &test.targets,
        &predicted,
        trained.seconds,
        trained.config.clone(),
        test.rows_fingerprint(),
    )?)
}

fn report_csv(reports: &[EvalReport], timing: bool) -> String {
    let mut out = String::from(if timing {
        "method,mse,r_squared,train_time_s,test_fingerprint,config\n"
    } else {
        "method,mse,r_squared,test_fingerprint,config\n"
    });
    for r in reports {
        let time = if timing { format!("{:.3},", r.train_time_s) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{time}{:016x},{}",
            r.method,
            num(r.mse),
            num(r.r_squared),
            r.test_fingerprint,
            r.config
        );
    }
    out
}

fn check_positive(name: &str, value: Option<f64>) -> Result<()> {
    match value {
        Some(v) if !(v.is_finite() && v > 0.0) => Err(UsageError(format!("--{name} must be positive, got {v}")).into()),
        _ => Ok(()),
    }
}

fn cross_validate(ctx: &Context, method: Method, args: &TrainArgs, train: &LabeledDataset, k: usize, goal: f64) -> Result<String> {
    let folds = dataset::kfold(train, k, ctx.seed)?;
    let mut csv = String::from("fold,train_rows,validation_rows,validation_mse,validation_r_squared\n");
    let mut total = 0.0;
    for (i, fold) in folds.iter().enumerate() {
        let trained = fit(ctx, method, args, &fold.train, None, goal)?;
        let predicted = trained.model.predict_all(&fold.validation.inputs);
        let mse = metrics::mse(&fold.validation.targets, &predicted)?;
        let r2 = metrics::r_squared(&fold.validation.targets, &predicted)?;
        total += mse;
        let _ = writeln!(csv, "{},{},{},{},{}", i + 1, fold.train.len(), fold.validation.len(), num(mse), num(r2));
        println!("fold {}/{k}: validation MSE {mse:.4e}, R² {r2:.4}", i + 1);
    }
    let _ = writeln!(csv, "mean,,,{},", num(total / k as f64));
    Ok(csv)
}

pub fn train(ctx: &Context, method: Method, args: &TrainArgs) -> Result<()> {
    check_positive("mse-goal", args.mse_goal)?;
    check_positive("learning-rate", args.learning_rate)?;
    let (data, _, _) = ctx.labeled()?;
    let (train, test) = ctx.split(&data, args.test_fraction)?;
    let goal = rbf_goal(ctx, args, &train);
    let trained = fit(ctx, method, args, &train, Some(&test), goal)?;
    let report = evaluate(method, &trained, &test)?;

    let name = method.name();
    let files = [
        (format!("{name}_model.json"), trained.model_json.clone()),
        (format!("{name}_trace.csv"), trained.trace_csv.clone()),
        (format!("{name}_report.csv"), report_csv(std::slice::from_ref(&report), ctx.timing)),
    ];
    for (file, contents) in &files {
        ctx.write(file, contents)?;
    }
    println!(
        "{name}: test MSE {:.4e}, R² {:.4}, trained in {:.2} s ({})",
        report.mse, report.r_squared, report.train_time_s, report.config
    );
    for (file, _) in &files {
        report_line(ctx, file);
    }

    if let Some(k) = args.cv_folds {
        let csv = cross_validate(ctx, method, args, &train, k, goal)?;
        let file = format!("{name}_cv.csv");
        ctx.write(&file, &csv)?;
        report_line(ctx, &file);
    }
    Ok(())
}

pub fn compare(ctx: &Context, args: &TrainArgs) -> Result<()> {
    check_positive("learning-rate", args.learning_rate)?;
    if args.mse_goal.is_some() {
        return Err(UsageError("compare derives the RBF goal from the ANFIS test MSE; drop --mse-goal".into()).into());
    }
    let (data, _, _) = ctx.labeled()?;
    let (train, test) = ctx.split(&data, args.test_fraction)?;

    // the MLP shares nothing with ANFIS, so it trains alongside it
    let (anfis, mlp) = std::thread::scope(|s| {
        let mlp = s.spawn(|| fit(ctx, Method::Mlp, args, &train, None, 0.0));
        let anfis = fit(ctx, Method::Anfis, args, &train, None, 0.0);
        (anfis, mlp.join().expect("MLP training thread panicked"))
    });
    let (anfis, mlp) = (anfis?, mlp?);
    let anfis_report = evaluate(Method::Anfis, &anfis, &test)?;
    let goal = RBF_GOAL_FACTOR * anfis_report.mse;
    let rbf = fit(ctx, Method::Rbf, args, &train, None, goal)?;

    let reports = [anfis_report, evaluate(Method::Mlp, &mlp, &test)?, evaluate(Method::Rbf, &rbf, &test)?];
    let comparison = metrics::compare(&reports)?;
    ctx.write("comparison.csv", &comparison.to_csv(ctx.timing))?;
    ctx.write("comparison.txt", &comparison.to_text(ctx.timing))?;
    ctx.write("comparison_details.csv", &report_csv(&comparison.reports, ctx.timing))?;
    for (method, trained) in [(Method::Anfis, &anfis), (Method::Mlp, &mlp), (Method::Rbf, &rbf)] {
        ctx.write(&format!("{}_model.json", method.name()), &trained.model_json)?;
    }

    print!("{}", comparison.to_text(true));
    println!("RBF goal {goal:.4e} ({RBF_GOAL_FACTOR} x ANFIS test MSE): {}", rbf.config);
    report_line(ctx, "comparison.csv");
    Ok(())
}
