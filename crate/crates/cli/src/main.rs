mod args;
mod config;
mod error;

use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::Path;
use std::time::{Duration, Instant};

use clap::Parser;
use serde_json::json;
use soc_core::corpus::{
    filter_top_k_labels, generate_synthetic, load_dataset, write_dataset, DataFormat, Dataset,
    SynthConfig,
};
use soc_core::eval::{benchmark_all, emit_report, BenchmarkReport, EvalConfig, ReportFormat};
use soc_core::pipeline::{Pipeline, PipelineConfig, Representation};

use args::{
    BenchmarkArgs, Cli, Command, DataCommand, DataInput, FormatArg, InspectArgs, PredictArgs,
    ReportFormatArg, ServeArgs, SynthArgs, TrainArgs,
};
use config::{cv_config, parse_only, resolve, FileConfig};
use error::{CliError, CliResult};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Data(DataCommand::Synth(a)) => cmd_synth(a),
        Command::Data(DataCommand::Inspect(a)) => cmd_inspect(a),
        Command::Train(a) => cmd_train(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Serve(a) => cmd_serve(a),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.code);
    }
}

fn format_for(path: &Path, flag: Option<FormatArg>) -> DataFormat {
    flag.map(DataFormat::from)
        .unwrap_or_else(|| DataFormat::from_path(path))
}

fn load(input: &DataInput, top_k: Option<usize>) -> CliResult<Dataset> {
    let outcome = load_dataset(&input.data, format_for(&input.data, input.format))?;
    if outcome.dropped > 0 {
        log::warn!(
            "dropped {} rows with an empty description or SOC code",
            outcome.dropped
        );
    }
    let dataset = match input.top_k.or(top_k) {
        Some(0) => return Err(CliError::usage("--top-k must be at least 1")),
        Some(k) => filter_top_k_labels(&outcome.dataset, k),
        None => outcome.dataset,
    };
    if dataset.is_empty() {
        return Err(CliError::data(format!(
            "{} contains no usable rows",
            input.data.display()
        )));
    }
    Ok(dataset)
}

fn print_json(value: &serde_json::Value) -> CliResult<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> CliResult<()> {
    let config = SynthConfig {
        class_count: a.classes,
        docs_per_class: a.docs_per_class,
        vocab_per_class: a.vocab_per_class,
        noise_rate: a.noise,
        seed: a.seed,
    };
    if config.class_count == 0 || config.docs_per_class == 0 || config.vocab_per_class == 0 {
        return Err(CliError::usage(
            "--classes, --docs-per-class and --vocab-per-class must be positive",
        ));
    }
    if !(0.0..=1.0).contains(&config.noise_rate) {
        return Err(CliError::usage("--noise must lie in [0, 1]"));
    }
    let dataset = generate_synthetic(&config);
    write_dataset(&dataset, &a.out, format_for(&a.out, a.format))?;
    println!(
        "wrote {} documents in {} classes to {}",
        dataset.len(),
        dataset.labels().len(),
        a.out.display()
    );
    Ok(())
}

fn cmd_inspect(a: InspectArgs) -> CliResult<()> {
    let dataset = load(&a.input, None)?;
    let fp = dataset.fingerprint();
    if a.json {
        return print_json(&json!({
            "path": a.input.data,
            "size": fp.size,
            "classes": fp.class_counts.len(),
            "class_counts": fp.class_counts,
            "content_hash": fp.content_hash,
        }));
    }
    println!("path:       {}", a.input.data.display());
    println!("documents:  {}", fp.size);
    println!("classes:    {}", fp.class_counts.len());
    println!("sha256:     {}", fp.content_hash);
    let mut counts: Vec<_> = fp.class_counts.iter().collect();
    counts.sort_by(|x, y| y.1.cmp(x.1).then(x.0.cmp(y.0)));
    for (label, n) in counts.iter().take(20) {
        println!("  {label:<12} {n}");
    }
    if counts.len() > 20 {
        println!("  ... {} more", counts.len() - 20);
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> CliResult<()> {
    let file = FileConfig::load(a.model.config.as_deref())?;
    let resolved = resolve(&file, &a.model)?;
    let dataset = load(&a.input, file.top_k)?;
    if dataset.labels().len() < 2 {
        log::warn!("only one class present; the model will always predict it");
    }
    let representation = a
        .representation
        .or(file.representation)
        .unwrap_or(Representation::Tfidf);
    let algorithm = a
        .algorithm
        .or(file.algorithm)
        .unwrap_or(soc_core::classify::Algorithm::SvcRbf);
    let config = PipelineConfig {
        representation,
        vectorizer: resolved.vectorizer,
        embedding: resolved.embedding,
        classifier: resolved.classifier(algorithm)?,
    };
    let started = Instant::now();
    let pipeline = Pipeline::train(&dataset, config)?;
    let elapsed = started.elapsed().as_secs_f64();
    pipeline.save(&a.out)?;
    let summary = json!({
        "model": a.out,
        "model_version": pipeline.model_version(),
        "representation": representation,
        "algorithm": algorithm,
        "documents": dataset.len(),
        "classes": pipeline.labels().len(),
        "feature_dim": pipeline.classifier().dim,
        "train_time_s": elapsed,
    });
    if a.json {
        return print_json(&summary);
    }
    println!(
        "trained {representation}:{algorithm} on {} documents, {} classes, {} features in {elapsed:.2}s",
        dataset.len(),
        pipeline.labels().len(),
        pipeline.classifier().dim
    );
    println!(
        "model_version {} written to {}",
        pipeline.model_version(),
        a.out.display()
    );
    Ok(())
}

fn print_table(report: &BenchmarkReport) {
    println!(
        "{:<8} {:<11} {:>9} {:>9} {:>9} {:>9} {:>10}",
        "rep", "algorithm", "accuracy", "precision", "recall", "f1", "train_s"
    );
    for row in &report.rows {
        match (&row.mean, &row.error) {
            (Some(m), _) => println!(
                "{:<8} {:<11} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>10.4}",
                row.representation.as_str(),
                row.algorithm.as_str(),
                m.accuracy,
                m.precision_macro,
                m.recall_macro,
                m.f1_macro,
                m.train_time_s
            ),
            (None, e) => println!(
                "{:<8} {:<11} failed: {}",
                row.representation.as_str(),
                row.algorithm.as_str(),
                e.as_deref().unwrap_or("unknown error")
            ),
        }
    }
}

fn cmd_benchmark(a: BenchmarkArgs) -> CliResult<()> {
    let file = FileConfig::load(a.model.config.as_deref())?;
    let resolved = resolve(&file, &a.model)?;
    let dataset = load(&a.input, file.top_k)?;
    let config = EvalConfig {
        cv: cv_config(&file, a.folds, a.cv_seed),
        vectorizer: resolved.vectorizer,
        embedding: resolved.embedding,
    };
    config.cv.validate(dataset.len())?;

    let specs = if a.only.is_empty() {
        Representation::ALL
            .iter()
            .flat_map(|&r| {
                soc_core::classify::Algorithm::ALL
                    .iter()
                    .map(move |&alg| (r, alg))
            })
            .map(|(r, alg)| Ok((r, resolved.classifier(alg)?)))
            .collect::<CliResult<Vec<_>>>()?
    } else {
        a.only
            .iter()
            .map(|item| {
                let (r, alg) = parse_only(item)?;
                Ok((r, resolved.classifier(alg)?))
            })
            .collect::<CliResult<Vec<_>>>()?
    };
    let formats: Vec<ReportFormat> = if a.formats.is_empty() {
        ReportFormat::ALL.to_vec()
    } else {
        a.formats
            .iter()
            .map(|f| match f {
                ReportFormatArg::Csv => ReportFormat::Csv,
                ReportFormatArg::Json => ReportFormat::Json,
                ReportFormatArg::Svg => ReportFormat::Svg,
            })
            .collect()
    };

    let report = benchmark_all(&dataset, &config, Some(&specs))?;
    let mut written = emit_report(&report, &a.out_dir, &formats)?;
    let run_config = a.out_dir.join("run_config.json");
    let snapshot = json!({
        "data": a.input.data,
        "top_k": a.input.top_k.or(file.top_k),
        "config_file": a.model.config,
        "eval": config,
        "rows": specs.iter().map(|(r, spec)| json!({ "representation": r, "spec": spec })).collect::<Vec<_>>(),
        "formats": formats,
    });
    let text =
        serde_json::to_vec_pretty(&snapshot).map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(&run_config, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", run_config.display())))?;
    written.push(run_config);
    if a.json {
        let rows: Vec<_> = report
            .rows
            .iter()
            .map(|r| {
                json!({
                    "representation": r.representation,
                    "algorithm": r.algorithm,
                    "folds": r.folds.len(),
                    "mean": r.mean,
                    "error": r.error,
                })
            })
            .collect();
        print_json(&json!({ "rows": rows, "files": written }))?;
    } else {
        print_table(&report);
        println!("wrote {} files to {}", written.len(), a.out_dir.display());
    }
    if report.rows.iter().all(|r| r.error.is_some()) {
        return Err(CliError::data("every benchmark row failed"));
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CliResult<()> {
    let descriptions: Vec<String> = match (&a.description, &a.input) {
        (Some(d), _) => {
            if d.trim().is_empty() {
                return Err(CliError::usage("description must not be empty"));
            }
            vec![d.clone()]
        }
        (None, Some(path)) => std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(str::to_string)
            .collect(),
        (None, None) => return Err(CliError::usage("give a description or --input")),
    };
    let pipeline = Pipeline::load(&a.model)?;
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for d in &descriptions {
        let code = pipeline.predict_one(d)?;
        let line = if a.json {
            json!({ "soc_code": code, "model_version": pipeline.model_version() }).to_string()
        } else {
            format!("{code}\t{}", pipeline.model_version())
        };
        writeln!(out, "{line}").map_err(|e| CliError::io(e.to_string()))?;
    }
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> CliResult<()> {
    let ip: IpAddr = a
        .host
        .parse()
        .map_err(|_| CliError::usage(format!("--host must be an IP address, got `{}`", a.host)))?;
    let pipeline = Pipeline::load(&a.model)?;
    let config = soc_server::ServerConfig {
        body_limit: a.body_limit,
        request_timeout: Duration::from_secs(a.timeout_s),
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::internal(e.to_string()))?;
    runtime.block_on(async move {
        let (listener, local) = soc_server::bind(SocketAddr::new(ip, a.port))
            .await
            .map_err(|e| CliError::io(format!("cannot bind {ip}:{}: {e}", a.port)))?;
        println!("listening on http://{local}");
        let _ = std::io::stdout().flush();
        log::info!(
            "serving model {} from {}",
            pipeline.model_version(),
            a.model.display()
        );
        soc_server::serve(
            listener,
            soc_server::AppState::new(pipeline),
            config,
            soc_server::shutdown_signal(),
        )
        .await
        .map_err(|e| CliError::io(e.to_string()))
    })
}
