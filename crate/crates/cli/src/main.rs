//! `dsmine`: clustering, validation, MCA and recommendations over a
//! categorical design-decision table, plus an HTTP server for the explorer.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dsmine_core::hac::export_dendrogram;
use dsmine_core::hac::to_newick;
use dsmine_core::mca::{contributions_csv, mca, scree_csv};
use dsmine_core::validation::sweep_to_csv;
use dsmine_core::{partition_by_dimension, Dataset, Format, Linkage};
use dsmine_service::reports::{self, Corpus, ValidateParams};
use serde::Serialize;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(name = "dsmine", version, about, propagate_version = true)]
struct Cli {
    /// Input table: header row, record ids in the first column.
    #[arg(short, long, global = true, env = "DSMINE_DATA")]
    input: Option<PathBuf>,

    /// Field delimiter; `tab` or `\t` for tab-separated files.
    #[arg(short, long, global = true, default_value = ",", value_parser = parse_delimiter)]
    delimiter: u8,

    /// Directory receiving output files.
    #[arg(
        short,
        long,
        global = true,
        env = "DSMINE_OUT_DIR",
        default_value = "."
    )]
    out_dir: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster records and write the dendrogram and a flat partition.
    Cluster(ClusterArgs),
    /// Silhouette sweep over cluster counts and bootstrap stability.
    Validate(ValidateArgs),
    /// Multiple correspondence analysis: scree and category contributions.
    Mca(McaArgs),
    /// Value frequencies of unbound dimensions given partial decisions.
    Recommend(RecommendArgs),
    /// Serve the JSON API for the loaded dataset.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LinkageArg {
    Single,
    Complete,
    Average,
}

impl From<LinkageArg> for Linkage {
    fn from(l: LinkageArg) -> Self {
        match l {
            LinkageArg::Single => Linkage::Single,
            LinkageArg::Complete => Linkage::Complete,
            LinkageArg::Average => Linkage::Average,
        }
    }
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Number of clusters to cut.
    #[arg(short, long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
    k: u32,

    #[arg(short, long, value_enum, default_value_t = LinkageArg::Average)]
    linkage: LinkageArg,

    /// Colour dendrogram leaves by this dimension instead of the cut.
    #[arg(long)]
    overlay: Option<String>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Smallest cluster count in the silhouette sweep.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    k_min: u32,

    /// Largest cluster count in the sweep [default: 10, capped at the record count].
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    k_max: Option<u32>,

    /// Cluster count for the stability run [default: best silhouette].
    #[arg(short, long, value_parser = clap::value_parser!(u32).range(2..))]
    k: Option<u32>,

    /// Bootstrap resamples.
    #[arg(short = 'B', long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..=reports::MAX_RESAMPLES as i64))]
    resamples: u32,

    #[arg(short, long, default_value_t = 42)]
    seed: u64,

    /// Jaccard value below which a cluster counts as dissolved, in (0, 1).
    #[arg(short, long, default_value_t = 0.5, value_parser = parse_open_unit)]
    threshold: f64,

    #[arg(short, long, value_enum, default_value_t = LinkageArg::Average)]
    linkage: LinkageArg,
}

#[derive(Debug, Args)]
struct McaArgs {
    /// Keep axes whose corrected inertia exceeds this percentage.
    #[arg(short, long, default_value_t = 7.0, value_parser = parse_percentage)]
    retain_threshold: f64,

    /// Contributors listed per retained axis in mca.json.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    top: u32,
}

#[derive(Debug, Args)]
struct RecommendArgs {
    /// A decision already taken, as `Dimension=Value`; repeatable.
    #[arg(long = "set", value_name = "DIM=VALUE", value_parser = parse_binding)]
    bindings: Vec<(String, String)>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "DSMINE_HOST", default_value = "127.0.0.1")]
    host: String,

    /// Port to listen on; 0 picks a free one.
    #[arg(short, long, env = "DSMINE_PORT", default_value_t = 8080)]
    port: u16,

    /// Origin allowed by CORS, or `*` for any.
    #[arg(
        long,
        env = "DSMINE_CORS_ORIGIN",
        default_value = "http://localhost:5173"
    )]
    cors_origin: String,
}

fn parse_delimiter(s: &str) -> Result<u8, String> {
    match s {
        "tab" | "\\t" | "\t" => Ok(b'\t'),
        _ if s.len() == 1 && s.is_ascii() && s != "\"" => Ok(s.as_bytes()[0]),
        _ => Err(format!("`{s}` is not a single ASCII delimiter")),
    }
}

fn parse_open_unit(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(format!("{s} is not strictly between 0 and 1"))
    }
}

fn parse_percentage(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=100.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{s} is not a percentage in 0..=100"))
    }
}

fn parse_binding(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((d, v)) if !d.trim().is_empty() && !v.trim().is_empty() => {
            Ok((d.trim().to_owned(), v.trim().to_owned()))
        }
        _ => Err(format!("`{s}` is not of the form DIM=VALUE")),
    }
}

/// Failure of a command after argument parsing.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Usage(_) => ExitCode::from(2),
            Failure::Data(_) => ExitCode::from(1),
        }
    }
}

impl From<dsmine_core::Error> for Failure {
    fn from(e: dsmine_core::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

/// Provenance sidecar written next to every analysis output.
#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    input: String,
    delimiter: String,
    parameters: serde_json::Value,
    outputs: Vec<&'a str>,
}

struct Session {
    input: PathBuf,
    format: Format,
    out_dir: PathBuf,
}

impl Session {
    fn load(&self) -> Outcome<Dataset> {
        let file = fs::File::open(&self.input)
            .map_err(|e| Failure::Data(format!("cannot read {}: {e}", self.input.display())))?;
        Dataset::from_reader(std::io::BufReader::new(file), self.format)
            .map_err(|e| Failure::Data(format!("{}: {e}", self.input.display())))
    }

    fn write(&self, name: &str, contents: &str) -> Outcome {
        let path = self.out_dir.join(name);
        fs::write(&path, contents)
            .map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Outcome {
        self.write(name, &to_json(value))
    }

    fn write_meta(
        &self,
        command: &str,
        parameters: serde_json::Value,
        outputs: &[&str],
    ) -> Outcome {
        let meta = Meta {
            tool: "dsmine",
            version: env!("CARGO_PKG_VERSION"),
            command,
            input: self.input.display().to_string(),
            delimiter: (self.format.delimiter as char).to_string(),
            parameters,
            outputs: outputs.to_vec(),
        };
        self.write_json(&format!("{command}.meta.json"), &meta)
    }

    fn finish(&self, command: &str, parameters: serde_json::Value, outputs: &[&str]) -> Outcome {
        self.write_meta(command, parameters, outputs)?;
        for o in outputs {
            println!("wrote {}", self.out_dir.join(o).display());
        }
        Ok(())
    }
}

/// Pretty JSON with a trailing newline, the format of every JSON file written.
fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

fn run_cluster(s: &Session, a: &ClusterArgs) -> Outcome {
    let corpus = Corpus::new(s.load()?)?;
    let linkage = Linkage::from(a.linkage);
    let report = reports::cluster_report(&corpus, a.k as usize, linkage)?;
    let dendrogram = match &a.overlay {
        None => report.dendrogram.clone(),
        Some(dim) => {
            let by_dim = partition_by_dimension(corpus.dataset(), dim)?;
            export_dendrogram(corpus.dendrogram(linkage), Some(&by_dim))?
        }
    };
    s.write("partition.csv", &report.partition.to_csv())?;
    s.write_json("dendrogram.json", &dendrogram)?;
    s.write(
        "dendrogram.nwk",
        &format!("{}\n", to_newick(corpus.dendrogram(linkage))),
    )?;
    println!("k={} sizes={:?}", report.k, report.sizes);
    s.finish(
        "cluster",
        json!({ "k": a.k, "linkage": linkage, "overlay": a.overlay }),
        &["partition.csv", "dendrogram.json", "dendrogram.nwk"],
    )
}

fn run_validate(s: &Session, a: &ValidateArgs) -> Outcome {
    let corpus = Corpus::new(s.load()?)?;
    let n = corpus.dataset().len();
    let k_max = match a.k_max {
        Some(k) => k as usize,
        None => 10.min(n),
    };
    if (a.k_min as usize) > k_max {
        return Err(Failure::Usage(format!(
            "--k-min {} exceeds --k-max {k_max}",
            a.k_min
        )));
    }
    let params = ValidateParams {
        k_min: a.k_min as usize,
        k_max,
        resamples: a.resamples as usize,
        seed: a.seed,
        threshold: a.threshold,
        linkage: a.linkage.into(),
        k: a.k.map(|k| k as usize),
    };
    let report = reports::validate_report(&corpus, &params)?;
    s.write("silhouette.csv", &sweep_to_csv(&report.sweep))?;
    s.write_json("stability.json", &report.stability)?;
    println!(
        "best k={} stabilities={:?} dissolved={:?}",
        report.best_k, report.stability.stabilities, report.stability.dissolved
    );
    s.finish(
        "validate",
        json!({
            "k_min": params.k_min,
            "k_max": params.k_max,
            "k": report.stability.k,
            "B": params.resamples,
            "seed": params.seed,
            "threshold": params.threshold,
            "linkage": params.linkage,
        }),
        &["silhouette.csv", "stability.json"],
    )
}

fn run_mca(s: &Session, a: &McaArgs) -> Outcome {
    let corpus = Corpus::new(s.load()?)?;
    let summary = reports::mca_report(&corpus, a.retain_threshold, a.top as usize)?;
    let result = mca(corpus.dataset())?;
    s.write("scree.csv", &scree_csv(&summary.corrected))?;
    s.write(
        "contributions.csv",
        &contributions_csv(&result, &summary.retained)?,
    )?;
    s.write_json("mca.json", &summary)?;
    println!("retained axes {:?}", summary.retained);
    s.finish(
        "mca",
        json!({ "retain_threshold": a.retain_threshold, "top": a.top }),
        &["scree.csv", "contributions.csv", "mca.json"],
    )
}

fn run_recommend(s: &Session, a: &RecommendArgs) -> Outcome {
    let corpus = Corpus::new(s.load()?)?;
    let recommendation = reports::recommend_report(&corpus, a.bindings.iter().map(|(d, v)| (d, v)))
        .map_err(|e| Failure::Data(format!("cannot apply --set bindings: {e}")))?;
    s.write_json("recommendation.json", &recommendation)?;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(to_json(&recommendation).as_bytes());
    let bindings: serde_json::Map<String, serde_json::Value> = a
        .bindings
        .iter()
        .map(|(d, v)| (d.clone(), json!(v)))
        .collect();
    // stdout carries the recommendation itself, so no "wrote" lines here
    s.write_meta(
        "recommend",
        json!({ "bindings": bindings }),
        &["recommendation.json"],
    )
}

fn run_serve(s: &Session, a: &ServeArgs) -> Outcome {
    let corpus = Arc::new(Corpus::new(s.load()?)?);
    let app = dsmine_service::router(corpus, &dsmine_service::Cors::parse(&a.cors_origin))
        .map_err(Failure::Usage)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Data(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port))
            .await
            .map_err(|e| Failure::Data(format!("cannot bind {}:{}: {e}", a.host, a.port)))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Failure::Data(e.to_string()))?;
        println!("listening on http://{addr}");
        let _ = std::io::stdout().flush();
        dsmine_service::serve(listener, app, dsmine_service::shutdown_signal())
            .await
            .map_err(|e| Failure::Data(e.to_string()))
    })
}

fn ensure_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))
}

fn run(cli: Cli) -> Outcome {
    let input = cli.input.ok_or_else(|| {
        Failure::Usage("an input file is required (--input or DSMINE_DATA)".into())
    })?;
    let session = Session {
        input,
        format: Format {
            delimiter: cli.delimiter,
        },
        out_dir: cli.out_dir,
    };
    if !matches!(cli.command, Command::Serve(_)) {
        ensure_dir(&session.out_dir)?;
    }
    match &cli.command {
        Command::Cluster(a) => run_cluster(&session, a),
        Command::Validate(a) => run_validate(&session, a),
        Command::Mca(a) => run_mca(&session, a),
        Command::Recommend(a) => run_recommend(&session, a),
        Command::Serve(a) => run_serve(&session, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (kind, msg) = match &f {
                Failure::Usage(m) => ("usage", m),
                Failure::Data(m) => ("error", m),
            };
            eprintln!("dsmine: {kind}: {msg}");
            f.exit_code()
        }
    }
}
