use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use floorplan_core::data::{generate_dataset, load_dataset, load_spec, save_dataset, DataError, Dataset, FloorplanSpec, GenConfig, Split};
use floorplan_core::factorgraph::{build_factor_graph, GraphConfig};
use floorplan_core::pipeline::{
    class_colour, degrade, evaluate, rasterize_layout, run_ablation, score_predictions, standard_variants, train, EvalOptions,
    PipelineError, TrainConfig, VariantGroup,
};
use serde::Serialize;

use crate::api::{self, ApiError, InferRequest, LoadedModel};
use crate::service::{router, ServiceState};
use crate::CHECKPOINT_ENV;

#[derive(Debug, Parser)]
#[command(name = "floorplan", version, about = "Floorplan layout inference with factor-graph neural networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    GenData(GenDataArgs),
    /// Train a model and write the best checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a dataset.
    Eval(EvalArgs),
    /// Predict the layout of one plan.
    Infer(InferArgs),
    /// Train factor and aggregator variants and compare them.
    Ablate(AblateArgs),
    /// Run the HTTP inference service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Plans labelled as validation; defaults to one in six.
    #[arg(long)]
    pub val: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub min_rooms: usize,
    #[arg(long, default_value_t = 8)]
    pub max_rooms: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Training configuration JSON; missing fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Write per-epoch logs as JSON lines.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults to $FLOORPLAN_CHECKPOINT.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Write the metrics report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SplitArg::Val)]
    pub split: SplitArg,
    /// Withhold this many rooms per plan.
    #[arg(long, default_value_t = 0)]
    pub drop: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Score the ground-truth boxes themselves instead of a model.
    #[arg(long)]
    pub ground_truth: bool,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Defaults to $FLOORPLAN_CHECKPOINT.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Write the rasterized layout as PNG.
    #[arg(long)]
    pub raster: Option<PathBuf>,
    /// Print the factor graph instead of running the model.
    #[arg(long)]
    pub dump_graph: bool,
    /// Score against the plan's ground-truth boxes.
    #[arg(long)]
    pub metrics: bool,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated groups: factors, relations, boundary, aggregators.
    #[arg(long, value_delimiter = ',', default_value = "factors")]
    pub variants: Vec<VariantGroup>,
    /// Leave out the unmodified model.
    #[arg(long)]
    pub no_full: bool,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Defaults to $FLOORPLAN_CHECKPOINT; without one, /infer answers 503.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Dataset searched by /retrieve.
    #[arg(long)]
    pub retrieval_data: Option<PathBuf>,
}

/// A failed command, printed as one JSON line on stderr.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        CliError { code, message: message.into(), path: None }
    }

    pub fn line(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("errors serialize")
    }

    pub fn exit_code(&self) -> i32 {
        match self.code {
            "usage" => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.line())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        let path = e.path().map(str::to_string);
        let code = match e {
            DataError::Parse { .. } => "schema_violation",
            DataError::Invalid { .. } | DataError::Semantic { .. } => "invalid_input",
            _ => "data_error",
        };
        CliError { code, message: e.to_string(), path }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Data(d) => d.into(),
            PipelineError::Checkpoint(m) => CliError::new("bad_checkpoint", m),
            PipelineError::Config(m) => CliError::new("bad_config", m),
            other => CliError::new("failed", other.to_string()),
        }
    }
}

impl From<ApiError> for CliError {
    fn from(e: ApiError) -> Self {
        CliError { code: e.code, message: e.message, path: e.path }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError { code: "missing_file", message: e.to_string(), path: Some(path.display().to_string()) })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError { code: "write_failed", message: e.to_string(), path: Some(path.display().to_string()) })
}

fn checkpoint_path(arg: &Option<PathBuf>) -> Option<PathBuf> {
    arg.clone().or_else(|| std::env::var_os(CHECKPOINT_ENV).map(PathBuf::from))
}

fn require_checkpoint(arg: &Option<PathBuf>) -> Result<LoadedModel, CliError> {
    let path = checkpoint_path(arg).ok_or_else(|| CliError::new("usage", format!("--checkpoint or {CHECKPOINT_ENV} is required")))?;
    Ok(LoadedModel::from_bytes(&read(&path)?)?)
}

fn load_train_config(path: &Option<PathBuf>) -> Result<TrainConfig, CliError> {
    match path {
        None => Ok(TrainConfig::default()),
        Some(p) => Ok(floorplan_core::data::parse_json(&read(p)?)?),
    }
}

fn load_data(path: &Path, grid_k: u32) -> Result<Dataset, CliError> {
    let ds = load_dataset(&read(path)?)?;
    ds.validate(grid_k)?;
    Ok(ds)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::GenData(a) => gen_data(&a),
        Command::Train(a) => train_cmd(&a),
        Command::Eval(a) => eval_cmd(&a),
        Command::Infer(a) => infer_cmd(&a),
        Command::Ablate(a) => ablate_cmd(&a),
        Command::Serve(a) => serve_cmd(&a),
    }
}

fn gen_data(a: &GenDataArgs) -> Result<(), CliError> {
    let cfg = GenConfig { rooms: (a.min_rooms, a.max_rooms), ..GenConfig::default() };
    let plans = generate_dataset(a.seed, a.count, &cfg)?;
    let val = a.val.unwrap_or(a.count / 6);
    let ds = Dataset::with_split(plans, val, a.seed)?;
    write(&a.out, &save_dataset(&ds))
}

fn train_cmd(a: &TrainArgs) -> Result<(), CliError> {
    let cfg = load_train_config(&a.config)?;
    let ds = load_data(&a.data, cfg.model.graph.grid_k)?;
    let mut lines = String::new();
    let out = train(&ds, &cfg, |log| {
        let line = serde_json::to_string(log).expect("logs serialize");
        println!("{line}");
        lines.push_str(&line);
        lines.push('\n');
    })?;
    if let Some(p) = &a.log {
        write(p, lines.as_bytes())?;
    }
    write(&a.out, &out.best.to_bytes())
}

fn eval_cmd(a: &EvalArgs) -> Result<(), CliError> {
    let model = if a.ground_truth { None } else { Some(require_checkpoint(&a.checkpoint)?) };
    let grid_k = model.as_ref().map_or(floorplan_core::geometry::DEFAULT_GRID_K, |m| m.grid_k());
    let ds = load_data(&a.data, grid_k)?;
    let plans = match a.split {
        SplitArg::Train => ds.subset(Split::Train),
        SplitArg::Val => ds.subset(Split::Val),
        SplitArg::All => ds.plans.iter().collect(),
    };
    if plans.is_empty() {
        return Err(CliError::new("empty_split", "the selected split holds no plans"));
    }
    let report = match &model {
        Some(m) => evaluate(&m.checkpoint.model, &plans, &EvalOptions { drop: a.drop, seed: a.seed, ..EvalOptions::default() })?,
        None => {
            let (full, given) = degrade(&plans, a.drop, a.seed)?;
            let given_refs: Vec<&FloorplanSpec> = given.iter().collect();
            let pred: Vec<_> = full.iter().map(|p| p.gt_boxes().ok_or_else(|| CliError::new("missing_ground_truth", "plans need ground-truth boxes"))).collect::<Result<_, _>>()?;
            score_predictions(&full, &given_refs, &pred, grid_k)?
        }
    };
    print!("{}", report.to_table());
    if let Some(p) = &a.report {
        write(p, report.to_json().as_bytes())?;
    }
    Ok(())
}

fn infer_cmd(a: &InferArgs) -> Result<(), CliError> {
    let plan = load_spec(&read(&a.plan)?)?;
    if a.dump_graph {
        let graph_cfg = match checkpoint_path(&a.checkpoint) {
            Some(p) => LoadedModel::from_bytes(&read(&p)?)?.checkpoint.model.config.graph,
            None => GraphConfig::default(),
        };
        plan.validate(graph_cfg.grid_k)?;
        let g = build_factor_graph(&plan, &graph_cfg)?;
        println!("{}", serde_json::to_string(&g).expect("graphs serialize"));
        return Ok(());
    }
    let model = require_checkpoint(&a.checkpoint)?;
    let body = serde_json::to_vec(&InferRequest { plan, raster: false, metrics: a.metrics }).expect("requests serialize");
    let req = api::parse_infer_request(&body, model.grid_k())?;
    let resp = api::infer(&model, &req)?;
    if let Some(path) = &a.raster {
        let boxes: Vec<_> = resp.rooms.iter().map(|r| r.bbox).collect();
        let plan = &req.plan;
        let raster = rasterize_layout(&boxes, &plan.room_types(), &plan.boundary.rasterize(plan.canvas));
        write_png(path, &raster)?;
    }
    println!("{}", serde_json::to_string(&resp).expect("responses serialize"));
    Ok(())
}

fn write_png(path: &Path, raster: &floorplan_core::pipeline::LayoutRaster) -> Result<(), CliError> {
    let rgb: Vec<u8> = raster.classes.iter().flat_map(|&c| class_colour(c)).collect();
    image::save_buffer_with_format(path, &rgb, raster.width, raster.height, image::ExtendedColorType::Rgb8, image::ImageFormat::Png)
        .map_err(|e| CliError { code: "write_failed", message: e.to_string(), path: Some(path.display().to_string()) })
}

fn ablate_cmd(a: &AblateArgs) -> Result<(), CliError> {
    let cfg = load_train_config(&a.config)?;
    let ds = load_data(&a.data, cfg.model.graph.grid_k)?;
    let variants = standard_variants(&cfg.model, &a.variants, !a.no_full);
    let table = run_ablation(&ds, &cfg, &variants, |name, log| {
        let iou = log.val.as_ref().map_or(f64::NAN, |v| v.box_iou_micro);
        eprintln!("{name}: epoch {} loss {:.5} val iou {:.4}", log.epoch, log.train_loss, iou);
    })?;
    print!("{}", table.to_table());
    if let Some(p) = &a.report {
        write(p, serde_json::to_string_pretty(&table).expect("tables serialize").as_bytes())?;
    }
    Ok(())
}

fn serve_cmd(a: &ServeArgs) -> Result<(), CliError> {
    let path = checkpoint_path(&a.checkpoint);
    let model = match &path {
        Some(p) => Some(LoadedModel::from_bytes(&read(p)?)?),
        None => None,
    };
    let retrieval = match &a.retrieval_data {
        Some(p) => load_dataset(&read(p)?)?.plans,
        None => Vec::new(),
    };
    let state = ServiceState::new(model, path, retrieval);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::new("runtime", e.to_string()))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.addr).await.map_err(|e| CliError::new("bind_failed", e.to_string()))?;
        eprintln!("listening on {}", listener.local_addr().map_err(|e| CliError::new("bind_failed", e.to_string()))?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::new("serve_failed", e.to_string()))
    })
}
