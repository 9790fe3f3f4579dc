use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use servokit::archcheck::{self, LrSchedule};
use servokit::camera::PixelPoint;
use servokit::config::Config;
use servokit::datapipe::{
    augment_dataset, denormalize_labels, evaluate, kfold_partition, normalize_labels, reorder_canonical,
    split_train_val, LabeledImage, Units,
};
use servokit::datapipe::labels::{read_labels_csv, write_labels_csv};
use servokit::servo::{plot, run_servo, run_servo_to_features, trace, FeatureSet, ServoError, ServoSetup};
use servokit::vision::{
    annotate_files, list_images, render_quad_with, AnnotateParams, CannyParams, QuadParams, RasterImage,
    RenderOptions,
};

use crate::{
    AnnotateArgs, ArchcheckArgs, AugmentArgs, Cli, Command, EvalArgs, KfoldArgs, LrArgs, RenderQuadArgs, ServoArgs,
    SplitArgs, UsageError,
};

const DEFAULT_SEED: u64 = 42;

/// Settings from `--config`, then command-line overrides.
struct RunConfig {
    settings: Config,
    seed: u64,
    quiet: bool,
}

impl RunConfig {
    fn load(cli: &Cli, overrides: Vec<(String, String)>) -> Result<Self> {
        let mut settings = match &cli.config {
            Some(path) => Config::load(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))?,
            None => Config::new(),
        };
        for (key, value) in overrides {
            settings.set(key, value);
        }
        settings
            .reject_unknown(is_known_key)
            .map_err(|e| UsageError(e.to_string()))?;
        let seed = match cli.seed {
            Some(seed) => seed,
            None => settings
                .parsed_or("seed", DEFAULT_SEED)
                .map_err(|e| UsageError(e.to_string()))?,
        };
        Ok(Self {
            settings,
            seed,
            quiet: cli.quiet,
        })
    }

    fn info(&self, msg: impl std::fmt::Display) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    fn usage<T>(&self, result: Result<T, impl std::fmt::Display>) -> Result<T> {
        result.map_err(|e| UsageError(e.to_string()).into())
    }
}

fn is_known_key(key: &str) -> bool {
    ServoSetup::is_config_key(key) || matches!(key, "seed" | "canny.sigma" | "canny.low" | "canny.high" | "quad.slope")
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Servo(args) => servo(cli, args),
        Command::Annotate(args) => annotate(cli, args),
        Command::Augment(args) => augment(cli, args),
        Command::Split(args) => split(cli, args),
        Command::Kfold(args) => kfold(cli, args),
        Command::Eval(args) => eval(cli, args),
        Command::Archcheck(args) => archcheck(cli, args),
        Command::Lr(args) => {
            // Nothing to read, but a bad config file is still an error.
            RunConfig::load(cli, Vec::new())?;
            lr(args)
        }
        Command::RenderQuad(args) => render_quad(cli, args),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn read_labels(path: &Path) -> Result<Vec<LabeledImage>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_labels_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

fn write_labels(path: &Path, items: &[LabeledImage]) -> Result<()> {
    let mut out = create(path)?;
    write_labels_csv(&mut out, items)?;
    out.flush()?;
    Ok(())
}

fn servo(cli: &Cli, args: &ServoArgs) -> Result<()> {
    let mut overrides = args.overrides.clone();
    let flags = [
        ("servo.lambda", args.lambda.map(|v| v.to_string())),
        ("servo.dt", args.dt.map(|v| v.to_string())),
        ("servo.iterations", args.iterations.map(|v| v.to_string())),
        ("servo.early_stop", args.early_stop.then(|| "true".to_string())),
        ("servo.q_start", args.q_start.clone()),
        ("servo.q_goal", args.q_goal.clone()),
    ];
    overrides.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    let run = RunConfig::load(cli, overrides)?;
    let setup = run.usage(ServoSetup::from_config(&run.settings))?;

    let result = match &args.desired {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let points = trace::read_desired_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
            let depths = vec![f64::NAN; points.len()];
            run_servo_to_features(&setup.config, &setup.rig, &setup.q_start, &FeatureSet::new(points, depths))
        }
        None => run_servo(&setup.config, &setup.rig, &setup.q_start, &setup.q_goal),
    };
    let (trace, failure) = match result {
        Ok(trace) => (trace, None),
        Err(ServoError::OutOfView { iteration, feature, trace }) => {
            let msg = format!("feature {} left the image at iteration {iteration}", feature + 1);
            (*trace, Some(msg))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.trace {
        let mut out = create(path)?;
        trace.write_csv(&mut out)?;
        out.flush()?;
    }
    if let Some(dir) = &args.plot_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        fs::write(dir.join("trajectory.svg"), plot::trajectory_svg(&trace, &setup.rig.intrinsics))?;
        fs::write(dir.join("error.svg"), plot::error_svg(&trace))?;
    }
    if let Some(msg) = failure {
        bail!("{msg}; partial trace of {} records kept", trace.records.len());
    }
    if let (Some(e0), Some(e1)) = (trace.initial_error(), trace.final_error()) {
        let reduction = if e0 > 0.0 { 100.0 * (1.0 - e1 / e0) } else { 0.0 };
        println!("iterations,{}", trace.records.len());
        println!("initial_error_px,{e0}");
        println!("final_error_px,{e1}");
        println!("reduction_percent,{reduction}");
    }
    Ok(())
}

fn annotate(cli: &Cli, args: &AnnotateArgs) -> Result<()> {
    let flags = [
        ("canny.sigma", args.sigma),
        ("canny.low", args.low),
        ("canny.high", args.high),
        ("quad.slope", args.slope),
    ];
    let overrides = flags
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v.to_string())))
        .collect();
    let run = RunConfig::load(cli, overrides)?;
    let defaults = CannyParams::default();
    let params = AnnotateParams {
        canny: CannyParams {
            sigma: run.usage(run.settings.parsed_or("canny.sigma", defaults.sigma))?,
            low: run.usage(run.settings.parsed_or("canny.low", defaults.low))?,
            high: run.usage(run.settings.parsed_or("canny.high", defaults.high))?,
        },
        quad: QuadParams::with_slope(run.usage(run.settings.parsed_or("quad.slope", 1.0))?),
    };
    run.usage(params.canny.validate())?;
    if !(params.quad.slope > 0.0 && params.quad.slope.is_finite()) {
        return Err(UsageError(format!("slope must be positive, got {}", params.quad.slope)).into());
    }

    let paths = list_images(&args.input).with_context(|| format!("cannot read {}", args.input.display()))?;
    if paths.is_empty() {
        bail!("no images (.pgm/.ppm) in {}", args.input.display());
    }
    let mut labels = Vec::new();
    let mut failures = 0;
    for item in annotate_files(&paths, &params) {
        let id = file_name(&item.path);
        match (item.result, item.size) {
            (Ok(quad), Some((w, h))) => {
                let label = LabeledImage::new(id, quad, Units::Pixels);
                labels.push(if args.normalized {
                    normalize_labels(&label, w as u32, h as u32)?
                } else {
                    label
                });
            }
            (Err(e), _) => {
                failures += 1;
                eprintln!("{id}: {e}");
            }
            (Ok(_), None) => unreachable!("annotated images have a size"),
        }
    }
    write_labels(&args.out, &labels)?;
    run.info(format!("annotated {} of {} images", labels.len(), paths.len()));
    if failures > 0 {
        bail!("{failures} of {} images could not be annotated", paths.len());
    }
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn augment(cli: &Cli, args: &AugmentArgs) -> Result<()> {
    let run = RunConfig::load(cli, Vec::new())?;
    if args.ops.is_empty() {
        return Err(UsageError("--ops needs at least one transform".into()).into());
    }
    let labels = read_labels(&args.labels)?;
    let input_units: Vec<Units> = labels.iter().map(|l| l.units).collect();
    let mut items = Vec::with_capacity(labels.len());
    for label in labels {
        let path = args.input.join(&label.id);
        let image = RasterImage::load(&path).with_context(|| format!("loading {}", path.display()))?;
        let (w, h) = (image.width() as u32, image.height() as u32);
        let pixel_label = match label.units {
            Units::Pixels => label,
            Units::Normalized => denormalize_labels(&label, w, h)?,
        };
        items.push((image, pixel_label));
    }
    let out = augment_dataset(&items, &args.ops)?;
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let per_item = args.ops.len() + 1;
    let mut out_labels = Vec::with_capacity(out.len());
    for (i, (image, label)) in out.iter().enumerate() {
        image.save(&args.out.join(&label.id))?;
        out_labels.push(match input_units[i / per_item] {
            Units::Pixels => label.clone(),
            Units::Normalized => normalize_labels(label, image.width() as u32, image.height() as u32)?,
        });
    }
    write_labels(&args.out.join("labels.csv"), &out_labels)?;
    run.info(format!("wrote {} images to {}", out.len(), args.out.display()));
    Ok(())
}

fn ids_of(labels: &[LabeledImage]) -> Vec<String> {
    labels.iter().map(|l| l.id.clone()).collect()
}

fn split(cli: &Cli, args: &SplitArgs) -> Result<()> {
    let run = RunConfig::load(cli, Vec::new())?;
    let labels = read_labels(&args.labels)?;
    run.info(format!("seed {}", run.seed));
    let (train, val) = split_train_val(&ids_of(&labels), args.val_frac, run.seed)?;
    match &args.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let pick = |ids: &[String]| -> Vec<LabeledImage> {
                ids.iter()
                    .map(|id| labels.iter().find(|l| &l.id == id).expect("id from labels").clone())
                    .collect()
            };
            write_labels(&dir.join("train.csv"), &pick(&train))?;
            write_labels(&dir.join("val.csv"), &pick(&val))?;
            run.info(format!("train {} / val {}", train.len(), val.len()));
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "id,set")?;
            for label in &labels {
                let set = if val.contains(&label.id) { "val" } else { "train" };
                writeln!(out, "{},{set}", label.id)?;
            }
        }
    }
    Ok(())
}

fn kfold(cli: &Cli, args: &KfoldArgs) -> Result<()> {
    let run = RunConfig::load(cli, Vec::new())?;
    let labels = read_labels(&args.labels)?;
    run.info(format!("seed {}", run.seed));
    let plan = kfold_partition(&ids_of(&labels), args.k, run.seed)?;
    match &args.out {
        Some(path) => {
            let mut out = create(path)?;
            plan.write_csv(&mut out)?;
            out.flush()?;
        }
        None => plan.write_csv(io::stdout().lock())?,
    }
    run.info(format!("fold sizes {:?}", plan.fold_sizes()));
    Ok(())
}

fn normalize_all(items: Vec<LabeledImage>, size: Option<(u32, u32)>) -> Result<Vec<LabeledImage>> {
    items
        .into_iter()
        .map(|item| match (item.units, size) {
            (Units::Pixels, Some((w, h))) => Ok(normalize_labels(&item, w, h)?),
            _ => Ok(item),
        })
        .collect()
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    RunConfig::load(cli, Vec::new())?;
    let pred = normalize_all(read_labels(&args.pred)?, args.size)?;
    let truth = normalize_all(read_labels(&args.truth)?, args.size)?;
    let report = evaluate(&pred, &truth)?;
    print!("{report}");
    Ok(())
}

fn archcheck(cli: &Cli, args: &ArchcheckArgs) -> Result<()> {
    RunConfig::load(cli, Vec::new())?;
    let arch = archcheck::build_modified_vgg19(args.pool);
    let report = archcheck::verify_table(&arch, &archcheck::published_table());
    println!("{report}");
    if let Some(path) = &args.csv {
        let mut out = create(path)?;
        archcheck::write_architecture_csv(&arch, archcheck::INPUT_SHAPE, &mut out)?;
        out.flush()?;
    }
    if !report.ok() {
        bail!("architecture does not match the expected shape table");
    }
    Ok(())
}

fn lr(args: &LrArgs) -> Result<()> {
    let schedule = LrSchedule::new(args.initial, args.factor, args.every).map_err(|e| UsageError(e.to_string()))?;
    println!("{:e}", archcheck::lr_at(&schedule, args.step));
    Ok(())
}

fn render_quad(cli: &Cli, args: &RenderQuadArgs) -> Result<()> {
    let run = RunConfig::load(cli, Vec::new())?;
    let c = args.corners;
    let raw = [0, 1, 2, 3].map(|i| PixelPoint::new(c[2 * i], c[2 * i + 1]));
    let quad = reorder_canonical(&raw)?;
    let opts = RenderOptions {
        noise_sigma: args.noise,
        shading: (0.0, 0.0),
        seed: run.seed,
    };
    if !(args.noise >= 0.0 && args.noise.is_finite()) {
        return Err(UsageError(format!("--noise must be non-negative, got {}", args.noise)).into());
    }
    let image = render_quad_with(args.width, args.height, &quad, args.fg, args.bg, &opts)?;
    image.save(&args.out)?;
    if let Some(path) = &args.labels {
        write_labels(path, &[LabeledImage::new(file_name(&args.out), quad, Units::Pixels)])?;
    }
    Ok(())
}
