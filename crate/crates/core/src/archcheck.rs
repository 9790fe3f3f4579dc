//! Shape propagation and parameter counting for the modified VGG-19
//! corner regressor, plus its step-decay learning-rate schedule.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArchError {
    #[error("layer {layer} ({kind}) expects a rank-{expected} input, got {found}")]
    RankMismatch {
        layer: usize,
        kind: &'static str,
        expected: usize,
        found: ShapeTensor,
    },
    #[error("layer {layer}: spatial dims {found} smaller than pool stride")]
    TooSmall { layer: usize, found: ShapeTensor },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
}

/// `[h, w, c]` feature map or `[n, 1]` vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeTensor {
    Map { h: usize, w: usize, c: usize },
    Vector { n: usize },
}

impl ShapeTensor {
    pub fn map(h: usize, w: usize, c: usize) -> Result<Self, ArchError> {
        if h == 0 || w == 0 || c == 0 {
            return Err(ArchError::InvalidShape(format!("[{h},{w},{c}]")));
        }
        Ok(Self::Map { h, w, c })
    }

    pub fn vector(n: usize) -> Result<Self, ArchError> {
        if n == 0 {
            return Err(ArchError::InvalidShape("[0,1]".into()));
        }
        Ok(Self::Vector { n })
    }

    pub fn rank(&self) -> usize {
        match self {
            Self::Map { .. } => 3,
            Self::Vector { .. } => 2,
        }
    }

    pub fn elements(&self) -> usize {
        match *self {
            Self::Map { h, w, c } => h * w * c,
            Self::Vector { n } => n,
        }
    }
}

impl fmt::Display for ShapeTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Map { h, w, c } => write!(f, "[{h},{w},{c}]"),
            Self::Vector { n } => write!(f, "[{n},1]"),
        }
    }
}

impl FromStr for ShapeTensor {
    type Err = ArchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ArchError::InvalidShape(s.to_string());
        let inner = s.trim().strip_prefix('[').and_then(|r| r.strip_suffix(']')).ok_or_else(bad)?;
        let dims: Vec<usize> = inner
            .split(',')
            .map(|d| d.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        match dims[..] {
            [h, w, c] => Self::map(h, w, c),
            [n, 1] => Self::vector(n),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoolMode {
    Avg,
    Max,
}

impl fmt::Display for PoolMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Avg => "avg",
            Self::Max => "max",
        })
    }
}

impl FromStr for PoolMode {
    type Err = ArchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "avg" => Ok(Self::Avg),
            "max" => Ok(Self::Max),
            other => Err(ArchError::InvalidLayer(format!("pool mode {other:?} (expected avg|max)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Same,
    Valid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv2d {
        filters: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: Padding,
    },
    Pool2d {
        mode: PoolMode,
        size: (usize, usize),
        stride: (usize, usize),
    },
    Flatten,
    Dense {
        units: usize,
    },
}

impl LayerSpec {
    /// 3×3, stride 1, same padding.
    pub fn conv(filters: usize) -> Self {
        Self::Conv2d {
            filters,
            kernel: (3, 3),
            stride: (1, 1),
            padding: Padding::Same,
        }
    }

    /// 2×2 window, stride 2.
    pub fn pool(mode: PoolMode) -> Self {
        Self::Pool2d {
            mode,
            size: (2, 2),
            stride: (2, 2),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Conv2d { .. } => "conv2d",
            Self::Pool2d { .. } => "pool2d",
            Self::Flatten => "flatten",
            Self::Dense { .. } => "dense",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Conv2d { filters, kernel, .. } => format!("Convolution 2D {filters}@{}x{}", kernel.0, kernel.1),
            Self::Pool2d { mode: PoolMode::Avg, .. } => "Average Pooling 2D".into(),
            Self::Pool2d { mode: PoolMode::Max, .. } => "Max Pooling 2D".into(),
            Self::Flatten => "Flatten".into(),
            Self::Dense { units } => format!("Dense {units}"),
        }
    }

    /// Weights plus biases.
    pub fn parameters(&self, input: ShapeTensor) -> usize {
        match (*self, input) {
            (Self::Conv2d { filters, kernel, .. }, ShapeTensor::Map { c, .. }) => kernel.0 * kernel.1 * c * filters + filters,
            (Self::Dense { units }, ShapeTensor::Vector { n }) => n * units + units,
            _ => 0,
        }
    }
}

fn conv_out(len: usize, k: usize, s: usize, padding: Padding) -> usize {
    match padding {
        Padding::Same => len.div_ceil(s),
        Padding::Valid => (len - k) / s + 1,
    }
}

/// Output shape of `layer` (at position `index`, for error messages).
pub fn propagate_shape_at(index: usize, layer: &LayerSpec, input: ShapeTensor) -> Result<ShapeTensor, ArchError> {
    let rank_err = |expected| ArchError::RankMismatch {
        layer: index,
        kind: layer.kind(),
        expected,
        found: input,
    };
    match (*layer, input) {
        (
            LayerSpec::Conv2d {
                filters,
                kernel,
                stride,
                padding,
            },
            ShapeTensor::Map { h, w, .. },
        ) => {
            if filters == 0 || kernel.0 == 0 || kernel.1 == 0 || stride.0 == 0 || stride.1 == 0 {
                return Err(ArchError::InvalidLayer(format!("layer {index}: zero-sized conv")));
            }
            if padding == Padding::Valid && (h < kernel.0 || w < kernel.1) {
                return Err(ArchError::TooSmall { layer: index, found: input });
            }
            ShapeTensor::map(
                conv_out(h, kernel.0, stride.0, padding),
                conv_out(w, kernel.1, stride.1, padding),
                filters,
            )
        }
        (LayerSpec::Pool2d { size, stride, .. }, ShapeTensor::Map { h, w, c }) => {
            if size.0 == 0 || size.1 == 0 || stride.0 == 0 || stride.1 == 0 {
                return Err(ArchError::InvalidLayer(format!("layer {index}: zero-sized pool")));
            }
            if h < size.0.max(stride.0) || w < size.1.max(stride.1) {
                return Err(ArchError::TooSmall { layer: index, found: input });
            }
            ShapeTensor::map((h - size.0) / stride.0 + 1, (w - size.1) / stride.1 + 1, c)
        }
        (LayerSpec::Flatten, ShapeTensor::Map { .. }) => ShapeTensor::vector(input.elements()),
        (LayerSpec::Dense { units }, ShapeTensor::Vector { .. }) => ShapeTensor::vector(units),
        (LayerSpec::Dense { .. }, _) => Err(rank_err(2)),
        _ => Err(rank_err(3)),
    }
}

pub fn propagate_shape(layer: &LayerSpec, input: ShapeTensor) -> Result<ShapeTensor, ArchError> {
    propagate_shape_at(0, layer, input)
}

/// Input and output shape of every layer.
pub fn propagate_all(arch: &[LayerSpec], input: ShapeTensor) -> Result<Vec<(ShapeTensor, ShapeTensor)>, ArchError> {
    let mut shape = input;
    arch.iter()
        .enumerate()
        .map(|(i, layer)| {
            let out = propagate_shape_at(i, layer, shape)?;
            let pair = (shape, out);
            shape = out;
            Ok(pair)
        })
        .collect()
}

pub const INPUT_SHAPE: ShapeTensor = ShapeTensor::Map { h: 180, w: 320, c: 3 };
pub const OUTPUT_UNITS: usize = 8;
const BLOCKS: [(usize, usize); 5] = [(2, 64), (2, 128), (4, 256), (4, 512), (4, 512)];

/// Block index (1-based) of each layer; `None` for the head.
pub fn block_of(arch: &[LayerSpec]) -> Vec<Option<usize>> {
    let mut block = 1;
    arch.iter()
        .map(|layer| match layer {
            LayerSpec::Conv2d { .. } => Some(block),
            LayerSpec::Pool2d { .. } => {
                block += 1;
                Some(block - 1)
            }
            _ => None,
        })
        .collect()
}

/// Five VGG-19 conv blocks, each closed by a pooling layer, then flatten
/// and an 8-unit dense head.
pub fn build_modified_vgg19(mode: PoolMode) -> Vec<LayerSpec> {
    let mut arch = Vec::new();
    for (convs, filters) in BLOCKS {
        arch.extend(std::iter::repeat_n(LayerSpec::conv(filters), convs));
        arch.push(LayerSpec::pool(mode));
    }
    arch.push(LayerSpec::Flatten);
    arch.push(LayerSpec::Dense { units: OUTPUT_UNITS });
    arch
}

/// Expected (input, output) shape per layer.
pub type ShapeTable = Vec<(ShapeTensor, ShapeTensor)>;

fn m(h: usize, w: usize, c: usize) -> ShapeTensor {
    ShapeTensor::Map { h, w, c }
}

/// Published shape table of the modified network, row by row.
pub fn published_table() -> ShapeTable {
    vec![
        (m(180, 320, 3), m(180, 320, 64)),
        (m(180, 320, 64), m(180, 320, 64)),
        (m(180, 320, 64), m(90, 160, 64)),
        (m(90, 160, 64), m(90, 160, 128)),
        (m(90, 160, 128), m(90, 160, 128)),
        (m(90, 160, 128), m(45, 80, 128)),
        (m(45, 80, 128), m(45, 80, 256)),
        (m(45, 80, 256), m(45, 80, 256)),
        (m(45, 80, 256), m(45, 80, 256)),
        (m(45, 80, 256), m(45, 80, 256)),
        (m(45, 80, 256), m(22, 40, 256)),
        (m(22, 40, 256), m(22, 40, 512)),
        (m(22, 40, 512), m(22, 40, 512)),
        (m(22, 40, 512), m(22, 40, 512)),
        (m(22, 40, 512), m(22, 40, 512)),
        (m(22, 40, 512), m(11, 20, 512)),
        (m(11, 20, 512), m(11, 20, 512)),
        (m(11, 20, 512), m(11, 20, 512)),
        (m(11, 20, 512), m(11, 20, 512)),
        (m(11, 20, 512), m(11, 20, 512)),
        (m(11, 20, 512), m(5, 10, 512)),
        (m(5, 10, 512), ShapeTensor::Vector { n: 25600 }),
        (ShapeTensor::Vector { n: 25600 }, ShapeTensor::Vector { n: 8 }),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub layer: usize,
    pub block: Option<usize>,
    pub expected: (ShapeTensor, ShapeTensor),
    /// `None` when propagation failed or the table ran out of rows.
    pub found: Option<(ShapeTensor, ShapeTensor)>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<ReportRow>,
    pub first_mismatch: Option<Mismatch>,
    pub length_mismatch: Option<(usize, usize)>,
    pub trainable_params: usize,
    pub frozen_params: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub layer: LayerSpec,
    pub block: Option<usize>,
    pub shapes: Option<(ShapeTensor, ShapeTensor)>,
    pub params: usize,
    pub matches: bool,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.first_mismatch.is_none() && self.length_mismatch.is_none()
    }
}

/// Propagates `arch` from the first expected input shape and compares each
/// layer with `expected`. Dense layers count as trainable, everything
/// before them as frozen.
pub fn verify_table(arch: &[LayerSpec], expected: &[(ShapeTensor, ShapeTensor)]) -> VerifyReport {
    let blocks = block_of(arch);
    let mut rows = Vec::with_capacity(arch.len());
    let mut first_mismatch = None;
    let mut trainable = 0;
    let mut frozen = 0;
    let mut shape = expected.first().map(|r| r.0).unwrap_or(INPUT_SHAPE);
    let mut broken = false;
    for (i, layer) in arch.iter().enumerate() {
        let result = if broken { None } else { Some(propagate_shape_at(i, layer, shape)) };
        let shapes = match result {
            Some(Ok(out)) => Some((shape, out)),
            Some(Err(e)) => {
                broken = true;
                if first_mismatch.is_none() {
                    if let Some(exp) = expected.get(i) {
                        first_mismatch = Some(Mismatch {
                            layer: i,
                            block: blocks[i],
                            expected: *exp,
                            found: None,
                            reason: e.to_string(),
                        });
                    }
                }
                None
            }
            None => None,
        };
        let params = shapes.map_or(0, |(inp, _)| layer.parameters(inp));
        if matches!(layer, LayerSpec::Dense { .. }) {
            trainable += params;
        } else {
            frozen += params;
        }
        let matches = match (shapes, expected.get(i)) {
            (Some(got), Some(exp)) => got == *exp,
            _ => false,
        };
        if !matches && first_mismatch.is_none() {
            if let (Some(exp), Some(got)) = (expected.get(i), shapes) {
                first_mismatch = Some(Mismatch {
                    layer: i,
                    block: blocks[i],
                    expected: *exp,
                    found: Some(got),
                    reason: format!("expected {} -> {}, got {} -> {}", exp.0, exp.1, got.0, got.1),
                });
            }
        }
        if let Some((_, out)) = shapes {
            shape = out;
        }
        rows.push(ReportRow {
            layer: *layer,
            block: blocks[i],
            shapes,
            params,
            matches,
        });
    }
    VerifyReport {
        rows,
        first_mismatch,
        length_mismatch: (arch.len() != expected.len()).then_some((arch.len(), expected.len())),
        trainable_params: trainable,
        frozen_params: frozen,
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<4} {:<6} {:<24} {:<16} {:<16} {:>10}  ok", "#", "block", "layer", "input", "output", "params")?;
        for (i, row) in self.rows.iter().enumerate() {
            let block = row.block.map_or("head".to_string(), |b| b.to_string());
            let (inp, out) = row
                .shapes
                .map_or(("-".to_string(), "-".to_string()), |(a, b)| (a.to_string(), b.to_string()));
            writeln!(
                f,
                "{:<4} {:<6} {:<24} {:<16} {:<16} {:>10}  {}",
                i + 1,
                block,
                row.layer.describe(),
                inp,
                out,
                row.params,
                if row.matches { "yes" } else { "NO" }
            )?;
        }
        writeln!(f, "trainable parameters (dense head): {}", self.trainable_params)?;
        writeln!(f, "frozen parameters (conv base): {}", self.frozen_params)?;
        if let Some((got, want)) = self.length_mismatch {
            writeln!(f, "layer count mismatch: built {got}, expected {want}")?;
        }
        match &self.first_mismatch {
            None if self.ok() => write!(f, "verdict: all {} layers match", self.rows.len()),
            None => write!(f, "verdict: MISMATCH"),
            Some(m) => {
                let block = m.block.map_or("head".to_string(), |b| format!("block {b}"));
                write!(f, "verdict: MISMATCH at layer {} ({block}): {}", m.layer + 1, m.reason)
            }
        }
    }
}

/// One CSV row per layer: `index,block,kind,filters_or_units,kernel,stride,pool_mode,input,output,params`.
pub fn write_architecture_csv<W: Write>(arch: &[LayerSpec], input: ShapeTensor, mut out: W) -> io::Result<()> {
    let shapes = propagate_all(arch, input).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
    let blocks = block_of(arch);
    writeln!(out, "index,block,kind,units,kernel,stride,pool_mode,input,output,params")?;
    for (i, (layer, (inp, outp))) in arch.iter().zip(shapes).enumerate() {
        let (units, kernel, stride, mode) = match *layer {
            LayerSpec::Conv2d { filters, kernel, stride, .. } => (
                filters.to_string(),
                format!("{}x{}", kernel.0, kernel.1),
                format!("{}x{}", stride.0, stride.1),
                String::new(),
            ),
            LayerSpec::Pool2d { mode, size, stride } => (
                String::new(),
                format!("{}x{}", size.0, size.1),
                format!("{}x{}", stride.0, stride.1),
                mode.to_string(),
            ),
            LayerSpec::Flatten => Default::default(),
            LayerSpec::Dense { units } => (units.to_string(), String::new(), String::new(), String::new()),
        };
        let block = blocks[i].map_or(String::new(), |b| b.to_string());
        writeln!(
            out,
            "{},{block},{},{units},{kernel},{stride},{mode},\"{inp}\",\"{outp}\",{}",
            i + 1,
            layer.kind(),
            layer.parameters(inp)
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay_factor: f64,
    pub decay_every: u64,
}

impl Default for LrSchedule {
    fn default() -> Self {
        Self {
            initial: 1e-5,
            decay_factor: 0.95,
            decay_every: 2500,
        }
    }
}

impl LrSchedule {
    pub fn new(initial: f64, decay_factor: f64, decay_every: u64) -> Result<Self, ArchError> {
        if !(initial > 0.0 && initial.is_finite()) {
            return Err(ArchError::InvalidSchedule(format!("initial rate {initial}")));
        }
        if !(decay_factor > 0.0 && decay_factor <= 1.0) {
            return Err(ArchError::InvalidSchedule(format!("decay factor {decay_factor} not in (0, 1]")));
        }
        if decay_every == 0 {
            return Err(ArchError::InvalidSchedule("decay_every must be at least 1".into()));
        }
        Ok(Self {
            initial,
            decay_factor,
            decay_every,
        })
    }
}

/// `initial · factor^⌊step / decay_every⌋`.
pub fn lr_at(schedule: &LrSchedule, step: u64) -> f64 {
    let k = step / schedule.decay_every;
    let k = i32::try_from(k).unwrap_or(i32::MAX);
    schedule.initial * schedule.decay_factor.powi(k)
}
