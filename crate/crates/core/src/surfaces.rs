//! Dense 2D grid representations and the hand-crafted baseline surfaces:
//! SAE, event counts, on/off counts, exponential time surface, and a
//! per-pixel LIF spike counter.
//!
//! Surfaces are computed sparsely: only pixels that carry events are
//! touched, everything else stays zero.

use crate::error::{Error, Result};
use crate::event::{Polarity, SensorGeometry};
use crate::io::atomic_write;
use crate::windowing::Window;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// An M x N x C array of real-valued features, row-major with the channel
/// index fastest: `values[(y*width + x)*channels + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    width: usize,
    height: usize,
    channels: usize,
    values: Vec<f64>,
}

impl Grid {
    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        assert!(width > 0 && height > 0 && channels > 0, "grid dimensions must be positive");
        Grid { width, height, channels, values: vec![0.0; width * height * channels] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.values[(y * self.width + x) * self.channels + c]
    }

    pub fn set(&mut self, x: usize, y: usize, c: usize, value: f64) {
        debug_assert!(value.is_finite(), "grid values must be finite");
        self.values[(y * self.width + x) * self.channels + c] = value;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            width: self.width,
            height: self.height,
            channels: self.channels,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

/// One of the hand-crafted baseline surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceKind {
    /// Normalized timestamp of the most recent event per pixel.
    Sae,
    /// Event count per pixel.
    EvCount,
    /// Count of ON (p = +1) events.
    EvOn,
    /// Count of OFF (p = -1) events.
    EvOff,
    /// `exp(-(t_end - t_last)/tau)` of the most recent event per pixel.
    ExpDecay { tau_us: f64 },
    /// Output spike count of a per-pixel leaky integrate-and-fire unit:
    /// potential decays with `leak_tau_us`, gains `w` per event, and emits
    /// a spike (resetting to zero) at `v_threshold`.
    SpikeCount { v_threshold: f64, leak_tau_us: f64, w: f64 },
}

impl SurfaceKind {
    /// Exponential surface with the default 50 ms decay.
    pub fn exp_default() -> Self {
        SurfaceKind::ExpDecay { tau_us: 50_000.0 }
    }

    /// LIF spike counter with the repo-convention defaults.
    pub fn snn_default() -> Self {
        SurfaceKind::SpikeCount { v_threshold: 2.0, leak_tau_us: 20_000.0, w: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            SurfaceKind::ExpDecay { tau_us } if tau_us <= 0.0 => {
                Err(Error::InvalidConfig("exp surface tau must be > 0".into()))
            }
            SurfaceKind::SpikeCount { v_threshold, leak_tau_us, .. }
                if v_threshold <= 0.0 || leak_tau_us <= 0.0 =>
            {
                Err(Error::InvalidConfig("spike surface threshold and leak tau must be > 0".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Builds a single-channel surface for one window. An empty window gives an
/// all-zero grid.
pub fn build_surface(window: &Window, kind: SurfaceKind, geometry: SensorGeometry) -> Result<Grid> {
    kind.validate()?;
    let mut grid = Grid::zeros(geometry.width as usize, geometry.height as usize, 1);
    let span = window.span().max(1) as f64;
    match kind {
        SurfaceKind::Sae => {
            for e in &window.events {
                grid.set(e.x as usize, e.y as usize, 0, (e.t - window.t_start) as f64 / span);
            }
        }
        SurfaceKind::EvCount => {
            for e in &window.events {
                let v = grid.get(e.x as usize, e.y as usize, 0);
                grid.set(e.x as usize, e.y as usize, 0, v + 1.0);
            }
        }
        SurfaceKind::EvOn | SurfaceKind::EvOff => {
            let wanted = if kind == SurfaceKind::EvOn { Polarity::On } else { Polarity::Off };
            for e in window.events.iter().filter(|e| e.polarity == wanted) {
                let v = grid.get(e.x as usize, e.y as usize, 0);
                grid.set(e.x as usize, e.y as usize, 0, v + 1.0);
            }
        }
        SurfaceKind::ExpDecay { tau_us } => {
            for e in &window.events {
                let age = (window.t_end - e.t) as f64;
                grid.set(e.x as usize, e.y as usize, 0, (-age / tau_us).exp());
            }
        }
        SurfaceKind::SpikeCount { v_threshold, leak_tau_us, w } => {
            // Per-pixel LIF state: (potential, time of last input).
            let mut state: HashMap<(u16, u16), (f64, u64)> = HashMap::new();
            for e in &window.events {
                let entry = state.entry((e.x, e.y)).or_insert((0.0, e.t));
                let (ref mut v, ref mut last_t) = *entry;
                *v *= (-((e.t - *last_t) as f64) / leak_tau_us).exp();
                *last_t = e.t;
                *v += w;
                if *v >= v_threshold {
                    let c = grid.get(e.x as usize, e.y as usize, 0);
                    grid.set(e.x as usize, e.y as usize, 0, c + 1.0);
                    *v = 0.0;
                }
            }
        }
    }
    Ok(grid)
}

/// Value rescaling applied to a whole grid (all channels together).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridNorm {
    /// Divide by max |value|; identity on an all-zero grid.
    MaxAbs,
    /// Affine map of [min, max] onto [0, 1]; all-zero on a constant grid.
    MinMax,
}

pub fn normalize_grid(grid: &Grid, mode: GridNorm) -> Grid {
    match mode {
        GridNorm::MaxAbs => {
            let m = grid.max_abs();
            if m == 0.0 {
                grid.clone()
            } else {
                grid.map(|v| v / m)
            }
        }
        GridNorm::MinMax => {
            let min = grid.values.iter().copied().fold(f64::INFINITY, f64::min);
            let max = grid.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if grid.values.is_empty() || max == min {
                grid.map(|_| 0.0)
            } else {
                grid.map(|v| (v - min) / (max - min))
            }
        }
    }
}

/// Collapses channels into one via the per-pixel L2 norm.
pub fn reduce_channels_l2(grid: &Grid) -> Grid {
    let mut out = Grid::zeros(grid.width, grid.height, 1);
    for y in 0..grid.height {
        for x in 0..grid.width {
            let sq: f64 = (0..grid.channels).map(|c| grid.get(x, y, c).powi(2)).sum();
            out.set(x, y, 0, sq.sqrt());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFormat {
    Pgm,
    Csv,
}

pub fn export_grid(grid: &Grid, path: &Path, format: GridFormat) -> Result<()> {
    let mut bytes = Vec::new();
    match format {
        GridFormat::Pgm => write_grid_pgm_to(grid, &mut bytes)?,
        GridFormat::Csv => write_grid_csv_to(grid, &mut bytes)?,
    }
    atomic_write(path, &bytes)
}

/// Binary 16-bit P5 PGM; requires a single channel and values in [0, 1].
/// Sample values are `round(v * 65535)`, big-endian per the format.
pub fn write_grid_pgm_to<W: Write>(grid: &Grid, mut writer: W) -> Result<()> {
    if grid.channels != 1 {
        return Err(Error::ShapeMismatch {
            context: format!("PGM export needs 1 channel, grid has {}", grid.channels),
        });
    }
    for y in 0..grid.height {
        for x in 0..grid.width {
            let v = grid.get(x, y, 0);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::GridValueOutOfRange { value: v, x, y, c: 0 });
            }
        }
    }
    write!(writer, "P5\n{} {}\n65535\n", grid.width, grid.height)?;
    for y in 0..grid.height {
        for x in 0..grid.width {
            let sample = (grid.get(x, y, 0) * 65535.0).round() as u16;
            writer.write_all(&sample.to_be_bytes())?;
        }
    }
    Ok(())
}

/// CSV grid: a `# width height channels` header line, then one row per y
/// with `width * channels` comma-separated values (channel index fastest).
/// Values use the shortest representation that round-trips exactly.
pub fn write_grid_csv_to<W: Write>(grid: &Grid, mut writer: W) -> Result<()> {
    writeln!(writer, "# {} {} {}", grid.width, grid.height, grid.channels)?;
    for y in 0..grid.height {
        let row: Vec<String> = (0..grid.width)
            .flat_map(|x| (0..grid.channels).map(move |c| (x, c)))
            .map(|(x, c)| format!("{}", grid.get(x, y, c)))
            .collect();
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn read_grid_csv(path: &Path) -> Result<Grid> {
    read_grid_csv_from(BufReader::new(std::fs::File::open(path)?))
}

pub fn read_grid_csv_from<R: BufRead>(reader: R) -> Result<Grid> {
    let malformed = |line: usize, reason: &str| Error::MalformedLine { line, reason: reason.into() };
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| malformed(1, "missing header"))?;
    let header = header?;
    let dims: Vec<usize> = header
        .strip_prefix('#')
        .ok_or_else(|| malformed(1, "expected `# width height channels` header"))?
        .split_whitespace()
        .map(|f| f.parse::<usize>().map_err(|_| malformed(1, "invalid header dimension")))
        .collect::<Result<_>>()?;
    let [width, height, channels] = dims[..] else {
        return Err(malformed(1, "expected exactly 3 header dimensions"));
    };
    if width == 0 || height == 0 || channels == 0 {
        return Err(malformed(1, "grid dimensions must be positive"));
    }
    let per_row = width
        .checked_mul(channels)
        .filter(|&n| n.checked_mul(height).is_some_and(|total| total <= (1 << 28)))
        .ok_or_else(|| malformed(1, "grid too large"))?;
    let mut grid = Grid::zeros(width, height, channels);
    let mut y = 0usize;
    for (number, line) in lines {
        let line_no = number + 1;
        let line = line?;
        if y >= height {
            return Err(malformed(line_no, "more rows than header height"));
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|f| f.parse::<f64>().map_err(|_| malformed(line_no, "invalid value")))
            .collect::<Result<_>>()?;
        if values.len() != per_row {
            return Err(malformed(line_no, "wrong number of values in row"));
        }
        for (i, v) in values.into_iter().enumerate() {
            if !v.is_finite() {
                return Err(malformed(line_no, "non-finite value"));
            }
            grid.values[(y * width) * channels + i] = v;
        }
        y += 1;
    }
    if y != height {
        return Err(Error::Truncated { what: "grid rows" });
    }
    Ok(grid)
}
