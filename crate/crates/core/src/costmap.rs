//! Bird's-eye-view traversability cost grid.
//!
//! Cells hold a cost in `[0, 1]`: 0 is traversable, 1 is lethal, and cells
//! without evidence carry [`GridSpec::unknown_cost`]. Row 0 is the row nearest
//! to the grid origin along `z`; within a row, columns run along `x`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_param, Error, Result};
use crate::geometry::Point;

pub const FREE: f64 = 0.0;
pub const LETHAL: f64 = 1.0;

const BINARY_MAGIC: &str = "COSTMAP-P5";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Meters per cell.
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    /// Corner of cell (0, 0) in the map frame.
    pub origin: Point,
    pub unknown_cost: f64,
}

impl Default for GridSpec {
    /// 8 m x 8 m at 5 cm, robot at the bottom-center of the grid.
    fn default() -> Self {
        GridSpec {
            resolution: 0.05,
            width: 160,
            height: 160,
            origin: Point::new(-4.0, 0.0),
            unknown_cost: 0.5,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(invalid_param(format!(
                "grid resolution must be positive, got {}",
                self.resolution
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(invalid_param("grid width and height must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.unknown_cost) {
            return Err(invalid_param(format!(
                "unknown_cost must lie in [0, 1], got {}",
                self.unknown_cost
            )));
        }
        if !self.origin.is_finite() {
            return Err(invalid_param("grid origin must be finite"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.width * self.height
    }

    /// Far corner of the grid extent.
    pub fn max_corner(&self) -> Point {
        self.origin
            + Point::new(
                self.width as f64 * self.resolution,
                self.height as f64 * self.resolution,
            )
    }
}

/// Column/row address of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub col: usize,
    pub row: usize,
}

impl CellIndex {
    pub const fn new(col: usize, row: usize) -> Self {
        CellIndex { col, row }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostMap {
    spec: GridSpec,
    cells: Vec<f64>,
}

impl CostMap {
    /// A map with every cell at the spec's unknown cost.
    pub fn new(spec: GridSpec) -> Result<Self> {
        let fill = spec.unknown_cost;
        Self::filled(spec, fill)
    }

    pub fn filled(spec: GridSpec, cost: f64) -> Result<Self> {
        spec.validate()?;
        check_cost(cost)?;
        let cells = vec![cost; spec.cell_count()];
        Ok(CostMap { spec, cells })
    }

    pub fn from_cells(spec: GridSpec, cells: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        if cells.len() != spec.cell_count() {
            return Err(invalid_arg(format!(
                "expected {} cells, got {}",
                spec.cell_count(),
                cells.len()
            )));
        }
        for &c in &cells {
            check_cost(c)?;
        }
        Ok(CostMap { spec, cells })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn width(&self) -> usize {
        self.spec.width
    }

    pub fn height(&self) -> usize {
        self.spec.height
    }

    pub fn resolution(&self) -> f64 {
        self.spec.resolution
    }

    pub fn cell_of(&self, p: Point) -> Option<CellIndex> {
        let fx = (p.x - self.spec.origin.x) / self.spec.resolution;
        let fz = (p.z - self.spec.origin.z) / self.spec.resolution;
        if !(fx >= 0.0 && fz >= 0.0) {
            return None;
        }
        let (col, row) = (fx.floor(), fz.floor());
        if col >= self.spec.width as f64 || row >= self.spec.height as f64 {
            return None;
        }
        Some(CellIndex::new(col as usize, row as usize))
    }

    pub fn cell_center(&self, idx: CellIndex) -> Point {
        let r = self.spec.resolution;
        self.spec.origin + Point::new((idx.col as f64 + 0.5) * r, (idx.row as f64 + 0.5) * r)
    }

    /// Lower corner of a cell.
    pub fn cell_corner(&self, idx: CellIndex) -> Point {
        let r = self.spec.resolution;
        self.spec.origin + Point::new(idx.col as f64 * r, idx.row as f64 * r)
    }

    fn offset(&self, idx: CellIndex) -> usize {
        idx.row * self.spec.width + idx.col
    }

    pub fn get(&self, idx: CellIndex) -> Option<f64> {
        (idx.col < self.spec.width && idx.row < self.spec.height)
            .then(|| self.cells[self.offset(idx)])
    }

    /// Cost at a metric point; anything outside the grid is lethal.
    pub fn point_cost(&self, p: Point) -> f64 {
        match self.cell_of(p) {
            Some(idx) => self.cells[self.offset(idx)],
            None => LETHAL,
        }
    }

    pub fn set(&mut self, idx: CellIndex, cost: f64) -> Result<()> {
        self.set_cells(&[idx], cost)
    }

    /// Sets exactly the listed cells. Validates everything before mutating.
    pub fn set_cells(&mut self, indices: &[CellIndex], cost: f64) -> Result<()> {
        check_cost(cost)?;
        if let Some(bad) = indices
            .iter()
            .find(|i| i.col >= self.spec.width || i.row >= self.spec.height)
        {
            return Err(invalid_arg(format!(
                "cell ({}, {}) outside {}x{} grid",
                bad.col, bad.row, self.spec.width, self.spec.height
            )));
        }
        for &idx in indices {
            let o = self.offset(idx);
            self.cells[o] = cost;
        }
        Ok(())
    }

    /// Copy in which every cell whose centre lies within `radius` of a lethal
    /// cell centre is lethal too.
    pub fn inflated(&self, radius: f64) -> CostMap {
        let (w, h) = (self.spec.width as i64, self.spec.height as i64);
        let reach = (radius / self.spec.resolution).floor() as i64;
        let r2 = (radius / self.spec.resolution).powi(2);
        let offsets: Vec<(i64, i64)> = (-reach..=reach)
            .flat_map(|dr| (-reach..=reach).map(move |dc| (dc, dr)))
            .filter(|&(dc, dr)| ((dc * dc + dr * dr) as f64) <= r2 + 1e-9)
            .collect();
        let mut out = self.clone();
        for row in 0..h {
            for col in 0..w {
                if self.cells[(row * w + col) as usize] < LETHAL {
                    continue;
                }
                for &(dc, dr) in &offsets {
                    let (c, r) = (col + dc, row + dr);
                    if c >= 0 && r >= 0 && c < w && r < h {
                        out.cells[(r * w + c) as usize] = LETHAL;
                    }
                }
            }
        }
        out
    }

    pub fn indices(&self) -> impl Iterator<Item = CellIndex> + '_ {
        let w = self.spec.width;
        (0..self.spec.cell_count()).map(move |o| CellIndex::new(o % w, o / w))
    }

    /// Text form: a header line, then one line of space-separated costs per row.
    pub fn to_text(&self) -> String {
        let s = &self.spec;
        let mut out = format!(
            "{} {} {} {} {} {}\n",
            s.width, s.height, s.resolution, s.origin.x, s.origin.z, s.unknown_cost
        );
        for row in self.cells.chunks(s.width) {
            let mut first = true;
            for c in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tokens = text.split_ascii_whitespace();
        let spec = parse_header(&mut tokens)?;
        let mut cells = Vec::with_capacity(spec.cell_count());
        for tok in tokens {
            cells.push(parse_f64(tok, "cell cost")?);
        }
        if cells.len() != spec.cell_count() {
            return Err(Error::Parse(format!(
                "costmap declares {} cells, found {}",
                spec.cell_count(),
                cells.len()
            )));
        }
        CostMap::from_cells(spec, cells).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Binary form: `COSTMAP-P5` header line, then one byte per cell
    /// (cost x 255, rounded), row-major.
    pub fn to_binary(&self) -> Vec<u8> {
        let s = &self.spec;
        let mut out = format!(
            "{BINARY_MAGIC} {} {} {} {} {} {}\n",
            s.width, s.height, s.resolution, s.origin.x, s.origin.z, s.unknown_cost
        )
        .into_bytes();
        out.extend(self.cells.iter().map(|c| (c * 255.0).round() as u8));
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Parse("binary costmap missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl])
            .map_err(|_| Error::Parse("binary costmap header is not utf-8".into()))?;
        let mut tokens = header.split_ascii_whitespace();
        if tokens.next() != Some(BINARY_MAGIC) {
            return Err(Error::Parse("missing COSTMAP-P5 magic".into()));
        }
        let spec = parse_header(&mut tokens)?;
        let body = &bytes[nl + 1..];
        if body.len() != spec.cell_count() {
            return Err(Error::Parse(format!(
                "binary costmap declares {} cells, found {} bytes",
                spec.cell_count(),
                body.len()
            )));
        }
        let cells = body.iter().map(|&b| f64::from(b) / 255.0).collect();
        CostMap::from_cells(spec, cells).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let is_binary = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm") || e.eq_ignore_ascii_case("bin"));
        let bytes = if is_binary {
            self.to_binary()
        } else {
            self.to_text().into_bytes()
        };
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Loads either form, detected from the first bytes of the file.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(BINARY_MAGIC.as_bytes()) {
            Self::from_binary(&bytes)
        } else {
            let text = std::str::from_utf8(&bytes)
                .map_err(|_| Error::Parse(format!("{} is not utf-8 text", path.display())))?;
            Self::from_text(text)
        }
    }
}

fn check_cost(cost: f64) -> Result<()> {
    if (0.0..=1.0).contains(&cost) {
        Ok(())
    } else {
        Err(invalid_arg(format!("cost must lie in [0, 1], got {cost}")))
    }
}

fn parse_f64(tok: &str, what: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

fn parse_header<'a>(tokens: &mut impl Iterator<Item = &'a str>) -> Result<GridSpec> {
    let mut next = |what: &str| {
        tokens
            .next()
            .ok_or_else(|| Error::Parse(format!("costmap header missing {what}")))
    };
    let width = next("width")?;
    let width = width
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("bad width: {width:?}")))?;
    let height = next("height")?;
    let height = height
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("bad height: {height:?}")))?;
    let resolution = parse_f64(next("resolution")?, "resolution")?;
    let ox = parse_f64(next("origin_x")?, "origin_x")?;
    let oz = parse_f64(next("origin_z")?, "origin_z")?;
    let unknown_cost = parse_f64(next("unknown_cost")?, "unknown_cost")?;
    let spec = GridSpec {
        resolution,
        width,
        height,
        origin: Point::new(ox, oz),
        unknown_cost,
    };
    spec.validate().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(spec)
}
