//! Band-pass filter bank `F_low`, `F_j` and the per-scale decomposition.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Image};
use crate::io::{encode_raw, read_raw, write_atomic};
use crate::windows::WindowBank;

/// `f_low = F_low * f` and `f_(j) = F_j * f` for `j = 0..=j_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubbandStack {
    grid: Grid,
    j_max: usize,
    pub low: Image,
    pub bands: Vec<(usize, Image)>,
}

impl SubbandStack {
    pub fn new(grid: Grid, j_max: usize, low: Image, bands: Vec<(usize, Image)>) -> Result<Self> {
        if j_max > grid.j_max() {
            return Err(Error::ScaleTooLarge { j: j_max, max: grid.j_max() });
        }
        grid.check(&low.grid())?;
        for (j, b) in &bands {
            grid.check(&b.grid())?;
            if *j > j_max {
                return Err(Error::ScaleTooLarge { j: *j, max: j_max });
            }
        }
        Ok(SubbandStack { grid, j_max, low, bands })
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn band(&self, j: usize) -> Option<&Image> {
        self.bands.iter().find(|(k, _)| *k == j).map(|(_, b)| b)
    }

    pub fn band_mut(&mut self, j: usize) -> Option<&mut Image> {
        self.bands.iter_mut().find(|(k, _)| *k == j).map(|(_, b)| b)
    }

    /// Stack holding only band `j` (all other bands zero).
    pub fn single_band(grid: Grid, j_max: usize, j: usize, band: Image) -> Result<Self> {
        let bands = (0..=j_max)
            .map(|k| (k, if k == j { band.clone() } else { Image::zeros(grid) }))
            .collect();
        SubbandStack::new(grid, j_max, Image::zeros(grid), bands)
    }

    /// Writes one raw image per band plus `manifest.txt` with `(j, file, l2 norm)` rows.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut manifest = String::from("j,file,l2\n");
        let entries = std::iter::once(("low".to_string(), &self.low))
            .chain(self.bands.iter().map(|(j, b)| (j.to_string(), b)));
        for (tag, img) in entries {
            let file = format!("band_{tag}.raw");
            write_atomic(&dir.join(&file), &encode_raw(img, 0))?;
            writeln!(manifest, "{tag},{file},{:.17e}", img.norm()).unwrap();
        }
        write_atomic(&dir.join("manifest.txt"), manifest.as_bytes())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join("manifest.txt"))?;
        let mut low = None;
        let mut bands = Vec::new();
        for line in text.lines().skip(1).filter(|l| !l.trim().is_empty()) {
            let mut it = line.split(',');
            let (tag, file) = (it.next().unwrap_or(""), it.next().unwrap_or(""));
            let img = read_raw(&dir.join(file))?;
            if tag == "low" {
                low = Some(img);
            } else {
                let j = tag.parse().map_err(|_| Error::Format {
                    path: dir.join("manifest.txt"),
                    msg: format!("bad scale tag {tag}"),
                })?;
                bands.push((j, img));
            }
        }
        let low = low.ok_or_else(|| Error::Format {
            path: dir.join("manifest.txt"),
            msg: "no low band".into(),
        })?;
        let grid = low.grid();
        let j_max = bands.iter().map(|(j, _)| *j).max().unwrap_or(0);
        SubbandStack::new(grid, j_max, low, bands)
    }
}

pub fn decompose(img: &Image, j_max: usize) -> Result<SubbandStack> {
    let bank = WindowBank::new(img.grid(), j_max)?;
    decompose_with(&bank, img)
}

pub fn decompose_with(bank: &WindowBank, img: &Image) -> Result<SubbandStack> {
    bank.grid().check(&img.grid())?;
    let spec = img.spectrum();
    let low = spec.multiply(bank.low()).image();
    let bands = (0..=bank.j_max()).map(|j| (j, spec.multiply(bank.band(j)).image())).collect();
    SubbandStack::new(img.grid(), bank.j_max(), low, bands)
}

/// `F_low * f_low + sum_j F_j * f_(j)`.
pub fn reconstruct(stack: &SubbandStack) -> Result<Image> {
    let bank = WindowBank::new(stack.grid(), stack.j_max())?;
    reconstruct_with(&bank, stack)
}

pub fn reconstruct_with(bank: &WindowBank, stack: &SubbandStack) -> Result<Image> {
    bank.grid().check(&stack.grid())?;
    if bank.j_max() != stack.j_max() {
        return Err(Error::Invalid(format!(
            "stack has j_max {} but the filter bank {}",
            stack.j_max(),
            bank.j_max()
        )));
    }
    let mut acc = stack.low.spectrum().multiply(bank.low());
    for (j, band) in &stack.bands {
        acc.axpy(1.0, &band.spectrum().multiply(bank.band(*j)));
    }
    Ok(acc.image())
}
