//! Binary image-space traversability masks.

use std::io::Cursor;
use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat};

use crate::error::{invalid_arg, Error, Result};

/// Row-major per-pixel traversability, `u` along a row, `v` down the image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(invalid_arg(format!(
                "mask data has {} pixels, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Mask {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: bool) {
        self.data[v * self.width + u] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// One pass of 4-neighbour erosion: a set pixel survives only if all of
    /// its in-image neighbours are set.
    pub fn eroded(&self) -> Mask {
        let (w, h) = (self.width, self.height);
        let mut out = self.clone();
        for v in 0..h {
            for u in 0..w {
                if !self.get(u, v) {
                    continue;
                }
                let border = (u > 0 && !self.get(u - 1, v))
                    || (u + 1 < w && !self.get(u + 1, v))
                    || (v > 0 && !self.get(u, v - 1))
                    || (v + 1 < h && !self.get(u, v + 1));
                if border {
                    out.set(u, v, false);
                }
            }
        }
        out
    }

    /// 3x3 majority vote; windows clipped at the image border vote over the
    /// pixels they contain, ties keep the centre value.
    pub fn majority_filtered(&self) -> Mask {
        let (w, h) = (self.width, self.height);
        let mut out = self.clone();
        for v in 0..h {
            for u in 0..w {
                let (mut set, mut total) = (0, 0);
                for vv in v.saturating_sub(1)..(v + 2).min(h) {
                    for uu in u.saturating_sub(1)..(u + 2).min(w) {
                        total += 1;
                        set += self.get(uu, vv) as usize;
                    }
                }
                if 2 * set != total {
                    out.set(u, v, 2 * set > total);
                }
            }
        }
        out
    }

    /// Decodes a PNM graymap; pixels >= 128 are traversable.
    pub fn from_pgm_bytes(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Pnm)
            .map_err(|e| Error::Parse(format!("mask: {e}")))?
            .to_luma8();
        let (w, h) = (img.width() as usize, img.height() as usize);
        let data = img.as_raw().iter().map(|&p| p >= 128).collect();
        Mask::from_vec(w, h, data)
    }

    /// Encodes as 8-bit binary PGM (P5) with 255 for traversable.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let pixels: Vec<u8> = self.data.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let mut out = Cursor::new(Vec::new());
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(
                &pixels,
                self.width as u32,
                self.height as u32,
                ExtendedColorType::L8,
            )
            .expect("in-memory PGM encoding");
        out.into_inner()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pgm_bytes()).map_err(|e| Error::io(path, e))
    }
}
