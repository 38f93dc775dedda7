//! `ABGF` affine bilateral grid files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "ABGF" | version u32 = 1 | gw u32 | gh u32 | gd u32 | rows u32 = 3 | cols u32 = 4
//! guidance tag u8: 0 = fixed luma, 1 = LUT followed by K u32 and K f32 knots
//! gh*gw*gd*12 f32 coefficients: y-major, then x, then z, each cell 3x4 row-major
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::AffineBilateralGrid;
use crate::guidance::GuidanceCurve;
use crate::wire::{put_f32, put_u32, to_u32, Reader};

pub const MAGIC: &[u8; 4] = b"ABGF";
pub const VERSION: u32 = 1;

const TAG_FIXED_LUMA: u8 = 0;
const TAG_LUT: u8 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct GridFile {
    pub grid: AffineBilateralGrid<f32>,
    pub guidance: GuidanceCurve,
}

impl GridFile {
    pub fn new(grid: AffineBilateralGrid<f32>, guidance: GuidanceCurve) -> Self {
        Self { grid, guidance }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(41 + g.cells().len() * 48);
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, VERSION);
        put_u32(&mut out, to_u32(g.gw(), "gw")?);
        put_u32(&mut out, to_u32(g.gh(), "gh")?);
        put_u32(&mut out, to_u32(g.gd(), "gd")?);
        put_u32(&mut out, 3);
        put_u32(&mut out, 4);
        match &self.guidance {
            GuidanceCurve::FixedLuma => out.push(TAG_FIXED_LUMA),
            GuidanceCurve::PiecewiseLinearLut(knots) => {
                out.push(TAG_LUT);
                put_u32(&mut out, to_u32(knots.len(), "LUT knot count")?);
                for &k in knots {
                    put_f32(&mut out, k);
                }
            }
        }
        for v in g.coeffs() {
            put_f32(&mut out, v);
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.expect_magic(MAGIC)?;
        let at = r.offset();
        let version = r.u32("version")?;
        if version != VERSION {
            return Err(Error::parse(at, format!("unsupported ABGF version {version}")));
        }
        let dims_at = r.offset();
        let gw = r.u32("gw")? as usize;
        let gh = r.u32("gh")? as usize;
        let gd = r.u32("gd")? as usize;
        if gw == 0 || gh == 0 || gd == 0 {
            return Err(Error::parse(dims_at, format!("grid dimensions {gw}x{gh}x{gd} must be >= 1")));
        }
        let at = r.offset();
        let (rows, cols) = (r.u32("rows")?, r.u32("cols")?);
        if (rows, cols) != (3, 4) {
            return Err(Error::parse(at, format!("cells must be 3x4, got {rows}x{cols}")));
        }
        let tag_at = r.offset();
        let guidance = match r.u8("guidance tag")? {
            TAG_FIXED_LUMA => GuidanceCurve::FixedLuma,
            TAG_LUT => {
                let k = r.u32("LUT knot count")? as usize;
                let knots_at = r.offset();
                let knots = r.f32s(k, "LUT knots")?;
                GuidanceCurve::lut(knots).map_err(|e| Error::parse(knots_at, e.to_string()))?
            }
            other => return Err(Error::parse(tag_at, format!("unknown guidance tag {other}"))),
        };
        let count = gw
            .checked_mul(gh)
            .and_then(|v| v.checked_mul(gd))
            .and_then(|v| v.checked_mul(12))
            .ok_or_else(|| Error::parse(dims_at, "grid size overflows"))?;
        let payload_at = r.offset();
        let coeffs = r.f32s(count, "grid payload")?;
        r.expect_end()?;
        let grid = AffineBilateralGrid::from_coeffs(gw, gh, gd, &coeffs)
            .map_err(|e| Error::parse(payload_at, e.to_string()))?;
        Ok(Self { grid, guidance })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode()?)?;
        Ok(())
    }
}
