use alloc::vec;
use alloc::vec::Vec;

use super::EngineError;
use crate::circuit::VarId;

/// Axis-aligned block of pixels `[top, top+height) × [left, left+width)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    /// Row-major pixel ids, `row·image_width + column`, ascending.
    pub vars: Vec<VarId>,
    /// Child regions in top-left, top-right, bottom-left, bottom-right order.
    pub children: Vec<usize>,
}

impl Region {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// Quad-tree over an image; regions are stored children-first and the root
/// is the last region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionGraph {
    pub height: usize,
    pub width: usize,
    pub regions: Vec<Region>,
}

impl RegionGraph {
    pub fn root(&self) -> usize {
        self.regions.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.height * self.width
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.regions.len()).filter(|&r| self.regions[r].is_leaf())
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves().count()
    }
}

/// Recursively splits the grid at the row and column midpoints, rounding
/// the first half up (7 → 4 + 3), down to single pixels.
pub fn build_quadtree(height: usize, width: usize) -> Result<RegionGraph, EngineError> {
    if height == 0 || width == 0 {
        return Err(EngineError::Shape { height, width });
    }
    let mut regions = Vec::new();
    split(&mut regions, width, 0, 0, height, width);
    Ok(RegionGraph { height, width, regions })
}

fn split(out: &mut Vec<Region>, image_width: usize, top: usize, left: usize, height: usize, width: usize) -> usize {
    let mut children = Vec::new();
    if height > 1 || width > 1 {
        let rows = if height > 1 { vec![(top, height.div_ceil(2)), (top + height.div_ceil(2), height / 2)] } else { vec![(top, 1)] };
        let cols = if width > 1 { vec![(left, width.div_ceil(2)), (left + width.div_ceil(2), width / 2)] } else { vec![(left, 1)] };
        for &(t, h) in &rows {
            for &(l, w) in &cols {
                children.push(split(out, image_width, t, l, h, w));
            }
        }
    }
    let mut vars = Vec::with_capacity(height * width);
    for r in top..top + height {
        for c in left..left + width {
            vars.push((r * image_width + c) as VarId);
        }
    }
    out.push(Region { top, left, height, width, vars, children });
    out.len() - 1
}
