//! Binary morphology with disc structuring elements.

use alloc::vec::Vec;

use crate::grid::{Grid, Mask};

fn disc_offsets(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Pixels within Euclidean distance `radius` of a set pixel.
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    let (w, h) = mask.dims();
    let offsets = disc_offsets(radius);
    let mut out = Grid::filled(w, h, false);
    for y in 0..h {
        for x in 0..w {
            if !mask[(x, y)] {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x as isize + dx, y as isize + dy);
                if nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h {
                    out[(nx as usize, ny as usize)] = true;
                }
            }
        }
    }
    out
}

/// Pixels whose whole disc neighbourhood is set; outside the image counts as set.
pub fn erode(mask: &Mask, radius: usize) -> Mask {
    let (w, h) = mask.dims();
    let offsets = disc_offsets(radius);
    Grid::from_fn(w, h, |x, y| {
        offsets.iter().all(|&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h || mask[(nx as usize, ny as usize)]
        })
    })
}

/// Dilation followed by erosion.
pub fn close(mask: &Mask, radius: usize) -> Mask {
    erode(&dilate(mask, radius), radius)
}
