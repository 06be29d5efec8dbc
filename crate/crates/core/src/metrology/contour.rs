//! Iso-contours of depth rasters by marching squares.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::integration::DepthMap;
use crate::raster::Raster;

const HISTOGRAM_BINS: usize = 256;

/// Polyline in pixel coordinates. Closed contours do not repeat their
/// first point.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<(f64, f64)>,
    pub closed: bool,
}

impl Contour {
    pub fn length(&self) -> f64 {
        let seg = |a: &(f64, f64), b: &(f64, f64)| (a.0 - b.0).hypot(a.1 - b.1);
        let open: f64 = self.points.windows(2).map(|w| seg(&w[0], &w[1])).sum();
        match (self.closed, self.points.first(), self.points.last()) {
            (true, Some(a), Some(b)) => open + seg(b, a),
            _ => open,
        }
    }
}

/// Cell edge identifier: horizontal edges run from `(x, y)` to `(x+1, y)`,
/// vertical ones from `(x, y)` to `(x, y+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

/// Every iso-line of `z` at `iso`. A sample is inside when `z < iso`.
/// Saddle cells are resolved with the cell-center average.
pub fn iso_contours(z: &Raster<f64>, iso: f64) -> Vec<Contour> {
    let (w, h) = (z.width(), z.height());
    if w < 2 || h < 2 {
        return Vec::new();
    }
    let inside = |x: usize, y: usize| z.at(x, y) < iso;

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            let case = inside(x, y) as u8
                | (inside(x + 1, y) as u8) << 1
                | (inside(x + 1, y + 1) as u8) << 2
                | (inside(x, y + 1) as u8) << 3;
            let top = Edge::H(x, y);
            let right = Edge::V(x + 1, y);
            let bottom = Edge::H(x, y + 1);
            let left = Edge::V(x, y);
            let center_inside =
                || 0.25 * (z.at(x, y) + z.at(x + 1, y) + z.at(x + 1, y + 1) + z.at(x, y + 1)) < iso;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, top)),
                2 | 13 => segments.push((top, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, bottom)),
                6 | 9 => segments.push((top, bottom)),
                7 | 8 => segments.push((left, bottom)),
                5 => {
                    // corners 0 and 2 inside
                    if center_inside() {
                        segments.push((left, bottom));
                        segments.push((top, right));
                    } else {
                        segments.push((left, top));
                        segments.push((right, bottom));
                    }
                }
                10 => {
                    // corners 1 and 3 inside
                    if center_inside() {
                        segments.push((left, top));
                        segments.push((right, bottom));
                    } else {
                        segments.push((left, bottom));
                        segments.push((top, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let point = |e: Edge| -> (f64, f64) {
        let (a, b, pa, pb) = match e {
            Edge::H(x, y) => (
                z.at(x, y),
                z.at(x + 1, y),
                (x as f64, y as f64),
                (x as f64 + 1.0, y as f64),
            ),
            Edge::V(x, y) => (
                z.at(x, y),
                z.at(x, y + 1),
                (x as f64, y as f64),
                (x as f64, y as f64 + 1.0),
            ),
        };
        let t = (iso - a) / (b - a);
        (pa.0 + t * (pb.0 - pa.0), pa.1 + t * (pb.1 - pa.1))
    };

    // each edge is shared by at most two segments
    let mut adjacency: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (i, (a, b)) in segments.iter().enumerate() {
        adjacency.entry(*a).or_default().push(i);
        adjacency.entry(*b).or_default().push(i);
    }

    let mut used = vec![false; segments.len()];
    let mut contours = Vec::new();
    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> (Vec<Edge>, bool) {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (edges, true);
            }
            edges.push(next);
            at = next;
            match adjacency[&next].iter().find(|s| !used[**s]) {
                Some(s) => seg = *s,
                None => return (edges, false),
            }
        }
    };

    // open chains start at border edges touched by a single segment; walk
    // them in a fixed order so output is deterministic
    let mut ends: Vec<(Edge, usize)> = adjacency
        .iter()
        .filter(|(_, segs)| segs.len() == 1)
        .map(|(e, segs)| (*e, segs[0]))
        .collect();
    ends.sort_by_key(|(e, _)| edge_order(*e));
    for (edge, seg) in ends {
        if !used[seg] {
            let (edges, closed) = walk(seg, edge, &mut used);
            contours.push(Contour {
                points: edges.into_iter().map(point).collect(),
                closed,
            });
        }
    }
    for i in 0..segments.len() {
        if !used[i] {
            let (edges, closed) = walk(i, segments[i].0, &mut used);
            contours.push(Contour {
                points: edges.into_iter().map(point).collect(),
                closed,
            });
        }
    }
    contours
}

fn edge_order(e: Edge) -> (usize, usize, u8) {
    match e {
        Edge::H(x, y) => (y, x, 0),
        Edge::V(x, y) => (y, x, 1),
    }
}

/// Modal depth: the mean of the samples in the fullest of 256 histogram bins.
pub fn surface_reference(z: &Raster<f64>) -> f64 {
    let (lo, hi) = (z.min(), z.max());
    if !(hi > lo) {
        return lo;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let bin = |v: f64| (((v - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
    let mut counts = [0usize; HISTOGRAM_BINS];
    for v in z.as_slice() {
        counts[bin(*v)] += 1;
    }
    let peak = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let (sum, n) = z
        .as_slice()
        .iter()
        .filter(|v| bin(**v) == peak)
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Longest closed iso-contour `level` micrometers below the modal surface,
/// in micrometers.
pub fn extract_slice_contour(map: &DepthMap, level: f64) -> Result<Vec<(f64, f64)>> {
    slice_contour_at(map, surface_reference(&map.z), level)
}

pub(crate) fn slice_contour_at(
    map: &DepthMap,
    surface: f64,
    level: f64,
) -> Result<Vec<(f64, f64)>> {
    let floor = map.z.min();
    if !(level > 0.0 && level < surface - floor) {
        return Err(Error::NoContour { level });
    }
    let contours = iso_contours(&map.z, surface - level);
    let longest = contours
        .iter()
        .filter(|c| c.closed && c.points.len() >= 3)
        .max_by(|a, b| a.length().total_cmp(&b.length()));
    match longest {
        Some(c) => Ok(c
            .points
            .iter()
            .map(|(x, y)| (x * map.pixel_pitch, y * map.pixel_pitch))
            .collect()),
        None if contours.is_empty() => Err(Error::NoContour { level }),
        None => Err(Error::OpenContourOnly { level }),
    }
}
