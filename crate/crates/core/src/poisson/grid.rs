use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{diameter, ConvexBody2D, Crossing};

/// Nodes closer than this fraction of the spacing to the boundary (along a
/// grid line) are treated as lying on it.
pub const SNAP: f64 = 1e-9;

/// Bodies with diameter / minimal width above this are rejected.
pub const MAX_ASPECT: f64 = 20.0;

/// The spacing must not exceed `diameter / MIN_CELLS_ACROSS`.
pub const MIN_CELLS_ACROSS: f64 = 32.0;

const ARC_BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Exterior,
    Regular,
    Irregular,
}

/// Stencil arm directions, in the order stored in [`CartesianGrid::cuts`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    East = 0,
    West = 1,
    North = 2,
    South = 3,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::East, Arm::West, Arm::North, Arm::South];

    pub fn offset(self) -> (i64, i64) {
        match self {
            Arm::East => (1, 0),
            Arm::West => (-1, 0),
            Arm::North => (0, 1),
            Arm::South => (0, -1),
        }
    }
}

/// A stencil arm shortened by the boundary: the boundary point sits at
/// `fraction * spacing` from the node, with outward normal angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmCut {
    pub fraction: f64,
    pub theta: f64,
}

/// Cartesian lattice `(i delta, j delta)` restricted to a box around the body,
/// with interior nodes numbered row by row.
#[derive(Debug, Clone)]
pub struct CartesianGrid {
    spacing: f64,
    i_min: i64,
    j_min: i64,
    nx: usize,
    ny: usize,
    kind: Vec<NodeKind>,
    unknown: Vec<u32>,
    interior: Vec<(i64, i64)>,
    cuts: Vec<[Option<ArmCut>; 4]>,
    columns: Vec<Option<(Crossing, Crossing)>>,
    rows: Vec<Option<(Crossing, Crossing)>>,
}

const NONE: u32 = u32::MAX;

/// Classifies the lattice nodes of spacing `delta` against `body`.
pub fn build_grid(body: &ConvexBody2D, delta: f64) -> Result<CartesianGrid> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "grid spacing must be positive, got {delta}"
        )));
    }
    let diam = diameter(body);
    if delta > diam / MIN_CELLS_ACROSS {
        return Err(Error::GridTooCoarse(format!(
            "spacing {delta} exceeds diameter / {MIN_CELLS_ACROSS} = {}",
            diam / MIN_CELLS_ACROSS
        )));
    }
    let aspect = diam / body.min_width();
    if aspect > MAX_ASPECT {
        return Err(Error::NeedleBody {
            aspect,
            limit: MAX_ASPECT,
        });
    }

    let (x_min, x_max) = body.x_range();
    let (y_min, y_max) = body.y_range();
    let i_min = (x_min / delta).floor() as i64 - 2;
    let i_max = (x_max / delta).ceil() as i64 + 2;
    let j_min = (y_min / delta).floor() as i64 - 2;
    let j_max = (y_max / delta).ceil() as i64 + 2;
    let nx = (i_max - i_min + 1) as usize;
    let ny = (j_max - j_min + 1) as usize;

    let columns: Vec<_> = (0..nx)
        .map(|a| body.column_crossings((i_min + a as i64) as f64 * delta))
        .collect();
    let rows: Vec<_> = (0..ny)
        .map(|b| body.row_crossings((j_min + b as i64) as f64 * delta))
        .collect();

    let snap = SNAP * delta;
    let mut kind = vec![NodeKind::Exterior; nx * ny];
    for (a, col) in columns.iter().enumerate() {
        if let Some((lo, hi)) = col {
            for b in 0..ny {
                let y = (j_min + b as i64) as f64 * delta;
                if y > lo.coord + snap && y < hi.coord - snap {
                    kind[a + nx * b] = NodeKind::Regular;
                }
            }
        }
    }

    let mut grid = CartesianGrid {
        spacing: delta,
        i_min,
        j_min,
        nx,
        ny,
        kind,
        unknown: vec![NONE; nx * ny],
        interior: Vec::new(),
        cuts: Vec::new(),
        columns,
        rows,
    };

    for b in 0..ny {
        for a in 0..nx {
            let k = a + nx * b;
            if grid.kind[k] == NodeKind::Exterior {
                continue;
            }
            let (i, j) = (i_min + a as i64, j_min + b as i64);
            let mut cuts = [None; 4];
            for arm in Arm::ALL {
                let (di, dj) = arm.offset();
                if grid.is_interior(i + di, j + dj) {
                    continue;
                }
                cuts[arm as usize] = Some(grid.arm_cut(i, j, arm));
            }
            if cuts.iter().any(Option::is_some) {
                grid.kind[k] = NodeKind::Irregular;
            }
            grid.unknown[k] = grid.interior.len() as u32;
            grid.interior.push((i, j));
            grid.cuts.push(cuts);
        }
    }

    if grid.interior.is_empty() {
        return Err(Error::GridTooCoarse("no interior nodes".into()));
    }
    let mut covered = [false; ARC_BINS];
    for cut in grid.cuts.iter().flatten().flatten() {
        let bin = ((cut.theta.rem_euclid(2.0 * PI) / (2.0 * PI)) * ARC_BINS as f64) as usize;
        covered[bin.min(ARC_BINS - 1)] = true;
    }
    if let Some(bin) = covered.iter().position(|c| !c) {
        return Err(Error::GridTooCoarse(format!(
            "boundary arc {bin} of {ARC_BINS} has no irregular node"
        )));
    }
    Ok(grid)
}

impl CartesianGrid {
    fn slot(&self, i: i64, j: i64) -> Option<usize> {
        let a = i - self.i_min;
        let b = j - self.j_min;
        if a < 0 || b < 0 || a >= self.nx as i64 || b >= self.ny as i64 {
            None
        } else {
            Some(a as usize + self.nx * b as usize)
        }
    }

    fn arm_cut(&self, i: i64, j: i64, arm: Arm) -> ArmCut {
        let delta = self.spacing;
        let (x, y) = (i as f64 * delta, j as f64 * delta);
        let col =
            self.columns[(i - self.i_min) as usize].expect("interior node has a column crossing");
        let row = self.rows[(j - self.j_min) as usize];
        let (dist, theta) = match (arm, row) {
            (Arm::North, _) => (col.1.coord - y, col.1.theta),
            (Arm::South, _) => (y - col.0.coord, col.0.theta),
            (Arm::East, Some(r)) => (r.1.coord - x, r.1.theta),
            (Arm::West, Some(r)) => (x - r.0.coord, r.0.theta),
            // a row through an interior node always meets the boundary
            (_, None) => (delta, if arm == Arm::East { 0.0 } else { PI }),
        };
        ArmCut {
            fraction: (dist / delta).clamp(SNAP, 1.0),
            theta,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Number of interior nodes (unknowns).
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn kind(&self, i: i64, j: i64) -> NodeKind {
        self.slot(i, j).map_or(NodeKind::Exterior, |k| self.kind[k])
    }

    pub fn is_interior(&self, i: i64, j: i64) -> bool {
        self.kind(i, j) != NodeKind::Exterior
    }

    /// Unknown index of lattice node `(i, j)`, if interior.
    pub fn unknown(&self, i: i64, j: i64) -> Option<usize> {
        self.slot(i, j)
            .map(|k| self.unknown[k])
            .filter(|&u| u != NONE)
            .map(|u| u as usize)
    }

    /// Lattice coordinates of the interior nodes, in unknown order.
    pub fn interior(&self) -> &[(i64, i64)] {
        &self.interior
    }

    pub fn position(&self, i: i64, j: i64) -> [f64; 2] {
        [i as f64 * self.spacing, j as f64 * self.spacing]
    }

    /// Boundary cuts of the four arms of unknown `u`.
    pub fn cuts(&self, u: usize) -> &[Option<ArmCut>; 4] {
        &self.cuts[u]
    }

    pub fn irregular_count(&self) -> usize {
        self.cuts
            .iter()
            .filter(|c| c.iter().any(Option::is_some))
            .count()
    }

    /// Lattice index range `(i_min, j_min, nx, ny)` of the bounding box.
    pub fn extent(&self) -> (i64, i64, usize, usize) {
        (self.i_min, self.j_min, self.nx, self.ny)
    }

    /// Boundary crossings of the vertical line with lattice index `i`.
    pub fn column(&self, i: i64) -> Option<(Crossing, Crossing)> {
        let a = i - self.i_min;
        if a < 0 || a >= self.nx as i64 {
            None
        } else {
            self.columns[a as usize]
        }
    }

    /// Boundary crossings of the horizontal line with lattice index `j`.
    pub fn row(&self, j: i64) -> Option<(Crossing, Crossing)> {
        let b = j - self.j_min;
        if b < 0 || b >= self.ny as i64 {
            None
        } else {
            self.rows[b as usize]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_body, translate, ConvexBody2D};

    #[test]
    fn disk_interior_count_matches_area() {
        let disk = ConvexBody2D::disk(1.0, 256).unwrap();
        let delta = 1.0 / 64.0;
        let grid = build_grid(&disk, delta).unwrap();
        let estimate = PI / (delta * delta);
        assert!((grid.len() as f64 - estimate).abs() < 0.02 * estimate);
        for &(i, j) in grid.interior() {
            assert!(disk.contains(grid.position(i, j)));
        }
        for u in 0..grid.len() {
            for cut in grid.cuts(u).iter().flatten() {
                assert!(cut.fraction > 0.0 && cut.fraction <= 1.0);
            }
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let disk = ConvexBody2D::disk(1.0, 256).unwrap();
        assert!(matches!(
            build_grid(&disk, 0.1),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn needle_body_is_rejected() {
        let needle = ConvexBody2D::ellipse(3.0, 0.14, 500, 1024).unwrap();
        assert!(matches!(
            build_grid(&needle, 1.0 / 32.0),
            Err(Error::NeedleBody { .. })
        ));
    }

    #[test]
    fn grid_aligned_translation_shifts_the_pattern() {
        let body = random_body(5, 5, 0.5, 256).unwrap();
        let delta = 1.0 / 64.0;
        let (si, sj) = (16_i64, -8_i64);
        let moved = translate(&body, [si as f64 * delta, sj as f64 * delta]).unwrap();
        let g0 = build_grid(&body, delta).unwrap();
        let g1 = build_grid(&moved, delta).unwrap();
        assert_eq!(g0.len(), g1.len());
        for (u, &(i, j)) in g0.interior().iter().enumerate() {
            let v = g1
                .unknown(i + si, j + sj)
                .expect("shifted node is interior");
            assert_eq!(g0.kind(i, j), g1.kind(i + si, j + sj));
            for (a, b) in g0.cuts(u).iter().zip(g1.cuts(v)) {
                match (a, b) {
                    (Some(a), Some(b)) => assert!((a.fraction - b.fraction).abs() < 1e-9),
                    (None, None) => {}
                    _ => panic!("cut pattern differs"),
                }
            }
        }
    }
}
