//! Hexagonal lattice construction and geometry.
//!
//! Cells are addressed with integer axial coordinates `(q, r)`. The center
//! cell is `(0, 0)` and the l-th ring around it holds exactly `6l` cells,
//! so a lattice with `L` rings has `3L(L+1) + 1` cells in total. Node ids
//! are assigned in spiral order (center first, then ring by ring), which
//! makes id 0 the center node.
//!
//! Euclidean positions derive from the cell side length `a`: neighboring
//! cell centers sit exactly `sqrt(3) * a` apart. Perturbed placement adds a
//! per-node offset drawn uniformly from a disk of radius `eps * a`, with
//! `eps < 3/4` so the perturbed interference bound stays valid.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Axial step vectors to the six neighboring cells.
pub const DIRECTIONS: [(i32, i32); 6] = [(1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)];

/// Default perturbation radius (in units of the cell side length) when
/// perturbed placement is requested without an explicit value.
pub const DEFAULT_EPSILON: f64 = 0.25;

/// Largest admissible perturbation radius, exclusive.
pub const EPSILON_LIMIT: f64 = 0.75;

/// Node placement rule within each cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Every node sits exactly on its cell center.
    Regular,
    /// Each node is offset uniformly within a disk of radius `eps * a`.
    Perturbed(f64),
}

impl Placement {
    /// Perturbed placement with the default radius.
    pub fn perturbed_default() -> Self {
        Placement::Perturbed(DEFAULT_EPSILON)
    }
}

/// One cell/node of the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HexSite {
    /// Axial coordinate along the first lattice axis.
    pub q: i32,
    /// Axial coordinate along the second lattice axis.
    pub r: i32,
    /// Offset of the node from the cell center, in length units.
    pub offset: [f64; 2],
}

/// An immutable hexagonal lattice of nodes.
#[derive(Debug, Clone)]
pub struct Lattice {
    side: f64,
    rings: u32,
    placement: Placement,
    seed: u64,
    sites: Vec<HexSite>,
    index: HashMap<(i32, i32), u32>,
}

/// Number of sites in a lattice with `rings` rings: `3L(L+1) + 1`.
pub fn site_count(rings: u32) -> u64 {
    3 * rings as u64 * (rings as u64 + 1) + 1
}

/// Smallest ring count whose lattice holds at least `n` sites.
pub fn covering_rings(n: u64) -> u32 {
    let mut rings = 0;
    while site_count(rings) < n {
        rings += 1;
    }
    rings
}

/// Hexagonal grid distance between two axial coordinates.
pub fn axial_distance(a: (i32, i32), b: (i32, i32)) -> u32 {
    let dq = (a.0 - b.0) as i64;
    let dr = (a.1 - b.1) as i64;
    ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
}

/// Axial coordinates of the `6l` cells on ring `l`, in walk order.
///
/// Ring 0 yields the single center cell.
pub fn ring_coordinates(l: u32) -> Vec<(i32, i32)> {
    if l == 0 {
        return vec![(0, 0)];
    }
    let l = l as i32;
    let mut out = Vec::with_capacity(6 * l as usize);
    // Start on the (-1, 1) spoke and walk around the ring.
    let mut cell = (-l, l);
    for dir in DIRECTIONS {
        for _ in 0..l {
            out.push(cell);
            cell = (cell.0 + dir.0, cell.1 + dir.1);
        }
    }
    out
}

/// Builds a lattice with `rings` rings around the center cell.
///
/// Perturbation offsets are drawn uniformly from the disk of radius
/// `eps * a`, in node-id order from a stream seeded with `seed`, so the
/// same seed reproduces the same lattice bit for bit.
pub fn build_lattice(rings: u32, side: f64, placement: Placement, seed: u64) -> Result<Lattice> {
    assert!(side > 0.0, "cell side length must be positive");
    if let Placement::Perturbed(eps) = placement {
        if !(0.0..EPSILON_LIMIT).contains(&eps) {
            return Err(Error::EpsilonOutOfRange(eps));
        }
    }

    let total = site_count(rings) as usize;
    let mut sites = Vec::with_capacity(total);
    let mut index = HashMap::with_capacity(total);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    for l in 0..=rings {
        for (q, r) in ring_coordinates(l) {
            let offset = match placement {
                Placement::Regular => [0.0, 0.0],
                Placement::Perturbed(eps) => {
                    let radius = eps * side * rng.gen::<f64>().sqrt();
                    let angle = std::f64::consts::TAU * rng.gen::<f64>();
                    [radius * angle.cos(), radius * angle.sin()]
                }
            };
            index.insert((q, r), sites.len() as u32);
            sites.push(HexSite { q, r, offset });
        }
    }

    Ok(Lattice {
        side,
        rings,
        placement,
        seed,
        sites,
        index,
    })
}

impl Lattice {
    /// Cell side length `a`.
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Distance between neighboring cell centers, `sqrt(3) * a`.
    pub fn spacing(&self) -> f64 {
        3f64.sqrt() * self.side
    }

    /// Number of rings around the center cell.
    pub fn rings(&self) -> u32 {
        self.rings
    }

    /// Total node count.
    pub fn len(&self) -> u32 {
        self.sites.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn placement(&self) -> Placement {
        self.placement
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sites(&self) -> &[HexSite] {
        &self.sites
    }

    pub fn site(&self, id: u32) -> Result<&HexSite> {
        self.sites.get(id as usize).ok_or(Error::NodeOutOfRange {
            id,
            count: self.len(),
        })
    }

    /// Node id occupying the cell at `(q, r)`, if inside the lattice.
    pub fn id_at(&self, coord: (i32, i32)) -> Option<u32> {
        self.index.get(&coord).copied()
    }

    /// Center position of the cell holding node `id`.
    pub fn cell_center(&self, id: u32) -> Result<[f64; 2]> {
        let site = self.site(id)?;
        Ok(self.center_of(site.q, site.r))
    }

    fn center_of(&self, q: i32, r: i32) -> [f64; 2] {
        let s = self.spacing();
        [
            s * (q as f64 + r as f64 / 2.0),
            s * 3f64.sqrt() / 2.0 * r as f64,
        ]
    }

    /// Actual (possibly perturbed) node position.
    pub fn position(&self, id: u32) -> Result<[f64; 2]> {
        let site = self.site(id)?;
        let center = self.center_of(site.q, site.r);
        Ok([center[0] + site.offset[0], center[1] + site.offset[1]])
    }

    /// Euclidean distance between the positions of nodes `i` and `j`.
    pub fn euclidean(&self, i: u32, j: u32) -> Result<f64> {
        let a = self.position(i)?;
        let b = self.position(j)?;
        Ok(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
    }

    /// Hexagonal hop distance between the cells of nodes `i` and `j`.
    pub fn hop_distance(&self, i: u32, j: u32) -> Result<u32> {
        let a = self.site(i)?;
        let b = self.site(j)?;
        Ok(axial_distance((a.q, a.r), (b.q, b.r)))
    }

    /// Ring index of node `id` (its hop distance from the center cell).
    pub fn ring_of(&self, id: u32) -> Result<u32> {
        let site = self.site(id)?;
        Ok(axial_distance((site.q, site.r), (0, 0)))
    }

    /// Ids of the up-to-six neighbors of `id` that exist in the lattice.
    pub fn neighbors(&self, id: u32) -> Result<Vec<u32>> {
        let site = self.site(id)?;
        let mut out = Vec::with_capacity(6);
        for dir in DIRECTIONS {
            if let Some(n) = self.id_at((site.q + dir.0, site.r + dir.1)) {
                out.push(n);
            }
        }
        Ok(out)
    }

    /// Ids on ring `l` around the center, in walk order.
    pub fn ring_ids(&self, l: u32) -> Vec<u32> {
        ring_coordinates(l)
            .into_iter()
            .filter_map(|c| self.id_at(c))
            .collect()
    }

    /// Node nearest to `point` by Euclidean distance, ties broken by
    /// lowest id. Panics on an empty lattice.
    pub fn nearest_node(&self, point: [f64; 2]) -> u32 {
        let mut best = 0u32;
        let mut best_d2 = f64::INFINITY;
        for id in 0..self.len() {
            let p = self.position(id).expect("id in range");
            let d2 = (p[0] - point[0]).powi(2) + (p[1] - point[1]).powi(2);
            if d2 < best_d2 {
                best_d2 = d2;
                best = id;
            }
        }
        best
    }
}

/// Exact minimum and maximum center-to-center distances from an interior
/// node to the `6r` cells of its r-th ring, by enumeration.
pub fn ring_distance_bounds(r: u32, side: f64) -> Result<(f64, f64)> {
    if r == 0 {
        return Err(Error::RingOutOfRange {
            ring: 0,
            reason: "ring distance bounds need r >= 1",
        });
    }
    let spacing = 3f64.sqrt() * side;
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for (q, r_ax) in ring_coordinates(r) {
        let x = spacing * (q as f64 + r_ax as f64 / 2.0);
        let y = spacing * 3f64.sqrt() / 2.0 * r_ax as f64;
        let d = (x * x + y * y).sqrt();
        min = min.min(d);
        max = max.max(d);
    }
    Ok((min, max))
}
