use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::ogm::{GraphObject, Ogm, OgmError};
use crate::term::{Iri, Literal};
use crate::vocab::{fc, fci};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    /// Tie-break order.
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn opposite(self) -> Self {
        match self {
            Direction::N => Direction::S,
            Direction::E => Direction::W,
            Direction::S => Direction::N,
            Direction::W => Direction::E,
        }
    }

    pub fn neighbor_property(self) -> Iri {
        match self {
            Direction::N => fc::has_north_neighbor(),
            Direction::E => fc::has_east_neighbor(),
            Direction::S => fc::has_south_neighbor(),
            Direction::W => fc::has_west_neighbor(),
        }
    }

    fn offset(self) -> (i64, i64) {
        match self {
            Direction::N => (0, -1),
            Direction::E => (1, 0),
            Direction::S => (0, 1),
            Direction::W => (-1, 0),
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Direction::N => "N",
            Direction::E => "E",
            Direction::S => "S",
            Direction::W => "W",
        };
        f.write_str(s)
    }
}

/// Module IRI for 1-based index `n` (row-major, row 0 is the northern row).
pub fn module_iri(n: usize) -> Iri {
    Iri::new(format!("{}Module{n}", fci::NS)).expect("module IRI")
}

/// A rectangular grid of conveyor modules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    pub width: usize,
    pub height: usize,
    /// Row-major; `modules[y * width + x]`.
    pub modules: Vec<Iri>,
    pub adjacency: BTreeMap<Iri, BTreeMap<Direction, Iri>>,
}

impl Topology {
    pub fn grid(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "grid needs at least one module");
        let modules: Vec<Iri> = (0..width * height).map(|i| module_iri(i + 1)).collect();
        let mut adjacency = BTreeMap::new();
        for y in 0..height {
            for x in 0..width {
                let mut nbrs = BTreeMap::new();
                for d in Direction::ALL {
                    let (dx, dy) = d.offset();
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx >= 0 && ny >= 0 && (nx as usize) < width && (ny as usize) < height {
                        nbrs.insert(d, modules[ny as usize * width + nx as usize].clone());
                    }
                }
                adjacency.insert(modules[y * width + x].clone(), nbrs);
            }
        }
        Self {
            width,
            height,
            modules,
            adjacency,
        }
    }

    pub fn index_of(&self, module: &Iri) -> Option<usize> {
        self.modules.iter().position(|m| m == module)
    }

    pub fn coords(&self, module: &Iri) -> Option<(usize, usize)> {
        self.index_of(module).map(|i| (i % self.width, i / self.width))
    }

    pub fn neighbor(&self, module: &Iri, direction: Direction) -> Option<&Iri> {
        self.adjacency.get(module).and_then(|n| n.get(&direction))
    }

    pub fn distance(&self, a: &Iri, b: &Iri) -> Option<usize> {
        let (ax, ay) = self.coords(a)?;
        let (bx, by) = self.coords(b)?;
        Some(ax.abs_diff(bx) + ay.abs_diff(by))
    }

    /// First step of a shortest path from `from` to `to`, ties broken N, E,
    /// S, W. With `exclude`, the best remaining direction is taken (possibly
    /// a detour); the excluded one is used only if nothing else exists.
    pub fn next_hop(&self, from: &Iri, to: &Iri, exclude: Option<Direction>) -> Option<Direction> {
        if from == to {
            return None;
        }
        let mut best: Option<(usize, Direction)> = None;
        for d in Direction::ALL {
            if Some(d) == exclude {
                continue;
            }
            let Some(n) = self.neighbor(from, d) else { continue };
            let dist = self.distance(n, to)?;
            if best.is_none_or(|(bd, _)| dist < bd) {
                best = Some((dist, d));
            }
        }
        best.map(|(_, d)| d).or_else(|| exclude.filter(|d| self.neighbor(from, *d).is_some()))
    }
}

/// Commits the grid's module individuals (coordinates and neighbor links)
/// in one transaction.
pub fn commit_topology(topology: &Topology, ogm: &Ogm) -> Result<(), OgmError> {
    let mut objects: Vec<GraphObject> = Vec::with_capacity(topology.modules.len());
    for (i, m) in topology.modules.iter().enumerate() {
        let mut o = ogm.create(&fc::flex_conveyor_module(), m)?;
        o.set_one(&fc::has_grid_x(), Literal::integer((i % topology.width) as i64))?;
        o.set_one(&fc::has_grid_y(), Literal::integer((i / topology.width) as i64))?;
        // South and west links follow as inverses.
        for d in [Direction::N, Direction::E] {
            if let Some(n) = topology.neighbor(m, d) {
                o.set_one(&d.neighbor_property(), n.clone())?;
            }
        }
        objects.push(o);
    }
    let mut refs: Vec<&mut GraphObject> = objects.iter_mut().collect();
    ogm.commit(&mut refs)?;
    Ok(())
}
