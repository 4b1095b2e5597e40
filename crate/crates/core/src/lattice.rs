//! Periodic lattices, bond enumeration and connected block shapes.
//!
//! Lattice offsets are stored as `[i32; 3]` with unused trailing axes set to
//! zero. The triangular lattice uses axial coordinates with neighbor vectors
//! `(1,0)`, `(0,1)`, `(-1,1)` and their negatives.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Offset = [i32; 3];

/// Largest block size accepted by shape enumeration.
pub const MAX_BLOCK_SIZE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain1d,
    Square2d,
    Cubic3d,
    Triangular2d,
}

const CHAIN_DIRS: [(Offset, &str); 2] = [([1, 0, 0], "+x"), ([-1, 0, 0], "-x")];
const SQUARE_DIRS: [(Offset, &str); 4] = [
    ([1, 0, 0], "+x"),
    ([-1, 0, 0], "-x"),
    ([0, 1, 0], "+y"),
    ([0, -1, 0], "-y"),
];
const CUBIC_DIRS: [(Offset, &str); 6] = [
    ([1, 0, 0], "+x"),
    ([-1, 0, 0], "-x"),
    ([0, 1, 0], "+y"),
    ([0, -1, 0], "-y"),
    ([0, 0, 1], "+z"),
    ([0, 0, -1], "-z"),
];
const TRIANGULAR_DIRS: [(Offset, &str); 6] = [
    ([1, 0, 0], "+a"),
    ([-1, 0, 0], "-a"),
    ([0, 1, 0], "+b"),
    ([0, -1, 0], "-b"),
    ([-1, 1, 0], "+c"),
    ([1, -1, 0], "-c"),
];

impl LatticeKind {
    pub const ALL: [LatticeKind; 4] = [
        LatticeKind::Chain1d,
        LatticeKind::Square2d,
        LatticeKind::Cubic3d,
        LatticeKind::Triangular2d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Chain1d => "chain1d",
            LatticeKind::Square2d => "square2d",
            LatticeKind::Cubic3d => "cubic3d",
            LatticeKind::Triangular2d => "triangular2d",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            LatticeKind::Chain1d => 1,
            LatticeKind::Square2d | LatticeKind::Triangular2d => 2,
            LatticeKind::Cubic3d => 3,
        }
    }

    /// Coordination number z.
    pub fn coordination(self) -> usize {
        self.directions().len()
    }

    /// Neighbor vectors with their labels; even positions hold the
    /// "positive" half used for bond enumeration.
    pub fn directions(self) -> &'static [(Offset, &'static str)] {
        match self {
            LatticeKind::Chain1d => &CHAIN_DIRS,
            LatticeKind::Square2d => &SQUARE_DIRS,
            LatticeKind::Cubic3d => &CUBIC_DIRS,
            LatticeKind::Triangular2d => &TRIANGULAR_DIRS,
        }
    }

    pub fn is_neighbor_vector(self, d: Offset) -> bool {
        self.directions().iter().any(|(v, _)| *v == d)
    }

    /// Point group as integer matrices acting on offsets (row-major).
    pub fn point_group(self) -> Vec<[[i32; 3]; 3]> {
        match self {
            LatticeKind::Chain1d => vec![
                [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                [[-1, 0, 0], [0, 1, 0], [0, 0, 1]],
            ],
            LatticeKind::Square2d => signed_permutations(2),
            LatticeKind::Cubic3d => signed_permutations(3),
            LatticeKind::Triangular2d => {
                // 60 degree rotation: (x, y) -> (-y, x + y); reflection swaps axes.
                let rot = [[0, -1, 0], [1, 1, 0], [0, 0, 1]];
                let swap = [[0, 1, 0], [1, 0, 0], [0, 0, 1]];
                let mut ops = Vec::with_capacity(12);
                let mut r = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
                for _ in 0..6 {
                    ops.push(r);
                    ops.push(mat_mul(&r, &swap));
                    r = mat_mul(&rot, &r);
                }
                ops
            }
        }
    }
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LatticeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown lattice '{s}'")))
    }
}

fn signed_permutations(dim: usize) -> Vec<[[i32; 3]; 3]> {
    let perms: Vec<Vec<usize>> = match dim {
        2 => vec![vec![0, 1], vec![1, 0]],
        3 => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
        _ => unreachable!(),
    };
    let mut ops = Vec::new();
    for p in &perms {
        for signs in 0..(1u32 << dim) {
            let mut m = [[0; 3]; 3];
            for (row, &col) in p.iter().enumerate() {
                m[row][col] = if signs >> row & 1 == 1 { -1 } else { 1 };
            }
            for row in dim..3 {
                m[row][row] = 1;
            }
            ops.push(m);
        }
    }
    ops
}

fn mat_mul(a: &[[i32; 3]; 3], b: &[[i32; 3]; 3]) -> [[i32; 3]; 3] {
    let mut out = [[0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn apply(m: &[[i32; 3]; 3], v: Offset) -> Offset {
    let mut out = [0; 3];
    for (i, row) in m.iter().enumerate() {
        out[i] = row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
    }
    out
}

fn add(a: Offset, b: Offset) -> Offset {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: Offset, b: Offset) -> Offset {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// A finite periodic lattice (torus).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub kind: LatticeKind,
    pub extent: Vec<usize>,
}

impl LatticeSpec {
    pub fn new(kind: LatticeKind, extent: &[usize]) -> Result<Self> {
        if extent.len() != kind.dim() {
            return Err(Error::invalid(format!(
                "{kind} needs {} extents, got {}",
                kind.dim(),
                extent.len()
            )));
        }
        if let Some(&e) = extent.iter().find(|&&e| e < 3) {
            return Err(Error::invalid(format!(
                "extent {e} < 3 would create double bonds on the torus"
            )));
        }
        Ok(LatticeSpec {
            kind,
            extent: extent.to_vec(),
        })
    }

    pub fn chain(n: usize) -> Result<Self> {
        Self::new(LatticeKind::Chain1d, &[n])
    }

    pub fn square(lx: usize, ly: usize) -> Result<Self> {
        Self::new(LatticeKind::Square2d, &[lx, ly])
    }

    pub fn cubic(lx: usize, ly: usize, lz: usize) -> Result<Self> {
        Self::new(LatticeKind::Cubic3d, &[lx, ly, lz])
    }

    pub fn triangular(lx: usize, ly: usize) -> Result<Self> {
        Self::new(LatticeKind::Triangular2d, &[lx, ly])
    }

    pub fn num_sites(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn coordination(&self) -> usize {
        self.kind.coordination()
    }

    pub fn num_bonds(&self) -> usize {
        self.coordination() * self.num_sites() / 2
    }

    fn extent3(&self) -> [i32; 3] {
        let mut e = [1; 3];
        for (i, &x) in self.extent.iter().enumerate() {
            e[i] = x as i32;
        }
        e
    }

    pub fn coords(&self, site: usize) -> Offset {
        let e = self.extent3();
        let s = site as i32;
        [s % e[0], (s / e[0]) % e[1], s / (e[0] * e[1])]
    }

    /// Site index of an arbitrary (possibly out-of-range) offset, wrapped.
    pub fn index(&self, r: Offset) -> usize {
        let e = self.extent3();
        let w: Vec<i32> = (0..3).map(|i| r[i].rem_euclid(e[i])).collect();
        (w[0] + e[0] * (w[1] + e[1] * w[2])) as usize
    }

    pub fn neighbors(&self, site: usize) -> Vec<usize> {
        let r = self.coords(site);
        self.kind
            .directions()
            .iter()
            .map(|(d, _)| self.index(add(r, *d)))
            .collect()
    }

    /// Geometric triangles of the triangular torus: one up and one down
    /// triangle per site.
    pub fn triangles(&self) -> Result<Vec<[usize; 3]>> {
        if self.kind != LatticeKind::Triangular2d {
            return Err(Error::unsupported("triangles exist only on triangular2d"));
        }
        let mut out = Vec::with_capacity(2 * self.num_sites());
        for s in 0..self.num_sites() {
            let r = self.coords(s);
            out.push([s, self.index(add(r, [1, 0, 0])), self.index(add(r, [0, 1, 0]))]);
            out.push([s, self.index(add(r, [1, 0, 0])), self.index(add(r, [1, -1, 0]))]);
        }
        Ok(out)
    }
}

/// All bonds of the torus as `(i, j)` with `i < j`, in deterministic order.
pub fn enumerate_bonds(lattice: &LatticeSpec) -> Vec<(usize, usize)> {
    let mut bonds = Vec::with_capacity(lattice.num_bonds());
    for s in 0..lattice.num_sites() {
        let r = lattice.coords(s);
        for (d, _) in lattice.kind.directions().iter().step_by(2) {
            let t = lattice.index(add(r, *d));
            bonds.push((s.min(t), s.max(t)));
        }
    }
    bonds
}

/// A connected block of lattice sites on the infinite lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockShape {
    pub lattice: LatticeKind,
    pub sites: Vec<Offset>,
    pub internal_bonds: Vec<(usize, usize)>,
    /// Per site: direction label -> number of bonds leaving the block.
    pub boundary_counts: Vec<BTreeMap<String, usize>>,
    pub canonical_id: String,
}

/// Serializable view of a [`BlockShape`] with offsets trimmed to the
/// lattice dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeRecord {
    pub lattice: LatticeKind,
    pub canonical_id: String,
    pub size: usize,
    pub sites: Vec<Vec<i32>>,
    pub internal_bonds: Vec<(usize, usize)>,
    pub boundary_counts: Vec<BTreeMap<String, usize>>,
}

impl BlockShape {
    /// Build a shape from offsets. The offsets are kept in the given order.
    pub fn from_sites(lattice: LatticeKind, sites: &[Offset]) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::invalid("empty block"));
        }
        let set: BTreeSet<Offset> = sites.iter().copied().collect();
        if set.len() != sites.len() {
            return Err(Error::invalid("repeated site in block"));
        }
        let mut internal_bonds = Vec::new();
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                if lattice.is_neighbor_vector(sub(sites[j], sites[i])) {
                    internal_bonds.push((i, j));
                }
            }
        }
        let boundary_counts = sites
            .iter()
            .map(|&r| {
                lattice
                    .directions()
                    .iter()
                    .filter(|(d, _)| !set.contains(&add(r, *d)))
                    .map(|(_, label)| (label.to_string(), 1))
                    .collect()
            })
            .collect();
        let shape = BlockShape {
            lattice,
            sites: sites.to_vec(),
            internal_bonds,
            boundary_counts,
            canonical_id: canonical_id(lattice, sites),
        };
        if !shape.is_connected() {
            return Err(Error::invalid("block is not connected"));
        }
        Ok(shape)
    }

    pub fn size(&self) -> usize {
        self.sites.len()
    }

    pub fn internal_degree(&self, site: usize) -> usize {
        self.internal_bonds
            .iter()
            .filter(|(a, b)| *a == site || *b == site)
            .count()
    }

    pub fn boundary_total(&self, site: usize) -> usize {
        self.boundary_counts[site].values().sum()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(s) = stack.pop() {
            for &(a, b) in &self.internal_bonds {
                let other = if a == s {
                    b
                } else if b == s {
                    a
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    stack.push(other);
                }
            }
        }
        seen.into_iter().all(|x| x)
    }

    pub fn to_record(&self) -> ShapeRecord {
        let dim = self.lattice.dim();
        ShapeRecord {
            lattice: self.lattice,
            canonical_id: self.canonical_id.clone(),
            size: self.size(),
            sites: self.sites.iter().map(|r| r[..dim].to_vec()).collect(),
            internal_bonds: self.internal_bonds.clone(),
            boundary_counts: self.boundary_counts.clone(),
        }
    }
}

fn normalized(mut sites: Vec<Offset>) -> Vec<Offset> {
    sites.sort_unstable();
    let origin = sites[0];
    sites.iter_mut().for_each(|r| *r = sub(*r, origin));
    sites
}

/// Representative of the orbit of `sites` under translations and the
/// lattice point group.
pub fn canonical_form(lattice: LatticeKind, sites: &[Offset]) -> Vec<Offset> {
    lattice
        .point_group()
        .iter()
        .map(|m| normalized(sites.iter().map(|&r| apply(m, r)).collect()))
        .min()
        .expect("point group is never empty")
}

pub fn canonical_id(lattice: LatticeKind, sites: &[Offset]) -> String {
    let dim = lattice.dim();
    let body: Vec<String> = canonical_form(lattice, sites)
        .iter()
        .map(|r| {
            r[..dim]
                .iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect();
    format!("{}:{}", lattice.name(), body.join(";"))
}

/// All connected shapes of 1..=k sites up to translation and point-group
/// symmetry, ordered by size then canonical id.
pub fn enumerate_block_shapes(lattice: LatticeKind, k: usize) -> Result<Vec<BlockShape>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > MAX_BLOCK_SIZE {
        return Err(Error::BlockSizeCap(k));
    }
    let mut level: BTreeSet<Vec<Offset>> = BTreeSet::new();
    level.insert(vec![[0, 0, 0]]);
    let mut all: Vec<Vec<Offset>> = level.iter().cloned().collect();
    for _ in 1..k {
        let mut next = BTreeSet::new();
        for shape in &level {
            let members: BTreeSet<Offset> = shape.iter().copied().collect();
            for &r in shape {
                for (d, _) in lattice.directions() {
                    let cand = add(r, *d);
                    if members.contains(&cand) {
                        continue;
                    }
                    let mut grown = shape.clone();
                    grown.push(cand);
                    next.insert(canonical_form(lattice, &grown));
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all.iter()
        .map(|sites| BlockShape::from_sites(lattice, sites))
        .collect()
}

/// Triangles touching a one- or two-site block on the triangular lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleIncidence {
    /// Every incident triangle, each as sorted offsets.
    pub triangles: Vec<[Offset; 3]>,
    /// Triangles containing two block sites (type B with the entangled pair inside).
    pub shared: usize,
    /// Per block site: incident triangles containing no other block site.
    pub exclusive_per_site: Vec<usize>,
}

impl TriangleIncidence {
    pub fn total(&self) -> usize {
        self.triangles.len()
    }
}

fn triangles_at(r: Offset) -> Vec<[Offset; 3]> {
    let dirs = LatticeKind::Triangular2d.directions();
    let mut out = BTreeSet::new();
    for (d1, _) in dirs {
        for (d2, _) in dirs {
            if d1 < d2 && LatticeKind::Triangular2d.is_neighbor_vector(sub(*d2, *d1)) {
                let mut t = [r, add(r, *d1), add(r, *d2)];
                t.sort_unstable();
                out.insert(t);
            }
        }
    }
    out.into_iter().collect()
}

pub fn triangle_incidence(shape: &BlockShape) -> Result<TriangleIncidence> {
    if shape.lattice != LatticeKind::Triangular2d {
        return Err(Error::unsupported("triangle incidence needs a triangular2d shape"));
    }
    if shape.size() > 2 {
        return Err(Error::unsupported(
            "triangle incidence is defined for blocks of at most two sites",
        ));
    }
    let members: BTreeSet<Offset> = shape.sites.iter().copied().collect();
    let triangles: BTreeSet<[Offset; 3]> = shape.sites.iter().flat_map(|&r| triangles_at(r)).collect();
    let mut shared = 0;
    let mut exclusive_per_site = vec![0; shape.size()];
    for t in &triangles {
        let inside: Vec<usize> = shape
            .sites
            .iter()
            .enumerate()
            .filter(|(_, r)| t.contains(r))
            .map(|(i, _)| i)
            .collect();
        debug_assert!(inside.iter().all(|i| members.contains(&shape.sites[*i])));
        match inside.as_slice() {
            [i] => exclusive_per_site[*i] += 1,
            _ => shared += 1,
        }
    }
    Ok(TriangleIncidence {
        triangles: triangles.into_iter().collect(),
        shared,
        exclusive_per_site,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bond_counts() {
        assert_eq!(enumerate_bonds(&LatticeSpec::chain(6).unwrap()).len(), 6);
        assert_eq!(enumerate_bonds(&LatticeSpec::square(4, 4).unwrap()).len(), 32);
        assert_eq!(enumerate_bonds(&LatticeSpec::triangular(4, 4).unwrap()).len(), 48);
        assert_eq!(enumerate_bonds(&LatticeSpec::cubic(3, 3, 4).unwrap()).len(), 108);
    }

    #[test]
    fn small_extent_rejected() {
        assert!(LatticeSpec::chain(2).is_err());
        assert!(LatticeSpec::square(4, 2).is_err());
        assert!(LatticeSpec::new(LatticeKind::Square2d, &[4]).is_err());
    }

    #[test]
    fn every_site_has_z_distinct_neighbors() {
        for lat in [
            LatticeSpec::chain(3).unwrap(),
            LatticeSpec::square(3, 4).unwrap(),
            LatticeSpec::cubic(3, 3, 3).unwrap(),
            LatticeSpec::triangular(3, 3).unwrap(),
            LatticeSpec::triangular(4, 5).unwrap(),
        ] {
            let bonds = enumerate_bonds(&lat);
            let distinct: BTreeSet<_> = bonds.iter().collect();
            assert_eq!(distinct.len(), bonds.len(), "double bond on {lat:?}");
            for s in 0..lat.num_sites() {
                let nb: BTreeSet<usize> = lat.neighbors(s).into_iter().collect();
                assert_eq!(nb.len(), lat.coordination());
                assert!(!nb.contains(&s));
                let deg = bonds.iter().filter(|(a, b)| *a == s || *b == s).count();
                assert_eq!(deg, lat.coordination());
            }
        }
    }

    #[test]
    fn chain_shapes_are_segments() {
        let shapes = enumerate_block_shapes(LatticeKind::Chain1d, 3).unwrap();
        assert_eq!(shapes.len(), 3);
        for (i, s) in shapes.iter().enumerate() {
            assert_eq!(s.size(), i + 1);
            assert_eq!(s.internal_bonds.len(), i);
        }
    }

    #[test]
    fn square_domino_boundary() {
        let shapes = enumerate_block_shapes(LatticeKind::Square2d, 2).unwrap();
        let domino = &shapes[1];
        assert_eq!(domino.size(), 2);
        assert_eq!(domino.boundary_total(0), 3);
        assert_eq!(domino.boundary_total(1), 3);
    }

    #[test]
    fn point_groups_preserve_neighbors() {
        for kind in LatticeKind::ALL {
            let ops = kind.point_group();
            let expected = match kind {
                LatticeKind::Chain1d => 2,
                LatticeKind::Square2d => 8,
                LatticeKind::Cubic3d => 48,
                LatticeKind::Triangular2d => 12,
            };
            let distinct: BTreeSet<_> = ops.iter().collect();
            assert_eq!(distinct.len(), expected);
            for m in &ops {
                for (d, _) in kind.directions() {
                    assert!(kind.is_neighbor_vector(apply(m, *d)));
                }
            }
        }
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            enumerate_block_shapes(LatticeKind::Square2d, 7),
            Err(Error::BlockSizeCap(7))
        ));
        assert!(enumerate_block_shapes(LatticeKind::Square2d, 0).is_err());
        assert!(BlockShape::from_sites(LatticeKind::Square2d, &[[0, 0, 0], [2, 0, 0]]).is_err());
    }

    #[test]
    fn incidence_counts() {
        let mono = BlockShape::from_sites(LatticeKind::Triangular2d, &[[0, 0, 0]]).unwrap();
        let inc = triangle_incidence(&mono).unwrap();
        assert_eq!(inc.total(), 6);
        assert_eq!(inc.exclusive_per_site, vec![6]);
        for d in [[1, 0, 0], [0, 1, 0], [-1, 1, 0]] {
            let pair = BlockShape::from_sites(LatticeKind::Triangular2d, &[[0, 0, 0], d]).unwrap();
            let inc = triangle_incidence(&pair).unwrap();
            assert_eq!(inc.total(), 10);
            assert_eq!(inc.shared, 2);
            assert_eq!(inc.exclusive_per_site, vec![4, 4]);
        }
        let tri = enumerate_block_shapes(LatticeKind::Triangular2d, 3).unwrap();
        assert!(triangle_incidence(tri.last().unwrap()).is_err());
    }
}
