//! Boxes of `Z^d`, vertex and edge fields, discrete gradient and divergence.
//!
//! A box `x + Λ_L` is stored together with its external vertex boundary. Vertices are addressed
//! by their row-major offset inside the bounding cube of `Λ⁺` (side `2L + 3`); the corners of
//! that cube belong to neither `Λ` nor `∂Λ` when `d ≥ 2` and are never exposed.

use crate::{Error, Result};

/// A lattice point of `Z^d`.
pub type Point = Vec<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum SiteKind {
    Outside = 0,
    Interior = 1,
    Boundary = 2,
}

/// The box `center + {-L..L}^d` with its external boundary.
#[derive(Clone, Debug)]
pub struct LatticeBox {
    dim: usize,
    center: Point,
    radius: usize,
    side: usize,
    strides: Vec<usize>,
    kinds: Vec<SiteKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

/// A directed edge `(x, x ± e_axis)` given by its tail vertex offset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub tail: usize,
    pub axis: usize,
    pub positive: bool,
}

/// An undirected edge `{x, x + e_axis}` stored with its lower endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub base: usize,
    pub axis: usize,
}

impl LatticeBox {
    pub fn new(dim: usize, center: &[i64], radius: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("box dimension must be at least 1".into()));
        }
        if center.len() != dim {
            return Err(Error::InvalidInput(format!(
                "center has {} coordinates, expected {dim}",
                center.len()
            )));
        }
        let side = 2 * radius + 3;
        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * side;
        }
        let len = strides[0] * side;
        let mut kinds = vec![SiteKind::Outside; len];
        let mut interior = Vec::with_capacity((2 * radius + 1).pow(dim as u32));
        let mut boundary = Vec::new();
        let mut local = vec![0usize; dim];
        for (off, kind) in kinds.iter_mut().enumerate() {
            let mut rem = off;
            for i in 0..dim {
                local[i] = rem / strides[i];
                rem %= strides[i];
            }
            // number of coordinates sitting on the outer shell of the bounding cube
            let shell = local.iter().filter(|&&c| c == 0 || c == side - 1).count();
            *kind = match shell {
                0 => {
                    interior.push(off);
                    SiteKind::Interior
                }
                1 => {
                    boundary.push(off);
                    SiteKind::Boundary
                }
                _ => SiteKind::Outside,
            };
        }
        Ok(Self {
            dim,
            center: center.to_vec(),
            radius,
            side,
            strides,
            kinds,
            interior,
            boundary,
        })
    }

    /// `Λ_L` centered at the origin.
    pub fn centered(dim: usize, radius: usize) -> Result<Self> {
        Self::new(dim, &vec![0; dim], radius)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Side of the bounding cube of `Λ⁺`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Length of the storage arrays (bounding cube of `Λ⁺`).
    pub fn storage_len(&self) -> usize {
        self.kinds.len()
    }

    /// `|Λ|`.
    pub fn volume(&self) -> usize {
        self.interior.len()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn kind(&self, offset: usize) -> SiteKind {
        self.kinds[offset]
    }

    pub fn kinds(&self) -> &[SiteKind] {
        &self.kinds
    }

    pub fn is_interior(&self, offset: usize) -> bool {
        self.kinds[offset] == SiteKind::Interior
    }

    pub fn in_closure(&self, offset: usize) -> bool {
        self.kinds[offset] != SiteKind::Outside
    }

    /// Offset of an absolute point, or `None` outside the bounding cube.
    pub fn offset_of(&self, p: &[i64]) -> Option<usize> {
        if p.len() != self.dim {
            return None;
        }
        let half = self.radius as i64 + 1;
        let mut off = 0usize;
        for i in 0..self.dim {
            let c = p[i] - self.center[i] + half;
            if c < 0 || c >= self.side as i64 {
                return None;
            }
            off += c as usize * self.strides[i];
        }
        Some(off)
    }

    /// Offset of a point of `Λ⁺`; errors for anything else.
    pub fn closure_offset(&self, p: &[i64]) -> Result<usize> {
        match self.offset_of(p) {
            Some(off) if self.in_closure(off) => Ok(off),
            _ => Err(Error::OutOfDomain(format!("{p:?} is not in the closure of {self}"))),
        }
    }

    pub fn interior_offset(&self, p: &[i64]) -> Result<usize> {
        match self.offset_of(p) {
            Some(off) if self.is_interior(off) => Ok(off),
            _ => Err(Error::OutOfDomain(format!("{p:?} is not in the interior of {self}"))),
        }
    }

    pub fn point_of(&self, offset: usize) -> Point {
        let half = self.radius as i64 + 1;
        let mut rem = offset;
        let mut p = Vec::with_capacity(self.dim);
        for i in 0..self.dim {
            let c = rem / self.strides[i];
            rem %= self.strides[i];
            p.push(c as i64 - half + self.center[i]);
        }
        p
    }

    /// Local coordinate along `axis` (0 and `side - 1` are the boundary shell).
    #[inline]
    pub fn local_coord(&self, offset: usize, axis: usize) -> usize {
        (offset / self.strides[axis]) % self.side
    }

    /// Neighbor offset in direction `±e_axis`, if it stays inside the bounding cube.
    #[inline]
    pub fn neighbor(&self, offset: usize, axis: usize, positive: bool) -> Option<usize> {
        let c = self.local_coord(offset, axis);
        if positive {
            (c + 1 < self.side).then(|| offset + self.strides[axis])
        } else {
            (c > 0).then(|| offset - self.strides[axis])
        }
    }

    pub fn contains_point(&self, p: &[i64]) -> bool {
        self.offset_of(p).is_some_and(|o| self.is_interior(o))
    }

    /// Whether every vertex of `other` (interior only) lies in this box's interior.
    pub fn contains_box(&self, other: &LatticeBox) -> bool {
        other.dim == self.dim
            && (0..self.dim).all(|i| {
                let lo = other.center[i] - other.radius as i64;
                let hi = other.center[i] + other.radius as i64;
                lo >= self.center[i] - self.radius as i64 && hi <= self.center[i] + self.radius as i64
            })
    }

    /// Whether `other`'s closure `Λ⁺` is contained in this box's interior.
    pub fn contains_closure_of(&self, other: &LatticeBox) -> bool {
        other.dim == self.dim
            && (0..self.dim).all(|i| {
                let lo = other.center[i] - other.radius as i64 - 1;
                let hi = other.center[i] + other.radius as i64 + 1;
                lo >= self.center[i] - self.radius as i64 && hi <= self.center[i] + self.radius as i64
            })
    }

    /// Undirected edges of `E(Λ⁺)` with at least one endpoint in `Λ`, in lexicographic order
    /// of (lower endpoint, axis).
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.storage_len()).flat_map(move |base| {
            (0..self.dim).filter_map(move |axis| {
                let kb = self.kinds[base];
                if kb == SiteKind::Outside {
                    return None;
                }
                let head = self.neighbor(base, axis, true)?;
                let kh = self.kinds[head];
                (kb == SiteKind::Interior && kh != SiteKind::Outside
                    || kb == SiteKind::Boundary && kh == SiteKind::Interior)
                    .then_some(Edge { base, axis })
            })
        })
    }

    /// Undirected edges of the induced subgraph on `Λ` (both endpoints interior).
    pub fn inner_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.interior.iter().flat_map(move |&base| {
            (0..self.dim).filter_map(move |axis| {
                let head = base + self.strides[axis];
                self.is_interior(head).then_some(Edge { base, axis })
            })
        })
    }

    /// Every directed edge of `E(Λ⁺)` touching `Λ`, both orientations.
    pub fn directed_edges(&self) -> impl Iterator<Item = DirectedEdge> + '_ {
        self.edges().flat_map(move |e| {
            let head = e.head(self);
            [
                DirectedEdge { tail: e.base, axis: e.axis, positive: true },
                DirectedEdge { tail: head, axis: e.axis, positive: false },
            ]
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges().count()
    }

    /// Sub-box with the same dimension, translated center and radius, as a map into this
    /// box's offsets. Only the interior of the sub-box needs to lie in this box's closure.
    pub fn sub_box_offsets(&self, sub: &LatticeBox) -> Result<Vec<usize>> {
        sub.interior()
            .iter()
            .map(|&o| self.closure_offset(&sub.point_of(o)))
            .collect()
    }

    /// Map from every storage offset of `sub` to this box's offset; offsets outside the
    /// closure of `sub` map to `usize::MAX`. The closure of `sub` must lie in this box's closure.
    pub fn sub_box_offsets_closure(&self, sub: &LatticeBox) -> Result<Vec<usize>> {
        (0..sub.storage_len())
            .map(|o| if sub.in_closure(o) { self.closure_offset(&sub.point_of(o)) } else { Ok(usize::MAX) })
            .collect()
    }
}

impl std::fmt::Display for LatticeBox {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}+Λ_{} (d={})", self.center, self.radius, self.dim)
    }
}

impl PartialEq for LatticeBox {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.center == other.center && self.radius == other.radius
    }
}

impl Edge {
    #[inline]
    pub fn head(&self, b: &LatticeBox) -> usize {
        self.base + b.strides[self.axis]
    }
}

impl DirectedEdge {
    #[inline]
    pub fn head(&self, b: &LatticeBox) -> usize {
        if self.positive {
            self.tail + b.strides[self.axis]
        } else {
            self.tail - b.strides[self.axis]
        }
    }

    pub fn undirected(&self, b: &LatticeBox) -> Edge {
        if self.positive {
            Edge { base: self.tail, axis: self.axis }
        } else {
            Edge { base: self.head(b), axis: self.axis }
        }
    }

    pub fn reversed(&self, b: &LatticeBox) -> DirectedEdge {
        DirectedEdge { tail: self.head(b), axis: self.axis, positive: !self.positive }
    }
}

/// Real values on `Λ⁺`. Entries outside `Λ⁺` in the storage cube are kept at zero.
#[derive(Clone, Debug)]
pub struct VertexField {
    lattice: LatticeBox,
    values: Vec<f64>,
}

impl VertexField {
    pub fn zeros(lattice: &LatticeBox) -> Self {
        Self { values: vec![0.0; lattice.storage_len()], lattice: lattice.clone() }
    }

    pub fn from_fn(lattice: &LatticeBox, mut f: impl FnMut(&[i64]) -> f64) -> Self {
        let mut field = Self::zeros(lattice);
        for off in 0..lattice.storage_len() {
            if lattice.in_closure(off) {
                field.values[off] = f(&lattice.point_of(off));
            }
        }
        field
    }

    /// Builds a field from raw storage; values at non-closure offsets are zeroed.
    pub fn from_storage(lattice: &LatticeBox, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.storage_len() {
            return Err(Error::InvalidInput(format!(
                "storage length {} does not match box storage {}",
                values.len(),
                lattice.storage_len()
            )));
        }
        for (off, v) in values.iter_mut().enumerate() {
            if !lattice.in_closure(off) {
                *v = 0.0;
            }
        }
        Ok(Self { lattice: lattice.clone(), values })
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, p: &[i64]) -> Result<f64> {
        Ok(self.values[self.lattice.closure_offset(p)?])
    }

    pub fn set(&mut self, p: &[i64], value: f64) -> Result<()> {
        let off = self.lattice.closure_offset(p)?;
        self.values[off] = value;
        Ok(())
    }

    #[inline]
    pub fn at(&self, offset: usize) -> f64 {
        self.values[offset]
    }

    /// Value at an absolute point, with zero outside `Λ⁺`.
    pub fn get_or_zero(&self, p: &[i64]) -> f64 {
        match self.lattice.offset_of(p) {
            Some(off) => self.values[off],
            None => 0.0,
        }
    }

    /// Largest absolute value on `∂Λ`.
    pub fn boundary_sup(&self) -> f64 {
        self.lattice.boundary().iter().map(|&o| self.values[o].abs()).fold(0.0, f64::max)
    }

    pub fn interior_sup(&self) -> f64 {
        self.lattice.interior().iter().map(|&o| self.values[o].abs()).fold(0.0, f64::max)
    }

    /// `self - other` on the same box.
    pub fn difference(&self, other: &VertexField) -> Result<VertexField> {
        if self.lattice != other.lattice {
            return Err(Error::InvalidInput("fields live on different boxes".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(VertexField { lattice: self.lattice.clone(), values })
    }

    pub fn scaled(&self, s: f64) -> VertexField {
        VertexField {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    #[inline]
    pub fn gradient_on(&self, e: Edge) -> f64 {
        self.values[e.head(&self.lattice)] - self.values[e.base]
    }
}

/// Real values on directed edges, antisymmetric under reversal. Only the positive orientation
/// is stored, at index `base * d + axis`.
#[derive(Clone, Debug)]
pub struct EdgeField {
    lattice: LatticeBox,
    values: Vec<f64>,
}

impl EdgeField {
    pub fn zeros(lattice: &LatticeBox) -> Self {
        Self { values: vec![0.0; lattice.storage_len() * lattice.dim()], lattice: lattice.clone() }
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    #[inline]
    pub fn get(&self, e: Edge) -> f64 {
        self.values[e.base * self.lattice.dim() + e.axis]
    }

    #[inline]
    pub fn set(&mut self, e: Edge, value: f64) {
        let d = self.lattice.dim();
        self.values[e.base * d + e.axis] = value;
    }

    pub fn get_directed(&self, e: DirectedEdge) -> f64 {
        let v = self.get(e.undirected(&self.lattice));
        if e.positive {
            v
        } else {
            -v
        }
    }

    pub fn set_directed(&mut self, e: DirectedEdge, value: f64) {
        let u = e.undirected(&self.lattice);
        self.set(u, if e.positive { value } else { -value });
    }

    /// Largest absolute value over the box's edges.
    pub fn sup_norm(&self) -> f64 {
        self.lattice.edges().map(|e| self.get(e).abs()).fold(0.0, f64::max)
    }
}

/// `∇φ(x, y) = φ(y) - φ(x)` on every edge of the box.
pub fn gradient(phi: &VertexField) -> EdgeField {
    let lattice = phi.lattice();
    let mut out = EdgeField::zeros(lattice);
    for e in lattice.edges() {
        out.set(e, phi.gradient_on(e));
    }
    out
}

/// `Σ_{e ∋ x} F(e)` over the `2d` directed edges leaving the interior vertex `x`.
pub fn divergence_of_flux(
    lattice: &LatticeBox,
    flux: impl Fn(DirectedEdge) -> f64,
    x: &[i64],
) -> Result<f64> {
    let tail = lattice.interior_offset(x)?;
    let mut sum = 0.0;
    for axis in 0..lattice.dim() {
        for positive in [true, false] {
            sum += flux(DirectedEdge { tail, axis, positive });
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(b: &LatticeBox, offs: &[usize]) -> Vec<Point> {
        offs.iter().map(|&o| b.point_of(o)).collect()
    }

    #[test]
    fn one_dimensional_box() {
        let b = LatticeBox::centered(1, 1).unwrap();
        assert_eq!(pts(&b, b.interior()), vec![vec![-1], vec![0], vec![1]]);
        assert_eq!(pts(&b, b.boundary()), vec![vec![-2], vec![2]]);
        assert_eq!(b.edge_count(), 4);
    }

    #[test]
    fn square_boundary_is_cross_shaped() {
        let b = LatticeBox::centered(2, 1).unwrap();
        assert_eq!(b.volume(), 9);
        assert_eq!(b.boundary().len(), 12);
        assert!(b.offset_of(&[2, 2]).is_some_and(|o| !b.in_closure(o)));
        // 2 * 3 * 4 edges: each of the 3 rows and 3 columns has 4 edges
        assert_eq!(b.edge_count(), 24);
        assert_eq!(b.inner_edges().count(), 12);
    }

    #[test]
    fn four_dimensional_volume() {
        let b = LatticeBox::centered(4, 8).unwrap();
        assert_eq!(b.volume(), 83521);
        assert_eq!(b.boundary().len(), 2 * 4 * 17usize.pow(3));
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(LatticeBox::centered(0, 3).is_err());
    }

    #[test]
    fn boundary_points_are_adjacent_to_interior() {
        let b = LatticeBox::new(3, &[1, -2, 5], 2).unwrap();
        for &o in b.boundary() {
            let adj = (0..3).any(|a| {
                [true, false]
                    .iter()
                    .any(|&s| b.neighbor(o, a, s).is_some_and(|n| b.is_interior(n)))
            });
            assert!(adj);
        }
        assert_eq!(b.point_of(b.interior()[0]), vec![-1, -4, 3]);
    }

    #[test]
    fn gradient_examples() {
        let b = LatticeBox::centered(1, 1).unwrap();
        let phi = VertexField::from_fn(&b, |p| match p[0] {
            -1 => 0.0,
            0 => 2.0,
            1 => 5.0,
            _ => 0.0,
        });
        let g = gradient(&phi);
        let e = |x: i64| Edge { base: b.offset_of(&[x]).unwrap(), axis: 0 };
        assert_eq!(g.get(e(-1)), 2.0);
        assert_eq!(g.get(e(0)), 3.0);

        let c = VertexField::from_fn(&b, |_| 4.25);
        assert_eq!(gradient(&c).sup_norm(), 0.0);

        let b2 = LatticeBox::centered(3, 2).unwrap();
        let tilt = [0.5, -1.0, 2.0];
        let lin = VertexField::from_fn(&b2, |p| p.iter().zip(tilt).map(|(&x, t)| x as f64 * t).sum());
        let g = gradient(&lin);
        for e in b2.edges() {
            assert_eq!(g.get(e), tilt[e.axis]);
        }
    }

    #[test]
    fn antisymmetry_of_directed_access() {
        let b = LatticeBox::centered(2, 2).unwrap();
        let phi = VertexField::from_fn(&b, |p| (p[0] * 3 + p[1] * p[1]) as f64);
        let g = gradient(&phi);
        for de in b.directed_edges() {
            assert_eq!(g.get_directed(de), -g.get_directed(de.reversed(&b)));
            assert_eq!(g.get_directed(de), phi.at(de.head(&b)) - phi.at(de.tail));
        }
    }

    #[test]
    fn divergence_examples() {
        let b = LatticeBox::centered(1, 1).unwrap();
        let phi = VertexField::from_fn(&b, |p| if p[0] == 0 { 1.0 } else { 0.0 });
        let flux = |de: DirectedEdge| phi.at(de.head(&b)) - phi.at(de.tail);
        assert_eq!(divergence_of_flux(&b, flux, &[0]).unwrap(), -2.0);
        assert!(divergence_of_flux(&b, flux, &[2]).is_err());

        let b3 = LatticeBox::centered(3, 2).unwrap();
        let lin = VertexField::from_fn(&b3, |p| (2 * p[0] - p[1] + 7 * p[2]) as f64);
        let flux = |de: DirectedEdge| lin.at(de.head(&b3)) - lin.at(de.tail);
        for &o in b3.interior() {
            assert_eq!(divergence_of_flux(&b3, flux, &b3.point_of(o)).unwrap(), 0.0);
        }
        let zero = VertexField::zeros(&b3);
        let flux = |de: DirectedEdge| zero.at(de.head(&b3)) - zero.at(de.tail);
        assert_eq!(divergence_of_flux(&b3, flux, &[0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn enumeration_is_deterministic() {
        let b = LatticeBox::new(3, &[2, 0, -1], 2).unwrap();
        let a: Vec<_> = b.edges().collect();
        let c: Vec<_> = LatticeBox::new(3, &[2, 0, -1], 2).unwrap().edges().collect();
        assert_eq!(a, c);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }
}
