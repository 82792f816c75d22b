//! Lattice primitives for Z^d: points, axis directions, and ∞-norm boxes.
//!
//! Directions are numbered `0..2d`. Label `i < d` is the unit step along
//! `+X_{i+1}`; label `i >= d` is the unit step along `-X_{i-d+1}`.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Labels are stored as bytes, so `2d` must fit in a `u8`.
pub const MAX_DIMENSION: usize = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Dimension(usize);

impl Dimension {
    pub fn new(d: usize) -> Result<Self> {
        if d == 0 || d > MAX_DIMENSION {
            return Err(Error::InvalidDimension {
                got: d,
                max: MAX_DIMENSION,
            });
        }
        Ok(Dimension(d))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }

    /// Number of axis directions, `2d`.
    #[inline]
    pub fn directions(self) -> usize {
        2 * self.0
    }

    pub fn labels(self) -> impl Iterator<Item = Direction> {
        (0..self.directions()).map(|i| Direction(i as u8))
    }

    pub fn check_label(self, label: u64) -> Result<Direction> {
        if label < self.directions() as u64 {
            Ok(Direction(label as u8))
        } else {
            Err(Error::LabelOutOfRange { label, d: self.0 })
        }
    }
}

impl TryFrom<usize> for Dimension {
    type Error = Error;

    fn try_from(d: usize) -> Result<Self> {
        Dimension::new(d)
    }
}

impl From<Dimension> for usize {
    fn from(d: Dimension) -> usize {
        d.0
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Index of one of the `2d` axis directions. Range checking against a
/// dimension happens at the construction sites that know `d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Direction(pub u8);

impl Direction {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Axis this direction moves along, and whether the move is positive.
    #[inline]
    pub fn axis(self, dim: Dimension) -> (usize, bool) {
        let i = self.index();
        let d = dim.get();
        if i < d {
            (i, true)
        } else {
            (i - d, false)
        }
    }

    /// The direction pointing the opposite way along the same axis.
    pub fn opposite(self, dim: Dimension) -> Direction {
        Direction(((self.index() + dim.get()) % dim.directions()) as u8)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

pub type Coords = SmallVec<[i64; 4]>;

/// A point of Z^d. Serializes as a bare JSON array of integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint {
    coords: Coords,
}

impl LatticePoint {
    pub fn origin(dim: Dimension) -> Self {
        LatticePoint {
            coords: smallvec::smallvec![0; dim.get()],
        }
    }

    pub fn new(coords: impl Into<Coords>) -> Self {
        LatticePoint {
            coords: coords.into(),
        }
    }

    pub fn from_slice(coords: &[i64]) -> Self {
        LatticePoint {
            coords: Coords::from_slice(coords),
        }
    }

    #[inline]
    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn check_dim(&self, dim: Dimension) -> Result<()> {
        if self.dim() == dim.get() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: dim.get(),
                got: self.dim(),
            })
        }
    }

    #[inline]
    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// `max_i |p_i|`.
    #[inline]
    pub fn infinity_norm(&self) -> u64 {
        self.coords
            .iter()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    /// Moves this point one unit along `label` in place.
    #[inline]
    pub fn step_mut(&mut self, label: Direction) -> Result<()> {
        let d = self.dim();
        let i = label.index();
        let (axis, delta) = if i < d { (i, 1) } else { (i - d, -1) };
        match self.coords.get(axis).and_then(|c| c.checked_add(delta)) {
            Some(v) => {
                self.coords[axis] = v;
                Ok(())
            }
            None if axis >= d => Err(Error::LabelOutOfRange { label: i as u64, d }),
            None => Err(Error::CoordinateOverflow {
                point: self.coords.to_vec(),
            }),
        }
    }

    /// `self + unit_vector(label)`.
    pub fn translate(&self, label: Direction) -> Result<LatticePoint> {
        let mut next = self.clone();
        next.step_mut(label)?;
        Ok(next)
    }

    /// True when the two points differ by a single unit step.
    pub fn is_neighbor(&self, other: &LatticePoint) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        let mut diff = 0u64;
        for (a, b) in self.coords.iter().zip(other.coords.iter()) {
            diff += a.abs_diff(*b);
            if diff > 1 {
                return false;
            }
        }
        diff == 1
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The signed unit step for `label` in dimension `dim`.
pub fn unit_vector(label: Direction, dim: Dimension) -> Result<LatticePoint> {
    if label.index() >= dim.directions() {
        return Err(Error::LabelOutOfRange {
            label: label.0 as u64,
            d: dim.get(),
        });
    }
    let mut v = LatticePoint::origin(dim);
    v.step_mut(label)?;
    Ok(v)
}

/// The ∞-norm ball `[-n, n]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub dim: Dimension,
    pub radius: u64,
}

impl LatticeBox {
    pub fn new(dim: Dimension, radius: u64) -> Self {
        LatticeBox { dim, radius }
    }

    #[inline]
    pub fn side(&self) -> u64 {
        2 * self.radius + 1
    }

    /// `(2n+1)^d`, or `None` if it does not fit in a `u64`.
    pub fn site_count(&self) -> Option<u64> {
        let mut total = 1u64;
        for _ in 0..self.dim.get() {
            total = total.checked_mul(self.side())?;
        }
        Some(total)
    }

    #[inline]
    pub fn contains(&self, p: &LatticePoint) -> bool {
        p.dim() == self.dim.get() && p.infinity_norm() <= self.radius
    }

    /// Row-major index over the shifted coordinates `p_i + n`; the last
    /// coordinate varies fastest.
    pub fn dense_index(&self, p: &LatticePoint) -> Result<u64> {
        p.check_dim(self.dim)?;
        self.index_unchecked(p).ok_or_else(|| Error::OutsideBox {
            point: p.coords().to_vec(),
            radius: self.radius,
        })
    }

    #[inline]
    pub(crate) fn index_unchecked(&self, p: &LatticePoint) -> Option<u64> {
        let n = self.radius as i128;
        let side = self.side() as i128;
        let mut idx: i128 = 0;
        for &c in p.coords() {
            let shifted = c as i128 + n;
            if shifted < 0 || shifted >= side {
                return None;
            }
            idx = idx * side + shifted;
        }
        u64::try_from(idx).ok()
    }

    /// Inverse of [`LatticeBox::dense_index`].
    pub fn point_at(&self, index: u64) -> Result<LatticePoint> {
        let side = self.side();
        let total = self.site_count();
        if total.is_some_and(|t| index >= t) {
            return Err(Error::InvalidConfig {
                field: "index".into(),
                message: format!("{index} out of range for box of radius {}", self.radius),
            });
        }
        let d = self.dim.get();
        let mut coords: Coords = smallvec::smallvec![0; d];
        let mut rest = index;
        for slot in coords.iter_mut().rev() {
            *slot = (rest % side) as i64 - self.radius as i64;
            rest /= side;
        }
        Ok(LatticePoint::new(coords))
    }

    /// All sites in dense-index order.
    pub fn points(&self) -> BoxPoints {
        BoxPoints {
            radius: self.radius as i64,
            next: Some(LatticePoint::new(Coords::from_elem(
                -(self.radius as i64),
                self.dim.get(),
            ))),
        }
    }
}

pub struct BoxPoints {
    radius: i64,
    next: Option<LatticePoint>,
}

impl Iterator for BoxPoints {
    type Item = LatticePoint;

    fn next(&mut self) -> Option<LatticePoint> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for c in succ.coords.iter_mut().rev() {
            if *c < self.radius {
                *c += 1;
                self.next = Some(succ);
                return Some(current);
            }
            *c = -self.radius;
        }
        Some(current)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(n: usize) -> Dimension {
        Dimension::new(n).unwrap()
    }

    fn p(c: &[i64]) -> LatticePoint {
        LatticePoint::from_slice(c)
    }

    #[test]
    fn unit_vectors_follow_axis_numbering() {
        assert_eq!(unit_vector(Direction(0), d(3)).unwrap(), p(&[1, 0, 0]));
        assert_eq!(unit_vector(Direction(3), d(3)).unwrap(), p(&[-1, 0, 0]));
        assert_eq!(unit_vector(Direction(5), d(3)).unwrap(), p(&[0, 0, -1]));
        assert!(matches!(
            unit_vector(Direction(6), d(3)),
            Err(Error::LabelOutOfRange { label: 6, d: 3 })
        ));
    }

    #[test]
    fn translate_examples() {
        assert_eq!(
            p(&[0, 0, 0]).translate(Direction(1)).unwrap(),
            p(&[0, 1, 0])
        );
        assert_eq!(
            p(&[-2, 5, 1]).translate(Direction(4)).unwrap(),
            p(&[-2, 4, 1])
        );
        assert_eq!(p(&[0, 0]).translate(Direction(3)).unwrap(), p(&[0, -1]));
    }

    #[test]
    fn translate_overflow_is_an_error() {
        let err = p(&[i64::MAX, 0]).translate(Direction(0)).unwrap_err();
        assert!(matches!(err, Error::CoordinateOverflow { .. }));
        let err = p(&[0, i64::MIN]).translate(Direction(3)).unwrap_err();
        assert!(matches!(err, Error::CoordinateOverflow { .. }));
    }

    #[test]
    fn infinity_norm_examples() {
        assert_eq!(p(&[0, 0, 0]).infinity_norm(), 0);
        assert_eq!(p(&[-3, 2, 1]).infinity_norm(), 3);
        assert_eq!(p(&[250, -250, 0]).infinity_norm(), 250);
        assert_eq!(p(&[i64::MIN]).infinity_norm(), 1u64 << 63);
    }

    #[test]
    fn dense_index_corners() {
        for n in 0..5u64 {
            let b = LatticeBox::new(d(3), n);
            let lo = -(n as i64);
            let hi = n as i64;
            assert_eq!(b.dense_index(&p(&[lo, lo, lo])).unwrap(), 0);
            assert_eq!(
                b.dense_index(&p(&[hi, hi, hi])).unwrap(),
                (2 * n + 1).pow(3) - 1
            );
        }
        let b = LatticeBox::new(d(3), 2);
        assert!(matches!(
            b.dense_index(&p(&[3, 0, 0])),
            Err(Error::OutsideBox { .. })
        ));
        assert!(b.dense_index(&p(&[0, 0])).is_err());
    }

    #[test]
    fn dense_index_is_a_bijection_on_small_boxes() {
        for dim in 1..=3 {
            for n in 0..=3 {
                let b = LatticeBox::new(d(dim), n);
                let total = b.site_count().unwrap();
                let mut seen = vec![false; total as usize];
                let mut count = 0;
                for (k, q) in b.points().enumerate() {
                    let idx = b.dense_index(&q).unwrap();
                    assert_eq!(idx, k as u64, "points() must follow dense order");
                    assert!(!seen[idx as usize]);
                    seen[idx as usize] = true;
                    assert_eq!(b.point_at(idx).unwrap(), q);
                    count += 1;
                }
                assert_eq!(count, total);
            }
        }
    }

    #[test]
    fn dimension_bounds() {
        assert!(Dimension::new(0).is_err());
        assert!(Dimension::new(MAX_DIMENSION + 1).is_err());
        assert_eq!(Dimension::new(3).unwrap().directions(), 6);
    }

    #[test]
    fn point_json_is_a_bare_array() {
        assert_eq!(serde_json::to_string(&p(&[-2, 5, 1])).unwrap(), "[-2,5,1]");
        let q: LatticePoint = serde_json::from_str("[3,-4]").unwrap();
        assert_eq!(q, p(&[3, -4]));
        assert_eq!(serde_json::to_string(&Direction(4)).unwrap(), "4");
    }

    fn point_and_label() -> impl Strategy<Value = (LatticePoint, Direction)> {
        (1usize..=5).prop_flat_map(|dim| {
            (
                proptest::collection::vec(-1000i64..1000, dim),
                0..(2 * dim as u8),
            )
                .prop_map(|(c, l)| (LatticePoint::from_slice(&c), Direction(l)))
        })
    }

    proptest! {
        #[test]
        fn opposite_labels_cancel(dim in 1usize..=6, raw in 0u8..12) {
            let dim = d(dim);
            let label = Direction(raw % dim.directions() as u8);
            let a = unit_vector(label, dim).unwrap();
            let b = unit_vector(label.opposite(dim), dim).unwrap();
            prop_assert!(a.coords().iter().zip(b.coords()).all(|(x, y)| x + y == 0));
        }

        #[test]
        fn translate_moves_one_coordinate((q, label) in point_and_label()) {
            let r = q.translate(label).unwrap();
            let changed: Vec<_> = q.coords().iter().zip(r.coords())
                .filter(|(a, b)| a != b)
                .map(|(a, b)| (b - a).abs())
                .collect();
            prop_assert_eq!(changed, vec![1]);
            let (n0, n1) = (q.infinity_norm() as i64, r.infinity_norm() as i64);
            prop_assert!((n1 - n0).abs() <= 1);
        }

        #[test]
        fn dense_index_round_trips(n in 0u64..40, raw in proptest::collection::vec(any::<i64>(), 3)) {
            let b = LatticeBox::new(d(3), n);
            let side = b.side() as i64;
            let coords: Vec<i64> = raw.iter().map(|c| c.rem_euclid(side) - n as i64).collect();
            let q = LatticePoint::from_slice(&coords);
            let idx = b.dense_index(&q).unwrap();
            prop_assert_eq!(b.point_at(idx).unwrap(), q);
        }
    }
}
