//! Axis-aligned pixel boxes with half-open pixel-set semantics.
//!
//! A box `(x1, y1, x2, y2)` contains pixel `(x, y)` iff `x1 <= x < x2` and
//! `y1 <= y < y2`, so every area below is an exact integer pixel count and
//! ratios are formed from those counts with a single division.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("empty box ({x1}, {y1}, {x2}, {y2}): need x1 < x2 and y1 < y2")]
pub struct EmptyBox {
    pub x1: i32,
    pub y1: i32,
    pub x2: i32,
    pub y2: i32,
}

/// Non-empty half-open pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBox", into = "RawBox")]
pub struct BBox {
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
}

impl TryFrom<RawBox> for BBox {
    type Error = EmptyBox;

    fn try_from(r: RawBox) -> Result<Self, Self::Error> {
        BBox::new(r.x1, r.y1, r.x2, r.y2)
    }
}

impl From<BBox> for RawBox {
    fn from(b: BBox) -> Self {
        RawBox {
            x1: b.x1,
            y1: b.y1,
            x2: b.x2,
            y2: b.y2,
        }
    }
}

impl BBox {
    pub fn new(x1: i32, y1: i32, x2: i32, y2: i32) -> Result<Self, EmptyBox> {
        if x1 < x2 && y1 < y2 {
            Ok(BBox { x1, y1, x2, y2 })
        } else {
            Err(EmptyBox { x1, y1, x2, y2 })
        }
    }

    pub fn x1(&self) -> i32 {
        self.x1
    }

    pub fn y1(&self) -> i32 {
        self.y1
    }

    pub fn x2(&self) -> i32 {
        self.x2
    }

    pub fn y2(&self) -> i32 {
        self.y2
    }

    pub fn width(&self) -> u64 {
        (i64::from(self.x2) - i64::from(self.x1)) as u64
    }

    pub fn height(&self) -> u64 {
        (i64::from(self.y2) - i64::from(self.y1)) as u64
    }

    /// Pixel count `|R|`.
    pub fn area(&self) -> u64 {
        self.width() * self.height()
    }

    pub fn contains_pixel(&self, x: i32, y: i32) -> bool {
        self.x1 <= x && x < self.x2 && self.y1 <= y && y < self.y2
    }

    /// `self ⊆ other` as pixel sets.
    pub fn is_within(&self, other: &BBox) -> bool {
        other.x1 <= self.x1 && self.x2 <= other.x2 && other.y1 <= self.y1 && self.y2 <= other.y2
    }

    pub fn intersection(&self, other: &BBox) -> Option<BBox> {
        BBox::new(
            self.x1.max(other.x1),
            self.y1.max(other.y1),
            self.x2.min(other.x2),
            self.y2.min(other.y2),
        )
        .ok()
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        self.intersection(other).map_or(0, |b| b.area())
    }

    /// Center coordinates doubled, so half-pixel centers stay integral.
    pub fn doubled_center(&self) -> (i64, i64) {
        (
            i64::from(self.x1) + i64::from(self.x2),
            i64::from(self.y1) + i64::from(self.y2),
        )
    }

    /// Intersection with the image `[0, width) × [0, height)`.
    ///
    /// `None` when nothing of the box lies inside the image.
    pub fn clip(&self, width: u32, height: u32) -> Option<BBox> {
        let w = i32::try_from(width).unwrap_or(i32::MAX);
        let h = i32::try_from(height).unwrap_or(i32::MAX);
        BBox::new(
            self.x1.max(0),
            self.y1.max(0),
            self.x2.min(w),
            self.y2.min(h),
        )
        .ok()
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.x1, self.y1, self.x2, self.y2)
    }
}

/// Exact overlap ratio `num / den` of two pixel counts.
///
/// Ordering and threshold tests use integer cross-multiplication, so two
/// ratios compare equal exactly when they are equal as rationals.
#[derive(Debug, Clone, Copy)]
pub struct Overlap {
    num: u64,
    den: u64,
}

impl Overlap {
    pub const ZERO: Overlap = Overlap { num: 0, den: 1 };

    pub fn new(num: u64, den: u64) -> Self {
        debug_assert!(den > 0 && num <= den);
        Overlap { num, den }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Strictly greater than one half.
    pub fn exceeds_half(&self) -> bool {
        u128::from(self.num) * 2 > u128::from(self.den)
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
}

impl PartialEq for Overlap {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Overlap {}

impl PartialOrd for Overlap {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Overlap {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den))
            .cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

/// Intersection over union as an exact ratio.
pub fn iou_exact(a: &BBox, b: &BBox) -> Overlap {
    let inter = a.intersection_area(b);
    Overlap::new(inter, a.area() + b.area() - inter)
}

/// Intersection over union in `[0, 1]`.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    iou_exact(a, b).value()
}

/// Intersection over the smaller of the two areas.
pub fn intersection_over_min(a: &BBox, b: &BBox) -> Overlap {
    Overlap::new(a.intersection_area(b), a.area().min(b.area()))
}

/// Whether the center of `d` lies within `lambda_o · w(g)` horizontally and
/// `lambda_o · h(g)` vertically of the center of `g` (both bounds inclusive).
pub fn center_aligned(g: &BBox, d: &BBox, lambda_o: f64) -> bool {
    let (gx, gy) = g.doubled_center();
    let (dx, dy) = d.doubled_center();
    let off_x = (gx - dx).unsigned_abs() as f64;
    let off_y = (gy - dy).unsigned_abs() as f64;
    off_x <= 2.0 * lambda_o * g.width() as f64 && off_y <= 2.0 * lambda_o * g.height() as f64
}
