use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Smallest accepted resolution for the analytic shapes.
pub const MIN_RESOLUTION: usize = 16;

/// Named shape descriptor of a [`GridDomain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeTag {
    Square { side: f64 },
    Disk { radius: f64 },
    Rectangle { a: f64, b: f64 },
    /// Square of the given side with its upper-right quarter removed.
    Lshape { side: f64 },
    CustomMask,
}

impl ShapeTag {
    pub fn is_convex(&self) -> bool {
        matches!(
            self,
            ShapeTag::Square { .. } | ShapeTag::Disk { .. } | ShapeTag::Rectangle { .. }
        )
    }

    fn extent(&self) -> (f64, f64) {
        match *self {
            ShapeTag::Square { side } | ShapeTag::Lshape { side } => (side, side),
            ShapeTag::Disk { radius } => (2.0 * radius, 2.0 * radius),
            ShapeTag::Rectangle { a, b } => (a, b),
            ShapeTag::CustomMask => (0.0, 0.0),
        }
    }

    fn size_params(&self) -> Vec<f64> {
        match *self {
            ShapeTag::Square { side } | ShapeTag::Lshape { side } => vec![side],
            ShapeTag::Disk { radius } => vec![radius],
            ShapeTag::Rectangle { a, b } => vec![a, b],
            ShapeTag::CustomMask => vec![],
        }
    }

    /// Strict point-in-shape test in the shape's own frame, whose bounding
    /// box is `[0, w] x [0, h]`. Points on the boundary are outside.
    fn contains(&self, x: f64, y: f64, tol: f64) -> bool {
        match *self {
            ShapeTag::Square { side } => {
                x > tol && x < side - tol && y > tol && y < side - tol
            }
            ShapeTag::Rectangle { a, b } => x > tol && x < a - tol && y > tol && y < b - tol,
            ShapeTag::Disk { radius } => {
                let (dx, dy) = (x - radius, y - radius);
                (dx * dx + dy * dy).sqrt() < radius - tol
            }
            ShapeTag::Lshape { side } => {
                let half = 0.5 * side;
                let in_square = x > tol && x < side - tol && y > tol && y < side - tol;
                in_square && (x < half - tol || y < half - tol)
            }
            ShapeTag::CustomMask => false,
        }
    }
}

impl fmt::Display for ShapeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeTag::Square { side } => write!(f, "square({side})"),
            ShapeTag::Disk { radius } => write!(f, "disk({radius})"),
            ShapeTag::Rectangle { a, b } => write!(f, "rectangle({a},{b})"),
            ShapeTag::Lshape { side } => write!(f, "lshape({side})"),
            ShapeTag::CustomMask => write!(f, "custom-mask"),
        }
    }
}

/// Parses the command-line shape syntax: `square`, `disk`, `rectangle:a:b`,
/// `lshape`. Sizes default to the unit shape (side 1, radius 1).
impl FromStr for ShapeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let nums = parts
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::InvalidArgument(format!("bad size `{v}` in `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let tag = match (head, nums.as_slice()) {
            ("square", []) => ShapeTag::Square { side: 1.0 },
            ("square", [side]) => ShapeTag::Square { side: *side },
            ("disk", []) => ShapeTag::Disk { radius: 1.0 },
            ("disk", [radius]) => ShapeTag::Disk { radius: *radius },
            ("rectangle", [a, b]) => ShapeTag::Rectangle { a: *a, b: *b },
            ("lshape", []) => ShapeTag::Lshape { side: 1.0 },
            ("lshape", [side]) => ShapeTag::Lshape { side: *side },
            _ => return Err(Error::UnknownShape(s.to_string())),
        };
        Ok(tag)
    }
}

/// Raster discretisation of a bounded planar domain.
///
/// Nodes sit at `origin + (i, j) * spacing`, `0 <= i < nx`, `0 <= j < ny`,
/// and are stored row-major (`k = j * nx + i`). Fields vanish on nodes outside
/// the `inside` mask; the mask never touches the raster border so that the
/// zero extension to the plane is well defined.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDomain {
    nx: usize,
    ny: usize,
    spacing: f64,
    origin: (f64, f64),
    inside: Vec<bool>,
    shape: ShapeTag,
    convex: bool,
}

impl GridDomain {
    /// Builds a validated domain from an explicit mask.
    pub fn from_mask(
        nx: usize,
        ny: usize,
        spacing: f64,
        inside: Vec<bool>,
        shape: ShapeTag,
    ) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::DegenerateDomain(format!("spacing {spacing} must be positive")));
        }
        if nx < 3 || ny < 3 || inside.len() != nx * ny {
            return Err(Error::DegenerateDomain(format!(
                "mask of length {} does not fit a {nx}x{ny} raster",
                inside.len()
            )));
        }
        if !inside.iter().any(|&b| b) {
            return Err(Error::DegenerateDomain("inside mask is empty".into()));
        }
        for j in 0..ny {
            for i in 0..nx {
                let border = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                if border && inside[j * nx + i] {
                    return Err(Error::DegenerateDomain(format!(
                        "mask touches the raster border at ({i}, {j})"
                    )));
                }
            }
        }
        let convex = shape.is_convex();
        Ok(Self { nx, ny, spacing, origin: (0.0, 0.0), inside, shape, convex })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn shape(&self) -> &ShapeTag {
        &self.shape
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    #[inline]
    pub fn is_inside(&self, k: usize) -> bool {
        self.inside[k]
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    /// Physical coordinates of node `(i, j)`.
    pub fn node_position(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.spacing,
            self.origin.1 + j as f64 * self.spacing,
        )
    }

    /// Number of nodes in the inside mask.
    pub fn inside_count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    /// Cell-counting area `|Omega|`.
    pub fn area(&self) -> f64 {
        self.inside_count() as f64 * self.spacing * self.spacing
    }

    /// Reads the plain-text raster format: a header line `nx ny spacing`
    /// followed by `ny` rows of `nx` characters `0`/`1`. Row `j` of the file
    /// holds nodes `(0..nx, j)`.
    pub fn read_mask<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().filter_map(|(n, l)| match l {
            Ok(s) if s.trim().is_empty() => None,
            other => Some((n + 1, other)),
        });
        let (line_no, header) = lines
            .next()
            .ok_or(Error::MaskFormat { line: 1, msg: "missing header".into() })?;
        let header = header?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let bad_header = || Error::MaskFormat {
            line: line_no,
            msg: format!("expected `nx ny spacing`, got `{header}`"),
        };
        if fields.len() != 3 {
            return Err(bad_header());
        }
        let nx: usize = fields[0].parse().map_err(|_| bad_header())?;
        let ny: usize = fields[1].parse().map_err(|_| bad_header())?;
        let spacing: f64 = fields[2].parse().map_err(|_| bad_header())?;

        let mut inside = Vec::with_capacity(nx * ny);
        for _ in 0..ny {
            let (line_no, row) = lines.next().ok_or(Error::MaskFormat {
                line: line_no + inside.len() / nx.max(1) + 1,
                msg: "fewer rows than announced".into(),
            })?;
            let row = row?;
            let row = row.trim();
            if row.chars().count() != nx {
                return Err(Error::MaskFormat {
                    line: line_no,
                    msg: format!("expected {nx} characters, got {}", row.chars().count()),
                });
            }
            for c in row.chars() {
                match c {
                    '0' => inside.push(false),
                    '1' => inside.push(true),
                    other => {
                        return Err(Error::MaskFormat {
                            line: line_no,
                            msg: format!("unexpected character `{other}`"),
                        })
                    }
                }
            }
        }
        if let Some((line_no, _)) = lines.next() {
            return Err(Error::MaskFormat { line: line_no, msg: "trailing rows".into() });
        }
        GridDomain::from_mask(nx, ny, spacing, inside, ShapeTag::CustomMask)
    }

    pub fn write_mask<W: Write>(&self, mask: &[bool], mut out: W) -> Result<()> {
        writeln!(out, "{} {} {}", self.nx, self.ny, self.spacing)?;
        for row in mask.chunks(self.nx) {
            let line: String = row.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Rasterises a named shape.
///
/// `resolution` is the number of grid spacings across the longest side of
/// the shape's bounding box. Nodes on the shape boundary are outside, which
/// leaves the required zero margin on the raster border.
pub fn build_domain(shape: ShapeTag, resolution: usize) -> Result<GridDomain> {
    if matches!(shape, ShapeTag::CustomMask) {
        return Err(Error::InvalidArgument(
            "custom masks are loaded with GridDomain::read_mask".into(),
        ));
    }
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!(
            "resolution {resolution} is below the minimum {MIN_RESOLUTION}"
        )));
    }
    if shape.size_params().iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::DegenerateDomain(format!("non-positive size in {shape}")));
    }
    let (w, h) = shape.extent();
    let spacing = w.max(h) / resolution as f64;
    let cells = |len: f64| ((len / spacing) - 1e-9).ceil() as usize;
    let nx = cells(w) + 1;
    let ny = cells(h) + 1;
    let tol = 1e-9 * spacing;
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (i as f64 * spacing, j as f64 * spacing);
            inside[j * nx + i] = shape.contains(x, y, tol);
        }
    }
    if !inside.iter().any(|&b| b) {
        return Err(Error::DegenerateDomain(format!("{shape} has no interior node")));
    }
    GridDomain::from_mask(nx, ny, spacing, inside, shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_area_within_two_over_n() {
        let d = build_domain(ShapeTag::Square { side: 1.0 }, 128).unwrap();
        assert!((d.area() - 1.0).abs() <= 2.0 / 128.0);
        assert!(d.is_convex());
    }

    #[test]
    fn disk_area_within_two_percent() {
        let d = build_domain(ShapeTag::Disk { radius: 1.0 }, 256).unwrap();
        let pi = std::f64::consts::PI;
        assert!((d.area() - pi).abs() / pi < 0.02, "area {}", d.area());
    }

    #[test]
    fn rectangle_is_convex_with_area_two() {
        let d = build_domain(ShapeTag::Rectangle { a: 2.0, b: 1.0 }, 128).unwrap();
        assert!(d.is_convex());
        assert!((d.area() - 2.0).abs() < 0.05, "area {}", d.area());
    }

    #[test]
    fn lshape_is_not_convex() {
        let d = build_domain(ShapeTag::Lshape { side: 1.0 }, 64).unwrap();
        assert!(!d.is_convex());
        assert!((d.area() - 0.75).abs() < 0.05);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            build_domain(ShapeTag::Square { side: 0.0 }, 64),
            Err(Error::DegenerateDomain(_))
        ));
        assert!(build_domain(ShapeTag::Square { side: 1.0 }, 8).is_err());
        assert!(matches!("hexagon".parse::<ShapeTag>(), Err(Error::UnknownShape(_))));
        assert_eq!(
            "rectangle:2:1".parse::<ShapeTag>().unwrap(),
            ShapeTag::Rectangle { a: 2.0, b: 1.0 }
        );
    }

    #[test]
    fn mask_never_touches_border() {
        for shape in ["square", "disk", "rectangle:2:1", "lshape"] {
            let d = build_domain(shape.parse().unwrap(), 33).unwrap();
            for i in 0..d.nx() {
                assert!(!d.is_inside(d.idx(i, 0)) && !d.is_inside(d.idx(i, d.ny() - 1)));
            }
            for j in 0..d.ny() {
                assert!(!d.is_inside(d.idx(0, j)) && !d.is_inside(d.idx(d.nx() - 1, j)));
            }
        }
    }

    #[test]
    fn mask_text_round_trip() {
        let d = build_domain(ShapeTag::Lshape { side: 1.0 }, 20).unwrap();
        let mut buf = Vec::new();
        d.write_mask(d.inside(), &mut buf).unwrap();
        let back = GridDomain::read_mask(buf.as_slice()).unwrap();
        assert_eq!(back.inside(), d.inside());
        assert_eq!(back.spacing(), d.spacing());
        assert_eq!(back.shape(), &ShapeTag::CustomMask);
        assert!(!back.is_convex());
    }

    #[test]
    fn malformed_masks_are_rejected() {
        let touching = "3 3 0.5\n010\n010\n000\n";
        assert!(GridDomain::read_mask(touching.as_bytes()).is_err());
        let short = "4 4 0.5\n0000\n0110\n";
        assert!(matches!(
            GridDomain::read_mask(short.as_bytes()),
            Err(Error::MaskFormat { .. })
        ));
        let junk = "3 3 0.5\n000\n0x0\n000\n";
        assert!(matches!(GridDomain::read_mask(junk.as_bytes()), Err(Error::MaskFormat { line: 3, .. })));
    }
}
