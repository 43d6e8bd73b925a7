//! Static 3D environment: buildings as axis-aligned boxes on flat ground.
//!
//! Visibility uses the slab method. A segment is blocked only when it passes
//! through a box interior over a positive length; grazing an edge or sliding
//! along a face does not block, and the first and last [`SURFACE_EPS`] meters
//! of every segment are ignored so nodes sitting on a facade (reflection
//! points) do not block themselves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, CkmError, Result};

/// Endpoint offset (m) applied to every visibility segment.
pub const SURFACE_EPS: f64 = 1e-6;

/// Default sub-band spacing of generated band plans, Hz.
pub const DEFAULT_BAND_SPACING_HZ: f64 = 20e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, o: &Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(&self, o: &Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(&self, o: &Point3) -> f64 {
        self.sub(o).norm()
    }

    /// Horizontal (x, y) distance.
    pub fn distance_2d(&self, o: &Point3) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn normalized(&self) -> Point3 {
        self.scale(1.0 / self.norm())
    }

    fn axis(&self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    fn lex_le(&self, o: &Point3) -> bool {
        (self.x, self.y, self.z) <= (o.x, o.y, o.z)
    }
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let r = Rect { min, max };
        if !(min.iter().chain(max.iter()).all(|v| v.is_finite())) {
            return input("rectangle corners must be finite");
        }
        if !(min[0] < max[0] && min[1] < max[1]) {
            return input(format!("degenerate rectangle {min:?}..{max:?}"));
        }
        Ok(r)
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildingBox {
    pub min_corner: Point3,
    pub max_corner: Point3,
}

impl BuildingBox {
    /// Box standing on the ground with the given footprint and height.
    pub fn new(min_xy: [f64; 2], max_xy: [f64; 2], height: f64) -> Result<Self> {
        Self::from_corners(
            Point3::new(min_xy[0], min_xy[1], 0.0),
            Point3::new(max_xy[0], max_xy[1], height),
        )
    }

    pub fn from_corners(min_corner: Point3, max_corner: Point3) -> Result<Self> {
        if !min_corner.is_finite() || !max_corner.is_finite() {
            return input("box corners must be finite");
        }
        if !(min_corner.x < max_corner.x && min_corner.y < max_corner.y && min_corner.z < max_corner.z)
        {
            return input(format!(
                "box corners not strictly ordered: {min_corner:?} .. {max_corner:?}"
            ));
        }
        Ok(Self {
            min_corner,
            max_corner,
        })
    }

    pub fn height(&self) -> f64 {
        self.max_corner.z - self.min_corner.z
    }

    /// Closed containment test.
    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p.axis(i) >= self.min_corner.axis(i) && p.axis(i) <= self.max_corner.axis(i))
    }

    /// Parameter interval `(t_lo, t_hi)` over which the line `origin + t·dir`
    /// lies in the open interior, or `None` when it never does.
    fn slab_interval(&self, origin: &Point3, dir: &Point3) -> Option<(f64, f64)> {
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for i in 0..3 {
            let o = origin.axis(i);
            let d = dir.axis(i);
            let lo = self.min_corner.axis(i);
            let hi = self.max_corner.axis(i);
            if d.abs() < 1e-15 {
                // parallel to this slab: must be strictly inside it
                if o <= lo || o >= hi {
                    return None;
                }
                continue;
            }
            let (mut t1, mut t2) = ((lo - o) / d, (hi - o) / d);
            if t1 > t2 {
                std::mem::swap(&mut t1, &mut t2);
            }
            t_lo = t_lo.max(t1);
            t_hi = t_hi.min(t2);
            if t_lo >= t_hi {
                return None;
            }
        }
        Some((t_lo, t_hi))
    }
}

/// Entry distance of the ray `origin + t·dir` into `bx`, restricted to
/// `t ∈ (SURFACE_EPS, t_max)`. A ray starting inside the box reports
/// `SURFACE_EPS`. Edge or face grazing is not a hit.
pub fn ray_box_intersect(
    bx: &BuildingBox,
    origin: &Point3,
    dir: &Point3,
    t_max: f64,
) -> Result<Option<f64>> {
    if !origin.is_finite() || !dir.is_finite() || !t_max.is_finite() {
        return input("ray_box_intersect: non-finite input");
    }
    if (dir.norm() - 1.0).abs() > 1e-9 {
        return input(format!("ray direction must be unit norm, got {}", dir.norm()));
    }
    if t_max <= 0.0 {
        return input("t_max must be positive");
    }
    Ok(ray_box_unchecked(bx, origin, dir, t_max))
}

fn ray_box_unchecked(bx: &BuildingBox, origin: &Point3, dir: &Point3, t_max: f64) -> Option<f64> {
    let (t_lo, t_hi) = bx.slab_interval(origin, dir)?;
    let lo = t_lo.max(SURFACE_EPS);
    let hi = t_hi.min(t_max);
    (lo < hi).then_some(lo)
}

/// Serialized building footprint + height.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct BuildingJson {
    min: [f64; 2],
    max: [f64; 2],
    height: f64,
}

/// On-disk scene document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    #[serde(default)]
    pub format_version: u32,
    pub bounds: Rect,
    pub carrier_hz: f64,
    pub band_plan: Vec<f64>,
    #[serde(default)]
    pub bs_location: Option<Point3>,
    buildings: Vec<BuildingJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct Scene {
    buildings: Vec<BuildingBox>,
    bounds: Rect,
    bs_location: Option<Point3>,
    carrier_hz: f64,
    band_plan: Vec<f64>,
}

impl Scene {
    pub fn new(
        buildings: Vec<BuildingBox>,
        bounds: Rect,
        bs_location: Option<Point3>,
        carrier_hz: f64,
        band_plan: Vec<f64>,
    ) -> Result<Self> {
        let bounds = Rect::new(bounds.min, bounds.max)?;
        if !(carrier_hz.is_finite() && carrier_hz > 0.0) {
            return input("carrier_hz must be positive");
        }
        if band_plan.is_empty() {
            return input("band plan needs at least one sub-band");
        }
        if band_plan.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return input("band plan frequencies must be positive");
        }
        if band_plan.windows(2).any(|w| w[0] >= w[1]) {
            return input("band plan must be strictly increasing");
        }
        for (i, b) in buildings.iter().enumerate() {
            let inside = bounds.contains_xy(b.min_corner.x, b.min_corner.y)
                && bounds.contains_xy(b.max_corner.x, b.max_corner.y);
            if !inside {
                return input(format!("building {i} lies outside the scene bounds"));
            }
        }
        if let Some(bs) = bs_location {
            if !bs.is_finite() {
                return input("bs_location must be finite");
            }
        }
        Ok(Self {
            buildings,
            bounds,
            bs_location,
            carrier_hz,
            band_plan,
        })
    }

    /// Obstacle-free scene, mostly for tests.
    pub fn empty(bounds: Rect, carrier_hz: f64, band_plan: Vec<f64>) -> Result<Self> {
        Self::new(Vec::new(), bounds, None, carrier_hz, band_plan)
    }

    pub fn with_bs_location(mut self, bs: Point3) -> Self {
        self.bs_location = Some(bs);
        self
    }

    pub fn buildings(&self) -> &[BuildingBox] {
        &self.buildings
    }

    pub fn bounds(&self) -> &Rect {
        &self.bounds
    }

    pub fn bs_location(&self) -> Option<Point3> {
        self.bs_location
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn band_plan(&self) -> &[f64] {
        &self.band_plan
    }

    pub fn n_bands(&self) -> usize {
        self.band_plan.len()
    }

    /// True when `p` is inside (or on the boundary of) any building.
    pub fn is_indoor(&self, p: &Point3) -> bool {
        self.buildings.iter().any(|b| b.contains(p))
    }

    pub fn in_bounds(&self, p: &Point3) -> bool {
        self.bounds.contains_xy(p.x, p.y)
    }

    /// True iff the open segment (a, b) passes through no building.
    pub fn los_visible(&self, a: &Point3, b: &Point3) -> Result<bool> {
        if !a.is_finite() || !b.is_finite() {
            return input("los_visible: non-finite endpoint");
        }
        if a == b {
            return input("los_visible: endpoints coincide");
        }
        Ok(self.segment_clear(a, b))
    }

    /// Unchecked visibility test, evaluated from the lexicographically
    /// smaller endpoint so that the result is exactly symmetric.
    pub(crate) fn segment_clear(&self, a: &Point3, b: &Point3) -> bool {
        let (from, to) = if a.lex_le(b) { (a, b) } else { (b, a) };
        let delta = to.sub(from);
        let len = delta.norm();
        if len <= 2.0 * SURFACE_EPS {
            return true;
        }
        let dir = delta.scale(1.0 / len);
        let t_max = len - SURFACE_EPS;
        !self
            .buildings
            .iter()
            .any(|bx| ray_box_unchecked(bx, from, &dir, t_max).is_some())
    }

    pub fn to_file(&self, config: Option<serde_json::Value>) -> SceneFile {
        SceneFile {
            format_version: crate::io::FORMAT_VERSION,
            bounds: self.bounds,
            carrier_hz: self.carrier_hz,
            band_plan: self.band_plan.clone(),
            bs_location: self.bs_location,
            buildings: self
                .buildings
                .iter()
                .map(|b| BuildingJson {
                    min: [b.min_corner.x, b.min_corner.y],
                    max: [b.max_corner.x, b.max_corner.y],
                    height: b.height(),
                })
                .collect(),
            config,
        }
    }

    pub fn from_file(file: &SceneFile) -> Result<Self> {
        let buildings = file
            .buildings
            .iter()
            .enumerate()
            .map(|(i, b)| {
                BuildingBox::new(b.min, b.max, b.height)
                    .map_err(|e| CkmError::Schema(format!("building {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Scene::new(
            buildings,
            file.bounds,
            file.bs_location,
            file.carrier_hz,
            file.band_plan.clone(),
        )
    }
}

/// `n` sub-band centers spaced `spacing_hz` apart, centered on `carrier_hz`.
pub fn centered_band_plan(carrier_hz: f64, n: usize, spacing_hz: f64) -> Vec<f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| carrier_hz + (i as f64 - mid) * spacing_hz)
        .collect()
}

/// Parameters of the synthetic Manhattan-grid generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UrbanLayout {
    pub width: f64,
    pub depth: f64,
    pub blocks_x: usize,
    pub blocks_y: usize,
    pub street_width: f64,
    /// Maximum random setback of each facade from the block edge, m.
    pub max_setback: f64,
    pub min_height: f64,
    pub max_height: f64,
    /// Probability that a block is left empty (plaza).
    pub open_fraction: f64,
    pub bs_location: Option<Point3>,
    pub carrier_hz: f64,
    pub n_bands: usize,
    pub band_spacing_hz: f64,
}

impl Default for UrbanLayout {
    fn default() -> Self {
        Self {
            width: 200.0,
            depth: 200.0,
            blocks_x: 8,
            blocks_y: 8,
            street_width: 10.0,
            max_setback: 3.0,
            min_height: 12.0,
            max_height: 40.0,
            open_fraction: 0.1,
            bs_location: Some(Point3::new(100.0, 87.5, 10.0)),
            carrier_hz: 28e9,
            n_bands: 12,
            band_spacing_hz: DEFAULT_BAND_SPACING_HZ,
        }
    }
}

impl UrbanLayout {
    /// Deterministic scene: one building per block, with seeded setbacks,
    /// heights and open blocks.
    pub fn generate(&self, seed: u64) -> Result<Scene> {
        if self.blocks_x == 0 || self.blocks_y == 0 {
            return input("layout needs at least one block per axis");
        }
        if self.n_bands == 0 {
            return input("n_bands must be at least 1");
        }
        if !(self.min_height > 0.0 && self.max_height >= self.min_height) {
            return input("height range must be positive and ordered");
        }
        let bounds = Rect::new([0.0, 0.0], [self.width, self.depth])?;
        let pitch_x = self.width / self.blocks_x as f64;
        let pitch_y = self.depth / self.blocks_y as f64;
        let half_street = self.street_width / 2.0;
        if pitch_x <= self.street_width + 2.0 * self.max_setback
            || pitch_y <= self.street_width + 2.0 * self.max_setback
        {
            return input("blocks too small for the street width and setback");
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buildings = Vec::new();
        for by in 0..self.blocks_y {
            for bx in 0..self.blocks_x {
                let open = rng.random::<f64>() < self.open_fraction;
                let setbacks: [f64; 4] =
                    std::array::from_fn(|_| rng.random::<f64>() * self.max_setback);
                let h = self.min_height + rng.random::<f64>() * (self.max_height - self.min_height);
                if open {
                    continue;
                }
                let x0 = bx as f64 * pitch_x + half_street + setbacks[0];
                let x1 = (bx + 1) as f64 * pitch_x - half_street - setbacks[1];
                let y0 = by as f64 * pitch_y + half_street + setbacks[2];
                let y1 = (by + 1) as f64 * pitch_y - half_street - setbacks[3];
                buildings.push(BuildingBox::new([x0, y0], [x1, y1], h)?);
            }
        }
        let band_plan = centered_band_plan(self.carrier_hz, self.n_bands, self.band_spacing_hz);
        let scene = Scene::new(buildings, bounds, None, self.carrier_hz, band_plan)?;
        Ok(match self.bs_location {
            Some(bs) => scene.with_bs_location(bs),
            None => scene,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> BuildingBox {
        BuildingBox::from_corners(Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)).unwrap()
    }

    fn bounds() -> Rect {
        Rect::new([-50.0, -50.0], [50.0, 50.0]).unwrap()
    }

    #[test]
    fn axis_aligned_hit() {
        let t = ray_box_intersect(
            &unit_box(),
            &Point3::new(-1.0, 0.5, 0.5),
            &Point3::new(1.0, 0.0, 0.0),
            10.0,
        )
        .unwrap();
        assert_eq!(t, Some(1.0));
    }

    #[test]
    fn miss() {
        let t = ray_box_intersect(
            &unit_box(),
            &Point3::new(-1.0, 5.0, 0.5),
            &Point3::new(1.0, 0.0, 0.0),
            10.0,
        )
        .unwrap();
        assert_eq!(t, None);
    }

    #[test]
    fn diagonal_hit_at_sqrt2() {
        let dir = Point3::new(1.0, 1.0, 0.0).normalized();
        let t = ray_box_intersect(&unit_box(), &Point3::new(-1.0, -1.0, 0.5), &dir, 10.0)
            .unwrap()
            .unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn beyond_t_max_is_not_a_hit() {
        let t = ray_box_intersect(
            &unit_box(),
            &Point3::new(-1.0, 0.5, 0.5),
            &Point3::new(1.0, 0.0, 0.0),
            0.5,
        )
        .unwrap();
        assert_eq!(t, None);
    }

    #[test]
    fn edge_grazing_does_not_block() {
        // passes exactly through the vertical edge at (1, 1)
        let dir = Point3::new(1.0, -1.0, 0.0).normalized();
        let t = ray_box_intersect(&unit_box(), &Point3::new(0.0, 2.0, 0.5), &dir, 10.0).unwrap();
        assert_eq!(t, None);
        // slides along the top face
        let t = ray_box_intersect(
            &unit_box(),
            &Point3::new(-1.0, 0.5, 1.0),
            &Point3::new(1.0, 0.0, 0.0),
            10.0,
        )
        .unwrap();
        assert_eq!(t, None);
    }

    #[test]
    fn rejects_bad_input() {
        let bx = unit_box();
        let o = Point3::new(0.0, 0.0, 0.0);
        assert!(ray_box_intersect(&bx, &o, &Point3::new(2.0, 0.0, 0.0), 1.0).is_err());
        assert!(ray_box_intersect(&bx, &o, &Point3::new(1.0, 0.0, 0.0), 0.0).is_err());
        assert!(ray_box_intersect(&bx, &Point3::new(f64::NAN, 0.0, 0.0), &Point3::new(1.0, 0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn empty_scene_always_visible() {
        let s = Scene::empty(bounds(), 28e9, vec![28e9]).unwrap();
        assert!(s
            .los_visible(&Point3::new(-10.0, 3.0, 1.0), &Point3::new(40.0, -7.0, 20.0))
            .unwrap());
    }

    #[test]
    fn box_on_segment_blocks_and_facade_nodes_do_not() {
        let b = BuildingBox::new([-1.0, -1.0], [1.0, 1.0], 10.0).unwrap();
        let s = Scene::new(vec![b], bounds(), None, 28e9, vec![28e9]).unwrap();
        let a = Point3::new(-5.0, 0.0, 1.5);
        let c = Point3::new(5.0, 0.0, 1.5);
        assert!(!s.los_visible(&a, &c).unwrap());
        assert!(!s.los_visible(&c, &a).unwrap());
        // node on the facade looking away from the building
        let on_face = Point3::new(1.0, 0.0, 1.5);
        assert!(s.los_visible(&on_face, &c).unwrap());
        assert!(s.los_visible(&c, &on_face).unwrap());
        // node on the facade looking across the building
        assert!(!s.los_visible(&on_face, &a).unwrap());
        // over the roof
        assert!(s
            .los_visible(&Point3::new(-5.0, 0.0, 11.0), &Point3::new(5.0, 0.0, 11.0))
            .unwrap());
    }

    #[test]
    fn coincident_endpoints_rejected() {
        let s = Scene::empty(bounds(), 28e9, vec![28e9]).unwrap();
        let p = Point3::new(1.0, 1.0, 1.0);
        assert!(s.los_visible(&p, &p).is_err());
    }

    #[test]
    fn scene_validation() {
        assert!(Scene::empty(bounds(), 28e9, vec![]).is_err());
        assert!(Scene::empty(bounds(), 28e9, vec![2.0, 1.0]).is_err());
        let far = BuildingBox::new([60.0, 0.0], [70.0, 5.0], 3.0).unwrap();
        assert!(Scene::new(vec![far], bounds(), None, 28e9, vec![1.0]).is_err());
        assert!(BuildingBox::new([0.0, 0.0], [1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn scene_json_round_trip() {
        let s = UrbanLayout::default().generate(7).unwrap();
        let json = serde_json::to_string(&s.to_file(None)).unwrap();
        let back: SceneFile = serde_json::from_str(&json).unwrap();
        let s2 = Scene::from_file(&back).unwrap();
        assert_eq!(s.buildings(), s2.buildings());
        assert_eq!(s.band_plan(), s2.band_plan());
        assert_eq!(s.bs_location(), s2.bs_location());
    }

    #[test]
    fn layout_is_seed_deterministic() {
        let l = UrbanLayout::default();
        assert_eq!(l.generate(3).unwrap().buildings(), l.generate(3).unwrap().buildings());
        assert_ne!(l.generate(3).unwrap().buildings(), l.generate(4).unwrap().buildings());
    }

    #[test]
    fn centered_plan_spacing() {
        let p = centered_band_plan(28e9, 4, 20e6);
        assert_eq!(p, vec![27.97e9, 27.99e9, 28.01e9, 28.03e9]);
    }
}
