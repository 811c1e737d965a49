//! Scaffold layout of virtual screens around the user, plus ray queries against it.
//!
//! Frames are anchor-relative with `+x` right, `+y` up and `+z` forward. Screen
//! coordinates are normalised with `(0, 0)` at the bottom-left corner and `(1, 1)`
//! at the top-right corner of a screen. Grid rows count upwards from the bottom
//! row and screen ids are assigned row-major (`id = row * columns + col`).

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, InputError};

pub type Vec3 = Vector3<f64>;

pub const CM_PER_INCH: f64 = 2.54;

/// Widest horizontal extent a layout may cover, in degrees.
pub const MAX_HORIZONTAL_SPAN_DEG: f64 = 190.0;
/// Highest elevation any screen may reach, in degrees.
pub const MAX_UP_DEG: f64 = 30.0;
/// Lowest depression any screen may reach, in degrees.
pub const MAX_DOWN_DEG: f64 = 35.0;

const EDGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub orientation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            position: Vec3::zeros(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn new(position: Vec3, orientation: UnitQuaternion<f64>) -> Self {
        Self { position, orientation }
    }

    pub fn at(position: Vec3) -> Self {
        Self::new(position, UnitQuaternion::identity())
    }

    /// Pose rotated about the vertical axis; positive yaw turns towards `+x`.
    pub fn from_yaw_deg(position: Vec3, yaw_deg: f64) -> Self {
        Self::new(
            position,
            UnitQuaternion::from_axis_angle(&Vec3::y_axis(), yaw_deg.to_radians()),
        )
    }

    pub fn right(&self) -> Vec3 {
        self.orientation * Vec3::x()
    }

    pub fn up(&self) -> Vec3 {
        self.orientation * Vec3::y()
    }

    pub fn forward(&self) -> Vec3 {
        self.orientation * Vec3::z()
    }

    pub fn transform_point(&self, local: &Vec3) -> Vec3 {
        self.position + self.orientation * local
    }

    /// Expresses a world point in this pose's local frame.
    pub fn inverse_transform_point(&self, world: &Vec3) -> Vec3 {
        self.orientation.inverse() * (world - self.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridPos {
    pub col: i32,
    pub row: i32,
}

impl GridPos {
    pub fn new(col: i32, row: i32) -> Self {
        Self { col, row }
    }
}

/// A flat rectangle tangent to the scaffold cylinder. The pose's forward axis points
/// away from the viewer, so the visible face looks back along `-forward`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualScreen {
    pub id: u32,
    pub center_pose: Pose,
    pub width_cm: f64,
    pub height_cm: f64,
    pub grid_pos: GridPos,
}

/// Raw intersection of a ray with a screen's supporting plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneHit {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

impl PlaneHit {
    pub fn is_on_screen(&self) -> bool {
        (-EDGE_EPS..=1.0 + EDGE_EPS).contains(&self.u) && (-EDGE_EPS..=1.0 + EDGE_EPS).contains(&self.v)
    }
}

impl VirtualScreen {
    pub fn center(&self) -> Vec3 {
        self.center_pose.position
    }

    pub fn normal(&self) -> Vec3 {
        self.center_pose.forward()
    }

    /// Affine map from normalised coordinates to the world rectangle. `u` and `v`
    /// are not clamped.
    pub fn screen_to_world(&self, u: f64, v: f64) -> Vec3 {
        self.center_pose.position
            + self.center_pose.right() * ((u - 0.5) * self.width_cm)
            + self.center_pose.up() * ((v - 0.5) * self.height_cm)
    }

    /// Intersects a ray with the front face of this screen's plane, returning raw
    /// normalised coordinates that may fall outside `[0, 1]`.
    pub fn intersect_plane(&self, origin: &Vec3, direction: &Vec3) -> Option<PlaneHit> {
        let normal = self.normal();
        let denom = direction.dot(&normal);
        if denom <= EDGE_EPS {
            return None;
        }
        let t = (self.center() - origin).dot(&normal) / denom;
        if t <= EDGE_EPS {
            return None;
        }
        let rel = origin + direction * t - self.center();
        Some(PlaneHit {
            t,
            u: rel.dot(&self.center_pose.right()) / self.width_cm + 0.5,
            v: rel.dot(&self.center_pose.up()) / self.height_cm + 0.5,
        })
    }

    pub fn corners(&self) -> [Vec3; 4] {
        [
            self.screen_to_world(0.0, 0.0),
            self.screen_to_world(1.0, 0.0),
            self.screen_to_world(1.0, 1.0),
            self.screen_to_world(0.0, 1.0),
        ]
    }
}

pub fn screen_to_world(screen: &VirtualScreen, u: f64, v: f64) -> Vec3 {
    screen.screen_to_world(u, v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenCoord {
    pub screen_id: u32,
    pub u: f64,
    pub v: f64,
    /// Set when `u`/`v` were clamped into `[0, 1]`.
    #[serde(default)]
    pub clamped: bool,
}

impl ScreenCoord {
    pub fn new(screen_id: u32, u: f64, v: f64) -> Self {
        Self { screen_id, u, v, clamped: false }
    }

    /// Builds a coordinate clamped into the unit square, flagging whether clamping
    /// changed anything.
    pub fn clamped(screen_id: u32, u: f64, v: f64) -> Self {
        let cu = u.clamp(0.0, 1.0);
        let cv = v.clamp(0.0, 1.0);
        Self {
            screen_id,
            u: cu,
            v: cv,
            clamped: cu != u || cv != v,
        }
    }
}

/// Layout parameters. Lengths are centimetres, angles degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutConfig {
    pub screen_count: u32,
    pub columns: u32,
    pub rows: u32,
    /// Screen diagonal in inches.
    pub diagonal_inch: f64,
    /// Width over height.
    pub aspect_ratio: f64,
    /// Distance from the anchor to each screen's centre line, cm.
    pub radius_cm: f64,
    /// Angular gap between neighbouring columns, degrees.
    pub horizontal_gap_deg: f64,
    /// Vertical gap between neighbouring rows, cm.
    pub vertical_gap_cm: f64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self::fifteen_screens()
    }
}

impl LayoutConfig {
    pub fn grid(columns: u32, rows: u32) -> Self {
        Self {
            screen_count: columns * rows,
            columns,
            rows,
            diagonal_inch: 24.0,
            aspect_ratio: 16.0 / 9.0,
            radius_cm: 90.0,
            horizontal_gap_deg: 2.0,
            vertical_gap_cm: 2.0,
        }
    }

    pub fn single() -> Self {
        Self::grid(1, 1)
    }

    pub fn four_screens() -> Self {
        Self::grid(2, 2)
    }

    pub fn fifteen_screens() -> Self {
        Self::grid(5, 3)
    }

    /// Screen width and height in cm.
    pub fn screen_size_cm(&self) -> (f64, f64) {
        let diagonal = self.diagonal_inch * CM_PER_INCH;
        let norm = self.aspect_ratio.hypot(1.0);
        (diagonal * self.aspect_ratio / norm, diagonal / norm)
    }

    /// Angle subtended by one screen's width at the layout radius, degrees.
    pub fn screen_angular_width_deg(&self) -> f64 {
        let (w, _) = self.screen_size_cm();
        2.0 * (w / 2.0 / self.radius_cm).atan().to_degrees()
    }

    pub fn column_step_deg(&self) -> f64 {
        self.screen_angular_width_deg() + self.horizontal_gap_deg
    }

    pub fn row_step_cm(&self) -> f64 {
        self.screen_size_cm().1 + self.vertical_gap_cm
    }

    /// Nominal extents of the layout as seen from the anchor.
    pub fn span(&self) -> LayoutSpan {
        let (_, h) = self.screen_size_cm();
        let cols = self.columns as f64;
        let horizontal = cols * self.screen_angular_width_deg() + (cols - 1.0).max(0.0) * self.horizontal_gap_deg;
        let half_rows = (self.rows as f64 - 1.0) / 2.0;
        let top = half_rows * self.row_step_cm() + h / 2.0;
        let vertical = (top / self.radius_cm).atan().to_degrees();
        LayoutSpan {
            horizontal_deg: horizontal,
            up_deg: vertical,
            down_deg: vertical,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.columns == 0 || self.rows == 0 || self.columns * self.rows != self.screen_count {
            return Err(ConfigError::GridMismatch {
                columns: self.columns,
                rows: self.rows,
                screen_count: self.screen_count,
            });
        }
        positive("layout.diagonal_inch", self.diagonal_inch)?;
        positive("layout.aspect_ratio", self.aspect_ratio)?;
        positive("layout.radius_cm", self.radius_cm)?;
        non_negative("layout.horizontal_gap_deg", self.horizontal_gap_deg)?;
        non_negative("layout.vertical_gap_cm", self.vertical_gap_cm)?;
        self.span().check()
    }
}

pub(crate) fn positive(key: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::NotPositive { key, value })
    }
}

pub(crate) fn non_negative(key: &'static str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::Negative { key, value })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutSpan {
    pub horizontal_deg: f64,
    pub up_deg: f64,
    pub down_deg: f64,
}

impl LayoutSpan {
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.horizontal_deg > MAX_HORIZONTAL_SPAN_DEG {
            return Err(ConfigError::HorizontalSpan {
                span_deg: self.horizontal_deg,
                limit_deg: MAX_HORIZONTAL_SPAN_DEG,
            });
        }
        if self.up_deg > MAX_UP_DEG {
            return Err(ConfigError::UpwardSpan {
                span_deg: self.up_deg,
                limit_deg: MAX_UP_DEG,
            });
        }
        if self.down_deg > MAX_DOWN_DEG {
            return Err(ConfigError::DownwardSpan {
                span_deg: self.down_deg,
                limit_deg: MAX_DOWN_DEG,
            });
        }
        Ok(())
    }
}

/// Azimuth/elevation box covered by one screen, degrees, measured from the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularExtent {
    pub azimuth_min: f64,
    pub azimuth_max: f64,
    pub elevation_min: f64,
    pub elevation_max: f64,
}

impl AngularExtent {
    pub fn overlaps(&self, other: &AngularExtent) -> bool {
        let eps = 1e-9;
        self.azimuth_max > other.azimuth_min + eps
            && other.azimuth_max > self.azimuth_min + eps
            && self.elevation_max > other.elevation_min + eps
            && other.elevation_max > self.elevation_min + eps
    }
}

/// World-fixed screens arranged on a cylinder around the anchor pose.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaffoldLayout {
    pub anchor: Pose,
    pub columns: u32,
    pub rows: u32,
    pub screens: Vec<VirtualScreen>,
}

/// A screen hit by a gaze ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeHit {
    pub coord: ScreenCoord,
    /// Ray parameter (distance along the unit direction), cm.
    pub distance: f64,
}

pub fn build_layout(config: &LayoutConfig, anchor: Pose) -> Result<ScaffoldLayout, ConfigError> {
    config.validate()?;
    let (width, height) = config.screen_size_cm();
    let step = config.column_step_deg();
    let row_step = config.row_step_cm();
    let mid_col = (config.columns as f64 - 1.0) / 2.0;
    let mid_row = (config.rows as f64 - 1.0) / 2.0;

    let mut screens = Vec::with_capacity(config.screen_count as usize);
    for row in 0..config.rows {
        for col in 0..config.columns {
            let yaw = ((col as f64 - mid_col) * step).to_radians();
            let y = (row as f64 - mid_row) * row_step;
            let local = Vec3::new(config.radius_cm * yaw.sin(), y, config.radius_cm * yaw.cos());
            let local_rot = UnitQuaternion::from_axis_angle(&Vec3::y_axis(), yaw);
            screens.push(VirtualScreen {
                id: row * config.columns + col,
                center_pose: Pose::new(anchor.transform_point(&local), anchor.orientation * local_rot),
                width_cm: width,
                height_cm: height,
                grid_pos: GridPos::new(col as i32, row as i32),
            });
        }
    }

    let layout = ScaffoldLayout {
        anchor,
        columns: config.columns,
        rows: config.rows,
        screens,
    };
    let extents: Vec<_> = layout.screens.iter().map(|s| layout.angular_extent(s)).collect();
    for (i, a) in extents.iter().enumerate() {
        for (j, b) in extents.iter().enumerate().skip(i + 1) {
            if a.overlaps(b) {
                return Err(ConfigError::Overlap { a: i as u32, b: j as u32 });
            }
        }
    }
    Ok(layout)
}

impl ScaffoldLayout {
    pub fn screen(&self, id: u32) -> Option<&VirtualScreen> {
        self.screens.get(id as usize).filter(|s| s.id == id)
    }

    pub fn screen_at(&self, pos: GridPos) -> Option<&VirtualScreen> {
        if pos.col < 0 || pos.row < 0 || pos.col >= self.columns as i32 || pos.row >= self.rows as i32 {
            return None;
        }
        self.screen(pos.row as u32 * self.columns + pos.col as u32)
    }

    /// The screen straight ahead of the anchor (rounded down and left for even grids).
    pub fn center_screen(&self) -> &VirtualScreen {
        let pos = GridPos::new((self.columns as i32 - 1) / 2, (self.rows as i32 - 1) / 2);
        self.screen_at(pos).expect("layouts always hold at least one screen")
    }

    /// Nearest screen whose rectangle the ray crosses, front faces only.
    pub fn gaze_hit(&self, origin: &Vec3, direction: &Vec3) -> Result<Option<GazeHit>, InputError> {
        let norm = direction.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(InputError::DegenerateRay);
        }
        let dir = direction / norm;
        let mut best: Option<(PlaneHit, u32)> = None;
        for screen in &self.screens {
            let Some(hit) = screen.intersect_plane(origin, &dir) else {
                continue;
            };
            if !hit.is_on_screen() {
                continue;
            }
            if best.is_none_or(|(b, _)| hit.t < b.t) {
                best = Some((hit, screen.id));
            }
        }
        Ok(best.map(|(hit, id)| GazeHit {
            coord: ScreenCoord::clamped(id, hit.u, hit.v),
            distance: hit.t,
        }))
    }

    /// Angular box of a screen measured from the anchor position in the anchor frame.
    pub fn angular_extent(&self, screen: &VirtualScreen) -> AngularExtent {
        let corners = screen.corners().map(|c| self.anchor.inverse_transform_point(&c));
        let azimuth = |p: &Vec3| p.x.atan2(p.z).to_degrees();
        let elevation = |p: &Vec3| p.y.atan2(p.x.hypot(p.z)).to_degrees();

        let mut ext = AngularExtent {
            azimuth_min: f64::INFINITY,
            azimuth_max: f64::NEG_INFINITY,
            elevation_min: f64::INFINITY,
            elevation_max: f64::NEG_INFINITY,
        };
        let mut include = |p: &Vec3| {
            let az = azimuth(p);
            let el = elevation(p);
            ext.azimuth_min = ext.azimuth_min.min(az);
            ext.azimuth_max = ext.azimuth_max.max(az);
            ext.elevation_min = ext.elevation_min.min(el);
            ext.elevation_max = ext.elevation_max.max(el);
        };
        for c in &corners {
            include(c);
        }
        // Elevation along an edge peaks where the edge passes horizontally closest to
        // the anchor, which need not be a corner.
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let d = b - a;
            let dh = d.x * d.x + d.z * d.z;
            if dh > 0.0 {
                let s = (-(a.x * d.x + a.z * d.z) / dh).clamp(0.0, 1.0);
                include(&(a + d * s));
            }
        }
        ext
    }

    /// Span of the whole layout from direct angular measurement of its screens.
    pub fn measured_span(&self) -> LayoutSpan {
        let mut az_min = f64::INFINITY;
        let mut az_max = f64::NEG_INFINITY;
        let mut el_min = f64::INFINITY;
        let mut el_max = f64::NEG_INFINITY;
        for s in &self.screens {
            let e = self.angular_extent(s);
            az_min = az_min.min(e.azimuth_min);
            az_max = az_max.max(e.azimuth_max);
            el_min = el_min.min(e.elevation_min);
            el_max = el_max.max(e.elevation_max);
        }
        LayoutSpan {
            horizontal_deg: az_max - az_min,
            up_deg: el_max.max(0.0),
            down_deg: (-el_min).max(0.0),
        }
    }
}
