//! Scenario configuration: JSON schema, unit canonicalization and
//! validation. Every length may be a bare number (meters) or an object
//! `{"value": 24, "unit": "in"}` with unit `in`, `cm` or `m`.

use std::collections::BTreeSet;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::antenna::HornSpec;
use crate::geometry::{panel_chord_for_arc, ReflectorShape, Vec3};

pub const INCH: f64 = 0.0254;

/// Area of the 24 × 24 in flat sheet; curved panels default to the same area.
pub const REFERENCE_PANEL_AREA: f64 = (24.0 * INCH) * (24.0 * INCH);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid JSON: {0}")]
    Syntax(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
}

impl ConfigError {
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Field { field, .. } => Some(field),
            ConfigError::Syntax(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub geometry: GeometryConfig,
    pub reflector: Option<ReflectorConfig>,
    pub rf: RfConfig,
    pub sim: SimConfig,
    pub materials: MaterialRoles,
}

/// L-shaped corridor: the transmitter sits in a feeding corridor along `x`
/// that meets the receiver corridor (along `y`) at its outer corner. The
/// receiver corridor spans `x ∈ [0, corridor_width]`; the feeding corridor
/// spans `y ∈ [−feed_width, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub corridor_width: f64,
    pub feed_width: f64,
    pub ceiling_height: f64,
    /// Corridor length beyond the far edge of the receiver grid.
    pub length_margin: f64,
    /// Feeding-corridor length behind the transmitter.
    pub feed_margin: f64,
    pub tx_height: f64,
    /// Boresight distance from transmitter to the reflector anchor.
    pub tx_distance: f64,
    /// Distance of the reflector anchor from the outer wall of the receiver corridor.
    pub anchor_inset: f64,
    pub grid: GridConfig,
    pub door: Option<DoorConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub x_extent: f64,
    pub y_extent: f64,
    pub cell: f64,
    /// Gap between the corner line `y = 0` and the first grid row.
    pub offset: f64,
    pub rx_height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoorWall {
    /// End wall of the feeding corridor, behind the transmitter.
    FeedEnd,
    /// Far end wall of the receiver corridor.
    MainEnd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoorConfig {
    pub wall: DoorWall,
    /// Door center measured along the wall from its lower-coordinate edge.
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorConfig {
    pub shape: ReflectorShape,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Overrides the anchor point when set.
    pub position: Option<Vec3>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RxAim {
    /// Each receiver points at the reflector center (or the anchor point).
    Anchor,
    /// Every receiver shares one boresight direction.
    Direction(Vec3),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfConfig {
    pub frequency_hz: f64,
    pub tx_power_dbm: f64,
    pub tx_antenna: HornSpec,
    pub rx_antenna: HornSpec,
    pub rx_aim: RxAim,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub max_order: usize,
    pub patch_area: f64,
    pub lobe_exponent: Option<u32>,
    pub outage_threshold_dbm: f64,
    pub max_facet_angle_deg: f64,
    pub max_path_loss_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialRoles {
    pub walls: String,
    pub ceiling: String,
    pub floor: String,
    pub door: String,
    pub reflector: String,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            corridor_width: 1.5,
            feed_width: 1.5,
            ceiling_height: 3.0,
            length_margin: 2.0,
            feed_margin: 2.0,
            tx_height: 1.5,
            tx_distance: 5.0,
            anchor_inset: 0.35,
            grid: GridConfig::default(),
            door: Some(DoorConfig { wall: DoorWall::FeedEnd, center: 0.75, width: 0.9, height: 2.1 }),
        }
    }
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { x_extent: 1.5, y_extent: 15.0, cell: 0.3, offset: 0.5, rx_height: 1.5 }
    }
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            frequency_hz: 28e9,
            tx_power_dbm: 0.0,
            tx_antenna: HornSpec::default(),
            rx_antenna: HornSpec::default(),
            rx_aim: RxAim::Direction(Vec3::new(0.0, -1.0, 0.0)),
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            max_order: 3,
            patch_area: 0.25,
            lobe_exponent: None,
            outage_threshold_dbm: -80.0,
            max_facet_angle_deg: 2.5,
            max_path_loss_db: 185.0,
        }
    }
}

impl Default for MaterialRoles {
    fn default() -> Self {
        MaterialRoles {
            walls: "itu_layered_drywall".into(),
            ceiling: "itu_ceiling_board".into(),
            floor: "itu_concrete".into(),
            door: "perfect_conductor".into(),
            reflector: "perfect_conductor".into(),
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "baseline".into(),
            geometry: GeometryConfig::default(),
            reflector: None,
            rf: RfConfig::default(),
            sim: SimConfig::default(),
            materials: MaterialRoles::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        ScenarioConfig::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<ScenarioConfig, ConfigError> {
        let mut root = Obj::root(value)?;
        let mut cfg = ScenarioConfig::default();
        if let Some(schema) = root.number("schema")? {
            if schema != 1.0 {
                return Err(root.error("schema", format!("unsupported schema version {schema}")));
            }
        }
        if let Some(name) = root.string("name")? {
            cfg.name = name;
        }
        if let Some(mut g) = root.object("geometry")? {
            read_geometry(&mut g, &mut cfg.geometry)?;
            g.finish()?;
        }
        if let Some(mut r) = root.nullable_object("reflector")? {
            cfg.reflector = Some(read_reflector(&mut r)?);
            r.finish()?;
        }
        if let Some(mut rf) = root.object("rf")? {
            read_rf(&mut rf, &mut cfg.rf)?;
            rf.finish()?;
        }
        if let Some(mut sim) = root.object("sim")? {
            read_sim(&mut sim, &mut cfg.sim)?;
            sim.finish()?;
        }
        if let Some(mut m) = root.object("materials")? {
            let roles = &mut cfg.materials;
            for (key, slot) in [
                ("walls", &mut roles.walls),
                ("ceiling", &mut roles.ceiling),
                ("floor", &mut roles.floor),
                ("door", &mut roles.door),
                ("reflector", &mut roles.reflector),
            ] {
                if let Some(v) = m.string(key)? {
                    *slot = v;
                }
            }
            m.finish()?;
        }
        root.finish()?;
        cfg.check_consistency()?;
        Ok(cfg)
    }

    /// Reflector anchor: on the transmitter boresight, `anchor_inset` from the
    /// outer wall, centered across the feeding corridor.
    pub fn anchor(&self) -> Vec3 {
        let g = &self.geometry;
        Vec3::new(g.corridor_width - g.anchor_inset, -0.5 * g.feed_width, g.tx_height)
    }

    pub fn tx_position(&self) -> Vec3 {
        self.anchor() - Vec3::X * self.geometry.tx_distance
    }

    /// Detection floor: `P_tx + G_tx + G_rx − max path loss`.
    pub fn floor_dbm(&self) -> f64 {
        self.rf.tx_power_dbm + self.rf.tx_antenna.gain_dbi + self.rf.rx_antenna.gain_dbi - self.sim.max_path_loss_db
    }

    fn check_consistency(&self) -> Result<(), ConfigError> {
        let g = &self.geometry;
        let err = |field: &str, message: String| Err(ConfigError::Field { field: field.into(), message });
        if g.grid.x_extent > g.corridor_width + 1e-9 {
            return err("geometry.grid.x_extent", format!("{} m exceeds the corridor width {} m", g.grid.x_extent, g.corridor_width));
        }
        for (field, v) in [("x_extent", g.grid.x_extent), ("y_extent", g.grid.y_extent)] {
            let ratio = v / g.grid.cell;
            if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
                return err(&format!("geometry.grid.{field}"), format!("{v} m is not a positive multiple of the cell size {} m", g.grid.cell));
            }
        }
        for (field, h) in [("geometry.tx_height", g.tx_height), ("geometry.grid.rx_height", g.grid.rx_height)] {
            if h >= g.ceiling_height {
                return err(field, format!("{h} m is not below the ceiling ({} m)", g.ceiling_height));
            }
        }
        if g.anchor_inset >= g.corridor_width {
            return err("geometry.anchor_inset", "must be smaller than the corridor width".into());
        }
        if let Some(door) = &g.door {
            let span = match door.wall {
                DoorWall::FeedEnd => g.feed_width,
                DoorWall::MainEnd => g.corridor_width,
            };
            if door.center - 0.5 * door.width <= 0.0 || door.center + 0.5 * door.width >= span {
                return err("geometry.door", format!("door does not fit inside its {span} m wall"));
            }
            if door.height >= g.ceiling_height {
                return err("geometry.door.height", "door must be lower than the ceiling".into());
            }
        }
        if self.rf.frequency_hz <= 0.0 {
            return err("rf.frequency_hz", "must be positive".into());
        }
        Ok(())
    }
}

fn read_geometry(g: &mut Obj, out: &mut GeometryConfig) -> Result<(), ConfigError> {
    if let Some(mut c) = g.object("corridor")? {
        set_len(&mut c, "width", &mut out.corridor_width)?;
        set_len(&mut c, "feed_width", &mut out.feed_width)?;
        set_len(&mut c, "ceiling_height", &mut out.ceiling_height)?;
        set_len_nonneg(&mut c, "length_margin", &mut out.length_margin)?;
        set_len_nonneg(&mut c, "feed_margin", &mut out.feed_margin)?;
        c.finish()?;
    }
    if let Some(mut tx) = g.object("tx")? {
        set_len(&mut tx, "height", &mut out.tx_height)?;
        set_len(&mut tx, "distance_to_reflector", &mut out.tx_distance)?;
        tx.finish()?;
    }
    set_len(g, "anchor_inset", &mut out.anchor_inset)?;
    if let Some(mut grid) = g.object("grid")? {
        set_len(&mut grid, "x_extent", &mut out.grid.x_extent)?;
        set_len(&mut grid, "y_extent", &mut out.grid.y_extent)?;
        set_len(&mut grid, "cell", &mut out.grid.cell)?;
        set_len_nonneg(&mut grid, "offset", &mut out.grid.offset)?;
        set_len(&mut grid, "rx_height", &mut out.grid.rx_height)?;
        grid.finish()?;
    }
    match g.nullable_object("door")? {
        None if g.present("door") => out.door = None,
        None => {}
        Some(mut d) => {
            let mut door = out.door.clone().unwrap_or(DoorConfig { wall: DoorWall::FeedEnd, center: 0.75, width: 0.9, height: 2.1 });
            if let Some(wall) = d.string("wall")? {
                door.wall = match wall.as_str() {
                    "feed_end" => DoorWall::FeedEnd,
                    "main_end" => DoorWall::MainEnd,
                    other => return Err(d.error("wall", format!("unknown wall `{other}` (expected feed_end or main_end)"))),
                };
            }
            set_len(&mut d, "center", &mut door.center)?;
            set_len(&mut d, "width", &mut door.width)?;
            set_len(&mut d, "height", &mut door.height)?;
            d.finish()?;
            out.door = Some(door);
        }
    }
    Ok(())
}

fn read_reflector(r: &mut Obj) -> Result<ReflectorConfig, ConfigError> {
    let shape_name = r.string("shape")?.ok_or_else(|| r.error("shape", "required".into()))?;
    let require = |r: &mut Obj, key: &str| -> Result<f64, ConfigError> {
        r.positive_length(key)?
            .ok_or_else(|| r.error(key, format!("required for shape \"{shape_name}\"")))
    };
    let shape = match shape_name.as_str() {
        "flat" | "flat_square" => ReflectorShape::FlatSquare { side: require(r, "side")? },
        "cylinder" => ReflectorShape::Cylinder { radius: require(r, "radius")?, height: require(r, "height")? },
        "sphere" => ReflectorShape::Sphere { diameter: require(r, "diameter")? },
        "curved" | "curved_panel" => {
            let height = require(r, "height")?;
            let angle = r.number("curve_angle_deg")?.ok_or_else(|| r.error("curve_angle_deg", "required for shape \"curved\"".into()))?;
            if !(angle > 0.0 && angle <= 90.0) {
                return Err(r.error("curve_angle_deg", format!("{angle} outside (0, 90]")));
            }
            let chord_width = match r.positive_length("chord_width")? {
                Some(c) => c,
                None => panel_chord_for_arc(REFERENCE_PANEL_AREA / height, angle),
            };
            ReflectorShape::CurvedPanel { chord_width, height, curve_angle_deg: angle }
        }
        other => {
            return Err(r.error("shape", format!("unknown shape `{other}` (expected flat, cylinder, sphere or curved)")))
        }
    };
    let mut cfg = ReflectorConfig { shape, azimuth_deg: 45.0, elevation_deg: 0.0, position: None };
    if let Some(mut p) = r.object("placement")? {
        if let Some(az) = p.number("azimuth_deg")? {
            if !(0.0..180.0).contains(&az) {
                return Err(p.error("azimuth_deg", format!("{az} outside [0, 180)")));
            }
            cfg.azimuth_deg = az;
        }
        if let Some(el) = p.number("elevation_deg")? {
            if !(el > -90.0 && el < 90.0) {
                return Err(p.error("elevation_deg", format!("{el} outside (-90, 90)")));
            }
            cfg.elevation_deg = el;
        }
        cfg.position = p.point("position")?;
        p.finish()?;
    }
    Ok(cfg)
}

fn read_horn(h: &mut Obj, out: &mut HornSpec) -> Result<(), ConfigError> {
    if let Some(g) = h.number("gain_dbi")? {
        out.gain_dbi = g;
    }
    for (key, slot) in [("hpbw_e_deg", &mut out.hpbw_e_deg), ("hpbw_h_deg", &mut out.hpbw_h_deg)] {
        if let Some(v) = h.number(key)? {
            if !(v > 0.0 && v < 180.0) {
                return Err(h.error(key, format!("{v} outside (0, 180)")));
            }
            *slot = v;
        }
    }
    Ok(())
}

fn read_rf(rf: &mut Obj, out: &mut RfConfig) -> Result<(), ConfigError> {
    if let Some(f) = rf.number("frequency_hz")? {
        if f <= 0.0 {
            return Err(rf.error("frequency_hz", "must be positive".into()));
        }
        out.frequency_hz = f;
    }
    if let Some(p) = rf.number("tx_power_dbm")? {
        out.tx_power_dbm = p;
    }
    if let Some(mut a) = rf.object("antenna")? {
        read_horn(&mut a, &mut out.tx_antenna)?;
        a.finish()?;
        out.rx_antenna = out.tx_antenna;
    }
    if let Some(mut a) = rf.object("rx_antenna")? {
        read_horn(&mut a, &mut out.rx_antenna)?;
        a.finish()?;
    }
    match rf.take("rx_aim") {
        None => {}
        Some(Value::String(s)) if s == "anchor" => out.rx_aim = RxAim::Anchor,
        Some(v) => {
            let dir = as_point(&v)
                .and_then(Vec3::try_normalize)
                .ok_or_else(|| rf.error("rx_aim", "expected \"anchor\" or a non-zero [x, y, z] direction".into()))?;
            out.rx_aim = RxAim::Direction(dir);
        }
    }
    Ok(())
}

fn read_sim(s: &mut Obj, out: &mut SimConfig) -> Result<(), ConfigError> {
    if let Some(o) = s.number("max_order")? {
        if o < 0.0 || o.fract() != 0.0 || o > 8.0 {
            return Err(s.error("max_order", format!("{o} is not an integer in [0, 8]")));
        }
        out.max_order = o as usize;
    }
    if let Some(a) = s.number("patch_area_m2")? {
        if a <= 0.0 {
            return Err(s.error("patch_area_m2", "must be positive".into()));
        }
        out.patch_area = a;
    }
    match s.take("lobe_exponent") {
        None | Some(Value::Null) => {}
        Some(v) => match v.as_u64() {
            Some(e) if (1..=64).contains(&e) => out.lobe_exponent = Some(e as u32),
            _ => return Err(s.error("lobe_exponent", "expected an integer in [1, 64]".into())),
        },
    }
    if let Some(t) = s.number("outage_threshold_dbm")? {
        out.outage_threshold_dbm = t;
    }
    if let Some(a) = s.number("max_facet_angle_deg")? {
        if !(a > 0.0 && a <= 45.0) {
            return Err(s.error("max_facet_angle_deg", format!("{a} outside (0, 45]")));
        }
        out.max_facet_angle_deg = a;
    }
    if let Some(l) = s.number("max_path_loss_db")? {
        if l <= 0.0 {
            return Err(s.error("max_path_loss_db", "must be positive".into()));
        }
        out.max_path_loss_db = l;
    }
    Ok(())
}

fn set_len(o: &mut Obj, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
    if let Some(v) = o.positive_length(key)? {
        *slot = v;
    }
    Ok(())
}

fn set_len_nonneg(o: &mut Obj, key: &str, slot: &mut f64) -> Result<(), ConfigError> {
    if let Some(v) = o.length(key)? {
        if v < 0.0 {
            return Err(o.error(key, "must not be negative".into()));
        }
        *slot = v;
    }
    Ok(())
}

fn as_point(v: &Value) -> Option<Vec3> {
    let a = v.as_array()?;
    if a.len() != 3 {
        return None;
    }
    let c: Vec<f64> = a.iter().filter_map(Value::as_f64).collect();
    (c.len() == 3).then(|| Vec3::new(c[0], c[1], c[2])).filter(|p| p.is_finite())
}

/// Convert a length value to meters.
pub fn parse_length(v: &Value) -> Result<f64, String> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| "not a finite number".to_string()),
        Value::Object(m) => {
            let value = m.get("value").and_then(Value::as_f64).ok_or("expected a numeric `value`")?;
            let unit = m.get("unit").and_then(Value::as_str).ok_or("expected a `unit` of \"in\", \"cm\" or \"m\"")?;
            if m.len() != 2 {
                return Err("only `value` and `unit` are allowed".into());
            }
            let scale = match unit {
                "m" => 1.0,
                "cm" => 0.01,
                "in" => INCH,
                other => return Err(format!("unknown unit `{other}` (expected in, cm or m)")),
            };
            Ok(value * scale)
        }
        _ => Err("expected a length (meters, or {\"value\": v, \"unit\": u})".into()),
    }
}

/// A JSON object being consumed field by field, tracking its dotted path
/// and rejecting leftover (unknown) keys.
struct Obj<'a> {
    path: String,
    map: &'a Map<String, Value>,
    seen: BTreeSet<&'a str>,
}

impl<'a> Obj<'a> {
    fn root(v: &'a Value) -> Result<Obj<'a>, ConfigError> {
        match v {
            Value::Object(map) => Ok(Obj { path: String::new(), map, seen: BTreeSet::new() }),
            _ => Err(ConfigError::Syntax("top level must be an object".into())),
        }
    }

    fn field_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError::Field { field: self.field_path(key), message }
    }

    fn present(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn take(&mut self, key: &str) -> Option<Value> {
        let (k, v) = self.map.get_key_value(key)?;
        self.seen.insert(k.as_str());
        Some(v.clone())
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        let (k, v) = self.map.get_key_value(key)?;
        self.seen.insert(k.as_str());
        Some(v)
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| self.error(key, "expected a number".into())),
        }
    }

    fn string(&mut self, key: &str) -> Result<Option<String>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.error(key, "expected a string".into())),
        }
    }

    fn length(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_length(v).map(Some).map_err(|m| self.error(key, m)),
        }
    }

    fn positive_length(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.length(key)? {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(self.error(key, format!("must be positive, got {v}"))),
            other => Ok(other),
        }
    }

    fn point(&mut self, key: &str) -> Result<Option<Vec3>, ConfigError> {
        match self.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => as_point(v).map(Some).ok_or_else(|| self.error(key, "expected [x, y, z] in meters".into())),
        }
    }

    fn object(&mut self, key: &str) -> Result<Option<Obj<'a>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Object(map)) => Ok(Some(Obj { path: self.field_path(key), map, seen: BTreeSet::new() })),
            Some(_) => Err(self.error(key, "expected an object".into())),
        }
    }

    fn nullable_object(&mut self, key: &str) -> Result<Option<Obj<'a>>, ConfigError> {
        match self.map.get(key) {
            Some(Value::Null) => {
                self.get(key);
                Ok(None)
            }
            _ => self.object(key),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.map.keys().find(|k| !self.seen.contains(k.as_str())) {
            Some(k) => Err(self.error(k, "unknown field".into())),
            None => Ok(()),
        }
    }
}
