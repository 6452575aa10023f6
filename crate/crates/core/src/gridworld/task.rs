use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kv::KvDoc;
use crate::{Error, Result};

const LAYOUT_VERSION: usize = 1;
const MIN_CLEARANCE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskName {
    FourRoom,
    Zigzag,
    Maze,
    Multiroom,
}

impl TaskName {
    pub const ALL: [TaskName; 4] = [
        TaskName::FourRoom,
        TaskName::Zigzag,
        TaskName::Maze,
        TaskName::Multiroom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskName::FourRoom => "four_room",
            TaskName::Zigzag => "zigzag",
            TaskName::Maze => "maze",
            TaskName::Multiroom => "multiroom",
        }
    }

    pub fn goal_count(self) -> usize {
        match self {
            TaskName::FourRoom => 4,
            TaskName::Zigzag => 6,
            TaskName::Maze => 10,
            TaskName::Multiroom => 6,
        }
    }

    pub fn max_steps(self) -> usize {
        match self {
            TaskName::FourRoom => 200,
            TaskName::Zigzag => 150,
            TaskName::Maze => 300,
            TaskName::Multiroom => 500,
        }
    }

    /// Observation width: agent (x, y) plus (x, y, reached) per goal.
    pub fn obs_dim(self) -> usize {
        2 + 3 * self.goal_count()
    }

    fn layout_text(self) -> &'static str {
        match self {
            TaskName::FourRoom => include_str!("../../tasks/four_room.task"),
            TaskName::Zigzag => include_str!("../../tasks/zigzag.task"),
            TaskName::Maze => include_str!("../../tasks/maze.task"),
            TaskName::Multiroom => include_str!("../../tasks/multiroom.task"),
        }
    }
}

impl fmt::Display for TaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskName::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown task `{s}`")))
    }
}

/// Axis-aligned wall segment in world units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl Wall {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn is_vertical(&self) -> bool {
        self.x1 == self.x2 && self.y1 != self.y2
    }

    pub fn is_horizontal(&self) -> bool {
        self.y1 == self.y2 && self.x1 != self.x2
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let cx = p[0].clamp(self.x1.min(self.x2), self.x1.max(self.x2));
        let cy = p[1].clamp(self.y1.min(self.y2), self.y1.max(self.y2));
        ((p[0] - cx).powi(2) + (p[1] - cy).powi(2)).sqrt()
    }
}

/// Static description of one navigation task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: TaskName,
    pub world_size: f64,
    pub walls: Vec<Wall>,
    pub goals: Vec<[f64; 2]>,
    pub goal_radius: f64,
    pub max_steps: usize,
    pub start: [f64; 2],
    pub start_jitter_radius: f64,
    pub step_scale: f64,
    pub noise_std: f64,
}

impl TaskSpec {
    /// One of the shipped layouts.
    pub fn builtin(name: TaskName) -> Self {
        Self::parse(name.layout_text(), &format!("<builtin {name}>"))
            .expect("shipped task layouts are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let doc = KvDoc::parse(text, source)?;
        let version = doc.usize("version")?;
        if version != LAYOUT_VERSION {
            let e = doc.require("version")?;
            return Err(doc.err(e, format!("unsupported layout version {version}")));
        }
        let name_entry = doc.require("name")?;
        let name: TaskName = name_entry
            .value
            .parse()
            .map_err(|_| doc.err(name_entry, format!("unknown task `{}`", name_entry.value)))?;

        let pair = |key: &str| -> Result<[f64; 2]> {
            let e = doc.require(key)?;
            let v: Vec<f64> = doc.list_of(e)?;
            <[f64; 2]>::try_from(v).map_err(|_| doc.err(e, "expected two numbers"))
        };

        let mut goals = Vec::new();
        for e in doc.all("goal") {
            let v: Vec<f64> = doc.list_of(e)?;
            goals.push(<[f64; 2]>::try_from(v).map_err(|_| doc.err(e, "expected `x, y`"))?);
        }
        let mut walls = Vec::new();
        for e in doc.all("wall") {
            let v: Vec<f64> = doc.list_of(e)?;
            let [x1, y1, x2, y2] =
                <[f64; 4]>::try_from(v).map_err(|_| doc.err(e, "expected `x1, y1, x2, y2`"))?;
            walls.push(Wall::new(x1, y1, x2, y2));
        }

        let spec = TaskSpec {
            name,
            world_size: doc.f64("world_size")?,
            walls,
            goals,
            goal_radius: doc.f64("goal_radius")?,
            max_steps: doc.usize("max_steps")?,
            start: pair("start")?,
            start_jitter_radius: doc.f64("start_jitter_radius")?,
            step_scale: doc.f64("step_scale")?,
            noise_std: doc.f64("noise_std")?,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical config text; `parse(to_config_text())` reproduces `self`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# navigation task layout");
        let _ = writeln!(s, "version = {LAYOUT_VERSION}");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "world_size = {:?}", self.world_size);
        let _ = writeln!(s, "goal_radius = {:?}", self.goal_radius);
        let _ = writeln!(s, "max_steps = {}", self.max_steps);
        let _ = writeln!(s, "start = {:?}, {:?}", self.start[0], self.start[1]);
        let _ = writeln!(s, "start_jitter_radius = {:?}", self.start_jitter_radius);
        let _ = writeln!(s, "step_scale = {:?}", self.step_scale);
        let _ = writeln!(s, "noise_std = {:?}", self.noise_std);
        for g in &self.goals {
            let _ = writeln!(s, "goal = {:?}, {:?}", g[0], g[1]);
        }
        for w in &self.walls {
            let _ = writeln!(s, "wall = {:?}, {:?}, {:?}, {:?}", w.x1, w.y1, w.x2, w.y2);
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.to_config_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn obs_dim(&self) -> usize {
        2 + 3 * self.goals.len()
    }

    pub fn wall_clearance(&self, p: [f64; 2]) -> f64 {
        self.walls
            .iter()
            .map(|w| w.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn inside_world(&self, p: [f64; 2]) -> bool {
        p.iter().all(|&c| c > 0.0 && c < self.world_size)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTask(format!("{}: {m}", self.name)));
        if self.goals.len() != self.name.goal_count() {
            return bad(format!(
                "expected {} goals, found {}",
                self.name.goal_count(),
                self.goals.len()
            ));
        }
        if self.max_steps != self.name.max_steps() {
            return bad(format!(
                "max_steps must be {}, found {}",
                self.name.max_steps(),
                self.max_steps
            ));
        }
        if !(self.world_size > 0.0 && self.goal_radius > 0.0 && self.step_scale > 0.0) {
            return bad("world_size, goal_radius and step_scale must be positive".into());
        }
        if !(self.noise_std >= 0.0 && self.start_jitter_radius >= 0.0) {
            return bad("noise_std and start_jitter_radius must be non-negative".into());
        }
        for w in &self.walls {
            if !(w.is_vertical() || w.is_horizontal()) {
                return bad(format!("wall {w:?} is not a proper axis-aligned segment"));
            }
        }
        for (i, g) in self.goals.iter().enumerate() {
            if !self.inside_world(*g) || self.wall_clearance(*g) < MIN_CLEARANCE {
                return bad(format!("goal {i} at {g:?} is outside the world or on a wall"));
            }
        }
        let margin = self.start_jitter_radius;
        if !self.inside_world(self.start)
            || self.start.iter().any(|&c| c <= margin || c >= self.world_size - margin)
            || self.wall_clearance(self.start) <= margin
        {
            return bad("start jitter disk must lie inside the world and off every wall".into());
        }
        Ok(())
    }
}
