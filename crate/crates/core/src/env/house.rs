//! Procedural indoor worlds: an occupancy grid of 0.25 m cells carved into
//! typed rooms connected by doors, with objects placed according to
//! room-affinity priors.
//!
//! Objects sit on free cells and do not block movement; collision happens
//! against walls only. This keeps the 0.1 m success ring reachable (a cell
//! center adjacent to a blocked object would already be 0.125 m away).

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Cell edge length in meters.
pub const CELL: f64 = 0.25;
pub const N_CLASSES: usize = 5;
pub const N_ROOM_TYPES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Chair,
    Cushion,
    Table,
    Cabinet,
    Sink,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; N_CLASSES] =
        [ObjectClass::Chair, ObjectClass::Cushion, ObjectClass::Table, ObjectClass::Cabinet, ObjectClass::Sink];

    pub fn index(self) -> usize {
        match self {
            ObjectClass::Chair => 0,
            ObjectClass::Cushion => 1,
            ObjectClass::Table => 2,
            ObjectClass::Cabinet => 3,
            ObjectClass::Sink => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<ObjectClass> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectClass::Chair => "chair",
            ObjectClass::Cushion => "cushion",
            ObjectClass::Table => "table",
            ObjectClass::Cabinet => "cabinet",
            ObjectClass::Sink => "sink",
        }
    }

    pub fn from_name(s: &str) -> Option<ObjectClass> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Footprint cell count: tables and cabinets occupy a domino, the rest
    /// a single cell.
    fn footprint_len(self) -> usize {
        match self {
            ObjectClass::Table | ObjectClass::Cabinet => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoomType {
    Kitchen,
    Bathroom,
    Bedroom,
    LivingRoom,
    Hallway,
    Storage,
}

impl RoomType {
    pub const ALL: [RoomType; N_ROOM_TYPES] = [
        RoomType::Kitchen,
        RoomType::Bathroom,
        RoomType::Bedroom,
        RoomType::LivingRoom,
        RoomType::Hallway,
        RoomType::Storage,
    ];

    pub fn index(self) -> usize {
        match self {
            RoomType::Kitchen => 0,
            RoomType::Bathroom => 1,
            RoomType::Bedroom => 2,
            RoomType::LivingRoom => 3,
            RoomType::Hallway => 4,
            RoomType::Storage => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RoomType::Kitchen => "kitchen",
            RoomType::Bathroom => "bathroom",
            RoomType::Bedroom => "bedroom",
            RoomType::LivingRoom => "living_room",
            RoomType::Hallway => "hallway",
            RoomType::Storage => "storage",
        }
    }
}

/// P(room type | object class), indexed by `RoomType::index`. Sinks are
/// supported only in kitchens and bathrooms.
pub fn placement_prior(class: ObjectClass) -> [f64; N_ROOM_TYPES] {
    match class {
        //                            kitchen bath  bed   living hall  storage
        ObjectClass::Chair => [0.25, 0.00, 0.15, 0.45, 0.05, 0.10],
        ObjectClass::Cushion => [0.00, 0.00, 0.40, 0.50, 0.00, 0.10],
        ObjectClass::Table => [0.35, 0.00, 0.10, 0.45, 0.00, 0.10],
        ObjectClass::Cabinet => [0.30, 0.10, 0.15, 0.15, 0.05, 0.25],
        ObjectClass::Sink => [0.60, 0.40, 0.00, 0.00, 0.00, 0.00],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HouseParams {
    /// Total grid size in cells, boundary wall included.
    pub grid_width: usize,
    pub grid_height: usize,
    pub min_rooms: usize,
    pub max_rooms: usize,
    pub min_objects_per_class: usize,
    pub max_objects_per_class: usize,
}

impl Default for HouseParams {
    fn default() -> Self {
        HouseParams {
            grid_width: 22,
            grid_height: 18,
            min_rooms: 3,
            max_rooms: 5,
            min_objects_per_class: 1,
            max_objects_per_class: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.x0 && x < self.x0 + self.w && y >= self.y0 && y < self.y0 + self.h
    }

    fn area(&self) -> usize {
        self.w * self.h
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Room {
    pub kind: RoomType,
    pub rect: Rect,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Door {
    pub cell: [usize; 2],
    pub room: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub class: ObjectClass,
    pub footprint: Vec<[usize; 2]>,
    #[serde(skip)]
    pub centroid: (f64, f64),
}

impl ObjectInstance {
    fn compute_centroid(&mut self) {
        let n = self.footprint.len() as f64;
        let sx: f64 = self.footprint.iter().map(|c| cell_center(c[0], c[1]).0).sum();
        let sy: f64 = self.footprint.iter().map(|c| cell_center(c[0], c[1]).1).sum();
        self.centroid = (sx / n, sy / n);
    }
}

pub fn cell_center(ix: usize, iy: usize) -> (f64, f64) {
    ((ix as f64 + 0.5) * CELL, (iy as f64 + 0.5) * CELL)
}

pub const HOUSE_FORMAT: &str = "objnav.house";
pub const HOUSE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HouseFile {
    format: String,
    format_version: u32,
    id: String,
    seed: u64,
    params: HouseParams,
    width: usize,
    height: usize,
    /// Row-major run-length occupancy, one string per row; `#` blocked, `.` free.
    occupancy: Vec<String>,
    rooms: Vec<Room>,
    doors: Vec<Door>,
    objects: Vec<ObjectInstance>,
}

#[derive(Debug, Clone)]
pub struct House {
    id: String,
    seed: u64,
    params: HouseParams,
    width: usize,
    height: usize,
    blocked: Vec<bool>,
    room_of: Vec<u16>, // u16::MAX = no room (wall)
    rooms: Vec<Room>,
    doors: Vec<Door>,
    objects: Vec<ObjectInstance>,
}

const NO_ROOM: u16 = u16::MAX;

impl House {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &HouseParams {
        &self.params
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn in_bounds(&self, ix: i64, iy: i64) -> bool {
        ix >= 0 && iy >= 0 && (ix as usize) < self.width && (iy as usize) < self.height
    }

    /// Out-of-bounds counts as blocked.
    pub fn is_blocked(&self, ix: i64, iy: i64) -> bool {
        if !self.in_bounds(ix, iy) {
            return true;
        }
        self.blocked[iy as usize * self.width + ix as usize]
    }

    pub fn is_free(&self, ix: i64, iy: i64) -> bool {
        !self.is_blocked(ix, iy)
    }

    /// Cell containing a continuous point, if inside the grid.
    pub fn cell_of_point(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        if !x.is_finite() || !y.is_finite() || x < 0.0 || y < 0.0 {
            return None;
        }
        let ix = (x / CELL).floor() as usize;
        let iy = (y / CELL).floor() as usize;
        if ix < self.width && iy < self.height {
            Some((ix, iy))
        } else {
            None
        }
    }

    pub fn room_at(&self, ix: usize, iy: usize) -> Option<usize> {
        match self.room_of[self.idx(ix, iy)] {
            NO_ROOM => None,
            r => Some(r as usize),
        }
    }

    pub fn rooms(&self) -> &[Room] {
        &self.rooms
    }

    pub fn doors(&self) -> &[Door] {
        &self.doors
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn objects_of(&self, class: ObjectClass) -> impl Iterator<Item = &ObjectInstance> {
        self.objects.iter().filter(move |o| o.class == class)
    }

    pub fn has_class(&self, class: ObjectClass) -> bool {
        self.objects_of(class).next().is_some()
    }

    pub fn has_all_classes(&self) -> bool {
        ObjectClass::ALL.iter().all(|&c| self.has_class(c))
    }

    pub fn free_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for iy in 0..self.height {
            for ix in 0..self.width {
                if !self.blocked[self.idx(ix, iy)] {
                    out.push((ix, iy));
                }
            }
        }
        out
    }

    /// Room of the object footprint's first cell.
    pub fn object_room(&self, obj: &ObjectInstance) -> Option<usize> {
        self.room_at(obj.footprint[0][0], obj.footprint[0][1])
    }

    /// Structural invariants: blocked boundary, one free connected
    /// component, footprints on free cells of a single room and disjoint.
    pub fn validate(&self) -> Result<()> {
        if self.blocked.len() != self.width * self.height || self.room_of.len() != self.blocked.len() {
            return Err(Error::Contract("house buffers do not match grid size".into()));
        }
        for ix in 0..self.width {
            if !self.blocked[self.idx(ix, 0)] || !self.blocked[self.idx(ix, self.height - 1)] {
                return Err(Error::Contract("grid boundary must be blocked".into()));
            }
        }
        for iy in 0..self.height {
            if !self.blocked[self.idx(0, iy)] || !self.blocked[self.idx(self.width - 1, iy)] {
                return Err(Error::Contract("grid boundary must be blocked".into()));
            }
        }
        let free = self.free_cells();
        if free.is_empty() {
            return Err(Error::Contract("house has no free space".into()));
        }
        // connectivity by flood fill over axial neighbors
        let mut seen = vec![false; self.blocked.len()];
        let mut stack = vec![free[0]];
        seen[self.idx(free[0].0, free[0].1)] = true;
        let mut count = 0usize;
        while let Some((ix, iy)) = stack.pop() {
            count += 1;
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (ix as i64 + dx, iy as i64 + dy);
                if self.is_free(nx, ny) && !seen[self.idx(nx as usize, ny as usize)] {
                    seen[self.idx(nx as usize, ny as usize)] = true;
                    stack.push((nx as usize, ny as usize));
                }
            }
        }
        if count != free.len() {
            return Err(Error::Contract(format!(
                "free space is disconnected: {count} of {} cells reachable",
                free.len()
            )));
        }
        let mut used = HashMap::new();
        for (i, obj) in self.objects.iter().enumerate() {
            if obj.footprint.is_empty() {
                return Err(Error::Contract("empty object footprint".into()));
            }
            let room = self.room_at(obj.footprint[0][0], obj.footprint[0][1]);
            if room.is_none() {
                return Err(Error::Contract("object outside any room".into()));
            }
            for c in &obj.footprint {
                if self.is_blocked(c[0] as i64, c[1] as i64) {
                    return Err(Error::Contract("object footprint on blocked cell".into()));
                }
                if self.room_at(c[0], c[1]) != room {
                    return Err(Error::Contract("object footprint spans rooms".into()));
                }
                if used.insert(*c, i).is_some() {
                    return Err(Error::Contract("object footprints overlap".into()));
                }
            }
            if obj.footprint.len() == 2 {
                let a = obj.footprint[0];
                let b = obj.footprint[1];
                let d = a[0].abs_diff(b[0]) + a[1].abs_diff(b[1]);
                if d != 1 {
                    return Err(Error::Contract("domino footprint not adjacent".into()));
                }
            }
        }
        Ok(())
    }

    // ── serialization ──────────────────────────────────────────────

    fn to_file(&self) -> HouseFile {
        HouseFile {
            format: HOUSE_FORMAT.to_string(),
            format_version: HOUSE_FORMAT_VERSION,
            id: self.id.clone(),
            seed: self.seed,
            params: self.params,
            width: self.width,
            height: self.height,
            occupancy: (0..self.height).map(|iy| self.encode_row(iy)).collect(),
            rooms: self.rooms.clone(),
            doors: self.doors.clone(),
            objects: self.objects.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    fn encode_row(&self, iy: usize) -> String {
        let mut out = String::new();
        let mut run_char = if self.blocked[self.idx(0, iy)] { '#' } else { '.' };
        let mut run_len = 1usize;
        for ix in 1..self.width {
            let c = if self.blocked[self.idx(ix, iy)] { '#' } else { '.' };
            if c == run_char {
                run_len += 1;
            } else {
                out.push_str(&format!("{run_len}{run_char}"));
                run_char = c;
                run_len = 1;
            }
        }
        out.push_str(&format!("{run_len}{run_char}"));
        out
    }

    fn decode_row(s: &str, width: usize) -> Result<Vec<bool>> {
        let mut out = Vec::with_capacity(width);
        let mut num = String::new();
        for ch in s.chars() {
            if ch.is_ascii_digit() {
                num.push(ch);
            } else {
                let n: usize = num.parse().map_err(|_| Error::Data(format!("bad run length in {s:?}")))?;
                num.clear();
                let v = match ch {
                    '#' => true,
                    '.' => false,
                    other => return Err(Error::Data(format!("bad occupancy char {other:?}"))),
                };
                out.extend(std::iter::repeat(v).take(n));
            }
        }
        if !num.is_empty() || out.len() != width {
            return Err(Error::Data(format!("occupancy row {s:?} does not decode to width {width}")));
        }
        Ok(out)
    }

    pub fn from_json(text: &str) -> Result<House> {
        House::from_file(serde_json::from_str(text)?)
    }

    fn from_file(file: HouseFile) -> Result<House> {
        if file.format != HOUSE_FORMAT {
            return Err(Error::Data(format!("not a house file: format {:?}", file.format)));
        }
        if file.format_version != HOUSE_FORMAT_VERSION {
            return Err(Error::Data(format!("unsupported house format version {}", file.format_version)));
        }
        let mut blocked = Vec::with_capacity(file.width * file.height);
        if file.occupancy.len() != file.height {
            return Err(Error::Data("occupancy row count does not match height".into()));
        }
        for row in &file.occupancy {
            blocked.extend(Self::decode_row(row, file.width)?);
        }
        let room_of = build_room_map(file.width, file.height, &file.rooms, &file.doors)?;
        let mut objects = file.objects;
        for o in &mut objects {
            o.compute_centroid();
        }
        let house = House {
            id: file.id,
            seed: file.seed,
            params: file.params,
            width: file.width,
            height: file.height,
            blocked,
            room_of,
            rooms: file.rooms,
            doors: file.doors,
            objects,
        };
        house.validate()?;
        Ok(house)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<House> {
        House::from_json(&std::fs::read_to_string(path)?)
    }
}

impl Serialize for House {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for House {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<House, D::Error> {
        let file = HouseFile::deserialize(deserializer)?;
        House::from_file(file).map_err(serde::de::Error::custom)
    }
}

fn build_room_map(width: usize, height: usize, rooms: &[Room], doors: &[Door]) -> Result<Vec<u16>> {
    let mut map = vec![NO_ROOM; width * height];
    for (i, room) in rooms.iter().enumerate() {
        for iy in room.rect.y0..room.rect.y0 + room.rect.h {
            for ix in room.rect.x0..room.rect.x0 + room.rect.w {
                if ix >= width || iy >= height {
                    return Err(Error::Data("room rect out of grid".into()));
                }
                map[iy * width + ix] = i as u16;
            }
        }
    }
    for door in doors {
        let [ix, iy] = door.cell;
        if ix >= width || iy >= height || door.room >= rooms.len() {
            return Err(Error::Data("door out of grid or room range".into()));
        }
        map[iy * width + ix] = door.room as u16;
    }
    Ok(map)
}

// ── generation ─────────────────────────────────────────────────────

const MIN_ROOM_SIDE: usize = 3;
const GENERATION_RETRIES: usize = 24;

pub fn generate_house(seed: u64, params: &HouseParams) -> Result<House> {
    if params.grid_width < MIN_ROOM_SIDE + 2
        || params.grid_height < MIN_ROOM_SIDE + 2
        || params.min_rooms == 0
        || params.max_rooms < params.min_rooms
        || params.max_objects_per_class < params.min_objects_per_class
    {
        return Err(Error::Config(format!("infeasible house params {params:?}")));
    }
    let mut last_err = None;
    for attempt in 0..GENERATION_RETRIES {
        let mut rng = rng::stream(seed, "house", attempt as u64);
        match try_generate(seed, params, &mut rng) {
            Ok(h) => return Ok(h),
            Err(e) => last_err = Some(e),
        }
    }
    Err(Error::Generation(format!(
        "house generation failed after {GENERATION_RETRIES} attempts: {}",
        last_err.expect("at least one attempt")
    )))
}

fn try_generate(seed: u64, params: &HouseParams, rng: &mut Rng) -> Result<House> {
    let (width, height) = (params.grid_width, params.grid_height);
    let interior = Rect { x0: 1, y0: 1, w: width - 2, h: height - 2 };
    let target_rooms = rng.gen_range(params.min_rooms..=params.max_rooms);

    // binary-space partition: split the largest region until enough rooms
    let mut regions = vec![interior];
    while regions.len() < target_rooms {
        let mut best: Option<usize> = None;
        for (i, r) in regions.iter().enumerate() {
            if r.w >= 2 * MIN_ROOM_SIDE + 1 || r.h >= 2 * MIN_ROOM_SIDE + 1 {
                if best.map_or(true, |b| r.area() > regions[b].area()) {
                    best = Some(i);
                }
            }
        }
        let Some(i) = best else {
            return Err(Error::Generation(format!(
                "cannot fit {target_rooms} rooms of side >= {MIN_ROOM_SIDE} in {width}x{height}"
            )));
        };
        let r = regions.swap_remove(i);
        let vertical = if r.w >= 2 * MIN_ROOM_SIDE + 1 && r.h >= 2 * MIN_ROOM_SIDE + 1 {
            if r.w == r.h { rng.gen() } else { r.w > r.h }
        } else {
            r.w >= 2 * MIN_ROOM_SIDE + 1
        };
        if vertical {
            // wall column at x0+off, leaving >= MIN_ROOM_SIDE on each side
            let off = rng.gen_range(MIN_ROOM_SIDE..=r.w - MIN_ROOM_SIDE - 1);
            regions.push(Rect { x0: r.x0, y0: r.y0, w: off, h: r.h });
            regions.push(Rect { x0: r.x0 + off + 1, y0: r.y0, w: r.w - off - 1, h: r.h });
        } else {
            let off = rng.gen_range(MIN_ROOM_SIDE..=r.h - MIN_ROOM_SIDE - 1);
            regions.push(Rect { x0: r.x0, y0: r.y0, w: r.w, h: off });
            regions.push(Rect { x0: r.x0, y0: r.y0 + off + 1, w: r.w, h: r.h - off - 1 });
        }
    }

    // occupancy: everything blocked, then carve room interiors
    let mut blocked = vec![true; width * height];
    for r in &regions {
        for iy in r.y0..r.y0 + r.h {
            for ix in r.x0..r.x0 + r.w {
                blocked[iy * width + ix] = false;
            }
        }
    }

    // room types: uniform draws, then force prior support to exist
    let mut kinds: Vec<RoomType> =
        (0..regions.len()).map(|_| RoomType::ALL[rng.gen_range(0..N_ROOM_TYPES)]).collect();
    let wet = |k: RoomType| matches!(k, RoomType::Kitchen | RoomType::Bathroom);
    let soft = |k: RoomType| matches!(k, RoomType::Bedroom | RoomType::LivingRoom | RoomType::Storage);
    if !kinds.iter().any(|&k| wet(k)) {
        let i = rng.gen_range(0..kinds.len());
        kinds[i] = RoomType::Kitchen;
    }
    if kinds.len() >= 2 && !kinds.iter().any(|&k| soft(k)) {
        // pick a slot that leaves at least one wet room standing
        let wet_count = kinds.iter().filter(|&&k| wet(k)).count();
        let candidates: Vec<usize> = kinds
            .iter()
            .enumerate()
            .filter(|(_, &k)| !wet(k) || wet_count > 1)
            .map(|(i, _)| i)
            .collect();
        let i = candidates[rng.gen_range(0..candidates.len())];
        kinds[i] = RoomType::LivingRoom;
    }
    let rooms: Vec<Room> = regions.iter().zip(&kinds).map(|(&rect, &kind)| Room { kind, rect }).collect();

    // doors: spanning tree over the room adjacency graph, plus occasional extras
    let mut doors = Vec::new();
    if rooms.len() > 1 {
        let mut edges: Vec<(usize, usize, Vec<(usize, usize)>)> = Vec::new();
        for i in 0..rooms.len() {
            for j in i + 1..rooms.len() {
                let mut cells = Vec::new();
                for iy in 1..height - 1 {
                    for ix in 1..width - 1 {
                        if !blocked[iy * width + ix] {
                            continue;
                        }
                        let horiz = rooms[i].rect.contains(ix.wrapping_sub(1), iy) && rooms[j].rect.contains(ix + 1, iy)
                            || rooms[j].rect.contains(ix.wrapping_sub(1), iy) && rooms[i].rect.contains(ix + 1, iy);
                        let vert = rooms[i].rect.contains(ix, iy.wrapping_sub(1)) && rooms[j].rect.contains(ix, iy + 1)
                            || rooms[j].rect.contains(ix, iy.wrapping_sub(1)) && rooms[i].rect.contains(ix, iy + 1);
                        if horiz || vert {
                            cells.push((ix, iy));
                        }
                    }
                }
                if !cells.is_empty() {
                    edges.push((i, j, cells));
                }
            }
        }
        edges.shuffle(rng);
        let mut parent: Vec<usize> = (0..rooms.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        let mut connected = 1;
        for (i, j, cells) in &edges {
            let (ri, rj) = (find(&mut parent, *i), find(&mut parent, *j));
            let tree_edge = ri != rj;
            if tree_edge {
                parent[ri] = rj;
                connected += 1;
            }
            if tree_edge || rng.gen_bool(0.2) {
                let &(ix, iy) = &cells[rng.gen_range(0..cells.len())];
                blocked[iy * width + ix] = false;
                doors.push(Door { cell: [ix, iy], room: *i });
            }
        }
        if connected != rooms.len() {
            return Err(Error::Generation("room adjacency graph is disconnected".into()));
        }
    }

    let room_of = build_room_map(width, height, &rooms, &doors)?;

    // objects: sample a room type from the prior restricted to available
    // types, then a uniform room of that type, then a free spot
    let mut objects: Vec<ObjectInstance> = Vec::new();
    let mut occupied: Vec<bool> = vec![false; width * height];
    for class in ObjectClass::ALL {
        let count = rng.gen_range(params.min_objects_per_class..=params.max_objects_per_class);
        for _ in 0..count {
            let prior = placement_prior(class);
            let mut weights: Vec<f64> = rooms.iter().map(|r| prior[r.kind.index()]).collect();
            let mass: f64 = weights.iter().sum();
            if mass <= 0.0 {
                // no supported room type present; fall back to any room
                weights = vec![1.0; rooms.len()];
            }
            let room_idx = sample_weighted(&weights, rng);
            let rect = rooms[room_idx].rect;
            let mut placed = false;
            for try_idx in 0..60 {
                let len = if try_idx < 40 { class.footprint_len() } else { 1 };
                let ix = rect.x0 + rng.gen_range(0..rect.w);
                let iy = rect.y0 + rng.gen_range(0..rect.h);
                let footprint: Vec<[usize; 2]> = if len == 1 {
                    vec![[ix, iy]]
                } else {
                    let (dx, dy) = if rng.gen() { (1usize, 0usize) } else { (0, 1) };
                    let (jx, jy) = (ix + dx, iy + dy);
                    if !rect.contains(jx, jy) {
                        continue;
                    }
                    vec![[ix, iy], [jx, jy]]
                };
                if footprint.iter().any(|c| occupied[c[1] * width + c[0]]) {
                    continue;
                }
                for c in &footprint {
                    occupied[c[1] * width + c[0]] = true;
                }
                let mut obj = ObjectInstance { class, footprint, centroid: (0.0, 0.0) };
                obj.compute_centroid();
                objects.push(obj);
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::Generation(format!("no space for a {class} instance")));
            }
        }
    }

    let house = House {
        id: format!("h{seed:016x}"),
        seed,
        params: *params,
        width,
        height,
        blocked,
        room_of,
        rooms,
        doors,
        objects,
    };
    house.validate()?;
    Ok(house)
}

fn sample_weighted(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.gen::<f64>() * total;
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u < cum {
            return i;
        }
    }
    weights.len() - 1
}
