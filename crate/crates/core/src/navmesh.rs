//! Navigation meshes: areas grouped into named places, and point location.
//!
//! Areas are axis-aligned rectangles with a representative height. Places are
//! ordered by case-sensitive name, and that order fixes each place's position
//! in a token. A place's `place_id` is its token position.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Vec3;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("malformed mesh document: {0}")]
    Malformed(String),
    #[error("duplicate place name {0:?}")]
    DuplicatePlaceName(String),
    #[error("unknown place reference {place:?} in area {area_id}")]
    UnknownPlaceReference { area_id: u32, place: String },
    #[error("duplicate area id {0}")]
    DuplicateAreaId(u32),
    #[error("degenerate bounds for area {0}: require x_min < x_max and y_min < y_max")]
    DegenerateArea(u32),
    #[error("edge ({0}, {1}) references an unknown area")]
    UnknownEdgeArea(u32, u32),
    #[error("mesh {0:?} has no places")]
    NoPlaces(String),
    #[error("empty mesh")]
    EmptyMesh,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// On-disk mesh format (UTF-8 JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDocument {
    pub map_name: String,
    pub places: Vec<PlaceDocument>,
    pub areas: Vec<AreaDocument>,
    #[serde(default)]
    pub edges: Vec<(u32, u32)>,
    /// Height separating upper and lower renderings on multi-level maps.
    #[serde(default)]
    pub z_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaceDocument {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaDocument {
    pub id: u32,
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
    pub z_center: f64,
    pub place_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Squared planar distance from `(x, y)` to the rectangle; zero inside.
    pub fn distance_sq(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x_min - x).max(0.0).max(x - self.x_max);
        let dy = (self.y_min - y).max(0.0).max(y - self.y_max);
        dx * dx + dy * dy
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NavArea {
    pub area_id: u32,
    pub bounds: Rect,
    pub z_center: f64,
    pub place_id: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Place {
    pub place_id: u32,
    pub name: String,
    pub token_position: usize,
}

/// Result of [`NavMesh::locate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Location {
    pub area_id: u32,
    pub place_id: u32,
}

/// Uniform bucket grid over the mesh extent; each cell lists the areas overlapping it.
#[derive(Debug, Clone)]
struct AreaGrid {
    extent: Rect,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl AreaGrid {
    fn build(areas: &[NavArea], extent: Rect) -> Self {
        let side = ((areas.len() as f64).sqrt().ceil() as usize * 2).clamp(1, 256);
        let (nx, ny) = (side, side);
        let mut cells = vec![Vec::new(); nx * ny];
        let grid = AreaGrid {
            extent,
            nx,
            ny,
            cells: Vec::new(),
        };
        for (idx, area) in areas.iter().enumerate() {
            let (cx0, cy0) = grid.cell_of(area.bounds.x_min, area.bounds.y_min);
            let (cx1, cy1) = grid.cell_of(area.bounds.x_max, area.bounds.y_max);
            for cy in cy0..=cy1 {
                for cx in cx0..=cx1 {
                    cells[cy * nx + cx].push(idx as u32);
                }
            }
        }
        AreaGrid { cells, ..grid }
    }

    fn cell_of(&self, x: f64, y: f64) -> (usize, usize) {
        let w = self.extent.x_max - self.extent.x_min;
        let h = self.extent.y_max - self.extent.y_min;
        let fx = ((x - self.extent.x_min) / w * self.nx as f64).floor();
        let fy = ((y - self.extent.y_min) / h * self.ny as f64).floor();
        (
            (fx.max(0.0) as usize).min(self.nx - 1),
            (fy.max(0.0) as usize).min(self.ny - 1),
        )
    }

    fn candidates(&self, x: f64, y: f64) -> &[u32] {
        if !self.extent.contains(x, y) {
            return &[];
        }
        let (cx, cy) = self.cell_of(x, y);
        &self.cells[cy * self.nx + cx]
    }
}

#[derive(Debug, Clone)]
pub struct NavMesh {
    pub map_name: String,
    pub areas: Vec<NavArea>,
    pub edges: Vec<(u32, u32)>,
    pub places: Vec<Place>,
    pub z_threshold: Option<f64>,
    place_by_name: HashMap<String, u32>,
    grid: Option<AreaGrid>,
}

impl PartialEq for NavMesh {
    fn eq(&self, other: &Self) -> bool {
        self.map_name == other.map_name
            && self.areas == other.areas
            && self.edges == other.edges
            && self.places == other.places
            && self.z_threshold == other.z_threshold
    }
}

impl NavMesh {
    pub fn from_json(text: &str) -> Result<Self, MeshError> {
        let doc: MeshDocument =
            serde_json::from_str(text).map_err(|e| MeshError::Malformed(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MeshError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Validates a document and assigns canonical place order.
    pub fn from_document(doc: MeshDocument) -> Result<Self, MeshError> {
        if doc.places.is_empty() {
            return Err(MeshError::NoPlaces(doc.map_name));
        }
        let mut names: Vec<String> = Vec::with_capacity(doc.places.len());
        let mut seen = HashSet::new();
        for p in &doc.places {
            if !seen.insert(p.name.as_str()) {
                return Err(MeshError::DuplicatePlaceName(p.name.clone()));
            }
            names.push(p.name.clone());
        }
        names.sort();
        let places: Vec<Place> = names
            .into_iter()
            .enumerate()
            .map(|(i, name)| Place {
                place_id: i as u32,
                name,
                token_position: i,
            })
            .collect();
        let place_by_name: HashMap<String, u32> =
            places.iter().map(|p| (p.name.clone(), p.place_id)).collect();

        let mut area_ids = HashSet::new();
        let mut areas = Vec::with_capacity(doc.areas.len());
        for a in &doc.areas {
            if !area_ids.insert(a.id) {
                return Err(MeshError::DuplicateAreaId(a.id));
            }
            let bounds = Rect {
                x_min: a.x_min,
                y_min: a.y_min,
                x_max: a.x_max,
                y_max: a.y_max,
            };
            let finite = [a.x_min, a.y_min, a.x_max, a.y_max, a.z_center]
                .iter()
                .all(|v| v.is_finite());
            if !finite || !(a.x_min < a.x_max && a.y_min < a.y_max) {
                return Err(MeshError::DegenerateArea(a.id));
            }
            let place_id =
                *place_by_name
                    .get(&a.place_name)
                    .ok_or_else(|| MeshError::UnknownPlaceReference {
                        area_id: a.id,
                        place: a.place_name.clone(),
                    })?;
            areas.push(NavArea {
                area_id: a.id,
                bounds,
                z_center: a.z_center,
                place_id,
            });
        }
        for &(a, b) in &doc.edges {
            if !area_ids.contains(&a) || !area_ids.contains(&b) {
                return Err(MeshError::UnknownEdgeArea(a, b));
            }
        }
        let grid = extent_of(&areas).map(|ext| AreaGrid::build(&areas, ext));
        Ok(NavMesh {
            map_name: doc.map_name,
            areas,
            edges: doc.edges,
            places,
            z_threshold: doc.z_threshold,
            place_by_name,
            grid,
        })
    }

    pub fn to_document(&self) -> MeshDocument {
        MeshDocument {
            map_name: self.map_name.clone(),
            places: self
                .places
                .iter()
                .map(|p| PlaceDocument { name: p.name.clone() })
                .collect(),
            areas: self
                .areas
                .iter()
                .map(|a| AreaDocument {
                    id: a.area_id,
                    x_min: a.bounds.x_min,
                    y_min: a.bounds.y_min,
                    x_max: a.bounds.x_max,
                    y_max: a.bounds.y_max,
                    z_center: a.z_center,
                    place_name: self.places[a.place_id as usize].name.clone(),
                })
                .collect(),
            edges: self.edges.clone(),
            z_threshold: self.z_threshold,
        }
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn place(&self, place_id: u32) -> Option<&Place> {
        self.places.get(place_id as usize)
    }

    pub fn place_by_name(&self, name: &str) -> Option<&Place> {
        self.place_by_name.get(name).and_then(|&id| self.place(id))
    }

    /// Bounding rectangle of all areas.
    pub fn extent(&self) -> Option<Rect> {
        self.grid.as_ref().map(|g| g.extent)
    }

    /// Maps a position to its area and place.
    ///
    /// Among areas containing `(x, y)` the one with the nearest `z_center` wins.
    /// Points outside every area snap to the nearest rectangle, then nearest
    /// `z_center`. Remaining ties go to the lowest area id.
    pub fn locate(&self, point: Vec3) -> Result<Location, MeshError> {
        let grid = self.grid.as_ref().ok_or(MeshError::EmptyMesh)?;
        let mut best: Option<(f64, u32, usize)> = None;
        for &idx in grid.candidates(point.x, point.y) {
            let area = &self.areas[idx as usize];
            if !area.bounds.contains(point.x, point.y) {
                continue;
            }
            let dz = (area.z_center - point.z).abs();
            let key = (dz, area.area_id, idx as usize);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        let idx = match best {
            Some((_, _, idx)) => idx,
            None => self.nearest_area(point),
        };
        let area = &self.areas[idx];
        Ok(Location {
            area_id: area.area_id,
            place_id: area.place_id,
        })
    }

    /// Token position of the place containing `point`.
    pub fn token_position(&self, point: Vec3) -> Result<usize, MeshError> {
        self.locate(point).map(|l| l.place_id as usize)
    }

    fn nearest_area(&self, point: Vec3) -> usize {
        let mut best = (f64::INFINITY, f64::INFINITY, u32::MAX);
        let mut best_idx = 0;
        for (idx, area) in self.areas.iter().enumerate() {
            let key = (
                area.bounds.distance_sq(point.x, point.y),
                (area.z_center - point.z).abs(),
                area.area_id,
            );
            if key < best {
                best = key;
                best_idx = idx;
            }
        }
        best_idx
    }
}

fn extent_of(areas: &[NavArea]) -> Option<Rect> {
    let first = areas.first()?;
    Some(areas.iter().fold(first.bounds, |acc, a| Rect {
        x_min: acc.x_min.min(a.bounds.x_min),
        y_min: acc.y_min.min(a.bounds.y_min),
        x_max: acc.x_max.max(a.bounds.x_max),
        y_max: acc.y_max.max(a.bounds.y_max),
    }))
}

/// Meshes keyed by map name.
#[derive(Debug, Clone, Default)]
pub struct MeshCatalog {
    meshes: BTreeMap<String, Arc<NavMesh>>,
}

impl MeshCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mesh: NavMesh) -> Arc<NavMesh> {
        let mesh = Arc::new(mesh);
        self.meshes.insert(mesh.map_name.clone(), mesh.clone());
        mesh
    }

    pub fn get(&self, map: &str) -> Option<&Arc<NavMesh>> {
        self.meshes.get(map)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<NavMesh>> {
        self.meshes.values()
    }

    pub fn len(&self) -> usize {
        self.meshes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meshes.is_empty()
    }

    /// Loads every `*.json` file in `dir` as a mesh.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self, MeshError> {
        let dir = dir.as_ref();
        let io_err = |source| MeshError::Io {
            path: dir.display().to_string(),
            source,
        };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(io_err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        let mut catalog = Self::new();
        for p in paths {
            catalog.insert(NavMesh::load(&p)?);
        }
        Ok(catalog)
    }
}

impl FromIterator<NavMesh> for MeshCatalog {
    fn from_iter<I: IntoIterator<Item = NavMesh>>(iter: I) -> Self {
        let mut c = Self::new();
        for m in iter {
            c.insert(m);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn area(id: u32, r: [f64; 4], z: f64, place: &str) -> AreaDocument {
        AreaDocument {
            id,
            x_min: r[0],
            y_min: r[1],
            x_max: r[2],
            y_max: r[3],
            z_center: z,
            place_name: place.into(),
        }
    }

    fn doc() -> MeshDocument {
        MeshDocument {
            map_name: "test".into(),
            places: vec![
                PlaceDocument { name: "Mid".into() },
                PlaceDocument {
                    name: "BombsiteA".into(),
                },
                PlaceDocument {
                    name: "Banana".into(),
                },
            ],
            areas: vec![
                area(1, [0.0, 0.0, 100.0, 100.0], 0.0, "Mid"),
                area(2, [100.0, 0.0, 200.0, 100.0], 0.0, "Banana"),
                area(3, [300.0, 0.0, 400.0, 100.0], 0.0, "BombsiteA"),
                area(7, [0.0, 200.0, 100.0, 300.0], 0.0, "Banana"),
                area(8, [0.0, 200.0, 100.0, 300.0], 120.0, "BombsiteA"),
            ],
            edges: vec![(1, 2), (2, 3)],
            z_threshold: None,
        }
    }

    #[test]
    fn places_sorted_alphabetically() {
        let mesh = NavMesh::from_document(doc()).unwrap();
        let names: Vec<_> = mesh.places.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(names, ["Banana", "BombsiteA", "Mid"]);
        let positions: Vec<_> = mesh.places.iter().map(|p| p.token_position).collect();
        assert_eq!(positions, [0, 1, 2]);
    }

    #[test]
    fn duplicate_place_rejected() {
        let mut d = doc();
        d.places.push(PlaceDocument {
            name: "Banana".into(),
        });
        let err = NavMesh::from_document(d).unwrap_err();
        assert!(err.to_string().contains("duplicate place name"), "{err}");
    }

    #[test]
    fn unknown_place_rejected() {
        let mut d = doc();
        d.areas.push(area(9, [0.0, 0.0, 1.0, 1.0], 0.0, "Nowhere"));
        let err = NavMesh::from_document(d).unwrap_err();
        assert!(err.to_string().contains("unknown place reference"), "{err}");
        assert!(err.to_string().contains("Nowhere"));
    }

    #[test]
    fn degenerate_and_bad_edges_rejected() {
        let mut d = doc();
        d.areas.push(area(9, [5.0, 0.0, 5.0, 1.0], 0.0, "Mid"));
        assert!(matches!(
            NavMesh::from_document(d),
            Err(MeshError::DegenerateArea(9))
        ));
        let mut d = doc();
        d.edges.push((1, 99));
        assert!(matches!(
            NavMesh::from_document(d),
            Err(MeshError::UnknownEdgeArea(1, 99))
        ));
    }

    #[test]
    fn malformed_json_rejected() {
        assert!(matches!(
            NavMesh::from_json("{\"map_name\": 3}"),
            Err(MeshError::Malformed(_))
        ));
    }

    #[test]
    fn empty_mesh_cannot_locate() {
        let mut d = doc();
        d.areas.clear();
        d.edges.clear();
        let mesh = NavMesh::from_document(d).unwrap();
        let err = mesh.locate(Vec3::new(0.0, 0.0, 0.0)).unwrap_err();
        assert_eq!(err.to_string(), "empty mesh");
    }

    #[test]
    fn containment_and_stacking() {
        let mesh = NavMesh::from_document(doc()).unwrap();
        let loc = mesh.locate(Vec3::new(350.0, 50.0, 0.0)).unwrap();
        assert_eq!(loc.area_id, 3);
        assert_eq!(mesh.place(loc.place_id).unwrap().name, "BombsiteA");

        let high = mesh.locate(Vec3::new(50.0, 250.0, 110.0)).unwrap();
        assert_eq!(high.area_id, 8);
        let low = mesh.locate(Vec3::new(50.0, 250.0, 10.0)).unwrap();
        assert_eq!(low.area_id, 7);
    }

    #[test]
    fn outside_points_snap_to_nearest() {
        let mesh = NavMesh::from_document(doc()).unwrap();
        // In the gap between area 2 and area 3, closer to 3.
        assert_eq!(mesh.locate(Vec3::new(260.0, 50.0, 0.0)).unwrap().area_id, 3);
        // Far outside the extent.
        assert_eq!(mesh.locate(Vec3::new(-500.0, -500.0, 0.0)).unwrap().area_id, 1);
        // Above the stacked pair: equal planar distance, z decides.
        assert_eq!(mesh.locate(Vec3::new(50.0, 350.0, 200.0)).unwrap().area_id, 8);
    }

    #[test]
    fn document_round_trip() {
        let mesh = NavMesh::from_document(doc()).unwrap();
        let again = NavMesh::from_document(mesh.to_document()).unwrap();
        assert_eq!(mesh, again);
    }
}
