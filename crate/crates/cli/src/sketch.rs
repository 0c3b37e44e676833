//! Sketch files: a textual stand-in for drawing players on the map.
//!
//! JSON with the query fields. Players can be given as `sketch` objects
//! (`{"side": "T", "position": [x, y, z]}`), as `positions` rows
//! (`["T", x, y, z]`), or both:
//!
//! ```json
//! {
//!   "map": "de_inferno_lite",
//!   "mode": "full",
//!   "positions": [["T", 0, 1900, 60], ["CT", 700, 1300, 40]],
//!   "filters": {"bomb_planted": true},
//!   "k_nearest": 20
//! }
//! ```

use std::path::Path;

use anyhow::Context;
use serde::Deserialize;
use stateseek_core::store::{FilterSpec, QueryMode, QuerySpec, SketchPlayer};
use stateseek_core::{Side, Vec3};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SketchFile {
    pub map: String,
    pub mode: QueryMode,
    #[serde(default)]
    pub sketch: Vec<SketchPlayer>,
    #[serde(default)]
    pub positions: Vec<(Side, f64, f64, f64)>,
    #[serde(default)]
    pub filters: FilterSpec,
    #[serde(default)]
    pub k_nearest: Option<usize>,
}

impl SketchFile {
    pub fn into_spec(self) -> QuerySpec {
        let mut sketch = self.sketch;
        sketch.extend(self.positions.into_iter().map(|(side, x, y, z)| SketchPlayer {
            side,
            position: Vec3::new(x, y, z),
        }));
        QuerySpec {
            map: self.map,
            sketch,
            mode: self.mode,
            filters: self.filters,
            k_nearest: self.k_nearest,
        }
    }
}

pub fn load(path: &Path) -> anyhow::Result<QuerySpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file: SketchFile =
        serde_json::from_str(&text).with_context(|| format!("parsing sketch file {}", path.display()))?;
    Ok(file.into_spec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_and_objects_combine() {
        let f: SketchFile = serde_json::from_str(
            r#"{"map": "m", "mode": "partial",
                "sketch": [{"side": "CT", "position": [1, 2, 3]}],
                "positions": [["T", 4, 5, 6]]}"#,
        )
        .unwrap();
        let q = f.into_spec();
        assert_eq!(q.sketch.len(), 2);
        assert_eq!(q.sketch[1].side, Side::T);
        assert_eq!(q.sketch[1].position, Vec3::new(4.0, 5.0, 6.0));
        assert_eq!(q.mode, QueryMode::Partial);
    }

    #[test]
    fn typos_rejected() {
        assert!(
            serde_json::from_str::<SketchFile>(r#"{"map": "m", "mode": "full", "postions": []}"#).is_err()
        );
    }
}
