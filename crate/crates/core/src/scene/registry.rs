use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense semantic class identifier; doubles as the palette index in semantics images.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u16);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

pub type Rgb = [u8; 3];

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub id: ClassId,
    pub name: String,
    pub rgb: Rgb,
}

pub const SKY: &str = "sky";
pub const ROAD: &str = "road";
pub const BUILDING_LEFT: &str = "building_left";
pub const BUILDING_RIGHT: &str = "building_right";

/// Ordered semantic classes. Ids are dense from zero; `sky` is mandatory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ClassRegistry {
    classes: Vec<ClassInfo>,
    #[serde(skip)]
    sky: ClassId,
}

#[derive(Deserialize)]
struct RegistryDoc {
    classes: Vec<ClassInfo>,
}

impl ClassRegistry {
    /// Validates ids (dense, unique, from zero), names (unique) and the presence of sky.
    pub fn new(classes: Vec<ClassInfo>) -> Result<Self> {
        if classes.is_empty() {
            return Err(Error::Config("class registry is empty".into()));
        }
        if classes.len() > 256 {
            return Err(Error::Config(format!(
                "class registry has {} classes; palette images hold at most 256",
                classes.len()
            )));
        }
        let mut ids: Vec<u16> = classes.iter().map(|c| c.id.0).collect();
        ids.sort_unstable();
        if ids.iter().enumerate().any(|(i, &id)| id as usize != i) {
            return Err(Error::Config(format!(
                "class ids must be dense, unique and start at 0, got {ids:?}"
            )));
        }
        let mut names = HashSet::new();
        for c in &classes {
            if !names.insert(c.name.as_str()) {
                return Err(Error::Config(format!("duplicate class name {:?}", c.name)));
            }
        }
        let mut classes = classes;
        classes.sort_by_key(|c| c.id);
        let sky = classes
            .iter()
            .find(|c| c.name == SKY)
            .map(|c| c.id)
            .ok_or_else(|| Error::Config("class registry must contain \"sky\"".into()))?;
        Ok(ClassRegistry { classes, sky })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: RegistryDoc = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("class registry: {e}")))?;
        Self::new(doc.classes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("registry serializes")
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn sky(&self) -> ClassId {
        self.sky
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.index() < self.classes.len()
    }

    pub fn by_name(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn color(&self, id: ClassId) -> Option<Rgb> {
        self.classes.get(id.index()).map(|c| c.rgb)
    }

    /// Palette in id order, for indexed PNG output.
    pub fn palette(&self) -> Vec<Rgb> {
        self.classes.iter().map(|c| c.rgb).collect()
    }
}

impl Default for ClassRegistry {
    /// The built-in eight-class registry. Display colors keep every channel at or
    /// below 212 so a 1.2x brightness modulation never clips.
    fn default() -> Self {
        let table: [(&str, Rgb); 8] = [
            (ROAD, [128, 64, 128]),
            ("sidewalk", [212, 35, 200]),
            (BUILDING_LEFT, [70, 70, 70]),
            (BUILDING_RIGHT, [150, 100, 100]),
            ("vegetation", [107, 142, 35]),
            ("terrain", [152, 200, 152]),
            ("object", [200, 170, 30]),
            (SKY, [70, 130, 180]),
        ];
        let classes = table
            .iter()
            .enumerate()
            .map(|(i, (name, rgb))| ClassInfo {
                id: ClassId(i as u16),
                name: name.to_string(),
                rgb: *rgb,
            })
            .collect();
        ClassRegistry::new(classes).expect("built-in registry is valid")
    }
}

/// The built-in registry.
pub fn class_registry_default() -> ClassRegistry {
    ClassRegistry::default()
}
