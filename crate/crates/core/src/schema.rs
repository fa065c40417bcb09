//! Class catalog: the table of thing/stuff classes every other module keys on.
//!
//! A schema is loaded once from a JSON document and shared immutably. Class
//! ids are not required to be contiguous; all lookups go through an id map.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::SemanticMap;

/// Class identifier. Fits the 16-bit packing used by the frame codec.
pub type ClassId = u16;

/// One catalog entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDef {
    pub id: ClassId,
    pub name: String,
    pub is_thing: bool,
    /// Feedback priority weight, dimensionless, >= 0.
    pub weight: f64,
    /// Render color, RGB.
    pub color: [u8; 3],
}

/// Immutable class catalog. `void_id` names the reserved unlabeled class,
/// which must be present, stuff, and weight 0.
#[derive(Debug, Clone)]
pub struct LabelSchema {
    classes: Vec<ClassDef>,
    void_id: ClassId,
    by_id: HashMap<ClassId, usize>,
}

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error("malformed schema document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("duplicate class id {id} (class \"{name}\")")]
    DuplicateId { id: i64, name: String },
    #[error("class id {id} out of range for \"{name}\" (must be in 0..=65535)")]
    IdOutOfRange { id: i64, name: String },
    #[error("class at position {position} has an empty name")]
    EmptyName { position: usize },
    #[error("negative weight {weight} for class \"{name}\"")]
    NegativeWeight { name: String, weight: f64 },
    #[error("color component {value} out of range [0,255] for class \"{name}\"")]
    ColorOutOfRange { name: String, value: i64 },
    #[error("void class id {void_id} is not in the class list")]
    MissingVoid { void_id: i64 },
    #[error("void id {void_id} out of range (must be in 0..=65535)")]
    VoidIdOutOfRange { void_id: i64 },
    #[error("void class {void_id} must be stuff (is_thing = false)")]
    VoidIsThing { void_id: ClassId },
    #[error("void class {void_id} must have weight 0, got {weight}")]
    VoidWeightNonzero { void_id: ClassId, weight: f64 },
}

/// First pixel whose class id is not in the schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("unknown class id {id} at pixel ({row}, {col})")]
pub struct MapValidationError {
    pub row: u32,
    pub col: u32,
    pub id: ClassId,
}

#[derive(Deserialize)]
struct RawDoc {
    classes: Vec<RawClass>,
    void_id: i64,
}

#[derive(Deserialize)]
struct RawClass {
    id: i64,
    name: String,
    is_thing: bool,
    weight: f64,
    color: [i64; 3],
}

/// Parse and validate a schema document. Class order is preserved.
pub fn load_schema(json: &str) -> Result<LabelSchema, SchemaError> {
    let raw: RawDoc = serde_json::from_str(json)?;
    let mut classes = Vec::with_capacity(raw.classes.len());
    let mut by_id = HashMap::with_capacity(raw.classes.len());

    for (position, rc) in raw.classes.into_iter().enumerate() {
        if rc.name.is_empty() {
            return Err(SchemaError::EmptyName { position });
        }
        if rc.id < 0 || rc.id > ClassId::MAX as i64 {
            return Err(SchemaError::IdOutOfRange { id: rc.id, name: rc.name });
        }
        let id = rc.id as ClassId;
        if rc.weight < 0.0 || !rc.weight.is_finite() {
            return Err(SchemaError::NegativeWeight { name: rc.name, weight: rc.weight });
        }
        let mut color = [0u8; 3];
        for (i, &c) in rc.color.iter().enumerate() {
            if !(0..=255).contains(&c) {
                return Err(SchemaError::ColorOutOfRange { name: rc.name, value: c });
            }
            color[i] = c as u8;
        }
        if by_id.insert(id, classes.len()).is_some() {
            return Err(SchemaError::DuplicateId { id: rc.id, name: rc.name });
        }
        classes.push(ClassDef {
            id,
            name: rc.name,
            is_thing: rc.is_thing,
            weight: rc.weight,
            color,
        });
    }

    if raw.void_id < 0 || raw.void_id > ClassId::MAX as i64 {
        return Err(SchemaError::VoidIdOutOfRange { void_id: raw.void_id });
    }
    let void_id = raw.void_id as ClassId;
    let void = match by_id.get(&void_id) {
        Some(&idx) => &classes[idx],
        None => return Err(SchemaError::MissingVoid { void_id: raw.void_id }),
    };
    if void.is_thing {
        return Err(SchemaError::VoidIsThing { void_id });
    }
    if void.weight != 0.0 {
        return Err(SchemaError::VoidWeightNonzero { void_id, weight: void.weight });
    }

    Ok(LabelSchema { classes, void_id, by_id })
}

impl LabelSchema {
    /// The default navigation catalog shipped with the toolkit.
    pub fn builtin() -> LabelSchema {
        load_schema(include_str!("default_schema.json"))
            .expect("builtin schema document is valid")
    }

    pub fn classes(&self) -> &[ClassDef] {
        &self.classes
    }

    pub fn void_id(&self) -> ClassId {
        self.void_id
    }

    pub fn get(&self, id: ClassId) -> Option<&ClassDef> {
        self.by_id.get(&id).map(|&idx| &self.classes[idx])
    }

    pub fn contains(&self, id: ClassId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn is_thing(&self, id: ClassId) -> Option<bool> {
        self.get(id).map(|c| c.is_thing)
    }

    pub fn name(&self, id: ClassId) -> Option<&str> {
        self.get(id).map(|c| c.name.as_str())
    }

    /// Thing class ids in catalog order.
    pub fn thing_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.iter().filter(|c| c.is_thing).map(|c| c.id)
    }

    /// Stuff class ids in catalog order (includes void).
    pub fn stuff_ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.iter().filter(|c| !c.is_thing).map(|c| c.id)
    }

    pub fn find_by_name(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Serialize back to the document format accepted by [`load_schema`].
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            classes: &'a [ClassDef],
            void_id: ClassId,
        }
        serde_json::to_string_pretty(&Doc { classes: &self.classes, void_id: self.void_id })
            .expect("schema serialization cannot fail")
    }
}

/// Accept `map` iff every pixel's class id is in `schema`; otherwise report
/// the first offending pixel in raster order.
pub fn validate_map(map: &SemanticMap, schema: &LabelSchema) -> Result<(), MapValidationError> {
    for (i, &id) in map.ids().iter().enumerate() {
        if !schema.contains(id) {
            let w = map.width();
            return Err(MapValidationError {
                row: (i as u32) / w,
                col: (i as u32) % w,
                id,
            });
        }
    }
    Ok(())
}
