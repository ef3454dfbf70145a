use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::ObjectError;
use crate::geometry::{stable_placement_classes, volume_centroid, Cuboid, PlacementClass};

/// A movable object made of one or more boxes. Box `j` (1-based) owns grasp
/// classes `6(j-1)+1 ..= 6j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObjectRepr", into = "ObjectRepr")]
pub struct ObjectModel {
    name: String,
    boxes: Vec<Cuboid>,
}

#[derive(Serialize, Deserialize)]
struct ObjectRepr {
    name: String,
    boxes: Vec<Cuboid>,
}

impl TryFrom<ObjectRepr> for ObjectModel {
    type Error = ObjectError;
    fn try_from(r: ObjectRepr) -> Result<Self, ObjectError> {
        ObjectModel::new(r.name, r.boxes)
    }
}

impl From<ObjectModel> for ObjectRepr {
    fn from(o: ObjectModel) -> Self {
        ObjectRepr {
            name: o.name,
            boxes: o.boxes,
        }
    }
}

impl ObjectModel {
    pub fn new(name: impl Into<String>, boxes: Vec<Cuboid>) -> Result<Self, ObjectError> {
        if boxes.is_empty() {
            return Err(ObjectError::EmptyObject);
        }
        Ok(ObjectModel {
            name: name.into(),
            boxes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn boxes(&self) -> &[Cuboid] {
        &self.boxes
    }

    /// Box `j`, 1-based.
    pub fn component(&self, j: usize) -> Result<&Cuboid, ObjectError> {
        j.checked_sub(1)
            .and_then(|k| self.boxes.get(k))
            .ok_or(ObjectError::OutOfRange {
                what: "box index",
                value: j,
            })
    }

    pub fn num_boxes(&self) -> usize {
        self.boxes.len()
    }

    pub fn num_grasp_classes(&self) -> usize {
        6 * self.boxes.len()
    }

    /// Uniform-density center of mass.
    pub fn center_of_mass(&self) -> Point3<f64> {
        volume_centroid(&self.boxes)
    }

    pub fn corners(&self) -> Vec<Point3<f64>> {
        self.boxes.iter().flat_map(|b| b.corners()).collect()
    }

    pub fn placement_classes(&self) -> Result<Vec<PlacementClass>, ObjectError> {
        Ok(stable_placement_classes(&self.boxes, &self.center_of_mass())?)
    }
}
