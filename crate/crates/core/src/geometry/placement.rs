use std::cmp::Ordering;

use nalgebra::{Point3, Vector3};

use super::{convex_hull, Cuboid, GeometryError, HullFace};

/// Minimum distance (meters) between the projected center of mass and the
/// support polygon boundary for a face to count as a stable placement.
pub const STABILITY_MARGIN: f64 = 1e-3;

/// A stable placement class: one supporting face of the object's convex hull.
#[derive(Clone, Debug)]
pub struct PlacementClass {
    /// 1-based class index.
    pub index: usize,
    pub face: HullFace,
}

/// Volume-weighted centroid of a set of boxes (uniform density).
pub fn volume_centroid(boxes: &[Cuboid]) -> Point3<f64> {
    let total: f64 = boxes.iter().map(Cuboid::volume).sum();
    let weighted: Vector3<f64> = boxes.iter().map(|b| b.local_pose().translation() * b.volume()).sum();
    Point3::from(weighted / total)
}

fn rounded(x: f64) -> i64 {
    (x * 1e9).round() as i64
}

fn face_order(a: &HullFace, b: &HullFace) -> Ordering {
    let (aa, ab) = (a.area(), b.area());
    if (aa - ab).abs() > 1e-12 {
        return ab.total_cmp(&aa);
    }
    let na = a.outward_normal.map(rounded);
    let nb = b.outward_normal.map(rounded);
    (na.x, na.y, na.z).cmp(&(nb.x, nb.y, nb.z))
}

/// Enumerates the hull faces the object can rest on, ordered by decreasing
/// face area and then by outward normal.
pub fn stable_placement_classes(boxes: &[Cuboid], com: &Point3<f64>) -> Result<Vec<PlacementClass>, GeometryError> {
    let corners: Vec<Point3<f64>> = boxes.iter().flat_map(|b| b.corners()).collect();
    let mut faces: Vec<HullFace> = convex_hull(&corners)?
        .into_iter()
        .filter(|f| f.inset_distance(f.project(com)) >= STABILITY_MARGIN)
        .collect();
    if faces.is_empty() {
        return Err(GeometryError::NoStablePlacement);
    }
    faces.sort_by(face_order);
    Ok(faces
        .into_iter()
        .enumerate()
        .map(|(i, face)| PlacementClass { index: i + 1, face })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Transform;

    #[test]
    fn cube_has_six_classes() {
        let cube = [Cuboid::centered(Vector3::new(0.1, 0.1, 0.1)).unwrap()];
        let classes = stable_placement_classes(&cube, &volume_centroid(&cube)).unwrap();
        assert_eq!(classes.len(), 6);
        assert_eq!(
            classes.iter().map(|c| c.index).collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5, 6]
        );
    }

    #[test]
    fn larger_faces_come_first() {
        let b = [Cuboid::centered(Vector3::new(0.14, 0.0245, 0.0125)).unwrap()];
        let classes = stable_placement_classes(&b, &volume_centroid(&b)).unwrap();
        let areas: Vec<f64> = classes.iter().map(|c| c.face.area()).collect();
        assert!(areas.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        // the two largest faces are the +-z faces
        assert!(classes[0].face.outward_normal.z.abs() > 0.99);
    }

    #[test]
    fn offset_com_removes_faces() {
        // tall thin slab with the mass pushed outside the narrow ends
        let b = [Cuboid::centered(Vector3::new(0.2, 0.01, 0.05)).unwrap()];
        let com = Point3::new(0.0, 0.0095, 0.0);
        let classes = stable_placement_classes(&b, &com).unwrap();
        // faces normal to x and z have the com within 0.5 mm of an edge
        assert_eq!(classes.len(), 2);
        let shifted = Cuboid::new(
            Vector3::new(0.1, 0.1, 0.1),
            Transform::from_translation(Vector3::new(1.0, 0.0, 0.0)),
        )
        .unwrap();
        assert_eq!(volume_centroid(&[shifted]), Point3::new(1.0, 0.0, 0.0));
    }
}
