use serde_json::{json, Value};

use super::{MissionPath, WaypointTag};
use crate::error::Result;
use crate::geo::{to_geo, GeoPoint, LocalPoint};
use crate::survey::Roi;

fn lon_lat(p: LocalPoint, origin: GeoPoint) -> Result<Value> {
    let g = to_geo(p, origin)?;
    Ok(json!([g.lon, g.lat]))
}

/// GeoJSON FeatureCollection in WGS-84.
///
/// One feature per segment class holding its runs of consecutive segments,
/// plus one Point per ROI center.
pub fn mission_geojson(path: &MissionPath, rois: &[Roi], origin: GeoPoint) -> Result<Value> {
    let wps = path.waypoints();
    let mut features = Vec::new();
    for tag in [WaypointTag::Survey, WaypointTag::Transit, WaypointTag::Coverage] {
        let mut runs: Vec<Vec<Value>> = Vec::new();
        let mut open = false;
        for i in 1..wps.len() {
            if path.segment_tag(i) != tag {
                open = false;
                continue;
            }
            if !open {
                runs.push(vec![lon_lat(wps[i - 1].pos, origin)?]);
                open = true;
            }
            runs.last_mut().unwrap().push(lon_lat(wps[i].pos, origin)?);
        }
        if runs.is_empty() {
            continue;
        }
        let geometry = if runs.len() == 1 {
            json!({ "type": "LineString", "coordinates": runs.pop().unwrap() })
        } else {
            json!({ "type": "MultiLineString", "coordinates": runs })
        };
        features.push(json!({
            "type": "Feature",
            "properties": { "tag": tag.as_str(), "length_m": path.length_by_tag(tag) },
            "geometry": geometry,
        }));
    }
    for roi in rois {
        features.push(json!({
            "type": "Feature",
            "properties": { "roi_id": roi.cluster_id, "radius_m": roi.circle.radius, "members": roi.members.len() },
            "geometry": { "type": "Point", "coordinates": lon_lat(roi.circle.center, origin)? },
        }));
    }
    Ok(json!({ "type": "FeatureCollection", "features": features }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Circle;
    use crate::route::Waypoint;

    #[test]
    fn features_per_class_and_roi() {
        let origin = GeoPoint { lat: 22.3, lon: 114.2 };
        let wps = vec![
            Waypoint::new(LocalPoint::ORIGIN, WaypointTag::Transit),
            Waypoint { pos: LocalPoint::new(10.0, 0.0), tag: WaypointTag::Coverage, roi: Some(0) },
            Waypoint { pos: LocalPoint::new(12.0, 0.0), tag: WaypointTag::Coverage, roi: Some(0) },
            Waypoint { pos: LocalPoint::new(40.0, 0.0), tag: WaypointTag::Coverage, roi: Some(1) },
            Waypoint { pos: LocalPoint::new(42.0, 0.0), tag: WaypointTag::Coverage, roi: Some(1) },
        ];
        let path = MissionPath::new(wps).unwrap();
        let rois = vec![
            Roi { circle: Circle { center: LocalPoint::new(11.0, 0.0), radius: 1.0 }, members: vec![], cluster_id: 0 },
            Roi { circle: Circle { center: LocalPoint::new(41.0, 0.0), radius: 1.0 }, members: vec![], cluster_id: 1 },
        ];
        let gj = mission_geojson(&path, &rois, origin).unwrap();
        let feats = gj["features"].as_array().unwrap();
        assert_eq!(feats.len(), 4);
        assert_eq!(feats[0]["properties"]["tag"], "transit");
        assert_eq!(feats[0]["geometry"]["type"], "MultiLineString");
        assert_eq!(feats[1]["geometry"]["type"], "MultiLineString");
        assert_eq!(feats[2]["geometry"]["type"], "Point");
        let c = &feats[2]["geometry"]["coordinates"];
        assert!((c[0].as_f64().unwrap() - 114.2).abs() < 0.01);
    }
}
