//! CSV and GeoJSON entity loaders.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde_json::Value as Json;
use thiserror::Error;

use super::{Catalog, CatalogError, Entity, EntityKey, EntityRelation, Scalar};
use crate::geometry::{GeometryError, Point, Shape};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}:{line}: {message}")]
    Row { path: String, line: u64, message: String },
    #[error("{path}: feature {index}: {message}")]
    Feature { path: String, index: usize, message: String },
    #[error("{path}: {message}")]
    File { path: String, message: String },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Coordinates are WGS84 longitude/latitude; project them to local metres
    /// with an equirectangular projection about the dataset centroid.
    pub lonlat: bool,
}

enum RawGeometry {
    Point(Point),
    Line(Vec<Point>),
    Polygon(Vec<Point>),
}

impl RawGeometry {
    fn points_mut(&mut self) -> &mut [Point] {
        match self {
            RawGeometry::Point(p) => std::slice::from_mut(p),
            RawGeometry::Line(v) | RawGeometry::Polygon(v) => v,
        }
    }

    fn into_shape(self) -> Result<Shape, GeometryError> {
        match self {
            RawGeometry::Point(p) => Shape::point(p.x, p.y),
            RawGeometry::Line(v) => Shape::polyline(v),
            RawGeometry::Polygon(v) => Shape::polygon(v),
        }
    }
}

struct RawRecord {
    location: u64,
    id: Option<u64>,
    code: Option<u16>,
    geometry: RawGeometry,
    attributes: BTreeMap<String, Scalar>,
}

fn project_lonlat(records: &mut [RawRecord]) {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for r in records.iter_mut() {
        for p in r.geometry.points_mut() {
            sx += p.x;
            sy += p.y;
            n += 1;
        }
    }
    if n == 0 {
        return;
    }
    let (lon0, lat0) = (sx / n as f64, sy / n as f64);
    let k = lat0.to_radians().cos();
    for r in records.iter_mut() {
        for p in r.geometry.points_mut() {
            *p = Point::new(
                EARTH_RADIUS_M * (p.x - lon0).to_radians() * k,
                EARTH_RADIUS_M * (p.y - lat0).to_radians(),
            );
        }
    }
}

fn build_relation<E>(
    category: &str,
    mut records: Vec<RawRecord>,
    options: LoadOptions,
    err: E,
) -> Result<EntityRelation, LoadError>
where
    E: Fn(u64, String) -> LoadError,
{
    if options.lonlat {
        project_lonlat(&mut records);
    }
    let cat: Arc<str> = category.into();
    let mut seen: HashMap<u64, u64> = HashMap::new();
    let mut members = Vec::with_capacity(records.len());
    for (seq, r) in records.into_iter().enumerate() {
        let id = r.id.unwrap_or(seq as u64);
        if let Some(first) = seen.insert(id, r.location) {
            return Err(err(r.location, format!("duplicate id {id} (first seen at {first})")));
        }
        let shape = r.geometry.into_shape().map_err(|e| err(r.location, e.to_string()))?;
        let mut entity = Entity::new(EntityKey { category: cat.clone(), id }, shape, r.code)
            .map_err(|e| err(r.location, e.to_string()))?;
        entity.attributes = r.attributes;
        members.push(Arc::new(entity));
    }
    Ok(EntityRelation::new(category, cat, members)?)
}

fn parse_code(s: &str) -> Result<Option<u16>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    match s.parse::<u32>() {
        Ok(c) if (1000..=9999).contains(&c) => Ok(Some(c as u16)),
        _ => Err(format!("code `{s}` is not a 4-digit osm code")),
    }
}

/// Reads an entity CSV: optional `id` and `code` columns, geometry in a `wkt`
/// column or `x`/`y` columns; every other column becomes a string attribute.
pub fn read_entities_csv<R: Read>(
    input: R,
    category: &str,
    options: LoadOptions,
    source: &str,
) -> Result<EntityRelation, LoadError> {
    let row_err = |line: u64, message: String| LoadError::Row { path: source.to_string(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| row_err(1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect::<Vec<_>>();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = find("id");
    let code_col = find("code");
    let wkt_col = find("wkt");
    let xy_cols = match (find("x"), find("y")) {
        (Some(x), Some(y)) => Some((x, y)),
        _ => None,
    };
    if wkt_col.is_none() && xy_cols.is_none() {
        return Err(row_err(1, "header needs a `wkt` column or `x` and `y` columns".into()));
    }
    let geometry_cols: Vec<usize> = match (wkt_col, xy_cols) {
        (Some(w), _) => vec![w],
        (None, Some((x, y))) => vec![x, y],
        (None, None) => unreachable!(),
    };

    let mut records = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            row_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let geometry = match wkt_col {
            Some(w) => parse_wkt_raw(field(w)).map_err(|m| row_err(line, m))?,
            None => {
                let (xc, yc) = xy_cols.unwrap();
                let num = |i: usize| {
                    field(i)
                        .parse::<f64>()
                        .map_err(|_| row_err(line, format!("bad coordinate `{}`", field(i))))
                };
                RawGeometry::Point(Point::new(num(xc)?, num(yc)?))
            }
        };
        let id = match id_col {
            Some(c) => Some(
                field(c).parse::<u64>().map_err(|_| row_err(line, format!("bad id `{}`", field(c))))?,
            ),
            None => None,
        };
        let code = match code_col {
            Some(c) => parse_code(field(c)).map_err(|m| row_err(line, m))?,
            None => None,
        };
        let mut attributes = BTreeMap::new();
        for (i, h) in headers.iter().enumerate() {
            if Some(i) == id_col || Some(i) == code_col || geometry_cols.contains(&i) {
                continue;
            }
            attributes.insert(h.clone(), Scalar::Str(record.get(i).unwrap_or("").to_string()));
        }
        records.push(RawRecord { location: line, id, code, geometry, attributes });
    }
    build_relation(category, records, options, row_err)
}

pub fn load_entities_csv(
    catalog: &Catalog,
    path: &Path,
    category: &str,
    options: LoadOptions,
) -> Result<Arc<EntityRelation>, LoadError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| LoadError::Io { path: display.clone(), source })?;
    let relation = read_entities_csv(file, category, options, &display)?;
    Ok(catalog.register_entities(relation)?)
}

/// RFC 7946 FeatureCollection with Point, LineString and hole-free Polygon
/// geometries. The `code` and `id` properties are recognised; other scalar
/// properties become attributes.
pub fn read_entities_geojson(
    text: &str,
    category: &str,
    options: LoadOptions,
    source: &str,
) -> Result<EntityRelation, LoadError> {
    let file_err = |message: String| LoadError::File { path: source.to_string(), message };
    let feat_err =
        |index: u64, message: String| LoadError::Feature { path: source.to_string(), index: index as usize, message };
    let doc: Json = serde_json::from_str(text).map_err(|e| file_err(e.to_string()))?;
    if doc.get("type").and_then(Json::as_str) != Some("FeatureCollection") {
        return Err(file_err("expected a FeatureCollection".into()));
    }
    let features = doc
        .get("features")
        .and_then(Json::as_array)
        .ok_or_else(|| file_err("missing `features` array".into()))?;

    let mut records = Vec::with_capacity(features.len());
    for (i, f) in features.iter().enumerate() {
        let fe = |m: String| feat_err(i as u64, m);
        let geometry = f.get("geometry").ok_or_else(|| fe("missing geometry".into()))?;
        let geometry = geojson_geometry(geometry).map_err(fe)?;
        let props = f.get("properties").and_then(Json::as_object);
        let mut id = f.get("id").and_then(Json::as_u64);
        let mut code = None;
        let mut attributes = BTreeMap::new();
        if let Some(props) = props {
            for (k, v) in props {
                match k.as_str() {
                    "code" => {
                        code = match v {
                            Json::Null => None,
                            Json::Number(n) => parse_code(&n.to_string()).map_err(fe)?,
                            Json::String(s) => parse_code(s).map_err(fe)?,
                            _ => return Err(fe("`code` must be a number".into())),
                        }
                    }
                    "id" if id.is_none() => {
                        id = Some(v.as_u64().ok_or_else(|| fe("`id` must be a non-negative integer".into()))?)
                    }
                    _ => {
                        let scalar = match v {
                            Json::String(s) => Scalar::Str(s.clone()),
                            Json::Number(n) => match n.as_i64() {
                                Some(i) => Scalar::Int(i),
                                None => Scalar::Real(n.as_f64().unwrap_or(f64::NAN)),
                            },
                            Json::Bool(b) => Scalar::Str(b.to_string()),
                            _ => continue,
                        };
                        attributes.insert(k.clone(), scalar);
                    }
                }
            }
        }
        records.push(RawRecord { location: i as u64, id, code, geometry, attributes });
    }
    build_relation(category, records, options, feat_err)
}

pub fn load_entities_geojson(
    catalog: &Catalog,
    path: &Path,
    category: &str,
    options: LoadOptions,
) -> Result<Arc<EntityRelation>, LoadError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: display.clone(), source })?;
    let relation = read_entities_geojson(&text, category, options, &display)?;
    Ok(catalog.register_entities(relation)?)
}

fn json_point(v: &Json) -> Result<Point, String> {
    let arr = v.as_array().ok_or("coordinate must be an array")?;
    if arr.len() < 2 {
        return Err("coordinate needs two numbers".into());
    }
    let x = arr[0].as_f64().ok_or("coordinate must be numeric")?;
    let y = arr[1].as_f64().ok_or("coordinate must be numeric")?;
    Ok(Point::new(x, y))
}

fn json_points(v: &Json) -> Result<Vec<Point>, String> {
    v.as_array().ok_or("expected coordinate array")?.iter().map(json_point).collect()
}

fn geojson_geometry(g: &Json) -> Result<RawGeometry, String> {
    let kind = g.get("type").and_then(Json::as_str).ok_or("geometry without type")?;
    let coords = g.get("coordinates").ok_or("geometry without coordinates")?;
    match kind {
        "Point" => Ok(RawGeometry::Point(json_point(coords)?)),
        "LineString" => Ok(RawGeometry::Line(json_points(coords)?)),
        "Polygon" => {
            let rings = coords.as_array().ok_or("polygon coordinates must be an array of rings")?;
            match rings.len() {
                0 => Err("polygon without rings".into()),
                1 => Ok(RawGeometry::Polygon(json_points(&rings[0])?)),
                _ => Err(GeometryError::HolesUnsupported.to_string()),
            }
        }
        other => Err(format!("unsupported geometry type `{other}`")),
    }
}

/// Parses `POINT`, `LINESTRING` and hole-free `POLYGON` well-known text.
/// GeoJSON FeatureCollection of `entities`: geometry plus `category`, `id`
/// and `osm_code` properties.
pub fn entities_to_geojson<'a>(entities: impl IntoIterator<Item = &'a Entity>) -> Json {
    fn xy(p: &Point) -> Json {
        serde_json::json!([p.x, p.y])
    }
    let features: Vec<Json> = entities
        .into_iter()
        .map(|e| {
            let geometry = match &e.shape {
                Shape::Point(p) => serde_json::json!({"type": "Point", "coordinates": xy(p)}),
                Shape::Polyline(l) => {
                    serde_json::json!({"type": "LineString", "coordinates": l.vertices().iter().map(xy).collect::<Vec<_>>()})
                }
                Shape::Polygon(g) => {
                    let mut ring: Vec<Json> = g.ring().iter().map(xy).collect();
                    ring.push(xy(&g.ring()[0]));
                    serde_json::json!({"type": "Polygon", "coordinates": [ring]})
                }
            };
            serde_json::json!({
                "type": "Feature",
                "geometry": geometry,
                "properties": {"category": &*e.key.category, "id": e.key.id, "osm_code": e.osm_code},
            })
        })
        .collect();
    serde_json::json!({"type": "FeatureCollection", "features": features})
}

pub fn parse_wkt(text: &str) -> Result<Shape, String> {
    parse_wkt_raw(text)?.into_shape().map_err(|e| e.to_string())
}

fn parse_wkt_raw(text: &str) -> Result<RawGeometry, String> {
    let text = text.trim();
    let open = text.find('(').ok_or_else(|| format!("malformed WKT `{text}`"))?;
    let keyword = text[..open].trim().to_ascii_uppercase();
    let body = text[open..].trim();
    if !body.ends_with(')') {
        return Err(format!("malformed WKT `{text}`: unbalanced parentheses"));
    }
    let inner = &body[1..body.len() - 1];
    match keyword.as_str() {
        "POINT" => {
            let pts = wkt_coords(inner)?;
            if pts.len() != 1 {
                return Err("POINT needs exactly one coordinate".into());
            }
            Ok(RawGeometry::Point(pts[0]))
        }
        "LINESTRING" => Ok(RawGeometry::Line(wkt_coords(inner)?)),
        "POLYGON" => {
            let rings = split_rings(inner)?;
            match rings.len() {
                0 => Err("POLYGON without rings".into()),
                1 => Ok(RawGeometry::Polygon(wkt_coords(rings[0])?)),
                _ => Err(GeometryError::HolesUnsupported.to_string()),
            }
        }
        other => Err(format!("unsupported WKT geometry `{other}`")),
    }
}

fn split_rings(s: &str) -> Result<Vec<&str>, String> {
    let mut rings = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => {
                if depth == 0 {
                    start = i + 1;
                }
                depth += 1;
            }
            ')' => {
                depth = depth.checked_sub(1).ok_or("unbalanced parentheses")?;
                if depth == 0 {
                    rings.push(&s[start..i]);
                }
            }
            ',' if depth == 0 => {}
            c if depth == 0 && !c.is_whitespace() => return Err(format!("unexpected `{c}` between rings")),
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    Ok(rings)
}

fn wkt_coords(s: &str) -> Result<Vec<Point>, String> {
    s.split(',')
        .map(|pair| {
            let mut nums = pair.split_whitespace().map(str::parse::<f64>);
            match (nums.next(), nums.next(), nums.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => Ok(Point::new(x, y)),
                _ => Err(format!("bad WKT coordinate `{}`", pair.trim())),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{default_typespecs, entity_is_type};

    #[test]
    fn xy_points_with_sequential_ids() {
        let csv = "x,y,name\n0,0,a\n1,0,b\n2,0,c\n";
        let rel = read_entities_csv(csv.as_bytes(), "accidents", LoadOptions::default(), "t.csv").unwrap();
        assert_eq!(rel.len(), 3);
        assert_eq!(rel.ids().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(rel.get(1).unwrap().attributes["name"], Scalar::Str("b".into()));
    }

    #[test]
    fn wkt_linestring_and_code() {
        let csv = "id,code,wkt\n7,2082,\"LINESTRING(0 0, 2 0)\"\n";
        let rel = read_entities_csv(csv.as_bytes(), "pois", LoadOptions::default(), "t.csv").unwrap();
        let e = rel.get(7).unwrap();
        assert_eq!(e.shape.vertices().len(), 2);
        assert!(entity_is_type(&default_typespecs()["school"], e));
    }

    #[test]
    fn bad_wkt_reports_line() {
        let mut csv = String::from("wkt\n");
        for _ in 0..5 {
            csv.push_str("\"POINT(1 1)\"\n");
        }
        csv.push_str("\"POINT(1 nope)\"\n");
        let err = read_entities_csv(csv.as_bytes(), "a", LoadOptions::default(), "t.csv").unwrap_err();
        match err {
            LoadError::Row { line, .. } => assert_eq!(line, 7),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_ids_abort() {
        let csv = "id,x,y\n1,0,0\n1,1,1\n";
        let err = read_entities_csv(csv.as_bytes(), "a", LoadOptions::default(), "t.csv").unwrap_err();
        assert!(matches!(err, LoadError::Row { line: 3, .. }), "{err}");
    }

    #[test]
    fn lonlat_projection_is_metric() {
        // 0.001 degrees of latitude is about 111 m.
        let csv = "x,y\n13.4,52.5\n13.4,52.501\n";
        let rel = read_entities_csv(csv.as_bytes(), "a", LoadOptions { lonlat: true }, "t.csv").unwrap();
        let d = crate::geometry::distance(&rel.get(0).unwrap().shape, &rel.get(1).unwrap().shape);
        assert!((d - 111.19).abs() < 0.1, "{d}");
    }

    #[test]
    fn geojson_point_and_codes() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Point","coordinates":[1,2]},"properties":{"code":2085,"name":"x"}}
        ]}"#;
        let rel = read_entities_geojson(text, "pois", LoadOptions::default(), "t.geojson").unwrap();
        assert_eq!(rel.len(), 1);
        let e = rel.get(0).unwrap();
        assert!(entity_is_type(&default_typespecs()["education"], e));
        assert!(!entity_is_type(&default_typespecs()["school"], e));
    }

    #[test]
    fn geojson_polygon_hole_rejected() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Polygon","coordinates":[
                [[0,0],[10,0],[10,10],[0,10],[0,0]],[[2,2],[3,2],[3,3],[2,2]]]},"properties":{}}
        ]}"#;
        let err = read_entities_geojson(text, "p", LoadOptions::default(), "t.geojson").unwrap_err();
        assert!(err.to_string().contains("holes are unsupported"), "{err}");
    }

    #[test]
    fn wkt_forms() {
        assert_eq!(parse_wkt("point (1 2)").unwrap(), Shape::point(1.0, 2.0).unwrap());
        assert!(parse_wkt("POLYGON((0 0, 1 0, 1 1, 0 0))").is_ok());
        assert!(parse_wkt("POLYGON((0 0, 9 0, 9 9, 0 0), (1 1, 2 1, 2 2, 1 1))")
            .unwrap_err()
            .contains("holes"));
        assert!(parse_wkt("CIRCLE(1 2)").is_err());
        assert!(parse_wkt("LINESTRING(0 0)").is_err());
    }
}
