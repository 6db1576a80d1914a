use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A (latitude, longitude) pair in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    /// Squared Euclidean distance on raw degrees.
    pub fn dist2(&self, other: &GeoPoint) -> f64 {
        let dlat = self.lat - other.lat;
        let dlon = self.lon - other.lon;
        dlat * dlat + dlon * dlon
    }
}

/// Reads cell-site coordinates from a header-bearing CSV file.
///
/// The `lat` and `lon` columns are located by header name; `cell_id` and
/// any other columns are ignored. Rows are returned in file order.
pub fn ingest_cell_sites(path: impl AsRef<Path>) -> Result<Vec<GeoPoint>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cell_sites(file, &path.display().to_string())
}

pub fn read_cell_sites<R: Read>(reader: R, source: &str) -> Result<Vec<GeoPoint>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv.headers().map_err(|e| row_error(source, 1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (lat_col, lon_col) = match (column("lat"), column("lon")) {
        (Some(lat), Some(lon)) => (lat, lon),
        _ => {
            return Err(Error::Config(format!(
                "{source}: header must contain `lat` and `lon` columns"
            )))
        }
    };

    let mut sites = Vec::new();
    for record in csv.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            row_error(source, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: usize, what: &str| -> Result<f64> {
            let raw = record
                .get(col)
                .ok_or_else(|| row_error(source, line, format!("missing {what} column")))?;
            raw.parse::<f64>()
                .map_err(|_| row_error(source, line, format!("invalid {what} `{raw}`")))
        };
        let lat = field(lat_col, "latitude")?;
        let lon = field(lon_col, "longitude")?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(row_error(source, line, format!("latitude {lat} out of range")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(row_error(source, line, format!("longitude {lon} out of range")));
        }
        sites.push(GeoPoint::new(lat, lon));
    }

    if sites.is_empty() {
        return Err(Error::Config(format!("{source}: no cell sites")));
    }
    Ok(sites)
}

fn row_error(source: &str, line: usize, message: String) -> Error {
    Error::Row {
        path: source.to_string(),
        line,
        message,
    }
}

/// Keeps a uniformly random subset of `count` sites, preserving file order.
pub fn filter_sites<R: Rng + ?Sized>(sites: &[GeoPoint], count: usize, rng: &mut R) -> Result<Vec<GeoPoint>> {
    if count > sites.len() {
        return Err(Error::Config(format!("cannot keep {count} of {} sites", sites.len())));
    }
    let mut keep = index::sample(rng, sites.len(), count).into_vec();
    keep.sort_unstable();
    Ok(keep.into_iter().map(|i| sites[i]).collect())
}

/// Gaussian blobs of sites around `blobs` random centers inside a
/// metropolitan-sized bounding box.
pub fn synth_sites<R: Rng + ?Sized>(blobs: usize, per_blob: usize, rng: &mut R) -> Vec<GeoPoint> {
    let (lat0, lat1) = (48.10, 48.32);
    let (lon0, lon1) = (16.18, 16.58);
    let spread = Normal::new(0.0, 0.004).expect("valid sigma");
    let mut sites = Vec::with_capacity(blobs * per_blob);
    let mut centers: Vec<GeoPoint> = Vec::with_capacity(blobs);
    let mut draws = 0;
    while centers.len() < blobs {
        let c = GeoPoint::new(rng.random_range(lat0..lat1), rng.random_range(lon0..lon1));
        draws += 1;
        // keep blobs apart so every cell ends up with its own members
        if centers.iter().all(|o| o.dist2(&c) > 0.03 * 0.03) || draws > 100 * blobs {
            centers.push(c);
        }
    }
    for center in &centers {
        for _ in 0..per_blob {
            sites.push(GeoPoint::new(
                center.lat + spread.sample(rng),
                center.lon + spread.sample(rng),
            ));
        }
    }
    sites
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn reads_valid_rows_in_order() {
        let text = "cell_id,lat,lon\n1,48.2,16.3\n2,48.21,16.31\n3,48.22,16.32\n";
        let sites = read_cell_sites(text.as_bytes(), "mem").unwrap();
        assert_eq!(sites.len(), 3);
        assert_eq!(sites[0], GeoPoint::new(48.2, 16.3));
        assert_eq!(sites[2], GeoPoint::new(48.22, 16.32));
    }

    #[test]
    fn extra_columns_are_ignored() {
        let text = "radio,mcc,cell_id,lon,lat,range\nLTE,232,7,16.3,48.2,1000\n";
        let sites = read_cell_sites(text.as_bytes(), "mem").unwrap();
        assert_eq!(sites, vec![GeoPoint::new(48.2, 16.3)]);
    }

    #[test]
    fn malformed_row_names_its_line() {
        let text = "cell_id,lat,lon\n1,48.2,16.3\n2,48.2,16.3\n3,north,16.3\n4,48.2,16.3\n";
        let err = read_cell_sites(text.as_bytes(), "sites.csv").unwrap_err();
        match err {
            Error::Row { line, ref path, .. } => {
                assert_eq!(line, 4);
                assert_eq!(path, "sites.csv");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_a_configuration_error() {
        let err = read_cell_sites("cell_id,lat,lon\n".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let err = read_cell_sites("".as_bytes(), "mem").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn filter_keeps_order_and_count() {
        let sites: Vec<_> = (0..3500).map(|i| GeoPoint::new(f64::from(i) * 1e-3, 0.0)).collect();
        let kept = filter_sites(&sites, 2081, &mut stream(1, "filter")).unwrap();
        assert_eq!(kept.len(), 2081);
        assert!(kept.windows(2).all(|w| w[0].lat < w[1].lat));
    }
}
