//! Synthetic contact measurements on a posed mesh.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, TriMesh};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

const SIMULATION_STREAM: u64 = u64::MAX;

/// Where and how contacts are generated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_path: Option<PathBuf>,
    pub true_pose: Pose,
    /// Number of contacts L.
    pub measurements: usize,
    /// Faces contacts are drawn from; all faces when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub face_subset: Option<Vec<usize>>,
    /// Isotropic world-frame noise standard deviation (m).
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Object-frame rigid motions that map the mesh onto itself. Pose errors
    /// are measured against the nearest equivalent pose.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries: Vec<Pose>,
}

impl ScenarioSpec {
    pub fn validate(&self, mesh: &TriMesh) -> Result<()> {
        if self.measurements == 0 {
            return Err(Error::InvalidConfig(
                "scenario needs at least one measurement".into(),
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::InvalidConfig("noise_sigma must be >= 0".into()));
        }
        if !self.true_pose.is_finite() {
            return Err(Error::InvalidConfig("true_pose must be finite".into()));
        }
        if let Some(subset) = &self.face_subset {
            if subset.is_empty() {
                return Err(Error::InvalidFaceSubset("face subset is empty".into()));
            }
            if let Some(bad) = subset.iter().find(|&&f| f >= mesh.face_count()) {
                return Err(Error::InvalidFaceSubset(format!(
                    "face {bad} out of range for a mesh with {} faces",
                    mesh.face_count()
                )));
            }
        }
        Ok(())
    }
}

/// Noisy measurements with their noise-free contact points.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedContacts {
    pub measurements: Vec<Point3<f64>>,
    /// World-frame contact points before noise.
    pub contacts: Vec<Point3<f64>>,
    pub faces: Vec<usize>,
}

/// Uniform point on a triangle via the square-root barycentric mapping.
pub fn sample_on_triangle<R: Rng + ?Sized>(
    rng: &mut R,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let r1: f64 = rng.random::<f64>().sqrt();
    let r2: f64 = rng.random();
    let (u, v, w) = (1.0 - r1, r1 * (1.0 - r2), r1 * r2);
    Point3::from(a.coords * u + b.coords * v + c.coords * w)
}

/// Picks a face uniformly from the subset, a uniform point on it, poses it
/// and adds isotropic Gaussian noise.
pub fn sample_contacts(spec: &ScenarioSpec, mesh: &TriMesh) -> Result<SimulatedContacts> {
    spec.validate(mesh)?;
    let all: Vec<usize>;
    let subset: &[usize] = match &spec.face_subset {
        Some(s) => s,
        None => {
            all = (0..mesh.face_count()).collect();
            &all
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // keep clear of the filter's (step, particle) streams under the same seed
    rng.set_stream(SIMULATION_STREAM);
    let noise = Normal::new(0.0, spec.noise_sigma)
        .map_err(|e| Error::InvalidConfig(format!("noise_sigma: {e}")))?;

    let mut out = SimulatedContacts {
        measurements: Vec::with_capacity(spec.measurements),
        contacts: Vec::with_capacity(spec.measurements),
        faces: Vec::with_capacity(spec.measurements),
    };
    for _ in 0..spec.measurements {
        let face = subset[rng.random_range(0..subset.len())];
        let [a, b, c] = mesh.triangle(face);
        let local = sample_on_triangle(&mut rng, &a, &b, &c);
        let contact = spec.true_pose.to_world(&local);
        let offset = Vector3::new(
            noise.sample(&mut rng),
            noise.sample(&mut rng),
            noise.sample(&mut rng),
        );
        out.measurements.push(contact + offset);
        out.contacts.push(contact);
        out.faces.push(face);
    }
    Ok(out)
}

/// Ground-truth sidecar written next to a measurement file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub schema_version: u32,
    pub true_pose: Pose,
    pub contacts: Vec<[f64; 3]>,
    pub faces: Vec<usize>,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl GroundTruth {
    pub fn new(spec: &ScenarioSpec, sim: &SimulatedContacts) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            true_pose: spec.true_pose,
            contacts: sim.contacts.iter().map(|p| [p.x, p.y, p.z]).collect(),
            faces: sim.faces.clone(),
            noise_sigma: spec.noise_sigma,
            seed: spec.seed,
        }
    }
}

/// `%.9g`-style formatting: nine significant digits, no trailing zeros.
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        if fixed.contains('.') {
            fixed
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string()
        } else {
            fixed
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

/// Writes `x,y,z` rows with nine significant digits.
pub fn write_measurements_csv<W: Write>(writer: W, points: &[Point3<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| Error::InvalidConfig(format!("CSV write failed: {e}"));
    w.write_record(["x", "y", "z"]).map_err(to_err)?;
    for p in points {
        w.write_record([format_sig9(p.x), format_sig9(p.y), format_sig9(p.z)])
            .map_err(to_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<csv>"),
        source,
    })?;
    Ok(())
}

/// Reads an `x,y,z` CSV with header.
pub fn read_measurements_csv<R: Read>(reader: R) -> Result<Vec<Point3<f64>>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::InvalidConfig(format!("measurement CSV: {e}")))?
        .clone();
    let cols: Vec<&str> = headers.iter().map(str::trim).collect();
    if cols != ["x", "y", "z"] {
        return Err(Error::InvalidConfig(format!(
            "measurement CSV header must be `x,y,z`, got `{}`",
            cols.join(",")
        )));
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::InvalidConfig(format!("measurement CSV: {e}")))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidConfig(format!("measurement CSV row {}: {e}", row + 1)))?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "measurement CSV row {} needs three finite values",
                row + 1
            )));
        }
        out.push(Point3::new(vals[0], vals[1], vals[2]));
    }
    Ok(out)
}

pub fn load_measurements(path: impl AsRef<Path>) -> Result<Vec<Point3<f64>>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_measurements_csv(f)
}
