//! Artifact writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use jdisc::conformal::TriangleGeometry;
use jdisc::solver::DiscSolution;
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{Map, Value};

pub const DISC_SAMPLES: &str = "disc_samples.csv";
pub const DIAGNOSTICS: &str = "diagnostics.json";
pub const PLOT_BOUNDARY: &str = "plot_boundary.csv";
pub const VERIFY_REPORT: &str = "verify_report.csv";

/// One row per grid cell, then one per boundary sample.
pub fn write_disc_samples(path: &Path, sol: &DiscSolution) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let channels = sol.dim() - 1;
    let mut header = vec![
        "re_zeta".to_string(),
        "im_zeta".into(),
        "kind".into(),
        "arc".into(),
        "re_z".into(),
        "im_z".into(),
    ];
    for c in 1..=channels {
        header.push(format!("re_w{c}"));
        header.push(format!("im_w{c}"));
    }
    wtr.write_record(&header)?;
    let mut row = |zeta: Complex64,
                   kind: &str,
                   arc: &str,
                   z: Complex64,
                   w: &mut dyn Iterator<Item = Complex64>| {
        let mut rec = vec![
            zeta.re.to_string(),
            zeta.im.to_string(),
            kind.to_string(),
            arc.to_string(),
            z.re.to_string(),
            z.im.to_string(),
        ];
        for v in w {
            rec.push(v.re.to_string());
            rec.push(v.im.to_string());
        }
        wtr.write_record(&rec)
    };
    for (k, &zeta) in sol.grid.centers().iter().enumerate() {
        row(
            zeta,
            "interior",
            "",
            sol.z[k],
            &mut (0..channels).map(|c| sol.w.channel(c)[k]),
        )?;
    }
    let m = sol.trace.len();
    for (j, (&zeta, arc)) in sol.trace.points().iter().zip(sol.trace.arcs()).enumerate() {
        row(
            zeta,
            "boundary",
            arc.label(),
            sol.z_trace[j],
            &mut (0..channels).map(|c| sol.w_trace[c * m + j]),
        )?;
    }
    wtr.flush()
}

/// The closed boundary polyline of `z` (arc endpoints included) and the sides of the triangle.
pub fn write_plot_boundary(path: &Path, sol: &DiscSolution) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    wtr.write_record(["series", "index", "re", "im"])?;
    let mut poly = Vec::new();
    for j in 0..sol.trace.len() {
        poly.push(sol.z_trace[j]);
        if let Some(c) = sol.trace.corner_after(j) {
            let k = if c.re > 0.5 {
                0
            } else if c.im > 0.5 {
                1
            } else {
                2
            };
            poly.push(sol.z_corners[k]);
        }
    }
    poly.push(poly[0]);
    for (i, p) in poly.iter().enumerate() {
        wtr.write_record([
            "z_trace",
            &i.to_string(),
            &p.re.to_string(),
            &p.im.to_string(),
        ])?;
    }
    for (s, side) in TriangleGeometry.sides().iter().enumerate() {
        let name = format!("side_{}", s + 1);
        for (i, p) in [side.start, side.end].iter().enumerate() {
            wtr.write_record([
                name.as_str(),
                &i.to_string(),
                &p.re.to_string(),
                &p.im.to_string(),
            ])?;
        }
    }
    wtr.flush()
}

/// Flattens nested objects into dotted keys.
pub fn flatten(prefix: &str, value: Value, out: &mut Map<String, Value>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other);
        }
    }
}

pub fn flat_record(prefix: &str, value: &impl Serialize) -> Map<String, Value> {
    let mut out = Map::new();
    flatten(
        prefix,
        serde_json::to_value(value).expect("plain data serializes"),
        &mut out,
    );
    out
}

pub fn write_json(path: &Path, map: &Map<String, Value>) -> std::io::Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, map)?;
    writeln!(f)?;
    f.flush()
}
