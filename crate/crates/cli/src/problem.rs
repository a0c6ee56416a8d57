//! Problem files: the matrix function, the domain, an optional loop and
//! numerical options.

use std::path::Path;

use cusp_core::cusp::Rect;
use cusp_core::model::{Builtin, Curve, LoopSpec, ParamMatrixFn, Point};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub n: Option<usize>,
    pub entries: Option<Vec<Vec<String>>>,
    pub model: Option<String>,
    pub epsilon: Option<f64>,
    pub domain: Domain,
    #[serde(rename = "loop")]
    pub loop_def: Option<LoopDef>,
    #[serde(default)]
    pub options: Options,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoopDef {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
    },
    Polygon {
        vertices: Vec<[f64; 2]>,
        corner_radius: Option<f64>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    pub steps: Option<usize>,
    pub periods: Option<usize>,
    pub correction_interval: Option<usize>,
    pub eig_tol: Option<f64>,
    pub path_tol: Option<f64>,
    pub norm_tol: Option<f64>,
    pub root_tol: Option<f64>,
    pub cond_max: Option<f64>,
    pub max_depth: Option<usize>,
    pub scales: Option<Vec<f64>>,
    pub fit_points: Option<usize>,
}

/// A validated problem.
pub struct Problem {
    pub f: ParamMatrixFn,
    pub domain: Rect,
    pub gamma: Option<LoopSpec>,
    pub options: Options,
}

#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

fn point(p: [f64; 2]) -> Point {
    Point::new(p[0], p[1])
}

pub fn load(path: &Path) -> Result<Problem, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let file: ProblemFile =
        serde_json::from_str(&text).map_err(|e| bad(format!("invalid problem file {}: {e}", path.display())))?;
    build(file)
}

pub fn build(file: ProblemFile) -> Result<Problem, InputError> {
    let f = match (&file.entries, &file.model) {
        (Some(_), Some(_)) => return Err(bad("\"entries\" and \"model\" are mutually exclusive")),
        (None, None) => return Err(bad("one of \"entries\" or \"model\" is required")),
        (Some(entries), None) => {
            if file.epsilon.is_some() {
                return Err(bad("\"epsilon\" only applies to \"model\""));
            }
            let n = file.n.ok_or_else(|| bad("\"n\" is required with \"entries\""))?;
            if n == 0 || entries.len() != n || entries.iter().any(|row| row.len() != n) {
                return Err(bad(format!("\"entries\" must be {n}x{n}")));
            }
            ParamMatrixFn::parse_entries(entries).map_err(|e| bad(e.to_string()))?
        }
        (None, Some(name)) => {
            if let Some(eps) = file.epsilon {
                if !eps.is_finite() {
                    return Err(bad("\"epsilon\" must be finite"));
                }
            }
            let b = Builtin::from_name(name, file.epsilon).ok_or_else(|| {
                bad(format!("unknown model {name:?}; expected one of {}", Builtin::NAMES.join(", ")))
            })?;
            if let Some(n) = file.n {
                if n != b.dim() {
                    return Err(bad(format!("model {name:?} has n = {}, file says {n}", b.dim())));
                }
            }
            ParamMatrixFn::builtin(b)
        }
    };

    let d = &file.domain;
    let domain = Rect::new((d.x[0], d.x[1]), (d.y[0], d.y[1])).map_err(|e| bad(format!("domain: {e}")))?;

    let gamma = match &file.loop_def {
        None => None,
        Some(def) => {
            let gamma = match def {
                LoopDef::Circle { center, radius } => LoopSpec::circle(point(*center), *radius),
                LoopDef::Ellipse { center, semi_axes } => LoopSpec::ellipse(point(*center), (semi_axes[0], semi_axes[1])),
                LoopDef::Polygon { vertices, corner_radius } => {
                    let pts: Vec<Point> = vertices.iter().copied().map(point).collect();
                    let shortest = pts
                        .iter()
                        .zip(pts.iter().cycle().skip(1))
                        .map(|(a, b)| a.distance(*b))
                        .fold(f64::INFINITY, f64::min);
                    LoopSpec::polygon(&pts, corner_radius.unwrap_or(0.05 * shortest))
                }
            }
            .map_err(|e| bad(format!("loop: {e}")))?;
            if let Some(t) = (0..1024).map(|k| k as f64 / 1024.0).find(|&t| !domain.contains(gamma.point(t))) {
                let p = gamma.point(t);
                return Err(bad(format!("loop leaves the domain at ({}, {})", p.x, p.y)));
            }
            Some(gamma)
        }
    };

    Ok(Problem {
        f,
        domain,
        gamma,
        options: file.options,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<Problem, InputError> {
        let file: ProblemFile = serde_json::from_str(json).map_err(|e| InputError(e.to_string()))?;
        build(file)
    }

    #[test]
    fn model_and_entries_are_exclusive() {
        let err = parse(r#"{"n":2,"entries":[["0","1"],["x","0"]],"model":"sqrt","domain":{"x":[-1,1],"y":[-1,1]}}"#)
            .err()
            .unwrap();
        assert!(err.0.contains("mutually exclusive"));
    }

    #[test]
    fn entries_shape_is_checked() {
        assert!(parse(r#"{"n":2,"entries":[["0","1"]],"domain":{"x":[-1,1],"y":[-1,1]}}"#).is_err());
        assert!(parse(r#"{"n":2,"entries":[["0","1"],["x+","0"]],"domain":{"x":[-1,1],"y":[-1,1]}}"#).is_err());
        assert!(parse(r#"{"n":2,"entries":[["0","1"],["x+i*y","0"]],"domain":{"x":[-1,1],"y":[-1,1]}}"#).is_ok());
    }

    #[test]
    fn loop_must_stay_in_domain() {
        let json = r#"{"model":"sqrt","domain":{"x":[-1,1],"y":[-1,1]},"loop":{"kind":"circle","center":[0,0],"radius":1.5}}"#;
        assert!(parse(json).err().unwrap().0.contains("leaves the domain"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse(r#"{"model":"sqrt","domain":{"x":[-1,1],"y":[-1,1]},"colour":1}"#).is_err());
        assert!(parse(r#"{"model":"sqrt","domain":{"x":[-1,1],"y":[-1,1]},"loop":{"kind":"circle","center":[0,0],"radius":0.5,"semi_axes":[1,1]}}"#).is_err());
        assert!(parse(r#"{"model":"nope","domain":{"x":[-1,1],"y":[-1,1]}}"#).is_err());
    }

    #[test]
    fn polygon_default_corner() {
        let json = r#"{"model":"phase_pi","domain":{"x":[-2,2],"y":[-2,2]},"loop":{"kind":"polygon","vertices":[[-1,-1],[1,-1],[1,1],[-1,1]]}}"#;
        assert!(parse(json).unwrap().gamma.is_some());
    }
}
