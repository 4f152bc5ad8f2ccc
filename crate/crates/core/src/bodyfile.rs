//! Body files, inline body specifications and the test-function
//! mini-language used on the command line.
//!
//! A body file is a JSON object
//! `{ "dimension": 2, "kind": "trig" | "disk" | "ellipse" | "random", "c0", "cos",
//! "sin", "semi_axes", "seed", "degree", "amplitude", "nodes" }`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{random_body, random_test_function, ConvexBody2D, TestFunction};
use crate::trig::TrigSupport;

pub const DEFAULT_NODES: usize = 256;
/// Parameters of the random corpus: degree `K` and amplitude `alpha`.
pub const RANDOM_DEGREE: usize = 6;
pub const RANDOM_AMPLITUDE: f64 = 0.6;
/// Amplitude of random test functions.
pub const RANDOM_PHI_AMPLITUDE: f64 = 0.3;
pub const RANDOM_PHI_DEGREE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    Trig,
    Disk,
    Ellipse,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    #[serde(default = "two")]
    pub dimension: usize,
    pub kind: BodyKind,
    /// Mean width for `trig`, radius for `disk`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cos: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sin: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn two() -> usize {
    2
}

fn default_nodes() -> usize {
    DEFAULT_NODES
}

impl BodySpec {
    pub fn disk(radius: f64, nodes: usize) -> Self {
        Self::empty(BodyKind::Disk, nodes).with_c0(radius)
    }

    pub fn ellipse(a: f64, b: f64, nodes: usize) -> Self {
        Self {
            semi_axes: Some([a, b]),
            ..Self::empty(BodyKind::Ellipse, nodes)
        }
    }

    pub fn random(seed: u64, nodes: usize) -> Self {
        Self {
            seed: Some(seed),
            degree: Some(RANDOM_DEGREE),
            amplitude: Some(RANDOM_AMPLITUDE),
            ..Self::empty(BodyKind::Random, nodes)
        }
    }

    fn empty(kind: BodyKind, nodes: usize) -> Self {
        Self {
            dimension: 2,
            kind,
            c0: None,
            cos: vec![],
            sin: vec![],
            semi_axes: None,
            seed: None,
            degree: None,
            amplitude: None,
            nodes,
        }
    }

    fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = Some(c0);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: BodySpec = serde_json::from_str(text)?;
        spec.check()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Inline forms: `disk`, `disk:R`, `ellipse:A,B`, `random:SEED`, or a
    /// path to a body file.
    pub fn parse_arg(arg: &str, nodes: usize) -> Result<Self> {
        let (head, rest) = match arg.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (arg, None),
        };
        let spec = match (head, rest) {
            ("disk", None) => Self::disk(1.0, nodes),
            ("disk", Some(r)) => Self::disk(parse_number(r)?, nodes),
            ("ellipse", Some(r)) => {
                let v = parse_list(r)?;
                if v.len() != 2 {
                    return Err(Error::Parse(format!(
                        "ellipse needs two semi-axes, got {r:?}"
                    )));
                }
                Self::ellipse(v[0], v[1], nodes)
            }
            ("random", Some(r)) => Self::random(
                r.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad random seed {r:?}")))?,
                nodes,
            ),
            _ if Path::new(arg).is_file() => return Self::from_file(Path::new(arg)),
            _ => return Err(Error::Parse(format!("unrecognized body {arg:?}"))),
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<()> {
        if self.dimension != 2 {
            return Err(Error::Parse(format!(
                "body files describe planar bodies, got dimension {}",
                self.dimension
            )));
        }
        if self.nodes % 2 == 1 {
            return Err(Error::Parse(format!(
                "node count must be even, got {}",
                self.nodes
            )));
        }
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Parse(format!("{:?} body: {what}", self.kind)))
            }
        };
        match self.kind {
            BodyKind::Trig => need(self.c0.is_some(), "missing c0"),
            BodyKind::Disk => Ok(()),
            BodyKind::Ellipse => need(self.semi_axes.is_some(), "missing semi_axes"),
            BodyKind::Random => need(self.seed.is_some(), "missing seed"),
        }
    }

    pub fn build(&self) -> Result<ConvexBody2D> {
        match self.kind {
            BodyKind::Trig => {
                let support =
                    TrigSupport::new(self.c0.unwrap_or(0.0), self.cos.clone(), self.sin.clone())?;
                crate::geometry::validate_body(support, self.nodes)
            }
            BodyKind::Disk => ConvexBody2D::disk(self.c0.unwrap_or(1.0), self.nodes),
            BodyKind::Ellipse => {
                let [a, b] = self.semi_axes.unwrap_or([1.0, 1.0]);
                ConvexBody2D::ellipse_default(a, b, self.nodes)
            }
            BodyKind::Random => random_body(
                self.seed.unwrap_or(0),
                self.degree.unwrap_or(RANDOM_DEGREE),
                self.amplitude.unwrap_or(RANDOM_AMPLITUDE),
                self.nodes,
            ),
        }
    }

    /// Torsional rigidity in closed form, when known.
    pub fn exact_rigidity(&self) -> Option<f64> {
        match self.kind {
            BodyKind::Disk => Some(PI * self.c0.unwrap_or(1.0).powi(4) / 2.0),
            BodyKind::Ellipse => {
                let [a, b] = self.semi_axes?;
                Some(PI * (a * b).powi(3) / (a * a + b * b))
            }
            _ => None,
        }
    }
}

fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (parse_number(a)?, parse_number(b)?);
        return Ok(a / b);
    }
    s.parse()
        .map_err(|_| Error::Parse(format!("bad number {s:?}")))
}

/// Comma-separated numbers; each may be a fraction such as `1/64`.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

/// Test-function mini-language:
/// `translation:x`, `translation:y`, `translation:V1,V2`, `dilation`,
/// `trig:k=2,a=0.1;k=3,b=0.05` (`a` multiplies `cos k theta`, `b` multiplies
/// `sin k theta`, `k=0` sets the constant) and `random:SEED:DEGREE`.
pub fn parse_test_function(s: &str) -> Result<TestFunction> {
    let s = s.trim();
    let (head, rest) = match s.split_once(':') {
        Some((h, r)) => (h, Some(r)),
        None => (s, None),
    };
    match (head, rest) {
        ("dilation", None) => Ok(TestFunction::Dilation),
        ("translation", Some("x")) => TestFunction::translation([1.0, 0.0]),
        ("translation", Some("y")) => TestFunction::translation([0.0, 1.0]),
        ("translation", Some(r)) => {
            let v = parse_list(r)?;
            if v.len() != 2 {
                return Err(Error::Parse(format!(
                    "translation needs x, y or two components, got {r:?}"
                )));
            }
            TestFunction::translation([v[0], v[1]])
        }
        ("trig", Some(r)) => parse_trig(r),
        ("random", Some(r)) => {
            let parts: Vec<&str> = r.split(':').collect();
            let bad = || {
                Error::Parse(format!(
                    "random test function is random:SEED:DEGREE, got {s:?}"
                ))
            };
            let seed = parts.first().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
            let degree = match parts.get(1) {
                Some(p) => p.parse().map_err(|_| bad())?,
                None => RANDOM_PHI_DEGREE,
            };
            if parts.len() > 2 || degree == 0 {
                return Err(bad());
            }
            Ok(random_test_function(seed, degree, RANDOM_PHI_AMPLITUDE))
        }
        _ => Err(Error::Parse(format!("unrecognized test function {s:?}"))),
    }
}

fn parse_trig(s: &str) -> Result<TestFunction> {
    let mut c0 = 0.0;
    let mut cos: Vec<f64> = vec![];
    let mut sin: Vec<f64> = vec![];
    for term in s.split(';').filter(|t| !t.trim().is_empty()) {
        let mut k = None;
        let (mut a, mut b) = (0.0, 0.0);
        for item in term.split(',') {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("trig term item {item:?} is not key=value")))?;
            match key.trim() {
                "k" => {
                    k = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad frequency {value:?}")))?,
                    )
                }
                "a" => a = parse_number(value)?,
                "b" => b = parse_number(value)?,
                other => return Err(Error::Parse(format!("unknown trig key {other:?}"))),
            }
        }
        let k = k.ok_or_else(|| Error::Parse(format!("trig term {term:?} lacks k")))?;
        if k == 0 {
            c0 += a;
            continue;
        }
        if cos.len() < k {
            cos.resize(k, 0.0);
            sin.resize(k, 0.0);
        }
        cos[k - 1] += a;
        sin[k - 1] += b;
    }
    Ok(TestFunction::trig(TrigSupport::new(c0, cos, sin)?))
}
