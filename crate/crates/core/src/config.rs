//! INI-style configuration: `[section]` headers and `key = value` lines.
//!
//! Every key is optional. [`KEYS`] lists each key with its default and is
//! what `--help` prints.

use std::collections::BTreeMap;
use std::path::Path;

use crate::dct::{BlurMapConfig, DcrParams, RefineParams};
use crate::edas::Orientation;
use crate::error::{Error, Result};
use crate::eval::{EmptyPolicy, ALPHA_SQ};
use crate::pcnn::PcnnParams;
use crate::segment::{AreaThreshold, PipelineConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Float,
    /// Positive float.
    Positive,
    Int,
    Bool,
    /// Integer or `auto`.
    AutoInt,
    /// Pixel count, or a percentage such as `0.1%`.
    Area,
    /// Nine floats, row-major.
    Weights,
    Choice(&'static [&'static str]),
}

pub struct KeySpec {
    pub section: &'static str,
    pub key: &'static str,
    pub default: &'static str,
    pub kind: Kind,
    pub doc: &'static str,
}

macro_rules! key {
    ($s:literal, $k:literal, $d:literal, $kind:expr, $doc:literal) => {
        KeySpec {
            section: $s,
            key: $k,
            default: $d,
            kind: $kind,
            doc: $doc,
        }
    };
}

pub const KEYS: &[KeySpec] = &[
    key!("blur", "patch", "8", Kind::Int, "DCT patch side m"),
    key!("blur", "reblur_sigma", "1.0", Kind::Positive, "re-blur Gaussian sigma"),
    key!(
        "blur",
        "reblur_radius",
        "auto",
        Kind::AutoInt,
        "re-blur kernel radius (auto = ceil(3 sigma))"
    ),
    key!(
        "blur",
        "ratio_floor",
        "0.01",
        Kind::Positive,
        "floor on the re-blurred coefficient in the ratio"
    ),
    key!(
        "blur",
        "use_ratio",
        "true",
        Kind::Bool,
        "score the coefficient ratio instead of the raw profile"
    ),
    key!(
        "dcr",
        "l",
        "auto",
        Kind::AutoInt,
        "low/mid band split (auto = ceil((2m-1)/3)+1)"
    ),
    key!(
        "dcr",
        "h",
        "auto",
        Kind::AutoInt,
        "mid/high band split (auto = ceil(2(2m-1)/3)+1)"
    ),
    key!("dcr", "a", "1.0", Kind::Float, "low band weight"),
    key!("dcr", "b", "1.0", Kind::Float, "mid band weight"),
    key!("dcr", "y", "1.0", Kind::Float, "high band weight"),
    key!("dcr", "map_b", "0.4", Kind::Positive, "mapping slope b"),
    key!("dcr", "map_base", "2.718281828459045", Kind::Positive, "mapping base"),
    key!(
        "refine",
        "enabled",
        "true",
        Kind::Bool,
        "non-local refinement of the map"
    ),
    key!("refine", "min_window", "5", Kind::Int, "small averaging window"),
    key!("refine", "max_window", "11", Kind::Int, "large averaging window"),
    key!("refine", "f_dct", "10.0", Kind::Positive, "descriptor distance scale F"),
    key!("refine", "alpha_w", "0.5", Kind::Float, "small window weight"),
    key!("refine", "beta_w", "0.5", Kind::Float, "large window weight"),
    key!(
        "refine",
        "descriptor_order",
        "auto",
        Kind::AutoInt,
        "descriptor order bound (auto = m)"
    ),
    key!(
        "threshold",
        "enabled",
        "true",
        Kind::Bool,
        "double threshold on the refined map"
    ),
    key!("threshold", "th1", "0.7", Kind::Float, "upper threshold"),
    key!("threshold", "th2", "0.3", Kind::Float, "lower threshold (blurmap)"),
    key!("pcnn", "beta", "0.2", Kind::Float, "linking strength"),
    key!("pcnn", "v_q", "1.0", Kind::Positive, "linking amplitude"),
    key!("pcnn", "d_q", "0.7", Kind::Positive, "linking decay"),
    key!("pcnn", "v_theta", "20.0", Kind::Positive, "threshold amplitude"),
    key!("pcnn", "d_theta", "0.2", Kind::Positive, "threshold decay"),
    key!(
        "pcnn",
        "w",
        "0.5 1 0.5 1 0 1 0.5 1 0.5",
        Kind::Weights,
        "3x3 linking weights, row-major"
    ),
    key!("pcnn", "max_iters", "50", Kind::Int, "iteration cap"),
    key!(
        "segment",
        "threshold_ratio",
        "0.4",
        Kind::Float,
        "segment lower threshold = ratio * th1"
    ),
    key!(
        "segment",
        "area_threshold",
        "0.1%",
        Kind::Area,
        "components must be larger than this"
    ),
    key!(
        "segment",
        "candidate_level",
        "0.5",
        Kind::Float,
        "minimum mean stimulus of a candidate wave"
    ),
    key!(
        "segment",
        "bilateral",
        "false",
        Kind::Bool,
        "bilateral smoothing of the raw map"
    ),
    key!(
        "segment",
        "bilateral_sigma_spatial",
        "2.0",
        Kind::Positive,
        "bilateral spatial sigma"
    ),
    key!(
        "segment",
        "bilateral_sigma_range",
        "0.1",
        Kind::Positive,
        "bilateral range sigma"
    ),
    key!("eval", "alpha_sq", "0.3", Kind::Positive, "F-measure alpha squared"),
    key!(
        "eval",
        "empty",
        "one",
        Kind::Choice(&["one", "nan"]),
        "precision/recall with an empty denominator"
    ),
    key!(
        "rank",
        "orientation",
        "shortfall",
        Kind::Choice(&["shortfall", "canonical"]),
        "lowest (shortfall) or highest (canonical) score wins"
    ),
];

/// `[section]` blocks listing every key with its default and description.
pub fn describe_keys() -> String {
    let mut out = String::new();
    let mut section = "";
    for k in KEYS {
        if k.section != section {
            if !section.is_empty() {
                out.push('\n');
            }
            section = k.section;
            out.push_str(&format!("[{section}]\n"));
        }
        out.push_str(&format!("{} = {}  # {}\n", k.key, k.default, k.doc));
    }
    out
}

fn spec(section: &str, key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|k| k.section == section && k.key == key)
}

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Float(f64),
    Int(usize),
    Bool(bool),
    Auto,
    Area(AreaThreshold),
    Weights([[f64; 3]; 3]),
    Choice(String),
}

fn parse_value(kind: Kind, raw: &str) -> std::result::Result<Value, String> {
    let float = |s: &str| {
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("expected a number, got {s:?}"))
    };
    let int = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| format!("expected a non-negative integer, got {s:?}"))
    };
    match kind {
        Kind::Float => float(raw).map(Value::Float),
        Kind::Positive => match float(raw)? {
            v if v > 0.0 => Ok(Value::Float(v)),
            v => Err(format!("expected a positive number, got {v}")),
        },
        Kind::Int => int(raw).map(Value::Int),
        Kind::AutoInt if raw == "auto" => Ok(Value::Auto),
        Kind::AutoInt => int(raw).map(Value::Int),
        Kind::Bool => match raw {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("expected true or false, got {raw:?}")),
        },
        Kind::Area => match raw.strip_suffix('%') {
            Some(pct) => match float(pct.trim())? {
                v if v >= 0.0 => Ok(Value::Area(AreaThreshold::Fraction(v / 100.0))),
                v => Err(format!("negative area {v}%")),
            },
            None => int(raw).map(|n| Value::Area(AreaThreshold::Pixels(n))),
        },
        Kind::Weights => {
            let vals = raw
                .split_whitespace()
                .map(float)
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if vals.len() != 9 {
                return Err(format!("expected 9 weights, got {}", vals.len()));
            }
            let mut w = [[0.0; 3]; 3];
            for (i, v) in vals.into_iter().enumerate() {
                w[i / 3][i % 3] = v;
            }
            Ok(Value::Weights(w))
        }
        Kind::Choice(options) if options.contains(&raw) => Ok(Value::Choice(raw.to_string())),
        Kind::Choice(options) => Err(format!("expected one of {}, got {raw:?}", options.join("|"))),
    }
}

/// Resolved settings for every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Blur map settings used by `blurmap`.
    pub blur: BlurMapConfig,
    pub pipeline: PipelineConfig,
    pub alpha_sq: f64,
    pub empty: EmptyPolicy,
    pub orientation: Orientation,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            blur: BlurMapConfig::default(),
            pipeline: PipelineConfig::default(),
            alpha_sq: ALPHA_SQ,
            empty: EmptyPolicy::default(),
            orientation: Orientation::default(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values: BTreeMap<(&'static str, &'static str), Value> = KEYS
            .iter()
            .map(|k| {
                let v = parse_value(k.kind, k.default).expect("registry defaults parse");
                ((k.section, k.key), v)
            })
            .collect();
        let mut section: Option<&'static str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| Error::Parse { line: line_no, reason };
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    KEYS.iter()
                        .find(|k| k.section == name)
                        .map(|k| k.section)
                        .ok_or_else(|| err(format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
            let sec = section.ok_or_else(|| err(format!("key {key:?} outside any section")))?;
            let spec = spec(sec, key).ok_or_else(|| err(format!("unknown key {key:?} in [{sec}]")))?;
            let parsed = parse_value(spec.kind, value).map_err(|r| err(format!("{sec}.{key}: {r}")))?;
            values.insert((spec.section, spec.key), parsed);
        }
        Self::from_values(&values)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    fn from_values(v: &BTreeMap<(&'static str, &'static str), Value>) -> Result<Self> {
        let get = |s: &'static str, k: &'static str| &v[&(s, k)];
        let float = |s: &'static str, k: &'static str| match get(s, k) {
            Value::Float(x) => *x,
            other => unreachable!("{s}.{k} is {other:?}"),
        };
        let int = |s: &'static str, k: &'static str| match get(s, k) {
            Value::Int(x) => *x,
            other => unreachable!("{s}.{k} is {other:?}"),
        };
        let auto = |s: &'static str, k: &'static str| match get(s, k) {
            Value::Int(x) => Some(*x),
            _ => None,
        };
        let flag = |s: &'static str, k: &'static str| matches!(get(s, k), Value::Bool(true));
        let choice = |s: &'static str, k: &'static str| match get(s, k) {
            Value::Choice(c) => c.clone(),
            other => unreachable!("{s}.{k} is {other:?}"),
        };

        let patch = int("blur", "patch");
        let mut dcr = DcrParams::for_patch(patch);
        let dcr_defaults = dcr.clone();
        dcr.l = auto("dcr", "l").unwrap_or(dcr.l);
        dcr.h = auto("dcr", "h").unwrap_or(dcr.h);
        dcr.a = float("dcr", "a");
        dcr.b = float("dcr", "b");
        dcr.y = float("dcr", "y");
        dcr.map_b = float("dcr", "map_b");
        dcr.map_base = float("dcr", "map_base");
        let refine = RefineParams {
            min_window: int("refine", "min_window"),
            max_window: int("refine", "max_window"),
            f_dct: float("refine", "f_dct"),
            alpha_w: float("refine", "alpha_w"),
            beta_w: float("refine", "beta_w"),
        };
        let th1 = float("threshold", "th1");
        let threshold_on = flag("threshold", "enabled");
        let blur = BlurMapConfig {
            patch,
            reblur_sigma: float("blur", "reblur_sigma"),
            reblur_radius: auto("blur", "reblur_radius"),
            ratio_floor: float("blur", "ratio_floor"),
            use_ratio: flag("blur", "use_ratio"),
            dcr: (dcr != dcr_defaults).then_some(dcr),
            descriptor_order: auto("refine", "descriptor_order"),
            refine: flag("refine", "enabled").then_some(refine),
            threshold: threshold_on.then_some((th1, float("threshold", "th2"))),
        };
        let Value::Weights(w) = get("pcnn", "w").clone() else {
            unreachable!("pcnn.w is a weight matrix")
        };
        let pcnn = PcnnParams {
            beta: float("pcnn", "beta"),
            v_q: float("pcnn", "v_q"),
            d_q: float("pcnn", "d_q"),
            v_theta: float("pcnn", "v_theta"),
            d_theta: float("pcnn", "d_theta"),
            w,
            max_iters: int("pcnn", "max_iters") as u32,
            ..PcnnParams::default()
        };
        pcnn.validate()?;
        let Value::Area(area_threshold) = get("segment", "area_threshold").clone() else {
            unreachable!("segment.area_threshold is an area")
        };
        let pipeline = PipelineConfig {
            dct: BlurMapConfig {
                threshold: threshold_on.then_some((th1, float("segment", "threshold_ratio") * th1)),
                ..blur.clone()
            },
            pcnn,
            area_threshold,
            candidate_level: float("segment", "candidate_level"),
            bilateral: flag("segment", "bilateral").then_some((
                float("segment", "bilateral_sigma_spatial"),
                float("segment", "bilateral_sigma_range"),
            )),
        };
        Ok(Self {
            blur,
            pipeline,
            alpha_sq: float("eval", "alpha_sq"),
            empty: if choice("eval", "empty") == "nan" {
                EmptyPolicy::Nan
            } else {
                EmptyPolicy::One
            },
            orientation: if choice("rank", "orientation") == "canonical" {
                Orientation::Canonical
            } else {
                Orientation::Shortfall
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcnn::default_weights;
    use crate::segment::THRESHOLD_RATIO;

    #[test]
    fn registry_defaults_match_code_defaults() {
        let parsed = Config::parse("").unwrap();
        assert_eq!(parsed, Config::default());
        assert_eq!(parsed.pipeline.pcnn.w, default_weights());
        assert_eq!(parsed.pipeline.dct.threshold, Some((0.7, THRESHOLD_RATIO * 0.7)));
    }

    #[test]
    fn description_lists_every_key_with_its_default() {
        let text = describe_keys();
        let mut section = "";
        let mut listed = Vec::new();
        for line in text.lines().filter(|l| !l.is_empty()) {
            if let Some(name) = line.strip_prefix('[') {
                section = name.trim_end_matches(']');
                continue;
            }
            let (key, rest) = line.split_once(" = ").unwrap();
            let default = rest.split("  # ").next().unwrap();
            listed.push((section.to_string(), key.to_string(), default.to_string()));
        }
        let registry: Vec<_> = KEYS
            .iter()
            .map(|k| (k.section.to_string(), k.key.to_string(), k.default.to_string()))
            .collect();
        assert_eq!(listed, registry);
        // the help text is itself a valid config that yields the defaults
        assert_eq!(Config::parse(&text).unwrap(), Config::default());
    }

    #[test]
    fn overrides_apply() {
        let cfg = Config::parse(
            "# tuning\n[blur]\npatch = 6\n\n[threshold]\nth1 = 0.8 ; inline\n[segment]\narea_threshold = 12\nbilateral = true\n[rank]\norientation = canonical\n",
        )
        .unwrap();
        assert_eq!(cfg.blur.patch, 6);
        assert_eq!(cfg.blur.threshold, Some((0.8, 0.3)));
        assert!((cfg.pipeline.dct.threshold.unwrap().1 - 0.32).abs() < 1e-12);
        assert_eq!(cfg.pipeline.area_threshold, AreaThreshold::Pixels(12));
        assert_eq!(cfg.pipeline.bilateral, Some((2.0, 0.1)));
        assert_eq!(cfg.orientation, Orientation::Canonical);
        assert_eq!(cfg.pipeline.dct.patch, 6);
    }

    #[test]
    fn unknown_keys_and_bad_values_name_the_line() {
        let bad = [
            ("[blur]\npatch = 8\nfoo = 1\n", 3),
            ("[nope]\n", 1),
            ("patch = 8\n", 1),
            ("[blur]\n\npatch = eight\n", 3),
            ("[pcnn]\nw = 1 2 3\n", 2),
            ("[segment]\nbilateral = yes\n", 2),
            ("[blur]\nreblur_sigma = 0\n", 2),
            ("[blur]\njust text\n", 2),
        ];
        for (text, line) in bad {
            match Config::parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
    }

    #[test]
    fn pcnn_ranges_are_checked() {
        assert!(matches!(Config::parse("[pcnn]\nbeta = 1.5\n"), Err(Error::Domain(_))));
    }

    #[test]
    fn area_percent() {
        let cfg = Config::parse("[segment]\narea_threshold = 2.5%\n").unwrap();
        assert_eq!(cfg.pipeline.area_threshold, AreaThreshold::Fraction(0.025));
    }
}
