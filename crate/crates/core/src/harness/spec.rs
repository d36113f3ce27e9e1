use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::engine::default_buffer;
use crate::error::{Error, Result};
use crate::kernel_profile::{JumpKernel, StepProfileParams};

pub const DEFAULT_REPLICAS: usize = 20;
pub const DEFAULT_SEED: u64 = 0;

const KEYS: &[&str] = &[
    "kind", "kernel", "lambda", "rho", "t_final", "intervals", "replicas", "seed", "buffer",
    "t_burn",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Lln,
    Stationary,
    Shock,
    Rarefaction,
    Subadditive,
    Invariants,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Lln => "lln",
            Self::Stationary => "stationary",
            Self::Shock => "shock",
            Self::Rarefaction => "rarefaction",
            Self::Subadditive => "subadditive",
            Self::Invariants => "invariants",
        }
    }

    /// Kinds that measure interval densities at a fixed time.
    pub fn is_density_kind(&self) -> bool {
        matches!(self, Self::Lln | Self::Stationary | Self::Shock | Self::Rarefaction)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "lln" => Self::Lln,
            "stationary" => Self::Stationary,
            "shock" => Self::Shock,
            "rarefaction" => Self::Rarefaction,
            "subadditive" => Self::Subadditive,
            "invariants" => Self::Invariants,
            other => {
                return Err(format!(
                    "unknown kind `{other}`; expected lln, stationary, shock, rarefaction, subadditive or invariants"
                ))
            }
        })
    }
}

/// Declarative description of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub kernel: JumpKernel,
    pub params: StepProfileParams,
    pub t_final: f64,
    pub intervals: Vec<(f64, f64)>,
    pub replicas: usize,
    pub seed: u64,
    pub buffer_override: Option<i64>,
    pub t_burn: Option<f64>,
}

impl ExperimentSpec {
    /// Buffer added on each side of the observation range. The subadditive
    /// array must keep its second-class front and the boundary contamination
    /// apart, so its default is twice the single-run rule.
    pub fn buffer(&self) -> i64 {
        self.buffer_override.unwrap_or_else(|| {
            let b = default_buffer(&self.kernel, self.t_final);
            if self.kind == ExperimentKind::Subadditive {
                2 * b
            } else {
                b
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Origin {
    Line(usize),
    Flag,
}

#[derive(Debug, Clone)]
struct Entry {
    origin: Origin,
    value: String,
}

fn located(origin: Origin, key: &str, message: impl Into<String>) -> Error {
    match origin {
        Origin::Line(line) => Error::Parse {
            line,
            message: message.into(),
        },
        Origin::Flag => Error::InvalidArgument(format!("{key}: {}", message.into())),
    }
}

/// A flat `key = value` document before interpretation.
#[derive(Debug, Clone, Default)]
pub struct RawSpec {
    entries: BTreeMap<String, Entry>,
    last_line: usize,
}

impl RawSpec {
    /// Parses one document; `first_line` numbers its first line.
    fn parse_lines<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Self> {
        let mut raw = RawSpec::default();
        for (line_no, line) in lines {
            raw.last_line = line_no;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("unknown key `{key}`"),
                });
            }
            if let Some(prev) = raw.entries.get(key) {
                let Origin::Line(prev_line) = prev.origin else { unreachable!() };
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("duplicate key `{key}` (first set on line {prev_line})"),
                });
            }
            raw.entries.insert(
                key.to_string(),
                Entry {
                    origin: Origin::Line(line_no),
                    value: value.to_string(),
                },
            );
        }
        Ok(raw)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_lines(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    /// Sets or replaces a key from the command line.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::InvalidArgument(format!("unknown key `{key}`")));
        }
        self.entries.insert(
            key.to_string(),
            Entry {
                origin: Origin::Flag,
                value: value.into(),
            },
        );
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<(T, Origin)>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(entry) => entry
                .value
                .parse::<T>()
                .map(|v| Some((v, entry.origin)))
                .map_err(|_| located(entry.origin, key, format!("invalid value `{}` for `{key}`", entry.value))),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<(T, Origin)> {
        self.get(key)?.ok_or_else(|| Error::Parse {
            line: self.last_line.max(1),
            message: format!("missing required key `{key}`"),
        })
    }

    /// Interprets the document, applying defaults and checking constraints.
    pub fn build(&self) -> Result<ExperimentSpec> {
        let kind = match self.entries.get("kind") {
            None => ExperimentKind::Lln,
            Some(e) => e
                .value
                .parse()
                .map_err(|m: String| located(e.origin, "kind", m))?,
        };
        let kernel = {
            let e = self.entries.get("kernel").ok_or_else(|| Error::Parse {
                line: self.last_line.max(1),
                message: "missing required key `kernel`".into(),
            })?;
            e.value
                .parse::<JumpKernel>()
                .map_err(|err| located(e.origin, "kernel", err.to_string()))?
        };
        let (lambda, _): (f64, _) = self.require("lambda")?;
        let (rho, rho_origin): (f64, _) = self.require("rho")?;
        let params = StepProfileParams::new(lambda, rho).map_err(|err| {
            let msg = match err {
                Error::InvalidParams(m) => m,
                other => other.to_string(),
            };
            located(rho_origin, "rho", msg)
        })?;

        let (t_final, t_origin): (f64, _) = self.require("t_final")?;
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(located(t_origin, "t_final", "t_final must be positive"));
        }

        let intervals = match self.entries.get("intervals") {
            None => Vec::new(),
            Some(e) => parse_intervals(&e.value).map_err(|m| located(e.origin, "intervals", m))?,
        };
        let intervals_origin = self
            .entries
            .get("intervals")
            .map_or(Origin::Line(self.last_line.max(1)), |e| e.origin);
        if intervals.is_empty() && kind != ExperimentKind::Invariants {
            return Err(located(
                intervals_origin,
                "intervals",
                format!("kind `{kind}` requires at least one interval"),
            ));
        }

        let replicas = match self.get::<usize>("replicas")? {
            None => DEFAULT_REPLICAS,
            Some((0, origin)) => return Err(located(origin, "replicas", "replicas must be ≥ 1")),
            Some((n, _)) => n,
        };
        let seed = self.get::<u64>("seed")?.map_or(DEFAULT_SEED, |(s, _)| s);
        let buffer_override = match self.get::<i64>("buffer")? {
            Some((b, origin)) if b < 0 => {
                return Err(located(origin, "buffer", "buffer must be non-negative"))
            }
            other => other.map(|(b, _)| b),
        };
        let t_burn = match self.get::<f64>("t_burn")? {
            Some((t, origin)) if !(t >= 0.0 && t.is_finite()) => {
                return Err(located(origin, "t_burn", "t_burn must be non-negative"))
            }
            other => other.map(|(t, _)| t),
        };

        let kind_origin = self
            .entries
            .get("kind")
            .map_or(Origin::Line(1), |e| e.origin);
        let alpha = kernel.drift();
        match kind {
            ExperimentKind::Stationary if lambda != rho => {
                return Err(located(kind_origin, "kind", "stationary requires lambda = rho"))
            }
            ExperimentKind::Rarefaction if !(alpha > 0.0 && lambda > rho) => {
                return Err(located(
                    kind_origin,
                    "kind",
                    "rarefaction requires positive drift and rho < lambda",
                ))
            }
            ExperimentKind::Shock if !(alpha <= 0.0 && lambda > rho) => {
                return Err(located(
                    kind_origin,
                    "kind",
                    "shock requires non-positive drift and rho < lambda",
                ))
            }
            ExperimentKind::Subadditive => {
                for &(u, _) in &intervals {
                    if !(u > 0.0) {
                        return Err(located(
                            intervals_origin,
                            "intervals",
                            "subadditive intervals need 0 < u < v",
                        ));
                    }
                    if (u * t_final).floor() < 2.0 {
                        return Err(located(
                            intervals_origin,
                            "intervals",
                            format!("u·t_final must be at least 2 for u = {u}"),
                        ));
                    }
                }
            }
            _ => {}
        }

        Ok(ExperimentSpec {
            kind,
            kernel,
            params,
            t_final,
            intervals,
            replicas,
            seed,
            buffer_override,
            t_burn,
        })
    }
}

/// `u v, u v, ...`
pub fn parse_intervals(text: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let nums: Vec<&str> = part.split_whitespace().collect();
        let [u, v] = nums[..] else {
            return Err(format!("interval `{part}` must be two numbers `u v`"));
        };
        let u: f64 = u.parse().map_err(|_| format!("bad number `{u}`"))?;
        let v: f64 = v.parse().map_err(|_| format!("bad number `{v}`"))?;
        if !(u < v) || !u.is_finite() || !v.is_finite() {
            return Err(format!("interval ({u}, {v}) needs finite u < v"));
        }
        out.push((u, v));
    }
    Ok(out)
}

pub fn format_intervals(intervals: &[(f64, f64)]) -> String {
    intervals
        .iter()
        .map(|(u, v)| format!("{u} {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Parses a single experiment document.
pub fn parse_spec(text: &str) -> Result<ExperimentSpec> {
    RawSpec::parse(text)?.build()
}

/// Splits a sweep file on lines consisting of `---` and parses each part.
/// Line numbers in errors refer to the whole file.
pub fn parse_sweep(text: &str) -> Result<Vec<ExperimentSpec>> {
    let mut specs = Vec::new();
    let mut chunk: Vec<(usize, &str)> = Vec::new();
    let mut flush = |chunk: &mut Vec<(usize, &str)>| -> Result<()> {
        let has_content = chunk
            .iter()
            .any(|(_, l)| !l.split('#').next().unwrap_or("").trim().is_empty());
        if has_content {
            specs.push(RawSpec::parse_lines(chunk.drain(..))?.build()?);
        }
        chunk.clear();
        Ok(())
    };
    for (i, line) in text.lines().enumerate() {
        if line.trim() == "---" {
            flush(&mut chunk)?;
        } else {
            chunk.push((i + 1, line));
        }
    }
    flush(&mut chunk)?;
    if specs.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "sweep file contains no experiments".into(),
        });
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "kernel = 1:1\nlambda = 1\nrho = 0\nt_final = 100\nintervals = -1 1\n";

    #[test]
    fn minimal_document_gets_defaults() {
        let spec = parse_spec(MINIMAL).unwrap();
        assert_eq!(spec.kind, ExperimentKind::Lln);
        assert_eq!(spec.replicas, 20);
        assert_eq!(spec.seed, 0);
        assert_eq!(spec.buffer(), 400);
        assert_eq!(spec.intervals, vec![(-1.0, 1.0)]);
        assert_eq!(spec.t_burn, None);
    }

    #[test]
    fn comments_and_full_keys() {
        let text = "# header\nkind = rarefaction  # inline\nkernel = 1:0.75, -1:0.25\nlambda = 0.9\nrho = 0.1\n\
                    t_final = 50\nintervals = -1 1, -0.1 0.1\nreplicas = 3\nseed = 42\nbuffer = 17\nt_burn = 5\n";
        let spec = parse_spec(text).unwrap();
        assert_eq!(spec.kind, ExperimentKind::Rarefaction);
        assert_eq!(spec.intervals.len(), 2);
        assert_eq!((spec.replicas, spec.seed, spec.buffer()), (3, 42, 17));
        assert_eq!(spec.t_burn, Some(5.0));
    }

    #[test]
    fn rho_above_lambda_rejected_with_line() {
        let text = "kernel = 1:1\nlambda = 0.3\nrho = 0.8\nt_final = 10\nintervals = 0 1\n";
        let err = parse_spec(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert!(msg.contains("requires rho ≤ lambda"), "{msg}");
    }

    #[test]
    fn bad_kernel_rejected() {
        let text = "kernel = 1:0.5,-1:0.4\nlambda = 1\nrho = 0\nt_final = 10\nintervals = 0 1\n";
        let err = parse_spec(text).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn strictness() {
        let err = parse_spec(&format!("{MINIMAL}color = red\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 6, .. }));
        let err = parse_spec(&format!("{MINIMAL}rho = 0\n")).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert!(parse_spec("kernel 1:1\n").is_err());
        assert!(parse_spec("kernel = 1:1\nlambda = 1\nrho = 0\nt_final = 10\n").is_err());
        let err = parse_spec(&MINIMAL.replace("t_final = 100", "t_final = -1")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        assert!(parse_spec(&format!("{MINIMAL}replicas = 0\n")).is_err());
        assert!(parse_spec(&MINIMAL.replace("-1 1", "1 -1")).is_err());
    }

    #[test]
    fn kind_constraints() {
        assert!(parse_spec(&format!("kind = stationary\n{MINIMAL}")).is_err());
        assert!(parse_spec(&format!("kind = shock\n{MINIMAL}")).is_err());
        assert!(parse_spec(&format!("kind = rarefaction\n{MINIMAL}")).is_ok());
        assert!(parse_spec(&format!("kind = subadditive\n{MINIMAL}")).is_err());
        let sub = MINIMAL.replace("-1 1", "0.5 1");
        assert!(parse_spec(&format!("kind = subadditive\n{sub}")).is_ok());
        let inv = "kind = invariants\nkernel = 1:1\nlambda = 0.8\nrho = 0.2\nt_final = 10\n";
        assert!(parse_spec(inv).is_ok());
    }

    #[test]
    fn overrides_replace_document_values() {
        let mut raw = RawSpec::parse(MINIMAL).unwrap();
        raw.set("seed", "7").unwrap();
        raw.set("lambda", "0.5").unwrap();
        raw.set("rho", "0.5").unwrap();
        let spec = raw.build().unwrap();
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.params.lambda(), 0.5);
        raw.set("rho", "0.9").unwrap();
        assert!(matches!(raw.build().unwrap_err(), Error::InvalidArgument(_)));
        assert!(raw.set("nope", "1").is_err());
    }

    #[test]
    fn sweep_splits_documents() {
        let text = format!("{MINIMAL}---\n# second\n{}", MINIMAL.replace("rho = 0", "rho = 0.2"));
        let specs = parse_sweep(&text).unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[1].params.rho(), 0.2);
        let bad = format!("{MINIMAL}---\nkernel = 1:1\nlambda = 0.1\nrho = 0.2\n");
        let err = parse_sweep(&bad).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 9, .. }), "{err}");
        assert!(parse_sweep("---\n# nothing\n").is_err());
    }
}
