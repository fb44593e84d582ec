//! Flat key-value pipeline configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys: `scales`,
//! `betas`, `layers`, `tau`, `bandwidth.mode` (`silverman` or `fixed`),
//! `bandwidth.delta[L]` (1-based layer index, required contiguously for the
//! fixed mode), `lda.shrinkage`, `lda.dim` (number or `auto`), `sweep.mode`
//! (`full` or `center`), and `seed`. Unknown and duplicate keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{BandwidthPolicy, PipelineConfig, SweepMode};

/// A pipeline configuration plus the run seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pipeline: PipelineConfig::default(),
            seed: 0,
        }
    }
}

impl RunConfig {
    /// Canonical text form: every key on its own line in a fixed order, so
    /// equal configurations render to equal bytes.
    pub fn render(&self) -> String {
        let p = &self.pipeline;
        let mut out = String::new();
        let join = |xs: &[String]| xs.join(",");
        writeln!(
            out,
            "scales = {}",
            join(&p.scales.iter().map(|s| s.to_string()).collect::<Vec<_>>())
        )
        .unwrap();
        writeln!(
            out,
            "betas = {}",
            join(&p.betas.iter().map(|b| b.to_string()).collect::<Vec<_>>())
        )
        .unwrap();
        writeln!(out, "layers = {}", p.layers).unwrap();
        writeln!(out, "tau = {}", p.tau).unwrap();
        match &p.bandwidth {
            BandwidthPolicy::SilvermanMidpoint => {
                writeln!(out, "bandwidth.mode = silverman").unwrap();
            }
            BandwidthPolicy::Fixed(deltas) => {
                writeln!(out, "bandwidth.mode = fixed").unwrap();
                for (i, d) in deltas.iter().enumerate() {
                    writeln!(out, "bandwidth.delta[{}] = {}", i + 1, d).unwrap();
                }
            }
        }
        writeln!(out, "lda.shrinkage = {}", p.lda_shrinkage).unwrap();
        match p.lda_dim {
            Some(d) => writeln!(out, "lda.dim = {d}").unwrap(),
            None => writeln!(out, "lda.dim = auto").unwrap(),
        }
        let sweep = match p.sweep {
            SweepMode::FullWindow => "full",
            SweepMode::CenterOnly => "center",
        };
        writeln!(out, "sweep.mode = {sweep}").unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        out
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_config(&text, &path.display().to_string())
}

pub fn parse_config(text: &str, path: &str) -> Result<RunConfig> {
    let err = |line: usize, message: String| Error::Config {
        path: path.to_string(),
        line,
        message,
    };

    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut cfg = RunConfig::default();
    let mut mode_fixed: Option<bool> = None;
    let mut deltas: BTreeMap<usize, f64> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(line_no, format!("expected key = value, got {raw:?}")));
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(prev) = seen.insert(key.to_string(), line_no) {
            return Err(err(
                line_no,
                format!("duplicate key {key:?} (first set on line {prev})"),
            ));
        }

        match key {
            "scales" => {
                cfg.pipeline.scales = parse_list(value)
                    .map_err(|m| err(line_no, format!("scales: {m}")))?;
            }
            "betas" => {
                cfg.pipeline.betas = parse_list(value)
                    .map_err(|m| err(line_no, format!("betas: {m}")))?;
            }
            "layers" => {
                cfg.pipeline.layers = parse_one(value)
                    .map_err(|m| err(line_no, format!("layers: {m}")))?;
            }
            "tau" => {
                cfg.pipeline.tau =
                    parse_one(value).map_err(|m| err(line_no, format!("tau: {m}")))?;
            }
            "bandwidth.mode" => {
                mode_fixed = Some(match value {
                    "silverman" => false,
                    "fixed" => true,
                    other => {
                        return Err(err(
                            line_no,
                            format!("bandwidth.mode must be silverman or fixed, got {other:?}"),
                        ))
                    }
                });
            }
            "lda.shrinkage" => {
                cfg.pipeline.lda_shrinkage = parse_one(value)
                    .map_err(|m| err(line_no, format!("lda.shrinkage: {m}")))?;
            }
            "lda.dim" => {
                cfg.pipeline.lda_dim = if value == "auto" {
                    None
                } else {
                    Some(
                        parse_one(value)
                            .map_err(|m| err(line_no, format!("lda.dim: {m}")))?,
                    )
                };
            }
            "sweep.mode" => {
                cfg.pipeline.sweep = match value {
                    "full" => SweepMode::FullWindow,
                    "center" => SweepMode::CenterOnly,
                    other => {
                        return Err(err(
                            line_no,
                            format!("sweep.mode must be full or center, got {other:?}"),
                        ))
                    }
                };
            }
            "seed" => {
                cfg.seed =
                    parse_one(value).map_err(|m| err(line_no, format!("seed: {m}")))?;
            }
            _ => {
                if let Some(rest) = key
                    .strip_prefix("bandwidth.delta[")
                    .and_then(|r| r.strip_suffix(']'))
                {
                    let layer: usize = rest.parse().map_err(|_| {
                        err(line_no, format!("bad layer index {rest:?}"))
                    })?;
                    if layer == 0 {
                        return Err(err(line_no, "layer indices start at 1".into()));
                    }
                    let d: f64 = parse_one(value)
                        .map_err(|m| err(line_no, format!("bandwidth.delta: {m}")))?;
                    deltas.insert(layer, d);
                } else {
                    return Err(err(line_no, format!("unknown key {key:?}")));
                }
            }
        }
    }

    match (mode_fixed, deltas.is_empty()) {
        (Some(true) | None, false) => {
            let n = deltas.len();
            let mut list = Vec::with_capacity(n);
            for i in 1..=n {
                match deltas.get(&i) {
                    Some(&d) => list.push(d),
                    None => {
                        return Err(err(
                            0,
                            format!("bandwidth.delta[{i}] missing; indices must be contiguous from 1"),
                        ))
                    }
                }
            }
            cfg.pipeline.bandwidth = BandwidthPolicy::Fixed(list);
        }
        (Some(true), true) => {
            return Err(err(
                0,
                "bandwidth.mode = fixed requires at least bandwidth.delta[1]".into(),
            ))
        }
        (Some(false), false) => {
            return Err(err(
                0,
                "bandwidth.delta entries conflict with bandwidth.mode = silverman".into(),
            ))
        }
        (Some(false) | None, true) => {}
    }

    cfg.pipeline.validate()?;
    Ok(cfg)
}

fn parse_one<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("cannot parse {value:?}"))
}

fn parse_list<T: std::str::FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    if value.is_empty() {
        return Err("empty list".into());
    }
    value
        .split(',')
        .map(|part| parse_one(part.trim()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_render_and_reparse_identically() {
        let cfg = RunConfig::default();
        let text = cfg.render();
        let back = parse_config(&text, "render").unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.render(), text);
    }

    #[test]
    fn full_fixed_config_round_trips() {
        let text = "\
# desk-scale run
scales = 3, 5
betas = 2, 3.5
layers = 2
tau = 4
bandwidth.mode = fixed
bandwidth.delta[1] = 0.4
bandwidth.delta[2] = 0.25
lda.shrinkage = 0.2
lda.dim = 3
sweep.mode = center
seed = 9
";
        let cfg = parse_config(text, "t").unwrap();
        assert_eq!(cfg.pipeline.scales, vec![3, 5]);
        assert_eq!(cfg.pipeline.betas, vec![2.0, 3.5]);
        assert_eq!(cfg.pipeline.layers, 2);
        assert_eq!(cfg.pipeline.tau, 4);
        assert_eq!(
            cfg.pipeline.bandwidth,
            BandwidthPolicy::Fixed(vec![0.4, 0.25])
        );
        assert_eq!(cfg.pipeline.lda_shrinkage, 0.2);
        assert_eq!(cfg.pipeline.lda_dim, Some(3));
        assert_eq!(cfg.pipeline.sweep, SweepMode::CenterOnly);
        assert_eq!(cfg.seed, 9);
        let again = parse_config(&cfg.render(), "t2").unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn empty_text_yields_the_defaults() {
        let cfg = parse_config("", "t").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Config { line, .. } => line,
            other => panic!("expected Config error, got {other}"),
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(line_of(parse_config("layers = 2\nbogus = 1", "t").unwrap_err()), 2);
        assert_eq!(line_of(parse_config("\n\nno equals here", "t").unwrap_err()), 3);
        assert_eq!(line_of(parse_config("tau = banana", "t").unwrap_err()), 1);
        assert_eq!(
            line_of(parse_config("seed = 1\nseed = 2", "t").unwrap_err()),
            2
        );
    }

    #[test]
    fn fixed_mode_requires_contiguous_deltas() {
        let missing = "bandwidth.mode = fixed\nbandwidth.delta[2] = 0.3";
        assert!(matches!(
            parse_config(missing, "t").unwrap_err(),
            Error::Config { .. }
        ));
        let none = "bandwidth.mode = fixed";
        assert!(parse_config(none, "t").is_err());
        let conflict = "bandwidth.mode = silverman\nbandwidth.delta[1] = 0.3";
        assert!(parse_config(conflict, "t").is_err());
        let zero = "bandwidth.delta[0] = 0.3";
        assert!(parse_config(zero, "t").is_err());
    }

    #[test]
    fn deltas_without_mode_imply_fixed() {
        let cfg = parse_config("bandwidth.delta[1] = 0.5", "t").unwrap();
        assert_eq!(cfg.pipeline.bandwidth, BandwidthPolicy::Fixed(vec![0.5]));
    }

    #[test]
    fn invalid_pipeline_values_fail_validation() {
        assert!(parse_config("scales = 4", "t").is_err());
        assert!(parse_config("betas = -1", "t").is_err());
        assert!(parse_config("layers = 0", "t").is_err());
        assert!(parse_config("lda.shrinkage = 2", "t").is_err());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let cfg = parse_config("# all defaults\n\nlayers = 3 # stack of three\n", "t").unwrap();
        assert_eq!(cfg.pipeline.layers, 3);
    }
}
