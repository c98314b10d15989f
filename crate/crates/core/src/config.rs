//! Run configuration files: flat `key = value` lines grouped under
//! `[section]` headers, `#` comments, unknown keys rejected with their line
//! number.
//!
//! ```text
//!     [model]
//!     kind = kp              # kp | dkp_reg | kdv | ds
//!     lambda = -1
//!     epsilon = 0.1
//!
//!     [init]
//!     family = radial_dx_sech2
//!     amplitude = 6
//!     nu = 1
//!
//!     [grid]
//!     nx = 2048
//!     ny = 128
//!     lx = 10
//!     ly = 10
//!
//!     [run]
//!     dt = 2e-5
//!     t_end = 0.2
//!     snapshot_every = 2000
//!     diagnostics_every = 100
//!
//!     [output]
//!     directory = out
//!     prefix = run
//! ```
//!
//! An optional `[sweep]` section holds comma-separated lists expanded by the
//! sweep runner.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::grid::SpectralGrid;
use crate::initial_data::InitSpec;
use crate::integrator::RunConfig;
use crate::models::{ModelKind, ModelSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl GridConfig {
    pub fn build(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.nx, self.ny, self.lx, self.ly)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub prefix: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            prefix: "run".into(),
        }
    }
}

/// Aligned per-run parameter lists for the sweep runner. `epsilon` drives
/// the expansion; the optional lists must match its length.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepConfig {
    pub epsilon: Vec<f64>,
    pub nx: Option<Vec<usize>>,
    pub ny: Option<Vec<usize>>,
    pub dt: Option<Vec<f64>>,
    pub lx: Option<Vec<f64>>,
    pub ly: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub model: ModelSpec,
    pub init: InitSpec,
    pub grid: GridConfig,
    pub run: RunConfig,
    pub output: OutputConfig,
    pub sweep: Option<SweepConfig>,
}

struct RawConfig {
    /// (section, key) -> (value, line number)
    entries: BTreeMap<(String, String), (String, usize)>,
    /// section -> header line number
    sections: BTreeMap<String, usize>,
}

fn parse_raw(text: &str) -> Result<RawConfig> {
    let mut entries = BTreeMap::new();
    let mut sections = BTreeMap::new();
    let mut section: Option<String> = None;
    for (i, raw_line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or(Error::Config {
                line: line_no,
                msg: "unterminated section header".into(),
            })?;
            let name = name.trim().to_ascii_lowercase();
            if sections.insert(name.clone(), line_no).is_some() {
                return Err(Error::Config {
                    line: line_no,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            section = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(Error::Config {
            line: line_no,
            msg: format!("expected `key = value`, got {line:?}"),
        })?;
        let section = section.clone().ok_or(Error::Config {
            line: line_no,
            msg: "key outside any [section]".into(),
        })?;
        let key = key.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(Error::Config {
                line: line_no,
                msg: "empty key".into(),
            });
        }
        if entries
            .insert((section, key.clone()), (value.trim().to_string(), line_no))
            .is_some()
        {
            return Err(Error::Config {
                line: line_no,
                msg: format!("duplicate key {key:?}"),
            });
        }
    }
    Ok(RawConfig { entries, sections })
}

struct SectionReader<'a> {
    raw: &'a RawConfig,
    section: &'a str,
    consumed: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn new(raw: &'a RawConfig, section: &'a str) -> Result<Self> {
        if !raw.sections.contains_key(section) {
            return Err(Error::Config {
                line: 0,
                msg: format!("missing required section [{section}]"),
            });
        }
        Ok(Self {
            raw,
            section,
            consumed: Vec::new(),
        })
    }

    fn optional(raw: &'a RawConfig, section: &'a str) -> Option<Self> {
        raw.sections.contains_key(section).then_some(Self {
            raw,
            section,
            consumed: Vec::new(),
        })
    }

    fn header_line(&self) -> usize {
        *self.raw.sections.get(self.section).unwrap_or(&0)
    }

    fn get(&mut self, key: &str) -> Option<(&'a str, usize)> {
        self.consumed.push(key.to_string());
        self.raw
            .entries
            .get(&(self.section.to_string(), key.to_string()))
            .map(|(v, l)| (v.as_str(), *l))
    }

    fn require(&mut self, key: &str) -> Result<(&'a str, usize)> {
        self.get(key).ok_or_else(|| Error::Config {
            line: self.header_line(),
            msg: format!("[{}] is missing required key {key:?}", self.section),
        })
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v.parse::<T>().map(Some).map_err(|e| Error::Config {
                line,
                msg: format!("bad value for {key:?}: {e}"),
            }),
        }
    }

    fn parse_required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let (v, line) = self.require(key)?;
        v.parse::<T>().map_err(|e| Error::Config {
            line,
            msg: format!("bad value for {key:?}: {e}"),
        })
    }

    fn parse_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|item| {
                    item.trim().parse::<T>().map_err(|e| Error::Config {
                        line,
                        msg: format!("bad list entry for {key:?}: {e}"),
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Error out on any key in this section that was never consumed.
    fn finish(self) -> Result<()> {
        for ((section, key), (_, line)) in &self.raw.entries {
            if section == self.section && !self.consumed.contains(key) {
                return Err(Error::Config {
                    line: *line,
                    msg: format!("unknown key {key:?} in [{section}]"),
                });
            }
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<Config> {
    let raw = parse_raw(text)?;
    for section in raw.sections.keys() {
        if !["model", "init", "grid", "run", "output", "sweep"].contains(&section.as_str()) {
            return Err(Error::Config {
                line: raw.sections[section],
                msg: format!("unknown section [{section}]"),
            });
        }
    }

    // [model]
    let mut m = SectionReader::new(&raw, "model")?;
    let (kind_str, kind_line) = m.require("kind")?;
    let kind = match kind_str.to_ascii_lowercase().as_str() {
        "kp" => ModelKind::Kp,
        "dkp_reg" | "dkp" => ModelKind::DkpReg,
        "kdv" => ModelKind::Kdv,
        "ds" => ModelKind::Ds,
        other => {
            return Err(Error::Config {
                line: kind_line,
                msg: format!("unknown model kind {other:?} (kp | dkp_reg | kdv | ds)"),
            });
        }
    };
    let lambda: f64 = m.parse("lambda")?.unwrap_or(1.0);
    let epsilon: f64 = m.parse("epsilon")?.unwrap_or(0.0);
    let sigma: f64 = m.parse("sigma")?.unwrap_or(0.0);
    let eta: f64 = m.parse("eta")?.unwrap_or(1.0);
    let model_line = m.header_line();
    m.finish()?;
    let model = ModelSpec {
        kind,
        lambda,
        epsilon,
        sigma,
        eta,
    };
    model.validate().map_err(|e| Error::Config {
        line: model_line,
        msg: e.to_string(),
    })?;

    // [init]
    let mut s = SectionReader::new(&raw, "init")?;
    let (family, family_line) = s.require("family")?;
    let init = match family.to_ascii_lowercase().as_str() {
        "line_soliton" => InitSpec::LineSoliton {
            x0: s.parse_required("x0")?,
        },
        "lump" => InitSpec::Lump {
            c: s.parse_required("c")?,
        },
        "perturbed_line" => InitSpec::PerturbedLine {
            x0: s.parse_required("x0")?,
            delta: s.parse_required("delta")?,
        },
        "radial_dx_sech2" => InitSpec::RadialDxSech2 {
            amplitude: s.parse_required("amplitude")?,
            nu: s.parse_required("nu")?,
        },
        "modulated_packet" => InitSpec::ModulatedPacket {
            epsilon: s.parse_required("epsilon")?,
        },
        other => {
            return Err(Error::Config {
                line: family_line,
                msg: format!(
                    "unknown init family {other:?} (line_soliton | lump | perturbed_line | \
                     radial_dx_sech2 | modulated_packet)"
                ),
            });
        }
    };
    s.finish()?;

    // [grid]
    let mut g = SectionReader::new(&raw, "grid")?;
    let grid = GridConfig {
        nx: g.parse_required("nx")?,
        ny: g.parse_required("ny")?,
        lx: g.parse_required("lx")?,
        ly: g.parse_required("ly")?,
    };
    let grid_line = g.header_line();
    g.finish()?;
    grid.build().map_err(|e| Error::Config {
        line: grid_line,
        msg: e.to_string(),
    })?;

    // [run]
    let mut r = SectionReader::new(&raw, "run")?;
    let mut run = RunConfig::new(r.parse_required("dt")?, r.parse_required("t_end")?);
    if let Some(v) = r.parse("snapshot_every")? {
        run.snapshot_every = v;
    }
    if let Some(v) = r.parse("diagnostics_every")? {
        run.diagnostics_every = v;
    }
    if let Some((v, line)) = r.get("use_v_formulation") {
        run.use_v_formulation = match v.to_ascii_lowercase().as_str() {
            "auto" => None,
            "true" | "on" | "yes" => Some(true),
            "false" | "off" | "no" => Some(false),
            other => {
                return Err(Error::Config {
                    line,
                    msg: format!("bad value for \"use_v_formulation\": {other:?} (auto | true | false)"),
                });
            }
        };
    }
    if let Some(v) = r.parse("dealias")? {
        run.dealias = v;
    }
    if let Some(v) = r.parse("record_energy")? {
        run.record_energy = v;
    }
    let run_line = r.header_line();
    r.finish()?;
    if !(run.dt > 0.0) || !(run.t_end > 0.0) || run.diagnostics_every == 0 {
        return Err(Error::Config {
            line: run_line,
            msg: "dt and t_end must be positive, diagnostics_every at least 1".into(),
        });
    }

    // [output] (optional)
    let output = match SectionReader::optional(&raw, "output") {
        None => OutputConfig::default(),
        Some(mut o) => {
            let mut out = OutputConfig::default();
            if let Some((v, _)) = o.get("directory") {
                out.directory = PathBuf::from(v);
            }
            if let Some((v, _)) = o.get("prefix") {
                out.prefix = v.to_string();
            }
            o.finish()?;
            out
        }
    };

    // [sweep] (optional)
    let sweep = match SectionReader::optional(&raw, "sweep") {
        None => None,
        Some(mut s) => {
            let line = s.header_line();
            let epsilon = s.parse_list::<f64>("epsilon")?.ok_or(Error::Config {
                line,
                msg: "[sweep] requires an \"epsilon\" list".into(),
            })?;
            let sweep = SweepConfig {
                epsilon,
                nx: s.parse_list("nx")?,
                ny: s.parse_list("ny")?,
                dt: s.parse_list("dt")?,
                lx: s.parse_list("lx")?,
                ly: s.parse_list("ly")?,
            };
            s.finish()?;
            let n = sweep.epsilon.len();
            if n == 0 {
                return Err(Error::Config {
                    line,
                    msg: "[sweep] epsilon list is empty".into(),
                });
            }
            for (name, len) in [
                ("nx", sweep.nx.as_ref().map(Vec::len)),
                ("ny", sweep.ny.as_ref().map(Vec::len)),
                ("dt", sweep.dt.as_ref().map(Vec::len)),
                ("lx", sweep.lx.as_ref().map(Vec::len)),
                ("ly", sweep.ly.as_ref().map(Vec::len)),
            ] {
                if let Some(len) = len {
                    if len != n {
                        return Err(Error::Config {
                            line,
                            msg: format!(
                                "[sweep] list {name:?} has {len} entries, epsilon has {n}"
                            ),
                        });
                    }
                }
            }
            Some(sweep)
        }
    };

    Ok(Config {
        model,
        init,
        grid,
        run,
        output,
        sweep,
    })
}
