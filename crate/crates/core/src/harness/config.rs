use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::seq::NPolicy;
use crate::sim::CostModel;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Backend {
    Oracle,
    #[default]
    Cpu,
    ApuSim,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Oracle, Backend::Cpu, Backend::ApuSim];
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Oracle => "oracle",
            Backend::Cpu => "cpu",
            Backend::ApuSim => "apu-sim",
        })
    }
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(Backend::Oracle),
            "cpu" => Ok(Backend::Cpu),
            "apu-sim" => Ok(Backend::ApuSim),
            _ => Err(format!("unknown backend {s:?} (expected oracle, cpu or apu-sim)")),
        }
    }
}

/// How many columns the simulated core gets per query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SimColumns {
    /// The whole 32768-column device.
    Full,
    /// The candidate count rounded up to a multiple of 64. Kernel cycles
    /// are the same as on the full device.
    #[default]
    Fit,
}

impl fmt::Display for SimColumns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimColumns::Full => "full",
            SimColumns::Fit => "fit",
        })
    }
}

impl FromStr for SimColumns {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(SimColumns::Full),
            "fit" => Ok(SimColumns::Fit),
            _ => Err(format!("unknown sim-columns {s:?} (expected full or fit)")),
        }
    }
}

/// Everything that determines a run. Serialized as flat `key=value` lines
/// and embedded in the reports it produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub backend: Backend,
    pub reference: Option<PathBuf>,
    pub reads: Option<PathBuf>,
    pub index: Option<PathBuf>,
    pub k: usize,
    pub max_occ: usize,
    pub read_len: usize,
    pub num_reads: usize,
    pub sub_rate: f64,
    pub indel_rate: f64,
    /// `None` means `ceil(0.10 * m)` per query.
    pub threshold: Option<u32>,
    pub cap: usize,
    pub cost: CostModel,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub repeats: usize,
    pub n_policy: NPolicy,
    pub sim_columns: SimColumns,
    pub sweep: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            backend: Backend::default(),
            reference: None,
            reads: None,
            index: None,
            k: 10,
            max_occ: 100_000,
            read_len: 300,
            num_reads: 100,
            sub_rate: 0.005,
            indel_rate: 0.001,
            threshold: None,
            cap: crate::candgen::MAX_CANDIDATES,
            cost: CostModel::default(),
            seed: 1,
            out_dir: PathBuf::from("."),
            repeats: 10,
            n_policy: NPolicy::default(),
            sim_columns: SimColumns::default(),
            sweep: false,
        }
    }
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

impl RunConfig {
    pub fn to_kv(&self) -> String {
        let threshold = self.threshold.map(|t| t.to_string()).unwrap_or_else(|| "auto".into());
        let pairs: [(&str, String); 21] = [
            ("backend", self.backend.to_string()),
            ("reference", opt_path(&self.reference)),
            ("reads", opt_path(&self.reads)),
            ("index", opt_path(&self.index)),
            ("k", self.k.to_string()),
            ("max_occ", self.max_occ.to_string()),
            ("read_len", self.read_len.to_string()),
            ("num_reads", self.num_reads.to_string()),
            ("sub_rate", self.sub_rate.to_string()),
            ("indel_rate", self.indel_rate.to_string()),
            ("threshold", threshold),
            ("cap", self.cap.to_string()),
            ("vmrf_cost", self.cost.vmrf_cost.to_string()),
            ("dram_cost", self.cost.dram_vr_cost.to_string()),
            ("fragment_overhead", self.cost.fragment_overhead.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
            ("repeats", self.repeats.to_string()),
            ("n_policy", self.n_policy.to_string()),
            ("sim_columns", self.sim_columns.to_string()),
            ("sweep", self.sweep.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Parses `key=value` lines; unknown keys and malformed values are
    /// errors, missing keys keep their defaults.
    pub fn from_kv(text: &str) -> Result<RunConfig, HarnessError> {
        fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, HarnessError>
        where
            T::Err: fmt::Display,
        {
            v.parse()
                .map_err(|e| HarnessError::Usage(format!("bad value for {key}: {v:?} ({e})")))
        }
        let path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        let mut cfg = RunConfig::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("expected key=value, got {line:?}")))?;
            match k {
                "backend" => cfg.backend = parse(k, v)?,
                "reference" => cfg.reference = path(v),
                "reads" => cfg.reads = path(v),
                "index" => cfg.index = path(v),
                "k" => cfg.k = parse(k, v)?,
                "max_occ" => cfg.max_occ = parse(k, v)?,
                "read_len" => cfg.read_len = parse(k, v)?,
                "num_reads" => cfg.num_reads = parse(k, v)?,
                "sub_rate" => cfg.sub_rate = parse(k, v)?,
                "indel_rate" => cfg.indel_rate = parse(k, v)?,
                "threshold" => cfg.threshold = if v == "auto" { None } else { Some(parse(k, v)?) },
                "cap" => cfg.cap = parse(k, v)?,
                "vmrf_cost" => cfg.cost.vmrf_cost = parse(k, v)?,
                "dram_cost" => cfg.cost.dram_vr_cost = parse(k, v)?,
                "fragment_overhead" => cfg.cost.fragment_overhead = parse(k, v)?,
                "seed" => cfg.seed = parse(k, v)?,
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                "repeats" => cfg.repeats = parse(k, v)?,
                "n_policy" => cfg.n_policy = parse(k, v)?,
                "sim_columns" => cfg.sim_columns = parse(k, v)?,
                "sweep" => cfg.sweep = parse(k, v)?,
                _ => return Err(HarnessError::Usage(format!("unknown config key {k:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Usage(m));
        if self.k == 0 || self.k > 15 {
            return bad(format!("k must be in 1..=15, got {}", self.k));
        }
        if self.cap == 0 || self.cap > crate::candgen::MAX_CANDIDATES {
            return bad(format!("cap must be in 1..={}, got {}", crate::candgen::MAX_CANDIDATES, self.cap));
        }
        if !(0.0..=1.0).contains(&self.sub_rate) || !(0.0..=1.0).contains(&self.indel_rate) {
            return bad("rates must lie in [0, 1]".into());
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1".into());
        }
        if self.read_len == 0 {
            return bad("read length must be at least 1".into());
        }
        Ok(())
    }

    /// The config as `#`-prefixed comment lines.
    pub fn as_comment(&self) -> String {
        self.to_kv().lines().map(|l| format!("# {l}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_roundtrip() {
        let cfg = RunConfig {
            backend: Backend::ApuSim,
            reference: Some("ref.fa".into()),
            threshold: Some(7),
            cost: CostModel {
                vmrf_cost: 1,
                dram_vr_cost: 2,
                fragment_overhead: 0,
            },
            sub_rate: 0.0125,
            n_policy: NPolicy::MapToA,
            sim_columns: SimColumns::Full,
            sweep: true,
            ..RunConfig::default()
        };
        let text = cfg.to_kv();
        assert!(text.contains("backend=apu-sim\n"));
        assert!(text.contains("reads=\n"));
        assert_eq!(RunConfig::from_kv(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_kv(&RunConfig::default().to_kv()).unwrap(), RunConfig::default());
    }

    #[test]
    fn kv_errors() {
        assert!(matches!(RunConfig::from_kv("nope=1"), Err(HarnessError::Usage(_))));
        assert!(matches!(RunConfig::from_kv("k=abc"), Err(HarnessError::Usage(_))));
        assert!(matches!(RunConfig::from_kv("k=16"), Err(HarnessError::Usage(_))));
        assert!(matches!(RunConfig::from_kv("justtext"), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = RunConfig::from_kv("# hello\n\nseed=9\n").unwrap();
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn enum_names() {
        for b in Backend::ALL {
            assert_eq!(b.to_string().parse::<Backend>().unwrap(), b);
        }
        assert!("gpu".parse::<Backend>().is_err());
        assert_eq!("fit".parse::<SimColumns>().unwrap(), SimColumns::Fit);
    }
}
