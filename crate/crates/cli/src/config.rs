//! Run configuration: flags layered over an optional `key = value` file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::Args;
use ringswitch::{AgModel, Collective, CostParams, SelectionRule};

/// Keys accepted both as `--<key>` flags and in the config file.
pub const KEYS: &[&str] = &[
    "nodes",
    "bytes",
    "bytes-eq-tx",
    "alpha-ns",
    "alpha-s-ns",
    "bandwidth-gbps",
    "delta-ns",
    "collective",
    "rule",
    "ag-model",
    "threshold",
    "threshold-prime",
    "ring",
    "out-dir",
];

#[derive(Debug)]
pub enum CliError {
    Param(String),
    Io(String),
    /// stdout closed by the reader; reported through the exit code only
    BrokenPipe,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Param(_) => 2,
            CliError::Io(_) | CliError::BrokenPipe => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Param(m) | CliError::Io(m) => f.write_str(m),
            CliError::BrokenPipe => f.write_str("broken pipe"),
        }
    }
}

impl From<ringswitch::Error> for CliError {
    fn from(e: ringswitch::Error) -> Self {
        CliError::Param(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn param<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Param(msg.into()))
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file with `key = value` lines using the flag names as keys
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Node count n
    #[arg(long)]
    pub nodes: Option<String>,
    /// Message size in bytes; accepts B/KB/MB/GB suffixes (binary) and,
    /// for sweeps, a comma-separated list
    #[arg(long)]
    pub bytes: Option<String>,
    /// Shorthand for abstract-unit examples: sets bytes to X and bandwidth
    /// to 8 Gbps so the full-message transmission time is X ns
    #[arg(long = "bytes-eq-tx")]
    pub bytes_eq_tx: Option<String>,
    /// Per-link propagation delay in ns (list for sweeps)
    #[arg(long = "alpha-ns")]
    pub alpha_ns: Option<String>,
    /// Per-step startup latency in ns
    #[arg(long = "alpha-s-ns")]
    pub alpha_s_ns: Option<String>,
    /// Link bandwidth in Gbps
    #[arg(long = "bandwidth-gbps")]
    pub bandwidth_gbps: Option<String>,
    /// Reconfiguration delay in ns (list for sweeps)
    #[arg(long = "delta-ns")]
    pub delta_ns: Option<String>,
    /// reduce-scatter | allgather | allreduce
    #[arg(long)]
    pub collective: Option<String>,
    /// smallest | argmin
    #[arg(long)]
    pub rule: Option<String>,
    /// paper | reverse
    #[arg(long = "ag-model")]
    pub ag_model: Option<String>,
    /// Force the reduce-scatter threshold T
    #[arg(long)]
    pub threshold: Option<String>,
    /// Force the AllGather threshold T'
    #[arg(long = "threshold-prime")]
    pub threshold_prime: Option<String>,
    /// Run Ring on every phase instead of planning
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub ring: Option<String>,
    /// Directory for CSV output (default: current directory)
    #[arg(long = "out-dir")]
    pub out_dir: Option<String>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("nodes", &self.nodes),
            ("bytes", &self.bytes),
            ("bytes-eq-tx", &self.bytes_eq_tx),
            ("alpha-ns", &self.alpha_ns),
            ("alpha-s-ns", &self.alpha_s_ns),
            ("bandwidth-gbps", &self.bandwidth_gbps),
            ("delta-ns", &self.delta_ns),
            ("collective", &self.collective),
            ("rule", &self.rule),
            ("ag-model", &self.ag_model),
            ("threshold", &self.threshold),
            ("threshold-prime", &self.threshold_prime),
            ("ring", &self.ring),
            ("out-dir", &self.out_dir),
        ]
    }
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return param(format!(
                "config line {}: expected 'key = value'",
                lineno + 1
            ));
        };
        let key = k.trim().replace('_', "-");
        if !KEYS.contains(&key.as_str()) {
            return param(format!(
                "config line {}: unknown key '{}'",
                lineno + 1,
                k.trim()
            ));
        }
        out.insert(key, v.trim().trim_matches('"').to_string());
    }
    Ok(out)
}

/// `(sizes, alphas, deltas, bandwidth, alpha_s)`
pub type GridAxes = (Vec<u64>, Vec<f64>, Vec<f64>, f64, f64);

/// Resolved settings with typed accessors.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(args: &RunArgs) -> CliResult<Settings> {
        let mut values = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => BTreeMap::new(),
        };
        for (k, v) in args.flag_pairs() {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        Ok(Settings { values })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .trim()
                .parse()
                .map_err(|e| CliError::Param(format!("--{key} '{s}': {e}"))),
        }
    }

    fn list<T>(
        &self,
        key: &str,
        default: Vec<T>,
        parse: impl Fn(&str) -> CliResult<T>,
    ) -> CliResult<Vec<T>> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| parse(t).map_err(|e| CliError::Param(format!("--{key}: {e}"))))
                .collect(),
        }
    }

    pub fn nodes(&self) -> CliResult<usize> {
        self.nodes_or(32)
    }

    pub fn nodes_or(&self, default: usize) -> CliResult<usize> {
        self.parsed("nodes", default)
    }

    pub fn collective(&self) -> CliResult<Collective> {
        self.parsed("collective", Collective::ReduceScatter)
    }

    pub fn rule(&self) -> CliResult<SelectionRule> {
        self.parsed("rule", SelectionRule::default())
    }

    pub fn ag_model(&self) -> CliResult<AgModel> {
        self.parsed("ag-model", AgModel::default())
    }

    pub fn threshold(&self) -> CliResult<Option<usize>> {
        self.get("threshold")
            .map(|_| self.parsed("threshold", 0))
            .transpose()
    }

    pub fn threshold_prime(&self) -> CliResult<Option<usize>> {
        self.get("threshold-prime")
            .map(|_| self.parsed("threshold-prime", 0))
            .transpose()
    }

    pub fn ring(&self) -> CliResult<bool> {
        self.parsed("ring", false)
    }

    pub fn out_dir(&self) -> PathBuf {
        Path::new(self.get("out-dir").unwrap_or(".")).to_path_buf()
    }

    /// `(m_bytes list, bandwidth)`, honouring `bytes-eq-tx`.
    fn sizes_and_bandwidth(&self, default_bytes: Vec<u64>) -> CliResult<(Vec<u64>, f64)> {
        if self.get("bytes-eq-tx").is_some() {
            let sizes = self.list("bytes-eq-tx", vec![], |s| {
                parse_bytes(s).map_err(CliError::Param)
            })?;
            return Ok((sizes, 8.0));
        }
        let sizes = self.list("bytes", default_bytes, |s| {
            parse_bytes(s).map_err(CliError::Param)
        })?;
        Ok((sizes, self.parsed("bandwidth-gbps", 800.0)?))
    }

    fn floats(&self, key: &str, default: Vec<f64>) -> CliResult<Vec<f64>> {
        self.list(key, default, |s| {
            s.parse::<f64>()
                .map_err(|e| CliError::Param(format!("'{s}': {e}")))
        })
    }

    /// Single-point parameters; lists are rejected.
    pub fn cost_params(&self) -> CliResult<CostParams> {
        let (sizes, bandwidth) = self.sizes_and_bandwidth(vec![32])?;
        let alpha = self.floats("alpha-ns", vec![1000.0])?;
        let delta = self.floats("delta-ns", vec![100.0])?;
        let single = |name: &str, len: usize| {
            if len == 1 {
                Ok(())
            } else {
                param(format!("--{name} takes exactly one value here"))
            }
        };
        single("bytes", sizes.len())?;
        single("alpha-ns", alpha.len())?;
        single("delta-ns", delta.len())?;
        Ok(CostParams::new(
            self.nodes()?,
            sizes[0],
            alpha[0],
            self.parsed("alpha-s-ns", 0.0)?,
            bandwidth,
            delta[0],
        )?)
    }

    /// Sweep axes: `(sizes, alphas, deltas, bandwidth, alpha_s)`.
    pub fn grid_axes(&self, defaults: &ringswitch::sweep::SweepGrid) -> CliResult<GridAxes> {
        let (sizes, bandwidth) = self.sizes_and_bandwidth(defaults.m_bytes.clone())?;
        Ok((
            sizes,
            self.floats("alpha-ns", defaults.alpha_ns.clone())?,
            self.floats("delta-ns", defaults.delta_ns.clone())?,
            bandwidth,
            self.parsed("alpha-s-ns", defaults.alpha_s_ns)?,
        ))
    }
}

/// `4096`, `32B`, `4KB`, `4MB`, `1GiB`; multiples are powers of 1024.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let t = s.trim();
    let split = t.find(|c: char| !c.is_ascii_digit()).unwrap_or(t.len());
    let (num, unit) = t.split_at(split);
    let value: u64 = num.parse().map_err(|_| format!("invalid size '{s}'"))?;
    let mult: u64 = match unit.trim().to_ascii_uppercase().as_str() {
        "" | "B" => 1,
        "K" | "KB" | "KIB" => 1 << 10,
        "M" | "MB" | "MIB" => 1 << 20,
        "G" | "GB" | "GIB" => 1 << 30,
        other => return Err(format!("unknown size unit '{other}' in '{s}'")),
    };
    value
        .checked_mul(mult)
        .ok_or_else(|| format!("size '{s}' overflows"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_sizes() {
        assert_eq!(parse_bytes("32"), Ok(32));
        assert_eq!(parse_bytes("32B"), Ok(32));
        assert_eq!(parse_bytes("4MB"), Ok(4 << 20));
        assert_eq!(parse_bytes("1 KiB"), Ok(1024));
        assert!(parse_bytes("4XB").is_err());
        assert!(parse_bytes("-1").is_err());
    }

    #[test]
    fn config_file_and_flag_precedence() {
        let cfg = "# latency case\nnodes = 32\nalpha_ns = 1000\ndelta-ns=5 # overridden\n\n";
        let map = parse_config(cfg).unwrap();
        assert_eq!(map["alpha-ns"], "1000");
        assert!(parse_config("bogus = 1").is_err());
        assert!(parse_config("nodes 32").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, cfg).unwrap();
        let args = RunArgs {
            config: Some(path),
            delta_ns: Some("100".into()),
            ..RunArgs::default()
        };
        let p = Settings::load(&args).unwrap().cost_params().unwrap();
        assert_eq!((p.n, p.alpha_ns, p.delta_ns), (32, 1000.0, 100.0));
    }

    #[test]
    fn bytes_eq_tx_sets_bandwidth() {
        let args = RunArgs {
            bytes_eq_tx: Some("4".into()),
            nodes: Some("4".into()),
            ..RunArgs::default()
        };
        let p = Settings::load(&args).unwrap().cost_params().unwrap();
        assert_eq!(p.tx_full_ns(), 4.0);
    }

    #[test]
    fn lists_rejected_for_single_point() {
        let args = RunArgs {
            alpha_ns: Some("1,2".into()),
            ..RunArgs::default()
        };
        assert!(matches!(
            Settings::load(&args).unwrap().cost_params(),
            Err(CliError::Param(_))
        ));
    }
}
