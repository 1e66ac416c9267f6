use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ordseq::causal::estimate::DEFAULT_SEED;
use ordseq::causal::family::DEFAULT_LAMBDA;
use ordseq::lattice::DEFAULT_NODE_CAP;
use ordseq::path::DEFAULT_PATH_CAP;
use ordseq::planner::{DEFAULT_EXHAUSTIVE_CAP, DEFAULT_RESPLITS};
use ordseq::valuation::DEFAULT_TOL;

#[derive(Debug, Parser, Serialize)]
#[command(name = "ordseq", version, about = "Order-sensitive valuation, estimation and planning on poset lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Poset file (`elem`, `cover` and `tau` lines).
    #[arg(long, global = true)]
    pub poset: Option<PathBuf>,

    /// Event log CSV with `case_id,activity,timestamp,outcome`.
    #[arg(long, global = true)]
    pub log: Option<PathBuf>,

    /// Base ideal, `a+b` or `-` for empty.
    #[arg(long, global = true, default_value = "-")]
    pub base: String,

    /// Slice depth H. Defaults to the number of elements outside the base.
    #[arg(long, global = true)]
    pub depth: Option<usize>,

    /// Remaining-time penalty per day [default: 0.02]. For `simulate` it
    /// overrides the model's value.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Comma-separated `node=N,paths=N,exhaustive=N`.
    #[arg(long, global = true, default_value_t = Caps::default())]
    pub caps: Caps,
}

impl Cli {
    pub fn lambda(&self) -> f64 {
        self.lambda.unwrap_or(DEFAULT_LAMBDA)
    }
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Build the lattice slice and write its nodes and edges.
    Lattice,
    /// Path-independence, cube-consistency and Bianchi verdicts.
    Check {
        /// Edge field CSV (`ideal,add,value`).
        #[arg(long)]
        field: Option<PathBuf>,
        /// Diamond field CSV (`ideal,u,v,value`).
        #[arg(long)]
        kappa: Option<PathBuf>,
    },
    /// Rebuild the edge field from curvature and gauge values.
    Reconstruct {
        #[arg(long)]
        kappa: PathBuf,
        /// Gauge CSV (`ideal,alpha`); zero gauge when omitted.
        #[arg(long)]
        alpha: Option<PathBuf>,
    },
    /// Estimate pooled order effects for families in a log.
    Estimate {
        /// `u,w,v`; repeatable. Families are detected when omitted.
        #[arg(long = "family")]
        families: Vec<String>,
        /// Minimum cases per order for detected families.
        #[arg(long, default_value_t = 1)]
        min_support: usize,
        /// Bootstrap resamples.
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        /// Outcome is 1 when this activity occurs and no outcome is given.
        #[arg(long)]
        accept_activity: Option<String>,
    },
    /// Exact planning: DP against exhaustive search.
    Plan {
        /// Edge field CSV on the slice from `--poset`.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Plan to a fixed endpoint instead of allowing a stop.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long = "family")]
        families: Vec<String>,
        #[arg(long, default_value_t = 1)]
        min_support: usize,
        #[arg(long)]
        accept_activity: Option<String>,
    },
    /// Held-out policy comparison with a lambda sweep.
    Policy {
        #[arg(long = "family")]
        families: Vec<String>,
        #[arg(long, default_value_t = 1)]
        min_support: usize,
        #[arg(long, default_value_t = DEFAULT_RESPLITS)]
        resplits: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.0,0.01,0.02,0.05")]
        lambdas: Vec<f64>,
        #[arg(long)]
        accept_activity: Option<String>,
    },
    /// Simulate an event log from a model (JSON) or the built-in preset.
    Simulate {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Caps {
    pub node: usize,
    pub paths: usize,
    pub exhaustive: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            node: DEFAULT_NODE_CAP,
            paths: DEFAULT_PATH_CAP,
            exhaustive: DEFAULT_EXHAUSTIVE_CAP,
        }
    }
}

impl fmt::Display for Caps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node={},paths={},exhaustive={}", self.node, self.paths, self.exhaustive)
    }
}

impl FromStr for Caps {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut caps = Caps::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
            let n: usize = value
                .trim()
                .parse()
                .map_err(|_| format!("cap `{key}` needs a non-negative integer"))?;
            match key.trim() {
                "node" => caps.node = n,
                "paths" => caps.paths = n,
                "exhaustive" => caps.exhaustive = n,
                other => return Err(format!("unknown cap `{other}`")),
            }
        }
        Ok(caps)
    }
}
