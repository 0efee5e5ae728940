use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "moran", version, about = "Dimensions of Moran and Cantor-like sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for CSV artifacts; nothing is written when unset.
    #[arg(long, global = true, env = "MORAN_OUT_DIR")]
    pub out: Option<PathBuf>,

    /// `text` prints a report, `csv` prints the command's main table.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Root-finding tolerance on s.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a spec file and list every issue.
    Validate { spec: PathBuf },
    /// Lower, upper and Assouad dimension estimates.
    Dims {
        spec: PathBuf,
        #[command(flatten)]
        dims: DimsArgs,
    },
    /// Enumerate the cutset A_u(δ).
    Cutset {
        spec: PathBuf,
        /// δ as a ratio, e.g. `1/100`.
        #[arg(long)]
        delta: String,
        /// Base word as dotted 1-based letters, e.g. `1.2`; the root when omitted.
        #[arg(long)]
        word: Option<String>,
        /// Level after which the base word starts.
        #[arg(long, default_value_t = 0)]
        start: u64,
        /// Exponent for the identity check, which holds for every s.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 10_000_000)]
        budget: usize,
    },
    /// Dyadic classes of a window and a lower-bound witness.
    Witness {
        spec: PathBuf,
        #[arg(long)]
        k_lo: u64,
        #[arg(long)]
        k_hi: u64,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        #[arg(long, default_value_t = 10_000_000)]
        budget: usize,
    },
    /// Realize a level of a one-dimensional spec as intervals.
    Realize {
        spec: PathBuf,
        #[arg(long)]
        depth: u64,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Empirical Assouad dimension from covering numbers.
    Empirical {
        /// Spec to realize; omit when `--intervals` is given.
        spec: Option<PathBuf>,
        /// Estimate on an interval CSV written by `realize` instead.
        #[arg(long, conflicts_with = "spec")]
        intervals: Option<PathBuf>,
        #[command(flatten)]
        grids: EmpiricalArgs,
        #[command(flatten)]
        layout: LayoutArgs,
    },
    /// Assouad dimension from the scale function.
    Scale {
        /// Cantor-like spec (or Moran spec with equal ratios per level); omit with `--import`.
        spec: Option<PathBuf>,
        /// Scale-function CSV written by this command.
        #[arg(long, conflicts_with = "spec")]
        import: Option<PathBuf>,
        #[command(flatten)]
        scale: ScaleArgs,
    },
    /// Formula, empirical and scale-function estimates side by side.
    Compare {
        spec: PathBuf,
        #[command(flatten)]
        dims: DimsArgs,
        #[command(flatten)]
        grids: EmpiricalArgs,
        #[command(flatten)]
        layout: LayoutArgs,
        /// Scale-function depth; defaults to k_max + m_max.
        #[arg(long)]
        depth: Option<u64>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct DimsArgs {
    /// Largest window length m for θ_m.
    #[arg(long, default_value_t = 64)]
    pub m_max: u64,
    /// Largest window start scanned when the schedule has no exact criterion.
    #[arg(long, default_value_t = 10_000)]
    pub k_max: u64,
    /// Horizon of s_(0,m).
    #[arg(long, default_value_t = 40_000)]
    pub horizon: u64,
    /// Tail window for s_* and s^* starts at this fraction of the horizon.
    #[arg(long, default_value_t = 0.125)]
    pub tail_fraction: f64,
}

#[derive(Args, Debug, Clone)]
pub struct LayoutArgs {
    /// `uniform-gap` or `left-packed`.
    #[arg(long, default_value = "uniform-gap")]
    pub placement: String,
    /// Fraction of the slack placed between siblings under `uniform-gap`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Seed for perturbation signs of Cantor-like specs; alternating signs when unset.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1 << 22)]
    pub budget: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EmpiricalArgs {
    /// ρ values, e.g. `3^-2..3^-6` or `0.1,0.01`.
    #[arg(long, default_value = "3^-2..3^-6")]
    pub rho_grid: String,
    /// R values, same syntax.
    #[arg(long, default_value = "3^-1..3^-4")]
    pub r_grid: String,
    /// Centres per radius.
    #[arg(long, default_value_t = 8)]
    pub centers: usize,
}

#[derive(Args, Debug, Clone)]
pub struct ScaleArgs {
    /// Levels of the scale function; defaults to k_max + m_max.
    #[arg(long)]
    pub depth: Option<u64>,
    #[arg(long, default_value_t = 64)]
    pub m_max: u64,
    #[arg(long, default_value_t = 10_000)]
    pub k_max: u64,
    /// ρ values; defaults to c_max^j for j = 1..=m_max.
    #[arg(long)]
    pub rho_grid: Option<String>,
    /// R range and extra points; defaults to every represented R.
    #[arg(long)]
    pub r_grid: Option<String>,
}

/// A grid `b^e1..b^e2` (unit steps in the exponent) or a comma list of
/// numbers, fractions `p/q` and powers `b^e`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let text = text.trim();
    if let Some((from, to)) = text.split_once("..") {
        let (b1, e1) = parse_power(from)?;
        let (b2, e2) = parse_power(to)?;
        if b1 != b2 {
            return Err(format!("range {text:?} mixes bases {b1} and {b2}"));
        }
        let step = if e2 >= e1 { 1 } else { -1 };
        let mut e = e1;
        let mut out = vec![b1.powi(e)];
        while e != e2 {
            e += step;
            out.push(b1.powi(e));
        }
        return Ok(out);
    }
    text.split(',').map(parse_value).collect()
}

fn parse_power(text: &str) -> Result<(f64, i32), String> {
    let (b, e) = text
        .trim()
        .split_once('^')
        .ok_or_else(|| format!("{text:?} is not of the form b^e"))?;
    let base: f64 = b.trim().parse().map_err(|_| format!("base {b:?} is not a number"))?;
    let exp: i32 = e
        .trim()
        .parse()
        .map_err(|_| format!("exponent {e:?} is not an integer"))?;
    Ok((base, exp))
}

fn parse_value(text: &str) -> Result<f64, String> {
    let text = text.trim();
    if text.contains('^') {
        let (b, e) = parse_power(text)?;
        return Ok(b.powi(e));
    }
    if let Some((p, q)) = text.split_once('/') {
        let p: f64 = p.trim().parse().map_err(|_| format!("{text:?} is not a fraction"))?;
        let q: f64 = q.trim().parse().map_err(|_| format!("{text:?} is not a fraction"))?;
        return Ok(p / q);
    }
    text.parse().map_err(|_| format!("{text:?} is not a number"))
}
