use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "genvar", version, about = "Reproducible experiments on mollifier-regularized variational calculus")]
#[command(args_override_self = true, allow_negative_numbers = true)]
pub struct Cli {
    /// Line-oriented key=value config; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<String>,
    /// Output directory (overrides GENVAR_OUT and the config's `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample η_q on a grid, one column per order.
    Mollifier(MollifierArgs),
    /// Sample f and its regularization f̃ = f * η_ε.
    Regularize(RegularizeArgs),
    /// Regularization error against ε and the fitted order.
    Order(OrderArgs),
    /// Diffeomorphism-operator error against ε and the fitted order.
    DiffeoCheck(DiffeoArgs),
    /// Adjoint-series variation of e^f against central differences.
    LieCheck(LieArgs),
    /// Anchored oscillator extremal sampled over the window.
    HoExtremal(HoExtremalArgs),
    /// S, δS and δ²S at the oscillator extremals, one row per (ε, action).
    HoTable(HoTableArgs),
    /// Boundary matching and residuals of the plane-wave scalar extremal.
    ScalarCheck(ScalarArgs),
    /// Coherent-state propagator of the oscillator flow.
    Propagate(PropagateArgs),
    /// Quadratic path integral from the second-variation kernel.
    QuadPi(QuadPiArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Mollifier(_) => "mollifier",
            Command::Regularize(_) => "regularize",
            Command::Order(_) => "order",
            Command::DiffeoCheck(_) => "diffeo-check",
            Command::LieCheck(_) => "lie-check",
            Command::HoExtremal(_) => "ho-extremal",
            Command::HoTable(_) => "ho-table",
            Command::ScalarCheck(_) => "scalar-check",
            Command::Propagate(_) => "propagate",
            Command::QuadPi(_) => "quad-pi",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct MollifierArgs {
    /// Family: bump[:p], gaussian[:sigma] or cos2.
    #[arg(long, default_value = "gaussian")]
    pub kind: String,
    /// Highest order; columns for every even order up to it (and q itself).
    #[arg(long, default_value_t = 8)]
    pub q: usize,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// Derivative order of η_q.
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
    #[arg(long, default_value_t = 401)]
    pub samples: usize,
    /// Half-width of the sampled interval (default: the support, 4σε for gaussians).
    #[arg(long)]
    pub range: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct RegularizeArgs {
    /// sin, cos, exp, gauss, abs, step or x2.
    #[arg(long, default_value = "sin")]
    pub function: String,
    #[arg(long, default_value = "gaussian")]
    pub mollifier: String,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = -2.0)]
    pub from: f64,
    #[arg(long, default_value_t = 2.0)]
    pub to: f64,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OrderArgs {
    #[arg(long, default_value = "sin")]
    pub function: String,
    #[arg(long, default_value = "gaussian")]
    pub mollifier: String,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Strictly decreasing ε values, at least three.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub from: f64,
    #[arg(long, default_value_t = 1.3)]
    pub to: f64,
    #[arg(long, default_value_t = 9)]
    pub probes: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DiffeoArgs {
    /// polar or rotation.
    #[arg(long, default_value = "polar")]
    pub map: String,
    /// Rotation angle.
    #[arg(long, default_value_t = 0.4)]
    pub angle: f64,
    /// Vector field in Cartesian components: quadratic (x², xy), linear (x, y) or trig (sin y, cos x).
    #[arg(long, default_value = "quadratic")]
    pub field: String,
    #[arg(long, default_value = "gaussian")]
    pub mollifier: String,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
    pub eps: Vec<f64>,
    /// Probe points in the target chart, `x,y;x,y;…`.
    #[arg(long, default_value = "1,0.3;1.5,1.9;2,4")]
    pub probes: String,
}

#[derive(Debug, Args, Serialize)]
pub struct LieArgs {
    #[arg(long, default_value_t = 20)]
    pub pairs: usize,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Upper bound of the random ‖f‖ (Frobenius).
    #[arg(long, default_value_t = 1.0)]
    pub norm: f64,
    #[arg(long, default_value = "cos2")]
    pub mollifier: String,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub y: f64,
    #[arg(long, default_value_t = genvar::variation::LIE_TERMS)]
    pub terms: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct HoArgs {
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value = "cos2")]
    pub mollifier: String,
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    /// Add the coherent log-overlap boundary costs to the OC action.
    #[arg(long)]
    pub boundary_costs: bool,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    pub beta_i: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0")]
    pub beta_f: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct HoExtremalArgs {
    /// quad, oc or holo.
    #[arg(long, default_value = "oc")]
    pub kind: String,
    #[arg(long, default_value_t = 0.5)]
    pub eps: f64,
    #[arg(long, default_value_t = 1001)]
    pub samples: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub ho: HoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct HoTableArgs {
    #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.1,0.01")]
    pub eps: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub ho: HoArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ScalarArgs {
    #[arg(long, default_value_t = 64)]
    pub nt: usize,
    #[arg(long, default_value_t = 64)]
    pub nx: usize,
    /// Lattice nodes beyond each window edge.
    #[arg(long, default_value_t = 8)]
    pub pad: usize,
    /// Spatial period (default 2π).
    #[arg(long, default_value_t = std::f64::consts::TAU)]
    pub length: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1)]
    pub mode: i32,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long, default_value = "cos2")]
    pub mollifier: String,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Overlap exponent sign: damping or printed.
    #[arg(long, default_value = "damping")]
    pub sign: String,
    /// ζ = χ · scale · e^{i phase}; scale 1, phase 0 is the matched boundary.
    #[arg(long, default_value_t = 1.0)]
    pub zeta_scale: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub zeta_phase: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PropagateArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.7,-0.3")]
    pub beta_i: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0.2,0.5")]
    pub beta_f: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Number of time slices N, one row each.
    #[arg(long, value_delimiter = ',', default_value = "11,101,1001,10001")]
    pub n: Vec<usize>,
    /// euler or exact.
    #[arg(long, default_value = "euler")]
    pub flow: String,
}

#[derive(Debug, Args, Serialize)]
pub struct QuadPiArgs {
    #[arg(long, default_value = "gaussian")]
    pub mollifier: String,
    #[arg(long, default_value_t = 0.4)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub dt: f64,
    #[arg(long, value_delimiter = ',', default_value = "2,3")]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    /// Skip the damped-quadrature oracle.
    #[arg(long)]
    pub no_oracle: bool,
}
