use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use fpp_core::decomposition::{identity_suite, split_product, CoefficientMode, SplitConfig, WindowSystem};
use fpp_core::dyadic::{
    check_k0_partition, inner_paraproduct, lambda1_coefficients, model_form, ModelConfig, ModelKind, ModelOp,
};
use fpp_core::grid::lp_norm;
use fpp_core::harness::{
    dilation_sweep, k0_sweep, polytope::barycentric_membership, polytope_membership, rwt_experiment, ExponentTuple,
    FormKind, Polytope, RwtConfig, Vertex,
};
use fpp_core::multilinear::{apply_trilinear, Method};
use fpp_core::sampling::{random_bandlimited, rng};
use fpp_core::size_energy::{
    abstract_estimate_check, energy_with, full_partition_with, john_nirenberg_compare, parse_rational, parse_theta,
    size_of, SizeEnergyParams, SizeKind,
};
use fpp_core::symbols::{lookup, SymbolSpec, SymbolTable};
use fpp_core::{CoefficientFamily, SampledFunction, TorusGrid};

#[derive(Parser)]
#[command(name = "fpp", version, about = "Trilinear flag paraproducts on the sampled torus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Naive,
    Separable,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Restriction,
    Windowed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Identities,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a trilinear multiplier to three sampled functions.
    Apply {
        /// Catalog name (e.g. "flag(homog0,homog0)") or a symbol-table JSON file.
        #[arg(long)]
        symbol: String,
        #[arg(long)]
        f1: PathBuf,
        #[arg(long)]
        f2: PathBuf,
        #[arg(long)]
        f3: PathBuf,
        #[arg(long, value_enum, default_value = "separable")]
        method: MethodArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a·b into the m₁, m₂, m₃ pieces.
    Decompose {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long = "M", default_value_t = 8)]
        m: usize,
        /// Quadrature nodes per octave.
        #[arg(long, default_value_t = 8)]
        q: usize,
        #[arg(long, default_value_t = 3)]
        sep: u32,
        #[arg(long, default_value_t = 20)]
        nrange: usize,
        #[arg(long, default_value_t = 16)]
        half: usize,
        #[arg(long, value_enum, default_value = "restriction")]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, value_enum, default_value = "identities")]
        suite: Suite,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a model operator, apply it to seeded inputs and check its identities.
    Model {
        #[arg(long)]
        op: String,
        #[arg(long)]
        k0: Option<u32>,
        /// Number of dyadic levels, ending at 2^-2.
        #[arg(long, default_value_t = 5)]
        levels: u32,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Position (1..=3) of the non-lacunary J-family.
        #[arg(long, default_value_t = 1)]
        j_nonlac: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Size, energy, tree partition and (for three families) the abstract estimate.
    SizeEnergy {
        /// JSON list of {k, n, re, im} records, or a list of three such lists.
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        i: usize,
        #[arg(long)]
        j: usize,
        #[arg(long)]
        k0: Option<u32>,
        #[arg(long, default_value = "1/3,1/3,1/3")]
        theta: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Restricted-weak-type experiment near a polytope vertex.
    Rwt {
        /// T1, T1k0, T2, T2k0 or trivial.
        #[arg(long, default_value = "T1")]
        model: String,
        #[arg(long, default_value = "A4")]
        vertex: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, default_value_t = 256)]
        grid: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        k0: Option<u32>,
        /// Distance from the vertex towards the centroid, as a fraction.
        #[arg(long, default_value = "1/20")]
        offset: String,
        #[arg(long, default_value_t = 0)]
        dilation: u32,
        /// Rerun for each of these k0 values and report the spread.
        #[arg(long, value_delimiter = ',')]
        k0_sweep: Option<Vec<u32>>,
        /// Rerun at each of these dilation exponents and report the spread.
        #[arg(long, value_delimiter = ',')]
        dilations: Option<Vec<u32>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify a point of S against D or D̃.
    Polytope {
        #[arg(long, allow_hyphen_values = true)]
        point: String,
        #[arg(long, default_value = "D")]
        which: String,
    },
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T> {
    let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
}

fn symbol(arg: &str) -> Result<SymbolSpec> {
    let p = Path::new(arg);
    if p.is_file() {
        let t: SymbolTable = read_json(p)?;
        return Ok(SymbolSpec::table(t));
    }
    Ok(lookup(arg)?)
}

fn model_kind(op: ModelOp) -> ModelKind {
    match op {
        ModelOp::T1 | ModelOp::T1k0 => ModelKind::T1,
        ModelOp::T2 | ModelOp::T2k0 => ModelKind::T2,
    }
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum CoeffInput {
    One(CoefficientFamily),
    Three([CoefficientFamily; 3]),
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Apply {
            symbol: s,
            f1,
            f2,
            f3,
            method,
            out,
        } => {
            let m = symbol(&s)?;
            let f: [SampledFunction; 3] = [read_json(&f1)?, read_json(&f2)?, read_json(&f3)?];
            let method = match method {
                MethodArg::Naive => Method::Naive,
                MethodArg::Separable => Method::Separable,
            };
            let r = apply_trilinear(&m, &f[0], &f[1], &f[2], method)?;
            emit(
                &json!({ "method": r.method, "flops": r.flops, "output": r.output }),
                out.as_deref(),
            )
        }
        Command::Decompose {
            a,
            b,
            m,
            q,
            sep,
            nrange,
            half,
            mode,
            out,
        } => {
            let ws = WindowSystem::new(m, q)?;
            let cfg = SplitConfig {
                sep,
                n_range: nrange,
                half,
                mode: match mode {
                    ModeArg::Restriction => CoefficientMode::Restriction,
                    ModeArg::Windowed => CoefficientMode::Windowed,
                },
                ..SplitConfig::default()
            };
            let sp = split_product(&lookup(&a)?, &lookup(&b)?, &ws, &cfg)?;
            eprintln!(
                "relative reconstruction error {:.3e} ({} window pairs kept, {} dropped)",
                sp.reconstruction.relative, sp.kept_pairs, sp.dropped_pairs
            );
            emit(
                &json!({
                    "a": a, "b": b, "M": m, "q": q,
                    "config": sp.config,
                    "kept_pairs": sp.kept_pairs,
                    "dropped_pairs": sp.dropped_pairs,
                    "reconstruction": sp.reconstruction,
                    "m1": sp.m1, "m2": sp.m2, "m3": sp.m3,
                }),
                out.as_deref(),
            )
        }
        Command::Verify {
            suite: Suite::Identities,
            grid,
            seed,
            count,
            out,
        } => {
            let s = identity_suite(TorusGrid::new(grid)?, seed, count)?;
            let (c1, c2, c3) = s.worst();
            eprintln!("worst relative deviation: calc1 {c1:.2e}, calc2 {c2:.2e}, calc3 {c3:.2e}");
            emit(&s, out.as_deref())
        }
        Command::Model {
            op,
            k0,
            levels,
            grid,
            seed,
            j_nonlac,
            out,
        } => {
            let op: ModelOp = op.parse()?;
            let needs_k0 = matches!(op, ModelOp::T1k0 | ModelOp::T2k0);
            if needs_k0 && k0.is_none() {
                bail!("{op:?} needs --k0");
            }
            let k0 = if needs_k0 { k0 } else { None };
            if levels == 0 {
                bail!("--levels must be positive");
            }
            let g = TorusGrid::new(grid)?;
            let cfg = ModelConfig::standard(g, model_kind(op), -1 - levels as i32, -2, j_nonlac, k0)?;
            let mut r = rng(seed);
            let band = grid as i64 / 4 - 1;
            let f = [0; 4].map(|_| random_bandlimited(g, band, &mut r));
            let lambda = model_form(&cfg, [&f[0], &f[1], &f[2], &f[3]])?;
            let mut report = json!({
                "op": op, "k0": k0, "grid": grid, "levels": levels, "seed": seed,
                "lambda": lambda,
                "families": { "i": cfg.i_families, "j": cfg.j_families },
                "index_sets": check_k0_partition(&cfg, levels),
            });
            if cfg.kind == ModelKind::T1 {
                let l1 = lambda1_coefficients(&cfg, [&f[0], &f[1], &f[2], &f[3]])?;
                // Λ can vanish when no pair is admissible, so normalize by Π‖f_i‖₂ as well.
                let scale: f64 = f.iter().map(|g| lp_norm(g, 2.0)).product::<fpp_core::Result<f64>>()?;
                let dev = (l1.lambda - lambda).norm() / (lambda.norm() + scale);
                eprintln!("Λ = {lambda:.6e}, reordered form deviation {dev:.2e}");
                report["lambda1"] = json!(l1.lambda);
                report["lambda1_deviation"] = json!(dev);
                if j_nonlac != 3 {
                    let (_, inner) = inner_paraproduct(&cfg, &f[0], &f[3])?;
                    report["inner_paraproduct"] = json!(inner);
                }
            } else {
                eprintln!("Λ = {lambda:.6e}");
            }
            emit(&report, out.as_deref())
        }
        Command::SizeEnergy {
            coeffs,
            i,
            j,
            k0,
            theta,
            out,
        } => {
            let params = SizeEnergyParams::new(j, i, k0, parse_theta(&theta)?)?;
            let input: CoeffInput = read_json(&coeffs)?;
            let fams: Vec<CoefficientFamily> = match input {
                CoeffInput::One(f) => vec![f],
                CoeffInput::Three(fs) => fs.into(),
            };
            let single = fams.len() == 1;
            let per: Vec<_> = fams
                .iter()
                .enumerate()
                .map(|(s, f)| {
                    let slot = if single { params.i } else { s + 1 };
                    let kind = params.kind_for(slot);
                    let jn = if slot == params.i && kind == SizeKind::SquareFunction {
                        Some(john_nirenberg_compare(f, &params)?)
                    } else {
                        None
                    };
                    Ok(json!({
                        "slot": slot,
                        "kind": kind,
                        "intervals": f.len(),
                        "size": size_of(f, kind),
                        "energy": energy_with(f, kind),
                        "john_nirenberg": jn,
                        "partition": full_partition_with(f, kind)?,
                    }))
                })
                .collect::<Result<_>>()?;
            let estimate = match fams.as_slice() {
                [a, b, c] => Some(abstract_estimate_check([a, b, c], &params)?),
                _ => None,
            };
            emit(
                &json!({ "params": params, "families": per, "abstract_estimate": estimate }),
                out.as_deref(),
            )
        }
        Command::Rwt {
            model,
            vertex,
            trials,
            grid,
            seed,
            k0,
            offset,
            dilation,
            k0_sweep: k0s,
            dilations,
            out,
        } => {
            let form: FormKind = model.parse()?;
            let vertex: Vertex = vertex.parse()?;
            let base = if dilations.is_some() {
                RwtConfig::dilation_probe(form)
            } else {
                RwtConfig::near_a4(form)
            };
            let cfg = RwtConfig {
                vertex,
                trials,
                n: grid,
                seed,
                k0: k0.or(base.k0),
                offset: parse_rational(&offset)?,
                dilation: if dilations.is_some() { base.dilation } else { dilation },
                ..base
            };
            if let Some(ks) = k0s {
                let s = k0_sweep(&cfg, &ks)?;
                eprintln!("max ratio spread across k0: {:.3}", s.spread);
                return emit(&s, out.as_deref());
            }
            if let Some(ss) = dilations {
                let s = dilation_sweep(&cfg, &ss)?;
                eprintln!("max ratio spread across dilations: {:.3}", s.spread);
                return emit(&s, out.as_deref());
            }
            let r = rwt_experiment(&cfg)?;
            eprintln!(
                "max ratio {:.4e}, median {:.4e}, calibrated C {}",
                r.max_ratio, r.median_ratio, r.calibrated_c
            );
            emit(&r, out.as_deref())
        }
        Command::Polytope { point, which } => {
            let q: ExponentTuple = point.parse()?;
            let which: Polytope = which.parse()?;
            let m = polytope_membership(&q, which);
            debug_assert_eq!(m, barycentric_membership(&q, which));
            println!("{m}");
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
