use std::path::PathBuf;

use arakelov::adelic::{self, ArchOptions, FiniteSet, MeasureFamily};
use arakelov::energy_arch::{self, ArchMeasure, QuadratureOptions};
use arakelov::energy_ua::{self, SegmentMeasure};
use arakelov::lattes;
use arakelov::places::{self, format_rational, Valuation};
use arakelov::tree;
use clap::{Args, Subcommand};
use serde_json::{json, Value};

use crate::{input, suite, Command, Context, Failure};

#[derive(Subcommand, Debug)]
pub enum PlacesCmd {
    /// Valuation and absolute value of a rational at `--place`, with its height and support.
    Eval { x: String },
    /// Height of a projective point.
    Height {
        #[arg(required = true)]
        coords: Vec<String>,
    },
    /// Both sides of `sum_v max_i |log|u_i|_v| <= (n+1) h(u)`.
    Bound {
        #[arg(required = true)]
        values: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TreeCmd {
    /// Kernel, path distance and join of two points at `--place`.
    Distance { x: String, y: String },
    /// Relative position of two segments.
    Classify { a0: String, a1: String, b0: String, b1: String },
}

#[derive(Subcommand, Debug)]
pub enum EnergyCmd {
    /// Energy of two segment measures at a finite `--place`.
    Ua { a0: String, a1: String, b0: String, b1: String },
    /// Energy of two circle measures at infinity.
    Arch {
        #[arg(long, allow_hyphen_values = true)]
        c1: String,
        #[arg(long)]
        r1: f64,
        #[arg(long, allow_hyphen_values = true)]
        c2: String,
        #[arg(long)]
        r2: f64,
    },
    /// Sampled energy of two Lattès equilibrium measures at infinity.
    Cloud {
        #[arg(long, allow_hyphen_values = true)]
        lambda_a: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda_b: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum LattesCmd {
    /// Equilibrium segment of four branch points at a finite `--place`.
    Segment {
        #[arg(required = true, allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Legendre parameter and normalizing frame of four branch points.
    Normalize {
        #[arg(required = true, allow_hyphen_values = true)]
        points: Vec<String>,
    },
    /// Lattès map of the Legendre family at a point.
    Eval {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(allow_hyphen_values = true)]
        t: String,
    },
    /// Images of 2-power torsion up to a level.
    Torsion {
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value_t = 2)]
        level: u32,
    },
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// JSON file `{"a": [..], "b": [..]}` with rationals as strings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated `a1,a2,a3`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    a: Vec<String>,
    /// Comma-separated `b1,b2,b3`.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "config")]
    b: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum AdelicCmd {
    /// Per-place decomposition of the global energy of a configuration.
    Energy(ConfigArgs),
    /// Heights of a configuration and the explicit-constant inequalities.
    Inequalities(ConfigArgs),
    /// Dynamical height of a finite set.
    Height {
        /// `standard` or four comma-separated branch points.
        #[arg(long, allow_hyphen_values = true)]
        rho: String,
        /// Comma-separated rationals.
        #[arg(long, allow_hyphen_values = true)]
        f: String,
    },
    /// Minimum global energy over random configurations.
    GapScan {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 20)]
        height: i64,
    },
    /// Common torsion images of two Legendre maps.
    Bft {
        #[arg(long, allow_hyphen_values = true)]
        lambda_a: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda_b: String,
        #[arg(long, default_value_t = 3)]
        level: u32,
    },
    /// Explicit-constant inequalities over random configurations.
    Suite {
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 20)]
        height: i64,
    },
}

pub fn arch_options(ctx: &Context) -> ArchOptions {
    let samples = if ctx.global.quick { ctx.global.arch_samples.min(2000) } else { ctx.global.arch_samples };
    ArchOptions { samples, seed: ctx.seed, ..ArchOptions::default() }
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

pub fn run(cmd: &Command, ctx: &Context, inputs: &mut Vec<Vec<u8>>) -> Result<Value, Failure> {
    let place = || input::place(&ctx.global.place, ctx.global.epsilon);
    match cmd {
        Command::Places(c) => places_cmd(c, &place()?),
        Command::Tree(c) => tree_cmd(c, &place()?),
        Command::Energy(c) => energy_cmd(c, ctx),
        Command::Lattes(c) => lattes_cmd(c, ctx),
        Command::Adelic(c) => adelic_cmd(c, ctx, inputs),
        Command::Suite => suite::run(ctx),
    }
}

fn places_cmd(c: &PlacesCmd, v: &places::Place) -> Result<Value, Failure> {
    match c {
        PlacesCmd::Eval { x } => {
            let x = places::parse_rational(x)?;
            let valuation = v.prime().map(|p| match places::padic_valuation(&x, p) {
                Valuation::Finite(k) => json!(k),
                Valuation::Infinite => json!("inf"),
            });
            let support: Vec<String> = places::support_primes([&x]).iter().map(|p| p.to_string()).collect();
            let log_abs = places::log_abs(&x, v);
            Ok(json!({
                "x": format_rational(&x),
                "place": v.to_string(),
                "valuation": valuation,
                "log_abs": if log_abs.is_finite() { json!(log_abs) } else { json!("-inf") },
                "support": support,
                "product_formula_residual": places::product_formula_residual(&x).ok(),
                "affine_height": places::affine_height(std::slice::from_ref(&x)),
            }))
        }
        PlacesCmd::Height { coords } => {
            let xs = input::rationals(coords)?;
            Ok(json!({
                "coords": xs.iter().map(format_rational).collect::<Vec<_>>(),
                "projective_height": places::projective_height(&xs)?,
            }))
        }
        PlacesCmd::Bound { values } => {
            let xs = input::rationals(values)?;
            let (lhs, rhs) = places::abs_log_bound(&xs)?;
            Ok(json!({ "lhs": lhs, "rhs": rhs, "holds": lhs <= rhs + 1e-9 }))
        }
    }
}

fn tree_cmd(c: &TreeCmd, v: &places::Place) -> Result<Value, Failure> {
    match c {
        TreeCmd::Distance { x, y } => {
            let (x, y) = (input::tree_point(x)?, input::tree_point(y)?);
            Ok(json!({
                "kernel": tree::hsia_log_kernel(&x, &y, v)?,
                "path_length": tree::path_length(&x, &y, v)?,
                "join": to_json(&tree::join(&x, &y, v)?),
            }))
        }
        TreeCmd::Classify { a0, a1, b0, b1 } => {
            let a = tree::segment_between(&input::tree_point(a0)?, &input::tree_point(a1)?, v)?;
            let b = tree::segment_between(&input::tree_point(b0)?, &input::tree_point(b1)?, v)?;
            let shared = tree::intersection(&a, &b)?;
            Ok(json!({
                "configuration": to_json(&tree::classify_pair(&a, &b)?),
                "intersection": shared.map(|s| to_json(&s)),
            }))
        }
    }
}

fn energy_cmd(c: &EnergyCmd, ctx: &Context) -> Result<Value, Failure> {
    match c {
        EnergyCmd::Ua { a0, a1, b0, b1 } => {
            let v = input::place(&ctx.global.place, ctx.global.epsilon)?;
            let a = SegmentMeasure::between(&input::tree_point(a0)?, &input::tree_point(a1)?, &v)?;
            let b = SegmentMeasure::between(&input::tree_point(b0)?, &input::tree_point(b1)?, &v)?;
            let n = if ctx.global.quick { ctx.global.oracle_n.min(200) } else { ctx.global.oracle_n };
            let bounds = energy_ua::lower_bound_report(&a, &b, &v, None)?;
            Ok(json!({
                "closed": energy_ua::energy_closed_form(&a, &b, &v)?,
                "oracle": energy_ua::energy_oracle(&a, &b, &v, n)?,
                "oracle_n": n,
                "bounds": to_json(&bounds),
                "valid_bounds_hold": bounds.all_hold(),
            }))
        }
        EnergyCmd::Arch { c1, r1, c2, r2 } => {
            let m1 = ArchMeasure::Circle { center: input::complex(c1)?, radius: *r1 };
            let m2 = ArchMeasure::Circle { center: input::complex(c2)?, radius: *r2 };
            if !(*r1 > 0.0 && *r2 > 0.0) {
                return Err(arakelov::Error::BadRadii.into());
            }
            let exact = QuadratureOptions { tol: ctx.global.tol, force: false };
            let forced = QuadratureOptions { tol: ctx.global.tol, force: true };
            Ok(json!({
                "energy": energy_arch::pair_energy_arch(&m1, &m2, exact)?,
                "quadrature": energy_arch::pair_energy_arch(&m1, &m2, forced)?,
                "mutual": energy_arch::mutual_pairing(&m1, &m2, exact)?,
            }))
        }
        EnergyCmd::Cloud { lambda_a, lambda_b } => {
            let (la, lb) = (input::legendre(lambda_a)?, input::legendre(lambda_b)?);
            let n = arch_options(ctx).samples;
            let a = energy_arch::sample_lattes_equilibrium(&la, n, ctx.seed, 200)?;
            let b = energy_arch::sample_lattes_equilibrium(&lb, n, ctx.seed.wrapping_add(1), 200)?;
            let e = energy_arch::cloud_energy(&a, &b)?;
            Ok(json!({ "samples": n, "energy": to_json(&e) }))
        }
    }
}

fn lattes_cmd(c: &LattesCmd, ctx: &Context) -> Result<Value, Failure> {
    match c {
        LattesCmd::Segment { points } => {
            let q = input::quadruple(points)?;
            let v = input::place(&ctx.global.place, ctx.global.epsilon)?;
            let seg = lattes::lattes_segment(&q, &v)?;
            Ok(json!({
                "quadruple": to_json(&q),
                "cross_ratio": format_rational(&lattes::quadruple_cross_ratio(&q)),
                "segment": to_json(&seg),
                "length": seg.length(),
                "length_units": v.prime().map(|p| lattes::lattes_length_units(&q, p)),
            }))
        }
        LattesCmd::Normalize { points } => {
            let q = input::quadruple(points)?;
            let (lambda, m) = lattes::normalize_to_legendre(&q)?;
            let images: Vec<String> = q.points().iter().map(|p| m.apply(p).to_string()).collect();
            Ok(json!({
                "lambda": format_rational(lambda.value()),
                "frame": [format_rational(&m.a), format_rational(&m.b), format_rational(&m.c), format_rational(&m.d)],
                "images": images,
            }))
        }
        LattesCmd::Eval { lambda, t } => {
            let l = input::legendre(lambda)?;
            let t = input::proj_point(t)?;
            Ok(
                json!({ "lambda": format_rational(l.value()), "t": t.to_string(), "image": lattes::legendre_lattes_eval(&l, &t).to_string() }),
            )
        }
        LattesCmd::Torsion { lambda, level } => {
            let l = input::legendre(lambda)?;
            let t = lattes::torsion_images(&l, *level, ctx.global.tol)?;
            Ok(json!({ "lambda": format_rational(l.value()), "count": t.points.len(), "images": to_json(&t) }))
        }
    }
}

fn family(s: &str) -> Result<MeasureFamily, Failure> {
    if s.trim() == "standard" {
        return Ok(MeasureFamily::Standard);
    }
    Ok(MeasureFamily::Lattes(input::quadruple(&[s.to_string()])?))
}

fn adelic_cmd(c: &AdelicCmd, ctx: &Context, inputs: &mut Vec<Vec<u8>>) -> Result<Value, Failure> {
    let cfg =
        |args: &ConfigArgs, inputs: &mut Vec<Vec<u8>>| input::config(args.config.as_deref(), &args.a, &args.b, inputs);
    match c {
        AdelicCmd::Energy(args) => {
            let cfg = cfg(args, inputs)?;
            let report = adelic::global_energy(&cfg, &arch_options(ctx))?;
            let relevant: Vec<String> = adelic::relevant_places(&cfg)?.iter().map(|v| v.to_string()).collect();
            let mut out = to_json(&report);
            out["relevant"] = json!(relevant);
            out["config"] = to_json(&cfg);
            Ok(out)
        }
        AdelicCmd::Inequalities(args) => {
            let cfg = cfg(args, inputs)?;
            let r = adelic::inequality_suite(&cfg)?;
            let mut out = to_json(&r);
            out["all_hold"] = json!(r.all_hold());
            Ok(out)
        }
        AdelicCmd::Height { rho, f } => {
            let rho = family(rho)?;
            let set = FiniteSet::new(input::rationals(std::slice::from_ref(f))?)?;
            Ok(to_json(&adelic::h_rho_f(&rho, &set)?))
        }
        AdelicCmd::GapScan { count, height } => {
            let count = if ctx.global.quick { (*count).min(20) } else { *count };
            Ok(to_json(&adelic::gap_scan(count, ctx.seed, *height, &arch_options(ctx))?))
        }
        AdelicCmd::Bft { lambda_a, lambda_b, level } => {
            let qa = input::legendre(lambda_a)?.quadruple();
            let qb = input::legendre(lambda_b)?.quadruple();
            let mut levels = Vec::new();
            for l in 0..=*level {
                let r = adelic::bft_scan(&qa, &qb, l, ctx.global.tol)?;
                levels.push(json!({ "level": l, "count": r.count, "size_a": r.size_a, "size_b": r.size_b, "min_gap_a": r.min_gap_a, "min_gap_b": r.min_gap_b }));
            }
            let last = adelic::bft_scan(&qa, &qb, *level, ctx.global.tol)?;
            Ok(json!({ "levels": levels, "count": last.count, "matched": to_json(&last.matched) }))
        }
        AdelicCmd::Suite { count, height } => {
            let count = if ctx.global.quick { (*count).min(50) } else { *count };
            suite::inequalities(count, *height, ctx.seed)
        }
    }
}
