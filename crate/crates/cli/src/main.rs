//! Command-line front end: ring file → conditions → cone → local factor →
//! analysis → global asymptotics, plus the verification commands.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 non-monomial
//! condition set, 3 verification mismatch.

use std::fmt::Write as _;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use num_traits::ToPrimitive;

use conezeta::analysis::{
    self, default_peel_order, edge_data, peel_factors, zeta_argument, PeelVerdict,
};
use conezeta::cone::{build_cone, component_counts, local_factor, ComponentCounts, ConeSystem, LocalFactor};
use conezeta::conditions::{classify, derive_conditions, f_polynomial, ConeIntegralData};
use conezeta::dirichlet::{
    asymptotic_report, dihedral_fixture, dump_coeffs, global_coeffs, growth_exponent_estimate,
    verify_agreement, CheckedSource, ConeSource, OracleSource,
};
use conezeta::fixtures;
use conezeta::oracle;
use conezeta::rings::{CountKind, StructureConstants};

#[derive(Parser)]
#[command(name = "conezeta", about = "Local zeta factors of rings via cone integrals", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Subring,
    Ideal,
}

impl From<KindArg> for CountKind {
    fn from(k: KindArg) -> CountKind {
        match k {
            KindArg::Subring => CountKind::Subring,
            KindArg::Ideal => CountKind::Ideal,
        }
    }
}

#[derive(Args)]
struct RingInput {
    /// Ring file path or builtin name (zd(d), heisenberg, sl2, f23)
    #[arg(long)]
    ring: Option<String>,
    /// Cone-data file (skips the condition derivation)
    #[arg(long)]
    cone_data: Option<String>,
    /// Which lattices to count
    #[arg(long, value_enum, default_value_t = KindArg::Subring)]
    kind: KindArg,
}

#[derive(Subcommand)]
enum Command {
    /// Symbolic local factor of a ring or cone-data file
    Local(RingInput),
    /// Abscissa of convergence, pole order and zeta-factor list
    Global {
        #[command(flatten)]
        input: RingInput,
        /// Use a closed-form fixture instead of the pipeline (sl2, dinf)
        #[arg(long)]
        fixture: Option<String>,
        /// Peeling threshold (rational, e.g. 3/2); default: the abscissa
        #[arg(long)]
        theta: Option<String>,
        /// Series depth for the peeling
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Brute-force lattice counts a_{p^0..p^n}
    Count {
        #[command(flatten)]
        input: RingInput,
        #[arg(long)]
        p: u64,
        /// Maximum exponent n
        #[arg(long)]
        n: u32,
        /// Enumeration budget (matrices visited)
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Cone-vs-enumeration coefficient matrix
    Verify {
        #[command(flatten)]
        input: RingInput,
        /// Comma-separated primes
        #[arg(long, default_value = "2,3,5")]
        p_list: String,
        #[arg(long, default_value_t = 4)]
        n_max: u32,
        #[arg(long)]
        budget: Option<u64>,
    },
    /// Euler-product expansion and growth ratios
    Asymptotics {
        #[command(flatten)]
        input: RingInput,
        /// Coefficient bound N
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        /// Use a fixture source instead of the pipeline (sl2, dinf)
        #[arg(long)]
        fixture: Option<String>,
        /// Dump the first coefficients as `n a_n` lines
        #[arg(long, default_value_t = 0)]
        dump: u64,
    },
    /// Derived condition polynomials and the product polynomial F
    Conditions(RingInput),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {}", msg);
            ExitCode::from(1)
        }
    }
}

fn load_ring(input: &RingInput) -> Result<StructureConstants, String> {
    let name = input.ring.as_ref().ok_or("--ring or --cone-data required")?;
    let sc = if std::path::Path::new(name).exists() {
        let text = fs::read_to_string(name).map_err(|e| e.to_string())?;
        StructureConstants::from_file_string(&text).map_err(|e| e.to_string())?
    } else {
        StructureConstants::builtin(name).map_err(|e| e.to_string())?
    };
    let report = sc.validate();
    if !report.passed() {
        return Err(format!("ring axioms fail:\n{}", report));
    }
    Ok(sc)
}

enum PipelineData {
    Data(ConeIntegralData),
    NonMonomial(String),
}

fn pipeline_data(input: &RingInput) -> Result<PipelineData, String> {
    if let Some(path) = &input.cone_data {
        let text = fs::read_to_string(path).map_err(|e| e.to_string())?;
        let data = ConeIntegralData::from_file_string(&text).map_err(|e| e.to_string())?;
        return Ok(PipelineData::Data(data));
    }
    let sc = load_ring(input)?;
    let cs = derive_conditions(&sc, input.kind.into());
    match classify(&cs) {
        Ok(data) => Ok(PipelineData::Data(data)),
        Err(report) => Ok(PipelineData::NonMonomial(report.to_string())),
    }
}

fn build_pipeline(
    data: &ConeIntegralData,
) -> Result<(ConeSystem, ComponentCounts, LocalFactor), String> {
    let cs = build_cone(data).map_err(|e| e.to_string())?;
    let counts = component_counts(data);
    let lf = local_factor(&cs, &counts).map_err(|e| e.to_string())?;
    Ok((cs, counts, lf))
}

fn parse_rational(s: &str) -> Result<BigRational, String> {
    let parts: Vec<&str> = s.split('/').collect();
    let parse_int =
        |x: &str| x.trim().parse::<i64>().map_err(|_| format!("bad rational: {}", s));
    match parts.as_slice() {
        [n] => Ok(BigRational::from_integer(parse_int(n)?.into())),
        [n, d] => Ok(BigRational::new(parse_int(n)?.into(), parse_int(d)?.into())),
        _ => Err(format!("bad rational: {}", s)),
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    let machine = cli.format == Format::Machine;
    match cli.command {
        Command::Local(input) => cmd_local(&input, machine),
        Command::Global { input, fixture, theta, depth } => {
            cmd_global(&input, fixture.as_deref(), theta.as_deref(), depth, machine)
        }
        Command::Count { input, p, n, budget } => cmd_count(&input, p, n, budget, machine),
        Command::Verify { input, p_list, n_max, budget } => {
            cmd_verify(&input, &p_list, n_max, budget, machine)
        }
        Command::Asymptotics { input, n, fixture, dump } => {
            cmd_asymptotics(&input, n, fixture.as_deref(), dump, machine)
        }
        Command::Conditions(input) => cmd_conditions(&input, machine),
    }
}

fn cmd_local(input: &RingInput, machine: bool) -> Result<ExitCode, String> {
    let data = match pipeline_data(input)? {
        PipelineData::NonMonomial(report) => {
            if machine {
                println!("monomial=false");
            }
            println!("{}", report);
            return Ok(ExitCode::from(2));
        }
        PipelineData::Data(d) => d,
    };
    let (cs, counts, lf) = build_pipeline(&data)?;
    let ct = analysis::constant_term_checks(&cs, &counts, &lf).map_err(|e| e.to_string())?;
    let primes: Vec<String> =
        data.exceptional_primes.iter().map(|p| p.to_string()).collect();
    if machine {
        println!("monomial=true");
        println!("z={}", lf.z);
        if let Some(zeta) = &lf.zeta_star {
            println!("zeta_star={}", zeta);
        }
        println!("constant_term={}", ct.value);
        println!("exceptional_primes={}", primes.join(","));
    } else {
        println!("Z(s, p) = {}", lf.z);
        if let Some(zeta) = &lf.zeta_star {
            println!("zeta*_p(s) = {}", zeta);
        }
        println!("constant term a_(p,0) = {}", ct.value);
        if primes.is_empty() {
            println!("exceptional primes: none");
        } else {
            println!("exceptional primes: {}", primes.join(", "));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_global(
    input: &RingInput,
    fixture: Option<&str>,
    theta: Option<&str>,
    depth: Option<u32>,
    machine: bool,
) -> Result<ExitCode, String> {
    if let Some(name) = fixture {
        return cmd_global_fixture(name, machine);
    }
    let data = match pipeline_data(input)? {
        PipelineData::NonMonomial(report) => {
            println!("{}", report);
            return Ok(ExitCode::from(2));
        }
        PipelineData::Data(d) => d,
    };
    let (cs, counts, lf) = build_pipeline(&data)?;
    let ed = edge_data(&cs);
    let result = analysis::analyze(&cs, &counts).map_err(|e| e.to_string())?;
    let theta = match theta {
        Some(s) => parse_rational(s)?,
        None => result.abscissa.clone(),
    };
    let depth = depth.unwrap_or_else(|| default_peel_order(&ed));
    let series_src = lf.zeta_star.clone().unwrap_or_else(|| lf.z.clone());
    let series = series_src.series_expand(depth);
    let peel = peel_factors(&series, &theta).map_err(|e| e.to_string())?;
    let verdict = match peel.verdict {
        PeelVerdict::Terminated => "terminated",
        PeelVerdict::NonTerminatingAtThreshold => "non-terminating-at-threshold",
    };
    if machine {
        println!("abscissa={}", result.abscissa);
        println!("pole_order={}", result.pole_order);
        println!("b={}", result.log_exponent);
        println!("shift={}", result.shift);
        println!("theta={}", theta);
        for &(a, b, e) in &peel.factors {
            println!("factor={},{},{}", a, b, e);
        }
        println!("verdict={}", verdict);
    } else {
        println!("abscissa of convergence: {}", result.abscissa);
        println!("pole order at the abscissa: {}", result.pole_order);
        println!("log exponent b = {}", result.log_exponent);
        println!("shift applied: s -> s - {}", result.shift);
        println!(
            "assumption: pole order counts leading coefficients of c_(p,I); exact for monomial data"
        );
        println!("factor list at theta = {}:", theta);
        for &(a, b, e) in &peel.factors {
            if e == 1 {
                println!("  zeta({})", zeta_argument(a, b));
            } else {
                println!("  zeta({})^{}", zeta_argument(a, b), e);
            }
        }
        let remainder_terms: Vec<String> = (1..=peel.remainder.order().min(4))
            .map(|n| format!("{}", peel.remainder.coefficient(n)))
            .collect();
        println!("remainder log-terms (t^1..t^4): [{}]", remainder_terms.join(", "));
        println!("natural-boundary verdict: {}", verdict);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_global_fixture(name: &str, machine: bool) -> Result<ExitCode, String> {
    match name {
        "sl2" => {
            let fx = fixtures::sl2_subring_fixture();
            let alpha = fx.factors.abscissa().ok_or("fixture has no positive factor")?;
            let w = fx.factors.pole_order();
            if machine {
                println!("abscissa={}", alpha);
                println!("pole_order={}", w);
                println!("b={}", w - 1);
                println!("source=fixture");
            } else {
                println!("fixture factorization: {}", fx.factors);
                println!("bad-prime override at p = 2");
                println!("abscissa of convergence: {}", alpha);
                println!("pole order at the abscissa: {}", w);
                println!("log exponent b = {}", w - 1);
            }
            Ok(ExitCode::SUCCESS)
        }
        "dinf" => {
            let dc = dihedral_fixture(100_000);
            let est = growth_exponent_estimate(&dc);
            let euler = dc.multiplicative_spot_check(&[(2, 3), (3, 4), (2, 5)]);
            if machine {
                println!("growth_exponent_estimate={:.4}", est);
                println!("euler_product={}", euler);
            } else {
                println!("coefficient fixture 2^(-s) zeta(s) + zeta(s-1)");
                println!("growth exponent estimate from s_N: {:.4}", est);
                println!(
                    "euler product: {}",
                    if euler { "consistent" } else { "NOT an Euler product (multiplicativity fails)" }
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        other => Err(format!("unknown fixture '{}' (expected sl2 or dinf)", other)),
    }
}

fn cmd_count(
    input: &RingInput,
    p: u64,
    n: u32,
    budget: Option<u64>,
    machine: bool,
) -> Result<ExitCode, String> {
    let sc = load_ring(input)?;
    let counts = oracle::dirichlet_prefix(&sc, p, n, input.kind.into(), budget)
        .map_err(|e| e.to_string())?;
    for (k, c) in counts.iter().enumerate() {
        if machine {
            println!("a_{}^{}={}", p, k, c);
        } else {
            println!("{}", c);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    input: &RingInput,
    p_list: &str,
    n_max: u32,
    budget: Option<u64>,
    machine: bool,
) -> Result<ExitCode, String> {
    let sc = load_ring(input)?;
    let kind: CountKind = input.kind.into();
    let data = match classify(&derive_conditions(&sc, kind)) {
        Ok(d) => d,
        Err(report) => {
            println!("{}", report);
            return Ok(ExitCode::from(2));
        }
    };
    let (_, _, lf) = build_pipeline(&data)?;
    let zeta = lf.zeta_star.ok_or("ring-derived data expected")?;
    let primes: Vec<u64> = p_list
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| format!("bad prime: {}", s)))
        .collect::<Result<_, _>>()?;
    let cone_src = ConeSource { zeta };
    let oracle_src = OracleSource { sc, kind, budget };
    let cells = verify_agreement(&cone_src, &oracle_src, &primes, n_max)
        .map_err(|e| e.to_string())?;
    let mut mismatch = false;
    for cell in &cells {
        let status = if cell.budget_exceeded {
            "budget".to_string()
        } else if cell.agrees() {
            "ok".to_string()
        } else {
            mismatch = !data.exceptional_primes.contains(&cell.p);
            "MISMATCH".to_string()
        };
        let fmt_opt =
            |v: Option<i128>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".to_string());
        if machine {
            println!(
                "p={} n={} cone={} oracle={} status={}",
                cell.p,
                cell.n,
                fmt_opt(cell.left),
                fmt_opt(cell.right),
                status
            );
        } else {
            println!(
                "p = {:<3} n = {:<2} cone = {:<12} oracle = {:<12} {}",
                cell.p,
                cell.n,
                fmt_opt(cell.left),
                fmt_opt(cell.right),
                status
            );
        }
    }
    if mismatch {
        Ok(ExitCode::from(3))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_asymptotics(
    input: &RingInput,
    n: u64,
    fixture: Option<&str>,
    dump: u64,
    machine: bool,
) -> Result<ExitCode, String> {
    let (dc, alpha, b) = match fixture {
        Some("dinf") => {
            let dc = dihedral_fixture(n);
            (dc, 2.0, 0u32)
        }
        Some("sl2") => {
            let fx = fixtures::sl2_subring_fixture();
            let alpha = fx
                .factors
                .abscissa()
                .and_then(|q| q.to_f64())
                .ok_or("fixture abscissa")?;
            let w = fx.factors.pole_order();
            let dc = global_coeffs(&fx, n).map_err(|e| e.to_string())?;
            (dc, alpha, w - 1)
        }
        Some(other) => return Err(format!("unknown fixture '{}'", other)),
        None => {
            let sc = load_ring(input)?;
            let kind: CountKind = input.kind.into();
            let data = match classify(&derive_conditions(&sc, kind)) {
                Ok(d) => d,
                Err(report) => {
                    println!("{}", report);
                    return Ok(ExitCode::from(2));
                }
            };
            let (cs, counts, lf) = build_pipeline(&data)?;
            let result = analysis::analyze(&cs, &counts).map_err(|e| e.to_string())?;
            let zeta = lf.zeta_star.ok_or("ring-derived data expected")?;
            let checked = CheckedSource {
                cone: ConeSource { zeta },
                oracle: OracleSource { sc, kind, budget: None },
                exceptional: data.exceptional_primes.clone(),
                check_primes: &[2, 3, 5, 7],
                check_depth: 3,
            };
            checked.validate().map_err(|e| e.to_string())?;
            let dc = global_coeffs(&checked, n).map_err(|e| e.to_string())?;
            let alpha = result.abscissa.to_f64().ok_or("abscissa")?;
            (dc, alpha, result.log_exponent)
        }
    };
    if dump > 0 {
        print!("{}", dump_coeffs(&dc, dump));
    }
    let report = asymptotic_report(&dc, alpha, b);
    if machine {
        println!("alpha={}", alpha);
        println!("b={}", b);
        for row in &report.rows {
            println!(
                "N={} s_N={} ratio={:.8} weighted_ratio={:.8}",
                row.upto, row.s_n, row.ratio, row.weighted_ratio
            );
        }
        println!("stabilization={:.3e}", report.stabilization);
        println!("fitted_constant={:.8}", report.fitted_constant);
    } else {
        println!("{}", report);
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_conditions(input: &RingInput, machine: bool) -> Result<ExitCode, String> {
    let sc = load_ring(input)?;
    let kind: CountKind = input.kind.into();
    let cs = derive_conditions(&sc, kind);
    let d = sc.d;
    let mut out = String::new();
    for cond in &cs.conditions {
        let prefix: Vec<String> = (1..=cond.k).map(|i| format!("m{}{}", i, i)).collect();
        if machine {
            writeln!(out, "cond k={} g={}", cond.k, cond.g.render(d)).unwrap();
        } else {
            writeln!(out, "v({}) <= v({})", prefix.join("*"), cond.g.render(d)).unwrap();
        }
    }
    let f = f_polynomial(&sc, kind);
    if machine {
        writeln!(out, "F={}", f.render(d)).unwrap();
    } else {
        writeln!(out, "F_{}(m_ij) = {}", kind.as_str(), f.render(d)).unwrap();
    }
    match classify(&cs) {
        Ok(data) => {
            print!("{}", out);
            if machine {
                println!("monomial=true");
            } else {
                println!("monomial: yes ({} conditions after dropping vacuous ones)", data.conditions.len());
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(report) => {
            print!("{}", out);
            if machine {
                println!("monomial=false");
            }
            println!("{}", report);
            Ok(ExitCode::from(2))
        }
    }
}
