//! Command-line front end: parse kernel/moment/map/polynomial files,
//! run the library pipelines, and emit human-readable or JSON
//! certificates.
//!
//! Exit codes: 0 verified/feasible, 1 verification failed or
//! mathematically infeasible, 2 input/usage error.

mod report;

use clap::{Args, Parser, Subcommand};
use kreinkit::hankel::{
    enumerate_words, gns_build, hamburger_feasible, hankel_kernel, moment_recover,
    uniqueness_certificate, verify_hankel,
};
use kreinkit::json::{DecompositionFile, KernelFile, MapFile, MomentsFile, PolyFile};
use kreinkit::kernel::{gram, schwartz_check, schwartz_minimal, uniqueness_gap, FiniteKernel};
use kreinkit::kolmogorov::{decompose, verify};
use kreinkit::specalg::{norm_max, PSD_TOL};
use kreinkit::{dilation, fock, CMat, CVec, Error, C64};
use report::Report;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kk", version, about = "Kernel decomposition and dilation certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Input file path.
    #[arg(long)]
    input: PathBuf,
    /// Emit the machine-readable report to stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Kolmogorov-decompose a hermitian kernel and verify the result.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Write the decomposition to this path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reconstruction tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Spectral rank cutoff (default: dim * max_entry * 1e-12).
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Verify a decomposition file against a kernel file.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Decomposition file produced by `decompose --out`.
        #[arg(long)]
        decomposition: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Certify the Schwartz condition -L <= K <= L.
    Schwartz {
        #[command(flatten)]
        common: Common,
        /// Witness kernel L; omitted: construct the minimal witness.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// Also report the uniqueness gap epsilon.
        #[arg(long)]
        gap: bool,
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Truncated Hamburger moment problems.
    Moments {
        #[command(subcommand)]
        sub: MomentsCmd,
    },
    /// Hermitian maps on matrix algebras via Choi matrices.
    Map {
        #[command(subcommand)]
        sub: MapCmd,
    },
    /// Contraction dilation of an arbitrary kernel.
    Dilate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Truncated Fock model operations.
    Fock {
        #[command(subcommand)]
        sub: FockCmd,
    },
}

#[derive(Subcommand)]
enum MomentsCmd {
    /// Feasibility with the minimal Schwartz witness.
    Check {
        #[command(flatten)]
        common: Common,
    },
    /// Build the truncated GNS data and verify moment recovery.
    Gns {
        #[command(flatten)]
        common: Common,
        /// Write the GNS data to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spectral-gap uniqueness certificate.
    Unique {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rank_tol: Option<f64>,
    },
}

#[derive(Subcommand)]
enum MapCmd {
    /// Minimal Stinespring dilation from the Choi spectrum.
    Stinespring {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rank_tol: Option<f64>,
    },
    /// Wittstock split into completely positive parts.
    Split {
        #[command(flatten)]
        common: Common,
    },
    /// Paulsen majorant S with -S <= T <= S.
    Paulsen {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum FockCmd {
    /// Truncated Szego reproduction with tail bound.
    Szego {
        /// Comma-separated real coordinates of xi.
        #[arg(long)]
        xi: String,
        /// Comma-separated real coordinates of eta.
        #[arg(long)]
        eta: String,
        /// Truncation degree.
        #[arg(long = "M", default_value_t = 10)]
        m: usize,
        #[arg(long)]
        json: bool,
    },
    /// Holomorphic linearization of a hermitian polynomial kernel.
    Linearize {
        #[command(flatten)]
        common: Common,
        #[arg(long = "M")]
        m: usize,
    },
    /// Holomorphic contraction dilation of a polynomial kernel.
    Dilate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "M")]
        m: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(error_code(&e))
        }
    }
}

/// Input/validation errors exit 2; mathematical failures exit 1.
fn error_code(e: &Error) -> u8 {
    match e {
        Error::NotHermitian { .. }
        | Error::ShapeMismatch(_)
        | Error::MissingMoment { .. }
        | Error::NonHermitianMoments { .. }
        | Error::OutOfDomain(_)
        | Error::Domain(_)
        | Error::InvalidInput(_) => 2,
        _ => 1,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(T, String), Error> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_slice(&bytes)
        .map_err(|e| Error::InvalidInput(format!("malformed JSON in {}: {e}", path.display())))?;
    Ok((value, report::digest(&bytes)))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))?;
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
}

fn read_kernel(path: &Path) -> Result<(FiniteKernel, String), Error> {
    let (file, digest) = read_json::<KernelFile>(path)?;
    let k = file.to_kernel()?;
    if k.is_empty() {
        return Err(Error::InvalidInput("kernel has an empty label set".into()));
    }
    Ok((k, digest))
}

fn finish(report: Report, json: bool, pass: bool) -> Result<ExitCode, Error> {
    report.print(json);
    Ok(ExitCode::from(if pass { 0 } else { 1 }))
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Decompose { common, out, tol, rank_tol } => {
            let (k, digest) = read_kernel(&common.input)?;
            let mut report = Report::new("decompose", digest);
            let d = decompose(&k, rank_tol)?;
            let rep = verify(&d, &k, tol)?;
            report.verdict("reconstruction", rep.max_block_residual <= tol);
            report.verdict("minimal", rep.minimal);
            report.residual("max_block_residual", rep.max_block_residual, tol);
            report.certificate("model_dim", d.model_dim().into());
            report.certificate("J", serde_json::to_value(d.j()).unwrap());
            let sig = d.signature();
            report.certificate(
                "signature",
                serde_json::json!({"plus": sig.plus, "minus": sig.minus}),
            );
            if let Some(out) = out {
                write_json(&out, &DecompositionFile::from_decomposition(&d))?;
            }
            finish(report, common.json, rep.pass)
        }
        Command::Verify { common, decomposition, tol, rank_tol } => {
            let (k, digest) = read_kernel(&common.input)?;
            let (file, _) = read_json::<DecompositionFile>(&decomposition)?;
            let g = gram(&k);
            let rt = rank_tol.unwrap_or_else(|| {
                kreinkit::specalg::default_rank_tol(k.len() * k.h(), norm_max(g.matrix()))
            });
            let d = file.to_decomposition(k.labels(), k.h(), rt)?;
            let mut report = Report::new("verify", digest);
            let rep = verify(&d, &k, tol)?;
            report.verdict("reconstruction", rep.max_block_residual <= tol);
            report.verdict("minimal", rep.minimal);
            report.residual("max_block_residual", rep.max_block_residual, tol);
            finish(report, common.json, rep.pass)
        }
        Command::Schwartz { common, witness, gap, rank_tol } => {
            let (k, digest) = read_kernel(&common.input)?;
            let mut report = Report::new("schwartz", digest);
            let l = match &witness {
                Some(path) => read_kernel(path)?.0,
                None => schwartz_minimal(&k)?,
            };
            let rep = schwartz_check(&k, &l, PSD_TOL)?;
            report.verdict("schwartz", rep.verdict);
            report.residual("min_eig_L_minus_K", rep.min_eig_minus, PSD_TOL);
            report.residual("min_eig_L_plus_K", rep.min_eig_plus, PSD_TOL);
            report.certificate(
                "witness",
                if witness.is_some() { "provided".into() } else { "minimal".into() },
            );
            if gap {
                let g = uniqueness_gap(&k, &l, rank_tol)?;
                report.certificate("epsilon", g.epsilon.into());
            }
            finish(report, common.json, rep.verdict)
        }
        Command::Moments { sub } => run_moments(sub),
        Command::Map { sub } => run_map(sub),
        Command::Dilate { common, rank_tol } => {
            let (file, digest) = read_json::<KernelFile>(&common.input)?;
            let k = file.to_kernel()?;
            if k.is_empty() {
                return Err(Error::InvalidInput("kernel has an empty label set".into()));
            }
            let mut report = Report::new("dilate", digest);
            let d = dilation::contraction_dilate(&k, rank_tol)?;
            let residual = d.reconstruction_residual(&k)?;
            let norm = d.u_norm();
            report.residual("reconstruction", residual, 1e-9);
            report.residual("u_norm_excess", (norm - 1.0).max(0.0), 1e-10);
            report.verdict("contraction", norm <= 1.0 + 1e-10);
            report.verdict("minimal", d.is_minimal());
            report.certificate("model_dim", d.model_dim().into());
            let pass = residual <= 1e-9 && norm <= 1.0 + 1e-10 && d.is_minimal();
            finish(report, common.json, pass)
        }
        Command::Fock { sub } => run_fock(sub),
    }
}

fn run_moments(sub: MomentsCmd) -> Result<ExitCode, Error> {
    match sub {
        MomentsCmd::Check { common } => {
            let (file, digest) = read_json::<MomentsFile>(&common.input)?;
            let m = file.to_moments()?;
            let mut report = Report::new("moments check", digest);
            let f = hamburger_feasible(&m)?;
            let hk = hankel_kernel(&m)?;
            let hr = verify_hankel(&hk, m.n(), m.d())?;
            report.verdict("feasible", f.feasible);
            report.verdict("hankel_identity", hr.pass);
            report.residual("min_eig_L_minus_K", f.min_eig_minus, PSD_TOL);
            report.residual("min_eig_L_plus_K", f.min_eig_plus, PSD_TOL);
            report.certificate("truncated", true.into());
            finish(report, common.json, f.feasible && hr.pass)
        }
        MomentsCmd::Gns { common, out } => {
            let (file, digest) = read_json::<MomentsFile>(&common.input)?;
            let m = file.to_moments()?;
            let mut report = Report::new("moments gns", digest);
            let g = gns_build(&m)?;
            let mut max_residual = 0.0_f64;
            for w in enumerate_words(m.n(), m.d()) {
                let got = moment_recover(&g, &w)?;
                let want = m.value(&w)?;
                max_residual = max_residual.max((got - want).norm());
            }
            report.verdict("moment_recovery", max_residual <= 1e-8);
            report.residual("max_recovery_residual", max_residual, 1e-8);
            report.certificate("model_dim", g.decomposition.model_dim().into());
            if let Some(out) = out {
                let pi: Vec<Vec<Vec<[f64; 2]>>> = g
                    .pi
                    .iter()
                    .map(|p| {
                        (0..p.nrows())
                            .map(|r| (0..p.ncols()).map(|c| [p[(r, c)].re, p[(r, c)].im]).collect())
                            .collect()
                    })
                    .collect();
                let omega: Vec<[f64; 2]> =
                    g.omega.iter().map(|z| [z.re, z.im]).collect();
                write_json(
                    &out,
                    &serde_json::json!({
                        "decomposition": DecompositionFile::from_decomposition(&g.decomposition),
                        "omega": omega,
                        "pi": pi,
                        "domain_depth": g.domain_depth,
                    }),
                )?;
            }
            finish(report, common.json, max_residual <= 1e-8)
        }
        MomentsCmd::Unique { common, rank_tol } => {
            let (file, digest) = read_json::<MomentsFile>(&common.input)?;
            let m = file.to_moments()?;
            let mut report = Report::new("moments unique", digest);
            let f = hamburger_feasible(&m)?;
            let gap = uniqueness_certificate(&m, &f.witness, rank_tol)?;
            report.verdict("feasible", f.feasible);
            report.certificate("epsilon", gap.epsilon.into());
            finish(report, common.json, f.feasible)
        }
    }
}

fn run_map(sub: MapCmd) -> Result<ExitCode, Error> {
    match sub {
        MapCmd::Stinespring { common, rank_tol } => {
            let (file, digest) = read_json::<MapFile>(&common.input)?;
            let t = file.to_map()?;
            let mut report = Report::new("map stinespring", digest);
            let dil = dilation::stinespring(&t, rank_tol)?;
            let mut max_residual = 0.0_f64;
            for i in 0..t.n() {
                for j in 0..t.n() {
                    let mut e = CMat::zeros(t.n(), t.n());
                    e[(i, j)] = C64::new(1.0, 0.0);
                    max_residual =
                        max_residual.max(norm_max(&(dil.apply(&e) - t.unit_block(i, j))));
                }
            }
            let minimal = dil.is_minimal(1e-9);
            report.verdict("reconstruction", max_residual <= 1e-9);
            report.verdict("minimal", minimal);
            report.residual("max_unit_residual", max_residual, 1e-9);
            report.certificate("multiplicity", dil.k.into());
            let plus = dil.s.iter().filter(|&&s| s == 1).count();
            report.certificate(
                "signature",
                serde_json::json!({"plus": plus, "minus": dil.s.len() - plus}),
            );
            finish(report, common.json, max_residual <= 1e-9 && minimal)
        }
        MapCmd::Split { common } => {
            let (file, digest) = read_json::<MapFile>(&common.input)?;
            let t = file.to_map()?;
            let mut report = Report::new("map split", digest);
            let (p, m) = dilation::wittstock_split(&t)?;
            let pp = kreinkit::specalg::psd_check(p.choi(), PSD_TOL)?;
            let pm = kreinkit::specalg::psd_check(m.choi(), PSD_TOL)?;
            let ortho = norm_max(&(p.choi().matrix() * m.choi().matrix()));
            let diff = norm_max(
                &(p.choi().matrix() - m.choi().matrix() - t.choi().matrix()),
            );
            report.verdict("plus_cp", pp.verdict);
            report.verdict("minus_cp", pm.verdict);
            report.residual("range_orthogonality", ortho, 1e-9);
            report.residual("difference", diff, 1e-10);
            let pass = pp.verdict && pm.verdict && ortho <= 1e-9 && diff <= 1e-10;
            finish(report, common.json, pass)
        }
        MapCmd::Paulsen { common } => {
            let (file, digest) = read_json::<MapFile>(&common.input)?;
            let t = file.to_map()?;
            let mut report = Report::new("map paulsen", digest);
            let s = dilation::paulsen_s(&t)?;
            let mut min_eig = f64::INFINITY;
            for sign in [1.0, -1.0] {
                let m = kreinkit::specalg::HermitianMatrix::new(
                    s.choi().matrix() + t.choi().matrix() * C64::new(sign, 0.0),
                )?;
                min_eig = min_eig.min(kreinkit::specalg::psd_check(&m, PSD_TOL)?.min_eigenvalue);
            }
            let off = dilation::off_diagonal_check(&t, &s, &s)?;
            report.verdict("dominates", min_eig >= -1e-10);
            report.verdict("off_diagonal_cp", off.verdict);
            report.residual("min_eig_S_pm_T", min_eig, 1e-10);
            finish(report, common.json, min_eig >= -1e-10 && off.verdict)
        }
    }
}

fn parse_point(text: &str) -> Result<CVec, Error> {
    let coords: Result<Vec<f64>, _> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect();
    let coords =
        coords.map_err(|e| Error::InvalidInput(format!("bad coordinate list '{text}': {e}")))?;
    if coords.is_empty() {
        return Err(Error::InvalidInput("empty coordinate list".into()));
    }
    Ok(CVec::from_iterator(
        coords.len(),
        coords.into_iter().map(|x| C64::new(x, 0.0)),
    ))
}

fn run_fock(sub: FockCmd) -> Result<ExitCode, Error> {
    match sub {
        FockCmd::Szego { xi, eta, m, json } => {
            let xi = parse_point(&xi)?;
            let eta = parse_point(&eta)?;
            if xi.len() != eta.len() {
                return Err(Error::ShapeMismatch("xi and eta must share dimension".into()));
            }
            let f = fock::TruncatedFock::new(xi.len(), m)?;
            let mut report = Report::new("fock szego", String::new());
            let rep = fock::szego_truncation_check(&f, &xi, &eta)?;
            report.certificate("value", serde_json::json!([rep.value.re, rep.value.im]));
            report.certificate("exact", serde_json::json!([rep.exact.re, rep.exact.im]));
            report.residual("truncation_error", rep.error, rep.error_bound);
            report.verdict("within_tail_bound", rep.error <= rep.error_bound);
            finish(report, json, rep.error <= rep.error_bound)
        }
        FockCmd::Linearize { common, m } => {
            let (file, digest) = read_json::<PolyFile>(&common.input)?;
            let k = file.to_kernel()?;
            let mut report = Report::new("fock linearize", digest);
            let lin = fock::holomorphic_linearize(&k, m)?;
            let sig = lin.signature();
            report.certificate("model_dim", lin.model_dim().into());
            report.certificate(
                "signature",
                serde_json::json!({"plus": sig.plus, "minus": sig.minus}),
            );
            let residual = sampled_poly_residual(&k, |xi, eta| lin.reconstruct(xi, eta))?;
            report.verdict("reconstruction", residual <= 1e-8);
            report.residual("sampled_reconstruction", residual, 1e-8);
            finish(report, common.json, residual <= 1e-8)
        }
        FockCmd::Dilate { common, m } => {
            let (file, digest) = read_json::<PolyFile>(&common.input)?;
            let k = file.to_kernel()?;
            let mut report = Report::new("fock dilate", digest);
            let dil = fock::holomorphic_contraction_dilate(&k, m)?;
            let norm = dil.u_norm();
            let residual = sampled_poly_residual(&k, |xi, eta| dil.reconstruct(xi, eta))?;
            report.verdict("contraction", norm <= 1.0 + 1e-10);
            report.verdict("reconstruction", residual <= 1e-8);
            report.residual("u_norm_excess", (norm - 1.0).max(0.0), 1e-10);
            report.residual("sampled_reconstruction", residual, 1e-8);
            report.certificate("model_dim", dil.model_dim().into());
            let pass = norm <= 1.0 + 1e-10 && residual <= 1e-8;
            finish(report, common.json, pass)
        }
    }
}

/// Max reconstruction error over a deterministic grid in the ball of
/// radius 0.4.
fn sampled_poly_residual(
    k: &fock::PolynomialKernel,
    reconstruct: impl Fn(&CVec, &CVec) -> Result<C64, Error>,
) -> Result<f64, Error> {
    let d = k.d();
    let mut max = 0.0_f64;
    for s in 0..5 {
        for t in 0..5 {
            let point = |salt: usize| {
                let v = CVec::from_fn(d, |i, _| {
                    let a = ((salt * d + i) as f64 * 0.831 + 0.17).sin();
                    let b = ((salt * d + i) as f64 * 1.277 + 0.43).cos();
                    C64::new(a, b)
                });
                let n = v.norm().max(1e-9);
                v * C64::new(0.4 * ((salt % 7) as f64 + 1.0) / 7.0 / n, 0.0)
            };
            let xi = point(3 * s + 1);
            let eta = point(11 * t + 2);
            let lhs = reconstruct(&xi, &eta)?;
            let rhs = k.eval(&xi, &eta)?;
            max = max.max((lhs - rhs).norm());
        }
    }
    Ok(max)
}
