use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crt_core::conical::{
    default_n_gamma, invert_cone_direct, invert_cone_method1, invert_cone_method2, kernel_table, stability_norms, Method2Config,
};
use crt_core::forward::{conical_forward, vline_forward, xray_forward, ConeQuadratureSpec, RayQuadratureSpec};
use crt_core::grid::{arcsine_psi_nodes, polar_to_cartesian, ConeData, Image2D, VlineSinogram, Volume3D};
use crt_core::io::{Container, DataFile};
use crt_core::metrics::{jump_band_mask, relative_l2_masked};
use crt_core::noise::add_noise;
use crt_core::phantom::{phantom_disc, phantom_smiley, random_gaussian_blobs, Ball3D, BallKind};
use crt_core::vline::{invert_vline, invert_vline_exterior, invert_xray, VlineInversionConfig, VlineVariant};
use crt_core::{CrtError, Result};

#[derive(Parser, Debug)]
#[command(name = "crt", version, about = "V-line and conical Radon transforms: phantoms, forward models, inversions")]
pub struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a 2D or 3D phantom.
    Phantom(PhantomArgs),
    /// V-line transform of a 2D image, vertices on the unit circle.
    ForwardVline(ForwardPlanarArgs),
    /// Two-sided X-ray transform of a 2D image on the same geometry.
    ForwardXray(ForwardPlanarArgs),
    /// Weighted conical Radon transform of a volume, vertices on the unit cylinder.
    ForwardCone(ForwardConeArgs),
    /// Invert a V-line sinogram.
    InvertVline(InvertPlanarArgs),
    /// Invert an X-ray sinogram.
    InvertXray(InvertPlanarArgs),
    /// Invert cone data slice-wise (vline), through plane integrals (radon) or by the direct formula.
    InvertCone(InvertConeArgs),
    /// Stability norms of a volume and its cone data, printed as JSON.
    Norms(NormsArgs),
    /// Min-max windowed 8-bit PGM of a 2D array or a slice of a larger one.
    Render(RenderArgs),
    /// The 201×201 smiley experiment: clean and noisy V-line reconstructions.
    ReproduceFig4(ReproduceArgs),
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("shape").required(true).args(["smiley", "disc", "ball", "blobs"])))]
struct PhantomArgs {
    #[arg(long)]
    smiley: bool,
    /// Centred disc of the given radius.
    #[arg(long, value_name = "RADIUS")]
    disc: Option<f64>,
    /// 3D ball (gaussian: σ = radius/2).
    #[arg(long, value_enum, value_name = "KIND")]
    ball: Option<BallArg>,
    /// Random sum of Gaussian blobs with this seed (3D).
    #[arg(long, value_name = "SEED")]
    blobs: Option<u64>,
    /// Samples per axis.
    #[arg(short, long, default_value_t = 201)]
    n: usize,
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.1, -0.05, 0.0])]
    center: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    radius: f64,
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BallArg {
    Gaussian,
    Indicator,
}

#[derive(Args, Debug)]
struct ForwardPlanarArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 256)]
    nphi: usize,
    /// Opening angles ψ_j = arcsin(j/(npsi + 1)).
    #[arg(long, default_value_t = 201)]
    npsi: usize,
    /// Ray quadrature step.
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ForwardConeArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 64)]
    nphi: usize,
    #[arg(long, default_value_t = 32)]
    nz: usize,
    #[arg(long, default_value_t = -4.0, allow_hyphen_values = true)]
    z_min: f64,
    #[arg(long, default_value_t = 4.0, allow_hyphen_values = true)]
    z_max: f64,
    #[arg(long, default_value_t = 32)]
    nbeta: usize,
    #[arg(long, default_value_t = 64)]
    npsi: usize,
    #[arg(long, default_value_t = 256)]
    neta: usize,
    #[arg(long, default_value_t = 1e-3)]
    step: f64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct InvertPlanarArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    /// Highest angular order (default n_phi/2).
    #[arg(long)]
    nmax: Option<usize>,
    /// Radial nodes r_i = i/m (default n_psi + 1).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 201)]
    size: usize,
    /// Use the exterior radial formula instead of the stable one (V-line only).
    #[arg(long)]
    exterior: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ConeMethod {
    Vline,
    Radon,
    Direct,
}

#[derive(Args, Debug)]
struct InvertConeArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: ConeMethod,
    /// Output cube side (radon, direct) or slice size (vline).
    #[arg(long, default_value_t = 48)]
    size: usize,
    #[arg(long, default_value_t = 0.005)]
    epsilon: f64,
    /// V-line opening angles used by the slice reduction (default size − 1).
    #[arg(long)]
    nchi: Option<usize>,
    /// Inner γ nodes of the kernel table (default: resolves the smallest χ).
    #[arg(long)]
    ngamma: Option<usize>,
    #[arg(long, default_value_t = 32)]
    nmax: usize,
    #[arg(long, default_value_t = 1024)]
    n_s: usize,
    #[arg(long, default_value_t = 0.6)]
    max_gap: f64,
    /// Allow the direct formula on volumes above its size guard.
    #[arg(long)]
    allow_large: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct NormsArgs {
    /// Volume.
    #[arg(short, long)]
    input: PathBuf,
    /// Cone data of the volume.
    #[arg(short, long)]
    cone: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// Index along the first axis for arrays with more than two dims (default: middle).
    #[arg(long)]
    slice: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(long, default_value = "fig4")]
    out_dir: PathBuf,
    #[arg(short, long, default_value_t = 201)]
    n: usize,
    #[arg(long, default_value_t = 256)]
    nphi: usize,
    #[arg(long, default_value_t = 201)]
    npsi: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(CrtError::InvalidArgument(msg.into()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Command::Phantom(a) => phantom(a),
        Command::ForwardVline(a) => forward_planar(a, false),
        Command::ForwardXray(a) => forward_planar(a, true),
        Command::ForwardCone(a) => forward_cone(a),
        Command::InvertVline(a) => invert_planar(a, false),
        Command::InvertXray(a) => invert_planar(a, true),
        Command::InvertCone(a) => invert_cone(a),
        Command::Norms(a) => norms(a),
        Command::Render(a) => render(a),
        Command::ReproduceFig4(a) => reproduce(a),
    }
}

fn phantom(a: PhantomArgs) -> Result<()> {
    if a.smiley {
        return phantom_smiley(a.n)?.save(&a.output);
    }
    if let Some(r) = a.disc {
        return phantom_disc(a.n, r)?.save(&a.output);
    }
    let balls = match (a.ball, a.blobs) {
        (Some(kind), _) => {
            let kind = match kind {
                BallArg::Gaussian => BallKind::Gaussian,
                BallArg::Indicator => BallKind::Indicator,
            };
            vec![Ball3D::new([a.center[0], a.center[1], a.center[2]], a.radius, kind)?]
        }
        (None, Some(seed)) => random_gaussian_blobs(seed, a.count),
        (None, None) => unreachable!("clap requires one shape"),
    };
    let mut vol = Volume3D::cube(a.n)?;
    for b in &balls {
        b.add_to(&mut vol);
    }
    vol.save(&a.output)
}

fn forward_planar(a: ForwardPlanarArgs, xray: bool) -> Result<()> {
    let img = Image2D::load(&a.input)?;
    let q = RayQuadratureSpec::new(a.step, RayQuadratureSpec::default().r_max)?;
    let psi = arcsine_psi_nodes(a.npsi);
    let s = if xray { xray_forward(&img, a.nphi, &psi, &q)? } else { vline_forward(&img, a.nphi, &psi, &q)? };
    s.save(&a.output)
}

fn forward_cone(a: ForwardConeArgs) -> Result<()> {
    let vol = Volume3D::load(&a.input)?;
    let grid = crt_core::grid::ConeGrid::regular(a.nphi, a.nz, a.z_min, a.z_max, a.nbeta, a.npsi)?;
    let q = ConeQuadratureSpec::new(a.neta, a.step)?;
    conical_forward(&vol, a.k, &grid, &q)?.save(&a.output)
}

fn planar_config(s: &VlineSinogram, a: &InvertPlanarArgs) -> VlineInversionConfig {
    let mut cfg = VlineInversionConfig::for_sinogram(s, a.epsilon);
    cfg.n_max = a.nmax.unwrap_or(cfg.n_max);
    cfg.m = a.m.unwrap_or(cfg.m);
    cfg.output_size = a.size;
    cfg
}

fn invert_planar(a: InvertPlanarArgs, xray: bool) -> Result<()> {
    let s = VlineSinogram::load(&a.input)?;
    let cfg = planar_config(&s, &a);
    let img = if xray {
        if a.exterior {
            return invalid("--exterior applies to V-line data only");
        }
        invert_xray(&s, &cfg)?
    } else if a.exterior {
        let ext = invert_vline_exterior(&s, &cfg)?;
        eprintln!(
            "warning: {} (max weight {:.3e}, {} coefficients zeroed)",
            ext.diagnostic.message, ext.diagnostic.max_weight, ext.diagnostic.non_finite_zeroed
        );
        polar_to_cartesian(&ext.coeffs, cfg.output_size)?
    } else {
        invert_vline(&s, &cfg)?
    };
    img.save(&a.output)
}

fn invert_cone(a: InvertConeArgs) -> Result<()> {
    let c = ConeData::load(&a.input)?;
    let vol = match a.method {
        ConeMethod::Vline => {
            let n_chi = a.nchi.unwrap_or(a.size.saturating_sub(1).max(2));
            let chi = arcsine_psi_nodes(n_chi);
            let kt = kernel_table(c.k_weight, &chi, &c.grid.beta_nodes, &c.grid.psi_nodes, a.ngamma.unwrap_or(default_n_gamma(&chi)))?;
            let cfg = VlineInversionConfig {
                epsilon: a.epsilon,
                n_max: a.nmax,
                m: n_chi + 1,
                variant: VlineVariant::PerryStable,
                output_size: a.size,
            };
            invert_cone_method1(&c, &kt, &cfg)?
        }
        ConeMethod::Radon => {
            let cfg = Method2Config { n_s: a.n_s, max_gap: a.max_gap };
            let out = invert_cone_method2(&c, &Volume3D::cube(a.size)?, &cfg)?;
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            out.volume
        }
        ConeMethod::Direct => invert_cone_direct(&c, &Volume3D::cube(a.size)?, a.allow_large)?,
    };
    vol.save(&a.output)
}

fn norms(a: NormsArgs) -> Result<()> {
    let f = Volume3D::load(&a.input)?;
    let c = ConeData::load(&a.cone)?;
    let n = stability_norms(&f, &c)?;
    let report = json!({
        "k_weight": c.k_weight,
        "sobolev_minus_1": n.sobolev_minus_1,
        "cone_norm": n.cone_norm,
        "cone_norm_1": n.cone_norm_1,
        "l2": n.l2,
        "ratio": n.sobolev_minus_1 / n.cone_norm,
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(p) = a.output {
        std::fs::write(p, text + "\n")?;
    }
    Ok(())
}

/// 8-bit binary PGM, min-max windowed; row 0 of `values` is written last when
/// `flip` is set so that y points up.
fn encode_pgm(values: &[f64], n_x: usize, n_y: usize, flip: bool) -> Vec<u8> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = format!("P5\n{n_x} {n_y}\n255\n").into_bytes();
    for r in 0..n_y {
        let row = if flip { n_y - 1 - r } else { r };
        out.extend(values[row * n_x..(row + 1) * n_x].iter().map(|&v| {
            if span > 0.0 && span.is_finite() {
                ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
            } else {
                0
            }
        }));
    }
    out
}

fn write_pgm(path: &Path, img: &Image2D) -> Result<()> {
    std::fs::write(path, encode_pgm(&img.values, img.n_x, img.n_y, true))?;
    Ok(())
}

fn render(a: RenderArgs) -> Result<()> {
    let f = DataFile::read(&a.input)?;
    let flip = matches!(f.kind(), Some("image2d" | "volume3d"));
    let d = &f.dims;
    let (rows, cols, values) = match d.len() {
        1 => (1, d[0], &f.payload[..]),
        2 => (d[0], d[1], &f.payload[..]),
        _ => {
            let i = a.slice.unwrap_or(d[0] / 2);
            if i >= d[0] {
                return invalid(format!("slice {i} out of range 0..{}", d[0]));
            }
            let cols = d[d.len() - 1];
            let rows: usize = d[1..d.len() - 1].iter().product();
            (rows, cols, &f.payload[i * rows * cols..(i + 1) * rows * cols])
        }
    };
    std::fs::write(&a.output, encode_pgm(values, cols, rows, flip))?;
    Ok(())
}

fn reproduce(a: ReproduceArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out_dir)?;
    let timed = |f: &mut dyn FnMut() -> Result<Image2D>| -> Result<(Image2D, f64)> {
        let t = Instant::now();
        let img = f()?;
        Ok((img, t.elapsed().as_secs_f64()))
    };
    let phantom = phantom_smiley(a.n)?;
    let psi = arcsine_psi_nodes(a.npsi);
    let q = RayQuadratureSpec::default();
    let t = Instant::now();
    let v = vline_forward(&phantom, a.nphi, &psi, &q)?;
    let x = xray_forward(&phantom, a.nphi, &psi, &q)?;
    let forward_s = t.elapsed().as_secs_f64();
    let vn = add_noise(&v, a.noise, a.seed)?;
    let xn = add_noise(&x, a.noise, a.seed)?;

    let mut clean_cfg = VlineInversionConfig::for_sinogram(&v, 0.005);
    clean_cfg.output_size = a.n;
    let noisy_cfg = VlineInversionConfig { epsilon: 0.05, ..clean_cfg.clone() };
    let (clean, clean_s) = timed(&mut || invert_vline(&v, &clean_cfg))?;
    let (noisy, noisy_s) = timed(&mut || invert_vline(&vn, &noisy_cfg))?;
    let (xclean, xclean_s) = timed(&mut || invert_xray(&x, &clean_cfg))?;
    let (xnoisy, xnoisy_s) = timed(&mut || invert_xray(&xn, &noisy_cfg))?;

    // Errors exclude a band of width 1/m around the phantom's jumps.
    let keep = jump_band_mask(&phantom, 1.0 / clean_cfg.m as f64);
    let err = |img: &Image2D| relative_l2_masked(&img.values, &phantom.values, Some(&keep));

    let dir = &a.out_dir;
    write_pgm(&dir.join("phantom.pgm"), &phantom)?;
    std::fs::write(dir.join("sinogram.pgm"), encode_pgm(&v.data, v.n_psi(), v.n_phi, false))?;
    write_pgm(&dir.join("clean.pgm"), &clean)?;
    write_pgm(&dir.join("noisy.pgm"), &noisy)?;

    let report: Value = json!({
        "grid": { "n": a.n, "n_phi": a.nphi, "n_psi": a.npsi },
        "noise_level": a.noise,
        "seed": a.seed,
        "epsilon_clean": clean_cfg.epsilon,
        "epsilon_noisy": noisy_cfg.epsilon,
        "clean_error": err(&clean),
        "noisy_error": err(&noisy),
        "xray_clean_error": err(&xclean),
        "xray_noisy_error": err(&xnoisy),
        "runtime_s": {
            "forward": forward_s,
            "clean": clean_s,
            "noisy": noisy_s,
            "xray_clean": xclean_s,
            "xray_noisy": xnoisy_s,
        },
    });
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(dir.join("metrics.json"), text.clone() + "\n")?;
    println!("{text}");
    Ok(())
}
