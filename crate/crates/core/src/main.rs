use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use roombox::abstraction::MergeConfig;
use roombox::config::FileConfig;
use roombox::curation::{curate_files, CurationConfig};
use roombox::error::{Error, Result};
use roombox::mesh::{normalize, parse_obj_file};
use roombox::metrics::{metrics_report, DEFAULT_NIRATE_THRESHOLD};
use roombox::render::{render_raster, render_topdown, RenderSpec};
use roombox::retrieval::{rasterize_cuboids, retrieve_scene, CatalogEntry, RetrievalMode, ShapeCatalog};
use roombox::sampling::{
    fit_baseline, filter_candidates, derive_seed, rejection_loop, BaselineSamplerModel,
    IouAverage, RejectionConfig, SceneSampler,
};
use roombox::scene::{load_scene, save_scene, Scene};
use roombox::voxel::{fill_interior, voxelize_surface, DEFAULT_RESOLUTION};
use roombox::abstraction::abstract_shape;

#[derive(Parser)]
#[command(name = "roombox", version, about = "Cuboid shape abstraction and indoor scene layout toolkit")]
struct Cli {
    /// Load defaults from a TOML or JSON config file (flags win over it)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Cuboid,
    Bbox,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AvgArg {
    Nonzero,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize an OBJ mesh into a CVOX occupancy grid
    Voxelize {
        #[arg(long = "in")]
        input: PathBuf,
        /// Grid resolution per axis
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Keep only the surface voxels (skip interior filling)
        #[arg(long)]
        no_fill: bool,
    },
    /// Abstract an OBJ mesh into a cuboid-assembly JSON
    Abstract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        tau_min: Option<f64>,
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long)]
        scale_s: Option<f64>,
        /// Use a fixed threshold instead of the dynamic one
        #[arg(long)]
        tau_static: Option<f64>,
        /// Max rectangles for the floor-projection segmentation
        #[arg(long)]
        k: Option<usize>,
    },
    /// Drive cross-entity overlap in a scene directory to zero
    Curate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        clip: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        fd_step: Option<f64>,
        /// Summary JSON path (default: `<out>.summary.json`)
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Compute CIoU / NIRate / CKL over a scene directory
    Metrics {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Reference scenes for the CKL term (omitting it reports 0)
        #[arg(long)]
        reference: Option<PathBuf>,
        /// NIRate threshold on the scaled (x1000) CIoU
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Rewrite each object's model_id with its best catalog match
    Retrieve {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Cuboid)]
        mode: ModeArg,
        /// Output path (default: rewrite the scene file in place)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the rejection-sampling refinement loop
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// Directory of floor-plan JSON files (scene files work; objects
        /// are ignored)
        #[arg(long)]
        floors: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        min_accepted: Option<usize>,
        #[arg(long, value_enum, default_value_t = AvgArg::Nonzero)]
        avg_mode: AvgArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Room type to sample (default: the first floor file's)
        #[arg(long)]
        room_type: Option<String>,
        /// Scenes the model was fitted on; they seed the distilled set
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a scene as a top-down orthographic SVG
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        width: Option<u32>,
        #[arg(long)]
        height: Option<u32>,
        /// Also write a PNG from the same geometry
        #[arg(long)]
        raster: Option<PathBuf>,
    },
    /// Fit the baseline sampler model from a scene directory
    Fit {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a retrieval catalog from a directory of OBJ meshes named
    /// `<class>__<model_id>.obj`
    Catalog {
        #[arg(long)]
        meshes: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn list_files(dir: &Path, extension: &str) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(extension))
        .collect();
    files.sort();
    Ok(files)
}

fn load_scenes(dir: &Path) -> Result<Vec<Scene>> {
    list_files(dir, "json")?
        .iter()
        .map(load_scene)
        .collect()
}

fn merge_config_from(cfg: &FileConfig, n: usize) -> MergeConfig {
    let mut mc = MergeConfig::for_resolution(n);
    let a = &cfg.abstraction;
    if let Some(v) = a.tau_min {
        mc.tau_min = v;
    }
    if let Some(v) = a.tau_max {
        mc.tau_max = v;
    }
    if let Some(v) = a.scale_s {
        mc.scale_s = v;
    }
    if let Some(v) = a.use_dynamic {
        mc.use_dynamic = v;
    }
    if let Some(v) = a.tau_static {
        mc.tau_static = v;
    }
    if let Some(v) = a.max_segments_k {
        mc.max_segments_k = v;
    }
    mc
}

fn run(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };

    match cli.command {
        Command::Voxelize {
            input,
            n,
            out,
            no_fill,
        } => {
            let n = n.or(cfg.voxel.n).unwrap_or(DEFAULT_RESOLUTION);
            let (mesh, _) = normalize(&parse_obj_file(&input)?)?;
            let mut grid = voxelize_surface(&mesh, n)?;
            if !no_fill {
                grid = fill_interior(&grid);
            }
            grid.save_cvox(&out)?;
            println!(
                "voxelized {} at n={} ({} occupied) -> {}",
                input.display(),
                n,
                grid.occupancy_count(),
                out.display()
            );
        }

        Command::Abstract {
            input,
            n,
            out,
            tau_min,
            tau_max,
            scale_s,
            tau_static,
            k,
        } => {
            let n = n.or(cfg.voxel.n).unwrap_or(DEFAULT_RESOLUTION);
            let mut mc = merge_config_from(&cfg, n);
            if let Some(v) = tau_min {
                mc.tau_min = v;
            }
            if let Some(v) = tau_max {
                mc.tau_max = v;
            }
            if let Some(v) = scale_s {
                mc.scale_s = v;
            }
            if let Some(v) = tau_static {
                mc.tau_static = v;
                mc.use_dynamic = false;
            }
            if let Some(v) = k {
                mc.max_segments_k = v;
            }
            let (mesh, _) = normalize(&parse_obj_file(&input)?)?;
            let grid = fill_interior(&voxelize_surface(&mesh, n)?);
            let cuboids = abstract_shape(&grid, &mc)?;
            fs::write(&out, serde_json::to_vec_pretty(&cuboids)?)?;
            println!(
                "abstracted {} into {} cuboids -> {}",
                input.display(),
                cuboids.len(),
                out.display()
            );
        }

        Command::Curate {
            input,
            out,
            eta,
            clip,
            max_iters,
            epsilon,
            fd_step,
            summary,
        } => {
            let mut config = CurationConfig::default();
            let c = &cfg.curation;
            config.eta = eta.or(c.eta).unwrap_or(config.eta);
            config.clip_norm = clip.or(c.clip_norm).unwrap_or(config.clip_norm);
            config.max_iters = max_iters.or(c.max_iters).unwrap_or(config.max_iters);
            config.epsilon_stop = epsilon.or(c.epsilon_stop).unwrap_or(config.epsilon_stop);
            config.fd_step = fd_step.or(c.fd_step).unwrap_or(config.fd_step);
            config.validate()?;

            let paths = list_files(&input, "json")?;
            let (curated, summary_data) = curate_files(&paths, &config);
            fs::create_dir_all(&out)?;
            for (name, scene) in &curated {
                save_scene(scene, out.join(name))?;
            }
            let summary_path = summary.unwrap_or_else(|| {
                let stem = out
                    .file_name()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "curated".into());
                out.with_file_name(format!("{stem}.summary.json"))
            });
            fs::write(&summary_path, serde_json::to_vec_pretty(&summary_data)?)?;
            println!(
                "curated {} scenes ({} errors): NIRate {:?} -> {:?}; summary at {}",
                curated.len(),
                summary_data.errors.len(),
                summary_data.nirate_before,
                summary_data.nirate_after,
                summary_path.display()
            );
        }

        Command::Metrics {
            scenes,
            report,
            reference,
            threshold,
        } => {
            let threshold = threshold
                .or(cfg.metrics.nirate_threshold)
                .unwrap_or(DEFAULT_NIRATE_THRESHOLD);
            let scene_list = load_scenes(&scenes)?;
            let reference_list = reference.map(|dir| load_scenes(&dir)).transpose()?;
            let data = metrics_report(&scene_list, reference_list.as_deref(), threshold)?;
            fs::write(&report, serde_json::to_vec_pretty(&data)?)?;
            println!(
                "ciou {:.4}  nirate {:.2}  ckl {:.5}  over {} scenes -> {}",
                data.ciou,
                data.nirate,
                data.ckl,
                data.n_scenes,
                report.display()
            );
        }

        Command::Retrieve {
            scene,
            catalog,
            mode,
            out,
        } => {
            let mut s = load_scene(&scene)?;
            let cat = ShapeCatalog::load_dir(&catalog)?;
            let mode = match mode {
                ModeArg::Cuboid => RetrievalMode::Cuboid,
                ModeArg::Bbox => RetrievalMode::Bbox,
            };
            let results = retrieve_scene(&mut s, &cat, mode)?;
            let target = out.unwrap_or(scene);
            save_scene(&s, &target)?;
            for (obj, model, iou) in &results {
                println!("{obj} -> {model} (iou {iou:.4})");
            }
            println!("wrote {}", target.display());
        }

        Command::Sample {
            model,
            floors,
            k,
            threshold,
            rounds,
            min_accepted,
            avg_mode,
            seed,
            room_type,
            dataset,
            out,
        } => {
            let s = &cfg.sampling;
            let defaults = RejectionConfig::default();
            let k = k.or(s.k_candidates).unwrap_or(defaults.k_candidates);
            let mut config = RejectionConfig::new(
                k,
                threshold.or(s.t_threshold).unwrap_or(defaults.t_threshold),
                rounds.or(s.rounds).unwrap_or(defaults.rounds),
            );
            if let Some(m) = min_accepted.or(s.min_accepted) {
                config.min_accepted = m;
            }
            config.average = match avg_mode {
                AvgArg::Nonzero => IouAverage::NonzeroPairs,
                AvgArg::All => IouAverage::AllPairs,
            };

            let model = BaselineSamplerModel::load(&model)?;
            let floor_scenes: Vec<Scene> = load_scenes(&floors)?;
            if floor_scenes.is_empty() {
                return Err(Error::Sampling(format!(
                    "no floor files in {}",
                    floors.display()
                )));
            }
            let room_type =
                room_type.unwrap_or_else(|| floor_scenes[0].room_type.clone());
            let floor_plans: Vec<_> = floor_scenes.iter().map(|s| s.floor.clone()).collect();
            let initial = match dataset {
                Some(dir) => load_scenes(&dir)?,
                None => Vec::new(),
            };

            let outcome =
                rejection_loop(&model, &initial, &floor_plans, &room_type, &config, seed)?;

            fs::create_dir_all(&out)?;
            let mut reports = fs::File::create(out.join("reports.jsonl"))?;
            for r in &outcome.reports {
                writeln!(reports, "{}", serde_json::to_string(r)?)?;
            }
            outcome.model.save(out.join("model.json"))?;
            if let Some(shortfall) = &outcome.shortfall {
                println!(
                    "aborted in round {}: {} accepted < {} required",
                    shortfall.round, shortfall.accepted, shortfall.min_accepted
                );
            }

            // draw a final batch from the refined model and keep the
            // accepted scenes
            let final_round = (config.rounds + 1) as u64;
            let candidates: Vec<Scene> = (0..config.k_candidates)
                .map(|i| {
                    outcome.model.sample(
                        &floor_plans[i % floor_plans.len()],
                        &room_type,
                        derive_seed(seed, final_round, i as u64),
                    )
                })
                .collect::<Result<_>>()?;
            let (accepted, _) = filter_candidates(candidates, &config);
            for (i, scene) in accepted.iter().enumerate() {
                save_scene(scene, out.join(format!("scene_{i:05}.json")))?;
            }
            println!(
                "{} rounds, final batch accepted {}/{} -> {}",
                outcome.reports.len(),
                accepted.len(),
                config.k_candidates,
                out.display()
            );
        }

        Command::Render {
            scene,
            out,
            width,
            height,
            raster,
        } => {
            let mut spec = RenderSpec::default();
            spec.width = width.or(cfg.render.width).unwrap_or(spec.width);
            spec.height = height.or(cfg.render.height).unwrap_or(spec.height);
            if let Some(bg) = &cfg.render.background {
                spec.background = bg.clone();
            }
            let loaded = load_scene(&scene)?;
            let svg = render_topdown(&loaded, &spec)?;
            fs::write(&out, svg)?;
            if let Some(png) = &raster {
                let pixels = render_raster(&loaded, &spec)?;
                let buffer: image::RgbImage =
                    image::ImageBuffer::from_raw(spec.width, spec.height, pixels)
                        .expect("buffer sized by render_raster");
                buffer
                    .save(png)
                    .map_err(|e| Error::Config(format!("PNG encode failed: {e}")))?;
                println!("raster -> {}", png.display());
            }
            println!("rendered {} -> {}", scene.display(), out.display());
        }

        Command::Fit { scenes, out } => {
            let dataset = load_scenes(&scenes)?;
            let model = fit_baseline(&dataset)?;
            model.save(&out)?;
            println!(
                "fitted {} room types / {} classes from {} scenes -> {}",
                model.count_dist.len(),
                model.classes.len(),
                dataset.len(),
                out.display()
            );
        }

        Command::Catalog { meshes, out, n } => {
            let n = n.or(cfg.voxel.n).unwrap_or(DEFAULT_RESOLUTION);
            let mc = merge_config_from(&cfg, n);
            let mut entries = Vec::new();
            for path in list_files(&meshes, "obj")? {
                let stem = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let (class, model_id) = match stem.split_once("__") {
                    Some((c, m)) => (c.to_string(), m.to_string()),
                    None => {
                        return Err(Error::Config(format!(
                            "mesh file `{stem}.obj` is not named `<class>__<model_id>.obj`"
                        )))
                    }
                };
                let (mesh, _) = normalize(&parse_obj_file(&path)?)?;
                let grid = fill_interior(&voxelize_surface(&mesh, n)?);
                let cuboids = abstract_shape(&grid, &mc)?;
                // store the rasterized assembly so query and entry grids
                // share the same semantics and self-retrieval is exact
                let voxels = rasterize_cuboids(&cuboids, n)?;
                entries.push(CatalogEntry {
                    model_id,
                    class,
                    voxels,
                    cuboids,
                });
            }
            let catalog = ShapeCatalog::from_entries(entries)?;
            catalog.save_dir(&out)?;
            println!(
                "catalog with {} entries at n={} -> {}",
                catalog.entries().len(),
                n,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
