use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};

use chordsim::channelizer::{channelize, read_bank, write_bank, WidebandCapture};
use chordsim::decoder::{bits_to_hex, decode_pipeline, hex_to_bits};
use chordsim::harness::{
    ablation_sweep, channel_from_snapshots, decode_corpus, export_packets, gate_corpus, generate_corpus,
    import_packets, run_batch, simulate_capture, write_jsonl, CaptureData, CorpusConfig, GateConfig, PacketRecord,
    PipelineConfig, SceneSpec, SweepAxis,
};
use chordsim::locator::{classify_roi, localize, LocatorConfig};
use chordsim::model::Scene;
use chordsim::waveform::{
    build_packet_baseband, crest_factor, synth_multisine, write_wave, MultisineSpec, TagPacket,
};

#[derive(Parser)]
#[command(name = "chordsim", version, about = "Wideband backscatter RFID simulation, decoding and localization")]
struct Cli {
    /// Pipeline configuration (JSON); missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the effective configuration.
    Config,
    /// Simulate tag uplinks into wideband captures or channel banks.
    Simulate {
        /// Scene JSON; a generated corpus is used when absent.
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        scenes: usize,
        /// Emit wideband captures instead of channel banks.
        #[arg(long)]
        wideband: bool,
    },
    /// Split wideband captures into per-carrier channel banks.
    Channelize {
        #[arg(required = true)]
        captures: Vec<PathBuf>,
        /// Model configuration (JSON) holding the carrier plan.
        #[arg(long)]
        plan: Option<PathBuf>,
    },
    /// Decode one packet from the channel banks of its antennas.
    Decode {
        #[arg(required = true)]
        banks: Vec<PathBuf>,
    },
    /// Localize decoded packet records.
    Localize {
        packets: PathBuf,
        /// Grid specification (JSON).
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Region of interest (JSON).
        #[arg(long)]
        prior: Option<PathBuf>,
        /// Also write each likelihood map.
        #[arg(long)]
        heatmap: bool,
    },
    /// Run simulate, decode and localize over a corpus and report errors.
    Evaluate {
        #[arg(long, default_value_t = 200)]
        scenes: usize,
        /// Use the ROI gate corpus and report miss and cross rates.
        #[arg(long)]
        gate: bool,
        /// Direct path only.
        #[arg(long)]
        single_path: bool,
    },
    /// Ablation sweeps over one decoded corpus.
    Sweep {
        #[arg(long, value_enum, default_values_t = [Axis::Bandwidth, Axis::Antennas, Axis::Algorithm])]
        axis: Vec<Axis>,
        #[arg(long, default_value_t = 200)]
        scenes: usize,
    },
    /// Render an excitation or tag waveform.
    Waveform {
        #[arg(long, value_enum, default_value_t = WaveKind::Multisine)]
        kind: WaveKind,
        #[arg(long, default_value_t = 1e-3)]
        duration_s: f64,
        /// EPC in hex for a tag waveform; random when absent.
        #[arg(long)]
        epc: Option<String>,
        /// Sample rate of a tag waveform.
        #[arg(long, default_value_t = 4e6)]
        rate_hz: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axis {
    Bandwidth,
    Antennas,
    Algorithm,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Self::Bandwidth => "bandwidth",
            Self::Antennas => "antennas",
            Self::Algorithm => "algorithm",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WaveKind {
    Multisine,
    Tag,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.model.validate()?;
    Ok(cfg)
}

fn corpus(cfg: &PipelineConfig, scenes: usize, single_path: bool) -> Result<Vec<Scene>> {
    let c = if single_path {
        CorpusConfig::single_path(scenes, cfg.seed)
    } else {
        CorpusConfig { scenes, seed: cfg.seed, ..CorpusConfig::default() }
    };
    Ok(generate_corpus(&c)?)
}

fn simulate(cfg: &PipelineConfig, out: &Path, scene: Option<&Path>, scenes: usize, wideband: bool) -> Result<()> {
    let scenes = match scene {
        Some(p) => vec![read_json::<Scene>(p)?],
        None => corpus(cfg, scenes, false)?,
    };
    let sim = chordsim::harness::SimConfig { fast_path: !wideband, ..cfg.sim.clone() };
    for (s, scene) in scenes.iter().enumerate() {
        let spec = SceneSpec {
            scene: scene.clone(),
            snr_db: cfg.snr_db,
            leak_db: cfg.leak_db,
            active_antennas: None,
            active_carriers: None,
        };
        for t in 0..scene.tags.len() {
            let dir = out.join(format!("scene{s}")).join(format!("tag{t}"));
            fs::create_dir_all(&dir)?;
            let cap = simulate_capture(&spec, &cfg.model.plan, &cfg.model.geometry, t, cfg.seed, &sim)?;
            match &cap.data {
                CaptureData::Wideband(caps) => {
                    for c in caps {
                        let wave = chordsim::waveform::BasebandWave {
                            samples: c.samples.clone(),
                            rate_hz: c.rate_hz,
                            start_s: c.start_s,
                        };
                        let meta = json!({ "antenna_id": c.antenna_id, "center_hz": c.center_hz });
                        write_wave(dir.join(format!("ant{}.cf32", c.antenna_id)), &wave, meta)?;
                    }
                }
                CaptureData::Channels(banks) => {
                    for b in banks {
                        write_bank(dir.join(format!("bank_ant{}", b.antenna_id)), b)?;
                    }
                }
            }
            write_json(
                &dir.join("truth.json"),
                &json!({
                    "epc": bits_to_hex(&cap.packet.epc_bits),
                    "position_m": scene.tags[t].position_m,
                    "packet": cap.packet,
                    "channel": cap.channel,
                }),
            )?;
            println!("{}", dir.display());
        }
    }
    write_json(&out.join("scenes.json"), &scenes)
}

fn run_channelize(cfg: &PipelineConfig, out: &Path, captures: &[PathBuf], plan: Option<&Path>) -> Result<()> {
    let plan = match plan {
        Some(p) => chordsim::model::ModelConfig::load(p)?.plan,
        None => cfg.model.plan.clone(),
    };
    fs::create_dir_all(out)?;
    for path in captures {
        let (wave, meta) = chordsim::waveform::read_wave(path)?;
        let antenna_id = meta["antenna_id"].as_u64().context("capture metadata lacks antenna_id")? as usize;
        let center_hz = meta["center_hz"].as_f64().unwrap_or(plan.capture_center_hz);
        let capture =
            WidebandCapture { samples: wave.samples, rate_hz: wave.rate_hz, center_hz, start_s: wave.start_s, antenna_id };
        let bank = channelize(&capture, &plan)?;
        let dir = out.join(format!("bank_ant{antenna_id}"));
        write_bank(&dir, &bank)?;
        println!("{}", dir.display());
    }
    Ok(())
}

fn run_decode(cfg: &PipelineConfig, out: &Path, dirs: &[PathBuf]) -> Result<()> {
    let banks = dirs
        .iter()
        .map(|d| {
            let d = if d.ends_with("manifest.json") { d.parent().unwrap_or(d) } else { d.as_path() };
            read_bank(d).with_context(|| format!("reading bank {}", d.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let packet = decode_pipeline(&banks, &cfg.model.plan, &cfg.model.geometry, &cfg.decoder)?;
    let ids: Vec<usize> = banks.iter().map(|b| b.antenna_id).collect();
    let record = PacketRecord::from_decoded(&packet, &ids);
    fs::create_dir_all(out)?;
    export_packets(&out.join("packets.jsonl"), std::slice::from_ref(&record))?;
    println!("{}", serde_json::to_string(&record)?);
    if !record.crc_ok {
        bail!("CRC check failed for EPC {}", record.epc);
    }
    Ok(())
}

fn run_localize(
    cfg: &PipelineConfig,
    out: &Path,
    packets: &Path,
    grid: Option<&Path>,
    prior: Option<&Path>,
    heatmap: bool,
) -> Result<()> {
    let mut locator = LocatorConfig { keep_heatmap: heatmap, ..cfg.locator.clone() };
    if let Some(g) = grid {
        locator.grid = read_json(g)?;
    }
    if let Some(p) = prior {
        locator.prior = read_json(p)?;
    }
    let records = import_packets(packets)?;
    fs::create_dir_all(out)?;
    let mut rows = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let (ch, _) = channel_from_snapshots(&r.to_snapshots(), &cfg.model)?;
        let e = localize(&ch, &locator)?;
        let row = json!({
            "epc": r.epc,
            "x": e.position_m[0],
            "y": e.position_m[1],
            "likelihood": e.likelihood,
            "enhancement_applied": e.enhancement_applied,
            "roi": classify_roi(&e, &locator.prior),
        });
        println!("{row}");
        rows.push(row);
        if let Some(map) = &e.heatmap {
            write_json(&out.join(format!("heatmap_{i}.json")), map)?;
        }
    }
    write_jsonl(&out.join("locations.jsonl"), &rows)?;
    Ok(())
}

fn run_evaluate(cfg: &PipelineConfig, out: &Path, scenes: usize, gate: bool, single_path: bool) -> Result<()> {
    let run = if gate {
        let g = GateConfig { scenes, ..GateConfig::default() };
        let (scenes, labels) = gate_corpus(&g)?;
        let mut cfg = cfg.clone();
        cfg.locator.prior.range_m = g.roi_range_m;
        run_batch(&scenes, Some(&labels), &cfg)?
    } else {
        run_batch(&corpus(cfg, scenes, single_path)?, None, cfg)?
    };
    fs::create_dir_all(out)?;
    write_json(&out.join("report.json"), &run.report)?;
    write_json(&out.join("timing.json"), &run.timing)?;
    let r = &run.report;
    println!(
        "{}",
        json!({
            "tags": r.tags,
            "located": r.located,
            "failures": r.failures,
            "errors": r.errors,
            "roi": r.roi,
            "throughput_pps": run.timing.throughput_pps,
            "config_digest": r.config_digest,
        })
    );
    Ok(())
}

fn run_sweep(cfg: &PipelineConfig, out: &Path, axes: &[Axis], scenes: usize) -> Result<()> {
    let (decoded, _) = decode_corpus(&corpus(cfg, scenes, false)?, cfg)?;
    fs::create_dir_all(out)?;
    for a in axes {
        let axis: SweepAxis = a.name().parse()?;
        let table = ablation_sweep(&decoded, &axis, &cfg.locator)?;
        fs::write(out.join(format!("sweep_{}.csv", a.name())), table.to_csv())?;
        write_json(&out.join(format!("sweep_{}.json", a.name())), &table)?;
        print!("{}", table.to_csv());
    }
    Ok(())
}

fn run_waveform(
    cfg: &PipelineConfig,
    out: &Path,
    kind: WaveKind,
    duration_s: f64,
    epc: Option<&str>,
    rate_hz: f64,
) -> Result<()> {
    fs::create_dir_all(out)?;
    match kind {
        WaveKind::Multisine => {
            let spec = MultisineSpec { plan: &cfg.model.plan, duration_s, amplitude: 1.0 };
            let wave = synth_multisine(&spec)?;
            let cf = crest_factor(&wave)?;
            let path = out.join("multisine.cf32");
            write_wave(&path, &wave, json!({ "kind": "multisine", "crest_factor": cf }))?;
            println!("{}", json!({ "path": path, "crest_factor": cf.ratio, "papr_db": cf.papr_db }));
        }
        WaveKind::Tag => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let epc = match epc {
                Some(h) => hex_to_bits(h)?,
                None => (0..cfg.sim.epc_len_bits).map(|_| rng.random()).collect(),
            };
            let mut pkt = TagPacket::new((0..16).map(|_| rng.random()).collect(), epc);
            pkt.blf_hz = cfg.sim.blf_hz;
            pkt.miller_m = cfg.sim.miller_m;
            pkt.gap_s = cfg.sim.gap_s;
            pkt.preamble = cfg.sim.preamble;
            let wave = build_packet_baseband(&pkt, rate_hz)?;
            let path = out.join("tag.cf32");
            write_wave(&path, &wave, json!({ "kind": "tag", "epc": bits_to_hex(&pkt.epc_bits) }))?;
            println!("{}", json!({ "path": path, "samples": wave.samples.len() }));
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Config => {
            fs::create_dir_all(out)?;
            write_json(&out.join("config.json"), &cfg)?;
            println!("{}", out.join("config.json").display());
            Ok(())
        }
        Command::Simulate { scene, scenes, wideband } => simulate(&cfg, out, scene.as_deref(), *scenes, *wideband),
        Command::Channelize { captures, plan } => run_channelize(&cfg, out, captures, plan.as_deref()),
        Command::Decode { banks } => run_decode(&cfg, out, banks),
        Command::Localize { packets, grid, prior, heatmap } => {
            run_localize(&cfg, out, packets, grid.as_deref(), prior.as_deref(), *heatmap)
        }
        Command::Evaluate { scenes, gate, single_path } => run_evaluate(&cfg, out, *scenes, *gate, *single_path),
        Command::Sweep { axis, scenes } => run_sweep(&cfg, out, axis, *scenes),
        Command::Waveform { kind, duration_s, epc, rate_hz } => {
            run_waveform(&cfg, out, *kind, *duration_s, epc.as_deref(), *rate_hz)
        }
    }
}
