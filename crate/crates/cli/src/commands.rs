use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

/// `println!` that tolerates a closed stdout.
macro_rules! out {
    ($($arg:tt)*) => {
        match writeln!(io::stdout().lock(), $($arg)*) {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            r => r?,
        }
    };
}

use radio_bcast::analysis::{
    max_reception_fraction, reception_table, throughput_estimate, write_curve_csv,
    write_reception_csv, SubsetScan, DEFAULT_SUBSET_CAP,
};
use radio_bcast::protocols::{
    pipelined_broadcast, write_runs_csv, DecayConfig, InnerProtocol, PhasedCodingConfig,
    PipelinePlan,
};
use radio_bcast::sts::{
    coverage_probability, covers, partition_sts, prefix_sts, range_sts, CoverageMode,
    DEFAULT_COVERAGE_CAP,
};
use radio_bcast::synthesis::{
    record_delivery, routing_throughput, sts_to_schedule, SynthMode, DEFAULT_SYNTH_CAP,
};
use radio_bcast::topology::{
    attach_source, default_halfdense_receivers, default_num_classes, gen_class_family,
    gen_halfdense_family, layered_gadget, path_graph,
};
use radio_bcast::{run_protocol, BipartiteNetwork, ProtocolSpec, RadioGraph, RunResult, Sts};
use serde_json::{json, Value};

use crate::opts::{
    Command, Generate, InnerArg, ProbModeArg, ProtoFlags, Protocol, RunArgs, ScanModeArg, StsCmd,
    StsKind, StsSource, SynthModeArg, Verify,
};
use crate::CliError;

type CliResult<T = ()> = Result<T, CliError>;

/// Environment variable overriding every factorial/exponential cap.
pub const CAP_ENV: &str = "RADIO_BCAST_EXACT_CAP";

fn cap(default: u32) -> CliResult<u32> {
    match std::env::var(CAP_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Usage(format!(
                "{CAP_ENV} must be a non-negative integer, got {v:?}"
            ))
        }),
        Err(_) => Ok(default),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need_seed(seed: Option<u64>, what: &str) -> CliResult<u64> {
    seed.ok_or_else(|| usage(format!("--seed is required for {what}")))
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn load_net(path: &Path) -> CliResult<BipartiteNetwork> {
    Ok(BipartiteNetwork::from_json(&read(path)?)?)
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Generate(g) => generate(g),
        Command::Run(r) => run(r),
        Command::Sts(s) => sts(s),
        Command::Verify(v) => verify(v),
    }
}

fn net_summary(net: &BipartiteNetwork) -> String {
    format!(
        "eta={} receivers={} delta={} Delta={}",
        net.eta(),
        net.num_receivers(),
        net.min_degree().unwrap_or(0),
        net.max_degree().unwrap_or(0)
    )
}

fn generate(g: Generate) -> CliResult {
    match g {
        Generate::Class {
            n_prime,
            classes,
            seed,
            output,
        } => {
            let classes = classes.unwrap_or_else(|| default_num_classes(n_prime));
            let net = gen_class_family(n_prime, classes, seed)?;
            write_text(&output, &net.to_json()?)?;
            out!("{} -> {}", net_summary(&net), output.display());
        }
        Generate::Halfdense {
            eta,
            receivers,
            seed,
            output,
        } => {
            let receivers = receivers.unwrap_or_else(|| default_halfdense_receivers(eta));
            let net = gen_halfdense_family(eta, receivers, seed)?;
            write_text(&output, &net.to_json()?)?;
            out!("{} -> {}", net_summary(&net), output.display());
        }
        Generate::Gadget { depth, output } => write_graph(&layered_gadget(depth), &output)?,
        Generate::Path { len, output } => write_graph(&path_graph(len), &output)?,
    }
    Ok(())
}

fn write_graph(g: &RadioGraph, output: &Path) -> CliResult {
    write_text(output, &g.to_json()?)?;
    out!(
        "nodes={} edges={} depth={} -> {}",
        g.node_count(),
        g.edges().len(),
        g.bfs_layers()?.len().saturating_sub(1),
        output.display()
    );
    Ok(())
}

/// Builds the STS named by `src` for `eta` senders; degree defaults come
/// from `net`. Returns the STS and a description for the config echo.
fn resolve_sts(
    src: &StsSource,
    eta: Option<u32>,
    seed: Option<u64>,
    net: Option<&BipartiteNetwork>,
) -> CliResult<(Sts, Value)> {
    if let Some(file) = &src.file {
        let s = Sts::from_json(&read(file)?)?;
        return Ok((s, json!({"file": file.display().to_string()})));
    }
    let kind = src
        .sts
        .ok_or_else(|| usage("one of --sts or --file is required"))?;
    let eta = eta
        .or_else(|| net.map(BipartiteNetwork::eta))
        .ok_or_else(|| usage("--eta is required"))?;
    let net_min = net.and_then(|n| n.min_degree()).map(|d| d as u32);
    let net_max = net.and_then(|n| n.max_degree()).map(|d| d as u32);
    match kind {
        StsKind::Prefix => Ok((prefix_sts(eta), json!({"kind": "prefix", "eta": eta}))),
        StsKind::Range => {
            let delta = src
                .delta
                .or(net_min)
                .ok_or_else(|| usage("--delta is required for the range STS"))?;
            let max_degree = src
                .max_degree
                .or(net_max)
                .ok_or_else(|| usage("--max-degree is required for the range STS"))?;
            let seed = need_seed(seed, "the range STS")?;
            Ok((
                range_sts(eta, delta, max_degree, seed)?,
                json!({"kind": "range", "eta": eta, "delta": delta, "max_degree": max_degree, "seed": seed}),
            ))
        }
        StsKind::Partition => {
            let max_degree = src
                .max_degree
                .or(net_max.map(|d| d.min(eta.saturating_sub(1))))
                .ok_or_else(|| usage("--max-degree is required for the partition STS"))?;
            Ok((
                partition_sts(eta, max_degree)?,
                json!({"kind": "partition", "eta": eta, "max_degree": max_degree}),
            ))
        }
    }
}

fn synth_mode(mode: SynthModeArg, num_perms: u64, seed: Option<u64>) -> CliResult<SynthMode> {
    Ok(match mode {
        SynthModeArg::Exact => SynthMode::Exact {
            cap: cap(DEFAULT_SYNTH_CAP)?,
        },
        SynthModeArg::Sampled => SynthMode::Sampled {
            num_perms,
            seed: need_seed(seed, "sampled synthesis")?,
        },
    })
}

/// The protocol spec for a bipartite run plus extra fields for the echo.
fn build_spec(
    protocol: Protocol,
    f: &ProtoFlags,
    net: &BipartiteNetwork,
) -> CliResult<(ProtocolSpec, Value)> {
    let n = net.node_count();
    let name = protocol_name(protocol);
    let decay = |seed: u64| {
        let mut cfg = DecayConfig::defaults_for(n, seed);
        cfg.outer = f.outer.unwrap_or(cfg.outer);
        cfg.inner = f.inner.unwrap_or(cfg.inner);
        cfg.reps = f.reps.unwrap_or(cfg.reps);
        cfg.payload_len = f.payload_len.unwrap_or(cfg.payload_len);
        cfg
    };
    let coded = |seed: u64| {
        let mut cfg = PhasedCodingConfig::defaults_for(n, seed);
        cfg.block_size = f.block_size.unwrap_or(cfg.block_size);
        cfg.phase_lo = f.phase_lo.unwrap_or(cfg.phase_lo);
        cfg.phase_hi = f.phase_hi.unwrap_or(cfg.phase_hi);
        cfg.rounds_per_phase = f.rounds_per_phase.unwrap_or(cfg.rounds_per_phase);
        cfg.budget_bits = f.budget_bits.unwrap_or(cfg.budget_bits);
        cfg.payload_len = f.payload_len.unwrap_or(cfg.payload_len);
        cfg.stop_when_decoded = f.stop_when_decoded;
        cfg
    };
    Ok(match protocol {
        Protocol::Decay => (
            ProtocolSpec::Decay(decay(need_seed(f.seed, name)?)),
            Value::Null,
        ),
        Protocol::RepeatedDecay => (
            ProtocolSpec::RepeatedDecay(decay(need_seed(f.seed, name)?)),
            Value::Null,
        ),
        Protocol::Coded => (
            ProtocolSpec::Coded(coded(need_seed(f.seed, name)?)),
            Value::Null,
        ),
        Protocol::RangeCoded => {
            let cfg = coded(need_seed(f.seed, name)?);
            let delta = f
                .sts
                .delta
                .map(|d| d as usize)
                .or(net.min_degree())
                .unwrap_or(1);
            let max_degree = f
                .sts
                .max_degree
                .map(|d| d as usize)
                .or(net.max_degree())
                .unwrap_or(1);
            (
                ProtocolSpec::RangeCoded {
                    cfg,
                    delta,
                    max_degree,
                },
                Value::Null,
            )
        }
        Protocol::StsRouting => {
            let mut src = f.sts.clone();
            if src.sts.is_none() && src.file.is_none() {
                src.sts = Some(StsKind::Prefix);
            }
            let (sts, echo) = resolve_sts(&src, Some(net.eta()), f.seed, Some(net))?;
            let mode = synth_mode(f.mode, f.num_perms, f.seed)?;
            (ProtocolSpec::StsRouting { sts, mode }, json!({"sts": echo}))
        }
        Protocol::Pipelined => {
            return Err(usage(
                "pipelined runs on a general graph; use `run pipelined`",
            ))
        }
    })
}

fn protocol_name(p: Protocol) -> &'static str {
    match p {
        Protocol::Decay => "decay",
        Protocol::RepeatedDecay => "repeated-decay",
        Protocol::Coded => "coded",
        Protocol::RangeCoded => "range-coded",
        Protocol::StsRouting => "sts-routing",
        Protocol::Pipelined => "pipelined",
    }
}

fn merge_echo(config: &mut Value, extra: Value) {
    if let (Value::Object(dst), Value::Object(src)) = (config, extra) {
        for (k, v) in src {
            dst.entry(k).or_insert(v);
        }
    }
}

fn summary(r: &RunResult) -> String {
    let mut s = format!(
        "protocol={} k={} rounds={} delivered={} throughput={} ({:.6}) complete={}",
        r.protocol,
        r.k,
        r.rounds,
        r.delivered_to_all,
        r.throughput,
        r.throughput_f64(),
        r.complete
    );
    if let Some(c) = r.config.get("cycle_throughput").and_then(Value::as_str) {
        s.push_str(&format!(" cycle_throughput={c}"));
    }
    s
}

fn run(args: RunArgs) -> CliResult {
    let f = &args.flags;
    if args.protocol == Protocol::Pipelined {
        let (g, source) = match (&args.graph, &args.net) {
            (Some(p), None) => (RadioGraph::from_json(&read(p)?)?, p.clone()),
            (None, Some(p)) => (attach_source(&load_net(p)?), p.clone()),
            _ => return Err(usage("pipelined needs exactly one of --graph or --net")),
        };
        let plan = PipelinePlan {
            batch_size: f.batch_size,
            spacing: f.spacing,
            inner: match f.hop {
                InnerArg::Tdma => InnerProtocol::Tdma,
                InnerArg::PrefixSts => InnerProtocol::PrefixSts,
            },
            synth_cap: cap(DEFAULT_SYNTH_CAP)?,
        };
        let mut report = pipelined_broadcast(&g, args.k, &plan)?;
        merge_echo(
            &mut report.result.config,
            json!({"graph_file": source.display().to_string()}),
        );
        let text = serde_json::to_string_pretty(&report)?;
        return emit(args.output.as_deref(), &report.result, &text, || {
            format!(
                "{} slots={} rounds_per_batch={} bound={} inter_pair_collisions={}",
                summary(&report.result),
                report.slots,
                report.rounds_per_batch,
                report.bound,
                report.inter_pair_collisions
            )
        });
    }
    let net_path = args
        .net
        .as_ref()
        .ok_or_else(|| usage("--net is required"))?;
    let net = load_net(net_path)?;
    let (spec, echo) = build_spec(args.protocol, f, &net)?;
    let mut result = run_protocol(&spec, &net, args.k)?;
    merge_echo(&mut result.config, echo);
    merge_echo(
        &mut result.config,
        json!({"net_file": net_path.display().to_string(), "network": net.name()}),
    );
    let text = result.to_json()?;
    emit(args.output.as_deref(), &result, &text, || summary(&result))
}

fn emit(
    output: Option<&Path>,
    result: &RunResult,
    json_text: &str,
    line: impl FnOnce() -> String,
) -> CliResult {
    match output {
        None => out!("{json_text}"),
        Some(path) => {
            if is_csv(path) {
                let file = fs::File::create(path)?;
                write_runs_csv(file, std::slice::from_ref(result))?;
                write_text(&sidecar(path), json_text)?;
            } else {
                write_text(path, json_text)?;
            }
            out!("{}", line());
        }
    }
    Ok(())
}

/// `<path>.config.json`, holding the resolved configuration next to a CSV.
fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

fn sts(cmd: StsCmd) -> CliResult {
    match cmd {
        StsCmd::Build {
            sts,
            eta,
            delta,
            max_degree,
            seed,
            output,
        } => {
            let src = StsSource {
                sts: Some(sts),
                file: None,
                delta,
                max_degree,
            };
            let (s, _) = resolve_sts(&src, Some(eta), seed, None)?;
            let text = s.to_json()?;
            match output {
                Some(p) => {
                    write_text(&p, &text)?;
                    out!(
                        "rounds={} weight={} -> {}",
                        s.len(),
                        s.weight::<radio_bcast::Rational>(),
                        p.display()
                    );
                }
                None => out!("{text}"),
            }
        }
        StsCmd::Weight { source, eta, seed } => {
            let (s, _) = resolve_sts(&source, eta, seed, None)?;
            let w = s.weight::<radio_bcast::Rational>();
            let label = match (source.sts, source.file.is_none()) {
                (Some(StsKind::Prefix), true) => format!("H_{}", s.len()),
                _ => "W".to_string(),
            };
            out!("{label} = {w}");
            out!("~ {:.12}", s.weight::<f64>());
        }
        StsCmd::Cover { source, net, seed } => {
            let net = load_net(&net)?;
            let (s, _) = resolve_sts(&source, None, seed, Some(&net))?;
            s.check_eta(net.eta())?;
            let report = covers(&s, &net);
            out!("{}", serde_json::to_string_pretty(&report)?);
            out!(
                "covered {}/{} receivers",
                report.covered.len(),
                net.num_receivers()
            );
        }
        StsCmd::Prob {
            source,
            net,
            mode,
            trials,
            seed,
        } => {
            let net = load_net(&net)?;
            let (s, echo) = resolve_sts(&source, None, seed, Some(&net))?;
            let cmode = match mode {
                ProbModeArg::Exact => CoverageMode::Exact {
                    cap: cap(DEFAULT_COVERAGE_CAP)?,
                },
                ProbModeArg::MonteCarlo => CoverageMode::MonteCarlo {
                    trials,
                    seed: need_seed(seed, "Monte-Carlo coverage")?,
                },
            };
            let est = coverage_probability(&s, &net, cmode)?;
            let out = json!({
                "sts": echo,
                "mode": format!("{cmode:?}"),
                "estimate": est,
                "probability": est.probability().to_string(),
            });
            out!("{}", serde_json::to_string_pretty(&out)?);
        }
        StsCmd::Synth {
            source,
            eta,
            mode,
            num_perms,
            seed,
            net,
            output,
        } => {
            let net = net.as_deref().map(load_net).transpose()?;
            let mut source = source;
            if source.sts.is_none() && source.file.is_none() {
                source.sts = Some(StsKind::Prefix);
            }
            let (s, echo) = resolve_sts(&source, eta, seed, net.as_ref())?;
            let eta = eta
                .or(net.as_ref().map(BipartiteNetwork::eta))
                .unwrap_or_else(|| s.max_sender());
            let smode = synth_mode(mode, num_perms, seed)?;
            let (sched, mut plan) = sts_to_schedule(&s, eta, smode)?;
            let mut info = json!({
                "sts": echo,
                "eta": eta,
                "mode": format!("{smode:?}"),
                "rounds": plan.total_rounds(),
                "messages": plan.messages(),
            });
            if let Some(net) = &net {
                record_delivery(&mut plan, net)?;
                let t = routing_throughput(&plan)?;
                merge_echo(
                    &mut info,
                    json!({
                        "delivered": plan.delivered.as_ref().map_or(0, |d| d.len()),
                        "throughput": t.to_string(),
                    }),
                );
            }
            if let Some(p) = output {
                write_text(&p, &sched.to_json()?)?;
            }
            out!("{}", serde_json::to_string_pretty(&info)?);
        }
    }
    Ok(())
}

fn verify(cmd: Verify) -> CliResult {
    match cmd {
        Verify::Eq1 { n_prime, output } => {
            let rows = reception_table(n_prime)?;
            match output {
                Some(p) => {
                    write_reception_csv(fs::File::create(&p)?, &rows)?;
                    out!("{} rows -> {}", rows.len(), p.display());
                }
                None => write_reception_csv(io::stdout().lock(), &rows)?,
            }
        }
        Verify::Maxfrac {
            net,
            mode,
            trials,
            seed,
        } => {
            let net = load_net(&net)?;
            let scan = match mode {
                ScanModeArg::Exhaustive => SubsetScan::Exhaustive {
                    cap: cap(DEFAULT_SUBSET_CAP)?,
                },
                ScanModeArg::Sampled => SubsetScan::Sampled {
                    trials,
                    seed: need_seed(seed, "the sampled scan")?,
                },
            };
            let m = max_reception_fraction(&net, scan)?;
            let out = json!({
                "mode": format!("{scan:?}"),
                "best": m.best,
                "count": m.count,
                "receivers": m.receivers,
                "fraction": m.fraction().to_string(),
                "fraction_f64": m.fraction_f64(),
            });
            out!("{}", serde_json::to_string_pretty(&out)?);
        }
        Verify::Throughput {
            net: net_path,
            protocol,
            k,
            flags,
            output,
        } => {
            let net = load_net(&net_path)?;
            let (spec, echo) = build_spec(protocol, &flags, &net)?;
            let curve = throughput_estimate(&spec, &net, &k)?;
            let config = json!({
                "protocol": spec.name(),
                "net_file": net_path.display().to_string(),
                "network": net.name(),
                "k": k,
                "spec": format!("{spec:?}"),
                "extra": echo,
            });
            match output {
                Some(p) => {
                    write_curve_csv(fs::File::create(&p)?, &curve)?;
                    write_text(&sidecar(&p), &serde_json::to_string_pretty(&config)?)?;
                    out!("{} points -> {}", curve.points.len(), p.display());
                }
                None => {
                    write_curve_csv(io::stdout().lock(), &curve)?;
                    let mut err = io::stderr().lock();
                    writeln!(err, "{config}")?;
                }
            }
        }
    }
    Ok(())
}
