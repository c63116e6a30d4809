use std::io::Write;
use std::path::PathBuf;

use loadlens::ingest::{write_accel, write_rr};
use loadlens::synth::{gen_accel, gen_rr_labeled, gen_sessions, write_sessions, GenConfig, IntensityClass, Protocol};

use crate::analysis::create;
use crate::failure::{CmdResult, OrFail};
use crate::manifest::{beside, Manifest};
use crate::{SynthAccelArgs, SynthRrArgs, SynthSessionsArgs};

pub fn sessions(args: &SynthSessionsArgs) -> CmdResult {
    let sessions = gen_sessions(args.n, args.seed).or_fail("invalid --n")?;
    let written = write_sessions(&args.out, &sessions).or_fail("cannot write sessions")?;
    log::info!("{} sessions, {} files -> {}", sessions.len(), written.len(), args.out.display());
    Manifest::new("synth sessions", Some(args.seed), args)
        .outputs(written.iter().map(PathBuf::as_path))?
        .write(&args.out.join("manifest.json"))
}

pub fn rr(args: &SynthRrArgs) -> CmdResult {
    let protocol = Protocol::preset(&args.protocol).or_fail("invalid --protocol")?;
    let labeled = gen_rr_labeled(&protocol, &GenConfig::with_seed(args.seed)).or_fail("generation failed")?;
    let samples: Vec<_> = labeled.iter().map(|p| p.0).collect();
    let mut w = create(&args.out)?;
    write_rr(&mut w, &samples)
        .and_then(|_| w.flush())
        .or_fail(format!("cannot write {}", args.out.display()))?;
    drop(w);
    let mut outputs = vec![args.out.clone()];
    if let Some(path) = &args.phases {
        let mut w = create(path)?;
        let mut write = || -> std::io::Result<()> {
            writeln!(w, "t_ms,phase")?;
            for (s, p) in &labeled {
                writeln!(w, "{},{}", s.t_ms, p)?;
            }
            w.flush()
        };
        write().or_fail(format!("cannot write {}", path.display()))?;
        outputs.push(path.clone());
    }
    Manifest::new("synth rr", Some(args.seed), args)
        .outputs(outputs.iter().map(PathBuf::as_path))?
        .write(&beside(&args.out))
}

pub fn accel(args: &SynthAccelArgs) -> CmdResult {
    let class: IntensityClass = args.class.parse().or_fail("invalid --class")?;
    let samples = gen_accel(class, args.duration, &GenConfig::with_seed(args.seed)).or_fail("generation failed")?;
    let mut w = create(&args.out)?;
    write_accel(&mut w, &samples)
        .and_then(|_| w.flush())
        .or_fail(format!("cannot write {}", args.out.display()))?;
    drop(w);
    Manifest::new("synth accel", Some(args.seed), args)
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}
