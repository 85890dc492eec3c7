use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use gft_core::classes::{build_gk, logderiv_identity_residual, reduce_gk, Candidate};
use gft_core::generators::{seeded_member, GeneratorSeed};
use gft_core::sweep::{self, member_degree, SweepConfig};
use gft_core::theorems::{self, lemma5_nonvanishing};
use gft_core::{ClassParams, Error, SamplingPolicy, TruncatedSeries};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{BoundsArgs, CheckArgs, ClassArgs, GkArgs, PolicyArgs, SynthArgs, VerifyAllArgs};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    NonMember,
    InputError,
    Inconsistent,
}

impl Verdict {
    pub fn code(self) -> u8 {
        match self {
            Verdict::Pass => 0,
            Verdict::NonMember => 1,
            Verdict::InputError => 2,
            Verdict::Inconsistent => 3,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Value,
    pub results: Vec<Value>,
    pub policy: SamplingPolicy,
    pub elapsed_ms: u64,
}

impl RunReport {
    fn new(command: &str, inputs: Value, results: Vec<Value>, policy: SamplingPolicy, start: Instant) -> Self {
        Self {
            command: command.to_string(),
            inputs,
            results,
            policy,
            elapsed_ms: start.elapsed().as_millis() as u64,
        }
    }
}

type Outcome = Result<(RunReport, Verdict)>;

fn tagged(kind: &str, value: impl Serialize) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    match v.as_object_mut() {
        Some(map) => {
            map.insert("kind".into(), json!(kind));
            Ok(v)
        }
        None => Ok(json!({ "kind": kind, "value": v })),
    }
}

fn read_series(path: &Path) -> Result<TruncatedSeries> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {} as a series", path.display()))
}

fn params(c: &ClassArgs) -> Result<ClassParams> {
    Ok(ClassParams::new(c.p, c.k, c.gamma)?)
}

pub fn resolve_policy(args: &PolicyArgs) -> Result<SamplingPolicy> {
    let mut policy = match &args.policy_file {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading policy {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing policy {}", path.display()))?
        }
        None => SamplingPolicy::default(),
    };
    match (&args.radii, args.rmax) {
        (Some(radii), rmax) => {
            policy.radii = radii.clone();
            policy.r_max = rmax.unwrap_or_else(|| radii.iter().copied().fold(0.0, f64::max));
        }
        (None, Some(rmax)) => {
            policy.radii.retain(|&r| r < rmax);
            policy.radii.push(rmax);
            policy.r_max = rmax;
        }
        (None, None) => {}
    }
    if let Some(m) = args.angles {
        policy.angles_per_circle = m;
    }
    if let Some(t) = args.tol {
        policy.margin_tol = t;
    }
    policy.validate()?;
    Ok(policy)
}

pub fn check(args: &CheckArgs) -> Outcome {
    let start = Instant::now();
    let policy = resolve_policy(&args.policy)?;
    let params = params(&args.class)?;
    let f = read_series(&args.f)?;
    let g = read_series(&args.g)?;
    let inputs = json!({
        "f": f, "g": g, "params": params,
        "zeta_samples": args.policy.zeta_samples,
    });
    let cand = Candidate::new(&f, &g, &params)?;
    let membership = match cand.membership(&policy) {
        Ok(r) => r,
        Err(Error::NotStarlike { order, margin, witness }) => {
            let result = json!({
                "kind": "starlike", "order": order, "holds": false,
                "min_margin": margin, "witness": witness,
            });
            return Ok((RunReport::new("check", inputs, vec![result], policy, start), Verdict::NonMember));
        }
        Err(e) => return Err(e.into()),
    };
    let member = membership.holds();
    let schwarz = cand.schwarz(&policy)?;
    let nonvanishing = lemma5_nonvanishing(&cand.f, &cand.big_gk, &params, &policy, args.policy.zeta_samples)?;

    let consistent = membership.disagreements == 0
        && membership.modulus.holds == member
        && schwarz.certified == member
        && nonvanishing.nonvanishing == member;
    let results = vec![
        tagged("starlike", json!({ "order": params.starlike_order(), "report": membership.starlike }))?,
        tagged("membership", &membership)?,
        tagged(
            "schwarz",
            json!({
                "max_modulus": schwarz.max_modulus,
                "witness": schwarz.witness,
                "certified": schwarz.certified,
                "vanishes_at_origin": schwarz.vanishes_at_origin,
                "w": schwarz.w,
            }),
        )?,
        tagged("nonvanishing", &nonvanishing)?,
        json!({ "kind": "consistency", "consistent": consistent, "member": member }),
    ];
    let verdict = match (consistent, member) {
        (false, _) => Verdict::Inconsistent,
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::NonMember,
    };
    Ok((RunReport::new("check", inputs, results, policy, start), verdict))
}

pub fn gk(args: &GkArgs) -> Outcome {
    let start = Instant::now();
    let policy = resolve_policy(&args.policy)?;
    let params = ClassParams::new(args.p, args.k, 0.0)?;
    let g = read_series(&args.g)?;
    let gk = build_gk(&g, &params)?;
    let big_gk = reduce_gk(&gk, &params)?;
    let residual = logderiv_identity_residual(&g, &params, &policy)?;
    let inputs = json!({ "g": g, "p": args.p, "k": args.k });
    let results = vec![json!({ "g_k": gk, "G_k": big_gk, "residual": residual })];
    Ok((RunReport::new("gk", inputs, results, policy, start), Verdict::Pass))
}

pub fn bounds(args: &BoundsArgs) -> Outcome {
    let start = Instant::now();
    let params = params(&args.class)?;
    let rows = args
        .r
        .iter()
        .map(|&r| theorems::bounds(&params, r, args.steps))
        .collect::<gft_core::Result<Vec<_>>>()?;
    if let Some(path) = &args.csv {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        for row in &rows {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    let inputs = json!({ "params": params, "r": args.r, "steps": args.steps, "csv": args.csv });
    let results = rows.iter().map(serde_json::to_value).collect::<serde_json::Result<Vec<_>>>()?;
    Ok((RunReport::new("bounds", inputs, results, SamplingPolicy::default(), start), Verdict::Pass))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn synth(args: &SynthArgs) -> Outcome {
    let start = Instant::now();
    let policy = resolve_policy(&args.policy)?;
    let params = params(&args.class)?;
    let gen = GeneratorSeed::new(args.seed, args.degree, args.beta)?;
    let config = SweepConfig { policy: policy.clone(), ..SweepConfig::default() };
    let n = args.n.unwrap_or_else(|| member_degree(&params, args.base.into(), &config));
    let member = seeded_member(&params, &gen, args.base.into(), n, &policy)
        .context("synthesizing a member (a larger truncation degree may help)")?;
    let report = Candidate::new(&member.f, &member.g, &params)?.membership(&policy)?;

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let certificate = json!({
        "params": params,
        "generator": gen,
        "base": gft_core::generators::BaseKind::from(args.base),
        "degree": n,
        "w": member.w,
        "membership": report,
    });
    write_json(&args.out_dir.join("f.json"), &member.f)?;
    write_json(&args.out_dir.join("g.json"), &member.g)?;
    write_json(&args.out_dir.join("certificate.json"), &certificate)?;

    let inputs = json!({
        "seed": args.seed, "params": params, "degree": args.degree, "beta": args.beta,
        "n": n, "base": gft_core::generators::BaseKind::from(args.base), "out_dir": args.out_dir,
    });
    let verdict = if report.holds() { Verdict::Pass } else { Verdict::Inconsistent };
    let results = vec![tagged("membership", &report)?];
    Ok((RunReport::new("synth", inputs, results, policy, start), verdict))
}

pub fn verify_all(args: &VerifyAllArgs) -> Outcome {
    let start = Instant::now();
    let policy = resolve_policy(&args.policy)?;
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let mut grid = Vec::new();
    for &p in &args.p {
        for &k in &args.k {
            for &frac in &args.gamma_fractions {
                grid.push(ClassParams::new(p, k, f64::from(p) * frac)?);
            }
        }
    }
    GeneratorSeed::new(0, args.schwarz_degree, args.beta)?;
    let config = SweepConfig {
        seeds_per_cell: args.seeds,
        base_seed: args.base_seed,
        degree: args.degree,
        schwarz_degree: args.schwarz_degree,
        beta: args.beta,
        zeta_samples: args.policy.zeta_samples,
        steps: args.policy.steps,
        corrupt: args.corrupt,
        policy: policy.clone(),
    };
    let report = sweep::verify_all(&grid, &config);
    for f in &report.failures {
        eprintln!(
            "FAIL {:?} cell {} (p={}, k={}, gamma={}) seed {} margin {:e}{}",
            f.check,
            f.cell,
            f.params.p(),
            f.params.k(),
            f.params.gamma(),
            f.seed,
            f.margin,
            f.witness.map(|w| format!(" at {w}")).unwrap_or_default()
        );
    }
    let mut results = Vec::new();
    for s in &report.summary {
        results.push(tagged("summary", s)?);
    }
    for f in &report.failures {
        results.push(tagged("failure", f)?);
    }
    for c in &report.cells {
        results.push(tagged("cell", c)?);
    }
    let inputs = json!({
        "seeds": args.seeds, "base_seed": args.base_seed, "corrupt": args.corrupt,
        "degree": args.degree, "schwarz_degree": args.schwarz_degree, "beta": args.beta,
        "p": args.p, "k": args.k, "gamma_fractions": args.gamma_fractions,
        "zeta_samples": args.policy.zeta_samples, "steps": args.policy.steps,
    });
    let verdict = if report.all_passed { Verdict::Pass } else { Verdict::Inconsistent };
    Ok((RunReport::new("verify-all", inputs, results, policy, start), verdict))
}
