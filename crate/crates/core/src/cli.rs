//! Command execution behind the `padiso` binary.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use crate::atlas::IsoPipeline;
use crate::classify::{classify_to_kd, Classified};
use crate::dsl::{Command, Script};
use crate::error::{Error, Result};
use crate::padic::{Context, DEFAULT_PRECISION};
use crate::rectilinear::rectilinearize;
use crate::setmodel::{MonomialForm, SetDescriptor};
use crate::text::pipeline_file;
use crate::verify::{
    check_bijection, check_containment, check_partition, check_valuation_law, enumerate_lifts, show_point, Report,
    ResidueWindow,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_PRECISION: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

pub fn exit_code(e: &Error) -> i32 {
    match e {
        _ if e.is_precision() => EXIT_PRECISION,
        Error::AtStep { source, .. } => exit_code(source),
        Error::Parse { .. } | Error::UnboundName(_) => EXIT_PARSE,
        Error::Verification(_) => EXIT_VERIFICATION,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_PRECONDITION,
    }
}

#[derive(Clone, Debug)]
pub struct Flags {
    pub prime: Option<u32>,
    pub precision: u32,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub modulus: Option<u32>,
    pub out: Option<PathBuf>,
}

impl Default for Flags {
    fn default() -> Self {
        Flags {
            prime: None,
            precision: DEFAULT_PRECISION,
            samples: None,
            seed: None,
            modulus: None,
            out: None,
        }
    }
}

pub const DEFAULT_SAMPLES: usize = 1000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_MODULUS: u32 = 3;

fn io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Runs every command; `Ok(false)` when some verification failed.
pub fn run_script(script: &Script, flags: &Flags, out: &mut dyn Write) -> Result<bool> {
    let ctx = Context::new(script.prime, flags.precision)?;
    let mut saved = String::new();
    let mut ok = true;
    for cmd in &script.commands {
        match cmd {
            Command::Dim(name) => {
                let d = script.set(name)?.dimension(&ctx)?;
                writeln!(out, "dim {name} = {d}").map_err(io)?;
            }
            Command::Classify(name) => {
                let c = classify_to_kd(&ctx, script.set(name)?)?;
                let text = classified_text(&c);
                writeln!(out, "classify {name}: {text}").map_err(io)?;
                saved.push_str(&match &c {
                    Classified::Bijection(pl) => pipeline_file(ctx.p(), pl),
                    Classified::FinitePoints(_) => format!("prime {};\n{text}\n", ctx.p()),
                });
            }
            Command::Rectilinearize { set, forms } => {
                let forms = script.forms_named(forms)?;
                let parts = rectilinearize(&ctx, script.set(set)?, &forms)?;
                writeln!(out, "rectilinearize {set}: {} parts", parts.len()).map_err(io)?;
                for (i, p) in parts.iter().enumerate() {
                    let fs: Vec<String> = p.forms.iter().map(|f| f.to_string()).collect();
                    writeln!(
                        out,
                        "part {i}: l={} k={} forms [{}] {}",
                        p.l,
                        p.k,
                        fs.join(", "),
                        p.pipeline
                    )
                    .map_err(io)?;
                }
            }
            Command::Verify { set, options } => {
                let forms = script.forms_named(&options.forms)?;
                let settings = VerifySettings {
                    samples: flags.samples.or(options.samples).unwrap_or(DEFAULT_SAMPLES),
                    seed: flags.seed.or(options.seed).unwrap_or(DEFAULT_SEED),
                    modulus: flags.modulus.or(options.modulus).unwrap_or(DEFAULT_MODULUS),
                };
                writeln!(out, "verify {set}:").map_err(io)?;
                for r in verify_set(&ctx, script.set(set)?, &forms, &settings)? {
                    ok &= r.passed;
                    writeln!(out, "  {r}").map_err(io)?;
                }
            }
        }
    }
    if let Some(path) = &flags.out {
        fs::write(path, saved).map_err(io)?;
    }
    Ok(ok)
}

pub fn classified_text(c: &Classified) -> String {
    match c {
        Classified::Bijection(pl) => pl.to_string(),
        Classified::FinitePoints(pts) => {
            let pts: Vec<String> = pts.iter().map(|x| show_point(x)).collect();
            format!("points [{}]", pts.join(", "))
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifySettings {
    pub samples: usize,
    pub seed: u64,
    pub modulus: u32,
}

/// The full suite on one set: partition, part bijections and valuation
/// laws, then the classification bijection or the point list.
pub fn verify_set(ctx: &Context, x: &SetDescriptor, forms: &[MonomialForm], s: &VerifySettings) -> Result<Vec<Report>> {
    let mut reports = Vec::new();
    if x.is_finite(ctx)? {
        let Classified::FinitePoints(pts) = classify_to_kd(ctx, x)? else {
            return Err(Error::Shape("finite set classified as infinite".into()));
        };
        let w = ResidueWindow::fit(ctx.p(), x, s.modulus)?;
        let mut listed: Vec<Vec<u64>> = Vec::new();
        let coords = w.coordinate_residues(ctx.p());
        for pt in &pts {
            let t: Option<Vec<u64>> = pt
                .iter()
                .map(|c| {
                    c.to_integer()
                        .and_then(|n| u64::try_from(n).ok())
                        .filter(|n| coords.contains(n))
                })
                .collect();
            if let Some(t) = t {
                listed.push(t);
            }
        }
        listed.sort();
        let found = enumerate_lifts(ctx, x, &w)?;
        reports.push(Report {
            check: format!("finite points mod p^{}", w.m),
            passed: listed == found,
            checked: found.len(),
            counterexample: (listed != found).then(|| format!("listed {listed:?}, enumerated {found:?}")),
        });
        return Ok(reports);
    }
    let parts = rectilinearize(ctx, x, forms)?;
    match ResidueWindow::fit(ctx.p(), x, s.modulus) {
        Ok(w) => {
            let descs: Vec<SetDescriptor> = parts.iter().map(|p| p.part.clone()).collect();
            match check_partition(ctx, x, &descs, &w, 1, s.seed) {
                Ok(r) => reports.push(r),
                Err(e) => reports.push(skipped("partition", &e)),
            }
        }
        Err(e) => reports.push(skipped("partition", &e)),
    }
    let mut bij = Vec::new();
    let mut law = Vec::new();
    let mut inside = Vec::new();
    for (i, p) in parts.iter().enumerate() {
        let seed = s.seed.wrapping_add(i as u64);
        bij.push(check_bijection(ctx, &p.pipeline, s.samples, seed));
        law.push(check_valuation_law(ctx, p, s.samples, seed));
        inside.push(check_containment(ctx, &p.pipeline, x, s.samples, seed));
    }
    reports.push(combine(format!("containment of {} parts", parts.len()), inside));
    reports.push(combine(format!("bijection on {} parts", parts.len()), bij));
    reports.push(combine(format!("valuation law on {} parts", parts.len()), law));
    let Classified::Bijection(pl) = classify_to_kd(ctx, x)? else {
        return Err(Error::Shape("infinite set classified as finite".into()));
    };
    let mut r = check_bijection(ctx, &pl, s.samples, s.seed);
    r.check = format!("classification onto {}", pl.target);
    reports.push(r);
    Ok(reports)
}

fn skipped(check: &str, e: &Error) -> Report {
    Report {
        check: format!("{check} skipped ({e})"),
        passed: true,
        checked: 0,
        counterexample: None,
    }
}

fn combine(check: String, reports: Vec<Report>) -> Report {
    let checked = reports.iter().map(|r| r.checked).sum();
    let failed = reports
        .iter()
        .enumerate()
        .find(|(_, r)| !r.passed)
        .map(|(i, r)| format!("part {i}: {}", r.counterexample.clone().unwrap_or_default()));
    Report {
        check,
        passed: failed.is_none(),
        checked,
        counterexample: failed,
    }
}

/// Round-trip check of a pipeline read from a file.
pub fn check_pipeline(p: u32, pl: &IsoPipeline, flags: &Flags) -> Result<Report> {
    let ctx = Context::new(p, flags.precision)?;
    Ok(check_bijection(
        &ctx,
        pl,
        flags.samples.unwrap_or(DEFAULT_SAMPLES),
        flags.seed.unwrap_or(DEFAULT_SEED),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_dsl;

    fn run(src: &str) -> (bool, String) {
        let script = parse_dsl(src, None).unwrap();
        let mut buf = Vec::new();
        let ok = run_script(&script, &Flags::default(), &mut buf).unwrap();
        (ok, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn classify_box_ends_at_k1() {
        let (ok, out) = run("prime 5; set X = box(l=1,k=1); classify X;");
        assert!(ok);
        assert!(out.starts_with("classify X: pipeline(source: box(l=1, k=1), target: space(1)"));
    }

    #[test]
    fn dim_of_point() {
        let (_, out) = run("prime 5; set P = point(3); dim P;");
        assert_eq!(out, "dim P = 0\n");
    }

    #[test]
    fn verify_small_cell() {
        let (ok, out) =
            run("prime 3; set X = cell(v(1) <= v(x) <= v(3), x in 1*P_1); verify X samples=30 seed=1 modulus=3;");
        assert!(ok, "{out}");
        assert_eq!(out.lines().filter(|l| l.starts_with("  PASS")).count(), 5, "{out}");
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit_code(&Error::Parse {
                line: 1,
                col: 1,
                message: String::new(),
                expected: vec![],
            }),
            exit_code(&Error::Descriptor(String::new())),
            exit_code(&Error::Indeterminate(String::new())),
            exit_code(&Error::Verification(String::new())),
            exit_code(&Error::Io(String::new())),
        ];
        let mut sorted = codes.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
        assert_eq!(
            exit_code(&Error::Indeterminate(String::new()).at_step(2)),
            EXIT_PRECISION
        );
    }
}
