//! The four subcommands.  Each returns an [`Outcome`]; files are written
//! only under `--out`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use peqlib::action::{action_from_grading, germ_groupoid, transformation_groupoid, SAction, SGradedGroupoid};
use peqlib::bibundle::{compose, dual, PartialEquivalence};
use peqlib::cstar::{fell_bundle_from_grading, matrix_model, verify_twisted_action, FellBundle};
use peqlib::fintop::{set_from, FinSpace, PointSet};
use peqlib::fixtures;
use peqlib::groupoid::{cech_groupoid, covering_groupoid, linking_groupoid, FinGroupoid};
use peqlib::isg::{bisections, InvSemigroup};
use serde_json::json;

use crate::fixture::{gm_s3, resolve, s3_on_sigma, z4_z2, Fixture};
use crate::suites::{self, Check};
use crate::{CliError, Outcome};

/// Settings shared by all commands.
#[derive(Debug, Clone)]
pub struct Context {
    pub out: Option<PathBuf>,
    pub max_size: usize,
    pub seed: u64,
    pub random: usize,
}

impl Default for Context {
    fn default() -> Self {
        Context { out: None, max_size: 6, seed: 0, random: 25 }
    }
}

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

/// Writes fixtures as `<name>.json` under `dir`, returning the paths.
fn write_all(dir: &Path, files: &[(String, Fixture)]) -> Result<Vec<String>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, f) in files {
        let p = dir.join(format!("{name}.json"));
        std::fs::write(&p, f.to_json())?;
        paths.push(p.display().to_string());
    }
    Ok(paths)
}

/// Emits fixtures: to `--out` if given, otherwise inline in the report.
fn emit(ctx: &Context, files: &[(String, Fixture)], text: &mut String) -> Result<serde_json::Value, CliError> {
    match &ctx.out {
        Some(dir) => {
            let paths = write_all(dir, files)?;
            for p in &paths {
                writeln!(text, "wrote {p}").unwrap();
            }
            Ok(json!(paths))
        }
        None => {
            let mut map = serde_json::Map::new();
            for (name, f) in files {
                writeln!(text, "--- {name} ({})", f.kind()).unwrap();
                text.push_str(&f.to_json());
                map.insert(name.clone(), serde_json::to_value(f).expect("fixtures serialize"));
            }
            Ok(serde_json::Value::Object(map))
        }
    }
}

// ---------------------------------------------------------------- validate

pub fn validate(paths: &[String]) -> Result<Outcome, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("validate needs at least one fixture file".into()));
    }
    let mut text = String::new();
    let mut results = Vec::new();
    for p in paths {
        let (name, f) = resolve(p)?;
        let v = f.validate(&name);
        let mark = if v.ok { "PASS" } else { "FAIL" };
        write!(text, "{mark}  {name}  [{}]", v.kind).unwrap();
        for (k, val) in &v.flags {
            match val {
                serde_json::Value::Bool(b) => write!(text, "  {k}:{}", if *b { "✓" } else { "✗" }).unwrap(),
                other => write!(text, "  {k}={other}").unwrap(),
            }
        }
        text.push('\n');
        if let Some(e) = &v.error {
            writeln!(text, "      {e}").unwrap();
        }
        results.push(v);
    }
    let ok = results.iter().all(|v| v.ok);
    Ok(Outcome { ok, text, report: json!({ "ok": ok, "fixtures": results }) })
}

// ------------------------------------------------------------------- build

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BuildKind {
    Transformation,
    Germ,
    Cech,
    Covering,
    Linking,
    Compose,
    Dual,
    Fell,
    Section,
}

#[derive(Debug, Clone, Default)]
pub struct BuildArgs {
    pub action: Option<String>,
    pub space: Option<String>,
    /// Cover as `a,b;b,c`: open sets separated by `;`, points by `,`.
    pub cover: Option<String>,
    pub map: Option<String>,
    pub peq: Option<String>,
    pub left: Option<String>,
    pub right: Option<String>,
    pub grading: Option<String>,
    pub bundle: Option<String>,
}

fn need<'a>(v: &'a Option<String>, flag: &str) -> Result<&'a str, CliError> {
    v.as_deref().ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn wrong_kind(name: &str, f: &Fixture, want: &str) -> CliError {
    CliError::Usage(format!("{name} is a {} fixture, expected {want}", f.kind()))
}

fn load_space(arg: &str) -> Result<FinSpace, CliError> {
    match resolve(arg)? {
        (_, Fixture::Space(d)) => d.build().map_err(failed),
        (n, f) => Err(wrong_kind(&n, &f, "a space")),
    }
}

fn load_peq(arg: &str) -> Result<PartialEquivalence, CliError> {
    match resolve(arg)? {
        (_, Fixture::Peq(d)) => d.build().map_err(failed),
        (n, f) => Err(wrong_kind(&n, &f, "a partial equivalence")),
    }
}

fn load_grading(arg: &str) -> Result<SGradedGroupoid, CliError> {
    match resolve(arg)? {
        (_, Fixture::Grading(d)) => d.build().map_err(failed),
        (n, f) => Err(wrong_kind(&n, &f, "a grading")),
    }
}

fn load_bundle(arg: &str) -> Result<FellBundle, CliError> {
    match resolve(arg)? {
        (_, Fixture::Bundle(d)) => d.build().map_err(failed),
        (_, Fixture::Grading(d)) => fell_bundle_from_grading(&d.build().map_err(failed)?).map_err(failed),
        (n, f) => Err(wrong_kind(&n, &f, "a bundle or grading")),
    }
}

/// Any action-like fixture as a simplified action.
fn load_action(arg: &str) -> Result<SAction, CliError> {
    match resolve(arg)? {
        (_, Fixture::Action(d)) => d.build().map_err(failed),
        (_, Fixture::SpaceAction(d)) => d.build().map_err(failed)?.induced_action().map_err(failed),
        (_, Fixture::Grading(d)) => action_from_grading(&d.build().map_err(failed)?).map_err(failed),
        (n, f) => Err(wrong_kind(&n, &f, "an action")),
    }
}

pub fn parse_cover(z: &FinSpace, text: &str) -> Result<Vec<PointSet>, CliError> {
    text.split(';')
        .map(|part| {
            let pts = part
                .split(',')
                .map(|p| z.point(p.trim()).map_err(|e| CliError::Usage(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(set_from(z.len(), pts))
        })
        .collect()
}

pub fn build(kind: BuildKind, args: &BuildArgs, ctx: &Context) -> Result<Outcome, CliError> {
    let mut text = String::new();
    let (name, fixture, summary) = match kind {
        BuildKind::Transformation => {
            let a = load_action(need(&args.action, "action")?)?;
            let t = transformation_groupoid(&a).map_err(failed)?;
            let g = t.graded.groupoid();
            let s = json!({ "arrows": g.n1(), "objects": g.n0() });
            ("transformation".to_string(), Fixture::Grading(t.graded.to_data()), s)
        }
        BuildKind::Germ => {
            let arg = need(&args.action, "action")?;
            let a = match resolve(arg)? {
                (_, Fixture::SpaceAction(d)) => d.build().map_err(failed)?,
                (n, f) => return Err(wrong_kind(&n, &f, "an action on a space")),
            };
            let gr = germ_groupoid(&a).map_err(failed)?;
            let g = gr.groupoid();
            let p = g.predicates();
            let s = json!({
                "arrows": g.n1(),
                "opens": g.g1().open_count(),
                "etale": p.etale,
                "basic": p.basic,
                "locally_hausdorff": g.g1().is_locally_hausdorff(),
            });
            ("germ".to_string(), Fixture::Grading(gr.to_data()), s)
        }
        BuildKind::Cech | BuildKind::Covering => {
            let (g, label) = if kind == BuildKind::Cech {
                let z = load_space(need(&args.space, "space")?)?;
                let cover = parse_cover(&z, need(&args.cover, "cover")?)?;
                (cech_groupoid(&z, &cover).map_err(failed)?, "cech")
            } else {
                let f = match resolve(need(&args.map, "map")?)? {
                    (_, Fixture::Map(d)) => d.build().map_err(CliError::Failed)?,
                    (n, f) => return Err(wrong_kind(&n, &f, "a map")),
                };
                (covering_groupoid(&f).map_err(failed)?, "covering")
            };
            let p = g.predicates();
            let s = json!({ "arrows": g.n1(), "objects": g.n0(), "basic": p.basic, "etale": p.etale });
            (label.to_string(), Fixture::Groupoid(g.to_data()), s)
        }
        BuildKind::Linking => {
            let x = load_peq(need(&args.peq, "peq")?)?;
            let (g, _, _) = linking_groupoid(&x, false).map_err(failed)?;
            let s = json!({ "arrows": g.n1(), "objects": g.n0() });
            ("linking".to_string(), Fixture::Groupoid(g.to_data()), s)
        }
        BuildKind::Compose => {
            let x = load_peq(need(&args.left, "left")?)?;
            let y = load_peq(need(&args.right, "right")?)?;
            let c = compose(&x, &y).map_err(failed)?;
            let s = json!({ "points": c.peq.len(), "global": c.peq.is_global() });
            ("compose".to_string(), Fixture::Peq(c.peq.to_data()), s)
        }
        BuildKind::Dual => {
            let x = load_peq(need(&args.peq, "peq")?)?;
            let d = dual(&x);
            let s = json!({ "points": d.len() });
            ("dual".to_string(), Fixture::Peq(d.to_data()), s)
        }
        BuildKind::Fell => {
            let gr = load_grading(need(&args.grading, "grading")?)?;
            let f = fell_bundle_from_grading(&gr).map_err(failed)?;
            let s = json!({ "fibre_dims": f.dims() });
            ("fell".to_string(), Fixture::Bundle(f.to_data()), s)
        }
        BuildKind::Section => {
            let f = load_bundle(need(&args.bundle, "bundle")?)?;
            let sect = f.section_algebra().map_err(failed)?;
            let k = f.e_map_kernel();
            let s = json!({
                "dim": sect.algebra.dim(),
                "blocks": sect.blocks,
                "relations": sect.relations,
                "e_kernel": k.dim,
                "kernel_spanned_by_relations": k.spanned_by_relations,
            });
            ("section".to_string(), Fixture::StructureAlgebra(sect.algebra.to_data()), s)
        }
    };
    writeln!(text, "{name}: {summary}").unwrap();
    let files = emit(ctx, &[(name.clone(), fixture)], &mut text)?;
    Ok(Outcome { ok: true, text, report: json!({ "build": name, "summary": summary, "output": files }) })
}

// ----------------------------------------------------------------- example

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Example {
    Section9,
    GermSigma,
    Z4,
    Cech3,
    Pair,
}

fn section_fixture(f: &FellBundle) -> Result<(Fixture, serde_json::Value), CliError> {
    let sect = f.section_algebra().map_err(failed)?;
    let k = f.e_map_kernel();
    let summary = json!({
        "fibre_dims": f.dims(),
        "dim": sect.algebra.dim(),
        "blocks": sect.blocks,
        "e_kernel": k.dim,
    });
    Ok((Fixture::StructureAlgebra(sect.algebra.to_data()), summary))
}

/// Names of `Bis(G)` as a table `t·u`.
fn bisection_summary(g: &FinGroupoid) -> Result<(InvSemigroup, serde_json::Value), CliError> {
    let b = bisections(g).map_err(failed)?;
    let s = b.semigroup;
    let products: Vec<String> = (0..s.len())
        .flat_map(|a| (0..s.len()).map(move |c| (a, c)))
        .map(|(a, c)| format!("{}·{}={}", s.name(a), s.name(c), s.name(s.mul(a, c))))
        .collect();
    let v = json!({ "elements": s.names(), "products": products });
    Ok((s, v))
}

pub fn example(which: Example, ctx: &Context) -> Result<Outcome, CliError> {
    let mut text = String::new();
    let mut ok = true;
    let (files, summary): (Vec<(String, Fixture)>, serde_json::Value) = match which {
        Example::Section9 => {
            let gm = fixtures::gm();
            let (bis, bis_summary) = bisection_summary(&gm)?;
            let mm = matrix_model();
            let (sect, sect_summary) = section_fixture(&mm.bundle)?;
            let report = verify_twisted_action().map_err(failed)?;
            ok &= report.all_hold();
            let files = vec![
                ("s3".into(), Fixture::Semigroup(fixtures::s3().to_data())),
                ("gm".into(), Fixture::Groupoid(gm.to_data())),
                ("bis-gm".into(), Fixture::Semigroup(bis.to_data())),
                ("s9".into(), Fixture::Bundle(mm.bundle.to_data())),
                (
                    "s9-section".into(),
                    Fixture::StructureAlgebra(match sect {
                        Fixture::StructureAlgebra(d) => d,
                        _ => unreachable!(),
                    }),
                ),
            ];
            let summary = json!({
                "bisections": bis_summary,
                "section_algebra": sect_summary,
                "twisted_action": report,
                "all_hold": report.all_hold(),
            });
            (files, summary)
        }
        Example::GermSigma => {
            let a = s3_on_sigma();
            let germ = germ_groupoid(&a).map_err(failed)?;
            let iso = germ.is_isomorphic(&gm_s3());
            ok &= iso;
            let g = germ.groupoid();
            let files = vec![
                ("sigma".into(), Fixture::Space(fixtures::sigma().to_data())),
                ("s3-on-sigma".into(), Fixture::SpaceAction(a.to_data())),
                ("gm".into(), Fixture::Groupoid(fixtures::gm().to_data())),
                ("germ".into(), Fixture::Grading(germ.to_data())),
            ];
            let summary = json!({
                "arrows": g.n1(),
                "opens": g.g1().open_count(),
                "etale": g.predicates().etale,
                "basic": g.predicates().basic,
                "locally_hausdorff": g.g1().is_locally_hausdorff(),
                "isomorphic_to_gm": iso,
            });
            (files, summary)
        }
        Example::Z4 => {
            let gr = z4_z2();
            let f = fell_bundle_from_grading(&gr).map_err(failed)?;
            let (sect, s) = section_fixture(&f)?;
            let files = vec![
                ("z4".into(), Fixture::Groupoid(FinGroupoid::cyclic(4).to_data())),
                ("z4-z2".into(), Fixture::Grading(gr.to_data())),
                ("z4-z2-bundle".into(), Fixture::Bundle(f.to_data())),
                ("z4-z2-section".into(), sect),
            ];
            (files, s)
        }
        Example::Cech3 => {
            let (z, cover) = fixtures::cech3_cover();
            let g = Arc::new(cech_groupoid(&z, &cover).map_err(failed)?);
            let all = g.g1().full_set();
            let gr = SGradedGroupoid::new(InvSemigroup::trivial(), g.clone(), vec![all]).map_err(failed)?;
            let f = fell_bundle_from_grading(&gr).map_err(failed)?;
            let (sect, s) = section_fixture(&f)?;
            let files = vec![
                ("cech3-base".into(), Fixture::Space(z.to_data())),
                ("cech3".into(), Fixture::Groupoid(g.to_data())),
                ("cech3-trivial".into(), Fixture::Grading(gr.to_data())),
                ("cech3-section".into(), sect),
            ];
            (files, s)
        }
        Example::Pair => {
            let p2 = fixtures::p2();
            let (bis, s) = bisection_summary(&p2)?;
            let files = vec![
                ("p2".into(), Fixture::Groupoid(p2.to_data())),
                ("bis-p2".into(), Fixture::Semigroup(bis.to_data())),
            ];
            (files, s)
        }
    };
    writeln!(text, "{}", serde_json::to_string_pretty(&summary).expect("summaries serialize")).unwrap();
    let output = emit(ctx, &files, &mut text)?;
    if !ok {
        text.push_str("FAIL  the example does not reproduce\n");
    }
    Ok(Outcome { ok, text, report: json!({ "ok": ok, "summary": summary, "output": output }) })
}

// ------------------------------------------------------------------ report

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Peq,
    Action,
    Cstar,
}

pub fn report(suite: Suite, files: &[String], ctx: &Context) -> Result<Outcome, CliError> {
    let mut checks: Vec<Check> = Vec::new();
    for p in files {
        let (passed, kind, detail) = match resolve(p) {
            Ok((name, f)) => {
                let v = f.validate(&name);
                (v.ok, v.kind, v.error.unwrap_or_else(|| "verified".into()))
            }
            Err(e) => (false, "?".into(), e.to_string()),
        };
        checks.push(Check { suite: "fixture", name: format!("{p} [{kind}]"), passed, detail });
    }
    if matches!(suite, Suite::All | Suite::Peq) {
        checks.extend(suites::peq_suite(ctx.max_size));
    }
    if matches!(suite, Suite::All | Suite::Action) {
        checks.extend(suites::action_suite(ctx.seed, ctx.random));
    }
    if matches!(suite, Suite::All | Suite::Cstar) {
        checks.extend(suites::cstar_suite());
    }
    let failed_n = checks.iter().filter(|c| !c.passed).count();
    let mut text = String::new();
    for c in &checks {
        let mark = if c.passed { "PASS" } else { "FAIL" };
        writeln!(text, "{mark}  {:<7} {}  — {}", c.suite, c.name, c.detail).unwrap();
    }
    writeln!(text, "{} checks, {} failed", checks.len(), failed_n).unwrap();
    let ok = failed_n == 0;
    Ok(Outcome { ok, text, report: json!({ "ok": ok, "total": checks.len(), "failed": failed_n, "checks": checks }) })
}
