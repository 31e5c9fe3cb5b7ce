//! Fixture files: one JSON object per file, tagged by `kind`.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use peqlib::action::{ActionData, GradingData, SActionOnSpace, SpaceActionData};
use peqlib::bibundle::{from_partial_homeo, PeqData};
use peqlib::cstar::{fell_bundle_from_grading, matrix_model, AlgebraData, BundleData, StructureData};
use peqlib::fintop::{hausdorff_predicates, CMap, SpaceData};
use peqlib::fixtures;
use peqlib::groupoid::{FinGroupoid, GroupoidData};
use peqlib::isg::{InvSemigroup, SemigroupData};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// A continuous map between two spaces; `map` sends point names to point names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MapData {
    pub dom: SpaceData,
    pub cod: SpaceData,
    pub map: BTreeMap<String, String>,
}

impl MapData {
    pub fn build(&self) -> Result<CMap, String> {
        let dom = self.dom.build().map_err(|e| e.to_string())?;
        let cod = self.cod.build().map_err(|e| e.to_string())?;
        let map = dom
            .names()
            .iter()
            .map(|p| {
                let q = self.map.get(p).ok_or_else(|| format!("map is not defined at {p}"))?;
                cod.point(q).map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        CMap::new(dom, cod, map).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[allow(clippy::large_enum_variant)]
pub enum Fixture {
    Space(SpaceData),
    Map(MapData),
    Groupoid(GroupoidData),
    Semigroup(SemigroupData),
    Peq(PeqData),
    Action(ActionData),
    SpaceAction(SpaceActionData),
    Grading(GradingData),
    Algebra(AlgebraData),
    StructureAlgebra(StructureData),
    Bundle(BundleData),
}

/// Outcome of validating one fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Validation {
    pub name: String,
    pub kind: String,
    pub ok: bool,
    pub error: Option<String>,
    pub flags: BTreeMap<String, serde_json::Value>,
}

fn flag(flags: &mut BTreeMap<String, serde_json::Value>, k: &str, v: impl Into<serde_json::Value>) {
    flags.insert(k.to_string(), v.into());
}

impl Fixture {
    pub fn kind(&self) -> &'static str {
        match self {
            Fixture::Space(_) => "space",
            Fixture::Map(_) => "map",
            Fixture::Groupoid(_) => "groupoid",
            Fixture::Semigroup(_) => "semigroup",
            Fixture::Peq(_) => "peq",
            Fixture::Action(_) => "action",
            Fixture::SpaceAction(_) => "space-action",
            Fixture::Grading(_) => "grading",
            Fixture::Algebra(_) => "algebra",
            Fixture::StructureAlgebra(_) => "structure-algebra",
            Fixture::Bundle(_) => "bundle",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixtures serialize") + "\n"
    }

    /// Builds the fixture, verifying every axiom, and records its flags.
    pub fn validate(&self, name: &str) -> Validation {
        let mut flags = BTreeMap::new();
        let res: Result<(), String> = (|| {
            match self {
                Fixture::Space(d) => {
                    let z = d.build().map_err(|e| e.to_string())?;
                    let h = hausdorff_predicates(&z, None);
                    flag(&mut flags, "points", z.len());
                    flag(&mut flags, "opens", z.open_count());
                    flag(&mut flags, "t0", h.t0);
                    flag(&mut flags, "hausdorff", h.hausdorff);
                    flag(&mut flags, "locally_hausdorff", h.locally_hausdorff);
                }
                Fixture::Map(d) => {
                    let f = d.build()?;
                    let p = f.predicates();
                    flag(&mut flags, "open", p.open);
                    flag(&mut flags, "closed", p.closed);
                    flag(&mut flags, "surjective", p.surjective);
                    flag(&mut flags, "etale", p.etale);
                }
                Fixture::Groupoid(d) => {
                    let g = d.build().map_err(|e| e.to_string())?;
                    groupoid_flags(&g, &mut flags);
                }
                Fixture::Semigroup(d) => {
                    let s = d.build().map_err(|e| e.to_string())?;
                    flag(&mut flags, "elements", s.len());
                    flag(&mut flags, "idempotents", s.idempotents().len());
                    flag(&mut flags, "unit", s.unit().is_some());
                    flag(&mut flags, "zero", s.zero().is_some());
                }
                Fixture::Peq(d) => {
                    let x = d.build().map_err(|e| e.to_string())?;
                    flag(&mut flags, "points", x.len());
                    flag(&mut flags, "global", x.is_global());
                }
                Fixture::Action(d) => {
                    let a = d.build().map_err(|e| e.to_string())?;
                    let c = a.coherence();
                    flag(&mut flags, "coherence_checks", c.checks);
                    flag(&mut flags, "zero_empty", a.zero_empty());
                    if let Some(f) = c.failures.first() {
                        return Err(format!("coherence: {f}"));
                    }
                }
                Fixture::SpaceAction(d) => {
                    let a = d.build().map_err(|e| e.to_string())?;
                    flag(&mut flags, "adjoined_unit", a.adjoined_unit());
                    flag(&mut flags, "points", a.space().len());
                }
                Fixture::Grading(d) => {
                    let gr = d.build().map_err(|e| e.to_string())?;
                    groupoid_flags(gr.groupoid(), &mut flags);
                    flag(&mut flags, "saturated", gr.is_saturated());
                    flag(&mut flags, "zero_empty", gr.zero_empty());
                }
                Fixture::Algebra(d) => {
                    let a = d.build().map_err(|e| e.to_string())?;
                    flag(&mut flags, "dim", a.dim());
                    let b = a.blocks().map_err(|e| e.to_string())?;
                    flag(&mut flags, "blocks", b);
                }
                Fixture::StructureAlgebra(d) => {
                    let a = d.build().map_err(|e| e.to_string())?;
                    flag(&mut flags, "dim", a.dim());
                    let b = a.blocks().map_err(|e| e.to_string())?;
                    flag(&mut flags, "blocks", b);
                }
                Fixture::Bundle(d) => {
                    let f = d.build().map_err(|e| e.to_string())?;
                    flag(&mut flags, "fibre_dims", f.dims());
                    flag(&mut flags, "saturated", f.is_saturated());
                    let rep = f.bimodule_report();
                    if let Some(w) = rep.failures.first() {
                        return Err(format!("Hilbert bimodule: {w}"));
                    }
                }
            }
            Ok(())
        })();
        Validation { name: name.to_string(), kind: self.kind().to_string(), ok: res.is_ok(), error: res.err(), flags }
    }
}

fn groupoid_flags(g: &FinGroupoid, flags: &mut BTreeMap<String, serde_json::Value>) {
    let p = g.predicates();
    flag(flags, "objects", g.n0());
    flag(flags, "arrows", g.n1());
    flag(flags, "opens", g.g1().open_count());
    flag(flags, "etale", p.etale);
    flag(flags, "basic", p.basic);
    flag(flags, "proper", p.proper);
    flag(flags, "free", p.free);
    flag(flags, "locally_hausdorff", g.g1().is_locally_hausdorff());
}

pub fn load(path: &Path) -> Result<Fixture, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Loads a path, falling back to a built-in fixture name.
pub fn resolve(arg: &str) -> Result<(String, Fixture), CliError> {
    let p = Path::new(arg);
    if p.exists() {
        return Ok((arg.to_string(), load(p)?));
    }
    builtin(arg)
        .map(|f| (arg.to_string(), f))
        .ok_or_else(|| CliError::Usage(format!("no such file or built-in fixture: {arg}")))
}

pub const BUILTIN: &[&str] =
    &["sigma", "d2", "gm", "s3", "z4", "p2", "cech3", "swap", "l_g", "s3-on-sigma", "gm-s3", "z4-z2", "s9"];

pub fn gm_s3() -> peqlib::action::SGradedGroupoid {
    let gm = Arc::new(fixtures::gm());
    let slices = fixtures::gm_slices().iter().map(|v| gm.g1().set_of(v).unwrap()).collect();
    peqlib::action::SGradedGroupoid::new(fixtures::s3(), gm, slices).expect("Gm is S3-graded")
}

pub fn z4_z2() -> peqlib::action::SGradedGroupoid {
    let z4 = Arc::new(FinGroupoid::cyclic(4));
    peqlib::action::grading_from_cocycle(&z4, &InvSemigroup::cyclic_group(2), &[0, 1, 0, 1]).expect("parity cocycle")
}

pub fn s3_on_sigma() -> SActionOnSpace {
    let id = vec![Some(0), Some(1)];
    SActionOnSpace::new(fixtures::s3(), fixtures::sigma(), vec![id.clone(), vec![None, Some(1)], id])
        .expect("S3 acts on Σ")
}

pub fn swap() -> peqlib::bibundle::PartialEquivalence {
    let d2 = fixtures::d2();
    from_partial_homeo(&d2, &d2.full_set(), &[Some(1), Some(0)]).expect("the swap is a homeomorphism")
}

pub fn builtin(name: &str) -> Option<Fixture> {
    Some(match name {
        "sigma" => Fixture::Space(fixtures::sigma().to_data()),
        "d2" => Fixture::Space(fixtures::d2().to_data()),
        "gm" => Fixture::Groupoid(fixtures::gm().to_data()),
        "s3" => Fixture::Semigroup(fixtures::s3().to_data()),
        "z4" => Fixture::Groupoid(FinGroupoid::cyclic(4).to_data()),
        "p2" => Fixture::Groupoid(fixtures::p2().to_data()),
        "cech3" => Fixture::Groupoid(fixtures::cech3().to_data()),
        "swap" => Fixture::Peq(swap().to_data()),
        "l_g" => Fixture::Peq(fixtures::l_g().to_data()),
        "s3-on-sigma" => Fixture::SpaceAction(s3_on_sigma().to_data()),
        "gm-s3" => Fixture::Grading(gm_s3().to_data()),
        "z4-z2" => Fixture::Grading(z4_z2().to_data()),
        "s9" => Fixture::Bundle(matrix_model().bundle.to_data()),
        "gm-s3-bundle" => Fixture::Bundle(fell_bundle_from_grading(&gm_s3()).ok()?.to_data()),
        _ => return None,
    })
}
