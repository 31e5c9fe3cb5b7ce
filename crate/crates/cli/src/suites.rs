//! Invariant suites run by `report`.

use std::sync::Arc;

use peqlib::action::{
    action_from_grading, desingularize, extend_grading_to_bisections, germ_groupoid, round_trip_action,
    round_trip_grading, transformation_groupoid, SActionOnSpace, SGradedGroupoid,
};
use peqlib::bibundle::{
    compose, dual, enumerate_peqs, idempotent_trivialize, identity_equivalence, is_isomorphic, pairing,
    unit_restriction, PartialEquivalence,
};
use peqlib::cstar::{fell_bundle_from_grading, groupoid_algebra, matrix_model, verify_twisted_action};
use peqlib::fixtures;
use peqlib::groupoid::{linking_groupoid, FinGroupoid};
use peqlib::isg::InvSemigroup;
use peqlib::random::random_grading;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fixture::{gm_s3, s3_on_sigma, swap, z4_z2};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(out: &mut Vec<Check>, suite: &'static str, name: impl Into<String>, r: Result<String, String>) {
    let (passed, detail) = match r {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    out.push(Check { suite, name: name.into(), passed, detail });
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Named partial equivalences used by the suites.
pub fn peq_catalogue(max_size: usize) -> Vec<(String, PartialEquivalence)> {
    let mut out = vec![("swap".to_string(), swap()), ("l_g".to_string(), fixtures::l_g())];
    for (name, g) in
        [("gm", fixtures::gm()), ("p2", fixtures::p2()), ("z4", FinGroupoid::cyclic(4)), ("cech3", fixtures::cech3())]
    {
        out.push((format!("id({name})"), identity_equivalence(&Arc::new(g))));
    }
    for (name, g) in [
        ("sigma", FinGroupoid::space(&fixtures::sigma())),
        ("d2", FinGroupoid::space(&fixtures::d2())),
        ("z2", FinGroupoid::cyclic(2)),
    ] {
        for (k, x) in enumerate_peqs(&Arc::new(g), max_size).into_iter().enumerate() {
            out.push((format!("{name}#{k}"), x));
        }
    }
    out
}

/// Pairings, duality, units for composition and idempotent trivialization.
pub fn peq_checks(x: &PartialEquivalence) -> Result<String, String> {
    let e = |err: peqlib::bibundle::PeqError| err.to_string();
    let rebuilt = x.to_data().build().map_err(e)?;
    ensure(rebuilt.len() == x.len(), "JSON round trip changed the bibundle")?;
    let p = pairing(x).map_err(e)?;
    ensure(is_isomorphic(&dual(&dual(x)), x), "X** is not isomorphic to X")?;
    let left = compose(&identity_equivalence(&x.left_arc()), x).map_err(e)?;
    let right = compose(x, &identity_equivalence(&x.right_arc())).map_err(e)?;
    ensure(is_isomorphic(&left.peq, x) && is_isomorphic(&right.peq, x), "identity is not a unit for composition")?;
    // E = X ×_H X* is idempotent; recover its trivialization from μ
    let comp = &p.left_composite;
    let phi = &p.left_map.assignment;
    let gu = &p.left_target;
    let g = x.left();
    let ee = compose(&comp.peq, &comp.peq).map_err(e)?;
    let mut inv = vec![0; phi.len()];
    for (c, &k) in phi.iter().enumerate() {
        inv[k] = c;
    }
    let arrow = |c: usize| g.g1().index_of(gu.space().name(phi[c])).unwrap();
    let mu: Vec<usize> = (0..ee.peq.len())
        .map(|k| {
            let (a, b) = ee.representative(k);
            let ab = g.mul(arrow(a), arrow(b)).expect("composable classes");
            inv[gu.space().index_of(g.g1().name(ab)).unwrap()]
        })
        .collect();
    let tr = idempotent_trivialize(&comp.peq, &ee, &mu).map_err(e)?;
    ensure((0..phi.len()).all(|c| tr.iso[c] == arrow(c)), "trivialization differs from the pairing")?;
    let _ = unit_restriction(&x.left_arc(), &x.range_set()).map_err(e)?;
    let (lg, _, _) = linking_groupoid(x, false).map_err(|err| err.to_string())?;
    Ok(format!("{} points, linking groupoid with {} arrows", x.len(), lg.n1()))
}

pub fn peq_suite(max_size: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, x) in peq_catalogue(max_size) {
        check(&mut out, "peq", format!("P1–P4, pairing, dual, idempotents: {name}"), peq_checks(&x));
    }
    out
}

/// Round trips and coherence for one grading.
pub fn grading_checks(gr: &SGradedGroupoid) -> Result<String, String> {
    let e = |err: peqlib::action::ActionError| err.to_string();
    ensure(round_trip_grading(gr).map_err(e)?, "grading → action → grading is not isomorphic")?;
    let a = action_from_grading(gr).map_err(e)?;
    ensure(round_trip_action(&a).map_err(e)?, "action → grading → action is not isomorphic")?;
    let c = a.coherence();
    if let Some(f) = c.failures.first() {
        return Err(format!("coherence: {f}"));
    }
    Ok(format!("{} arrows, {} coherence checks", gr.groupoid().n1(), c.checks))
}

pub fn builtin_gradings() -> Vec<(String, SGradedGroupoid)> {
    let cech = Arc::new(fixtures::cech3());
    let all = cech.g1().full_set();
    let triv = SGradedGroupoid::new(InvSemigroup::trivial(), cech, vec![all]).expect("trivial grading");
    vec![
        ("gm-s3".into(), gm_s3()),
        ("z4-z2".into(), z4_z2()),
        ("cech3-trivial".into(), triv),
        ("germ(s3-on-sigma)".into(), germ_groupoid(&s3_on_sigma()).expect("germ groupoid")),
    ]
}

pub fn action_suite(seed: u64, random: usize) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, gr) in builtin_gradings() {
        check(&mut out, "action", format!("Gr1–Gr6, round trips, coherence: {name}"), grading_checks(&gr));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..random {
        let gr = random_grading(&mut rng);
        check(&mut out, "action", format!("random grading #{k} (seed {seed})"), grading_checks(&gr));
    }
    check(
        &mut out,
        "action",
        "germ groupoid of S3 on Σ is Gm",
        (|| {
            let germ = germ_groupoid(&s3_on_sigma()).map_err(|e| e.to_string())?;
            ensure(germ.is_isomorphic(&gm_s3()), "germ groupoid differs from Gm")?;
            Ok(format!("{} arrows", germ.groupoid().n1()))
        })(),
    );
    check(
        &mut out,
        "action",
        "model: S3 → Bis(Gm) extends the grading",
        (|| {
            let gm = fixtures::gm();
            let phi: Vec<_> = fixtures::gm_slices().iter().map(|v| gm.g1().set_of(v).unwrap()).collect();
            let a = s3_on_sigma().induced_action().map_err(|e| e.to_string())?;
            let ext = extend_grading_to_bisections(&a, &gm, &phi, &[0, 1]).map_err(|e| e.to_string())?;
            Ok(format!("{} slices", ext.graded.slices().len()))
        })(),
    );
    check(
        &mut out,
        "action",
        "desingularized left translation of Gm is basic",
        (|| {
            let gm = fixtures::gm();
            let phi: Vec<_> = fixtures::gm_slices().iter().map(|v| gm.g1().set_of(v).unwrap()).collect();
            let act = SActionOnSpace::left_translation(&gm, &fixtures::s3(), &phi).map_err(|e| e.to_string())?;
            let cover = [gm.g1().set_of(&["1o", "1c"]).unwrap(), gm.g1().set_of(&["1o", "g-"]).unwrap()];
            let d = desingularize(&act, &cover).map_err(|e| e.to_string())?;
            ensure(d.graded.groupoid().predicates().basic, "pull-back groupoid is not basic")?;
            let t = transformation_groupoid(&act.induced_action().map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            Ok(format!(
                "{} arrows, transformation groupoid {} arrows",
                d.graded.groupoid().n1(),
                t.graded.groupoid().n1()
            ))
        })(),
    );
    out
}

pub fn cstar_suite() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, gr) in builtin_gradings() {
        check(
            &mut out,
            "cstar",
            format!("section algebra and E-kernel: {name}"),
            (|| {
                let f = fell_bundle_from_grading(&gr).map_err(|e| e.to_string())?;
                let sect = f.section_algebra().map_err(|e| e.to_string())?;
                let l = gr.groupoid();
                ensure(sect.algebra.dim() == l.n1(), format!("dim {} ≠ |L¹| = {}", sect.algebra.dim(), l.n1()))?;
                let blocks = groupoid_algebra(l).blocks().map_err(|e| e.to_string())?;
                ensure(sect.blocks.as_ref() == Some(&blocks), format!("blocks {:?} ≠ {:?}", sect.blocks, blocks))?;
                ensure(sect.unit_fibre_injective, "unit fibre does not embed")?;
                let k = f.e_map_kernel();
                ensure(k.spanned_by_relations, "relations do not span the kernel of E")?;
                let rep = f.bimodule_report();
                if let Some(w) = rep.failures.first() {
                    return Err(w.clone());
                }
                Ok(format!("dim {}, blocks {:?}, kernel {}", sect.algebra.dim(), sect.blocks, k.dim))
            })(),
        );
    }
    check(
        &mut out,
        "cstar",
        "twisted action on M₂⊕M₂",
        (|| {
            let r = verify_twisted_action().map_err(|e| e.to_string())?;
            ensure(r.all_hold(), format!("{r:?}"))?;
            let mm = matrix_model();
            let rep = mm.bundle.bimodule_report();
            if let Some(w) = rep.failures.first() {
                return Err(w.clone());
            }
            let (prim, _) = mm.bundle.prim_action().map_err(|e| e.to_string())?;
            Ok(format!(
                "fibres {:?}, section dim {}, Prim has {} points",
                r.fibre_dims,
                r.section_dim,
                prim.space.len()
            ))
        })(),
    );
    out
}
