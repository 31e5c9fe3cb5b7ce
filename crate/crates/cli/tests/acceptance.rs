#![allow(clippy::needless_range_loop)]

//! Acceptance criteria, one PASS/FAIL line each.  Run with
//! `cargo test -p peqlib-cli --test acceptance`.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use peqlib::action::{
    action_from_grading, desingularize, extend_grading_to_bisections, germ_groupoid, round_trip_action,
    round_trip_grading, transport_action, SAction, SActionOnSpace, SGradedGroupoid,
};
use peqlib::bibundle::{
    compose, dual, enumerate_peqs, find_bibundle_maps, idempotent_trivialize, identity_equivalence, pairing,
    unit_restriction, Composite, PartialEquivalence,
};
use peqlib::cstar::{
    diagonal_algebra, fell_bundle_from_grading, groupoid_algebra, matrix_model, morita_equivalent,
    verify_twisted_action,
};
use peqlib::fintop::{set_from, FinSpace, PointSet};
use peqlib::fixtures;
use peqlib::groupoid::{cech_groupoid, cover_map, covering_groupoid, linking_groupoid, FinGroupoid};
use peqlib::isg::{bisections, is_wide, z_isomorphism_check, InvSemigroup};
use peqlib::random::{random_grading, random_space, random_space_action, MAX_ARROWS};
use peqlib_cli::commands::{self, Context, Example};
use peqlib_cli::fixture::{gm_s3, s3_on_sigma, swap, z4_z2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, format!("took {t:.2?}, limit {limit:?}"))
}

// ------------------------------------------------------------ test oracles

/// Opens of a finite space, enumerated over all subsets from the minimal
/// neighbourhoods.
fn opens_by_enumeration(z: &FinSpace) -> Vec<PointSet> {
    let n = z.len();
    (0u32..1 << n)
        .map(|m| set_from(n, (0..n).filter(|&i| m >> i & 1 == 1)))
        .filter(|s| s.ones().all(|x| z.nbhd(x).is_subset(s)))
        .collect()
}

/// Hausdorff on a subset: distinct points have disjoint minimal
/// neighbourhoods inside it.
fn hausdorff_on(z: &FinSpace, pts: &PointSet) -> bool {
    let v: Vec<usize> = pts.ones().collect();
    v.iter().all(|&a| {
        v.iter().all(|&b| {
            if a == b {
                return true;
            }
            let mut m = z.nbhd(a).clone();
            m.intersect_with(z.nbhd(b));
            m.intersect_with(pts);
            m.is_clear()
        })
    })
}

fn hausdorff(z: &FinSpace) -> bool {
    hausdorff_on(z, &z.full_set())
}

fn locally_hausdorff(z: &FinSpace) -> bool {
    (0..z.len()).all(|x| hausdorff_on(z, z.nbhd(x)))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn homeomorphic(a: &FinSpace, b: &FinSpace) -> bool {
    a.len() == b.len()
        && permutations(a.len()).iter().any(|p| {
            (0..a.len()).all(|x| {
                let img = set_from(b.len(), a.nbhd(x).ones().map(|y| p[y]));
                img == *b.nbhd(p[x])
            })
        })
}

/// `r` and `s` restrict to bijections of minimal neighbourhoods.
fn etale_by_neighbourhoods(g: &FinGroupoid) -> bool {
    [g.r(), g.s()].iter().all(|m| {
        (0..g.n1()).all(|a| {
            let u: Vec<usize> = g.g1().nbhd(a).ones().collect();
            let img = set_from(g.n0(), u.iter().map(|&b| m[b]));
            img.count_ones(..) == u.len() && img == *g.g0().nbhd(m[a])
        })
    })
}

/// Block sizes of the algebra of a finite groupoid with abelian isotropy:
/// one block of size |orbit| per element of the isotropy group.
fn blocks_by_orbits(g: &FinGroupoid) -> Option<Vec<usize>> {
    let mut seen = vec![false; g.n0()];
    let mut blocks = Vec::new();
    for x in 0..g.n0() {
        if seen[x] {
            continue;
        }
        let orbit: Vec<usize> = (0..g.n0()).filter(|&y| !g.hom(y, x).is_empty()).collect();
        for &y in &orbit {
            seen[y] = true;
        }
        let iso = g.hom(x, x);
        for &a in &iso {
            for &b in &iso {
                if g.mul(a, b) != g.mul(b, a) {
                    return None;
                }
            }
        }
        blocks.extend(std::iter::repeat_n(orbit.len(), iso.len()));
    }
    blocks.sort();
    Some(blocks)
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort();
    v
}

// ---------------------------------------------------------------- fixtures

fn trivial_grading(g: FinGroupoid) -> SGradedGroupoid {
    let g = Arc::new(g);
    let all = g.g1().full_set();
    SGradedGroupoid::new(InvSemigroup::trivial(), g, vec![all]).expect("trivial grading")
}

fn sigma_cech() -> FinGroupoid {
    let z = fixtures::sigma();
    let cover = vec![z.set_of(&["o"]).unwrap(), z.full_set()];
    cech_groupoid(&z, &cover).expect("Čech groupoid of Σ")
}

/// Every shipped grading.
fn shipped_gradings() -> Vec<(&'static str, SGradedGroupoid)> {
    vec![
        ("Gm/S3", gm_s3()),
        ("Z4/Z2", z4_z2()),
        ("germ of S3 on Σ", germ_groupoid(&s3_on_sigma()).expect("germ groupoid")),
        ("Čech(3) trivial", trivial_grading(fixtures::cech3())),
        ("Čech(Σ) trivial", trivial_grading(sigma_cech())),
        ("Gm trivial", trivial_grading(fixtures::gm())),
        ("P2 trivial", trivial_grading(fixtures::p2())),
        ("Z4 trivial", trivial_grading(FinGroupoid::cyclic(4))),
        ("Σ trivial", trivial_grading(FinGroupoid::space(&fixtures::sigma()))),
    ]
}

fn fixture_groupoids() -> Vec<(&'static str, FinGroupoid)> {
    vec![
        ("Gm", fixtures::gm()),
        ("P2", fixtures::p2()),
        ("Z4", FinGroupoid::cyclic(4)),
        ("Z2", FinGroupoid::cyclic(2)),
        ("Čech(3)", fixtures::cech3()),
        ("Čech(Σ)", sigma_cech()),
        ("Σ", FinGroupoid::space(&fixtures::sigma())),
        ("D2", FinGroupoid::space(&fixtures::d2())),
    ]
}

// ---------------------------------------------------------------- criteria

fn c1_section9() -> Outcome {
    let start = Instant::now();
    let out = commands::example(Example::Section9, &Context::default()).map_err(|e| e.to_string())?;
    ensure(out.ok, "example section9 reports a failure")?;

    let gm = fixtures::gm();
    let bis = bisections(&gm).map_err(|e| e.to_string())?;
    let s = &bis.semigroup;
    ensure(s.len() == 4, format!("|Bis(Gm)| = {}", s.len()))?;
    let idx = |names: &[&str]| bis.sets.iter().position(|b| *b == gm.g1().set_of(names).unwrap());
    let (empty, e, one, g) = (idx(&[]), idx(&["1o"]), idx(&["1o", "1c"]), idx(&["1o", "g-"]));
    let (Some(empty), Some(e), Some(one), Some(g)) = (empty, e, one, g) else {
        return Err("Bis(Gm) is not {∅, e, 1, g}".into());
    };
    ensure(s.mul(g, g) == one, "g·g ≠ 1")?;
    ensure(s.unit() == Some(one) && s.zero() == Some(empty), "unit or zero misplaced")?;
    let mut meet = bis.sets[one].clone();
    meet.intersect_with(&bis.sets[g]);
    ensure(meet == bis.sets[e], "1 ∩ g ≠ e")?;

    let r = verify_twisted_action().map_err(|e| e.to_string())?;
    ensure(r.fibre_dims == [6, 4, 6], format!("fibre dimensions {:?}", r.fibre_dims))?;
    ensure(r.section_dim == 8, format!("section algebra dimension {}", r.section_dim))?;
    ensure(sorted(r.section_blocks.clone()) == [2, 2], format!("blocks {:?}", r.section_blocks))?;
    ensure(r.omega_eg_equals_ge && r.omega_eg_is_u_on_ae, "ω(e,g) = ω(g,e) = u|A_e fails")?;
    ensure(r.omega_eg_nontrivial, "ω(e,g) is trivial")?;
    ensure(r.alpha_g_squared_id, "α_g² ≠ id")?;
    ensure(r.u_not_in_a && r.ua_witness.is_some(), "u ∈ A")?;
    ensure(r.sieben_fails, "Sieben's condition holds")?;

    // the bundle itself, independently of the report
    let mm = matrix_model();
    let sect = mm.bundle.section_algebra().map_err(|e| e.to_string())?;
    ensure(mm.bundle.dims() == [6, 4, 6], "bundle fibre dimensions")?;
    ensure(
        sect.algebra.dim() == 8 && sect.blocks.clone().map(sorted) == Some(vec![2, 2]),
        "section algebra of the bundle",
    )?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("Bis(Gm) = {{∅,e,1,g}}, fibres (6,4,6), dim 8, blocks {{2,2}}, {:.2?}", start.elapsed()))
}

fn c2_germ_model() -> Outcome {
    let start = Instant::now();
    let germ = germ_groupoid(&s3_on_sigma()).map_err(|e| e.to_string())?;
    let g = germ.groupoid();
    let g1 = g.g1();
    ensure(g.n1() == 3, format!("{} arrows", g.n1()))?;
    let opens = opens_by_enumeration(g1);
    ensure(opens.len() == 5 && g1.open_count() == 5, format!("{} open sets", opens.len()))?;
    ensure(etale_by_neighbourhoods(g) && g.predicates().etale, "not étale")?;
    ensure(!g.predicates().basic, "basic")?;
    ensure(!locally_hausdorff(g1) && !g1.is_locally_hausdorff(), "locally Hausdorff")?;
    // the two arrows over c cannot be separated
    let c = g.g0().index_of("c").ok_or("no object c")?;
    let over_c: Vec<usize> = (0..g.n1()).filter(|&a| g.r()[a] == c).collect();
    ensure(over_c.len() == 2, format!("{} arrows over c", over_c.len()))?;
    let separated = opens.iter().any(|u| {
        opens.iter().any(|v| {
            let mut m = u.clone();
            m.intersect_with(v);
            u.contains(over_c[0]) && v.contains(over_c[1]) && m.is_clear()
        })
    });
    ensure(!separated, "the arrows over c have disjoint neighbourhoods")?;
    within(start, Duration::from_secs(1))?;
    let names: Vec<&str> = over_c.iter().map(|&a| g1.name(a)).collect();
    Ok(format!("3 arrows, 5 opens, étale, not basic, {} and {} inseparable", names[0], names[1]))
}

fn c3_round_trips() -> Outcome {
    let start = Instant::now();
    let mut all: Vec<(String, SGradedGroupoid)> =
        shipped_gradings().into_iter().map(|(n, g)| (n.to_string(), g)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..200 {
        all.push((format!("random #{k}"), random_grading(&mut rng)));
    }
    for (name, gr) in &all {
        ensure(gr.semigroup().len() <= 4 || !name.starts_with("random"), format!("{name}: |S| > 4"))?;
        ensure(gr.groupoid().n1() <= MAX_ARROWS || !name.starts_with("random"), format!("{name}: |L¹| > 8"))?;
        let a = action_from_grading(gr).map_err(|e| format!("{name}: {e}"))?;
        ensure(round_trip_grading(gr).map_err(|e| format!("{name}: {e}"))?, format!("{name}: grading round trip"))?;
        ensure(round_trip_action(&a).map_err(|e| format!("{name}: {e}"))?, format!("{name}: action round trip"))?;
        // slice sizes survive the trip
        let back = peqlib::action::transformation_groupoid(&a).map_err(|e| e.to_string())?.graded;
        let sizes = |g: &SGradedGroupoid| sorted(g.slices().iter().map(|s| s.count_ones(..)).collect());
        ensure(sizes(&back) == sizes(gr), format!("{name}: slice sizes differ"))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok(format!("{} gradings, {:.2?}", all.len(), start.elapsed()))
}

fn c4_sections() -> Outcome {
    let mut n = 0;
    for (name, gr) in shipped_gradings() {
        let l = gr.groupoid();
        let f = fell_bundle_from_grading(&gr).map_err(|e| format!("{name}: {e}"))?;
        let sect = f.section_algebra().map_err(|e| format!("{name}: {e}"))?;
        ensure(sect.algebra.dim() == l.n1(), format!("{name}: dim {} ≠ |L¹| = {}", sect.algebra.dim(), l.n1()))?;
        let expected = blocks_by_orbits(l).ok_or(format!("{name}: non-abelian isotropy"))?;
        let conv = sorted(groupoid_algebra(l).blocks().map_err(|e| e.to_string())?);
        ensure(conv == expected, format!("{name}: groupoid algebra blocks {conv:?} ≠ {expected:?}"))?;
        ensure(
            sect.blocks.clone().map(sorted) == Some(expected.clone()),
            format!("{name}: section blocks {:?} ≠ {expected:?}", sect.blocks),
        )?;
        n += 1;
    }
    Ok(format!("{n} gradings, dimensions and blocks agree"))
}

fn c5_e_kernel() -> Outcome {
    let mut details = Vec::new();
    for (name, gr) in shipped_gradings() {
        let total: usize = gr.slices().iter().map(|s| s.count_ones(..)).sum();
        let expected = total - gr.groupoid().n1();
        let f = fell_bundle_from_grading(&gr).map_err(|e| format!("{name}: {e}"))?;
        let k = f.e_map_kernel();
        ensure(k.dim == expected, format!("{name}: kernel {} ≠ {expected}", k.dim))?;
        ensure(k.spanned_by_relations, format!("{name}: relations do not span the kernel"))?;
        details.push(format!("{name} {}", k.dim));
    }
    ensure(details[0] == "Gm/S3 2", "Gm/S3 kernel is not 2")?;
    let mm = matrix_model();
    let k = mm.bundle.e_map_kernel();
    let sum: usize = mm.bundle.dims().iter().sum();
    let sect = mm.bundle.section_algebra().map_err(|e| e.to_string())?;
    ensure(k.dim == 8 && k.dim == sum - sect.algebra.dim(), format!("matrix model kernel {}", k.dim))?;
    ensure(k.spanned_by_relations, "matrix model: relations do not span the kernel")?;
    Ok(format!("{}; matrix model 8", details.join(", ")))
}

fn c6_desingularize() -> Outcome {
    let mut runs = 0;
    for (name, h) in fixture_groupoids() {
        let bis = bisections(&h).map_err(|e| format!("{name}: {e}"))?;
        let act =
            SActionOnSpace::left_translation(&h, &bis.semigroup, &bis.sets).map_err(|e| format!("{name}: {e}"))?;
        let z = h.g1();
        let opens = opens_by_enumeration(z);
        let mut covers = vec![vec![z.full_set()], (0..z.len()).map(|x| z.nbhd(x).clone()).collect::<Vec<_>>()];
        for u in &opens {
            for v in &opens {
                let mut w = u.clone();
                w.union_with(v);
                if w == z.full_set() && !u.is_clear() && !v.is_clear() && covers.len() < 8 {
                    covers.push(vec![u.clone(), v.clone()]);
                }
            }
        }
        for cover in covers {
            let d = desingularize(&act, &cover).map_err(|e| format!("{name}: {e}"))?;
            let g = d.graded.groupoid();
            ensure(g.predicates().basic, format!("{name}: desingularization is not basic"))?;
            let (orbits, _) = g.orbit_space();
            ensure(homeomorphic(&orbits, h.g0()), format!("{name}: orbit space is not H⁰"))?;
            let alg = groupoid_algebra(g);
            let blocks = alg.blocks().map_err(|e| e.to_string())?;
            ensure(blocks.len() == h.n0(), format!("{name}: {} blocks, |H⁰| = {}", blocks.len(), h.n0()))?;
            ensure(
                morita_equivalent(&alg, &diagonal_algebra(h.n0())).map_err(|e| e.to_string())?,
                format!("{name}: not Morita equivalent"),
            )?;
            runs += 1;
        }
    }
    Ok(format!("{runs} fixture/cover pairs"))
}

/// Pointwise involution and inclusion identities of a simplified action.
fn coherence_oracle(a: &SAction) -> Result<usize, String> {
    let s = a.semigroup();
    let n = s.len();
    let mut checks = 0;
    let len = |t: usize| a.x(t).len();
    for t in 0..n {
        let ts = s.star(t);
        for x in 0..len(t) {
            let xs = a.star(t)[x];
            ensure(a.star(ts)[xs] == x, "x** ≠ x")?;
            let xxs = a.mu(t, ts, x, xs).ok_or("x·x* undefined")?;
            ensure(a.mu(s.mul(t, ts), t, xxs, x) == Some(x), format!("x x* x ≠ x in X_{}", s.name(t)))?;
            checks += 1;
        }
        for u in 0..n {
            for x in 0..len(t) {
                for y in 0..len(u) {
                    if let Some(xy) = a.mu(t, u, x, y) {
                        let lhs = a.star(s.mul(t, u))[xy];
                        let rhs = a.mu(s.star(u), ts, a.star(u)[y], a.star(t)[x]);
                        ensure(rhs == Some(lhs), format!("(xy)* ≠ y*x* for ({}, {})", s.name(t), s.name(u)))?;
                        checks += 1;
                    }
                }
            }
        }
    }
    for t in 0..n {
        for u in (0..n).filter(|&u| s.leq(t, u)) {
            let jut = a.j(u, t).ok_or("missing j")?;
            let jst = a.j(s.star(u), s.star(t)).ok_or("missing j*")?;
            for x in 0..len(t) {
                ensure(jst[a.star(t)[x]] == a.star(u)[jut[x]], "j_{u*,t*}(x*) ≠ j_{u,t}(x)*")?;
                checks += 1;
            }
            for v in (0..n).filter(|&v| s.leq(u, v)) {
                let jvu = a.j(v, u).ok_or("missing j")?;
                let jvt = a.j(v, t).ok_or("missing j")?;
                for x in 0..len(t) {
                    ensure(jvu[jut[x]] == jvt[x], "j_{v,u}∘j_{u,t} ≠ j_{v,t}")?;
                    checks += 1;
                }
            }
            // inclusions are compatible with multiplication
            for w in 0..n {
                let jw = a.j(s.mul(u, w), s.mul(t, w)).ok_or("missing j for products")?;
                for x in 0..len(t) {
                    for y in 0..len(w) {
                        if let Some(xy) = a.mu(t, w, x, y) {
                            ensure(a.mu(u, w, jut[x], y) == Some(jw[xy]), "j(x)·y ≠ j(x·y)")?;
                            checks += 1;
                        }
                    }
                }
            }
        }
    }
    let rep = a.coherence();
    if let Some(f) = rep.failures.first() {
        return Err(f.clone());
    }
    Ok(checks + rep.checks)
}

fn c7_coherence() -> Outcome {
    let mut actions: Vec<(String, SAction)> = Vec::new();
    for (name, gr) in shipped_gradings() {
        actions.push((name.to_string(), action_from_grading(&gr).map_err(|e| e.to_string())?));
    }
    actions.push(("S3 on Σ".into(), s3_on_sigma().induced_action().map_err(|e| e.to_string())?));
    let a = action_from_grading(&gm_s3()).map_err(|e| e.to_string())?;
    let id = identity_equivalence(&a.groupoid_arc());
    actions.push(("transported Gm/S3".into(), transport_action(&a, &id).map_err(|e| e.to_string())?.action));
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..40 {
        let sa = random_space_action(&mut rng, 4);
        actions.push((format!("random action #{k}"), sa.induced_action().map_err(|e| e.to_string())?));
        actions.push((
            format!("random grading #{k}"),
            action_from_grading(&random_grading(&mut rng)).map_err(|e| e.to_string())?,
        ));
    }
    let mut checks = 0;
    for (name, a) in &actions {
        checks += coherence_oracle(a).map_err(|e| format!("{name}: {e}"))?;
    }
    Ok(format!("{} actions, {checks} pointwise checks", actions.len()))
}

/// Class of `[p, q, r]` in `(X ×_H Y) ×_G X`.
fn triple(xy: &Composite, xyx: &Composite, p: usize, q: usize, r: usize) -> Option<usize> {
    xyx.class(xy.class(p, q)?, r)
}

fn duality_oracle(x: &PartialEquivalence) -> Result<(), String> {
    let e = |err: peqlib::bibundle::PeqError| err.to_string();
    let g = x.left();
    let p = pairing(x).map_err(e)?;

    // pairings: x₁ = ⟨x₁,x₂⟩·x₂ and x₂ = x₁·⟨x₁,x₂⟩, and the canonical map is
    // among the brute-force isomorphisms
    let lc = &p.left_composite;
    for c in 0..lc.peq.len() {
        let (a, b) = lc.representative(c);
        let arrow = g.g1().index_of(p.left_target.space().name(p.left_map.assignment[c])).unwrap();
        ensure(x.act_left(arrow, b) == Some(a), "left pairing does not send [x₁,x₂] to the arrow x₁x₂⁻¹")?;
    }
    let rc = &p.right_composite;
    for c in 0..rc.peq.len() {
        let (a, b) = rc.representative(c);
        let arrow = x.right().g1().index_of(p.right_target.space().name(p.right_map.assignment[c])).unwrap();
        ensure(x.act_right(a, arrow) == Some(b), "right pairing does not send [x₁,x₂] to x₁⁻¹x₂")?;
    }
    let isos = |a: &PartialEquivalence, b: &PartialEquivalence| -> Vec<Vec<usize>> {
        find_bibundle_maps(a, b).into_iter().filter(|m| m.is_isomorphism).map(|m| m.assignment).collect()
    };
    ensure(isos(&lc.peq, &p.left_target).contains(&p.left_map.assignment), "left pairing not found by enumeration")?;
    ensure(isos(&rc.peq, &p.right_target).contains(&p.right_map.assignment), "right pairing not found by enumeration")?;

    // uniqueness of the normalized isomorphism X* ≅ Y, for a relabelled Y
    let xd = dual(x);
    let y = compose(&xd, &identity_equivalence(&x.left_arc())).map_err(e)?.peq;
    let xy = compose(x, &y).map_err(e)?;
    let xyx = compose(&xy.peq, x).map_err(e)?;
    let betas = isos(&xyx.peq, x);
    ensure(!betas.is_empty(), "X ×_H Y ×_G X is not isomorphic to X")?;
    let psis = isos(&xd, &y);
    for beta in betas.iter().take(6) {
        let normalized = psis
            .iter()
            .filter(|psi| (0..x.len()).all(|a| triple(&xy, &xyx, a, psi[a], a).map(|c| beta[c]) == Some(a)))
            .count();
        ensure(normalized == 1, format!("{normalized} normalized isomorphisms X* ≅ Y"))?;
    }

    // idempotent trivialization of E = X ×_H X* for every isomorphism μ
    let ex = &lc.peq;
    let ee = compose(ex, ex).map_err(e)?;
    let gu = unit_restriction(&x.left_arc(), &ex.range_set()).map_err(e)?;
    let phis = isos(ex, &gu);
    let arrow = |k: usize| g.g1().index_of(gu.space().name(k)).unwrap();
    for mu in isos(&ee.peq, ex).iter().take(6) {
        let tr = idempotent_trivialize(ex, &ee, mu).map_err(e)?;
        let good: Vec<&Vec<usize>> = phis
            .iter()
            .filter(|phi| {
                ee.pairs.iter().all(|&(a, b)| {
                    let c = ee.class(a, b).unwrap();
                    g.mul(arrow(phi[a]), arrow(phi[b])) == Some(arrow(phi[mu[c]]))
                })
            })
            .collect();
        ensure(good.len() == 1, format!("{} trivializations commute with μ", good.len()))?;
        ensure((0..ex.len()).all(|a| arrow(good[0][a]) == tr.iso[a]), "trivialization differs from enumeration")?;
    }
    Ok(())
}

fn c8_duality() -> Outcome {
    let start = Instant::now();
    let mut peqs: Vec<(String, PartialEquivalence)> = vec![("swap".into(), swap()), ("L_g".into(), fixtures::l_g())];
    for (name, g) in fixture_groupoids() {
        let g = Arc::new(g);
        for (k, x) in enumerate_peqs(&g, 12).into_iter().enumerate() {
            peqs.push((format!("{name}#{k}"), x));
        }
    }
    let mut n = 0;
    for (name, x) in peqs.iter().filter(|(_, x)| x.len() <= 12) {
        duality_oracle(x).map_err(|e| format!("{name}: {e}"))?;
        n += 1;
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("{n} partial equivalences, {:.2?}", start.elapsed()))
}

fn c9_models() -> Outcome {
    let gm = fixtures::gm();
    let s3 = fixtures::s3();
    let phi: Vec<PointSet> = fixtures::gm_slices().iter().map(|v| gm.g1().set_of(v).unwrap()).collect();
    let w = is_wide(&s3, &gm, &phi).map_err(|e| e.to_string())?;
    ensure(w.wide, format!("S3 → Bis(Gm) is not wide: {w:?}"))?;
    let bis = bisections(&gm).map_err(|e| e.to_string())?;
    let idx: Vec<usize> = phi.iter().map(|b| bis.sets.iter().position(|c| c == b).unwrap()).collect();
    let on_objects = SActionOnSpace::from_bisections(&gm, &bis.semigroup, &bis.sets).map_err(|e| e.to_string())?;
    let z = z_isomorphism_check(&s3, &idx, &on_objects).map_err(|e| e.to_string())?;
    ensure(z.is_none(), format!("not a Σ-isomorphism: {z:?}"))?;

    let z2 = InvSemigroup::cyclic_group(2);
    let sub = vec![phi[s3.el("1")].clone(), phi[s3.el("g")].clone()];
    let w2 = is_wide(&z2, &gm, &sub).map_err(|e| e.to_string())?;
    ensure(!w2.wide, "{1,g} is wide")?;

    let a = s3_on_sigma().induced_action().map_err(|e| e.to_string())?;
    let (orbits, _) = a.groupoid().orbit_space();
    let psi: Vec<usize> = orbits.names().iter().map(|p| gm.g0().index_of(p).unwrap()).collect();
    let ext = extend_grading_to_bisections(&a, &gm, &phi, &psi).map_err(|e| e.to_string())?;
    ensure(ext.graded.slices().len() == 4, format!("{} slices", ext.graded.slices().len()))?;
    let expected = SGradedGroupoid::new(bis.semigroup.clone(), Arc::new(gm.clone()), bis.sets.clone())
        .map_err(|e| e.to_string())?;
    ensure(ext.graded.is_isomorphic(&expected), "extension is not the Bis(Gm)-grading of Gm")?;
    Ok("S3 wide and a Σ-isomorphism, {1,g} not wide, four-slice extension".into())
}

fn c10_predicates() -> Outcome {
    let sigma = fixtures::sigma();
    ensure(!locally_hausdorff(&sigma), "oracle: Σ is locally Hausdorff")?;
    ensure(!sigma.is_locally_hausdorff(), "Σ passes the diagonal criterion")?;

    // covering groupoids of every two-set cover of small spaces
    let mut spaces = vec![sigma.clone(), fixtures::d2(), fixtures::cech3_cover().0];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..12 {
        spaces.push(random_space(&mut rng, 4));
    }
    let mut coverings = Vec::new();
    for z in &spaces {
        ensure(z.is_locally_hausdorff() == locally_hausdorff(z), "diagonal criterion disagrees with the oracle")?;
        let opens = opens_by_enumeration(z);
        for u in &opens {
            for v in &opens {
                let mut w = u.clone();
                w.union_with(v);
                if w != z.full_set() {
                    continue;
                }
                let f = cover_map(z, &[u.clone(), v.clone()]).map_err(|e| e.to_string())?;
                let g = covering_groupoid(&f).map_err(|e| e.to_string())?;
                ensure(g.predicates().basic, "covering groupoid is not basic")?;
                ensure(homeomorphic(&g.orbit_space().0, z), "orbit space differs from the codomain")?;
                coverings.push(g);
            }
        }
    }
    let n_cov = coverings.len();

    let mut all: Vec<FinGroupoid> = fixture_groupoids().into_iter().map(|(_, g)| g).collect();
    all.extend(coverings);
    all.push(linking_groupoid(&fixtures::l_g(), false).map_err(|e| e.to_string())?.0);
    all.push(linking_groupoid(&swap(), false).map_err(|e| e.to_string())?.0);
    for _ in 0..30 {
        if let Ok(gr) = germ_groupoid(&random_space_action(&mut rng, 4)) {
            all.push(gr.groupoid().clone());
        }
    }
    let mut tally: BTreeMap<&str, usize> = BTreeMap::new();
    for g in &all {
        if !hausdorff(g.g0()) {
            continue;
        }
        let p = g.predicates();
        *tally.entry("hausdorff objects").or_default() += 1;
        if p.free && p.proper {
            *tally.entry("free and proper").or_default() += 1;
            ensure(p.basic, "free and proper but not basic")?;
        }
    }
    Ok(format!("{n_cov} covering groupoids basic; {tally:?}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("finite model reproduction", c1_section9),
        ("germ model reproduction", c2_germ_model),
        ("grading round trips", c3_round_trips),
        ("section algebras equal groupoid algebras", c4_sections),
        ("kernel of the E-map", c5_e_kernel),
        ("desingularized left translations", c6_desingularize),
        ("involution and inclusion coherence", c7_coherence),
        ("duality oracle", c8_duality),
        ("wide and model checks", c9_models),
        ("Hausdorff and covering predicates", c10_predicates),
    ];
    let mut failures = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match res {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d}", k + 1),
            Err(d) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {d}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
