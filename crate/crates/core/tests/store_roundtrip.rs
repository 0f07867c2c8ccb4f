mod common;

use std::fs;

use darts_core::skill::Quadrature;
use darts_core::store::{self, Cache};
use darts_core::zsg::solve_equilibrium;
use darts_core::{solve_ns, BoardGeometry, Error, Exec, SkillModel, SolveConfig};

fn bits(v: &[[f64; darts_core::turn::NUM_SLOTS]]) -> Vec<u64> {
    v.iter().flatten().map(|x| x.to_bits()).collect()
}

#[test]
fn hit_tables_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let hits = common::pro_hits(10.0, 1.0);
    let path = dir.path().join("a.hits.bin");
    store::save_hits(&path, &hits).unwrap();
    let back = store::load_hits(&path).unwrap();
    assert_eq!(back, hits);
    assert_eq!(back.content_hash(), hits.content_hash());
}

#[test]
fn solutions_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let hits_a = common::pro_hits(10.0, 1.0);
    let hits_b = common::pro_hits(10.0, 1.2);
    let cfg = SolveConfig::with_start(30);

    let ns = solve_ns(&hits_a, &cfg).unwrap();
    let p = dir.path().join("a.nssol.bin");
    store::save_ns(&p, &ns).unwrap();
    let back = store::load_ns(&p).unwrap();
    assert_eq!(bits(&back.values), bits(&ns.values));
    assert_eq!(back.policy, ns.policy);
    assert_eq!(back.hits_hash, ns.hits_hash);

    let sol = solve_equilibrium(&hits_a, &hits_b, &cfg).unwrap();
    let p = dir.path().join("ab.zsgsol.bin");
    store::save_zsg(&p, &sol).unwrap();
    let back = store::load_zsg(&p).unwrap();
    assert_eq!(bits(&back.values.a_turn), bits(&sol.values.a_turn));
    assert_eq!(bits(&back.values.b_turn), bits(&sol.values.b_turn));
    assert_eq!(back.policy, sol.policy);
    assert_eq!(back.alternations, sol.alternations);
    assert_eq!(back.ns_b.policy, sol.ns_b.policy);
    let h = store::read_header(&p).unwrap();
    assert_eq!(h.kind, store::ArtifactKind::ZsgSol);
    assert_eq!(h.dims, vec![30, darts_core::turn::NUM_SLOTS as u64]);
}

#[test]
fn damaged_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let hits = common::toy_d1(0.4);
    let path = dir.path().join("t.hits.bin");
    store::save_hits(&path, &hits).unwrap();
    let good = fs::read(&path).unwrap();

    let mut wrong_version = good.clone();
    wrong_version[8] = 99;
    fs::write(&path, &wrong_version).unwrap();
    assert!(matches!(store::load_hits(&path), Err(Error::Version { found: 99, .. })));

    fs::write(&path, &good[..good.len() - 5]).unwrap();
    assert!(matches!(store::load_hits(&path), Err(Error::Corrupt(_))));

    let mut flipped = good.clone();
    let mid = good.len() - 40;
    flipped[mid] ^= 1;
    fs::write(&path, &flipped).unwrap();
    assert!(matches!(store::load_hits(&path), Err(Error::Corrupt(_))));

    fs::write(&path, &good).unwrap();
    assert!(matches!(store::load_ns(&path), Err(Error::WrongKind { .. })));
}

#[test]
fn skill_models_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let skill = SkillModel::synthetic_pro("pro", 1.0);
    let path = dir.path().join("pro.dartskill.json");
    store::save_skill(&path, &skill).unwrap();
    assert_eq!(store::load_skill(&path).unwrap(), skill);
    let text = fs::read_to_string(&path).unwrap().replace("\"format_version\": 1", "\"format_version\": 7");
    fs::write(&path, text).unwrap();
    assert!(matches!(store::load_skill(&path), Err(Error::Version { found: 7, .. })));
}

#[test]
fn cache_reuses_matching_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let geom = BoardGeometry::default();
    let grid = geom.make_grid(10.0).unwrap();
    let skill = SkillModel::synthetic_pro("pro", 1.0);
    let q = Quadrature::default();

    let cache = Cache::new(dir.path());
    let first = cache.hits(&geom, &skill, &grid, q, Exec::default()).unwrap();
    assert_eq!(cache.computations(), 1);
    let again = cache.hits(&geom, &skill, &grid, q, Exec::default()).unwrap();
    assert_eq!(cache.computations(), 1);
    assert_eq!(first, again);

    let cfg = SolveConfig::with_start(40);
    let ns = cache.ns(&first, &cfg).unwrap();
    assert_eq!(bits(&cache.ns(&first, &cfg).unwrap().values), bits(&ns.values));
    assert_eq!(cache.computations(), 2);

    let other = SkillModel::synthetic_pro("pro", 1.5);
    cache.hits(&geom, &other, &grid, q, Exec::default()).unwrap();
    assert_eq!(cache.computations(), 3);

    // A damaged cache entry is recomputed, not trusted.
    for entry in fs::read_dir(dir.path()).unwrap() {
        let p = entry.unwrap().path();
        if p.to_string_lossy().ends_with(".nssol.bin") {
            fs::write(&p, b"garbage").unwrap();
        }
    }
    assert_eq!(bits(&cache.ns(&first, &cfg).unwrap().values), bits(&ns.values));
    assert_eq!(cache.computations(), 4);
}
