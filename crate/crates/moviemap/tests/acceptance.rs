//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any fails. Runs as part of `cargo test`; `cargo test --test acceptance`
//! runs it alone.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use moviemap::formats::read_registered;
use moviemap::frames::decode_png;
use moviemap::package::{export_package, load_package, validate_manifest, ExportInput, Package};
use moviemap::pipeline;
use moviemap_core::assembly::{
    build_graph, cluster_intersections, exits_toward, split_sections, ExitPolicy, NodeRef, DEFAULT_CLUSTER_RADIUS_M,
};
use moviemap_core::detection::{detect_geometric, detect_pair, refine_visual, DetectionParams};
use moviemap_core::fixture::{generate, Fixture, FixtureSpec, Layout};
use moviemap_core::math::angle_dist;
use moviemap_core::registration::{apply_transform, compute_similarity, register_area, RegisteredTrajectory};
use moviemap_core::scorer::{FrameScorer, OrbScorer, PatchCorrelation};
use moviemap_core::turning::{precompute_turns, synthesize_turn, yaw_rotate, TurnMethod, TurnSpec};
use moviemap_core::{EquirectFrame, MapPoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(layout: Layout, seed: u64, noise_m: f64) -> (Fixture, Vec<RegisteredTrajectory>) {
    let f = generate(&FixtureSpec {
        noise_m,
        ..FixtureSpec::new(layout, seed)
    });
    let regs = register_area(&f.trajectories).expect("fixture registers");
    (f, regs)
}

fn by_id<'a>(regs: &'a [RegisteredTrajectory], id: &str) -> &'a RegisteredTrajectory {
    regs.iter().find(|r| r.video_id == id).expect("video present")
}

/// Exhaustive nearest keyframe pair, ties to the smallest `(i, j)`.
fn brute_nearest(a: &RegisteredTrajectory, b: &RegisteredTrajectory) -> (usize, usize, f64) {
    let mut best = (f64::INFINITY, 0, 0);
    for (i, p) in a.map_positions.iter().enumerate() {
        for (j, q) in b.map_positions.iter().enumerate() {
            let d2 = (p.x_m - q.x_m).powi(2) + (p.y_m - q.y_m).powi(2);
            if (d2, i, j) < best {
                best = (d2, i, j);
            }
        }
    }
    (best.1, best.2, best.0)
}

/// Similarity evaluated as an explicit matrix, independent of the crate.
fn oracle_apply(rot: f64, scale: f64, t: [f64; 2], p: [f64; 3]) -> [f64; 2] {
    let (m00, m01, m10, m11) = (scale * rot.cos(), -scale * rot.sin(), scale * rot.sin(), scale * rot.cos());
    [m00 * p[0] + m01 * p[1] + t[0], m10 * p[0] + m11 * p[1] + t[1]]
}

fn c1_registration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let pool: Vec<_> = Layout::ALL
        .into_iter()
        .flat_map(|l| generate(&FixtureSpec { noise_m: 0.4, ..FixtureSpec::new(l, 9) }).trajectories)
        .collect();
    let (mut worst_end, mut worst_shape) = (0.0f64, 0.0f64);
    for case in 0..100 {
        let mut traj = pool[case % pool.len()].clone();
        let (rot, scale) = (rng.gen_range(-PI..PI), rng.gen_range(0.05..20.0));
        let tr = [rng.gen_range(-5e4..5e4), rng.gen_range(-5e4..5e4)];
        let n = traj.len();
        let truth: Vec<[f64; 2]> = traj.poses.iter().map(|p| oracle_apply(rot, scale, tr, p.position)).collect();
        traj.ref_start = MapPoint::new(truth[0][0], truth[0][1]);
        traj.ref_end = MapPoint::new(truth[n - 1][0], truth[n - 1][1]);
        let s = compute_similarity(&traj).map_err(|e| format!("case {case}: {e}"))?;
        let reg = apply_transform(&traj, &s);
        let baseline = traj.ref_start.distance(&traj.ref_end);
        for (k, want) in truth.iter().enumerate() {
            let got = reg.map_positions[k];
            let err = (got.x_m - want[0]).hypot(got.y_m - want[1]);
            if k == 0 || k == n - 1 {
                worst_end = worst_end.max(err);
            } else {
                worst_shape = worst_shape.max(err / baseline);
            }
        }
    }
    ensure(worst_end <= 1e-6, || format!("endpoint error {worst_end:e} m"))?;
    ensure(worst_shape <= 1e-9, || format!("relative shape error {worst_shape:e}"))?;
    Ok(format!("endpoint err {worst_end:.1e} m, shape err {worst_shape:.1e}"))
}

fn c2_oracle() -> Outcome {
    let params = DetectionParams::default();
    let (mut compared, mut far) = (0, 0);
    let mut detector = Duration::ZERO;
    for layout in Layout::ALL {
        for seed in 0..20 {
            for noise in [0.0, 0.5] {
                let (_, regs) = fixture(layout, seed, noise);
                for (i, a) in regs.iter().enumerate() {
                    for b in &regs[i + 1..] {
                        let (a, b) = if a.video_id <= b.video_id { (a, b) } else { (b, a) };
                        let t = Instant::now();
                        let o = detect_pair::<PatchCorrelation>(a, b, None, &params);
                        detector += t.elapsed();
                        let (bi, bj, d2) = brute_nearest(a, b);
                        let tag = || format!("{} seed {seed} noise {noise} {}/{}", layout.name(), a.video_id, b.video_id);
                        if d2.sqrt() <= params.intersect_threshold_m {
                            let g = o.geometric.ok_or_else(|| format!("{}: no candidate at {:.2} m", tag(), d2.sqrt()))?;
                            ensure((g.pose_a, g.pose_b) == (bi, bj), || {
                                format!("{}: pruned ({}, {}) vs exhaustive ({bi}, {bj})", tag(), g.pose_a, g.pose_b)
                            })?;
                            ensure(o.record.is_some(), || format!("{}: close pair without record", tag()))?;
                            compared += 1;
                        } else {
                            // beyond the threshold the detector must stay silent
                            ensure(o.record.is_none(), || format!("{}: record for a pair {:.2} m apart", tag(), d2.sqrt()))?;
                            far += 1;
                        }
                    }
                }
            }
        }
    }
    ensure(detector < Duration::from_secs(30), || format!("detector took {detector:?}"))?;
    Ok(format!("{compared} intersecting pairs identical, {far} distant pairs without record, detector {:.2} s", detector.as_secs_f64()))
}

fn c3_pruning() -> Outcome {
    let f = generate(&FixtureSpec {
        street_length_m: 2499.5,
        ..FixtureSpec::new(Layout::Cross, 11)
    });
    let regs = register_area(&f.trajectories).map_err(|e| e.to_string())?;
    let (a, b) = (by_id(&regs, "ew_f"), by_id(&regs, "ns_f"));
    ensure(a.len() == 5000 && b.len() == 5000, || format!("{} x {} poses", a.len(), b.len()))?;
    let o = detect_pair::<PatchCorrelation>(a, b, None, &DetectionParams::default());
    let brute = (a.len() * b.len()) as u64;
    let share = o.evaluations as f64 / brute as f64;
    ensure(share < 0.2, || format!("{} of {brute} evaluations", o.evaluations))?;
    let (bi, bj, d2) = brute_nearest(a, b);
    let g = o.geometric.ok_or("no candidate pair")?;
    ensure((g.pose_a, g.pose_b) == (bi, bj), || format!("pruned ({}, {}) vs ({bi}, {bj})", g.pose_a, g.pose_b))?;
    let rec = o.record.ok_or("no record")?;
    ensure(rec.distance_m == d2.sqrt(), || format!("distance {} vs {}", rec.distance_m, d2.sqrt()))?;
    Ok(format!("{} of {brute} evaluations ({:.3} %)", o.evaluations, share * 100.0))
}

fn recovered<S: FrameScorer>(scorer: &S, cases: &[(Fixture, Vec<RegisteredTrajectory>, (usize, usize))]) -> Result<usize, String> {
    let window = DetectionParams::default().refine_window;
    let mut hits = 0;
    for (f, regs, seed) in cases {
        let t = &f.truth.crossings[0].pairs[0];
        let (a, b) = (by_id(regs, &t.video_a), by_id(regs, &t.video_b));
        let r = refine_visual(&f.frames, scorer, *seed, a, b, window).map_err(|e| e.to_string())?;
        hits += usize::from((r.pose_a, r.pose_b) == (t.pose_a, t.pose_b));
    }
    Ok(hits)
}

fn c4_refinement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases: Vec<_> = (0..20)
        .map(|seed| {
            let (f, regs) = fixture(Layout::Cross, seed, 0.0);
            let t = &f.truth.crossings[0].pairs[0];
            let mut shift = |p: usize| (p as i64 + if rng.gen() { 5 } else { -5 }) as usize;
            let s = (shift(t.pose_a), shift(t.pose_b));
            (f, regs, s)
        })
        .collect();
    let orb = recovered(&OrbScorer::default(), &cases)?;
    let patch = recovered(&PatchCorrelation::default(), &cases)?;
    ensure(orb >= 18 && patch == 20, || format!("descriptor {orb}/20, patch {patch}/20"))?;
    Ok(format!("descriptor {orb}/20, patch {patch}/20"))
}

fn c5_graph() -> Outcome {
    let mut notes = Vec::new();
    for (seed, noise) in [(0, 0.0), (1, 0.0), (2, 0.25), (3, 0.5)] {
        let (f, regs) = fixture(Layout::Grid2x2, seed, noise);
        let tag = format!("seed {seed} noise {noise}");
        let report = detect_geometric(&regs, &DetectionParams::default());
        let streets = regs.iter().map(|r| (r.video_id.clone(), r.street_id().to_string())).collect();
        let nodes = cluster_intersections(&report.records, DEFAULT_CLUSTER_RADIUS_M, &streets);
        ensure(nodes.len() == 4, || format!("{tag}: {} nodes", nodes.len()))?;
        for n in &nodes {
            ensure(n.members.len() == 4, || format!("{tag}: {} has {} frame pairs", n.node_id, n.members.len()))?;
        }
        let mut sections = Vec::new();
        for r in &regs {
            sections.extend(split_sections(r, &nodes).map_err(|e| e.to_string())?);
        }
        let graph = build_graph(&sections, &nodes, &regs).map_err(|e| e.to_string())?;
        let with_uturn = ExitPolicy {
            include_uturn: true,
            ..ExitPolicy::default()
        };
        let mut worst = 0.0f64;
        for id in graph.nodes.keys() {
            let arriving: Vec<_> = graph.sections.values().filter(|s| s.end_node.node() == Some(id.as_str())).collect();
            ensure(arriving.len() == 4, || format!("{tag}: {id} has {} arrivals", arriving.len()))?;
            for s in arriving {
                let exits = exits_toward(&graph, id, &s.section_id, &with_uturn).map_err(|e| e.to_string())?;
                ensure(exits.len() == 4, || format!("{tag}: {id} from {} offers {} exits", s.section_id, exits.len()))?;
                for e in exits {
                    let d = [0.0, FRAC_PI_2, -FRAC_PI_2, PI].iter().map(|t| angle_dist(e.bearing_rad, *t)).fold(f64::INFINITY, f64::min);
                    worst = worst.max(d);
                }
            }
        }
        ensure(worst <= 0.1, || format!("{tag}: bearing off by {worst:.3} rad"))?;
        coverage(&graph, &regs).map_err(|e| format!("{tag}: {e}"))?;
        for (v, n) in &f.truth.section_counts {
            let got = graph.sections.values().filter(|s| &s.video_id == v).count();
            ensure(got == *n, || format!("{tag}: {v} has {got} sections, truth {n}"))?;
        }
        if seed == 0 {
            let assets = precompute_turns(&graph, &regs, &f.frames, 8, TurnMethod::CBlendRotate, &ExitPolicy::default());
            ensure(assets.failures.is_empty(), || format!("{} turn failures", assets.failures.len()))?;
            let mut per_node: BTreeMap<&str, usize> = BTreeMap::new();
            for a in &assets.assets {
                *per_node.entry(a.plan.node_id.as_str()).or_default() += 1;
                ensure(a.frames.len() == 8, || "turn asset length".into())?;
            }
            ensure(per_node.len() == 4 && per_node.values().all(|&n| n == 8), || format!("turn assets per node {per_node:?}"))?;
        }
        notes.push(format!("{worst:.3}"));
    }
    Ok(format!("4 nodes x 4 exits x 4 frame pairs x 8 turns; worst bearing error per run {}", notes.join("/")))
}

fn coverage(graph: &moviemap_core::NavGraph, regs: &[RegisteredTrajectory]) -> Result<(), String> {
    for r in regs {
        let mut secs: Vec<_> = graph.sections.values().filter(|s| s.video_id == r.video_id).collect();
        secs.sort_by_key(|s| s.start_pose);
        let v = &r.video_id;
        ensure(!secs.is_empty(), || format!("{v} has no sections"))?;
        ensure(secs[0].start_pose == 0 && secs.last().unwrap().end_pose == r.len() - 1, || format!("{v} not covered end to end"))?;
        ensure(
            secs[0].start_node == NodeRef::PathEnd && secs.last().unwrap().end_node == NodeRef::PathEnd,
            || format!("{v} path ends are not PathEnd"),
        )?;
        for w in secs.windows(2) {
            ensure(w[0].end_pose == w[1].start_pose && w[0].end_node == w[1].start_node, || format!("{v} gap at {}", w[0].end_pose))?;
            let n = w[0].end_node.node().ok_or_else(|| format!("{v} inner cut without node"))?;
            ensure(graph.outgoing[n].iter().any(|e| e.section_id == w[1].section_id), || format!("{v}: {n} lacks exit {}", w[1].section_id))?;
        }
    }
    Ok(())
}

fn noise_frame(rng: &mut ChaCha8Rng, w: u32) -> EquirectFrame {
    let px = (0..(w * w / 2 * 3)).map(|_| rng.gen()).collect();
    EquirectFrame::new(w, w / 2, px).unwrap()
}

fn channel_sums(f: &EquirectFrame) -> [u64; 3] {
    let mut s = [0u64; 3];
    for (k, v) in f.pixels().iter().enumerate() {
        s[k % 3] += u64::from(*v);
    }
    s
}

fn c6_turning() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    for case in 0..50 {
        let w = 2 * rng.gen_range(8..160);
        let spec = TurnSpec {
            frame_i: noise_frame(&mut rng, w),
            frame_j: noise_frame(&mut rng, w),
            delta_yaw_rad: rng.gen_range(-PI..PI),
            n_frames: rng.gen_range(2..40),
            method: TurnMethod::CBlendRotate,
        };
        let out = synthesize_turn(&spec).map_err(|e| e.to_string())?;
        ensure(out.len() == spec.n_frames, || format!("case {case}: {} frames", out.len()))?;
        ensure(out[0] == spec.frame_i && out[out.len() - 1] == spec.frame_j, || format!("case {case}: ends differ"))?;
        let yaw = rng.gen_range(-4.0 * PI..4.0 * PI);
        ensure(channel_sums(&yaw_rotate(&spec.frame_i, yaw)) == channel_sums(&spec.frame_i), || format!("case {case}: sums changed"))?;
    }
    for _ in 0..20 {
        let (a, b): ([u8; 3], [u8; 3]) = (rng.gen(), rng.gen());
        let out = synthesize_turn(&TurnSpec {
            frame_i: EquirectFrame::filled(32, 16, a).unwrap(),
            frame_j: EquirectFrame::filled(32, 16, b).unwrap(),
            delta_yaw_rad: rng.gen_range(-PI..PI),
            n_frames: rng.gen_range(2..40),
            method: TurnMethod::CBlendRotate,
        })
        .map_err(|e| e.to_string())?;
        for c in 0..3 {
            let seq: Vec<u8> = out.iter().map(|f| f.pixel(0, 0)[c]).collect();
            let up = seq.windows(2).all(|w| w[0] <= w[1]);
            let down = seq.windows(2).all(|w| w[0] >= w[1]);
            ensure(if a[c] <= b[c] { up } else { down }, || format!("channel {c} not monotone: {seq:?}"))?;
        }
        ensure(out.iter().all(|f| f.pixels().chunks(3).all(|q| q == &f.pixels()[..3])), || "blend of constants not constant".into())?;
    }
    Ok("50 random pairs bit-exact at both ends, sums conserved, 20 constant blends monotone".into())
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Follows every reference in a loaded package.
fn crawl(pkg: &Package) -> Result<usize, String> {
    validate_manifest(&pkg.manifest, Some(&pkg.root)).map_err(|e| e.to_string())?;
    let m = &pkg.manifest;
    let node_ids: BTreeSet<&str> = m.nodes.iter().map(|n| n.node_id.as_str()).collect();
    let mut assets = BTreeSet::new();
    for s in &m.sections {
        ensure(pkg.trajectories.contains_key(&s.video_id), || format!("{} video", s.section_id))?;
        for n in [&s.start_node, &s.end_node] {
            if let NodeRef::Node(id) = n {
                ensure(node_ids.contains(id.as_str()), || format!("{} node {id}", s.section_id))?;
            }
        }
        ensure(s.frames.len() == s.end_pose - s.start_pose + 1, || format!("{} frame count", s.section_id))?;
        assets.extend(s.frames.iter().cloned());
    }
    for e in &m.exits {
        ensure(node_ids.contains(e.node_id.as_str()) && pkg.section(&e.section_id).is_some(), || format!("exit {e:?}"))?;
    }
    for t in &m.turns {
        ensure(pkg.section(&t.from_section).is_some() && pkg.section(&t.to_section).is_some(), || format!("turn {t:?}"))?;
        ensure(t.frames.len() == m.frames_per_turn, || "turn length".into())?;
        assets.extend(t.frames.iter().cloned());
    }
    for b in &m.billboards {
        ensure(pkg.trajectories.contains_key(&b.video_id), || format!("billboard {}", b.billboard_id))?;
    }
    for rel in &assets {
        let bytes = fs::read(pkg.asset_path(rel)).map_err(|e| format!("{rel}: {e}"))?;
        decode_png(&bytes).map_err(|e| format!("{rel}: {e}"))?;
    }
    Ok(assets.len())
}

fn c7_package() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let f = generate(&FixtureSpec::new(Layout::Grid2x2, 7));
    let b = common::build(&f, dir.path(), TurnMethod::CBlendRotate, 30);
    let pkg = load_package(&b.pkg()).map_err(|e| e.to_string())?;
    ensure(pkg.manifest == b.manifest, || "loaded manifest differs from exported".into())?;
    ensure(pkg.graph == b.map.graph(), || "loaded graph differs from assembled".into())?;
    let n = crawl(&pkg)?;
    ensure(n + 1 == files(&b.pkg()).len(), || format!("{n} referenced assets, {} files", files(&b.pkg()).len()))?;

    let area = read_registered(&dir.path().join("reg")).map_err(|e| e.to_string())?;
    let frames = pipeline::frame_source(&area, None);
    let again = dir.path().join("pkg2");
    export_package(
        &ExportInput {
            registered: &area,
            map: &b.map,
            frames: &frames,
            turns_dir: &dir.path().join("turns"),
            turn_index: &b.turn_index,
        },
        &again,
    )
    .map_err(|e| e.to_string())?;
    ensure(files(&b.pkg()) == files(&again), || "second export differs".into())?;
    Ok(format!("{} sections, {} turns, {n} assets crawled, second export byte-identical", pkg.manifest.sections.len(), pkg.manifest.turns.len()))
}

fn mm(args: &[&str], cwd: &Path) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mm"))
        .args(args)
        .current_dir(cwd)
        .env("MM_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || format!("mm {}: {}", args[0], String::from_utf8_lossy(&out.stderr)))
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn c8_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    let start = Instant::now();
    let mut stages = Vec::new();
    let mut stage = |name: &str, args: &[&str]| -> Result<(), String> {
        let t = Instant::now();
        mm(args, d)?;
        stages.push(format!("{name} {:.1}s", t.elapsed().as_secs_f64()));
        Ok(())
    };
    stage("fixture", &["fixture", "--layout", "grid2x2", "--seed", "3", "--out", "fx"])?;
    stage("register", &["register", "--config", "fx/area.json", "--out", "reg"])?;
    stage("detect", &["detect", "--registered", "reg", "--out", "intersections.json"])?;
    stage("assemble", &["assemble", "--registered", "reg", "--intersections", "intersections.json", "--out", "map.json"])?;
    stage("turns", &["turns", "--map", "map.json", "--registered", "reg", "--out", "turns"])?;
    stage("export", &["export", "--registered", "reg", "--map", "map.json", "--turns", "turns", "--out", "pkg"])?;

    let port = std::net::TcpListener::bind("127.0.0.1:0").and_then(|l| l.local_addr()).map_err(|e| e.to_string())?.port();
    let addr = format!("127.0.0.1:{port}");
    let _server = Server(
        Command::new(env!("CARGO_BIN_EXE_mm"))
            .args(["serve", "--package", "pkg", "--addr", &addr])
            .current_dir(d)
            .env("MM_LOG", "warn")
            .stdout(Stdio::null())
            .spawn()
            .map_err(|e| e.to_string())?,
    );
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let requests = rt.block_on(http_crawl(&format!("http://{addr}")))?;
    let total = start.elapsed();
    ensure(total < Duration::from_secs(120), || format!("took {total:?}"))?;
    Ok(format!("{:.1} s total ({}), {requests} requests all 200", total.as_secs_f64(), stages.join(", ")))
}

async fn http_crawl(base: &str) -> Result<usize, String> {
    let client = reqwest::Client::new();
    let deadline = Instant::now() + Duration::from_secs(20);
    let manifest: serde_json::Value = loop {
        match client.get(format!("{base}/api/manifest")).send().await {
            Ok(r) if r.status() == 200 => break r.json().await.map_err(|e| e.to_string())?,
            Ok(r) => return Err(format!("/api/manifest: {}", r.status())),
            Err(_) if Instant::now() < deadline => tokio::time::sleep(Duration::from_millis(100)).await,
            Err(e) => return Err(format!("server never came up: {e}")),
        }
    };
    let arr = |k: &str| manifest[k].as_array().cloned().unwrap_or_default();
    let s = |v: &serde_json::Value, k: &str| v[k].as_str().unwrap_or_default().to_string();
    let mut urls = Vec::new();
    for sec in arr("sections") {
        let id = s(&sec, "section_id");
        urls.push(format!("/api/sections/{id}"));
        urls.push(format!("/api/position?section={id}&t=0"));
        for k in 0..sec["frames"].as_array().map_or(0, Vec::len) {
            urls.push(format!("/api/sections/{id}/frames/{k}"));
        }
        if let Some(n) = sec["end_node"]["node"].as_str() {
            urls.push(format!("/api/exits?node={n}&arriving={id}"));
        }
    }
    for n in arr("nodes") {
        urls.push(format!("/api/exits?node={}", s(&n, "node_id")));
    }
    for t in arr("turns") {
        for k in 0..t["frames"].as_array().map_or(0, Vec::len) {
            urls.push(format!("/api/turns/{}/{}/{}/{k}", s(&t, "node_id"), s(&t, "from_section"), s(&t, "to_section")));
        }
    }
    for b in arr("billboards") {
        urls.push(format!("/api/billboards?video={}&t={}", s(&b, "video_id"), b["anchor_timestamp_s"]));
    }
    ensure(arr("turns").len() == 32 && arr("nodes").len() == 4, || "manifest counts".into())?;
    for u in &urls {
        let r = client.get(format!("{base}{u}")).send().await.map_err(|e| format!("{u}: {e}"))?;
        ensure(r.status() == 200, || format!("{u}: {}", r.status()))?;
        r.bytes().await.map_err(|e| format!("{u}: {e}"))?;
    }
    Ok(urls.len() + 1)
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("georegistration exactness", c1_registration),
        ("intersection oracle equivalence", c2_oracle),
        ("pruning effectiveness", c3_pruning),
        ("visual refinement recovery", c4_refinement),
        ("graph structure", c5_graph),
        ("turning view exactness", c6_turning),
        ("package round trip", c7_package),
        ("end-to-end pipeline", c8_end_to_end),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (k, (name, run)) in criteria.into_iter().enumerate() {
        let n = k + 1;
        if only.is_some_and(|o| o != n) {
            continue;
        }
        let t = Instant::now();
        let res = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("criterion {n} {name}: PASS ({secs:.1} s) {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} {name}: FAIL ({secs:.1} s) {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
