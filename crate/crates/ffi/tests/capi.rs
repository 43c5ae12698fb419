use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use dmpopt::dmp::{run_forward, ControlSchedule};
use dmpopt::network::{star_graph, EdgeListDialect};
use dmpopt::{InitialCondition, SpreadingNetwork};
use dmpopt_ffi::*;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn toy_path() -> PathBuf {
    crate_dir().join("../core/data/toy.txt")
}

fn last_error() -> String {
    let p = dmp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn load_toy() -> *mut DmpNetwork {
    let path = CString::new(toy_path().to_str().unwrap()).unwrap();
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { dmp_network_load(path.as_ptr(), 0, -1.0, &mut net) }, DmpStatus::Ok);
    net
}

#[test]
fn forward_matches_the_library() {
    let net = load_toy();
    let rust = SpreadingNetwork::load_path(&toy_path(), &EdgeListDialect::default()).unwrap();
    let n = rust.node_count();
    assert_eq!(unsafe { dmp_network_node_count(net) }, n);
    assert_eq!(unsafe { dmp_network_edge_count(net) }, rust.edge_count());

    let seed = rust.index_of("n00").unwrap();
    let ic = InitialCondition::with_infected(n, &[seed]).unwrap();
    let flat: Vec<f64> = ic.triples().iter().flatten().copied().collect();
    let horizon = 5;
    let mut nu = vec![0.0; n * horizon];
    nu[3] = 0.2;
    let mut traj = ptr::null_mut();
    let s = unsafe { dmp_forward(net, flat.as_ptr(), nu.as_ptr(), ptr::null(), horizon, &mut traj) };
    assert_eq!(s, DmpStatus::Ok);
    assert_eq!(unsafe { dmp_trajectory_horizon(traj) }, horizon);

    let mut c = ControlSchedule::zeros(n, horizon);
    c.set_nu(3, 0, 0.2);
    let expected = run_forward(&rust, &ic, &c, horizon).unwrap();
    let mut buf = vec![0.0; 3 * n];
    for t in 0..=horizon {
        let s = unsafe { dmp_trajectory_marginals(traj, t, buf.as_mut_ptr(), buf.len()) };
        assert_eq!(s, DmpStatus::Ok);
        for i in 0..n {
            assert_eq!(buf[3 * i], expected.ps(i, t));
            assert_eq!(buf[3 * i + 1], expected.pi(i, t));
            assert_eq!(buf[3 * i + 2], expected.pr(i, t));
        }
    }
    let s = unsafe { dmp_trajectory_marginals(traj, horizon + 1, buf.as_mut_ptr(), buf.len()) };
    assert_eq!(s, DmpStatus::InvalidArgument);
    let s = unsafe { dmp_trajectory_marginals(traj, 0, buf.as_mut_ptr(), 2) };
    assert_eq!(s, DmpStatus::InvalidArgument);
    assert!(last_error().contains("need"));
    unsafe {
        dmp_trajectory_free(traj);
        dmp_network_free(net);
    }
}

#[test]
fn single_edge_transmission() {
    let (src, dst, alpha) = ([0usize], [1usize], [0.4]);
    let mut net = ptr::null_mut();
    let s = unsafe { dmp_network_from_edges(2, src.as_ptr(), dst.as_ptr(), alpha.as_ptr(), 1, &mut net) };
    assert_eq!(s, DmpStatus::Ok);
    let init = [0.0, 1.0, 0.0, 1.0, 0.0, 0.0];
    let mut traj = ptr::null_mut();
    let s = unsafe { dmp_forward(net, init.as_ptr(), ptr::null(), ptr::null(), 1, &mut traj) };
    assert_eq!(s, DmpStatus::Ok);
    let mut buf = [0.0; 6];
    assert_eq!(unsafe { dmp_trajectory_marginals(traj, 1, buf.as_mut_ptr(), 6) }, DmpStatus::Ok);
    assert!((buf[3] - 0.6).abs() < 1e-15, "{buf:?}");
    unsafe {
        dmp_trajectory_free(traj);
        dmp_network_free(net);
    }
}

#[test]
fn errors_map_to_status_codes() {
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { dmp_network_load(ptr::null(), 0, -1.0, &mut net) }, DmpStatus::NullPointer);

    let (src, dst, alpha) = ([0usize], [1usize], [1.5]);
    let s = unsafe { dmp_network_from_edges(2, src.as_ptr(), dst.as_ptr(), alpha.as_ptr(), 1, &mut net) };
    assert_eq!(s, DmpStatus::InvalidArgument);
    assert!(last_error().contains("alpha"));
    assert!(net.is_null());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "a b 0.5\nc d\n").unwrap();
    let p = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { dmp_network_load(p.as_ptr(), 0, -1.0, &mut net) }, DmpStatus::Parse);

    let toy = load_toy();
    let n = unsafe { dmp_network_node_count(toy) };
    let mut nu = vec![0.0; n];
    let mut obj = 0.0;
    let s = unsafe { dmp_optimize_seeding(toy, ptr::null(), 3, 1e6, 0, nu.as_mut_ptr(), &mut obj) };
    assert_eq!(s, DmpStatus::InfeasibleBudget);
    let mut traj = ptr::null_mut();
    let bad_init = vec![0.5; 3 * n];
    let s = unsafe { dmp_forward(toy, bad_init.as_ptr(), ptr::null(), ptr::null(), 2, &mut traj) };
    assert_eq!(s, DmpStatus::InvalidArgument);
    assert!(traj.is_null());
    unsafe {
        dmp_network_free(toy);
        dmp_network_free(ptr::null_mut());
        dmp_trajectory_free(ptr::null_mut());
    }
    assert_eq!(unsafe { dmp_network_node_count(ptr::null()) }, 0);
}

#[test]
fn seeding_prefers_the_hub() {
    let star = star_graph(9, 0.9).unwrap();
    let (src, dst, alpha): (Vec<usize>, Vec<usize>, Vec<f64>) = {
        let mut s = (Vec::new(), Vec::new(), Vec::new());
        for (a, b, w) in star.edges() {
            s.0.push(a);
            s.1.push(b);
            s.2.push(w);
        }
        s
    };
    let mut net = ptr::null_mut();
    let s = unsafe { dmp_network_from_edges(9, src.as_ptr(), dst.as_ptr(), alpha.as_ptr(), src.len(), &mut net) };
    assert_eq!(s, DmpStatus::Ok);
    let mut nu = [0.0; 9];
    let mut obj = 0.0;
    let s = unsafe { dmp_optimize_seeding(net, ptr::null(), 2, 1.0, 0, nu.as_mut_ptr(), &mut obj) };
    assert_eq!(s, DmpStatus::Ok, "{}", last_error());
    let hub = (0..9).max_by_key(|&i| star.out_edges(i).len()).unwrap();
    assert!(nu[hub] > 0.99, "{nu:?}");
    assert!((nu.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    assert!(obj > 0.0);
    unsafe { dmp_network_free(net) };
}

#[test]
fn version_and_header_agree() {
    let v = unsafe { CStr::from_ptr(dmp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(crate_dir().join("include/dmpopt.h")).unwrap();
    for name in [
        "dmp_last_error",
        "dmp_version",
        "dmp_network_load",
        "dmp_network_from_edges",
        "dmp_network_free",
        "dmp_forward",
        "dmp_trajectory_marginals",
        "dmp_trajectory_free",
        "dmp_optimize_seeding",
        "typedef struct DmpNetwork DmpNetwork;",
        "DMP_STATUS_INFEASIBLE_BUDGET = 4",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}

fn static_lib() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let profile = exe.parent()?.parent()?;
    let lib = profile.join("libdmpopt_ffi.a");
    lib.exists().then_some(lib)
}

fn have_cc() -> bool {
    Command::new("cc").arg("--version").output().is_ok_and(|o| o.status.success())
}

#[test]
fn c_program_links_against_the_static_library() {
    let (Some(lib), true) = (static_lib(), have_cc()) else {
        eprintln!("no C compiler or static library; C smoke test not run");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, include_str!("smoke.c")).unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).arg(toy_path()).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout.contains("nodes 30"), "{stdout}");
    assert!(stdout.contains("missing file status 6"), "{stdout}");
}
