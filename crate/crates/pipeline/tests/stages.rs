//! Simulate, retrieve, fit and report through the library API.

use std::collections::BTreeMap;
use std::path::Path;

use biphoton_core::io::read_real;
use biphoton_core::spdc::PostSelection;
use biphoton_pipeline::config::RunConfig;
use biphoton_pipeline::error::ErrorKind;
use biphoton_pipeline::manifest::{sha256, Manifest};
use biphoton_pipeline::report::report;
use biphoton_pipeline::retrieve::{fit, retrieve, FitRecord};
use biphoton_pipeline::simulate::simulate;
use tempfile::TempDir;

fn config_in(dir: &Path) -> RunConfig {
    RunConfig {
        output_dir: Some(dir.to_path_buf()),
        ..Default::default()
    }
}

fn kinds(m: &Manifest) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for f in &m.files {
        *out.entry(f.kind.clone()).or_default() += 1;
    }
    out
}

#[test]
fn default_run_writes_both_interferograms_jsi_and_truth() {
    let tmp = TempDir::new().unwrap();
    let m = simulate(&config_in(tmp.path()), 1).unwrap();
    let k = kinds(&m);
    assert_eq!(k["interferogram_signal"], 1);
    assert_eq!(k["interferogram_idler"], 1);
    assert_eq!(k["jsi"], 1);
    assert_eq!(k["psi"], 1);
    m.verify(tmp.path()).unwrap();
    for f in &m.files {
        let bytes = std::fs::read(tmp.path().join(&f.path)).unwrap();
        assert_eq!(sha256(&bytes), f.sha256, "{}", f.path);
    }
}

#[test]
fn nine_post_selections_give_eighteen_interferograms() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = config_in(tmp.path());
    cfg.post_selections = [-0.5, 0.0, 0.5]
        .iter()
        .flat_map(|&x| [-0.5, 0.0, 0.5].map(|y| PostSelection::at([x, y], [0.0, 0.0])))
        .collect();
    let m = simulate(&cfg, 0).unwrap();
    let n = m.files.iter().filter(|f| f.kind.starts_with("interferogram_")).count();
    assert_eq!(n, 18);
    assert_eq!(kinds(&m)["psi"], 9);
}

#[test]
fn reruns_are_identical_wherever_they_are_written() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let ma = simulate(&config_in(a.path()), 1).unwrap();
    let mb = simulate(&config_in(b.path()), 4).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.content_hash(), mb.content_hash());
    let again = simulate(&config_in(a.path()), 2).unwrap();
    assert_eq!(again.content_hash(), ma.content_hash());
}

#[test]
fn a_different_seed_changes_noisy_data_only() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let mut ca = config_in(a.path());
    ca.noise = biphoton_pipeline::config::NoiseModel::Poisson;
    let cb = RunConfig {
        seed: 1,
        output_dir: Some(b.path().to_path_buf()),
        ..ca.clone()
    };
    let (ma, mb) = (simulate(&ca, 1).unwrap(), simulate(&cb, 1).unwrap());
    let hash = |m: &Manifest, kind: &str| m.find(kind, Some(0)).unwrap().sha256.clone();
    assert_eq!(hash(&ma, "psi"), hash(&mb, "psi"));
    assert_ne!(hash(&ma, "jsi"), hash(&mb, "jsi"));
    assert_ne!(hash(&ma, "interferogram_idler"), hash(&mb, "interferogram_idler"));
}

#[test]
fn retrieval_recovers_gdd_and_refit_agrees() {
    let tmp = TempDir::new().unwrap();
    let cfg = config_in(tmp.path());
    simulate(&cfg, 0).unwrap();
    retrieve(tmp.path(), 0).unwrap();
    let path = tmp.path().join("ps00/fit.json");
    let first: FitRecord = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let truth = 2.0 * cfg.pump.c2;
    assert!(((first.fit.gdd - truth) / truth).abs() < 5e-3, "{}", first.fit.gdd);
    assert_eq!(first.truth.gdd, truth);

    let m = fit(tmp.path()).unwrap();
    let second: FitRecord = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(first, second);
    m.verify(tmp.path()).unwrap();
}

#[test]
fn missing_idler_interferogram_is_named() {
    let tmp = TempDir::new().unwrap();
    simulate(&config_in(tmp.path()), 1).unwrap();
    std::fs::remove_file(tmp.path().join("ps00/interferogram_idler.bin")).unwrap();
    let err = retrieve(tmp.path(), 1).unwrap_err();
    assert!(err.message.contains("missing idler-axis gradient"), "{err}");
    assert_eq!(err.kind, ErrorKind::Io);
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn stages_need_a_manifest() {
    let tmp = TempDir::new().unwrap();
    let e = report(&[tmp.path().to_path_buf()], None).unwrap_err();
    assert_eq!((e.kind, e.exit_code()), (ErrorKind::Usage, 2));
    assert_eq!(report(&[], None).unwrap_err().kind, ErrorKind::Usage);
    assert_eq!(retrieve(tmp.path(), 1).unwrap_err().kind, ErrorKind::Usage);
    assert_eq!(fit(tmp.path()).unwrap_err().kind, ErrorKind::Usage);
}

#[test]
fn report_needs_retrieved_runs() {
    let tmp = TempDir::new().unwrap();
    simulate(&config_in(tmp.path()), 1).unwrap();
    let e = report(&[tmp.path().to_path_buf()], None).unwrap_err();
    assert_eq!(e.kind, ErrorKind::Usage, "{e}");
}

#[test]
fn config_file_round_trips_through_a_run() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = config_in(tmp.path());
    cfg.seed = 17;
    cfg.scenario = "round-trip".into();
    simulate(&cfg, 1).unwrap();
    let echoed = RunConfig::load(&tmp.path().join("config.json")).unwrap();
    assert_eq!(echoed, cfg.portable());
    assert_eq!(echoed.hash(), cfg.hash());
    assert_eq!(Manifest::read(tmp.path()).unwrap().config_hash, cfg.hash());
}

/// `(header fields, level matrix)` from a heatmap: pixels left out are level 0.
fn parse_heatmap(svg: &str) -> (BTreeMap<String, String>, Vec<Vec<u32>>) {
    let attr = |tag: &str, name: &str| -> Option<String> {
        let key = format!(" {name}=\"");
        let start = tag.find(&key)? + key.len();
        Some(tag[start..start + tag[start..].find('"')?].to_string())
    };
    let comment = &svg[svg.find("<!-- ssi-data").unwrap()..];
    let header: BTreeMap<String, String> = comment
        .lines()
        .filter(|l| l.starts_with("# rows="))
        .flat_map(|l| l[2..].split_whitespace().map(str::to_string).collect::<Vec<_>>())
        .filter_map(|kv| kv.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let (n, m): (usize, usize) = (header["rows"].parse().unwrap(), header["cols"].parse().unwrap());
    let mut levels = vec![vec![0u32; m]; n];
    for tag in svg.split('<').filter(|t| t.starts_with("rect class=\"px\"")) {
        let i: usize = attr(tag, "data-i").unwrap().parse().unwrap();
        let j: usize = attr(tag, "data-j").unwrap().parse().unwrap();
        levels[i][j] = attr(tag, "data-level").unwrap().parse().unwrap();
    }
    (header, levels)
}

#[test]
fn report_figures_carry_the_jti_marginals() {
    let tmp = TempDir::new().unwrap();
    simulate(&config_in(tmp.path()), 0).unwrap();
    retrieve(tmp.path(), 0).unwrap();
    let out = tmp.path().join("figures");
    let r = report(&[tmp.path().to_path_buf()], Some(&out)).unwrap();
    let svgs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "svg"))
        .collect();
    assert!(svgs.len() >= 6, "{}", svgs.len());
    assert_eq!(svgs.len(), r.figures.len());
    assert!(out.join("report.json").exists());
    assert_eq!(r.runs[0].content_hash, Manifest::read(tmp.path()).unwrap().content_hash());

    let svg = std::fs::read_to_string(out.join("default_ps00_jti.svg")).unwrap();
    let body = &svg[svg.find("<!--").unwrap() + 4..svg.find("-->").unwrap()];
    assert!(!body.contains("--"));
    let (header, levels) = parse_heatmap(&svg);
    let (lo, hi): (f64, f64) = (header["min"].parse().unwrap(), header["max"].parse().unwrap());
    let (bi, bj) = header["block"].split_once('x').map(|(a, b)| (a.parse::<usize>().unwrap(), b.parse::<usize>().unwrap())).unwrap();
    assert_eq!(lo, 0.0);

    // Block means straight from the stored JTI.
    let jti = read_real(&tmp.path().join("ps00/jti.bin")).unwrap();
    let (n, m) = (levels.len(), levels[0].len());
    assert_eq!((n, m), (jti.nrows().div_ceil(bi), jti.ncols().div_ceil(bj)));
    let block = |p: usize, q: usize| {
        let cells: Vec<f64> = (p * bi..((p + 1) * bi).min(jti.nrows()))
            .flat_map(|i| (q * bj..((q + 1) * bj).min(jti.ncols())).map(move |j| (i, j)))
            .map(|(i, j)| jti[[i, j]])
            .collect();
        cells.iter().sum::<f64>() / cells.len() as f64
    };
    let step = (hi - lo) / 255.0;
    for (axis, len) in [(0, n), (1, m)] {
        for p in 0..len {
            let (pixels, exact): (f64, f64) = (0..if axis == 0 { m } else { n })
                .map(|q| {
                    let (i, j) = if axis == 0 { (p, q) } else { (q, p) };
                    (lo + levels[i][j] as f64 * step, block(i, j))
                })
                .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
            let quantization = 0.5 * step * if axis == 0 { m } else { n } as f64;
            assert!((pixels - exact).abs() <= quantization + 1e-12 * hi, "axis {axis} row {p}: {pixels} vs {exact}");
        }
    }
}
