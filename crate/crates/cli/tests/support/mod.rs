//! Shared helpers for the command-line tests: running the binary and building fixtures.
#![allow(dead_code)]

#[path = "../../../core/tests/common/mod.rs"]
pub mod oracle;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use darkseg::io::{write_label_png, write_mask_png, write_rgb_png, write_soft_tensor, Manifest, ManifestRecord};
use darkseg::{GpsFix, InvalidMask, LabelMap, RgbImage, SoftPrediction};

pub fn darkseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darkseg"))
        .args(args)
        .env_remove("DARKSEG_CONFIG")
        .output()
        .expect("run darkseg")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Writes `gt/`, `masks/` and `pred/` (hard labels) for one image.
pub fn write_hard_triple(root: &Path, id: &str, gt: &LabelMap, mask: &InvalidMask, pred: &LabelMap) {
    for d in ["gt", "masks", "pred"] {
        fs::create_dir_all(root.join(d)).unwrap();
    }
    write_label_png(&root.join("gt").join(format!("{id}.png")), gt).unwrap();
    write_mask_png(&root.join("masks").join(format!("{id}.png")), mask).unwrap();
    write_label_png(&root.join("pred").join(format!("{id}.png")), pred).unwrap();
}

/// Path snapshot with sizes, for detecting any file-system change.
pub fn tree(root: &Path) -> Vec<(PathBuf, u64)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let e = e.unwrap();
            let meta = e.metadata().unwrap();
            if meta.is_dir() {
                stack.push(e.path());
            }
            out.push((e.path(), if meta.is_dir() { 0 } else { meta.len() }));
        }
    }
    out.sort();
    out
}

pub const DOMAINS: [&str; 4] = ["daytime", "twilight", "nighttime", "deep_night"];
pub const IMAGES_PER_DOMAIN: usize = 3;
const W: usize = 32;
const H: usize = 24;

/// A curriculum over the first `n` of [`DOMAINS`] with stub commands.
///
/// Every unlabeled image has a prepared soft prediction in `<manifest>.soft/`; the stub
/// inference command copies those into its output directory and the stub trainer creates
/// the model file. Both append `step role source target mu` to `calls.log`.
pub struct CurriculumFixture {
    pub root: PathBuf,
    pub config: PathBuf,
    pub log: PathBuf,
    pub work: PathBuf,
}

impl CurriculumFixture {
    pub fn build(root: &Path, n: usize, mu: f64) -> Self {
        let log = root.join("calls.log");
        let mut domains = String::new();
        for (z, name) in DOMAINS.iter().take(n).enumerate().map(|(k, d)| (k + 1, d)) {
            let real = write_real_domain(root, z, name);
            domains.push_str(&format!("\n[[domains]]\nindex = {z}\nname = \"{name}\"\nunlabeled_real = \"{real}\"\n"));
            if z > 1 {
                let synth = write_synthetic_domain(root, z, name);
                domains.push_str(&format!("labeled_synthetic = \"{synth}\"\n"));
            }
        }
        let record = format!(
            "echo \"$DARKSEG_STEP $DARKSEG_ROLE $DARKSEG_SOURCE_DOMAIN $DARKSEG_DOMAIN $DARKSEG_MU\" >> '{}'",
            log.display()
        );
        let config = format!(
            "[step]\nmu = {mu:?}\niterations = 10\nwork_dir = \"work\"\ninitial_model = \"phi1.model\"\n\
             inference_command = \"cp {{manifest}}.soft/*.sftp {{outdir}}/ && {inference}\"\n\
             trainer_command = \"test -s {{manifest}} && {trainer} && touch {{model_out}}\"\n\
             \n[bilateral]\nsigma_s = 4.0\n{domains}",
            inference = record.replace('"', "\\\""),
            trainer = record.replace('"', "\\\""),
        );
        let path = root.join("curriculum.toml");
        fs::write(&path, config).unwrap();
        Self {
            root: root.to_path_buf(),
            config: path,
            log,
            work: root.join("work"),
        }
    }

    pub fn calls(&self) -> Vec<String> {
        fs::read_to_string(&self.log)
            .unwrap_or_default()
            .lines()
            .map(str::to_string)
            .collect()
    }
}

fn fix(k: usize, t: f64) -> GpsFix {
    GpsFix::new(47.3769 + 2e-4 * k as f64, 8.5417, t).unwrap()
}

fn write_real_domain(root: &Path, z: usize, name: &str) -> String {
    let dir = root.join(format!("real{z}"));
    let soft_dir = root.join(format!("real{z}.jsonl.soft"));
    fs::create_dir_all(&dir).unwrap();
    fs::create_dir_all(&soft_dir).unwrap();
    let mut records = Vec::new();
    for k in 0..IMAGES_PER_DOMAIN {
        let id = format!("{name}_{k}");
        let bright = 200 / z as u8;
        let img = RgbImage::from_fn(W, H, |x, _| if x < W / 2 { [bright / 4, bright / 4, bright / 3] } else { [bright; 3] });
        write_rgb_png(&dir.join(format!("{id}.png")), &img).unwrap();
        // confident road/sky split for daytime, nearly flat elsewhere
        let soft = SoftPrediction::from_fn(W, H, 19, |x, _, px| {
            px.fill(1.0);
            if z == 1 {
                px[if x < W / 2 { 0 } else { 10 }] = 200.0;
            } else {
                px[(x + k) % 19] = 1.5;
            }
        })
        .unwrap();
        write_soft_tensor(&soft_dir.join(format!("{id}.sftp")), &soft).unwrap();
        let mut r = ManifestRecord::new(&id, format!("real{z}/{id}.png"), name.to_string());
        r.gps = Some(fix(k, (100 * z + k) as f64));
        records.push(r);
    }
    let file = format!("real{z}.jsonl");
    Manifest::new(root, records).unwrap().write(&root.join(&file)).unwrap();
    file
}

fn write_synthetic_domain(root: &Path, z: usize, name: &str) -> String {
    let dir = root.join(format!("synth{z}"));
    fs::create_dir_all(&dir).unwrap();
    let mut records = Vec::new();
    for k in 0..2 {
        let id = format!("synth_{name}_{k}");
        write_rgb_png(&dir.join(format!("{id}.png")), &RgbImage::filled(W, H, [40, 40, 40])).unwrap();
        write_label_png(&dir.join(format!("{id}_labels.png")), &LabelMap::filled(W, H, 0)).unwrap();
        let mut r = ManifestRecord::new(&id, format!("synth{z}/{id}.png"), format!("{name}_synthetic"));
        r.label_path = Some(format!("synth{z}/{id}_labels.png").into());
        records.push(r);
    }
    let file = format!("synth{z}.jsonl");
    Manifest::new(root, records).unwrap().write(&root.join(&file)).unwrap();
    file
}
