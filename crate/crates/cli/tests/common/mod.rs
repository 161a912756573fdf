use std::path::{Path, PathBuf};

pub struct Job {
    pub name: String,
    pub args: Vec<String>,
    pub expected: Option<String>,
    pub out_path: PathBuf,
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Jobs in file-name order; each `.args` file holds one argument per line.
pub fn golden_jobs() -> Vec<Job> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(golden_dir())
        .expect("golden directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "args"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            let args = std::fs::read_to_string(&p).unwrap().lines().map(str::to_string).collect();
            let out_path = p.with_extension("out");
            let expected = std::fs::read_to_string(&out_path).ok();
            Job { name, args, expected, out_path }
        })
        .collect()
}

/// Runs one job in-process, returning `(exit code, stdout)`.
pub fn run_job(job: &Job) -> (i32, String) {
    let out = infdim_cli::run(std::iter::once("infdim".to_string()).chain(job.args.iter().cloned()));
    (out.code, out.stdout)
}

/// Differences against the blessed outputs; `INFDIM_BLESS=1` rewrites them.
pub fn golden_mismatches() -> Vec<String> {
    let bless = std::env::var("INFDIM_BLESS").is_ok_and(|v| v == "1");
    let mut bad = Vec::new();
    for job in golden_jobs() {
        let (code, stdout) = run_job(&job);
        let actual = format!("exit={code}\n{stdout}");
        if bless {
            std::fs::write(&job.out_path, &actual).unwrap();
            continue;
        }
        match &job.expected {
            Some(e) if *e == actual => {}
            Some(_) => bad.push(format!("{}: output differs", job.name)),
            None => bad.push(format!("{}: no blessed output", job.name)),
        }
    }
    bad
}
