use infdim_cli::run;

fn call(args: &[&str]) -> infdim_cli::Outcome {
    run(std::iter::once("infdim").chain(args.iter().copied()).map(String::from))
}

#[test]
fn parse_errors_name_the_flag_and_line() {
    let out = call(&["classify-product", "--tail", "prefix=1\ntail=wobble:2"]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.is_empty());
    assert!(out.stderr.starts_with("error: --tail: line 2"), "{}", out.stderr);
}

#[test]
fn unknown_subcommand_is_an_error() {
    let out = call(&["no-such-command"]);
    assert_ne!(out.code, 0);
    assert_ne!(out.code, 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn missing_input_file_is_an_error() {
    let out = call(&["measure", "--cylinder", "@/nonexistent/cylinder.txt"]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("--cylinder"), "{}", out.stderr);
}

#[test]
fn expanding_generators_violate_the_gap_bound() {
    let out = call(&[
        "--output", "machine", "gap",
        "--family", "op=2:3,0,0,3; op=2:3,0,0,3; tail=zero",
        "--g", "vec=1,0; vec=1,0; tail=1,0",
        "--t", "1", "--n", "0", "--m", "2",
    ]);
    assert_eq!(out.code, 2, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("holds=false"));
    assert!(out.stdout.contains("non_dissipative=1,2"), "{}", out.stdout);
}

#[test]
fn dissipative_generators_exit_cleanly() {
    let out = call(&[
        "--output", "machine", "gap",
        "--family", "op=2:-1,0,0,-1; op=2:0,1,-1,0; tail=zero",
        "--g", "vec=1,0; vec=0,1; tail=1,0",
        "--t", "0.5", "--n", "1", "--m", "2",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("holds=true"));
}

#[test]
fn input_can_come_from_a_file() {
    let path = std::env::temp_dir().join(format!("infdim-spec-{}.txt", std::process::id()));
    std::fs::write(&path, "# harmonic\nprefix=1\ntail=oneplus-powerlaw:1,2\n").unwrap();
    let from_file = call(&["--output", "machine", "classify-product", "--tail", &format!("@{}", path.display())]);
    let inline = call(&["--output", "machine", "classify-product", "--tail", "prefix=1; tail=oneplus-powerlaw:1,2"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(from_file.code, 0, "{}", from_file.stderr);
    assert_eq!(from_file.stdout, inline.stdout);
    assert!(from_file.stdout.contains("verdict=Convergent"));
}
