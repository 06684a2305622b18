use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bucketbwt"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, content: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FASTA: &str = ">r1 first\nACGTTGCA\nGGA\n>r2\nccaNt\n>r3\nGATTACA\n";

#[test]
fn build_writes_the_transform() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.fa", FASTA);
    let output = dir.path().join("out.bwt");
    let scratch = dir.path().join("scratch");
    std::fs::create_dir(&scratch).unwrap();
    let o = run(&[
        "build",
        "-i",
        &input,
        "-o",
        output.to_str().unwrap(),
        "--tmp-dir",
        scratch.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let bwt = std::fs::read(&output).unwrap();
    // 11 + 4 + 7 bases (N dropped) and three sentinels.
    assert_eq!(bwt.len(), 25);
    assert_eq!(bwt.iter().filter(|&&b| b == b'$').count(), 3);
    assert!(stderr(&o).contains("bucket io bytes"));
    assert!(stderr(&o).contains("peak rss KiB"));
    assert_eq!(std::fs::read_dir(&scratch).unwrap().count(), 0);
}

#[test]
fn kappa_threads_and_backend_do_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.txt", "ACGTTGCAGGA\nCCAT\nGATTACA\nTTTTTTTTTTTTTTTTTTTTTT\nA\n");
    let mut outputs = Vec::new();
    for (i, extra) in [
        vec!["-k", "5"],
        vec!["-k", "8"],
        vec!["-k", "3", "-t", "1"],
        vec!["-k", "5", "-t", "4"],
        vec!["--backend", "memory"],
        vec!["--byte-buckets", "--buffer-bytes", "64"],
    ]
    .into_iter()
    .enumerate()
    {
        let out = dir.path().join(format!("out{i}"));
        let mut args = vec!["build", "-i", &input, "-o", out.to_str().unwrap(), "--report", "tsv"];
        args.extend(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn verify_passes_and_catches_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.fa", FASTA);
    let o = run(&["verify", "-i", &input, "--backend", "memory"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("oracle comparison: PASS"));
    assert!(stdout(&o).contains("inversion round trip: PASS"));

    let o = run(&["verify", "-i", &input, "--corrupt-at", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL at offset 4"), "{}", stdout(&o));

    let o = run(&["verify", "-i", &input, "--max-oracle-symbols", "10"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("max-oracle-symbols"));
}

#[test]
fn invert_recovers_words() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "in.fq", "@a\nACGT\n+\nIIII\n@b\nGG\n+\nII\n");
    let bwt = dir.path().join("out.bwt");
    let o = run(&["build", "-i", &input, "-o", bwt.to_str().unwrap(), "--backend", "memory"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&["invert", "-i", bwt.to_str().unwrap(), "-o", "-"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "ACGT\nGG\n");
}

#[test]
fn bench_emits_one_row_per_kappa() {
    let o = run(&[
        "bench",
        "--synthetic-bases",
        "30000",
        "--kappa-min",
        "3",
        "--kappa-max",
        "8",
        "--backend",
        "memory",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "kappa\tbuckets\tseconds\tio_in\tio_out\tio_total");
    assert_eq!(rows.len(), 7);
    for (row, kappa) in rows[1..].iter().zip(3u32..) {
        let cols: Vec<&str> = row.split('\t').collect();
        assert_eq!(cols[0], kappa.to_string());
        assert_eq!(cols[1], (1u64 << kappa).to_string());
    }
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest", "--collections", "30", "--backend", "memory"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("selftest: PASS"));
}

#[test]
fn errors_exit_nonzero_with_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let o = run(&["build", "-i", "/nonexistent/in.fa", "-o", out]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));

    let empty = write(dir.path(), "empty.fa", "\n\n");
    let o = run(&["build", "-i", &empty, "-o", out]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("no sequences"));

    let ambiguous = write(dir.path(), "amb.fa", ">a\nACNGT\n");
    let o = run(&["build", "-i", &ambiguous, "-o", out, "--ambiguous", "fail"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("ambiguous"));

    let input = write(dir.path(), "ok.txt", "ACGT\n");
    let o = run(&["build", "-i", &input, "-o", out, "-k", "2"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("kappa"));

    let o = run(&["invert", "-i", &input, "-o", out]);
    assert!(!o.status.success());
}
