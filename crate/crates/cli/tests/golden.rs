//! Runs every `console` block of the README. A block is a series of
//! `$ command` lines, each followed by the standard output it must produce.
//! Commands go through `sh` from the repository root with the freshly built
//! binary first on `PATH`, so `|| echo "exit $?"` can record exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

struct Example {
    line: usize,
    command: String,
    expected: String,
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn examples(readme: &str) -> Vec<Example> {
    let mut out: Vec<Example> = Vec::new();
    let mut in_console = false;
    for (i, line) in readme.lines().enumerate() {
        if !in_console {
            in_console = line.trim_end() == "```console";
            continue;
        }
        if line.starts_with("```") {
            in_console = false;
        } else if let Some(cmd) = line.strip_prefix("$ ") {
            out.push(Example {
                line: i + 1,
                command: cmd.to_string(),
                expected: String::new(),
            });
        } else {
            let ex = out.last_mut().expect("console block starts with a command");
            ex.expected.push_str(line);
            ex.expected.push('\n');
        }
    }
    out
}

#[test]
fn readme_console_examples() {
    let root = repo_root();
    let readme = std::fs::read_to_string(root.join("README.md")).unwrap();
    let examples = examples(&readme);
    assert!(examples.len() >= 15, "only {} examples found", examples.len());

    let bin_dir = Path::new(env!("CARGO_BIN_EXE_whilesem"))
        .parent()
        .unwrap()
        .to_path_buf();
    let path = std::env::join_paths(
        std::iter::once(bin_dir).chain(std::env::split_paths(&std::env::var_os("PATH").unwrap_or_default())),
    )
    .unwrap();

    let mut failures = Vec::new();
    for ex in &examples {
        assert!(
            ex.command.starts_with("whilesem "),
            "README line {}: {}",
            ex.line,
            ex.command
        );
        let out = Command::new("sh")
            .arg("-c")
            .arg(&ex.command)
            .current_dir(&root)
            .env("PATH", &path)
            .output()
            .unwrap();
        let stdout = String::from_utf8_lossy(&out.stdout);
        if !out.status.success() || stdout != ex.expected {
            failures.push(format!(
                "README line {}: $ {}\n  status: {}\n  expected:\n{}  got:\n{}  stderr:\n{}",
                ex.line,
                ex.command,
                out.status,
                ex.expected,
                stdout,
                String::from_utf8_lossy(&out.stderr)
            ));
        }
    }
    assert!(failures.is_empty(), "{}", failures.join("\n"));
}

#[test]
fn exit_codes() {
    let root = repo_root();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_whilesem"))
            .args(args)
            .current_dir(&root)
            .output()
            .unwrap()
            .status
            .code()
    };
    assert_eq!(run(&["run", "programs/fac4.whl"]), Some(0));
    assert_eq!(run(&["run", "programs/no_such_file.whl"]), Some(2));
    assert_eq!(run(&["run", "--input", "1,,", "programs/fac4.whl"]), Some(2));
    assert_eq!(run(&["frobnicate"]), Some(2));
    assert_eq!(
        run(&["rules", "check", "flag_based.rules", "--against", "pretty_big.rules"]),
        Some(1)
    );
    assert_eq!(run(&["cert", "check", "programs/tampered.cert.json"]), Some(1));
    assert_eq!(run(&["cert", "check", "README.md"]), Some(2));
}

#[test]
fn json_reports_parse() {
    let root = repo_root();
    let out = Command::new(env!("CARGO_BIN_EXE_whilesem"))
        .args([
            "classify",
            "--format",
            "json",
            "--system",
            "flag-co",
            "programs/diverge_then_stuck.whl",
        ])
        .current_dir(&root)
        .output()
        .unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cert = &v["certificate"];
    assert_eq!(cert["kind"], "graph");
    let nodes = cert["nodes"].as_array().unwrap();
    let root_node = &nodes[cert["root"].as_u64().unwrap() as usize];
    assert_eq!(root_node["rule"], "F-Seq");
    assert_eq!(
        nodes[root_node["premises"][1].as_u64().unwrap() as usize]["rule"],
        "F-Div"
    );
}

#[test]
fn saved_certificates_check() {
    let dir = std::env::temp_dir().join(format!("whilesem-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let root = repo_root();
    for (system, program) in [
        ("div-pred", "programs/while_one_skip.whl"),
        ("pretty-co", "programs/while_one_skip.whl"),
        ("flag-co", "programs/diverge_then_stuck.whl"),
    ] {
        let cert = dir.join(format!("{system}.json"));
        let bin = env!("CARGO_BIN_EXE_whilesem");
        let made = Command::new(bin)
            .args(["classify", "--system", system, "--cert"])
            .arg(&cert)
            .arg(program)
            .current_dir(&root)
            .output()
            .unwrap();
        assert!(made.status.success(), "{system}");
        let check = Command::new(bin).args(["cert", "check"]).arg(&cert).output().unwrap();
        assert!(
            check.status.success(),
            "{system}: {}",
            String::from_utf8_lossy(&check.stderr)
        );
        assert!(String::from_utf8_lossy(&check.stdout).starts_with("valid (graph"));
    }
    std::fs::remove_dir_all(&dir).ok();
}
