use std::ffi::OsString;

/// Splices the contents of a `--config FILE` into the argument list just
/// after the subcommand name. Keys that also appear as flags on the
/// command line are skipped, so the command line wins.
///
/// Each non-blank, non-`#` line is `key = value`. A value of `true` turns
/// into a bare flag, `false` drops the key, and a comma list repeats the
/// flag (`fail = 2@50, 3@80`).
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(args);
    };
    let flag = args.remove(pos).to_string_lossy().into_owned();
    let path = match flag.strip_prefix("--config=") {
        Some(p) => p.to_owned(),
        None => {
            if pos >= args.len() {
                return Err("--config needs a file".into());
            }
            args.remove(pos).to_string_lossy().into_owned()
        }
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let given: Vec<String> = args
        .iter()
        .filter_map(|a| a.to_str()?.strip_prefix("--").map(|k| k.split('=').next().unwrap_or(k).to_owned()))
        .collect();
    let extra = parse(&text, &given).map_err(|e| format!("{path}: {e}"))?;
    // after the program name and the subcommand
    let at = args.len().min(2);
    args.splice(at..at, extra.into_iter().map(OsString::from));
    Ok(args)
}

fn parse(text: &str, skip: &[String]) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", no + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(format!("line {}: empty key", no + 1));
        }
        if skip.iter().any(|k| k == key) {
            continue;
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            _ => {
                for v in value.split(',') {
                    out.push(format!("--{key}"));
                    out.push(v.trim().to_owned());
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_file_becomes_flags() {
        let got = parse("# cluster\nnodes = 4\nfail = 2@50, 3@9\ncheck-against-single-node = true\ntrace = false\nseed = 1\n", &["seed".into()]).unwrap();
        assert_eq!(got, ["--nodes", "4", "--fail", "2@50", "--fail", "3@9", "--check-against-single-node"]);
        assert!(parse("nodes 4", &[]).is_err());
    }
}
