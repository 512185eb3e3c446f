use std::path::Path;

use crate::diff::Parameterized;
use crate::error::{Error, Result};

/// CSV rows `name,shape,values` with `shape = rowsxcols` and `;`-separated values.
pub fn checkpoint_rows<P: Parameterized<f64> + ?Sized>(prefix: &str, params: &P) -> String {
    let mut out = String::new();
    for ((name, r, c), vals) in params.param_shapes().into_iter().zip(params.param_slices()) {
        let joined = vals
            .iter()
            .map(|v| format!("{v:e}"))
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!("{prefix}{name},{r}x{c},{joined}\n"));
    }
    out
}

pub fn save_checkpoint(path: &Path, parts: &[(&str, &dyn Parameterized<f64>)]) -> Result<()> {
    let mut text = String::from("name,shape,values\n");
    for (prefix, p) in parts {
        text.push_str(&checkpoint_rows(prefix, *p));
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Fills each part from the rows carrying its prefix; names and shapes must match exactly.
pub fn load_checkpoint(
    path: &Path,
    parts: &mut [(&str, &mut dyn Parameterized<f64>)],
) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = std::collections::HashMap::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.splitn(3, ',');
        let (Some(name), Some(shape), Some(values)) = (f.next(), f.next(), f.next()) else {
            return Err(Error::Parse(format!(
                "{}: malformed row {}",
                path.display(),
                lineno + 1
            )));
        };
        rows.insert(name.to_string(), (shape.to_string(), values.to_string()));
    }
    for (prefix, p) in parts.iter_mut() {
        let shapes = p.param_shapes();
        let mut flat = Vec::with_capacity(p.num_params());
        for (name, r, c) in shapes {
            let key = format!("{prefix}{name}");
            let (shape, values) = rows.get(&key).ok_or_else(|| {
                Error::Parse(format!("{}: missing tensor `{key}`", path.display()))
            })?;
            if *shape != format!("{r}x{c}") {
                return Err(Error::dims(format!(
                    "`{key}` has shape {shape}, expected {r}x{c}"
                )));
            }
            let parsed: Vec<f64> = values
                .split(';')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("`{key}`: {e}")))?;
            if parsed.len() != r * c {
                return Err(Error::dims(format!(
                    "`{key}` has {} values, expected {}",
                    parsed.len(),
                    r * c
                )));
            }
            flat.extend(parsed);
        }
        p.assign_flat(&flat)?;
    }
    Ok(())
}
