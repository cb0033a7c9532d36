//! Loading instances from files, directories or a generated corpus.

use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use flowsched::adversary::random_corpus;
use flowsched::io::parse_instance;
use flowsched::{Alpha, Rational, RationalInstance, Scalar};

use crate::{CliError, CliResult, SourceArgs};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Item {
    pub id: String,
    pub instance: RationalInstance,
}

pub fn read_instance(path: &Path) -> CliResult<RationalInstance> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError(format!("instance not found: {}", path.display())),
        _ => CliError(format!("cannot read {}: {e}", path.display())),
    })?;
    parse_instance(&text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

pub fn default_alphas() -> Vec<Alpha<Rational>> {
    [(1, 2), (2, 3), (3, 4)]
        .iter()
        .map(|&(n, d)| Alpha::new(Rational::from_ratio(n, d)).expect("in range"))
        .collect()
}

/// Instances in canonical order: sorted file names, or corpus index.
pub fn load(args: &SourceArgs) -> CliResult<Vec<Item>> {
    let alpha = args.alpha.clone().map(Alpha::new).transpose()?;
    let items = match (&args.instance, args.corpus) {
        (Some(path), _) => load_path(path)?,
        (None, Some(count)) => {
            let alphas = alpha.clone().map_or_else(default_alphas, |a| vec![a]);
            random_corpus(count, args.max_n, args.max_p, args.max_release, args.seed, &alphas)?
                .into_iter()
                .enumerate()
                .map(|(k, instance)| Item {
                    id: format!("corpus-{k}"),
                    instance,
                })
                .collect()
        }
        (None, None) => return Err(CliError("need --instance PATH or --corpus N".into())),
    };
    Ok(match alpha {
        Some(a) => items
            .into_iter()
            .map(|item| Item {
                id: item.id,
                instance: item.instance.with_alpha(a.clone()),
            })
            .collect(),
        None => items,
    })
}

fn load_path(path: &Path) -> CliResult<Vec<Item>> {
    if !path.exists() {
        return Err(CliError(format!("instance not found: {}", path.display())));
    }
    if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)
            .map_err(|e| CliError(format!("cannot list {}: {e}", path.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        files.sort();
        files.iter().map(|p| Ok(Item { id: stem(p), instance: read_instance(p)? })).collect()
    } else {
        Ok(vec![Item {
            id: stem(path),
            instance: read_instance(path)?,
        }])
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}
