use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::FileSet;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WriteReport {
    pub written: Vec<PathBuf>,
    /// Subset of `written` that replaced existing files.
    pub overwritten: Vec<PathBuf>,
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("{} already exist(s); pass --force to overwrite", show(.0))]
    Exists(Vec<PathBuf>),
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: io::Error },
}

fn show(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn io_at(path: &Path) -> impl FnOnce(io::Error) -> WriteError + '_ {
    move |source| WriteError::Io {
        path: path.to_path_buf(),
        source,
    }
}

enum Done {
    Dir(PathBuf),
    Placed {
        target: PathBuf,
        backup: Option<PathBuf>,
    },
}

/// Writes every file under `out_dir`, or none. Files are staged in a
/// temporary directory inside `out_dir` and renamed into place; a failure
/// part way undoes the renames and restores replaced files.
pub fn write(fs_set: &FileSet, out_dir: &Path, force: bool) -> Result<WriteReport, WriteError> {
    let targets: Vec<PathBuf> = fs_set.files.iter().map(|f| out_dir.join(&f.path)).collect();
    if let Some(dir) = targets.iter().find(|t| t.is_dir()) {
        return Err(WriteError::Io {
            path: dir.clone(),
            source: io::Error::other("is a directory"),
        });
    }
    let existing: Vec<PathBuf> = targets.iter().filter(|t| t.exists()).cloned().collect();
    if !existing.is_empty() && !force {
        return Err(WriteError::Exists(existing));
    }

    let mut done = Vec::new();
    if let Err(e) = create_dirs(out_dir, &mut done) {
        rollback(done);
        return Err(e);
    }
    let staging = match tempfile::Builder::new()
        .prefix(".ontotrader-")
        .tempdir_in(out_dir)
    {
        Ok(s) => s,
        Err(e) => {
            rollback(done);
            return Err(io_at(out_dir)(e));
        }
    };
    // Rollback must run while the staging directory, which holds the
    // backups, still exists.
    commit(fs_set, staging.path(), &targets, &mut done)
        .inspect_err(|_| rollback(std::mem::take(&mut done)))
}

fn commit(
    fs_set: &FileSet,
    staging: &Path,
    targets: &[PathBuf],
    done: &mut Vec<Done>,
) -> Result<WriteReport, WriteError> {
    let mut staged = Vec::with_capacity(targets.len());
    for (i, f) in fs_set.files.iter().enumerate() {
        let p = staging.join(format!("new-{i}"));
        fs::write(&p, &f.content).map_err(io_at(&p))?;
        staged.push(p);
    }

    let mut report = WriteReport::default();
    for (i, (from, target)) in staged.iter().zip(targets).enumerate() {
        if let Some(parent) = target.parent() {
            create_dirs(parent, done)?;
        }
        let backup = if target.exists() {
            let b = staging.join(format!("old-{i}"));
            fs::rename(target, &b).map_err(io_at(target))?;
            report.overwritten.push(target.clone());
            Some(b)
        } else {
            None
        };
        let placed = fs::rename(from, target).map_err(io_at(target));
        if let Err(e) = placed {
            if let Some(b) = backup {
                let _ = fs::rename(b, target);
            }
            return Err(e);
        }
        done.push(Done::Placed {
            target: target.clone(),
            backup,
        });
        report.written.push(target.clone());
    }
    Ok(report)
}

/// Creates `dir` and its missing ancestors, recording each one created.
fn create_dirs(dir: &Path, done: &mut Vec<Done>) -> Result<(), WriteError> {
    let missing: Vec<&Path> = dir
        .ancestors()
        .take_while(|a| !a.as_os_str().is_empty() && !a.exists())
        .collect();
    for d in missing.into_iter().rev() {
        fs::create_dir(d).map_err(io_at(d))?;
        done.push(Done::Dir(d.to_path_buf()));
    }
    if !dir.is_dir() {
        return Err(WriteError::Io {
            path: dir.to_path_buf(),
            source: io::Error::other("not a directory"),
        });
    }
    Ok(())
}

fn rollback(done: Vec<Done>) {
    for step in done.into_iter().rev() {
        match step {
            Done::Placed { target, backup } => {
                let _ = fs::remove_file(&target);
                if let Some(b) = backup {
                    let _ = fs::rename(b, &target);
                }
            }
            Done::Dir(d) => {
                let _ = fs::remove_dir(d);
            }
        }
    }
}
