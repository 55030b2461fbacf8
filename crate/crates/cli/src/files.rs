use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use radevent::event::{Annotations, Corpus};
use radevent::io::{read_annotations, read_corpus};
use radevent::ontology::Ontology;

use crate::failure::{Classify, CliResult};

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).input(format!("cannot read {}", path.display()))
}

pub fn corpus(path: &Path) -> CliResult<Corpus> {
    read_corpus(open(path)?).input(format!("invalid corpus {}", path.display()))
}

pub fn annotations(path: &Path, ontology: &Ontology, corpus: Option<&Corpus>) -> CliResult<Annotations> {
    read_annotations(open(path)?, ontology, corpus).input(format!("invalid annotations {}", path.display()))
}

/// Non-blank lines, trimmed.
pub fn lines(path: &Path) -> CliResult<Vec<String>> {
    let mut out = Vec::new();
    for line in open(path)?.lines() {
        let line = line.input(format!("cannot read {}", path.display()))?;
        let line = line.trim();
        if !line.is_empty() {
            out.push(line.to_string());
        }
    }
    Ok(out)
}

pub fn ontology(path: Option<&Path>) -> CliResult<Ontology> {
    match path {
        Some(p) => Ontology::from_json_file(p).input(format!("invalid ontology {}", p.display())),
        None => Ok(Ontology::builtin().clone()),
    }
}

/// Writes through a temp file in the destination directory, then renames.
pub fn write_atomic<F>(path: &Path, body: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> anyhow::Result<()>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let context = || format!("cannot write {}", path.display());
    let mut tmp = tempfile::NamedTempFile::new_in(dir).usage(context())?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w).usage(context())?;
        w.flush().usage(context())?;
    }
    tmp.persist(path).usage(context())?;
    Ok(())
}
