use std::path::{Path, PathBuf};
use std::time::Duration;

use keed_core::io::WfdbHeader;
use sha2::{Digest, Sha256};

use crate::config::{CatalogEntry, RunConfig};
use crate::error::{read_bytes, read_to_string, CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

enum Outcome {
    Present,
    Downloaded,
    Missing,
}

struct Fetcher<'a> {
    entry: &'a CatalogEntry,
    dest: PathBuf,
    timeout: Duration,
    client: Option<reqwest::blocking::Client>,
    downloaded: usize,
}

impl Fetcher<'_> {
    fn client(&mut self) -> CliResult<&reqwest::blocking::Client> {
        if self.client.is_none() {
            let c = reqwest::blocking::Client::builder()
                .timeout(self.timeout)
                .build()
                .map_err(|e| CliError::Network(format!("cannot build HTTP client: {e}")))?;
            self.client = Some(c);
        }
        Ok(self.client.as_ref().expect("client just built"))
    }

    fn verified(&self, name: &str, path: &Path) -> CliResult<bool> {
        match self.entry.checksums.get(name) {
            None => Ok(true),
            Some(want) => Ok(sha256_hex(&read_bytes(path)?).eq_ignore_ascii_case(want)),
        }
    }

    /// Makes sure `name` exists in the destination and matches its checksum.
    /// A 404 is reported as `Missing` when `optional` is set.
    fn ensure(&mut self, name: &str, optional: bool) -> CliResult<Outcome> {
        let path = self.dest.join(name);
        if path.exists() {
            if self.verified(name, &path)? {
                return Ok(Outcome::Present);
            }
            std::fs::remove_file(&path).map_err(|e| CliError::io(&path, e))?;
        }
        let url = format!("{}{name}", self.entry.base_url);
        let net = |e: reqwest::Error| CliError::Network(format!("{url}: {e}"));
        let resp = self.client()?.get(&url).send().map_err(net)?;
        if resp.status() == reqwest::StatusCode::NOT_FOUND && optional {
            return Ok(Outcome::Missing);
        }
        if !resp.status().is_success() {
            return Err(CliError::Network(format!("{url}: HTTP {}", resp.status())));
        }
        let expected_len = resp.content_length();
        let body = resp.bytes().map_err(net)?;
        if let Some(n) = expected_len {
            if body.len() as u64 != n {
                return Err(CliError::Network(format!(
                    "{url}: received {} of {n} bytes",
                    body.len()
                )));
            }
        }
        if let Some(want) = self.entry.checksums.get(name) {
            let got = sha256_hex(&body);
            if !got.eq_ignore_ascii_case(want) {
                return Err(CliError::Network(format!(
                    "{url}: checksum mismatch, expected {want}, got {got}"
                )));
            }
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        // write beside the target and rename so no partial file is ever visible
        let part = path.with_file_name(format!(
            "{}.part",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("download")
        ));
        std::fs::write(&part, &body).map_err(|e| CliError::io(&part, e))?;
        std::fs::rename(&part, &path).map_err(|e| {
            let _ = std::fs::remove_file(&part);
            CliError::io(&path, e)
        })?;
        self.downloaded += 1;
        Ok(Outcome::Downloaded)
    }
}

pub fn run(cfg: &RunConfig, dataset: &str, dest: Option<PathBuf>) -> CliResult<()> {
    let entry = cfg.fetch.catalog.get(dataset).ok_or_else(|| {
        let known: Vec<&str> = cfg.fetch.catalog.keys().map(String::as_str).collect();
        CliError::Usage(format!("unknown dataset '{dataset}'; known: {}", known.join(", ")))
    })?;
    if !entry.base_url.ends_with('/') {
        return Err(CliError::Usage(format!(
            "catalog entry '{dataset}' base_url must end with '/'"
        )));
    }
    let dest = dest.unwrap_or_else(|| cfg.fetch.dest.join(dataset));
    std::fs::create_dir_all(&dest).map_err(|e| CliError::io(&dest, e))?;
    let mut f = Fetcher {
        entry,
        dest: dest.clone(),
        timeout: Duration::from_secs(cfg.fetch.timeout_secs.max(1)),
        client: None,
        downloaded: 0,
    };

    let records: Vec<String> = if entry.records.is_empty() {
        f.ensure("RECORDS", false)?;
        read_to_string(&dest.join("RECORDS"))?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()
    } else {
        entry.records.clone()
    };
    let mut missing = Vec::new();
    for rec in &records {
        let hea = format!("{rec}.hea");
        f.ensure(&hea, false)?;
        let header_path = dest.join(&hea);
        let header = WfdbHeader::parse(&read_to_string(&header_path)?)
            .map_err(|e| CliError::Data(format!("{}: {e}", header_path.display())))?;
        let prefix = Path::new(rec)
            .parent()
            .map(|p| p.to_string_lossy().into_owned())
            .unwrap_or_default();
        let mut files: Vec<String> = header
            .signals
            .iter()
            .map(|s| {
                if prefix.is_empty() {
                    s.file_name.clone()
                } else {
                    format!("{prefix}/{}", s.file_name)
                }
            })
            .collect();
        files.dedup();
        for file in files {
            f.ensure(&file, false)?;
        }
        for ext in &entry.annotation_exts {
            let name = format!("{rec}.{ext}");
            if let Outcome::Missing = f.ensure(&name, true)? {
                missing.push(name);
            }
        }
    }
    for m in &missing {
        eprintln!("warning: {m} is not available on the server");
    }
    eprintln!(
        "{dataset}: {} records in {}, {} files downloaded",
        records.len(),
        dest.display(),
        f.downloaded
    );
    Ok(())
}
