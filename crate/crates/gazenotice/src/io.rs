//! Session files and generic JSON helpers.
//!
//! A session file is JSON Lines. Line 1 is a header
//! `{"schema_version":1,"user_id":"u01","sample_rate":60.0}`; every
//! following non-empty line is one trial. Floats are written in shortest
//! round-trip form, so a read/write cycle reproduces the file byte for byte.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use gazenotice_core::model::{Session, Trial};
use gazenotice_core::redirect::Pose;

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;
pub const SESSION_EXTENSION: &str = "jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    schema_version: u32,
    user_id: String,
    sample_rate: f64,
}

pub fn write_session(path: &Path, session: &Session) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    write_session_to(&mut w, session).map_err(|e| Error::write(path, e))?;
    w.flush().map_err(|e| Error::write(path, e))
}

pub fn write_session_to<W: Write>(w: &mut W, session: &Session) -> std::io::Result<()> {
    let header = Header {
        schema_version: SCHEMA_VERSION,
        user_id: session.user_id.clone(),
        sample_rate: session.sample_rate,
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    for trial in &session.trials {
        serde_json::to_writer(&mut *w, trial)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads and validates a session file. Errors name the offending line.
pub fn read_session(path: &Path) -> Result<Session> {
    let file = File::open(path).map_err(|e| Error::read(path, e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            None => return Err(Error::schema(path, "empty file, expected a session header line")),
            Some((i, line)) => {
                let line = line.map_err(|e| Error::read(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| {
                    Error::parse(path, i + 1, format!("bad session header ({e}); expected schema_version, user_id, sample_rate"))
                })?;
            }
        }
    };
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::schema(
            path,
            format!("schema version {} is not supported (this build reads version {SCHEMA_VERSION})", header.schema_version),
        ));
    }
    let mut session = Session::new(header.user_id);
    session.sample_rate = header.sample_rate;
    let mut line_of = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(|e| Error::read(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let trial: Trial = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, format!("bad trial record: {e}")))?;
        session.trials.push(trial);
        line_of.push(i + 1);
    }
    session.validate().map_err(|(trial, e)| match trial {
        Some(t) => Error::parse(path, line_of[t], e),
        None => Error::parse(path, 1, e),
    })?;
    Ok(session)
}

/// Session files under `path`: the file itself, or every `.jsonl` in a
/// directory, sorted by name.
pub fn session_paths(path: &Path) -> Result<Vec<PathBuf>> {
    let meta = fs::metadata(path).map_err(|e| Error::read(path, e))?;
    if meta.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::read(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == SESSION_EXTENSION))
        .collect();
    out.sort();
    if out.is_empty() {
        return Err(Error::schema(path, "directory contains no .jsonl session files"));
    }
    Ok(out)
}

pub fn read_sessions(path: &Path) -> Result<Vec<Session>> {
    session_paths(path)?.iter().map(|p| read_session(p)).collect()
}

/// Writes one `<user_id>.jsonl` per session into `dir`, creating it.
pub fn write_sessions(dir: &Path, sessions: &[Session]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;
    sessions
        .iter()
        .map(|s| {
            let p = dir.join(format!("{}.{SESSION_EXTENSION}", s.user_id));
            write_session(&p, s).map(|_| p)
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::write(path, e.into()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::write(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::read(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))
}

pub fn read_poses(path: &Path) -> Result<Vec<Pose>> {
    let poses: Vec<Pose> = read_json(path)?;
    for (i, p) in poses.iter().enumerate() {
        Pose::new(p.joints.clone()).map_err(|e| Error::schema(path, format!("pose {i}: {e}")))?;
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use gazenotice_core::sim::{simulate_study, StudyConfig};

    fn tiny() -> Vec<Session> {
        let config = StudyConfig { n_users: 2, trials_per_condition: 1, trial_duration: 4.0, ..StudyConfig::default() };
        simulate_study(&config, 3).unwrap().sessions
    }

    #[test]
    fn session_round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let sessions = tiny();
        let paths = write_sessions(dir.path(), &sessions).unwrap();
        for (p, s) in paths.iter().zip(&sessions) {
            let back = read_session(p).unwrap();
            assert_eq!(&back, s);
            let mut again = Vec::new();
            write_session_to(&mut again, &back).unwrap();
            assert_eq!(again, fs::read(p).unwrap());
        }
        assert_eq!(read_sessions(dir.path()).unwrap(), sessions);
    }

    #[test]
    fn errors_name_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.jsonl");
        let mut buf = Vec::new();
        write_session_to(&mut buf, &tiny()[0]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines[2] = "{\"id\": 1";
        fs::write(&p, lines.join("\n")).unwrap();
        let e = read_session(&p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        assert_eq!(e.exit_code(), 1);

        fs::write(&p, "{\"schema_version\":9,\"user_id\":\"x\",\"sample_rate\":60.0}\n").unwrap();
        assert!(matches!(read_session(&p), Err(Error::Schema { .. })));
        assert!(matches!(read_session(&dir.path().join("missing.jsonl")), Err(Error::Read { .. })));
    }

    #[test]
    fn invalid_trial_is_reported_with_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.jsonl");
        let mut s = tiny().remove(0);
        s.trials[1].redir_magnitude = 45.0;
        write_session(&p, &s).unwrap();
        let e = read_session(&p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
    }
}
