//! Adapter that runs a third-party matcher as a subprocess.
//!
//! Protocol: the left and right images are written as PNG files, the
//! placeholders `{left}`, `{right}` and `{out}` in the command template are
//! replaced by their (shell-quoted) paths, and the command runs under
//! `sh -c`. Exit status 0 means a disparity file now exists at `{out}` in
//! the declared format. Every call works in its own fresh subdirectory of
//! `work_dir`, so concurrent calls never share files.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagery::{load_disparity, save_image, DisparityFormat};
use crate::raster::{DisparityMap, RasterImage};

use super::{check_pair, StereoMatcher, DEFAULT_D_MAX};

const PLACEHOLDERS: [&str; 3] = ["{left}", "{right}", "{out}"];
/// Tail of stderr kept in error values.
const MAX_DIAGNOSTIC_BYTES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalMatcherSpec {
    pub command_template: String,
    pub work_dir: PathBuf,
    pub output_format: DisparityFormat,
    pub timeout_secs: f64,
}

impl ExternalMatcherSpec {
    pub fn validate(&self) -> Result<()> {
        for ph in PLACEHOLDERS {
            let n = self.command_template.matches(ph).count();
            if n != 1 {
                return Err(Error::InvalidConfig(format!(
                    "command template must contain {ph} exactly once, found {n}"
                )));
            }
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "timeout must be positive, got {}",
                self.timeout_secs
            )));
        }
        Ok(())
    }
}

fn shell_quote(path: &Path) -> String {
    let s = path.to_string_lossy();
    format!("'{}'", s.replace('\'', r"'\''"))
}

fn drain<R: Read + Send + 'static>(mut pipe: R) -> thread::JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = pipe.read_to_end(&mut buf);
        buf
    })
}

#[derive(Debug, Clone)]
pub struct ExternalMatcher {
    spec: ExternalMatcherSpec,
    d_max: u32,
}

impl ExternalMatcher {
    pub fn new(spec: ExternalMatcherSpec) -> Result<Self> {
        spec.validate()?;
        Ok(ExternalMatcher {
            spec,
            d_max: DEFAULT_D_MAX,
        })
    }

    /// Declares the disparity range the wrapped tool searches.
    pub fn with_d_max(mut self, d_max: u32) -> Self {
        self.d_max = d_max;
        self
    }

    pub fn spec(&self) -> &ExternalMatcherSpec {
        &self.spec
    }

    fn command_line(&self, left: &Path, right: &Path, out: &Path) -> String {
        self.spec
            .command_template
            .replace("{left}", &shell_quote(left))
            .replace("{right}", &shell_quote(right))
            .replace("{out}", &shell_quote(out))
    }

    fn run_command(&self, cmdline: &str, cwd: &Path) -> Result<()> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmdline)
            .current_dir(cwd)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::ExternalExit {
                status: "spawn failure".into(),
                stderr: e.to_string(),
            })?;

        let stdout = drain(child.stdout.take().expect("stdout is piped"));
        let stderr = drain(child.stderr.take().expect("stderr is piped"));

        let deadline = Instant::now() + Duration::from_secs_f64(self.spec.timeout_secs);
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::ExternalTimeout(self.spec.timeout_secs));
                }
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(Error::io(cwd, e)),
            }
        };
        let out = stdout.join().unwrap_or_default();
        let err = stderr.join().unwrap_or_default();
        if status.success() {
            return Ok(());
        }
        // Prefer stderr; some tools only report on stdout.
        let diag = if err.iter().all(u8::is_ascii_whitespace) { out } else { err };
        let tail = &diag[diag.len().saturating_sub(MAX_DIAGNOSTIC_BYTES)..];
        Err(Error::ExternalExit {
            status: status.to_string(),
            stderr: String::from_utf8_lossy(tail).trim().to_string(),
        })
    }
}

impl StereoMatcher for ExternalMatcher {
    fn compute(&self, left: &RasterImage, right: &RasterImage) -> Result<DisparityMap> {
        check_pair(left, right)?;
        let scratch = tempfile::Builder::new()
            .prefix("dpsconf-")
            .tempdir_in(&self.spec.work_dir)
            .map_err(|e| Error::io(&self.spec.work_dir, e))?;
        let dir = scratch.path();
        let left_path = dir.join("left.png");
        let right_path = dir.join("right.png");
        let out_path = dir.join(format!("out.{}", self.spec.output_format.extension()));
        save_image(left, &left_path)?;
        save_image(right, &right_path)?;

        self.run_command(&self.command_line(&left_path, &right_path, &out_path), dir)?;

        if !out_path.exists() {
            return Err(Error::ExternalOutput(format!(
                "no output written to {}",
                out_path.display()
            )));
        }
        let disp = load_disparity(&out_path, self.spec.output_format)
            .map_err(|e| Error::ExternalOutput(e.to_string()))?;
        if disp.width() != left.width() || disp.height() != left.height() {
            return Err(Error::ExternalOutput(format!(
                "output is {}x{}, inputs are {}x{}",
                disp.width(),
                disp.height(),
                left.width(),
                left.height()
            )));
        }
        Ok(disp)
    }

    fn d_max(&self) -> u32 {
        self.d_max
    }
}
