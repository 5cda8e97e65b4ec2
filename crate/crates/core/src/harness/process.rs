//! Subprocess execution with captured streams and a hard timeout.

use std::io::Read;
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub struct ProcessOutput {
    /// `None` when the process was killed (timeout) or died on a signal.
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
    pub duration_ms: u64,
    pub timed_out: bool,
}

/// How long to keep draining streams after the process itself has exited.
/// A grandchild that inherited the pipes can hold them open indefinitely;
/// after this grace period we take whatever was captured so far.
const DRAIN_GRACE: Duration = Duration::from_secs(2);

/// Run the command to completion, killing it once `timeout` elapses.
/// Streams are drained on reader threads so a chatty child cannot dead-lock
/// on a full pipe.
pub fn run_with_timeout(
    command: &mut Command,
    timeout: Option<Duration>,
) -> std::io::Result<ProcessOutput> {
    command.stdin(Stdio::null());
    command.stdout(Stdio::piped());
    command.stderr(Stdio::piped());

    let started = Instant::now();
    let mut child = command.spawn()?;
    let stdout_drain = Drain::start(child.stdout.take());
    let stderr_drain = Drain::start(child.stderr.take());

    let mut timed_out = false;
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if let Some(limit) = timeout {
            if started.elapsed() >= limit {
                timed_out = true;
                kill_and_reap(&mut child)?;
                break child.wait()?;
            }
        }
        std::thread::sleep(Duration::from_millis(10));
    };

    let grace = if timed_out {
        Duration::from_millis(200)
    } else {
        DRAIN_GRACE
    };
    let stdout = stdout_drain.finish(grace);
    let stderr = stderr_drain.finish(grace);
    Ok(ProcessOutput {
        exit_code: if timed_out { None } else { status.code() },
        stdout: String::from_utf8_lossy(&stdout).into_owned(),
        stderr: String::from_utf8_lossy(&stderr).into_owned(),
        duration_ms: started.elapsed().as_millis() as u64,
        timed_out,
    })
}

/// Background reader that accumulates a stream into a shared buffer, so the
/// captured prefix is available even if the pipe never reaches EOF.
struct Drain {
    buffer: Arc<Mutex<Vec<u8>>>,
    done: Receiver<()>,
}

impl Drain {
    fn start<R: Read + Send + 'static>(stream: Option<R>) -> Self {
        let buffer = Arc::new(Mutex::new(Vec::new()));
        let (tx, done) = channel();
        let writer = Arc::clone(&buffer);
        std::thread::spawn(move || {
            if let Some(mut stream) = stream {
                let mut chunk = [0u8; 8192];
                loop {
                    match stream.read(&mut chunk) {
                        Ok(0) | Err(_) => break,
                        Ok(n) => writer.lock().unwrap().extend_from_slice(&chunk[..n]),
                    }
                }
            }
            let _ = tx.send(());
        });
        Self { buffer, done }
    }

    fn finish(self, grace: Duration) -> Vec<u8> {
        match self.done.recv_timeout(grace) {
            Ok(()) | Err(RecvTimeoutError::Disconnected) => {}
            Err(RecvTimeoutError::Timeout) => {
                log::debug!("stream still open after process exit; taking partial capture");
            }
        }
        let buffer = self.buffer.lock().unwrap();
        buffer.clone()
    }
}

fn kill_and_reap(child: &mut Child) -> std::io::Result<()> {
    match child.kill() {
        Ok(()) => Ok(()),
        // already exited between try_wait and kill
        Err(e) if e.kind() == std::io::ErrorKind::InvalidInput => Ok(()),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_exit_code_and_streams() {
        let mut cmd = Command::new("sh");
        cmd.args(["-c", "echo out; echo err >&2; exit 3"]);
        let out = run_with_timeout(&mut cmd, None).unwrap();
        assert_eq!(out.exit_code, Some(3));
        assert_eq!(out.stdout.trim(), "out");
        assert_eq!(out.stderr.trim(), "err");
        assert!(!out.timed_out);
    }

    #[test]
    fn kills_at_timeout() {
        let mut cmd = Command::new("sh");
        cmd.args(["-c", "sleep 30"]);
        let started = Instant::now();
        let out = run_with_timeout(&mut cmd, Some(Duration::from_millis(200))).unwrap();
        assert!(out.timed_out);
        assert_eq!(out.exit_code, None);
        assert!(started.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn partial_output_survives_an_orphaned_pipe_holder() {
        // the child prints, then backgrounds a grandchild that keeps the
        // pipe open long after the child exits
        let mut cmd = Command::new("sh");
        cmd.args(["-c", "echo first; sleep 30 & exit 0"]);
        let started = Instant::now();
        let out = run_with_timeout(&mut cmd, None).unwrap();
        assert_eq!(out.exit_code, Some(0));
        assert_eq!(out.stdout.trim(), "first");
        assert!(started.elapsed() < Duration::from_secs(10));
    }
}
