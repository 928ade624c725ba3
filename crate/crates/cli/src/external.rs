//! Team controller backed by a child process speaking JSON lines.
//!
//! Each step the simulator writes one line
//! `{"t": <step>, "observations": [<bundle>, ...]}` to the child's stdin,
//! agents ordered workers first, then stations, and reads back one line
//! holding a JSON array of `[u_v, u_omega]` pairs in the same order.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use ws_sim_core::observation::observe_all;
use ws_sim_core::planners::{Controller, Snapshot};
use ws_sim_core::{Action, Error, Result};

pub struct ExternalPolicy {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    line: String,
}

impl ExternalPolicy {
    /// Runs `command` through the platform shell.
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = shell(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            child,
            stdin,
            stdout,
            line: String::new(),
        })
    }
}

#[cfg(unix)]
fn shell(command: &str) -> Command {
    let mut c = Command::new("sh");
    c.arg("-c").arg(command);
    c
}

#[cfg(not(unix))]
fn shell(command: &str) -> Command {
    let mut c = Command::new("cmd");
    c.arg("/C").arg(command);
    c
}

impl Controller for ExternalPolicy {
    fn actions(&mut self, snap: &Snapshot<'_>) -> Result<Vec<Action>> {
        let observations = observe_all(snap.scenario, snap.state, snap.coverage);
        let request = serde_json::json!({ "t": snap.state.t, "observations": observations });
        serde_json::to_writer(&mut self.stdin, &request)?;
        self.stdin.write_all(b"\n")?;
        self.stdin.flush()?;
        self.line.clear();
        if self.stdout.read_line(&mut self.line)? == 0 {
            return Err(Error::InvalidScenario(
                "external policy closed its output".into(),
            ));
        }
        let actions: Vec<Action> = serde_json::from_str(self.line.trim())?;
        Ok(actions)
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        // The child may already have exited; nothing useful to report.
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
