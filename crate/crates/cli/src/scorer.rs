//! External sentence scorer: a line-oriented child process that reads one
//! sentence per line and answers with one polarity per line.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use anyhow::{Context, Result};
use textprobe_core::lexicon::SentenceScorer;
use textprobe_core::CoreError;

pub struct CommandScorer {
    io: Mutex<(ChildStdin, BufReader<ChildStdout>)>,
    _child: Child,
}

impl CommandScorer {
    pub fn spawn(command: &str) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .with_context(|| format!("spawning scorer {command:?}"))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(CommandScorer {
            io: Mutex::new((stdin, stdout)),
            _child: child,
        })
    }
}

impl SentenceScorer for CommandScorer {
    fn score(&self, sentence: &str) -> textprobe_core::Result<f64> {
        let mut io = self.io.lock().unwrap();
        // The protocol is one line per sentence.
        let clean = sentence.replace(['\n', '\r'], " ");
        writeln!(io.0, "{clean}").map_err(|e| CoreError::Scorer(e.to_string()))?;
        io.0.flush().map_err(|e| CoreError::Scorer(e.to_string()))?;
        let mut line = String::new();
        io.1.read_line(&mut line)
            .map_err(|e| CoreError::Scorer(e.to_string()))?;
        if line.is_empty() {
            return Err(CoreError::Scorer("scorer closed its output".into()));
        }
        line.trim()
            .parse::<f64>()
            .map_err(|e| CoreError::Scorer(format!("bad polarity {line:?}: {e}")))
    }
}
