use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::RoundTranscript;

/// Who sent or receives a message. `All` is a public announcement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Tp,
    Alice,
    Bob,
    All,
}

impl From<super::Role> for Party {
    fn from(r: super::Role) -> Self {
        match r {
            super::Role::Alice => Party::Alice,
            super::Role::Bob => Party::Bob,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    RoundStart,
    Qubit,
    I1,
    Ack,
    I2,
    Mr,
    M,
    Bell,
    RA,
    RB,
    Result,
    Abort,
}

/// One transcript line. Field order is part of the log format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub seq: u64,
    pub from: Party,
    pub to: Party,
    pub kind: MessageKind,
    pub payload: Value,
}

/// Writes rounds as JSON lines, numbering messages consecutively across rounds.
pub fn write_jsonl<W: Write>(mut out: W, rounds: &[RoundTranscript]) -> io::Result<()> {
    let mut seq = 0u64;
    for round in rounds {
        for msg in &round.messages {
            let line = Message { seq, ..msg.clone() };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
            seq += 1;
        }
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> io::Result<Vec<Message>> {
    let mut messages = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        messages.push(serde_json::from_str(&line)?);
    }
    Ok(messages)
}
