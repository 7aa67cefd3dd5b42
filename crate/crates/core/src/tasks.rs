//! Auxiliary context-label tasks for multi-task tagging.
//!
//! Each token gets, besides its own label, targets describing the labels
//! around it:
//!
//! * binary tasks, one per (window, side, entity type): does any token in
//!   the window on that side carry the type?
//! * positional tasks, one per (window, side, offset): the exact label of
//!   the token at that offset, or [`OUT_OF_SENTENCE`].
//!
//! Head order is canonical: binary tasks by ascending window, then side
//! (left before right), then entity type; positional tasks by ascending
//! window, then side, then offset; the main task is last.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{EntityType, Iob2Label};

/// Positional-task class for an offset that falls outside the sentence.
pub const OUT_OF_SENTENCE: usize = Iob2Label::COUNT;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaskConfig {
    #[serde(default)]
    pub binary_windows: Vec<usize>,
    #[serde(default)]
    pub positional_windows: Vec<usize>,
}

impl TaskConfig {
    /// Only the main task.
    pub fn single_task() -> Self {
        Self::default()
    }

    /// Two binary windows of sizes 2 and 4, one positional window of size 1.
    pub fn reference() -> Self {
        TaskConfig { binary_windows: vec![2, 4], positional_windows: vec![1] }
    }

    pub fn new(binary_windows: Vec<usize>, positional_windows: Vec<usize>) -> Result<Self> {
        let config = TaskConfig { binary_windows, positional_windows };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.binary_windows.iter().chain(&self.positional_windows).any(|&w| w == 0) {
            return Err(Error::Config("window sizes must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of binary windows.
    pub fn p(&self) -> usize {
        self.binary_windows.len()
    }

    /// Number of positional windows.
    pub fn q(&self) -> usize {
        self.positional_windows.len()
    }

    pub fn is_single_task(&self) -> bool {
        self.binary_windows.is_empty() && self.positional_windows.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskDescriptor {
    Binary { window: usize, side: Side, entity_type: EntityType },
    Positional { window: usize, side: Side, offset: usize },
    Main,
}

impl TaskDescriptor {
    pub fn classes(&self) -> usize {
        match self {
            TaskDescriptor::Binary { .. } => 2,
            TaskDescriptor::Positional { .. } => Iob2Label::COUNT + 1,
            TaskDescriptor::Main => Iob2Label::COUNT,
        }
    }
}

/// `p·2·k + Σ 2·win_j + 1` for `p` binary windows over `k` entity types.
pub fn count_tasks(p: usize, k: usize, positional_windows: &[usize]) -> usize {
    p * 2 * k + positional_windows.iter().map(|w| 2 * w).sum::<usize>() + 1
}

pub fn task_count(config: &TaskConfig) -> usize {
    count_tasks(config.p(), EntityType::COUNT, &config.positional_windows)
}

fn sorted(windows: &[usize]) -> Vec<usize> {
    let mut w = windows.to_vec();
    w.sort_unstable();
    w
}

pub fn describe_tasks(config: &TaskConfig) -> Vec<TaskDescriptor> {
    let mut tasks = Vec::with_capacity(task_count(config));
    for window in sorted(&config.binary_windows) {
        for side in [Side::Left, Side::Right] {
            for entity_type in EntityType::ALL {
                tasks.push(TaskDescriptor::Binary { window, side, entity_type });
            }
        }
    }
    for window in sorted(&config.positional_windows) {
        for side in [Side::Left, Side::Right] {
            for offset in 1..=window {
                tasks.push(TaskDescriptor::Positional { window, side, offset });
            }
        }
    }
    tasks.push(TaskDescriptor::Main);
    tasks
}

/// Target class of every task at every token; `out[i][h]` is task `h` at token `i`.
pub fn make_task_labels(labels: &[Iob2Label], config: &TaskConfig) -> Vec<Vec<usize>> {
    let tasks = describe_tasks(config);
    let n = labels.len();
    // prefix[t][j]: tokens of type t among labels[..j]
    let mut prefix = vec![vec![0usize; n + 1]; EntityType::COUNT];
    for (j, label) in labels.iter().enumerate() {
        for (t, row) in prefix.iter_mut().enumerate() {
            row[j + 1] = row[j] + usize::from(label.entity_type().map(EntityType::index) == Some(t));
        }
    }
    (0..n)
        .map(|i| {
            tasks
                .iter()
                .map(|task| match *task {
                    TaskDescriptor::Binary { window, side, entity_type } => {
                        let (lo, hi) = match side {
                            Side::Left => (i.saturating_sub(window), i),
                            Side::Right => ((i + 1).min(n), (i + 1 + window).min(n)),
                        };
                        let row = &prefix[entity_type.index()];
                        usize::from(row[hi] > row[lo])
                    }
                    TaskDescriptor::Positional { side, offset, .. } => {
                        let pos = match side {
                            Side::Left => i.checked_sub(offset),
                            Side::Right => Some(i + offset).filter(|&j| j < n),
                        };
                        pos.map_or(OUT_OF_SENTENCE, |j| labels[j].index())
                    }
                    TaskDescriptor::Main => labels[i].index(),
                })
                .collect()
        })
        .collect()
}
