use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RespiratoryCycle;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    WheezeBinary,
    CrackleBinary,
    FourClass,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::WheezeBinary, Task::CrackleBinary, Task::FourClass];

    pub fn n_classes(self) -> usize {
        match self {
            Task::FourClass => 4,
            _ => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Task::WheezeBinary => "wheeze-binary",
            Task::CrackleBinary => "crackle-binary",
            Task::FourClass => "four-class",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown task {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Label {
    pub task: Task,
    pub value: usize,
}

/// Four-class indices: 0 normal, 1 crackle, 2 wheeze, 3 both.
pub fn assign_label(crackle: bool, wheeze: bool, task: Task) -> Label {
    let value = match task {
        Task::WheezeBinary => wheeze as usize,
        Task::CrackleBinary => crackle as usize,
        Task::FourClass => crackle as usize + 2 * wheeze as usize,
    };
    Label { task, value }
}

impl RespiratoryCycle {
    pub fn label(&self, task: Task) -> Label {
        assign_label(self.crackle, self.wheeze, task)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ClassHistogram {
    pub normal: usize,
    pub crackle: usize,
    pub wheeze: usize,
    pub both: usize,
    pub total: usize,
}

impl ClassHistogram {
    pub fn add(&mut self, crackle: bool, wheeze: bool) {
        match assign_label(crackle, wheeze, Task::FourClass).value {
            0 => self.normal += 1,
            1 => self.crackle += 1,
            2 => self.wheeze += 1,
            _ => self.both += 1,
        }
        self.total += 1;
    }

    pub fn from_flags(flags: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut h = Self::default();
        for (c, w) in flags {
            h.add(c, w);
        }
        h
    }
}

impl fmt::Display for ClassHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "class\tcycles")?;
        writeln!(f, "normal\t{}", self.normal)?;
        writeln!(f, "crackle\t{}", self.crackle)?;
        writeln!(f, "wheeze\t{}", self.wheeze)?;
        writeln!(f, "crackle+wheeze\t{}", self.both)?;
        write!(f, "total\t{}", self.total)
    }
}

pub fn class_histogram<'a>(cycles: impl IntoIterator<Item = &'a RespiratoryCycle>) -> ClassHistogram {
    ClassHistogram::from_flags(cycles.into_iter().map(|c| (c.crackle, c.wheeze)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taxonomy() {
        assert_eq!(assign_label(true, true, Task::FourClass).value, 3);
        for t in Task::ALL {
            assert_eq!(assign_label(false, false, t).value, 0);
        }
        assert_eq!(assign_label(true, false, Task::WheezeBinary).value, 0);
        assert_eq!(assign_label(true, false, Task::FourClass).value, 1);
        assert_eq!(assign_label(false, true, Task::FourClass).value, 2);
    }

    #[test]
    fn binary_labels_recoverable_from_four_class() {
        for c in [false, true] {
            for w in [false, true] {
                let four = assign_label(c, w, Task::FourClass).value;
                assert_eq!(assign_label(c, w, Task::WheezeBinary).value, (four == 2 || four == 3) as usize);
                assert_eq!(assign_label(c, w, Task::CrackleBinary).value, (four == 1 || four == 3) as usize);
            }
        }
    }

    #[test]
    fn histogram_counts() {
        assert_eq!(ClassHistogram::from_flags([]), ClassHistogram::default());
        let h = ClassHistogram::from_flags([(false, false), (true, false), (false, true)]);
        assert_eq!((h.normal, h.crackle, h.wheeze, h.both, h.total), (1, 1, 1, 0, 3));
    }

    #[test]
    fn task_names_round_trip() {
        for t in Task::ALL {
            assert_eq!(t.name().parse::<Task>().unwrap(), t);
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{}\"", t.name()));
        }
        assert!("three-class".parse::<Task>().is_err());
    }
}
